//! Block-diagonal cost `C = Σ_{μ∈H} c_μ²(α) ⟨ψ_μ|O_μ|ψ_μ⟩` over a spectrum of
//! `(d, mult)` blocks, and the SU(2) spectrum of `N` qubits.

use std::f64::consts::FRAC_PI_2;
use std::f64::consts::FRAC_PI_4;

use num_bigint::BigUint;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::coefficient::tree_probabilities;
use crate::error::{Error, Result};
use crate::gradients::{GradStats, Objective};
use crate::haar::haar_columns;
use crate::model::{Architecture, LcqnnModel};
use crate::observable::Observable;
use crate::rng::{uniform_angles, RngStream};
use crate::C64;

/// Largest retained block dimension `d · mult`.
pub const MAX_BLOCK_DIM: usize = 1 << 12;

fn as_decimal<S: Serializer>(v: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SpectrumBlock {
    pub d: u64,
    #[serde(serialize_with = "as_decimal")]
    pub mult: BigUint,
}

impl SpectrumBlock {
    pub fn dim(&self) -> BigUint {
        BigUint::from(self.d) * &self.mult
    }
}

/// Blocks with a retained subset `H`; the number of combined blocks is `|H|`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockSpectrum {
    pub blocks: Vec<SpectrumBlock>,
    pub selected: Vec<usize>,
}

impl BlockSpectrum {
    pub fn new(blocks: Vec<SpectrumBlock>, selected: Vec<usize>) -> Result<Self> {
        if let Some(b) = blocks.iter().find(|b| b.d == 0 || b.mult == BigUint::ZERO) {
            return Err(Error::Argument(format!("block ({}, {}) must have d, mult >= 1", b.d, b.mult)));
        }
        if selected.is_empty() {
            return Err(Error::Argument("empty block selection".into()));
        }
        let mut seen = vec![false; blocks.len()];
        for &i in &selected {
            if i >= blocks.len() || seen[i] {
                return Err(Error::Argument(format!("bad block selection index {i}")));
            }
            seen[i] = true;
        }
        Ok(Self { blocks, selected })
    }

    /// All blocks retained.
    pub fn from_dims(dims: &[(u64, u64)]) -> Result<Self> {
        let blocks = dims
            .iter()
            .map(|&(d, mult)| SpectrumBlock {
                d,
                mult: mult.into(),
            })
            .collect();
        Self::new(blocks, (0..dims.len()).collect())
    }

    /// Parses `d:mult` pairs such as `16:1,16:1`.
    pub fn parse_dims(s: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("cannot parse block list '{s}' (expected d:mult,...)"));
        let dims = s
            .split(',')
            .filter(|p| !p.trim().is_empty())
            .map(|p| {
                let (d, m) = p.trim().split_once(':').ok_or_else(bad)?;
                Ok((d.parse().map_err(|_| bad())?, m.parse().map_err(|_| bad())?))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_dims(&dims)
    }

    pub fn select(&self, selected: Vec<usize>) -> Result<Self> {
        Self::new(self.blocks.clone(), selected)
    }

    pub fn num_combined(&self) -> usize {
        self.selected.len()
    }

    pub fn retained(&self) -> impl Iterator<Item = &SpectrumBlock> {
        self.selected.iter().map(|&i| &self.blocks[i])
    }

    pub fn d_max(&self) -> BigUint {
        self.retained().map(|b| b.dim()).max().unwrap_or_default()
    }

    pub fn total_dim(&self) -> BigUint {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    /// Retained `d · mult` as machine integers, bounded by [`MAX_BLOCK_DIM`].
    pub fn retained_dims(&self) -> Result<Vec<usize>> {
        self.retained()
            .map(|b| {
                let dim = b.dim();
                match usize::try_from(&dim) {
                    Ok(v) if v <= MAX_BLOCK_DIM => Ok(v),
                    _ => Err(Error::OversizeBlock {
                        dim: dim.to_string(),
                        limit: MAX_BLOCK_DIM,
                    }),
                }
            })
            .collect()
    }
}

fn factorial(n: u64) -> BigUint {
    (1..=n).map(BigUint::from).product()
}

/// SU(2) blocks of `N` qubits for `j = 0..=⌊N/2⌋`:
/// `d = N − 2j + 1`, `mult = N!(N−2j+1)! / ((N−j+1)! j! (N−2j)!)`. All retained.
pub fn su2_block_dims(n: u64) -> Result<BlockSpectrum> {
    if !(1..=64).contains(&n) {
        return Err(Error::Argument(format!("SU(2) spectrum supports 1 <= N <= 64, got {n}")));
    }
    let blocks: Vec<SpectrumBlock> = (0..=n / 2)
        .map(|j| {
            let d = n - 2 * j + 1;
            let num = factorial(n) * factorial(d);
            let den = factorial(n - j + 1) * factorial(j) * factorial(n - 2 * j);
            SpectrumBlock { d, mult: num / den }
        })
        .collect();
    let selected = (0..blocks.len()).collect();
    BlockSpectrum::new(blocks, selected)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupMode {
    /// Haar unitary on the qubit register padded to `2^⌈log2(d·mult)⌉`.
    Haar,
    /// Haar unitary on exactly `d · mult` dimensions.
    Exact,
    /// The U3 + CNOT-ring ansatz on the padded register.
    Ansatz,
}

impl std::str::FromStr for GroupMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "haar" => Ok(GroupMode::Haar),
            "exact" => Ok(GroupMode::Exact),
            "ansatz" => Ok(GroupMode::Ansatz),
            other => Err(Error::Argument(format!("unknown group mode '{other}'"))),
        }
    }
}

impl std::fmt::Display for GroupMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GroupMode::Haar => "haar",
            GroupMode::Exact => "exact",
            GroupMode::Ansatz => "ansatz",
        })
    }
}

#[derive(Debug, Clone)]
pub struct GroupOptions {
    pub mode: GroupMode,
    /// Ansatz depth; ignored by the Haar modes.
    pub depth: usize,
    pub samples: usize,
    pub root_seed: u64,
}

impl Default for GroupOptions {
    fn default() -> Self {
        Self {
            mode: GroupMode::Haar,
            depth: 8,
            samples: 500,
            root_seed: 42,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GroupVariance {
    /// `|H|`.
    #[serde(rename = "L")]
    pub l: usize,
    pub d_max: usize,
    /// Position (within the retained list) of the block holding the θ probe.
    pub probe_block: usize,
    pub theta: GradStats,
    /// Random tree node per sample; absent when `|H| = 1`.
    pub alpha: Option<GradStats>,
}

/// Traceless diagonal: `+1` on the first `⌊dim/2⌋` entries, `−1` on the
/// next `⌊dim/2⌋`, zero on the remainder of a `reg`-long register.
fn block_observable(dim: usize, reg: usize) -> Vec<f64> {
    let half = dim / 2;
    (0..reg)
        .map(|i| {
            if i < half {
                1.0
            } else if i < 2 * half {
                -1.0
            } else {
                0.0
            }
        })
        .collect()
}

enum BlockRealisation {
    /// `(a, b)`: the two Haar columns reached from the U3-rotated input.
    Columns(Vec<C64>, Vec<C64>),
    Circuit(Box<Objective>),
    Trivial,
}

struct Block {
    diag: Vec<f64>,
    params: Vec<f64>,
    real: BlockRealisation,
}

impl Block {
    fn expectation(&self, params: &[f64]) -> Result<f64> {
        match &self.real {
            BlockRealisation::Trivial => Ok(0.0),
            BlockRealisation::Columns(a, b) => {
                // U3 first column: cos(ϑ/2)|0⟩ + e^{iφ} sin(ϑ/2)|1⟩
                let (s, c) = (params[0] / 2.0).sin_cos();
                let phase = C64::from_polar(s, params[1]);
                Ok(a.iter()
                    .zip(b)
                    .zip(&self.diag)
                    .map(|((x, y), o)| o * (x * c + y * phase).norm_sqr())
                    .sum())
            }
            BlockRealisation::Circuit(obj) => obj.cost(params),
        }
    }

    fn theta_derivative(&self) -> Result<f64> {
        let mut p = self.params.clone();
        p[0] += FRAC_PI_2;
        let plus = self.expectation(&p)?;
        p[0] -= 2.0 * FRAC_PI_2;
        Ok(0.5 * (plus - self.expectation(&p)?))
    }
}

fn register_size(dim: usize, mode: GroupMode) -> usize {
    match mode {
        GroupMode::Exact => dim,
        GroupMode::Haar | GroupMode::Ansatz => dim.next_power_of_two(),
    }
}

fn ansatz_model(qubits: usize, depth: usize) -> Result<LcqnnModel> {
    LcqnnModel::new(Architecture::new(0, qubits, 1, qubits, depth))
}

fn draw_block<R: Rng + ?Sized>(dim: usize, opts: &GroupOptions, rng: &mut R) -> Result<Block> {
    let reg = register_size(dim, opts.mode);
    let diag = block_observable(dim, reg);
    if reg < 2 {
        return Ok(Block {
            diag,
            params: vec![0.0; 3],
            real: BlockRealisation::Trivial,
        });
    }
    match opts.mode {
        GroupMode::Haar | GroupMode::Exact => {
            let params = uniform_angles(rng, 3);
            let mut cols = haar_columns(reg, 2, rng);
            let b = cols.pop().expect("two columns");
            let a = cols.pop().expect("two columns");
            Ok(Block {
                diag,
                params,
                real: BlockRealisation::Columns(a, b),
            })
        }
        GroupMode::Ansatz => {
            let qubits = reg.trailing_zeros() as usize;
            let model = ansatz_model(qubits, opts.depth)?;
            let params = uniform_angles(rng, model.theta_layout_size());
            let obs = Observable::block_diagonal(
                diag.iter()
                    .map(|&o| nalgebra::DMatrix::from_element(1, 1, C64::new(o, 0.0)))
                    .collect(),
            )?;
            let obj = Objective::new(&model, &obs, None, None)?;
            Ok(Block {
                diag,
                params,
                real: BlockRealisation::Circuit(Box::new(obj)),
            })
        }
    }
}

/// Gradient statistics of the block-diagonal cost.
///
/// Block `μ` prepares `|ψ_μ⟩ = U_μ|0⟩` where, in the Haar modes, `U_μ` is a
/// U3 rotation on the first register qubit followed by a Haar unitary, and in
/// ansatz mode it is the depth-`D` U3 + CNOT-ring circuit. The weights
/// `c_μ²` are the first `|H|` leaves of a coefficient tree with
/// `⌈log2 |H|⌉` levels; leaves past `|H|` carry no block. Per sample the
/// stream draws the tree angles, then each block's angles and unitary in
/// selection order, then the α node to differentiate. The θ probe is the
/// first angle of the first largest block.
pub fn group_block_variance(spectrum: &BlockSpectrum, opts: &GroupOptions) -> Result<GroupVariance> {
    if opts.samples < 2 {
        return Err(Error::Argument(format!("need at least 2 samples, got {}", opts.samples)));
    }
    let dims = spectrum.retained_dims()?;
    let l = dims.len();
    let d_max = *dims.iter().max().expect("non-empty selection");
    let probe_block = dims.iter().position(|&d| d == d_max).expect("max exists");
    if opts.mode == GroupMode::Ansatz {
        // surface depth/size errors before sampling
        ansatz_model(dims[probe_block].next_power_of_two().trailing_zeros().max(1) as usize, opts.depth)?;
    }
    let depth = l.next_power_of_two().trailing_zeros() as usize;
    let nodes = (1usize << depth) - 1;

    let sample = |s: u64| -> Result<(f64, Option<f64>)> {
        let mut rng = RngStream::new(opts.root_seed, s).rng();
        let alpha = uniform_angles(&mut rng, nodes);
        let blocks = dims
            .iter()
            .map(|&d| draw_block(d, opts, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let node = (nodes > 0).then(|| rng.random_range(0..nodes));

        let weights = tree_probabilities(depth, &alpha);
        let theta_grad = weights[probe_block] * blocks[probe_block].theta_derivative()?;
        let alpha_grad = match node {
            None => None,
            Some(node) => {
                let values = blocks
                    .iter()
                    .map(|b| b.expectation(&b.params))
                    .collect::<Result<Vec<_>>>()?;
                let mut shifted = alpha.clone();
                shifted[node] += FRAC_PI_4;
                let plus = tree_probabilities(depth, &shifted);
                shifted[node] -= 2.0 * FRAC_PI_4;
                let minus = tree_probabilities(depth, &shifted);
                Some(values.iter().enumerate().map(|(i, e)| (plus[i] - minus[i]) * e).sum())
            }
        };
        Ok((theta_grad, alpha_grad))
    };

    let grads = (0..opts.samples as u64)
        .into_par_iter()
        .map(sample)
        .collect::<Result<Vec<_>>>()?;
    let mut theta = GradStats::new();
    let mut alpha = (nodes > 0).then(GradStats::new);
    for (t, a) in grads {
        theta.push(t);
        if let (Some(stats), Some(a)) = (alpha.as_mut(), a) {
            stats.push(a);
        }
    }
    Ok(GroupVariance {
        l,
        d_max,
        probe_block,
        theta,
        alpha,
    })
}
