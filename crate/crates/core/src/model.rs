//! LCQNN architecture: coefficient tree on `m` control qubits followed by `L`
//! control-value-selected products of k-local blocks on `n` working qubits.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::coefficient::{check_branch_count, tree_gates, CoefficientLayer};
use crate::error::{Error, Result};
use crate::gate::{Control, GateOp};
use crate::haar::{BlockUnitary, HaarReflectors};
use crate::observable::Observable;
use crate::state::{check_capacity, StateVector};

/// Serialisable architecture record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub l: usize,
    pub k: usize,
    #[serde(rename = "D")]
    pub depth: usize,
    /// Explicit working-register partition; contiguous groups of `k` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<Vec<Vec<usize>>>,
}

impl Architecture {
    pub fn new(m: usize, n: usize, l: usize, k: usize, depth: usize) -> Self {
        Self {
            m,
            n,
            l,
            k,
            depth,
            groups: None,
        }
    }
}

/// How each k-local block is realised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BlockKind {
    /// `D` layers of U3 on every group qubit followed by a CNOT ring.
    #[default]
    Ansatz,
    /// One U3 layer followed by a Haar-random unitary on the group, drawn per
    /// realisation (see [`LcqnnModel::sample_haar_blocks`]).
    Haar,
}

impl fmt::Display for BlockKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BlockKind::Ansatz => "ansatz",
            BlockKind::Haar => "haar",
        })
    }
}

impl std::str::FromStr for BlockKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ansatz" => Ok(BlockKind::Ansatz),
            "haar" => Ok(BlockKind::Haar),
            other => Err(Error::Argument(format!("unknown block kind '{other}'"))),
        }
    }
}

/// A trainable parameter: a coefficient-tree node or a flat θ slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamId {
    Alpha(usize),
    Theta(usize),
}

impl fmt::Display for ParamId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamId::Alpha(i) => write!(f, "alpha:{i}"),
            ParamId::Theta(i) => write!(f, "theta:{i}"),
        }
    }
}

impl std::str::FromStr for ParamId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParam(s.to_string());
        let (kind, idx) = s.split_once(':').ok_or_else(bad)?;
        let idx = idx.parse::<usize>().map_err(|_| bad())?;
        match kind {
            "alpha" => Ok(ParamId::Alpha(idx)),
            "theta" => Ok(ParamId::Theta(idx)),
            _ => Err(bad()),
        }
    }
}

/// Haar unitaries for every `(branch, group)` pair, branch-major.
#[derive(Debug, Clone)]
pub struct HaarBlocks(pub Vec<Arc<BlockUnitary>>);

#[derive(Debug, Clone)]
pub struct LcqnnModel {
    arch: Architecture,
    kind: BlockKind,
    groups: Vec<Vec<usize>>,
    group_offsets: Vec<usize>,
    per_branch: usize,
}

impl LcqnnModel {
    pub fn new(arch: Architecture) -> Result<Self> {
        Self::with_kind(arch, BlockKind::Ansatz)
    }

    pub fn with_kind(arch: Architecture, kind: BlockKind) -> Result<Self> {
        check_branch_count(arch.m, arch.l)?;
        if arch.n == 0 {
            return Err(Error::Architecture("working register needs n >= 1".into()));
        }
        if arch.k == 0 {
            return Err(Error::Architecture("locality k must be >= 1".into()));
        }
        check_capacity(arch.m + arch.n)?;
        let groups = match &arch.groups {
            Some(g) => validate_partition(g, arch.n)?,
            None => contiguous_groups(arch.n, arch.k),
        };
        let layers = match kind {
            BlockKind::Ansatz => arch.depth,
            BlockKind::Haar => 1,
        };
        let mut group_offsets = Vec::with_capacity(groups.len());
        let mut per_branch = 0;
        for g in &groups {
            group_offsets.push(per_branch);
            per_branch += 3 * g.len() * layers;
        }
        Ok(Self {
            arch,
            kind,
            groups,
            group_offsets,
            per_branch,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn kind(&self) -> BlockKind {
        self.kind
    }

    pub fn m(&self) -> usize {
        self.arch.m
    }

    pub fn n(&self) -> usize {
        self.arch.n
    }

    pub fn branches(&self) -> usize {
        self.arch.l
    }

    pub fn depth(&self) -> usize {
        self.arch.depth
    }

    pub fn num_qubits(&self) -> usize {
        self.arch.m + self.arch.n
    }

    /// Working-register groups (indices relative to the working register).
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    fn layers(&self) -> usize {
        match self.kind {
            BlockKind::Ansatz => self.arch.depth,
            BlockKind::Haar => 1,
        }
    }

    pub fn alpha_len(&self) -> usize {
        self.arch.l - 1
    }

    /// Length of the flat θ vector: `L · Σ_groups 3·|group|·D`.
    pub fn theta_layout_size(&self) -> usize {
        self.arch.l * self.per_branch
    }

    pub fn num_params(&self) -> usize {
        self.alpha_len() + self.theta_layout_size()
    }

    /// Flat θ index of angle `angle` (0 = ϑ, 1 = φ, 2 = λ) of the U3 on the
    /// `qubit`-th member of `group` in `layer` of `branch`.
    pub fn theta_index(
        &self,
        branch: usize,
        group: usize,
        layer: usize,
        qubit: usize,
        angle: usize,
    ) -> Result<usize> {
        let size = self.groups.get(group).map(|g| g.len()).unwrap_or(0);
        if branch >= self.arch.l || size == 0 || layer >= self.layers() || qubit >= size || angle >= 3 {
            return Err(Error::InvalidParam(format!(
                "theta(branch {branch}, group {group}, layer {layer}, qubit {qubit}, angle {angle})"
            )));
        }
        Ok(branch * self.per_branch + self.group_offsets[group] + (layer * size + qubit) * 3 + angle)
    }

    /// Branch owning a flat θ index.
    pub fn theta_branch(&self, theta: usize) -> Option<usize> {
        (theta < self.theta_layout_size()).then(|| theta / self.per_branch.max(1))
    }

    /// Position of a parameter in the packed `[α; θ]` vector.
    pub fn param_index(&self, id: ParamId) -> Result<usize> {
        match id {
            ParamId::Alpha(i) if i < self.alpha_len() => Ok(i),
            ParamId::Theta(i) if i < self.theta_layout_size() => Ok(self.alpha_len() + i),
            _ => Err(Error::InvalidParam(format!(
                "{id} (model has {} alpha and {} theta parameters)",
                self.alpha_len(),
                self.theta_layout_size()
            ))),
        }
    }

    pub fn pack(&self, alpha: &[f64], theta: &[f64]) -> Result<Vec<f64>> {
        if alpha.len() != self.alpha_len() {
            return Err(Error::ParameterLength {
                what: "alpha",
                expected: self.alpha_len(),
                found: alpha.len(),
            });
        }
        if theta.len() != self.theta_layout_size() {
            return Err(Error::ParameterLength {
                what: "theta",
                expected: self.theta_layout_size(),
                found: theta.len(),
            });
        }
        Ok(alpha.iter().chain(theta).copied().collect())
    }

    pub fn coefficient_layer(&self, alpha: &[f64]) -> Result<CoefficientLayer> {
        CoefficientLayer::new(self.arch.m, self.arch.l, alpha.to_vec())
    }

    /// Draws one Haar unitary per `(branch, group)`.
    pub fn sample_haar_blocks<R: Rng + ?Sized>(&self, rng: &mut R) -> HaarBlocks {
        let mut out = Vec::with_capacity(self.arch.l * self.groups.len());
        for _ in 0..self.arch.l {
            for g in &self.groups {
                out.push(Arc::new(BlockUnitary::Haar(HaarReflectors::sample(1 << g.len(), rng))));
            }
        }
        HaarBlocks(out)
    }

    /// Compiles `W = Π_j C-U_j · (V ⊗ I)` over the packed parameter vector.
    pub fn circuit(&self, haar: Option<&HaarBlocks>) -> Result<Circuit> {
        let m = self.arch.m;
        let alpha_len = self.alpha_len();
        let mut c = Circuit::new(self.num_qubits(), self.num_params())?;
        let depth = self.arch.l.trailing_zeros() as usize;
        for (g, ctrl) in tree_gates(m, depth, 0) {
            c.push(g, ctrl)?;
        }
        let haar = match (self.kind, haar) {
            (BlockKind::Haar, Some(h)) => {
                if h.0.len() != self.arch.l * self.groups.len() {
                    return Err(Error::DimensionMismatch {
                        expected: self.arch.l * self.groups.len(),
                        found: h.0.len(),
                    });
                }
                Some(h)
            }
            (BlockKind::Haar, None) => {
                return Err(Error::Argument("Haar blocks required for a Haar-kind model".into()))
            }
            (BlockKind::Ansatz, _) => None,
        };
        let controls: Vec<usize> = (0..m).collect();
        for branch in 0..self.arch.l {
            let control = (m > 0).then(|| Control::new(controls.clone(), branch));
            for (gi, group) in self.groups.iter().enumerate() {
                let qubits: Vec<usize> = group.iter().map(|q| m + q).collect();
                for layer in 0..self.layers() {
                    for (qi, &q) in qubits.iter().enumerate() {
                        let base = alpha_len + self.theta_index(branch, gi, layer, qi, 0)?;
                        c.push(GateOp::u3(q, [base, base + 1, base + 2]), control.clone())?;
                    }
                    if self.kind == BlockKind::Ansatz && qubits.len() > 1 {
                        for w in 0..qubits.len() {
                            let cnot = GateOp::Cnot {
                                control: qubits[w],
                                target: qubits[(w + 1) % qubits.len()],
                            };
                            c.push(cnot, control.clone())?;
                        }
                    }
                }
                if let Some(h) = haar {
                    let unitary = h.0[branch * self.groups.len() + gi].clone();
                    c.push(
                        GateOp::Unitary {
                            targets: qubits.clone(),
                            unitary,
                        },
                        control.clone(),
                    )?;
                }
            }
        }
        Ok(c)
    }

    /// `|0⟩^{⊗m} ⊗ |input⟩`, with `|0⟩^{⊗n}` when no input is given.
    pub fn initial_state(&self, input: Option<&StateVector>) -> Result<StateVector> {
        match input {
            None => StateVector::zero(self.num_qubits()),
            Some(s) if s.num_qubits() == self.arch.n => StateVector::zero(self.arch.m)?.tensor(s),
            Some(s) => Err(Error::DimensionMismatch {
                expected: self.arch.n,
                found: s.num_qubits(),
            }),
        }
    }

    /// `⊕_j √p_j(α) U_j(θ_j)|input⟩` on `m + n` qubits.
    pub fn forward(&self, alpha: &[f64], theta: &[f64], input: Option<&StateVector>) -> Result<StateVector> {
        let params = self.pack(alpha, theta)?;
        self.circuit(None)?.run(&params, &self.initial_state(input)?)
    }

    /// `Σ_j p_j(α) ⟨in|U_j† O U_j|in⟩` with `O` on the working register.
    pub fn cost(
        &self,
        alpha: &[f64],
        theta: &[f64],
        obs: &Observable,
        input: Option<&StateVector>,
    ) -> Result<f64> {
        obs.validate_for(self.arch.n)?;
        obs.expectation_on(&self.forward(alpha, theta, input)?, self.arch.m)
    }
}

fn contiguous_groups(n: usize, k: usize) -> Vec<Vec<usize>> {
    let k = k.min(n);
    (0..n).collect::<Vec<_>>().chunks(k).map(|c| c.to_vec()).collect()
}

fn validate_partition(groups: &[Vec<usize>], n: usize) -> Result<Vec<Vec<usize>>> {
    let mut seen = vec![false; n];
    for g in groups {
        if g.is_empty() {
            return Err(Error::Architecture("empty group in partition".into()));
        }
        for &q in g {
            if q >= n || seen[q] {
                return Err(Error::Architecture(format!(
                    "group partition must cover qubits 0..{n} exactly once (bad qubit {q})"
                )));
            }
            seen[q] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Architecture("group partition does not cover the working register".into()));
    }
    Ok(groups.to_vec())
}
