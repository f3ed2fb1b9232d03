//! Cost gradients and Monte-Carlo gradient statistics.
//!
//! Shift table used by [`param_shift_grad`]:
//!
//! | parameter          | gate angle | shift in parameter | prefactor |
//! |--------------------|------------|--------------------|-----------|
//! | θ (U3 ϑ, φ or λ)   | θ          | ±π/2               | 1/2       |
//! | α (tree node)      | 2α         | ±π/4               | 1         |
//!
//! U3(ϑ,φ,λ) equals RZ(φ)·RY(ϑ)·RZ(λ) up to a global phase, so each Euler
//! angle has a Pauli/2 generator. For α the cost is a sum of products of
//! `cos²α`/`sin²α`, i.e. a first-order trigonometric polynomial in `2α`,
//! so the two-point rule is exact even though the tree rotations are
//! controlled.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::model::{BlockKind, HaarBlocks, LcqnnModel, ParamId};
use crate::observable::Observable;
use crate::rng::{uniform_angles, RngStream};
use crate::state::StateVector;

/// Streaming mean / variance accumulator (Welford, with Chan's merge).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GradStats {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl GradStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(xs: &[f64]) -> Self {
        let mut s = Self::new();
        xs.iter().for_each(|&x| s.push(x));
        s
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&self, other: &GradStats) -> GradStats {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        GradStats {
            count: self.count + other.count,
            mean: self.mean + delta * nb / n,
            m2: self.m2 + other.m2 + delta * delta * na * nb / n,
        }
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn stderr_mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Shift constants for the two-point rule; [`ShiftRule::default`] is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftRule {
    pub theta_shift: f64,
    pub alpha_shift: f64,
}

impl Default for ShiftRule {
    fn default() -> Self {
        Self {
            theta_shift: FRAC_PI_2,
            alpha_shift: FRAC_PI_4,
        }
    }
}

/// Which parameter a Monte-Carlo gradient sample differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Probe {
    Fixed(ParamId),
    /// A tree node drawn uniformly per sample.
    RandomAlpha,
}

impl Probe {
    /// First U3 angle of branch 0, group 0, layer 0, qubit 0.
    pub const DEFAULT: Probe = Probe::Fixed(ParamId::Theta(0));
}

impl std::fmt::Display for Probe {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Probe::Fixed(id) => id.fmt(f),
            Probe::RandomAlpha => f.write_str("alpha:random"),
        }
    }
}

impl std::str::FromStr for Probe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "alpha:random" {
            Ok(Probe::RandomAlpha)
        } else {
            s.parse().map(Probe::Fixed)
        }
    }
}

/// A compiled model, observable and input, evaluated over packed `[α; θ]`.
#[derive(Debug, Clone)]
pub struct Objective {
    circuit: Circuit,
    initial: StateVector,
    obs: Observable,
    offset: usize,
}

impl Objective {
    pub fn new(
        model: &LcqnnModel,
        obs: &Observable,
        input: Option<&StateVector>,
        haar: Option<&HaarBlocks>,
    ) -> Result<Self> {
        obs.validate_for(model.n())?;
        Ok(Self {
            circuit: model.circuit(haar)?,
            initial: model.initial_state(input)?,
            obs: obs.clone(),
            offset: model.m(),
        })
    }

    pub fn num_params(&self) -> usize {
        self.circuit.num_params()
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn cost(&self, params: &[f64]) -> Result<f64> {
        self.circuit.expectation(params, &self.initial, &self.obs, self.offset)
    }

    /// Cost with `params[index]` replaced by `params[index] + delta`.
    pub fn shifted_cost(&self, params: &[f64], index: usize, delta: f64) -> Result<f64> {
        let mut p = params.to_vec();
        p[index] += delta;
        self.cost(&p)
    }

    pub fn value_and_grad(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.circuit
            .adjoint_gradient(params, &self.initial, &self.obs, self.offset)
    }
}

fn shift_grad(obj: &Objective, params: &[f64], index: usize, is_alpha: bool, rule: ShiftRule) -> Result<f64> {
    if is_alpha {
        let s = rule.alpha_shift;
        Ok(obj.shifted_cost(params, index, s)? - obj.shifted_cost(params, index, -s)?)
    } else {
        let s = rule.theta_shift;
        Ok(0.5 * (obj.shifted_cost(params, index, s)? - obj.shifted_cost(params, index, -s)?))
    }
}

/// `∂C/∂param` by the two-point shift rule.
pub fn param_shift_grad(
    model: &LcqnnModel,
    alpha: &[f64],
    theta: &[f64],
    obs: &Observable,
    input: Option<&StateVector>,
    id: ParamId,
) -> Result<f64> {
    param_shift_grad_with(model, alpha, theta, obs, input, id, ShiftRule::default())
}

pub fn param_shift_grad_with(
    model: &LcqnnModel,
    alpha: &[f64],
    theta: &[f64],
    obs: &Observable,
    input: Option<&StateVector>,
    id: ParamId,
    rule: ShiftRule,
) -> Result<f64> {
    let index = model.param_index(id)?;
    let params = model.pack(alpha, theta)?;
    let obj = Objective::new(model, obs, input, None)?;
    shift_grad(&obj, &params, index, matches!(id, ParamId::Alpha(_)), rule)
}

pub const FD_STEP_RANGE: (f64, f64) = (1e-7, 1e-3);

/// Central difference `(C(p + h) − C(p − h)) / 2h`.
pub fn finite_diff_grad(
    model: &LcqnnModel,
    alpha: &[f64],
    theta: &[f64],
    obs: &Observable,
    input: Option<&StateVector>,
    id: ParamId,
    h: f64,
) -> Result<f64> {
    if !(FD_STEP_RANGE.0..=FD_STEP_RANGE.1).contains(&h) {
        return Err(Error::Argument(format!(
            "finite-difference step {h} outside [{}, {}]",
            FD_STEP_RANGE.0, FD_STEP_RANGE.1
        )));
    }
    let index = model.param_index(id)?;
    let params = model.pack(alpha, theta)?;
    let obj = Objective::new(model, obs, input, None)?;
    Ok((obj.shifted_cost(&params, index, h)? - obj.shifted_cost(&params, index, -h)?) / (2.0 * h))
}

/// Gradient of each observable's cost over the packed `[α; θ]` vector.
pub fn grad_full(
    model: &LcqnnModel,
    alpha: &[f64],
    theta: &[f64],
    observables: &[Observable],
    input: Option<&StateVector>,
) -> Result<Vec<Vec<f64>>> {
    let params = model.pack(alpha, theta)?;
    observables
        .iter()
        .map(|obs| Ok(Objective::new(model, obs, input, None)?.value_and_grad(&params)?.1))
        .collect()
}

/// Sampling options for [`estimate_grad_stats_with`].
#[derive(Debug, Clone)]
pub struct SampleOptions {
    pub probe: Probe,
    pub samples: usize,
    pub root_seed: u64,
    /// Keep α at this value instead of drawing it.
    pub fixed_alpha: Option<Vec<f64>>,
    pub input: Option<StateVector>,
    pub rule: ShiftRule,
}

impl SampleOptions {
    pub fn new(probe: Probe, samples: usize, root_seed: u64) -> Self {
        Self {
            probe,
            samples,
            root_seed,
            fixed_alpha: None,
            input: None,
            rule: ShiftRule::default(),
        }
    }
}

/// One Monte-Carlo gradient sample. Draw order on the sample's stream:
/// α, θ, Haar blocks (Haar-kind models), then the random α node.
pub fn sample_gradient(model: &LcqnnModel, obs: &Observable, opts: &SampleOptions, index: u64) -> Result<f64> {
    let mut rng = RngStream::new(opts.root_seed, index).rng();
    let alpha = match &opts.fixed_alpha {
        Some(a) => a.clone(),
        None => uniform_angles(&mut rng, model.alpha_len()),
    };
    let theta = uniform_angles(&mut rng, model.theta_layout_size());
    let haar = (model.kind() == BlockKind::Haar).then(|| model.sample_haar_blocks(&mut rng));
    let id = match opts.probe {
        Probe::Fixed(id) => id,
        Probe::RandomAlpha => {
            if model.alpha_len() == 0 {
                return Err(Error::InvalidParam("alpha:random on a model with L = 1".into()));
            }
            ParamId::Alpha(rng.random_range(0..model.alpha_len()))
        }
    };
    let params = model.pack(&alpha, &theta)?;
    let obj = Objective::new(model, obs, opts.input.as_ref(), haar.as_ref())?;
    shift_grad(&obj, &params, model.param_index(id)?, matches!(id, ParamId::Alpha(_)), opts.rule)
}

/// Gradient statistics over `samples` uniform draws; sample `s` uses stream `s`.
pub fn estimate_grad_stats(
    model: &LcqnnModel,
    obs: &Observable,
    probe: Probe,
    samples: usize,
    root_seed: u64,
) -> Result<GradStats> {
    estimate_grad_stats_with(model, obs, &SampleOptions::new(probe, samples, root_seed))
}

pub fn estimate_grad_stats_with(model: &LcqnnModel, obs: &Observable, opts: &SampleOptions) -> Result<GradStats> {
    if opts.samples < 2 {
        return Err(Error::Argument(format!("need at least 2 samples, got {}", opts.samples)));
    }
    if let Probe::Fixed(id) = opts.probe {
        model.param_index(id)?;
    }
    obs.validate_for(model.n())?;
    if !obs.is_traceless(model.n()) {
        log::warn!("observable {obs} is not traceless; gradient variance scaling may not apply");
    }
    let grads = (0..opts.samples as u64)
        .into_par_iter()
        .map(|s| sample_gradient(model, obs, opts, s))
        .collect::<Result<Vec<f64>>>()?;
    Ok(GradStats::from_samples(&grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Architecture;

    fn model(m: usize, n: usize, l: usize, k: usize, d: usize) -> LcqnnModel {
        LcqnnModel::new(Architecture::new(m, n, l, k, d)).unwrap()
    }

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, -2.5, 3.25, 0.0, 7.5];
        let s = GradStats::from_samples(&xs);
        let mean = xs.iter().sum::<f64>() / 6.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0;
        assert!((s.mean - mean).abs() < 1e-14);
        assert!((s.variance() - var).abs() < 1e-13);
        let merged = GradStats::from_samples(&xs[..2]).merge(&GradStats::from_samples(&xs[2..]));
        assert!((merged.variance() - var).abs() < 1e-13);
        assert_eq!(GradStats::new().merge(&s), s);
    }

    #[test]
    fn cosine_gradient() {
        // one U3 whose ϑ is the only active angle: C(ϑ) = cos ϑ
        let m = model(0, 1, 1, 1, 1);
        let obs = Observable::z(0);
        let g = param_shift_grad(&m, &[], &[FRAC_PI_2, 0.0, 0.0], &obs, None, ParamId::Theta(0)).unwrap();
        assert!((g + 1.0).abs() < 1e-12);
        let fd = finite_diff_grad(&m, &[], &[0.0; 3], &obs, None, ParamId::Theta(0), 1e-5).unwrap();
        assert!(fd.abs() < 1e-8);
        assert!(finite_diff_grad(&m, &[], &[0.0; 3], &obs, None, ParamId::Theta(0), 1e-2).is_err());
        assert!(param_shift_grad(&m, &[], &[0.0; 3], &obs, None, ParamId::Theta(3)).is_err());
    }

    #[test]
    fn dead_branch_gradient_is_zero() {
        let m = model(1, 2, 2, 2, 1);
        let theta: Vec<f64> = (0..m.theta_layout_size()).map(|i| 0.37 * i as f64).collect();
        let id = ParamId::Theta(m.theta_index(1, 0, 0, 1, 0).unwrap());
        let g = param_shift_grad(&m, &[0.0], &theta, &Observable::z(0), None, id).unwrap();
        assert!(g.abs() < 1e-12);
    }

    #[test]
    fn probe_parsing() {
        assert_eq!("alpha:random".parse::<Probe>().unwrap(), Probe::RandomAlpha);
        assert_eq!("theta:0".parse::<Probe>().unwrap(), Probe::DEFAULT);
        assert_eq!(Probe::RandomAlpha.to_string(), "alpha:random");
    }

    #[test]
    fn stats_need_two_samples() {
        let m = model(1, 1, 2, 1, 1);
        assert!(estimate_grad_stats(&m, &Observable::z(0), Probe::DEFAULT, 1, 0).is_err());
    }
}
