//! Coefficient layer `V(α)`: a binary tree of uniformly controlled RY
//! rotations preparing `Σ_{j<L} √p_j(α) |j⟩` on the control register.
//!
//! Node `(level ℓ, prefix q)` stores its angle at `alpha[2^ℓ - 1 + q]`. A
//! branch index `j` with `t = log2 L` bits takes `cos²` of the node angle
//! when its level-ℓ bit is 0 and `sin²` when it is 1, where the node is the
//! one addressed by the higher bits of `j`.
//!
//! The tree occupies the last `t` control qubits so that `|j⟩` is the
//! literal `m`-bit basis state; the leading `m - t` control qubits stay
//! in `|0⟩`.

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::gate::{Control, GateOp, ParamRef};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientLayer {
    m: usize,
    l: usize,
    alpha: Vec<f64>,
}

impl CoefficientLayer {
    pub fn new(m: usize, l: usize, alpha: Vec<f64>) -> Result<Self> {
        check_branch_count(m, l)?;
        if alpha.len() != l - 1 {
            return Err(Error::ParameterLength {
                what: "alpha",
                expected: l - 1,
                found: alpha.len(),
            });
        }
        Ok(Self { m, l, alpha })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn branches(&self) -> usize {
        self.l
    }

    /// Active tree depth `log2 L`.
    pub fn depth(&self) -> usize {
        self.l.trailing_zeros() as usize
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Closed-form branch probabilities `p_0 … p_{L-1}`.
    pub fn probabilities(&self) -> Vec<f64> {
        tree_probabilities(self.depth(), &self.alpha)
    }

    /// Gates of `V(α)` on an `m`-qubit register, reading `alpha[i]` from
    /// parameter slot `i`.
    pub fn gates(&self) -> Vec<(GateOp, Option<Control>)> {
        tree_gates(self.m, self.depth(), 0)
    }

    /// `V(α)` as a standalone `m`-qubit circuit over the `L - 1` angles.
    pub fn circuit(&self) -> Result<Circuit> {
        let mut c = Circuit::new(self.m, self.l - 1)?;
        for (g, ctrl) in self.gates() {
            c.push(g, ctrl)?;
        }
        Ok(c)
    }
}

pub(crate) fn check_branch_count(m: usize, l: usize) -> Result<()> {
    if l == 0 || !l.is_power_of_two() {
        return Err(Error::Architecture(format!(
            "branch count L = {l} must be a power of two"
        )));
    }
    if m >= usize::BITS as usize || l > 1 << m {
        return Err(Error::Architecture(format!(
            "L = {l} branches need more than m = {m} control qubits"
        )));
    }
    Ok(())
}

/// Probabilities of the `2^depth` leaves for tree angles `alpha`.
pub fn tree_probabilities(depth: usize, alpha: &[f64]) -> Vec<f64> {
    debug_assert_eq!(alpha.len(), (1 << depth) - 1);
    (0..1usize << depth)
        .map(|j| {
            (0..depth)
                .map(|level| {
                    let bit = (j >> (depth - 1 - level)) & 1;
                    let prefix = j >> (depth - level);
                    let (s, c) = alpha[(1 << level) - 1 + prefix].sin_cos();
                    if bit == 0 {
                        c * c
                    } else {
                        s * s
                    }
                })
                .product()
        })
        .collect()
}

/// Tree gates on qubits `m - depth .. m`, reading angles from slots
/// `slot_offset ..`; each RY angle is twice the stored node angle.
pub(crate) fn tree_gates(m: usize, depth: usize, slot_offset: usize) -> Vec<(GateOp, Option<Control>)> {
    let first = m - depth;
    let mut out = Vec::with_capacity((1 << depth) - 1);
    for level in 0..depth {
        let target = first + level;
        let controls: Vec<usize> = (first..target).collect();
        for prefix in 0..1usize << level {
            let gate = GateOp::Ry {
                target,
                angle: ParamRef::scaled(slot_offset + (1 << level) - 1 + prefix, 2.0),
            };
            let control = (level > 0).then(|| Control::new(controls.clone(), prefix));
            out.push((gate, control));
        }
    }
    out
}
