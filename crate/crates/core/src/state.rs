use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gate::{self, Control, GateOp};
use crate::{C64, MAX_QUBITS};

/// Dense pure state over `num_qubits` qubits.
///
/// Qubit 0 is the most significant bit of the basis index, so a register
/// `|control⟩ ⊗ |working⟩` stores the working-register block for control
/// value `j` contiguously at `j * 2^n .. (j + 1) * 2^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        check_capacity(num_qubits)?;
        let mut amps = vec![C64::new(0.0, 0.0); 1 << num_qubits];
        amps[0] = C64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// Wraps raw amplitudes. The length must be a power of two; no
    /// normalisation is applied.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_capacity(num_qubits)?;
        Ok(Self { num_qubits, amps })
    }

    /// Real amplitude encoding `x / ‖x‖₂`.
    pub fn amplitude_encode(x: &[f64]) -> Result<Self> {
        if !x.len().is_power_of_two() {
            return Err(Error::NotPowerOfTwo(x.len()));
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm.is_nan() || norm <= 1e-9 {
            return Err(Error::ZeroNorm(norm));
        }
        Self::from_amplitudes(x.iter().map(|&v| C64::new(v / norm, 0.0)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// `self ⊗ other`, with `self` on the high-order qubits.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        check_capacity(self.num_qubits + other.num_qubits)?;
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amps {
            amps.extend(other.amps.iter().map(|b| a * b));
        }
        Ok(Self {
            num_qubits: self.num_qubits + other.num_qubits,
            amps,
        })
    }

    /// Applies a single gate in place.
    pub fn apply(&mut self, op: &GateOp, params: &[f64]) -> Result<()> {
        op.validate(self.num_qubits, params.len())?;
        gate::apply_unchecked(&mut self.amps, self.num_qubits, op, None, params, false);
        Ok(())
    }

    /// Applies `subcircuit` only to the amplitudes whose control bits spell
    /// `control_value` (first listed control qubit is the most significant
    /// bit of the value).
    pub fn apply_controlled(
        &mut self,
        control_qubits: &[usize],
        control_value: usize,
        subcircuit: &[GateOp],
        params: &[f64],
    ) -> Result<()> {
        let control = Control::new(control_qubits.to_vec(), control_value);
        control.validate(self.num_qubits)?;
        for op in subcircuit {
            op.validate(self.num_qubits, params.len())?;
            if let Some(&q) = op.qubits().iter().find(|q| control_qubits.contains(q)) {
                return Err(Error::ControlTargetOverlap(q));
            }
        }
        for op in subcircuit {
            gate::apply_unchecked(
                &mut self.amps,
                self.num_qubits,
                op,
                Some(&control),
                params,
                false,
            );
        }
        Ok(())
    }
}

pub(crate) fn check_capacity(num_qubits: usize) -> Result<()> {
    if num_qubits > MAX_QUBITS {
        Err(Error::Capacity {
            requested: num_qubits,
            max: MAX_QUBITS,
        })
    } else {
        Ok(())
    }
}
