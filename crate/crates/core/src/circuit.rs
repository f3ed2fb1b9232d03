//! Validated instruction lists over a flat parameter vector.

use crate::error::{Error, Result};
use crate::gate::{self, Control, GateOp, Instruction};
use crate::observable::Observable;
use crate::state::{check_capacity, StateVector};

#[derive(Debug, Clone)]
pub struct Circuit {
    num_qubits: usize,
    num_params: usize,
    instructions: Vec<Instruction>,
}

impl Circuit {
    pub fn new(num_qubits: usize, num_params: usize) -> Result<Self> {
        check_capacity(num_qubits)?;
        Ok(Self {
            num_qubits,
            num_params,
            instructions: Vec::new(),
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn push(&mut self, gate: GateOp, control: Option<Control>) -> Result<()> {
        gate.validate(self.num_qubits, self.num_params)?;
        if let Some(c) = &control {
            c.validate(self.num_qubits)?;
            if let Some(&q) = gate.qubits().iter().find(|q| c.qubits.contains(q)) {
                return Err(Error::ControlTargetOverlap(q));
            }
        }
        self.instructions.push(Instruction::controlled(gate, control));
        Ok(())
    }

    fn check_inputs(&self, params: &[f64], state: &StateVector) -> Result<()> {
        if params.len() != self.num_params {
            return Err(Error::ParameterLength {
                what: "parameter vector",
                expected: self.num_params,
                found: params.len(),
            });
        }
        if state.num_qubits() != self.num_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.num_qubits,
                found: state.num_qubits(),
            });
        }
        Ok(())
    }

    pub fn apply(&self, params: &[f64], state: &mut StateVector) -> Result<()> {
        self.check_inputs(params, state)?;
        let n = self.num_qubits;
        let amps = state.amplitudes_mut();
        for ins in &self.instructions {
            gate::apply_unchecked(amps, n, &ins.gate, ins.control.as_ref(), params, false);
        }
        Ok(())
    }

    pub fn run(&self, params: &[f64], initial: &StateVector) -> Result<StateVector> {
        let mut state = initial.clone();
        self.apply(params, &mut state)?;
        Ok(state)
    }

    /// `⟨ψ(params)| I_{offset} ⊗ O |ψ(params)⟩`.
    pub fn expectation(
        &self,
        params: &[f64],
        initial: &StateVector,
        obs: &Observable,
        offset: usize,
    ) -> Result<f64> {
        obs.expectation_on(&self.run(params, initial)?, offset)
    }

    /// Expectation value and its gradient with respect to every parameter,
    /// by reverse-mode (adjoint) propagation through the instruction list.
    pub fn adjoint_gradient(
        &self,
        params: &[f64],
        initial: &StateVector,
        obs: &Observable,
        offset: usize,
    ) -> Result<(f64, Vec<f64>)> {
        let psi = self.run(params, initial)?;
        let register = self
            .num_qubits
            .checked_sub(offset)
            .ok_or(Error::DimensionMismatch {
                expected: offset,
                found: self.num_qubits,
            })?;
        obs.validate_for(register)?;
        let value = obs.expectation_unchecked(psi.amplitudes(), register);
        let mut lambda = obs.apply_unchecked(psi.amplitudes(), register);
        let mut phi = psi.into_amplitudes();
        let mut grad = vec![0.0; self.num_params];
        let n = self.num_qubits;
        for ins in self.instructions.iter().rev() {
            let control = ins.control.as_ref();
            gate::apply_unchecked(&mut phi, n, &ins.gate, control, params, true);
            for (which, p) in ins.gate.params().iter().enumerate() {
                let overlap =
                    gate::derivative_overlap(&lambda, &phi, n, &ins.gate, control, params, which);
                grad[p.slot] += 2.0 * p.scale * overlap.re;
            }
            gate::apply_unchecked(&mut lambda, n, &ins.gate, control, params, true);
        }
        Ok((value, grad))
    }
}
