//! Gate definitions and the in-place statevector kernels.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::haar::BlockUnitary;
use crate::C64;

pub type Mat2 = [[C64; 2]; 2];

/// Reference to a scalar in a flat parameter vector; the gate angle is
/// `scale * params[slot]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRef {
    pub slot: usize,
    pub scale: f64,
}

impl ParamRef {
    pub fn new(slot: usize) -> Self {
        Self { slot, scale: 1.0 }
    }

    pub fn scaled(slot: usize, scale: f64) -> Self {
        Self { slot, scale }
    }

    #[inline]
    fn value(&self, params: &[f64]) -> f64 {
        self.scale * params[self.slot]
    }
}

#[derive(Debug, Clone)]
pub enum GateOp {
    /// `RY(φ) = exp(-iφY/2)`.
    Ry { target: usize, angle: ParamRef },
    /// `U3(ϑ, φ, λ) = [[cos ϑ/2, -e^{iλ} sin ϑ/2], [e^{iφ} sin ϑ/2, e^{i(φ+λ)} cos ϑ/2]]`.
    U3 { target: usize, angles: [ParamRef; 3] },
    Cnot { control: usize, target: usize },
    /// Fixed multi-qubit unitary; `targets[0]` is the most significant bit of
    /// the unitary's local index.
    Unitary {
        targets: Vec<usize>,
        unitary: Arc<BlockUnitary>,
    },
}

impl GateOp {
    pub fn ry(target: usize, slot: usize) -> Self {
        GateOp::Ry {
            target,
            angle: ParamRef::new(slot),
        }
    }

    pub fn u3(target: usize, slots: [usize; 3]) -> Self {
        GateOp::U3 {
            target,
            angles: slots.map(ParamRef::new),
        }
    }

    pub fn qubits(&self) -> Vec<usize> {
        match self {
            GateOp::Ry { target, .. } | GateOp::U3 { target, .. } => vec![*target],
            GateOp::Cnot { control, target } => vec![*control, *target],
            GateOp::Unitary { targets, .. } => targets.clone(),
        }
    }

    pub fn params(&self) -> &[ParamRef] {
        match self {
            GateOp::Ry { angle, .. } => std::slice::from_ref(angle),
            GateOp::U3 { angles, .. } => angles,
            GateOp::Cnot { .. } | GateOp::Unitary { .. } => &[],
        }
    }

    pub fn validate(&self, num_qubits: usize, num_params: usize) -> Result<()> {
        let qubits = self.qubits();
        for (i, &q) in qubits.iter().enumerate() {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, num_qubits });
            }
            if qubits[..i].contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        if let GateOp::Unitary { targets, unitary } = self {
            if unitary.dim() != 1 << targets.len() {
                return Err(Error::DimensionMismatch {
                    expected: 1 << targets.len(),
                    found: unitary.dim(),
                });
            }
        }
        for p in self.params() {
            if p.slot >= num_params {
                return Err(Error::MissingParameter {
                    slot: p.slot,
                    len: num_params,
                });
            }
        }
        Ok(())
    }
}

/// Activation condition: the listed qubits must read `value`, with the first
/// listed qubit as the most significant bit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Control {
    pub qubits: Vec<usize>,
    pub value: usize,
}

impl Control {
    pub fn new(qubits: Vec<usize>, value: usize) -> Self {
        Self { qubits, value }
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        for (i, &q) in self.qubits.iter().enumerate() {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, num_qubits });
            }
            if self.qubits[..i].contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        let bits = self.qubits.len();
        if bits < usize::BITS as usize && self.value >> bits != 0 {
            return Err(Error::InvalidControlValue {
                value: self.value,
                bits,
            });
        }
        Ok(())
    }

    /// `(mask, pattern)` such that index `i` is active iff `i & mask == pattern`.
    fn masks(&self, num_qubits: usize) -> (usize, usize) {
        let k = self.qubits.len();
        let mut mask = 0;
        let mut pattern = 0;
        for (b, &q) in self.qubits.iter().enumerate() {
            let bit = 1 << (num_qubits - 1 - q);
            mask |= bit;
            if (self.value >> (k - 1 - b)) & 1 == 1 {
                pattern |= bit;
            }
        }
        (mask, pattern)
    }
}

/// A gate with an optional control condition.
#[derive(Debug, Clone)]
pub struct Instruction {
    pub gate: GateOp,
    pub control: Option<Control>,
}

impl Instruction {
    pub fn new(gate: GateOp) -> Self {
        Self { gate, control: None }
    }

    pub fn controlled(gate: GateOp, control: Option<Control>) -> Self {
        Self { gate, control }
    }
}

#[inline]
fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn ry_matrix(phi: f64) -> Mat2 {
    let (s, co) = (phi / 2.0).sin_cos();
    [[c(co, 0.0), c(-s, 0.0)], [c(s, 0.0), c(co, 0.0)]]
}

pub fn u3_matrix(theta: f64, phi: f64, lambda: f64) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    let el = C64::from_polar(1.0, lambda);
    let ep = C64::from_polar(1.0, phi);
    let epl = C64::from_polar(1.0, phi + lambda);
    [[c(co, 0.0), -el * s], [ep * s, epl * co]]
}

fn ry_derivative(phi: f64) -> Mat2 {
    let (s, co) = (phi / 2.0).sin_cos();
    [[c(-s / 2.0, 0.0), c(-co / 2.0, 0.0)], [c(co / 2.0, 0.0), c(-s / 2.0, 0.0)]]
}

/// Partial derivative of the U3 matrix with respect to angle `which`
/// (0 = ϑ, 1 = φ, 2 = λ).
fn u3_derivative(theta: f64, phi: f64, lambda: f64, which: usize) -> Mat2 {
    let (s, co) = (theta / 2.0).sin_cos();
    let el = C64::from_polar(1.0, lambda);
    let ep = C64::from_polar(1.0, phi);
    let epl = C64::from_polar(1.0, phi + lambda);
    let i = c(0.0, 1.0);
    let zero = c(0.0, 0.0);
    match which {
        0 => [[c(-s / 2.0, 0.0), -el * (co / 2.0)], [ep * (co / 2.0), -epl * (s / 2.0)]],
        1 => [[zero, zero], [i * ep * s, i * epl * co]],
        _ => [[zero, -i * el * s], [zero, i * epl * co]],
    }
}

fn dagger(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

fn single_qubit_matrix(op: &GateOp, params: &[f64]) -> Option<Mat2> {
    match op {
        GateOp::Ry { angle, .. } => Some(ry_matrix(angle.value(params))),
        GateOp::U3 { angles, .. } => Some(u3_matrix(
            angles[0].value(params),
            angles[1].value(params),
            angles[2].value(params),
        )),
        _ => None,
    }
}

#[inline]
fn bit(num_qubits: usize, q: usize) -> usize {
    1 << (num_qubits - 1 - q)
}

/// Visits every amplitude pair `(i, i | target_bit)` whose control bits match.
#[inline]
fn for_each_pair(
    dim: usize,
    stride: usize,
    (mask, pattern): (usize, usize),
    mut f: impl FnMut(usize, usize),
) {
    let mut base = 0;
    while base < dim {
        for i0 in base..base + stride {
            if i0 & mask == pattern {
                f(i0, i0 + stride);
            }
        }
        base += 2 * stride;
    }
}

fn apply_mat2(amps: &mut [C64], num_qubits: usize, target: usize, masks: (usize, usize), m: &Mat2) {
    let stride = bit(num_qubits, target);
    for_each_pair(amps.len(), stride, masks, |i0, i1| {
        let a0 = amps[i0];
        let a1 = amps[i1];
        amps[i0] = m[0][0] * a0 + m[0][1] * a1;
        amps[i1] = m[1][0] * a0 + m[1][1] * a1;
    });
}

/// Local-index offsets for a set of target qubits.
fn target_offsets(num_qubits: usize, targets: &[usize]) -> Vec<usize> {
    let k = targets.len();
    (0..1usize << k)
        .map(|r| {
            targets
                .iter()
                .enumerate()
                .filter(|(b, _)| (r >> (k - 1 - b)) & 1 == 1)
                .map(|(_, &q)| bit(num_qubits, q))
                .sum()
        })
        .collect()
}

fn apply_block(
    amps: &mut [C64],
    num_qubits: usize,
    targets: &[usize],
    masks: (usize, usize),
    unitary: &BlockUnitary,
    adjoint: bool,
) {
    let offsets = target_offsets(num_qubits, targets);
    let tmask: usize = targets.iter().map(|&q| bit(num_qubits, q)).sum();
    let mut buf = vec![C64::new(0.0, 0.0); offsets.len()];
    for i in 0..amps.len() {
        if i & tmask != 0 || i & masks.0 != masks.1 {
            continue;
        }
        for (b, &o) in buf.iter_mut().zip(&offsets) {
            *b = amps[i + o];
        }
        if adjoint {
            unitary.apply_adjoint(&mut buf);
        } else {
            unitary.apply(&mut buf);
        }
        for (b, &o) in buf.iter().zip(&offsets) {
            amps[i + o] = *b;
        }
    }
}

/// Applies `op` (or its inverse) without validation.
pub(crate) fn apply_unchecked(
    amps: &mut [C64],
    num_qubits: usize,
    op: &GateOp,
    control: Option<&Control>,
    params: &[f64],
    adjoint: bool,
) {
    let masks = control.map_or((0, 0), |c| c.masks(num_qubits));
    match op {
        GateOp::Ry { target, .. } | GateOp::U3 { target, .. } => {
            let m = single_qubit_matrix(op, params).expect("single-qubit gate");
            let m = if adjoint { dagger(&m) } else { m };
            apply_mat2(amps, num_qubits, *target, masks, &m);
        }
        GateOp::Cnot { control: cq, target } => {
            let cbit = bit(num_qubits, *cq);
            let masks = (masks.0 | cbit, masks.1 | cbit);
            let stride = bit(num_qubits, *target);
            for_each_pair(amps.len(), stride, masks, |i0, i1| amps.swap(i0, i1));
        }
        GateOp::Unitary { targets, unitary } => {
            apply_block(amps, num_qubits, targets, masks, unitary, adjoint);
        }
    }
}

/// `⟨bra| (∂G/∂angle_which) |ket⟩` for a parameterised single-qubit gate,
/// where the derivative vanishes outside the control subspace. The result is
/// with respect to the raw gate angle, i.e. before the `ParamRef` scale.
pub(crate) fn derivative_overlap(
    bra: &[C64],
    ket: &[C64],
    num_qubits: usize,
    op: &GateOp,
    control: Option<&Control>,
    params: &[f64],
    which: usize,
) -> C64 {
    let masks = control.map_or((0, 0), |c| c.masks(num_qubits));
    let (target, d) = match op {
        GateOp::Ry { target, angle } => (*target, ry_derivative(angle.value(params))),
        GateOp::U3 { target, angles } => (
            *target,
            u3_derivative(
                angles[0].value(params),
                angles[1].value(params),
                angles[2].value(params),
                which,
            ),
        ),
        _ => return C64::new(0.0, 0.0),
    };
    let stride = bit(num_qubits, target);
    let mut acc = C64::new(0.0, 0.0);
    for_each_pair(ket.len(), stride, masks, |i0, i1| {
        let k0 = ket[i0];
        let k1 = ket[i1];
        acc += bra[i0].conj() * (d[0][0] * k0 + d[0][1] * k1)
            + bra[i1].conj() * (d[1][0] * k0 + d[1][1] * k1);
    });
    acc
}
