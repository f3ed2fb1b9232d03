use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::state::StateVector;
use crate::C64;

const HERMITIAN_TOL: f64 = 1e-12;

/// `weight · Z_{q1} Z_{q2} …`; an empty qubit list is a multiple of identity.
#[derive(Debug, Clone, PartialEq)]
pub struct ZTerm {
    pub weight: f64,
    pub qubits: Vec<usize>,
}

/// Hermitian observable on a register.
///
/// Qubit indices and block dimensions are relative to the register the
/// observable is evaluated on. When evaluated with a register offset (see
/// [`Observable::expectation_on`]) the observable acts as `I ⊗ O` with the
/// identity on the leading `offset` qubits.
#[derive(Debug, Clone, PartialEq)]
pub enum Observable {
    PauliZSum(Vec<ZTerm>),
    BlockDiagonal(Vec<DMatrix<C64>>),
}

impl Observable {
    pub fn z(qubit: usize) -> Self {
        Observable::PauliZSum(vec![ZTerm {
            weight: 1.0,
            qubits: vec![qubit],
        }])
    }

    pub fn block_diagonal(blocks: Vec<DMatrix<C64>>) -> Result<Self> {
        for b in &blocks {
            if b.nrows() != b.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: b.nrows(),
                    found: b.ncols(),
                });
            }
            let dev = (b - b.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
            if dev > HERMITIAN_TOL {
                return Err(Error::NonHermitian(dev));
            }
        }
        Ok(Observable::BlockDiagonal(blocks))
    }

    /// Parses a descriptor such as `Z0`, `Z0Z1` or `0.5*Z0+Z2-Z3`.
    pub fn parse(descriptor: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("cannot parse observable '{descriptor}'"));
        let s: String = descriptor.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(bad());
        }
        let mut terms = Vec::new();
        let mut rest = s.as_str();
        while !rest.is_empty() {
            let (sign, body) = match rest.as_bytes()[0] {
                b'+' => (1.0, &rest[1..]),
                b'-' => (-1.0, &rest[1..]),
                _ => (1.0, rest),
            };
            let end = body.find(['+', '-']).unwrap_or(body.len());
            let (term, tail) = body.split_at(end);
            rest = tail;
            let (weight, zs) = match term.split_once('*') {
                Some((w, zs)) => (w.parse::<f64>().map_err(|_| bad())?, zs),
                None => (1.0, term),
            };
            let mut qubits = Vec::new();
            for part in zs.split(['Z', 'z']).skip(1) {
                qubits.push(part.parse::<usize>().map_err(|_| bad())?);
            }
            if qubits.is_empty() || !zs.starts_with(['Z', 'z']) {
                return Err(bad());
            }
            terms.push(ZTerm {
                weight: sign * weight,
                qubits,
            });
        }
        Ok(Observable::PauliZSum(terms))
    }

    /// Checks that the observable fits a register of `register_qubits`.
    pub fn validate_for(&self, register_qubits: usize) -> Result<()> {
        match self {
            Observable::PauliZSum(terms) => {
                for t in terms {
                    if let Some(&q) = t.qubits.iter().find(|&&q| q >= register_qubits) {
                        return Err(Error::ObservableScope {
                            qubit: q,
                            working: register_qubits,
                        });
                    }
                }
                Ok(())
            }
            Observable::BlockDiagonal(blocks) => {
                let dim: usize = blocks.iter().map(|b| b.nrows()).sum();
                if dim != 1 << register_qubits {
                    return Err(Error::DimensionMismatch {
                        expected: 1 << register_qubits,
                        found: dim,
                    });
                }
                Ok(())
            }
        }
    }

    pub fn trace(&self, register_qubits: usize) -> f64 {
        match self {
            Observable::PauliZSum(terms) => terms
                .iter()
                .filter(|t| t.qubits.is_empty())
                .map(|t| t.weight * (1u64 << register_qubits) as f64)
                .sum(),
            Observable::BlockDiagonal(blocks) => blocks.iter().map(|b| b.trace().re).sum(),
        }
    }

    pub fn is_traceless(&self, register_qubits: usize) -> bool {
        self.trace(register_qubits).abs() < 1e-10
    }

    /// `⟨ψ|O|ψ⟩` on the whole state.
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        self.expectation_on(state, 0)
    }

    /// `⟨ψ|I_{offset} ⊗ O|ψ⟩`: the observable addresses the qubits after the
    /// first `offset`.
    pub fn expectation_on(&self, state: &StateVector, offset: usize) -> Result<f64> {
        let register = state
            .num_qubits()
            .checked_sub(offset)
            .ok_or(Error::DimensionMismatch {
                expected: offset,
                found: state.num_qubits(),
            })?;
        self.validate_for(register)?;
        Ok(self.expectation_unchecked(state.amplitudes(), register))
    }

    pub(crate) fn expectation_unchecked(&self, amps: &[C64], register: usize) -> f64 {
        match self {
            Observable::PauliZSum(terms) => {
                let diag = diagonal(terms, register);
                let mask = (1 << register) - 1;
                amps.iter()
                    .enumerate()
                    .map(|(i, a)| a.norm_sqr() * diag[i & mask])
                    .sum()
            }
            Observable::BlockDiagonal(blocks) => {
                let mut total = C64::new(0.0, 0.0);
                for chunk in amps.chunks(1 << register) {
                    let mut start = 0;
                    for b in blocks {
                        let d = b.nrows();
                        let v = &chunk[start..start + d];
                        for i in 0..d {
                            let row: C64 = (0..d).map(|j| b[(i, j)] * v[j]).sum();
                            total += v[i].conj() * row;
                        }
                        start += d;
                    }
                }
                debug_assert!(
                    total.im.abs() < 1e-10 * (1.0 + total.re.abs()),
                    "imaginary residue {}",
                    total.im
                );
                total.re
            }
        }
    }

    /// `(I ⊗ O)|ψ⟩` for amplitudes whose last `register` qubits are addressed.
    pub(crate) fn apply_unchecked(&self, amps: &[C64], register: usize) -> Vec<C64> {
        match self {
            Observable::PauliZSum(terms) => {
                let diag = diagonal(terms, register);
                let mask = (1 << register) - 1;
                amps.iter()
                    .enumerate()
                    .map(|(i, a)| a * diag[i & mask])
                    .collect()
            }
            Observable::BlockDiagonal(blocks) => {
                let mut out = Vec::with_capacity(amps.len());
                for chunk in amps.chunks(1 << register) {
                    let mut start = 0;
                    for b in blocks {
                        let d = b.nrows();
                        let v = &chunk[start..start + d];
                        out.extend((0..d).map(|i| (0..d).map(|j| b[(i, j)] * v[j]).sum::<C64>()));
                        start += d;
                    }
                }
                out
            }
        }
    }
}

/// Diagonal of a Z-string sum over a `register`-qubit register.
fn diagonal(terms: &[ZTerm], register: usize) -> Vec<f64> {
    (0..1usize << register)
        .map(|i| {
            terms
                .iter()
                .map(|t| {
                    let odd = t
                        .qubits
                        .iter()
                        .filter(|&&q| (i >> (register - 1 - q)) & 1 == 1)
                        .count()
                        % 2;
                    if odd == 1 {
                        -t.weight
                    } else {
                        t.weight
                    }
                })
                .sum()
        })
        .collect()
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::PauliZSum(terms) => {
                for (i, t) in terms.iter().enumerate() {
                    if i > 0 && t.weight >= 0.0 {
                        write!(f, "+")?;
                    }
                    if t.weight == -1.0 {
                        write!(f, "-")?;
                    } else if t.weight != 1.0 {
                        write!(f, "{}*", t.weight)?;
                    }
                    if t.qubits.is_empty() {
                        write!(f, "I")?;
                    }
                    for q in &t.qubits {
                        write!(f, "Z{q}")?;
                    }
                }
                Ok(())
            }
            Observable::BlockDiagonal(blocks) => {
                let dims: Vec<String> = blocks.iter().map(|b| b.nrows().to_string()).collect();
                write!(f, "blocks[{}]", dims.join(","))
            }
        }
    }
}
