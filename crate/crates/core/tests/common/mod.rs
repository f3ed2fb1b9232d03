//! Dense-matrix reference built from Kronecker products, independent of the
//! simulator's in-place kernels.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn ry(phi: f64) -> DMatrix<C> {
    let (s, co) = (phi / 2.0).sin_cos();
    DMatrix::from_row_slice(2, 2, &[c(co), c(-s), c(s), c(co)])
}

pub fn u3(t: f64, p: f64, l: f64) -> DMatrix<C> {
    let (s, co) = (t / 2.0).sin_cos();
    DMatrix::from_row_slice(
        2,
        2,
        &[
            c(co),
            -C::from_polar(s, l),
            C::from_polar(s, p),
            C::from_polar(co, p + l),
        ],
    )
}

fn identity(dim: usize) -> DMatrix<C> {
    DMatrix::identity(dim, dim)
}

/// `I ⊗ … ⊗ g ⊗ … ⊗ I` with `g` on qubit `q` (qubit 0 most significant).
pub fn on_qubit(g: &DMatrix<C>, q: usize, n: usize) -> DMatrix<C> {
    identity(1 << q).kronecker(g).kronecker(&identity(1 << (n - q - 1)))
}

/// Projector onto basis states whose bit `q` equals `b`.
pub fn bit_projector(q: usize, b: usize, n: usize) -> DMatrix<C> {
    let mut p = DMatrix::zeros(2, 2);
    p[(b, b)] = c(1.0);
    on_qubit(&p, q, n)
}

pub fn cnot(control: usize, target: usize, n: usize) -> DMatrix<C> {
    let x = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    bit_projector(control, 0, n) + bit_projector(control, 1, n) * on_qubit(&x, target, n)
}

/// Projector onto `controls` spelling `value` (first control is the MSB).
pub fn value_projector(controls: &[usize], value: usize, n: usize) -> DMatrix<C> {
    let k = controls.len();
    controls
        .iter()
        .enumerate()
        .fold(identity(1 << n), |acc, (i, &q)| acc * bit_projector(q, (value >> (k - 1 - i)) & 1, n))
}

/// `P ⊗ U + (I − P)`.
pub fn controlled(u: &DMatrix<C>, controls: &[usize], value: usize, n: usize) -> DMatrix<C> {
    let p = value_projector(controls, value, n);
    &p * u + (identity(1 << n) - p)
}

pub fn z_on(q: usize, n: usize) -> DMatrix<C> {
    let z = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
    on_qubit(&z, q, n)
}

pub fn basis(index: usize, n: usize) -> DVector<C> {
    let mut v = DVector::zeros(1 << n);
    v[index] = c(1.0);
    v
}

pub fn max_diff(a: &[C], b: &[C]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn expectation(op: &DMatrix<C>, v: &DVector<C>) -> f64 {
    v.dotc(&(op * v)).re
}
