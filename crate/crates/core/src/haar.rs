//! Haar-distributed unitaries.
//!
//! [`haar_unitary`] returns a dense matrix from the QR decomposition of a
//! complex Ginibre matrix, with the phases of `diag(R)` folded into `Q`.
//! [`HaarReflectors`] samples the same distribution in factored form: the
//! Householder reflectors of that QR are independent once conditioned on the
//! preceding columns, so they can be drawn directly from Gaussian vectors of
//! decreasing length. Sampling and application both cost `O(d²)`.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::C64;

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn unit_phase(z: C64) -> C64 {
    let n = z.norm();
    if n == 0.0 {
        C64::new(1.0, 0.0)
    } else {
        z / n
    }
}

/// Dense `dim × dim` Haar-random unitary.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<C64> {
    assert!(dim >= 1, "Haar unitary needs dim >= 1");
    // column-major fill keeps the draw order aligned with HaarReflectors
    let mut g = DMatrix::<C64>::zeros(dim, dim);
    for col in 0..dim {
        for row in 0..dim {
            g[(row, col)] = complex_gaussian(rng);
        }
    }
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..dim {
        let phase = unit_phase(r[(k, k)]);
        for row in 0..dim {
            q[(row, k)] *= phase;
        }
    }
    q
}

/// First `count` columns of a `dim × dim` Haar unitary, as Gram–Schmidt of
/// Gaussian columns with positive `diag(R)`. For the same RNG position this
/// reproduces the leading columns of [`haar_unitary`] up to rounding.
pub fn haar_columns<R: Rng + ?Sized>(dim: usize, count: usize, rng: &mut R) -> Vec<Vec<C64>> {
    assert!(count <= dim, "cannot draw {count} orthonormal columns in dimension {dim}");
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        for q in &cols {
            let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
            v.iter_mut().zip(q).for_each(|(x, qi)| *x -= qi * proj);
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    cols
}

/// Haar unitary stored as `H₁ (1 ⊕ H₂) ⋯ (I ⊕ H_{d-1}) Λ`.
#[derive(Debug, Clone)]
pub struct HaarReflectors {
    dim: usize,
    /// Unit Householder vectors; reflector `k` acts on coordinates `k..dim`.
    reflectors: Vec<Vec<C64>>,
    phases: Vec<C64>,
}

impl HaarReflectors {
    pub fn sample<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        assert!(dim >= 1, "Haar unitary needs dim >= 1");
        let mut reflectors = Vec::with_capacity(dim.saturating_sub(1));
        let mut phases = Vec::with_capacity(dim);
        for k in 0..dim {
            let len = dim - k;
            let mut x: Vec<C64> = (0..len).map(|_| complex_gaussian(rng)).collect();
            if len == 1 {
                phases.push(unit_phase(x[0]));
                break;
            }
            let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let head = unit_phase(x[0]);
            // H x = -head·‖x‖ e₁, so diag(R) picks up the phase -head.
            x[0] += head * norm;
            let wn = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for z in &mut x {
                *z /= wn;
            }
            reflectors.push(x);
            phases.push(-head);
        }
        Self {
            dim,
            reflectors,
            phases,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn reflect(u: &[C64], v: &mut [C64]) {
        let proj: C64 = u.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
        let proj = proj * 2.0;
        for (vi, ui) in v.iter_mut().zip(u) {
            *vi -= ui * proj;
        }
    }

    pub fn apply(&self, v: &mut [C64]) {
        debug_assert_eq!(v.len(), self.dim);
        for (vi, p) in v.iter_mut().zip(&self.phases) {
            *vi *= p;
        }
        for (k, u) in self.reflectors.iter().enumerate().rev() {
            Self::reflect(u, &mut v[k..]);
        }
    }

    pub fn apply_adjoint(&self, v: &mut [C64]) {
        debug_assert_eq!(v.len(), self.dim);
        for (k, u) in self.reflectors.iter().enumerate() {
            Self::reflect(u, &mut v[k..]);
        }
        for (vi, p) in v.iter_mut().zip(&self.phases) {
            *vi *= p.conj();
        }
    }

    pub fn to_matrix(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut col = vec![C64::new(0.0, 0.0); self.dim];
        for j in 0..self.dim {
            col.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            col[j] = C64::new(1.0, 0.0);
            self.apply(&mut col);
            for i in 0..self.dim {
                m[(i, j)] = col[i];
            }
        }
        m
    }
}

/// A fixed unitary acting on a block of qubits.
#[derive(Debug, Clone)]
pub enum BlockUnitary {
    Dense(DMatrix<C64>),
    Haar(HaarReflectors),
}

impl BlockUnitary {
    pub fn dim(&self) -> usize {
        match self {
            BlockUnitary::Dense(m) => m.nrows(),
            BlockUnitary::Haar(h) => h.dim(),
        }
    }

    pub fn apply(&self, v: &mut [C64]) {
        match self {
            BlockUnitary::Dense(m) => {
                let out: Vec<C64> = (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
                    .collect();
                v.copy_from_slice(&out);
            }
            BlockUnitary::Haar(h) => h.apply(v),
        }
    }

    pub fn apply_adjoint(&self, v: &mut [C64]) {
        match self {
            BlockUnitary::Dense(m) => {
                let out: Vec<C64> = (0..m.ncols())
                    .map(|i| (0..m.nrows()).map(|j| m[(j, i)].conj() * v[j]).sum())
                    .collect();
                v.copy_from_slice(&out);
            }
            BlockUnitary::Haar(h) => h.apply_adjoint(v),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
        let d = u.nrows();
        let p = u.adjoint() * u;
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((p[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    #[test]
    fn dense_and_factored_are_unitary() {
        let mut rng = RngStream::new(3, 0).rng();
        for dim in [1, 2, 3, 5, 8, 17, 64] {
            assert!(unitarity_defect(&haar_unitary(dim, &mut rng)) < 1e-10);
            let h = HaarReflectors::sample(dim, &mut rng);
            assert!(unitarity_defect(&h.to_matrix()) < 1e-10);
        }
    }

    #[test]
    fn columns_match_dense_sampler() {
        for dim in [2, 5, 16] {
            let dense = haar_unitary(dim, &mut RngStream::new(9, dim as u64).rng());
            let cols = haar_columns(dim, 2, &mut RngStream::new(9, dim as u64).rng());
            for (j, col) in cols.iter().enumerate() {
                for (i, z) in col.iter().enumerate() {
                    assert!((z - dense[(i, j)]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn dim_one_is_a_phase() {
        let mut rng = RngStream::new(4, 0).rng();
        let u = haar_unitary(1, &mut rng);
        assert!((u[(0, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn adjoint_inverts() {
        let mut rng = RngStream::new(5, 0).rng();
        let h = BlockUnitary::Haar(HaarReflectors::sample(6, &mut rng));
        let d = BlockUnitary::Dense(haar_unitary(6, &mut rng));
        let v0: Vec<C64> = (0..6).map(|i| C64::new(i as f64, 1.0 - i as f64)).collect();
        for u in [h, d] {
            let mut v = v0.clone();
            u.apply(&mut v);
            u.apply_adjoint(&mut v);
            for (a, b) in v.iter().zip(&v0) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }
}
