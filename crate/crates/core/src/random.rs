//! Seeded sampling of states and group elements.
//!
//! Every sampler draws from a ChaCha8 stream, so a fixed seed reproduces the
//! same sequence on every platform.

use crate::linalg::{c, partial_trace_first, CMatrix, CVector, RMatrix, I};
use crate::states::DensityMatrix;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    pub fn complex_normal(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        c(s * self.normal(), s * self.normal())
    }

    fn ginibre(&mut self, rows: usize, cols: usize) -> CMatrix {
        let mut m = CMatrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = self.complex_normal();
            }
        }
        m
    }

    /// Haar-distributed element of U(d).
    pub fn unitary(&mut self, d: usize) -> CMatrix {
        let (q, r) = self.ginibre(d, d).qr().unpack();
        let mut q = q;
        for j in 0..d {
            let rjj = r[(j, j)];
            let phase = if rjj.norm() > 0.0 {
                rjj / rjj.norm()
            } else {
                c(1.0, 0.0)
            };
            for i in 0..d {
                q[(i, j)] *= phase;
            }
        }
        q
    }

    /// Haar-distributed element of SU(d).
    pub fn special_unitary(&mut self, d: usize) -> CMatrix {
        let u = self.unitary(d);
        let det = u.determinant();
        let fix = Complex64::from_polar(1.0, -det.arg() / d as f64);
        u * fix
    }

    /// Haar-distributed element of SO(d) as a complex matrix.
    pub fn special_orthogonal(&mut self, d: usize) -> CMatrix {
        let g = RMatrix::from_fn(d, d, |_, _| self.normal());
        let (q, r) = g.qr().unpack();
        let mut q = q;
        for j in 0..d {
            if r[(j, j)] < 0.0 {
                for i in 0..d {
                    q[(i, j)] = -q[(i, j)];
                }
            }
        }
        if q.determinant() < 0.0 {
            for i in 0..d {
                q[(i, 0)] = -q[(i, 0)];
            }
        }
        q.map(|x| c(x, 0.0))
    }

    /// Unit real 4-vector (U₀, U₁, U₂, U₃) describing U₀1 + iΣU_kσ_k ∈ SU(2).
    pub fn su2_coefficients(&mut self) -> [f64; 4] {
        let mut v = [self.normal(), self.normal(), self.normal(), self.normal()];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= n);
        v
    }

    /// Random anti-Hermitian matrix i H with H drawn from the Gaussian unitary ensemble.
    pub fn anti_hermitian(&mut self, d: usize) -> CMatrix {
        let g = self.ginibre(d, d);
        let h = (&g + g.adjoint()) * c(0.5, 0.0);
        h * I
    }

    pub fn pure_vector(&mut self, dim: usize) -> CVector {
        let v = CVector::from_iterator(dim, (0..dim).map(|_| self.complex_normal()));
        let n = v.norm();
        v / c(n, 0.0)
    }

    pub fn pure_state(&mut self, d_a: usize, d_b: usize) -> DensityMatrix {
        let psi = self.pure_vector(d_a * d_b);
        DensityMatrix::from_pure(&psi, d_a, d_b).expect("normalized by construction")
    }

    /// Full-rank mixed state: partial trace of a random pure state on the
    /// system and an equally large environment.
    pub fn mixed_state(&mut self, d_a: usize, d_b: usize) -> DensityMatrix {
        let rho = self.mixed_matrix(d_a * d_b);
        DensityMatrix::new(rho, d_a, d_b).expect("valid by construction")
    }

    fn mixed_matrix(&mut self, dim: usize) -> CMatrix {
        let psi = self.pure_vector(dim * dim);
        let full = &psi * psi.adjoint();
        // environment first, system second
        partial_trace_first(&full, dim, dim)
    }

    /// ρ^A ⊗ ρ^B with independent full-rank marginals.
    pub fn product_state(&mut self, d_a: usize, d_b: usize) -> DensityMatrix {
        let ra = self.mixed_matrix(d_a);
        let rb = self.mixed_matrix(d_b);
        DensityMatrix::new(ra.kronecker(&rb), d_a, d_b).expect("valid by construction")
    }

    /// Mixed two-rebit state: real symmetric, positive, unit trace.
    pub fn rebit_state(&mut self) -> DensityMatrix {
        let g = RMatrix::from_fn(4, 6, |_, _| self.normal());
        let rho = &g * g.transpose();
        let tr = rho.trace();
        DensityMatrix::new((rho / tr).map(|x| c(x, 0.0)), 2, 2).expect("valid by construction")
    }

    /// Pure two-rebit state with real amplitudes.
    pub fn pure_rebit_vector(&mut self) -> CVector {
        let v = DVector::from_fn(4, |_, _| self.normal());
        let n = v.norm();
        v.map(|x| c(x / n, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::unitarity_residual;

    #[test]
    fn samplers_are_reproducible() {
        let mut a = Sampler::new(42);
        let mut b = Sampler::new(42);
        assert_eq!(a.unitary(3), b.unitary(3));
        assert_eq!(a.su2_coefficients(), b.su2_coefficients());
    }

    #[test]
    fn group_samples_have_their_defining_properties() {
        let mut s = Sampler::new(1);
        for d in 2..=4 {
            assert!(unitarity_residual(&s.unitary(d)) < 1e-12);
            let su = s.special_unitary(d);
            assert!(unitarity_residual(&su) < 1e-12);
            assert!((su.determinant() - 1.0).norm() < 1e-12);
            let so = s.special_orthogonal(d);
            assert!(unitarity_residual(&so) < 1e-12);
            assert!(so.iter().all(|z| z.im == 0.0));
            assert!((so.determinant() - 1.0).norm() < 1e-12);
        }
    }
}
