//! Bipartite states as density matrices and as Stokes tensors.
//!
//! The Stokes tensor of a state on A ⊗ B is the real D_A² × D_B² matrix
//! S_jk = Tr(ρ χ_j^A ⊗ χ_k^B). Row 0 holds the Stokes vector of ρ^B,
//! column 0 that of ρ^A, and the j, k ≥ 1 block is the correlation matrix M.

use crate::algebra::{adjoint_rotation, GeneratorBasis};
use crate::error::{HolonomyError, Result};
use crate::linalg::{
    c, hermiticity_residual, kron, partial_trace_first, partial_trace_second, trace_of_product,
    unitarity_residual, CMatrix, CVector, RMatrix,
};
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const HERMITIAN_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const UNPHYSICAL_TOL: f64 = 1e-8;

/// Density matrix on A ⊗ B (A is the slow index).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    d_a: usize,
    d_b: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMatrix, d_a: usize, d_b: usize) -> Result<Self> {
        let n = d_a * d_b;
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(HolonomyError::DimensionMismatch {
                expected: n,
                found: matrix.nrows(),
            });
        }
        let herm = hermiticity_residual(&matrix);
        if herm > HERMITIAN_TOL {
            return Err(HolonomyError::ConstraintViolation {
                what: "Hermiticity",
                residual: herm,
            });
        }
        let tr = (matrix.trace() - 1.0).norm();
        if tr > HERMITIAN_TOL {
            return Err(HolonomyError::ConstraintViolation {
                what: "unit trace",
                residual: tr,
            });
        }
        let out = DensityMatrix { d_a, d_b, matrix };
        let min = out.min_eigenvalue();
        if min < -PSD_TOL {
            return Err(HolonomyError::Unphysical {
                min_eigenvalue: min,
            });
        }
        Ok(out)
    }

    pub(crate) fn from_trusted(matrix: CMatrix, d_a: usize, d_b: usize) -> Self {
        let herm = (&matrix + matrix.adjoint()) * c(0.5, 0.0);
        // long conjugation chains drift off unit trace
        let tr = herm.trace().re;
        DensityMatrix {
            d_a,
            d_b,
            matrix: herm / c(tr, 0.0),
        }
    }

    /// |ψ⟩⟨ψ| for a normalized vector.
    pub fn from_pure(psi: &CVector, d_a: usize, d_b: usize) -> Result<Self> {
        if psi.len() != d_a * d_b {
            return Err(HolonomyError::DimensionMismatch {
                expected: d_a * d_b,
                found: psi.len(),
            });
        }
        let norm = psi.norm();
        if (norm - 1.0).abs() > HERMITIAN_TOL {
            return Err(HolonomyError::ConstraintViolation {
                what: "normalization",
                residual: (norm - 1.0).abs(),
            });
        }
        Ok(DensityMatrix::from_trusted(psi * psi.adjoint(), d_a, d_b))
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// ρ^A = Tr_B ρ.
    pub fn reduced_a(&self) -> CMatrix {
        partial_trace_second(&self.matrix, self.d_a, self.d_b)
    }

    /// ρ^B = Tr_A ρ.
    pub fn reduced_b(&self) -> CMatrix {
        partial_trace_first(&self.matrix, self.d_a, self.d_b)
    }

    pub fn purity(&self) -> f64 {
        trace_of_product(&self.matrix, &self.matrix).re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Dominant eigenvector; the state vector when ρ is pure (up to phase).
    pub fn dominant_vector(&self) -> CVector {
        let eig = self.matrix.clone().symmetric_eigen();
        let (idx, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        eig.eigenvectors.column(idx).into_owned()
    }

    /// Entrywise distance to another state.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        crate::linalg::max_abs(&(&self.matrix - &other.matrix))
    }

    /// (U ⊗ V) ρ (U ⊗ V)† without validation of U, V.
    pub(crate) fn conjugated(&self, u: &CMatrix, v: &CMatrix) -> DensityMatrix {
        let w = kron(u, v);
        DensityMatrix::from_trusted(&w * &self.matrix * w.adjoint(), self.d_a, self.d_b)
    }
}

/// Real D_A² × D_B² Stokes tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct StokesTensor {
    d_a: usize,
    d_b: usize,
    s: RMatrix,
}

impl StokesTensor {
    /// Wraps a raw tensor; requires the right shape and S_00 = 1.
    pub fn from_matrix(s: RMatrix, d_a: usize, d_b: usize) -> Result<Self> {
        if s.nrows() != d_a * d_a || s.ncols() != d_b * d_b {
            return Err(HolonomyError::DimensionMismatch {
                expected: d_a * d_a,
                found: s.nrows(),
            });
        }
        if (s[(0, 0)] - 1.0).abs() > HERMITIAN_TOL {
            return Err(HolonomyError::ConstraintViolation {
                what: "trace normalization S_00 = 1",
                residual: (s[(0, 0)] - 1.0).abs(),
            });
        }
        Ok(StokesTensor { d_a, d_b, s })
    }

    pub fn d_a(&self) -> usize {
        self.d_a
    }

    pub fn d_b(&self) -> usize {
        self.d_b
    }

    pub fn matrix(&self) -> &RMatrix {
        &self.s
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.s[(j, k)]
    }

    /// Stokes vector of ρ^A (column 0).
    pub fn local_a(&self) -> Vec<f64> {
        self.s.column(0).iter().copied().collect()
    }

    /// Stokes vector of ρ^B (row 0).
    pub fn local_b(&self) -> Vec<f64> {
        self.s.row(0).iter().copied().collect()
    }

    pub fn correlation(&self) -> CorrelationMatrix {
        CorrelationMatrix {
            m: self
                .s
                .view((1, 1), (self.s.nrows() - 1, self.s.ncols() - 1))
                .into_owned(),
        }
    }
}

/// The j, k ≥ 1 block of a Stokes tensor. Only obtainable from a
/// [`StokesTensor`], so the two never disagree.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    m: RMatrix,
}

impl CorrelationMatrix {
    /// Block as a 0-based matrix: entry (j−1, k−1) is M_jk.
    pub fn matrix(&self) -> &RMatrix {
        &self.m
    }

    /// M_jk with generator indices j, k ≥ 1.
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.m[(j - 1, k - 1)]
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    pub fn is_two_qubit(&self) -> bool {
        self.m.nrows() == 3 && self.m.ncols() == 3
    }
}

fn check_basis(basis: &GeneratorBasis, dim: usize) -> Result<()> {
    if basis.dim() != dim {
        return Err(HolonomyError::DimensionMismatch {
            expected: dim,
            found: basis.dim(),
        });
    }
    Ok(())
}

/// S_jk = Tr(ρ χ_j^A ⊗ χ_k^B).
pub fn density_to_stokes(
    rho: &DensityMatrix,
    basis_a: &GeneratorBasis,
    basis_b: &GeneratorBasis,
) -> Result<StokesTensor> {
    check_basis(basis_a, rho.d_a)?;
    check_basis(basis_b, rho.d_b)?;
    let (d_a, d_b) = (rho.d_a, rho.d_b);
    let m = &rho.matrix;
    let mut s = RMatrix::zeros(basis_a.len(), basis_b.len());
    let mut worst_im: f64 = 0.0;
    for (j, ga) in basis_a.generators().iter().enumerate() {
        // Tr_A[(χ_j ⊗ 1) ρ]
        let contracted = CMatrix::from_fn(d_b, d_b, |k, l| {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..d_a {
                for ip in 0..d_a {
                    let g = ga[(i, ip)];
                    if g != Complex64::new(0.0, 0.0) {
                        acc += g * m[(ip * d_b + k, i * d_b + l)];
                    }
                }
            }
            acc
        });
        for (k, gb) in basis_b.generators().iter().enumerate() {
            let z = trace_of_product(&contracted, gb);
            worst_im = worst_im.max(z.im.abs());
            s[(j, k)] = z.re;
        }
    }
    if worst_im > 1e-10 {
        return Err(HolonomyError::Inconsistent {
            what: "imaginary Stokes component",
            residual: worst_im,
        });
    }
    StokesTensor::from_matrix(s, d_a, d_b)
}

/// ρ = Σ_jk S_jk χ_j^A ⊗ χ_k^B / ([δ_0j(D_A−2)+2][δ_0k(D_B−2)+2]).
pub fn stokes_to_density(
    s: &StokesTensor,
    basis_a: &GeneratorBasis,
    basis_b: &GeneratorBasis,
) -> Result<DensityMatrix> {
    check_basis(basis_a, s.d_a)?;
    check_basis(basis_b, s.d_b)?;
    let mut rho = CMatrix::zeros(s.d_a * s.d_b, s.d_a * s.d_b);
    for j in 0..basis_a.len() {
        for k in 0..basis_b.len() {
            let w = s.s[(j, k)];
            if w == 0.0 {
                continue;
            }
            let scale = w / (basis_a.norm(j) * basis_b.norm(k));
            rho += kron(basis_a.generator(j), basis_b.generator(k)) * c(scale, 0.0);
        }
    }
    let out = DensityMatrix::from_trusted(rho, s.d_a, s.d_b);
    let min = out.min_eigenvalue();
    if min < -UNPHYSICAL_TOL {
        return Err(HolonomyError::Unphysical {
            min_eigenvalue: min,
        });
    }
    Ok(out)
}

/// a|00⟩ + b|11⟩ as a vector.
pub fn schmidt_vector(a: f64, b: f64) -> Result<CVector> {
    if a < 0.0 || b < 0.0 {
        return Err(HolonomyError::OutOfRange {
            what: "Schmidt coefficient",
            value: a.min(b),
        });
    }
    let norm = a * a + b * b;
    if (norm - 1.0).abs() > HERMITIAN_TOL {
        return Err(HolonomyError::ConstraintViolation {
            what: "a² + b² = 1",
            residual: (norm - 1.0).abs(),
        });
    }
    Ok(CVector::from_vec(vec![
        c(a, 0.0),
        c(0.0, 0.0),
        c(0.0, 0.0),
        c(b, 0.0),
    ]))
}

/// Pure two-qubit state a|00⟩ + b|11⟩ with a, b ≥ 0 and a² + b² = 1.
pub fn schmidt_state(a: f64, b: f64) -> Result<DensityMatrix> {
    DensityMatrix::from_pure(&schmidt_vector(a, b)?, 2, 2)
}

/// (|00⟩ + |11⟩)/√2.
pub fn bell_vector() -> CVector {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_vec(vec![c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)])
}

/// p|ψ⟩⟨ψ| + (1 − p)/4 · 1 for a maximally entangled two-qubit ψ.
pub fn werner_state(p: f64, psi: &CVector) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(HolonomyError::OutOfRange {
            what: "Werner mixing parameter p",
            value: p,
        });
    }
    let pure = DensityMatrix::from_pure(psi, 2, 2)?;
    let q = crate::algebra::generator_basis(2)?;
    let abs_det = abs_det_correlation(&density_to_stokes(&pure, &q, &q)?)?;
    if (abs_det - 1.0).abs() > 1e-10 {
        return Err(HolonomyError::NotMaximallyEntangled { abs_det });
    }
    let rho = pure.matrix * c(p, 0.0) + CMatrix::identity(4, 4) * c((1.0 - p) / 4.0, 0.0);
    Ok(DensityMatrix::from_trusted(rho, 2, 2))
}

/// Concurrence 2 s₁ s₂ of a pure two-qubit state from its Schmidt coefficients.
pub fn concurrence_pure(rho: &DensityMatrix) -> Result<f64> {
    if rho.d_a != 2 || rho.d_b != 2 {
        return Err(HolonomyError::DimensionMismatch {
            expected: 2,
            found: if rho.d_a != 2 { rho.d_a } else { rho.d_b },
        });
    }
    let purity = rho.purity();
    if (purity - 1.0).abs() > 1e-10 {
        return Err(HolonomyError::NotPure { purity });
    }
    Ok(concurrence_of_vector(&rho.dominant_vector()))
}

/// Concurrence of a two-qubit vector (α, β, γ, δ): 2|αδ − βγ|.
pub fn concurrence_of_vector(psi: &CVector) -> f64 {
    2.0 * (psi[0] * psi[3] - psi[1] * psi[2]).norm()
}

/// |det M| of a two-qubit Stokes tensor.
pub fn abs_det_correlation(s: &StokesTensor) -> Result<f64> {
    if s.d_a != 2 || s.d_b != 2 {
        return Err(HolonomyError::DimensionMismatch {
            expected: 2,
            found: if s.d_a != 2 { s.d_a } else { s.d_b },
        });
    }
    Ok(s.correlation().determinant().abs())
}

/// Rebit concurrence C_R = M_22 = Tr(σ₂ ⊗ σ₂ ρ).
pub fn rebit_concurrence(s: &StokesTensor) -> Result<f64> {
    if s.d_a != 2 || s.d_b != 2 {
        return Err(HolonomyError::DimensionMismatch {
            expected: 2,
            found: if s.d_a != 2 { s.d_a } else { s.d_b },
        });
    }
    Ok(s.get(2, 2))
}

/// (U ⊗ V) ρ (U ⊗ V)†.
pub fn apply_local(rho: &DensityMatrix, u: &CMatrix, v: &CMatrix) -> Result<DensityMatrix> {
    for (op, d) in [(u, rho.d_a), (v, rho.d_b)] {
        if op.nrows() != d || op.ncols() != d {
            return Err(HolonomyError::DimensionMismatch {
                expected: d,
                found: op.nrows(),
            });
        }
        let res = unitarity_residual(op);
        if res > 1e-10 {
            return Err(HolonomyError::ConstraintViolation {
                what: "unitarity",
                residual: res,
            });
        }
    }
    Ok(rho.conjugated(u, v))
}

/// Induced action on the Stokes tensor: S ↦ R(U) S R(V)ᵀ.
pub fn rotate_stokes(
    s: &StokesTensor,
    u: &CMatrix,
    v: &CMatrix,
    basis_a: &GeneratorBasis,
    basis_b: &GeneratorBasis,
) -> Result<StokesTensor> {
    let ra = adjoint_rotation(u, basis_a)?;
    let rb = adjoint_rotation(v, basis_b)?;
    Ok(StokesTensor {
        d_a: s.d_a,
        d_b: s.d_b,
        s: ra * &s.s * rb.transpose(),
    })
}

pub(crate) fn complex_rows(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub(crate) fn matrix_from_rows(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMatrix, String> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != m) {
        return Err("ragged matrix rows".into());
    }
    Ok(CMatrix::from_fn(n, m, |i, j| {
        c(rows[i][j][0], rows[i][j][1])
    }))
}

/// Serde adapter writing a complex matrix as row-major `[re, im]` pairs.
pub mod matrix_serde {
    use super::{complex_rows, matrix_from_rows};
    use crate::linalg::CMatrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, serializer: S) -> Result<S::Ok, S::Error> {
        complex_rows(m).serialize(serializer)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<CMatrix, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        matrix_from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    d_a: usize,
    d_b: usize,
    matrix: Vec<Vec<[f64; 2]>>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        DensityJson {
            d_a: self.d_a,
            d_b: self.d_b,
            matrix: complex_rows(&self.matrix),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = DensityJson::deserialize(deserializer)?;
        let m = matrix_from_rows(&raw.matrix).map_err(serde::de::Error::custom)?;
        DensityMatrix::new(m, raw.d_a, raw.d_b).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct StokesJson {
    stokes: Vec<Vec<f64>>,
}

impl Serialize for StokesTensor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let rows = (0..self.s.nrows())
            .map(|i| self.s.row(i).iter().copied().collect())
            .collect();
        StokesJson { stokes: rows }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for StokesTensor {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = StokesJson::deserialize(deserializer)?;
        let rows = raw.stokes.len();
        let cols = raw.stokes.first().map_or(0, |r| r.len());
        if raw.stokes.iter().any(|r| r.len() != cols) {
            return Err(serde::de::Error::custom("ragged Stokes rows"));
        }
        let side = |n: usize| {
            let d = (n as f64).sqrt().round() as usize;
            (d * d == n && d >= 2).then_some(d)
        };
        let (d_a, d_b) = match (side(rows), side(cols)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(serde::de::Error::custom(
                    "Stokes tensor sides must be squares D² with D >= 2",
                ))
            }
        };
        let s = RMatrix::from_fn(rows, cols, |i, j| raw.stokes[i][j]);
        StokesTensor::from_matrix(s, d_a, d_b).map_err(serde::de::Error::custom)
    }
}


#[cfg(test)]
mod properties {
    use crate::algebra::{cached_basis, GeneratorBasis};
    use crate::random::Sampler;
    use crate::states::*;
    use proptest::prelude::*;

    fn stokes(rho: &DensityMatrix) -> StokesTensor {
        let a = cached_basis(rho.d_a()).unwrap();
        let b = cached_basis(rho.d_b()).unwrap();
        density_to_stokes(rho, &a, &b).unwrap()
    }

    fn basis(d: usize) -> std::sync::Arc<GeneratorBasis> {
        cached_basis(d).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn correlation_determinant_is_locally_invariant(seed in any::<u64>()) {
            let mut s = Sampler::new(seed);
            let rho = s.mixed_state(2, 2);
            let moved = apply_local(&rho, &s.unitary(2), &s.unitary(2)).unwrap();
            let d0 = stokes(&rho).correlation().determinant().abs();
            let d1 = stokes(&moved).correlation().determinant().abs();
            prop_assert!((d0 - d1).abs() < 1e-9);
        }
        #[test]
        fn stokes_margins_are_reduced_state_vectors(seed in any::<u64>(), da in 2usize..=3, db in 2usize..=3) {
            let mut s = Sampler::new(seed);
            let rho = s.mixed_state(da, db);
            let st = stokes(&rho);
            let (ra, rb) = (rho.reduced_a(), rho.reduced_b());
            for j in 0..da * da {
                let expected = (&ra * basis(da).generator(j)).trace().re;
                prop_assert!((st.get(j, 0) - expected).abs() < 1e-12);
            }
            for k in 0..db * db {
                let expected = (&rb * basis(db).generator(k)).trace().re;
                prop_assert!((st.get(0, k) - expected).abs() < 1e-12);
            }
        }
    }
}
