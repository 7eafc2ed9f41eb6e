//! Generator bases of U(D), their structure constants, and the expansion of
//! unitaries in those bases.
//!
//! Generators follow the generalized Gell-Mann construction. Index 0 is the
//! identity; the remaining D² − 1 generators are traceless Hermitian with
//! Tr(χ_j χ_k) = 2 δ_jk, ordered as
//!
//! 1. symmetric off-diagonal pairs `E_jk + E_kj` for j < k,
//! 2. antisymmetric pairs `-i E_jk + i E_kj` for j < k,
//! 3. diagonal generators `sqrt(2/(l(l+1))) diag(1, …, 1, -l, 0, …)`,
//!
//! each block in lexicographic order. For D = 2 this yields 1, σ₁, σ₂, σ₃.

use crate::error::{HolonomyError, Result};
use crate::linalg::{
    c, max_abs, trace_of_product, unitarity_residual, CMatrix, CVector, RMatrix, I,
};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

const COMPOSED_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    Identity,
    Symmetric,
    Antisymmetric,
    Diagonal,
}

/// Dense rank-3 real tensor over generator indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<f64>,
}

impl Tensor3 {
    fn zeros(n: usize) -> Self {
        Tensor3 {
            n,
            data: vec![0.0; n * n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize, l: usize) -> f64 {
        self.data[(j * self.n + k) * self.n + l]
    }

    #[inline]
    fn set(&mut self, j: usize, k: usize, l: usize, v: f64) {
        self.data[(j * self.n + k) * self.n + l] = v;
    }
}

/// The D² operators χ_j of U(D) together with their structure constants.
#[derive(Debug, Clone)]
pub struct GeneratorBasis {
    dim: usize,
    generators: Vec<CMatrix>,
    kinds: Vec<GeneratorKind>,
    f: Tensor3,
    d: Tensor3,
}

/// Antisymmetric (f) and symmetric (d) structure constants.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureConstants {
    pub f: Tensor3,
    pub d: Tensor3,
}

/// Builds the generalized Gell-Mann basis for U(D).
pub fn generator_basis(dim: usize) -> Result<GeneratorBasis> {
    GeneratorBasis::new(dim)
}

/// Shared, lazily built basis for dimension `dim`.
pub fn cached_basis(dim: usize) -> Result<Arc<GeneratorBasis>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GeneratorBasis>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(b) = cache.lock().expect("basis cache poisoned").get(&dim) {
        return Ok(Arc::clone(b));
    }
    let built = Arc::new(GeneratorBasis::new(dim)?);
    let mut guard = cache.lock().expect("basis cache poisoned");
    Ok(Arc::clone(guard.entry(dim).or_insert(built)))
}

impl GeneratorBasis {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(HolonomyError::InvalidDimension(dim));
        }
        let mut generators = vec![CMatrix::identity(dim, dim)];
        let mut kinds = vec![GeneratorKind::Identity];
        let zero = || CMatrix::zeros(dim, dim);

        for j in 0..dim {
            for k in (j + 1)..dim {
                let mut m = zero();
                m[(j, k)] = c(1.0, 0.0);
                m[(k, j)] = c(1.0, 0.0);
                generators.push(m);
                kinds.push(GeneratorKind::Symmetric);
            }
        }
        for j in 0..dim {
            for k in (j + 1)..dim {
                let mut m = zero();
                m[(j, k)] = c(0.0, -1.0);
                m[(k, j)] = c(0.0, 1.0);
                generators.push(m);
                kinds.push(GeneratorKind::Antisymmetric);
            }
        }
        for l in 1..dim {
            let scale = (2.0 / (l * (l + 1)) as f64).sqrt();
            let mut m = zero();
            for i in 0..l {
                m[(i, i)] = c(scale, 0.0);
            }
            m[(l, l)] = c(-(l as f64) * scale, 0.0);
            generators.push(m);
            kinds.push(GeneratorKind::Diagonal);
        }

        let mut basis = GeneratorBasis {
            dim,
            generators,
            kinds,
            f: Tensor3::zeros(dim * dim),
            d: Tensor3::zeros(dim * dim),
        };
        let sc = structure_constants(&basis);
        basis.f = sc.f;
        basis.d = sc.d;
        Ok(basis)
    }

    /// Matrix dimension D.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of generators, D².
    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generator(&self, j: usize) -> &CMatrix {
        &self.generators[j]
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    pub fn kind(&self, j: usize) -> GeneratorKind {
        self.kinds[j]
    }

    /// Indices of the imaginary antisymmetric generators; i·χ_j for these span so(D).
    pub fn antisymmetric_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| self.kinds[j] == GeneratorKind::Antisymmetric)
            .collect()
    }

    pub fn f(&self, j: usize, k: usize, l: usize) -> f64 {
        self.f.get(j, k, l)
    }

    pub fn d(&self, j: usize, k: usize, l: usize) -> f64 {
        self.d.get(j, k, l)
    }

    pub fn structure(&self) -> StructureConstants {
        StructureConstants {
            f: self.f.clone(),
            d: self.d.clone(),
        }
    }

    /// Normalization [δ_0j (D − 2) + 2] = Tr(χ_j χ_j).
    #[inline]
    pub fn norm(&self, j: usize) -> f64 {
        if j == 0 {
            self.dim as f64
        } else {
            2.0
        }
    }

    /// Coefficients m_j = Tr(M χ_j) / Tr(χ_j χ_j) of an arbitrary D×D matrix.
    pub fn coefficients(&self, m: &CMatrix) -> CVector {
        CVector::from_iterator(
            self.len(),
            self.generators
                .iter()
                .enumerate()
                .map(|(j, g)| trace_of_product(m, g) / self.norm(j)),
        )
    }

    /// Σ_j m_j χ_j.
    pub fn reconstruct(&self, coeffs: &CVector) -> CMatrix {
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for (j, g) in self.generators.iter().enumerate() {
            if coeffs[j] != Complex64::new(0.0, 0.0) {
                out += g * coeffs[j];
            }
        }
        out
    }

    /// exp(i Σ_j θ_j χ_j) over all D² generators.
    pub fn exp_i(&self, theta: &[f64]) -> CMatrix {
        crate::linalg::expi_hermitian(&self.hermitian_combination(theta))
    }

    /// Σ_j θ_j χ_j for real θ.
    pub fn hermitian_combination(&self, theta: &[f64]) -> CMatrix {
        let mut h = CMatrix::zeros(self.dim, self.dim);
        for (g, &t) in self.generators.iter().zip(theta) {
            if t != 0.0 {
                h += g * c(t, 0.0);
            }
        }
        h
    }

    /// Real coefficients θ_j of an anti-Hermitian X = i Σ θ_j χ_j.
    pub fn anti_hermitian_coordinates(&self, x: &CMatrix) -> Vec<f64> {
        self.coefficients(x).iter().map(|z| z.im).collect()
    }

    /// Largest violation of the defining identities: Hermiticity, tracelessness,
    /// orthogonality and the (anti)commutator expansions.
    pub fn identity_residual(&self) -> f64 {
        let n = self.len();
        let dim = self.dim;
        let mut worst: f64 = 0.0;
        for j in 1..n {
            let g = &self.generators[j];
            worst = worst.max(max_abs(&(g - g.adjoint())));
            worst = worst.max(g.trace().norm());
        }
        for j in 1..n {
            for k in 1..n {
                let expected = if j == k { 2.0 } else { 0.0 };
                worst = worst.max(
                    (trace_of_product(&self.generators[j], &self.generators[k]) - expected).norm(),
                );
            }
        }
        for k in 1..n {
            for l in 1..n {
                let a = &self.generators[k];
                let b = &self.generators[l];
                let mut comm = CMatrix::zeros(dim, dim);
                let mut anti = CMatrix::identity(dim, dim)
                    * c(if k == l { 4.0 / dim as f64 } else { 0.0 }, 0.0);
                for m in 1..n {
                    comm += &self.generators[m] * (I * 2.0 * self.f(k, l, m));
                    anti += &self.generators[m] * c(2.0 * self.d(k, l, m), 0.0);
                }
                worst = worst.max(max_abs(&(a * b - b * a - comm)));
                worst = worst.max(max_abs(&(a * b + b * a - anti)));
            }
        }
        worst
    }
}

/// Structure constants from the trace formulas
/// f_klm = Tr([χ_k, χ_l] χ_m) / 4i and d_klm = Tr({χ_k, χ_l} χ_m) / 4,
/// with every entry carrying a zero index set to 0.
pub fn structure_constants(basis: &GeneratorBasis) -> StructureConstants {
    let n = basis.len();
    let mut f = Tensor3::zeros(n);
    let mut d = Tensor3::zeros(n);
    let gens = basis.generators();
    for k in 1..n {
        for l in k..n {
            let prod_kl = &gens[k] * &gens[l];
            let prod_lk = &gens[l] * &gens[k];
            let comm = &prod_kl - &prod_lk;
            let anti = &prod_kl + &prod_lk;
            for (m, gm) in gens.iter().enumerate().take(n).skip(1) {
                let fv = (trace_of_product(&comm, gm) / (I * 4.0)).re;
                let dv = trace_of_product(&anti, gm).re / 4.0;
                let fv = if fv.abs() < 1e-15 { 0.0 } else { fv };
                let dv = if dv.abs() < 1e-15 { 0.0 } else { dv };
                f.set(k, l, m, fv);
                f.set(l, k, m, -fv);
                d.set(k, l, m, dv);
                d.set(l, k, m, dv);
            }
        }
    }
    StructureConstants { f, d }
}

/// Complex expansion coefficients U_j of a unitary, U = Σ_j U_j χ_j.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryCoefficients {
    dim: usize,
    coeffs: CVector,
}

impl UnitaryCoefficients {
    /// Wraps a coefficient vector after checking the unitarity constraints.
    pub fn new(coeffs: CVector, basis: &GeneratorBasis) -> Result<Self> {
        if coeffs.len() != basis.len() {
            return Err(HolonomyError::DimensionMismatch {
                expected: basis.len(),
                found: coeffs.len(),
            });
        }
        let out = UnitaryCoefficients {
            dim: basis.dim(),
            coeffs,
        };
        let (norm_res, cross_res) = out.constraint_residuals(basis);
        let worst = norm_res.max(cross_res);
        if worst > COMPOSED_TOL {
            return Err(HolonomyError::ConstraintViolation {
                what: "unitarity constraints",
                residual: worst,
            });
        }
        Ok(out)
    }

    pub(crate) fn from_trusted(coeffs: CVector, dim: usize) -> Self {
        UnitaryCoefficients { dim, coeffs }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_vector(&self) -> &CVector {
        &self.coeffs
    }

    pub fn get(&self, j: usize) -> Complex64 {
        self.coeffs[j]
    }

    pub fn to_matrix(&self, basis: &GeneratorBasis) -> CMatrix {
        basis.reconstruct(&self.coeffs)
    }

    /// Residuals of the normalization constraint
    /// |U_0|² + (2/D) Σ_{j≥1} |U_j|² = 1 and of the cross constraints
    /// Σ_{j,k} U_j U_k* [d_jkl + i f_jkl + δ_j0 δ_kl + δ_k0 δ_jl] = 0 (max over l).
    pub fn constraint_residuals(&self, basis: &GeneratorBasis) -> (f64, f64) {
        let n = basis.len();
        let u = &self.coeffs;
        let dim = basis.dim() as f64;
        let norm = u[0].norm_sqr() + (2.0 / dim) * (1..n).map(|j| u[j].norm_sqr()).sum::<f64>();
        let mut cross: f64 = 0.0;
        for l in 1..n {
            let mut acc = u[0] * u[l].conj() + u[l] * u[0].conj();
            for j in 1..n {
                for k in 1..n {
                    let t = c(basis.d(j, k, l), basis.f(j, k, l));
                    if t != Complex64::new(0.0, 0.0) {
                        acc += u[j] * u[k].conj() * t;
                    }
                }
            }
            cross = cross.max(acc.norm());
        }
        ((norm - 1.0).abs(), cross)
    }
}

/// U_j = Tr(U χ_j) / [δ_0j (D − 2) + 2] for a unitary U.
pub fn expand_unitary(u: &CMatrix, basis: &GeneratorBasis) -> Result<UnitaryCoefficients> {
    check_unitary(u, basis)?;
    Ok(UnitaryCoefficients {
        dim: basis.dim(),
        coeffs: basis.coefficients(u),
    })
}

/// Orthogonal matrix R_jk = Tr(U χ_k U† χ_j) / [(D − 2) δ_j0 + 2] describing
/// S ↦ R S for a unitary acting on the first subsystem.
pub fn adjoint_rotation(u: &CMatrix, basis: &GeneratorBasis) -> Result<RMatrix> {
    check_unitary(u, basis)?;
    Ok(adjoint_rotation_unchecked(u, basis))
}

pub(crate) fn adjoint_rotation_unchecked(u: &CMatrix, basis: &GeneratorBasis) -> RMatrix {
    let n = basis.len();
    let ud = u.adjoint();
    let conj: Vec<CMatrix> = basis.generators().iter().map(|g| u * g * &ud).collect();
    RMatrix::from_fn(n, n, |j, k| {
        trace_of_product(&conj[k], basis.generator(j)).re / basis.norm(j)
    })
}

fn check_unitary(u: &CMatrix, basis: &GeneratorBasis) -> Result<()> {
    if u.nrows() != basis.dim() || u.ncols() != basis.dim() {
        return Err(HolonomyError::DimensionMismatch {
            expected: basis.dim(),
            found: u.nrows(),
        });
    }
    let res = unitarity_residual(u);
    if res > COMPOSED_TOL {
        return Err(HolonomyError::ConstraintViolation {
            what: "unitarity",
            residual: res,
        });
    }
    Ok(())
}
