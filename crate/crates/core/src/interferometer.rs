//! Coincidence intensity of the two-loop interferometer and its maximization
//! over the unitary acting on the second subsystem.
//!
//! With K = Tr_A[ρ (U ⊗ 1)] the intensity reads I = 1/2 + 1/2 Re Tr(V K), so
//! every maximization below works on the D_B × D_B matrix K.

use crate::algebra::{
    cached_basis, expand_unitary, GeneratorBasis, GeneratorKind, UnitaryCoefficients,
};
use crate::error::{HolonomyError, Result};
use crate::linalg::{
    c, expi_hermitian, identity, kron, least_squares, max_abs, row_major_parts, svd,
    trace_of_product, unitarity_residual, CMatrix, CVector, RMatrix, Svd,
};
use crate::random::Sampler;
use crate::states::{density_to_stokes, DensityMatrix, StokesTensor};
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

const ZERO_INTERFERENCE_TOL: f64 = 1e-12;
const DEGENERATE_INTENSITY_TOL: f64 = 1e-9;
const DEGENERATE_DISTANCE: f64 = 1e-5;
const PRECONDITION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityResult {
    pub value: f64,
    /// (1/2) Σ_jk Re(U_j V_k) S_jk, so that value = 1/2 + interference_term.
    pub interference_term: f64,
    /// |matrix form − Stokes form|.
    pub formula_delta: f64,
}

/// Group the second-subsystem unitary is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Group {
    #[serde(rename = "u")]
    Unitary,
    #[serde(rename = "su")]
    Special,
    #[serde(rename = "so")]
    Orthogonal,
}

impl Group {
    /// Generator indices spanning the Lie algebra of the group.
    pub fn generator_indices(self, basis: &GeneratorBasis) -> Vec<usize> {
        match self {
            Group::Unitary => (0..basis.len()).collect(),
            Group::Special => (1..basis.len()).collect(),
            Group::Orthogonal => (0..basis.len())
                .filter(|&j| basis.kind(j) == GeneratorKind::Antisymmetric)
                .collect(),
        }
    }

    pub fn sample(self, sampler: &mut Sampler, d: usize) -> CMatrix {
        match self {
            Group::Unitary => sampler.unitary(d),
            Group::Special => sampler.special_unitary(d),
            Group::Orthogonal => sampler.special_orthogonal(d),
        }
    }

    /// Membership test with tolerance `tol`.
    pub fn contains(self, v: &CMatrix, tol: f64) -> bool {
        if unitarity_residual(v) > tol {
            return false;
        }
        match self {
            Group::Unitary => true,
            Group::Special => (v.determinant() - 1.0).norm() <= tol,
            Group::Orthogonal => {
                v.iter().all(|z| z.im.abs() <= tol) && (v.determinant() - 1.0).norm() <= tol
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaxStatus {
    UniqueMax,
    Degenerate,
    ZeroInterference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximizationOutcome {
    pub v: CMatrix,
    pub coefficients: UnitaryCoefficients,
    pub intensity: f64,
    pub lagrange_lambda: f64,
    pub lagrange_mu: Vec<f64>,
    /// Max-norm violation of the stationarity conditions for the group used.
    pub residual: f64,
    pub status: MaxStatus,
}

fn check_operator(m: &CMatrix, d: usize) -> Result<()> {
    if m.nrows() != d || m.ncols() != d {
        return Err(HolonomyError::DimensionMismatch {
            expected: d,
            found: if m.nrows() != d { m.nrows() } else { m.ncols() },
        });
    }
    Ok(())
}

/// K = Tr_A[ρ (U ⊗ 1)], the operator with Tr((U ⊗ V) ρ) = Tr(V K).
pub fn effective_operator(rho: &DensityMatrix, u: &CMatrix) -> Result<CMatrix> {
    let (d_a, d_b) = (rho.d_a(), rho.d_b());
    check_operator(u, d_a)?;
    let m = rho.matrix();
    Ok(CMatrix::from_fn(d_b, d_b, |l, k| {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..d_a {
            for j in 0..d_a {
                let uij = u[(i, j)];
                if uij != Complex64::new(0.0, 0.0) {
                    acc += uij * m[(j * d_b + l, i * d_b + k)];
                }
            }
        }
        acc
    }))
}

/// (1/2) Σ_jk Re(U_j V_k) S_jk from expansion coefficients.
pub fn stokes_interference(s: &StokesTensor, u: &CVector, v: &CVector) -> f64 {
    let sm = s.matrix();
    let mut acc = 0.0;
    for j in 0..sm.nrows() {
        for k in 0..sm.ncols() {
            acc += (u[j] * v[k]).re * sm[(j, k)];
        }
    }
    0.5 * acc
}

/// Coincidence intensity 1/2 + 1/2 Re Tr((U ⊗ V) ρ), cross-checked against
/// the Stokes-tensor form.
pub fn coincidence_intensity(
    rho: &DensityMatrix,
    u: &CMatrix,
    v: &CMatrix,
) -> Result<IntensityResult> {
    check_operator(u, rho.d_a())?;
    check_operator(v, rho.d_b())?;
    let value = 0.5 + 0.5 * trace_of_product(&kron(u, v), rho.matrix()).re;
    let basis_a = cached_basis(rho.d_a())?;
    let basis_b = cached_basis(rho.d_b())?;
    let s = density_to_stokes(rho, &basis_a, &basis_b)?;
    let term = stokes_interference(&s, &basis_a.coefficients(u), &basis_b.coefficients(v));
    let formula_delta = (value - 0.5 - term).abs();
    debug_assert!(
        formula_delta < 1e-10,
        "intensity forms disagree by {formula_delta}"
    );
    Ok(IntensityResult {
        value,
        interference_term: term,
        formula_delta,
    })
}

// ---------------------------------------------------------------------------
// Lagrange system

/// B_kl = λ[(2/D) δ_kl + (1 − 2/D) δ_k0 δ_l0]
///      + Σ_{j≥1} μ_j (δ_jk δ_l0 + δ_jl δ_0k + d_jlk − i f_jkl).
///
/// `mu` holds μ_1 … μ_{D²−1}.
pub fn lagrange_b_matrix(lambda: f64, mu: &[f64], basis: &GeneratorBasis) -> Result<CMatrix> {
    let n = basis.len();
    if mu.len() != n - 1 {
        return Err(HolonomyError::DimensionMismatch {
            expected: n - 1,
            found: mu.len(),
        });
    }
    let dim = basis.dim() as f64;
    let mut b = CMatrix::zeros(n, n);
    for k in 0..n {
        b[(k, k)] += c(lambda * 2.0 / dim, 0.0);
    }
    b[(0, 0)] += c(lambda * (1.0 - 2.0 / dim), 0.0);
    for (jm, &m) in mu.iter().enumerate() {
        if m == 0.0 {
            continue;
        }
        let j = jm + 1;
        b[(j, 0)] += c(m, 0.0);
        b[(0, j)] += c(m, 0.0);
        for k in 1..n {
            for l in 1..n {
                let t = c(basis.d(j, l, k), -basis.f(j, k, l));
                b[(k, l)] += t * m;
            }
        }
    }
    Ok(b)
}

/// Right-hand side Sᵀ u* of the stationarity system B v = Sᵀ u*.
pub fn stationarity_rhs(s: &StokesTensor, u: &CVector) -> CVector {
    let sm = s.matrix();
    CVector::from_fn(sm.ncols(), |k, _| {
        (0..sm.nrows())
            .map(|j| u[j].conj() * sm[(j, k)])
            .sum::<Complex64>()
    })
}

/// max |B(λ, μ) v − Sᵀ u*|.
pub fn stationarity_residual(
    s: &StokesTensor,
    u: &CVector,
    v: &CVector,
    lambda: f64,
    mu: &[f64],
    basis_b: &GeneratorBasis,
) -> Result<f64> {
    let b = lagrange_b_matrix(lambda, mu, basis_b)?;
    let lhs = b * v;
    let rhs = stationarity_rhs(s, u);
    Ok((lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Least-squares multipliers (λ, μ) for a candidate v and the resulting residual.
pub fn recover_multipliers(
    s: &StokesTensor,
    u: &CVector,
    v: &CVector,
    basis_b: &GeneratorBasis,
) -> Result<(f64, Vec<f64>, f64)> {
    let n = basis_b.len();
    // column p of the linear map (λ, μ) ↦ B(λ, μ) v
    let mut cols: Vec<CVector> = Vec::with_capacity(n);
    let mut unit = vec![0.0; n - 1];
    cols.push(lagrange_b_matrix(1.0, &unit, basis_b)? * v);
    for j in 0..n - 1 {
        unit[j] = 1.0;
        cols.push(lagrange_b_matrix(0.0, &unit, basis_b)? * v);
        unit[j] = 0.0;
    }
    let a = RMatrix::from_fn(2 * n, n, |r, p| {
        if r < n {
            cols[p][r].re
        } else {
            cols[p][r - n].im
        }
    });
    let rhs = stationarity_rhs(s, u);
    let b = DVector::from_fn(2 * n, |r, _| if r < n { rhs[r].re } else { rhs[r - n].im });
    let x = least_squares(&a, &b);
    let lambda = x[0];
    let mu: Vec<f64> = x.iter().skip(1).copied().collect();
    let residual = stationarity_residual(s, u, v, lambda, &mu, basis_b)?;
    Ok((lambda, mu, residual))
}

/// B = λ1 + H for D = 2 together with its closed-form inverse
/// B⁻¹ = (H − λ1) / (μ·μ − λ²).
pub fn b_matrix_qubit(lambda: f64, mu: [f64; 3]) -> Result<(CMatrix, CMatrix)> {
    let basis = cached_basis(2)?;
    let b = lagrange_b_matrix(lambda, &mu, &basis)?;
    let mu2: f64 = mu.iter().map(|x| x * x).sum();
    let det_root = mu2 - lambda * lambda;
    if det_root.abs() < 1e-12 * lambda.abs().max(1.0).powi(2) {
        return Err(HolonomyError::SingularB {
            sigma_min: (lambda.abs() - mu2.sqrt()).abs(),
        });
    }
    let h = &b - identity(4) * c(lambda, 0.0);
    let inv = (h - identity(4) * c(lambda, 0.0)) / c(det_root, 0.0);
    Ok((b, inv))
}

// ---------------------------------------------------------------------------
// General solver

/// Tuning of the multistart ascent.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentOptions {
    pub restarts: usize,
    pub probes: usize,
    pub seed: u64,
    pub gradient_tol: f64,
    pub max_iterations: usize,
    pub parallel: bool,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            restarts: 8,
            probes: 64,
            seed: 0x005e_ed0f_f7a9,
            gradient_tol: 1e-10,
            max_iterations: 2000,
            parallel: true,
        }
    }
}

struct Objective<'a> {
    k: &'a CMatrix,
    gens: Vec<&'a CMatrix>,
}

#[derive(Debug, Clone)]
struct Candidate {
    v: CMatrix,
    value: f64,
    gradient_norm: f64,
}

impl<'a> Objective<'a> {
    fn value(&self, v: &CMatrix) -> f64 {
        trace_of_product(v, self.k).re
    }

    /// g_j = d/dε Re Tr(e^{iεχ_j} V K) at ε = 0.
    fn gradient(&self, vk: &CMatrix) -> Vec<f64> {
        self.gens
            .iter()
            .map(|g| -trace_of_product(g, vk).im)
            .collect()
    }

    /// Hessian of φ ↦ Re Tr(exp(iΣφ_jχ_j) V K) at φ = 0.
    fn hessian(&self, vk: &CMatrix) -> RMatrix {
        let n = self.gens.len();
        let mut h = RMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let anti = self.gens[a] * self.gens[b] + self.gens[b] * self.gens[a];
                let x = -0.5 * trace_of_product(&anti, vk).re;
                h[(a, b)] = x;
                h[(b, a)] = x;
            }
        }
        h
    }

    fn step(&self, v: &CMatrix, phi: &[f64], alpha: f64) -> CMatrix {
        let d = v.nrows();
        let mut h = CMatrix::zeros(d, d);
        for (g, &p) in self.gens.iter().zip(phi) {
            h += *g * c(alpha * p, 0.0);
        }
        expi_hermitian(&h) * v
    }

    /// Ascent direction: the gradient preconditioned by |Hessian|⁻¹ with a
    /// floor on small curvatures, so it is always an ascent direction.
    fn direction(&self, vk: &CMatrix, grad: &[f64]) -> Vec<f64> {
        let neg = -self.hessian(vk);
        let eig = neg.symmetric_eigen();
        let scale = eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
        let floor = (1e-8 * scale).max(1e-14);
        let g = DVector::from_column_slice(grad);
        let proj = eig.eigenvectors.transpose() * &g;
        let scaled = DVector::from_fn(proj.len(), |i, _| {
            proj[i] / eig.eigenvalues[i].abs().max(floor)
        });
        let dir = &eig.eigenvectors * scaled;
        dir.iter().copied().collect()
    }

    fn ascend(&self, start: CMatrix, opts: &AscentOptions) -> Candidate {
        let mut v = start;
        let mut value = self.value(&v);
        let mut gnorm = f64::INFINITY;
        for _ in 0..opts.max_iterations {
            let vk = &v * self.k;
            let grad = self.gradient(&vk);
            gnorm = grad.iter().map(|x| x.abs()).fold(0.0, f64::max);
            if gnorm < opts.gradient_tol {
                // a few full preconditioned steps push V to working precision
                for _ in 0..3 {
                    let vk = &v * self.k;
                    let grad = self.gradient(&vk);
                    let g = grad.iter().map(|x| x.abs()).fold(0.0, f64::max);
                    if g == 0.0 {
                        break;
                    }
                    let trial = self.step(&v, &self.direction(&vk, &grad), 1.0);
                    let tv = self.value(&trial);
                    let tg = self
                        .gradient(&(&trial * self.k))
                        .iter()
                        .map(|x| x.abs())
                        .fold(0.0, f64::max);
                    if tv < value || tg >= g {
                        break;
                    }
                    v = trial;
                    value = tv;
                    gnorm = tg;
                }
                break;
            }
            let dir = self.direction(&vk, &grad);
            let slope: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
            let mut alpha = 1.0;
            let mut accepted = None;
            while alpha > 1e-12 {
                let trial = self.step(&v, &dir, alpha);
                let tv = self.value(&trial);
                if tv >= value + 1e-4 * alpha * slope {
                    accepted = Some((trial, tv));
                    break;
                }
                alpha *= 0.5;
            }
            match accepted {
                Some((nv, nval)) => {
                    v = nv;
                    value = nval;
                }
                // no representable progress left
                None => break,
            }
        }
        Candidate {
            v,
            value,
            gradient_norm: gnorm,
        }
    }
}

fn compare_candidates(a: &Candidate, b: &Candidate) -> Ordering {
    b.value.total_cmp(&a.value).then_with(|| {
        let (pa, pb) = (row_major_parts(&a.v), row_major_parts(&b.v));
        pa.iter()
            .zip(&pb)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
    })
}

fn zero_interference_outcome(
    rho: &DensityMatrix,
    u: &CMatrix,
    basis_b: &GeneratorBasis,
) -> Result<MaximizationOutcome> {
    let v = identity(rho.d_b());
    let intensity = coincidence_intensity(rho, u, &v)?.value;
    Ok(MaximizationOutcome {
        coefficients: UnitaryCoefficients::from_trusted(basis_b.coefficients(&v), rho.d_b()),
        v,
        intensity,
        lagrange_lambda: 0.0,
        lagrange_mu: vec![0.0; basis_b.len() - 1],
        residual: 0.0,
        status: MaxStatus::ZeroInterference,
    })
}

/// Maximizes the coincidence intensity over V in `group` with default options.
pub fn maximize_general(
    rho: &DensityMatrix,
    u: &CMatrix,
    group: Group,
) -> Result<MaximizationOutcome> {
    maximize_general_with(rho, u, group, &AscentOptions::default())
}

/// Multistart Riemannian ascent V ← exp(iΣφ_jχ_j) V over the generators of
/// `group`, followed by a random-probe certificate.
pub fn maximize_general_with(
    rho: &DensityMatrix,
    u: &CMatrix,
    group: Group,
    opts: &AscentOptions,
) -> Result<MaximizationOutcome> {
    let d_b = rho.d_b();
    check_operator(u, rho.d_a())?;
    let basis_b = cached_basis(d_b)?;
    let k = effective_operator(rho, u)?;
    if max_abs(&k) < ZERO_INTERFERENCE_TOL {
        return zero_interference_outcome(rho, u, &basis_b);
    }
    let objective = Objective {
        k: &k,
        gens: group
            .generator_indices(&basis_b)
            .into_iter()
            .map(|j| basis_b.generator(j))
            .collect(),
    };

    let mut sampler = Sampler::new(opts.seed);
    let mut starts = vec![identity(d_b)];
    while starts.len() < opts.restarts.max(1) {
        starts.push(group.sample(&mut sampler, d_b));
    }
    let mut candidates: Vec<Candidate> = if opts.parallel {
        starts
            .into_par_iter()
            .map(|s| objective.ascend(s, opts))
            .collect()
    } else {
        starts
            .into_iter()
            .map(|s| objective.ascend(s, opts))
            .collect()
    };
    candidates.sort_by(compare_candidates);

    let mut probe_sampler = Sampler::new(opts.seed.wrapping_add(1));
    let mut best_probe: Option<(CMatrix, f64)> = None;
    for _ in 0..opts.probes {
        let p = group.sample(&mut probe_sampler, d_b);
        let pv = objective.value(&p);
        if best_probe.as_ref().is_none_or(|(_, b)| pv > *b) {
            best_probe = Some((p, pv));
        }
    }
    if let Some((p, pv)) = best_probe {
        if pv > candidates[0].value {
            log::debug!(
                "probe beat {} restarts; ascending from it",
                candidates.len()
            );
            candidates.push(objective.ascend(p, opts));
            candidates.sort_by(compare_candidates);
        }
    }

    let best = candidates[0].clone();
    log::debug!(
        "ascent best value {:.3e}, gradient {:.3e}",
        best.value,
        best.gradient_norm
    );
    if best.value < ZERO_INTERFERENCE_TOL {
        return zero_interference_outcome(rho, u, &basis_b);
    }
    let degenerate = candidates[1..].iter().any(|cand| {
        (best.value - cand.value).abs() <= DEGENERATE_INTENSITY_TOL
            && (&cand.v - &best.v).norm() > DEGENERATE_DISTANCE
    });

    let mut best = best;
    let mut degenerate = degenerate;
    if group == Group::Unitary {
        if let Some((v, rank_deficient)) = svd_maximizer(&k) {
            best.v = v;
            degenerate = rank_deficient;
        }
    }

    let basis_a = cached_basis(rho.d_a())?;
    let s = density_to_stokes(rho, &basis_a, &basis_b)?;
    let u_coeffs = basis_a.coefficients(u);
    let v_coeffs = basis_b.coefficients(&best.v);
    let (lambda, mu, residual) = match group {
        Group::Unitary => recover_multipliers(&s, &u_coeffs, &v_coeffs, &basis_b)?,
        // restricted groups: Riemannian gradient on the group, λ = Re Tr(V K)
        _ => (best.value, Vec::new(), best.gradient_norm),
    };
    let intensity = coincidence_intensity(rho, u, &best.v)?.value;
    Ok(MaximizationOutcome {
        coefficients: UnitaryCoefficients::from_trusted(v_coeffs, d_b),
        v: best.v,
        intensity,
        lagrange_lambda: lambda,
        lagrange_mu: mu,
        residual,
        status: if degenerate {
            MaxStatus::Degenerate
        } else {
            MaxStatus::UniqueMax
        },
    })
}

const KERNEL_TOL: f64 = 1e-10;

/// U(D) maximizers from K = W Σ Y†: V = Y (1 ⊕ X) W† with X free on the
/// kernel of K. Picks the X that brings V closest to a multiple of the
/// identity. The flag is true when the kernel is nontrivial.
fn svd_maximizer(k: &CMatrix) -> Option<(CMatrix, bool)> {
    let Svd {
        u: w,
        singular_values,
        v_t: y_adj,
    } = svd(k);
    let sigma_max = singular_values.max();
    let (support, kernel): (Vec<usize>, Vec<usize>) =
        (0..k.nrows()).partition(|&i| singular_values[i] > KERNEL_TOL * sigma_max);
    if support.is_empty() {
        return None;
    }
    if kernel.is_empty() {
        return Some((y_adj.adjoint() * w.adjoint(), false));
    }
    let t = &y_adj * &w;
    let t11: Complex64 = support.iter().map(|&i| t[(i, i)]).sum();
    let phase = if t11.norm() > 0.0 {
        Complex64::from_polar(1.0, -t11.arg())
    } else {
        Complex64::new(1.0, 0.0)
    };
    let t22 = CMatrix::from_fn(kernel.len(), kernel.len(), |a, b| t[(kernel[a], kernel[b])]);
    let polar = svd(&t22);
    let x = polar.u * polar.v_t * phase;
    let mut z = CMatrix::zeros(k.nrows(), k.nrows());
    for &i in &support {
        z[(i, i)] = Complex64::new(1.0, 0.0);
    }
    for (a, &i) in kernel.iter().enumerate() {
        for (b, &j) in kernel.iter().enumerate() {
            z[(i, j)] = x[(a, b)];
        }
    }
    Some((y_adj.adjoint() * z * w.adjoint(), true))
}

// ---------------------------------------------------------------------------
// Closed forms

fn qubit_pair(rho: &DensityMatrix) -> Result<()> {
    if rho.d_a() != 2 || rho.d_b() != 2 {
        return Err(HolonomyError::Precondition(format!(
            "two-qubit state required, got {}x{}",
            rho.d_a(),
            rho.d_b()
        )));
    }
    Ok(())
}

/// Pure a|00⟩ + b|11⟩ with a, b ≥ 0 and U = U₁σ₁ + U₂σ₂: V = U₁*σ₁ − U₂*σ₂.
pub fn maximize_qudit_qubit_special(
    rho: &DensityMatrix,
    u: &CMatrix,
) -> Result<MaximizationOutcome> {
    qubit_pair(rho)?;
    let m = rho.matrix();
    let a2 = m[(0, 0)].re;
    let b2 = m[(3, 3)].re;
    let cross = m[(0, 3)];
    let mut stray: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            let allowed = matches!((i, j), (0, 0) | (3, 3) | (0, 3) | (3, 0));
            if !allowed {
                stray = stray.max(m[(i, j)].norm());
            }
        }
    }
    let ab = (a2.max(0.0) * b2.max(0.0)).sqrt();
    if stray > PRECONDITION_TOL || (cross - ab).norm() > PRECONDITION_TOL {
        return Err(HolonomyError::Precondition(
            "state must be a|00> + b|11> with a, b >= 0".into(),
        ));
    }
    let basis = cached_basis(2)?;
    let uc = expand_unitary(u, &basis)?;
    if uc.get(0).norm() > PRECONDITION_TOL || uc.get(3).norm() > PRECONDITION_TOL {
        return Err(HolonomyError::Precondition(
            "U must only have sigma_1 and sigma_2 components".into(),
        ));
    }
    let concurrence = 2.0 * ab;
    if concurrence < ZERO_INTERFERENCE_TOL {
        return zero_interference_outcome(rho, u, &basis);
    }
    let coeffs = CVector::from_vec(vec![
        c(0.0, 0.0),
        uc.get(1).conj(),
        -uc.get(2).conj(),
        c(0.0, 0.0),
    ]);
    let v = basis.reconstruct(&coeffs);
    let s = density_to_stokes(rho, &basis, &basis)?;
    let mu = vec![0.0; 3];
    let residual = stationarity_residual(&s, uc.as_vector(), &coeffs, concurrence, &mu, &basis)?;
    let intensity = coincidence_intensity(rho, u, &v)?.value;
    Ok(MaximizationOutcome {
        coefficients: UnitaryCoefficients::from_trusted(coeffs, 2),
        v,
        intensity,
        lagrange_lambda: concurrence,
        lagrange_mu: mu,
        residual,
        status: MaxStatus::UniqueMax,
    })
}

/// Real 4-vector (V₀, V₁, V₂, V₃) of V = V₀1 + iΣV_kσ_k mapped to a matrix.
pub fn su2_from_real(v: [f64; 4]) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[c(v[0], v[3]), c(v[2], v[1]), c(-v[2], v[1]), c(v[0], -v[3])],
    )
}

/// Maximizer over V ∈ SU(2) for any D_A:
/// I = 1/2 + (1/4) g·V with g₀ = 2 Re Σ_j U_j S_j0, g_k = −2 Im Σ_j U_j S_jk,
/// so V = g/|g| and the multiplier is λ = |g|/2 > 0.
pub fn maximize_su2(rho: &DensityMatrix, u: &CMatrix) -> Result<MaximizationOutcome> {
    if rho.d_b() != 2 {
        return Err(HolonomyError::Precondition(format!(
            "second subsystem must be a qubit, got dimension {}",
            rho.d_b()
        )));
    }
    let basis_a = cached_basis(rho.d_a())?;
    let basis_b = cached_basis(2)?;
    let uc = expand_unitary(u, &basis_a)?;
    let s = density_to_stokes(rho, &basis_a, &basis_b)?;
    let sm = s.matrix();
    let col = |k: usize| -> Complex64 { (0..basis_a.len()).map(|j| uc.get(j) * sm[(j, k)]).sum() };
    let g = [
        2.0 * col(0).re,
        -2.0 * col(1).im,
        -2.0 * col(2).im,
        -2.0 * col(3).im,
    ];
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < ZERO_INTERFERENCE_TOL {
        return zero_interference_outcome(rho, u, &basis_b);
    }
    let real = [g[0] / norm, g[1] / norm, g[2] / norm, g[3] / norm];
    let lambda = norm / 2.0;
    let residual = (0..4)
        .map(|i| (g[i] - 2.0 * lambda * real[i]).abs())
        .fold(0.0, f64::max);
    let v = su2_from_real(real);
    let intensity = coincidence_intensity(rho, u, &v)?.value;
    Ok(MaximizationOutcome {
        coefficients: UnitaryCoefficients::from_trusted(basis_b.coefficients(&v), 2),
        v,
        intensity,
        lagrange_lambda: lambda,
        lagrange_mu: Vec::new(),
        residual,
        status: MaxStatus::UniqueMax,
    })
}

/// (U₀, U₂) of U = U₀1 + iU₂σ₂ ∈ SO(2).
pub fn so2_parameters(u: &CMatrix) -> Result<(f64, f64)> {
    check_operator(u, 2)?;
    if !Group::Orthogonal.contains(u, PRECONDITION_TOL) {
        return Err(HolonomyError::Precondition(
            "U must be a real rotation in SO(2)".into(),
        ));
    }
    Ok((u[(0, 0)].re, u[(0, 1)].re))
}

/// U₀1 + iU₂σ₂ as a matrix.
pub fn so2_from_parameters(u0: f64, u2: f64) -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(u0, 0.0), c(u2, 0.0), c(-u2, 0.0), c(u0, 0.0)])
}

/// Two-rebit maximizer over V ∈ SO(2):
/// V = (U₀1 − i C_R U₂ σ₂)/λ with λ = sqrt(U₀² + C_R² U₂²).
pub fn maximize_so2_rebit(rho: &DensityMatrix, u: &CMatrix) -> Result<MaximizationOutcome> {
    qubit_pair(rho)?;
    let imag = rho.matrix().iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    if imag > PRECONDITION_TOL {
        return Err(HolonomyError::Precondition(
            "rebit state must be real in the computational basis".into(),
        ));
    }
    let (u0, u2) = so2_parameters(u)?;
    let basis = cached_basis(2)?;
    let s = density_to_stokes(rho, &basis, &basis)?;
    let rebit_c = s.get(2, 2);
    let g = [u0, -rebit_c * u2];
    let lambda = (g[0] * g[0] + g[1] * g[1]).sqrt();
    if lambda < ZERO_INTERFERENCE_TOL {
        return zero_interference_outcome(rho, u, &basis);
    }
    let (v0, v2) = (g[0] / lambda, g[1] / lambda);
    let residual = (g[0] - lambda * v0).abs().max((g[1] - lambda * v2).abs());
    let v = so2_from_parameters(v0, v2);
    let intensity = coincidence_intensity(rho, u, &v)?.value;
    Ok(MaximizationOutcome {
        coefficients: UnitaryCoefficients::from_trusted(basis.coefficients(&v), 2),
        v,
        intensity,
        lagrange_lambda: lambda,
        lagrange_mu: Vec::new(),
        residual,
        status: MaxStatus::UniqueMax,
    })
}

/// Closed form when one applies, the general solver otherwise.
pub fn maximize(rho: &DensityMatrix, u: &CMatrix, group: Group) -> Result<MaximizationOutcome> {
    match group {
        Group::Special if rho.d_b() == 2 => maximize_su2(rho, u),
        Group::Orthogonal if rho.d_a() == 2 && rho.d_b() == 2 => match maximize_so2_rebit(rho, u) {
            Err(HolonomyError::Precondition(_)) => maximize_general(rho, u, group),
            other => other,
        },
        _ => maximize_general(rho, u, group),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::commutator_norm;
    use crate::states::{bell_vector, schmidt_state};
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn pauli(k: usize) -> CMatrix {
        cached_basis(2).unwrap().generator(k).clone()
    }

    /// Exact U(D) maximizer from the polar decomposition K = P H: V = P†,
    /// with P from the Newton iteration P ← (P + P^{-†}) / 2.
    fn polar_oracle(rho: &DensityMatrix, u: &CMatrix) -> (CMatrix, f64) {
        let k = effective_operator(rho, u).unwrap();
        let mut p = k.clone();
        for _ in 0..100 {
            let next = (&p + p.adjoint().try_inverse().unwrap()) * Complex64::new(0.5, 0.0);
            let done = (&next - &p).norm() < 1e-15;
            p = next;
            if done {
                break;
            }
        }
        let v = p.adjoint();
        let value = 0.5 + 0.5 * trace_of_product(&v, &k).re;
        (v, value)
    }

    #[test]
    fn identity_operators_give_unit_intensity() {
        let mut s = Sampler::new(3);
        let rho = s.mixed_state(3, 2);
        let r = coincidence_intensity(&rho, &identity(3), &identity(2)).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schmidt_intensity_formula() {
        let (a, b) = (0.8, 0.6);
        let conc = 2.0 * a * b;
        let rho = schmidt_state(a, b).unwrap();
        let (u1, u2) = (
            Complex64::from_polar(0.6, 0.4),
            Complex64::from_polar(0.8, 0.4),
        );
        let u = pauli(1) * u1 + pauli(2) * u2;
        assert!(unitarity_residual(&u) < 1e-12);
        let mut s = Sampler::new(9);
        for _ in 0..5 {
            let v = s.unitary(2);
            let vc = cached_basis(2).unwrap().coefficients(&v);
            let expected = 0.5 + 0.5 * conc * (vc[1] * u1 - vc[2] * u2).re;
            let got = coincidence_intensity(&rho, &u, &v).unwrap().value;
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn dual_formula_agreement_for_qutrit_qubit() {
        let mut s = Sampler::new(5);
        for _ in 0..10 {
            let rho = s.mixed_state(3, 2);
            let r = coincidence_intensity(&rho, &s.unitary(3), &s.unitary(2)).unwrap();
            assert!(r.formula_delta < 1e-12);
            assert!((0.0..=1.0 + 1e-12).contains(&r.value));
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let rho = schmidt_state(0.8, 0.6).unwrap();
        assert!(matches!(
            coincidence_intensity(&rho, &identity(3), &identity(2)),
            Err(HolonomyError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn global_phase_is_undone() {
        let mut s = Sampler::new(11);
        let rho = s.mixed_state(2, 3);
        let phi = 0.7;
        let u = identity(2) * Complex64::from_polar(1.0, phi);
        let out = maximize_general(&rho, &u, Group::Unitary).unwrap();
        assert!(max_abs(&(out.v - identity(3) * Complex64::from_polar(1.0, -phi))) < 1e-8);
        assert!((out.intensity - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_state_maximizer_is_a_phase() {
        let mut s = Sampler::new(12);
        let rho = s.product_state(2, 2);
        let u = s.unitary(2);
        let t = trace_of_product(&u, &rho.reduced_a());
        let out = maximize_general(&rho, &u, Group::Unitary).unwrap();
        let expected = identity(2) * Complex64::from_polar(1.0, -t.arg());
        assert!(max_abs(&(&out.v - expected)) < 1e-8);
        assert!((out.intensity - 0.5 * (1.0 + t.norm())).abs() < 1e-10);
        assert_eq!(out.status, MaxStatus::UniqueMax);
    }

    #[test]
    fn schmidt_maximum_is_one_plus_concurrence_over_two() {
        let rho = schmidt_state(0.8, 0.6).unwrap();
        let u = (pauli(1) + pauli(2)) * c(FRAC_1_SQRT_2, 0.0);
        // (σ₁ + σ₂)/√2 is Hermitian and squares to 1
        assert!(unitarity_residual(&u) < 1e-12);
        let out = maximize_general(&rho, &u, Group::Unitary).unwrap();
        assert!((out.intensity - 0.98).abs() < 1e-10);
        assert!(out.residual < 1e-8);
        assert!((out.lagrange_lambda - 0.96).abs() < 1e-8);
        assert!(out.lagrange_mu.iter().all(|m| m.abs() < 1e-8));
    }

    #[test]
    fn grid_search_bounds_the_general_maximum() {
        let mut s = Sampler::new(21);
        let rho = s.mixed_state(2, 2);
        let u = s.unitary(2);
        let out = maximize_general(&rho, &u, Group::Unitary).unwrap();
        let k = effective_operator(&rho, &u).unwrap();
        let h = PI / 60.0;
        let mut grid_best = f64::NEG_INFINITY;
        for ia in 0..120 {
            let ph = Complex64::from_polar(1.0, ia as f64 * h);
            for it in 0..=30 {
                let th = it as f64 * h;
                let (ct, st) = (th.cos(), th.sin());
                for ib in 0..120 {
                    let eb = Complex64::from_polar(1.0, ib as f64 * h);
                    for ig in 0..120 {
                        let eg = Complex64::from_polar(1.0, ig as f64 * h);
                        // Re Tr(V K) with V = e^{iα}[[e^{iβ}c, e^{iγ}s], [−e^{−iγ}s, e^{−iβ}c]]
                        let tr = eb * ct * k[(0, 0)] + eg * st * k[(1, 0)]
                            - eg.conj() * st * k[(0, 1)]
                            + eb.conj() * ct * k[(1, 1)];
                        let val = (ph * tr).re;
                        if val > grid_best {
                            grid_best = val;
                        }
                    }
                }
            }
        }
        let grid_intensity = 0.5 + 0.5 * grid_best;
        assert!(out.intensity >= grid_intensity - 1e-12);
        assert!(out.intensity - grid_intensity < 2e-3);
    }

    #[test]
    fn rank_deficient_maximizer_is_completed_towards_a_phase() {
        let mut s = Sampler::new(41);
        let a = s.pure_vector(2);
        let b = s.pure_vector(3);
        let rho = DensityMatrix::from_pure(&a.kronecker(&b), 2, 3).unwrap();
        let u = s.unitary(2);
        let out = maximize_general(&rho, &u, Group::Unitary).unwrap();
        let theta = (&u * rho.reduced_a()).trace().arg();
        assert!(max_abs(&(&out.v - identity(3) * Complex64::from_polar(1.0, -theta))) < 1e-10);
        assert_eq!(out.status, MaxStatus::Degenerate);
        // trace norm of K = ⟨a|U|a⟩ |b⟩⟨b|
        let best = 0.5 + 0.5 * (&u * rho.reduced_a()).trace().norm();
        assert!((coincidence_intensity(&rho, &u, &out.v).unwrap().value - best).abs() < 1e-12);
        assert!(unitarity_residual(&out.v) < 1e-12);

        let pure = s.pure_state(2, 3);
        let phi = 0.7;
        let out = maximize_general(
            &pure,
            &(identity(2) * Complex64::from_polar(1.0, phi)),
            Group::Unitary,
        )
        .unwrap();
        assert!(max_abs(&(out.v - identity(3) * Complex64::from_polar(1.0, -phi))) < 1e-10);
    }

    #[test]
    fn polar_decomposition_agrees_with_ascent() {
        let mut s = Sampler::new(31);
        for (da, db) in [(2, 2), (3, 2), (2, 3), (3, 3)] {
            let rho = s.mixed_state(da, db);
            let u = s.unitary(da);
            let (v_exact, i_exact) = polar_oracle(&rho, &u);
            let out = maximize_general(&rho, &u, Group::Unitary).unwrap();
            assert!((out.intensity - i_exact).abs() < 1e-10, "{da}x{db}");
            assert!(max_abs(&(&out.v - v_exact)) < 1e-6, "{da}x{db}");
            assert!(out.residual < 1e-8, "{da}x{db}: {}", out.residual);
            assert!(out.lagrange_lambda > 0.0);
        }
    }

    #[test]
    fn zero_interference_returns_identity() {
        // maximally mixed state has K = Tr(U)/D² · 1, which vanishes for traceless U
        let rho = DensityMatrix::new(identity(4) * c(0.25, 0.0), 2, 2).unwrap();
        let out = maximize_general(&rho, &pauli(1), Group::Unitary).unwrap();
        assert_eq!(out.status, MaxStatus::ZeroInterference);
        assert_eq!(out.v, identity(2));
        assert!((out.intensity - 0.5).abs() < 1e-12);
    }

    #[test]
    fn antipodal_critical_point() {
        let mut s = Sampler::new(41);
        let rho = s.mixed_state(2, 3);
        let u = s.unitary(2);
        let out = maximize_general(&rho, &u, Group::Unitary).unwrap();
        let basis_a = cached_basis(2).unwrap();
        let basis_b = cached_basis(3).unwrap();
        let st = density_to_stokes(&rho, &basis_a, &basis_b).unwrap();
        let uc = basis_a.coefficients(&u);
        let neg_v = -out.coefficients.as_vector();
        let neg_mu: Vec<f64> = out.lagrange_mu.iter().map(|m| -m).collect();
        let r = stationarity_residual(&st, &uc, &neg_v, -out.lagrange_lambda, &neg_mu, &basis_b)
            .unwrap();
        assert!(r < 1e-8);
        let i_neg = coincidence_intensity(&rho, &u, &(-&out.v)).unwrap().value;
        assert!((i_neg - (1.0 - out.intensity)).abs() < 1e-12);
        // the antipode is the global minimum
        let mut probe = Sampler::new(42);
        for _ in 0..64 {
            let w = probe.unitary(3);
            assert!(coincidence_intensity(&rho, &u, &w).unwrap().value >= i_neg - 1e-12);
        }
    }

    #[test]
    fn qudit_qubit_closed_form() {
        let rho = schmidt_state(0.8, 0.6).unwrap();
        let out = maximize_qudit_qubit_special(&rho, &pauli(1)).unwrap();
        assert!(max_abs(&(&out.v - pauli(1))) < 1e-12);
        assert!((out.intensity - 0.98).abs() < 1e-12);
        assert!(out.residual < 1e-8);
        assert!((out.lagrange_lambda - 0.96).abs() < 1e-12);

        let out = maximize_qudit_qubit_special(&rho, &pauli(2)).unwrap();
        assert!(max_abs(&(&out.v + pauli(2))) < 1e-12);

        let u =
            (pauli(1) * c(0.28, 0.0) + pauli(2) * c(0.96, 0.0)) * Complex64::from_polar(1.0, 1.3);
        assert!(unitarity_residual(&u) < 1e-12);
        let bell = schmidt_state(FRAC_1_SQRT_2, FRAC_1_SQRT_2).unwrap();
        let out = maximize_qudit_qubit_special(&bell, &u).unwrap();
        assert!((out.intensity - 1.0).abs() < 1e-12);
        let general = maximize_general(&bell, &u, Group::Unitary).unwrap();
        assert!((general.intensity - out.intensity).abs() < 1e-10);
        assert!(max_abs(&(general.v - out.v)) < 1e-6);
    }

    #[test]
    fn qudit_qubit_rejects_other_inputs() {
        let rho = schmidt_state(0.8, 0.6).unwrap();
        assert!(matches!(
            maximize_qudit_qubit_special(&rho, &pauli(3)),
            Err(HolonomyError::Precondition(_))
        ));
        let mut s = Sampler::new(2);
        assert!(matches!(
            maximize_qudit_qubit_special(&s.mixed_state(2, 2), &pauli(1)),
            Err(HolonomyError::Precondition(_))
        ));
    }

    #[test]
    fn qubit_b_matrix_inverse() {
        let (b, inv) = b_matrix_qubit(1.0, [0.0; 3]).unwrap();
        assert!(max_abs(&(b - identity(4))) < 1e-15);
        assert!(max_abs(&(inv - identity(4))) < 1e-15);

        let mut s = Sampler::new(51);
        for _ in 0..20 {
            let lambda = s.uniform(-2.0, 2.0);
            let mu = [s.normal(), s.normal(), s.normal()];
            let (b, inv) = b_matrix_qubit(lambda, mu).unwrap();
            assert!(max_abs(&(&b * &inv - identity(4))) < 1e-12);
            let dense = b.clone().try_inverse().unwrap();
            assert!(max_abs(&(dense - &inv)) < 1e-10);
            let h = &b - identity(4) * c(lambda, 0.0);
            let mu2: f64 = mu.iter().map(|x| x * x).sum();
            assert!(max_abs(&(&h * &h - identity(4) * c(mu2, 0.0))) < 1e-12);
        }
        assert!(matches!(
            b_matrix_qubit(1.0, [0.6, 0.0, 0.8]),
            Err(HolonomyError::SingularB { .. })
        ));
    }

    #[test]
    fn qubit_b_inverse_reproduces_schmidt_maximizer() {
        let rho = schmidt_state(0.8, 0.6).unwrap();
        let basis = cached_basis(2).unwrap();
        let st = density_to_stokes(&rho, &basis, &basis).unwrap();
        let u = pauli(1) * c(0.6, 0.0) + pauli(2) * c(0.8, 0.0);
        assert!(unitarity_residual(&u) < 1e-12);
        let uc = basis.coefficients(&u);
        let (_, inv) = b_matrix_qubit(0.96, [0.0; 3]).unwrap();
        let v = inv * stationarity_rhs(&st, &uc);
        let expected =
            CVector::from_vec(vec![c(0.0, 0.0), uc[1].conj(), -uc[2].conj(), c(0.0, 0.0)]);
        assert!((v - expected).norm() < 1e-12);
    }

    #[test]
    fn su2_identity_and_product_states() {
        let mut s = Sampler::new(61);
        let rho = s.mixed_state(2, 2);
        let out = maximize_su2(&rho, &identity(2)).unwrap();
        assert!(max_abs(&(out.v - identity(2))) < 1e-12);
        for _ in 0..20 {
            let rho = s.product_state(3, 2);
            let u = s.special_unitary(3);
            let out = maximize_su2(&rho, &u).unwrap();
            assert!(commutator_norm(&out.v, &rho.reduced_b()) < 1e-10);
            assert!(out.lagrange_lambda > 0.0);
        }
    }

    #[test]
    fn su2_transport_is_non_abelian_on_bell_state() {
        let rho = DensityMatrix::from_pure(&bell_vector(), 2, 2).unwrap();
        let u1 = expi_hermitian(&(pauli(1) * c(0.7, 0.0) + pauli(3) * c(0.2, 0.0)));
        let u2 = expi_hermitian(&(pauli(2) * c(0.9, 0.0) - pauli(3) * c(0.4, 0.0)));
        let v1 = maximize_su2(&rho, &u1).unwrap().v;
        let v2 = maximize_su2(&rho, &u2).unwrap().v;
        assert!(commutator_norm(&v1, &v2) > 0.1);
    }

    #[test]
    fn su2_closed_form_matches_restricted_ascent() {
        let mut s = Sampler::new(71);
        for da in [2, 3] {
            let rho = s.mixed_state(da, 2);
            let u = s.special_unitary(da);
            let closed = maximize_su2(&rho, &u).unwrap();
            let general = maximize_general(&rho, &u, Group::Special).unwrap();
            assert!(closed.residual < 1e-8);
            assert!((closed.intensity - general.intensity).abs() < 1e-10);
            assert!(max_abs(&(closed.v - general.v)) < 1e-6);
            let free = maximize_general(&rho, &u, Group::Unitary).unwrap();
            assert!(free.intensity >= general.intensity - 1e-8);
        }
    }

    #[test]
    fn su2_real_parameterization_matches_levay_rule_for_real_u() {
        // D_A = 2, U real combination of 1 and iσ_k: V ∝ (U₀, −Σ_j U_j M_jk)
        let mut s = Sampler::new(72);
        let rho = s.pure_state(2, 2);
        let q = s.su2_coefficients();
        let u = su2_from_real(q);
        let basis = cached_basis(2).unwrap();
        let st = density_to_stokes(&rho, &basis, &basis).unwrap();
        let m = st.correlation();
        let raw: Vec<f64> = (0..4)
            .map(|k| {
                if k == 0 {
                    q[0]
                } else {
                    -(1..4).map(|j| q[j] * m.get(j, k)).sum::<f64>()
                }
            })
            .collect();
        let n = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        let expected = su2_from_real([raw[0] / n, raw[1] / n, raw[2] / n, raw[3] / n]);
        let out = maximize_su2(&rho, &u).unwrap();
        assert!(max_abs(&(out.v - expected)) < 1e-10);
    }

    #[test]
    fn so2_closed_form_cases() {
        let mut s = Sampler::new(81);
        let rho = s.rebit_state();
        let out = maximize_so2_rebit(&rho, &identity(2)).unwrap();
        assert!(max_abs(&(out.v - identity(2))) < 1e-12);

        // product of real states: C_R = 0
        let ra = RMatrix::from_row_slice(2, 2, &[0.7, 0.2, 0.2, 0.3]);
        let rb = RMatrix::from_row_slice(2, 2, &[0.4, -0.1, -0.1, 0.6]);
        let prod = DensityMatrix::new(ra.kronecker(&rb).map(|x| c(x, 0.0)), 2, 2).unwrap();
        for theta in [0.3, 1.2, 2.5, -2.0] {
            let u = so2_from_parameters(f64::cos(theta), f64::sin(theta));
            let out = maximize_so2_rebit(&prod, &u).unwrap();
            let plus = max_abs(&(&out.v - identity(2)));
            let minus = max_abs(&(&out.v + identity(2)));
            assert!(plus.min(minus) < 1e-12);
        }

        // |01⟩ + |10⟩ has ⟨σ₂σ₂⟩ = 1
        let psi = CVector::from_vec(vec![
            c(0.0, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
        ]);
        let rho = DensityMatrix::from_pure(&psi, 2, 2).unwrap();
        let out = maximize_so2_rebit(&rho, &so2_from_parameters(0.0, 1.0)).unwrap();
        assert!((out.lagrange_lambda - 1.0).abs() < 1e-12);
        assert!((out.intensity - 1.0).abs() < 1e-12);
        assert!(max_abs(&(out.v - so2_from_parameters(0.0, -1.0))) < 1e-12);
    }

    #[test]
    fn so2_closed_form_against_angle_grid() {
        let mut s = Sampler::new(91);
        for _ in 0..5 {
            let rho = s.rebit_state();
            let th = s.uniform(-PI, PI);
            let u = so2_from_parameters(th.cos(), th.sin());
            let out = maximize_so2_rebit(&rho, &u).unwrap();
            let step = 1e-4;
            let mut best = f64::NEG_INFINITY;
            let n = (2.0 * PI / step) as usize;
            for i in 0..n {
                let a = -PI + i as f64 * step;
                let v = so2_from_parameters(a.cos(), a.sin());
                best = best.max(coincidence_intensity(&rho, &u, &v).unwrap().value);
            }
            assert!(out.intensity >= best - 1e-12);
            assert!(out.intensity - best < 1e-8);
            let general = maximize_general(&rho, &u, Group::Orthogonal).unwrap();
            assert!((general.intensity - out.intensity).abs() < 1e-10);
        }
    }

    #[test]
    fn multistart_is_deterministic_with_and_without_threads() {
        let mut s = Sampler::new(101);
        let rho = s.mixed_state(3, 3);
        let u = s.unitary(3);
        let par = maximize_general(&rho, &u, Group::Special).unwrap();
        let seq = maximize_general_with(
            &rho,
            &u,
            Group::Special,
            &AscentOptions {
                parallel: false,
                ..AscentOptions::default()
            },
        )
        .unwrap();
        assert_eq!(par, seq);
    }

    #[test]
    fn dispatcher_uses_closed_forms() {
        let mut s = Sampler::new(111);
        let rho = s.mixed_state(3, 2);
        let u = s.special_unitary(3);
        assert_eq!(
            maximize(&rho, &u, Group::Special).unwrap(),
            maximize_su2(&rho, &u).unwrap()
        );
        let rebit = s.rebit_state();
        let r = so2_from_parameters(0.6, 0.8);
        assert_eq!(
            maximize(&rebit, &r, Group::Orthogonal).unwrap(),
            maximize_so2_rebit(&rebit, &r).unwrap()
        );
    }
}

#[cfg(test)]
mod properties {
    use crate::algebra::{cached_basis, GeneratorBasis};
    use crate::interferometer::*;
    use crate::random::Sampler;
    use crate::states::{density_to_stokes, DensityMatrix, StokesTensor};
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
        fn intensity_forms_agree(seed in any::<u64>(), da in 2usize..=3, db in 2usize..=3) {
            let mut s = Sampler::new(seed);
            let rho = s.mixed_state(da, db);
            let r = coincidence_intensity(&rho, &s.unitary(da), &s.unitary(db)).unwrap();
            prop_assert!(r.formula_delta < 1e-12);
            prop_assert!((0.0..=1.0).contains(&r.value));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn antipodal_point_solves_the_same_system(seed in any::<u64>(), da in 2usize..=3, db in 2usize..=3) {
            let mut s = Sampler::new(seed);
            let rho = s.mixed_state(da, db);
            let u = s.unitary(da);
            let out = maximize_general(&rho, &u, Group::Unitary).unwrap();
            prop_assert!(out.residual < 1e-8);
            let st = stokes(&rho);
            let bb = basis(db);
            let uc = basis(da).coefficients(&u);
            let vc = bb.coefficients(&out.v);
            let neg_mu: Vec<f64> = out.lagrange_mu.iter().map(|m| -m).collect();
            let anti = stationarity_residual(&st, &uc, &(-vc.clone()), -out.lagrange_lambda, &neg_mu, &bb).unwrap();
            prop_assert!(anti < 1e-8);
            let (lambda, _, _) = recover_multipliers(&st, &uc, &vc, &bb).unwrap();
            prop_assert!(lambda > 0.0);
            let low = coincidence_intensity(&rho, &u, &(-&out.v)).unwrap().value;
            prop_assert!((low - (1.0 - out.intensity)).abs() < 1e-12);
        }
        #[test]
        fn general_solver_dominates_closed_forms(seed in any::<u64>()) {
            let mut s = Sampler::new(seed);
            let rho = s.mixed_state(2, 2);
            let u = s.special_unitary(2);
            let closed = maximize_su2(&rho, &u).unwrap();
            prop_assert!(closed.residual < 1e-8);
            let general = maximize_general(&rho, &u, Group::Special).unwrap();
            prop_assert!(general.intensity >= closed.intensity - 1e-8);
            let rebit = s.rebit_state();
            let r = s.special_orthogonal(2);
            let closed = maximize_so2_rebit(&rebit, &r).unwrap();
            prop_assert!(closed.residual < 1e-8);
            let general = maximize_general(&rebit, &r, Group::Orthogonal).unwrap();
            prop_assert!(general.intensity >= closed.intensity - 1e-8);
        }
        #[test]
        fn product_states_give_commuting_v(seed in any::<u64>(), da in 2usize..=3) {
            let mut s = Sampler::new(seed);
            let rho = s.product_state(da, 2);
            let out = maximize(&rho, &s.special_unitary(da), Group::Special).unwrap();
            let rb = rho.reduced_b();
            prop_assert!((&out.v * &rb - &rb * &out.v).norm() < 1e-9);
        }
    }
}
