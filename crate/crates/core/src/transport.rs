//! Parallel transport by iterated intensity maximization, its infinitesimal
//! connection, and path-ordered holonomies along smooth loops.

use crate::algebra::{cached_basis, GeneratorBasis};
use crate::error::{HolonomyError, Result};
use crate::interferometer::{maximize, Group, MaxStatus, MaximizationOutcome};
use crate::linalg::{
    anti_hermiticity_residual, c, dexp_right_generator, exp_anti_hermitian, identity, kron,
    max_abs, smallest_singular_value, trace_of_product, unitarity_residual, CMatrix, RMatrix, I,
};
use crate::states::{density_to_stokes, matrix_serde, DensityMatrix, StokesTensor};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

pub const DEFAULT_CLOSURE_TOL: f64 = 1e-8;
const SINGULAR_B_TOL: f64 = 1e-10;
const STEP_UNITARITY_TOL: f64 = 1e-10;

/// Result of one maximization step of the transport.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub v: CMatrix,
    pub next_state: DensityMatrix,
    pub intensity: f64,
    pub outcome: MaximizationOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportStep {
    #[serde(with = "matrix_serde")]
    pub u: CMatrix,
    #[serde(with = "matrix_serde")]
    pub v: CMatrix,
    pub intensity: f64,
    /// |U(n) − 1|_F after this step.
    pub closure_residual: f64,
    pub status: MaxStatus,
    #[serde(skip)]
    pub state: DensityMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportRecord {
    pub steps: Vec<TransportStep>,
    #[serde(with = "matrix_serde")]
    pub cumulative_u: CMatrix,
    #[serde(with = "matrix_serde")]
    pub cumulative_v: CMatrix,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolonomyElement {
    #[serde(with = "matrix_serde")]
    pub v: CMatrix,
    pub loop_closure_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionSample {
    pub t: f64,
    pub a_hat: CMatrix,
}

fn check_step(u: &CMatrix, d: usize) -> Result<()> {
    if u.nrows() != d || u.ncols() != d {
        return Err(HolonomyError::DimensionMismatch {
            expected: d,
            found: u.nrows(),
        });
    }
    let res = unitarity_residual(u);
    if res > STEP_UNITARITY_TOL {
        return Err(HolonomyError::ConstraintViolation {
            what: "unitarity of path step",
            residual: res,
        });
    }
    Ok(())
}

/// Chooses V for the given U on the current state and advances the state.
pub fn transport_step(state: &DensityMatrix, u: &CMatrix, group: Group) -> Result<StepResult> {
    check_step(u, state.d_a())?;
    let outcome = maximize(state, u, group)?;
    let next_state = state.conjugated(u, &outcome.v);
    Ok(StepResult {
        v: outcome.v.clone(),
        next_state,
        intensity: outcome.intensity,
        outcome,
    })
}

/// Iterates `transport_step` along a sequence of step unitaries.
pub fn transport_sequence(
    rho0: &DensityMatrix,
    steps: &[CMatrix],
    group: Group,
) -> Result<TransportRecord> {
    if steps.is_empty() {
        return Err(HolonomyError::Precondition(
            "transport path has no steps".into(),
        ));
    }
    let mut state = rho0.clone();
    let mut cum_u = identity(rho0.d_a());
    let mut cum_v = identity(rho0.d_b());
    let mut out = Vec::with_capacity(steps.len());
    for (n, u) in steps.iter().enumerate() {
        let step = transport_step(&state, u, group)?;
        cum_u = u * cum_u;
        cum_v = &step.v * cum_v;
        let closure_residual = (&cum_u - identity(rho0.d_a())).norm();
        log::trace!("step {n}: intensity {:.12}", step.intensity);
        out.push(TransportStep {
            u: u.clone(),
            v: step.v,
            intensity: step.intensity,
            closure_residual,
            status: step.outcome.status,
            state: step.next_state.clone(),
        });
        state = step.next_state;
    }
    Ok(TransportRecord {
        steps: out,
        cumulative_u: cum_u,
        cumulative_v: cum_v,
    })
}

impl TransportRecord {
    /// Intensity of step `n` (0-based) evaluated on the initial state through
    /// the cumulative operators of the preceding steps.
    pub fn intensity_from_cumulative(&self, rho0: &DensityMatrix, n: usize) -> f64 {
        let mut cu = identity(rho0.d_a());
        let mut cv = identity(rho0.d_b());
        for s in &self.steps[..n] {
            cu = &s.u * cu;
            cv = &s.v * cv;
        }
        let w = kron(&cu, &cv);
        let step = kron(&self.steps[n].u, &self.steps[n].v);
        let op = w.adjoint() * step * w;
        0.5 + 0.5 * trace_of_product(&op, rho0.matrix()).re
    }
}

/// Transports around a closed discrete loop and returns the accumulated V.
pub fn holonomy_from_loop(
    rho0: &DensityMatrix,
    steps: &[CMatrix],
    group: Group,
    closure_tol: f64,
) -> Result<HolonomyElement> {
    let mut cum_u = identity(rho0.d_a());
    for u in steps {
        check_step(u, rho0.d_a())?;
        cum_u = u * cum_u;
    }
    let residual = (&cum_u - identity(rho0.d_a())).norm();
    if residual > closure_tol {
        return Err(HolonomyError::OpenLoop {
            residual,
            tolerance: closure_tol,
        });
    }
    if steps.is_empty() {
        return Ok(HolonomyElement {
            v: identity(rho0.d_b()),
            loop_closure_residual: residual,
        });
    }
    let record = transport_sequence(rho0, steps, group)?;
    Ok(HolonomyElement {
        v: record.cumulative_v,
        loop_closure_residual: residual,
    })
}

// ---------------------------------------------------------------------------
// Infinitesimal connection

/// B_jk = Re Tr(χ_j χ_k ρ^B) evaluated directly.
pub fn b_matrix_trace_form(rho_b: &CMatrix, basis_b: &GeneratorBasis) -> RMatrix {
    let n = basis_b.len();
    let gens = basis_b.generators();
    let mut b = RMatrix::zeros(n, n);
    for j in 0..n {
        let left = &gens[j] * rho_b;
        for k in j..n {
            let x = trace_of_product(&gens[k], &left).re;
            b[(j, k)] = x;
            b[(k, j)] = x;
        }
    }
    b
}

/// B_jk = (2/D) δ_jk + (1 − 2/D) δ_j0 δ_k0 + Σ_l S_0l [(δ_j0 δ_lk + δ_k0 δ_lj) + d_jkl].
pub fn b_matrix_stokes_form(s: &StokesTensor, basis_b: &GeneratorBasis) -> RMatrix {
    let n = basis_b.len();
    let dim = basis_b.dim() as f64;
    let sm = s.matrix();
    let mut b = RMatrix::zeros(n, n);
    for j in 0..n {
        b[(j, j)] += 2.0 / dim;
    }
    b[(0, 0)] += 1.0 - 2.0 / dim;
    for l in 1..n {
        let s0l = sm[(0, l)];
        b[(0, l)] += s0l;
        b[(l, 0)] += s0l;
        for j in 1..n {
            for k in 1..n {
                b[(j, k)] += s0l * basis_b.d(j, k, l);
            }
        }
    }
    b
}

/// Full B matrix of the infinitesimal problem; errors when it is singular.
pub fn b_matrix_infinitesimal(s: &StokesTensor, basis_b: &GeneratorBasis) -> Result<RMatrix> {
    if s.d_b() != basis_b.dim() {
        return Err(HolonomyError::DimensionMismatch {
            expected: s.d_b(),
            found: basis_b.dim(),
        });
    }
    let b = b_matrix_stokes_form(s, basis_b);
    let sigma_min = smallest_singular_value(&b);
    if sigma_min < SINGULAR_B_TOL {
        return Err(HolonomyError::SingularB { sigma_min });
    }
    Ok(b)
}

fn restricted_inverse(b: &RMatrix, idx: &[usize], t: f64) -> Result<RMatrix> {
    let sub = RMatrix::from_fn(idx.len(), idx.len(), |a, c| b[(idx[a], idx[c])]);
    let sigma_min = smallest_singular_value(&sub);
    if sigma_min < SINGULAR_B_TOL {
        return Err(HolonomyError::SingularConnection { t, sigma_min });
    }
    sub.try_inverse()
        .ok_or(HolonomyError::SingularConnection { t, sigma_min })
}

fn check_generator(x: &CMatrix, d: usize) -> Result<()> {
    if x.nrows() != d || x.ncols() != d {
        return Err(HolonomyError::DimensionMismatch {
            expected: d,
            found: x.nrows(),
        });
    }
    let res = anti_hermiticity_residual(x);
    if res > 1e-10 {
        return Err(HolonomyError::ConstraintViolation {
            what: "anti-Hermiticity of dU U†",
            residual: res,
        });
    }
    Ok(())
}

/// Â = −Σ_m Σ_{k,l} (dUU†)_k S_kl B⁻¹_ml χ_m, with l, m restricted to the
/// generators of `group`.
pub fn connection_one_form(
    s: &StokesTensor,
    du_udag: &CMatrix,
    group: Group,
    t: f64,
) -> Result<ConnectionSample> {
    check_generator(du_udag, s.d_a())?;
    let basis_a = cached_basis(s.d_a())?;
    let basis_b = cached_basis(s.d_b())?;
    let idx = group.generator_indices(&basis_b);
    let b_inv = restricted_inverse(&b_matrix_stokes_form(s, &basis_b), &idx, t)?;
    let coeffs = basis_a.coefficients(du_udag);
    let sm = s.matrix();
    // (dUU†)_k S_kl for l in the allowed set
    let driven: Vec<_> = idx
        .iter()
        .map(|&l| {
            (0..basis_a.len())
                .map(|k| coeffs[k] * sm[(k, l)])
                .sum::<num_complex::Complex64>()
        })
        .collect();
    let mut a_hat = CMatrix::zeros(s.d_b(), s.d_b());
    for (mi, &m) in idx.iter().enumerate() {
        let w: num_complex::Complex64 = driven
            .iter()
            .enumerate()
            .map(|(li, x)| x * b_inv[(mi, li)])
            .sum();
        a_hat -= basis_b.generator(m) * w;
    }
    Ok(ConnectionSample { t, a_hat })
}

/// Connection from the velocity of the state under local generators:
/// Â = i Σ_{j,l} Re Tr[(1 ⊗ iχ_j) Ω ρ] B⁻¹_jl χ_l with Ω = Ω_A ⊗ 1 + 1 ⊗ Ω_B.
pub fn connection_trace_form(
    rho: &DensityMatrix,
    omega_a: &CMatrix,
    omega_b: Option<&CMatrix>,
    group: Group,
    t: f64,
) -> Result<ConnectionSample> {
    let (d_a, d_b) = (rho.d_a(), rho.d_b());
    check_generator(omega_a, d_a)?;
    let mut omega = kron(omega_a, &identity(d_b));
    if let Some(ob) = omega_b {
        check_generator(ob, d_b)?;
        omega += kron(&identity(d_a), ob);
    }
    let basis_b = cached_basis(d_b)?;
    let idx = group.generator_indices(&basis_b);
    let b_inv = restricted_inverse(&b_matrix_trace_form(&rho.reduced_b(), &basis_b), &idx, t)?;
    let velocity = omega * rho.matrix();
    let w: Vec<f64> = idx
        .iter()
        .map(|&j| {
            let probe = kron(&identity(d_a), &(basis_b.generator(j) * I));
            trace_of_product(&probe, &velocity).re
        })
        .collect();
    let mut a_hat = CMatrix::zeros(d_b, d_b);
    for (li, &l) in idx.iter().enumerate() {
        let x: f64 = w
            .iter()
            .enumerate()
            .map(|(ji, wj)| wj * b_inv[(ji, li)])
            .sum();
        a_hat += basis_b.generator(l) * c(0.0, x);
    }
    Ok(ConnectionSample { t, a_hat })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaugeReport {
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

/// Input of a gauge check: a state and the generator dU U† driving it at time t.
#[derive(Debug, Clone)]
pub struct ConnectionInput {
    pub t: f64,
    pub state: DensityMatrix,
    pub du_udag: CMatrix,
}

/// Compares the connection of the gauge-transformed states (1 ⊗ G(t)) ρ (1 ⊗ G(t))†
/// with G dG† + G Â G†, using central differences of step `h` for dG.
pub fn gauge_transform_check(
    samples: &[ConnectionInput],
    gauge: &dyn Fn(f64) -> CMatrix,
    h: f64,
    group: Group,
) -> Result<GaugeReport> {
    let mut residuals = Vec::with_capacity(samples.len());
    for smp in samples {
        let basis_a = cached_basis(smp.state.d_a())?;
        let basis_b = cached_basis(smp.state.d_b())?;
        let s = density_to_stokes(&smp.state, &basis_a, &basis_b)?;
        let a = connection_one_form(&s, &smp.du_udag, group, smp.t)?.a_hat;
        let g = gauge(smp.t);
        let dg = (gauge(smp.t + h) - gauge(smp.t - h)) / c(2.0 * h, 0.0);
        let moved = smp.state.conjugated(&identity(smp.state.d_a()), &g);
        let mut frame = &dg * g.adjoint();
        frame = (&frame - frame.adjoint()).scale(0.5);
        let recomputed =
            connection_trace_form(&moved, &smp.du_udag, Some(&frame), group, smp.t)?.a_hat;
        let predicted = &g * dg.adjoint() + &g * a * g.adjoint();
        residuals.push(max_abs(&(recomputed - predicted)));
    }
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    Ok(GaugeReport {
        residuals,
        max_residual,
    })
}

// ---------------------------------------------------------------------------
// Paths

/// One Fourier component of a loop coordinate:
/// θ_j(t) += cos·(cos 2πmt − 1) + sin·sin 2πmt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierTerm {
    pub generator: usize,
    pub harmonic: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Closed loop t ∈ [0, 1] ↦ exp(i Σ θ_j(t) χ_j) with U(0) = U(1) = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothLoop {
    d_a: usize,
    terms: Vec<FourierTerm>,
}

impl SmoothLoop {
    pub fn new(d_a: usize, terms: Vec<FourierTerm>) -> Result<Self> {
        let n = d_a * d_a;
        for term in &terms {
            if term.generator >= n {
                return Err(HolonomyError::OutOfRange {
                    what: "generator index",
                    value: term.generator as f64,
                });
            }
            if term.harmonic == 0 {
                return Err(HolonomyError::OutOfRange {
                    what: "harmonic",
                    value: 0.0,
                });
            }
        }
        cached_basis(d_a)?;
        Ok(SmoothLoop { d_a, terms })
    }

    pub fn dim(&self) -> usize {
        self.d_a
    }

    pub fn terms(&self) -> &[FourierTerm] {
        &self.terms
    }

    pub fn theta(&self, t: f64) -> Vec<f64> {
        let mut th = vec![0.0; self.d_a * self.d_a];
        for term in &self.terms {
            let w = TAU * term.harmonic as f64;
            th[term.generator] += term.cos * ((w * t).cos() - 1.0) + term.sin * (w * t).sin();
        }
        th
    }

    pub fn theta_dot(&self, t: f64) -> Vec<f64> {
        let mut th = vec![0.0; self.d_a * self.d_a];
        for term in &self.terms {
            let w = TAU * term.harmonic as f64;
            th[term.generator] += -term.cos * w * (w * t).sin() + term.sin * w * (w * t).cos();
        }
        th
    }

    fn basis(&self) -> std::sync::Arc<GeneratorBasis> {
        cached_basis(self.d_a).expect("checked at construction")
    }

    pub fn unitary(&self, t: f64) -> CMatrix {
        self.basis().exp_i(&self.theta(t))
    }

    /// dU/dt U† at t.
    pub fn generator(&self, t: f64) -> CMatrix {
        let basis = self.basis();
        dexp_right_generator(
            &basis.hermitian_combination(&self.theta(t)),
            &basis.hermitian_combination(&self.theta_dot(t)),
        )
    }

    /// U(t₁) U(t₀)†.
    pub fn increment(&self, t0: f64, t1: f64) -> CMatrix {
        self.unitary(t1) * self.unitary(t0).adjoint()
    }

    /// n uniform step unitaries whose ordered product is U(1).
    pub fn discretize(&self, n: usize) -> Vec<CMatrix> {
        (0..n)
            .map(|i| self.increment(i as f64 / n as f64, (i + 1) as f64 / n as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum UnitaryPath {
    Discrete(Vec<CMatrix>),
    Smooth(SmoothLoop),
}

impl UnitaryPath {
    /// Step unitaries; smooth loops are cut into `n_steps` uniform pieces.
    pub fn steps(&self, n_steps: usize) -> Vec<CMatrix> {
        match self {
            UnitaryPath::Discrete(s) => s.clone(),
            UnitaryPath::Smooth(l) => l.discretize(n_steps),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    #[default]
    FirstOrder,
    Midpoint,
}

/// First-order product of exp(Â(t_i) Δt) along a smooth loop.
pub fn path_ordered_holonomy(
    rho0: &DensityMatrix,
    path: &SmoothLoop,
    n_steps: usize,
    group: Group,
) -> Result<HolonomyElement> {
    path_ordered_holonomy_with(rho0, path, n_steps, group, Integrator::FirstOrder)
}

/// Path-ordered exponential of the connection; the state is carried along by
/// the exact loop increments on A and the propagators on B.
pub fn path_ordered_holonomy_with(
    rho0: &DensityMatrix,
    path: &SmoothLoop,
    n_steps: usize,
    group: Group,
    integrator: Integrator,
) -> Result<HolonomyElement> {
    if path.dim() != rho0.d_a() {
        return Err(HolonomyError::DimensionMismatch {
            expected: rho0.d_a(),
            found: path.dim(),
        });
    }
    if n_steps == 0 {
        return Err(HolonomyError::Precondition(
            "n_steps must be positive".into(),
        ));
    }
    let closure = (path.unitary(1.0) - identity(path.dim())).norm();
    if closure > DEFAULT_CLOSURE_TOL {
        return Err(HolonomyError::OpenLoop {
            residual: closure,
            tolerance: DEFAULT_CLOSURE_TOL,
        });
    }
    let basis_a = cached_basis(rho0.d_a())?;
    let basis_b = cached_basis(rho0.d_b())?;
    let connection = |state: &DensityMatrix, t: f64| -> Result<CMatrix> {
        let s = density_to_stokes(state, &basis_a, &basis_b)?;
        Ok(connection_one_form(&s, &path.generator(t), group, t)?.a_hat)
    };
    let dt = 1.0 / n_steps as f64;
    let mut state = rho0.clone();
    let mut v = identity(rho0.d_b());
    for i in 0..n_steps {
        let t0 = i as f64 * dt;
        let a = match integrator {
            Integrator::FirstOrder => connection(&state, t0)?,
            Integrator::Midpoint => {
                let tm = t0 + 0.5 * dt;
                let half_v = exp_anti_hermitian(&(connection(&state, t0)? * c(0.5 * dt, 0.0)));
                let mid = state.conjugated(&path.increment(t0, tm), &half_v);
                connection(&mid, tm)?
            }
        };
        let step_v = exp_anti_hermitian(&(a * c(dt, 0.0)));
        state = state.conjugated(&path.increment(t0, t0 + dt), &step_v);
        v = step_v * v;
    }
    let out = HolonomyElement {
        v,
        loop_closure_residual: closure,
    };
    debug_assert!(unitarity_residual(&out.v) < 1e-8);
    Ok(out)
}

/// Real coordinates of dφ = −B⁻¹ Sᵀ dθ for a generator on A, over the
/// allowed generators of B (useful for comparing with component formulas).
pub fn connection_coordinates(
    s: &StokesTensor,
    du_udag: &CMatrix,
    group: Group,
) -> Result<DVector<f64>> {
    let a = connection_one_form(s, du_udag, group, 0.0)?.a_hat;
    let basis_b = cached_basis(s.d_b())?;
    let coords = basis_b.anti_hermitian_coordinates(&a);
    let idx = group.generator_indices(&basis_b);
    Ok(DVector::from_iterator(
        idx.len(),
        idx.iter().map(|&j| coords[j]),
    ))
}


#[cfg(test)]
mod properties {
    use crate::algebra::cached_basis;
    use crate::interferometer::Group;
    use crate::linalg::{
        anti_hermiticity_residual, commutator_norm, identity, phase_identity_distance, CMatrix,
    };
    use crate::random::Sampler;
    use crate::states::{density_to_stokes, DensityMatrix, StokesTensor};
    use crate::transport::*;
    use proptest::prelude::*;

    fn stokes(rho: &DensityMatrix) -> StokesTensor {
        let a = cached_basis(rho.d_a()).unwrap();
        let b = cached_basis(rho.d_b()).unwrap();
        density_to_stokes(rho, &a, &b).unwrap()
    }

    fn random_loop(s: &mut Sampler, d: usize) -> SmoothLoop {
        let terms = (0..3)
            .map(|i| FourierTerm {
                generator: 1 + i % (d * d - 1),
                harmonic: 1 + i as u32 / 2,
                cos: s.uniform(-0.8, 0.8),
                sin: s.uniform(-0.8, 0.8),
            })
            .collect();
        SmoothLoop::new(d, terms).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn connection_is_anti_hermitian(seed in any::<u64>(), da in 2usize..=3, db in 2usize..=3) {
            let mut s = Sampler::new(seed);
            let rho = s.mixed_state(da, db);
            let x = s.anti_hermitian(da);
            for group in [Group::Unitary, Group::Special] {
                let a = connection_one_form(&stokes(&rho), &x, group, 0.0).unwrap().a_hat;
                prop_assert!(anti_hermiticity_residual(&a) < 1e-10);
            }
        }
        #[test]
        fn cumulative_and_stepwise_intensities_agree(seed in any::<u64>()) {
            let mut s = Sampler::new(seed);
            let rho = s.mixed_state(2, 2);
            let steps: Vec<CMatrix> = (0..4).map(|_| s.unitary(2)).collect();
            let rec = transport_sequence(&rho, &steps, Group::Unitary).unwrap();
            for n in 0..steps.len() {
                prop_assert!((rec.intensity_from_cumulative(&rho, n) - rec.steps[n].intensity).abs() < 1e-10);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn product_state_holonomies_are_abelian(seed in any::<u64>()) {
            let mut s = Sampler::new(seed);
            let a = s.pure_vector(2);
            let b = s.pure_vector(2);
            let rho = DensityMatrix::from_pure(&a.kronecker(&b), 2, 2).unwrap();
            let mixed = s.product_state(2, 2);
            let loops: Vec<Vec<CMatrix>> = (0..3).map(|_| random_loop(&mut s, 2).discretize(20)).collect();
            for state in [&rho, &mixed] {
                let special: Vec<CMatrix> = loops
                    .iter()
                    .map(|l| holonomy_from_loop(state, l, Group::Special, DEFAULT_CLOSURE_TOL).unwrap().v)
                    .collect();
                for x in &special {
                    for y in &special {
                        prop_assert!(commutator_norm(x, y) < 1e-8);
                    }
                }
                for l in &loops {
                    let h = holonomy_from_loop(state, l, Group::Unitary, DEFAULT_CLOSURE_TOL).unwrap();
                    prop_assert!(phase_identity_distance(&h.v) < 1e-8);
                }
            }
        }
        #[test]
        fn open_loops_are_rejected(seed in any::<u64>()) {
            let mut s = Sampler::new(seed);
            let rho = s.mixed_state(2, 2);
            let mut steps = random_loop(&mut s, 2).discretize(10);
            steps.pop();
            prop_assert!(holonomy_from_loop(&rho, &steps, Group::Unitary, DEFAULT_CLOSURE_TOL).is_err());
            let steps = vec![identity(2); 3];
            prop_assert!(holonomy_from_loop(&rho, &steps, Group::Unitary, DEFAULT_CLOSURE_TOL).is_ok());
        }
    }
}
