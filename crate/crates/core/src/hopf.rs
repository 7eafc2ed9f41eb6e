//! Quaternionic picture of pure two-qubit states.
//!
//! α|00⟩ + β|01⟩ + γ|10⟩ + δ|11⟩ becomes the spinor (α + βj, γ + δj). A
//! unitary on the first qubit acts by left multiplication with complex
//! entries; V = V₀ + iΣV_kσ_k on the second qubit acts by right
//! multiplication with q_V = V₀ + V₃i − V₂j + V₁k.

use crate::error::{HolonomyError, Result};
use crate::linalg::{c, CMatrix, CVector};
use crate::states::CorrelationMatrix;
use crate::transport::SmoothLoop;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Neg, Sub};

const PARAM_TOL: f64 = 1e-10;

/// q = a + b i + c j + d k.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Quaternion {
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Quaternion { a, b, c, d }
    }

    /// Embeds x + iy as x + y i.
    pub fn from_complex(z: Complex64) -> Self {
        Quaternion::new(z.re, z.im, 0.0, 0.0)
    }

    /// z + w j for complex z, w.
    pub fn from_pair(z: Complex64, w: Complex64) -> Self {
        Quaternion::from_complex(z) + Quaternion::from_complex(w) * Quaternion::J
    }

    pub fn conj(self) -> Self {
        Quaternion::new(self.a, -self.b, -self.c, -self.d)
    }

    pub fn norm_sqr(self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: f64) -> Self {
        Quaternion::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn inverse(self) -> Option<Self> {
        let n = self.norm_sqr();
        (n > 0.0).then(|| self.conj().scale(1.0 / n))
    }

    pub fn components(self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Max |component| of self − other.
    pub fn distance(self, other: Quaternion) -> f64 {
        (self - other)
            .components()
            .iter()
            .map(|x| x.abs())
            .fold(0.0, f64::max)
    }
}

impl Add for Quaternion {
    type Output = Quaternion;
    fn add(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl Sub for Quaternion {
    type Output = Quaternion;
    fn sub(self, o: Quaternion) -> Quaternion {
        Quaternion::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;
    fn neg(self) -> Quaternion {
        self.scale(-1.0)
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, o: Quaternion) -> Quaternion {
        let (a1, b1, c1, d1) = (self.a, self.b, self.c, self.d);
        let (a2, b2, c2, d2) = (o.a, o.b, o.c, o.d);
        Quaternion::new(
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        )
    }
}

/// Amplitudes (p, q) of |0⟩ and |1⟩ of the first qubit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuaternionicSpinor {
    pub p: Quaternion,
    pub q: Quaternion,
}

impl QuaternionicSpinor {
    pub fn norm_sqr(&self) -> f64 {
        self.p.norm_sqr() + self.q.norm_sqr()
    }

    /// Right multiplication of both amplitudes.
    pub fn times(&self, r: Quaternion) -> Self {
        QuaternionicSpinor {
            p: self.p * r,
            q: self.q * r,
        }
    }

    /// Point of ℍP¹ as p q⁻¹ (None at q = 0).
    pub fn projective_coordinate(&self) -> Option<Quaternion> {
        (self.q.norm() > 1e-12).then(|| self.p * self.q.inverse().expect("nonzero"))
    }

    /// Back to the complex amplitudes (α, β, γ, δ).
    pub fn to_vector(&self) -> CVector {
        let split = |x: Quaternion| (c(x.a, x.b), c(x.c, x.d));
        let (al, be) = split(self.p);
        let (ga, de) = split(self.q);
        CVector::from_vec(vec![al, be, ga, de])
    }
}

/// ψ = (α, β, γ, δ) ↦ (α + βj, γ + δj).
pub fn to_quaternionic(psi: &CVector) -> Result<QuaternionicSpinor> {
    if psi.len() != 4 {
        return Err(HolonomyError::DimensionMismatch {
            expected: 4,
            found: psi.len(),
        });
    }
    let res = (psi.norm_squared() - 1.0).abs();
    if res > 1e-12 {
        return Err(HolonomyError::ConstraintViolation {
            what: "normalization of the state vector",
            residual: res,
        });
    }
    Ok(QuaternionicSpinor {
        p: Quaternion::from_pair(psi[0], psi[1]),
        q: Quaternion::from_pair(psi[2], psi[3]),
    })
}

/// ⟨Ψ|Φ⟩ = p₁* p₂ + q₁* q₂.
pub fn quaternionic_inner(psi: &QuaternionicSpinor, phi: &QuaternionicSpinor) -> Quaternion {
    psi.p.conj() * phi.p + psi.q.conj() * phi.q
}

/// Real coefficients (V₀, V₁, V₂, V₃) of V = V₀1 + iΣV_kσ_k ∈ SU(2).
pub fn su2_coefficients(v: &CMatrix) -> Result<[f64; 4]> {
    if v.nrows() != 2 || v.ncols() != 2 {
        return Err(HolonomyError::DimensionMismatch {
            expected: 2,
            found: v.nrows(),
        });
    }
    let coeffs = [
        0.5 * (v[(0, 0)] + v[(1, 1)]).re,
        0.5 * (v[(0, 1)] + v[(1, 0)]).im,
        0.5 * (v[(0, 1)] - v[(1, 0)]).re,
        0.5 * (v[(0, 0)] - v[(1, 1)]).im,
    ];
    let rebuilt = su2_matrix(coeffs);
    let res = (v - rebuilt).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let norm = coeffs.iter().map(|x| x * x).sum::<f64>();
    if res > PARAM_TOL || (norm - 1.0).abs() > PARAM_TOL {
        return Err(HolonomyError::Precondition(
            "operator is not in SU(2) (V0 + i sum V_k sigma_k with real unit V)".into(),
        ));
    }
    Ok(coeffs)
}

/// V₀1 + iΣV_kσ_k.
pub fn su2_matrix(v: [f64; 4]) -> CMatrix {
    CMatrix::from_row_slice(
        2,
        2,
        &[c(v[0], v[3]), c(v[2], v[1]), c(-v[2], v[1]), c(v[0], -v[3])],
    )
}

/// q_V = V₀ + V₃i − V₂j + V₁k.
pub fn q_of_v(v: [f64; 4]) -> Quaternion {
    Quaternion::new(v[0], v[3], -v[2], v[1])
}

/// Inverse of [`q_of_v`].
pub fn v_of_q(q: Quaternion) -> [f64; 4] {
    [q.a, q.d, -q.c, q.b]
}

/// Left action of a 2×2 complex matrix on the first qubit.
pub fn apply_first(u: &CMatrix, psi: &QuaternionicSpinor) -> QuaternionicSpinor {
    let e = |i: usize, j: usize| Quaternion::from_complex(u[(i, j)]);
    QuaternionicSpinor {
        p: e(0, 0) * psi.p + e(0, 1) * psi.q,
        q: e(1, 0) * psi.p + e(1, 1) * psi.q,
    }
}

/// 𝐔 Ψ q_V.
pub fn su2_pair_action(
    psi: &QuaternionicSpinor,
    u: &CMatrix,
    v: &CMatrix,
) -> Result<QuaternionicSpinor> {
    su2_coefficients(u)?;
    let vc = su2_coefficients(v)?;
    Ok(apply_first(u, psi).times(q_of_v(vc)))
}

/// ⟨Ψ|𝐔Ψ⟩ computed in the quaternionic picture.
pub fn quaternionic_amplitude(psi: &QuaternionicSpinor, u: &CMatrix) -> Result<Quaternion> {
    su2_coefficients(u)?;
    Ok(quaternionic_inner(psi, &apply_first(u, psi)))
}

/// U₀ + ΣU_jM_j3 i − ΣU_jM_j2 j + ΣU_jM_j1 k.
pub fn amplitude_from_correlation(m: &CorrelationMatrix, u: [f64; 4]) -> Quaternion {
    let col = |k: usize| (1..4).map(|j| u[j] * m.get(j, k)).sum::<f64>();
    Quaternion::new(u[0], col(3), -col(2), col(1))
}

/// M read off the amplitudes ⟨Ψ|iσ_jΨ⟩ without going through the density matrix.
pub fn correlation_from_spinor(psi: &QuaternionicSpinor) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for (j, row) in m.iter_mut().enumerate() {
        let mut unit = [0.0; 4];
        unit[j + 1] = 1.0;
        let amp = quaternionic_inner(psi, &apply_first(&su2_matrix(unit), psi));
        *row = [amp.d, -amp.c, amp.b];
    }
    m
}

/// 1/2 + 1/2 Re(⟨Ψ|𝐔Ψ⟩ q_V).
pub fn quaternionic_mz_intensity(
    psi: &QuaternionicSpinor,
    u: &CMatrix,
    v: &CMatrix,
) -> Result<f64> {
    let amp = quaternionic_amplitude(psi, u)?;
    let qv = q_of_v(su2_coefficients(v)?);
    Ok(0.5 + 0.5 * (amp * qv).a)
}

/// V₀ = U₀/λ, V_j = −(1/λ)Σ_k U_k M_kj with λ > 0 normalizing V.
pub fn levay_parallel_v(m: &CorrelationMatrix, u: [f64; 4]) -> Result<([f64; 4], f64)> {
    if !m.is_two_qubit() {
        return Err(HolonomyError::Precondition(
            "Levay rule needs a two-qubit correlation matrix".into(),
        ));
    }
    let norm_u: f64 = u.iter().map(|x| x * x).sum();
    if (norm_u - 1.0).abs() > PARAM_TOL {
        return Err(HolonomyError::Precondition(
            "U coefficients must form a unit 4-vector".into(),
        ));
    }
    let mut raw = [u[0], 0.0, 0.0, 0.0];
    for (j, slot) in raw.iter_mut().enumerate().skip(1) {
        *slot = -(1..4).map(|k| u[k] * m.get(k, j)).sum::<f64>();
    }
    let lambda = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    if lambda < 1e-12 {
        return Err(HolonomyError::DegenerateDirection);
    }
    Ok((raw.map(|x| x / lambda), lambda))
}

/// (dVV†)_j = −Σ_k (dUU†)_k M_kj on the coefficients of i σ_k.
pub fn levay_connection(m: &CorrelationMatrix, du: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        *o = -(0..3).map(|k| du[k] * m.get(k + 1, j + 1)).sum::<f64>();
    }
    out
}

fn levay_rule(m: &[[f64; 3]; 3], du: [f64; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (j, o) in out.iter_mut().enumerate() {
        *o = -(0..3).map(|k| du[k] * m[k][j]).sum::<f64>();
    }
    out
}

/// exp(iΣφ_kσ_k) as a unit quaternion.
fn exp_su2(phi: [f64; 3]) -> Quaternion {
    let n = (phi[0] * phi[0] + phi[1] * phi[1] + phi[2] * phi[2]).sqrt();
    let s = if n > 0.0 { n.sin() / n } else { 1.0 };
    q_of_v([n.cos(), s * phi[0], s * phi[1], s * phi[2]])
}

/// Holonomy of a traceless qubit loop integrated entirely in the quaternionic
/// picture with the Lévay rule: the spinor is advanced by the loop increments
/// from the left and by the transported quaternion from the right.
pub fn levay_loop_holonomy(psi: &CVector, path: &SmoothLoop, n_steps: usize) -> Result<CMatrix> {
    if path.dim() != 2 {
        return Err(HolonomyError::DimensionMismatch {
            expected: 2,
            found: path.dim(),
        });
    }
    if path.terms().iter().any(|t| t.generator == 0) {
        return Err(HolonomyError::Precondition(
            "Levay transport needs an SU(2) loop".into(),
        ));
    }
    if n_steps == 0 {
        return Err(HolonomyError::Precondition(
            "n_steps must be positive".into(),
        ));
    }
    let mut spinor = to_quaternionic(psi)?;
    let mut total = Quaternion::ONE;
    let dt = 1.0 / n_steps as f64;
    for i in 0..n_steps {
        let t0 = i as f64 * dt;
        let g = path.generator(t0);
        // dUU† = iΣ ω_k σ_k
        let omega = [
            0.5 * (g[(0, 1)] + g[(1, 0)]).im,
            0.5 * (g[(0, 1)] - g[(1, 0)]).re,
            0.5 * (g[(0, 0)] - g[(1, 1)]).im,
        ];
        let dphi = levay_rule(&correlation_from_spinor(&spinor), omega);
        let step = exp_su2(dphi.map(|x| x * dt));
        spinor = apply_first(&path.increment(t0, t0 + dt), &spinor).times(step);
        // V ← V_step V corresponds to q_V ← q_V q_step
        total = total * step;
    }
    Ok(su2_matrix(v_of_q(total)))
}
