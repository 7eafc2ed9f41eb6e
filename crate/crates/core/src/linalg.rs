//! Small dense complex linear-algebra helpers shared by the modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Tr(a b) without forming the product.
pub fn trace_of_product(a: &CMatrix, b: &CMatrix) -> Complex64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Largest entry modulus.
pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_real(m: &RMatrix) -> f64 {
    m.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// max |U†U - 1|
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    max_abs(&(u.adjoint() * u - identity(u.nrows())))
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn anti_hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs(&(m + m.adjoint()))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Frobenius norm of [a, b].
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> f64 {
    commutator(a, b).norm()
}

/// min over φ of |V - e^{iφ} 1|_F.
pub fn phase_identity_distance(v: &CMatrix) -> f64 {
    let phase = Complex64::from_polar(1.0, v.trace().arg());
    (v - identity(v.nrows()) * phase).norm()
}

/// exp(i H) for Hermitian H, built from the spectral decomposition so the
/// result is unitary to working precision.
pub fn expi_hermitian(h: &CMatrix) -> CMatrix {
    let herm = (h + h.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let w = &eig.eigenvectors;
    let phases = CVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&x| Complex64::from_polar(1.0, x)),
    );
    w * CMatrix::from_diagonal(&phases) * w.adjoint()
}

/// exp(X) for anti-Hermitian X.
pub fn exp_anti_hermitian(x: &CMatrix) -> CMatrix {
    expi_hermitian(&(x * (-I)))
}

/// Principal logarithm of a unitary matrix: anti-Hermitian X with exp(X) = U.
pub fn log_unitary(u: &CMatrix) -> CMatrix {
    let schur = u.clone().schur();
    let (q, t) = schur.unpack();
    let logs = CVector::from_iterator(t.nrows(), (0..t.nrows()).map(|k| I * t[(k, k)].arg()));
    let x = &q * CMatrix::from_diagonal(&logs) * q.adjoint();
    (&x - x.adjoint()).scale(0.5)
}

/// Derivative data of t -> exp(i H(t)): returns (dU/dt) U† given H and dH/dt.
///
/// Uses the spectral form of the integral ∫_0^1 e^{isH} (i H') e^{-isH} ds.
pub fn dexp_right_generator(h: &CMatrix, dh: &CMatrix) -> CMatrix {
    let herm = (h + h.adjoint()).scale(0.5);
    let eig = herm.symmetric_eigen();
    let w = &eig.eigenvectors;
    let lam = &eig.eigenvalues;
    let mut inner = w.adjoint() * dh * w;
    for a in 0..inner.nrows() {
        for b in 0..inner.ncols() {
            let x = lam[a] - lam[b];
            let phi = if x.abs() < 1e-8 {
                // series of (e^{ix} - 1)/(ix)
                c(1.0 - x * x / 6.0, x / 2.0)
            } else {
                (Complex64::from_polar(1.0, x) - 1.0) / (I * x)
            };
            inner[(a, b)] *= I * phi;
        }
    }
    let g = w * inner * w.adjoint();
    (&g - g.adjoint()).scale(0.5)
}

/// Partial trace over the first factor: returns ρ^B.
pub fn partial_trace_first(rho: &CMatrix, d_a: usize, d_b: usize) -> CMatrix {
    CMatrix::from_fn(d_b, d_b, |k, l| {
        (0..d_a)
            .map(|i| rho[(i * d_b + k, i * d_b + l)])
            .sum::<Complex64>()
    })
}

/// Partial trace over the second factor: returns ρ^A.
pub fn partial_trace_second(rho: &CMatrix, d_a: usize, d_b: usize) -> CMatrix {
    CMatrix::from_fn(d_a, d_a, |i, j| {
        (0..d_b)
            .map(|k| rho[(i * d_b + k, j * d_b + k)])
            .sum::<Complex64>()
    })
}

/// A = U Σ V† with singular values in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: DVector<f64>,
    pub v_t: CMatrix,
}

impl Svd {
    pub fn recompose(&self) -> CMatrix {
        let sigma = CMatrix::from_diagonal(&self.singular_values.map(|x| c(x, 0.0)));
        &self.u * sigma * &self.v_t
    }
}

/// SVD of a square complex matrix by one-sided Jacobi rotations.
///
/// nalgebra's complex bidiagonal SVD loses accuracy on some normal rank-one
/// 2×2 inputs (recomposition errors of order 0.1), which is exactly the
/// shape that pure product states produce.
pub fn svd(m: &CMatrix) -> Svd {
    let n = m.ncols();
    assert_eq!(m.nrows(), n, "svd expects a square matrix");
    let mut a = m.clone();
    let mut v = identity(n);
    for _ in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                if gamma.norm() <= f64::EPSILON * (alpha * beta).sqrt() || gamma.norm() == 0.0 {
                    continue;
                }
                rotated = true;
                let phase = gamma / gamma.norm();
                let zeta = (beta - alpha) / (2.0 * gamma.norm());
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..n {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] / phase;
                        mat[(i, p)] = xp * cs - xq * sn;
                        mat[(i, q)] = xp * sn + xq * cs;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let mut u = CMatrix::zeros(n, n);
    let mut filled = 0;
    let candidates = order
        .iter()
        .filter(|&&j| norms[j] > 0.0)
        .map(|&j| a.column(j) / c(norms[j], 0.0))
        .chain((0..n).map(|e| CVector::from_fn(n, |i, _| c(if i == e { 1.0 } else { 0.0 }, 0.0))));
    // columns of tiny singular values are only orthogonal to working precision
    // relative to the largest one, so they are re-orthogonalized and, in the
    // numerical kernel, replaced by a completion of the basis
    for mut x in candidates {
        if filled == n {
            break;
        }
        for _ in 0..2 {
            for k in 0..filled {
                let proj = u.column(k).dotc(&x);
                x -= u.column(k) * proj;
            }
        }
        let nx = x.norm();
        if nx > 0.5 {
            u.set_column(filled, &(x / c(nx, 0.0)));
            filled += 1;
        }
    }
    let v_sorted = CMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    Svd {
        u,
        singular_values: DVector::from_iterator(n, order.iter().map(|&j| norms[j])),
        v_t: v_sorted.adjoint(),
    }
}

/// Real least squares min |A x - b| via SVD.
pub fn least_squares(a: &RMatrix, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    svd.solve(b, 1e-13)
        .unwrap_or_else(|_| DVector::zeros(a.ncols()))
}

pub fn smallest_singular_value(m: &RMatrix) -> f64 {
    m.singular_values()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Entries of a matrix as a flat row-major list of (re, im), for ordering.
pub fn row_major_parts(m: &CMatrix) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)].re);
            out.push(m[(i, j)].im);
        }
    }
    out
}
