//! Dense complex linear-algebra helpers shared by the estimators and samplers.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Relative pivot tolerance for semidefinite factorizations.
pub const PSD_PIVOT_TOL: f64 = 1e-10;

/// Relative jitter added once when a Cholesky factorization fails.
pub const JITTER_EPS: f64 = 1e-10;

/// Largest dimension accepted by the dense O(N^3) code paths.
pub const DEFAULT_DENSE_CAP: usize = 4096;

const C0: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Draws one circularly-symmetric complex Gaussian with unit variance.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn complex_normal_vec<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<Complex64> {
    (0..n).map(|_| complex_normal(rng)).collect()
}

pub fn trace_re(m: &CMatrix) -> f64 {
    (0..m.nrows()).map(|i| m[(i, i)].re).sum()
}

/// Max |m - m^H| relative to max |m|.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            scale = scale.max(m[(i, j)].norm());
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if scale == 0.0 {
        0.0
    } else {
        worst / scale
    }
}

pub fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    Ok(m.nrows())
}

/// Lower-triangular factor `L` with `L L^H = C` for a Hermitian PSD matrix.
///
/// Pivots in `[-tol, tol]` (tol = 1e-10 trace) are treated as exact zeros so
/// rank-deficient covariances factor cleanly; a pivot below `-tol` is an error.
pub fn psd_factor(c: &CMatrix) -> Result<CMatrix> {
    let n = check_square(c)?;
    let tol = PSD_PIVOT_TOL * trace_re(c).abs();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = c[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d < -tol {
            return Err(Error::NotPsd(format!("pivot {j} is {d:.3e} (tolerance {tol:.3e})")));
        }
        if d <= tol {
            continue;
        }
        let djj = d.sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut v = c[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = v / djj;
        }
    }
    Ok(l)
}

/// Cholesky factorization of a strictly positive-definite Hermitian matrix.
///
/// On failure a single jitter of `1e-10 trace/N` is added to the diagonal;
/// the applied jitter (0 when none) is returned with the factor.
pub fn cholesky_with_jitter(c: &CMatrix) -> Result<(Cholesky<Complex64, Dyn>, f64)> {
    let n = check_square(c)?;
    if let Some(ch) = Cholesky::new(c.clone()) {
        if ch.l_dirty().diagonal().iter().all(|d| d.re > 0.0 && d.re.is_finite()) {
            return Ok((ch, 0.0));
        }
    }
    let jitter = JITTER_EPS * trace_re(c).abs() / n.max(1) as f64;
    if jitter > 0.0 {
        let mut reg = c.clone();
        for i in 0..n {
            reg[(i, i)] += Complex64::new(jitter, 0.0);
        }
        if let Some(ch) = Cholesky::new(reg) {
            if ch.l_dirty().diagonal().iter().all(|d| d.re > 0.0 && d.re.is_finite()) {
                return Ok((ch, jitter));
            }
        }
    }
    Err(Error::numerical(format!(
        "covariance of dimension {n} is singular beyond the jitter budget"
    )))
}

pub fn chol_logdet(ch: &Cholesky<Complex64, Dyn>) -> f64 {
    ch.l_dirty().diagonal().iter().map(|d| 2.0 * d.re.ln()).sum()
}

/// Solves `L z = b` for lower-triangular `L` (only the lower triangle is read).
pub fn forward_substitute(l: &CMatrix, b: &[Complex64]) -> Vec<Complex64> {
    let n = b.len();
    let mut z = b.to_vec();
    // column-oriented sweep matches nalgebra's column-major storage
    for j in 0..n {
        let d = l[(j, j)];
        if d == C0 {
            z[j] = C0;
            continue;
        }
        z[j] /= d;
        let zj = z[j];
        let col = l.column(j);
        for i in (j + 1)..n {
            z[i] -= col[i] * zj;
        }
    }
    z
}

pub fn matvec(m: &CMatrix, x: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![C0; m.nrows()];
    for (j, &xj) in x.iter().enumerate() {
        if xj == C0 {
            continue;
        }
        let col = m.column(j);
        for (o, &mij) in out.iter_mut().zip(col.iter()) {
            *o += mij * xj;
        }
    }
    out
}

/// Lower-triangular matrix-vector product `L g`.
pub fn lower_matvec(l: &CMatrix, g: &[Complex64]) -> Vec<Complex64> {
    let n = g.len();
    let mut out = vec![C0; n];
    for (j, &gj) in g.iter().enumerate() {
        let col = l.column(j);
        for i in j..n {
            out[i] += col[i] * gj;
        }
    }
    out
}

/// Explicit Toeplitz matrix `T[i][j] = r(i - j)` with `r(-m) = conj(r(m))` and
/// `r(m) = 0` beyond the supplied lags.
pub fn toeplitz_hermitian(acov: &[Complex64], n: usize) -> CMatrix {
    let lag = |m: usize| acov.get(m).copied().unwrap_or(C0);
    CMatrix::from_fn(n, n, |i, j| if i >= j { lag(i - j) } else { lag(j - i).conj() })
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
