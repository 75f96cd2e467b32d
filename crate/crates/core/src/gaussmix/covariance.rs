//! Covariance descriptions: dense Hermitian matrices or stationary autocovariances.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::spectral;

const HERMITIAN_TOL: f64 = 1e-12;
const SPECTRUM_TOL: f64 = 1e-10;

/// Covariance of a length-`dim` complex vector.
///
/// The stationary form stores lags `r[0..L]`; its dense meaning is the Hermitian
/// Toeplitz matrix `T[i][j] = r(i - j)` with `r(m) = 0` for `m >= L`. The FFT
/// code paths use the circulant with first column `r(m)` for `m <= dim/2` and
/// `conj(r(dim - m))` above, which equals the Toeplitz matrix whenever the lags
/// are themselves circulant (see [`CovarianceSpec::is_exact_circulant`]).
#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceSpec {
    Dense(CMatrix),
    Stationary { acov: Vec<Complex64>, dim: usize },
}

impl CovarianceSpec {
    pub fn dense(m: CMatrix) -> Result<Self> {
        let n = linalg::check_square(&m)?;
        if n == 0 {
            return Err(Error::invalid("covariance dimension must be at least 1"));
        }
        let defect = linalg::hermitian_defect(&m);
        if defect > HERMITIAN_TOL {
            return Err(Error::invalid(format!("matrix is not Hermitian (relative defect {defect:.3e})")));
        }
        Ok(CovarianceSpec::Dense(m))
    }

    pub fn stationary(acov: Vec<Complex64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("covariance dimension must be at least 1"));
        }
        let r0 = *acov.first().ok_or_else(|| Error::invalid("autocovariance needs lag 0"))?;
        if r0.re < 0.0 || r0.im.abs() > HERMITIAN_TOL * r0.re.abs().max(1.0) {
            return Err(Error::NotPsd(format!("lag-0 autocovariance {r0} is not a nonnegative real")));
        }
        if let Some(m) = acov.iter().position(|r| r.norm() > r0.re * (1.0 + 1e-12)) {
            return Err(Error::NotPsd(format!("|r[{m}]| exceeds r[0]")));
        }
        let mut acov = acov;
        acov[0] = Complex64::new(r0.re, 0.0);
        Ok(CovarianceSpec::Stationary { acov, dim })
    }

    /// White covariance `variance * I`.
    pub fn white(variance: f64, dim: usize) -> Result<Self> {
        Self::stationary(vec![Complex64::new(variance, 0.0)], dim)
    }

    /// AR(1) autocovariance `variance * a^|m|` as a Toeplitz covariance.
    pub fn ar1(coef: f64, variance: f64, dim: usize) -> Result<Self> {
        check_ar_coef(coef)?;
        let acov = (0..dim).map(|m| Complex64::new(variance * coef.powi(m as i32), 0.0)).collect();
        Self::stationary(acov, dim)
    }

    /// Circulant analog of AR(1): the periodized autocovariance, normalized to
    /// the given variance. Its spectrum is the AR(1) spectrum sampled on the
    /// DFT grid, so the Toeplitz and circulant readings coincide exactly.
    pub fn ar1_circulant(coef: f64, variance: f64, dim: usize) -> Result<Self> {
        check_ar_coef(coef)?;
        let an = coef.powi(dim as i32);
        let acov = (0..dim)
            .map(|m| {
                let v = (coef.powi(m as i32) + coef.powi((dim - m) as i32)) / (1.0 + an);
                Complex64::new(variance * if m == 0 { 1.0 } else { v }, 0.0)
            })
            .collect();
        Self::stationary(acov, dim)
    }

    pub fn dim(&self) -> usize {
        match self {
            CovarianceSpec::Dense(m) => m.nrows(),
            CovarianceSpec::Stationary { dim, .. } => *dim,
        }
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self, CovarianceSpec::Stationary { .. })
    }

    /// Average per-sample variance, `trace / N`.
    pub fn mean_variance(&self) -> f64 {
        match self {
            CovarianceSpec::Dense(m) => linalg::trace_re(m) / m.nrows() as f64,
            CovarianceSpec::Stationary { acov, .. } => acov[0].re,
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        match self {
            CovarianceSpec::Dense(m) => m.clone(),
            CovarianceSpec::Stationary { acov, dim } => linalg::toeplitz_hermitian(acov, *dim),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            CovarianceSpec::Dense(m) => CovarianceSpec::Dense(m * Complex64::new(factor, 0.0)),
            CovarianceSpec::Stationary { acov, dim } => CovarianceSpec::Stationary {
                acov: acov.iter().map(|r| r * factor).collect(),
                dim: *dim,
            },
        }
    }

    /// Sum of two covariances; stationary + stationary stays stationary.
    pub fn sum(&self, other: &CovarianceSpec) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        match (self, other) {
            (
                CovarianceSpec::Stationary { acov: a, dim },
                CovarianceSpec::Stationary { acov: b, .. },
            ) => {
                let len = a.len().max(b.len());
                let zero = Complex64::new(0.0, 0.0);
                let acov = (0..len)
                    .map(|m| a.get(m).copied().unwrap_or(zero) + b.get(m).copied().unwrap_or(zero))
                    .collect();
                Ok(CovarianceSpec::Stationary { acov, dim: *dim })
            }
            _ => Ok(CovarianceSpec::Dense(self.to_dense() + other.to_dense())),
        }
    }

    /// Whether the Toeplitz matrix is itself circulant: `r(m) = conj(r(N - m))`.
    pub fn is_exact_circulant(&self) -> bool {
        let CovarianceSpec::Stationary { acov, dim } = self else {
            return false;
        };
        let n = *dim;
        let lag = |m: usize| acov.get(m).copied().unwrap_or_default();
        let tol = 1e-12 * acov[0].re.max(f64::MIN_POSITIVE);
        (1..n).all(|m| (lag(m) - lag(n - m).conj()).norm() <= tol)
    }

    /// First column of the circulant used by the FFT paths.
    pub fn circulant_column(&self) -> Result<Vec<Complex64>> {
        let CovarianceSpec::Stationary { acov, dim } = self else {
            return Err(Error::UnsupportedForm("dense covariance has no circulant form".into()));
        };
        let n = *dim;
        let lag = |m: usize| acov.get(m).copied().unwrap_or_default();
        let mut c: Vec<Complex64> = (0..n)
            .map(|m| if 2 * m <= n { lag(m) } else { lag(n - m).conj() })
            .collect();
        if n % 2 == 0 && n > 0 {
            c[n / 2] = Complex64::new(c[n / 2].re, 0.0);
        }
        Ok(c)
    }

    /// Eigenvalues of the circulant form (the power spectrum on the DFT grid).
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        let c = self.circulant_column()?;
        let mut lambda = spectral::circulant_eigenvalues(&c);
        let scale = lambda.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        let min = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -SPECTRUM_TOL * scale {
            return Err(Error::NotPsd(format!(
                "circulant spectrum has negative value {min:.3e} (max {scale:.3e})"
            )));
        }
        lambda.iter_mut().for_each(|l| *l = l.max(0.0));
        Ok(lambda)
    }

    /// Full semidefiniteness check: spectrum for circulant stationary forms,
    /// a pivoted factorization otherwise.
    pub fn validate_psd(&self) -> Result<()> {
        if self.is_exact_circulant() {
            return self.spectrum().map(|_| ());
        }
        linalg::psd_factor(&self.to_dense()).map(|_| ())
    }
}

fn check_ar_coef(coef: f64) -> Result<()> {
    if !(coef.is_finite() && coef.abs() < 1.0) {
        return Err(Error::invalid(format!("AR(1) coefficient {coef} must satisfy |a| < 1")));
    }
    Ok(())
}

/// JSON form of a covariance: dense as row-major `[re, im]` pairs, stationary
/// as an autocovariance list of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceJson {
    Dense { dim: usize, data: Vec<Complex64> },
    Stationary { dim: usize, acov: Vec<Complex64> },
}

impl From<&CovarianceSpec> for CovarianceJson {
    fn from(c: &CovarianceSpec) -> Self {
        match c {
            CovarianceSpec::Dense(m) => {
                let n = m.nrows();
                let data = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect();
                CovarianceJson::Dense { dim: n, data }
            }
            CovarianceSpec::Stationary { acov, dim } => CovarianceJson::Stationary { dim: *dim, acov: acov.clone() },
        }
    }
}

impl TryFrom<CovarianceJson> for CovarianceSpec {
    type Error = Error;

    fn try_from(j: CovarianceJson) -> Result<Self> {
        match j {
            CovarianceJson::Dense { dim, data } => {
                if data.len() != dim * dim {
                    return Err(Error::DimensionMismatch { expected: dim * dim, found: data.len() });
                }
                CovarianceSpec::dense(CMatrix::from_row_slice(dim, dim, &data))
            }
            CovarianceJson::Stationary { dim, acov } => CovarianceSpec::stationary(acov, dim),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn stationary_sum_adds_lags() {
        let a = CovarianceSpec::stationary(vec![c(1.0), c(0.5)], 4).unwrap();
        let b = CovarianceSpec::stationary(vec![c(2.0)], 4).unwrap();
        let s = a.sum(&b).unwrap();
        assert_eq!(s, CovarianceSpec::Stationary { acov: vec![c(3.0), c(0.5)], dim: 4 });
    }

    #[test]
    fn stationary_plus_dense_is_toeplitz_plus_dense() {
        let a = CovarianceSpec::ar1(0.7, 1.0, 5).unwrap();
        let d = CMatrix::from_fn(5, 5, |i, j| if i == j { c(1.0 + i as f64) } else { c(0.0) });
        let b = CovarianceSpec::dense(d.clone()).unwrap();
        let CovarianceSpec::Dense(s) = a.sum(&b).unwrap() else { panic!("expected dense") };
        // independent materialization
        let expect = CMatrix::from_fn(5, 5, |i, j| c(0.7f64.powi((i as i32 - j as i32).abs()))) + d;
        assert!(linalg::frobenius(&(s - expect)) < 1e-14);
    }

    #[test]
    fn ar1_circulant_is_exact_and_unit_variance() {
        let cov = CovarianceSpec::ar1_circulant(0.95, 1.0, 32).unwrap();
        assert!(cov.is_exact_circulant());
        assert!((cov.mean_variance() - 1.0).abs() < 1e-15);
        // spectrum proportional to the sampled AR(1) spectrum
        let lambda = cov.spectrum().unwrap();
        let a: f64 = 0.95;
        let norm = (1.0 - a.powi(32)) / (1.0 + a.powi(32));
        for (j, l) in lambda.iter().enumerate() {
            let w = 2.0 * std::f64::consts::PI * j as f64 / 32.0;
            let s = (1.0 - a * a) / (1.0 - 2.0 * a * w.cos() + a * a);
            assert!((l - norm * s).abs() < 1e-10, "bin {j}: {l} vs {}", norm * s);
        }
        assert!(!CovarianceSpec::ar1(0.95, 1.0, 32).unwrap().is_exact_circulant());
        assert!(CovarianceSpec::white(2.0, 7).unwrap().is_exact_circulant());
    }

    #[test]
    fn rejects_invalid_stationary() {
        assert!(CovarianceSpec::stationary(vec![], 3).is_err());
        assert!(CovarianceSpec::stationary(vec![c(-1.0)], 3).is_err());
        assert!(CovarianceSpec::stationary(vec![c(1.0), c(2.0)], 3).is_err());
        assert!(CovarianceSpec::ar1(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn dense_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.0), c(1.0)]);
        assert!(CovarianceSpec::dense(m).is_err());
    }

    #[test]
    fn json_round_trip() {
        let d = CovarianceSpec::dense(CMatrix::from_row_slice(
            2,
            2,
            &[c(2.0), Complex64::new(0.5, 0.5), Complex64::new(0.5, -0.5), c(1.0)],
        ))
        .unwrap();
        let s = CovarianceSpec::ar1(0.3, 1.0, 3).unwrap();
        for cov in [d, s] {
            let text = serde_json::to_string(&CovarianceJson::from(&cov)).unwrap();
            let back: CovarianceJson = serde_json::from_str(&text).unwrap();
            assert_eq!(CovarianceSpec::try_from(back).unwrap(), cov);
        }
    }
}
