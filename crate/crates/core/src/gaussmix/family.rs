//! Dimension-free model descriptions that can be instantiated at any `N`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::covariance::CovarianceSpec;
use super::model::{Backend, MixtureModel, ModelOptions};
use crate::error::{Error, Result};
use crate::linalg::DEFAULT_DENSE_CAP;
use crate::siggen::mixing::{db_to_ratio, validate_priors};

/// Unit-variance stationary covariance shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum CovarianceShape {
    White,
    /// Toeplitz AR(1), `r(m) = a^|m|`.
    Ar1 { coef: f64 },
    /// Periodized AR(1) whose Toeplitz matrix is exactly circulant.
    Ar1Circulant { coef: f64 },
    /// Explicit lags, rescaled so that `r(0) = 1`.
    Acov { acov: Vec<Complex64> },
}

impl CovarianceShape {
    pub fn build(&self, variance: f64, n: usize) -> Result<CovarianceSpec> {
        match self {
            CovarianceShape::White => CovarianceSpec::white(variance, n),
            CovarianceShape::Ar1 { coef } => CovarianceSpec::ar1(*coef, variance, n),
            CovarianceShape::Ar1Circulant { coef } => CovarianceSpec::ar1_circulant(*coef, variance, n),
            CovarianceShape::Acov { acov } => {
                let r0 = acov.first().map(|r| r.re).unwrap_or(0.0);
                if r0 <= 0.0 {
                    return Err(Error::invalid("autocovariance shape needs a positive lag 0"));
                }
                let lags = acov.iter().take(n).map(|r| r * (variance / r0)).collect();
                CovarianceSpec::stationary(lags, n)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelFamily {
    pub priors: Vec<f64>,
    /// Per-sample SOI-to-interference power ratio.
    pub sir_db: f64,
    pub soi: CovarianceShape,
    pub interference: Vec<CovarianceShape>,
    pub backend: Backend,
    pub dense_cap: usize,
}

impl Default for ModelFamily {
    /// White SOI against AR(0.5) and AR(0.95) interference at 0 dB, equal priors.
    fn default() -> Self {
        Self {
            priors: vec![0.5, 0.5],
            sir_db: 0.0,
            soi: CovarianceShape::White,
            interference: vec![CovarianceShape::Ar1Circulant { coef: 0.5 }, CovarianceShape::Ar1Circulant { coef: 0.95 }],
            backend: Backend::Auto,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

impl ModelFamily {
    pub fn validate(&self) -> Result<()> {
        validate_priors(&self.priors)?;
        if self.priors.len() != self.interference.len() {
            return Err(Error::DimensionMismatch { expected: self.priors.len(), found: self.interference.len() });
        }
        if self.sir_db.is_nan() {
            return Err(Error::invalid("sir_db is NaN"));
        }
        Ok(())
    }

    pub fn build(&self, n: usize) -> Result<MixtureModel> {
        self.validate()?;
        let level = db_to_ratio(-self.sir_db);
        let soi = self.soi.build(1.0, n)?;
        let interference = self.interference.iter().map(|s| s.build(level, n)).collect::<Result<Vec<_>>>()?;
        MixtureModel::with_options(
            self.priors.clone(),
            soi,
            interference,
            ModelOptions { backend: self.backend, dense_cap: self.dense_cap },
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussmix::model::ComputePath;

    #[test]
    fn default_family_is_spectral_and_scaled() {
        let f = ModelFamily { sir_db: -10.0, ..ModelFamily::default() };
        let m = f.build(64).unwrap();
        assert_eq!(m.path(), ComputePath::Spectral);
        assert!((m.interference()[1].mean_variance() - 10.0).abs() < 1e-12);
        assert!((m.soi().mean_variance() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn json_defaults() {
        let f: ModelFamily = serde_json::from_str(r#"{"sir_db": -3}"#).unwrap();
        assert_eq!(f.interference.len(), 2);
        let text = serde_json::to_string(&ModelFamily::default()).unwrap();
        assert!(text.contains("ar1_circulant"));
        assert!(serde_json::from_str::<ModelFamily>(r#"{"sirdb": 1}"#).is_err());
    }

    #[test]
    fn acov_shape_normalizes() {
        let s = CovarianceShape::Acov { acov: vec![Complex64::new(4.0, 0.0), Complex64::new(2.0, 0.0)] };
        let c = s.build(1.0, 3).unwrap();
        assert_eq!(c, CovarianceSpec::stationary(vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, 0.0)], 3).unwrap());
    }
}
