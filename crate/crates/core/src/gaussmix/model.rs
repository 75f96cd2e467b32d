//! The Gaussian mixture signal model with cached factorizations.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::covariance::{CovarianceJson, CovarianceSpec};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, DEFAULT_DENSE_CAP, JITTER_EPS};
use crate::siggen::mixing::{sample_type, validate_priors};
use crate::siggen::GaussianSampler;
use crate::signal::ComplexSignal;
use crate::spectral;

/// Which linear-algebra path evaluates the estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    /// Spectral when every covariance is stationary and either all are exactly
    /// circulant or `N` exceeds the dense cap; dense otherwise.
    #[default]
    Auto,
    Dense,
    /// Per-frequency evaluation on the circulant form (exact only for circulant
    /// covariances, a circulant approximation otherwise).
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    pub backend: Backend,
    pub dense_cap: usize,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self { backend: Backend::Auto, dense_cap: DEFAULT_DENSE_CAP }
    }
}

/// Resolved evaluation path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputePath {
    Dense,
    Spectral,
}

#[derive(Debug)]
struct DenseType {
    chol_l: CMatrix,
    logdet: f64,
    /// `C_s C_y^{-1}`.
    gain: CMatrix,
    jitter: f64,
}

#[derive(Debug)]
struct SpectralCache {
    lambda_y: Vec<Vec<f64>>,
    /// Per-bin Wiener gains `lambda_s / lambda_y`.
    gains: Vec<Vec<f64>>,
    logdet: Vec<f64>,
    jitter: Vec<f64>,
}

#[derive(Debug)]
struct Samplers {
    soi: GaussianSampler,
    interference: Vec<GaussianSampler>,
}

/// Priors, SOI covariance and per-type interference covariances, with the
/// factorizations of every `C_y_k = C_s + C_b_k` computed at construction.
///
/// Type indices are 0-based. The model is immutable; clones share caches.
#[derive(Debug, Clone)]
pub struct MixtureModel {
    priors: Vec<f64>,
    soi: CovarianceSpec,
    interference: Vec<CovarianceSpec>,
    options: ModelOptions,
    path: ComputePath,
    dense: Option<Arc<Vec<DenseType>>>,
    spectral: Option<Arc<SpectralCache>>,
    samplers: Arc<OnceLock<std::result::Result<Samplers, String>>>,
}

impl MixtureModel {
    pub fn new(priors: Vec<f64>, soi: CovarianceSpec, interference: Vec<CovarianceSpec>) -> Result<Self> {
        Self::with_options(priors, soi, interference, ModelOptions::default())
    }

    pub fn with_options(
        priors: Vec<f64>,
        soi: CovarianceSpec,
        interference: Vec<CovarianceSpec>,
        options: ModelOptions,
    ) -> Result<Self> {
        validate_priors(&priors)?;
        if interference.len() != priors.len() {
            return Err(Error::DimensionMismatch { expected: priors.len(), found: interference.len() });
        }
        let n = soi.dim();
        if let Some(b) = interference.iter().find(|b| b.dim() != n) {
            return Err(Error::DimensionMismatch { expected: n, found: b.dim() });
        }
        let all_stationary = soi.is_stationary() && interference.iter().all(|b| b.is_stationary());
        let all_circulant = soi.is_exact_circulant() && interference.iter().all(|b| b.is_exact_circulant());
        let path = match options.backend {
            Backend::Dense => ComputePath::Dense,
            Backend::Spectral => {
                if !all_stationary {
                    return Err(Error::UnsupportedForm("spectral backend needs stationary covariances".into()));
                }
                ComputePath::Spectral
            }
            Backend::Auto if all_stationary && (all_circulant || n > options.dense_cap) => ComputePath::Spectral,
            Backend::Auto => ComputePath::Dense,
        };
        if path == ComputePath::Spectral && !all_circulant {
            log::warn!("N = {n}: stationary covariances are evaluated through their circulant approximation");
        }
        if path == ComputePath::Dense && n > options.dense_cap {
            return Err(Error::invalid(format!(
                "dimension {n} exceeds the dense cap {}; use stationary covariances",
                options.dense_cap
            )));
        }
        let spectral = if all_stationary {
            match build_spectral(&soi, &interference) {
                Ok(c) => Some(Arc::new(c)),
                Err(e) if path == ComputePath::Spectral => return Err(e),
                Err(_) => None,
            }
        } else {
            None
        };
        let dense = if path == ComputePath::Dense { Some(Arc::new(build_dense(&soi, &interference)?)) } else { None };
        Ok(Self { priors, soi, interference, options, path, dense, spectral, samplers: Arc::new(OnceLock::new()) })
    }

    /// Same covariances and caches under different priors.
    pub fn with_priors(&self, priors: Vec<f64>) -> Result<Self> {
        validate_priors(&priors)?;
        if priors.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), found: priors.len() });
        }
        Ok(Self { priors, ..self.clone() })
    }

    pub fn k(&self) -> usize {
        self.priors.len()
    }

    pub fn dim(&self) -> usize {
        self.soi.dim()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn soi(&self) -> &CovarianceSpec {
        &self.soi
    }

    pub fn interference(&self) -> &[CovarianceSpec] {
        &self.interference
    }

    pub fn options(&self) -> ModelOptions {
        self.options
    }

    pub fn path(&self) -> ComputePath {
        self.path
    }

    /// Diagonal jitter applied to each `C_y_k` (0 when none was needed).
    pub fn jitter(&self) -> Vec<f64> {
        match self.path {
            ComputePath::Dense => self.dense_cache().iter().map(|d| d.jitter).collect(),
            ComputePath::Spectral => self.spectral_cache().jitter.clone(),
        }
    }

    pub fn check_type(&self, k: usize) -> Result<()> {
        if k >= self.k() {
            return Err(Error::TypeOutOfRange { index: k, k: self.k() });
        }
        Ok(())
    }

    pub fn check_dim(&self, y: &ComplexSignal) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: y.len() });
        }
        Ok(())
    }

    pub fn cov_y(&self, k: usize) -> Result<CovarianceSpec> {
        self.check_type(k)?;
        self.soi.sum(&self.interference[k])
    }

    fn dense_cache(&self) -> &[DenseType] {
        self.dense.as_deref().expect("dense path has a dense cache")
    }

    fn spectral_cache(&self) -> &SpectralCache {
        self.spectral.as_deref().expect("spectral path has a spectral cache")
    }

    /// `log det C_y_k` for every type.
    pub fn logdets(&self) -> Vec<f64> {
        match self.path {
            ComputePath::Dense => self.dense_cache().iter().map(|d| d.logdet).collect(),
            ComputePath::Spectral => self.spectral_cache().logdet.clone(),
        }
    }

    /// Evaluates everything an estimator needs from one observation.
    pub(crate) fn evaluate(&self, y: &ComplexSignal, with_estimates: bool) -> Result<Evaluation> {
        self.check_dim(y)?;
        let k = self.k();
        let mut quad = Vec::with_capacity(k);
        let mut estimates = Vec::with_capacity(if with_estimates { k } else { 0 });
        match self.path {
            ComputePath::Dense => {
                for d in self.dense_cache() {
                    let z = linalg::forward_substitute(&d.chol_l, y.as_slice());
                    quad.push(z.iter().map(|v| v.norm_sqr()).sum());
                    if with_estimates {
                        estimates.push(linalg::matvec(&d.gain, y.as_slice()));
                    }
                }
            }
            ComputePath::Spectral => {
                let cache = self.spectral_cache();
                let spec = spectral::unitary_dft(y.as_slice());
                for t in 0..k {
                    quad.push(spec.iter().zip(&cache.lambda_y[t]).map(|(v, l)| v.norm_sqr() / l).sum());
                    if with_estimates {
                        estimates.push(apply_gains(&spec, &cache.gains[t]));
                    }
                }
            }
        }
        Ok(Evaluation { quad, estimates })
    }

    /// Per-type LMMSE estimate `C_s C_y_k^{-1} y` through the cached path.
    pub fn lmmse(&self, y: &ComplexSignal, k: usize) -> Result<ComplexSignal> {
        self.check_type(k)?;
        self.check_dim(y)?;
        let out = match self.path {
            ComputePath::Dense => linalg::matvec(&self.dense_cache()[k].gain, y.as_slice()),
            ComputePath::Spectral => {
                apply_gains(&spectral::unitary_dft(y.as_slice()), &self.spectral_cache().gains[k])
            }
        };
        finite_signal(out)
    }

    /// Wiener filtering on the circulant spectra, regardless of the chosen path.
    pub fn stationary_lmmse_fft(&self, y: &ComplexSignal, k: usize) -> Result<ComplexSignal> {
        self.check_type(k)?;
        self.check_dim(y)?;
        let cache = self
            .spectral
            .as_deref()
            .ok_or_else(|| Error::UnsupportedForm("FFT path needs stationary covariances".into()))?;
        finite_signal(apply_gains(&spectral::unitary_dft(y.as_slice()), &cache.gains[k]))
    }

    fn samplers(&self) -> Result<&Samplers> {
        let cell = self.samplers.get_or_init(|| {
            let build = |c: &CovarianceSpec| -> Result<GaussianSampler> {
                match GaussianSampler::for_covariance(c) {
                    // a PSD Toeplitz can still have an indefinite minimal embedding
                    Err(Error::NotPsd(_)) if c.is_stationary() && c.dim() <= self.options.dense_cap => {
                        GaussianSampler::dense_with_cap(&c.to_dense(), self.options.dense_cap)
                    }
                    other => other,
                }
            };
            let soi = build(&self.soi).map_err(|e| e.to_string())?;
            let interference = self
                .interference
                .iter()
                .map(|b| build(b).map_err(|e| e.to_string()))
                .collect::<std::result::Result<_, _>>()?;
            Ok(Samplers { soi, interference })
        });
        cell.as_ref().map_err(|e| Error::NotPsd(e.clone()))
    }

    /// Draws `(y, s)` with `s ~ CN(0, C_s)` and `y = s + b`, `b ~ CN(0, C_b_k)`.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<(ComplexSignal, ComplexSignal)> {
        self.check_type(k)?;
        let samplers = self.samplers()?;
        let s = samplers.soi.draw(rng);
        let b = samplers.interference[k].draw(rng);
        let y: Vec<Complex64> = s.iter().zip(&b).map(|(a, b)| a + b).collect();
        Ok((ComplexSignal::from_vec_unchecked(y), ComplexSignal::from_vec_unchecked(s)))
    }

    /// Draws a type from the priors, then `(y, s)` under it.
    pub fn sample_mixture<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(ComplexSignal, ComplexSignal, usize)> {
        let k = sample_type(&self.priors, rng);
        let (y, s) = self.sample(k, rng)?;
        Ok((y, s, k))
    }

    /// Analytical per-type LMMSE error `tr(C_s - C_s C_y_k^{-1} C_s)`.
    pub fn lmmse_mse(&self, k: usize) -> Result<f64> {
        self.check_type(k)?;
        match self.path {
            ComputePath::Dense => {
                let cs = self.soi.to_dense();
                let reduce = &self.dense_cache()[k].gain * &cs;
                Ok(linalg::trace_re(&cs) - linalg::trace_re(&reduce))
            }
            ComputePath::Spectral => {
                let cache = self.spectral_cache();
                Ok(cache.gains[k].iter().zip(&cache.lambda_y[k]).map(|(g, ly)| g * ly * (1.0 - g)).sum())
            }
        }
    }

    pub fn to_json(&self) -> MixtureModelJson {
        MixtureModelJson {
            k: self.k(),
            priors: self.priors.clone(),
            soi: CovarianceJson::from(&self.soi),
            interference: self.interference.iter().map(CovarianceJson::from).collect(),
            options: self.options,
        }
    }
}

pub(crate) struct Evaluation {
    pub quad: Vec<f64>,
    pub estimates: Vec<Vec<Complex64>>,
}

fn apply_gains(spec: &[Complex64], gains: &[f64]) -> Vec<Complex64> {
    let filtered: Vec<Complex64> = spec.iter().zip(gains).map(|(v, g)| v * *g).collect();
    spectral::unitary_idft(&filtered)
}

fn finite_signal(v: Vec<Complex64>) -> Result<ComplexSignal> {
    ComplexSignal::new(v).map_err(|_| Error::numerical("estimate is not finite"))
}

fn build_dense(soi: &CovarianceSpec, interference: &[CovarianceSpec]) -> Result<Vec<DenseType>> {
    let cs = soi.to_dense();
    interference
        .iter()
        .map(|b| {
            let cy = &cs + b.to_dense();
            let (ch, jitter) = linalg::cholesky_with_jitter(&cy)?;
            let logdet = linalg::chol_logdet(&ch);
            // (C_y^{-1} C_s)^H = C_s C_y^{-1} since both are Hermitian
            let gain = ch.solve(&cs).adjoint();
            Ok(DenseType { chol_l: ch.l(), logdet, gain, jitter })
        })
        .collect()
}

fn build_spectral(soi: &CovarianceSpec, interference: &[CovarianceSpec]) -> Result<SpectralCache> {
    let ls = soi.spectrum()?;
    let mut cache = SpectralCache { lambda_y: vec![], gains: vec![], logdet: vec![], jitter: vec![] };
    for b in interference {
        let mut ly = soi.sum(b)?.spectrum()?;
        let mut jitter = 0.0;
        if ly.iter().any(|&l| l <= 0.0) {
            jitter = JITTER_EPS * ly.iter().sum::<f64>() / ly.len() as f64;
            ly.iter_mut().for_each(|l| *l += jitter);
            if ly.iter().any(|&l| l <= 0.0) {
                return Err(Error::numerical("covariance spectrum is singular beyond the jitter budget"));
            }
        }
        cache.gains.push(ls.iter().zip(&ly).map(|(s, y)| (s / y).min(1.0)).collect());
        cache.logdet.push(ly.iter().map(|l| l.ln()).sum());
        cache.lambda_y.push(ly);
        cache.jitter.push(jitter);
    }
    Ok(cache)
}

/// `-N log(pi)` term of the complex Gaussian log-density.
pub(crate) fn log_pi_term(n: usize) -> f64 {
    -(n as f64) * PI.ln()
}

/// JSON descriptor of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureModelJson {
    #[serde(rename = "K")]
    pub k: usize,
    pub priors: Vec<f64>,
    pub soi: CovarianceJson,
    pub interference: Vec<CovarianceJson>,
    #[serde(default)]
    pub options: ModelOptions,
}

impl TryFrom<MixtureModelJson> for MixtureModel {
    type Error = Error;

    fn try_from(j: MixtureModelJson) -> Result<Self> {
        if j.k != j.priors.len() || j.k != j.interference.len() {
            return Err(Error::DimensionMismatch { expected: j.k, found: j.priors.len().max(j.interference.len()) });
        }
        let soi = CovarianceSpec::try_from(j.soi)?;
        let interference =
            j.interference.into_iter().map(CovarianceSpec::try_from).collect::<Result<Vec<_>>>()?;
        MixtureModel::with_options(j.priors, soi, interference, j.options)
    }
}

impl Serialize for MixtureModel {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MixtureModel {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let j = MixtureModelJson::deserialize(deserializer)?;
        MixtureModel::try_from(j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn scalar(v: f64) -> CovarianceSpec {
        CovarianceSpec::white(v, 1).unwrap()
    }

    #[test]
    fn backend_selection() {
        let circ = MixtureModel::new(
            vec![0.5, 0.5],
            CovarianceSpec::white(1.0, 16).unwrap(),
            vec![CovarianceSpec::ar1_circulant(0.5, 1.0, 16).unwrap(), CovarianceSpec::white(2.0, 16).unwrap()],
        )
        .unwrap();
        assert_eq!(circ.path(), ComputePath::Spectral);
        let toep = MixtureModel::new(
            vec![1.0],
            CovarianceSpec::white(1.0, 16).unwrap(),
            vec![CovarianceSpec::ar1(0.5, 1.0, 16).unwrap()],
        )
        .unwrap();
        assert_eq!(toep.path(), ComputePath::Dense);
        let big = MixtureModel::with_options(
            vec![1.0],
            CovarianceSpec::white(1.0, 16).unwrap(),
            vec![CovarianceSpec::ar1(0.5, 1.0, 16).unwrap()],
            ModelOptions { dense_cap: 8, ..ModelOptions::default() },
        )
        .unwrap();
        assert_eq!(big.path(), ComputePath::Spectral);
        let dense_only = CovarianceSpec::dense(CMatrix::identity(16, 16)).unwrap();
        assert!(MixtureModel::with_options(
            vec![1.0],
            dense_only,
            vec![CovarianceSpec::white(1.0, 16).unwrap()],
            ModelOptions { backend: Backend::Spectral, ..ModelOptions::default() },
        )
        .is_err());
    }

    #[test]
    fn scalar_lmmse_gain() {
        let m = MixtureModel::new(vec![1.0], scalar(1.0), vec![scalar(1.0)]).unwrap();
        let y = ComplexSignal::new(vec![Complex64::new(2.0, 2.0)]).unwrap();
        let s = m.lmmse(&y, 0).unwrap();
        assert!((s.as_slice()[0] - Complex64::new(1.0, 1.0)).norm() < 1e-15);
        assert!((m.lmmse_mse(0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(MixtureModel::new(vec![0.6, 0.3], scalar(1.0), vec![scalar(1.0), scalar(2.0)]).is_err());
        assert!(MixtureModel::new(vec![1.0], scalar(1.0), vec![CovarianceSpec::white(1.0, 2).unwrap()]).is_err());
        let m = MixtureModel::new(vec![1.0], scalar(1.0), vec![scalar(1.0)]).unwrap();
        assert!(matches!(m.cov_y(1), Err(Error::TypeOutOfRange { .. })));
    }

    #[test]
    fn singular_cov_y_gets_jitter() {
        let z = CovarianceSpec::dense(CMatrix::zeros(2, 2)).unwrap();
        let d = CovarianceSpec::dense(CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ])))
        .unwrap();
        let m = MixtureModel::new(vec![1.0], d, vec![z]).unwrap();
        assert!(m.jitter()[0] > 0.0);
    }

    #[test]
    fn json_round_trip() {
        let m = MixtureModel::new(
            vec![0.25, 0.75],
            CovarianceSpec::white(1.0, 4).unwrap(),
            vec![CovarianceSpec::ar1(0.5, 1.0, 4).unwrap(), CovarianceSpec::white(3.0, 4).unwrap()],
        )
        .unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert!(text.contains("\"K\":2"));
        let back: MixtureModel = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_json(), m.to_json());
    }

    #[test]
    fn sampling_matches_covariance() {
        let m = MixtureModel::new(vec![1.0], scalar(1.0), vec![scalar(3.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let trials = 20_000;
        let (mut py, mut ps) = (0.0, 0.0);
        for _ in 0..trials {
            let (y, s) = m.sample(0, &mut rng).unwrap();
            py += y.energy();
            ps += s.energy();
        }
        let (py, ps) = (py / trials as f64, ps / trials as f64);
        assert!((py - 4.0).abs() < 3.0 * 4.0 / (trials as f64).sqrt());
        assert!((ps - 1.0).abs() < 3.0 / (trials as f64).sqrt());
    }
}
