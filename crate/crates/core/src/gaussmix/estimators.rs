//! Posterior weights, MMSE, plug-in DTS, MAP and psi detectors.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::covariance::CovarianceSpec;
use super::model::{log_pi_term, MixtureModel};
use crate::error::{Error, Result};
use crate::harness::seed::derive_trial_seed;
use crate::signal::ComplexSignal;

/// Output of a separator. `k_hat` is 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationResult {
    pub s_hat: ComplexSignal,
    pub k_hat: Option<usize>,
    pub posterior: Option<Vec<f64>>,
    pub loglik: Option<Vec<f64>>,
    /// Largest diagonal jitter the model needed (0 when none).
    #[serde(default)]
    pub jitter: f64,
}

/// Normalized `exp(v)` via max-subtraction. `-inf` entries get weight 0.
pub fn softmax_log_domain(v: &[f64]) -> Result<Vec<f64>> {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return Err(Error::invalid("all log-weights are -inf (or a weight is +inf/NaN)"));
    }
    let e: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let total: f64 = e.iter().sum();
    Ok(e.into_iter().map(|x| x / total).collect())
}

/// Index of the largest entry; the smallest index wins ties.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

fn argmin_abs(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if x.abs() < v[best].abs() {
            best = i;
        }
    }
    best
}

/// All per-observation statistics of a model, computed from one pass.
#[derive(Debug, Clone)]
pub struct Analysis {
    /// `y^H C_y_k^{-1} y`.
    pub quad: Vec<f64>,
    pub loglik: Vec<f64>,
    pub posterior: Vec<f64>,
    pub map_k: usize,
    pub psi: Vec<f64>,
    pub psi_k: usize,
    /// Per-type LMMSE estimates.
    pub estimates: Vec<Vec<Complex64>>,
    pub jitter: f64,
}

impl Analysis {
    pub fn mmse(&self) -> ComplexSignal {
        let n = self.estimates[0].len();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (w, est) in self.posterior.iter().zip(&self.estimates) {
            if *w == 0.0 {
                continue;
            }
            for (o, e) in out.iter_mut().zip(est) {
                *o += e * *w;
            }
        }
        ComplexSignal::from_vec_unchecked(out)
    }

    pub fn lmmse(&self, k: usize) -> ComplexSignal {
        ComplexSignal::from_vec_unchecked(self.estimates[k].clone())
    }

    pub fn dts(&self) -> ComplexSignal {
        self.lmmse(self.map_k)
    }

    pub fn mmse_result(&self) -> SeparationResult {
        SeparationResult {
            s_hat: self.mmse(),
            k_hat: None,
            posterior: Some(self.posterior.clone()),
            loglik: Some(self.loglik.clone()),
            jitter: self.jitter,
        }
    }

    pub fn dts_result(&self) -> SeparationResult {
        SeparationResult {
            s_hat: self.dts(),
            k_hat: Some(self.map_k),
            posterior: Some(self.posterior.clone()),
            loglik: Some(self.loglik.clone()),
            jitter: self.jitter,
        }
    }
}

impl MixtureModel {
    fn stats(&self, y: &ComplexSignal, with_estimates: bool) -> Result<Analysis> {
        let eval = self.evaluate(y, with_estimates)?;
        let n = self.dim();
        let c = log_pi_term(n);
        let loglik: Vec<f64> = eval.quad.iter().zip(self.logdets()).map(|(q, ld)| c - ld - q).collect();
        let logpost: Vec<f64> = loglik.iter().zip(self.priors()).map(|(l, p)| p.ln() + l).collect();
        let posterior = softmax_log_domain(&logpost)?;
        let psi: Vec<f64> = eval.quad.iter().map(|q| q / n as f64 - 1.0).collect();
        Ok(Analysis {
            map_k: argmax(&logpost),
            psi_k: argmin_abs(&psi),
            quad: eval.quad,
            loglik,
            posterior,
            psi,
            estimates: eval.estimates,
            jitter: self.jitter().into_iter().fold(0.0, f64::max),
        })
    }

    /// Every statistic and per-type estimate for `y`.
    pub fn analyze(&self, y: &ComplexSignal) -> Result<Analysis> {
        self.stats(y, true)
    }

    /// Statistics without the per-type estimates (detectors only).
    pub fn detect_only(&self, y: &ComplexSignal) -> Result<Analysis> {
        self.stats(y, false)
    }
}

pub fn cov_y(model: &MixtureModel, k: usize) -> Result<CovarianceSpec> {
    model.cov_y(k)
}

pub fn lmmse(y: &ComplexSignal, model: &MixtureModel, k: usize) -> Result<ComplexSignal> {
    model.lmmse(y, k)
}

/// `log p(y | k) = -N log(pi) - log det C_y_k - y^H C_y_k^{-1} y`.
pub fn log_likelihoods(y: &ComplexSignal, model: &MixtureModel) -> Result<Vec<f64>> {
    Ok(model.detect_only(y)?.loglik)
}

pub fn posterior(y: &ComplexSignal, model: &MixtureModel) -> Result<Vec<f64>> {
    Ok(model.detect_only(y)?.posterior)
}

/// Posterior-weighted sum of the per-type LMMSE estimates.
pub fn mmse(y: &ComplexSignal, model: &MixtureModel) -> Result<SeparationResult> {
    Ok(model.analyze(y)?.mmse_result())
}

pub fn map_detect(y: &ComplexSignal, model: &MixtureModel) -> Result<usize> {
    Ok(model.detect_only(y)?.map_k)
}

/// LMMSE at the MAP-detected type.
pub fn dts(y: &ComplexSignal, model: &MixtureModel) -> Result<SeparationResult> {
    Ok(model.analyze(y)?.dts_result())
}

/// `psi_N(y, k) = y^H C_y_k^{-1} y / N - 1`.
pub fn psi(y: &ComplexSignal, model: &MixtureModel, k: usize) -> Result<f64> {
    model.check_type(k)?;
    Ok(model.detect_only(y)?.psi[k])
}

pub fn psi_detect(y: &ComplexSignal, model: &MixtureModel) -> Result<usize> {
    Ok(model.detect_only(y)?.psi_k)
}

pub fn stationary_lmmse_fft(y: &ComplexSignal, model: &MixtureModel, k: usize) -> Result<ComplexSignal> {
    model.stationary_lmmse_fft(y, k)
}

/// Monte Carlo estimate of the type-separation gap in the form of the mean and
/// standard error of `|psi_N(y, probe)|` for `y` drawn under `true_k`. `N` is
/// the model's dimension.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEstimate {
    pub mean: f64,
    pub stderr: f64,
}

pub fn tdc_gap(model: &MixtureModel, true_k: usize, probe: usize, trials: usize, seed: u64) -> Result<GapEstimate> {
    model.check_type(true_k)?;
    model.check_type(probe)?;
    if trials < 30 {
        return Err(Error::invalid(format!("tdc_gap needs at least 30 trials, got {trials}")));
    }
    let mut sum = 0.0;
    let mut sumsq = 0.0;
    for t in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(seed, "tdc-gap", t as u64));
        let (y, _) = model.sample(true_k, &mut rng)?;
        let v = model.detect_only(&y)?.psi[probe].abs();
        sum += v;
        sumsq += v * v;
    }
    let n = trials as f64;
    let mean = sum / n;
    let var = ((sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(GapEstimate { mean, stderr: (var / n).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn scalar(v: f64) -> CovarianceSpec {
        CovarianceSpec::white(v, 1).unwrap()
    }

    fn one(y: Complex64) -> ComplexSignal {
        ComplexSignal::new(vec![y]).unwrap()
    }

    #[test]
    fn scalar_loglik_examples() {
        let m = MixtureModel::new(vec![1.0], scalar(0.5), vec![scalar(0.5)]).unwrap();
        let l = log_likelihoods(&one(c(0.0)), &m).unwrap();
        assert!((l[0] + std::f64::consts::PI.ln()).abs() < 1e-14);
        let m = MixtureModel::new(vec![1.0], scalar(1.0), vec![scalar(1.0)]).unwrap();
        let l = log_likelihoods(&one(c(1.0)), &m).unwrap();
        // 30-digit oracle for -ln(pi) - ln(2) - 1/2
        assert!((l[0] - (-2.337_877_066_409_345_5)).abs() < 1e-14);
    }

    #[test]
    fn scalar_posterior_and_mmse() {
        let m = MixtureModel::new(vec![0.5, 0.5], scalar(1.0), vec![scalar(1.0), scalar(2.0)]).unwrap();
        let y = one(Complex64::new(0.6, 0.8));
        let w = posterior(&y, &m).unwrap();
        assert!((w[0] - 0.559_417_522_837_561_2).abs() < 1e-12, "{w:?}");
        let r = mmse(&y, &m).unwrap();
        let gain = r.s_hat.as_slice()[0] / y.as_slice()[0];
        assert!((gain - c(0.426_569_587_139_593_5)).norm() < 1e-12);
        let d = dts(&y, &m).unwrap();
        assert_eq!(d.k_hat, Some(0));
        assert!((d.s_hat.as_slice()[0] - y.as_slice()[0] * 0.5).norm() < 1e-15);
    }

    #[test]
    fn vector_lmmse_examples() {
        let m = MixtureModel::new(
            vec![1.0],
            CovarianceSpec::white(1.0, 2).unwrap(),
            vec![CovarianceSpec::white(2.0, 2).unwrap()],
        )
        .unwrap();
        let y = ComplexSignal::new(vec![c(3.0), Complex64::new(0.0, 3.0)]).unwrap();
        let s = lmmse(&y, &m, 0).unwrap();
        assert!((s.as_slice()[0] - c(1.0)).norm() < 1e-14);
        assert!((s.as_slice()[1] - Complex64::new(0.0, 1.0)).norm() < 1e-14);
        let zero = CovarianceSpec::dense(CMatrix::zeros(2, 2)).unwrap();
        let m = MixtureModel::new(vec![1.0], CovarianceSpec::dense(CMatrix::identity(2, 2)).unwrap(), vec![zero]).unwrap();
        let s = lmmse(&y, &m, 0).unwrap();
        for (a, b) in s.as_slice().iter().zip(y.as_slice()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn identical_types_are_symmetric() {
        let m = MixtureModel::new(vec![0.5, 0.5], scalar(1.0), vec![scalar(2.0), scalar(2.0)]).unwrap();
        let y = one(Complex64::new(1.3, -0.2));
        let a = m.analyze(&y).unwrap();
        assert_eq!(a.loglik[0], a.loglik[1]);
        assert_eq!(a.posterior, vec![0.5, 0.5]);
        assert_eq!(a.map_k, 0);
        assert_eq!(a.psi_k, 0);
    }

    #[test]
    fn single_type_mmse_equals_lmmse() {
        let m = MixtureModel::new(vec![1.0], scalar(1.0), vec![scalar(3.0)]).unwrap();
        let y = one(Complex64::new(0.4, 2.0));
        assert_eq!(mmse(&y, &m).unwrap().s_hat, lmmse(&y, &m, 0).unwrap());
        assert_eq!(posterior(&y, &m).unwrap(), vec![1.0]);
        assert_eq!(psi_detect(&y, &m).unwrap(), 0);
    }

    #[test]
    fn zero_prior_gets_zero_weight() {
        let m = MixtureModel::new(vec![0.0, 1.0], scalar(1.0), vec![scalar(1.0), scalar(2.0)]).unwrap();
        let w = posterior(&one(c(1.0)), &m).unwrap();
        assert_eq!(w, vec![0.0, 1.0]);
        assert!(softmax_log_domain(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).is_err());
    }

    #[test]
    fn flat_spectra_fft_path() {
        let cs = CovarianceSpec::white(1.0, 8).unwrap();
        let m = MixtureModel::new(vec![1.0], cs.clone(), vec![cs]).unwrap();
        let y = ComplexSignal::new((0..8).map(|i| Complex64::new(i as f64, 1.0)).collect()).unwrap();
        let s = stationary_lmmse_fft(&y, &m, 0).unwrap();
        for (a, b) in s.as_slice().iter().zip(y.as_slice()) {
            assert!((a - b * 0.5).norm() < 1e-13);
        }
        let dense = MixtureModel::new(
            vec![1.0],
            CovarianceSpec::dense(CMatrix::identity(8, 8)).unwrap(),
            vec![CovarianceSpec::white(1.0, 8).unwrap()],
        )
        .unwrap();
        assert!(matches!(stationary_lmmse_fft(&y, &dense, 0), Err(Error::UnsupportedForm(_))));
    }

    #[test]
    fn gap_for_doubled_covariance() {
        // C_y_1 = 2 C_y_0, so psi(y, 1) concentrates at 1/2 - 1 under type 0
        let n = 256;
        let m = MixtureModel::new(
            vec![0.5, 0.5],
            CovarianceSpec::ar1_circulant(0.5, 0.5, n).unwrap(),
            vec![CovarianceSpec::ar1_circulant(0.5, 0.5, n).unwrap(), CovarianceSpec::ar1_circulant(0.5, 1.5, n).unwrap()],
        )
        .unwrap();
        let g = tdc_gap(&m, 0, 1, 200, 3).unwrap();
        assert!((g.mean - 0.5).abs() < 4.0 * g.stderr.max(1e-3), "{g:?}");
        let matched = tdc_gap(&m, 0, 0, 200, 3).unwrap();
        assert!(matched.mean < 0.1);
        assert!(tdc_gap(&m, 0, 0, 10, 3).is_err());
    }
}
