//! Interference draws and mixture formation `y = s + b_k`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::GaussianSampler;
use super::recording::RecordingPool;
use crate::error::{Error, Result};
use crate::gaussmix::CovarianceSpec;
use crate::linalg;
use crate::signal::ComplexSignal;

pub const PRIOR_SUM_TOL: f64 = 1e-12;

/// Power ratio `10^(db/10)`.
pub fn db_to_ratio(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Synthetic Gaussian interference with a pre-factored sampler.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    cov: CovarianceSpec,
    sampler: Arc<GaussianSampler>,
}

impl GaussianSource {
    pub fn new(cov: CovarianceSpec) -> Result<Self> {
        let sampler = Arc::new(GaussianSampler::for_covariance(&cov)?);
        Ok(Self { cov, sampler })
    }

    pub fn covariance(&self) -> &CovarianceSpec {
        &self.cov
    }
}

#[derive(Debug, Clone)]
pub enum InterferenceSource {
    /// Recorded, noise-bearing interference; scaled by each crop's own power.
    Recordings(RecordingPool),
    /// Gaussian interference; scaled by its nominal per-sample variance.
    Gaussian(GaussianSource),
}

impl InterferenceSource {
    pub fn gaussian(cov: CovarianceSpec) -> Result<Self> {
        Ok(InterferenceSource::Gaussian(GaussianSource::new(cov)?))
    }

    pub fn is_recorded(&self) -> bool {
        matches!(self, InterferenceSource::Recordings(_))
    }
}

/// Mixture levels. `snr_db` adds white noise to Gaussian sources only; recorded
/// interference already carries noise, so `sir_db` acts as the SINR there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixSpec {
    pub sir_db: f64,
    pub snr_db: Option<f64>,
    pub random_phase: bool,
}

impl Default for MixSpec {
    fn default() -> Self {
        Self { sir_db: 0.0, snr_db: None, random_phase: true }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub y: ComplexSignal,
    pub s: ComplexSignal,
    /// Realized interference type, 0-based.
    pub k: usize,
}

pub fn validate_priors(priors: &[f64]) -> Result<()> {
    if priors.is_empty() {
        return Err(Error::invalid("prior vector is empty"));
    }
    if let Some(p) = priors.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::invalid(format!("prior {p} is not a nonnegative finite number")));
    }
    let sum: f64 = priors.iter().sum();
    if (sum - 1.0).abs() > PRIOR_SUM_TOL {
        return Err(Error::invalid(format!("priors sum to {sum}, not 1")));
    }
    Ok(())
}

/// Inverse-CDF draw of a type index; zero-prior types are never selected.
pub fn sample_type<R: Rng + ?Sized>(priors: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in priors.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = k;
        if u < acc {
            return k;
        }
    }
    last
}

fn random_rotation<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let phi: f64 = rng.random::<f64>() * 2.0 * PI;
    Complex64::from_polar(1.0, phi)
}

pub(crate) fn draw_interference_rng<R: Rng + ?Sized>(
    source: &InterferenceSource,
    n: usize,
    sinr_db: f64,
    random_phase: bool,
    rng: &mut R,
) -> Result<ComplexSignal> {
    let target = db_to_ratio(-sinr_db);
    let (raw, power) = match source {
        InterferenceSource::Recordings(pool) => {
            let min = pool.min_len();
            if min < n {
                return Err(Error::InsufficientLength { needed: n, available: min });
            }
            let rec = &pool.recordings[rng.random_range(0..pool.recordings.len())];
            let start = rng.random_range(0..=rec.len() - n);
            let seg = rec.as_slice()[start..start + n].to_vec();
            let p = seg.iter().map(|z| z.norm_sqr()).sum::<f64>() / n as f64;
            (seg, p)
        }
        InterferenceSource::Gaussian(g) => {
            if g.cov.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, found: g.cov.dim() });
            }
            (g.sampler.draw(rng), g.cov.mean_variance())
        }
    };
    let amp = if power > 0.0 { (target / power).sqrt() } else { 0.0 };
    let rot = if random_phase { random_rotation(rng) } else { Complex64::new(1.0, 0.0) };
    let scale = rot * amp;
    Ok(ComplexSignal::from_vec_unchecked(raw.into_iter().map(|z| z * scale).collect()))
}

/// Length-`n` interference at the requested SINR relative to a unit-power SOI,
/// rotated by a uniform random phase.
pub fn draw_interference(source: &InterferenceSource, n: usize, sinr_db: f64, seed: u64) -> Result<ComplexSignal> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_interference_rng(source, n, sinr_db, true, &mut rng)
}

pub(crate) fn mix_rng<R: Rng + ?Sized>(
    s: &ComplexSignal,
    sources: &[InterferenceSource],
    priors: &[f64],
    spec: &MixSpec,
    rng: &mut R,
) -> Result<Mixture> {
    validate_priors(priors)?;
    if sources.len() != priors.len() {
        return Err(Error::DimensionMismatch { expected: priors.len(), found: sources.len() });
    }
    let n = s.len();
    let k = sample_type(priors, rng);
    let source = &sources[k];
    let b = draw_interference_rng(source, n, spec.sir_db, spec.random_phase, rng)?;
    let mut y: Vec<Complex64> = s.as_slice().iter().zip(b.as_slice()).map(|(a, b)| a + b).collect();
    if let (Some(snr), false) = (spec.snr_db, source.is_recorded()) {
        let sd = db_to_ratio(-snr).sqrt();
        for v in y.iter_mut() {
            *v += linalg::complex_normal(rng) * sd;
        }
    }
    Ok(Mixture { y: ComplexSignal::from_vec_unchecked(y), s: s.clone(), k })
}

/// Draws `k ~ priors` and forms `y = s + b_k` (plus white noise when `snr_db`
/// is set and the source is synthetic).
pub fn mix(
    s: &ComplexSignal,
    sources: &[InterferenceSource],
    priors: &[f64],
    spec: &MixSpec,
    seed: u64,
) -> Result<Mixture> {
    if let Some(snr) = spec.snr_db {
        if spec.sir_db >= snr {
            log::warn!("SIR {} dB is not below SNR {snr} dB; the interference-limited regime assumes SIR << SNR", spec.sir_db);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    mix_rng(s, sources, priors, spec, &mut rng)
}
