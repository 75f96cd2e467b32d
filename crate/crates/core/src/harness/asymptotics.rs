//! Detector error and MSE-ratio trends as the observation length grows.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::mse;
use super::pool::{indexed_map, with_workers};
use super::seed::derive_trial_seed;
use super::stats::{combined, ls_slope, PairedStats, Stats};
use super::sweep::VERSION;
use crate::error::{Error, Result};
use crate::gaussmix::{tdc_gap, GapEstimate, MixtureModel, ModelFamily};

/// Grid points need at least this many detector errors to enter the slope fit.
pub const SLOPE_MIN_ERRORS: u64 = 10;
/// Certificate margin in standard errors.
pub const TDC_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsymptoticsConfig {
    pub n_grid: Vec<usize>,
    pub trials: usize,
    pub model: ModelFamily,
    /// Monte Carlo draws per pair for the separability certificate.
    pub tdc_trials: usize,
    pub base_seed: u64,
}

impl Default for AsymptoticsConfig {
    fn default() -> Self {
        Self {
            n_grid: vec![32, 64, 128, 256, 512, 1024],
            trials: 10_000,
            model: ModelFamily::default(),
            tdc_trials: 1000,
            base_seed: 0,
        }
    }
}

impl AsymptoticsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return Err(Error::config("n_grid", "grid must be non-empty with positive entries"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.tdc_trials < 30 {
            return Err(Error::config("tdc_trials", "must be at least 30"));
        }
        self.model.validate().map_err(|e| Error::config("model", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsRow {
    pub n: usize,
    pub trials: u64,
    pub map_errors: u64,
    pub map_error_rate: f64,
    pub map_error_stderr: f64,
    pub psi_errors: u64,
    pub psi_error_rate: f64,
    pub psi_error_stderr: f64,
    pub mse_mmse: f64,
    pub mse_mmse_stderr: f64,
    pub mse_dts: f64,
    pub mse_dts_stderr: f64,
    /// `mse_mmse / mse_dts` with a paired delta-method standard error.
    pub ratio: f64,
    pub ratio_stderr: f64,
    pub flags: Vec<String>,
}

/// One cross-type separability check at a fixed `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdcEntry {
    pub true_k: usize,
    pub probe: usize,
    pub cross: GapEstimate,
    pub matched: GapEstimate,
    /// `(cross - matched) / combined stderr`.
    pub margin_sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TdcCertificate {
    pub n: usize,
    pub trials: usize,
    pub entries: Vec<TdcEntry>,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsReport {
    pub version: String,
    pub config: AsymptoticsConfig,
    pub rows: Vec<AsymptoticsRow>,
    /// Least-squares slope of log MAP error rate against log N.
    pub map_slope: Option<f64>,
    pub slope_points: usize,
    pub tdc: TdcCertificate,
    pub flags: Vec<String>,
}

impl AsymptoticsReport {
    pub fn row(&self, n: usize) -> Option<&AsymptoticsRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

/// Separability certificate: for every ordered pair of distinct types the mean
/// `|psi(y, probe)|` under `true_k` must exceed the matched-type value by
/// `TDC_SIGMAS` combined standard errors.
pub fn tdc_certificate(model: &MixtureModel, trials: usize, seed: u64) -> Result<TdcCertificate> {
    let k = model.k();
    let mut entries = Vec::new();
    for t in 0..k {
        let matched = tdc_gap(model, t, t, trials, derive_trial_seed(seed, "tdc", t as u64))?;
        for p in (0..k).filter(|&p| p != t) {
            // same draws as the matched estimate, so the margin is a paired contrast
            let cross = tdc_gap(model, t, p, trials, derive_trial_seed(seed, "tdc", t as u64))?;
            let se = combined(cross.stderr, matched.stderr);
            let margin = if se > 0.0 { (cross.mean - matched.mean) / se } else { f64::INFINITY };
            entries.push(TdcEntry { true_k: t, probe: p, cross, matched, margin_sigmas: margin });
        }
    }
    let certified = k == 1 || entries.iter().all(|e| e.margin_sigmas > TDC_SIGMAS);
    Ok(TdcCertificate { n: model.dim(), trials, entries, certified })
}

struct TrialOutcome {
    map_wrong: bool,
    psi_wrong: bool,
    mse_mmse: f64,
    mse_dts: f64,
}

fn run_point(model: &MixtureModel, trials: usize, base_seed: u64, n: usize) -> Result<AsymptoticsRow> {
    let tag = format!("asymptotics/n{n}");
    let outcomes = indexed_map(trials, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(base_seed, &tag, t as u64));
        let (y, s, k) = model.sample_mixture(&mut rng)?;
        let a = model.analyze(&y)?;
        Ok(TrialOutcome {
            map_wrong: a.map_k != k,
            psi_wrong: a.psi_k != k,
            mse_mmse: mse(&a.mmse(), &s)?,
            mse_dts: mse(&a.dts(), &s)?,
        })
    })?;
    let mut paired = PairedStats::default();
    let (mut map_errors, mut psi_errors) = (0u64, 0u64);
    for o in &outcomes {
        paired.push(o.mse_mmse, o.mse_dts);
        map_errors += o.map_wrong as u64;
        psi_errors += o.psi_wrong as u64;
    }
    let tn = trials as f64;
    let rate = |e: u64| e as f64 / tn;
    let rate_se = |e: u64| (rate(e) * (1.0 - rate(e)) / tn).sqrt();
    let mut flags = Vec::new();
    if map_errors == 0 {
        flags.push(format!("map_error_below_{:e}", 1.0 / tn));
    }
    if psi_errors == 0 {
        flags.push(format!("psi_error_below_{:e}", 1.0 / tn));
    }
    let (ratio, ratio_stderr) = paired.ratio();
    let (a, b): (Stats, Stats) = (paired.a, paired.b);
    Ok(AsymptoticsRow {
        n,
        trials: trials as u64,
        map_errors,
        map_error_rate: rate(map_errors),
        map_error_stderr: rate_se(map_errors),
        psi_errors,
        psi_error_rate: rate(psi_errors),
        psi_error_stderr: rate_se(psi_errors),
        mse_mmse: a.mean(),
        mse_mmse_stderr: a.stderr(),
        mse_dts: b.mean(),
        mse_dts_stderr: b.stderr(),
        ratio,
        ratio_stderr,
        flags,
    })
}

pub fn run_asymptotics(cfg: &AsymptoticsConfig, workers: Option<usize>) -> Result<AsymptoticsReport> {
    cfg.validate()?;
    with_workers(workers, || run_asymptotics_inner(cfg))?
}

fn run_asymptotics_inner(cfg: &AsymptoticsConfig) -> Result<AsymptoticsReport> {
    let mut rows = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let model = cfg.model.build(n)?;
        rows.push(run_point(&model, cfg.trials, cfg.base_seed, n)?);
    }
    let n_max = *cfg.n_grid.iter().max().expect("non-empty grid");
    let tdc = tdc_certificate(&cfg.model.build(n_max)?, cfg.tdc_trials, cfg.base_seed)?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.map_errors >= SLOPE_MIN_ERRORS)
        .map(|r| ((r.n as f64).ln(), r.map_error_rate.ln()))
        .collect();
    let mut flags = Vec::new();
    if !tdc.certified {
        flags.push("tdc_uncertified".to_string());
    }
    Ok(AsymptoticsReport {
        version: VERSION.to_string(),
        config: cfg.clone(),
        map_slope: ls_slope(&points),
        slope_points: points.len(),
        rows,
        tdc,
        flags,
    })
}
