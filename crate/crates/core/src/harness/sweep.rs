//! SINR sweeps of MSE and BER over an M-PSK signal of interest.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::mse;
use super::pool::{indexed_map, with_workers};
use super::seed::derive_trial_seed;
use super::stats::{combined, Stats};
use crate::error::{Error, Result};
use crate::gaussmix::{CovarianceShape, CovarianceSpec, MixtureModel};
use crate::learning::{
    apply_learned, fit_dts, fit_em, fit_pooled, Combiner, EmOptions, LabeledDataset, LabeledPair, LearnedModel,
};
use crate::siggen::mixing::{db_to_ratio, mix_rng, validate_priors};
use crate::siggen::{ber, demod_mpsk, gen_mpsk, psk_covariance, FrameSpec, InterferenceSource, MixSpec};
use crate::signal::ComplexSignal;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Posterior-weighted mixture of per-type LMMSE filters.
    Mmse,
    /// LMMSE at the MAP-detected type.
    Dts,
    /// LMMSE at the true type.
    OracleLmmse,
    /// Learned per-type filter at the true type.
    PerTypeOracle,
    /// Learned per-type filter at the analytically MAP-detected type.
    PerTypeDetected,
    /// One learned filter for all types.
    PooledLinear,
    /// EM-learned mixture through the MMSE combiner.
    EmMixture,
    /// EM-learned mixture through the detect-then-separate combiner.
    EmDts,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Mmse,
        Method::Dts,
        Method::OracleLmmse,
        Method::PerTypeOracle,
        Method::PerTypeDetected,
        Method::PooledLinear,
        Method::EmMixture,
        Method::EmDts,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Mmse => "mmse",
            Method::Dts => "dts",
            Method::OracleLmmse => "oracle_lmmse",
            Method::PerTypeOracle => "per_type_oracle",
            Method::PerTypeDetected => "per_type_detected",
            Method::PooledLinear => "pooled_linear",
            Method::EmMixture => "em_mixture",
            Method::EmDts => "em_dts",
        }
    }

    fn uses_analysis(&self) -> bool {
        matches!(self, Method::Mmse | Method::Dts | Method::OracleLmmse | Method::PerTypeDetected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub sinr_grid_db: Vec<f64>,
    pub trials_per_point: usize,
    /// Priors of the training mixtures; the analytical estimators assume them too.
    pub train_priors: Vec<f64>,
    /// Each entry is one test-prior setting, swept over the full SINR grid.
    pub test_priors: Vec<Vec<f64>>,
    pub frame: FrameSpec,
    /// Unit-variance interference shapes, one per type.
    pub interference: Vec<CovarianceShape>,
    pub methods: Vec<Method>,
    /// Training pairs per SINR point for the learned methods.
    pub train_size: usize,
    /// Shrinkage for the learned filters; `None` uses `10 / (D + 10)`.
    pub shrinkage: Option<f64>,
    pub em: EmOptions,
    /// Optional white noise level relative to the unit-power SOI.
    pub snr_db: Option<f64>,
    pub base_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sinr_grid_db: (0..=10).map(|i| -30.0 + 3.0 * i as f64).collect(),
            trials_per_point: 2500,
            train_priors: vec![0.5, 0.5],
            test_priors: vec![vec![0.5, 0.5]],
            frame: FrameSpec::default(),
            interference: vec![CovarianceShape::Ar1 { coef: 0.5 }, CovarianceShape::Ar1 { coef: 0.95 }],
            methods: Method::ALL.to_vec(),
            train_size: 2000,
            shrinkage: None,
            em: EmOptions { max_iter: 50, tol: 1e-6, ..EmOptions::default() },
            snr_db: None,
            base_seed: 0,
        }
    }
}

/// `(p, 1 - p)` for the test-prior grid `p in {0, 1/2, 1}`.
pub fn mismatch_prior_grid() -> Vec<Vec<f64>> {
    [0.0, 0.5, 1.0].iter().map(|&p| vec![p, 1.0 - p]).collect()
}

impl SweepConfig {
    pub fn n_symbols(&self) -> usize {
        self.frame.symbols_per_frame
    }

    pub fn dim(&self) -> usize {
        self.frame.frame_len(self.n_symbols())
    }

    fn needs_training(&self) -> bool {
        self.methods.iter().any(|m| !m.uses_analysis() || *m == Method::PerTypeDetected)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, msg: String| Err(Error::config(key, msg));
        if self.sinr_grid_db.is_empty() {
            return bad("sinr_grid_db", "grid is empty".into());
        }
        if let Some(v) = self.sinr_grid_db.iter().find(|v| v.is_nan()) {
            return bad("sinr_grid_db", format!("grid value {v} is not a number"));
        }
        if self.trials_per_point == 0 {
            return bad("trials_per_point", "must be at least 1".into());
        }
        if self.interference.is_empty() {
            return bad("interference", "at least one interference type is required".into());
        }
        let k = self.interference.len();
        validate_priors(&self.train_priors).or_else(|e| bad("train_priors", e.to_string()))?;
        if self.train_priors.len() != k {
            return bad("train_priors", format!("{} entries for {k} interference types", self.train_priors.len()));
        }
        if self.test_priors.is_empty() {
            return bad("test_priors", "at least one prior vector is required".into());
        }
        for (i, p) in self.test_priors.iter().enumerate() {
            let key = format!("test_priors[{i}]");
            validate_priors(p).or_else(|e| bad(&key, e.to_string()))?;
            if p.len() != k {
                return bad(&key, format!("{} entries for {k} interference types", p.len()));
            }
        }
        if self.methods.is_empty() {
            return bad("methods", "no methods selected".into());
        }
        self.frame.validate().or_else(|e| bad("frame", e.to_string()))?;
        if self.needs_training() && self.train_size < k.max(1) {
            return bad("train_size", format!("learned methods need at least {k} training pairs"));
        }
        if let Some(l) = self.shrinkage {
            if !(0.0..=1.0).contains(&l) {
                return bad("shrinkage", format!("{l} is outside [0, 1]"));
            }
        }
        if self.snr_db.is_some_and(|s| s.is_nan()) {
            return bad("snr_db", "is not a number".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub sinr_db: f64,
    pub test_priors: Vec<f64>,
    pub mse_mean: f64,
    pub mse_stderr: f64,
    pub ber_mean: f64,
    pub ber_stderr: f64,
    pub trials: u64,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub version: String,
    pub config: SweepConfig,
    /// Samples per frame.
    pub dimension: usize,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn row(&self, method: Method, sinr_db: f64, test_priors: &[f64]) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.method == method.name() && r.sinr_db == sinr_db && r.test_priors == test_priors)
    }

    /// Points where the MMSE mixture is worse than DTS or the pooled filter by
    /// more than three combined standard errors.
    pub fn ordering_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for r in self.rows.iter().filter(|r| r.method == Method::Mmse.name()) {
            for other in [Method::Dts, Method::PooledLinear] {
                if let Some(o) = self.row(other, r.sinr_db, &r.test_priors) {
                    let slack = 3.0 * combined(r.mse_stderr, o.mse_stderr);
                    if r.mse_mean > o.mse_mean + slack {
                        out.push(format!(
                            "priors {:?}, SINR {} dB: mmse {} > {} {} + {slack}",
                            r.test_priors,
                            r.sinr_db,
                            r.mse_mean,
                            o.method,
                            o.mse_mean
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Interference covariances at one SINR point (noise folded in when set).
fn interference_covs(cfg: &SweepConfig, sinr_db: f64, n: usize) -> Result<Vec<CovarianceSpec>> {
    let level = db_to_ratio(-sinr_db);
    cfg.interference.iter().map(|s| s.build(level, n)).collect()
}

struct Point {
    analytic: MixtureModel,
    sources: Vec<InterferenceSource>,
    per_type: Option<LearnedModel>,
    pooled: Option<LearnedModel>,
    em: Option<LearnedModel>,
    em_dts: Option<LearnedModel>,
}

fn prepare_point(cfg: &SweepConfig, soi: &CovarianceSpec, si: usize, sinr_db: f64) -> Result<Point> {
    let n = soi.dim();
    let covs = interference_covs(cfg, sinr_db, n)?;
    let sources = covs.iter().cloned().map(InterferenceSource::gaussian).collect::<Result<Vec<_>>>()?;
    let model_covs = match cfg.snr_db {
        Some(snr) => {
            let noise = CovarianceSpec::white(db_to_ratio(-snr), n)?;
            covs.iter().map(|c| c.sum(&noise)).collect::<Result<Vec<_>>>()?
        }
        None => covs,
    };
    let analytic = MixtureModel::new(cfg.train_priors.clone(), soi.clone(), model_covs)?;
    let spec = MixSpec { sir_db: sinr_db, snr_db: cfg.snr_db, random_phase: true };
    let wants = |m: Method| cfg.methods.contains(&m);
    let want_per_type = wants(Method::PerTypeOracle) || wants(Method::PerTypeDetected);
    let want_em = wants(Method::EmMixture) || wants(Method::EmDts);
    let (mut per_type, mut pooled, mut em) = (None, None, None);
    if want_per_type || wants(Method::PooledLinear) || want_em {
        let tag = format!("train/s{si}");
        let pairs = indexed_map(cfg.train_size, |i| {
            let seed = derive_trial_seed(cfg.base_seed, &tag, i as u64);
            let (s, _) = gen_mpsk(&cfg.frame, cfg.n_symbols(), derive_trial_seed(seed, "soi", 0))?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(seed, "mix", 0));
            let m = mix_rng(&s, &sources, &cfg.train_priors, &spec, &mut rng)?;
            Ok(LabeledPair { y: m.y, s: m.s, k: m.k })
        })?;
        let data = LabeledDataset::new(pairs)?;
        let k = cfg.interference.len();
        if want_per_type {
            per_type = Some(fit_dts(&data, k, cfg.shrinkage)?);
        }
        if wants(Method::PooledLinear) {
            pooled = Some(fit_pooled(&data.unlabeled(), cfg.shrinkage)?);
        }
        if want_em {
            let opts = EmOptions { seed: derive_trial_seed(cfg.base_seed, "em", si as u64), ..cfg.em.clone() };
            em = Some(fit_em(&data.unlabeled(), soi, k, None, &opts)?);
        }
    }
    let em_dts = em.as_ref().map(|m| m.with_combiner(Combiner::Dts));
    Ok(Point { analytic, sources, per_type, pooled, em, em_dts })
}

fn run_trial(
    cfg: &SweepConfig,
    point: &Point,
    spec: &MixSpec,
    priors: &[f64],
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    let (s, bits) = gen_mpsk(&cfg.frame, cfg.n_symbols(), derive_trial_seed(seed, "soi", 0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_trial_seed(seed, "mix", 0));
    let m = mix_rng(&s, &point.sources, priors, spec, &mut rng)?;
    let analysis = if cfg.methods.iter().any(|m| m.uses_analysis()) { Some(point.analytic.analyze(&m.y)?) } else { None };
    fn required(l: &Option<LearnedModel>) -> Result<&LearnedModel> {
        l.as_ref().ok_or_else(|| Error::invalid("learned model missing"))
    }
    cfg.methods
        .iter()
        .map(|method| {
            let s_hat: ComplexSignal = match method {
                Method::Mmse => analysis.as_ref().expect("analysis").mmse(),
                Method::Dts => analysis.as_ref().expect("analysis").dts(),
                Method::OracleLmmse => analysis.as_ref().expect("analysis").lmmse(m.k),
                Method::PerTypeOracle => apply_learned(&m.y, required(&point.per_type)?, Some(m.k))?.s_hat,
                Method::PerTypeDetected => {
                    let k = analysis.as_ref().expect("analysis").map_k;
                    apply_learned(&m.y, required(&point.per_type)?, Some(k))?.s_hat
                }
                Method::PooledLinear => apply_learned(&m.y, required(&point.pooled)?, None)?.s_hat,
                Method::EmMixture => apply_learned(&m.y, required(&point.em)?, None)?.s_hat,
                Method::EmDts => apply_learned(&m.y, required(&point.em_dts)?, None)?.s_hat,
            };
            let err = mse(&s_hat, &m.s)?;
            let b = ber(&demod_mpsk(&s_hat, &cfg.frame, cfg.n_symbols())?, &bits)?;
            Ok((err, b))
        })
        .collect()
}

/// Runs every (test prior, SINR, trial) cell. Learned models are trained once
/// per SINR point and shared across test priors.
pub fn run_sweep(cfg: &SweepConfig, workers: Option<usize>) -> Result<SweepReport> {
    cfg.validate()?;
    with_workers(workers, || run_sweep_inner(cfg))?
}

fn run_sweep_inner(cfg: &SweepConfig) -> Result<SweepReport> {
    let n = cfg.dim();
    let soi = CovarianceSpec::dense(psk_covariance(&cfg.frame, cfg.n_symbols())?)?;
    let mut grid: Vec<Vec<SweepRow>> = vec![Vec::new(); cfg.test_priors.len()];
    for (si, &sinr) in cfg.sinr_grid_db.iter().enumerate() {
        let point = prepare_point(cfg, &soi, si, sinr)?;
        let spec = MixSpec { sir_db: sinr, snr_db: cfg.snr_db, random_phase: true };
        for (pi, priors) in cfg.test_priors.iter().enumerate() {
            let tag = format!("sweep/p{pi}/s{si}");
            let results = indexed_map(cfg.trials_per_point, |t| {
                run_trial(cfg, &point, &spec, priors, derive_trial_seed(cfg.base_seed, &tag, t as u64))
            })?;
            let mut acc = vec![(Stats::default(), Stats::default()); cfg.methods.len()];
            for trial in &results {
                for (a, (e, b)) in acc.iter_mut().zip(trial) {
                    a.0.push(*e);
                    a.1.push(*b);
                }
            }
            for (method, (e, b)) in cfg.methods.iter().zip(acc) {
                let mut flags = Vec::new();
                if (*method == Method::Mmse || *method == Method::Dts || *method == Method::PerTypeDetected)
                    && priors != &cfg.train_priors {
                        flags.push("prior_mismatch".to_string());
                    }
                grid[pi].push(SweepRow {
                    method: method.name().to_string(),
                    sinr_db: sinr,
                    test_priors: priors.clone(),
                    mse_mean: e.mean(),
                    mse_stderr: e.stderr(),
                    ber_mean: b.mean(),
                    ber_stderr: b.stderr(),
                    trials: e.count(),
                    flags,
                });
            }
        }
    }
    Ok(SweepReport { version: VERSION.to_string(), config: cfg.clone(), dimension: n, rows: grid.concat() })
}
