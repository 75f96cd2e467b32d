//! EM fit of a zero-mean Gaussian mixture to interference residuals `y - s`.
//!
//! The M-step carries a conjugate prior of strength `nu` centred on a scaled
//! identity, `C_k = (sum_i w_ik r_i r_i^H + nu psi0 I) / (sum_i w_ik + nu)`,
//! which keeps every component positive definite. The quantity EM increases
//! monotonically is the penalized log-likelihood
//! `sum_i log sum_k p_k N(r_i; 0, C_k) - nu sum_k (log det C_k + psi0 tr C_k^{-1})`.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::UnlabeledDataset;
use super::learned::{Combiner, LearnedKind, LearnedModel, TrainingDiagnostics};
use crate::error::{Error, Result};
use crate::gaussmix::model::log_pi_term;
use crate::gaussmix::{CovarianceSpec, MixtureModel, ModelOptions};
use crate::harness::seed::derive_trial_seed;
use crate::linalg::{self, CMatrix, DEFAULT_DENSE_CAP};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmOptions {
    pub max_iter: usize,
    /// Stop when the per-sample objective gain falls below this.
    pub tol: f64,
    pub seed: u64,
    /// Pseudo-count of the covariance prior.
    pub prior_strength: f64,
    /// Random restarts after a component collapse.
    pub retries: usize,
    /// Relative size of the random PSD perturbation used at initialization.
    pub init_jitter: f64,
    pub dense_cap: usize,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-8,
            seed: 0,
            prior_strength: 10.0,
            retries: 5,
            init_jitter: 0.5,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

struct Params {
    priors: Vec<f64>,
    covs: Vec<CMatrix>,
}

struct Fit {
    params: Params,
    trace: Vec<f64>,
    moves: Vec<f64>,
}

enum Attempt {
    Done(Fit),
    Collapsed(f64),
}

fn residual_matrix(data: &UnlabeledDataset) -> CMatrix {
    let pairs = data.pairs();
    CMatrix::from_fn(data.dim(), pairs.len(), |i, j| pairs[j].0.as_slice()[i] - pairs[j].1.as_slice()[i])
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

fn random_init(pooled: &CMatrix, level: f64, k: usize, jitter: f64, seed: u64) -> Params {
    let n = pooled.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let covs = (0..k)
        .map(|_| {
            let g = CMatrix::from_fn(n, n, |_, _| linalg::complex_normal(&mut rng));
            let j = &g * g.adjoint() * Complex64::new(jitter * level / n as f64, 0.0);
            hermitian_part(&(pooled + j))
        })
        .collect();
    Params { priors: vec![1.0 / k as f64; k], covs }
}

/// E-step: responsibilities (K x D) and the penalized objective at `params`.
fn e_step(r: &CMatrix, params: &Params, nu: f64, psi0: f64) -> Result<(CMatrix, f64)> {
    let (n, d) = r.shape();
    let k = params.covs.len();
    let c = log_pi_term(n);
    let mut logw = nalgebra::DMatrix::<f64>::zeros(k, d);
    let mut penalty = 0.0;
    for (t, cov) in params.covs.iter().enumerate() {
        let (ch, _) = linalg::cholesky_with_jitter(cov)?;
        let logdet = linalg::chol_logdet(&ch);
        let l = ch.l();
        let z = l
            .solve_lower_triangular(r)
            .ok_or_else(|| Error::numerical("singular component factor in E-step"))?;
        let linv = l
            .solve_lower_triangular(&CMatrix::identity(n, n))
            .ok_or_else(|| Error::numerical("singular component factor in E-step"))?;
        penalty -= nu * (logdet + psi0 * linv.iter().map(|v| v.norm_sqr()).sum::<f64>());
        let lp = params.priors[t].ln();
        for i in 0..d {
            let q: f64 = z.column(i).iter().map(|v| v.norm_sqr()).sum();
            logw[(t, i)] = lp + c - logdet - q;
        }
    }
    let mut resp = CMatrix::zeros(k, d);
    let mut ll = 0.0;
    for i in 0..d {
        let col = logw.column(i);
        let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = col.iter().map(|v| (v - max).exp()).sum();
        ll += max + sum.ln();
        for t in 0..k {
            resp[(t, i)] = Complex64::new((col[t] - max).exp() / sum, 0.0);
        }
    }
    Ok((resp, ll + penalty))
}

fn run_em(r: &CMatrix, init: Params, opts: &EmOptions, psi0: f64) -> Result<Attempt> {
    let (n, d) = r.shape();
    let k = init.covs.len();
    let nu = opts.prior_strength;
    let min_mass = k as f64;
    let mut params = init;
    let mut trace = Vec::new();
    let mut moves = Vec::new();
    for _ in 0..opts.max_iter.max(1) {
        let (resp, obj) = e_step(r, &params, nu, psi0)?;
        let converged = trace.last().is_some_and(|prev: &f64| (obj - prev) / (d as f64) < opts.tol);
        trace.push(obj);
        if converged {
            break;
        }
        let mut next = Params { priors: Vec::with_capacity(k), covs: Vec::with_capacity(k) };
        for t in 0..k {
            let mass: f64 = resp.row(t).iter().map(|w| w.re).sum();
            if mass < min_mass {
                return Ok(Attempt::Collapsed(mass));
            }
            let mut rw = r.clone();
            for (i, mut col) in rw.column_iter_mut().enumerate() {
                col *= Complex64::new(resp[(t, i)].re.sqrt(), 0.0);
            }
            let mut scatter = &rw * rw.adjoint();
            for j in 0..n {
                scatter[(j, j)] += Complex64::new(nu * psi0, 0.0);
            }
            let cov = hermitian_part(&(scatter / Complex64::new(mass + nu, 0.0)));
            next.priors.push(mass / d as f64);
            next.covs.push(cov);
        }
        let total: f64 = next.priors.iter().sum();
        next.priors.iter_mut().for_each(|p| *p /= total);
        let mv = params
            .covs
            .iter()
            .zip(&next.covs)
            .map(|(a, b)| linalg::frobenius(&(b - a)) / linalg::frobenius(a))
            .fold(0.0, f64::max);
        moves.push(mv);
        params = next;
    }
    Ok(Attempt::Done(Fit { params, trace, moves }))
}

/// Fits `K` interference covariances and priors by EM on `r_i = y_i - s_i`,
/// with the SOI covariance known. Starts from `init` when given, otherwise
/// from a randomly perturbed pooled residual covariance; a collapse
/// (component mass below `K`) triggers a restart with a fresh seed.
pub fn fit_em(
    data: &UnlabeledDataset,
    soi: &CovarianceSpec,
    k: usize,
    init: Option<&MixtureModel>,
    opts: &EmOptions,
) -> Result<LearnedModel> {
    if k == 0 {
        return Err(Error::invalid("EM needs at least one component"));
    }
    if data.len() < k {
        return Err(Error::invalid(format!("EM needs at least K = {k} pairs, got {}", data.len())));
    }
    let n = data.dim();
    if soi.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: soi.dim() });
    }
    if n > opts.dense_cap {
        return Err(Error::invalid(format!("EM dimension {n} exceeds the dense cap {}", opts.dense_cap)));
    }
    let r = residual_matrix(data);
    let pooled = hermitian_part(&(&r * r.adjoint() / Complex64::new(data.len() as f64, 0.0)));
    let psi0 = (linalg::trace_re(&pooled) / n as f64).max(f64::MIN_POSITIVE);
    let attempts = opts.retries + 1;
    let mut last_mass = 0.0;
    for attempt in 0..attempts {
        let start = match (attempt, init) {
            (0, Some(m)) => {
                if m.k() != k || m.dim() != n {
                    return Err(Error::DimensionMismatch { expected: k, found: m.k() });
                }
                Params { priors: m.priors().to_vec(), covs: m.interference().iter().map(|c| c.to_dense()).collect() }
            }
            _ => random_init(&pooled, psi0, k, opts.init_jitter, derive_trial_seed(opts.seed, "em-init", attempt as u64)),
        };
        match run_em(&r, start, opts, psi0)? {
            Attempt::Collapsed(mass) => {
                log::warn!("EM attempt {} collapsed (component mass {mass:.3}); restarting", attempt + 1);
                last_mass = mass;
            }
            Attempt::Done(fit) => {
                let covs = fit.params.covs.into_iter().map(CovarianceSpec::dense).collect::<Result<Vec<_>>>()?;
                let model = MixtureModel::with_options(
                    fit.params.priors,
                    soi.clone(),
                    covs,
                    ModelOptions { dense_cap: opts.dense_cap, ..ModelOptions::default() },
                )?;
                let diagnostics = TrainingDiagnostics {
                    iterations: fit.moves.len(),
                    final_objective: fit.trace.last().copied(),
                    objective_trace: fit.trace,
                    restarts: attempt,
                    parameter_moves: fit.moves,
                    shrinkage: vec![],
                    training_pairs: data.len(),
                };
                return Ok(LearnedModel { kind: LearnedKind::EmMixture { model, combiner: Combiner::Mmse }, diagnostics });
            }
        }
    }
    Err(Error::EmCollapse { attempts, mass: last_mass, min_mass: k as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learning::dataset::LabeledDataset;

    fn two_type(n: usize) -> MixtureModel {
        MixtureModel::new(
            vec![0.5, 0.5],
            CovarianceSpec::white(1.0, n).unwrap(),
            vec![CovarianceSpec::ar1(0.5, 1.0, n).unwrap(), CovarianceSpec::ar1(0.95, 1.0, n).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn objective_is_monotone() {
        let truth = two_type(6);
        let data = LabeledDataset::sample_mixture(&truth, 2000, 4).unwrap().unlabeled();
        for seed in 0..3 {
            let opts = EmOptions { seed, max_iter: 60, ..EmOptions::default() };
            let m = fit_em(&data, truth.soi(), 2, None, &opts).unwrap();
            let tr = &m.diagnostics.objective_trace;
            for w in tr.windows(2) {
                assert!(w[1] >= w[0] - 1e-9 * w[0].abs(), "objective decreased: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn collapse_is_reported() {
        // three pairs cannot give each of three components mass >= 3
        let truth = two_type(2);
        let data = LabeledDataset::sample_mixture(&truth, 3, 1).unwrap().unlabeled();
        let opts = EmOptions { retries: 2, ..EmOptions::default() };
        match fit_em(&data, truth.soi(), 3, None, &opts) {
            Err(Error::EmCollapse { attempts, .. }) => assert_eq!(attempts, 3),
            other => panic!("expected collapse, got {other:?}"),
        }
    }

    #[test]
    fn single_component_matches_regularized_scatter() {
        let truth = two_type(3);
        let data = LabeledDataset::sample_mixture(&truth, 500, 2).unwrap().unlabeled();
        let m = fit_em(&data, truth.soi(), 1, None, &EmOptions::default()).unwrap();
        let LearnedKind::EmMixture { model, .. } = &m.kind else { panic!() };
        let r = residual_matrix(&data);
        let scatter = &r * r.adjoint();
        let psi0 = linalg::trace_re(&scatter) / (500.0 * 3.0);
        let expect = (scatter + CMatrix::identity(3, 3) * Complex64::new(10.0 * psi0, 0.0)) / Complex64::new(510.0, 0.0);
        assert!(linalg::frobenius(&(model.interference()[0].to_dense() - expect)) < 1e-10);
    }
}
