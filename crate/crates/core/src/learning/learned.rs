//! Trained separators and their application.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussmix::MixtureModel;
use crate::linalg::{self, CMatrix};
use crate::signal::ComplexSignal;
use crate::gaussmix::SeparationResult;

/// Row-major `[re, im]` matrix for JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl From<&CMatrix> for MatrixJson {
    fn from(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        let data = (0..rows).flat_map(|i| (0..cols).map(move |j| (i, j))).map(|(i, j)| m[(i, j)]).collect();
        Self { rows, cols, data }
    }
}

impl TryFrom<MatrixJson> for CMatrix {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.data.len() != j.rows * j.cols {
            return Err(Error::DimensionMismatch { expected: j.rows * j.cols, found: j.data.len() });
        }
        Ok(CMatrix::from_row_slice(j.rows, j.cols, &j.data))
    }
}

mod matrix_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &CMatrix, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMatrix, D::Error> {
        CMatrix::try_from(MatrixJson::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

mod matrix_vec_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &[CMatrix], s: S) -> std::result::Result<S::Ok, S::Error> {
        m.iter().map(MatrixJson::from).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<CMatrix>, D::Error> {
        Vec::<MatrixJson>::deserialize(d)?
            .into_iter()
            .map(|j| CMatrix::try_from(j).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// How an EM-learned mixture turns into an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Combiner {
    #[default]
    Mmse,
    Dts,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearnedKind {
    /// One linear filter per type; needs the type at application time.
    PerTypeLinear {
        #[serde(with = "matrix_vec_serde")]
        filters: Vec<CMatrix>,
    },
    /// A single filter fitted on all pairs regardless of type.
    PooledLinear {
        #[serde(with = "matrix_serde")]
        filter: CMatrix,
    },
    /// A Gaussian mixture fitted by EM, applied through the analytical estimators.
    EmMixture { model: MixtureModel, combiner: Combiner },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingDiagnostics {
    pub iterations: usize,
    pub final_objective: Option<f64>,
    /// Objective after each EM iteration.
    pub objective_trace: Vec<f64>,
    pub restarts: usize,
    /// Largest relative Frobenius change of a component covariance per iteration.
    pub parameter_moves: Vec<f64>,
    /// Shrinkage used per fitted covariance.
    pub shrinkage: Vec<f64>,
    pub training_pairs: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LearnedModel {
    #[serde(flatten)]
    pub kind: LearnedKind,
    pub diagnostics: TrainingDiagnostics,
}

impl LearnedModel {
    pub fn dim(&self) -> usize {
        match &self.kind {
            LearnedKind::PerTypeLinear { filters } => filters[0].nrows(),
            LearnedKind::PooledLinear { filter } => filter.nrows(),
            LearnedKind::EmMixture { model, .. } => model.dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match &self.kind {
            LearnedKind::PerTypeLinear { .. } => "per_type_linear",
            LearnedKind::PooledLinear { .. } => "pooled_linear",
            LearnedKind::EmMixture { .. } => "em_mixture",
        }
    }

    pub fn with_combiner(&self, combiner: Combiner) -> Self {
        let mut out = self.clone();
        if let LearnedKind::EmMixture { combiner: c, .. } = &mut out.kind {
            *c = combiner;
        }
        out
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("learned model serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Format {
            offset: 0,
            message: format!("learned model: line {} column {}: {e}", e.line(), e.column()),
        })
    }
}

fn filtered(w: &CMatrix, y: &ComplexSignal) -> Result<ComplexSignal> {
    if w.ncols() != y.len() {
        return Err(Error::DimensionMismatch { expected: w.ncols(), found: y.len() });
    }
    ComplexSignal::new(linalg::matvec(w, y.as_slice())).map_err(|_| Error::numerical("filter output is not finite"))
}

/// Applies a trained separator. `k` is the externally supplied type (oracle or
/// detector) and is required for per-type filters only.
pub fn apply_learned(y: &ComplexSignal, model: &LearnedModel, k: Option<usize>) -> Result<SeparationResult> {
    match &model.kind {
        LearnedKind::PerTypeLinear { filters } => {
            let k = k.ok_or(Error::MissingType)?;
            let w = filters.get(k).ok_or(Error::TypeOutOfRange { index: k, k: filters.len() })?;
            Ok(SeparationResult { s_hat: filtered(w, y)?, k_hat: Some(k), posterior: None, loglik: None, jitter: 0.0 })
        }
        LearnedKind::PooledLinear { filter } => {
            Ok(SeparationResult { s_hat: filtered(filter, y)?, k_hat: None, posterior: None, loglik: None, jitter: 0.0 })
        }
        LearnedKind::EmMixture { model, combiner } => {
            let a = model.analyze(y)?;
            Ok(match combiner {
                Combiner::Mmse => a.mmse_result(),
                Combiner::Dts => a.dts_result(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussmix::CovarianceSpec;

    #[test]
    fn pooled_identity_passes_through() {
        let m = LearnedModel {
            kind: LearnedKind::PooledLinear { filter: CMatrix::identity(3, 3) },
            diagnostics: TrainingDiagnostics::default(),
        };
        let y = ComplexSignal::new(vec![Complex64::new(1.0, -1.0), Complex64::new(0.0, 2.0), Complex64::new(3.0, 0.0)])
            .unwrap();
        assert_eq!(apply_learned(&y, &m, None).unwrap().s_hat, y);
    }

    #[test]
    fn per_type_needs_type() {
        let m = LearnedModel {
            kind: LearnedKind::PerTypeLinear { filters: vec![CMatrix::identity(1, 1)] },
            diagnostics: TrainingDiagnostics::default(),
        };
        let y = ComplexSignal::new(vec![Complex64::new(1.0, 0.0)]).unwrap();
        assert!(matches!(apply_learned(&y, &m, None), Err(Error::MissingType)));
        assert!(apply_learned(&y, &m, Some(0)).is_ok());
    }

    #[test]
    fn em_mixture_delegates_exactly() {
        let truth = MixtureModel::new(
            vec![0.5, 0.5],
            CovarianceSpec::white(1.0, 1).unwrap(),
            vec![CovarianceSpec::white(1.0, 1).unwrap(), CovarianceSpec::white(2.0, 1).unwrap()],
        )
        .unwrap();
        let m = LearnedModel {
            kind: LearnedKind::EmMixture { model: truth.clone(), combiner: Combiner::Mmse },
            diagnostics: TrainingDiagnostics::default(),
        };
        let y = ComplexSignal::new(vec![Complex64::new(0.6, 0.8)]).unwrap();
        assert_eq!(apply_learned(&y, &m, None).unwrap(), crate::gaussmix::mmse(&y, &truth).unwrap());
    }

    #[test]
    fn json_round_trip() {
        let w = CMatrix::from_fn(2, 2, |i, j| Complex64::new(i as f64, j as f64 * 0.5));
        let m = LearnedModel {
            kind: LearnedKind::PerTypeLinear { filters: vec![w.clone(), w.adjoint()] },
            diagnostics: TrainingDiagnostics { iterations: 3, ..Default::default() },
        };
        let text = m.to_json_string();
        assert!(text.contains("\"kind\": \"per_type_linear\""));
        let back = LearnedModel::from_json_str(&text).unwrap();
        let LearnedKind::PerTypeLinear { filters } = back.kind else { panic!() };
        assert_eq!(filters, vec![w.clone(), w.adjoint()]);
        assert_eq!(back.diagnostics.iterations, 3);
    }
}
