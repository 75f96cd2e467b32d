//! Regression-fitted linear separators `W = C_sy C_y^{-1}`.

use nalgebra::Cholesky;

use super::dataset::{LabeledDataset, UnlabeledDataset};
use super::learned::{LearnedKind, LearnedModel, TrainingDiagnostics};
use super::moments::{cross_cov, default_shrinkage, sample_cov_refs};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::signal::ComplexSignal;

/// Least-squares filter from paired samples; `shrinkage = None` uses the
/// default `10 / (D + 10)`. Returns the filter and the shrinkage applied.
pub fn fit_filter(ys: &[&ComplexSignal], ss: &[&ComplexSignal], shrinkage: Option<f64>) -> Result<(CMatrix, f64)> {
    let lambda = shrinkage.unwrap_or_else(|| default_shrinkage(ys.len()));
    let cy = sample_cov_refs(ys, lambda)?;
    let csy = cross_cov(ss, ys)?;
    let ch = Cholesky::new(cy).ok_or_else(|| {
        Error::numerical(format!(
            "sample covariance from {} pairs is singular (shrinkage {lambda}); use a positive shrinkage",
            ys.len()
        ))
    })?;
    // C_y^{-1} C_ys = (C_sy C_y^{-1})^H
    Ok((ch.solve(&csy.adjoint()).adjoint(), lambda))
}

/// One filter per type from the pairs labeled with that type.
pub fn fit_dts(data: &LabeledDataset, k_types: usize, shrinkage: Option<f64>) -> Result<LearnedModel> {
    let mut filters = Vec::with_capacity(k_types);
    let mut used = Vec::with_capacity(k_types);
    if let Some(p) = data.pairs().iter().find(|p| p.k >= k_types) {
        return Err(Error::TypeOutOfRange { index: p.k, k: k_types });
    }
    for k in 0..k_types {
        let (ys, ss): (Vec<_>, Vec<_>) = data.pairs().iter().filter(|p| p.k == k).map(|p| (&p.y, &p.s)).unzip();
        if ys.is_empty() {
            return Err(Error::invalid(format!("no training pairs of type {k}")));
        }
        let (w, lambda) = fit_filter(&ys, &ss, shrinkage)?;
        filters.push(w);
        used.push(lambda);
    }
    Ok(LearnedModel {
        kind: LearnedKind::PerTypeLinear { filters },
        diagnostics: TrainingDiagnostics { shrinkage: used, training_pairs: data.len(), ..Default::default() },
    })
}

/// A single filter over all pairs, ignoring type.
pub fn fit_pooled(data: &UnlabeledDataset, shrinkage: Option<f64>) -> Result<LearnedModel> {
    let (ys, ss): (Vec<_>, Vec<_>) = data.pairs().iter().map(|(y, s)| (y, s)).unzip();
    let (filter, lambda) = fit_filter(&ys, &ss, shrinkage)?;
    Ok(LearnedModel {
        kind: LearnedKind::PooledLinear { filter },
        diagnostics: TrainingDiagnostics { shrinkage: vec![lambda], training_pairs: data.len(), ..Default::default() },
    })
}
