//! Sample second moments with a fixed accumulation order.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::signal::ComplexSignal;

/// Columns per partial sum. Chunk boundaries depend only on `D`, and partial
/// sums are added in chunk order, so results do not depend on thread count.
const CHUNK: usize = 256;

fn stack(signals: &[&ComplexSignal], dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, signals.len(), |i, j| signals[j].as_slice()[i])
}

fn check_uniform(signals: &[&ComplexSignal]) -> Result<usize> {
    let dim = signals.first().ok_or_else(|| Error::invalid("no signals to average"))?.len();
    if let Some(s) = signals.iter().find(|s| s.len() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: s.len() });
    }
    Ok(dim)
}

/// `(1/D) sum_i a_i b_i^H`.
pub fn cross_cov(a: &[&ComplexSignal], b: &[&ComplexSignal]) -> Result<CMatrix> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), found: b.len() });
    }
    let na = check_uniform(a)?;
    let nb = check_uniform(b)?;
    let partials: Vec<CMatrix> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(ca, cb)| stack(ca, na) * stack(cb, nb).adjoint())
        .collect();
    let mut total = CMatrix::zeros(na, nb);
    for p in partials {
        total += p;
    }
    Ok(total / Complex64::new(a.len() as f64, 0.0))
}

/// `(1 - lambda)(1/D) sum y y^H + lambda (tr/N) I`, exactly Hermitian.
pub fn sample_cov_refs(signals: &[&ComplexSignal], shrinkage: f64) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&shrinkage) {
        return Err(Error::invalid(format!("shrinkage {shrinkage} must lie in [0, 1]")));
    }
    let c = cross_cov(signals, signals)?;
    let n = c.nrows();
    let level = linalg::trace_re(&c) / n as f64;
    let mut out = (&c + c.adjoint()) * Complex64::new(0.5 * (1.0 - shrinkage), 0.0);
    for i in 0..n {
        out[(i, i)] = Complex64::new(out[(i, i)].re + shrinkage * level, 0.0);
    }
    Ok(out)
}

pub fn sample_cov(signals: &[ComplexSignal], shrinkage: f64) -> Result<CMatrix> {
    let refs: Vec<&ComplexSignal> = signals.iter().collect();
    sample_cov_refs(&refs, shrinkage)
}

/// Default shrinkage `10 / (D + 10)`.
pub fn default_shrinkage(d: usize) -> f64 {
    10.0 / (d as f64 + 10.0)
}
