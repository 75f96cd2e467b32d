//! Streaming mean/variance accumulators fed in trial-index order.

use serde::{Deserialize, Serialize};

/// Welford accumulator for one metric.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Stats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Stats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance (0 for fewer than two samples).
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn summary(&self) -> Summary {
        Summary { mean: self.mean(), stderr: self.stderr(), count: self.n }
    }
}

/// Co-moment accumulator for paired metrics `(a, b)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PairedStats {
    pub a: Stats,
    pub b: Stats,
    c: f64,
}

impl PairedStats {
    pub fn push(&mut self, a: f64, b: f64) {
        let da = a - self.a.mean;
        self.a.push(a);
        self.b.push(b);
        self.c += da * (b - self.b.mean);
    }

    pub fn covariance(&self) -> f64 {
        let n = self.a.count();
        if n < 2 {
            0.0
        } else {
            self.c / (n - 1) as f64
        }
    }

    /// Ratio of means with its delta-method standard error.
    pub fn ratio(&self) -> (f64, f64) {
        let (ma, mb) = (self.a.mean(), self.b.mean());
        let r = ma / mb;
        let n = self.a.count() as f64;
        let var = (self.a.variance() - 2.0 * r * self.covariance() + r * r * self.b.variance()) / (mb * mb * n);
        (r, var.max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub stderr: f64,
    pub count: u64,
}

/// `sqrt(a^2 + b^2)`.
pub fn combined(a: f64, b: f64) -> f64 {
    a.hypot(b)
}

/// Least-squares slope of `y` on `x`; `None` with fewer than two points.
pub fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        None
    } else {
        Some(sxy / sxx)
    }
}
