//! Complex baseband signal container.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite, non-empty vector of complex baseband (I/Q) samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct ComplexSignal(Vec<Complex64>);

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("signal must contain at least one sample"));
        }
        if let Some(n) = samples.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample at index {n}")));
        }
        Ok(Self(samples))
    }

    /// Wraps samples produced internally. Finiteness is checked in debug builds only.
    pub(crate) fn from_vec_unchecked(samples: Vec<Complex64>) -> Self {
        debug_assert!(!samples.is_empty());
        debug_assert!(samples.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        Self(samples)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    /// Mean of |x[n]|^2.
    pub fn power(&self) -> f64 {
        self.energy() / self.0.len() as f64
    }

    /// Sum of |x[n]|^2.
    pub fn energy(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self(self.0.iter().map(|z| z * factor).collect())
    }

    pub fn add(&self, other: &ComplexSignal) -> Result<Self> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch { expected: self.len(), found: other.len() });
        }
        Ok(Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect()))
    }
}

impl TryFrom<Vec<Complex64>> for ComplexSignal {
    type Error = Error;

    fn try_from(v: Vec<Complex64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ComplexSignal> for Vec<Complex64> {
    fn from(s: ComplexSignal) -> Self {
        s.0
    }
}

impl AsRef<[Complex64]> for ComplexSignal {
    fn as_ref(&self) -> &[Complex64] {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(ComplexSignal::new(vec![]).is_err());
        assert!(ComplexSignal::new(vec![Complex64::new(f64::NAN, 0.0)]).is_err());
        assert!(ComplexSignal::new(vec![Complex64::new(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn power_and_energy() {
        let s = ComplexSignal::new(vec![Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0)]).unwrap();
        assert_eq!(s.energy(), 6.0);
        assert_eq!(s.power(), 3.0);
    }
}
