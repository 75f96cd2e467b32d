//! Per-trial error metrics.

use crate::error::{Error, Result};
use crate::signal::ComplexSignal;

/// Total squared error `||s_hat - s||^2` over the frame.
pub fn mse(s_hat: &ComplexSignal, s: &ComplexSignal) -> Result<f64> {
    if s_hat.len() != s.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), found: s_hat.len() });
    }
    Ok(s_hat.as_slice().iter().zip(s.as_slice()).map(|(a, b)| (a - b).norm_sqr()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn examples() {
        let s = ComplexSignal::new(vec![Complex64::new(2.0, 1.0), Complex64::new(1.0, -1.0), Complex64::new(0.0, 0.0)])
            .unwrap();
        assert_eq!(mse(&s, &s).unwrap(), 0.0);
        let zero = ComplexSignal::zeros(3).unwrap();
        assert_eq!(mse(&zero, &s).unwrap(), 7.0);
        let mut v = s.as_slice().to_vec();
        v[0] += 1.0;
        assert_eq!(mse(&ComplexSignal::new(v).unwrap(), &s).unwrap(), 1.0);
        assert!(mse(&ComplexSignal::zeros(2).unwrap(), &s).is_err());
    }
}
