//! Circularly-symmetric complex Gaussian vector generation.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gaussmix::CovarianceSpec;
use crate::linalg::{self, CMatrix, DEFAULT_DENSE_CAP};
use crate::signal::ComplexSignal;
use crate::spectral;

/// A pre-factored sampler for `CN(0, C)`.
///
/// `Circulant` is exact when `C` is circulant. `Embedded` is the minimal
/// circulant embedding of a Toeplitz covariance (Davies-Harte); when the
/// embedded spectrum is nonnegative the first `n` outputs have exactly the
/// Toeplitz covariance. `Dense` multiplies a pivoted Cholesky factor.
#[derive(Debug, Clone)]
pub enum GaussianSampler {
    Circulant { sqrt_spec: Vec<f64> },
    Embedded { sqrt_spec: Vec<f64>, n: usize },
    Dense { factor: CMatrix },
}

impl GaussianSampler {
    pub fn stationary(acov: &[Complex64], n: usize) -> Result<Self> {
        let spec = CovarianceSpec::stationary(acov.to_vec(), n)?;
        Self::from_stationary(&spec)
    }

    fn from_stationary(spec: &CovarianceSpec) -> Result<Self> {
        let CovarianceSpec::Stationary { acov, dim } = spec else {
            return Err(Error::UnsupportedForm("expected a stationary covariance".into()));
        };
        let n = *dim;
        if n == 1 || spec.is_exact_circulant() {
            let lambda = spec.spectrum()?;
            return Ok(GaussianSampler::Circulant { sqrt_spec: lambda.iter().map(|l| l.sqrt()).collect() });
        }
        let zero = Complex64::new(0.0, 0.0);
        let lag = |m: usize| acov.get(m).copied().unwrap_or(zero);
        let tail = lag(n - 1);
        // a real last lag can sit on the embedding's self-conjugate bin
        let m_len = if tail.im.abs() <= 1e-14 * acov[0].re { 2 * (n - 1) } else { 2 * n };
        let mut c = vec![zero; m_len];
        for (m, slot) in c.iter_mut().enumerate().take(n) {
            *slot = lag(m);
        }
        for m in 1..n {
            let idx = m_len - m;
            if idx >= n {
                c[idx] = lag(m).conj();
            }
        }
        if m_len == 2 * (n - 1) {
            c[n - 1] = Complex64::new(tail.re, 0.0);
        }
        let lambda = spectral::circulant_eigenvalues(&c);
        let scale = lambda.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        let min = lambda.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < -1e-10 * scale {
            return Err(Error::NotPsd(format!(
                "circulant embedding of length {m_len} has negative eigenvalue {min:.3e}"
            )));
        }
        Ok(GaussianSampler::Embedded { sqrt_spec: lambda.iter().map(|l| l.max(0.0).sqrt()).collect(), n })
    }

    pub fn dense(c: &CMatrix) -> Result<Self> {
        Self::dense_with_cap(c, DEFAULT_DENSE_CAP)
    }

    pub fn dense_with_cap(c: &CMatrix, cap: usize) -> Result<Self> {
        let n = linalg::check_square(c)?;
        if n > cap {
            return Err(Error::invalid(format!("dense dimension {n} exceeds cap {cap}")));
        }
        if n == 0 {
            return Err(Error::invalid("covariance dimension must be at least 1"));
        }
        Ok(GaussianSampler::Dense { factor: linalg::psd_factor(c)? })
    }

    pub fn for_covariance(spec: &CovarianceSpec) -> Result<Self> {
        match spec {
            CovarianceSpec::Dense(m) => Self::dense(m),
            CovarianceSpec::Stationary { .. } => Self::from_stationary(spec),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GaussianSampler::Circulant { sqrt_spec } => sqrt_spec.len(),
            GaussianSampler::Embedded { n, .. } => *n,
            GaussianSampler::Dense { factor } => factor.nrows(),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Complex64> {
        match self {
            GaussianSampler::Circulant { sqrt_spec } => {
                let g: Vec<Complex64> = sqrt_spec.iter().map(|s| linalg::complex_normal(rng) * *s).collect();
                spectral::unitary_idft(&g)
            }
            GaussianSampler::Embedded { sqrt_spec, n } => {
                let g: Vec<Complex64> = sqrt_spec.iter().map(|s| linalg::complex_normal(rng) * *s).collect();
                let mut z = spectral::unitary_idft(&g);
                z.truncate(*n);
                z
            }
            GaussianSampler::Dense { factor } => {
                let g = linalg::complex_normal_vec(rng, factor.nrows());
                linalg::lower_matvec(factor, &g)
            }
        }
    }
}

/// Stationary Gaussian vector with autocovariance `acov` (lags 0..L).
pub fn gen_stationary_gaussian(acov: &[Complex64], n: usize, seed: u64) -> Result<ComplexSignal> {
    let sampler = GaussianSampler::stationary(acov, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ComplexSignal::from_vec_unchecked(sampler.draw(&mut rng)))
}

/// Exact draw `L g` from a dense Hermitian PSD covariance.
pub fn gen_dense_gaussian(c: &CMatrix, seed: u64) -> Result<ComplexSignal> {
    let sampler = GaussianSampler::dense(c)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(ComplexSignal::from_vec_unchecked(sampler.draw(&mut rng)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    /// Empirical covariance and pseudo-covariance over seeds `0..trials`.
    fn moments(sampler: &GaussianSampler, trials: usize) -> (CMatrix, CMatrix) {
        let n = sampler.dim();
        let mut cov = CMatrix::zeros(n, n);
        let mut pseudo = CMatrix::zeros(n, n);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..trials {
            let z = sampler.draw(&mut rng);
            for i in 0..n {
                for j in 0..n {
                    cov[(i, j)] += z[i] * z[j].conj();
                    pseudo[(i, j)] += z[i] * z[j];
                }
            }
        }
        let s = c(1.0 / trials as f64);
        (cov * s, pseudo * s)
    }

    #[test]
    fn white_case_is_identity() {
        let trials = 20_000;
        let sampler = GaussianSampler::stationary(&[c(1.0)], 6).unwrap();
        let (cov, pseudo) = moments(&sampler, trials);
        let tol = 3.0 / (trials as f64).sqrt();
        let err = linalg::frobenius(&(cov - CMatrix::identity(6, 6)));
        assert!(err < tol * 6.0, "frobenius error {err}");
        // circular symmetry: E[z z^T] = 0
        assert!(pseudo.iter().all(|p| p.norm() < 5.0 / (trials as f64).sqrt()));
    }

    #[test]
    fn ar1_lag_one_correlation() {
        // AR(1) acov a^m/(1-a^2): lag-1 correlation equals a
        let a = 0.5f64;
        let n = 64;
        let acov: Vec<Complex64> = (0..n).map(|m| c(a.powi(m) / (1.0 - a * a))).collect();
        let sampler = GaussianSampler::stationary(&acov, n as usize).unwrap();
        assert!(matches!(sampler, GaussianSampler::Embedded { .. }));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let trials = 10_000;
        let mut prods = Vec::with_capacity(trials);
        let mut power = 0.0;
        for _ in 0..trials {
            let z = sampler.draw(&mut rng);
            power += z[10].norm_sqr() + z[11].norm_sqr();
            prods.push((z[11] * z[10].conj()).re);
        }
        let var = power / (2.0 * trials as f64);
        let mean = prods.iter().sum::<f64>() / trials as f64;
        let sd = (prods.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0)).sqrt();
        let stderr = sd / (trials as f64).sqrt() / var;
        let rho = mean / var;
        assert!((rho - a).abs() < 5.0 * stderr, "rho={rho} stderr={stderr}");
    }

    #[test]
    fn embedding_reproduces_toeplitz_exactly() {
        // the embedded circulant's top-left block is the Toeplitz matrix
        let acov = vec![c(2.0), Complex64::new(0.6, 0.3), Complex64::new(0.1, -0.2)];
        let sampler = GaussianSampler::stationary(&acov, 5).unwrap();
        let GaussianSampler::Embedded { sqrt_spec, n } = &sampler else { panic!() };
        let lambda: Vec<Complex64> = sqrt_spec.iter().map(|s| c(s * s)).collect();
        let col = spectral::unitary_idft(&lambda);
        let scale = 1.0 / (sqrt_spec.len() as f64).sqrt();
        let t = linalg::toeplitz_hermitian(&acov, *n);
        for m in 0..*n {
            assert!((col[m] * scale - t[(m, 0)]).norm() < 1e-12, "lag {m}");
        }
    }

    #[test]
    fn negative_embedding_is_rejected() {
        // Toeplitz with r = (1, 0.9) at n = 3 is indefinite (1 - 0.9 sqrt 2 < 0)
        let acov = vec![c(1.0), c(0.9)];
        assert!(matches!(GaussianSampler::stationary(&acov, 3), Err(Error::NotPsd(_))));
    }

    #[test]
    fn dense_zero_matrix_gives_zero() {
        let z = gen_dense_gaussian(&CMatrix::zeros(3, 3), 1).unwrap();
        assert!(z.as_slice().iter().all(|v| *v == Complex64::new(0.0, 0.0)));
    }

    #[test]
    fn dense_identity_and_diag() {
        let trials = 100_000;
        let s = GaussianSampler::dense(&CMatrix::identity(2, 2)).unwrap();
        let (cov, _) = moments(&s, trials);
        let tol = 3.0 / (trials as f64).sqrt();
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { 1.0 } else { 0.0 };
                assert!((cov[(i, j)] - c(target)).norm() < tol, "({i},{j}) = {}", cov[(i, j)]);
            }
        }
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(4.0)]));
        let s = GaussianSampler::dense(&d).unwrap();
        let (cov, _) = moments(&s, trials);
        // var of |z|^2 for CN(0, v) is v^2
        assert!((cov[(0, 0)].re - 1.0).abs() < 3.0 * 1.0 / (trials as f64).sqrt());
        assert!((cov[(1, 1)].re - 4.0).abs() < 3.0 * 4.0 / (trials as f64).sqrt());
    }

    #[test]
    fn dense_rejects_non_psd() {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-0.5)]));
        assert!(matches!(gen_dense_gaussian(&d, 0), Err(Error::NotPsd(_))));
    }

    #[test]
    fn deterministic_given_seed() {
        let acov = [c(1.0), c(0.4)];
        let a = gen_stationary_gaussian(&acov, 16, 5).unwrap();
        let b = gen_stationary_gaussian(&acov, 16, 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_stationary_gaussian(&acov, 16, 6).unwrap());
    }
}
