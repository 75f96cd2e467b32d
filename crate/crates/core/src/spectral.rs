//! FFT helpers. Plans are cached per thread.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// In-place unnormalized forward DFT: `X[j] = sum_m x[m] e^{-2 pi i j m / n}`.
pub fn fft_in_place(buf: &mut [Complex64]) {
    if buf.len() <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(buf);
}

/// In-place unnormalized inverse DFT: `x[m] = sum_j X[j] e^{+2 pi i j m / n}`.
pub fn ifft_in_place(buf: &mut [Complex64]) {
    if buf.len() <= 1 {
        return;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    fft.process(buf);
}

/// Unitary forward DFT (scaled by 1/sqrt(n)).
pub fn unitary_dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    fft_in_place(&mut buf);
    let s = 1.0 / (x.len() as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// Unitary inverse DFT (scaled by 1/sqrt(n)).
pub fn unitary_idft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    ifft_in_place(&mut buf);
    let s = 1.0 / (x.len() as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// Eigenvalues of the Hermitian circulant matrix whose first column is `c`.
///
/// Returns the real parts; the caller checks sign. The imaginary residue is
/// zero up to rounding whenever `c[n-m] = conj(c[m])`.
pub fn circulant_eigenvalues(c: &[Complex64]) -> Vec<f64> {
    let mut buf = c.to_vec();
    fft_in_place(&mut buf);
    buf.iter().map(|z| z.re).collect()
}
