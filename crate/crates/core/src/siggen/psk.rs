//! Gray-coded M-PSK frames with RRC pulse shaping, matched-filter demodulation
//! and bit error rate.

use std::f64::consts::PI;
use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::rrc::rrc_taps;
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::signal::ComplexSignal;

/// Framing and pulse-shaping parameters of the signal of interest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameSpec {
    /// Constellation order M.
    pub order: usize,
    pub symbols_per_frame: usize,
    /// Samples per symbol (oversampling factor).
    pub sps: usize,
    pub rolloff: f64,
    /// RRC span in symbols; the filter has `span_symbols * sps + 1` taps.
    pub span_symbols: usize,
    /// Leading zero samples before the shaped waveform.
    pub offset_samples: usize,
}

impl Default for FrameSpec {
    fn default() -> Self {
        Self { order: 4, symbols_per_frame: 8, sps: 16, rolloff: 0.5, span_symbols: 8, offset_samples: 8 }
    }
}

impl FrameSpec {
    pub fn validate(&self) -> Result<()> {
        if ![2, 4, 8, 16].contains(&self.order) {
            return Err(Error::invalid(format!("constellation order {} must be one of 2, 4, 8, 16", self.order)));
        }
        if self.symbols_per_frame == 0 {
            return Err(Error::invalid("symbols_per_frame must be at least 1"));
        }
        if self.span_symbols < 4 || !self.span_symbols.is_multiple_of(2) {
            return Err(Error::invalid(format!("span_symbols {} must be even and at least 4", self.span_symbols)));
        }
        rrc_taps(self.rolloff, self.span_symbols, self.sps).map(|_| ())
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.order.trailing_zeros() as usize
    }

    pub fn tap_count(&self) -> usize {
        self.span_symbols * self.sps + 1
    }

    pub fn taps(&self) -> Result<Vec<f64>> {
        rrc_taps(self.rolloff, self.span_symbols, self.sps)
    }

    /// Samples in a frame of `n_symbols`: offset, symbols and the filter tail.
    pub fn frame_len(&self, n_symbols: usize) -> usize {
        self.offset_samples + n_symbols * self.sps + self.tap_count() - 1
    }

    /// Transmit-plus-receive filter delay in samples.
    pub fn group_delay(&self) -> usize {
        self.tap_count() - 1
    }

    /// Samples where the pulse train is fully overlapped by the filter.
    pub fn steady_state(&self, n_symbols: usize) -> Range<usize> {
        let start = self.offset_samples + self.tap_count() - 1;
        let end = self.offset_samples + n_symbols * self.sps;
        start..end.max(start)
    }

    /// Amplitude gain that gives the shaped waveform unit mean power: unit-energy
    /// taps carry one unit-power symbol every `sps` samples.
    pub fn soi_gain(&self) -> f64 {
        (self.sps as f64).sqrt()
    }
}

pub fn constellation_point(index: usize, order: usize) -> Complex64 {
    let m = order as f64;
    Complex64::from_polar(1.0, PI / m + 2.0 * PI * index as f64 / m)
}

/// Gray label of constellation index `m`.
pub fn gray_encode(m: usize) -> usize {
    m ^ (m >> 1)
}

pub fn gray_decode(mut g: usize) -> usize {
    let mut m = g;
    while g > 0 {
        g >>= 1;
        m ^= g;
    }
    m
}

/// Maps bits (MSB first per symbol) to constellation points.
pub fn map_bits(bits: &[u8], order: usize) -> Result<Vec<Complex64>> {
    let k = order.trailing_zeros() as usize;
    if k == 0 || !order.is_power_of_two() || !bits.len().is_multiple_of(k) {
        return Err(Error::invalid(format!("{} bits do not fill {order}-PSK symbols", bits.len())));
    }
    Ok(bits
        .chunks(k)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            constellation_point(gray_decode(label), order)
        })
        .collect())
}

/// Places each symbol at `offset + m*sps` and convolves with the RRC taps.
/// The output has `frame_len(symbols.len())` samples and no gain applied.
pub fn shape(frame: &FrameSpec, taps: &[f64], symbols: &[Complex64]) -> Vec<Complex64> {
    let len = frame.frame_len(symbols.len());
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (m, &a) in symbols.iter().enumerate() {
        let start = frame.offset_samples + m * frame.sps;
        for (t, &h) in taps.iter().enumerate() {
            out[start + t] += a * h;
        }
    }
    out
}

/// Random Gray-coded M-PSK frame of `n_symbols`, shaped and scaled to unit
/// mean power. Returns the waveform and the transmitted bits.
pub fn gen_mpsk(frame: &FrameSpec, n_symbols: usize, seed: u64) -> Result<(ComplexSignal, Vec<u8>)> {
    frame.validate()?;
    if n_symbols == 0 {
        return Err(Error::invalid("n_symbols must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<u8> = (0..n_symbols * frame.bits_per_symbol()).map(|_| rng.random::<bool>() as u8).collect();
    let signal = modulate(frame, &bits)?;
    Ok((signal, bits))
}

/// Shapes a given bit sequence into a unit-power frame.
pub fn modulate(frame: &FrameSpec, bits: &[u8]) -> Result<ComplexSignal> {
    let taps = frame.taps()?;
    let symbols = map_bits(bits, frame.order)?;
    let gain = frame.soi_gain();
    let mut wave = shape(frame, &taps, &symbols);
    wave.iter_mut().for_each(|z| *z *= gain);
    ComplexSignal::new(wave)
}

/// Second-order statistics of a frame with i.i.d. uniform symbols:
/// `E[s s^H] = g^2 sum_m h_m h_m^T` with `h_m` the pulse shifted to symbol `m`.
pub fn psk_covariance(frame: &FrameSpec, n_symbols: usize) -> Result<CMatrix> {
    frame.validate()?;
    let taps = frame.taps()?;
    let n = frame.frame_len(n_symbols);
    let g2 = frame.soi_gain().powi(2);
    let mut c = CMatrix::zeros(n, n);
    for m in 0..n_symbols {
        let start = frame.offset_samples + m * frame.sps;
        for (a, &ha) in taps.iter().enumerate() {
            for (b, &hb) in taps.iter().enumerate() {
                c[(start + a, start + b)] += Complex64::new(g2 * ha * hb, 0.0);
            }
        }
    }
    Ok(c)
}

/// Matched filter, symbol-rate sampling, nearest-point decision and Gray demap.
pub fn demod_mpsk(s_hat: &ComplexSignal, frame: &FrameSpec, n_symbols: usize) -> Result<Vec<u8>> {
    frame.validate()?;
    let taps = frame.taps()?;
    let x = s_hat.as_slice();
    let needed = frame.offset_samples + n_symbols.saturating_sub(1) * frame.sps + taps.len();
    if n_symbols == 0 || x.len() < needed {
        return Err(Error::InsufficientLength { needed, available: x.len() });
    }
    let k = frame.bits_per_symbol();
    let points: Vec<Complex64> = (0..frame.order).map(|m| constellation_point(m, frame.order)).collect();
    let mut bits = Vec::with_capacity(n_symbols * k);
    for m in 0..n_symbols {
        let idx = frame.offset_samples + frame.group_delay() + m * frame.sps;
        let z: Complex64 = taps.iter().enumerate().map(|(t, &h)| x[idx - t] * h).sum();
        // strict comparison keeps the smallest index on ties
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        let label = gray_encode(best);
        bits.extend((0..k).rev().map(|b| ((label >> b) & 1) as u8));
    }
    Ok(bits)
}

/// Fraction of differing bits.
pub fn ber(bits_hat: &[u8], bits_ref: &[u8]) -> Result<f64> {
    if bits_hat.len() != bits_ref.len() || bits_ref.is_empty() {
        return Err(Error::invalid(format!(
            "bit vectors must have equal nonzero length ({} vs {})",
            bits_hat.len(),
            bits_ref.len()
        )));
    }
    let errors = bits_hat.iter().zip(bits_ref).filter(|(a, b)| (*a & 1) != (*b & 1)).count();
    Ok(errors as f64 / bits_ref.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bpsk_alphabet() {
        let frame = FrameSpec { order: 2, ..FrameSpec::default() };
        let pts = map_bits(&[0, 1], frame.order).unwrap();
        let i = Complex64::new(0.0, 1.0);
        assert!((pts[0] - i).norm() < 1e-15);
        assert!((pts[1] + i).norm() < 1e-15);
    }

    #[test]
    fn gray_neighbours_differ_by_one_bit() {
        for order in [4usize, 8, 16] {
            for m in 0..order {
                let next = (m + 1) % order;
                assert_eq!((gray_encode(m) ^ gray_encode(next)).count_ones(), 1);
                assert_eq!(gray_decode(gray_encode(m)), m);
            }
        }
    }

    #[test]
    fn steady_state_power_is_unit() {
        let frame = FrameSpec::default();
        let (s, bits) = gen_mpsk(&frame, 2560, 11).unwrap();
        assert_eq!(bits.len(), 2560 * 2);
        let r = frame.steady_state(2560);
        let p: f64 = s.as_slice()[r.clone()].iter().map(|z| z.norm_sqr()).sum::<f64>() / r.len() as f64;
        assert!((p - 1.0).abs() < 0.02, "steady-state power {p}");
    }

    #[test]
    fn deterministic() {
        let frame = FrameSpec::default();
        assert_eq!(gen_mpsk(&frame, 8, 3).unwrap(), gen_mpsk(&frame, 8, 3).unwrap());
    }

    #[test]
    fn back_to_back_and_gain_invariance() {
        for order in [2, 4, 8, 16] {
            let frame = FrameSpec { order, ..FrameSpec::default() };
            for seed in 0..5 {
                let (s, bits) = gen_mpsk(&frame, 64, seed).unwrap();
                assert_eq!(demod_mpsk(&s, &frame, 64).unwrap(), bits);
                let scaled = s.scaled(Complex64::new(3.7, 0.0));
                assert_eq!(demod_mpsk(&scaled, &frame, 64).unwrap(), bits);
            }
        }
    }

    #[test]
    fn demod_rejects_short_input() {
        let frame = FrameSpec::default();
        let (s, _) = gen_mpsk(&frame, 4, 0).unwrap();
        assert!(matches!(demod_mpsk(&s, &frame, 5), Err(Error::InsufficientLength { .. })));
    }

    #[test]
    fn ber_examples() {
        assert_eq!(ber(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap(), 0.0);
        assert_eq!(ber(&[1, 0, 0, 1], &[0, 1, 1, 0]).unwrap(), 1.0);
        assert_eq!(ber(&[0, 1, 1, 0], &[0, 0, 1, 1]).unwrap(), 0.5);
        assert!(ber(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn covariance_matches_empirical_frames() {
        let frame = FrameSpec { sps: 4, span_symbols: 4, offset_samples: 2, ..FrameSpec::default() };
        let n_sym = 3;
        let c = psk_covariance(&frame, n_sym).unwrap();
        let n = frame.frame_len(n_sym);
        let trials = 20_000;
        let mut emp = CMatrix::zeros(n, n);
        for seed in 0..trials {
            let (s, _) = gen_mpsk(&frame, n_sym, seed).unwrap();
            let v = s.as_slice();
            for i in 0..n {
                for j in 0..n {
                    emp[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        let emp = emp / Complex64::new(trials as f64, 0.0);
        let worst = (0..n * n).map(|i| (emp[i] - c[i]).norm()).fold(0.0f64, f64::max);
        // |s_i s_j| <= ~2 so each entry's stderr is below 2/sqrt(trials)
        assert!(worst < 5.0 * 2.0 / (trials as f64).sqrt(), "worst entry error {worst}");
    }

    #[test]
    fn frame_validation() {
        assert!(FrameSpec { order: 3, ..FrameSpec::default() }.validate().is_err());
        assert!(FrameSpec { sps: 1, ..FrameSpec::default() }.validate().is_err());
        assert!(FrameSpec { span_symbols: 2, ..FrameSpec::default() }.validate().is_err());
        assert_eq!(FrameSpec::default().frame_len(8), 8 + 128 + 128);
    }
}
