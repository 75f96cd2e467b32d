//! Root-raised-cosine pulse.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Un-normalized RRC impulse response at `t` symbol periods.
///
/// The removable singularities at `t = 0` and `|t| = 1/(4 beta)` are replaced
/// by their limits.
pub fn rrc_impulse(t: f64, rolloff: f64) -> f64 {
    let b = rolloff;
    if t == 0.0 {
        return 1.0 - b + 4.0 * b / PI;
    }
    let edge = 1.0 / (4.0 * b);
    if (t.abs() - edge).abs() < 1e-9 {
        let arg = PI / (4.0 * b);
        return b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * arg.sin() + (1.0 - 2.0 / PI) * arg.cos());
    }
    let num = (PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos();
    let den = PI * t * (1.0 - (4.0 * b * t).powi(2));
    num / den
}

/// Symmetric RRC taps of length `span_symbols * sps + 1`, scaled to unit energy.
pub fn rrc_taps(rolloff: f64, span_symbols: usize, sps: usize) -> Result<Vec<f64>> {
    if !(rolloff > 0.0 && rolloff <= 1.0) {
        return Err(Error::invalid(format!("roll-off {rolloff} must lie in (0, 1]")));
    }
    if sps < 2 {
        return Err(Error::invalid(format!("samples per symbol {sps} must be at least 2")));
    }
    if span_symbols < 2 || !span_symbols.is_multiple_of(2) {
        return Err(Error::invalid(format!("filter span {span_symbols} must be even and positive")));
    }
    let len = span_symbols
        .checked_mul(sps)
        .and_then(|v| v.checked_add(1))
        .ok_or_else(|| Error::invalid("tap count overflows"))?;
    let half = (len / 2) as isize;
    let mut taps: Vec<f64> = (0..len as isize)
        .map(|i| rrc_impulse((i - half) as f64 / sps as f64, rolloff))
        .collect();
    let energy: f64 = taps.iter().map(|h| h * h).sum();
    let scale = 1.0 / energy.sqrt();
    taps.iter_mut().for_each(|h| *h *= scale);
    // enforce exact even symmetry against rounding in the closed form
    for i in 0..len / 2 {
        let v = 0.5 * (taps[i] + taps[len - 1 - i]);
        taps[i] = v;
        taps[len - 1 - i] = v;
    }
    Ok(taps)
}
