use super::waveform::Waveform;
use crate::error::{Error, Result};

/// Linear interpolation onto a uniform grid at `target_hz` starting at t=0
/// and not extending past the last input sample. A target sample is usable
/// only when both bracketing input samples are.
pub fn resample_linear(w: &Waveform, target_hz: f64) -> Result<Waveform> {
    if !(target_hz > 0.0 && target_hz.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "target rate must be positive, got {target_hz}"
        )));
    }
    let fs = w.sample_rate_hz();
    if (fs - target_hz).abs() < 1e-12 {
        return Ok(w.clone());
    }
    let x = w.samples();
    let m = w.quality_mask();
    let last_t = (x.len() - 1) as f64 / fs;
    let n_out = (last_t * target_hz + 1e-9).floor() as usize + 1;
    let mut samples = Vec::with_capacity(n_out);
    let mut mask = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let pos = k as f64 * fs / target_hz;
        let i0 = (pos.floor() as usize).min(x.len() - 1);
        let frac = pos - i0 as f64;
        if frac < 1e-9 || i0 + 1 >= x.len() {
            samples.push(x[i0]);
            mask.push(m[i0]);
        } else {
            samples.push(x[i0] + frac * (x[i0 + 1] - x[i0]));
            mask.push(m[i0] && m[i0 + 1]);
        }
    }
    Waveform::with_mask(samples, target_hz, mask)
}
