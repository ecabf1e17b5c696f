//! Reference PPG cleaning: quality screening, short-gap reconstruction and
//! HRV-based window rejection, applied in that order.

mod features;
mod hrv;
mod reconstruct;
mod screen;

pub use features::{
    builtin_quality_score, window_features, BuiltinScreen, FeatureStats, Features, QualityScreen,
    CLEAN_REFERENCE, DEFAULT_THRESHOLD, DEGENERATE_SCORE,
};
pub use hrv::{detect_peaks, hr_fluctuation, hrv_screen, HrvConfig, HrvResult, WindowVerdict};
pub use reconstruct::{HarmonicReconstructor, Reconstructor};
pub use screen::{calibrate_reference, screen_quality, window_starts, ScreenConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{design_bandpass, filter_zero_phase, BandpassSpec, Waveform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapAction {
    Reconstructed,
    Dropped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlaggedInterval {
    pub start_s: f64,
    pub end_s: f64,
    pub action: GapAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanReport {
    /// Ascending, non-overlapping.
    pub flagged_intervals: Vec<FlaggedInterval>,
    pub retained_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GapConfig {
    /// Runs at least this long are dropped.
    pub max_gap_s: f64,
    /// Step of the left-to-right reconstruction.
    pub shift_s: f64,
    /// Longest clean context handed to the reconstructor on each side.
    pub max_context_s: f64,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            max_gap_s: 15.0,
            shift_s: 2.0,
            max_context_s: 8.0,
        }
    }
}

fn runs(mask: &[bool]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < mask.len() {
        if mask[i] {
            let s = i;
            while i < mask.len() && mask[i] {
                i += 1;
            }
            out.push((s, i));
        } else {
            i += 1;
        }
    }
    out
}

/// Fills dirty runs shorter than `max_gap_s` with `r`, proceeding left to
/// right in `shift_s` steps; longer runs, runs touching either end of the
/// signal and runs the reconstructor refuses stay masked. Samples outside
/// dirty runs are never modified.
pub fn reconstruct_short_gaps(
    w: &Waveform,
    dirty: &[bool],
    r: &dyn Reconstructor,
    cfg: &GapConfig,
) -> Result<(Waveform, CleanReport)> {
    if dirty.len() != w.len() {
        return Err(Error::InvalidArgument(format!(
            "dirty mask has {} entries for {} samples",
            dirty.len(),
            w.len()
        )));
    }
    let fs = w.sample_rate_hz();
    let n = w.len();
    let mut x = w.samples().to_vec();
    let mut mask: Vec<bool> = w
        .quality_mask()
        .iter()
        .zip(dirty)
        .map(|(&q, &d)| q && !d)
        .collect();
    let bad: Vec<bool> = mask.iter().map(|m| !m).collect();
    let max_ctx = (cfg.max_context_s * fs).round() as usize;
    let shift = ((cfg.shift_s * fs).round() as usize).max(1);
    let mut report = Vec::new();

    for (s, e) in runs(&bad) {
        let interval = |action| FlaggedInterval {
            start_s: s as f64 / fs,
            end_s: e as f64 / fs,
            action,
        };
        let short = ((e - s) as f64) < cfg.max_gap_s * fs;
        if !short || s == 0 || e == n {
            report.push(interval(GapAction::Dropped));
            continue;
        }
        let ctx_start = |pos: usize, mask: &[bool]| {
            let mut c = pos;
            while c > 0 && mask[c - 1] && pos - c < max_ctx {
                c -= 1;
            }
            c
        };
        let mut after_end = e;
        while after_end < n && mask[after_end] && after_end - e < max_ctx {
            after_end += 1;
        }
        let after = x[e..after_end].to_vec();

        let before_len = s - ctx_start(s, &mask);
        // Step left to right only if the left context alone suffices;
        // otherwise fill the whole run in one call.
        let probe = r.reconstruct(&x[s - before_len..s], 1, &[], fs).is_some();
        let filled = if probe {
            let mut out = Vec::with_capacity(e - s);
            let mut pos = s;
            let mut ok = true;
            while pos < e {
                let len = shift.min(e - pos);
                let last = pos + len == e;
                let c = ctx_start(pos, &mask);
                let after_ctx: &[f64] = if last { &after } else { &[] };
                match r.reconstruct(&x[c..pos], len, after_ctx, fs) {
                    Some(seg) if seg.len() == len => {
                        x[pos..pos + len].copy_from_slice(&seg);
                        mask[pos..pos + len].iter_mut().for_each(|m| *m = true);
                        out.extend(seg);
                    }
                    _ => {
                        ok = false;
                        break;
                    }
                }
                pos += len;
            }
            ok.then_some(out)
        } else {
            r.reconstruct(&x[s - before_len..s], e - s, &after, fs)
                .filter(|seg| seg.len() == e - s)
        };
        match filled {
            Some(seg) => {
                x[s..e].copy_from_slice(&seg);
                mask[s..e].iter_mut().for_each(|m| *m = true);
                report.push(interval(GapAction::Reconstructed));
            }
            None => {
                x[s..e].copy_from_slice(&w.samples()[s..e]);
                mask[s..e].iter_mut().for_each(|m| *m = false);
                report.push(interval(GapAction::Dropped));
            }
        }
    }
    let retained = mask.iter().filter(|&&m| m).count() as f64 / n as f64;
    Ok((
        Waveform::with_mask(x, fs, mask)?,
        CleanReport {
            flagged_intervals: report,
            retained_fraction: retained,
        },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct DenoiseConfig {
    pub screen: ScreenConfig,
    pub gaps: GapConfig,
    pub hrv: HrvConfig,
}

#[derive(Debug, Clone)]
pub struct DenoiseOutput {
    /// Cleaned signal; the mask marks retained samples.
    pub waveform: Waveform,
    pub dirty: Vec<bool>,
    pub report: CleanReport,
    pub hrv: HrvResult,
}

/// Screening, then reconstruction, then HRV rejection. `paired` maps 2 s
/// windows to video clip ids (may be empty).
pub fn denoise(
    w: &Waveform,
    screen: &dyn QualityScreen,
    r: &dyn Reconstructor,
    cfg: &DenoiseConfig,
    paired: &[String],
) -> Result<DenoiseOutput> {
    let dirty = screen_quality(w, screen, &cfg.screen)?;
    let (rec, mut report) = reconstruct_short_gaps(w, &dirty, r, &cfg.gaps)?;
    let coeffs = design_bandpass(&BandpassSpec::default(), rec.sample_rate_hz())?;
    let filtered = filter_zero_phase(&rec, &coeffs)?;
    let hrv = hrv_screen(&filtered, paired, &cfg.hrv)?;
    let mut mask = rec.quality_mask().to_vec();
    for v in hrv.windows.iter().filter(|v| !v.retained) {
        mask[v.start..v.end].iter_mut().for_each(|m| *m = false);
    }
    // The tail shorter than one HRV window cannot be judged.
    if let Some(last) = hrv.windows.last() {
        mask[last.end..].iter_mut().for_each(|m| *m = false);
    } else {
        mask.iter_mut().for_each(|m| *m = false);
    }
    report.retained_fraction = mask.iter().filter(|&&m| m).count() as f64 / mask.len() as f64;
    let (x, fs, _) = rec.into_parts();
    Ok(DenoiseOutput {
        waveform: Waveform::with_mask(x, fs, mask)?,
        dirty,
        report,
        hrv,
    })
}
