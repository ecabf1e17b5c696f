//! Signal primitives: waveforms, Butterworth band-pass design, zero-phase
//! filtering, periodograms and spectral heart-rate extraction.

pub mod butterworth;
pub mod filter;
pub mod linalg;
pub mod resample;
pub mod spectrum;
pub mod waveform;

pub use butterworth::{design_bandpass, BandpassSpec, FilterCoeffs};
pub use filter::{filter_zero_phase, filtfilt, filtfilt_symmetric};
pub use resample::resample_linear;
pub use spectrum::{estimate_hr, extract_hr_bpm, psd, psd_samples, BandShaping, HrConfig, HrEstimate, PsdEstimate};
pub use waveform::{mean_std, Waveform};
