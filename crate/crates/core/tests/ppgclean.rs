use std::f64::consts::TAU;

use neorppg::ppgclean::*;
use neorppg::signal::{design_bandpass, extract_hr_bpm, filter_zero_phase, BandpassSpec, Waveform};
use neorppg::synth::{corruption_mask, inject_artifacts, session_ppg, SynthConfig};
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

fn clean_cfg() -> SynthConfig {
    SynthConfig { n_subjects: 200, ..SynthConfig::clean(7) }
}

#[test]
fn frozen_reference_matches_calibration() {
    let cfg = clean_cfg();
    let clean: Vec<Waveform> = (100..130).map(|s| session_ppg(&cfg, s, 300.0).unwrap().0).collect();
    let stats = calibrate_reference(&clean, &ScreenConfig::default()).unwrap();
    for (a, b) in stats.mean.iter().chain(&stats.sd).zip(CLEAN_REFERENCE.mean.iter().chain(&CLEAN_REFERENCE.sd)) {
        assert!((a - b).abs() <= 1e-9 * b.abs(), "{a} vs {b}");
    }
}

#[test]
fn clean_and_corrupted_dirty_fractions() {
    let cfg = clean_cfg();
    let screen = BuiltinScreen::default();
    for s in 0..4 {
        let (w, _) = session_ppg(&cfg, s, 120.0).unwrap();
        let d = screen_quality(&w, &screen, &ScreenConfig::default()).unwrap();
        let frac = d.iter().filter(|&&b| b).count() as f64 / d.len() as f64;
        assert!(frac < 0.05, "clean dirty fraction {frac}");
        let (c, _) = inject_artifacts(&w, 1.0, s as u64).unwrap();
        let d = screen_quality(&c, &screen, &ScreenConfig::default()).unwrap();
        let frac = d.iter().filter(|&&b| b).count() as f64 / d.len() as f64;
        assert!(frac > 0.9, "corrupted dirty fraction {frac}");
    }
}

#[test]
fn builtin_score_orders_windows() {
    let cfg = clean_cfg();
    let screen = BuiltinScreen::default();
    let (w, _) = session_ppg(&cfg, 3, 4.0).unwrap();
    assert!(screen.score(&w) >= screen.threshold());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let n = Normal::new(0.0, 1.0).unwrap();
    let noise = Waveform::new((0..240).map(|_| n.sample(&mut rng)).collect(), 60.0).unwrap();
    assert!(screen.score(&noise) < screen.threshold());
    let flat = Waveform::new(vec![0.7; 240], 60.0).unwrap();
    assert_eq!(screen.score(&flat), DEGENERATE_SCORE);
    assert!(screen.score(&flat) < screen.threshold());
}

#[test]
fn ten_second_input_gets_one_verdict() {
    let cfg = clean_cfg();
    let (w, _) = session_ppg(&cfg, 0, 10.0).unwrap();
    let (c, _) = inject_artifacts(&w, 0.3, 5).unwrap();
    let d = screen_quality(&c, &BuiltinScreen::default(), &ScreenConfig::long()).unwrap();
    assert!(d.iter().all(|&v| v == d[0]));
}

fn burst(w: &Waveform, start_s: f64, len_s: f64) -> (Waveform, Vec<bool>) {
    let fs = w.sample_rate_hz();
    let (a, b) = ((start_s * fs) as usize, ((start_s + len_s) * fs) as usize);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
    let n = Normal::new(0.0, 3.0).unwrap();
    let mut x = w.samples().to_vec();
    for v in &mut x[a..b] {
        *v = 0.2 * *v + n.sample(&mut rng);
    }
    let mut dirty = vec![false; x.len()];
    dirty[a..b].iter_mut().for_each(|d| *d = true);
    (w.with_samples(x).unwrap(), dirty)
}

#[test]
fn short_burst_reconstructed_long_burst_dropped() {
    let cfg = clean_cfg();
    let (w, sess) = session_ppg(&cfg, 5, 60.0).unwrap();
    let r = HarmonicReconstructor::default();
    let (c, dirty) = burst(&w, 20.0, 3.0);
    let (out, report) = reconstruct_short_gaps(&c, &dirty, &r, &GapConfig::default()).unwrap();
    assert_eq!(report.flagged_intervals.len(), 1);
    assert_eq!(report.flagged_intervals[0].action, GapAction::Reconstructed);
    assert!(out.quality_mask().iter().all(|&m| m));
    let seg = out.slice(1200..1380).unwrap();
    let hr = extract_hr_bpm(&seg).unwrap();
    assert!((hr - sess.mean_hr(20.0, 23.0)).abs() < 5.0, "{hr}");
    for (i, (a, b)) in out.samples().iter().zip(c.samples()).enumerate() {
        if !dirty[i] {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    let (c, dirty) = burst(&w, 20.0, 20.0);
    let (out, report) = reconstruct_short_gaps(&c, &dirty, &r, &GapConfig::default()).unwrap();
    assert_eq!(report.flagged_intervals[0].action, GapAction::Dropped);
    assert_eq!(out.samples(), c.samples());
    assert!(out.quality_mask()[1200..2400].iter().all(|&m| !m));
}

#[test]
fn boundary_gap_dropped_and_clean_input_untouched() {
    let cfg = clean_cfg();
    let (w, _) = session_ppg(&cfg, 1, 30.0).unwrap();
    let r = HarmonicReconstructor::default();
    let (out, report) = reconstruct_short_gaps(&w, &vec![false; w.len()], &r, &GapConfig::default()).unwrap();
    assert_eq!(out, w);
    assert!(report.flagged_intervals.is_empty());
    let (c, dirty) = burst(&w, 0.0, 2.0);
    let (_, report) = reconstruct_short_gaps(&c, &dirty, &r, &GapConfig::default()).unwrap();
    assert_eq!(report.flagged_intervals[0].action, GapAction::Dropped);
}

#[test]
fn reconstruction_sweeps_between_contexts() {
    let fs = 60.0;
    let before: Vec<f64> = (0..360).map(|i| (TAU * 1.8 * i as f64 / fs).sin()).collect();
    let after: Vec<f64> = (0..360).map(|i| (TAU * 2.2 * i as f64 / fs + 0.4).sin()).collect();
    let rec = HarmonicReconstructor::default().reconstruct(&before, 360, &after, fs).unwrap();
    // Instantaneous frequency from successive upward zero crossings.
    let ups: Vec<f64> = (1..rec.len())
        .filter(|&i| rec[i - 1] < 0.0 && rec[i] >= 0.0)
        .map(|i| i as f64 - rec[i] / (rec[i] - rec[i - 1]))
        .collect();
    let freqs: Vec<f64> = ups.windows(2).map(|p| fs / (p[1] - p[0])).collect();
    assert!(freqs.len() >= 8);
    for f in freqs.windows(2) {
        assert!(f[1] >= f[0] - 1e-6, "{freqs:?}");
    }
    assert!(freqs[0] > 1.7 && *freqs.last().unwrap() < 2.4, "{freqs:?}");
}

#[test]
fn hrv_retained_tracks_clean_fraction() {
    let cfg = clean_cfg();
    let coeffs = design_bandpass(&BandpassSpec::default(), 60.0).unwrap();
    for s in 0..3 {
        let (w, _) = session_ppg(&cfg, s, 600.0).unwrap();
        let (c, iv) = inject_artifacts(&w, 0.2, 77 + s as u64).unwrap();
        let m = corruption_mask(w.len(), &iv);
        let clean_frac = m.iter().filter(|&&b| !b).count() as f64 / m.len() as f64;
        let r = hrv_screen(&filter_zero_phase(&c, &coeffs).unwrap(), &[], &HrvConfig::default()).unwrap();
        assert!((r.retained_fraction - clean_frac).abs() <= 0.1, "{} vs {clean_frac}", r.retained_fraction);
    }
}

#[test]
fn denoise_pipeline_only_restores_inside_short_gaps() {
    let cfg = clean_cfg();
    let (w, _) = session_ppg(&cfg, 2, 300.0).unwrap();
    let (c, _) = inject_artifacts(&w, 0.2, 3).unwrap();
    let out = denoise(&c, &BuiltinScreen::default(), &HarmonicReconstructor::default(), &DenoiseConfig::default(), &[]).unwrap();
    for (i, &m) in out.waveform.quality_mask().iter().enumerate() {
        if !out.dirty[i] {
            assert_eq!(out.waveform.samples()[i].to_bits(), c.samples()[i].to_bits());
        } else if m {
            // Restored samples lie inside a reconstructed interval.
            let t = i as f64 / 60.0;
            assert!(out.report.flagged_intervals.iter().any(|f| f.action == GapAction::Reconstructed && f.start_s <= t && t < f.end_s));
        }
    }
    let iv = &out.report.flagged_intervals;
    for p in iv.windows(2) {
        assert!(p[0].end_s <= p[1].start_s);
    }
}
