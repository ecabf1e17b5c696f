use neorppg::eval::{
    compute_metrics, export_bland_altman, export_scatter, multi_window_eval, scatter_svg, BlandAltman, EvalReport,
    WindowSeries,
};
use neorppg::Result;
use proptest::prelude::*;

#[test]
fn small_example() {
    let r = compute_metrics(&[100.0, 110.0], &[102.0, 108.0], 2.0).unwrap();
    assert_eq!((r.mae, r.rmse, r.sd), (2.0, 2.0, 2.0));
    assert_eq!(r.n_windows, 2);
    let p = compute_metrics(&[90.0, 120.0], &[90.0, 120.0], 2.0).unwrap();
    assert_eq!((p.mae, p.rmse, p.sd, p.mape_pct), (0.0, 0.0, 0.0, 0.0));
}

#[test]
fn zero_reference_is_excluded_from_mape() {
    let r = compute_metrics(&[0.0, 100.0], &[1.0, 110.0], 2.0).unwrap();
    assert_eq!(r.mape_excluded, 1);
    assert!((r.mape_pct - 10.0).abs() < 1e-12);
    let json = serde_json::to_string(&compute_metrics(&[0.0], &[1.0], 2.0).unwrap()).unwrap();
    let back: EvalReport = serde_json::from_str(&json).unwrap();
    assert!(back.mape_pct.is_nan());
}

fn oracle(refs: &[f64], preds: &[f64]) -> [f64; 4] {
    let n = refs.len() as f64;
    let (mut abs, mut sq, mut pct, mut sum) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..refs.len() {
        let e = preds[i] - refs[i];
        abs += e.abs();
        sq += e * e;
        pct += (e / refs[i]).abs();
        sum += e;
    }
    let bias = sum / n;
    let mut var = 0.0;
    for i in 0..refs.len() {
        let d = preds[i] - refs[i] - bias;
        var += d * d;
    }
    [abs / n, (sq / n).sqrt(), 100.0 * pct / n, (var / n).sqrt()]
}

fn pairs() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((40.0f64..250.0, 40.0f64..250.0), 1..50)
}

proptest! {
    #[test]
    fn matches_scalar_oracle(p in pairs()) {
        let (refs, preds): (Vec<f64>, Vec<f64>) = p.into_iter().unzip();
        let r = compute_metrics(&refs, &preds, 2.0).unwrap();
        let o = oracle(&refs, &preds);
        for (a, b) in [r.mae, r.rmse, r.mape_pct, r.sd].iter().zip(o) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        prop_assert!(r.rmse >= r.mae && r.mae >= 0.0);
        prop_assert_eq!(r.n_windows, r.per_window.len());
    }

    #[test]
    fn permutation_and_scale(p in pairs(), c in 0.01f64..100.0) {
        let (refs, preds): (Vec<f64>, Vec<f64>) = p.into_iter().unzip();
        let r = compute_metrics(&refs, &preds, 2.0).unwrap();
        let rr: Vec<f64> = refs.iter().rev().copied().collect();
        let pr: Vec<f64> = preds.iter().rev().copied().collect();
        let rev = compute_metrics(&rr, &pr, 2.0).unwrap();
        prop_assert!((rev.mae - r.mae).abs() < 1e-9 && (rev.rmse - r.rmse).abs() < 1e-9);
        let rs: Vec<f64> = refs.iter().map(|v| v * c).collect();
        let ps: Vec<f64> = preds.iter().map(|v| v * c).collect();
        let s = compute_metrics(&rs, &ps, 2.0).unwrap();
        prop_assert!((s.mae - c * r.mae).abs() <= 1e-9 * (c * r.mae).max(1.0));
        prop_assert!((s.rmse - c * r.rmse).abs() <= 1e-9 * (c * r.rmse).max(1.0));
        prop_assert!((s.sd - c * r.sd).abs() <= 1e-9 * (c * r.sd).max(1.0));
        prop_assert!((s.mape_pct - r.mape_pct).abs() <= 1e-9 * r.mape_pct.max(1.0));
    }

    #[test]
    fn limits_of_agreement(p in pairs()) {
        let (refs, preds): (Vec<f64>, Vec<f64>) = p.into_iter().unzip();
        let ba = BlandAltman::from_report(&compute_metrics(&refs, &preds, 2.0).unwrap());
        let [_, _, _, sd] = oracle(&refs, &preds);
        let bias = preds.iter().zip(&refs).map(|(p, r)| p - r).sum::<f64>() / refs.len() as f64;
        prop_assert!((ba.bias - bias).abs() < 1e-9);
        prop_assert!((ba.lower - (bias - 1.96 * sd)).abs() < 1e-9);
        prop_assert!((ba.upper - (bias + 1.96 * sd)).abs() < 1e-9);
    }
}

fn tone(bpm: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| (2.0 * std::f64::consts::PI * bpm / 60.0 * i as f64 / 30.0).sin()).collect()
}

fn mean_hr(parts: &[&[f64]]) -> Result<f64> {
    // Stand-in estimator: decodes the tone amplitude as the rate.
    Ok(parts.iter().map(|p| p.iter().fold(0.0f64, |m, v| m.max(*v))).sum::<f64>() / parts.len() as f64 * 100.0)
}

#[test]
fn single_window_matches_compute_metrics_and_long_windows_skip() {
    let series = vec![WindowSeries {
        id: "a".into(),
        waves: (0..3).map(|_| tone(120.0, 59)).collect(),
        ref_hr_bpm: vec![100.0, 102.0, 98.0],
    }];
    let t = multi_window_eval(&series, &[2.0, 4.0, 6.0, 8.0], &mean_hr).unwrap();
    assert_eq!(t.reports.len(), 3);
    assert_eq!(t.skipped_s, vec![8.0]);
    let preds: Vec<f64> = series[0].waves.iter().map(|w| mean_hr(&[w]).unwrap()).collect();
    assert_eq!(t.reports[0], compute_metrics(&series[0].ref_hr_bpm, &preds, 2.0).unwrap());
    // One non-overlapping 4 s group; the trailing unit window is dropped.
    assert_eq!(t.reports[1].n_windows, 1);
    assert_eq!(t.reports[1].per_window[0].reference, 101.0);
    assert!(multi_window_eval(&series, &[3.0], &mean_hr).is_err());
}

#[test]
fn exports_have_one_row_per_window() {
    let dir = tempfile::tempdir().unwrap();
    let r = compute_metrics(&[90.0, 95.0, 99.0], &[90.0, 95.0, 99.0], 2.0).unwrap();
    let [csv, svg] = export_scatter(&r, dir.path(), "spo2").unwrap();
    let text = std::fs::read_to_string(csv).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.lines().next(), Some("ref,pred"));
    assert!(std::fs::read_to_string(svg).unwrap().contains("stroke-dasharray"));
    let [ba_csv, _] = export_bland_altman(&r, dir.path(), "spo2").unwrap();
    let rows: Vec<String> = std::fs::read_to_string(ba_csv).unwrap().lines().skip(1).map(String::from).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|l| l.ends_with(",0")));
    assert_eq!(BlandAltman::from_report(&r).bias, 0.0);

    let empty = EvalReport {
        per_window: Vec::new(),
        n_windows: 0,
        ..r
    };
    assert!(scatter_svg(&empty).is_err());
}
