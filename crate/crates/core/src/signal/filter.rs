//! Zero-phase (forward-backward) IIR filtering with odd-reflection edge
//! padding and steady-state initial conditions.

use super::butterworth::FilterCoeffs;
use super::waveform::Waveform;
use crate::error::{Error, Result};

/// Edge padding used by [`filter_zero_phase`]: three samples per pole.
pub fn pad_len(coeffs: &FilterCoeffs) -> usize {
    3 * coeffs.order()
}

/// Direct form II transposed filter with initial state `zi`.
pub fn lfilter(coeffs: &FilterCoeffs, x: &[f64], zi: Option<&[f64]>) -> Vec<f64> {
    let n = coeffs.order();
    let a0 = coeffs.a[0];
    let b: Vec<f64> = pad_to(&coeffs.b, n + 1).iter().map(|v| v / a0).collect();
    let a: Vec<f64> = pad_to(&coeffs.a, n + 1).iter().map(|v| v / a0).collect();
    let mut z = match zi {
        Some(zi) => zi.to_vec(),
        None => vec![0.0; n],
    };
    let mut y = Vec::with_capacity(x.len());
    for &xv in x {
        let yv = b[0] * xv + z.first().copied().unwrap_or(0.0);
        for i in 0..n {
            let next = if i + 1 < n { z[i + 1] } else { 0.0 };
            z[i] = b[i + 1] * xv + next - a[i + 1] * yv;
        }
        y.push(yv);
    }
    y
}

fn pad_to(c: &[f64], len: usize) -> Vec<f64> {
    let mut v = c.to_vec();
    v.resize(len, 0.0);
    v
}

/// Initial state giving the step response's steady state for a unit input.
pub fn lfilter_zi(coeffs: &FilterCoeffs) -> Vec<f64> {
    let n = coeffs.order();
    if n == 0 {
        return Vec::new();
    }
    let a0 = coeffs.a[0];
    let b: Vec<f64> = pad_to(&coeffs.b, n + 1).iter().map(|v| v / a0).collect();
    let a: Vec<f64> = pad_to(&coeffs.a, n + 1).iter().map(|v| v / a0).collect();
    // (I - C^T) zi = b[1..] - a[1..] * b[0], C the companion matrix of a.
    let mut m = vec![vec![0.0; n]; n];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1.0;
        // C^T[i][0] = -a[i+1]; C^T[i][i+1] = 1.
        row[0] += a[i + 1];
        if i + 1 < n {
            row[i + 1] -= 1.0;
        }
    }
    let rhs: Vec<f64> = (0..n).map(|i| b[i + 1] - a[i + 1] * b[0]).collect();
    solve_dense(m, rhs)
}

/// Gaussian elimination with partial pivoting on a small dense system.
fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Vec<f64> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap_or(col);
        m.swap(col, piv);
        rhs.swap(col, piv);
        let d = m[col][col];
        for r in col + 1..n {
            let f = m[r][col] / d;
            if f != 0.0 {
                for c in col..n {
                    m[r][c] -= f * m[col][c];
                }
                rhs[r] -= f * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (rhs[r] - s) / m[r][r];
    }
    x
}

/// Forward-backward filtering of raw samples. Output length equals input.
pub fn filtfilt(coeffs: &FilterCoeffs, x: &[f64]) -> Result<Vec<f64>> {
    let pad = pad_len(coeffs);
    if x.len() <= pad {
        return Err(Error::Length {
            needed: pad + 1,
            got: x.len(),
        });
    }
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let zi = lfilter_zi(coeffs);
    let scaled = |s: f64| zi.iter().map(|v| v * s).collect::<Vec<_>>();
    let fwd = lfilter(coeffs, &ext, Some(&scaled(ext[0])));
    let rev: Vec<f64> = fwd.iter().rev().copied().collect();
    let bwd = lfilter(coeffs, &rev, Some(&scaled(rev[0])));
    Ok(bwd.iter().rev().skip(pad).take(n).copied().collect())
}

/// Mean of the forward-first and backward-first passes. Unlike either pass
/// order alone, this commutes exactly with time reversal, edges included.
pub fn filtfilt_symmetric(coeffs: &FilterCoeffs, x: &[f64]) -> Result<Vec<f64>> {
    let fwd = filtfilt(coeffs, x)?;
    let rx: Vec<f64> = x.iter().rev().copied().collect();
    let bwd = filtfilt(coeffs, &rx)?;
    Ok(fwd
        .iter()
        .zip(bwd.iter().rev())
        .map(|(a, b)| 0.5 * (a + b))
        .collect())
}

/// Zero-phase filtering of a waveform; the quality mask is carried over.
pub fn filter_zero_phase(w: &Waveform, coeffs: &FilterCoeffs) -> Result<Waveform> {
    let y = filtfilt_symmetric(coeffs, w.samples())?;
    w.with_samples(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::butterworth::{design_bandpass, BandpassSpec};
    use std::f64::consts::PI;

    fn bp30() -> FilterCoeffs {
        design_bandpass(&BandpassSpec::default(), 30.0).unwrap()
    }

    #[test]
    fn matches_reference_filtfilt() {
        // Reference output of an established forward-backward implementation
        // (odd padding of 12 samples, steady-state initial conditions).
        let want = [
            -0.02138078949442954, -0.06766417753369883, -0.03168844541322424, 0.13314655405840004,
            0.3862993275713594, 0.5979620739159279, 0.6360523540174032, 0.4740494080046458,
            0.20796662021379003, -0.04070226615816482, -0.23744684957277054, -0.44597416877161045,
            -0.73007118659532, -1.0559033655600076, -1.3033419406208955, -1.3755541017853705,
            -1.2886212734851248, -1.1445498090501196, -1.018017911659633, -0.8808413241443155,
            -0.6462088293247802, -0.2831648497756188, 0.1255299463522961, 0.44756527966553616,
            0.6195403179392814, 0.6926450212241158, 0.7578035387373074, 0.8338142247245458,
            0.8418449769680588, 0.6945239196234603, 0.40183752748327173, 0.07697563242846735,
            -0.16582630284386812, -0.3113499324982456, -0.43306221153920754, -0.5840957085180516,
            -0.709154469546521, -0.676088478938121, -0.4000291863692326, 0.061005206096760536,
        ];
        let x: Vec<f64> = (0..40)
            .map(|n| {
                let n = n as f64;
                (0.3 * n).sin() + 0.5 * (1.1 * n).cos() + 0.01 * n
            })
            .collect();
        let y = filtfilt(&bp30(), &x).unwrap();
        for (g, w) in y.iter().zip(want) {
            assert!((g - w).abs() < 1e-9, "{g} vs {w}");
        }
    }

    fn steady_amplitude(y: &[f64]) -> f64 {
        let mid = &y[y.len() / 4..3 * y.len() / 4];
        mid.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn passband_tone_keeps_amplitude() {
        let x: Vec<f64> = (0..600).map(|i| (2.0 * PI * 1.5 * i as f64 / 30.0).sin()).collect();
        let w = Waveform::new(x.clone(), 30.0).unwrap();
        let y = filter_zero_phase(&w, &bp30()).unwrap().samples().to_vec();
        assert_eq!(y.len(), x.len());
        let amp = steady_amplitude(&y);
        assert!((amp - 1.0).abs() < 0.02, "amplitude {amp}");
    }

    #[test]
    fn dc_is_removed() {
        let y = filtfilt_symmetric(&bp30(), &vec![3.5; 600]).unwrap();
        assert!(y[60..540].iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn stopband_tone_is_attenuated() {
        let x: Vec<f64> = (0..600).map(|i| (2.0 * PI * 10.0 * i as f64 / 30.0).sin()).collect();
        let y = filtfilt_symmetric(&bp30(), &x).unwrap();
        let db = 20.0 * steady_amplitude(&y).log10();
        assert!(db <= -12.0, "attenuation {db} dB");
    }

    #[test]
    fn too_short_input_is_rejected() {
        assert!(matches!(filtfilt(&bp30(), &[1.0; 12]), Err(Error::Length { .. })));
        assert!(filtfilt(&bp30(), &[1.0; 13]).is_ok());
    }

    #[test]
    fn time_reversal_commutes() {
        let x: Vec<f64> = (0..200)
            .map(|i| ((i * 7919 % 101) as f64 / 50.0 - 1.0) + (0.2 * i as f64).sin())
            .collect();
        let rx: Vec<f64> = x.iter().rev().copied().collect();
        let a = filtfilt_symmetric(&bp30(), &rx).unwrap();
        let b: Vec<f64> = filtfilt_symmetric(&bp30(), &x).unwrap().into_iter().rev().collect();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
