//! Butterworth band-pass design: analog low-pass prototype, frequency
//! pre-warping, low-pass to band-pass transform and bilinear mapping.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Band edges and prototype order of a Butterworth band-pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandpassSpec {
    pub low_cut_hz: f64,
    pub high_cut_hz: f64,
    pub order: usize,
}

impl Default for BandpassSpec {
    fn default() -> Self {
        Self {
            low_cut_hz: 0.4,
            high_cut_hz: 4.0,
            order: 2,
        }
    }
}

impl BandpassSpec {
    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        let nyq = sample_rate_hz / 2.0;
        if self.order == 0 {
            return Err(Error::InvalidArgument("filter order must be positive".into()));
        }
        if !(self.low_cut_hz > 0.0 && self.low_cut_hz < self.high_cut_hz && self.high_cut_hz < nyq)
        {
            return Err(Error::Range(format!(
                "need 0 < low ({}) < high ({}) < nyquist ({nyq})",
                self.low_cut_hz, self.high_cut_hz
            )));
        }
        Ok(())
    }
}

/// Transfer function `B(z)/A(z)` in descending powers of z, `a[0] == 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCoeffs {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
}

impl FilterCoeffs {
    /// Number of poles.
    pub fn order(&self) -> usize {
        self.a.len().max(self.b.len()) - 1
    }

    /// Complex frequency response at `freq_hz`.
    pub fn response(&self, freq_hz: f64, sample_rate_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / sample_rate_hz;
        let zinv = Complex64::from_polar(1.0, -w);
        // Horner in z^-1.
        let eval = |c: &[f64]| {
            c.iter()
                .rev()
                .fold(Complex64::new(0.0, 0.0), |acc, &v| acc * zinv + v)
        };
        let num = eval(&self.b);
        let den = eval(&self.a);
        num / den
    }

    pub fn magnitude(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        self.response(freq_hz, sample_rate_hz).norm()
    }
}

/// Designs the digital Butterworth band-pass for `spec` at `sample_rate_hz`.
/// The result has `2 * spec.order` poles.
pub fn design_bandpass(spec: &BandpassSpec, sample_rate_hz: f64) -> Result<FilterCoeffs> {
    spec.validate(sample_rate_hz)?;
    let n = spec.order;
    let fs2 = 2.0 * sample_rate_hz;
    let warp = |f: f64| fs2 * (PI * f / sample_rate_hz).tan();
    let (w1, w2) = (warp(spec.low_cut_hz), warp(spec.high_cut_hz));
    let bw = w2 - w1;
    let w0 = (w1 * w2).sqrt();

    // Analog prototype poles on the left half of the unit circle.
    let proto: Vec<Complex64> = (0..n)
        .map(|k| {
            let m = (2 * k + 1) as f64 - n as f64;
            -Complex64::from_polar(1.0, PI * m / (2 * n) as f64)
        })
        .collect();

    let mut poles = Vec::with_capacity(2 * n);
    for p in &proto {
        let half = p * (bw / 2.0);
        let disc = (half * half - w0 * w0).sqrt();
        poles.push(half + disc);
        poles.push(half - disc);
    }
    // n zeros at s = 0, the remaining n at infinity.
    let zeros = vec![Complex64::new(0.0, 0.0); n];
    let gain = bw.powi(n as i32);

    let bil = |s: &Complex64| (fs2 + s) / (fs2 - s);
    let mut zd: Vec<Complex64> = zeros.iter().map(bil).collect();
    let pd: Vec<Complex64> = poles.iter().map(bil).collect();
    zd.extend(std::iter::repeat_n(Complex64::new(-1.0, 0.0), poles.len() - zeros.len()));
    let num: Complex64 = zeros.iter().map(|z| fs2 - z).product();
    let den: Complex64 = poles.iter().map(|p| fs2 - p).product();
    let kd = gain * (num / den).re;

    let b = poly(&zd).into_iter().map(|c| c * kd).collect();
    let a = poly(&pd);
    Ok(FilterCoeffs { b, a })
}

/// Monic polynomial with the given roots; real parts of the coefficients.
fn poly(roots: &[Complex64]) -> Vec<f64> {
    let mut c = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i] += v;
            next[i + 1] -= v * r;
        }
        c = next;
    }
    c.into_iter().map(|v| v.re).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Coefficients from an established DSP library's Butterworth designer.
    const REF_B_30: [f64; 5] = [
        0.09131490043583196,
        0.0,
        -0.18262980087166392,
        0.0,
        0.09131490043583196,
    ];
    const REF_A_30: [f64; 5] = [
        1.0,
        -2.8731377736889896,
        3.144868492818123,
        -1.6162684372177896,
        0.3476653948517232,
    ];

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn matches_reference_design() {
        let c = design_bandpass(&BandpassSpec::default(), 30.0).unwrap();
        assert_close(&c.b, &REF_B_30, 1e-9);
        assert_close(&c.a, &REF_A_30, 1e-9);

        let c = design_bandpass(&BandpassSpec::default(), 60.0).unwrap();
        assert_close(
            &c.b,
            &[0.027859766117136017, 0.0, -0.055719532234272034, 0.0, 0.027859766117136017],
            1e-9,
        );
        assert_close(
            &c.a,
            &[1.0, -3.4446689954694634, 4.4838224175775885, -2.6258322410643675, 0.58691950806119],
            1e-9,
        );

        let spec = BandpassSpec { low_cut_hz: 0.7, high_cut_hz: 3.0, order: 3 };
        let c = design_bandpass(&spec, 30.0).unwrap();
        assert_close(
            &c.b,
            &[
                0.009109513841753934, 0.0, -0.0273285415252618, 0.0, 0.0273285415252618, 0.0,
                -0.009109513841753934,
            ],
            1e-9,
        );
        assert_close(
            &c.a,
            &[
                1.0, -4.809547082890498, 9.84778483709453, -11.011829868945608, 7.102549006081874,
                -2.5062702088808653, 0.3778112693226089,
            ],
            1e-9,
        );
    }

    #[test]
    fn unit_gain_at_geometric_center() {
        let c = design_bandpass(&BandpassSpec::default(), 30.0).unwrap();
        let center = (0.4f64 * 4.0).sqrt();
        assert!((c.magnitude(center, 30.0) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn half_power_at_cutoffs() {
        let c = design_bandpass(&BandpassSpec::default(), 30.0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((c.magnitude(0.4, 30.0) - h).abs() < 1e-9);
        assert!((c.magnitude(4.0, 30.0) - h).abs() < 1e-9);
    }

    #[test]
    fn rejects_inverted_band() {
        let spec = BandpassSpec { low_cut_hz: 4.0, high_cut_hz: 0.4, order: 2 };
        assert!(matches!(design_bandpass(&spec, 30.0), Err(Error::Range(_))));
        let spec = BandpassSpec { low_cut_hz: 0.4, high_cut_hz: 15.0, order: 2 };
        assert!(matches!(design_bandpass(&spec, 30.0), Err(Error::Range(_))));
    }

    /// Schur-Cohn step-down: stable iff every reflection coefficient has
    /// magnitude below one. Independent of the pole placement above.
    fn schur_cohn_stable(a: &[f64]) -> bool {
        let mut p: Vec<f64> = a.iter().map(|v| v / a[0]).collect();
        while p.len() > 1 {
            let m = p.len() - 1;
            let k = p[m];
            if k.abs() >= 1.0 {
                return false;
            }
            let d = 1.0 - k * k;
            p = (0..m).map(|i| (p[i] - k * p[m - i]) / d).collect();
        }
        true
    }

    proptest! {
        #[test]
        fn every_valid_design_is_stable(
            fs in 10.0f64..250.0,
            lo_frac in 0.005f64..0.4,
            width in 0.05f64..0.9,
            order in 1usize..5,
        ) {
            let nyq = fs / 2.0;
            let lo = lo_frac * nyq;
            let hi = lo + width * (nyq - lo) * 0.98;
            prop_assume!(hi > lo && hi < nyq);
            let c = design_bandpass(&BandpassSpec { low_cut_hz: lo, high_cut_hz: hi, order }, fs).unwrap();
            prop_assert_eq!(c.a[0], 1.0);
            prop_assert!(schur_cohn_stable(&c.a), "unstable: {:?}", c.a);
        }
    }
}
