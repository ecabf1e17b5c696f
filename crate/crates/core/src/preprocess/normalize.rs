use crate::error::{Error, Result};

use super::frames::FrameTensor;

pub const DIFF_EPS: f64 = 1e-7;

/// Normalized frame differences, `t × h × w × 3` in f64.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffClip {
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl DiffClip {
    pub fn frame(&self, i: usize) -> &[f64] {
        let n = self.h * self.w * 3;
        &self.data[i * n..(i + 1) * n]
    }

    pub fn reversed(&self) -> DiffClip {
        let n = self.h * self.w * 3;
        let mut data = Vec::with_capacity(self.data.len());
        for i in (0..self.t).rev() {
            data.extend_from_slice(&self.data[i * n..(i + 1) * n]);
        }
        DiffClip { data, ..*self }
    }
}

/// `d[t] = f[t+1] - f[t]`, divided by the population std of all of `d`
/// plus [`DIFF_EPS`].
pub fn diff_normalize(clip: &FrameTensor) -> Result<DiffClip> {
    let t = clip.n_frames();
    if t < 2 {
        return Err(Error::Length { needed: 2, got: t });
    }
    let n = clip.frame_len();
    let src = clip.data();
    let mut data: Vec<f64> = Vec::with_capacity((t - 1) * n);
    for i in 0..t - 1 {
        let (a, b) = (&src[i * n..(i + 1) * n], &src[(i + 1) * n..(i + 2) * n]);
        data.extend(a.iter().zip(b).map(|(&x0, &x1)| x1 as f64 - x0 as f64));
    }
    let (_, sd) = pairwise_mean_std(&data);
    let denom = sd + DIFF_EPS;
    data.iter_mut().for_each(|v| *v /= denom);
    Ok(DiffClip {
        t: t - 1,
        h: clip.height(),
        w: clip.width(),
        data,
    })
}

/// Mean and population std using pairwise summation, so that permuting
/// whole frames barely changes the result.
fn pairwise_mean_std(x: &[f64]) -> (f64, f64) {
    fn psum(x: &[f64], f: &dyn Fn(f64) -> f64) -> f64 {
        if x.len() <= 64 {
            x.iter().map(|&v| f(v)).sum()
        } else {
            let (a, b) = x.split_at(x.len() / 2);
            psum(a, f) + psum(b, f)
        }
    }
    let n = x.len() as f64;
    let mean = psum(x, &|v| v) / n;
    let var = psum(x, &|v| (v - mean) * (v - mean)) / n;
    (mean, var.sqrt())
}

pub fn time_reverse(clip: &FrameTensor) -> FrameTensor {
    let mut data = Vec::with_capacity(clip.data().len());
    for i in (0..clip.n_frames()).rev() {
        data.extend_from_slice(clip.frame(i));
    }
    FrameTensor::new(clip.n_frames(), clip.height(), clip.width(), clip.fps(), data)
        .expect("reversal preserves shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn clip_from(t: usize, h: usize, w: usize, f: impl Fn(usize, usize) -> f32) -> FrameTensor {
        let n = h * w * 3;
        let data = (0..t * n).map(|i| f(i / n, i % n)).collect();
        FrameTensor::new(t, h, w, 30.0, data).unwrap()
    }

    #[test]
    fn constant_clip_is_zero() {
        let c = clip_from(10, 4, 4, |_, _| 0.5);
        let d = diff_normalize(&c).unwrap();
        assert_eq!(d.t, 9);
        assert!(d.data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sinusoid_has_unit_std() {
        let c = clip_from(60, 4, 4, |t, k| {
            0.5 + 0.45 * ((t as f32) * 1.3 + k as f32 * 0.1).sin()
        });
        let d = diff_normalize(&c).unwrap();
        let (_, sd) = pairwise_mean_std(&d.data);
        assert!((sd - 1.0).abs() < 1e-6, "{sd}");

        // Small modulation: the epsilon shows up exactly as sd / (sd + eps).
        let c = clip_from(60, 4, 4, |t, k| {
            0.5 + 0.02 * ((t as f32) * 0.4 + k as f32 * 0.1).sin()
        });
        let raw: Vec<f64> = (0..59 * 48)
            .map(|i| c.data()[i + 48] as f64 - c.data()[i] as f64)
            .collect();
        let (_, raw_sd) = pairwise_mean_std(&raw);
        let (_, sd) = pairwise_mean_std(&diff_normalize(&c).unwrap().data);
        assert!((sd - raw_sd / (raw_sd + DIFF_EPS)).abs() < 1e-12);
    }

    #[test]
    fn two_frame_reverse() {
        let c = clip_from(2, 1, 1, |t, _| t as f32 * 0.5);
        let r = time_reverse(&c);
        assert_eq!(r.frame(0), c.frame(1));
        assert_eq!(r.frame(1), c.frame(0));
        assert_eq!(time_reverse(&r), c);
    }

    #[test]
    fn single_frame_rejected() {
        let c = clip_from(1, 2, 2, |_, _| 0.1);
        assert!(matches!(diff_normalize(&c), Err(Error::Length { .. })));
    }

    proptest! {
        #[test]
        fn reverse_negates(seed in 0u64..1000, t in 2usize..12) {
            let c = clip_from(t, 3, 2, |ti, k| {
                let h = (seed.wrapping_mul(6364136223846793005).wrapping_add((ti * 97 + k) as u64)) >> 40;
                (h % 1000) as f32 / 1000.0
            });
            let a = diff_normalize(&time_reverse(&c)).unwrap();
            let b = diff_normalize(&c).unwrap().reversed();
            for (x, y) in a.data.iter().zip(&b.data) {
                prop_assert!((x + y).abs() < 1e-9);
            }
        }

        #[test]
        fn gain_and_offset_invariant(gain in 0.2f32..1.0, off in 0.0f32..0.3, t in 3usize..10) {
            let base = |ti: usize, k: usize| 0.3 + 0.2 * ((ti * 7 + k * 3) % 11) as f32 / 11.0;
            let c = clip_from(t, 2, 2, base);
            let c2 = clip_from(t, 2, 2, |ti, k| base(ti, k) * gain + off);
            let a = diff_normalize(&c).unwrap();
            let b = diff_normalize(&c2).unwrap();
            for (x, y) in a.data.iter().zip(&b.data) {
                prop_assert!((x - y).abs() < 1e-4, "{x} {y}");
            }
        }
    }
}
