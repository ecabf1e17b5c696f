use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single RGB image, row-major `h × w × 3`, values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub h: usize,
    pub w: usize,
    pub data: Vec<f32>,
}

impl Image {
    pub fn new(h: usize, w: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != h * w * 3 {
            return Err(Error::Shape {
                op: "image",
                lhs: vec![h, w, 3],
                rhs: vec![data.len()],
            });
        }
        Ok(Self { h, w, data })
    }

    pub fn filled(h: usize, w: usize, rgb: [f32; 3]) -> Self {
        let data = std::iter::repeat_n(rgb, h * w).flatten().collect();
        Self { h, w, data }
    }

    #[inline]
    pub fn px(&self, y: usize, x: usize) -> [f32; 3] {
        let i = (y * self.w + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_px(&mut self, y: usize, x: usize, rgb: [f32; 3]) {
        let i = (y * self.w + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

/// A video clip: `t × h × w × 3` values in `[0, 1]` plus its frame rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameTensor {
    t: usize,
    h: usize,
    w: usize,
    fps: f64,
    data: Vec<f32>,
}

impl FrameTensor {
    pub fn new(t: usize, h: usize, w: usize, fps: f64, data: Vec<f32>) -> Result<Self> {
        if data.len() != t * h * w * 3 {
            return Err(Error::Shape {
                op: "frame tensor",
                lhs: vec![t, h, w, 3],
                rhs: vec![data.len()],
            });
        }
        if t == 0 {
            return Err(Error::Empty("clip has no frames".into()));
        }
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::InvalidArgument(format!("fps must be positive, got {fps}")));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite pixel value".into()));
        }
        Ok(Self { t, h, w, fps, data })
    }

    pub fn from_images(images: &[Image], fps: f64) -> Result<Self> {
        let first = images
            .first()
            .ok_or_else(|| Error::Empty("no frames".into()))?;
        let (h, w) = (first.h, first.w);
        let mut data = Vec::with_capacity(images.len() * h * w * 3);
        for im in images {
            if im.h != h || im.w != w {
                return Err(Error::Shape {
                    op: "stack frames",
                    lhs: vec![h, w],
                    rhs: vec![im.h, im.w],
                });
            }
            data.extend_from_slice(&im.data);
        }
        Self::new(images.len(), h, w, fps, data)
    }

    pub fn n_frames(&self) -> usize {
        self.t
    }
    pub fn height(&self) -> usize {
        self.h
    }
    pub fn width(&self) -> usize {
        self.w
    }
    pub fn fps(&self) -> f64 {
        self.fps
    }
    pub fn data(&self) -> &[f32] {
        &self.data
    }
    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn frame_len(&self) -> usize {
        self.h * self.w * 3
    }

    pub fn frame(&self, i: usize) -> &[f32] {
        let n = self.frame_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn image(&self, i: usize) -> Image {
        Image {
            h: self.h,
            w: self.w,
            data: self.frame(i).to_vec(),
        }
    }

    /// Frames `range` as a new clip.
    pub fn sub_clip(&self, range: std::ops::Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.t {
            return Err(Error::InvalidArgument(format!(
                "frame range {range:?} outside clip of {} frames",
                self.t
            )));
        }
        let n = self.frame_len();
        Self::new(
            range.len(),
            self.h,
            self.w,
            self.fps,
            self.data[range.start * n..range.end * n].to_vec(),
        )
    }

    /// Per-frame spatial mean of each channel.
    pub fn mean_rgb(&self) -> Vec<[f64; 3]> {
        let px = (self.h * self.w) as f64;
        (0..self.t)
            .map(|i| {
                let mut acc = [0.0f64; 3];
                for p in self.frame(i).chunks_exact(3) {
                    acc[0] += p[0] as f64;
                    acc[1] += p[1] as f64;
                    acc[2] += p[2] as f64;
                }
                acc.map(|v| v / px)
            })
            .collect()
    }
}
