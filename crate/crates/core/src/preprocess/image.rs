//! Geometric image operations used by face alignment.

use serde::{Deserialize, Serialize};

use super::frames::Image;

/// Axis-aligned box in pixel coordinates, half-open: `[x0, x1) × [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl BBox {
    pub fn width(&self) -> usize {
        self.x1.saturating_sub(self.x0)
    }
    pub fn height(&self) -> usize {
        self.y1.saturating_sub(self.y0)
    }
    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn clamp_to(&self, h: usize, w: usize) -> BBox {
        BBox {
            x0: self.x0.min(w),
            y0: self.y0.min(h),
            x1: self.x1.min(w),
            y1: self.y1.min(h),
        }
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let ix = self.x1.min(other.x1).saturating_sub(self.x0.max(other.x0));
        let iy = self.y1.min(other.y1).saturating_sub(self.y0.max(other.y0));
        let inter = (ix * iy) as f64;
        let union = (self.area() + other.area()) as f64 - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }

    /// Largest per-edge displacement between two boxes.
    pub fn max_edge_diff(&self, other: &BBox) -> usize {
        [
            self.x0.abs_diff(other.x0),
            self.y0.abs_diff(other.y0),
            self.x1.abs_diff(other.x1),
            self.y1.abs_diff(other.y1),
        ]
        .into_iter()
        .max()
        .unwrap_or(0)
    }
}

/// Rotates counter-clockwise by `quarter_turns × 90°`.
pub fn rotate_ccw(img: &Image, quarter_turns: usize) -> Image {
    match quarter_turns % 4 {
        0 => img.clone(),
        1 => {
            // out[y'][x'] = in[x'][w-1-y'], output is w × h.
            let mut out = Image::filled(img.w, img.h, [0.0; 3]);
            for y in 0..out.h {
                for x in 0..out.w {
                    out.set_px(y, x, img.px(x, img.w - 1 - y));
                }
            }
            out
        }
        2 => {
            let mut out = Image::filled(img.h, img.w, [0.0; 3]);
            for y in 0..img.h {
                for x in 0..img.w {
                    out.set_px(y, x, img.px(img.h - 1 - y, img.w - 1 - x));
                }
            }
            out
        }
        _ => {
            // out[y'][x'] = in[h-1-x'][y'].
            let mut out = Image::filled(img.w, img.h, [0.0; 3]);
            for y in 0..out.h {
                for x in 0..out.w {
                    out.set_px(y, x, img.px(img.h - 1 - x, y));
                }
            }
            out
        }
    }
}

pub fn rotate_cw(img: &Image, quarter_turns: usize) -> Image {
    rotate_ccw(img, (4 - quarter_turns % 4) % 4)
}

/// Crops `bbox` (clamped to the image) and resizes bilinearly to
/// `out_h × out_w` using pixel-centre alignment.
pub fn crop_resize(img: &Image, bbox: &BBox, out_h: usize, out_w: usize) -> Image {
    let b = bbox.clamp_to(img.h, img.w);
    let (bh, bw) = (b.height().max(1), b.width().max(1));
    let (y0, x0) = (b.y0.min(img.h - 1), b.x0.min(img.w - 1));
    let sy = bh as f64 / out_h as f64;
    let sx = bw as f64 / out_w as f64;
    let mut out = Image::filled(out_h, out_w, [0.0; 3]);
    for oy in 0..out_h {
        let fy = ((oy as f64 + 0.5) * sy - 0.5).clamp(0.0, (bh - 1) as f64);
        let iy0 = fy.floor() as usize;
        let iy1 = (iy0 + 1).min(bh - 1);
        let ty = (fy - iy0 as f64) as f32;
        for ox in 0..out_w {
            let fx = ((ox as f64 + 0.5) * sx - 0.5).clamp(0.0, (bw - 1) as f64);
            let ix0 = fx.floor() as usize;
            let ix1 = (ix0 + 1).min(bw - 1);
            let tx = (fx - ix0 as f64) as f32;
            let p00 = img.px((y0 + iy0).min(img.h - 1), (x0 + ix0).min(img.w - 1));
            let p01 = img.px((y0 + iy0).min(img.h - 1), (x0 + ix1).min(img.w - 1));
            let p10 = img.px((y0 + iy1).min(img.h - 1), (x0 + ix0).min(img.w - 1));
            let p11 = img.px((y0 + iy1).min(img.h - 1), (x0 + ix1).min(img.w - 1));
            let mut px = [0.0f32; 3];
            for c in 0..3 {
                let top = p00[c] + tx * (p01[c] - p00[c]);
                let bot = p10[c] + tx * (p11[c] - p10[c]);
                px[c] = top + ty * (bot - top);
            }
            out.set_px(oy, ox, px);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numbered(h: usize, w: usize) -> Image {
        let data = (0..h * w * 3).map(|i| i as f32 / (h * w * 3) as f32).collect();
        Image::new(h, w, data).unwrap()
    }

    #[test]
    fn rotations_compose() {
        let img = numbered(4, 6);
        assert_eq!(rotate_cw(&rotate_ccw(&img, 1), 1), img);
        assert_eq!(rotate_ccw(&rotate_ccw(&img, 1), 3), img);
        assert_eq!(rotate_ccw(&rotate_ccw(&img, 2), 2), img);
        let r = rotate_ccw(&img, 1);
        assert_eq!((r.h, r.w), (6, 4));
        // Top-right corner moves to top-left under a counter-clockwise turn.
        assert_eq!(r.px(0, 0), img.px(0, 5));
    }

    #[test]
    fn iou_basics() {
        let a = BBox { x0: 0, y0: 0, x1: 10, y1: 10 };
        let b = BBox { x0: 5, y0: 0, x1: 15, y1: 10 };
        assert_eq!(a.iou(&a), 1.0);
        assert!((a.iou(&b) - 50.0 / 150.0).abs() < 1e-12);
        assert_eq!(a.max_edge_diff(&b), 5);
    }

    #[test]
    fn crop_identity_when_same_size() {
        let img = numbered(8, 8);
        let full = BBox { x0: 0, y0: 0, x1: 8, y1: 8 };
        assert_eq!(crop_resize(&img, &full, 8, 8), img);
    }

    #[test]
    fn crop_of_constant_region_is_constant() {
        let img = Image::filled(20, 30, [0.2, 0.4, 0.6]);
        let out = crop_resize(&img, &BBox { x0: 3, y0: 2, x1: 40, y1: 19 }, 7, 5);
        assert!(out.data.chunks(3).all(|p| (p[0] - 0.2).abs() < 1e-6 && (p[2] - 0.6).abs() < 1e-6));
    }
}
