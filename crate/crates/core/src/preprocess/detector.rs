//! Face detection interface and a builtin detector for marker-bearing
//! synthetic faces.

use super::frames::Image;
use super::image::BBox;

pub trait FaceDetector: Send + Sync {
    /// Returns a box inside the frame bounds, or `None` if no face is found.
    fn detect(&self, frame: &Image) -> Option<BBox>;
}

/// Finds the skin-coloured blob and accepts it only when the dark
/// forehead bar sits in its top band.
#[derive(Debug, Clone)]
pub struct MarkerDetector {
    /// Minimum blob area as a fraction of the frame.
    pub min_area_frac: f64,
    /// Minimum skin pixels for a row or column to count as part of the blob.
    pub min_line_px: usize,
    pub dark_luma: f32,
    /// Dark fraction the top band must exceed.
    pub marker_min_frac: f64,
    /// Dark fraction the other three bands must stay below.
    pub other_max_frac: f64,
}

impl Default for MarkerDetector {
    fn default() -> Self {
        Self {
            min_area_frac: 0.04,
            min_line_px: 2,
            dark_luma: 0.22,
            marker_min_frac: 0.25,
            other_max_frac: 0.10,
        }
    }
}

/// Colour rule for the skin tones used by the synthetic renderer.
#[inline]
pub fn is_skin(p: [f32; 3]) -> bool {
    let [r, g, b] = p;
    r > 0.3 && r > g && g > b && r - b > 0.12
}

#[inline]
fn luma(p: [f32; 3]) -> f32 {
    0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]
}

impl MarkerDetector {
    fn skin_bbox(&self, img: &Image) -> Option<BBox> {
        let mut rows = vec![0usize; img.h];
        let mut cols = vec![0usize; img.w];
        for y in 0..img.h {
            for x in 0..img.w {
                if is_skin(img.px(y, x)) {
                    rows[y] += 1;
                    cols[x] += 1;
                }
            }
        }
        let span = |v: &[usize]| {
            let first = v.iter().position(|&c| c >= self.min_line_px)?;
            let last = v.iter().rposition(|&c| c >= self.min_line_px)?;
            Some((first, last + 1))
        };
        let (y0, y1) = span(&rows)?;
        let (x0, x1) = span(&cols)?;
        let b = BBox { x0, y0, x1, y1 };
        let min_area = self.min_area_frac * (img.h * img.w) as f64;
        (b.area() as f64 >= min_area && b.width() >= 4 && b.height() >= 4).then_some(b)
    }

    fn dark_frac(&self, img: &Image, ys: (usize, usize), xs: (usize, usize)) -> f64 {
        let mut dark = 0usize;
        let mut n = 0usize;
        for y in ys.0..ys.1 {
            for x in xs.0..xs.1 {
                n += 1;
                if luma(img.px(y, x)) < self.dark_luma {
                    dark += 1;
                }
            }
        }
        if n == 0 {
            0.0
        } else {
            dark as f64 / n as f64
        }
    }
}

impl FaceDetector for MarkerDetector {
    fn detect(&self, img: &Image) -> Option<BBox> {
        let b = self.skin_bbox(img)?;
        let (h, w) = (b.height() as f64, b.width() as f64);
        let at = |o: usize, len: f64, f: f64| o + (len * f).round() as usize;
        // Bands along each edge, covering the middle 40% of that edge.
        let top = self.dark_frac(
            img,
            (at(b.y0, h, 0.08), at(b.y0, h, 0.30)),
            (at(b.x0, w, 0.30), at(b.x0, w, 0.70)),
        );
        let bottom = self.dark_frac(
            img,
            (at(b.y0, h, 0.70), at(b.y0, h, 0.92)),
            (at(b.x0, w, 0.30), at(b.x0, w, 0.70)),
        );
        let left = self.dark_frac(
            img,
            (at(b.y0, h, 0.30), at(b.y0, h, 0.70)),
            (at(b.x0, w, 0.08), at(b.x0, w, 0.30)),
        );
        let right = self.dark_frac(
            img,
            (at(b.y0, h, 0.30), at(b.y0, h, 0.70)),
            (at(b.x0, w, 0.70), at(b.x0, w, 0.92)),
        );
        let ok = top >= self.marker_min_frac
            && bottom < self.other_max_frac
            && left < self.other_max_frac
            && right < self.other_max_frac;
        ok.then_some(b)
    }
}
