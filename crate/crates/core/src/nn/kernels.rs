//! Numeric kernels behind the graph ops. Layouts are row-major
//! `[N, C, T, H, W]` for volumes and `[Co, Ci, kt, kh, kw]` for filters.

/// `c = alpha·op(a)·op(b) + beta·c` where `op` is selected by strides.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(c.len() >= m * n);
    // SAFETY: the strides describe in-bounds views of `a` (m×k), `b` (k×n)
    // and the row-major `c` (m×n); callers size the buffers accordingly.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub c: usize,
    pub t: usize,
    pub h: usize,
    pub w: usize,
}

impl Dims {
    pub fn volume(&self) -> usize {
        self.t * self.h * self.w
    }
    pub fn len(&self) -> usize {
        self.c * self.volume()
    }
}

/// Unfolds one sample into `[ci·kt·kh·kw, t·h·w]` with zero "same" padding.
pub fn im2col(x: &[f64], d: Dims, k: [usize; 3], cols: &mut [f64]) {
    let [kt, kh, kw] = k;
    let (pt, ph, pw) = ((kt / 2) as isize, (kh / 2) as isize, (kw / 2) as isize);
    let p = d.volume();
    let mut row = 0;
    for ci in 0..d.c {
        let xc = &x[ci * p..(ci + 1) * p];
        for dt in 0..kt {
            for dh in 0..kh {
                for dw in 0..kw {
                    let out = &mut cols[row * p..(row + 1) * p];
                    let ow = dw as isize - pw;
                    for t in 0..d.t {
                        let st = t as isize + dt as isize - pt;
                        for h in 0..d.h {
                            let sh = h as isize + dh as isize - ph;
                            let o = &mut out[(t * d.h + h) * d.w..(t * d.h + h + 1) * d.w];
                            if st < 0 || st >= d.t as isize || sh < 0 || sh >= d.h as isize {
                                o.fill(0.0);
                                continue;
                            }
                            let src = &xc[(st as usize * d.h + sh as usize) * d.w..][..d.w];
                            let lo = (-ow).max(0) as usize;
                            let hi = (d.w as isize - ow).min(d.w as isize).max(0) as usize;
                            o[..lo.min(d.w)].fill(0.0);
                            if lo < hi {
                                let s0 = (lo as isize + ow) as usize;
                                o[lo..hi].copy_from_slice(&src[s0..s0 + (hi - lo)]);
                            }
                            o[hi.max(lo).min(d.w)..].fill(0.0);
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: accumulates columns back into `dx`.
pub fn col2im(cols: &[f64], d: Dims, k: [usize; 3], dx: &mut [f64]) {
    let [kt, kh, kw] = k;
    let (pt, ph, pw) = ((kt / 2) as isize, (kh / 2) as isize, (kw / 2) as isize);
    let p = d.volume();
    let mut row = 0;
    for ci in 0..d.c {
        let xc = &mut dx[ci * p..(ci + 1) * p];
        for dt in 0..kt {
            for dh in 0..kh {
                for dw in 0..kw {
                    let src = &cols[row * p..(row + 1) * p];
                    let ow = dw as isize - pw;
                    for t in 0..d.t {
                        let st = t as isize + dt as isize - pt;
                        if st < 0 || st >= d.t as isize {
                            continue;
                        }
                        for h in 0..d.h {
                            let sh = h as isize + dh as isize - ph;
                            if sh < 0 || sh >= d.h as isize {
                                continue;
                            }
                            let s = &src[(t * d.h + h) * d.w..][..d.w];
                            let dst = &mut xc[(st as usize * d.h + sh as usize) * d.w..][..d.w];
                            let lo = (-ow).max(0) as usize;
                            let hi = (d.w as isize - ow).min(d.w as isize).max(0) as usize;
                            for wi in lo..hi {
                                dst[(wi as isize + ow) as usize] += s[wi];
                            }
                        }
                    }
                    row += 1;
                }
            }
        }
    }
}

/// Forward "same" convolution over a batch.
pub fn conv3d_forward(x: &[f64], n: usize, d: Dims, w: &[f64], b: &[f64], co: usize, k: [usize; 3]) -> Vec<f64> {
    let kk = d.c * k.iter().product::<usize>();
    let p = d.volume();
    let mut out = vec![0.0; n * co * p];
    let mut cols = vec![0.0; kk * p];
    for s in 0..n {
        let xs = &x[s * d.len()..(s + 1) * d.len()];
        let os = &mut out[s * co * p..(s + 1) * co * p];
        for (c, ob) in os.chunks_exact_mut(p).zip(b) {
            c.fill(*ob);
        }
        if k == [1, 1, 1] {
            gemm(co, kk, p, w, kk as isize, 1, xs, p as isize, 1, 1.0, os);
        } else {
            im2col(xs, d, k, &mut cols);
            gemm(co, kk, p, w, kk as isize, 1, &cols, p as isize, 1, 1.0, os);
        }
    }
    out
}

/// Gradients of [`conv3d_forward`]. `dx` is only computed when requested.
#[allow(clippy::too_many_arguments)]
pub fn conv3d_backward(
    x: &[f64],
    n: usize,
    d: Dims,
    w: &[f64],
    co: usize,
    k: [usize; 3],
    dout: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    mut dx: Option<&mut [f64]>,
) {
    let kk = d.c * k.iter().product::<usize>();
    let p = d.volume();
    let pointwise = k == [1, 1, 1];
    let mut cols = if pointwise { Vec::new() } else { vec![0.0; kk * p] };
    let mut dcols = vec![0.0; kk * p];
    for s in 0..n {
        let xs = &x[s * d.len()..(s + 1) * d.len()];
        let ds = &dout[s * co * p..(s + 1) * co * p];
        for (g, row) in db.iter_mut().zip(ds.chunks_exact(p)) {
            *g += row.iter().sum::<f64>();
        }
        let c: &[f64] = if pointwise {
            xs
        } else {
            im2col(xs, d, k, &mut cols);
            &cols
        };
        // dW[co, kk] += dout[co, p] · cols[kk, p]^T
        gemm(co, p, kk, ds, p as isize, 1, c, 1, p as isize, 1.0, dw);
        if let Some(dx) = dx.as_deref_mut() {
            let dxs = &mut dx[s * d.len()..(s + 1) * d.len()];
            // dcols[kk, p] = W[co, kk]^T · dout[co, p]
            if pointwise {
                gemm(kk, co, p, w, 1, kk as isize, ds, p as isize, 1, 1.0, dxs);
            } else {
                gemm(kk, co, p, w, 1, kk as isize, ds, p as isize, 1, 0.0, &mut dcols);
                col2im(&dcols, d, k, dxs);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct seven-loop convolution.
    fn naive(x: &[f64], d: Dims, w: &[f64], b: &[f64], co: usize, k: [usize; 3]) -> Vec<f64> {
        let [kt, kh, kw] = k;
        let mut out = vec![0.0; co * d.volume()];
        for o in 0..co {
            for t in 0..d.t {
                for h in 0..d.h {
                    for ww in 0..d.w {
                        let mut acc = b[o];
                        for ci in 0..d.c {
                            for a in 0..kt {
                                for bb in 0..kh {
                                    for cc in 0..kw {
                                        let st = t as isize + a as isize - (kt / 2) as isize;
                                        let sh = h as isize + bb as isize - (kh / 2) as isize;
                                        let sw = ww as isize + cc as isize - (kw / 2) as isize;
                                        if st < 0 || sh < 0 || sw < 0 || st >= d.t as isize || sh >= d.h as isize || sw >= d.w as isize {
                                            continue;
                                        }
                                        let xi = ((ci * d.t + st as usize) * d.h + sh as usize) * d.w + sw as usize;
                                        let wi = (((o * d.c + ci) * kt + a) * kh + bb) * kw + cc;
                                        acc += x[xi] * w[wi];
                                    }
                                }
                            }
                        }
                        out[((o * d.t + t) * d.h + h) * d.w + ww] = acc;
                    }
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_convolution() {
        let d = Dims { c: 2, t: 4, h: 3, w: 5 };
        let x: Vec<f64> = (0..d.len()).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
        for k in [[3, 3, 3], [1, 1, 1], [3, 1, 1], [1, 3, 3]] {
            let co = 3;
            let kn = co * d.c * k.iter().product::<usize>();
            let w: Vec<f64> = (0..kn).map(|i| ((i * 13 % 17) as f64 - 8.0) / 9.0).collect();
            let b = [0.1, -0.2, 0.3];
            let fast = conv3d_forward(&x, 1, d, &w, &b, co, k);
            let slow = naive(&x, d, &w, &b, co, k);
            for (a, s) in fast.iter().zip(&slow) {
                assert!((a - s).abs() < 1e-12, "{k:?}");
            }
        }
    }

    #[test]
    fn col2im_is_adjoint() {
        // <im2col(x), c> = <x, col2im(c)>
        let d = Dims { c: 2, t: 3, h: 4, w: 3 };
        let k = [3, 3, 3];
        let kk = d.c * 27;
        let x: Vec<f64> = (0..d.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let c: Vec<f64> = (0..kk * d.volume()).map(|i| (i as f64 * 0.11).cos()).collect();
        let mut cols = vec![0.0; kk * d.volume()];
        im2col(&x, d, k, &mut cols);
        let mut back = vec![0.0; d.len()];
        col2im(&c, d, k, &mut back);
        let lhs: f64 = cols.iter().zip(&c).map(|(a, b)| a * b).sum();
        let rhs: f64 = x.iter().zip(&back).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-9);
    }
}
