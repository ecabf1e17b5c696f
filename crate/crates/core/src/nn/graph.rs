//! Tape-based reverse-mode differentiation over a fixed op set.

use super::kernels::{self, Dims};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Stabilizer added to the denominators of both losses.
pub const LOSS_EPS: f64 = 1e-8;

/// Handle to a node of a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Reduction applied by [`Graph::global_pool`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pool {
    /// `[N, C, T, H, W] -> [N, C, T]`
    Spatial,
    /// `[N, C, T, H, W] -> [N, C]`
    SpatioTemporal,
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    Conv3d { x: Var, w: Var, b: Var, k: [usize; 3] },
    Relu(Var),
    AvgPool { x: Var, f: [usize; 3] },
    Upsample { x: Var, factor: usize },
    Dense { x: Var, w: Var, b: Var },
    GlobalPool { x: Var, pool: Pool },
    Concat { a: Var, b: Var },
    Reshape(Var),
    Pearson { pred: Var, gt: Var },
    WeightedRmse { pred: Var, gt: Var, w: Vec<f64> },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    grad: Option<Vec<f64>>,
    op: Op,
    needs_grad: bool,
}

/// Computation graph built eagerly: every op evaluates its forward pass on
/// construction and records what the backward pass needs.
#[derive(Debug, Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

fn dims5(op: &'static str, t: &Tensor) -> Result<(usize, Dims)> {
    match *t.shape() {
        [n, c, tt, h, w] => Ok((n, Dims { c, t: tt, h, w })),
        _ => Err(Error::Shape {
            op,
            lhs: t.shape().to_vec(),
            rhs: vec![0; 5],
        }),
    }
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::Shape {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, n: usize) -> &mut Vec<f64> {
    slot.get_or_insert_with(|| vec![0.0; n])
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a leaf. Gradients are only accumulated for leaves created with
    /// `requires_grad` and for nodes that depend on one.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn input(&mut self, value: Tensor) -> Var {
        self.leaf(value, false)
    }

    pub fn param(&mut self, value: Tensor) -> Var {
        self.leaf(value, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Accumulated gradient, if any flowed into `v`.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].grad.as_deref()
    }

    pub fn requires_grad(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn push(&mut self, value: Tensor, op: Op, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn record(&mut self, name: &str, value: Tensor, op: Op, inputs: &[Var]) -> Result<Var> {
        if !value.all_finite() {
            return Err(Error::Numerical(format!("{name} produced a non-finite value")));
        }
        let needs = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        Ok(self.push(value, op, needs))
    }

    /// "Same"-padded, stride-1 3D convolution. `w` is `[Co, Ci, kt, kh, kw]`
    /// with odd kernel extents, `b` is `[Co]`.
    pub fn conv3d(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        let (n, d) = dims5("conv3d", xv)?;
        let [co, ci, kt, kh, kw] = *wv.shape() else {
            return Err(shape_err("conv3d", xv, wv));
        };
        if ci != d.c || [kt, kh, kw].iter().any(|k| k % 2 == 0) {
            return Err(shape_err("conv3d", xv, wv));
        }
        if bv.shape() != [co] {
            return Err(shape_err("conv3d", wv, bv));
        }
        let k = [kt, kh, kw];
        let out = kernels::conv3d_forward(xv.data(), n, d, wv.data(), bv.data(), co, k);
        let value = Tensor::new(vec![n, co, d.t, d.h, d.w], out)?;
        self.record("conv3d", value, Op::Conv3d { x, w, b, k }, &[x, w, b])
    }

    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let xv = self.value(x);
        let out = xv.data().iter().map(|v| v.max(0.0)).collect();
        let value = Tensor::new(xv.shape().to_vec(), out)?;
        self.record("relu", value, Op::Relu(x), &[x])
    }

    /// Non-overlapping average pooling with window `f` over `(T, H, W)`.
    pub fn avgpool3d(&mut self, x: Var, f: [usize; 3]) -> Result<Var> {
        let xv = self.value(x);
        let (n, d) = dims5("avgpool3d", xv)?;
        let [ft, fh, fw] = f;
        if f.contains(&0) || d.t % ft != 0 || d.h % fh != 0 || d.w % fw != 0 {
            return Err(Error::Shape {
                op: "avgpool3d",
                lhs: xv.shape().to_vec(),
                rhs: f.to_vec(),
            });
        }
        let o = Dims {
            c: d.c,
            t: d.t / ft,
            h: d.h / fh,
            w: d.w / fw,
        };
        let scale = 1.0 / (ft * fh * fw) as f64;
        let src = xv.data();
        let mut out = vec![0.0; n * o.len()];
        for nc in 0..n * d.c {
            let s = &src[nc * d.volume()..][..d.volume()];
            let dst = &mut out[nc * o.volume()..][..o.volume()];
            for t in 0..d.t {
                for h in 0..d.h {
                    let row = &s[(t * d.h + h) * d.w..][..d.w];
                    let orow = &mut dst[((t / ft) * o.h + h / fh) * o.w..][..o.w];
                    for (wi, v) in row.iter().enumerate() {
                        orow[wi / fw] += v * scale;
                    }
                }
            }
        }
        let value = Tensor::new(vec![n, o.c, o.t, o.h, o.w], out)?;
        self.record("avgpool3d", value, Op::AvgPool { x, f }, &[x])
    }

    /// Nearest-neighbour upsampling along the temporal axis.
    pub fn upsample_temporal(&mut self, x: Var, factor: usize) -> Result<Var> {
        let xv = self.value(x);
        let (n, d) = dims5("upsample_temporal", xv)?;
        if factor == 0 {
            return Err(Error::InvalidArgument("upsample factor must be positive".into()));
        }
        let plane = d.h * d.w;
        let src = xv.data();
        let mut out = Vec::with_capacity(src.len() * factor);
        for nc in 0..n * d.c {
            for t in 0..d.t {
                let frame = &src[(nc * d.t + t) * plane..][..plane];
                for _ in 0..factor {
                    out.extend_from_slice(frame);
                }
            }
        }
        let value = Tensor::new(vec![n, d.c, d.t * factor, d.h, d.w], out)?;
        self.record("upsample_temporal", value, Op::Upsample { x, factor }, &[x])
    }

    /// Affine layer: `x [N, I]`, `w [O, I]`, `b [O]` to `[N, O]`.
    pub fn dense(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        let ([n, i], [o, wi]) = (xv.shape(), wv.shape()) else {
            return Err(shape_err("dense", xv, wv));
        };
        let (n, i, o) = (*n, *i, *o);
        if *wi != i {
            return Err(shape_err("dense", xv, wv));
        }
        if bv.shape() != [o] {
            return Err(shape_err("dense", wv, bv));
        }
        let mut out: Vec<f64> = (0..n).flat_map(|_| bv.data().iter().copied()).collect();
        kernels::gemm(n, i, o, xv.data(), i as isize, 1, wv.data(), 1, i as isize, 1.0, &mut out);
        let value = Tensor::new(vec![n, o], out)?;
        self.record("dense", value, Op::Dense { x, w, b }, &[x, w, b])
    }

    pub fn global_pool(&mut self, x: Var, pool: Pool) -> Result<Var> {
        let xv = self.value(x);
        let (n, d) = dims5("global_pool", xv)?;
        let plane = d.h * d.w;
        let (shape, group) = match pool {
            Pool::Spatial => (vec![n, d.c, d.t], plane),
            Pool::SpatioTemporal => (vec![n, d.c], d.volume()),
        };
        let out = xv
            .data()
            .chunks_exact(group)
            .map(|g| g.iter().sum::<f64>() / group as f64)
            .collect();
        let value = Tensor::new(shape, out)?;
        self.record("global_pool", value, Op::GlobalPool { x, pool }, &[x])
    }

    /// Concatenates `[N, A]` and `[N, B]` into `[N, A + B]`.
    pub fn concat(&mut self, a: Var, b: Var) -> Result<Var> {
        let (av, bv) = (self.value(a), self.value(b));
        let ([na, ca], [nb, cb]) = (av.shape(), bv.shape()) else {
            return Err(shape_err("concat", av, bv));
        };
        if na != nb {
            return Err(shape_err("concat", av, bv));
        }
        let (n, ca, cb) = (*na, *ca, *cb);
        let mut out = Vec::with_capacity(n * (ca + cb));
        for r in 0..n {
            out.extend_from_slice(&av.data()[r * ca..(r + 1) * ca]);
            out.extend_from_slice(&bv.data()[r * cb..(r + 1) * cb]);
        }
        let value = Tensor::new(vec![n, ca + cb], out)?;
        self.record("concat", value, Op::Concat { a, b }, &[a, b])
    }

    pub fn reshape(&mut self, x: Var, shape: &[usize]) -> Result<Var> {
        let value = self.value(x).clone().reshape(shape)?;
        self.record("reshape", value, Op::Reshape(x), &[x])
    }

    /// Mean over rows of `1 - r`, `r` the Pearson correlation along the last
    /// axis of `[N, T]` inputs. Constant rows give `r = 0` instead of NaN.
    pub fn pearson_loss(&mut self, pred: Var, gt: Var) -> Result<Var> {
        let (pv, gv) = (self.value(pred), self.value(gt));
        let [n, t] = *pv.shape() else {
            return Err(shape_err("pearson_loss", pv, gv));
        };
        if pv.shape() != gv.shape() || t < 2 || n == 0 {
            return Err(shape_err("pearson_loss", pv, gv));
        }
        let loss = pv
            .data()
            .chunks_exact(t)
            .zip(gv.data().chunks_exact(t))
            .map(|(p, g)| 1.0 - PearsonRow::new(p, g).r())
            .sum::<f64>()
            / n as f64;
        self.record("pearson_loss", Tensor::scalar(loss), Op::Pearson { pred, gt }, &[pred, gt])
    }

    /// `sqrt(Σ w (p - g)² / (Σ w + ε))` over `[N]` (or `[N, 1]`) predictions.
    /// Weights are constants.
    pub fn weighted_rmse(&mut self, pred: Var, gt: Var, w: &[f64]) -> Result<Var> {
        let (pv, gv) = (self.value(pred), self.value(gt));
        if pv.len() != gv.len() || pv.len() != w.len() || pv.is_empty() {
            return Err(shape_err("weighted_rmse", pv, gv));
        }
        if w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument("weights must be finite and non-negative".into()));
        }
        let sw: f64 = w.iter().sum();
        if sw == 0.0 {
            return Err(Error::DegenerateBatch("all sample weights are zero".into()));
        }
        let q: f64 = pv
            .data()
            .iter()
            .zip(gv.data())
            .zip(w)
            .map(|((p, g), w)| w * (p - g) * (p - g))
            .sum::<f64>()
            / sw;
        let op = Op::WeightedRmse {
            pred,
            gt,
            w: w.to_vec(),
        };
        self.record("weighted_rmse", Tensor::scalar(q.sqrt()), op, &[pred, gt])
    }

    /// Backpropagates from a scalar node.
    pub fn backward(&mut self, out: Var) -> Result<()> {
        let shape = self.value(out).shape().to_vec();
        if shape.iter().product::<usize>() != 1 {
            return Err(Error::Shape {
                op: "backward",
                lhs: shape,
                rhs: vec![1],
            });
        }
        self.backward_with(out, &[1.0])
    }

    /// Backpropagates an arbitrary upstream gradient `seed` from `out`.
    pub fn backward_with(&mut self, out: Var, seed: &[f64]) -> Result<()> {
        if seed.len() != self.value(out).len() {
            return Err(Error::Shape {
                op: "backward",
                lhs: self.value(out).shape().to_vec(),
                rhs: vec![seed.len()],
            });
        }
        for node in &mut self.nodes {
            node.grad = None;
        }
        self.nodes[out.0].grad = Some(seed.to_vec());
        for i in (0..=out.0).rev() {
            if !self.nodes[i].needs_grad {
                continue;
            }
            let Some(g) = self.nodes[i].grad.take() else {
                continue;
            };
            self.propagate(i, &g);
            self.nodes[i].grad = Some(g);
        }
        Ok(())
    }

    /// Adds `delta` to the gradient of `v` when it takes part in differentiation.
    fn add_grad(&mut self, v: Var, delta: impl FnOnce(&mut [f64], &Tensor)) {
        let node = &mut self.nodes[v.0];
        if node.needs_grad {
            let n = node.value.len();
            let g = accumulate(&mut node.grad, n);
            delta(g, &node.value);
        }
    }

    fn wants(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn propagate(&mut self, i: usize, g: &[f64]) {
        let op = self.nodes[i].op.clone();
        match op {
            Op::Leaf => {}
            Op::Conv3d { x, w, b, k } => {
                let (n, d) = dims5("conv3d", self.value(x)).expect("checked in forward");
                let co = self.value(w).shape()[0];
                let mut dw = vec![0.0; self.value(w).len()];
                let mut db = vec![0.0; co];
                let mut dx = self.wants(x).then(|| vec![0.0; self.value(x).len()]);
                let need_w = self.wants(w) || self.wants(b);
                if need_w || dx.is_some() {
                    kernels::conv3d_backward(
                        self.value(x).data(),
                        n,
                        d,
                        self.value(w).data(),
                        co,
                        k,
                        g,
                        &mut dw,
                        &mut db,
                        dx.as_deref_mut(),
                    );
                }
                self.add_grad(w, |acc, _| add_into(acc, &dw));
                self.add_grad(b, |acc, _| add_into(acc, &db));
                if let Some(dx) = dx {
                    self.add_grad(x, |acc, _| add_into(acc, &dx));
                }
            }
            Op::Relu(x) => self.add_grad(x, |acc, xv| {
                for ((a, gi), v) in acc.iter_mut().zip(g).zip(xv.data()) {
                    if *v > 0.0 {
                        *a += gi;
                    }
                }
            }),
            Op::AvgPool { x, f } => self.add_grad(x, |acc, xv| {
                let (_, d) = dims5("avgpool3d", xv).expect("checked in forward");
                let [ft, fh, fw] = f;
                let (ot, oh, ow) = (d.t / ft, d.h / fh, d.w / fw);
                let scale = 1.0 / (ft * fh * fw) as f64;
                for (nc, a) in acc.chunks_exact_mut(d.volume()).enumerate() {
                    let go = &g[nc * ot * oh * ow..][..ot * oh * ow];
                    for t in 0..d.t {
                        for h in 0..d.h {
                            let row = &mut a[(t * d.h + h) * d.w..][..d.w];
                            let grow = &go[((t / ft) * oh + h / fh) * ow..][..ow];
                            for (wi, r) in row.iter_mut().enumerate() {
                                *r += grow[wi / fw] * scale;
                            }
                        }
                    }
                }
            }),
            Op::Upsample { x, factor } => self.add_grad(x, |acc, xv| {
                let (_, d) = dims5("upsample_temporal", xv).expect("checked in forward");
                let plane = d.h * d.w;
                for (j, a) in acc.chunks_exact_mut(plane).enumerate() {
                    for r in 0..factor {
                        let src = &g[(j * factor + r) * plane..][..plane];
                        add_into(a, src);
                    }
                }
            }),
            Op::Dense { x, w, b } => {
                let (n, i) = (self.value(x).shape()[0], self.value(x).shape()[1]);
                let o = self.value(w).shape()[0];
                let xd = self.value(x).data().to_vec();
                let wd = self.value(w).data().to_vec();
                self.add_grad(w, |acc, _| {
                    kernels::gemm(o, n, i, g, 1, o as isize, &xd, i as isize, 1, 1.0, acc);
                });
                self.add_grad(b, |acc, _| {
                    for row in g.chunks_exact(o) {
                        add_into(acc, row);
                    }
                });
                self.add_grad(x, |acc, _| {
                    kernels::gemm(n, o, i, g, o as isize, 1, &wd, i as isize, 1, 1.0, acc);
                });
            }
            Op::GlobalPool { x, pool } => self.add_grad(x, |acc, xv| {
                let (_, d) = dims5("global_pool", xv).expect("checked in forward");
                let group = match pool {
                    Pool::Spatial => d.h * d.w,
                    Pool::SpatioTemporal => d.volume(),
                };
                let scale = 1.0 / group as f64;
                for (a, gi) in acc.chunks_exact_mut(group).zip(g) {
                    for v in a {
                        *v += gi * scale;
                    }
                }
            }),
            Op::Concat { a, b } => {
                let ca = self.value(a).shape()[1];
                let cb = self.value(b).shape()[1];
                self.add_grad(a, |acc, _| {
                    for (r, row) in acc.chunks_exact_mut(ca).enumerate() {
                        add_into(row, &g[r * (ca + cb)..][..ca]);
                    }
                });
                self.add_grad(b, |acc, _| {
                    for (r, row) in acc.chunks_exact_mut(cb).enumerate() {
                        add_into(row, &g[r * (ca + cb) + ca..][..cb]);
                    }
                });
            }
            Op::Reshape(x) => self.add_grad(x, |acc, _| add_into(acc, g)),
            Op::Pearson { pred, gt } => {
                let t = self.value(pred).shape()[1];
                let n = self.value(pred).shape()[0];
                let scale = -g[0] / n as f64;
                let pd = self.value(pred).data().to_vec();
                let gd = self.value(gt).data().to_vec();
                let rows: Vec<PearsonRow> = pd
                    .chunks_exact(t)
                    .zip(gd.chunks_exact(t))
                    .map(|(p, q)| PearsonRow::new(p, q))
                    .collect();
                self.add_grad(pred, |acc, _| {
                    for (row, a) in rows.iter().zip(acc.chunks_exact_mut(t)) {
                        row.grad_pred(scale, a);
                    }
                });
                self.add_grad(gt, |acc, _| {
                    for (row, a) in rows.iter().zip(acc.chunks_exact_mut(t)) {
                        row.grad_gt(scale, a);
                    }
                });
            }
            Op::WeightedRmse { pred, gt, w } => {
                let loss = self.nodes[i].value.data()[0];
                if loss == 0.0 {
                    return;
                }
                let denom = w.iter().sum::<f64>() * loss;
                let e: Vec<f64> = self
                    .value(pred)
                    .data()
                    .iter()
                    .zip(self.value(gt).data())
                    .zip(&w)
                    .map(|((p, q), w)| g[0] * w * (p - q) / denom)
                    .collect();
                self.add_grad(pred, |acc, _| add_into(acc, &e));
                self.add_grad(gt, |acc, _| {
                    for (a, v) in acc.iter_mut().zip(&e) {
                        *a -= v;
                    }
                });
            }
        }
    }
}

fn add_into(acc: &mut [f64], src: &[f64]) {
    for (a, s) in acc.iter_mut().zip(src) {
        *a += s;
    }
}

/// Centered sums for one row of the Pearson loss.
struct PearsonRow {
    a: Vec<f64>,
    b: Vec<f64>,
    num: f64,
    sa: f64,
    sb: f64,
}

impl PearsonRow {
    fn new(p: &[f64], g: &[f64]) -> Self {
        let center = |x: &[f64]| {
            let m = x.iter().sum::<f64>() / x.len() as f64;
            x.iter().map(|v| v - m).collect::<Vec<_>>()
        };
        let (a, b) = (center(p), center(g));
        let num = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        let sa = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        Self { a, b, num, sa, sb }
    }

    fn denom(&self) -> f64 {
        self.sa * self.sb + LOSS_EPS
    }

    fn r(&self) -> f64 {
        self.num / self.denom()
    }

    /// `acc += scale · ∂r/∂p`. Centering needs no explicit term because the
    /// centered vectors sum to zero.
    fn grad_pred(&self, scale: f64, acc: &mut [f64]) {
        let d = self.denom();
        let k = if self.sa > 0.0 {
            self.num * self.sb / (d * d * self.sa)
        } else {
            0.0
        };
        for ((o, a), b) in acc.iter_mut().zip(&self.a).zip(&self.b) {
            *o += scale * (b / d - k * a);
        }
    }

    fn grad_gt(&self, scale: f64, acc: &mut [f64]) {
        let d = self.denom();
        let k = if self.sb > 0.0 {
            self.num * self.sa / (d * d * self.sb)
        } else {
            0.0
        };
        for ((o, a), b) in acc.iter_mut().zip(&self.a).zip(&self.b) {
            *o += scale * (a / d - k * b);
        }
    }
}
