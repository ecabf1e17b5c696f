//! Central finite-difference checks for every differentiable op.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::graph::{Graph, Pool, Var};
use super::tensor::Tensor;
use crate::error::Result;
use crate::rng;

/// Finite-difference step.
pub const FD_STEP: f64 = 1e-4;

/// Worst relative error of one op over all of its differentiable inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub op: &'static str,
    pub rel_err: f64,
}

type Build = dyn Fn(&mut Graph, &[Var]) -> Result<Var>;

fn random(r: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    let data = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches")
}

/// Values bounded away from zero so the step never crosses the ReLU kink.
fn away_from_zero(r: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let mut t = random(r, shape);
    for v in t.data_mut() {
        *v = v.signum() * (0.05 + v.abs());
    }
    t
}

/// Compares the analytic gradient of `Σ c ⊙ f(inputs)` with central differences.
fn check(r: &mut ChaCha8Rng, inputs: Vec<Tensor>, build: &Build) -> Result<f64> {
    let eval = |xs: &[Tensor]| -> Result<(Graph, Var, Vec<Var>)> {
        let mut g = Graph::new();
        let vars: Vec<Var> = xs.iter().map(|x| g.param(x.clone())).collect();
        let out = build(&mut g, &vars)?;
        Ok((g, out, vars))
    };
    let (mut g, out, vars) = eval(&inputs)?;
    let c: Vec<f64> = (0..g.value(out).len())
        .map(|_| r.random_range(-1.0..1.0))
        .collect();
    g.backward_with(out, &c)?;
    let objective = |xs: &[Tensor]| -> Result<f64> {
        let (g, out, _) = eval(xs)?;
        Ok(g.value(out).data().iter().zip(&c).map(|(a, b)| a * b).sum())
    };
    let mut worst: f64 = 0.0;
    for (k, v) in vars.iter().enumerate() {
        let analytic = g
            .grad(*v)
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; inputs[k].len()]);
        let mut numeric = Vec::with_capacity(analytic.len());
        let mut xs = inputs.clone();
        for j in 0..inputs[k].len() {
            let x0 = inputs[k].data()[j];
            xs[k].data_mut()[j] = x0 + FD_STEP;
            let hi = objective(&xs)?;
            xs[k].data_mut()[j] = x0 - FD_STEP;
            let lo = objective(&xs)?;
            xs[k].data_mut()[j] = x0;
            numeric.push((hi - lo) / (2.0 * FD_STEP));
        }
        let diff = norm(analytic.iter().zip(&numeric).map(|(a, b)| a - b));
        let scale = norm(analytic.iter().copied()).max(norm(numeric.iter().copied()));
        if scale > 0.0 {
            worst = worst.max(diff / scale);
        }
    }
    Ok(worst)
}

fn norm(xs: impl Iterator<Item = f64>) -> f64 {
    xs.map(|v| v * v).sum::<f64>().sqrt()
}

/// Runs every op check with inputs drawn from `seed`.
pub fn run(seed: u64) -> Result<Vec<GradCheck>> {
    let mut r = rng::stream(seed, &[0x6772_6164]);
    let mut out = Vec::new();
    let mut push = |op, e| out.push(GradCheck { op, rel_err: e });

    let ins = vec![
        random(&mut r, &[2, 2, 4, 3, 3]),
        random(&mut r, &[3, 2, 3, 3, 3]),
        random(&mut r, &[3]),
    ];
    push("conv3d", check(&mut r, ins, &|g, v| g.conv3d(v[0], v[1], v[2]))?);

    let ins = vec![
        random(&mut r, &[1, 3, 3, 2, 2]),
        random(&mut r, &[2, 3, 1, 1, 1]),
        random(&mut r, &[2]),
    ];
    push("conv3d_1x1x1", check(&mut r, ins, &|g, v| g.conv3d(v[0], v[1], v[2]))?);

    let ins = vec![away_from_zero(&mut r, &[2, 3, 4, 2, 2])];
    push("relu", check(&mut r, ins, &|g, v| g.relu(v[0]))?);

    let ins = vec![random(&mut r, &[2, 2, 4, 4, 6])];
    push("avgpool3d", check(&mut r, ins, &|g, v| g.avgpool3d(v[0], [2, 2, 3]))?);

    let ins = vec![random(&mut r, &[2, 2, 3, 2, 2])];
    push("upsample_temporal", check(&mut r, ins, &|g, v| g.upsample_temporal(v[0], 2))?);

    let ins = vec![random(&mut r, &[3, 5]), random(&mut r, &[4, 5]), random(&mut r, &[4])];
    push("dense", check(&mut r, ins, &|g, v| g.dense(v[0], v[1], v[2]))?);

    let ins = vec![random(&mut r, &[2, 3, 4, 2, 3])];
    push("global_pool_spatial", check(&mut r, ins, &|g, v| g.global_pool(v[0], Pool::Spatial))?);
    let ins = vec![random(&mut r, &[2, 3, 4, 2, 3])];
    push(
        "global_pool_spatiotemporal",
        check(&mut r, ins, &|g, v| g.global_pool(v[0], Pool::SpatioTemporal))?,
    );

    let ins = vec![random(&mut r, &[3, 2]), random(&mut r, &[3, 4])];
    push("concat", check(&mut r, ins, &|g, v| g.concat(v[0], v[1]))?);

    let ins = vec![random(&mut r, &[2, 1, 6])];
    push("reshape", check(&mut r, ins, &|g, v| g.reshape(v[0], &[2, 6]))?);

    let ins = vec![random(&mut r, &[3, 8]), random(&mut r, &[3, 8])];
    push("pearson_loss", check(&mut r, ins, &|g, v| g.pearson_loss(v[0], v[1]))?);

    let w: Vec<f64> = (0..6)
        .map(|i| if i == 0 { 0.0 } else { r.random_range(0.1..3.0) })
        .collect();
    let ins = vec![random(&mut r, &[6]), random(&mut r, &[6])];
    push(
        "weighted_rmse",
        check(&mut r, ins, &move |g, v| g.weighted_rmse(v[0], v[1], &w))?,
    );
    Ok(out)
}
