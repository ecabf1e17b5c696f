use serde::{Deserialize, Serialize};

/// Learning-rate policy with a single warmup and a single cosine decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneCycle {
    pub peak_lr: f64,
    pub total_steps: usize,
    pub warmup_frac: f64,
    /// Initial lr is `peak_lr / start_div`.
    pub start_div: f64,
    /// Final lr is `peak_lr / final_div`.
    pub final_div: f64,
}

impl OneCycle {
    pub fn new(peak_lr: f64, total_steps: usize) -> Self {
        Self {
            peak_lr,
            total_steps,
            warmup_frac: 0.3,
            start_div: 25.0,
            final_div: 100.0,
        }
    }

    /// Learning rate for 0-based `step`. Warmup is linear, decay is cosine.
    pub fn lr(&self, step: usize) -> f64 {
        let total = self.total_steps.max(1) as f64;
        let warm = (self.warmup_frac * total).max(1.0);
        let s = step as f64;
        let lo = self.peak_lr / self.start_div;
        let end = self.peak_lr / self.final_div;
        if s < warm {
            lo + (self.peak_lr - lo) * s / warm
        } else {
            let span = (total - 1.0 - warm).max(1.0);
            let p = ((s - warm) / span).min(1.0);
            end + 0.5 * (self.peak_lr - end) * (1.0 + (std::f64::consts::PI * p).cos())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    Sgd,
    SgdMomentum,
}

/// Stochastic gradient descent with optional heavy-ball momentum:
/// `v ← μ v + g`, `p ← p − lr · v`.
#[derive(Debug, Clone)]
pub struct Sgd {
    momentum: f64,
    velocity: Vec<Vec<f64>>,
}

impl Sgd {
    pub fn new(momentum: f64, sizes: impl Iterator<Item = usize>) -> Self {
        Self {
            momentum,
            velocity: sizes.map(|n| vec![0.0; n]).collect(),
        }
    }

    /// Updates parameter `i` in place.
    pub fn step(&mut self, i: usize, param: &mut [f64], grad: &[f64], lr: f64) {
        let v = &mut self.velocity[i];
        for ((p, g), v) in param.iter_mut().zip(grad).zip(v.iter_mut()) {
            *v = self.momentum * *v + g;
            *p -= lr * *v;
        }
    }
}
