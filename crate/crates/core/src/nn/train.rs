//! Training loops for the waveform and SpO₂ objectives.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::data::Sample;
use super::graph::{Graph, Var};
use super::lds::{lds_weights, LdsConfig};
use super::model::{Heads, PhysNet};
use super::optim::{OneCycle, OptimizerKind, Sgd};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng;

const SHUFFLE_STREAM: u64 = 0x7368_7566;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub init_lr: f64,
    pub batch_size: usize,
    pub optimizer: OptimizerKind,
    pub momentum: f64,
    /// Layer names (`enc0`) or parameter names (`enc0.w`) kept fixed.
    pub frozen_layers: Vec<String>,
    pub augment_time_reversal: bool,
    /// Rescales the gradient when its global norm exceeds this value.
    pub grad_clip: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 27,
            init_lr: 0.01,
            batch_size: 4,
            optimizer: OptimizerKind::SgdMomentum,
            momentum: 0.9,
            frozen_layers: Vec::new(),
            augment_time_reversal: false,
            grad_clip: Some(5.0),
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Freezes the first two encoder blocks.
    pub fn fine_tune(self) -> Self {
        Self {
            frozen_layers: vec!["enc0".into(), "enc1".into()],
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.init_lr >= 0.0 && self.init_lr.is_finite()) {
            return Err(Error::Config("learning rate must be finite and non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config("momentum must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn is_frozen(&self, param: &str) -> bool {
        self.frozen_layers.iter().any(|l| {
            param == l || (param.starts_with(l.as_str()) && param[l.len()..].starts_with('.'))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub steps: usize,
    pub lr_last: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
}

impl History {
    pub fn final_val_loss(&self) -> Option<f64> {
        self.epochs.last().and_then(|e| e.val_loss)
    }
}

#[derive(Debug, Clone, Copy)]
enum Task<'a> {
    Wave,
    Spo2 { weights: Option<&'a [f64]> },
}

impl Task<'_> {
    fn heads(&self) -> Heads {
        match self {
            Task::Wave => Heads::WAVE,
            Task::Spo2 { .. } => Heads::SPO2,
        }
    }
}

/// Network inputs after the frozen encoder prefix, plus targets.
struct Prepared<'a> {
    inputs: Vec<Tensor>,
    samples: Vec<&'a Sample>,
    reversed: Vec<Sample>,
    weights: Vec<f64>,
}

impl Prepared<'_> {
    fn len(&self) -> usize {
        self.inputs.len()
    }

    fn sample(&self, i: usize) -> &Sample {
        if i < self.samples.len() {
            self.samples[i]
        } else {
            &self.reversed[i - self.samples.len()]
        }
    }
}

fn prepare<'a>(
    model: &PhysNet,
    samples: &'a [Sample],
    start: usize,
    augment: bool,
    weights: Option<&[f64]>,
) -> Result<Prepared<'a>> {
    let shape = model.config.input_shape();
    for s in samples {
        if s.input.shape() != shape {
            return Err(Error::Shape {
                op: "train",
                lhs: s.input.shape().to_vec(),
                rhs: shape.to_vec(),
            });
        }
        if s.wave.len() != model.config.frames {
            return Err(Error::Length {
                needed: model.config.frames,
                got: s.wave.len(),
            });
        }
    }
    let reversed: Vec<Sample> = if augment {
        samples.iter().map(Sample::time_reversed).collect()
    } else {
        Vec::new()
    };
    let encode = |s: &Sample| -> Result<Tensor> {
        let mut s4 = vec![1];
        s4.extend_from_slice(s.input.shape());
        let x = s.input.clone().reshape(&s4)?;
        if start == 0 {
            return Ok(x);
        }
        model.encode_prefix(&x, start)
    };
    let inputs = samples
        .iter()
        .chain(&reversed)
        .map(encode)
        .collect::<Result<Vec<_>>>()?;
    let mut w = weights.map(<[f64]>::to_vec).unwrap_or_else(|| vec![1.0; samples.len()]);
    if augment {
        w.extend_from_within(..);
    }
    Ok(Prepared {
        inputs,
        samples: samples.iter().collect(),
        reversed,
        weights: w,
    })
}

fn batch_tensor(p: &Prepared, idx: &[usize]) -> Result<Tensor> {
    let first = p.inputs[idx[0]].shape();
    let mut shape = first.to_vec();
    shape[0] = idx.len();
    let mut data = Vec::with_capacity(p.inputs[0].len() * idx.len());
    for &i in idx {
        data.extend_from_slice(p.inputs[i].data());
    }
    Tensor::new(shape, data)
}

/// Builds the graph for one batch and returns the loss handle plus the
/// forward handles.
fn batch_loss(
    model: &PhysNet,
    g: &mut Graph,
    p: &Prepared,
    idx: &[usize],
    start: usize,
    task: Task,
    trainable: &dyn Fn(&str) -> bool,
) -> Result<(Var, Vec<Option<Var>>)> {
    let x = g.input(batch_tensor(p, idx)?);
    let fw = model.forward(g, x, start, task.heads(), trainable)?;
    let loss = match task {
        Task::Wave => {
            let t = model.config.frames;
            let gt: Vec<f64> = idx.iter().flat_map(|&i| p.sample(i).wave.iter().copied()).collect();
            let gt = g.input(Tensor::new(vec![idx.len(), t], gt)?);
            g.pearson_loss(fw.wave.expect("wave head"), gt)?
        }
        Task::Spo2 { .. } => {
            let gt: Vec<f64> = idx.iter().map(|&i| p.sample(i).spo2).collect();
            let gt = g.input(Tensor::new(vec![idx.len(), 1], gt)?);
            let w: Vec<f64> = idx.iter().map(|&i| p.weights[i]).collect();
            g.weighted_rmse(fw.spo2.expect("spo2 head"), gt, &w)?
        }
    };
    Ok((loss, fw.params))
}

fn evaluate(model: &PhysNet, p: &Prepared, start: usize, task: Task, batch: usize) -> Result<f64> {
    let n = p.len();
    let order: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    let mut sq = 0.0;
    for idx in order.chunks(batch) {
        let mut g = Graph::new();
        let (loss, _) = batch_loss(model, &mut g, p, idx, start, task, &|_| false)?;
        let l = g.value(loss).data()[0];
        total += l * idx.len() as f64;
        sq += l * l * idx.len() as f64;
    }
    Ok(match task {
        Task::Wave => total / n as f64,
        // Pool batch RMSEs back into a single RMSE over the set.
        Task::Spo2 { .. } => (sq / n as f64).sqrt(),
    })
}

fn run(model: &mut PhysNet, train: &[Sample], val: &[Sample], cfg: &TrainConfig, task: Task) -> Result<History> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Empty("training split has no samples".into()));
    }
    let frozen = |name: &str| cfg.is_frozen(name);
    let start = model.frozen_prefix(&frozen);
    let weights = match task {
        Task::Spo2 { weights } => weights,
        Task::Wave => None,
    };
    let tr = prepare(model, train, start, cfg.augment_time_reversal, weights)?;
    let va = prepare(model, val, start, false, None)?;
    let steps_per_epoch = tr.len().div_ceil(cfg.batch_size);
    let sched = OneCycle::new(cfg.init_lr, steps_per_epoch * cfg.epochs);
    let momentum = match cfg.optimizer {
        OptimizerKind::Sgd => 0.0,
        OptimizerKind::SgdMomentum => cfg.momentum,
    };
    let mut opt = Sgd::new(momentum, model.params.iter().map(|(_, t)| t.len()));
    let trainable = |name: &str| !cfg.is_frozen(name);
    let mut history = History::default();
    let mut step = 0;
    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..tr.len()).collect();
        order.shuffle(&mut rng::stream(cfg.seed, &[SHUFFLE_STREAM, epoch as u64]));
        let mut total = 0.0;
        let mut lr = sched.lr(step);
        for idx in order.chunks(cfg.batch_size) {
            let mut g = Graph::new();
            let (loss, vars) = batch_loss(model, &mut g, &tr, idx, start, task, &trainable)?;
            total += g.value(loss).data()[0] * idx.len() as f64;
            g.backward(loss)?;
            let grads: Vec<Option<Vec<f64>>> = vars
                .iter()
                .map(|v| v.and_then(|v| g.grad(v).map(<[f64]>::to_vec)))
                .collect();
            drop(g);
            let norm = grads
                .iter()
                .flatten()
                .flat_map(|g| g.iter())
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            if !norm.is_finite() {
                return Err(Error::Numerical(format!("non-finite gradient at step {step}")));
            }
            let scale = match cfg.grad_clip {
                Some(c) if norm > c => c / norm,
                _ => 1.0,
            };
            lr = sched.lr(step);
            for (i, gr) in grads.iter().enumerate() {
                let Some(gr) = gr else { continue };
                if cfg.is_frozen(model.params.name(i)) {
                    continue;
                }
                let scaled: Vec<f64>;
                let gr = if scale == 1.0 {
                    gr.as_slice()
                } else {
                    scaled = gr.iter().map(|v| v * scale).collect();
                    &scaled
                };
                opt.step(i, model.params.tensor_mut(i).data_mut(), gr, lr);
            }
            step += 1;
        }
        let val_loss = if va.len() > 0 {
            Some(evaluate(model, &va, start, task, cfg.batch_size)?)
        } else {
            None
        };
        let rec = EpochRecord {
            epoch,
            train_loss: total / tr.len() as f64,
            val_loss,
            steps: steps_per_epoch,
            lr_last: lr,
        };
        log::debug!("epoch {epoch}: train {:.4} val {:?}", rec.train_loss, rec.val_loss);
        history.epochs.push(rec);
    }
    Ok(history)
}

/// Minimizes the mean negative-Pearson loss between predicted and target
/// difference waveforms.
pub fn train_hr(model: &mut PhysNet, train: &[Sample], val: &[Sample], cfg: &TrainConfig) -> Result<History> {
    run(model, train, val, cfg, Task::Wave)
}

/// Minimizes the weighted RMSE of the SpO₂ head. With `lds` the weights come
/// from label distribution smoothing over the training labels, otherwise
/// they are uniform. An untrained head (all-zero last layer) first has its
/// bias set to the mean training label.
pub fn train_spo2(
    model: &mut PhysNet,
    train: &[Sample],
    val: &[Sample],
    cfg: &TrainConfig,
    lds: Option<&LdsConfig>,
) -> Result<History> {
    if train.is_empty() {
        return Err(Error::Empty("training split has no samples".into()));
    }
    let labels: Vec<f64> = train.iter().map(|s| s.spo2).collect();
    let head_untrained = model
        .params
        .get("spo2.fc2.w")
        .is_some_and(|w| w.data().iter().all(|v| *v == 0.0));
    if head_untrained {
        model.set_spo2_bias(labels.iter().sum::<f64>() / labels.len() as f64);
    }
    let weights = lds.map(|c| lds_weights(&labels, c)).transpose()?;
    run(model, train, val, cfg, Task::Spo2 { weights: weights.as_deref() })
}
