//! PhysNet-style 3D CNN with an SpO₂ regression head.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::graph::{Graph, Pool, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng;

const INIT_STREAM: u64 = 0x696e_6974;

/// Temporal pooling factor of each encoder block. The two 2× temporal
/// reductions are undone by the decoder's two 2× upsamplings.
const TEMPORAL_POOL: [usize; 4] = [2, 2, 1, 1];
const UPSAMPLINGS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysNetConfig {
    pub frames: usize,
    /// Square input side, 32 for desk-scale runs and 128 at full scale.
    pub size: usize,
    pub in_channels: usize,
    pub channels: [usize; 4],
    pub decoder_channels: usize,
    pub spo2_hidden: [usize; 2],
}

impl Default for PhysNetConfig {
    fn default() -> Self {
        Self {
            frames: 60,
            size: 32,
            in_channels: 3,
            channels: [16, 32, 32, 64],
            decoder_channels: 64,
            spo2_hidden: [60, 32],
        }
    }
}

impl PhysNetConfig {
    pub fn full_scale() -> Self {
        Self {
            size: 128,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t_div: usize = TEMPORAL_POOL.iter().product();
        if self.frames == 0 || self.frames % t_div != 0 {
            return Err(Error::Config(format!("frames must be a positive multiple of {t_div}")));
        }
        if self.size == 0 || self.size % 16 != 0 {
            return Err(Error::Config("input size must be a positive multiple of 16".into()));
        }
        if self.in_channels == 0 || self.channels.contains(&0) || self.decoder_channels == 0 {
            return Err(Error::Config("channel counts must be positive".into()));
        }
        Ok(())
    }

    /// Width of the pooled feature fed to the SpO₂ head.
    pub fn feature_dim(&self) -> usize {
        UPSAMPLINGS * self.decoder_channels
    }

    /// Shape of one input sample, `[C, T, H, W]`.
    pub fn input_shape(&self) -> [usize; 4] {
        [self.in_channels, self.frames, self.size, self.size]
    }

    /// SHA-256 over the canonical JSON form.
    pub fn digest(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).into()
    }

    fn layer_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let mut out = Vec::new();
        let mut conv = |name: String, co: usize, ci: usize, k: usize| {
            out.push((format!("{name}.w"), vec![co, ci, k, k, k]));
            out.push((format!("{name}.b"), vec![co]));
        };
        let mut ci = self.in_channels;
        for (i, &co) in self.channels.iter().enumerate() {
            conv(format!("enc{i}"), co, ci, 3);
            ci = co;
        }
        for i in 0..UPSAMPLINGS {
            conv(format!("dec{i}"), self.decoder_channels, ci, 3);
            ci = self.decoder_channels;
        }
        conv("head".into(), 1, ci, 1);
        let dims = [self.feature_dim(), self.spo2_hidden[0], self.spo2_hidden[1], 1];
        for i in 0..3 {
            out.push((format!("spo2.fc{i}.w"), vec![dims[i + 1], dims[i]]));
            out.push((format!("spo2.fc{i}.b"), vec![dims[i + 1]]));
        }
        out
    }
}

/// Named parameters in a fixed order.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    entries: Vec<(String, Tensor)>,
}

impl Params {
    pub fn from_entries(entries: Vec<(String, Tensor)>) -> Self {
        Self { entries }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|(n, _)| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.entries[i].1)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.index_of(name).map(|i| &mut self.entries[i].1)
    }

    pub fn tensor(&self, i: usize) -> &Tensor {
        &self.entries[i].1
    }

    pub fn tensor_mut(&mut self, i: usize) -> &mut Tensor {
        &mut self.entries[i].1
    }

    pub fn name(&self, i: usize) -> &str {
        &self.entries[i].0
    }

    pub fn n_values(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }
}

/// Which outputs a forward pass should build.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Heads {
    pub wave: bool,
    pub spo2: bool,
}

impl Heads {
    pub const WAVE: Heads = Heads { wave: true, spo2: false };
    pub const SPO2: Heads = Heads { wave: false, spo2: true };
}

/// Graph handles produced by [`PhysNet::forward`].
#[derive(Debug, Clone)]
pub struct Forward {
    /// One handle per parameter, aligned with [`Params`] order.
    pub params: Vec<Option<Var>>,
    /// `[N, T]`
    pub wave: Option<Var>,
    /// `[N, 1]`
    pub spo2: Option<Var>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhysNet {
    pub config: PhysNetConfig,
    pub params: Params,
}

impl PhysNet {
    /// He-normal convolution and hidden-layer weights, zero biases, and a
    /// zero final SpO₂ layer so an untrained head outputs its bias.
    pub fn new(config: PhysNetConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut r = rng::stream(seed, &[INIT_STREAM]);
        let entries = config
            .layer_shapes()
            .into_iter()
            .map(|(name, shape)| {
                let t = if name.ends_with(".b") || name.starts_with("spo2.fc2") {
                    Tensor::zeros(&shape)
                } else {
                    let fan_in: usize = shape[1..].iter().product();
                    let gain = if name.starts_with("head") { 1.0 } else { 2.0 };
                    let normal = Normal::new(0.0, (gain / fan_in as f64).sqrt()).expect("positive sd");
                    let n = shape.iter().product();
                    let data = (0..n).map(|_| normal.sample(&mut r)).collect();
                    Tensor::new(shape, data).expect("shape matches")
                };
                (name, t)
            })
            .collect();
        Ok(Self {
            config,
            params: Params::from_entries(entries),
        })
    }

    /// Replaces the parameters after checking names and shapes.
    pub fn with_params(config: PhysNetConfig, params: Params) -> Result<Self> {
        config.validate()?;
        let expected = config.layer_shapes();
        if expected.len() != params.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} parameters, got {}",
                expected.len(),
                params.len()
            )));
        }
        for ((name, shape), (pn, pt)) in expected.iter().zip(params.iter()) {
            if name != pn || shape.as_slice() != pt.shape() {
                return Err(Error::Shape {
                    op: "with_params",
                    lhs: shape.clone(),
                    rhs: pt.shape().to_vec(),
                });
            }
        }
        Ok(Self { config, params })
    }

    pub fn spo2_bias(&self) -> f64 {
        self.params.get("spo2.fc2.b").expect("head present").data()[0]
    }

    pub fn set_spo2_bias(&mut self, v: f64) {
        self.params.get_mut("spo2.fc2.b").expect("head present").data_mut()[0] = v;
    }

    /// Number of encoder blocks `k` such that every parameter of blocks
    /// `0..k` is frozen.
    pub fn frozen_prefix(&self, frozen: &dyn Fn(&str) -> bool) -> usize {
        (0..4)
            .take_while(|i| frozen(&format!("enc{i}.w")) && frozen(&format!("enc{i}.b")))
            .count()
    }

    /// Runs encoder blocks `0..k` without recording gradients.
    pub fn encode_prefix(&self, input: &Tensor, k: usize) -> Result<Tensor> {
        let mut g = Graph::new();
        let mut x = g.input(input.clone());
        for i in 0..k {
            let w = g.input(self.params.get(&format!("enc{i}.w")).expect("layer").clone());
            let b = g.input(self.params.get(&format!("enc{i}.b")).expect("layer").clone());
            x = self.encoder_block(&mut g, i, x, w, b)?;
        }
        Ok(g.value(x).clone())
    }

    fn encoder_block(&self, g: &mut Graph, i: usize, x: Var, w: Var, b: Var) -> Result<Var> {
        let y = g.conv3d(x, w, b)?;
        let y = g.relu(y)?;
        g.avgpool3d(y, [TEMPORAL_POOL[i], 2, 2])
    }

    /// Builds the network on `x`, which is the input of encoder block
    /// `start` (0 for raw clips). Parameters for which `trainable` returns
    /// false enter the graph as constants.
    pub fn forward(
        &self,
        g: &mut Graph,
        x: Var,
        start: usize,
        heads: Heads,
        trainable: &dyn Fn(&str) -> bool,
    ) -> Result<Forward> {
        let n_params = self.params.len();
        let mut vars: Vec<Option<Var>> = vec![None; n_params];
        let mut p = |g: &mut Graph, name: String| -> Var {
            let i = self.params.index_of(&name).expect("known layer");
            let v = g.leaf(self.params.tensor(i).clone(), trainable(&name));
            vars[i] = Some(v);
            v
        };
        let mut h = x;
        for i in start..4 {
            let w = p(g, format!("enc{i}.w"));
            let b = p(g, format!("enc{i}.b"));
            h = self.encoder_block(g, i, h, w, b)?;
        }
        let mut pooled = Vec::new();
        for i in 0..UPSAMPLINGS {
            h = g.upsample_temporal(h, 2)?;
            let w = p(g, format!("dec{i}.w"));
            let b = p(g, format!("dec{i}.b"));
            h = g.conv3d(h, w, b)?;
            h = g.relu(h)?;
            if heads.spo2 {
                pooled.push(g.global_pool(h, Pool::SpatioTemporal)?);
            }
        }
        let wave = if heads.wave {
            let w = p(g, "head.w".into());
            let b = p(g, "head.b".into());
            let y = g.conv3d(h, w, b)?;
            let y = g.global_pool(y, Pool::Spatial)?;
            let shape = g.value(y).shape().to_vec();
            Some(g.reshape(y, &[shape[0], shape[2]])?)
        } else {
            None
        };
        let spo2 = if heads.spo2 {
            let mut f = pooled[0];
            for q in &pooled[1..] {
                f = g.concat(f, *q)?;
            }
            for i in 0..3 {
                let w = p(g, format!("spo2.fc{i}.w"));
                let b = p(g, format!("spo2.fc{i}.b"));
                f = g.dense(f, w, b)?;
                if i < 2 {
                    f = g.relu(f)?;
                }
            }
            Some(f)
        } else {
            None
        };
        Ok(Forward {
            params: vars,
            wave,
            spo2,
        })
    }

    fn check_input(&self, input: &Tensor) -> Result<usize> {
        let s = input.shape();
        let expect = self.config.input_shape();
        if s.len() != 5 || s[1..] != expect {
            return Err(Error::Shape {
                op: "predict",
                lhs: s.to_vec(),
                rhs: expect.to_vec(),
            });
        }
        Ok(s[0])
    }

    /// Waveforms for a batch `[N, C, T, H, W]`, one `Vec` of length T each.
    pub fn predict_waves(&self, input: &Tensor) -> Result<Vec<Vec<f64>>> {
        self.check_input(input)?;
        let mut g = Graph::new();
        let x = g.input(input.clone());
        let out = self.forward(&mut g, x, 0, Heads::WAVE, &|_| false)?;
        let y = g.value(out.wave.expect("requested"));
        Ok(y.data().chunks_exact(self.config.frames).map(<[f64]>::to_vec).collect())
    }

    /// SpO₂ predictions for a batch `[N, C, T, H, W]`.
    pub fn predict_spo2(&self, input: &Tensor) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut g = Graph::new();
        let x = g.input(input.clone());
        let out = self.forward(&mut g, x, 0, Heads::SPO2, &|_| false)?;
        Ok(g.value(out.spo2.expect("requested")).data().to_vec())
    }
}
