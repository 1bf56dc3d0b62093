//! Actor and critic networks over motion features.
//!
//! Both share one trunk layout: convolutions with wide kernels and strides
//! along the beam axis and narrow ones along time, optional max pooling,
//! then dense layers fed with the flattened maps plus the goal vector (and
//! the action, for the critic).

use ndarray::{s, Array2, Array4, ArrayView2, ArrayView4};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::{flatten_concat, relu_backward, relu_in_place, Conv2d, ConvCache, Dense, MaxPool2d, Param, PoolCache};
use super::PolicyError;
use crate::lidar::MotionFeature;
use crate::world::{Action, ACTION_LIMIT};

/// Ranges are divided by this before entering the network.
pub const RANGE_SCALE: f64 = 10.0;
pub const GOAL_DIM: usize = 2;
pub const ACTION_DIM: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    /// `[time, beam]`.
    pub kernel: [usize; 2],
    pub stride: [usize; 2],
    pub channels: usize,
    /// Max-pool window applied after the activation.
    #[serde(default)]
    pub pool: Option<[usize; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OutputActivation {
    ScaledTanh { scale: f64 },
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSpec {
    pub conv: Vec<ConvSpec>,
    pub dense: Vec<usize>,
    pub actor_output: OutputActivation,
    /// Uniform bound for the output layer's initial weights.
    pub head_init: f64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            conv: vec![
                ConvSpec {
                    kernel: [3, 41],
                    stride: [1, 8],
                    channels: 16,
                    pool: Some([1, 4]),
                },
                ConvSpec {
                    kernel: [3, 5],
                    stride: [1, 2],
                    channels: 32,
                    pool: None,
                },
            ],
            dense: vec![256, 128],
            actor_output: OutputActivation::ScaledTanh { scale: ACTION_LIMIT },
            head_init: 3e-3,
        }
    }
}

impl NetworkSpec {
    /// Sized for 180-beam scans on a single CPU core; time is folded in
    /// blocks of four scans.
    pub fn desk() -> Self {
        NetworkSpec {
            conv: vec![
                ConvSpec {
                    kernel: [4, 21],
                    stride: [4, 6],
                    channels: 8,
                    pool: Some([1, 3]),
                },
                ConvSpec {
                    kernel: [3, 3],
                    stride: [1, 1],
                    channels: 16,
                    pool: None,
                },
            ],
            dense: vec![128, 64],
            ..NetworkSpec::default()
        }
    }

    /// Spatial size after each stage, or an error naming the stage that
    /// does not fit.
    pub fn trunk_shape(&self, rows: usize, beams: usize) -> Result<[usize; 3], PolicyError> {
        let (mut c, mut h, mut w) = (1, rows, beams);
        for (i, layer) in self.conv.iter().enumerate() {
            let probe = Conv2d {
                in_channels: c,
                out_channels: layer.channels,
                kernel: layer.kernel,
                stride: layer.stride,
                weight: Param::zeros("", vec![0]),
                bias: Param::zeros("", vec![0]),
            };
            if layer.channels == 0 {
                return Err(PolicyError::InvalidArchitecture(format!("conv{i} has zero channels")));
            }
            let [oh, ow] = probe.output_hw(h, w).ok_or_else(|| {
                PolicyError::InvalidArchitecture(format!(
                    "conv{i} kernel {:?} stride {:?} does not fit a {h}x{w} input",
                    layer.kernel, layer.stride
                ))
            })?;
            (c, h, w) = (layer.channels, oh, ow);
            if let Some(window) = layer.pool {
                let [ph, pw] = MaxPool2d { window }.output_hw(h, w).ok_or_else(|| {
                    PolicyError::InvalidArchitecture(format!("pool{i} window {window:?} does not fit a {h}x{w} map"))
                })?;
                (h, w) = (ph, pw);
            }
        }
        if self.dense.contains(&0) {
            return Err(PolicyError::InvalidArchitecture("dense width 0".into()));
        }
        Ok([c, h, w])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    Actor,
    Critic,
}

/// Normalised network inputs for a batch of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBatch {
    /// `[N, 1, rows, beams]`, ranges divided by [`RANGE_SCALE`].
    pub scans: Array4<f64>,
    /// `[N, 2]`: normalised goal distance and bearing.
    pub goals: Array2<f64>,
}

impl FeatureBatch {
    pub fn from_features<'a, I>(features: I) -> Result<FeatureBatch, PolicyError>
    where
        I: IntoIterator<Item = &'a MotionFeature>,
        I::IntoIter: ExactSizeIterator,
    {
        let it = features.into_iter();
        let n = it.len();
        let mut scans: Option<Array4<f64>> = None;
        let mut goals = Array2::<f64>::zeros((n, GOAL_DIM));
        for (i, f) in it.enumerate() {
            let arr = scans.get_or_insert_with(|| Array4::zeros((n, 1, f.rows, f.beams)));
            let (_, _, rows, beams) = arr.dim();
            if f.rows != rows || f.beams != beams || f.data.len() != rows * beams {
                return Err(PolicyError::ShapeMismatch {
                    what: "motion feature",
                    expected: format!("{rows}x{beams}"),
                    got: format!("{}x{} ({} values)", f.rows, f.beams, f.data.len()),
                });
            }
            let dst = arr.slice_mut(s![i, 0, .., ..]);
            let src = ArrayView2::from_shape((rows, beams), &f.data).expect("length checked");
            ndarray::Zip::from(dst).and(src).for_each(|d, &v| *d = v / RANGE_SCALE);
            let g = f.goal.normalized();
            goals[[i, 0]] = g[0];
            goals[[i, 1]] = g[1];
        }
        Ok(FeatureBatch {
            scans: scans.unwrap_or_else(|| Array4::zeros((0, 1, 0, 0))),
            goals,
        })
    }

    pub fn len(&self) -> usize {
        self.goals.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
struct ConvStage {
    conv: ConvCache,
    activated: Array4<f64>,
    pool: Option<PoolCache>,
}

/// Intermediate values kept by [`Network::forward_cached`] for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    conv: Vec<ConvStage>,
    trunk_shape: [usize; 4],
    dense_in: Vec<Array2<f64>>,
    dense_out: Vec<Array2<f64>>,
    head_in: Array2<f64>,
    output: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub kind: NetKind,
    pub spec: NetworkSpec,
    pub input: [usize; 2],
    convs: Vec<Conv2d>,
    dense: Vec<Dense>,
    head: Dense,
}

impl Network {
    pub fn new<R: Rng + ?Sized>(
        kind: NetKind,
        spec: &NetworkSpec,
        rows: usize,
        beams: usize,
        rng: &mut R,
    ) -> Result<Network, PolicyError> {
        let [c, h, w] = spec.trunk_shape(rows, beams)?;
        let mut in_ch = 1;
        let convs = spec
            .conv
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let conv = Conv2d::new(&format!("conv{i}"), in_ch, l.channels, l.kernel, l.stride, rng);
                in_ch = l.channels;
                conv
            })
            .collect();
        let mut width = c * h * w + GOAL_DIM + if kind == NetKind::Critic { ACTION_DIM } else { 0 };
        let dense = spec
            .dense
            .iter()
            .enumerate()
            .map(|(i, &out)| {
                let d = Dense::new(&format!("dense{i}"), width, out, None, rng);
                width = out;
                d
            })
            .collect();
        let outputs = match kind {
            NetKind::Actor => ACTION_DIM,
            NetKind::Critic => 1,
        };
        let head = Dense::new("head", width, outputs, Some(spec.head_init), rng);
        Ok(Network {
            kind,
            spec: spec.clone(),
            input: [rows, beams],
            convs,
            dense,
            head,
        })
    }

    pub fn outputs(&self) -> usize {
        self.head.outputs
    }

    fn extra_inputs(&self) -> usize {
        GOAL_DIM + if self.kind == NetKind::Critic { ACTION_DIM } else { 0 }
    }

    pub fn params(&self) -> Vec<&Param> {
        let mut v = Vec::new();
        for c in &self.convs {
            v.push(&c.weight);
            v.push(&c.bias);
        }
        for d in self.dense.iter().chain(std::iter::once(&self.head)) {
            v.push(&d.weight);
            v.push(&d.bias);
        }
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut v = Vec::new();
        for c in &mut self.convs {
            v.push(&mut c.weight);
            v.push(&mut c.bias);
        }
        for d in self.dense.iter_mut().chain(std::iter::once(&mut self.head)) {
            v.push(&mut d.weight);
            v.push(&mut d.bias);
        }
        v
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(Param::zero_grad);
    }

    fn check_inputs(
        &self,
        scans: &ArrayView4<'_, f64>,
        goals: &ArrayView2<'_, f64>,
        actions: Option<&ArrayView2<'_, f64>>,
    ) -> Result<(), PolicyError> {
        let (n, c, h, w) = scans.dim();
        let mismatch = |what, expected: String, got: String| Err(PolicyError::ShapeMismatch { what, expected, got });
        if c != 1 || [h, w] != self.input {
            return mismatch(
                "scan tensor",
                format!("[N, 1, {}, {}]", self.input[0], self.input[1]),
                format!("{:?}", scans.shape()),
            );
        }
        if goals.dim() != (n, GOAL_DIM) {
            return mismatch("goal matrix", format!("[{n}, {GOAL_DIM}]"), format!("{:?}", goals.shape()));
        }
        match (self.kind, actions) {
            (NetKind::Critic, Some(a)) if a.dim() == (n, ACTION_DIM) => Ok(()),
            (NetKind::Critic, Some(a)) => mismatch("action matrix", format!("[{n}, {ACTION_DIM}]"), format!("{:?}", a.shape())),
            (NetKind::Critic, None) => mismatch("action matrix", format!("[{n}, {ACTION_DIM}]"), "none".into()),
            (NetKind::Actor, None) => Ok(()),
            (NetKind::Actor, Some(_)) => mismatch("action matrix", "none".into(), "actions given to actor".into()),
        }
    }

    pub fn forward(
        &self,
        scans: ArrayView4<'_, f64>,
        goals: ArrayView2<'_, f64>,
        actions: Option<ArrayView2<'_, f64>>,
    ) -> Result<Array2<f64>, PolicyError> {
        Ok(self.forward_cached(scans, goals, actions)?.1.output)
    }

    pub fn forward_cached(
        &self,
        scans: ArrayView4<'_, f64>,
        goals: ArrayView2<'_, f64>,
        actions: Option<ArrayView2<'_, f64>>,
    ) -> Result<(Array2<f64>, ForwardCache), PolicyError> {
        self.check_inputs(&scans, &goals, actions.as_ref())?;
        let mut stages = Vec::with_capacity(self.convs.len());
        let mut h: Option<Array4<f64>> = None;
        for (conv, spec) in self.convs.iter().zip(&self.spec.conv) {
            let input = h.as_ref().map(|a| a.view()).unwrap_or(scans);
            let (mut y, cc) = conv.forward(input);
            relu_in_place(&mut y);
            let (next, pool) = match spec.pool {
                Some(window) => {
                    let (p, pc) = MaxPool2d { window }.forward(y.view());
                    (p, Some(pc))
                }
                None => (y.clone(), None),
            };
            stages.push(ConvStage {
                conv: cc,
                activated: y,
                pool,
            });
            h = Some(next);
        }
        let trunk = h.unwrap_or_else(|| scans.to_owned());
        let (n, c, th, tw) = trunk.dim();
        let mut extra = vec![goals];
        extra.extend(actions);
        let mut x = flatten_concat(&trunk, &extra);
        let mut dense_in = Vec::with_capacity(self.dense.len());
        let mut dense_out = Vec::with_capacity(self.dense.len());
        for d in &self.dense {
            let mut y = d.forward(x.view());
            relu_in_place(&mut y);
            dense_in.push(x);
            dense_out.push(y.clone());
            x = y;
        }
        let mut out = self.head.forward(x.view());
        if let (NetKind::Actor, OutputActivation::ScaledTanh { scale }) = (self.kind, self.spec.actor_output) {
            out.mapv_inplace(|v| scale * v.tanh());
        }
        let cache = ForwardCache {
            conv: stages,
            trunk_shape: [n, c, th, tw],
            dense_in,
            dense_out,
            head_in: x,
            output: out.clone(),
        };
        Ok((out, cache))
    }

    /// Backpropagates `grad_out` (gradient of the loss w.r.t. the output).
    /// Parameter gradients are accumulated only when `param_grads` is set;
    /// the returned matrix is the gradient w.r.t. the goal (and action)
    /// columns.
    pub fn backward(&mut self, cache: &ForwardCache, grad_out: &Array2<f64>, param_grads: bool) -> Array2<f64> {
        let mut g = grad_out.clone();
        if let (NetKind::Actor, OutputActivation::ScaledTanh { scale }) = (self.kind, self.spec.actor_output) {
            ndarray::Zip::from(&mut g)
                .and(&cache.output)
                .for_each(|g, &y| *g *= scale - y * y / scale);
        }
        g = self.head.backward(cache.head_in.view(), &g, param_grads);
        for (i, d) in self.dense.iter_mut().enumerate().rev() {
            relu_backward(&cache.dense_out[i], &mut g);
            g = d.backward(cache.dense_in[i].view(), &g, param_grads);
        }
        let [n, c, h, w] = cache.trunk_shape;
        let flat = c * h * w;
        let extra = g.slice(s![.., flat..flat + self.extra_inputs()]).to_owned();
        if param_grads && !self.convs.is_empty() {
            let mut g4 = g
                .slice(s![.., ..flat])
                .to_owned()
                .into_shape_with_order((n, c, h, w))
                .expect("trunk shape");
            for (i, conv) in self.convs.iter_mut().enumerate().rev() {
                let stage = &cache.conv[i];
                if let (Some(pc), Some(window)) = (&stage.pool, self.spec.conv[i].pool) {
                    g4 = MaxPool2d { window }.backward(pc, &g4);
                }
                relu_backward(&stage.activated, &mut g4);
                match conv.backward(&stage.conv, &g4, true, i > 0) {
                    Some(next) => g4 = next,
                    None => break,
                }
            }
        }
        extra
    }

    /// Convenience single-observation actor call.
    pub fn act(&self, feature: &MotionFeature) -> Result<Action, PolicyError> {
        if self.kind != NetKind::Actor {
            return Err(PolicyError::InvalidArchitecture("act called on a critic".into()));
        }
        let batch = FeatureBatch::from_features([feature])?;
        let out = self.forward(batch.scans.view(), batch.goals.view(), None)?;
        Ok(Action::new(out[[0, 0]], out[[0, 1]]))
    }

    /// Copies parameter values from `other`, which must share the layout.
    pub fn copy_from(&mut self, other: &Network) {
        for (d, s) in self.params_mut().into_iter().zip(other.params()) {
            d.value.copy_from_slice(&s.value);
        }
    }

    /// `θ' ← τ θ + (1 − τ) θ'`.
    pub fn soft_update_from(&mut self, online: &Network, tau: f64) {
        for (t, o) in self.params_mut().into_iter().zip(online.params()) {
            for (tv, ov) in t.value.iter_mut().zip(&o.value) {
                *tv = tau * ov + (1.0 - tau) * *tv;
            }
        }
    }

    pub fn set_all(&mut self, value: f64) {
        for p in self.params_mut() {
            p.value.iter_mut().for_each(|v| *v = value);
        }
    }
}
