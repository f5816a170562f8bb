//! Fully connected logistic network trained with ADAM: the standard
//! estimate the parallel-block network is compared against.
//!
//! `f(x) = sum_j w_out[j] * h_L[j](x)` where `h_1..h_L` are logistic hidden
//! layers of widths `k_1..k_L`. The output layer has no bias. Hidden levels
//! are stored row-major with the bias in column 0, followed by the output
//! weights.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::activation::{logistic, logistic_in_place, logistic_slope};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, gemm, sum, View};
use crate::network::{transpose_inputs, truncate};
use crate::rng::{SeedStream, TAG_CELL};
use crate::truncation_level;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcArchitecture {
    pub input_dim: usize,
    /// Widths `k_1..k_L` of the hidden layers.
    pub widths: Vec<usize>,
}

impl FcArchitecture {
    pub fn new(input_dim: usize, widths: Vec<usize>) -> Result<Self> {
        if input_dim == 0 || widths.is_empty() || widths.contains(&0) {
            return Err(Error::InvalidArchitecture(format!(
                "fully connected network needs d > 0 and positive widths (got d={input_dim}, widths={widths:?})"
            )));
        }
        Ok(FcArchitecture { input_dim, widths })
    }

    /// `L` hidden layers of equal width.
    pub fn uniform(input_dim: usize, hidden_layers: usize, width: usize) -> Result<Self> {
        FcArchitecture::new(input_dim, vec![width; hidden_layers])
    }

    pub fn hidden_layers(&self) -> usize {
        self.widths.len()
    }

    fn fan_in(&self, level: usize) -> usize {
        if level == 0 {
            self.input_dim
        } else {
            self.widths[level - 1]
        }
    }

    /// `(rows, cols)` of hidden level `level`, bias column included.
    fn level_shape(&self, level: usize) -> (usize, usize) {
        (self.widths[level], self.fan_in(level) + 1)
    }

    fn level_offset(&self, level: usize) -> usize {
        (0..level)
            .map(|l| {
                let (r, c) = self.level_shape(l);
                r * c
            })
            .sum()
    }

    fn output_offset(&self) -> usize {
        self.level_offset(self.hidden_layers())
    }

    pub fn param_count(&self) -> usize {
        self.output_offset() + self.widths[self.hidden_layers() - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitScheme {
    /// Input level uniform on `[-a, a]`, inner levels uniform on `[-b, b]`,
    /// output weights zero.
    PaperStyle { a: f64, b: f64 },
    GlorotUniform,
    GlorotNormal,
    HeUniform,
    HeNormal,
}

impl InitScheme {
    pub fn name(&self) -> String {
        match self {
            InitScheme::PaperStyle { a, b } => format!("uniform_a{a}_b{b}"),
            InitScheme::GlorotUniform => "glorot_uniform".into(),
            InitScheme::GlorotNormal => "glorot_normal".into(),
            InitScheme::HeUniform => "he_uniform".into(),
            InitScheme::HeNormal => "he_normal".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if let InitScheme::PaperStyle { a, b } = *self {
            crate::network::InitBounds::new(a, b)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcNetwork {
    arch: FcArchitecture,
    params: Vec<f64>,
}

impl FcNetwork {
    pub fn from_params(arch: FcArchitecture, params: Vec<f64>) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(Error::DimensionMismatch {
                expected: arch.param_count(),
                got: params.len(),
            });
        }
        Ok(FcNetwork { arch, params })
    }

    pub fn init<R: Rng + ?Sized>(arch: &FcArchitecture, scheme: InitScheme, rng: &mut R) -> Result<Self> {
        scheme.validate()?;
        let mut params = vec![0.0; arch.param_count()];
        let levels = arch.hidden_layers();
        for level in 0..=levels {
            let (off, rows, cols, fan_in, fan_out, has_bias) = if level < levels {
                let (r, c) = arch.level_shape(level);
                (arch.level_offset(level), r, c, arch.fan_in(level), r, true)
            } else {
                let k = arch.widths[levels - 1];
                (arch.output_offset(), 1, k, k, 1, false)
            };
            let (fi, fo) = (fan_in as f64, fan_out as f64);
            for row in 0..rows {
                for col in 0..cols {
                    let is_bias = has_bias && col == 0;
                    let v = match scheme {
                        InitScheme::PaperStyle { a, b } => {
                            let u: f64 = rng.gen();
                            if level == levels {
                                0.0
                            } else if level == 0 {
                                a * (2.0 * u - 1.0)
                            } else {
                                b * (2.0 * u - 1.0)
                            }
                        }
                        _ if is_bias => 0.0,
                        InitScheme::GlorotUniform => {
                            let lim = (6.0 / (fi + fo)).sqrt();
                            rng.gen_range(-lim..lim)
                        }
                        InitScheme::GlorotNormal => normal(rng, (2.0 / (fi + fo)).sqrt()),
                        InitScheme::HeUniform => {
                            let lim = (6.0 / fi).sqrt();
                            rng.gen_range(-lim..lim)
                        }
                        InitScheme::HeNormal => normal(rng, (2.0 / fi).sqrt()),
                    };
                    params[off + row * cols + col] = v;
                }
            }
        }
        Ok(FcNetwork {
            arch: arch.clone(),
            params,
        })
    }

    pub fn arch(&self) -> &FcArchitecture {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn output_weights(&self) -> &[f64] {
        &self.params[self.arch.output_offset()..]
    }

    /// Network output at one input.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        let arch = &self.arch;
        if x.len() != arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: arch.input_dim,
                got: x.len(),
            });
        }
        let mut h = x.to_vec();
        for level in 0..arch.hidden_layers() {
            let (rows, cols) = arch.level_shape(level);
            let w = &self.params[arch.level_offset(level)..];
            h = (0..rows)
                .map(|i| {
                    let row = &w[i * cols..(i + 1) * cols];
                    logistic(row[0] + row[1..].iter().zip(&h).map(|(a, b)| a * b).sum::<f64>())
                })
                .collect();
        }
        Ok(self.output_weights().iter().zip(&h).map(|(a, b)| a * b).sum())
    }

    pub fn predict_truncated(&self, x: &[f64], beta: f64) -> Result<f64> {
        Ok(truncate(self.forward(x)?, beta))
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    Normal::new(0.0, sd).expect("standard deviation is positive").sample(rng)
}

/// Output of the network at a single input; see [`FcNetwork::forward`].
pub fn fc_forward(net: &FcNetwork, x: &[f64]) -> Result<f64> {
    net.forward(x)
}

/// Batched forward/backward passes for one network shape and one dataset.
pub struct FcEngine {
    arch: FcArchitecture,
    n: usize,
    x_cols: Vec<f64>,
    ys: Vec<f64>,
    /// Hidden activations, one `k_s x n` block per layer.
    acts: Vec<Vec<f64>>,
    out: Vec<f64>,
    resid: Vec<f64>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl FcEngine {
    pub fn new(arch: &FcArchitecture, data: &Dataset) -> Result<Self> {
        if data.dim() != arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: arch.input_dim,
                got: data.dim(),
            });
        }
        let n = data.len();
        let widest = *arch.widths.iter().max().expect("at least one hidden layer");
        Ok(FcEngine {
            arch: arch.clone(),
            n,
            x_cols: transpose_inputs(data.xs(), n, arch.input_dim),
            ys: data.ys().to_vec(),
            acts: arch.widths.iter().map(|k| vec![0.0; k * n]).collect(),
            out: vec![0.0; n],
            resid: vec![0.0; n],
            delta: vec![0.0; widest * n],
            delta_prev: vec![0.0; widest * n],
        })
    }

    fn forward(&mut self, params: &[f64]) {
        let arch = &self.arch;
        let n = self.n;
        for level in 0..arch.hidden_layers() {
            let (rows, cols) = arch.level_shape(level);
            let w = &params[arch.level_offset(level)..arch.level_offset(level) + rows * cols];
            let (done, rest) = self.acts.split_at_mut(level);
            let input: &[f64] = if level == 0 { &self.x_cols } else { &done[level - 1] };
            let z = &mut rest[0];
            for i in 0..rows {
                z[i * n..(i + 1) * n].fill(w[i * cols]);
            }
            // z += W[:, 1..] * input
            let input = View::rows(input, cols - 1, n, n);
            gemm(1.0, View::rows(&w[1..], rows, cols - 1, cols), input, 1.0, z, n);
            logistic_in_place(z);
        }
        let last = &self.acts[arch.hidden_layers() - 1];
        let w_out = &params[arch.output_offset()..];
        self.out.fill(0.0);
        for (j, wj) in w_out.iter().enumerate() {
            axpy(*wj, &last[j * n..(j + 1) * n], &mut self.out);
        }
    }

    pub fn risk(&mut self, params: &[f64]) -> f64 {
        self.forward(params);
        mse(&self.out, &self.ys)
    }

    /// Gradient of the empirical L2 risk into `grad`; returns the risk.
    pub fn risk_and_gradient(&mut self, params: &[f64], grad: &mut [f64]) -> f64 {
        self.forward(params);
        let arch = &self.arch;
        let n = self.n;
        let scale = 2.0 / n as f64;
        for ((e, o), y) in self.resid.iter_mut().zip(&self.out).zip(&self.ys) {
            *e = scale * (o - y);
        }
        let top = arch.hidden_layers() - 1;
        let k_top = arch.widths[top];
        let out_off = arch.output_offset();
        let last = &self.acts[top];
        for j in 0..k_top {
            let h = &last[j * n..(j + 1) * n];
            grad[out_off + j] = dot(&self.resid, h);
            let wj = params[out_off + j];
            for ((d, e), hv) in self.delta[j * n..(j + 1) * n].iter_mut().zip(&self.resid).zip(h) {
                *d = wj * e * logistic_slope(*hv);
            }
        }
        for level in (0..arch.hidden_layers()).rev() {
            let (rows, cols) = arch.level_shape(level);
            let off = arch.level_offset(level);
            let input: &[f64] = if level == 0 { &self.x_cols } else { &self.acts[level - 1] };
            let delta = &self.delta[..rows * n];
            for i in 0..rows {
                grad[off + i * cols] = sum(&delta[i * n..(i + 1) * n]);
            }
            // grad W[:, 1..] = delta * input^T
            let deltas = View::rows(delta, rows, n, n);
            let input = View::rows(input, cols - 1, n, n);
            gemm(1.0, deltas, input.t(), 0.0, &mut grad[off + 1..off + rows * cols], cols);
            if level > 0 {
                let fan_in = cols - 1;
                let prev = &mut self.delta_prev[..fan_in * n];
                // prev = W[:, 1..]^T * delta
                let w = View::rows(&params[off + 1..off + rows * cols], rows, fan_in, cols);
                gemm(1.0, w.t(), deltas, 0.0, prev, n);
                for (p, h) in prev.iter_mut().zip(&self.acts[level - 1]) {
                    *p *= logistic_slope(*h);
                }
                std::mem::swap(&mut self.delta, &mut self.delta_prev);
            }
        }
        mse(&self.out, &self.ys)
    }
}

fn mse(out: &[f64], ys: &[f64]) -> f64 {
    out.iter().zip(ys).map(|(o, y)| (o - y) * (o - y)).sum::<f64>() / ys.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates of ADAM with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

/// One ADAM update of `params` with gradient `grad`.
pub fn adam_step(cfg: &AdamConfig, state: &mut AdamState, params: &mut [f64], grad: &[f64]) -> Result<()> {
    if state.m.len() != params.len() || grad.len() != params.len() {
        return Err(Error::DimensionMismatch {
            expected: state.m.len(),
            got: grad.len(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.len() {
        let g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

/// Grid and training settings of the baseline estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub hidden_layers: usize,
    pub widths: Vec<usize>,
    /// Candidate numbers of ADAM steps.
    pub steps: Vec<u64>,
    pub n_train: usize,
    pub scheme: InitScheme,
    pub adam: AdamConfig,
    pub c12: f64,
}

impl BaselineConfig {
    /// nnfc-style grid: widths {10, 25, 50, 100, 200}, steps {500, 1000,
    /// 2000}, 80 training points, inputs uniform on `[-1000, 1000]` and inner
    /// weights on `[-20, 20]`.
    pub fn standard(hidden_layers: usize) -> Self {
        BaselineConfig {
            hidden_layers,
            widths: vec![10, 25, 50, 100, 200],
            steps: vec![500, 1000, 2000],
            n_train: 80,
            scheme: InitScheme::PaperStyle { a: 1000.0, b: 20.0 },
            adam: AdamConfig::default(),
            c12: crate::DEFAULT_C12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineFit {
    pub net: FcNetwork,
    pub width: usize,
    pub steps: u64,
    /// Holdout risks in grid order (widths outer, steps inner); `None` for
    /// cells that diverged.
    pub holdout_risks: Vec<Option<f64>>,
    pub beta: f64,
}

impl BaselineFit {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        self.net.predict_truncated(x, self.beta)
    }
}

/// ADAM training from `net`, returning a copy of the weights after each
/// requested step count (`checkpoints` must be increasing).
pub fn train_adam(
    net: &FcNetwork,
    data: &Dataset,
    adam: &AdamConfig,
    checkpoints: &[u64],
) -> Result<Vec<FcNetwork>> {
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("checkpoints must be strictly increasing".into()));
    }
    let mut engine = FcEngine::new(net.arch(), data)?;
    let mut params = net.params.clone();
    let mut grad = vec![0.0; params.len()];
    let mut state = AdamState::new(params.len());
    let mut saved = Vec::with_capacity(checkpoints.len());
    let mut next = checkpoints.iter().peekable();
    let last = checkpoints.last().copied().unwrap_or(0);
    for step in 1..=last {
        let risk = engine.risk_and_gradient(&params, &mut grad);
        if !risk.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Divergence {
                step: step as usize - 1,
                what: "baseline gradient",
            });
        }
        adam_step(adam, &mut state, &mut params, &grad)?;
        if next.peek() == Some(&&step) {
            next.next();
            saved.push(FcNetwork {
                arch: net.arch.clone(),
                params: params.clone(),
            });
        }
    }
    Ok(saved)
}

/// Chooses width and step count of the baseline by sample splitting.
///
/// Every width gets its own initialization substream; the step-count
/// candidates for a width are checkpoints of a single ADAM run, which is the
/// same as training each candidate from the same start.
pub fn train_baseline(data: &Dataset, cfg: &BaselineConfig, stream: SeedStream) -> Result<BaselineFit> {
    if cfg.widths.is_empty() || cfg.steps.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let n = data.len();
    if cfg.n_train == 0 || cfg.n_train >= n {
        return Err(Error::InvalidConfig(format!(
            "training part must leave a non-empty holdout (n_train={}, n={n})",
            cfg.n_train
        )));
    }
    let mut steps = cfg.steps.clone();
    steps.sort_unstable();
    steps.dedup();
    let train = data.slice(0, cfg.n_train)?;
    let test = data.slice(cfg.n_train, n)?;
    let beta = truncation_level(cfg.c12, cfg.n_train);

    let mut best: Option<(f64, FcNetwork, usize, u64)> = None;
    let mut holdout_risks = Vec::new();
    for (wi, &width) in cfg.widths.iter().enumerate() {
        let arch = FcArchitecture::uniform(data.dim(), cfg.hidden_layers, width)?;
        let init = FcNetwork::init(&arch, cfg.scheme, &mut stream.child2(TAG_CELL, wi as u64).rng())?;
        let nets = match train_adam(&init, &train, &cfg.adam, &steps) {
            Ok(nets) => Some(nets),
            Err(e) if e.is_divergence() => None,
            Err(e) => return Err(e),
        };
        for &s in &cfg.steps {
            let risk = nets.as_ref().and_then(|nets| {
                let pos = steps.iter().position(|x| *x == s).expect("step count is in the grid");
                let net = &nets[pos];
                let r = holdout_risk(|x| net.predict_truncated(x, beta), &test).ok()?;
                r.is_finite().then_some(r)
            });
            holdout_risks.push(risk);
            if let (Some(r), Some(nets)) = (risk, nets.as_ref()) {
                if best.as_ref().is_none_or(|(b, ..)| r < *b) {
                    let pos = steps.iter().position(|x| *x == s).expect("step count is in the grid");
                    best = Some((r, nets[pos].clone(), width, s));
                }
            }
        }
    }
    let (_, net, width, steps) = best.ok_or(Error::Divergence {
        step: 0,
        what: "every baseline candidate",
    })?;
    Ok(BaselineFit {
        net,
        width,
        steps,
        holdout_risks,
        beta,
    })
}

pub(crate) fn holdout_risk<F: Fn(&[f64]) -> Result<f64>>(predict: F, test: &Dataset) -> Result<f64> {
    let mut sum = 0.0;
    for i in 0..test.len() {
        let r = test.ys()[i] - predict(test.x(i))?;
        sum += r * r;
    }
    Ok(sum / test.len() as f64)
}
