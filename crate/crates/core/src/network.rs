//! The parallel-block network: shape, flat weight storage, initialization and
//! evaluation.
//!
//! Each of the `K` blocks is a fully connected logistic network of depth `L`:
//! layers `1..L-1` hold `r` neurons and layer `L` holds a single neuron. The
//! network output is `sum_k w_out[k] * top_k(x)`.
//!
//! Weights of level `l` connect layer `l` to layer `l + 1` (level 0 reads the
//! input). Level `L` is the scalar outer weight of a block. The flat layout is
//! block-major; inside a block the levels follow in increasing order, and
//! inside a level the weights are row-major over `(row, col)` with the bias in
//! column 0.
//!
//! The weight recursion is written for arbitrary neuron indices at every
//! layer, but the weight count only works out when the top layer of a block
//! has one neuron. That is the shape implemented here.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::{logistic_in_place, logistic};
use crate::error::{Error, Result};
use crate::linalg::{affine_row, axpy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Architecture {
    /// Number of parallel blocks `K`.
    pub blocks: usize,
    /// Depth `L` of every block (at least 2).
    pub depth: usize,
    /// Width `r` of the layers `1..L-1`.
    pub width: usize,
    /// Input dimension `d`.
    pub input_dim: usize,
}

/// Structured position of a single weight.
///
/// `row` is the receiving neuron (0-based) and `col` the sending neuron, with
/// `col == 0` the bias. The outer weight of block `k` is
/// `(k, depth, 0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WeightIndex {
    pub block: usize,
    pub level: usize,
    pub row: usize,
    pub col: usize,
}

impl Architecture {
    pub fn new(blocks: usize, depth: usize, width: usize, input_dim: usize) -> Result<Self> {
        let arch = Architecture {
            blocks,
            depth,
            width,
            input_dim,
        };
        arch.validate()?;
        Ok(arch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.width == 0 || self.input_dim == 0 {
            return Err(Error::InvalidArchitecture(format!(
                "blocks, width and input dimension must be positive (got K={}, r={}, d={})",
                self.blocks, self.width, self.input_dim
            )));
        }
        if self.depth < 2 {
            return Err(Error::InvalidArchitecture(format!(
                "depth must be at least 2 (got {})",
                self.depth
            )));
        }
        Ok(())
    }

    /// `K (1 + (r+1) + (L-2) r (r+1) + r (d+1))`.
    pub fn param_count(&self) -> usize {
        self.blocks * self.block_len()
    }

    pub fn block_len(&self) -> usize {
        let r = self.width;
        1 + (r + 1) + (self.depth - 2) * r * (r + 1) + r * (self.input_dim + 1)
    }

    /// `(rows, cols)` of weight level `level`, bias column included.
    pub fn level_shape(&self, level: usize) -> (usize, usize) {
        let r = self.width;
        match level {
            0 => (r, self.input_dim + 1),
            l if l < self.depth - 1 => (r, r + 1),
            l if l == self.depth - 1 => (1, r + 1),
            l if l == self.depth => (1, 1),
            _ => (0, 0),
        }
    }

    /// Offset of level `level` inside a block.
    pub fn level_offset(&self, level: usize) -> usize {
        (0..level)
            .map(|l| {
                let (rows, cols) = self.level_shape(l);
                rows * cols
            })
            .sum()
    }

    pub fn outer_offset(&self) -> usize {
        self.block_len() - 1
    }

    pub fn flat_index(&self, idx: WeightIndex) -> Option<usize> {
        if idx.block >= self.blocks || idx.level > self.depth {
            return None;
        }
        let (rows, cols) = self.level_shape(idx.level);
        if idx.row >= rows || idx.col >= cols {
            return None;
        }
        Some(idx.block * self.block_len() + self.level_offset(idx.level) + idx.row * cols + idx.col)
    }

    pub fn weight_index(&self, flat: usize) -> Option<WeightIndex> {
        if flat >= self.param_count() {
            return None;
        }
        let block = flat / self.block_len();
        let mut rem = flat % self.block_len();
        for level in 0..=self.depth {
            let (rows, cols) = self.level_shape(level);
            if rem < rows * cols {
                return Some(WeightIndex {
                    block,
                    level,
                    row: rem / cols,
                    col: rem % cols,
                });
            }
            rem -= rows * cols;
        }
        None
    }

    /// All structured indices in flat order.
    pub fn indices(&self) -> impl Iterator<Item = WeightIndex> + '_ {
        (0..self.blocks).flat_map(move |block| {
            (0..=self.depth).flat_map(move |level| {
                let (rows, cols) = self.level_shape(level);
                (0..rows).flat_map(move |row| {
                    (0..cols).map(move |col| WeightIndex {
                        block,
                        level,
                        row,
                        col,
                    })
                })
            })
        })
    }

    /// Rows of activations stored per block by the batch kernels: `L-1`
    /// hidden layers of `r` neurons plus the top neuron.
    pub(crate) fn activation_rows(&self) -> usize {
        (self.depth - 1) * self.width + 1
    }
}

/// Bounds of the uniform initialization laws: `[-A, A]` for input weights,
/// `[-B, B]` for all other non-outer weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitBounds {
    pub a: f64,
    pub b: f64,
}

impl InitBounds {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "initialization bounds must be finite and nonnegative (got A={a}, B={b})"
            )));
        }
        Ok(InitBounds { a, b })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    arch: Architecture,
    values: Vec<f64>,
}

impl WeightVector {
    pub fn zeros(arch: Architecture) -> Self {
        WeightVector {
            arch,
            values: vec![0.0; arch.param_count()],
        }
    }

    pub fn from_values(arch: Architecture, values: Vec<f64>) -> Result<Self> {
        arch.validate()?;
        if values.len() != arch.param_count() {
            return Err(Error::DimensionMismatch {
                expected: arch.param_count(),
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!("weight {pos} is not finite")));
        }
        Ok(WeightVector { arch, values })
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, idx: WeightIndex) -> Option<f64> {
        self.arch.flat_index(idx).map(|i| self.values[i])
    }

    pub fn set(&mut self, idx: WeightIndex, value: f64) -> Result<()> {
        let i = self
            .arch
            .flat_index(idx)
            .ok_or_else(|| Error::Domain(format!("no weight at {idx:?}")))?;
        if !value.is_finite() {
            return Err(Error::InvalidData("weights must be finite".into()));
        }
        self.values[i] = value;
        Ok(())
    }

    pub fn block(&self, k: usize) -> &[f64] {
        let len = self.arch.block_len();
        &self.values[k * len..(k + 1) * len]
    }

    pub fn outer(&self, k: usize) -> f64 {
        self.block(k)[self.arch.outer_offset()]
    }

    pub fn outer_weights(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.arch.blocks).map(move |k| self.outer(k))
    }

    /// Euclidean distance to another weight vector of the same shape.
    pub fn distance(&self, other: &WeightVector) -> f64 {
        distance_sq(&self.values, &other.values).sqrt()
    }

    /// Network output at a single input.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: self.arch.input_dim,
                got: x.len(),
            });
        }
        let mut out = [0.0];
        let mut batch = BatchEval::new(&self.arch, x, 1);
        batch.evaluate(self, &mut out);
        Ok(out[0])
    }

    /// Network outputs at `n` inputs stored row-major in `xs` (`n * d` values).
    pub fn forward_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        let d = self.arch.input_dim;
        if !xs.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: xs.len() % d,
            });
        }
        let n = xs.len() / d;
        let mut out = vec![0.0; n];
        if n > 0 {
            BatchEval::new(&self.arch, xs, n).evaluate(self, &mut out);
        }
        Ok(out)
    }

    /// The truncated estimate `T_beta(f_w(x))`.
    pub fn predict_truncated(&self, x: &[f64], beta: f64) -> Result<f64> {
        if !(beta > 0.0) {
            return Err(Error::Domain(format!("truncation level must be positive (got {beta})")));
        }
        Ok(truncate(self.forward(x)?, beta))
    }
}

/// Number of weights of an architecture.
pub fn param_count(arch: &Architecture) -> usize {
    arch.param_count()
}

/// `T_beta z = max(min(z, beta), -beta)`.
#[inline]
pub fn truncate(z: f64, beta: f64) -> f64 {
    z.min(beta).max(-beta)
}

/// Draws `w^(0)`: outer weights zero, levels `1..L-1` uniform on `[-B, B]`,
/// level 0 uniform on `[-A, A]`, all independent.
pub fn init_weights<R: Rng + ?Sized>(arch: &Architecture, bounds: InitBounds, rng: &mut R) -> WeightVector {
    let mut w = WeightVector::zeros(*arch);
    let level1 = arch.level_offset(1);
    let outer = arch.outer_offset();
    let len = arch.block_len();
    for block in w.values.chunks_exact_mut(len) {
        for (pos, v) in block.iter_mut().enumerate() {
            *v = if pos < level1 {
                uniform_symmetric(rng, bounds.a)
            } else if pos < outer {
                uniform_symmetric(rng, bounds.b)
            } else {
                0.0
            };
        }
    }
    w
}

fn uniform_symmetric<R: Rng + ?Sized>(rng: &mut R, bound: f64) -> f64 {
    // Always consume one draw so the stream layout does not depend on the bounds.
    let u: f64 = rng.gen();
    bound * (2.0 * u - 1.0)
}

pub(crate) fn distance_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Inputs transposed to one contiguous row per feature, the layout used by
/// the batch kernels.
pub(crate) fn transpose_inputs(xs: &[f64], n: usize, d: usize) -> Vec<f64> {
    let mut cols = vec![0.0; n * d];
    for s in 0..n {
        for j in 0..d {
            cols[j * n + s] = xs[s * d + j];
        }
    }
    cols
}

/// Forward evaluation of all blocks over a batch of inputs.
pub(crate) struct BatchEval {
    arch: Architecture,
    n: usize,
    x_cols: Vec<f64>,
    /// `K * activation_rows * n` activations, block-major.
    pub(crate) acts: Vec<f64>,
}

impl BatchEval {
    pub(crate) fn new(arch: &Architecture, xs: &[f64], n: usize) -> Self {
        BatchEval {
            arch: *arch,
            n,
            x_cols: transpose_inputs(xs, n, arch.input_dim),
            acts: vec![0.0; arch.blocks * arch.activation_rows() * n],
        }
    }

    pub(crate) fn n(&self) -> usize {
        self.n
    }

    pub(crate) fn x_cols(&self) -> &[f64] {
        &self.x_cols
    }

    /// Fills the activation cache and writes `f_w(x_s)` into `out`.
    pub(crate) fn evaluate(&mut self, w: &WeightVector, out: &mut [f64]) {
        let arch = self.arch;
        let n = self.n;
        let rows = arch.activation_rows();
        out.fill(0.0);
        for k in 0..arch.blocks {
            let block = w.block(k);
            let acts = &mut self.acts[k * rows * n..(k + 1) * rows * n];
            block_forward(&arch, block, &self.x_cols, n, acts);
            let outer = block[arch.outer_offset()];
            let top = &acts[(rows - 1) * n..];
            for (o, g) in out.iter_mut().zip(top) {
                *o += outer * g;
            }
        }
    }
}

/// Forward pass of one block over `n` inputs. `acts` receives the hidden
/// layers row by row followed by the top neuron.
pub(crate) fn block_forward(arch: &Architecture, block: &[f64], x_cols: &[f64], n: usize, acts: &mut [f64]) {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx") {
        // SAFETY: the feature was detected at runtime.
        unsafe { block_forward_avx(arch, block, x_cols, n, acts) };
        return;
    }
    block_forward_generic(arch, block, x_cols, n, acts)
}

// Same code compiled for 4-wide vectors. No fused multiply-add is enabled, so
// results are bit-identical to the generic build.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx")]
unsafe fn block_forward_avx(arch: &Architecture, block: &[f64], x_cols: &[f64], n: usize, acts: &mut [f64]) {
    block_forward_generic(arch, block, x_cols, n, acts)
}

#[inline(always)]
fn block_forward_generic(arch: &Architecture, block: &[f64], x_cols: &[f64], n: usize, acts: &mut [f64]) {
    let r = arch.width;
    let d = arch.input_dim;

    let (first, rest) = acts.split_at_mut(r * n);
    for i in 0..r {
        let wrow = &block[i * (d + 1)..(i + 1) * (d + 1)];
        let z = &mut first[i * n..(i + 1) * n];
        z.fill(wrow[0]);
        for j in 0..d {
            axpy(wrow[j + 1], &x_cols[j * n..(j + 1) * n], z);
        }
        logistic_in_place(z);
    }

    let mut prev = first;
    let mut rest = rest;
    for level in 1..arch.depth {
        let (rows, cols) = arch.level_shape(level);
        let off = arch.level_offset(level);
        let (cur, tail) = rest.split_at_mut(rows * n);
        let w = &block[off..off + rows * cols];
        for (wrow, z) in w.chunks_exact(cols).zip(cur.chunks_exact_mut(n)) {
            affine_row(wrow[0], &wrow[1..], prev, n, z);
        }
        logistic_in_place(cur);
        prev = cur;
        rest = tail;
    }
}

/// Block output `f_{k,1}^{(L)}(x)` at a single input, used where only one
/// point is needed and no cache is kept.
pub fn block_output(w: &WeightVector, k: usize, x: &[f64]) -> f64 {
    let arch = w.arch;
    let block = w.block(k);
    let r = arch.width;
    let d = arch.input_dim;
    let mut layer: Vec<f64> = (0..r)
        .map(|i| {
            let row = &block[i * (d + 1)..(i + 1) * (d + 1)];
            let mut z = row[0];
            for j in 0..d {
                z += row[j + 1] * x[j];
            }
            logistic(z)
        })
        .collect();
    for level in 1..arch.depth {
        let (rows, cols) = arch.level_shape(level);
        let off = arch.level_offset(level);
        layer = (0..rows)
            .map(|i| {
                let row = &block[off + i * cols..off + (i + 1) * cols];
                let mut z = row[0];
                for j in 0..r {
                    z += row[j + 1] * layer[j];
                }
                logistic(z)
            })
            .collect();
    }
    layer[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedStream;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn arch(k: usize, l: usize, r: usize, d: usize) -> Architecture {
        Architecture::new(k, l, r, d).unwrap()
    }

    #[test]
    fn param_count_examples() {
        assert_eq!(arch(1, 4, 8, 1).param_count(), 170);
        assert_eq!(arch(800, 4, 8, 1).param_count(), 136_000);
        assert_eq!(arch(1, 2, 1, 1).param_count(), 5);
    }

    #[test]
    fn tiny_net_enumerated_by_hand() {
        // K=1, L=2, r=1, d=1: input weight row (bias, slope), top row (bias,
        // weight), outer weight.
        let a = arch(1, 2, 1, 1);
        let names: Vec<_> = a.indices().map(|i| (i.level, i.row, i.col)).collect();
        assert_eq!(names, vec![(0, 0, 0), (0, 0, 1), (1, 0, 0), (1, 0, 1), (2, 0, 0)]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(Architecture::new(0, 4, 8, 1).is_err());
        assert!(Architecture::new(1, 1, 8, 1).is_err());
        assert!(Architecture::new(1, 4, 0, 1).is_err());
        assert!(Architecture::new(1, 4, 8, 0).is_err());
        assert!(InitBounds::new(-1.0, 2.0).is_err());
    }

    #[test]
    fn zero_bounds_give_zero_weights() {
        let a = arch(3, 3, 2, 2);
        let w = init_weights(&a, InitBounds { a: 0.0, b: 0.0 }, &mut SeedStream::new(1).rng());
        assert!(w.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_sets_outer_weights_to_zero_and_respects_bounds() {
        let a = arch(5, 4, 3, 2);
        let w = init_weights(&a, InitBounds { a: 7.0, b: 0.5 }, &mut SeedStream::new(9).rng());
        for idx in a.indices() {
            let v = w.get(idx).unwrap();
            match idx.level {
                0 => assert!(v.abs() <= 7.0),
                l if l == a.depth => assert_eq!(v, 0.0),
                _ => assert!(v.abs() <= 0.5),
            }
        }
        assert!(w.outer_weights().all(|o| o == 0.0));
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let a = arch(4, 3, 3, 1);
        let b = InitBounds { a: 10.0, b: 2.0 };
        let w1 = init_weights(&a, b, &mut SeedStream::new(5).rng());
        let w2 = init_weights(&a, b, &mut SeedStream::new(5).rng());
        let w3 = init_weights(&a, b, &mut SeedStream::new(6).rng());
        assert_eq!(w1, w2);
        assert_ne!(w1, w3);
    }

    #[test]
    fn input_level_is_uniform() {
        // 10^5 level-0 draws with A = 1000: range close to the bounds and a
        // chi-square test over 20 equal cells at the 1% level.
        let a = arch(6250, 2, 8, 1);
        let w = init_weights(&a, InitBounds { a: 1000.0, b: 20.0 }, &mut SeedStream::new(11).rng());
        let draws: Vec<f64> = a
            .indices()
            .filter(|i| i.level == 0)
            .map(|i| w.get(i).unwrap())
            .collect();
        assert_eq!(draws.len(), 100_000);
        let min = draws.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = draws.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!((-1000.0..=-990.0).contains(&min), "min {min}");
        assert!((990.0..=1000.0).contains(&max), "max {max}");
        let cells = 20;
        let mut counts = vec![0usize; cells];
        for v in &draws {
            let c = (((v + 1000.0) / 2000.0) * cells as f64).floor() as usize;
            counts[c.min(cells - 1)] += 1;
        }
        let expected = draws.len() as f64 / cells as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99th percentile of chi-square with 19 degrees of freedom.
        assert!(chi2 < 36.191, "chi2 {chi2}");
    }

    #[test]
    fn fresh_weights_give_zero_output() {
        let a = arch(7, 4, 3, 2);
        let w = init_weights(&a, InitBounds { a: 1000.0, b: 20.0 }, &mut SeedStream::new(2).rng());
        for x in [[0.0, 0.0], [0.3, -0.9], [1e3, -1e3]] {
            assert_eq!(w.forward(&x).unwrap(), 0.0);
        }
    }

    #[test]
    fn half_from_zero_weights() {
        let a = arch(1, 2, 1, 1);
        let mut w = WeightVector::zeros(a);
        w.set(WeightIndex { block: 0, level: 2, row: 0, col: 0 }, 1.0).unwrap();
        assert_eq!(w.forward(&[0.7]).unwrap(), 0.5);
    }

    #[test]
    fn forward_rejects_wrong_dimension() {
        let w = WeightVector::zeros(arch(1, 2, 1, 2));
        assert_eq!(
            w.forward(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn truncation_examples() {
        assert_eq!(truncate(0.4, 46.0), 0.4);
        assert_eq!(truncate(100.0, 46.0), 46.0);
        assert_eq!(truncate(-100.0, 46.0), -46.0);
        let w = WeightVector::zeros(arch(1, 2, 1, 1));
        assert!(w.predict_truncated(&[0.0], 0.0).is_err());
    }

    /// Straightforward recursive evaluator written against the structured
    /// indices only, with `f64::exp`.
    fn reference_forward(w: &WeightVector, x: &[f64]) -> f64 {
        let a = *w.arch();
        let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
        fn neuron(
            w: &WeightVector,
            a: &Architecture,
            k: usize,
            layer: usize,
            i: usize,
            x: &[f64],
            sig: &dyn Fn(f64) -> f64,
        ) -> f64 {
            let level = layer - 1;
            let g = |col| w.get(WeightIndex { block: k, level, row: i, col }).unwrap();
            let mut z = g(0);
            if layer == 1 {
                for j in 0..a.input_dim {
                    z += g(j + 1) * x[j];
                }
            } else {
                for j in 0..a.width {
                    z += g(j + 1) * neuron(w, a, k, layer - 1, j, x, sig);
                }
            }
            sig(z)
        }
        (0..a.blocks)
            .map(|k| {
                let outer = w.get(WeightIndex { block: k, level: a.depth, row: 0, col: 0 }).unwrap();
                outer * neuron(w, &a, k, a.depth, 0, x, &sig)
            })
            .sum()
    }

    #[test]
    fn forward_matches_recursive_reference() {
        use rand::Rng;
        let a = arch(2, 3, 2, 2);
        let mut rng = SeedStream::new(3).rng();
        let values: Vec<f64> = (0..a.param_count()).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let w = WeightVector::from_values(a, values).unwrap();
        let mut xs = Vec::new();
        for _ in 0..100 {
            let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let got = w.forward(&x).unwrap();
            let want = reference_forward(&w, &x);
            assert!((got - want).abs() <= 1e-12 * want.abs().max(1e-300), "{got} vs {want}");
            xs.extend_from_slice(&x);
        }
        let many = w.forward_many(&xs).unwrap();
        for (s, v) in many.iter().enumerate() {
            assert_eq!(*v, w.forward(&xs[2 * s..2 * s + 2]).unwrap());
        }
    }

    #[test]
    fn block_output_matches_batch_kernel() {
        use rand::Rng;
        let a = arch(3, 4, 3, 1);
        let mut rng = SeedStream::new(4).rng();
        let values: Vec<f64> = (0..a.param_count()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let w = WeightVector::from_values(a, values).unwrap();
        let x = [0.37];
        let direct: f64 = (0..3).map(|k| w.outer(k) * block_output(&w, k, &x)).sum();
        assert!((direct - w.forward(&x).unwrap()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn index_bijection(k in 1usize..4, l in 2usize..5, r in 1usize..5, d in 1usize..4) {
            let a = arch(k, l, r, d);
            let mut seen = HashSet::new();
            for (pos, idx) in a.indices().enumerate() {
                let flat = a.flat_index(idx).unwrap();
                prop_assert_eq!(flat, pos);
                prop_assert_eq!(a.weight_index(flat), Some(idx));
                prop_assert!(seen.insert(flat));
            }
            prop_assert_eq!(seen.len(), a.param_count());
            prop_assert!(a.weight_index(a.param_count()).is_none());
        }

        #[test]
        fn output_bounded_by_outer_mass(seed in 0u64..1000, x in -5.0f64..5.0) {
            use rand::Rng;
            let a = arch(3, 3, 2, 1);
            let mut rng = SeedStream::new(seed).rng();
            let values: Vec<f64> = (0..a.param_count()).map(|_| rng.gen_range(-4.0..4.0)).collect();
            let w = WeightVector::from_values(a, values).unwrap();
            let bound: f64 = w.outer_weights().map(f64::abs).sum();
            prop_assert!(w.forward(&[x]).unwrap().abs() <= bound);
            let beta = 0.5;
            let t = w.predict_truncated(&[x], beta).unwrap();
            prop_assert!((-beta..=beta).contains(&t));
        }
    }
}
