//! Empirical L2 risk `F_n(w) = (1/n) sum_i (f_w(x_i) - y_i)^2` and its
//! gradient by backpropagation.
//!
//! [`RiskEngine`] keeps the transposed inputs and all per-sample activations
//! between calls, so a gradient descent loop allocates nothing per step. The
//! free functions are convenience wrappers that build a fresh engine.

use crate::activation::logistic_slope;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{dot, gemm, sum, View};
use crate::network::{BatchEval, WeightVector};
use crate::Architecture;

pub struct RiskEngine {
    arch: Architecture,
    eval: BatchEval,
    ys: Vec<f64>,
    out: Vec<f64>,
    resid: Vec<f64>,
    scratch: Scratch,
}

/// Per-block working memory of the backward pass.
struct Scratch {
    delta_a: Vec<f64>,
    delta_b: Vec<f64>,
}

impl RiskEngine {
    pub fn new(arch: &Architecture, data: &Dataset) -> Result<Self> {
        arch.validate()?;
        if data.dim() != arch.input_dim {
            return Err(Error::DimensionMismatch {
                expected: arch.input_dim,
                got: data.dim(),
            });
        }
        let n = data.len();
        let r = arch.width;
        Ok(RiskEngine {
            arch: *arch,
            eval: BatchEval::new(arch, data.xs(), n),
            ys: data.ys().to_vec(),
            out: vec![0.0; n],
            resid: vec![0.0; n],
            scratch: Scratch {
                delta_a: vec![0.0; r * n],
                delta_b: vec![0.0; r * n],
            },
        })
    }

    fn check(&self, w: &WeightVector) -> Result<()> {
        if *w.arch() != self.arch {
            return Err(Error::DimensionMismatch {
                expected: self.arch.param_count(),
                got: w.arch().param_count(),
            });
        }
        Ok(())
    }

    /// Network outputs at the training inputs from the last evaluation.
    pub fn outputs(&self) -> &[f64] {
        &self.out
    }

    pub fn risk(&mut self, w: &WeightVector) -> Result<f64> {
        self.check(w)?;
        self.eval.evaluate(w, &mut self.out);
        Ok(mean_squared_residual(&self.out, &self.ys))
    }

    /// Writes `grad F_n(w)` into `grad` and returns `F_n(w)`.
    pub fn risk_and_gradient(&mut self, w: &WeightVector, grad: &mut [f64]) -> Result<f64> {
        self.check(w)?;
        if grad.len() != self.arch.param_count() {
            return Err(Error::DimensionMismatch {
                expected: self.arch.param_count(),
                got: grad.len(),
            });
        }
        self.eval.evaluate(w, &mut self.out);
        let n = self.eval.n();
        let scale = 2.0 / n as f64;
        for ((e, o), y) in self.resid.iter_mut().zip(&self.out).zip(&self.ys) {
            *e = scale * (o - y);
        }
        let arch = self.arch;
        let len = arch.block_len();
        let rows = arch.activation_rows();
        for k in 0..arch.blocks {
            block_backward(
                &arch,
                w.block(k),
                self.eval.x_cols(),
                n,
                &self.eval.acts[k * rows * n..(k + 1) * rows * n],
                &self.resid,
                &mut grad[k * len..(k + 1) * len],
                &mut self.scratch,
            );
        }
        Ok(mean_squared_residual(&self.out, &self.ys))
    }
}

fn mean_squared_residual(out: &[f64], ys: &[f64]) -> f64 {
    out.iter().zip(ys).map(|(o, y)| (o - y) * (o - y)).sum::<f64>() / ys.len() as f64
}

/// Reverse-mode pass through one block. `resid` holds `(2/n)(f(x_s) - y_s)`.
#[allow(clippy::too_many_arguments)]
fn block_backward(
    arch: &Architecture,
    block: &[f64],
    x_cols: &[f64],
    n: usize,
    acts: &[f64],
    resid: &[f64],
    grad: &mut [f64],
    scratch: &mut Scratch,
) {
    #[cfg(target_arch = "x86_64")]
    if std::is_x86_feature_detected!("avx") {
        // SAFETY: the feature was detected at runtime.
        unsafe { block_backward_avx(arch, block, x_cols, n, acts, resid, grad, scratch) };
        return;
    }
    block_backward_generic(arch, block, x_cols, n, acts, resid, grad, scratch)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx")]
#[allow(clippy::too_many_arguments)]
unsafe fn block_backward_avx(
    arch: &Architecture,
    block: &[f64],
    x_cols: &[f64],
    n: usize,
    acts: &[f64],
    resid: &[f64],
    grad: &mut [f64],
    scratch: &mut Scratch,
) {
    block_backward_generic(arch, block, x_cols, n, acts, resid, grad, scratch)
}

#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn block_backward_generic(
    arch: &Architecture,
    block: &[f64],
    x_cols: &[f64],
    n: usize,
    acts: &[f64],
    resid: &[f64],
    grad: &mut [f64],
    scratch: &mut Scratch,
) {
    let r = arch.width;
    let d = arch.input_dim;
    let depth = arch.depth;
    let outer_at = arch.outer_offset();
    let rows = arch.activation_rows();
    let top = &acts[(rows - 1) * n..rows * n];
    let hidden = |h: usize| &acts[h * r * n..(h + 1) * r * n];

    grad[outer_at] = dot(resid, top);
    let outer = block[outer_at];
    if outer == 0.0 {
        // No path from the inner weights to the output.
        grad[..outer_at].fill(0.0);
        return;
    }

    // Top neuron, fed by the last hidden layer through level L-1.
    let top_off = arch.level_offset(depth - 1);
    let Scratch { delta_a, delta_b } = scratch;
    let d_top = &mut delta_b[..n];
    for ((dt, e), g) in d_top.iter_mut().zip(resid).zip(top) {
        *dt = e * outer * logistic_slope(*g);
    }
    let last = hidden(depth - 2);
    grad[top_off] = sum(d_top);
    for j in 0..r {
        grad[top_off + 1 + j] = dot(d_top, &last[j * n..(j + 1) * n]);
    }
    for j in 0..r {
        let wj = block[top_off + 1 + j];
        let h = &last[j * n..(j + 1) * n];
        let dst = &mut delta_a[j * n..(j + 1) * n];
        for ((o, dt), hv) in dst.iter_mut().zip(d_top.iter()).zip(h) {
            *o = dt * wj * logistic_slope(*hv);
        }
    }

    // delta_a holds the deltas of hidden layer `level`; walk down to level 1.
    let mut cur = delta_a;
    let mut next = delta_b;
    for level in (1..depth - 1).rev() {
        let off = arch.level_offset(level);
        let cols = r + 1;
        let prev = hidden(level - 1);
        let w = &block[off..off + r * cols];
        for (i, di) in cur.chunks_exact(n).enumerate() {
            grad[off + i * cols] = sum(di);
        }
        let deltas = View::rows(cur, r, n, n);
        gemm(1.0, deltas, View::rows(prev, r, n, n).t(), 0.0, &mut grad[off + 1..off + r * cols], cols);
        gemm(1.0, View::rows(&w[1..], r, r, cols).t(), deltas, 0.0, next, n);
        for (o, hv) in next.iter_mut().zip(prev) {
            *o *= logistic_slope(*hv);
        }
        std::mem::swap(&mut cur, &mut next);
    }

    // Input level.
    for i in 0..r {
        let di = &cur[i * n..(i + 1) * n];
        grad[i * (d + 1)] = sum(di);
        for j in 0..d {
            grad[i * (d + 1) + 1 + j] = dot(di, &x_cols[j * n..(j + 1) * n]);
        }
    }
}

pub fn empirical_risk(w: &WeightVector, data: &Dataset) -> Result<f64> {
    RiskEngine::new(w.arch(), data)?.risk(w)
}

/// `grad_w F_n(w)` by backpropagation.
pub fn gradient(w: &WeightVector, data: &Dataset) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; w.arch().param_count()];
    RiskEngine::new(w.arch(), data)?.risk_and_gradient(w, &mut grad)?;
    Ok(grad)
}

/// Central finite differences `(F(w + h e_j) - F(w - h e_j)) / 2h`.
pub fn fd_gradient(w: &WeightVector, data: &Dataset, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step must be positive (got {h})")));
    }
    let mut engine = RiskEngine::new(w.arch(), data)?;
    let mut probe = w.clone();
    let mut out = Vec::with_capacity(w.as_slice().len());
    for j in 0..w.as_slice().len() {
        let orig = w.as_slice()[j];
        probe.as_mut_slice()[j] = orig + h;
        let plus = engine.risk(&probe)?;
        probe.as_mut_slice()[j] = orig - h;
        let minus = engine.risk(&probe)?;
        probe.as_mut_slice()[j] = orig;
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{block_output, init_weights};
    use crate::{InitBounds, SeedStream};
    use rand::Rng;

    fn random_net(seed: u64, k: usize, l: usize, r: usize, d: usize, scale: f64) -> WeightVector {
        let a = Architecture::new(k, l, r, d).unwrap();
        let mut rng = SeedStream::new(seed).rng();
        let v = (0..a.param_count()).map(|_| rng.gen_range(-scale..scale)).collect();
        WeightVector::from_values(a, v).unwrap()
    }

    fn random_data(seed: u64, n: usize, d: usize) -> Dataset {
        let mut rng = SeedStream::new(seed).child(1).rng();
        let xs = (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ys = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        Dataset::new(d, xs, ys).unwrap()
    }

    #[test]
    fn risk_of_fresh_net_is_mean_square_of_responses() {
        let a = Architecture::new(3, 3, 2, 1).unwrap();
        let w = init_weights(&a, InitBounds { a: 5.0, b: 1.0 }, &mut SeedStream::new(0).rng());
        let data = Dataset::univariate(vec![0.1, 0.5], vec![1.0, -1.0]).unwrap();
        assert_eq!(empirical_risk(&w, &data).unwrap(), 1.0);
        let zeros = data.with_ys(vec![0.0, 0.0]).unwrap();
        assert_eq!(empirical_risk(&w, &zeros).unwrap(), 0.0);
    }

    #[test]
    fn risk_matches_direct_sum() {
        let w = random_net(1, 2, 3, 3, 1, 2.0);
        let data = random_data(1, 10, 1);
        let direct: f64 = (0..10)
            .map(|i| (w.forward(data.x(i)).unwrap() - data.ys()[i]).powi(2))
            .sum::<f64>()
            / 10.0;
        let got = empirical_risk(&w, &data).unwrap();
        assert!((got - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn fresh_net_gradient_lives_on_outer_weights() {
        let a = Architecture::new(4, 4, 3, 2).unwrap();
        let w = init_weights(&a, InitBounds { a: 10.0, b: 2.0 }, &mut SeedStream::new(3).rng());
        let data = random_data(3, 6, 2);
        let g = gradient(&w, &data).unwrap();
        let n = data.len() as f64;
        for idx in a.indices() {
            let v = g[a.flat_index(idx).unwrap()];
            if idx.level == a.depth {
                let want: f64 = (0..data.len())
                    .map(|i| (2.0 / n) * (0.0 - data.ys()[i]) * block_output(&w, idx.block, data.x(i)))
                    .sum();
                assert!((v - want).abs() <= 1e-14 * want.abs().max(1.0));
            } else {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn zero_residuals_give_zero_gradient() {
        let w = random_net(5, 3, 3, 2, 1, 1.5);
        let data = random_data(5, 7, 1);
        let fitted: Vec<f64> = w.forward_many(data.xs()).unwrap();
        let exact = data.with_ys(fitted).unwrap();
        let g = gradient(&w, &exact).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
        assert_eq!(empirical_risk(&w, &exact).unwrap(), 0.0);
        let fd = fd_gradient(&w, &exact, 1e-5).unwrap();
        assert!(fd.iter().all(|v| v.abs() < 1e-9));
    }

    #[test]
    fn backprop_matches_finite_differences() {
        for seed in 0..10u64 {
            let w = random_net(seed, 2, 4, 3, 2, 1.0);
            let data = random_data(seed, 5, 2);
            let g = gradient(&w, &data).unwrap();
            let fd = fd_gradient(&w, &data, 1e-5).unwrap();
            let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = g.iter().zip(&fd).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err / (1.0 + gmax) < 1e-6, "seed {seed}: {err}");
        }
    }

    #[test]
    fn central_differences_exact_on_quadratic() {
        // K=1, L=2, r=1: the risk is quadratic in the outer weight.
        let a = Architecture::new(1, 2, 1, 1).unwrap();
        let w = WeightVector::from_values(a, vec![0.3, -0.7, 0.2, 1.1, 0.9]).unwrap();
        let data = Dataset::univariate(vec![-0.5, 0.25, 0.8], vec![1.0, 0.0, -1.0]).unwrap();
        let g = gradient(&w, &data).unwrap();
        let fd = fd_gradient(&w, &data, 1e-3).unwrap();
        assert!((g[4] - fd[4]).abs() < 1e-12);
    }

    #[test]
    fn zeroed_block_gradient_slice() {
        // A block with all weights zero (so its outer weight is zero) gets a
        // gradient only on that outer weight.
        let mut w = random_net(8, 3, 3, 2, 1, 1.0);
        let len = w.arch().block_len();
        w.as_mut_slice()[len..2 * len].fill(0.0);
        let data = random_data(8, 6, 1);
        let g = gradient(&w, &data).unwrap();
        assert!(g[len..2 * len - 1].iter().all(|&v| v == 0.0));
        assert!(g[2 * len - 1] != 0.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let w = random_net(1, 1, 2, 1, 2, 1.0);
        let data = random_data(1, 3, 1);
        assert!(matches!(gradient(&w, &data), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(empirical_risk(&w, &data), Err(Error::DimensionMismatch { .. })));
    }
}
