//! Univariate synthetic regression model, exact L2 errors and the
//! replication harness.
//!
//! `X` is standard normal restricted to `[-1, 1]`, `Y = m(X) + s(X) N` with
//! the piecewise quadratic/linear `m` below and `s(x) = 0.2 - 0.1 cos(2 pi x)`.

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::StandardNormal;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{train_baseline, BaselineConfig, BaselineFit};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::network::{init_weights, Architecture, InitBounds, WeightVector};
use crate::quadrature::GaussLegendre;
use crate::rng::{SeedStream, TAG_DATA, TAG_FIT, TAG_INIT};
use crate::selection::{split_select, SplitSpec};
use crate::stats::{median_iqr, normal_cdf, normal_pdf};
use crate::training::{adaptive_fit, gd_run, ScheduleConfig, ScheduleOutcome, StopReason};
use crate::truncation_level;

/// Breakpoints of `m`; the pieces are `[-1,-0.5)`, `[-0.5,0)`, `[0,0.5)`, `[0.5,1]`.
pub const BREAKPOINTS: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

/// Number of points of the prediction-curve grid.
pub const CURVE_POINTS: usize = 1001;

/// Regression function on `[-1, 1]`.
pub fn eval_m(x: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("m is defined on [-1, 1] only (got {x})")));
    }
    Ok(m_unchecked(x))
}

fn m_unchecked(x: f64) -> f64 {
    if x < -0.5 {
        (x + 2.0) * (x + 2.0) / 2.0
    } else if x < 0.0 {
        x / 2.0 + 0.875
    } else if x < 0.5 {
        5.0 * (x - 0.2) * (x - 0.2) + 1.075
    } else {
        x + 0.125
    }
}

/// Noise scale `0.2 - 0.1 cos(2 pi x)`.
pub fn eval_noise_scale(x: f64) -> f64 {
    0.2 - 0.1 * (2.0 * std::f64::consts::PI * x).cos()
}

/// One draw of the standard normal law restricted to `[-1, 1]`, by rejection.
pub fn sample_x<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let z: f64 = rng.sample(StandardNormal);
        if z.abs() <= 1.0 {
            return z;
        }
    }
}

/// Normalizer `P(|Z| <= 1) = 2 Phi(1) - 1`.
pub fn truncation_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| 2.0 * normal_cdf(1.0) - 1.0)
}

/// Density of the covariate.
pub fn covariate_density(x: f64) -> f64 {
    if x.abs() <= 1.0 {
        normal_pdf(x) / truncation_mass()
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticModel {
    /// Multiplier on the noise term; 1 for the model itself, 0 for
    /// noiseless data.
    pub noise_factor: f64,
}

impl Default for SyntheticModel {
    fn default() -> Self {
        SyntheticModel { noise_factor: 1.0 }
    }
}

impl SyntheticModel {
    pub fn noiseless() -> Self {
        SyntheticModel { noise_factor: 0.0 }
    }

    /// `n` i.i.d. pairs `(X_i, m(X_i) + s(X_i) N_i)`.
    pub fn generate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Dataset {
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let x = sample_x(rng);
            let noise: f64 = rng.sample(StandardNormal);
            xs.push(x);
            ys.push(m_unchecked(x) + self.noise_factor * eval_noise_scale(x) * noise);
        }
        Dataset::univariate(xs, ys).expect("synthetic data is finite")
    }
}

pub fn generate_dataset<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("sample size must be positive".into()));
    }
    Ok(SyntheticModel::default().generate(n, rng))
}

/// `int (g(x) - m(x))^2 dP_X(x)` by composite Gauss-Legendre quadrature on
/// each smooth piece of `m`.
#[derive(Debug, Clone)]
pub struct L2Evaluator {
    nodes: Vec<f64>,
    /// Quadrature weight times covariate density.
    weights: Vec<f64>,
    targets: Vec<f64>,
}

impl Default for L2Evaluator {
    fn default() -> Self {
        L2Evaluator::new(64, 8)
    }
}

impl L2Evaluator {
    /// `order` Gauss-Legendre nodes on each of `panels` equal sub-intervals of
    /// every piece.
    pub fn new(order: usize, panels: usize) -> Self {
        let rule = GaussLegendre::new(order);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for piece in BREAKPOINTS.windows(2) {
            let h = (piece[1] - piece[0]) / panels as f64;
            for p in 0..panels {
                let a = piece[0] + p as f64 * h;
                for (x, w) in rule.mapped(a, a + h) {
                    nodes.push(x);
                    weights.push(w * covariate_density(x));
                }
            }
        }
        let targets = nodes.iter().map(|&x| m_unchecked(x)).collect();
        L2Evaluator {
            nodes,
            weights,
            targets,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Error of a predictor given its values at [`L2Evaluator::nodes`].
    pub fn error_from_values(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.nodes.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("predictor is not finite on [-1, 1]".into()));
        }
        Ok(values
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((v, m), w)| w * (v - m) * (v - m))
            .sum())
    }

    pub fn error<F: FnMut(f64) -> f64>(&self, mut predictor: F) -> Result<f64> {
        let values: Vec<f64> = self.nodes.iter().map(|&x| predictor(x)).collect();
        self.error_from_values(&values)
    }
}

fn default_evaluator() -> &'static L2Evaluator {
    static EVAL: OnceLock<L2Evaluator> = OnceLock::new();
    EVAL.get_or_init(L2Evaluator::default)
}

/// L2 error of a univariate predictor against `m` under the covariate law.
pub fn l2_error<F: FnMut(f64) -> f64>(predictor: F) -> Result<f64> {
    default_evaluator().error(predictor)
}

/// The 1001-point uniform grid over `[-1, 1]` used for prediction curves.
pub fn curve_grid() -> Vec<f64> {
    (0..CURVE_POINTS)
        .map(|i| -1.0 + 2.0 * i as f64 / (CURVE_POINTS - 1) as f64)
        .collect()
}

/// How a replication fits the parallel-block network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitMethod {
    Fixed { bounds: InitBounds, lambda: f64, steps: u64 },
    Adaptive { bounds: InitBounds, schedule: ScheduleConfig },
    Split { split: SplitSpec, schedule: ScheduleConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum Estimator {
    Parallel { arch: Architecture, method: FitMethod },
    Baseline(BaselineConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub label: String,
    /// Sample size of every replication.
    pub n: usize,
    pub c12: f64,
    pub estimator: Estimator,
}

/// A fitted estimate, truncated at `beta`.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Parallel { weights: WeightVector, beta: f64 },
    Baseline(BaselineFit),
}

impl FittedModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        match self {
            FittedModel::Parallel { weights, beta } => weights.predict_truncated(x, *beta),
            FittedModel::Baseline(fit) => fit.predict(x),
        }
    }

    /// Truncated predictions at many univariate points.
    pub fn predict_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        match self {
            FittedModel::Parallel { weights, beta } => Ok(weights
                .forward_many(xs)?
                .into_iter()
                .map(|v| crate::network::truncate(v, *beta))
                .collect()),
            FittedModel::Baseline(fit) => xs.iter().map(|x| fit.predict(std::slice::from_ref(x))).collect(),
        }
    }

    pub fn l2_error(&self) -> Result<f64> {
        let eval = default_evaluator();
        eval.error_from_values(&self.predict_many(eval.nodes())?)
    }
}

/// Everything recorded about one replication of a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepOutcome {
    pub rep: u64,
    /// `None` when the fit diverged.
    pub l2_error: Option<f64>,
    pub diverged: bool,
    pub t_n: Option<u64>,
    pub lambda: Option<f64>,
    pub stop_reason: Option<StopReason>,
    pub chosen_bounds: Option<InitBounds>,
    pub baseline_width: Option<usize>,
    pub baseline_steps: Option<u64>,
    /// Estimate on [`curve_grid`].
    #[serde(skip)]
    pub curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub label: String,
    pub reps: Vec<RepOutcome>,
    /// L2 errors of the replications that did not diverge, in replication order.
    pub errors: Vec<f64>,
    pub median: f64,
    pub iqr: f64,
    pub diverged: usize,
}

impl ExperimentSummary {
    pub fn from_reps(label: String, reps: Vec<RepOutcome>) -> Self {
        let errors: Vec<f64> = reps.iter().filter_map(|r| r.l2_error).collect();
        let diverged = reps.iter().filter(|r| r.diverged).count();
        let (median, iqr) = median_iqr(&errors).map_or((f64::NAN, f64::NAN), |s| (s.median, s.iqr));
        ExperimentSummary {
            label,
            reps,
            errors,
            median,
            iqr,
            diverged,
        }
    }
}

/// A fitted parallel-block network together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFit {
    pub outcome: ScheduleOutcome,
    /// Truncation level of the estimate.
    pub beta: f64,
    /// Bounds picked by sample splitting, if the method selects them.
    pub chosen_bounds: Option<InitBounds>,
}

/// Fits `arch` to `data` with `method`. Fixed schedules draw their initial
/// weights from the `INIT` child of `stream`; the adaptive and splitting
/// methods derive their own substreams from `stream`.
pub fn fit_network(
    arch: &Architecture,
    method: &FitMethod,
    data: &Dataset,
    c12: f64,
    stream: SeedStream,
) -> Result<NetworkFit> {
    let beta = truncation_level(c12, data.len());
    Ok(match method {
        FitMethod::Fixed { bounds, lambda, steps } => {
            let w0 = init_weights(arch, *bounds, &mut stream.child(TAG_INIT).rng());
            NetworkFit {
                outcome: gd_run(&w0, data, *lambda, *steps)?,
                beta,
                chosen_bounds: None,
            }
        }
        FitMethod::Adaptive { bounds, schedule } => NetworkFit {
            outcome: adaptive_fit(arch, *bounds, data, schedule, stream)?,
            beta,
            chosen_bounds: None,
        },
        FitMethod::Split { split, schedule } => {
            let sel = split_select(arch, data, split, schedule, stream)?;
            NetworkFit {
                outcome: sel.model,
                beta: sel.beta,
                chosen_bounds: Some(sel.chosen),
            }
        }
    })
}

/// Dataset of replication `rep`; shared by every cell run with the same seed.
pub fn replication_data(n: usize, seed: SeedStream, rep: u64) -> Dataset {
    SyntheticModel::default().generate(n, &mut seed.child2(TAG_DATA, rep).rng())
}

/// Fits replication `rep` of `cell` and reports it alongside the fitted model.
pub fn fit_replication(cell: &CellConfig, seed: SeedStream, rep: u64) -> Result<(FittedModel, RepOutcome)> {
    let data = replication_data(cell.n, seed, rep);
    let stream = seed.child2(TAG_FIT, rep);
    let mut out = RepOutcome {
        rep,
        l2_error: None,
        diverged: false,
        t_n: None,
        lambda: None,
        stop_reason: None,
        chosen_bounds: None,
        baseline_width: None,
        baseline_steps: None,
        curve: Vec::new(),
    };
    let model = match &cell.estimator {
        Estimator::Parallel { arch, method } => {
            let fit = fit_network(arch, method, &data, cell.c12, stream)?;
            out.t_n = Some(fit.outcome.t);
            out.lambda = Some(fit.outcome.lambda);
            out.stop_reason = Some(fit.outcome.stop_reason);
            out.chosen_bounds = fit.chosen_bounds;
            FittedModel::Parallel {
                weights: fit.outcome.weights,
                beta: fit.beta,
            }
        }
        Estimator::Baseline(cfg) => {
            let fit = train_baseline(&data, cfg, stream)?;
            out.baseline_width = Some(fit.width);
            out.baseline_steps = Some(fit.steps);
            FittedModel::Baseline(fit)
        }
    };
    out.l2_error = Some(model.l2_error()?);
    out.curve = model.predict_many(&curve_grid())?;
    Ok((model, out))
}

fn run_one(cell: &CellConfig, seed: SeedStream, rep: u64) -> Result<RepOutcome> {
    match fit_replication(cell, seed, rep) {
        Ok((_, out)) => Ok(out),
        Err(e) if e.is_divergence() => Ok(RepOutcome {
            rep,
            l2_error: None,
            diverged: true,
            t_n: None,
            lambda: None,
            stop_reason: None,
            chosen_bounds: None,
            baseline_width: None,
            baseline_steps: None,
            curve: Vec::new(),
        }),
        Err(e) => Err(e),
    }
}

/// Runs `reps` replications of `cell`. Diverged replications are kept in
/// [`ExperimentSummary::reps`] with a flag and left out of the statistics.
pub fn run_experiment(cell: &CellConfig, reps: u64, seed: SeedStream) -> Result<ExperimentSummary> {
    if reps == 0 {
        return Err(Error::InvalidConfig("at least one replication is required".into()));
    }
    #[cfg(feature = "parallel")]
    let outcomes: Vec<Result<RepOutcome>> = (0..reps).into_par_iter().map(|rep| run_one(cell, seed, rep)).collect();
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<Result<RepOutcome>> = (0..reps).map(|rep| run_one(cell, seed, rep)).collect();
    let reps = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(ExperimentSummary::from_reps(cell.label.clone(), reps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regression_function_values() {
        assert_eq!(eval_m(-1.0).unwrap(), 0.5);
        assert!((eval_m(0.0).unwrap() - 1.275).abs() < 1e-15);
        assert_eq!(eval_m(1.0).unwrap(), 1.125);
        assert_eq!(eval_m(-0.5).unwrap(), 0.625);
        assert!((eval_m(0.5).unwrap() - 0.625).abs() < 1e-15);
        assert!(eval_m(1.01).is_err());
        assert!(eval_m(-1.5).is_err());
    }

    #[test]
    fn noise_scale_values() {
        assert!((eval_noise_scale(0.0) - 0.1).abs() < 1e-15);
        assert!((eval_noise_scale(0.5) - 0.3).abs() < 1e-15);
        assert!((eval_noise_scale(0.25) - 0.2).abs() < 1e-15);
        for i in 0..=200 {
            let s = eval_noise_scale(-1.0 + i as f64 / 100.0);
            assert!((0.1 - 1e-15..=0.3 + 1e-15).contains(&s));
        }
    }

    #[test]
    fn covariate_draws_stay_in_range_and_center() {
        let mut rng = SeedStream::new(1).rng();
        let draws: Vec<f64> = (0..100_000).map(|_| sample_x(&mut rng)).collect();
        assert!(draws.iter().all(|x| x.abs() <= 1.0));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let sd = (draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws.len() as f64).sqrt();
        assert!(mean.abs() < 3.0 * sd / (draws.len() as f64).sqrt());
    }

    #[test]
    fn covariate_law_passes_kolmogorov_smirnov() {
        let mut rng = SeedStream::new(2).rng();
        let mut draws: Vec<f64> = (0..100_000).map(|_| sample_x(&mut rng)).collect();
        draws.sort_by(f64::total_cmp);
        let z = truncation_mass();
        assert!((z - 0.682_689_492_1).abs() < 1e-10);
        let n = draws.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, x) in draws.iter().enumerate() {
            let cdf = (normal_cdf(*x) - normal_cdf(-1.0)) / z;
            ks = ks.max((cdf - i as f64 / n).abs()).max(((i + 1) as f64 / n - cdf).abs());
        }
        // 1% critical value 1.628 / sqrt(n).
        assert!(ks < 1.628 / n.sqrt(), "KS {ks}");
    }

    #[test]
    fn noiseless_data_lies_on_m() {
        let d = SyntheticModel::noiseless().generate(500, &mut SeedStream::new(3).rng());
        for i in 0..d.len() {
            assert_eq!(d.ys()[i], eval_m(d.x(i)[0]).unwrap());
        }
    }

    #[test]
    fn standardized_residuals_are_normal() {
        let d = generate_dataset(100_000, &mut SeedStream::new(4).rng()).unwrap();
        let z: Vec<f64> = (0..d.len())
            .map(|i| {
                let x = d.x(i)[0];
                (d.ys()[i] - eval_m(x).unwrap()) / eval_noise_scale(x)
            })
            .collect();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let kurt = z.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n / (var * var);
        assert!((kurt - 3.0).abs() < 0.2, "kurtosis {kurt}");
        assert!((var - 1.0).abs() < 0.02);
    }

    #[test]
    fn datasets_are_reproducible() {
        let a = generate_dataset(50, &mut SeedStream::new(5).rng()).unwrap();
        let b = generate_dataset(50, &mut SeedStream::new(5).rng()).unwrap();
        assert_eq!(a, b);
        assert!(generate_dataset(0, &mut SeedStream::new(5).rng()).is_err());
    }

    #[test]
    fn l2_error_identities() {
        assert!(l2_error(m_unchecked).unwrap() < 1e-12);
        for c in [0.1, -0.37, 2.0] {
            let e = l2_error(|x| m_unchecked(x) + c).unwrap();
            assert!((e - c * c).abs() < 1e-10, "{c}: {e}");
        }
        assert!(l2_error(|_| f64::NAN).is_err());
        let coarse = L2Evaluator::new(64, 1);
        assert_eq!(coarse.nodes().len(), 256);
        assert!((coarse.error(|x| m_unchecked(x) + 0.5).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn l2_error_of_a_smooth_function_matches_closed_form() {
        // E[X^2] for the truncated normal is 1 - 2 phi(1) / Z.
        let e = l2_error(|x| m_unchecked(x) + x).unwrap();
        let want = 1.0 - 2.0 * normal_pdf(1.0) / truncation_mass();
        assert!((e - want).abs() < 1e-13);
    }

    #[test]
    fn curve_grid_shape() {
        let g = curve_grid();
        assert_eq!(g.len(), 1001);
        assert_eq!(g[0], -1.0);
        assert_eq!(g[1000], 1.0);
        assert!((g[500]).abs() < 1e-15);
    }

    #[test]
    fn summary_of_small_cell() {
        let cell = CellConfig {
            label: "tiny".into(),
            n: 30,
            c12: crate::DEFAULT_C12,
            estimator: Estimator::Parallel {
                arch: Architecture::new(10, 3, 3, 1).unwrap(),
                method: FitMethod::Fixed {
                    bounds: InitBounds { a: 100.0, b: 5.0 },
                    lambda: 1.0 / 20.0,
                    steps: 20,
                },
            },
        };
        let one = run_experiment(&cell, 1, SeedStream::new(6)).unwrap();
        assert_eq!(one.errors.len(), 1);
        assert_eq!(one.median, one.errors[0]);
        assert_eq!(one.iqr, 0.0);
        let three = run_experiment(&cell, 3, SeedStream::new(6)).unwrap();
        assert_eq!(three.reps[0], one.reps[0]);
        assert_eq!(three, run_experiment(&cell, 3, SeedStream::new(6)).unwrap());
        assert!(run_experiment(&cell, 0, SeedStream::new(6)).is_err());
    }
}
