//! WebAssembly entry points for the static demo page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON document, so the page
//! needs no generated bindings beyond strings. Failures come back as
//! `{"error": "..."}`. The same operations are available to Rust callers as
//! typed functions.

use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

use parnet::experiments::{ExperimentConfig, ExperimentName};
use parnet::rng::TAG_FIT;
use parnet::simulation::{curve_grid, eval_m, fit_network, fit_replication, replication_data, FitMethod, FittedModel};
use parnet::{Architecture, InitBounds, ScheduleConfig, SeedStream};

pub type Result<T> = std::result::Result<T, parnet::Error>;

/// Every `CURVE_STRIDE`-th point of the 1001-point curve grid is sent to the
/// page; 201 points are plenty for a canvas.
const CURVE_STRIDE: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Curve {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// The regression function on the curve grid.
    pub truth: Curve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedFit {
    pub sample: Sample,
    pub estimate: Curve,
    pub l2_error: f64,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundSummary {
    pub index: u32,
    pub budget: u64,
    pub steps: usize,
    pub exit: String,
    pub conditions: Option<[bool; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdaptiveFit {
    pub sample: Sample,
    pub estimate: Curve,
    pub l2_error: f64,
    pub steps: u64,
    pub stepsize: f64,
    pub stop_reason: String,
    pub rounds: Vec<RoundSummary>,
    /// Empirical risk along the accepted round.
    pub risk: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeFit {
    pub label: String,
    pub estimate: Curve,
    pub l2_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InitializerComparison {
    pub sample: Sample,
    pub fits: Vec<SchemeFit>,
}

fn thin(values: &[f64]) -> Vec<f64> {
    values.iter().step_by(CURVE_STRIDE).copied().collect()
}

fn curve(values: &[f64]) -> Curve {
    Curve {
        x: thin(&curve_grid()),
        y: thin(values),
    }
}

fn sample(n: usize, seed: u64, rep: u64) -> Result<Sample> {
    let data = replication_data(n, SeedStream::new(seed), rep);
    let grid = curve_grid();
    let truth = grid.iter().map(|&x| eval_m(x)).collect::<Result<Vec<_>>>()?;
    Ok(Sample {
        x: data.xs().to_vec(),
        y: data.ys().to_vec(),
        truth: curve(&truth),
    })
}

fn check_n(n: usize) -> Result<()> {
    if !(10..=2000).contains(&n) {
        return Err(parnet::Error::InvalidConfig(format!("sample size must be in 10..=2000 (got {n})")));
    }
    Ok(())
}

/// Fixed-schedule fit of `k` blocks with stepsize `1/steps` to replication
/// `rep` of the synthetic model.
pub fn fixed_fit(n: usize, seed: u64, rep: u64, k: usize, steps: u64, a: f64, b: f64) -> Result<FixedFit> {
    check_n(n)?;
    let mut cfg = ExperimentConfig::new(ExperimentName::Table1);
    cfg.seed = seed;
    cfg.n = n;
    cfg.ks = vec![k];
    cfg.fixed_steps = Some(steps);
    cfg.bounds = InitBounds::new(a, b)?;
    let cell = cfg.cells()?.remove(0);
    let (_, out) = fit_replication(&cell, SeedStream::new(seed), rep)?;
    Ok(FixedFit {
        sample: sample(n, seed, rep)?,
        estimate: curve(&out.curve),
        l2_error: out.l2_error.unwrap_or(f64::NAN),
        params: Architecture::new(k, cfg.depth, cfg.width, 1)?.param_count(),
    })
}

/// Adaptive fit: the step count and stepsize are chosen by budget doubling.
pub fn adaptive_fit(n: usize, seed: u64, rep: u64, k: usize, a: f64, b: f64) -> Result<AdaptiveFit> {
    check_n(n)?;
    let arch = Architecture::new(k, 4, 8, 1)?;
    let method = FitMethod::Adaptive {
        bounds: InitBounds::new(a, b)?,
        schedule: ScheduleConfig::default(),
    };
    let seed_stream = SeedStream::new(seed);
    let data = replication_data(n, seed_stream, rep);
    let fit = fit_network(&arch, &method, &data, parnet::DEFAULT_C12, seed_stream.child2(TAG_FIT, rep))?;
    let outcome = fit.outcome;
    let rounds = outcome
        .rounds
        .iter()
        .map(|r| RoundSummary {
            index: r.index,
            budget: r.budget,
            steps: r.trace.steps(),
            exit: serde_json::to_value(r.exit)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            conditions: r.conditions.map(|c| [c.c1, c.c2, c.c3]),
        })
        .collect();
    let risk = outcome.trace().risk.clone();
    let model = FittedModel::Parallel {
        weights: outcome.weights,
        beta: fit.beta,
    };
    Ok(AdaptiveFit {
        sample: sample(n, seed, rep)?,
        estimate: curve(&model.predict_many(&curve_grid())?),
        l2_error: model.l2_error()?,
        steps: outcome.t,
        stepsize: outcome.lambda,
        stop_reason: outcome.stop_reason.to_string(),
        rounds,
        risk,
    })
}

/// ADAM-trained fully connected networks under each initialization scheme,
/// all fitted to the same replication.
pub fn compare_initializers(seed: u64, rep: u64, steps: u64) -> Result<InitializerComparison> {
    let mut cfg = ExperimentConfig::new(ExperimentName::Figure1);
    cfg.seed = seed;
    cfg.fixed_steps = Some(steps);
    let fits = cfg
        .cells()?
        .iter()
        .map(|cell| {
            let (_, out) = fit_replication(cell, SeedStream::new(seed), rep)?;
            Ok(SchemeFit {
                label: cell.label.clone(),
                estimate: curve(&out.curve),
                l2_error: out.l2_error.unwrap_or(f64::NAN),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(InitializerComparison {
        sample: sample(cfg.n, seed, rep)?,
        fits,
    })
}

fn to_json<T: Serialize>(result: Result<T>) -> String {
    let value = match result {
        Ok(v) => serde_json::to_value(v),
        Err(e) => Ok(serde_json::json!({ "error": e.to_string() })),
    };
    value
        .and_then(|v| serde_json::to_string(&v))
        .unwrap_or_else(|e| format!("{{\"error\":\"serialization failed: {e}\"}}"))
}

fn seed_of(seed: f64) -> u64 {
    seed.max(0.0) as u64
}

#[wasm_bindgen(js_name = fixedFit)]
pub fn fixed_fit_json(n: u32, seed: f64, k: u32, steps: u32, a: f64, b: f64) -> String {
    to_json(fixed_fit(n as usize, seed_of(seed), 0, k as usize, steps as u64, a, b))
}

#[wasm_bindgen(js_name = adaptiveFit)]
pub fn adaptive_fit_json(n: u32, seed: f64, k: u32, a: f64, b: f64) -> String {
    to_json(adaptive_fit(n as usize, seed_of(seed), 0, k as usize, a, b))
}

#[wasm_bindgen(js_name = compareInitializers)]
pub fn compare_initializers_json(seed: f64, steps: u32) -> String {
    to_json(compare_initializers(seed_of(seed), 0, steps as u64))
}
