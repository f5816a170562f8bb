use std::fs;
use std::path::{Path, PathBuf};

use parnet::experiments::{ExperimentConfig, ExperimentReport};
use parnet::network::InitBounds;
use parnet::simulation::{fit_network, l2_error, replication_data, NetworkFit};
use parnet::{Architecture, ScheduleConfig, SeedStream};

use crate::args::{ExperimentArgs, FitArgs, GenerateArgs, PredictArgs, ScheduleArgs};
use crate::error::{CliError, Result};
use crate::manifest::{FitConfig, FitSchedule, RunCommand, RunManifest, MANIFEST_FILE};
use crate::model::{ModelFile, TrainingInfo};
use crate::table::{read_table, write_file, write_table, Table};

fn schedule_config(args: &ScheduleArgs) -> Result<ScheduleConfig> {
    let mut cfg = ScheduleConfig::default();
    if let Some(t) = args.tmin {
        cfg.t_min = t;
    }
    if let Some(c) = args.c8 {
        cfg.c8 = c;
    }
    if let Some(c) = args.c9 {
        cfg.c9 = c;
    }
    if let Some(cap) = &args.practical_cap {
        cfg.practical_cap = match cap.as_str() {
            "none" => None,
            s => Some(
                s.parse()
                    .map_err(|_| CliError::Usage(format!("--practical-cap expects a step count or 'none', got '{s}'")))?,
            ),
        };
    }
    Ok(cfg)
}

fn bounds(a: f64, b: f64) -> Result<InitBounds> {
    InitBounds::new(a, b).map_err(|e| CliError::Usage(e.to_string()))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn fit_config(args: &FitArgs) -> Result<FitConfig> {
    // The input dimension is only known once the data is read; the shape
    // checks on K, L and r do not depend on it.
    Architecture::new(args.k, args.depth, args.width, 1).map_err(|e| CliError::Usage(e.to_string()))?;
    let schedule = match args.fixed_steps {
        Some(0) => return Err(CliError::Usage("--fixed-steps must be at least 1".into())),
        Some(steps) => {
            let stepsize = args.stepsize.unwrap_or(1.0 / steps as f64);
            if !(stepsize > 0.0 && stepsize.is_finite()) {
                return Err(CliError::Usage(format!("--stepsize must be positive, got {stepsize}")));
            }
            FitSchedule::Fixed { steps, stepsize }
        }
        None => FitSchedule::Adaptive {
            schedule: schedule_config(&args.schedule)?,
        },
    };
    Ok(FitConfig {
        input: args.input.clone(),
        seed: args.seed,
        blocks: args.k,
        depth: args.depth,
        width: args.width,
        bounds: bounds(args.a_bound, args.b_bound)?,
        c12: args.c12,
        schedule,
        trace: args.trace,
        synthetic_l2: args.synthetic_l2,
    })
}

/// Fits the model described by `cfg`, writes its artifacts into `out` and
/// returns their file names.
pub fn run_fit(cfg: &FitConfig, out: &Path) -> Result<Vec<String>> {
    let table = read_table(&cfg.input, true)?;
    let data = table.clone().into_dataset()?;
    let arch = Architecture::new(cfg.blocks, cfg.depth, cfg.width, data.dim()).map_err(|e| CliError::Usage(e.to_string()))?;
    if let FitSchedule::Adaptive { schedule } = &cfg.schedule {
        schedule.validate(&arch).map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if cfg.synthetic_l2 && data.dim() != 1 {
        return Err(CliError::Usage("--synthetic-l2 needs univariate inputs".into()));
    }
    let NetworkFit { outcome, beta, .. } = fit_network(&arch, &cfg.method(), &data, cfg.c12, SeedStream::new(cfg.seed))?;
    let weights = &outcome.weights;
    let synthetic_l2_error = if cfg.synthetic_l2 {
        Some(l2_error(|x| weights.predict_truncated(&[x], beta).expect("univariate model"))?)
    } else {
        None
    };
    let model = ModelFile::new(
        weights,
        beta,
        TrainingInfo {
            n: data.len(),
            seed: cfg.seed,
            bounds: cfg.bounds,
            schedule: cfg.schedule,
            steps: outcome.t,
            stepsize: outcome.lambda,
            doubling_index: outcome.doubling_index,
            stop_reason: outcome.stop_reason,
            training_risk: *outcome.trace().risk.last().expect("trace holds the final risk"),
            synthetic_l2_error,
        },
    );

    create_dir(out)?;
    let mut artifacts = vec!["model.json".to_string(), "predictions.csv".to_string()];
    model.write(&out.join("model.json"))?;
    let predictions = predict_rows(&model, &table)?;
    write_table(&out.join("predictions.csv"), &table, Some(("prediction", &predictions)))?;
    if cfg.trace {
        let mut body = Vec::new();
        outcome.write_trace_csv(&mut body).expect("writing to memory");
        write_file(&out.join("trace.csv"), &body)?;
        artifacts.push("trace.csv".into());
    }
    RunManifest::new(RunCommand::Fit(cfg.clone()), artifacts.clone()).write(out)?;
    Ok(artifacts)
}

fn predict_rows(model: &ModelFile, table: &Table) -> Result<Vec<f64>> {
    if table.dim != model.architecture.input_dim {
        return Err(CliError::Data(format!(
            "the model expects {} input column(s), the data has {}",
            model.architecture.input_dim, table.dim
        )));
    }
    let weights = model.weights()?;
    Ok(weights
        .forward_many(&table.xs)?
        .into_iter()
        .map(|v| parnet::network::truncate(v, model.beta))
        .collect())
}

pub fn run_predict(args: &PredictArgs) -> Result<()> {
    let model = ModelFile::read(&args.model)?;
    let table = read_table(&args.input, false)?;
    let predictions = predict_rows(&model, &table)?;
    write_table(&args.out, &table, Some(("prediction", &predictions)))
}

pub fn run_generate(args: &GenerateArgs) -> Result<()> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let data = replication_data(args.n, SeedStream::new(args.seed), args.rep);
    let table = Table {
        dim: 1,
        xs: data.xs().to_vec(),
        ys: Some(data.ys().to_vec()),
    };
    write_table(&args.out, &table, None)
}

pub fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(args.name);
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(r) = args.reps {
        cfg.reps = r;
    }
    if let Some(n) = args.n {
        cfg.n = n;
    }
    if let Some(k) = &args.k {
        cfg.ks = k.clone();
    }
    if let Some(d) = args.depth {
        cfg.depth = d;
    }
    if let Some(w) = args.width {
        cfg.width = w;
    }
    cfg.bounds = bounds(args.a_bound.unwrap_or(cfg.bounds.a), args.b_bound.unwrap_or(cfg.bounds.b))?;
    if args.fixed_steps.is_some() {
        cfg.fixed_steps = args.fixed_steps;
    }
    cfg.schedule = schedule_config(&args.schedule)?;
    if let Some(c) = args.c12 {
        cfg.c12 = c;
    }
    if let Some(l) = &args.layers {
        cfg.baseline_layers = l.clone();
    }
    // Surface configuration mistakes as usage errors before any fitting.
    cfg.cells().map_err(|e| CliError::Usage(e.to_string()))?;
    if cfg.reps == 0 {
        return Err(CliError::Usage("--reps must be at least 1".into()));
    }
    Ok(cfg)
}

/// Runs the experiment and writes its CSVs and manifest into `out`. Fails
/// with [`CliError::Diverged`] after writing if any replication diverged.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentReport> {
    let report = cfg.run()?;
    create_dir(out)?;
    let artifacts = report.write(out).map_err(|e| CliError::io(out, e))?;
    RunManifest::new(RunCommand::Experiment(cfg.clone()), artifacts).write(out)?;
    let diverged: usize = report.summaries.iter().map(|s| s.diverged).sum();
    if diverged > 0 {
        return Err(CliError::Diverged(diverged));
    }
    Ok(report)
}

pub fn default_experiment_dir(cfg: &ExperimentConfig) -> PathBuf {
    Path::new("results").join(cfg.name.as_str())
}

/// Re-runs a manifest into `out` (default: the manifest's directory).
pub fn run_replay(manifest_path: &Path, out: Option<&Path>) -> Result<RunManifest> {
    let manifest = RunManifest::read(manifest_path)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => manifest_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    match &manifest.run {
        RunCommand::Fit(cfg) => {
            run_fit(cfg, &dir)?;
        }
        RunCommand::Experiment(cfg) => {
            run_experiment(cfg, &dir)?;
        }
    }
    RunManifest::read(&dir.join(MANIFEST_FILE))
}

/// One line per cell: label, median, IQR and divergence count.
pub fn summary_lines(report: &ExperimentReport) -> Vec<String> {
    report
        .summaries
        .iter()
        .map(|s| {
            format!(
                "{:<24} median {:.4} (IQR {:.4}) over {} replication(s){}",
                s.label,
                s.median,
                s.iqr,
                s.errors.len(),
                if s.diverged > 0 {
                    format!(", {} diverged", s.diverged)
                } else {
                    String::new()
                }
            )
        })
        .collect()
}
