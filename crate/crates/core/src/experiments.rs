//! Named simulation protocols and their CSV outputs.
//!
//! | name          | what varies                               | fit                              |
//! |---------------|-------------------------------------------|----------------------------------|
//! | `table1`      | K in {100, 200, 400, 800, 1600}           | t = K/2 steps, stepsize 1/t      |
//! | `table2`      | A in {10, 100, 1000} x B in {2, .., 2000} | K = 800, t = 400, stepsize 1/400 |
//! | `table3`      | K in {100, 200, 400, 800}                 | adaptive schedule                |
//! | `table4`      | K in {100, 200, 400, 800}                 | adaptive, (A, B) by splitting    |
//! | `table5-nnfc` | 2, 4, 6 hidden layers                     | ADAM baseline, width/steps split |
//! | `figure1`     | initialization scheme and topology        | ADAM, 1000 steps                 |
//!
//! All protocols use n = 100, L = 4, r = 8, A = 1000, B = 20 unless the
//! table varies the parameter. Replication `i` sees the same dataset in every
//! cell of every protocol run with the same seed.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::baseline::{BaselineConfig, InitScheme};
use crate::error::{Error, Result};
use crate::network::{Architecture, InitBounds};
use crate::rng::SeedStream;
use crate::selection::SplitSpec;
use crate::simulation::{curve_grid, eval_m, run_experiment, CellConfig, Estimator, ExperimentSummary, FitMethod};
use crate::training::ScheduleConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentName {
    #[serde(rename = "table1")]
    Table1,
    #[serde(rename = "table2")]
    Table2,
    #[serde(rename = "table3")]
    Table3,
    #[serde(rename = "table4")]
    Table4,
    #[serde(rename = "table5-nnfc")]
    Table5Nnfc,
    #[serde(rename = "figure1")]
    Figure1,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::Table1,
        ExperimentName::Table2,
        ExperimentName::Table3,
        ExperimentName::Table4,
        ExperimentName::Table5Nnfc,
        ExperimentName::Figure1,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentName::Table1 => "table1",
            ExperimentName::Table2 => "table2",
            ExperimentName::Table3 => "table3",
            ExperimentName::Table4 => "table4",
            ExperimentName::Table5Nnfc => "table5-nnfc",
            ExperimentName::Figure1 => "figure1",
        }
    }
}

impl FromStr for ExperimentName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "unknown experiment '{s}' (expected one of table1, table2, table3, table4, table5-nnfc, figure1)"
                ))
            })
    }
}

impl std::fmt::Display for ExperimentName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Extra (hidden layers, width) settings at which `figure1` fits the
/// uniform-bounds initializer; the Glorot/He cells and one more uniform cell
/// use the configured depth and width.
pub const FIGURE1_PAPER_STYLE_TOPOLOGIES: [(usize, usize); 2] = [(1, 100), (2, 50)];

/// Fully resolved settings of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: ExperimentName,
    pub seed: u64,
    pub reps: u64,
    pub n: usize,
    /// Values of K (ignored by the baseline protocols).
    pub ks: Vec<usize>,
    pub depth: usize,
    pub width: usize,
    /// Bounds of the protocols that do not vary them.
    pub bounds: InitBounds,
    /// Overrides t = K/2 in the fixed-schedule protocols.
    pub fixed_steps: Option<u64>,
    pub schedule: ScheduleConfig,
    pub c12: f64,
    /// Hidden-layer counts of the baseline protocol.
    pub baseline_layers: Vec<usize>,
}

impl ExperimentConfig {
    pub fn new(name: ExperimentName) -> Self {
        let ks = match name {
            ExperimentName::Table1 => vec![100, 200, 400, 800, 1600],
            ExperimentName::Table2 => vec![800],
            ExperimentName::Table3 | ExperimentName::Table4 => vec![100, 200, 400, 800],
            ExperimentName::Table5Nnfc | ExperimentName::Figure1 => vec![],
        };
        ExperimentConfig {
            name,
            seed: 1,
            reps: if name == ExperimentName::Figure1 { 10 } else { 25 },
            n: 100,
            ks,
            depth: 4,
            width: if name == ExperimentName::Figure1 { 20 } else { 8 },
            bounds: InitBounds { a: 1000.0, b: 20.0 },
            fixed_steps: None,
            schedule: ScheduleConfig::default(),
            c12: crate::DEFAULT_C12,
            baseline_layers: if name == ExperimentName::Table5Nnfc { vec![2, 4, 6] } else { vec![4] },
        }
    }

    fn arch(&self, k: usize) -> Result<Architecture> {
        Architecture::new(k, self.depth, self.width, 1)
    }

    fn fixed(&self, k: usize, bounds: InitBounds) -> Result<FitMethod> {
        let steps = self.fixed_steps.unwrap_or((k / 2) as u64);
        if steps == 0 {
            return Err(Error::InvalidConfig(format!("K = {k} gives no gradient steps")));
        }
        Ok(FitMethod::Fixed {
            bounds,
            lambda: 1.0 / steps as f64,
            steps,
        })
    }

    fn cell(&self, label: String, estimator: Estimator) -> CellConfig {
        CellConfig {
            label,
            n: self.n,
            c12: self.c12,
            estimator,
        }
    }

    fn parallel(&self, label: String, k: usize, method: FitMethod) -> Result<CellConfig> {
        Ok(self.cell(
            label,
            Estimator::Parallel {
                arch: self.arch(k)?,
                method,
            },
        ))
    }

    fn split(&self) -> SplitSpec {
        let n_train = self.n * 4 / 5;
        SplitSpec {
            n_train,
            n_test: self.n - n_train,
            grid: SplitSpec::standard_grid(),
            c12: self.c12,
        }
    }

    /// The cells of the protocol, in output order.
    pub fn cells(&self) -> Result<Vec<CellConfig>> {
        let mut cells = Vec::new();
        match self.name {
            ExperimentName::Table1 => {
                for &k in &self.ks {
                    cells.push(self.parallel(format!("K{k}"), k, self.fixed(k, self.bounds)?)?);
                }
            }
            ExperimentName::Table2 => {
                let k = *self.ks.first().ok_or_else(|| Error::InvalidConfig("no K given".into()))?;
                for b in [2.0, 20.0, 200.0, 2000.0] {
                    for a in [10.0, 100.0, 1000.0] {
                        let bounds = InitBounds { a, b };
                        cells.push(self.parallel(format!("A{a}_B{b}"), k, self.fixed(k, bounds)?)?);
                    }
                }
            }
            ExperimentName::Table3 => {
                for &k in &self.ks {
                    let method = FitMethod::Adaptive {
                        bounds: self.bounds,
                        schedule: self.schedule,
                    };
                    cells.push(self.parallel(format!("K{k}"), k, method)?);
                }
            }
            ExperimentName::Table4 => {
                for &k in &self.ks {
                    let method = FitMethod::Split {
                        split: self.split(),
                        schedule: self.schedule,
                    };
                    cells.push(self.parallel(format!("K{k}"), k, method)?);
                }
            }
            ExperimentName::Table5Nnfc => {
                for &layers in &self.baseline_layers {
                    let mut cfg = BaselineConfig::standard(layers);
                    cfg.n_train = self.n * 4 / 5;
                    cfg.c12 = self.c12;
                    cells.push(self.cell(format!("nnfc{layers}"), Estimator::Baseline(cfg)));
                }
            }
            ExperimentName::Figure1 => {
                let paper_style = InitScheme::PaperStyle {
                    a: self.bounds.a,
                    b: self.bounds.b,
                };
                let mut runs: Vec<(String, InitScheme, usize, usize)> = FIGURE1_PAPER_STYLE_TOPOLOGIES
                    .iter()
                    .map(|&(l, r)| (format!("{}_L{l}_r{r}", paper_style.name()), paper_style, l, r))
                    .collect();
                runs.push((
                    format!("{}_L{}_r{}", paper_style.name(), self.depth, self.width),
                    paper_style,
                    self.depth,
                    self.width,
                ));
                for scheme in [
                    InitScheme::GlorotNormal,
                    InitScheme::GlorotUniform,
                    InitScheme::HeNormal,
                    InitScheme::HeUniform,
                ] {
                    runs.push((scheme.name(), scheme, self.depth, self.width));
                }
                for (label, scheme, hidden_layers, width) in runs {
                    let cfg = BaselineConfig {
                        hidden_layers,
                        widths: vec![width],
                        steps: vec![self.fixed_steps.unwrap_or(1000)],
                        n_train: self.n * 4 / 5,
                        scheme,
                        adam: Default::default(),
                        c12: self.c12,
                    };
                    cells.push(self.cell(label, Estimator::Baseline(cfg)));
                }
            }
        }
        Ok(cells)
    }

    pub fn run(&self) -> Result<ExperimentReport> {
        if self.reps == 0 {
            return Err(Error::InvalidConfig("at least one replication is required".into()));
        }
        let seed = SeedStream::new(self.seed);
        let cells = self.cells()?;
        let summaries = cells
            .iter()
            .map(|cell| run_experiment(cell, self.reps, seed))
            .collect::<Result<Vec<_>>>()?;
        Ok(ExperimentReport {
            config: self.clone(),
            cells,
            summaries,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub cells: Vec<CellConfig>,
    pub summaries: Vec<ExperimentSummary>,
}

struct CellColumns {
    k: String,
    a: String,
    b: String,
}

fn cell_columns(cell: &CellConfig) -> CellColumns {
    let blank = String::new;
    match &cell.estimator {
        Estimator::Parallel { arch, method } => {
            let (a, b) = match method {
                FitMethod::Fixed { bounds, .. } | FitMethod::Adaptive { bounds, .. } => {
                    (bounds.a.to_string(), bounds.b.to_string())
                }
                FitMethod::Split { .. } => (blank(), blank()),
            };
            CellColumns {
                k: arch.blocks.to_string(),
                a,
                b,
            }
        }
        Estimator::Baseline(_) => CellColumns {
            k: blank(),
            a: blank(),
            b: blank(),
        },
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    /// Replications whose adaptive step count differs from `K/2`, per cell.
    pub fn steps_not_half_k(&self, cell: usize) -> Option<usize> {
        match &self.cells[cell].estimator {
            Estimator::Parallel { arch, .. } => Some(
                self.summaries[cell]
                    .reps
                    .iter()
                    .filter(|r| r.t_n.is_some_and(|t| t != (arch.blocks / 2) as u64))
                    .count(),
            ),
            Estimator::Baseline(_) => None,
        }
    }

    pub fn all_converged(&self) -> bool {
        self.summaries.iter().all(|s| s.diverged == 0)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("cell,k,a,b,median,iqr,replications,diverged,t_n_ne_k_half\n");
        for (i, (cell, s)) in self.cells.iter().zip(&self.summaries).enumerate() {
            let c = cell_columns(cell);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                cell.label,
                c.k,
                c.a,
                c.b,
                s.median,
                s.iqr,
                s.reps.len(),
                s.diverged,
                opt(self.steps_not_half_k(i))
            );
        }
        out
    }

    pub fn replications_csv(&self) -> String {
        let mut out = String::from(
            "cell,k,a,b,replication,l2_error,t_n,lambda,stop_reason,chosen_a,chosen_b,baseline_width,baseline_steps,diverged\n",
        );
        for (cell, s) in self.cells.iter().zip(&self.summaries) {
            let c = cell_columns(cell);
            for r in &s.reps {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                    cell.label,
                    c.k,
                    c.a,
                    c.b,
                    r.rep,
                    opt(r.l2_error),
                    opt(r.t_n),
                    opt(r.lambda),
                    opt(r.stop_reason),
                    opt(r.chosen_bounds.map(|b| b.a)),
                    opt(r.chosen_bounds.map(|b| b.b)),
                    opt(r.baseline_width),
                    opt(r.baseline_steps),
                    r.diverged
                );
            }
        }
        out
    }

    /// `(cell label, csv)` of the first replication's estimate per cell.
    pub fn curve_csvs(&self) -> Vec<(String, String)> {
        let grid = curve_grid();
        self.summaries
            .iter()
            .filter_map(|s| {
                let rep = s.reps.first().filter(|r| !r.curve.is_empty())?;
                let mut out = String::from("x,m,m_n\n");
                for (x, y) in grid.iter().zip(&rep.curve) {
                    let m = eval_m(*x).expect("grid lies in [-1, 1]");
                    let _ = writeln!(out, "{x},{m},{y}");
                }
                Some((s.label.clone(), out))
            })
            .collect()
    }

    /// Writes summary, replication and curve CSVs into `dir` and returns the
    /// file names, in a fixed order.
    pub fn write(&self, dir: &Path) -> io::Result<Vec<String>> {
        fs::create_dir_all(dir)?;
        let name = self.config.name.as_str();
        let mut files = vec![
            (format!("{name}_summary.csv"), self.summary_csv()),
            (format!("{name}_replications.csv"), self.replications_csv()),
        ];
        for (label, csv) in self.curve_csvs() {
            files.push((format!("{name}_curve_{label}.csv"), csv));
        }
        let mut names = Vec::new();
        for (file, body) in files {
            fs::write(dir.join(&file), body)?;
            names.push(file);
        }
        Ok(names)
    }
}
