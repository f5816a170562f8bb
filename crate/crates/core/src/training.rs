//! Gradient descent with a fixed schedule and with the data-dependent choice
//! of stepsize and step count.
//!
//! The adaptive procedure tries step budgets `t_hat = 2^i * t_min` with
//! stepsize `1 / t_hat` for `i = 0, 1, ...`, re-initializing the weights for
//! every `i`, and stops at the first budget whose run satisfies
//!
//! - C1: `(1/t) sum_{s<t} lambda |grad F_n(w_s)|^2 <= c9 / n`
//! - C2: `F_n(w_t) <= (1/t) sum_{s<t} F_n(w_s) + c9 / n`
//! - C3: `max_{1<=s<=t} |w_0 - w_s|^2 <= c9 ln(n) / n`
//!
//! A run is cut short as soon as C1 or C3 can no longer hold. When the budget
//! reaches `n * cap1` the current round is accepted regardless (fallback).

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::gradient::RiskEngine;
use crate::network::{distance_sq, init_weights, Architecture, InitBounds, WeightVector};
use crate::rng::{SeedStream, TAG_ROUND};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub t_min: u64,
    pub c8: f64,
    pub c9: f64,
    /// Upper bound on `cap1`; `None` keeps the theoretical `(ln n)^c8 K^3`.
    pub practical_cap: Option<u64>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            t_min: 50,
            c8: 9.0,
            c9: 10.0,
            practical_cap: Some(100_000),
        }
    }
}

impl ScheduleConfig {
    pub fn validate(&self, arch: &Architecture) -> Result<()> {
        if self.t_min == 0 {
            return Err(Error::InvalidConfig("t_min must be at least 1".into()));
        }
        if !(self.c9 > 0.0) || !self.c9.is_finite() {
            return Err(Error::InvalidConfig(format!("c9 must be positive (got {})", self.c9)));
        }
        if !(self.c8 > 2.0 * arch.depth as f64) {
            return Err(Error::InvalidConfig(format!(
                "c8 must exceed 2L = {} (got {})",
                2 * arch.depth,
                self.c8
            )));
        }
        if self.practical_cap == Some(0) {
            return Err(Error::InvalidConfig("practical cap must be positive".into()));
        }
        Ok(())
    }

    /// `min(ceil((ln n)^c8 K^3), practical_cap)`.
    pub fn cap1(&self, n: usize, blocks: usize) -> u64 {
        let theoretical = ((n as f64).ln().powf(self.c8) * (blocks as f64).powi(3)).ceil();
        let theoretical = if theoretical.is_finite() && theoretical < u64::MAX as f64 {
            (theoretical as u64).max(1)
        } else {
            u64::MAX
        };
        match self.practical_cap {
            Some(cap) => theoretical.min(cap),
            None => theoretical,
        }
    }

    /// `n * cap1`.
    pub fn cap2(&self, n: usize, blocks: usize) -> u64 {
        self.cap1(n, blocks).saturating_mul(n as u64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// C1, C2 and C3 hold at the chosen step count.
    ConditionsMet,
    /// The step budget reached the fallback band.
    FallbackCap,
    /// Fixed stepsize and step count; no conditions were checked.
    FixedSteps,
}

impl StopReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            StopReason::ConditionsMet => "conditions_met",
            StopReason::FallbackCap => "fallback_cap",
            StopReason::FixedSteps => "fixed_steps",
        }
    }
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a round of gradient descent stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundExit {
    /// Ran the full `min(t_hat, cap1)` steps.
    Budget,
    /// Accumulated gradient energy already exceeds what C1 allows.
    GradientEnergy,
    /// Left the ball around the initial weights allowed by C3.
    Distance,
}

/// Per-step diagnostics of one gradient descent run.
///
/// `risk[s]` and `dist[s]` refer to `w_s` for `s = 0..=t`, `grad_norm_sq[s]`
/// is the squared gradient norm at `w_s` for `s = 0..t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub risk: Vec<f64>,
    pub grad_norm_sq: Vec<f64>,
    pub dist: Vec<f64>,
}

impl Trace {
    pub fn steps(&self) -> usize {
        self.grad_norm_sq.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

impl Conditions {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub index: u32,
    pub lambda: f64,
    /// `t_hat = 2^i t_min` (or the fixed step count).
    pub budget: u64,
    pub exit: RoundExit,
    pub conditions: Option<Conditions>,
    pub trace: Trace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleOutcome {
    pub weights: WeightVector,
    pub lambda: f64,
    pub t: u64,
    pub doubling_index: u32,
    pub stop_reason: StopReason,
    /// Every round that was run, the accepted one last.
    pub rounds: Vec<Round>,
}

impl ScheduleOutcome {
    pub fn trace(&self) -> &Trace {
        &self.rounds.last().expect("outcome holds at least one round").trace
    }

    /// One CSV row per step of every round: `i,t,risk,grad_norm_sq,dist_from_init`.
    /// The last row of a round has no gradient.
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "i,t,risk,grad_norm_sq,dist_from_init")?;
        for round in &self.rounds {
            let tr = &round.trace;
            for s in 0..tr.risk.len() {
                match tr.grad_norm_sq.get(s) {
                    Some(g) => writeln!(out, "{},{},{},{},{}", round.index, s, tr.risk[s], g, tr.dist[s])?,
                    None => writeln!(out, "{},{},{},,{}", round.index, s, tr.risk[s], tr.dist[s])?,
                }
            }
        }
        Ok(())
    }
}

/// Plain gradient descent driver that records the trace as it goes.
struct Descent {
    engine: RiskEngine,
    start: WeightVector,
    w: WeightVector,
    grad: Vec<f64>,
    trace: Trace,
}

impl Descent {
    fn new(w0: WeightVector, data: &Dataset) -> Result<Self> {
        let engine = RiskEngine::new(w0.arch(), data)?;
        let p = w0.as_slice().len();
        Ok(Descent {
            engine,
            w: w0.clone(),
            start: w0,
            grad: vec![0.0; p],
            trace: Trace {
                dist: vec![0.0],
                ..Trace::default()
            },
        })
    }

    fn step(&mut self, lambda: f64) -> Result<()> {
        let s = self.trace.steps();
        let risk = self.engine.risk_and_gradient(&self.w, &mut self.grad)?;
        let gsq: f64 = self.grad.iter().map(|g| g * g).sum();
        if !risk.is_finite() {
            return Err(Error::Divergence { step: s, what: "empirical risk" });
        }
        if !gsq.is_finite() {
            return Err(Error::Divergence { step: s, what: "gradient" });
        }
        for (w, g) in self.w.as_mut_slice().iter_mut().zip(&self.grad) {
            *w -= lambda * g;
        }
        self.trace.risk.push(risk);
        self.trace.grad_norm_sq.push(gsq);
        self.trace
            .dist
            .push(distance_sq(self.w.as_slice(), self.start.as_slice()).sqrt());
        Ok(())
    }

    fn finish(mut self) -> Result<(WeightVector, Trace)> {
        let risk = self.engine.risk(&self.w)?;
        if !risk.is_finite() {
            return Err(Error::Divergence {
                step: self.trace.steps(),
                what: "empirical risk",
            });
        }
        self.trace.risk.push(risk);
        Ok((self.w, self.trace))
    }
}

/// `steps` iterations of `w <- w - lambda grad F_n(w)` from `w0`.
pub fn gd_run(w0: &WeightVector, data: &Dataset, lambda: f64, steps: u64) -> Result<ScheduleOutcome> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("stepsize must be positive (got {lambda})")));
    }
    if steps == 0 {
        return Err(Error::InvalidConfig("at least one step is required".into()));
    }
    let mut run = Descent::new(w0.clone(), data)?;
    for _ in 0..steps {
        run.step(lambda)?;
    }
    let (weights, trace) = run.finish()?;
    Ok(ScheduleOutcome {
        weights,
        lambda,
        t: steps,
        doubling_index: 0,
        stop_reason: StopReason::FixedSteps,
        rounds: vec![Round {
            index: 0,
            lambda,
            budget: steps,
            exit: RoundExit::Budget,
            conditions: None,
            trace,
        }],
    })
}

/// Evaluates C1-C3 for a run of `t` steps recorded in `trace`.
pub fn check_conditions(trace: &Trace, lambda: f64, t: usize, n: usize, c9: f64) -> Result<Conditions> {
    if t == 0 {
        return Err(Error::Domain("conditions are undefined for t = 0".into()));
    }
    if trace.grad_norm_sq.len() < t || trace.risk.len() <= t || trace.dist.len() <= t {
        return Err(Error::InvalidData(format!(
            "trace with {} steps cannot be checked at t = {t}",
            trace.steps()
        )));
    }
    let n = n as f64;
    let tf = t as f64;
    let energy: f64 = trace.grad_norm_sq[..t].iter().map(|g| lambda * g).sum();
    let mean_risk: f64 = trace.risk[..t].iter().sum::<f64>() / tf;
    let max_dist_sq = trace.dist[1..=t].iter().fold(0.0f64, |m, d| m.max(d * d));
    Ok(Conditions {
        c1: energy / tf <= c9 / n,
        c2: trace.risk[t] <= mean_risk + c9 / n,
        c3: max_dist_sq <= c9 * n.ln() / n,
    })
}

/// Adaptive choice of stepsize and step count by budget doubling.
///
/// Round `i` draws fresh initial weights from the substream `(ROUND, i)` of
/// `stream`, so the whole procedure is a function of `(stream, data, cfg)`.
pub fn adaptive_fit(
    arch: &Architecture,
    bounds: InitBounds,
    data: &Dataset,
    cfg: &ScheduleConfig,
    stream: SeedStream,
) -> Result<ScheduleOutcome> {
    arch.validate()?;
    cfg.validate(arch)?;
    let n = data.len();
    let cap1 = cfg.cap1(n, arch.blocks);
    let cap2 = cfg.cap2(n, arch.blocks);
    let energy_budget = cfg.c9 / n as f64;
    let radius = (cfg.c9 * (n as f64).ln() / n as f64).sqrt();

    let mut rounds = Vec::new();
    for i in 0u32.. {
        let budget = 1u64
            .checked_shl(i)
            .and_then(|p| p.checked_mul(cfg.t_min))
            .unwrap_or(u64::MAX);
        let lambda = 1.0 / budget as f64;
        let target = budget.min(cap1);
        let fallback = budget >= cap2;

        let w0 = init_weights(arch, bounds, &mut stream.child2(TAG_ROUND, i as u64).rng());
        let mut run = Descent::new(w0, data)?;
        let mut energy = 0.0;
        let exit = loop {
            run.step(lambda)?;
            let t = run.trace.steps() as u64;
            energy += lambda * run.trace.grad_norm_sq[t as usize - 1];
            if t >= target {
                break RoundExit::Budget;
            }
            if fallback {
                continue;
            }
            if energy / budget as f64 > energy_budget {
                break RoundExit::GradientEnergy;
            }
            if run.trace.dist[t as usize] > radius {
                break RoundExit::Distance;
            }
        };
        let t = run.trace.steps();
        let (weights, trace) = run.finish()?;
        let conditions = check_conditions(&trace, lambda, t, n, cfg.c9)?;
        rounds.push(Round {
            index: i,
            lambda,
            budget,
            exit,
            conditions: Some(conditions),
            trace,
        });
        if conditions.all() || fallback {
            return Ok(ScheduleOutcome {
                weights,
                lambda,
                t: t as u64,
                doubling_index: i,
                stop_reason: if conditions.all() {
                    StopReason::ConditionsMet
                } else {
                    StopReason::FallbackCap
                },
                rounds,
            });
        }
    }
    unreachable!("the budget saturates and triggers the fallback")
}
