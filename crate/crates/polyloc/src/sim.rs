//! Monte-Carlo experiment harness: trial batches, metrics, and result
//! persistence.
//!
//! A run is a pure function of `(RunConfig, seed)`. Trial seeds are derived
//! from the master seed by the splitmix scheme in [`crate::seed`], so trials
//! are independent streams and may execute in parallel; results are always
//! reported in trial order.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};
use crate::model::generate_scenario;
use crate::nbp::run_nbp;
use crate::poa::run_poa;
use crate::seed::{self, tag};

/// Which proposal distribution NBP draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum ProposalKind {
    /// Uniform over the POA feasible-set polygon.
    #[default]
    Polygon,
    /// Bootstrap of the lowest-spread incoming message.
    Baseline,
}

/// All tunables of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub deployment_width: f64,
    pub deployment_height: f64,
    pub n_agents: usize,
    pub n_anchors: usize,
    pub comm_range: f64,
    /// Mean ranging error `1 / lambda` in meters.
    pub lambda_inv: f64,
    /// Edges per anchor polygon.
    pub n_edges: usize,
    pub poa_iterations: usize,
    /// Particles per message and belief.
    pub n_samples: usize,
    pub nbp_iterations: usize,
    pub proposal: ProposalKind,
    /// Outage threshold in meters.
    pub outage_threshold: f64,
    pub n_trials: usize,
    pub seed: u64,
}

impl RunConfig {
    /// Desk-scale configuration: small enough for CI, large enough to show
    /// the comparative trends.
    pub fn desk() -> Self {
        Self {
            deployment_width: 30.0,
            deployment_height: 30.0,
            n_agents: 20,
            n_anchors: 5,
            comm_range: 10.0,
            lambda_inv: 0.38,
            n_edges: 16,
            poa_iterations: 3,
            n_samples: 250,
            nbp_iterations: 5,
            proposal: ProposalKind::Polygon,
            outage_threshold: 1.0,
            n_trials: 50,
            seed: 0,
        }
    }

    /// Full-scale reference topology: 100 agents, 13 anchors, 100 m x
    /// 100 m, 20 m communication range, 200 topologies.
    pub fn paper_scale() -> Self {
        Self {
            deployment_width: 100.0,
            deployment_height: 100.0,
            n_agents: 100,
            n_anchors: 13,
            comm_range: 20.0,
            poa_iterations: 2,
            n_trials: 200,
            ..Self::desk()
        }
    }

    pub fn deployment(&self) -> Rect {
        Rect {
            min: Point2::new(0.0, 0.0),
            max: Point2::new(self.deployment_width, self.deployment_height),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("deployment_width", self.deployment_width),
            ("deployment_height", self.deployment_height),
            ("lambda_inv", self.lambda_inv),
            ("outage_threshold", self.outage_threshold),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if !(self.comm_range.is_finite() && self.comm_range >= 0.0) {
            return Err(Error::Config(format!(
                "comm_range must be non-negative, got {}",
                self.comm_range
            )));
        }
        let counts = [
            ("n_agents", self.n_agents),
            ("n_samples", self.n_samples),
            ("nbp_iterations", self.nbp_iterations),
            ("poa_iterations", self.poa_iterations),
            ("n_trials", self.n_trials),
        ];
        for (name, value) in counts {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if self.n_edges < 3 {
            return Err(Error::Config(format!(
                "n_edges must be at least 3, got {}",
                self.n_edges
            )));
        }
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let json =
            serde_json::to_string_pretty(self).map_err(|e| Error::parse(path, e.to_string()))?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// Per-agent outcome of one trial.
#[derive(Clone, Debug)]
pub struct AgentTrial {
    pub agent: u32,
    pub true_position: Point2,
    /// Position estimate per NBP iteration.
    pub estimates: Vec<Point2>,
    /// Localization error per NBP iteration.
    pub errors: Vec<f64>,
    /// Polygon area per POA iteration (empty for baseline runs).
    pub polygon_areas: Vec<f64>,
    /// Degenerate-product flag per NBP iteration.
    pub degenerate: Vec<bool>,
    /// Whether POA fell back to a previous polygon at some iteration.
    pub poa_fallback: bool,
}

/// Wall-clock spent in each phase of a trial. Diagnostic only; never
/// written to result files.
#[derive(Clone, Copy, Debug, Default)]
pub struct PhaseTimings {
    pub scenario: Duration,
    pub poa: Duration,
    pub nbp: Duration,
}

/// Everything recorded for one trial.
#[derive(Clone, Debug)]
pub struct TrialResult {
    pub trial: usize,
    pub trial_seed: u64,
    pub agents: Vec<AgentTrial>,
    /// Mean over agents and iterations of the zero-weight sample fraction.
    pub mean_zero_weight_fraction: f64,
    pub timings: PhaseTimings,
}

/// One point of the outage curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutagePoint {
    pub threshold: f64,
    pub probability: f64,
}

/// Aggregated metrics over a batch of trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_trials: usize,
    pub n_agents: usize,
    pub mean_error_per_iteration: Vec<f64>,
    /// First iteration whose mean error changed by less than 1% relative.
    pub convergence_iteration: usize,
    pub converged_mean_error: f64,
    pub mean_polygon_area_per_iteration: Vec<f64>,
    pub outage_threshold: f64,
    /// `P(e > outage_threshold)` at the converged iteration.
    pub outage_at_threshold: f64,
    pub outage_curve: Vec<OutagePoint>,
}

impl Summary {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let json =
            serde_json::to_string_pretty(self).map_err(|e| Error::parse(path, e.to_string()))?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Relative tolerance of the convergence criterion.
pub const CONVERGENCE_REL_TOL: f64 = 0.01;

/// Runs `config.n_trials` independent trials (in parallel) and aggregates
/// them. The whole batch is a deterministic function of the configuration.
pub fn run_trials(config: &RunConfig) -> Result<(Summary, Vec<TrialResult>)> {
    config.validate()?;
    let results: Vec<TrialResult> = (0..config.n_trials)
        .into_par_iter()
        .map(|trial| run_trial(config, trial))
        .collect::<Result<_>>()?;
    let summary = summarize_rows(&rows_from_results(&results), config.outage_threshold)?;
    Ok((summary, results))
}

/// One trial: derive the trial seed, generate a scenario, run POA when the
/// polygon proposal is selected, run NBP, and collect errors. Degeneracies
/// are recorded, never fatal.
pub fn run_trial(config: &RunConfig, trial: usize) -> Result<TrialResult> {
    let trial_seed = seed::derive(config.seed, &[tag::TRIAL, trial as u64]);
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let scenario = generate_scenario(config, trial_seed)?;
    timings.scenario = t.elapsed();

    let t = Instant::now();
    let poa = match config.proposal {
        ProposalKind::Polygon => {
            let mut rng = seed::stream(trial_seed, &[tag::POA]);
            Some(run_poa(
                &scenario,
                config.n_edges,
                config.poa_iterations,
                &mut rng,
            )?)
        }
        ProposalKind::Baseline => None,
    };
    timings.poa = t.elapsed();

    let t = Instant::now();
    let nbp_seed = seed::derive(trial_seed, &[tag::NBP]);
    let states = run_nbp(&scenario, poa.as_ref(), config, nbp_seed)?;
    timings.nbp = t.elapsed();

    let mut agents = Vec::with_capacity(scenario.agents.len());
    let mut zero_sum = 0.0;
    let mut zero_count = 0usize;
    for agent in &scenario.agents {
        let estimates: Vec<Point2> = states.iter().map(|s| s.estimates[&agent.id]).collect();
        let errors: Vec<f64> = estimates
            .iter()
            .map(|e| e.distance(agent.position))
            .collect();
        let degenerate: Vec<bool> = states
            .iter()
            .map(|s| s.degenerate.contains(&agent.id))
            .collect();
        for s in &states {
            if let Some(f) = s.zero_weight_fraction.get(&agent.id) {
                zero_sum += f;
                zero_count += 1;
            }
        }
        let (polygon_areas, poa_fallback) = match &poa {
            Some(state) => (
                state
                    .area_history
                    .get(&agent.id)
                    .cloned()
                    .unwrap_or_default(),
                state.fallbacks.contains(&agent.id),
            ),
            None => (Vec::new(), false),
        };
        agents.push(AgentTrial {
            agent: agent.id.index(),
            true_position: agent.position,
            estimates,
            errors,
            polygon_areas,
            degenerate,
            poa_fallback,
        });
    }
    Ok(TrialResult {
        trial,
        trial_seed,
        agents,
        mean_zero_weight_fraction: if zero_count > 0 {
            zero_sum / zero_count as f64
        } else {
            0.0
        },
        timings,
    })
}

/// First iteration `l` (1-based) where the mean error changes by less than
/// `rel_tol` relative between `l` and `l + 1`; the last iteration when the
/// criterion is never met.
pub fn convergence_iteration(mean_errors: &[f64], rel_tol: f64) -> usize {
    assert!(!mean_errors.is_empty(), "need at least one iteration");
    for l in 1..mean_errors.len() {
        let prev = mean_errors[l - 1];
        let change = if prev == 0.0 {
            if mean_errors[l] == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (mean_errors[l] - prev).abs() / prev
        };
        if change < rel_tol {
            return l;
        }
    }
    mean_errors.len()
}

/// Empirical `P(e > threshold)` at the converged iteration, per threshold.
pub fn outage_curve(results: &[TrialResult], thresholds: &[f64]) -> Vec<OutagePoint> {
    let mean_errors = mean_errors_per_iteration(results);
    let iteration = convergence_iteration(&mean_errors, CONVERGENCE_REL_TOL);
    let errors: Vec<f64> = results
        .iter()
        .flat_map(|r| r.agents.iter().filter_map(|a| a.errors.get(iteration - 1)))
        .copied()
        .collect();
    outage_points(&errors, thresholds)
}

fn outage_points(errors: &[f64], thresholds: &[f64]) -> Vec<OutagePoint> {
    thresholds
        .iter()
        .map(|&threshold| {
            let exceeded = errors.iter().filter(|&&e| e > threshold).count();
            OutagePoint {
                threshold,
                probability: exceeded as f64 / errors.len().max(1) as f64,
            }
        })
        .collect()
}

fn mean_errors_per_iteration(results: &[TrialResult]) -> Vec<f64> {
    let iterations = results
        .iter()
        .flat_map(|r| r.agents.iter().map(|a| a.errors.len()))
        .max()
        .unwrap_or(0);
    let mut sums = vec![0.0; iterations];
    let mut counts = vec![0usize; iterations];
    for r in results {
        for a in &r.agents {
            for (l, e) in a.errors.iter().enumerate() {
                sums[l] += e;
                counts[l] += 1;
            }
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(s, c)| s / (*c).max(1) as f64)
        .collect()
}

/// Default threshold sweep for the outage curve: 0 to 4 m in 0.1 m steps,
/// always including the configured threshold.
pub fn default_thresholds(outage_threshold: f64) -> Vec<f64> {
    let mut ts: Vec<f64> = (0..=40).map(|i| i as f64 / 10.0).collect();
    if !ts.contains(&outage_threshold) {
        ts.push(outage_threshold);
        ts.sort_by(f64::total_cmp);
    }
    ts
}

// ---------------------------------------------------------------------------
// Result files
// ---------------------------------------------------------------------------

/// One CSV record: `(trial, agent, iteration)` with the localization error
/// at that NBP iteration and the polygon area at that POA iteration (each
/// empty when the index exceeds the respective iteration count).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResultRow {
    pub trial: usize,
    pub agent: u32,
    pub iteration: usize,
    pub error_m: Option<f64>,
    pub polygon_area_m2: Option<f64>,
    pub flag: bool,
}

pub const RESULTS_HEADER: &str = "trial,agent,iteration,error_m,polygon_area_m2,flag";

/// Flattens trial results into CSV rows, one per (trial, agent, iteration).
pub fn rows_from_results(results: &[TrialResult]) -> Vec<ResultRow> {
    let mut rows = Vec::new();
    for r in results {
        for a in &r.agents {
            let iterations = a.errors.len().max(a.polygon_areas.len());
            for l in 1..=iterations {
                let degenerate = a.degenerate.get(l - 1).copied().unwrap_or(false);
                rows.push(ResultRow {
                    trial: r.trial,
                    agent: a.agent,
                    iteration: l,
                    error_m: a.errors.get(l - 1).copied(),
                    polygon_area_m2: a.polygon_areas.get(l - 1).copied(),
                    flag: degenerate || a.poa_fallback,
                });
            }
        }
    }
    rows
}

fn format_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Writes the result CSV: floats carry nine significant digits, re-exports
/// are byte-identical.
pub fn export_results(results: &[TrialResult], path: &Path) -> Result<()> {
    let rows = rows_from_results(results);
    let mut out = String::with_capacity(rows.len() * 48 + 64);
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for row in &rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.trial,
            row.agent,
            row.iteration,
            row.error_m.map(format_sig9).unwrap_or_default(),
            row.polygon_area_m2.map(format_sig9).unwrap_or_default(),
            u8::from(row.flag),
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub const ESTIMATES_HEADER: &str = "trial,agent,iteration,x_m,y_m,error_m";

/// Writes the per-iteration estimate dump: one row per (trial, agent, NBP
/// iteration) with the estimated position and its error.
pub fn export_estimates(results: &[TrialResult], path: &Path) -> Result<()> {
    let mut out = String::from(ESTIMATES_HEADER);
    out.push('\n');
    for r in results {
        for a in &r.agents {
            for (l, (e, err)) in a.estimates.iter().zip(&a.errors).enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.trial,
                    a.agent,
                    l + 1,
                    format_sig9(e.x),
                    format_sig9(e.y),
                    format_sig9(*err),
                ));
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses a result CSV back into rows.
pub fn parse_results(path: &Path) -> Result<Vec<ResultRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == RESULTS_HEADER => {}
        other => {
            return Err(Error::parse(
                path,
                format!("bad header: expected {RESULTS_HEADER:?}, got {other:?}"),
            ))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                path,
                format!(
                    "line {}: expected 6 fields, got {}",
                    lineno + 2,
                    fields.len()
                ),
            ));
        }
        let parse_err = |what: &str| Error::parse(path, format!("line {}: bad {what}", lineno + 2));
        let opt_f64 = |s: &str, what: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse::<f64>().map(Some).map_err(|_| parse_err(what))
            }
        };
        rows.push(ResultRow {
            trial: fields[0].parse().map_err(|_| parse_err("trial"))?,
            agent: fields[1].parse().map_err(|_| parse_err("agent"))?,
            iteration: fields[2].parse().map_err(|_| parse_err("iteration"))?,
            error_m: opt_f64(fields[3], "error_m")?,
            polygon_area_m2: opt_f64(fields[4], "polygon_area_m2")?,
            flag: match fields[5] {
                "0" => false,
                "1" => true,
                _ => return Err(parse_err("flag")),
            },
        });
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "no data rows".to_string()));
    }
    Ok(rows)
}

/// Aggregates CSV rows into a [`Summary`]; errors when `rows` is empty.
pub fn summarize_rows(rows: &[ResultRow], outage_threshold: f64) -> Result<Summary> {
    if rows.is_empty() {
        return Err(Error::Config("no data rows to summarize".into()));
    }
    let trials: BTreeSet<usize> = rows.iter().map(|r| r.trial).collect();
    let agents: BTreeSet<u32> = rows.iter().map(|r| r.agent).collect();

    let nbp_iterations = rows
        .iter()
        .filter(|r| r.error_m.is_some())
        .map(|r| r.iteration)
        .max()
        .unwrap_or(0);
    let mut mean_error_per_iteration = Vec::with_capacity(nbp_iterations);
    for l in 1..=nbp_iterations {
        let errs: Vec<f64> = rows
            .iter()
            .filter(|r| r.iteration == l)
            .filter_map(|r| r.error_m)
            .collect();
        mean_error_per_iteration.push(errs.iter().sum::<f64>() / errs.len().max(1) as f64);
    }

    let poa_iterations = rows
        .iter()
        .filter(|r| r.polygon_area_m2.is_some())
        .map(|r| r.iteration)
        .max()
        .unwrap_or(0);
    let mut mean_polygon_area_per_iteration = Vec::with_capacity(poa_iterations);
    for l in 1..=poa_iterations {
        let areas: Vec<f64> = rows
            .iter()
            .filter(|r| r.iteration == l)
            .filter_map(|r| r.polygon_area_m2)
            .collect();
        mean_polygon_area_per_iteration.push(areas.iter().sum::<f64>() / areas.len().max(1) as f64);
    }

    let (convergence, converged_mean_error, outage) = if nbp_iterations > 0 {
        let convergence = convergence_iteration(&mean_error_per_iteration, CONVERGENCE_REL_TOL);
        let errors_at_convergence: Vec<f64> = rows
            .iter()
            .filter(|r| r.iteration == convergence)
            .filter_map(|r| r.error_m)
            .collect();
        (
            convergence,
            mean_error_per_iteration[convergence - 1],
            outage_points(
                &errors_at_convergence,
                &default_thresholds(outage_threshold),
            ),
        )
    } else {
        (0, f64::NAN, Vec::new())
    };
    let outage_at_threshold = outage
        .iter()
        .find(|p| p.threshold == outage_threshold)
        .map_or(f64::NAN, |p| p.probability);

    Ok(Summary {
        n_trials: trials.len(),
        n_agents: agents.len(),
        mean_error_per_iteration,
        convergence_iteration: convergence,
        converged_mean_error,
        mean_polygon_area_per_iteration,
        outage_threshold,
        outage_at_threshold,
        outage_curve: outage,
    })
}
