//! Command-line front end.
//!
//! Four subcommands mirror the pipeline stages: `generate` writes a
//! scenario file, `poa` dumps feasible-set polygons and the area curve,
//! `run` executes the full Monte-Carlo pipeline, and `summarize` rebuilds
//! aggregate curves from a result CSV.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::model::{generate_scenario, Scenario};
use crate::poa::PoaState;
use crate::seed;
use crate::sim::{
    export_estimates, export_results, parse_results, run_trials, summarize_rows, ProposalKind,
    RunConfig, RESULTS_HEADER,
};

#[derive(Parser, Debug)]
#[command(
    name = "polyloc",
    about = "Cooperative localization: polygon outer-approximation + constrained NBP",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a scenario file (topology + measurements).
    Generate(GenerateArgs),
    /// Run polygon outer-approximation and dump polygons and areas.
    Poa(PoaArgs),
    /// Run the full pipeline over a batch of trials.
    Run(RunArgs),
    /// Recompute summary curves from a result CSV.
    Summarize(SummarizeArgs),
}

/// Configuration flags shared by the pipeline subcommands. Values come
/// from (in increasing precedence) the desk-scale defaults, `--config`,
/// and individual flags.
#[derive(Args, Debug, Default)]
struct ConfigFlags {
    /// JSON file with a full run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    deployment_width: Option<f64>,
    #[arg(long)]
    deployment_height: Option<f64>,
    #[arg(long)]
    n_agents: Option<usize>,
    #[arg(long)]
    n_anchors: Option<usize>,
    #[arg(long)]
    comm_range: Option<f64>,
    /// Mean ranging error 1/lambda in meters.
    #[arg(long)]
    lambda_inv: Option<f64>,
    /// Edges per anchor polygon.
    #[arg(long)]
    n_edges: Option<usize>,
    #[arg(long)]
    poa_iterations: Option<usize>,
    /// Particles per message and belief.
    #[arg(long)]
    n_samples: Option<usize>,
    #[arg(long)]
    nbp_iterations: Option<usize>,
    #[arg(long, value_enum)]
    proposal: Option<ProposalKind>,
    /// Outage threshold in meters.
    #[arg(long)]
    outage_threshold: Option<f64>,
    #[arg(long)]
    n_trials: Option<usize>,
}

impl ConfigFlags {
    fn resolve(&self, seed: Option<u64>) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::read_json(path)?,
            None => RunConfig::desk(),
        };
        macro_rules! apply {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { config.$field = v; })*
            };
        }
        apply!(
            deployment_width,
            deployment_height,
            n_agents,
            n_anchors,
            comm_range,
            lambda_inv,
            n_edges,
            poa_iterations,
            n_samples,
            nbp_iterations,
            proposal,
            outage_threshold,
            n_trials
        );
        if let Some(s) = seed {
            config.seed = s;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    config: ConfigFlags,
    /// Seed for the generated topology; defaults to the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output scenario file.
    #[arg(long, default_value = "scenario.json")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct PoaArgs {
    #[command(flatten)]
    config: ConfigFlags,
    /// Seed used to generate the scenario (ignored with --scenario).
    #[arg(long)]
    seed: Option<u64>,
    /// Run on an existing scenario file instead of generating one.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory for polygons.json and areas.csv.
    #[arg(long, default_value = "poa_out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigFlags,
    /// Master seed for the whole batch.
    #[arg(long)]
    seed: u64,
    /// Output directory for results.csv and summary.json.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SummarizeArgs {
    /// Result CSV produced by `run`.
    #[arg(long)]
    results: PathBuf,
    /// Outage threshold in meters.
    #[arg(long, default_value_t = 1.0)]
    outage_threshold: f64,
    /// Write the summary JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parses `argv` and executes one subcommand, returning the process exit
/// code: 0 on success, 1 on a runtime error, 2 on bad flags.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            // Clap renders its own usage/help text.
            let _ = err.print();
            return if err.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(args) => generate(args),
        Command::Poa(args) => poa(args),
        Command::Run(args) => run_pipeline(args),
        Command::Summarize(args) => summarize(args),
    }
}

fn generate(args: GenerateArgs) -> Result<()> {
    let config = args.config.resolve(args.seed)?;
    let scenario = generate_scenario(&config, config.seed)?;
    scenario.write_json(&args.out)?;
    println!(
        "wrote {} ({} anchors, {} agents, {} measurements)",
        args.out.display(),
        scenario.anchors.len(),
        scenario.agents.len(),
        scenario.measurements.len()
    );
    Ok(())
}

/// Record of one polygon in the per-iteration dump.
#[derive(Serialize)]
struct PolygonRecord {
    agent: u32,
    iteration: usize,
    area_m2: f64,
    vertices: Vec<Point2>,
}

fn poa(args: PoaArgs) -> Result<()> {
    let config = args.config.resolve(args.seed)?;
    let scenario = match &args.scenario {
        Some(path) => Scenario::read_json(path)?,
        None => generate_scenario(&config, config.seed)?,
    };
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;

    let mut rng = seed::stream(scenario.seed, &[seed::tag::POA]);
    let mut records = Vec::new();
    let mut state = crate::poa::poa_first_iteration(&scenario, config.n_edges, &mut rng)?;
    record_polygons(&state, &mut records);
    for _ in 1..config.poa_iterations {
        state = crate::poa::poa_iterate(&state, &scenario)?;
        record_polygons(&state, &mut records);
    }

    let polygons_path = args.out.join("polygons.json");
    let json = serde_json::to_string_pretty(&records)
        .map_err(|e| Error::parse(&polygons_path, e.to_string()))?;
    std::fs::write(&polygons_path, json + "\n").map_err(|e| Error::io(&polygons_path, e))?;

    // Area rows reuse the result-file format; the error column stays empty.
    let areas_path = args.out.join("areas.csv");
    let mut csv = String::from(RESULTS_HEADER);
    csv.push('\n');
    for r in &records {
        let _ = writeln!(
            csv,
            "0,{},{},,{:.8e},{}",
            r.agent,
            r.iteration,
            r.area_m2,
            u8::from(
                state
                    .fallbacks
                    .contains(&crate::model::NodeId::Agent(r.agent))
            ),
        );
    }
    std::fs::write(&areas_path, csv).map_err(|e| Error::io(&areas_path, e))?;

    for l in 1..=state.iteration {
        if let Some(mean) = state.mean_area_at(l) {
            println!("iteration {l}: mean polygon area {mean:.3} m^2");
        }
    }
    println!(
        "wrote {} and {}",
        polygons_path.display(),
        areas_path.display()
    );
    Ok(())
}

fn record_polygons(state: &PoaState, records: &mut Vec<PolygonRecord>) {
    for (agent, poly) in &state.polygons {
        records.push(PolygonRecord {
            agent: agent.index(),
            iteration: state.iteration,
            area_m2: poly.area(),
            vertices: poly.vertices().to_vec(),
        });
    }
}

fn run_pipeline(args: RunArgs) -> Result<()> {
    let config = args.config.resolve(Some(args.seed))?;
    let (summary, results) = run_trials(&config)?;
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    export_results(&results, &args.out.join("results.csv"))?;
    export_estimates(&results, &args.out.join("estimates.csv"))?;
    summary.write_json(&args.out.join("summary.json"))?;
    println!(
        "{} trials, {} agents: converged at iteration {} with mean error {:.3} m, \
         outage(e > {} m) = {:.3}",
        summary.n_trials,
        summary.n_agents,
        summary.convergence_iteration,
        summary.converged_mean_error,
        summary.outage_threshold,
        summary.outage_at_threshold
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn summarize(args: SummarizeArgs) -> Result<()> {
    let rows = parse_results(&args.results)?;
    let summary = summarize_rows(&rows, args.outage_threshold)?;
    match &args.out {
        Some(path) => {
            summary.write_json(path)?;
            println!("wrote {}", path.display());
        }
        None => {
            let json = serde_json::to_string_pretty(&summary)
                .map_err(|e| Error::parse(Path::new("summary"), e.to_string()))?;
            println!("{json}");
        }
    }
    Ok(())
}
