//! End-to-end checks of the CLI and the file interfaces.

use std::path::Path;
use std::process::Command;

use polyloc::model::Scenario;
use polyloc::sim::{parse_results, Summary};

fn polyloc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_polyloc"))
}

/// Small batch so the CLI tests stay quick.
const SMALL: &[&str] = &[
    "--n-agents",
    "8",
    "--n-anchors",
    "3",
    "--n-samples",
    "80",
    "--nbp-iterations",
    "3",
    "--n-trials",
    "2",
];

#[test]
fn generate_writes_a_loadable_scenario() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    let status = polyloc()
        .args(["generate", "--seed", "11", "--out"])
        .arg(&path)
        .args(SMALL)
        .status()
        .unwrap();
    assert!(status.success());
    let scenario = Scenario::read_json(&path).unwrap();
    assert_eq!(scenario.agents.len(), 8);
    assert_eq!(scenario.anchors.len(), 3);
    assert_eq!(scenario.seed, 11);
}

#[test]
fn poa_dump_has_one_area_row_per_agent_and_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("poa");
    let status = polyloc()
        .args([
            "poa",
            "--seed",
            "3",
            "--n-edges",
            "16",
            "--poa-iterations",
            "3",
        ])
        .args(SMALL)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());

    let rows = parse_results(&out.join("areas.csv")).unwrap();
    assert_eq!(rows.len(), 8 * 3);
    for row in &rows {
        assert!(row.error_m.is_none());
        assert!(row.polygon_area_m2.is_some());
    }

    let polygons: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("polygons.json")).unwrap()).unwrap();
    let records = polygons.as_array().unwrap();
    assert_eq!(records.len(), 8 * 3);
    for record in records {
        assert!(record["vertices"].as_array().unwrap().len() >= 3);
        assert!(record["area_m2"].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn poa_accepts_an_existing_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let scenario_path = dir.path().join("scenario.json");
    assert!(polyloc()
        .args(["generate", "--seed", "4", "--out"])
        .arg(&scenario_path)
        .args(SMALL)
        .status()
        .unwrap()
        .success());
    let out = dir.path().join("poa");
    let status = polyloc()
        .args(["poa", "--scenario"])
        .arg(&scenario_path)
        .args(SMALL)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("areas.csv").exists());
}

fn run_into(dir: &Path, seed: &str) {
    let status = polyloc()
        .args(["run", "--seed", seed, "--proposal", "polygon"])
        .args(SMALL)
        .arg("--out")
        .arg(dir)
        .status()
        .unwrap();
    assert!(status.success());
}

#[test]
fn identical_runs_produce_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    run_into(&a, "7");
    run_into(&b, "7");
    for file in ["results.csv", "estimates.csv", "summary.json"] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file} differs"
        );
    }

    let c = dir.path().join("c");
    run_into(&c, "8");
    assert_ne!(
        std::fs::read(a.join("results.csv")).unwrap(),
        std::fs::read(c.join("results.csv")).unwrap()
    );
}

#[test]
fn summarize_reproduces_the_run_summary() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    run_into(&run_dir, "9");
    let summary_path = dir.path().join("summary.json");
    let status = polyloc()
        .args(["summarize", "--results"])
        .arg(run_dir.join("results.csv"))
        .arg("--out")
        .arg(&summary_path)
        .status()
        .unwrap();
    assert!(status.success());

    let from_run: Summary =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("summary.json")).unwrap())
            .unwrap();
    let from_csv: Summary =
        serde_json::from_str(&std::fs::read_to_string(&summary_path).unwrap()).unwrap();
    // The CSV carries 9 significant digits, so aggregates agree to ~1e-8.
    assert_eq!(from_run.n_trials, from_csv.n_trials);
    assert_eq!(from_run.n_agents, from_csv.n_agents);
    assert_eq!(
        from_run.convergence_iteration,
        from_csv.convergence_iteration
    );
    for (a, b) in from_run
        .mean_error_per_iteration
        .iter()
        .zip(&from_csv.mean_error_per_iteration)
    {
        assert!((a - b).abs() <= 1e-7 * a.abs().max(1.0));
    }
    for (a, b) in from_run.outage_curve.iter().zip(&from_csv.outage_curve) {
        assert_eq!(a.threshold, b.threshold);
        assert_eq!(a.probability, b.probability);
    }
}

#[test]
fn summarize_rejects_empty_results() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(
        &path,
        "trial,agent,iteration,error_m,polygon_area_m2,flag\n",
    )
    .unwrap();
    let output = polyloc()
        .args(["summarize", "--results"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("no data rows"));
}

#[test]
fn config_file_feeds_the_pipeline_with_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("config.json");
    let config = polyloc::sim::RunConfig {
        n_agents: 5,
        n_anchors: 2,
        n_samples: 50,
        nbp_iterations: 2,
        n_trials: 1,
        ..polyloc::sim::RunConfig::desk()
    };
    config.write_json(&config_path).unwrap();

    let scenario_path = dir.path().join("scenario.json");
    let status = polyloc()
        .args(["generate", "--seed", "6", "--config"])
        .arg(&config_path)
        .args(["--n-agents", "9"]) // flag beats file
        .arg("--out")
        .arg(&scenario_path)
        .status()
        .unwrap();
    assert!(status.success());
    let scenario = Scenario::read_json(&scenario_path).unwrap();
    assert_eq!(scenario.agents.len(), 9);
    assert_eq!(scenario.anchors.len(), 2);
}

#[test]
fn baseline_proposal_runs_without_poa() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("baseline");
    let status = polyloc()
        .args(["run", "--seed", "5", "--proposal", "baseline"])
        .args(SMALL)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let rows = parse_results(&out.join("results.csv")).unwrap();
    assert!(rows.iter().all(|r| r.polygon_area_m2.is_none()));
}
