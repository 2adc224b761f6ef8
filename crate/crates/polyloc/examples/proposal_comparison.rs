//! Head-to-head over seeded desk-scale topologies: polygon-constrained
//! proposal vs the lowest-spread-message baseline, same scenarios, same
//! seeds. Prints the mean-error curves, convergence iterations, and the
//! outage probabilities the full batch run reports.
//!
//! ```bash
//! cargo run --release --example proposal_comparison
//! ```

use polyloc::sim::{run_trials, ProposalKind, RunConfig, Summary};

fn run(kind: ProposalKind) -> Summary {
    let config = RunConfig {
        proposal: kind,
        n_trials: 20,
        seed: 1234,
        ..RunConfig::desk()
    };
    run_trials(&config).unwrap().0
}

fn main() {
    println!("20 desk-scale topologies (20 agents, 5 anchors, 30 x 30 m), N_s = 250\n");
    let polygon = run(ProposalKind::Polygon);
    let baseline = run(ProposalKind::Baseline);

    println!("mean localization error per NBP iteration:");
    println!("  iteration   polygon   baseline");
    for (l, (p, b)) in polygon
        .mean_error_per_iteration
        .iter()
        .zip(&baseline.mean_error_per_iteration)
        .enumerate()
    {
        println!("  {:>9}   {p:7.3}   {b:8.3}", l + 1);
    }
    println!(
        "\nconvergence iteration: polygon {} vs baseline {}",
        polygon.convergence_iteration, baseline.convergence_iteration
    );
    println!(
        "converged mean error:  polygon {:.3} m vs baseline {:.3} m",
        polygon.converged_mean_error, baseline.converged_mean_error
    );
    println!(
        "outage P(e > {} m):    polygon {:.3} vs baseline {:.3}",
        polygon.outage_threshold, polygon.outage_at_threshold, baseline.outage_at_threshold
    );
    println!(
        "mean final polygon area: {:.1} m^2 (the proposal support NBP samples from)",
        polygon.mean_polygon_area_per_iteration.last().unwrap()
    );
}
