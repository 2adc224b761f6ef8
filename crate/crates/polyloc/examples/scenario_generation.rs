//! Scenario generation: random agent topologies, the fixed anchor lattice,
//! one-sided ranging errors, and the lossless scenario file.
//!
//! ```bash
//! cargo run --example scenario_generation
//! ```

use polyloc::model::{generate_scenario, neighbor_sets, Scenario};
use polyloc::sim::RunConfig;

fn main() {
    let config = RunConfig {
        seed: 7,
        ..RunConfig::desk()
    };
    let scenario = generate_scenario(&config, 7).unwrap();

    println!(
        "deployment {:.0} x {:.0} m, {} anchors, {} agents, r_com {:.0} m",
        scenario.deployment.width(),
        scenario.deployment.height(),
        scenario.anchors.len(),
        scenario.agents.len(),
        scenario.comm_range
    );
    println!("anchor lattice:");
    for anchor in &scenario.anchors {
        println!(
            "  {} at ({:.1}, {:.1})",
            anchor.id, anchor.position.x, anchor.position.y
        );
    }

    let hoods = neighbor_sets(&scenario);
    let mean_anchors =
        hoods.values().map(|h| h.anchors.len()).sum::<usize>() as f64 / hoods.len() as f64;
    let mean_neighbors =
        hoods.values().map(|h| h.all.len()).sum::<usize>() as f64 / hoods.len() as f64;
    let isolated = hoods.values().filter(|h| h.anchors.is_empty()).count();
    println!(
        "\nconnectivity: {:.2} anchors and {:.2} neighbors per agent on average; \
         {isolated} agents see no anchor",
        mean_anchors, mean_neighbors
    );

    // Errors are one-sided: every measurement overestimates the distance.
    let mut worst = 0.0f64;
    let mut mean_err = 0.0;
    for m in &scenario.measurements {
        let d = scenario
            .position_of(m.from)
            .unwrap()
            .distance(scenario.position_of(m.to).unwrap());
        mean_err += m.z_hat - d;
        worst = worst.max(m.z_hat - d);
    }
    mean_err /= scenario.measurements.len() as f64;
    println!(
        "{} measurements, mean error {:.3} m (model mean {:.2}), max error {:.3} m, none negative",
        scenario.measurements.len(),
        mean_err,
        scenario.lambda_inv,
        worst
    );

    // The scenario file round-trips bit for bit.
    let dir = std::env::temp_dir().join("polyloc-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("scenario.json");
    scenario.write_json(&path).unwrap();
    let back = Scenario::read_json(&path).unwrap();
    println!(
        "\nwrote {} ({} bytes), reload is lossless: {}",
        path.display(),
        std::fs::metadata(&path).unwrap().len(),
        back == scenario
    );
}
