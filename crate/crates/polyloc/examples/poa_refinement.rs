//! Polygon outer-approximation at desk scale: per-iteration area curves,
//! the guaranteed containment of true positions, and how much the second
//! iteration still shrinks well-anchored agents.
//!
//! ```bash
//! cargo run --example poa_refinement
//! ```

use polyloc::model::{generate_scenario, neighbor_sets};
use polyloc::poa::{poa_first_iteration, poa_iterate};
use polyloc::seed::{self, tag};
use polyloc::sim::RunConfig;

fn main() {
    let iterations = 4;
    let config = RunConfig {
        seed: 3,
        ..RunConfig::desk()
    };
    let scenario = generate_scenario(&config, 3).unwrap();
    let mut rng = seed::stream(3, &[tag::POA]);

    println!(
        "desk scenario: {} agents, {} anchors",
        scenario.agents.len(),
        scenario.anchors.len()
    );
    let mut state = poa_first_iteration(&scenario, config.n_edges, &mut rng).unwrap();
    loop {
        let contained = scenario
            .agents
            .iter()
            .filter(|a| state.polygon(a.id).unwrap().contains(a.position))
            .count();
        println!(
            "iteration {}: mean area {:8.2} m^2, containment {}/{}",
            state.iteration,
            state.mean_area_at(state.iteration).unwrap(),
            contained,
            scenario.agents.len()
        );
        if state.iteration == iterations {
            break;
        }
        state = poa_iterate(&state, &scenario).unwrap();
    }

    // How much does cooperation still buy once anchors are plentiful?
    // Reported over seeded topologies where every agent sees >= 3 anchors.
    let dense = RunConfig {
        deployment_width: 20.0,
        deployment_height: 20.0,
        n_agents: 10,
        n_anchors: 12,
        comm_range: 12.0,
        ..RunConfig::desk()
    };
    let mut ratios = Vec::new();
    for s in 0..40u64 {
        let scenario = generate_scenario(&dense, s).unwrap();
        if neighbor_sets(&scenario)
            .values()
            .any(|h| h.anchors.len() < 3)
        {
            continue;
        }
        let mut rng = seed::stream(s, &[tag::POA]);
        let first = poa_first_iteration(&scenario, dense.n_edges, &mut rng).unwrap();
        let second = poa_iterate(&first, &scenario).unwrap();
        for areas in second.area_history.values() {
            ratios.push((areas[0] - areas[1]) / areas[0]);
        }
    }
    let mean_reduction = ratios.iter().sum::<f64>() / ratios.len() as f64;
    println!(
        "\nwith >= 3 anchors per agent, iteration 2 shrinks areas by only {:.1}% on average \
         ({} agents over seeded topologies): anchors already did most of the work",
        100.0 * mean_reduction,
        ratios.len()
    );
}
