//! Two agents, two anchors each: alone, every agent is stuck with a
//! mirror ambiguity 8 m wide; the inter-agent link resolves it. Runs the
//! full pipeline (POA, then polygon-constrained NBP) on this topology.
//!
//! ```bash
//! cargo run --example running_example
//! ```

use polyloc::geometry::{Point2, Rect};
use polyloc::model::Scenario;
use polyloc::nbp::run_nbp;
use polyloc::poa::run_poa;
use polyloc::sim::{ProposalKind, RunConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn main() {
    // Agent 0 ranges to the two bottom anchors, agent 1 to the two top
    // ones, and the agents range to each other. Each agent's two anchors
    // leave a mirror position (reflection across the anchor axis) that
    // range data alone cannot rule out.
    let deployment = Rect::new(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0)).unwrap();
    let anchors = [
        Point2::new(0.0, 0.0),
        Point2::new(6.0, 0.0),
        Point2::new(4.0, 10.0),
        Point2::new(10.0, 10.0),
    ];
    let agents = [Point2::new(3.0, 4.0), Point2::new(7.0, 6.0)];
    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    let scenario =
        Scenario::assemble(deployment, &anchors, &agents, 6.0, 0.38, 2024, &mut rng).unwrap();
    println!("links:");
    for m in &scenario.measurements {
        println!("  {} -> {}: z = {:.3} m", m.from, m.to, m.z_hat);
    }

    let config = RunConfig {
        proposal: ProposalKind::Polygon,
        n_samples: 500,
        nbp_iterations: 3,
        poa_iterations: 2,
        ..RunConfig::desk()
    };
    let mut rng = ChaCha12Rng::seed_from_u64(99);
    let poa = run_poa(&scenario, config.n_edges, config.poa_iterations, &mut rng).unwrap();
    println!("\nfeasible-set polygons after POA:");
    for agent in &scenario.agents {
        let poly = poa.polygon(agent.id).unwrap();
        println!(
            "  {}: area {:.2} m^2, contains true position: {}",
            agent.id,
            poly.area(),
            poly.contains(agent.position)
        );
    }

    let states = run_nbp(&scenario, Some(&poa), &config, 99).unwrap();
    println!("\nestimates (true positions: agent0 (3,4), agent1 (7,6)):");
    for state in &states {
        print!("  iteration {}:", state.iteration);
        for agent in &scenario.agents {
            let est = state.estimates[&agent.id];
            print!(
                "  {} ({:.2}, {:.2}) err {:.2} m",
                agent.id,
                est.x,
                est.y,
                est.distance(agent.position)
            );
        }
        println!();
    }
    // The anchor-only ambiguity distance is 8 m (mirror across each
    // anchor pair's axis); cooperative estimates land well below it.
    let last = states.last().unwrap();
    let worst = scenario
        .agents
        .iter()
        .map(|a| last.estimates[&a.id].distance(a.position))
        .fold(f64::NEG_INFINITY, f64::max);
    println!("\nworst final error {worst:.2} m against an 8 m anchor-only ambiguity");
}
