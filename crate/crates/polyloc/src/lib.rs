//! Cooperative indoor localization with polygon-constrained nonparametric
//! belief propagation.
//!
//! The pipeline has two stages. Polygon outer-approximation ([`poa`])
//! confines every agent's position to a convex polygon by intersecting
//! range-scaled neighbor polygons; with non-negative ranging errors the
//! true position is guaranteed to stay inside. Nonparametric belief
//! propagation ([`nbp`]) then estimates positions by message passing,
//! drawing its importance samples uniformly from those polygons instead of
//! from the whole deployment, which wastes fewer particles and converges
//! faster.
//!
//! [`geometry`] holds the convex-polygon toolkit (clipping, halfspace
//! offsetting, rejection sampling), [`model`] the topology and ranging
//! model, and [`sim`] the Monte-Carlo harness behind the `polyloc` binary.
//!
//! ```
//! use polyloc::model::generate_scenario;
//! use polyloc::nbp::run_nbp;
//! use polyloc::poa::run_poa;
//! use polyloc::sim::RunConfig;
//!
//! let config = RunConfig { n_trials: 1, ..RunConfig::desk() };
//! let scenario = generate_scenario(&config, 7).unwrap();
//! let mut rng = polyloc::seed::stream(7, &[polyloc::seed::tag::POA]);
//! let poa = run_poa(&scenario, config.n_edges, config.poa_iterations, &mut rng).unwrap();
//! let states = run_nbp(&scenario, Some(&poa), &config, 7).unwrap();
//! assert_eq!(states.len(), config.nbp_iterations);
//! ```

pub mod cli;
pub mod error;
pub mod geometry;
pub mod model;
pub mod nbp;
pub mod poa;
pub mod seed;
pub mod sim;

pub use error::{Error, Result};
