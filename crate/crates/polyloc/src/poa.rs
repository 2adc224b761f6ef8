//! Distributed polygon outer-approximation.
//!
//! Synchronous iterations confine every agent to a convex polygon that is
//! guaranteed to contain its true position as long as no measurement
//! underestimates the true distance. The first iteration intersects anchor
//! polygons only; later iterations read every neighbor's previous polygon,
//! grow it outward by the range measurement, and intersect the results
//! with the agent's own previous polygon.
//!
//! The random angular offset of each anchor polygon is drawn once per
//! (agent, anchor) pair and reused in every iteration, so anchor polygons
//! are identical across iterations and the refinement never widens.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::Result;
use crate::geometry::{circumscribed_disk_polygon, intersect_all, offset_outward, ConvexPolygon};
use crate::model::{measured_neighbor_sets, NodeId, Scenario};

/// Per-agent polygons after some number of iterations.
#[derive(Clone, Debug)]
pub struct PoaState {
    /// Completed iterations (1 after the anchor-only pass).
    pub iteration: usize,
    /// Current polygon per agent. Anchors never appear here; their
    /// "polygon" is the exact point.
    pub polygons: BTreeMap<NodeId, ConvexPolygon>,
    /// Polygon area per agent for iterations `1..=iteration`.
    pub area_history: BTreeMap<NodeId, Vec<f64>>,
    /// Agents whose intersection came out empty at some iteration and kept
    /// their previous polygon instead.
    pub fallbacks: BTreeSet<NodeId>,
    n_edges: usize,
    /// Angular offset per (agent, anchor) pair, fixed for the whole run.
    anchor_offsets: BTreeMap<(NodeId, NodeId), f64>,
}

impl PoaState {
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn polygon(&self, agent: NodeId) -> Option<&ConvexPolygon> {
        self.polygons.get(&agent)
    }

    /// Mean polygon area over all agents at iteration `l` (1-based).
    pub fn mean_area_at(&self, l: usize) -> Option<f64> {
        let mut total = 0.0;
        let mut count = 0usize;
        for areas in self.area_history.values() {
            let a = areas.get(l.checked_sub(1)?)?;
            total += a;
            count += 1;
        }
        (count > 0).then(|| total / count as f64)
    }

    fn record_areas(&mut self) {
        for (agent, poly) in &self.polygons {
            self.area_history
                .entry(*agent)
                .or_default()
                .push(poly.area());
        }
    }
}

/// The anchor-only first iteration. Agents without any anchor in range
/// receive the deployment rectangle (the support of the uniform prior).
pub fn poa_first_iteration<R: Rng + ?Sized>(
    scenario: &Scenario,
    n_edges: usize,
    rng: &mut R,
) -> Result<PoaState> {
    let hoods = measured_neighbor_sets(scenario);
    let z = scenario.measurement_table();

    // Draw every angular offset up front in canonical (agent, anchor)
    // order, decoupling the stream from any processing order.
    let mut anchor_offsets = BTreeMap::new();
    for (agent, hood) in &hoods {
        for anchor in &hood.anchors {
            anchor_offsets.insert(
                (*agent, *anchor),
                rng.random_range(0.0..std::f64::consts::TAU),
            );
        }
    }

    let mut state = PoaState {
        iteration: 1,
        polygons: BTreeMap::new(),
        area_history: BTreeMap::new(),
        fallbacks: BTreeSet::new(),
        n_edges,
        anchor_offsets,
    };

    let deployment = scenario.deployment.to_polygon()?;
    for (agent, hood) in &hoods {
        if hood.anchors.is_empty() {
            state.polygons.insert(*agent, deployment.clone());
            continue;
        }
        let mut parts = Vec::with_capacity(hood.anchors.len());
        for anchor in &hood.anchors {
            parts.push(anchor_polygon(&state, scenario, &z, *agent, *anchor)?);
        }
        match intersect_all(&parts) {
            Some(poly) => {
                state.polygons.insert(*agent, poly);
            }
            None => {
                // Numerically empty despite guaranteed containment: fall
                // back to the prior support and flag the agent.
                state.polygons.insert(*agent, deployment.clone());
                state.fallbacks.insert(*agent);
            }
        }
    }
    state.record_areas();
    Ok(state)
}

/// One synchronous refinement step: every agent reads only iteration-`l`
/// polygons of its neighbors, scales agent polygons outward by the range
/// measurement, reuses anchor polygons verbatim, and intersects them
/// together with its own previous polygon.
///
/// Keeping the previous polygon in the intersection makes the refinement
/// monotone: offsetting is not inclusion-monotone around sharp vertices,
/// so without it a later iteration could widen an agent's polygon.
pub fn poa_iterate(state: &PoaState, scenario: &Scenario) -> Result<PoaState> {
    let hoods = measured_neighbor_sets(scenario);
    let z = scenario.measurement_table();
    let mut next = state.clone();
    next.iteration += 1;
    for (agent, hood) in &hoods {
        let (poly, fallback) = refined_polygon(state, scenario, &z, *agent, hood)?;
        next.polygons.insert(*agent, poly);
        if fallback {
            next.fallbacks.insert(*agent);
        }
    }
    next.record_areas();
    Ok(next)
}

/// The polygon agent `agent` computes from the previous state. Pure in the
/// previous state, so agents may be processed in any order.
fn refined_polygon(
    state: &PoaState,
    scenario: &Scenario,
    z: &BTreeMap<(NodeId, NodeId), f64>,
    agent: NodeId,
    hood: &crate::model::Neighborhood,
) -> Result<(ConvexPolygon, bool)> {
    let previous = state.polygons[&agent].clone();
    if hood.all.is_empty() {
        return Ok((previous, false));
    }
    let mut parts = Vec::with_capacity(hood.all.len() + 1);
    parts.push(previous.clone());
    for neighbor in &hood.all {
        if neighbor.is_anchor() {
            parts.push(anchor_polygon(state, scenario, z, agent, *neighbor)?);
        } else {
            let z_hat = z[&(*neighbor, agent)];
            parts.push(offset_outward(&state.polygons[neighbor], z_hat)?);
        }
    }
    match intersect_all(&parts) {
        Some(poly) => Ok((poly, false)),
        None => Ok((previous, true)),
    }
}

/// Regular polygon circumscribing the disk of radius `z_hat` around the
/// anchor, using the offset drawn for this (agent, anchor) pair.
fn anchor_polygon(
    state: &PoaState,
    scenario: &Scenario,
    z: &BTreeMap<(NodeId, NodeId), f64>,
    agent: NodeId,
    anchor: NodeId,
) -> Result<ConvexPolygon> {
    let center = scenario.position_of(anchor).expect("anchor in scenario");
    let z_hat = z[&(anchor, agent)];
    let alpha0 = state.anchor_offsets[&(agent, anchor)];
    circumscribed_disk_polygon(center, z_hat, state.n_edges, alpha0)
}

/// First iteration plus `n_iterations - 1` refinement steps.
pub fn run_poa<R: Rng + ?Sized>(
    scenario: &Scenario,
    n_edges: usize,
    n_iterations: usize,
    rng: &mut R,
) -> Result<PoaState> {
    assert!(n_iterations >= 1, "POA needs at least one iteration");
    let mut state = poa_first_iteration(scenario, n_edges, rng)?;
    for _ in 1..n_iterations {
        state = poa_iterate(&state, scenario)?;
    }
    Ok(state)
}

/// Drops measurements whose error is negative (possible only for
/// externally injected data; the generator never produces them). Identity
/// on generator output.
pub fn discard_violating_measurements(scenario: &Scenario) -> Scenario {
    let mut cleaned = scenario.clone();
    cleaned.measurements.retain(|m| {
        match (scenario.position_of(m.from), scenario.position_of(m.to)) {
            (Some(a), Some(b)) => m.z_hat >= a.distance(b),
            _ => true,
        }
    });
    cleaned
}
