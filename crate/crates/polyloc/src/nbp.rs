//! Nonparametric belief propagation on the localization factor graph.
//!
//! Messages and beliefs are particle sets. Factor nodes filter: they draw
//! equally weighted samples of the receiver position from the sender
//! position (or belief) and the range measurement. Variable nodes multiply:
//! they coat each incoming message with Gaussian kernels and importance-
//! sample the product, drawing from either the polygon-constrained uniform
//! proposal or the lowest-spread incoming message (the unconstrained
//! baseline). Position estimates are the weighted centroids of beliefs.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{sample_uniform, ConvexPolygon, Point2};
use crate::model::{measured_neighbor_sets, NodeId, RangingModel, Scenario};
use crate::poa::PoaState;
use crate::seed::{self, tag};
use crate::sim::{ProposalKind, RunConfig};

/// Smallest admissible kernel bandwidth in meters.
pub const BANDWIDTH_FLOOR: f64 = 1e-6;

/// One weighted sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub position: Point2,
    pub weight: f64,
}

/// A normalized set of weighted samples approximating a message or belief.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    particles: Vec<Particle>,
}

impl ParticleSet {
    /// Builds a set from unnormalized non-negative weights.
    pub fn from_weighted(mut particles: Vec<Particle>) -> Result<Self> {
        if particles.is_empty() {
            return Err(Error::InvalidArgument("empty particle set".into()));
        }
        let mut total = 0.0;
        for p in &particles {
            if !(p.weight.is_finite() && p.weight >= 0.0) || !p.position.is_finite() {
                return Err(Error::InvalidArgument(format!("bad particle: {p:?}")));
            }
            total += p.weight;
        }
        if total <= 0.0 {
            return Err(Error::InvalidArgument(
                "all particle weights are zero".into(),
            ));
        }
        for p in &mut particles {
            p.weight /= total;
        }
        Ok(Self { particles })
    }

    pub fn equal_weighted(positions: Vec<Point2>) -> Self {
        assert!(!positions.is_empty(), "empty particle set");
        let w = 1.0 / positions.len() as f64;
        Self {
            particles: positions
                .into_iter()
                .map(|position| Particle {
                    position,
                    weight: w,
                })
                .collect(),
        }
    }

    pub fn particles(&self) -> &[Particle] {
        &self.particles
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Weighted centroid; the MMSE position estimate when the set is a
    /// belief.
    pub fn weighted_mean(&self) -> Point2 {
        let mut mean = Point2::default();
        for p in &self.particles {
            mean = mean + p.position * p.weight;
        }
        mean
    }

    /// Weighted covariance entries `(var_x, var_y, cov_xy)`.
    pub fn weighted_covariance(&self) -> (f64, f64, f64) {
        let mean = self.weighted_mean();
        let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
        for p in &self.particles {
            let d = p.position - mean;
            vx += p.weight * d.x * d.x;
            vy += p.weight * d.y * d.y;
            cxy += p.weight * d.x * d.y;
        }
        (vx, vy, cxy)
    }

    /// Trace of the weighted covariance, the spread measure used to rank
    /// incoming messages for the baseline proposal.
    pub fn covariance_trace(&self) -> f64 {
        let (vx, vy, _) = self.weighted_covariance();
        vx + vy
    }

    /// Effective sample size `1 / sum(w^2)`.
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self
            .particles
            .iter()
            .map(|p| p.weight * p.weight)
            .sum::<f64>()
    }

    /// Systematic resampling: `n` positions drawn by weight with a single
    /// stratified uniform.
    pub fn resample_positions<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<Point2> {
        let step = 1.0 / n as f64;
        let mut u = rng.random::<f64>() * step;
        let mut out = Vec::with_capacity(n);
        let mut acc = self.particles[0].weight;
        let mut idx = 0usize;
        for _ in 0..n {
            while acc < u && idx + 1 < self.particles.len() {
                idx += 1;
                acc += self.particles[idx].weight;
            }
            out.push(self.particles[idx].position);
            u += step;
        }
        out
    }
}

/// Symmetric 2x2 matrix, used for kernel bandwidths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMat2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymMat2 {
    pub fn diagonal(xx: f64, yy: f64) -> Self {
        Self { xx, xy: 0.0, yy }
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn is_positive_definite(&self) -> bool {
        self.xx > 0.0 && self.det() > 0.0
    }

    pub fn inverse(&self) -> Option<SymMat2> {
        let det = self.det();
        if det == 0.0 {
            return None;
        }
        Some(SymMat2 {
            xx: self.yy / det,
            xy: -self.xy / det,
            yy: self.xx / det,
        })
    }
}

/// Diagonal plug-in bandwidth: `h_dim = sigma_dim * n^(-1/6)` (the 2-D
/// rule of thumb), floored at [`BANDWIDTH_FLOOR`].
pub fn estimate_bandwidth(samples: &ParticleSet) -> SymMat2 {
    let n = samples.len() as f64;
    let (vx, vy, _) = samples.weighted_covariance();
    let factor = n.powf(-1.0 / 6.0);
    let hx = (vx.sqrt() * factor).max(BANDWIDTH_FLOOR);
    let hy = (vy.sqrt() * factor).max(BANDWIDTH_FLOOR);
    SymMat2::diagonal(hx * hx, hy * hy)
}

/// Gaussian kernel density estimate of a particle set.
#[derive(Clone, Debug)]
pub struct KernelDensity {
    centers: Vec<Point2>,
    weights: Vec<f64>,
    bandwidth: SymMat2,
    inverse: SymMat2,
    norm: f64,
}

impl KernelDensity {
    /// Coats the particles with Gaussian kernels using the plug-in
    /// bandwidth.
    pub fn from_particles(samples: &ParticleSet) -> Self {
        Self::with_bandwidth(samples, estimate_bandwidth(samples))
            .expect("plug-in bandwidth is positive definite")
    }

    pub fn with_bandwidth(samples: &ParticleSet, bandwidth: SymMat2) -> Result<Self> {
        if !bandwidth.is_positive_definite() {
            return Err(Error::InvalidArgument(format!(
                "bandwidth not positive definite: {bandwidth:?}"
            )));
        }
        let inverse = bandwidth.inverse().expect("positive definite");
        Ok(Self {
            centers: samples.particles().iter().map(|p| p.position).collect(),
            weights: samples.particles().iter().map(|p| p.weight).collect(),
            bandwidth,
            inverse,
            norm: 1.0 / (std::f64::consts::TAU * bandwidth.det().sqrt()),
        })
    }

    pub fn bandwidth(&self) -> SymMat2 {
        self.bandwidth
    }

    /// Weighted Gaussian-mixture density at `x`.
    pub fn density(&self, x: Point2) -> f64 {
        let mut acc = 0.0;
        for (center, w) in self.centers.iter().zip(&self.weights) {
            let d = x - *center;
            let md = self.inverse.xx * d.x * d.x
                + 2.0 * self.inverse.xy * d.x * d.y
                + self.inverse.yy * d.y * d.y;
            acc += w * (-0.5 * md).exp();
        }
        self.norm * acc
    }

    /// True when `x` lies within `radius` bandwidths of some center
    /// (the support proxy used by the support-consistency checks).
    pub fn within_bandwidths(&self, x: Point2, radius: f64) -> bool {
        let hx = self.bandwidth.xx.sqrt();
        let hy = self.bandwidth.yy.sqrt();
        self.centers.iter().any(|c| {
            let d = x - *c;
            let r2 = (d.x / hx).powi(2) + (d.y / hy).powi(2);
            r2 <= radius * radius
        })
    }
}

/// Where a message originates: an anchor's exact point or an agent's
/// current belief.
#[derive(Clone, Copy, Debug)]
pub enum MessageSource<'a> {
    Anchor(Point2),
    Agent(&'a ParticleSet),
}

/// Factor-node output message: `n_s` equally weighted samples of the
/// receiver position. The sender position is the anchor point or a
/// weight-resampled belief particle; the radius is the measurement minus a
/// truncated exponential error; the direction is uniform.
pub fn filter_message<R: Rng + ?Sized>(
    source: MessageSource<'_>,
    z_hat: f64,
    model: &RangingModel,
    n_s: usize,
    rng: &mut R,
) -> ParticleSet {
    assert!(n_s >= 1, "need at least one sample");
    let weight = 1.0 / n_s as f64;
    let mut particles = Vec::with_capacity(n_s);
    let emit = |origin: Point2, rng: &mut R| {
        let eps = model.draw_truncated_error(z_hat, rng);
        let d = z_hat - eps;
        let theta = rng.random_range(0.0..std::f64::consts::TAU);
        Particle {
            position: origin + Point2::new(theta.cos(), theta.sin()) * d,
            weight,
        }
    };
    match source {
        MessageSource::Anchor(p) => {
            for _ in 0..n_s {
                let particle = emit(p, rng);
                particles.push(particle);
            }
        }
        MessageSource::Agent(belief) => {
            for origin in belief.resample_positions(n_s, rng) {
                let particle = emit(origin, rng);
                particles.push(particle);
            }
        }
    }
    ParticleSet { particles }
}

/// Proposal distribution for the importance-sampled message product.
#[derive(Clone, Debug)]
pub enum Proposal {
    /// Uniform over a feasible-set polygon; density `1 / area` inside,
    /// zero outside.
    PolygonUniform(ConvexPolygon),
    /// Bootstrap-resample the incoming message with the lowest covariance
    /// trace; density is that message's kernel density estimate.
    LowestSpreadMessage,
}

/// Result of a message multiplication.
#[derive(Clone, Debug)]
pub struct MessageProduct {
    pub particles: ParticleSet,
    /// Set when the total importance weight underflowed to zero; the
    /// particles then carry uniform weights.
    pub degenerate: bool,
    /// Fraction of proposal samples whose message product was exactly
    /// zero.
    pub zero_weight_fraction: f64,
    /// Kernel densities of the incoming messages, in input order.
    pub incoming_densities: Vec<KernelDensity>,
}

/// Importance-sampled product of incoming messages: draw `n_s` proposal
/// samples and weight each by `prod_i kde_i(x) / q(x)`.
pub fn multiply_messages<R: Rng + ?Sized>(
    incoming: &[ParticleSet],
    proposal: &Proposal,
    n_s: usize,
    rng: &mut R,
) -> Result<MessageProduct> {
    if incoming.is_empty() {
        return Err(Error::InvalidArgument(
            "message product needs at least one incoming message".into(),
        ));
    }
    let densities: Vec<KernelDensity> =
        incoming.iter().map(KernelDensity::from_particles).collect();

    let (samples, proposal_density): (Vec<Point2>, Vec<f64>) = match proposal {
        Proposal::PolygonUniform(poly) => {
            let q = 1.0 / poly.area();
            let pts = sample_uniform(poly, n_s, rng);
            (pts, vec![q; n_s])
        }
        Proposal::LowestSpreadMessage => {
            let best = incoming
                .iter()
                .enumerate()
                .min_by(|(_, a), (_, b)| a.covariance_trace().total_cmp(&b.covariance_trace()))
                .map(|(i, _)| i)
                .expect("non-empty");
            let pts = incoming[best].resample_positions(n_s, rng);
            let q = pts.iter().map(|p| densities[best].density(*p)).collect();
            (pts, q)
        }
    };

    let mut weights = Vec::with_capacity(n_s);
    let mut zero_count = 0usize;
    let mut total = 0.0;
    for (x, q) in samples.iter().zip(&proposal_density) {
        let mut num = 1.0;
        for kde in &densities {
            num *= kde.density(*x);
        }
        if num == 0.0 {
            zero_count += 1;
        }
        let w = num / q;
        total += w;
        weights.push(w);
    }

    let degenerate = !(total > 0.0 && total.is_finite());
    let particles = if degenerate {
        ParticleSet::equal_weighted(samples)
    } else {
        ParticleSet::from_weighted(
            samples
                .into_iter()
                .zip(weights)
                .map(|(position, weight)| Particle { position, weight })
                .collect(),
        )?
    };
    Ok(MessageProduct {
        particles,
        degenerate,
        zero_weight_fraction: zero_count as f64 / n_s as f64,
        incoming_densities: densities,
    })
}

/// Beliefs and estimates after one synchronous iteration.
#[derive(Clone, Debug)]
pub struct BeliefState {
    /// 0 for the initial state, then 1-based iteration count.
    pub iteration: usize,
    pub beliefs: BTreeMap<NodeId, ParticleSet>,
    pub estimates: BTreeMap<NodeId, Point2>,
    /// Agents whose message product degenerated this iteration.
    pub degenerate: BTreeSet<NodeId>,
    /// Per-agent fraction of zero-weight proposal samples.
    pub zero_weight_fraction: BTreeMap<NodeId, f64>,
}

impl BeliefState {
    fn from_beliefs(iteration: usize, beliefs: BTreeMap<NodeId, ParticleSet>) -> Self {
        let estimates = beliefs
            .iter()
            .map(|(id, b)| (*id, b.weighted_mean()))
            .collect();
        Self {
            iteration,
            beliefs,
            estimates,
            degenerate: BTreeSet::new(),
            zero_weight_fraction: BTreeMap::new(),
        }
    }
}

/// One synchronous belief-propagation iteration. Every agent filters one
/// message per neighbor from the previous state, multiplies them through
/// its proposal, and re-estimates. Per-agent randomness comes from a
/// substream derived from `(nbp_seed, agent, iteration)`, so agents may be
/// processed in any order.
pub fn nbp_iteration(
    state: &BeliefState,
    scenario: &Scenario,
    proposals: &BTreeMap<NodeId, Proposal>,
    n_samples: usize,
    nbp_seed: u64,
) -> Result<BeliefState> {
    let iteration = state.iteration + 1;
    let hoods = measured_neighbor_sets(scenario);
    let z = scenario.measurement_table();
    let model = scenario.ranging_model();

    let mut next = BeliefState {
        iteration,
        beliefs: BTreeMap::new(),
        estimates: BTreeMap::new(),
        degenerate: BTreeSet::new(),
        zero_weight_fraction: BTreeMap::new(),
    };
    for agent in &scenario.agents {
        let hood = &hoods[&agent.id];
        if hood.all.is_empty() {
            // Nothing to update from; carry the previous belief.
            next.beliefs
                .insert(agent.id, state.beliefs[&agent.id].clone());
            next.estimates.insert(agent.id, state.estimates[&agent.id]);
            continue;
        }
        let mut rng = seed::stream(
            nbp_seed,
            &[tag::AGENT, u64::from(agent.id.index()), iteration as u64],
        );
        let incoming: Vec<ParticleSet> = hood
            .all
            .iter()
            .map(|sender| {
                let source = if sender.is_anchor() {
                    MessageSource::Anchor(scenario.position_of(*sender).expect("anchor"))
                } else {
                    MessageSource::Agent(&state.beliefs[sender])
                };
                filter_message(source, z[&(*sender, agent.id)], &model, n_samples, &mut rng)
            })
            .collect();
        let proposal = proposals
            .get(&agent.id)
            .ok_or_else(|| Error::Config(format!("no proposal configured for {}", agent.id)))?;
        let product = multiply_messages(&incoming, proposal, n_samples, &mut rng)?;
        if product.degenerate {
            next.degenerate.insert(agent.id);
        }
        next.zero_weight_fraction
            .insert(agent.id, product.zero_weight_fraction);
        next.estimates
            .insert(agent.id, product.particles.weighted_mean());
        next.beliefs.insert(agent.id, product.particles);
    }
    Ok(next)
}

/// Full NBP pass: initial beliefs, per-agent proposals, and
/// `config.nbp_iterations` synchronous iterations. Returns the state after
/// every iteration.
///
/// With the polygon proposal, `poa` supplies the feasible-set polygons and
/// is mandatory; initial beliefs are uniform over each agent's polygon.
/// With the baseline proposal, initial beliefs bootstrap the lowest-spread
/// filtered anchor message (agents without anchors start uniform over the
/// deployment).
pub fn run_nbp(
    scenario: &Scenario,
    poa: Option<&PoaState>,
    config: &RunConfig,
    nbp_seed: u64,
) -> Result<Vec<BeliefState>> {
    let proposals = build_proposals(scenario, poa, config)?;
    let initial = initial_beliefs(scenario, poa, config, nbp_seed)?;
    let mut states = Vec::with_capacity(config.nbp_iterations);
    let mut current = initial;
    for _ in 0..config.nbp_iterations {
        current = nbp_iteration(&current, scenario, &proposals, config.n_samples, nbp_seed)?;
        states.push(current.clone());
    }
    Ok(states)
}

fn build_proposals(
    scenario: &Scenario,
    poa: Option<&PoaState>,
    config: &RunConfig,
) -> Result<BTreeMap<NodeId, Proposal>> {
    let mut proposals = BTreeMap::new();
    match config.proposal {
        ProposalKind::Polygon => {
            let poa =
                poa.ok_or_else(|| Error::Config("polygon proposal requires a POA state".into()))?;
            for agent in &scenario.agents {
                let poly = poa.polygon(agent.id).ok_or_else(|| {
                    Error::Config(format!("POA state has no polygon for {}", agent.id))
                })?;
                proposals.insert(agent.id, Proposal::PolygonUniform(poly.clone()));
            }
        }
        ProposalKind::Baseline => {
            for agent in &scenario.agents {
                proposals.insert(agent.id, Proposal::LowestSpreadMessage);
            }
        }
    }
    Ok(proposals)
}

fn initial_beliefs(
    scenario: &Scenario,
    poa: Option<&PoaState>,
    config: &RunConfig,
    nbp_seed: u64,
) -> Result<BeliefState> {
    let hoods = measured_neighbor_sets(scenario);
    let z = scenario.measurement_table();
    let model = scenario.ranging_model();
    let deployment = scenario.deployment.to_polygon()?;

    let mut beliefs = BTreeMap::new();
    for agent in &scenario.agents {
        let mut rng = seed::stream(nbp_seed, &[tag::AGENT, u64::from(agent.id.index()), 0]);
        let belief = match config.proposal {
            ProposalKind::Polygon => {
                let poly = poa
                    .expect("checked by build_proposals")
                    .polygon(agent.id)
                    .expect("checked by build_proposals");
                ParticleSet::equal_weighted(sample_uniform(poly, config.n_samples, &mut rng))
            }
            ProposalKind::Baseline => {
                let anchors = &hoods[&agent.id].anchors;
                if anchors.is_empty() {
                    ParticleSet::equal_weighted(sample_uniform(
                        &deployment,
                        config.n_samples,
                        &mut rng,
                    ))
                } else {
                    let messages: Vec<ParticleSet> = anchors
                        .iter()
                        .map(|a| {
                            filter_message(
                                MessageSource::Anchor(scenario.position_of(*a).expect("anchor")),
                                z[&(*a, agent.id)],
                                &model,
                                config.n_samples,
                                &mut rng,
                            )
                        })
                        .collect();
                    let best = messages
                        .iter()
                        .min_by(|a, b| a.covariance_trace().total_cmp(&b.covariance_trace()))
                        .expect("non-empty");
                    ParticleSet::equal_weighted(best.resample_positions(config.n_samples, &mut rng))
                }
            }
        };
        beliefs.insert(agent.id, belief);
    }
    Ok(BeliefState::from_beliefs(0, beliefs))
}
