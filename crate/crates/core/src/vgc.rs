//! Static value-guided construal.
//!
//! Every subset `c` of the scene's objects is scored by its value of
//! representation `VOR(c) = U(c) - |c|`, where `U` is the utility of
//! planning or simulating with only `c` represented. Construals are chosen
//! by a Luce rule `p(c) ∝ exp(VOR(c) / alpha)` and per-object weights are
//! the marginal inclusion probabilities.

use crate::analysis::metrics::{self, MetricError};
use crate::physics::{EngineConfig, NoiseParams};
use crate::planner::{self, PlannerParams};
use crate::prediction::{self, PredictionDistribution, PredictionError};
use crate::rng;
use crate::worlds::{Cell, Construal, GridWorld, PlinkoWorld};
use rand::Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VgcParams {
    pub luce_alpha: f64,
    pub value_rollouts: usize,
    /// Value of a plan that never reaches the goal; `None` means
    /// `-10 x` the grid's cell count.
    pub failure_value: Option<f64>,
    pub max_objects: usize,
}

impl Default for VgcParams {
    fn default() -> Self {
        VgcParams { luce_alpha: 20.0, value_rollouts: 500, failure_value: None, max_objects: 20 }
    }
}

impl VgcParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.luce_alpha > 0.0) {
            return Err("luce_alpha must be positive".into());
        }
        if self.value_rollouts == 0 {
            return Err("value_rollouts must be positive".into());
        }
        if self.failure_value.is_some_and(|f| !f.is_finite()) {
            return Err("failure_value must be finite".into());
        }
        Ok(())
    }

    pub fn failure_value_for(&self, world: &GridWorld) -> f64 {
        self.failure_value.unwrap_or(-10.0 * world.cell_count() as f64)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VgcError {
    #[error("{count} objects exceed the enumeration limit of {limit}")]
    TooManyObjects { count: usize, limit: usize },
    #[error("construal score is not finite")]
    NonFiniteScore,
    #[error("world has no buckets; total-variation utility needs them")]
    NoBuckets,
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrualScore {
    pub construal: Construal,
    pub utility: f64,
    pub cost: usize,
    pub vor: f64,
}

impl ConstrualScore {
    pub fn new(construal: Construal, utility: f64) -> Self {
        let cost = construal.len();
        ConstrualScore { construal, utility, cost, vor: utility - cost as f64 }
    }
}

/// All subsets of `objects`, in binary-counting order over the sorted ids
/// (bit `b` of the counter selects the `b`-th smallest id).
pub fn enumerate_construals(objects: &[String], max_objects: usize) -> Result<impl Iterator<Item = Construal>, VgcError> {
    if objects.len() > max_objects || objects.len() >= 64 {
        return Err(VgcError::TooManyObjects { count: objects.len(), limit: max_objects });
    }
    let mut ids = objects.to_vec();
    ids.sort();
    ids.dedup();
    let n = ids.len();
    Ok((0u64..1 << n).map(move |mask| (0..n).filter(|b| mask >> b & 1 == 1).map(|b| ids[b].clone()).collect()))
}

/// Outcome of executing a construal-relative plan in the true world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Execution {
    /// `-(steps taken)` on success, the failure value otherwise.
    pub value: f64,
    pub reached_goal: bool,
    pub expansions: usize,
}

/// Plans under `construal` from the world's start and walks the plan in the
/// true world. A move into an unrepresented object is a no-op, so a plan
/// that presses into one stays stuck until the step cap of four moves per
/// cell runs out.
pub fn execute_construal_plan<R: Rng + ?Sized>(
    world: &GridWorld,
    construal: &Construal,
    planner_params: &PlannerParams,
    failure_value: f64,
    rng: &mut R,
) -> Execution {
    let (plan, expansions) = match planner::sample_plan(world, construal, world.start, world.goal, planner_params, rng) {
        Ok(found) => found,
        Err(e) => return Execution { value: failure_value, reached_goal: false, expansions: e.expansions() },
    };
    let cap = 4 * world.cell_count();
    let mut pos: Cell = world.start;
    let mut idx = 0;
    let mut steps = 0;
    while pos != world.goal {
        if steps >= cap {
            return Execution { value: failure_value, reached_goal: false, expansions };
        }
        steps += 1;
        let next = plan.states[idx + 1];
        if world.object_at(next).is_none() {
            pos = next;
            idx += 1;
        }
    }
    Execution { value: -(steps as f64), reached_goal: true, expansions }
}

/// Mean executed value and total search expansions of a grid construal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridValue {
    pub value: f64,
    pub expansions: usize,
}

pub fn grid_construal_value(
    world: &GridWorld,
    construal: &Construal,
    planner_params: &PlannerParams,
    value_rollouts: usize,
    failure_value: f64,
    seed: u64,
) -> GridValue {
    let mut total = 0.0;
    let mut expansions = 0;
    for i in 0..value_rollouts {
        let ex = execute_construal_plan(world, construal, planner_params, failure_value, &mut rng::stream(seed, i as u64));
        total += ex.value;
        expansions += ex.expansions;
    }
    GridValue { value: total / value_rollouts as f64, expansions }
}

/// How a physics construal's prediction is compared with the full-scene
/// prediction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhysicsUtility {
    /// Negative 1-Wasserstein distance between landing positions.
    Wasserstein,
    /// Negative scaled total variation between bucket distributions.
    TotalVariation { scale: f64 },
}

fn utility_between(kind: PhysicsUtility, q_c: &PredictionDistribution, q_true: &PredictionDistribution) -> Result<f64, VgcError> {
    match kind {
        PhysicsUtility::Wasserstein => Ok(-metrics::wasserstein1(&q_c.landing_xs, &q_true.landing_xs)?),
        PhysicsUtility::TotalVariation { scale } => {
            let (Some(p), Some(q)) = (q_c.bucket_probabilities(), q_true.bucket_probabilities()) else {
                return Err(VgcError::NoBuckets);
            };
            Ok(-scale * metrics::total_variation(&p, &q)?)
        }
    }
}

/// Full-scene reference prediction shared by every construal of a world.
pub fn reference_prediction(
    world: &PlinkoWorld,
    noise: &NoiseParams,
    config: &EngineConfig,
    value_rollouts: usize,
    seed: u64,
) -> Result<PredictionDistribution, PredictionError> {
    prediction::simulate_landings(world, &vec![true; world.obstacles.len()], noise, config, value_rollouts, seed)
}

fn construal_prediction(
    world: &PlinkoWorld,
    construal: &Construal,
    noise: &NoiseParams,
    config: &EngineConfig,
    value_rollouts: usize,
    seed: u64,
) -> Result<PredictionDistribution, PredictionError> {
    prediction::simulate_landings(world, &world.active_mask(construal), noise, config, value_rollouts, seed)
}

/// `-W1(q_c, q_true)`, with both predictions drawn from the same seeded
/// streams.
pub fn physics_construal_utility_w1(
    world: &PlinkoWorld,
    construal: &Construal,
    noise: &NoiseParams,
    config: &EngineConfig,
    value_rollouts: usize,
    seed: u64,
) -> Result<f64, VgcError> {
    let q_true = reference_prediction(world, noise, config, value_rollouts, seed)?;
    let q_c = construal_prediction(world, construal, noise, config, value_rollouts, seed)?;
    utility_between(PhysicsUtility::Wasserstein, &q_c, &q_true)
}

/// `-scale * TV(q_c, q_true)` over the world's buckets.
pub fn physics_construal_utility_tv(
    world: &PlinkoWorld,
    construal: &Construal,
    noise: &NoiseParams,
    config: &EngineConfig,
    value_rollouts: usize,
    seed: u64,
    scale: f64,
) -> Result<f64, VgcError> {
    if world.bucket_count.is_none() {
        return Err(VgcError::NoBuckets);
    }
    let q_true = reference_prediction(world, noise, config, value_rollouts, seed)?;
    let q_c = construal_prediction(world, construal, noise, config, value_rollouts, seed)?;
    utility_between(PhysicsUtility::TotalVariation { scale }, &q_c, &q_true)
}

/// Luce choice probabilities over construals (max-subtracted softmax).
pub fn construal_probabilities(scores: &[ConstrualScore], luce_alpha: f64) -> Result<Vec<f64>, VgcError> {
    if scores.iter().any(|s| !s.vor.is_finite()) || !(luce_alpha > 0.0) {
        return Err(VgcError::NonFiniteScore);
    }
    let logits: Vec<f64> = scores.iter().map(|s| s.vor / luce_alpha).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Marginal probability that each object is in the chosen construal.
pub fn luce_marginals(scores: &[ConstrualScore], luce_alpha: f64) -> Result<BTreeMap<String, f64>, VgcError> {
    let probs = construal_probabilities(scores, luce_alpha)?;
    let mut weights: BTreeMap<String, f64> =
        scores.iter().flat_map(|s| s.construal.iter()).map(|id| (id.clone(), 0.0)).collect();
    for (s, p) in scores.iter().zip(&probs) {
        for id in &s.construal {
            *weights.get_mut(id).expect("collected above") += p;
        }
    }
    for w in weights.values_mut() {
        *w = w.clamp(0.0, 1.0);
    }
    Ok(weights)
}

/// Scored enumeration plus its Luce marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct VgcResult {
    pub scores: Vec<ConstrualScore>,
    pub probabilities: Vec<f64>,
    pub weights: BTreeMap<String, f64>,
    /// Search expansions spent evaluating every construal (grid only).
    pub expansions: usize,
}

impl VgcResult {
    fn assemble(ids: &[String], scores: Vec<ConstrualScore>, luce_alpha: f64, expansions: usize) -> Result<Self, VgcError> {
        let probabilities = construal_probabilities(&scores, luce_alpha)?;
        let mut weights = luce_marginals(&scores, luce_alpha)?;
        for id in ids {
            weights.entry(id.clone()).or_insert(0.0);
        }
        Ok(VgcResult { scores, probabilities, weights, expansions })
    }

    /// Highest-VOR construal (first in enumeration order on ties).
    pub fn best(&self) -> &ConstrualScore {
        self.scores
            .iter()
            .reduce(|best, s| if s.vor > best.vor { s } else { best })
            .expect("enumeration always yields the empty construal")
    }

    /// Expected utility under the Luce choice distribution.
    pub fn expected_utility(&self) -> f64 {
        self.scores.iter().zip(&self.probabilities).map(|(s, p)| s.utility * p).sum()
    }

    pub fn expected_size(&self) -> f64 {
        self.weights.values().sum()
    }
}

/// Grid VGC: each construal `k` is valued with streams derived from
/// `(seed, k)`.
pub fn run_vgc_grid(world: &GridWorld, planner_params: &PlannerParams, vgc: &VgcParams, seed: u64) -> Result<VgcResult, VgcError> {
    let ids = world.object_ids();
    let construals: Vec<Construal> = enumerate_construals(&ids, vgc.max_objects)?.collect();
    let failure = vgc.failure_value_for(world);
    let values: Vec<(ConstrualScore, usize)> = construals
        .into_par_iter()
        .enumerate()
        .map(|(k, c)| {
            let v = grid_construal_value(world, &c, planner_params, vgc.value_rollouts, failure, rng::derive_seed(seed, k as u64));
            (ConstrualScore::new(c, v.value), v.expansions)
        })
        .collect();
    let expansions = values.iter().map(|(_, e)| e).sum();
    VgcResult::assemble(&ids, values.into_iter().map(|(s, _)| s).collect(), vgc.luce_alpha, expansions)
}

/// Physics VGC. All construals and the reference share the same rollout
/// streams, so the full construal reproduces the reference exactly.
pub fn run_vgc_physics(
    world: &PlinkoWorld,
    noise: &NoiseParams,
    config: &EngineConfig,
    vgc: &VgcParams,
    utility: PhysicsUtility,
    seed: u64,
) -> Result<VgcResult, VgcError> {
    let ids = world.object_ids();
    let construals: Vec<Construal> = enumerate_construals(&ids, vgc.max_objects)?.collect();
    if matches!(utility, PhysicsUtility::TotalVariation { .. }) && world.bucket_count.is_none() {
        return Err(VgcError::NoBuckets);
    }
    let q_true = reference_prediction(world, noise, config, vgc.value_rollouts, seed)?;
    let scores = construals
        .into_iter()
        .map(|c| {
            let q_c = construal_prediction(world, &c, noise, config, vgc.value_rollouts, seed)?;
            Ok(ConstrualScore::new(c, utility_between(utility, &q_c, &q_true)?))
        })
        .collect::<Result<Vec<_>, VgcError>>()?;
    VgcResult::assemble(&ids, scores, vgc.luce_alpha, 0)
}

/// Multiplier that gives total-variation utilities the same mean magnitude
/// as Wasserstein utilities over a corpus (1 when every TV utility is 0).
pub fn tv_scale_for_corpus(
    worlds: &[PlinkoWorld],
    noise: &NoiseParams,
    config: &EngineConfig,
    vgc: &VgcParams,
    seed: u64,
) -> Result<f64, VgcError> {
    let (mut w1_sum, mut tv_sum) = (0.0, 0.0);
    for w in worlds {
        let w1 = run_vgc_physics(w, noise, config, vgc, PhysicsUtility::Wasserstein, seed)?;
        let tv = run_vgc_physics(w, noise, config, vgc, PhysicsUtility::TotalVariation { scale: 1.0 }, seed)?;
        w1_sum += w1.scores.iter().map(|s| s.utility.abs()).sum::<f64>();
        tv_sum += tv.scores.iter().map(|s| s.utility.abs()).sum::<f64>();
    }
    Ok(if tv_sum > 0.0 { w1_sum / tv_sum } else { 1.0 })
}
