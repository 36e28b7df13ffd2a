//! Just-in-time construal formation.
//!
//! Each simulation step runs lookahead on the current state, encodes any
//! newly flagged objects into a [`MemoryTrace`], and culls stale entries so
//! that an object left unrefreshed for `t` steps is still present with
//! probability `t^-gamma`. Averaging the final trace over many rollouts
//! gives the construal estimate.

use crate::geometry::{self, Vec2};
use crate::physics::{EngineConfig, NoiseParams, Rollout, StepStatus, Trajectory};
use crate::planner::{self, Plan, PlanError, PlannerParams};
use crate::prediction::{PredictionDistribution, PredictionError};
use crate::rng;
use crate::worlds::{Construal, GridWorld, PlinkoWorld};
use rand::Rng;
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitParams {
    pub gamma: f64,
    pub spotlight_radius: f64,
    pub n_rollouts: usize,
    pub replan_cap: usize,
}

impl Default for JitParams {
    fn default() -> Self {
        JitParams { gamma: 0.0, spotlight_radius: 25.0, n_rollouts: 500, replan_cap: 20 }
    }
}

impl JitParams {
    pub fn validate(&self) -> Result<(), String> {
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err("gamma must be finite and non-negative".into());
        }
        if !(self.spotlight_radius > 0.0) {
            return Err("spotlight_radius must be positive".into());
        }
        if self.n_rollouts == 0 || self.replan_cap == 0 {
            return Err("n_rollouts and replan_cap must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JitError {
    #[error("more than {cap} replans")]
    ReplanCapExceeded { cap: usize, expansions: usize },
    #[error(transparent)]
    Plan(#[from] PlanError),
}

impl JitError {
    pub fn expansions(&self) -> usize {
        match self {
            JitError::ReplanCapExceeded { expansions, .. } => *expansions,
            JitError::Plan(e) => e.expansions(),
        }
    }
}

/// Working-memory contents: which objects are present and when each was
/// last encoded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryTrace {
    present: Construal,
    last_encoded: BTreeMap<String, usize>,
}

impl MemoryTrace {
    pub fn present(&self) -> &Construal {
        &self.present
    }

    pub fn last_encoded(&self, id: &str) -> Option<usize> {
        self.last_encoded.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.present.contains(id)
    }

    /// Adds (or refreshes) every flagged object with timestamp `step`.
    pub fn encode<I, S>(&mut self, flagged: I, step: usize)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        for id in flagged {
            let id = id.into();
            self.last_encoded.insert(id.clone(), step);
            self.present.insert(id);
        }
    }

    /// One forgetting step. An object of age `t >= 2` survives with
    /// probability `((t - 1) / t)^gamma`; younger objects always survive.
    pub fn cull<R: Rng + ?Sized>(&mut self, step: usize, gamma: f64, rng: &mut R) {
        if gamma == 0.0 {
            return;
        }
        let last_encoded = &self.last_encoded;
        self.present.retain(|id| {
            let age = step.saturating_sub(last_encoded[id]);
            if age < 2 {
                return true;
            }
            let survive = ((age - 1) as f64 / age as f64).powf(gamma);
            rng.random::<f64>() < survive
        });
    }
}

/// Objects of the true world containing the plan's next cell.
pub fn lookahead_grid(world: &GridWorld, plan: &Plan, position_index: usize) -> Construal {
    plan.states
        .get(position_index + 1)
        .and_then(|c| world.object_at(*c))
        .map(|o| BTreeSet::from([o.id.clone()]))
        .unwrap_or_default()
}

/// Indices of simulation-relevant obstacles within `radius` of the ball.
pub fn spotlight_indices(world: &PlinkoWorld, ball: Vec2, radius: f64) -> Vec<usize> {
    (0..world.obstacles.len())
        .filter(|&k| world.is_simulation_relevant(k))
        .filter(|&k| geometry::distance_to_polygon(&world.obstacles[k].polygon, ball) <= radius)
        .collect()
}

/// Ids of the simulation-relevant obstacles within `radius` of the ball.
pub fn lookahead_spotlight(world: &PlinkoWorld, ball: Vec2, radius: f64) -> Construal {
    spotlight_indices(world, ball, radius).into_iter().map(|k| world.obstacles[k].id.clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct JitPlanOutcome {
    pub executed: Plan,
    pub trace: MemoryTrace,
    pub expansions: usize,
    pub replans: usize,
}

/// Follows sampled plans through the true world, replanning whenever the
/// next step would enter an object that is not yet represented.
pub fn run_jit_plan<R: Rng + ?Sized>(
    world: &GridWorld,
    planner: &PlannerParams,
    jit: &JitParams,
    rng: &mut R,
) -> Result<JitPlanOutcome, JitError> {
    let mut trace = MemoryTrace::default();
    if let Some(cross) = world.center_cross() {
        trace.encode([cross.id.as_str()], 0);
    }
    let mut expansions = 0;
    let mut replans = 0;
    let mut pos = world.start;
    let mut step = 0;
    let mut executed = vec![pos];
    let mut plan = plan_from(world, &trace, pos, planner, rng, &mut expansions)?;
    let mut idx = 0;
    while pos != world.goal {
        let flagged: Vec<String> =
            lookahead_grid(world, &plan, idx).into_iter().filter(|id| !trace.contains(id)).collect();
        if !flagged.is_empty() {
            trace.encode(flagged, step);
            replans += 1;
            if replans > jit.replan_cap {
                return Err(JitError::ReplanCapExceeded { cap: jit.replan_cap, expansions });
            }
            plan = plan_from(world, &trace, pos, planner, rng, &mut expansions)?;
            idx = 0;
            continue;
        }
        idx += 1;
        pos = plan.states[idx];
        executed.push(pos);
        step += 1;
        trace.cull(step, jit.gamma, rng);
    }
    Ok(JitPlanOutcome { executed: Plan { states: executed }, trace, expansions, replans })
}

fn plan_from<R: Rng + ?Sized>(
    world: &GridWorld,
    trace: &MemoryTrace,
    pos: crate::worlds::Cell,
    planner: &PlannerParams,
    rng: &mut R,
    expansions: &mut usize,
) -> Result<Plan, JitError> {
    match planner::sample_plan(world, trace.present(), pos, world.goal, planner, rng) {
        Ok((plan, e)) => {
            *expansions += e;
            Ok(plan)
        }
        Err(e) => {
            let total = *expansions + e.expansions();
            Err(JitError::Plan(match e {
                PlanError::Unreachable { .. } => PlanError::Unreachable { expansions: total },
                PlanError::CapExceeded { .. } => PlanError::CapExceeded { expansions: total },
                other => other,
            }))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JitPhysicsOutcome {
    pub trajectory: Trajectory,
    pub trace: MemoryTrace,
    /// Number of engine steps each object spent in working memory.
    pub presence_steps: BTreeMap<String, usize>,
}

/// Simulates the ball while building the construal from the spotlight.
/// Only encoded obstacles take part in the simulation.
pub fn run_jit_physics<R: Rng + ?Sized>(
    world: &PlinkoWorld,
    noise: &NoiseParams,
    config: &EngineConfig,
    jit: &JitParams,
    rng: &mut R,
) -> JitPhysicsOutcome {
    let mut rollout = Rollout::start(world, *noise, *config, rng);
    let mut trace = MemoryTrace::default();
    let mut presence_steps: BTreeMap<String, usize> = BTreeMap::new();
    let mut active = vec![false; world.obstacles.len()];
    loop {
        let step = rollout.step_index();
        trace.cull(step, jit.gamma, rng);
        let flagged = spotlight_indices(world, rollout.state().q, jit.spotlight_radius);
        trace.encode(flagged.iter().map(|&k| world.obstacles[k].id.as_str()), step);
        for (k, o) in world.obstacles.iter().enumerate() {
            active[k] = trace.contains(&o.id);
        }
        for id in trace.present() {
            *presence_steps.entry(id.clone()).or_default() += 1;
        }
        if rollout.status() != StepStatus::Running {
            break;
        }
        rollout.step(Some(&active), rng);
    }
    JitPhysicsOutcome { trajectory: rollout.finish(), trace, presence_steps }
}

/// Monte-Carlo average construal.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrualEstimate {
    /// Fraction of rollouts whose final trace holds each object (every
    /// object of the world is listed).
    pub weights: BTreeMap<String, f64>,
    pub n_rollouts: usize,
    pub seed: u64,
    pub failures: usize,
}

impl ConstrualEstimate {
    fn from_finals<'a>(ids: Vec<String>, finals: impl Iterator<Item = Option<&'a Construal>>, n: usize, seed: u64) -> Self {
        let mut counts: BTreeMap<String, usize> = ids.into_iter().map(|id| (id, 0)).collect();
        let mut failures = 0;
        for fin in finals {
            match fin {
                Some(present) => {
                    for id in present {
                        *counts.get_mut(id).expect("trace ids come from the world") += 1;
                    }
                }
                None => failures += 1,
            }
        }
        let weights = counts.into_iter().map(|(id, c)| (id, c as f64 / n as f64)).collect();
        ConstrualEstimate { weights, n_rollouts: n, seed, failures }
    }

    pub fn mean_weight(&self) -> f64 {
        if self.weights.is_empty() {
            return 0.0;
        }
        self.weights.values().sum::<f64>() / self.weights.len() as f64
    }

    /// Expected number of represented objects.
    pub fn expected_size(&self) -> f64 {
        self.weights.values().sum()
    }
}

pub fn jit_plan_rollouts(
    world: &GridWorld,
    planner: &PlannerParams,
    jit: &JitParams,
    n: usize,
    seed: u64,
) -> Vec<Result<JitPlanOutcome, JitError>> {
    (0..n)
        .into_par_iter()
        .map(|i| run_jit_plan(world, planner, jit, &mut rng::stream(seed, i as u64)))
        .collect()
}

pub fn jit_physics_rollouts(
    world: &PlinkoWorld,
    noise: &NoiseParams,
    config: &EngineConfig,
    jit: &JitParams,
    n: usize,
    seed: u64,
) -> Vec<JitPhysicsOutcome> {
    (0..n)
        .into_par_iter()
        .map(|i| run_jit_physics(world, noise, config, jit, &mut rng::stream(seed, i as u64)))
        .collect()
}

/// Grid-domain estimate; failed rollouts count as holding no objects.
pub fn estimate_construal_grid(world: &GridWorld, planner: &PlannerParams, jit: &JitParams, n: usize, seed: u64) -> ConstrualEstimate {
    let outcomes = jit_plan_rollouts(world, planner, jit, n.max(1), seed);
    ConstrualEstimate::from_finals(world.object_ids(), outcomes.iter().map(|o| o.as_ref().ok().map(|o| o.trace.present())), n.max(1), seed)
}

pub fn estimate_construal_physics(
    world: &PlinkoWorld,
    noise: &NoiseParams,
    config: &EngineConfig,
    jit: &JitParams,
    n: usize,
    seed: u64,
) -> ConstrualEstimate {
    let outcomes = jit_physics_rollouts(world, noise, config, jit, n.max(1), seed);
    estimate_from_physics_outcomes(world, &outcomes, seed)
}

pub fn estimate_from_physics_outcomes(world: &PlinkoWorld, outcomes: &[JitPhysicsOutcome], seed: u64) -> ConstrualEstimate {
    ConstrualEstimate::from_finals(world.object_ids(), outcomes.iter().map(|o| Some(o.trace.present())), outcomes.len(), seed)
}

/// Landing distribution produced by JIT simulation.
pub fn predict_landing(
    world: &PlinkoWorld,
    noise: &NoiseParams,
    config: &EngineConfig,
    jit: &JitParams,
    n: usize,
    seed: u64,
) -> Result<PredictionDistribution, PredictionError> {
    let outcomes = jit_physics_rollouts(world, noise, config, jit, n.max(1), seed);
    PredictionDistribution::from_landings(world, outcomes.iter().map(|o| o.trajectory.landing_x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rect;
    use crate::worlds::{Ball, Cell, GridObject, Obstacle};

    #[test]
    fn encode_semantics() {
        let mut t = MemoryTrace::default();
        t.encode(Vec::<String>::new(), 3);
        assert_eq!(t, MemoryTrace::default());
        t.encode(["a"], 1);
        t.encode(["a"], 4);
        assert_eq!(t.last_encoded("a"), Some(4));
    }

    #[test]
    fn forgotten_object_returns_with_new_timestamp() {
        let mut t = MemoryTrace::default();
        t.encode(["a"], 0);
        let mut r = rng::from_seed(0);
        let mut step = 0;
        while t.contains("a") {
            step += 1;
            t.cull(step, 5.0, &mut r);
        }
        assert_eq!(t.last_encoded("a"), Some(0));
        t.encode(["a"], step + 1);
        assert!(t.contains("a"));
        assert_eq!(t.last_encoded("a"), Some(step + 1));
    }

    #[test]
    fn gamma_zero_never_forgets_and_fresh_objects_survive() {
        let mut r = rng::from_seed(1);
        let mut t = MemoryTrace::default();
        t.encode(["a"], 0);
        for step in 1..1000 {
            t.cull(step, 0.0, &mut r);
        }
        assert!(t.contains("a"));
        let mut fresh = MemoryTrace::default();
        fresh.encode(["b"], 7);
        for _ in 0..1000 {
            let mut f = fresh.clone();
            f.cull(7, 50.0, &mut r);
            f.cull(8, 50.0, &mut r);
            assert!(f.contains("b"));
        }
    }

    #[test]
    fn grid_lookahead() {
        let w = GridWorld::new(
            5,
            1,
            Cell::new(0, 0),
            Cell::new(4, 0),
            vec![GridObject { id: "o3".into(), cells: vec![Cell::new(2, 0)], center_cross: false }],
        )
        .unwrap();
        let plan = Plan { states: (0..5).map(|x| Cell::new(x, 0)).collect() };
        assert!(lookahead_grid(&w, &plan, 0).is_empty());
        assert_eq!(lookahead_grid(&w, &plan, 1), BTreeSet::from(["o3".to_string()]));
        assert!(lookahead_grid(&w, &plan, 4).is_empty());
    }

    #[test]
    fn spotlight_distance_threshold() {
        let obstacles = vec![
            Obstacle { id: "near".into(), polygon: rect(320.0, 100.0, 360.0, 140.0), solid: true, probe_eligible: true },
            Obstacle { id: "far".into(), polygon: rect(200.0, 100.0, 270.0, 140.0), solid: true, probe_eligible: true },
            Obstacle { id: "bg".into(), polygon: rect(310.0, 150.0, 340.0, 170.0), solid: false, probe_eligible: true },
        ];
        let w = PlinkoWorld::new(600.0, 600.0, Ball { x: 300.0, y: 50.0, radius: 10.0 }, 580.0, None, obstacles, vec![]).unwrap();
        // nearest points: near 20 px, far 30 px, bg 14 px but non-solid
        let seen = lookahead_spotlight(&w, Vec2::new(300.0, 120.0), 25.0);
        assert_eq!(seen, BTreeSet::from(["near".to_string()]));
        let both = lookahead_spotlight(&w, Vec2::new(300.0, 120.0), 30.0);
        assert_eq!(both.len(), 2);
    }

    #[test]
    fn no_objects_means_no_replans() {
        let cross = GridObject { id: "cross".into(), cells: vec![Cell::new(4, 0), Cell::new(4, 1)], center_cross: true };
        let w = GridWorld::new(5, 5, Cell::new(0, 4), Cell::new(3, 4), vec![cross]).unwrap();
        let out = run_jit_plan(&w, &PlannerParams::deterministic(), &JitParams::default(), &mut rng::from_seed(0)).unwrap();
        assert_eq!(out.replans, 0);
        assert_eq!(out.executed.states.len(), 4);
        assert!(out.trace.contains("cross"));
        assert_eq!(out.trace.last_encoded("cross"), Some(0));
    }

    #[test]
    fn enclosed_goal_terminates() {
        let ring = GridObject {
            id: "ring".into(),
            cells: vec![Cell::new(2, 1), Cell::new(3, 1), Cell::new(3, 2), Cell::new(3, 3), Cell::new(2, 3), Cell::new(1, 3), Cell::new(1, 2), Cell::new(1, 1)],
            center_cross: false,
        };
        let w = GridWorld::new(5, 5, Cell::new(0, 0), Cell::new(2, 2), vec![ring]).unwrap();
        for seed in 0..10 {
            let err = run_jit_plan(&w, &PlannerParams::default(), &JitParams::default(), &mut rng::from_seed(seed)).unwrap_err();
            assert!(matches!(err, JitError::ReplanCapExceeded { .. } | JitError::Plan(PlanError::Unreachable { .. })));
        }
    }

    #[test]
    fn empty_plinko_world_has_no_encodings() {
        let w = PlinkoWorld::new(600.0, 600.0, Ball { x: 300.0, y: 50.0, radius: 10.0 }, 580.0, Some(5), vec![], vec![]).unwrap();
        let out = run_jit_physics(&w, &NoiseParams::FITTED, &EngineConfig::default(), &JitParams::default(), &mut rng::from_seed(0));
        assert!(out.trace.present().is_empty());
        assert!(out.trajectory.landed);
        let est = estimate_construal_physics(&w, &NoiseParams::FITTED, &EngineConfig::default(), &JitParams::default(), 20, 1);
        assert!(est.weights.is_empty());
    }
}
