//! Comparison models: full and random construal planners, and the decision
//! rules used to answer two-alternative memory probes.

use crate::analysis::metrics;
use crate::geometry::Vec2;
use crate::jit::JitPhysicsOutcome;
use crate::physics::{EngineConfig, NoiseParams};
use crate::planner::{self, Plan, PlanError, PlannerParams};
use crate::prediction::{self, PredictionError};
use crate::rng;
use crate::vgc::{self, Execution};
use crate::worlds::{Construal, GridWorld, PlinkoWorld, WorldError};
use rand::Rng;
use serde::Deserialize;
use std::io::Read;
use thiserror::Error;

pub const MIN_SHIFT: f64 = 10.0;
pub const MAX_SHIFT: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("lure shift {0:.3} px outside [10, 50]")]
    ShiftOutOfRange(f64),
    #[error("lure placement invalid: {0}")]
    InvalidLure(WorldError),
    #[error("no valid lure placement found for {0}")]
    LureExhausted(String),
    #[error(transparent)]
    Prediction(#[from] PredictionError),
    #[error("probe csv row {row}: {detail}")]
    ProbeCsv { row: usize, detail: String },
}

/// A probed object at its true position and at a shifted lure position.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbePair {
    pub world_id: String,
    pub object_id: String,
    pub true_position: Vec2,
    pub lure_position: Vec2,
}

impl ProbePair {
    /// Probe with the lure at `offset` from the object's centroid.
    pub fn with_offset(world: &PlinkoWorld, world_id: &str, object_id: &str, offset: Vec2) -> Result<Self, BaselineError> {
        let k = world.obstacle_index(object_id).ok_or_else(|| BaselineError::UnknownObject(object_id.to_string()))?;
        let shift = offset.norm();
        if !(MIN_SHIFT..=MAX_SHIFT).contains(&shift) {
            return Err(BaselineError::ShiftOutOfRange(shift));
        }
        let obstacle = &world.obstacles[k];
        world.with_obstacle(obstacle.translated(offset)).map_err(BaselineError::InvalidLure)?;
        let true_position = obstacle.centroid();
        Ok(ProbePair {
            world_id: world_id.to_string(),
            object_id: object_id.to_string(),
            true_position,
            lure_position: true_position + offset,
        })
    }

    /// Lure shifted by a uniform magnitude in [10, 50] px in a uniform
    /// direction, redrawn until the placement is valid.
    pub fn sample<R: Rng + ?Sized>(world: &PlinkoWorld, world_id: &str, object_id: &str, rng: &mut R) -> Result<Self, BaselineError> {
        for _ in 0..1000 {
            let magnitude = rng.random_range(MIN_SHIFT..=MAX_SHIFT);
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            match Self::with_offset(world, world_id, object_id, Vec2::new(magnitude * angle.cos(), magnitude * angle.sin())) {
                Ok(p) => return Ok(p),
                Err(BaselineError::InvalidLure(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(BaselineError::LureExhausted(object_id.to_string()))
    }

    pub fn offset(&self) -> Vec2 {
        self.lure_position - self.true_position
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalRun {
    pub plan: Plan,
    pub expansions: usize,
    pub construal: Construal,
}

/// Plans once with every object represented.
pub fn maximal_planner<R: Rng + ?Sized>(world: &GridWorld, params: &PlannerParams, rng: &mut R) -> Result<MaximalRun, PlanError> {
    let construal = world.all_objects();
    let (plan, expansions) = planner::sample_plan(world, &construal, world.start, world.goal, params, rng)?;
    Ok(MaximalRun { plan, expansions, construal })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomRun {
    pub execution: Execution,
    pub construal: Construal,
}

/// Plans with each object included independently with `inclusion_p`, then
/// executes the plan in the true world.
pub fn random_construal_planner<R: Rng + ?Sized>(
    world: &GridWorld,
    params: &PlannerParams,
    inclusion_p: f64,
    failure_value: f64,
    rng: &mut R,
) -> RandomRun {
    let p = inclusion_p.clamp(0.0, 1.0);
    let construal: Construal = world.objects.iter().filter(|_| rng.random_bool(p)).map(|o| o.id.clone()).collect();
    let execution = vgc::execute_construal_plan(world, &construal, params, failure_value, rng);
    RandomRun { execution, construal }
}

/// Average number of engine steps `id` spent in working memory, rounded.
pub fn expected_encode_count(outcomes: &[JitPhysicsOutcome], id: &str) -> usize {
    if outcomes.is_empty() {
        return 0;
    }
    let total: usize = outcomes.iter().map(|o| o.presence_steps.get(id).copied().unwrap_or(0)).sum();
    (total as f64 / outcomes.len() as f64).round() as usize
}

fn two_way(logit_diff: f64) -> f64 {
    1.0 / (1.0 + (-logit_diff).exp())
}

/// Probability of picking the true position when the remembered position is
/// an isotropic Gaussian around it with standard deviation `kappa_sd / sqrt(n)`.
pub fn signal_detection_response(encode_count: usize, probe: &ProbePair, kappa_sd: f64, choice_alpha: f64) -> f64 {
    if encode_count == 0 {
        return 0.5;
    }
    let sd_sq = kappa_sd * kappa_sd / encode_count as f64;
    // the log-density at the true position minus that at the lure
    let llr = probe.offset().norm_sq() / (2.0 * sd_sq);
    two_way(choice_alpha * llr)
}

/// Resimulation baseline: compares the landing distributions with the object
/// at each placement against the unmodified world, normalized by the
/// distance of a uniform landing distribution.
pub fn reconstructive_response(
    world: &PlinkoWorld,
    probe: &ProbePair,
    noise: &NoiseParams,
    config: &EngineConfig,
    rollouts: usize,
    choice_alpha: f64,
    seed: u64,
) -> Result<f64, BaselineError> {
    let k = world.obstacle_index(&probe.object_id).ok_or_else(|| BaselineError::UnknownObject(probe.object_id.clone()))?;
    let n = rollouts.max(1);
    let obstacle = &world.obstacles[k];
    let landings = |w: &PlinkoWorld| -> Result<Vec<f64>, BaselineError> {
        let all = vec![true; w.obstacles.len()];
        Ok(prediction::simulate_landings(w, &all, noise, config, n, seed)?.landing_xs)
    };
    let place = |at: Vec2| -> Result<PlinkoWorld, BaselineError> {
        world.with_obstacle(obstacle.translated(at - obstacle.centroid())).map_err(BaselineError::InvalidLure)
    };
    let q_ref = landings(world)?;
    let q_a = landings(&place(probe.true_position)?)?;
    let q_b = landings(&place(probe.lure_position)?)?;
    let mut uniform_rng = rng::stream(seed, u64::MAX);
    let q_uniform: Vec<f64> = (0..n).map(|_| uniform_rng.random_range(0.0..=world.width)).collect();
    let w1 = |q: &[f64]| metrics::wasserstein1(q, &q_ref).expect("nonempty samples");
    let norm = w1(&q_uniform).max(f64::MIN_POSITIVE);
    let (d_a, d_b) = (w1(&q_a) / norm, w1(&q_b) / norm);
    Ok(two_way((d_b - d_a) / choice_alpha))
}

/// Two-alternative accuracy implied by representation probability `m`.
pub fn recall_link(m: f64) -> f64 {
    0.5 + 0.5 * m.clamp(0.0, 1.0)
}

/// One row of a probe definition file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ProbeSpec {
    pub world_id: String,
    pub object_id: String,
    pub lure_dx: f64,
    pub lure_dy: f64,
}

/// Reads `world_id,object_id,lure_dx,lure_dy` rows; row numbers in errors
/// count the header as row 1.
pub fn parse_probe_csv<R: Read>(reader: R) -> Result<Vec<ProbeSpec>, BaselineError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize().enumerate() {
        out.push(row.map_err(|e| BaselineError::ProbeCsv { row: i + 2, detail: e.to_string() })?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rect;
    use crate::worlds::{Ball, Obstacle};

    fn probe(shift: f64) -> ProbePair {
        ProbePair {
            world_id: "w".into(),
            object_id: "a".into(),
            true_position: Vec2::new(100.0, 100.0),
            lure_position: Vec2::new(100.0 + shift, 100.0),
        }
    }

    #[test]
    fn signal_detection_examples() {
        assert_eq!(signal_detection_response(0, &probe(30.0), 20.0, 1.0), 0.5);
        assert_eq!(signal_detection_response(5, &probe(0.0), 20.0, 1.0), 0.5);
        let one = signal_detection_response(1, &probe(30.0), 20.0, 1.0);
        let four = signal_detection_response(4, &probe(30.0), 20.0, 1.0);
        assert!(four > one && one > 0.5);
    }

    #[test]
    fn signal_detection_is_monotone() {
        for n in 1..6 {
            for s in [10.0, 20.0, 30.0, 40.0] {
                let p = signal_detection_response(n, &probe(s), 60.0, 0.5);
                assert!(p > 0.5 && p < 1.0);
                assert!(signal_detection_response(n + 1, &probe(s), 60.0, 0.5) > p);
                assert!(signal_detection_response(n, &probe(s + 10.0), 60.0, 0.5) > p);
            }
        }
    }

    #[test]
    fn recall_link_examples() {
        assert_eq!(recall_link(0.0), 0.5);
        assert_eq!(recall_link(1.0), 1.0);
        assert!((recall_link(0.4) - 0.7).abs() < 1e-15);
    }

    fn side_world() -> PlinkoWorld {
        let o = Obstacle { id: "a".into(), polygon: rect(500.0, 300.0, 540.0, 340.0), solid: true, probe_eligible: true };
        PlinkoWorld::new(600.0, 600.0, Ball { x: 100.0, y: 50.0, radius: 10.0 }, 580.0, Some(5), vec![o], vec![]).unwrap()
    }

    #[test]
    fn probe_pair_validation() {
        let w = side_world();
        assert!(ProbePair::with_offset(&w, "w", "a", Vec2::new(20.0, 0.0)).is_ok());
        assert!(matches!(ProbePair::with_offset(&w, "w", "a", Vec2::new(5.0, 0.0)), Err(BaselineError::ShiftOutOfRange(_))));
        assert!(matches!(ProbePair::with_offset(&w, "w", "b", Vec2::new(20.0, 0.0)), Err(BaselineError::UnknownObject(_))));
        let p = ProbePair::sample(&w, "w", "a", &mut rng::from_seed(1)).unwrap();
        assert!((MIN_SHIFT..=MAX_SHIFT).contains(&p.offset().norm()));
    }

    #[test]
    fn untouched_lure_gives_chance() {
        let w = side_world();
        let p = ProbePair::with_offset(&w, "w", "a", Vec2::new(-30.0, 0.0)).unwrap();
        let r = reconstructive_response(&w, &p, &NoiseParams::FITTED, &EngineConfig::default(), 50, 0.1, 3).unwrap();
        assert!((r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn probe_csv_reports_row() {
        let ok = "world_id,object_id,lure_dx,lure_dy\nw1,a,10,0\n";
        assert_eq!(parse_probe_csv(ok.as_bytes()).unwrap()[0].lure_dx, 10.0);
        let bad = "world_id,object_id,lure_dx,lure_dy\nw1,a,10,0\nw1,b,x,0\n";
        assert!(matches!(parse_probe_csv(bad.as_bytes()), Err(BaselineError::ProbeCsv { row: 3, .. })));
    }
}
