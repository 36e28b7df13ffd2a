//! Landing distributions aggregated over many seeded rollouts.

use crate::physics::{self, EngineConfig, NoiseParams, Trajectory};
use crate::rng;
use crate::worlds::PlinkoWorld;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PredictionError {
    #[error("all {0} rollouts timed out before landing")]
    AllRolloutsTimedOut(usize),
}

/// Empirical landing positions, plus bucket counts when the world defines
/// buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionDistribution {
    pub landing_xs: Vec<f64>,
    pub bucket_counts: Option<Vec<usize>>,
    pub timed_out: usize,
}

impl PredictionDistribution {
    pub fn from_landings(world: &PlinkoWorld, landings: impl IntoIterator<Item = Option<f64>>) -> Result<Self, PredictionError> {
        let mut landing_xs = Vec::new();
        let mut timed_out = 0;
        for l in landings {
            match l {
                Some(x) => landing_xs.push(x),
                None => timed_out += 1,
            }
        }
        if landing_xs.is_empty() {
            return Err(PredictionError::AllRolloutsTimedOut(timed_out));
        }
        let bucket_counts = world.bucket_count.map(|n| {
            let mut counts = vec![0; n as usize];
            for &x in &landing_xs {
                counts[world.bucket_of(x).expect("bucket count set")] += 1;
            }
            counts
        });
        Ok(PredictionDistribution { landing_xs, bucket_counts, timed_out })
    }

    /// Normalized bucket probabilities.
    pub fn bucket_probabilities(&self) -> Option<Vec<f64>> {
        let counts = self.bucket_counts.as_ref()?;
        let total = self.landing_xs.len() as f64;
        Some(counts.iter().map(|c| *c as f64 / total).collect())
    }

    /// Most frequent bucket (lowest index on ties) and its probability mass.
    pub fn modal_bucket(&self) -> Option<(usize, f64)> {
        let probs = self.bucket_probabilities()?;
        let mut best = (0, probs[0]);
        for (k, p) in probs.iter().enumerate() {
            if *p > best.1 {
                best = (k, *p);
            }
        }
        Some(best)
    }

    pub fn mean(&self) -> f64 {
        self.landing_xs.iter().sum::<f64>() / self.landing_xs.len() as f64
    }
}

/// `n` rollouts with only the obstacles flagged in `active`; rollout `i`
/// draws from stream `i` of `seed`, so two calls with the same seed share
/// random numbers rollout by rollout.
pub fn simulate_trajectories(
    world: &PlinkoWorld,
    active: &[bool],
    noise: &NoiseParams,
    config: &EngineConfig,
    n: usize,
    seed: u64,
) -> Vec<Trajectory> {
    (0..n)
        .into_par_iter()
        .map(|i| physics::run_rollout_among(world, active, noise, config, &mut rng::stream(seed, i as u64)))
        .collect()
}

pub fn simulate_landings(
    world: &PlinkoWorld,
    active: &[bool],
    noise: &NoiseParams,
    config: &EngineConfig,
    n: usize,
    seed: u64,
) -> Result<PredictionDistribution, PredictionError> {
    let landings: Vec<Option<f64>> = (0..n)
        .into_par_iter()
        .map(|i| physics::run_rollout_among(world, active, noise, config, &mut rng::stream(seed, i as u64)).landing_x)
        .collect();
    PredictionDistribution::from_landings(world, landings)
}
