//! Seeded procedural generation of grid and Plinko worlds, and screening of
//! Plinko targets into counterfactually relevant / irrelevant stimuli.

use crate::geometry::{self, Vec2};
use crate::physics::{self, EngineConfig, NoiseParams};
use crate::prediction::{PredictionDistribution, PredictionError};
use crate::rng;
use crate::worlds::{Ball, Cell, GridObject, GridWorld, Obstacle, PlinkoWorld};
use rand::seq::IndexedRandom;
use rand::Rng;
use rayon::prelude::*;
use std::collections::HashSet;
use thiserror::Error;

pub const MAX_REJECTIONS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldgenError {
    #[error("generation exhausted after {0} rejections")]
    GenerationExhausted(usize),
    #[error("grid must be at least 5x5, got {0}x{1}")]
    TooSmall(i32, i32),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("world has no buckets")]
    NoBuckets,
    #[error(transparent)]
    Prediction(#[from] PredictionError),
}

/// Opposite-border endpoints: left/right or top/bottom edges.
fn endpoints<R: Rng>(rng: &mut R, width: i32, height: i32) -> (Cell, Cell) {
    if rng.random_bool(0.5) {
        (Cell::new(0, rng.random_range(0..height)), Cell::new(width - 1, rng.random_range(0..height)))
    } else {
        (Cell::new(rng.random_range(0..width), 0), Cell::new(rng.random_range(0..width), height - 1))
    }
}

fn grow_polyomino<R: Rng>(rng: &mut R, size: usize, width: i32, height: i32, taken: &HashSet<Cell>) -> Option<Vec<Cell>> {
    let in_bounds = |c: Cell| c.x >= 0 && c.y >= 0 && c.x < width && c.y < height;
    let seed = Cell::new(rng.random_range(0..width), rng.random_range(0..height));
    if taken.contains(&seed) {
        return None;
    }
    let mut cells = vec![seed];
    while cells.len() < size {
        let mut frontier: Vec<Cell> = cells
            .iter()
            .flat_map(|c| c.neighbors4())
            .filter(|n| in_bounds(*n) && !taken.contains(n) && !cells.contains(n))
            .collect();
        frontier.sort();
        frontier.dedup();
        let next = *frontier.choose(rng)?;
        cells.push(next);
    }
    cells.sort();
    Some(cells)
}

/// Grid world with 5-10 polyomino objects of 3-8 cells each, start and goal
/// on opposite borders, and an object-free start-goal path.
pub fn gen_gridworld(seed: u64, width: i32, height: i32) -> Result<GridWorld, WorldgenError> {
    if width < 5 || height < 5 {
        return Err(WorldgenError::TooSmall(width, height));
    }
    let mut rng = rng::from_seed(seed);
    let n_objects = rng.random_range(5..=10usize);
    'attempt: for _ in 0..MAX_REJECTIONS {
        let (start, goal) = endpoints(&mut rng, width, height);
        let mut taken: HashSet<Cell> = HashSet::from([start, goal]);
        let mut objects = Vec::with_capacity(n_objects);
        for k in 0..n_objects {
            let size = rng.random_range(3..=8usize);
            let Some(cells) = (0..50).find_map(|_| grow_polyomino(&mut rng, size, width, height, &taken)) else {
                continue 'attempt;
            };
            taken.extend(cells.iter().copied());
            objects.push(GridObject { id: format!("o{k}"), cells, center_cross: false });
        }
        let Ok(world) = GridWorld::new(width, height, start, goal, objects) else { continue };
        if world.bfs_distance(&world.blocked_mask(&world.all_objects()), start, goal).is_some() {
            return Ok(world);
        }
    }
    Err(WorldgenError::GenerationExhausted(MAX_REJECTIONS))
}

pub const PLINKO_SIZE: f64 = 600.0;
pub const PLINKO_FLOOR: f64 = 580.0;
pub const PLINKO_BALL_Y: f64 = 40.0;
pub const PLINKO_BALL_RADIUS: f64 = 10.0;

fn random_shape<R: Rng>(rng: &mut R, x0: f64, y0: f64) -> Vec<Vec2> {
    let w = rng.random_range(20.0..=80.0);
    let h = rng.random_range(20.0..=80.0);
    let corners = geometry::rect(x0, y0, x0 + w, y0 + h);
    match rng.random_range(0..5) {
        0 => corners,
        drop => corners.into_iter().enumerate().filter(|(i, _)| *i != drop - 1).map(|(_, p)| p).collect(),
    }
}

/// Plinko world with 8-12 rectangles or right triangles (20-80 px), the
/// ball over the middle 80% of the width, and five buckets.
pub fn gen_plinko(seed: u64, n_obstacles: (usize, usize)) -> Result<PlinkoWorld, WorldgenError> {
    let mut rng = rng::from_seed(seed);
    let n = rng.random_range(n_obstacles.0..=n_obstacles.1);
    let config = EngineConfig::default();
    let gap = 2.0 * PLINKO_BALL_RADIUS + 2.0;
    for _ in 0..MAX_REJECTIONS {
        let ball_x = rng.random_range(0.1 * PLINKO_SIZE..=0.9 * PLINKO_SIZE);
        let ball = Ball { x: ball_x, y: PLINKO_BALL_Y, radius: PLINKO_BALL_RADIUS };
        // keep the top of the drop column clear
        let column = geometry::rect(ball_x - 3.0 * ball.radius, 0.0, ball_x + 3.0 * ball.radius, PLINKO_BALL_Y + 80.0);
        let mut obstacles: Vec<Obstacle> = Vec::with_capacity(n);
        let mut placed = 0;
        for _ in 0..200 {
            if placed == n {
                break;
            }
            let x0 = rng.random_range(0.0..PLINKO_SIZE - 80.0);
            let y0 = rng.random_range(PLINKO_BALL_Y + 40.0..PLINKO_FLOOR - 80.0 - gap);
            let poly = random_shape(&mut rng, x0, y0);
            let (lo, hi) = geometry::bounding_box(&poly);
            let padded = geometry::rect(lo.x - gap, lo.y - gap, hi.x + gap, hi.y + gap);
            if geometry::polygons_overlap(&poly, &column) || obstacles.iter().any(|o| geometry::polygons_overlap(&padded, &o.polygon)) {
                continue;
            }
            obstacles.push(Obstacle { id: format!("o{placed}"), polygon: poly, solid: true, probe_eligible: true });
            placed += 1;
        }
        if placed < n {
            continue;
        }
        let Ok(world) = PlinkoWorld::new(PLINKO_SIZE, PLINKO_SIZE, ball, PLINKO_FLOOR, Some(5), obstacles, vec![]) else {
            continue;
        };
        if physics::run_rollout(&world, &NoiseParams::NONE, &config, &mut rng::from_seed(0)).landed {
            return Ok(world);
        }
    }
    Err(WorldgenError::GenerationExhausted(MAX_REJECTIONS))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dissociation {
    CounterfactuallyRelevant,
    CounterfactuallyIrrelevant,
    Neither,
}

impl Dissociation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dissociation::CounterfactuallyRelevant => "counterfactually_relevant",
            Dissociation::CounterfactuallyIrrelevant => "counterfactually_irrelevant",
            Dissociation::Neither => "neither",
        }
    }
}

/// Statistics behind a screening decision.
#[derive(Debug, Clone, PartialEq)]
pub struct DissociationReport {
    pub class: Dissociation,
    pub hit_rate: f64,
    /// Modal bucket and mass with the target present.
    pub with_mode: (usize, f64),
    /// Modal bucket and mass with the target removed.
    pub without_mode: (usize, f64),
    /// Modal bucket among rollouts that touched the target.
    pub hit_mode: Option<(usize, f64)>,
}

/// Classifies `target` by paired with/without simulations.
pub fn screen_dissociation(
    world: &PlinkoWorld,
    target: &str,
    noise: &NoiseParams,
    config: &EngineConfig,
    rollouts: usize,
    seed: u64,
) -> Result<DissociationReport, WorldgenError> {
    if world.bucket_count.is_none() {
        return Err(WorldgenError::NoBuckets);
    }
    if world.obstacle_index(target).is_none() {
        return Err(WorldgenError::UnknownObject(target.to_string()));
    }
    let without = world.without_obstacle(target).expect("removing an obstacle keeps a world valid");
    let run = |w: &PlinkoWorld| -> Vec<physics::Trajectory> {
        (0..rollouts)
            .into_par_iter()
            .map(|i| physics::run_rollout(w, noise, config, &mut rng::stream(seed, i as u64)))
            .collect()
    };
    let with_runs = run(world);
    let without_runs = run(&without);
    let hits: Vec<&physics::Trajectory> = with_runs.iter().filter(|t| t.touched(target)).collect();
    let hit_rate = hits.len() as f64 / rollouts.max(1) as f64;
    let with_dist = PredictionDistribution::from_landings(world, with_runs.iter().map(|t| t.landing_x))?;
    let without_dist = PredictionDistribution::from_landings(world, without_runs.iter().map(|t| t.landing_x))?;
    let hit_dist = PredictionDistribution::from_landings(world, hits.iter().map(|t| t.landing_x)).ok();
    let with_mode = with_dist.modal_bucket().expect("buckets set");
    let without_mode = without_dist.modal_bucket().expect("buckets set");
    let hit_mode = hit_dist.and_then(|d| d.modal_bucket());
    let class = if hit_rate > 0.95 && with_mode.0 == without_mode.0 && with_mode.1 > 0.95 && without_mode.1 > 0.95 {
        Dissociation::CounterfactuallyIrrelevant
    } else if (0.40..=0.60).contains(&hit_rate) && hit_mode.is_some_and(|(b, _)| b != without_mode.0) {
        Dissociation::CounterfactuallyRelevant
    } else {
        Dissociation::Neither
    };
    Ok(DissociationReport { class, hit_rate, with_mode, without_mode, hit_mode })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_generation_is_deterministic_and_valid() {
        let a = gen_gridworld(3, 10, 10).unwrap();
        let b = gen_gridworld(3, 10, 10).unwrap();
        assert_eq!(a, b);
        assert!((5..=10).contains(&a.objects.len()));
        assert!(a.objects.iter().all(|o| (3..=8).contains(&o.cells.len())));
        assert!(matches!(gen_gridworld(0, 4, 10), Err(WorldgenError::TooSmall(4, 10))));
    }

    #[test]
    fn plinko_generation_is_deterministic_and_valid() {
        let a = gen_plinko(5, (8, 12)).unwrap();
        assert_eq!(a, gen_plinko(5, (8, 12)).unwrap());
        assert!((8..=12).contains(&a.obstacles.len()));
        assert!((60.0..=540.0).contains(&a.ball.x));
    }

    #[test]
    fn unreachable_target_is_neither() {
        let w = gen_plinko(1, (8, 8)).unwrap();
        // an obstacle far from the drop column is rarely touched
        let far = w
            .obstacles
            .iter()
            .max_by(|a, b| (a.centroid().x - w.ball.x).abs().total_cmp(&(b.centroid().x - w.ball.x).abs()))
            .unwrap();
        let r = screen_dissociation(&w, &far.id, &NoiseParams::NONE, &EngineConfig::default(), 4, 0).unwrap();
        assert!(r.hit_rate == 0.0 || r.class != Dissociation::CounterfactuallyRelevant);
        assert!(matches!(
            screen_dissociation(&w, "nope", &NoiseParams::NONE, &EngineConfig::default(), 4, 0),
            Err(WorldgenError::UnknownObject(_))
        ));
    }
}
