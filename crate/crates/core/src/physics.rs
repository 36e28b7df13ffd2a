//! Falling-ball engine for Plinko worlds.
//!
//! The engine integrates a single ball with semi-implicit Euler, resolves
//! one noisy collision per step against the active solid obstacles and the
//! side walls, and relocates the ball through active teleporter entries.
//! All randomness (initial position, collision normal rotation, restitution)
//! comes from the caller's stream, so a rollout is a pure function of its
//! inputs and seed.

use crate::geometry::{self, Vec2};
use crate::sampling;
use crate::worlds::{ObstacleRole, PlinkoWorld};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BallState {
    pub q: Vec2,
    pub v: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    /// Variance of the initial horizontal offset (px²).
    pub sigma_sq: f64,
    /// Von Mises concentration of the collision-normal rotation.
    pub kappa: f64,
    /// Variance of the restitution perturbation.
    pub s_sq: f64,
}

impl NoiseParams {
    pub const NONE: NoiseParams = NoiseParams { sigma_sq: 0.0, kappa: 0.0, s_sq: 0.0 };

    /// Best-fitting values for the physics experiments.
    pub const FITTED: NoiseParams = NoiseParams { sigma_sq: 5.0, kappa: 0.8, s_sq: 0.6 };

    pub fn validate(&self) -> Result<(), String> {
        let ok = |x: f64| x >= 0.0 && !x.is_nan();
        if ok(self.sigma_sq) && ok(self.kappa) && ok(self.s_sq) {
            Ok(())
        } else {
            Err("noise parameters must be non-negative".into())
        }
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams::FITTED
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub dt: f64,
    pub gravity: f64,
    pub base_restitution: f64,
    pub max_sim_time: f64,
    pub penetration_tolerance: f64,
    /// Per-component speed limit (px/s).
    pub velocity_cap: f64,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            dt: 1.0 / 60.0,
            gravity: 300.0,
            base_restitution: 0.5,
            max_sim_time: 10.0,
            penetration_tolerance: 0.1,
            velocity_cap: 2000.0,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err("dt must be positive".into());
        }
        if !(self.gravity > 0.0 && self.gravity.is_finite()) {
            return Err("gravity must be positive".into());
        }
        if !(self.base_restitution > 0.0 && self.base_restitution <= 1.0) {
            return Err("base_restitution must lie in (0, 1]".into());
        }
        if !(self.max_sim_time > 0.0 && self.max_sim_time.is_finite()) {
            return Err("max_sim_time must be positive".into());
        }
        if self.penetration_tolerance < 0.0 || self.velocity_cap <= 0.0 {
            return Err("tolerance and velocity cap must be positive".into());
        }
        Ok(())
    }

    pub fn max_steps(&self) -> usize {
        (self.max_sim_time / self.dt).ceil() as usize
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("degenerate contact normal ({0}, {1})")]
    DegenerateNormal(f64, f64),
}

/// What the ball touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactTarget {
    Obstacle(usize),
    LeftWall,
    RightWall,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Contact {
    pub target: ContactTarget,
    /// Unit normal pointing from the surface towards the ball.
    pub normal: Vec2,
    pub depth: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<BallState>,
    /// (step index, obstacle id) for every solid-obstacle contact.
    pub collision_events: Vec<(usize, String)>,
    pub landing_x: Option<f64>,
    pub landed: bool,
}

impl Trajectory {
    pub fn touched(&self, id: &str) -> bool {
        self.collision_events.iter().any(|(_, o)| o == id)
    }
}

pub fn sample_initial_state<R: Rng + ?Sized>(world: &PlinkoWorld, noise: &NoiseParams, rng: &mut R) -> BallState {
    let eps = sampling::normal(rng, 0.0, noise.sigma_sq);
    BallState { q: Vec2::new(world.ball.x + eps, world.ball.y), v: Vec2::ZERO }
}

/// Semi-implicit Euler free-fall step.
pub fn advance(state: BallState, config: &EngineConfig) -> BallState {
    let v = Vec2::new(state.v.x, state.v.y + config.gravity * config.dt);
    BallState { q: state.q + v * config.dt, v }
}

fn cap_velocity(v: Vec2, cap: f64) -> Vec2 {
    Vec2::new(v.x.clamp(-cap, cap), v.y.clamp(-cap, cap))
}

fn wall_contacts(q: Vec2, radius: f64, width: f64) -> impl Iterator<Item = Contact> {
    let left = (q.x - radius < 0.0).then(|| Contact { target: ContactTarget::LeftWall, normal: Vec2::new(1.0, 0.0), depth: radius - q.x });
    let right = (q.x + radius > width)
        .then(|| Contact { target: ContactTarget::RightWall, normal: Vec2::new(-1.0, 0.0), depth: q.x + radius - width });
    left.into_iter().chain(right)
}

/// Deepest overlap with a solid obstacle among `active` (all when `None`)
/// or with a side wall.
pub fn detect_collision_among(state: &BallState, radius: f64, world: &PlinkoWorld, active: Option<&[bool]>) -> Option<Contact> {
    let obstacles = world.obstacles.iter().enumerate().filter_map(|(k, o)| {
        let live = active.is_none_or(|a| a[k]);
        if !live || world.role(k) != ObstacleRole::Solid {
            return None;
        }
        geometry::circle_polygon_contact(&o.polygon, state.q, radius)
            .map(|(normal, depth)| Contact { target: ContactTarget::Obstacle(k), normal, depth })
    });
    obstacles
        .chain(wall_contacts(state.q, radius, world.width))
        .fold(None, |best: Option<Contact>, c| match best {
            Some(b) if b.depth >= c.depth => Some(b),
            _ => Some(c),
        })
}

pub fn detect_collision(state: &BallState, radius: f64, world: &PlinkoWorld) -> Option<Contact> {
    detect_collision_among(state, radius, world, None)
}

/// Noisy collision response.
///
/// The velocity is reflected about the contact normal after rotating it by
/// a Von Mises angle, with the normal component scaled by a truncated-normal
/// restitution. The position is pushed out along the geometric normal so
/// the ball always ends clear of the surface, and any leftover velocity
/// into the surface is removed.
pub fn resolve_collision<R: Rng + ?Sized>(
    state: &BallState,
    normal: Vec2,
    depth: f64,
    noise: &NoiseParams,
    config: &EngineConfig,
    rng: &mut R,
) -> Result<BallState, PhysicsError> {
    let len = normal.norm();
    if !(len > 1e-9) || !len.is_finite() {
        return Err(PhysicsError::DegenerateNormal(normal.x, normal.y));
    }
    let n = normal * (1.0 / len);
    let rotated = n.rotate(sampling::von_mises(rng, noise.kappa));
    let e = sampling::truncated_normal(rng, config.base_restitution, noise.s_sq, 0.0, 1.0);
    let q = state.q + n * (depth.max(0.0) + config.penetration_tolerance);
    let mut v = state.v;
    let vn = v.dot(rotated);
    if vn < 0.0 {
        v = v - rotated * ((1.0 + e) * vn);
    }
    let inward = v.dot(n);
    if inward < 0.0 {
        v = v - n * inward;
    }
    Ok(BallState { q, v })
}

fn separate(state: &mut BallState, contact: &Contact, tolerance: f64) {
    state.q += contact.normal * (contact.depth + tolerance);
    let inward = state.v.dot(contact.normal);
    if inward < 0.0 {
        state.v = state.v - contact.normal * inward;
    }
}

/// Moves the ball to the paired exit centroid when its disk touches an
/// active teleporter entry.
pub fn apply_teleport_among(state: &BallState, world: &PlinkoWorld, active: Option<&[bool]>) -> BallState {
    for (k, o) in world.obstacles.iter().enumerate() {
        if let ObstacleRole::TeleportEntry { exit } = world.role(k) {
            if active.is_some_and(|a| !a[k]) {
                continue;
            }
            if geometry::distance_to_polygon(&o.polygon, state.q) <= world.ball.radius {
                return BallState { q: world.obstacles[exit].centroid(), v: state.v };
            }
        }
    }
    *state
}

pub fn apply_teleport(state: &BallState, world: &PlinkoWorld) -> BallState {
    apply_teleport_among(state, world, None)
}

/// Largest overlap between the ball and any active solid obstacle.
pub fn penetration(state: &BallState, radius: f64, world: &PlinkoWorld, active: Option<&[bool]>) -> f64 {
    world
        .obstacles
        .iter()
        .enumerate()
        .filter(|(k, _)| world.role(*k) == ObstacleRole::Solid && active.is_none_or(|a| a[*k]))
        .filter_map(|(_, o)| geometry::circle_polygon_contact(&o.polygon, state.q, radius).map(|(_, d)| d))
        .fold(0.0, f64::max)
}

const POSITION_ITERATIONS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepStatus {
    Running,
    Landed,
    TimedOut,
}

/// Incremental rollout, so callers can change the active obstacle set
/// between steps.
#[derive(Debug, Clone)]
pub struct Rollout<'w> {
    world: &'w PlinkoWorld,
    noise: NoiseParams,
    config: EngineConfig,
    trajectory: Trajectory,
    step: usize,
    status: StepStatus,
}

impl<'w> Rollout<'w> {
    pub fn start<R: Rng + ?Sized>(world: &'w PlinkoWorld, noise: NoiseParams, config: EngineConfig, rng: &mut R) -> Self {
        let s0 = sample_initial_state(world, &noise, rng);
        let status = if s0.q.y + world.ball.radius >= world.floor_y { StepStatus::Landed } else { StepStatus::Running };
        let landing_x = (status == StepStatus::Landed).then_some(s0.q.x);
        Rollout {
            world,
            noise,
            config,
            trajectory: Trajectory { states: vec![s0], collision_events: Vec::new(), landing_x, landed: landing_x.is_some() },
            step: 0,
            status,
        }
    }

    pub fn state(&self) -> &BallState {
        self.trajectory.states.last().expect("trajectory starts non-empty")
    }

    pub fn step_index(&self) -> usize {
        self.step
    }

    pub fn status(&self) -> StepStatus {
        self.status
    }

    /// One engine tick against the obstacles flagged in `active`.
    pub fn step<R: Rng + ?Sized>(&mut self, active: Option<&[bool]>, rng: &mut R) -> StepStatus {
        if self.status != StepStatus::Running {
            return self.status;
        }
        self.step += 1;
        let radius = self.world.ball.radius;
        let mut s = advance(*self.state(), &self.config);
        s.v = cap_velocity(s.v, self.config.velocity_cap);
        s = apply_teleport_among(&s, self.world, active);
        if let Some(c) = detect_collision_among(&s, radius, self.world, active) {
            s = resolve_collision(&s, c.normal, c.depth, &self.noise, &self.config, rng)
                .expect("detected contact normals are unit length");
            self.record(c);
            for _ in 1..POSITION_ITERATIONS {
                match detect_collision_among(&s, radius, self.world, active) {
                    Some(extra) => {
                        separate(&mut s, &extra, self.config.penetration_tolerance);
                        self.record(extra);
                    }
                    None => break,
                }
            }
        }
        self.trajectory.states.push(s);
        if s.q.y + radius >= self.world.floor_y {
            self.status = StepStatus::Landed;
            self.trajectory.landed = true;
            self.trajectory.landing_x = Some(s.q.x);
        } else if self.step >= self.config.max_steps() {
            self.status = StepStatus::TimedOut;
        }
        self.status
    }

    fn record(&mut self, c: Contact) {
        if let ContactTarget::Obstacle(k) = c.target {
            let id = &self.world.obstacles[k].id;
            let dup = self.trajectory.collision_events.last().is_some_and(|(s, o)| *s == self.step && o == id);
            if !dup {
                self.trajectory.collision_events.push((self.step, id.clone()));
            }
        }
    }

    pub fn finish(self) -> Trajectory {
        self.trajectory
    }

    /// Steps until the ball lands or time runs out.
    pub fn run_to_end<R: Rng + ?Sized>(mut self, active: Option<&[bool]>, rng: &mut R) -> Trajectory {
        while self.step(active, rng) == StepStatus::Running {}
        self.finish()
    }
}

/// A full rollout with every obstacle active.
pub fn run_rollout<R: Rng + ?Sized>(world: &PlinkoWorld, noise: &NoiseParams, config: &EngineConfig, rng: &mut R) -> Trajectory {
    Rollout::start(world, *noise, *config, rng).run_to_end(None, rng)
}

/// A rollout where only the obstacles flagged in `active` exist.
pub fn run_rollout_among<R: Rng + ?Sized>(
    world: &PlinkoWorld,
    active: &[bool],
    noise: &NoiseParams,
    config: &EngineConfig,
    rng: &mut R,
) -> Trajectory {
    Rollout::start(world, *noise, *config, rng).run_to_end(Some(active), rng)
}
