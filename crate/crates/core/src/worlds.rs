//! Grid and Plinko world descriptions, their validation, and the JSON world
//! file format.
//!
//! Worlds are immutable once validated. Construction always goes through
//! [`GridWorld::new`] / [`PlinkoWorld::new`] or [`parse_world`], so every
//! value of these types satisfies its invariants.

use crate::geometry::{self, Vec2};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use thiserror::Error;

/// A set of object ids; the construal type shared by every model.
pub type Construal = BTreeSet<String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[i32; 2]", into = "[i32; 2]")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Cell { x, y }
    }

    pub fn neighbors4(self) -> [Cell; 4] {
        [
            Cell::new(self.x + 1, self.y),
            Cell::new(self.x - 1, self.y),
            Cell::new(self.x, self.y + 1),
            Cell::new(self.x, self.y - 1),
        ]
    }

    pub fn is_adjacent(self, o: Cell) -> bool {
        (self.x - o.x).abs() + (self.y - o.y).abs() == 1
    }
}

impl From<[i32; 2]> for Cell {
    fn from([x, y]: [i32; 2]) -> Self {
        Cell { x, y }
    }
}

impl From<Cell> for [i32; 2] {
    fn from(c: Cell) -> Self {
        [c.x, c.y]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// The invariant a rejected world violates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorldRule {
    NonPositiveSize,
    NonFiniteNumber,
    StartEqualsGoal,
    EndpointOutOfBounds,
    EndpointOnObject,
    DuplicateObjectId,
    EmptyObject,
    DuplicateCell,
    ObjectOutOfBounds,
    ObjectNotConnected,
    ObjectsOverlap,
    MultipleCenterCross,
    BallRadius,
    BallOutOfBounds,
    BallBelowFloor,
    BucketCount,
    TooFewVertices,
    NotStrictlyConvex,
    ObstacleOutOfBounds,
    ObstacleOverlapsBall,
    TeleporterUnknownId,
    TeleporterSelfPair,
    TeleporterReused,
}

impl fmt::Display for WorldRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            WorldRule::NonPositiveSize => "non_positive_size",
            WorldRule::NonFiniteNumber => "non_finite_number",
            WorldRule::StartEqualsGoal => "start_equals_goal",
            WorldRule::EndpointOutOfBounds => "endpoint_out_of_bounds",
            WorldRule::EndpointOnObject => "endpoint_on_object",
            WorldRule::DuplicateObjectId => "duplicate_object_id",
            WorldRule::EmptyObject => "empty_object",
            WorldRule::DuplicateCell => "duplicate_cell",
            WorldRule::ObjectOutOfBounds => "object_out_of_bounds",
            WorldRule::ObjectNotConnected => "object_not_connected",
            WorldRule::ObjectsOverlap => "objects_overlap",
            WorldRule::MultipleCenterCross => "multiple_center_cross",
            WorldRule::BallRadius => "ball_radius",
            WorldRule::BallOutOfBounds => "ball_out_of_bounds",
            WorldRule::BallBelowFloor => "ball_below_floor",
            WorldRule::BucketCount => "bucket_count",
            WorldRule::TooFewVertices => "too_few_vertices",
            WorldRule::NotStrictlyConvex => "not_strictly_convex",
            WorldRule::ObstacleOutOfBounds => "obstacle_out_of_bounds",
            WorldRule::ObstacleOverlapsBall => "obstacle_overlaps_ball",
            WorldRule::TeleporterUnknownId => "teleporter_unknown_id",
            WorldRule::TeleporterSelfPair => "teleporter_self_pair",
            WorldRule::TeleporterReused => "teleporter_reused",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("malformed world document: {0}")]
    Malformed(String),
    #[error("invalid world [{rule}]: {detail}")]
    Invalid { rule: WorldRule, detail: String },
}

fn invalid(rule: WorldRule, detail: impl Into<String>) -> WorldError {
    WorldError::Invalid { rule, detail: detail.into() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridObject {
    pub id: String,
    pub cells: Vec<Cell>,
    #[serde(default)]
    pub center_cross: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridWorld {
    pub width: i32,
    pub height: i32,
    pub start: Cell,
    pub goal: Cell,
    pub objects: Vec<GridObject>,
    /// Object index per cell (row-major), rebuilt by validation.
    #[serde(skip)]
    occupancy: Vec<Option<u16>>,
}

impl GridWorld {
    pub fn new(width: i32, height: i32, start: Cell, goal: Cell, objects: Vec<GridObject>) -> Result<Self, WorldError> {
        let mut w = GridWorld { width, height, start, goal, objects, occupancy: Vec::new() };
        w.validate()?;
        Ok(w)
    }

    fn validate(&mut self) -> Result<(), WorldError> {
        if self.width <= 0 || self.height <= 0 {
            return Err(invalid(WorldRule::NonPositiveSize, format!("{}x{}", self.width, self.height)));
        }
        if self.objects.len() > u16::MAX as usize {
            return Err(invalid(WorldRule::DuplicateObjectId, "too many objects"));
        }
        if self.start == self.goal {
            return Err(invalid(WorldRule::StartEqualsGoal, format!("start and goal both at {}", self.start)));
        }
        for (name, c) in [("start", self.start), ("goal", self.goal)] {
            if !self.in_bounds(c) {
                return Err(invalid(WorldRule::EndpointOutOfBounds, format!("{name} {c} outside grid")));
            }
        }
        let mut ids = HashSet::new();
        let mut occupancy = vec![None; (self.width * self.height) as usize];
        let mut crosses = 0;
        for (k, obj) in self.objects.iter().enumerate() {
            if !ids.insert(obj.id.as_str()) {
                return Err(invalid(WorldRule::DuplicateObjectId, obj.id.clone()));
            }
            if obj.cells.is_empty() {
                return Err(invalid(WorldRule::EmptyObject, obj.id.clone()));
            }
            let mut own = HashSet::new();
            for &c in &obj.cells {
                if !own.insert(c) {
                    return Err(invalid(WorldRule::DuplicateCell, format!("{} repeats {c}", obj.id)));
                }
                if !self.in_bounds(c) {
                    return Err(invalid(WorldRule::ObjectOutOfBounds, format!("{} has {c}", obj.id)));
                }
            }
            if !is_four_connected(&obj.cells) {
                return Err(invalid(WorldRule::ObjectNotConnected, obj.id.clone()));
            }
            for &c in &obj.cells {
                let slot = &mut occupancy[(c.y * self.width + c.x) as usize];
                if let Some(other) = *slot {
                    return Err(invalid(
                        WorldRule::ObjectsOverlap,
                        format!("{} and {} share {c}", self.objects[other as usize].id, obj.id),
                    ));
                }
                *slot = Some(k as u16);
            }
            if obj.center_cross {
                crosses += 1;
            }
        }
        if crosses > 1 {
            return Err(invalid(WorldRule::MultipleCenterCross, format!("{crosses} objects flagged")));
        }
        for (name, c) in [("start", self.start), ("goal", self.goal)] {
            if let Some(k) = occupancy[(c.y * self.width + c.x) as usize] {
                return Err(invalid(
                    WorldRule::EndpointOnObject,
                    format!("{name} {c} lies on {}", self.objects[k as usize].id),
                ));
            }
        }
        self.occupancy = occupancy;
        Ok(())
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.x >= 0 && c.y >= 0 && c.x < self.width && c.y < self.height
    }

    pub fn cell_count(&self) -> usize {
        (self.width * self.height) as usize
    }

    /// Row-major index of an in-bounds cell.
    pub fn index(&self, c: Cell) -> usize {
        (c.y * self.width + c.x) as usize
    }

    pub fn object_index_at(&self, c: Cell) -> Option<usize> {
        if !self.in_bounds(c) {
            return None;
        }
        self.occupancy[self.index(c)].map(usize::from)
    }

    pub fn object_at(&self, c: Cell) -> Option<&GridObject> {
        self.object_index_at(c).map(|k| &self.objects[k])
    }

    pub fn object_ids(&self) -> Vec<String> {
        self.objects.iter().map(|o| o.id.clone()).collect()
    }

    pub fn all_objects(&self) -> Construal {
        self.objects.iter().map(|o| o.id.clone()).collect()
    }

    pub fn center_cross(&self) -> Option<&GridObject> {
        self.objects.iter().find(|o| o.center_cross)
    }

    /// Blocked-cell mask for planning under `construal`.
    pub fn blocked_mask(&self, construal: &Construal) -> Vec<bool> {
        let mut mask = vec![false; self.cell_count()];
        for obj in self.objects.iter().filter(|o| construal.contains(&o.id)) {
            for &c in &obj.cells {
                mask[self.index(c)] = true;
            }
        }
        mask
    }

    /// Breadth-first shortest path length (in moves) avoiding `blocked`.
    pub fn bfs_distance(&self, blocked: &[bool], from: Cell, to: Cell) -> Option<usize> {
        if blocked[self.index(from)] || blocked[self.index(to)] {
            return None;
        }
        let mut dist = vec![usize::MAX; self.cell_count()];
        let mut queue = VecDeque::from([from]);
        dist[self.index(from)] = 0;
        while let Some(c) = queue.pop_front() {
            let d = dist[self.index(c)];
            if c == to {
                return Some(d);
            }
            for n in c.neighbors4() {
                if self.in_bounds(n) && !blocked[self.index(n)] && dist[self.index(n)] == usize::MAX {
                    dist[self.index(n)] = d + 1;
                    queue.push_back(n);
                }
            }
        }
        None
    }
}

fn is_four_connected(cells: &[Cell]) -> bool {
    let set: HashSet<Cell> = cells.iter().copied().collect();
    let mut seen = HashSet::from([cells[0]]);
    let mut stack = vec![cells[0]];
    while let Some(c) = stack.pop() {
        for n in c.neighbors4() {
            if set.contains(&n) && seen.insert(n) {
                stack.push(n);
            }
        }
    }
    seen.len() == set.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ball {
    pub x: f64,
    pub y: f64,
    pub radius: f64,
}

impl Ball {
    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub id: String,
    pub polygon: Vec<Vec2>,
    pub solid: bool,
    #[serde(rename = "probe")]
    pub probe_eligible: bool,
}

impl Obstacle {
    pub fn centroid(&self) -> Vec2 {
        geometry::centroid(&self.polygon)
    }

    /// Copy moved rigidly by `offset`.
    pub fn translated(&self, offset: Vec2) -> Obstacle {
        Obstacle { polygon: self.polygon.iter().map(|p| *p + offset).collect(), ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Teleporter {
    pub entry: String,
    pub exit: String,
}

/// Role an obstacle plays in the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObstacleRole {
    /// Deflects the ball.
    Solid,
    /// Relocates the ball to its paired exit.
    TeleportEntry { exit: usize },
    /// Pass-through teleporter exit.
    TeleportExit,
    /// Visible but never interacts with the ball.
    Background,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlinkoWorld {
    pub width: f64,
    pub height: f64,
    pub ball: Ball,
    pub floor_y: f64,
    #[serde(rename = "buckets")]
    pub bucket_count: Option<u32>,
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub teleporters: Vec<Teleporter>,
    #[serde(skip)]
    roles: Vec<ObstacleRole>,
}

impl PlinkoWorld {
    pub fn new(
        width: f64,
        height: f64,
        ball: Ball,
        floor_y: f64,
        bucket_count: Option<u32>,
        obstacles: Vec<Obstacle>,
        teleporters: Vec<Teleporter>,
    ) -> Result<Self, WorldError> {
        let mut w = PlinkoWorld { width, height, ball, floor_y, bucket_count, obstacles, teleporters, roles: Vec::new() };
        w.validate()?;
        Ok(w)
    }

    fn validate(&mut self) -> Result<(), WorldError> {
        let scalars = [self.width, self.height, self.ball.x, self.ball.y, self.ball.radius, self.floor_y];
        let vertices = self.obstacles.iter().flat_map(|o| o.polygon.iter()).flat_map(|v| [v.x, v.y]);
        if !scalars.into_iter().chain(vertices).all(f64::is_finite) {
            return Err(invalid(WorldRule::NonFiniteNumber, "all coordinates must be finite"));
        }
        if self.width <= 0.0 || self.height <= 0.0 {
            return Err(invalid(WorldRule::NonPositiveSize, format!("{}x{}", self.width, self.height)));
        }
        if self.ball.radius <= 0.0 {
            return Err(invalid(WorldRule::BallRadius, format!("radius {}", self.ball.radius)));
        }
        let b = self.ball;
        if b.x - b.radius < 0.0 || b.x + b.radius > self.width || b.y - b.radius < 0.0 {
            return Err(invalid(WorldRule::BallOutOfBounds, format!("ball at ({}, {})", b.x, b.y)));
        }
        if self.floor_y > self.height || self.floor_y - b.y < b.radius {
            return Err(invalid(
                WorldRule::BallBelowFloor,
                format!("ball y {} radius {} floor {}", b.y, b.radius, self.floor_y),
            ));
        }
        if self.bucket_count == Some(0) {
            return Err(invalid(WorldRule::BucketCount, "bucket count must be positive"));
        }
        let mut ids = HashSet::new();
        for o in &self.obstacles {
            if !ids.insert(o.id.as_str()) {
                return Err(invalid(WorldRule::DuplicateObjectId, o.id.clone()));
            }
            if o.polygon.len() < 3 {
                return Err(invalid(WorldRule::TooFewVertices, format!("{} has {}", o.id, o.polygon.len())));
            }
            if !geometry::is_strictly_convex_ccw(&o.polygon) {
                return Err(invalid(WorldRule::NotStrictlyConvex, o.id.clone()));
            }
            let (lo, hi) = geometry::bounding_box(&o.polygon);
            if lo.x < 0.0 || lo.y < 0.0 || hi.x > self.width || hi.y > self.height {
                return Err(invalid(WorldRule::ObstacleOutOfBounds, o.id.clone()));
            }
            if geometry::distance_to_polygon(&o.polygon, b.position()) < b.radius {
                return Err(invalid(WorldRule::ObstacleOverlapsBall, o.id.clone()));
            }
        }
        let mut roles: Vec<ObstacleRole> = self
            .obstacles
            .iter()
            .map(|o| if o.solid { ObstacleRole::Solid } else { ObstacleRole::Background })
            .collect();
        let mut used = HashSet::new();
        for t in &self.teleporters {
            let entry = self.obstacle_index(&t.entry);
            let exit = self.obstacle_index(&t.exit);
            let (Some(entry), Some(exit)) = (entry, exit) else {
                let missing = if entry.is_none() { &t.entry } else { &t.exit };
                return Err(invalid(WorldRule::TeleporterUnknownId, missing.clone()));
            };
            if entry == exit {
                return Err(invalid(WorldRule::TeleporterSelfPair, t.entry.clone()));
            }
            for id in [&t.entry, &t.exit] {
                if !used.insert(id.as_str()) {
                    return Err(invalid(WorldRule::TeleporterReused, id.clone()));
                }
            }
            roles[entry] = ObstacleRole::TeleportEntry { exit };
            roles[exit] = ObstacleRole::TeleportExit;
        }
        self.roles = roles;
        Ok(())
    }

    pub fn obstacle_index(&self, id: &str) -> Option<usize> {
        self.obstacles.iter().position(|o| o.id == id)
    }

    pub fn role(&self, k: usize) -> ObstacleRole {
        self.roles[k]
    }

    /// Obstacles the simulation depends on: solid ones and teleporter entries.
    pub fn is_simulation_relevant(&self, k: usize) -> bool {
        matches!(self.roles[k], ObstacleRole::Solid | ObstacleRole::TeleportEntry { .. })
    }

    pub fn object_ids(&self) -> Vec<String> {
        self.obstacles.iter().map(|o| o.id.clone()).collect()
    }

    pub fn all_objects(&self) -> Construal {
        self.obstacles.iter().map(|o| o.id.clone()).collect()
    }

    /// Per-obstacle activity mask for a construal.
    pub fn active_mask(&self, construal: &Construal) -> Vec<bool> {
        self.obstacles.iter().map(|o| construal.contains(&o.id)).collect()
    }

    /// Equal-width bucket containing `x`, clamped to the outer buckets.
    pub fn bucket_of(&self, x: f64) -> Option<usize> {
        let n = self.bucket_count? as usize;
        let k = (x / self.width * n as f64).floor();
        Some((k.max(0.0) as usize).min(n - 1))
    }

    /// Copy with obstacle `id` replaced (validated again).
    pub fn with_obstacle(&self, replacement: Obstacle) -> Result<PlinkoWorld, WorldError> {
        let obstacles = self
            .obstacles
            .iter()
            .map(|o| if o.id == replacement.id { replacement.clone() } else { o.clone() })
            .collect();
        PlinkoWorld::new(
            self.width,
            self.height,
            self.ball,
            self.floor_y,
            self.bucket_count,
            obstacles,
            self.teleporters.clone(),
        )
    }

    /// Copy without obstacle `id` (teleporter pairs referencing it dropped).
    pub fn without_obstacle(&self, id: &str) -> Result<PlinkoWorld, WorldError> {
        PlinkoWorld::new(
            self.width,
            self.height,
            self.ball,
            self.floor_y,
            self.bucket_count,
            self.obstacles.iter().filter(|o| o.id != id).cloned().collect(),
            self.teleporters.iter().filter(|t| t.entry != id && t.exit != id).cloned().collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum World {
    Grid(GridWorld),
    Plinko(PlinkoWorld),
}

impl World {
    pub fn object_ids(&self) -> Vec<String> {
        match self {
            World::Grid(g) => g.object_ids(),
            World::Plinko(p) => p.object_ids(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            World::Grid(_) => "grid",
            World::Plinko(_) => "plinko",
        }
    }
}

impl From<GridWorld> for World {
    fn from(w: GridWorld) -> Self {
        World::Grid(w)
    }
}

impl From<PlinkoWorld> for World {
    fn from(w: PlinkoWorld) -> Self {
        World::Plinko(w)
    }
}

/// Parses and validates a world file.
pub fn parse_world(document: &[u8]) -> Result<World, WorldError> {
    let mut world: World = serde_json::from_slice(document).map_err(|e| WorldError::Malformed(e.to_string()))?;
    match &mut world {
        World::Grid(g) => g.validate()?,
        World::Plinko(p) => p.validate()?,
    }
    Ok(world)
}

/// Canonical pretty-printed JSON with a trailing newline.
pub fn serialize_world(world: &World) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(world).expect("worlds always serialize");
    out.push(b'\n');
    out
}
