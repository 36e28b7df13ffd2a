//! Stochastic A* over a grid world restricted to a construal.
//!
//! Instead of always expanding the open node with the smallest
//! `d(n) + h(n)`, the search draws the next node from a softmax over the
//! whole open set with logits `-(alpha_d * d(n) + alpha_h * h(n))`. Large
//! weights recover ordinary A*; `alpha_d = 0, alpha_h = 1` gives a noisy
//! greedy best-first search.

use crate::worlds::{Cell, Construal, GridWorld};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerParams {
    pub alpha_d: f64,
    pub alpha_h: f64,
    /// `None` means ten expansions per grid cell.
    pub expansion_cap: Option<usize>,
}

impl PlannerParams {
    pub fn new(alpha_d: f64, alpha_h: f64) -> Self {
        PlannerParams { alpha_d, alpha_h, expansion_cap: None }
    }

    /// Weights large enough that every draw picks a minimum-f node.
    pub fn deterministic() -> Self {
        PlannerParams::new(1000.0, 1000.0)
    }

    pub fn cap_for(&self, world: &GridWorld) -> usize {
        self.expansion_cap.unwrap_or(10 * world.cell_count())
    }

    pub fn validate(&self) -> Result<(), String> {
        if !self.alpha_d.is_finite() || !self.alpha_h.is_finite() {
            return Err("planner weights must be finite".into());
        }
        if self.expansion_cap == Some(0) {
            return Err("expansion_cap must be at least 1".into());
        }
        Ok(())
    }
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams::new(0.0, 1.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("goal unreachable under construal after {expansions} expansions")]
    Unreachable { expansions: usize },
    #[error("expansion cap hit after {expansions} expansions")]
    CapExceeded { expansions: usize },
    #[error("cell {0} outside the grid")]
    OutOfBounds(Cell),
    #[error("start cell {0} is blocked by the construal")]
    StartBlocked(Cell),
    #[error("broken search result: {0}")]
    BrokenSearchResult(String),
}

impl PlanError {
    /// Expansions spent before the failure (zero for query errors).
    pub fn expansions(&self) -> usize {
        match self {
            PlanError::Unreachable { expansions } | PlanError::CapExceeded { expansions } => *expansions,
            _ => 0,
        }
    }
}

pub fn manhattan_heuristic(cell: Cell, goal: Cell) -> u32 {
    cell.x.abs_diff(goal.x) + cell.y.abs_diff(goal.y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    width: i32,
    best_g: Vec<Option<u32>>,
    predecessors: Vec<Vec<Cell>>,
    pub expansions: usize,
    pub reached_goal: bool,
}

impl SearchResult {
    fn idx(&self, c: Cell) -> usize {
        (c.y * self.width + c.x) as usize
    }

    pub fn best_g(&self, c: Cell) -> Option<u32> {
        self.best_g.get(self.idx(c)).copied().flatten()
    }

    pub fn predecessors(&self, c: Cell) -> &[Cell] {
        &self.predecessors[self.idx(c)]
    }
}

/// Index into `weights` drawn proportionally to `exp(logit - max)`.
pub(crate) fn sample_softmax<R: Rng + ?Sized>(logits: &[f64], rng: &mut R) -> usize {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    // rounding left u just past the last positive weight
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

pub fn softmax_astar<R: Rng + ?Sized>(
    world: &GridWorld,
    construal: &Construal,
    start: Cell,
    goal: Cell,
    params: &PlannerParams,
    rng: &mut R,
) -> Result<SearchResult, PlanError> {
    for c in [start, goal] {
        if !world.in_bounds(c) {
            return Err(PlanError::OutOfBounds(c));
        }
    }
    let blocked = world.blocked_mask(construal);
    if blocked[world.index(start)] {
        return Err(PlanError::StartBlocked(start));
    }
    let cap = params.cap_for(world);
    let n = world.cell_count();
    let mut result = SearchResult {
        width: world.width,
        best_g: vec![None; n],
        predecessors: vec![Vec::new(); n],
        expansions: 0,
        reached_goal: false,
    };
    let mut open = vec![start];
    let mut in_open = vec![false; n];
    in_open[world.index(start)] = true;
    result.best_g[world.index(start)] = Some(0);
    let mut logits = Vec::new();

    loop {
        if open.is_empty() {
            return Err(PlanError::Unreachable { expansions: result.expansions });
        }
        if result.expansions >= cap {
            return Err(PlanError::CapExceeded { expansions: result.expansions });
        }
        logits.clear();
        logits.extend(open.iter().map(|&c| {
            let d = result.best_g[world.index(c)].unwrap_or(0) as f64;
            let h = manhattan_heuristic(c, goal) as f64;
            -(params.alpha_d * d + params.alpha_h * h)
        }));
        let pick = sample_softmax(&logits, rng);
        let node = open.swap_remove(pick);
        in_open[world.index(node)] = false;
        result.expansions += 1;
        if node == goal {
            result.reached_goal = true;
            return Ok(result);
        }
        let g_next = result.best_g[world.index(node)].expect("open nodes have a cost") + 1;
        for nb in node.neighbors4() {
            if !world.in_bounds(nb) || blocked[world.index(nb)] {
                continue;
            }
            let k = world.index(nb);
            match result.best_g[k] {
                Some(g) if g < g_next => {}
                Some(g) if g == g_next => {
                    if !result.predecessors[k].contains(&node) {
                        result.predecessors[k].push(node);
                    }
                }
                _ => {
                    result.best_g[k] = Some(g_next);
                    result.predecessors[k] = vec![node];
                    if !in_open[k] {
                        in_open[k] = true;
                        open.push(nb);
                    }
                }
            }
        }
    }
}

/// Ordered cell sequence from the query start to the goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plan {
    pub states: Vec<Cell>,
}

impl Plan {
    pub fn len_moves(&self) -> usize {
        self.states.len().saturating_sub(1)
    }
}

/// Walks predecessor sets back from the goal. Among the cheapest
/// predecessors it prefers the one that repeats the previously chosen move,
/// and breaks remaining ties uniformly.
pub fn reconstruct_plan<R: Rng + ?Sized>(
    result: &SearchResult,
    start: Cell,
    goal: Cell,
    rng: &mut R,
) -> Result<Plan, PlanError> {
    if !result.reached_goal {
        return Err(PlanError::BrokenSearchResult("search did not reach the goal".into()));
    }
    let mut states = vec![goal];
    let mut cur = goal;
    let mut last_move: Option<(i32, i32)> = None;
    while cur != start {
        if states.len() > result.best_g.len() {
            return Err(PlanError::BrokenSearchResult("predecessor chain cycles".into()));
        }
        let preds = result.predecessors(cur);
        let cost = |p: &Cell| result.best_g(*p).unwrap_or(u32::MAX);
        let Some(min_g) = preds.iter().map(cost).min() else {
            return Err(PlanError::BrokenSearchResult(format!("{cur} has no predecessor")));
        };
        let mut candidates: Vec<Cell> = preds.iter().copied().filter(|p| cost(p) == min_g).collect();
        if let Some(dir) = last_move {
            let straight: Vec<Cell> =
                candidates.iter().copied().filter(|p| (cur.x - p.x, cur.y - p.y) == dir).collect();
            if !straight.is_empty() {
                candidates = straight;
            }
        }
        let next = if candidates.len() == 1 { candidates[0] } else { candidates[rng.random_range(0..candidates.len())] };
        if !next.is_adjacent(cur) {
            return Err(PlanError::BrokenSearchResult(format!("{next} is not adjacent to {cur}")));
        }
        last_move = Some((cur.x - next.x, cur.y - next.y));
        cur = next;
        states.push(cur);
    }
    states.reverse();
    Ok(Plan { states })
}

/// One search plus reconstruction; returns the plan and expansions spent.
pub fn sample_plan<R: Rng + ?Sized>(
    world: &GridWorld,
    construal: &Construal,
    start: Cell,
    goal: Cell,
    params: &PlannerParams,
    rng: &mut R,
) -> Result<(Plan, usize), PlanError> {
    let result = softmax_astar(world, construal, start, goal, params, rng)?;
    let plan = reconstruct_plan(&result, start, goal, rng)?;
    Ok((plan, result.expansions))
}
