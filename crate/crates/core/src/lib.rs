//! Construal formation models for grid navigation and falling-ball
//! prediction.
//!
//! The just-in-time (JIT) model builds its representation while simulating:
//! a cheap lookahead flags objects the simulation is about to interact with,
//! flagged objects are encoded, and stale ones are forgotten under a power
//! law. The value-guided construal (VGC) model instead scores every subset
//! of objects by utility minus size and samples construals from a Luce rule.

pub mod analysis;
pub mod baselines;
pub mod geometry;
pub mod jit;
pub mod params;
pub mod planner;
pub mod physics;
pub mod prediction;
pub mod rng;
pub mod sampling;
pub mod vgc;
pub mod worldgen;
pub mod worlds;
