//! Evaluation: distances, goodness of fit, the efficiency sweep and
//! parameter fitting.

pub mod efficiency;
pub mod fit;
pub mod metrics;
