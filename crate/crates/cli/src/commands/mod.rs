pub mod construal;
pub mod efficiency;
pub mod fit;
pub mod gen;
pub mod render;
pub mod rollout;
