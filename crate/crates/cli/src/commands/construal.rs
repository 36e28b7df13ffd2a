use crate::error::CliError;
use crate::files;
use clap::{Args, ValueEnum};
use construal::jit;
use construal::params::ModelConfig;
use construal::vgc::{self, VgcResult};
use construal::worlds::World;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Model {
    Jit,
    Vgc,
}

#[derive(Args)]
pub struct ConstrualArgs {
    #[arg(long, value_enum)]
    model: Model,
    #[arg(long)]
    world: PathBuf,
    /// Defaults to the world file name without extension.
    #[arg(long)]
    world_id: Option<String>,
    /// JIT rollouts, or VGC value rollouts per construal.
    #[arg(long, default_value_t = 500)]
    rollouts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// VGC only: also write every construal's utility, VOR and probability.
    #[arg(long)]
    scores: Option<PathBuf>,
}

pub struct Weights {
    pub weights: BTreeMap<String, f64>,
    pub failures: usize,
    pub vgc: Option<VgcResult>,
}

/// Per-object weights for `model` on `world`.
pub fn estimate(model: Model, world: &World, cfg: &ModelConfig, rollouts: usize, seed: u64) -> Result<Weights, CliError> {
    let n = rollouts.max(1);
    match (model, world) {
        (Model::Jit, World::Grid(w)) => {
            let e = jit::estimate_construal_grid(w, &cfg.planner, &cfg.jit, n, seed);
            Ok(Weights { weights: e.weights, failures: e.failures, vgc: None })
        }
        (Model::Jit, World::Plinko(w)) => {
            let e = jit::estimate_construal_physics(w, &cfg.noise, &cfg.engine, &cfg.jit, n, seed);
            Ok(Weights { weights: e.weights, failures: e.failures, vgc: None })
        }
        (Model::Vgc, _) => {
            let params = vgc::VgcParams { value_rollouts: n, ..cfg.vgc };
            let r = match world {
                World::Grid(w) => vgc::run_vgc_grid(w, &cfg.planner, &params, seed),
                World::Plinko(w) => vgc::run_vgc_physics(w, &cfg.noise, &cfg.engine, &params, cfg.utility, seed),
            }
            .map_err(CliError::domain)?;
            Ok(Weights { weights: r.weights.clone(), failures: 0, vgc: Some(r) })
        }
    }
}

pub fn run(a: ConstrualArgs) -> Result<(), CliError> {
    let world = files::load_world(&a.world)?;
    let cfg = files::load_config(a.params.as_deref())?;
    let world_id = a.world_id.clone().unwrap_or_else(|| files::world_id(&a.world));
    if a.scores.is_some() && a.model != Model::Vgc {
        return Err(CliError::Domain("--scores applies to the vgc model only".into()));
    }
    let est = estimate(a.model, &world, &cfg, a.rollouts, a.seed)?;
    let n = a.rollouts.max(1);
    let bytes = files::csv_bytes(|w| {
        w.write_record(["world_id", "object_id", "weight", "n_rollouts", "seed", "failures"])?;
        for (id, weight) in &est.weights {
            w.write_record([world_id.clone(), id.clone(), weight.to_string(), n.to_string(), a.seed.to_string(), est.failures.to_string()])?;
        }
        Ok(())
    })?;
    files::write_atomic(&a.out, &bytes)?;
    if let (Some(path), Some(r)) = (&a.scores, &est.vgc) {
        let bytes = files::csv_bytes(|w| {
            w.write_record(["construal", "utility", "vor", "probability"])?;
            for (s, p) in r.scores.iter().zip(&r.probabilities) {
                let ids: Vec<&str> = s.construal.iter().map(String::as_str).collect();
                w.write_record([ids.join(";"), s.utility.to_string(), s.vor.to_string(), p.to_string()])?;
            }
            Ok(())
        })?;
        files::write_atomic(path, &bytes)?;
    }
    let size: f64 = est.weights.values().sum();
    let mean = if est.weights.is_empty() { 0.0 } else { size / est.weights.len() as f64 };
    println!("world_id={world_id} mean_weight={mean:.4} expected_size={size:.4} failures={}", est.failures);
    Ok(())
}
