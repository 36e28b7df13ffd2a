use crate::error::CliError;
use crate::files;
use clap::Args;
use construal::physics::{self, NoiseParams};
use construal::rng;
use construal::worlds::World;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Args)]
pub struct RolloutArgs {
    #[arg(long)]
    world: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    params: Option<PathBuf>,
    /// Disable every noise source.
    #[arg(long)]
    zero_noise: bool,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(a: RolloutArgs) -> Result<(), CliError> {
    let World::Plinko(world) = files::load_world(&a.world)? else {
        return Err(CliError::Domain("rollout needs a Plinko world".into()));
    };
    let cfg = files::load_config(a.params.as_deref())?;
    let noise = if a.zero_noise { NoiseParams::NONE } else { cfg.noise };
    let t = physics::run_rollout(&world, &noise, &cfg.engine, &mut rng::from_seed(a.seed));
    let mut events: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    for (step, id) in &t.collision_events {
        events.entry(*step).or_default().push(id.as_str());
    }
    let bytes = files::csv_bytes(|w| {
        w.write_record(["step", "x", "y", "vx", "vy", "event"])?;
        for (i, s) in t.states.iter().enumerate() {
            let ev = events.get(&i).map(|v| v.join(";")).unwrap_or_default();
            w.write_record([i.to_string(), s.q.x.to_string(), s.q.y.to_string(), s.v.x.to_string(), s.v.y.to_string(), ev])?;
        }
        Ok(())
    })?;
    files::write_atomic(&a.out, &bytes)?;
    match t.landing_x {
        Some(x) => println!("landed at x={x:.3} after {} steps", t.states.len() - 1),
        None => println!("timed out after {} steps", t.states.len() - 1),
    }
    Ok(())
}
