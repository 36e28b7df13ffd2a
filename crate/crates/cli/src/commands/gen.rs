use crate::error::CliError;
use crate::files;
use clap::{Args, ValueEnum};
use construal::rng;
use construal::worldgen;
use construal::worlds::{self, World};
use rayon::prelude::*;
use std::fs;
use std::path::PathBuf;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Grid,
    Plinko,
}

impl Kind {
    fn as_str(self) -> &'static str {
        match self {
            Kind::Grid => "grid",
            Kind::Plinko => "plinko",
        }
    }
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10)]
    width: i32,
    #[arg(long, default_value_t = 10)]
    height: i32,
}

pub fn run(a: GenArgs) -> Result<(), CliError> {
    let seeds: Vec<u64> = (0..a.count as u64).map(|i| rng::derive_seed(a.seed, i)).collect();
    let generated: Vec<Result<World, CliError>> = seeds
        .par_iter()
        .map(|&s| match a.kind {
            Kind::Grid => worldgen::gen_gridworld(s, a.width, a.height).map(World::Grid),
            Kind::Plinko => worldgen::gen_plinko(s, (8, 12)).map(World::Plinko),
        }
        .map_err(CliError::domain))
        .collect();
    fs::create_dir_all(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    let mut rows = Vec::with_capacity(a.count);
    for (i, (seed, world)) in seeds.iter().zip(generated).enumerate() {
        let world = world?;
        let id = format!("{}_{i:03}", a.kind.as_str());
        files::write_atomic(&a.out.join(format!("{id}.json")), &worlds::serialize_world(&world))?;
        rows.push((*seed, id, world.object_ids().len()));
    }
    let manifest = files::csv_bytes(|w| {
        w.write_record(["seed", "world_id", "kind", "n_objects"])?;
        for (seed, id, n) in &rows {
            w.write_record([seed.to_string(), id.clone(), a.kind.as_str().to_string(), n.to_string()])?;
        }
        Ok(())
    })?;
    files::write_atomic(&a.out.join("manifest.csv"), &manifest)?;
    println!("wrote {} {} worlds to {}", rows.len(), a.kind.as_str(), a.out.display());
    Ok(())
}
