use crate::error::CliError;
use crate::files;
use clap::Args;
use construal::analysis::efficiency::{self, SweepConfig};
use construal::worlds::World;
use std::path::PathBuf;

#[derive(Args)]
pub struct EfficiencyArgs {
    /// Directory of grid world files.
    #[arg(long)]
    worlds: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = efficiency::DEFAULT_ALPHAS)]
    alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = efficiency::DEFAULT_BETAS)]
    betas: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Repetitions per world.
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// Value rollouts per VGC construal.
    #[arg(long, default_value_t = 20)]
    value_rollouts: usize,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(a: EfficiencyArgs) -> Result<(), CliError> {
    let corpus = files::load_corpus(&a.worlds)?;
    let mut grids = Vec::with_capacity(corpus.len());
    for (id, w) in corpus {
        match w {
            World::Grid(g) => grids.push((id, g)),
            World::Plinko(_) => return Err(CliError::Domain(format!("{id}: the efficiency sweep needs grid worlds"))),
        }
    }
    let mut config = SweepConfig { seeds: a.seeds.max(1), master_seed: a.seed, ..SweepConfig::default() };
    config.vgc.value_rollouts = a.value_rollouts.max(1);
    let records = efficiency::corpus_records(&grids, &config).map_err(CliError::domain)?;
    let cells = efficiency::regime_sweep(&records, &a.alphas, &a.betas).map_err(CliError::domain)?;
    let mut buf = Vec::new();
    efficiency::write_sweep_csv(&cells, &mut buf).map_err(|e| CliError::Io(e.to_string()))?;
    files::write_atomic(&a.out, &buf)?;
    for c in &cells {
        println!("alpha={} beta={} winner={}", c.alpha, c.beta, c.winner);
    }
    Ok(())
}
