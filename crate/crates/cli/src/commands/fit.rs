use super::construal::{estimate, Model};
use crate::error::CliError;
use crate::files;
use clap::{Args, ValueEnum};
use construal::analysis::fit::{self, Measure, ObjectKey, Objective, ParamPoint};
use construal::baselines::{self, ProbePair, ProbeSpec};
use construal::geometry::Vec2;
use construal::jit;
use construal::params::{self, ModelConfig};
use construal::worlds::World;
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FitModel {
    Jit,
    Vgc,
    Signal,
    Reconstructive,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Recall,
    Confidence,
    Hover,
}

#[derive(Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    model: FitModel,
    /// Per-participant data (world_id, object_id, participant_id, measure, value).
    #[arg(long)]
    data: PathBuf,
    /// Parameter grid: one `key=v1,v2,...` line per axis.
    #[arg(long)]
    grid: PathBuf,
    #[arg(long, value_parser = parse_objective)]
    objective: Objective,
    #[arg(long)]
    out: PathBuf,
    /// Directory holding the worlds named in the data.
    #[arg(long)]
    worlds: PathBuf,
    /// Base parameters; grid axes override them.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Probe definitions (world_id, object_id, lure_dx, lure_dy); needed by
    /// the signal and reconstructive models.
    #[arg(long)]
    probes: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "recall")]
    measure: MeasureArg,
    #[arg(long, default_value_t = 200)]
    rollouts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_objective(s: &str) -> Result<Objective, String> {
    s.parse()
}

fn measure(m: MeasureArg) -> Measure {
    match m {
        MeasureArg::Recall => Measure::Recall,
        MeasureArg::Confidence => Measure::Confidence,
        MeasureArg::Hover => Measure::Hover,
    }
}

struct Runner<'a> {
    model: FitModel,
    base: ModelConfig,
    worlds: &'a BTreeMap<String, World>,
    probes: &'a [ProbeSpec],
    recall: bool,
    rollouts: usize,
    seed: u64,
}

impl Runner<'_> {
    fn predict(&self, point: &ParamPoint) -> Result<BTreeMap<ObjectKey, f64>, String> {
        let cfg = self.base.with_overrides(point).map_err(|e| e.to_string())?;
        let mut out = BTreeMap::new();
        match self.model {
            FitModel::Jit | FitModel::Vgc => {
                let model = if self.model == FitModel::Jit { Model::Jit } else { Model::Vgc };
                for (id, w) in self.worlds {
                    let est = estimate(model, w, &cfg, self.rollouts, self.seed).map_err(|e| e.to_string())?;
                    for (obj, m) in est.weights {
                        out.insert((id.clone(), obj), if self.recall { baselines::recall_link(m) } else { m });
                    }
                }
            }
            FitModel::Signal | FitModel::Reconstructive => {
                let mut outcomes = BTreeMap::new();
                for p in self.probes {
                    let Some(World::Plinko(w)) = self.worlds.get(&p.world_id) else {
                        return Err(format!("probe world {} is not a loaded Plinko world", p.world_id));
                    };
                    let pair = ProbePair::with_offset(w, &p.world_id, &p.object_id, Vec2::new(p.lure_dx, p.lure_dy))
                        .map_err(|e| e.to_string())?;
                    let prob = if self.model == FitModel::Signal {
                        let runs = outcomes.entry(p.world_id.clone()).or_insert_with(|| {
                            jit::jit_physics_rollouts(w, &cfg.noise, &cfg.engine, &cfg.jit, self.rollouts.max(1), self.seed)
                        });
                        let n = baselines::expected_encode_count(runs, &p.object_id);
                        baselines::signal_detection_response(n, &pair, cfg.kappa_sd, cfg.choice_alpha)
                    } else {
                        baselines::reconstructive_response(w, &pair, &cfg.noise, &cfg.engine, self.rollouts, cfg.choice_alpha, self.seed)
                            .map_err(|e| e.to_string())?
                    };
                    out.insert((p.world_id.clone(), p.object_id.clone()), prob);
                }
            }
        }
        Ok(out)
    }
}

pub fn run(a: FitArgs) -> Result<(), CliError> {
    let records = fit::parse_human_csv(files::read(&a.data)?.as_slice()).map_err(CliError::domain)?;
    let data = fit::aggregate(&records, measure(a.measure));
    let grid = params::parse_grid(&files::read_text(&a.grid)?).map_err(|e| CliError::Domain(format!("{}: {e}", a.grid.display())))?;
    let base = files::load_config(a.params.as_deref())?;
    let worlds: BTreeMap<String, World> = files::load_corpus(&a.worlds)?.into_iter().collect();
    let probes = match (&a.probes, a.model) {
        (Some(p), _) => baselines::parse_probe_csv(files::read(p)?.as_slice()).map_err(CliError::domain)?,
        (None, FitModel::Signal | FitModel::Reconstructive) => {
            return Err(CliError::Domain("the signal and reconstructive models need --probes".into()))
        }
        (None, _) => Vec::new(),
    };
    let runner = Runner {
        model: a.model,
        base,
        worlds: &worlds,
        probes: &probes,
        recall: a.measure == MeasureArg::Recall,
        rollouts: a.rollouts,
        seed: a.seed,
    };
    let result = fit::grid_search_fit(|p| runner.predict(p), &data, &grid, a.objective).map_err(CliError::domain)?;
    let mut doc = format!(
        "objective={}\nobjective_value={}\npoints_evaluated={}\n",
        result.objective,
        result.objective_value,
        result.grid.len()
    );
    for (k, v) in &result.best {
        doc.push_str(&format!("best.{k}={v}\n"));
    }
    files::write_atomic(&a.out, doc.as_bytes())?;
    println!("{}={} at {}", result.objective, result.objective_value, fit::format_point(&result.best));
    Ok(())
}
