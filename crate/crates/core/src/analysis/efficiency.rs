//! Algorithmic utility of construal models across computation and
//! representation cost regimes.

use crate::baselines;
use crate::jit::{self, JitParams};
use crate::planner::PlannerParams;
use crate::rng;
use crate::vgc::{self, VgcError, VgcParams};
use crate::worlds::GridWorld;
use rayon::prelude::*;
use std::fmt;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EfficiencyError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("empty cost grid")]
    EmptyGrid,
    #[error("cost weights must be finite and non-negative")]
    NegativeWeight,
    #[error("world {world}: {source}")]
    Vgc { world: String, source: VgcError },
}

/// Models compared in the sweep, in tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModelKind {
    Maximal,
    Vgc,
    Jit,
    Random,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Maximal, ModelKind::Vgc, ModelKind::Jit, ModelKind::Random];

    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Maximal => "maximal",
            ModelKind::Vgc => "vgc",
            ModelKind::Jit => "jit",
            ModelKind::Random => "random",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Costs of one model on one world, averaged over seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyRecord {
    pub model: ModelKind,
    pub world_id: String,
    /// Negative executed steps, or the failure value.
    pub plan_utility: f64,
    /// Search expansions.
    pub compute_cost: f64,
    /// Number of represented objects.
    pub representation_cost: f64,
    pub n_objects: usize,
}

impl EfficiencyRecord {
    pub fn construal_fraction(&self) -> f64 {
        if self.n_objects == 0 {
            0.0
        } else {
            self.representation_cost / self.n_objects as f64
        }
    }
}

pub fn algorithmic_utility(record: &EfficiencyRecord, alpha: f64, beta: f64) -> f64 {
    record.plan_utility - alpha * record.compute_cost - beta * record.representation_cost
}

pub const DEFAULT_ALPHAS: [f64; 5] = [0.0, 0.001, 0.01, 0.1, 1.0];
pub const DEFAULT_BETAS: [f64; 6] = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0];

/// Fixed model settings for the sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    /// Planner shared by every model.
    pub planner: PlannerParams,
    pub jit: JitParams,
    pub vgc: VgcParams,
    pub random_inclusion: f64,
    /// Independent repetitions per world.
    pub seeds: usize,
    pub master_seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            planner: PlannerParams::new(0.0, 1.0),
            jit: JitParams { gamma: 0.0, ..JitParams::default() },
            vgc: VgcParams { luce_alpha: 0.1, value_rollouts: 20, ..VgcParams::default() },
            random_inclusion: 0.5,
            seeds: 10,
            master_seed: 0,
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    utility: f64,
    compute: f64,
    representation: f64,
}

impl Tally {
    fn add(&mut self, utility: f64, compute: f64, representation: f64) {
        self.utility += utility;
        self.compute += compute;
        self.representation += representation;
    }
}

/// Records for every model on one world. VGC is a static model, so its
/// construal evaluations happen once per seed and its compute cost is the
/// per-evaluation search effort summed over all construals.
pub fn world_records(world_id: &str, world: &GridWorld, config: &SweepConfig, world_seed: u64) -> Result<Vec<EfficiencyRecord>, VgcError> {
    let failure = config.vgc.failure_value_for(world);
    let seeds = config.seeds.max(1);
    let mut tallies = [Tally::default(); 4];
    for s in 0..seeds {
        let seed = rng::derive_seed(world_seed, s as u64);

        let mut r = rng::stream(seed, 0);
        match baselines::maximal_planner(world, &config.planner, &mut r) {
            Ok(run) => tallies[0].add(-(run.plan.len_moves() as f64), run.expansions as f64, run.construal.len() as f64),
            Err(e) => tallies[0].add(failure, e.expansions() as f64, world.objects.len() as f64),
        }

        let v = vgc::run_vgc_grid(world, &config.planner, &config.vgc, rng::derive_seed(seed, 1))?;
        let per_evaluation = v.expansions as f64 / config.vgc.value_rollouts as f64;
        tallies[1].add(v.expected_utility(), per_evaluation, v.expected_size());

        let mut r = rng::stream(seed, 2);
        match jit::run_jit_plan(world, &config.planner, &config.jit, &mut r) {
            Ok(o) => tallies[2].add(-(o.executed.len_moves() as f64), o.expansions as f64, o.trace.present().len() as f64),
            Err(e) => tallies[2].add(failure, e.expansions() as f64, 0.0),
        }

        let mut r = rng::stream(seed, 3);
        let run = baselines::random_construal_planner(world, &config.planner, config.random_inclusion, failure, &mut r);
        tallies[3].add(run.execution.value, run.execution.expansions as f64, run.construal.len() as f64);
    }
    let n = seeds as f64;
    Ok(ModelKind::ALL
        .iter()
        .zip(tallies)
        .map(|(m, t)| EfficiencyRecord {
            model: *m,
            world_id: world_id.to_string(),
            plan_utility: t.utility / n,
            compute_cost: t.compute / n,
            representation_cost: t.representation / n,
            n_objects: world.objects.len(),
        })
        .collect())
}

/// Records for a corpus; world `i` draws from seed `(master, i)`.
pub fn corpus_records(worlds: &[(String, GridWorld)], config: &SweepConfig) -> Result<Vec<EfficiencyRecord>, EfficiencyError> {
    if worlds.is_empty() {
        return Err(EfficiencyError::EmptyCorpus);
    }
    let per_world: Vec<Result<Vec<EfficiencyRecord>, EfficiencyError>> = worlds
        .par_iter()
        .enumerate()
        .map(|(i, (id, w))| {
            world_records(id, w, config, rng::derive_seed(config.master_seed, i as u64))
                .map_err(|source| EfficiencyError::Vgc { world: id.clone(), source })
        })
        .collect();
    let mut out = Vec::new();
    for r in per_world {
        out.extend(r?);
    }
    Ok(out)
}

/// Mean algorithmic utility of each model at one `(alpha, beta)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub alpha: f64,
    pub beta: f64,
    /// In `ModelKind::ALL` order.
    pub mean_v: Vec<(ModelKind, f64)>,
    pub winner: ModelKind,
}

pub fn regime_sweep(records: &[EfficiencyRecord], alphas: &[f64], betas: &[f64]) -> Result<Vec<SweepCell>, EfficiencyError> {
    if records.is_empty() {
        return Err(EfficiencyError::EmptyCorpus);
    }
    if alphas.is_empty() || betas.is_empty() {
        return Err(EfficiencyError::EmptyGrid);
    }
    if alphas.iter().chain(betas).any(|w| !w.is_finite() || *w < 0.0) {
        return Err(EfficiencyError::NegativeWeight);
    }
    let mut cells = Vec::with_capacity(alphas.len() * betas.len());
    for &alpha in alphas {
        for &beta in betas {
            let mean_v: Vec<(ModelKind, f64)> = ModelKind::ALL
                .iter()
                .filter_map(|m| {
                    let vs: Vec<f64> =
                        records.iter().filter(|r| r.model == *m).map(|r| algorithmic_utility(r, alpha, beta)).collect();
                    (!vs.is_empty()).then(|| (*m, vs.iter().sum::<f64>() / vs.len() as f64))
                })
                .collect();
            // strict improvement keeps the earlier model on ties
            let winner = mean_v.iter().fold(mean_v[0], |best, c| if c.1 > best.1 { *c } else { best }).0;
            cells.push(SweepCell { alpha, beta, mean_v, winner });
        }
    }
    Ok(cells)
}

/// Mean construal fraction per model.
pub fn mean_construal_fraction(records: &[EfficiencyRecord], model: ModelKind) -> Option<f64> {
    let fs: Vec<f64> = records.iter().filter(|r| r.model == model).map(|r| r.construal_fraction()).collect();
    (!fs.is_empty()).then(|| fs.iter().sum::<f64>() / fs.len() as f64)
}

/// `alpha,beta,model,mean_V,winner` rows.
pub fn write_sweep_csv<W: Write>(cells: &[SweepCell], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "beta", "model", "mean_V", "winner"])?;
    for c in cells {
        for (m, v) in &c.mean_v {
            w.write_record([
                c.alpha.to_string(),
                c.beta.to_string(),
                m.to_string(),
                format!("{v:.6}"),
                u8::from(*m == c.winner).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(model: ModelKind, u: f64, c: f64, r: f64) -> EfficiencyRecord {
        EfficiencyRecord { model, world_id: "w".into(), plan_utility: u, compute_cost: c, representation_cost: r, n_objects: 5 }
    }

    #[test]
    fn utility_is_linear_in_costs() {
        let r = record(ModelKind::Jit, -10.0, 30.0, 2.0);
        assert_eq!(algorithmic_utility(&r, 0.0, 0.0), -10.0);
        let d = algorithmic_utility(&r, 0.1, 2.0) - algorithmic_utility(&r, 0.1, 1.0);
        assert!((d + 2.0).abs() < 1e-12);
    }

    #[test]
    fn ties_follow_model_order() {
        let rs = vec![record(ModelKind::Random, -10.0, 0.0, 0.0), record(ModelKind::Jit, -10.0, 0.0, 0.0)];
        let cells = regime_sweep(&rs, &[0.0], &[0.0]).unwrap();
        assert_eq!(cells[0].winner, ModelKind::Jit);
        assert!(matches!(regime_sweep(&[], &[0.0], &[0.0]), Err(EfficiencyError::EmptyCorpus)));
        assert!(matches!(regime_sweep(&rs, &[-1.0], &[0.0]), Err(EfficiencyError::NegativeWeight)));
    }

    #[test]
    fn large_beta_favours_smallest_construal() {
        let rs = vec![
            record(ModelKind::Maximal, -10.0, 10.0, 5.0),
            record(ModelKind::Jit, -12.0, 30.0, 2.0),
            record(ModelKind::Random, -40.0, 10.0, 1.0),
        ];
        let cells = regime_sweep(&rs, &[0.0], &[1000.0]).unwrap();
        assert_eq!(cells[0].winner, ModelKind::Random);
    }
}
