//! Flat `key=value` parameter documents.
//!
//! Blank lines and lines starting with `#` are skipped. Unknown or repeated
//! keys are errors.

use crate::analysis::fit::ParamGrid;
use crate::jit::JitParams;
use crate::physics::{EngineConfig, NoiseParams};
use crate::planner::PlannerParams;
use crate::vgc::{PhysicsUtility, VgcParams};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParamsError {
    #[error("line {line}: expected key=value")]
    Syntax { line: usize },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key {key:?}")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: bad value for {key}: {detail}")]
    BadValue { line: usize, key: String, detail: String },
    #[error("{0}")]
    Invalid(String),
}

/// `(line, key, value)` triples in document order, restricted to `allowed`
/// keys when given.
pub fn parse_flat(text: &str, allowed: Option<&[&str]>) -> Result<Vec<(usize, String, String)>, ParamsError> {
    let mut out: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (k, v) = trimmed.split_once('=').ok_or(ParamsError::Syntax { line })?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ParamsError::Syntax { line });
        }
        if allowed.is_some_and(|a| !a.contains(&k)) {
            return Err(ParamsError::UnknownKey { line, key: k.to_string() });
        }
        if out.iter().any(|(_, seen, _)| seen == k) {
            return Err(ParamsError::DuplicateKey { line, key: k.to_string() });
        }
        out.push((line, k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ParamsError>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e: T::Err| ParamsError::BadValue { line, key: key.to_string(), detail: e.to_string() })
}

/// Every tunable model setting, with defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelConfig {
    pub planner: PlannerParams,
    pub jit: JitParams,
    pub noise: NoiseParams,
    pub engine: EngineConfig,
    pub vgc: VgcParams,
    pub utility: PhysicsUtility,
    /// Standard deviation scale of the signal-detection probe rule.
    pub kappa_sd: f64,
    pub choice_alpha: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            planner: PlannerParams::default(),
            jit: JitParams::default(),
            noise: NoiseParams::FITTED,
            engine: EngineConfig::default(),
            vgc: VgcParams::default(),
            utility: PhysicsUtility::Wasserstein,
            kappa_sd: 20.0,
            choice_alpha: 1.0,
        }
    }
}

pub const MODEL_KEYS: &[&str] = &[
    "alpha_d",
    "alpha_h",
    "expansion_cap",
    "gamma",
    "spotlight_radius",
    "replan_cap",
    "sigma_sq",
    "kappa",
    "s_sq",
    "dt",
    "gravity",
    "restitution",
    "max_sim_time",
    "luce_alpha",
    "value_rollouts",
    "failure_value",
    "max_objects",
    "utility",
    "tv_scale",
    "kappa_sd",
    "choice_alpha",
];

impl ModelConfig {
    pub fn parse(text: &str) -> Result<Self, ParamsError> {
        let mut c = ModelConfig::default();
        let mut tv_scale = None;
        let mut utility = None;
        for (line, key, v) in parse_flat(text, Some(MODEL_KEYS))? {
            let v = v.as_str();
            match key.as_str() {
                "alpha_d" => c.planner.alpha_d = num(line, &key, v)?,
                "alpha_h" => c.planner.alpha_h = num(line, &key, v)?,
                "expansion_cap" => c.planner.expansion_cap = Some(num(line, &key, v)?),
                "gamma" => c.jit.gamma = num(line, &key, v)?,
                "spotlight_radius" => c.jit.spotlight_radius = num(line, &key, v)?,
                "replan_cap" => c.jit.replan_cap = num(line, &key, v)?,
                "sigma_sq" => c.noise.sigma_sq = num(line, &key, v)?,
                "kappa" => c.noise.kappa = num(line, &key, v)?,
                "s_sq" => c.noise.s_sq = num(line, &key, v)?,
                "dt" => c.engine.dt = num(line, &key, v)?,
                "gravity" => c.engine.gravity = num(line, &key, v)?,
                "restitution" => c.engine.base_restitution = num(line, &key, v)?,
                "max_sim_time" => c.engine.max_sim_time = num(line, &key, v)?,
                "luce_alpha" => c.vgc.luce_alpha = num(line, &key, v)?,
                "value_rollouts" => c.vgc.value_rollouts = num(line, &key, v)?,
                "failure_value" => c.vgc.failure_value = Some(num(line, &key, v)?),
                "max_objects" => c.vgc.max_objects = num(line, &key, v)?,
                "utility" => {
                    utility = Some(match v {
                        "w1" | "wasserstein" => false,
                        "tv" => true,
                        _ => return Err(ParamsError::BadValue { line, key, detail: "expected w1 or tv".into() }),
                    })
                }
                "tv_scale" => tv_scale = Some(num::<f64>(line, &key, v)?),
                "kappa_sd" => c.kappa_sd = num(line, &key, v)?,
                "choice_alpha" => c.choice_alpha = num(line, &key, v)?,
                _ => unreachable!("keys filtered by parse_flat"),
            }
        }
        if utility == Some(true) {
            c.utility = PhysicsUtility::TotalVariation { scale: tv_scale.unwrap_or(100.0) };
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        self.planner.validate().map_err(ParamsError::Invalid)?;
        self.jit.validate().map_err(ParamsError::Invalid)?;
        self.noise.validate().map_err(ParamsError::Invalid)?;
        self.engine.validate().map_err(ParamsError::Invalid)?;
        self.vgc.validate().map_err(ParamsError::Invalid)?;
        if !(self.kappa_sd > 0.0) || !(self.choice_alpha > 0.0) {
            return Err(ParamsError::Invalid("kappa_sd and choice_alpha must be positive".into()));
        }
        Ok(())
    }

    /// Copy with the named numeric settings overridden.
    pub fn with_overrides(&self, values: &BTreeMap<String, f64>) -> Result<Self, ParamsError> {
        let text: String = values.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        let mut base = self.to_text();
        // overrides replace the matching lines
        base.retain_lines(|k| !values.contains_key(k));
        ModelConfig::parse(&(base.0 + &text))
    }

    /// Document that parses back to this configuration.
    pub fn to_text(&self) -> KvText {
        let mut lines = vec![
            format!("alpha_d={}", self.planner.alpha_d),
            format!("alpha_h={}", self.planner.alpha_h),
        ];
        if let Some(cap) = self.planner.expansion_cap {
            lines.push(format!("expansion_cap={cap}"));
        }
        lines.extend([
            format!("gamma={}", self.jit.gamma),
            format!("spotlight_radius={}", self.jit.spotlight_radius),
            format!("replan_cap={}", self.jit.replan_cap),
            format!("sigma_sq={}", self.noise.sigma_sq),
            format!("kappa={}", self.noise.kappa),
            format!("s_sq={}", self.noise.s_sq),
            format!("dt={}", self.engine.dt),
            format!("gravity={}", self.engine.gravity),
            format!("restitution={}", self.engine.base_restitution),
            format!("max_sim_time={}", self.engine.max_sim_time),
            format!("luce_alpha={}", self.vgc.luce_alpha),
            format!("value_rollouts={}", self.vgc.value_rollouts),
        ]);
        if let Some(f) = self.vgc.failure_value {
            lines.push(format!("failure_value={f}"));
        }
        lines.push(format!("max_objects={}", self.vgc.max_objects));
        match self.utility {
            PhysicsUtility::Wasserstein => lines.push("utility=w1".into()),
            PhysicsUtility::TotalVariation { scale } => {
                lines.push("utility=tv".into());
                lines.push(format!("tv_scale={scale}"));
            }
        }
        lines.push(format!("kappa_sd={}", self.kappa_sd));
        lines.push(format!("choice_alpha={}", self.choice_alpha));
        KvText(lines.into_iter().map(|l| l + "\n").collect())
    }
}

/// Rendered `key=value` document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KvText(pub String);

impl KvText {
    fn retain_lines(&mut self, keep: impl Fn(&str) -> bool) {
        self.0 = self.0.lines().filter(|l| keep(l.split('=').next().unwrap_or(""))).map(|l| format!("{l}\n")).collect();
    }
}

/// Grid document: each key names a model setting and lists its candidate
/// values separated by commas.
pub fn parse_grid(text: &str) -> Result<ParamGrid, ParamsError> {
    let mut grid = ParamGrid::new();
    for (line, key, v) in parse_flat(text, Some(MODEL_KEYS))? {
        if key == "utility" {
            return Err(ParamsError::BadValue { line, key, detail: "not a numeric setting".into() });
        }
        let values = v.split(',').map(|x| num::<f64>(line, &key, x.trim())).collect::<Result<Vec<_>, _>>()?;
        if values.is_empty() || values.iter().any(|x| !x.is_finite()) {
            return Err(ParamsError::BadValue { line, key, detail: "values must be finite".into() });
        }
        grid = grid.axis(&key, values);
    }
    if grid.axes().is_empty() {
        return Err(ParamsError::Invalid("grid declares no axes".into()));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_round_trips() {
        let c = ModelConfig::parse("# fitted\ngamma = 0.5\nutility=tv\ntv_scale=40\n\nluce_alpha=20\n").unwrap();
        assert_eq!(c.jit.gamma, 0.5);
        assert_eq!(c.utility, PhysicsUtility::TotalVariation { scale: 40.0 });
        assert_eq!(ModelConfig::parse(&c.to_text().0).unwrap(), c);
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert_eq!(ModelConfig::parse("gama=1\n"), Err(ParamsError::UnknownKey { line: 1, key: "gama".into() }));
        assert!(matches!(ModelConfig::parse("gamma=1\ngamma=2\n"), Err(ParamsError::DuplicateKey { line: 2, .. })));
        assert!(matches!(ModelConfig::parse("gamma\n"), Err(ParamsError::Syntax { line: 1 })));
        assert!(matches!(ModelConfig::parse("gamma=x\n"), Err(ParamsError::BadValue { .. })));
        assert!(matches!(ModelConfig::parse("gamma=-1\n"), Err(ParamsError::Invalid(_))));
    }

    #[test]
    fn overrides_and_grids() {
        let c = ModelConfig::default().with_overrides(&[("gamma".to_string(), 1.5)].into()).unwrap();
        assert_eq!(c.jit.gamma, 1.5);
        let g = parse_grid("gamma=0,0.5,1\nkappa=0.8\n").unwrap();
        assert_eq!(g.points().len(), 3);
        assert!(parse_grid("").is_err());
    }
}
