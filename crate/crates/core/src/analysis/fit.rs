//! Exhaustive grid-search fitting of model parameters to per-object data.

use super::metrics::{self, MetricError};
use rayon::prelude::*;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;
use thiserror::Error;

/// `(world_id, object_id)`.
pub type ObjectKey = (String, String);
pub type ParamPoint = BTreeMap<String, f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("no data keys match model outputs")]
    NoOverlap,
    #[error("model output missing for {0}/{1}")]
    Unresolved(String, String),
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("model run failed at {point}: {detail}")]
    Model { point: String, detail: String },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("data csv row {row}: {detail}")]
    DataCsv { row: usize, detail: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Objective {
    Pearson,
    Rmse,
    Loglik,
}

impl Objective {
    pub fn as_str(&self) -> &'static str {
        match self {
            Objective::Pearson => "pearson",
            Objective::Rmse => "rmse",
            Objective::Loglik => "loglik",
        }
    }

    fn maximize(&self) -> bool {
        !matches!(self, Objective::Rmse)
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pearson" => Ok(Objective::Pearson),
            "rmse" => Ok(Objective::Rmse),
            "loglik" => Ok(Objective::Loglik),
            other => Err(format!("unknown objective {other:?}")),
        }
    }
}

/// Named axes, each a list of candidate values. Points are enumerated in
/// lexicographic order of `(axis name, value)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamGrid {
    axes: BTreeMap<String, Vec<f64>>,
}

impl ParamGrid {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn axis(mut self, name: &str, mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        values.dedup();
        self.axes.insert(name.to_string(), values);
        self
    }

    pub fn axes(&self) -> &BTreeMap<String, Vec<f64>> {
        &self.axes
    }

    pub fn points(&self) -> Vec<ParamPoint> {
        let mut points = vec![ParamPoint::new()];
        for (name, values) in &self.axes {
            points = points
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.insert(name.clone(), *v);
                        q
                    })
                })
                .collect();
        }
        if self.axes.values().any(|v| v.is_empty()) {
            return Vec::new();
        }
        points
    }
}

pub fn format_point(p: &ParamPoint) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub best: ParamPoint,
    pub objective_value: f64,
    pub objective: Objective,
    /// Every evaluated point with its objective value, in grid order.
    pub grid: Vec<(ParamPoint, f64)>,
}

/// Scores model predictions against observed values on shared keys.
pub fn score(predictions: &BTreeMap<ObjectKey, f64>, data: &BTreeMap<ObjectKey, f64>, objective: Objective) -> Result<f64, FitError> {
    let mut x = Vec::with_capacity(data.len());
    let mut y = Vec::with_capacity(data.len());
    for (key, obs) in data {
        let pred = predictions.get(key).ok_or_else(|| FitError::Unresolved(key.0.clone(), key.1.clone()))?;
        x.push(*pred);
        y.push(*obs);
    }
    Ok(match objective {
        Objective::Pearson => metrics::pearson_r(&x, &y)?,
        Objective::Rmse => metrics::rmse(&x, &y)?,
        Objective::Loglik => metrics::binary_loglik(&x, &y, metrics::DEFAULT_CLIP)?,
    })
}

/// Objective values closer than this count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Evaluates `runner` at every grid point and returns the optimum; ties go
/// to the earliest point in grid order.
pub fn grid_search_fit<F>(runner: F, data: &BTreeMap<ObjectKey, f64>, grid: &ParamGrid, objective: Objective) -> Result<FitResult, FitError>
where
    F: Fn(&ParamPoint) -> Result<BTreeMap<ObjectKey, f64>, String> + Sync,
{
    let points = grid.points();
    if points.is_empty() {
        return Err(FitError::EmptyGrid);
    }
    let scored: Vec<Result<f64, FitError>> = points
        .par_iter()
        .map(|p| {
            let preds = runner(p).map_err(|detail| FitError::Model { point: format_point(p), detail })?;
            if !data.keys().any(|k| preds.contains_key(k)) {
                return Err(FitError::NoOverlap);
            }
            score(&preds, data, objective)
        })
        .collect();
    let mut grid_out: Vec<(ParamPoint, f64)> = Vec::with_capacity(points.len());
    let mut best: Option<usize> = None;
    for (i, (p, s)) in points.into_iter().zip(scored).enumerate() {
        let s = s?;
        let better = match best {
            None => true,
            Some(b) => {
                let current = grid_out[b].1;
                if objective.maximize() { s > current + TIE_TOLERANCE } else { s < current - TIE_TOLERANCE }
            }
        };
        if better {
            best = Some(i);
        }
        grid_out.push((p, s));
    }
    let b = best.expect("grid nonempty");
    Ok(FitResult { best: grid_out[b].0.clone(), objective_value: grid_out[b].1, objective, grid: grid_out })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Recall,
    Confidence,
    Hover,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct HumanRecord {
    pub world_id: String,
    pub object_id: String,
    pub participant_id: String,
    pub measure: Measure,
    pub value: f64,
}

/// Reads `world_id,object_id,participant_id,measure,value` rows; row numbers
/// in errors count the header as row 1.
pub fn parse_human_csv<R: Read>(reader: R) -> Result<Vec<HumanRecord>, FitError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<HumanRecord>().enumerate() {
        let rec = row.map_err(|e| FitError::DataCsv { row: i + 2, detail: e.to_string() })?;
        if !rec.value.is_finite() {
            return Err(FitError::DataCsv { row: i + 2, detail: "value must be finite".into() });
        }
        out.push(rec);
    }
    Ok(out)
}

/// Per-object mean of one measure across participants.
pub fn aggregate(records: &[HumanRecord], measure: Measure) -> BTreeMap<ObjectKey, f64> {
    let mut sums: BTreeMap<ObjectKey, (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.measure == measure) {
        let e = sums.entry((r.world_id.clone(), r.object_id.clone())).or_default();
        e.0 += r.value;
        e.1 += 1;
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key(o: &str) -> ObjectKey {
        ("w".into(), o.into())
    }

    #[test]
    fn grid_points_are_lexicographic() {
        let g = ParamGrid::new().axis("b", vec![2.0, 1.0]).axis("a", vec![0.5]);
        let pts = g.points();
        assert_eq!(pts.len(), 2);
        assert_eq!(format_point(&pts[0]), "a=0.5,b=1");
        assert!(ParamGrid::new().axis("a", vec![]).points().is_empty());
    }

    #[test]
    fn recovers_planted_slope() {
        let data: BTreeMap<ObjectKey, f64> = (0..5).map(|i| (key(&i.to_string()), 0.3 * i as f64)).collect();
        let runner = |p: &ParamPoint| -> Result<BTreeMap<ObjectKey, f64>, String> {
            Ok((0..5).map(|i| (key(&i.to_string()), p["k"] * i as f64)).collect())
        };
        let grid = ParamGrid::new().axis("k", vec![0.1, 0.2, 0.3, 0.4]);
        let fit = grid_search_fit(runner, &data, &grid, Objective::Rmse).unwrap();
        assert_eq!(fit.best["k"], 0.3);
        // every positive slope correlates perfectly, so the first point wins
        let fit = grid_search_fit(runner, &data, &grid, Objective::Pearson).unwrap();
        assert_eq!(fit.best["k"], 0.1);
    }

    #[test]
    fn single_point_and_no_overlap() {
        let data: BTreeMap<ObjectKey, f64> = [(key("a"), 0.2), (key("b"), 0.9)].into();
        let grid = ParamGrid::new().axis("g", vec![1.0]);
        let echo = |_: &ParamPoint| Ok([(key("a"), 0.1), (key("b"), 0.7)].into());
        assert_eq!(grid_search_fit(echo, &data, &grid, Objective::Loglik).unwrap().best["g"], 1.0);
        let other = |_: &ParamPoint| Ok([(key("z"), 0.1)].into());
        assert_eq!(grid_search_fit(other, &data, &grid, Objective::Rmse), Err(FitError::NoOverlap));
    }

    #[test]
    fn human_csv_parsing() {
        let text = "world_id,object_id,participant_id,measure,value\nw,a,p1,recall,1\nw,a,p2,recall,0\nw,a,p1,hover,3\n";
        let recs = parse_human_csv(text.as_bytes()).unwrap();
        let agg = aggregate(&recs, Measure::Recall);
        assert_eq!(agg[&key("a")], 0.5);
        let bad = "world_id,object_id,participant_id,measure,value\nw,a,p1,smell,1\n";
        assert!(matches!(parse_human_csv(bad.as_bytes()), Err(FitError::DataCsv { row: 2, .. })));
    }
}
