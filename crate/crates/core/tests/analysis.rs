use construal::analysis::efficiency::{self, algorithmic_utility, EfficiencyRecord, ModelKind};
use construal::analysis::fit::{grid_search_fit, parse_human_csv, aggregate, FitError, Measure, ObjectKey, Objective, ParamGrid};
use construal::analysis::metrics::{binary_loglik, pearson_r, rmse, total_variation, wasserstein1, MetricError};
use proptest::prelude::*;
use std::collections::BTreeMap;

fn samples() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, 1..30)
}

fn pmf(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..1.0f64, k).prop_filter_map("nonzero mass", |v| {
        let s: f64 = v.iter().sum();
        (s > 1e-6).then(|| v.iter().map(|x| x / s).collect())
    })
}

proptest! {
    #[test]
    fn w1_is_a_metric(a in samples(), b in samples(), c in samples()) {
        let w = |x: &[f64], y: &[f64]| wasserstein1(x, y).unwrap();
        prop_assert!(w(&a, &a).abs() < 1e-12);
        prop_assert!((w(&a, &b) - w(&b, &a)).abs() < 1e-9);
        prop_assert!(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-9);
    }

    #[test]
    fn w1_of_a_shift_is_the_shift(a in samples(), d in -50.0..50.0f64) {
        let b: Vec<f64> = a.iter().map(|x| x + d).collect();
        prop_assert!((wasserstein1(&a, &b).unwrap() - d.abs()).abs() < 1e-9);
    }

    #[test]
    fn tv_lies_in_unit_interval((p, q) in (1usize..8).prop_flat_map(|k| (pmf(k), pmf(k)))) {
        let tv = total_variation(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&tv));
        prop_assert!((tv - total_variation(&q, &p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pearson_is_affine_invariant(
        xy in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..20),
        scale in 0.1..10.0f64,
        shift in -5.0..5.0f64,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        if let Ok(r) = pearson_r(&x, &y) {
            let x2: Vec<f64> = x.iter().map(|v| scale * v + shift).collect();
            prop_assert!((pearson_r(&x2, &y).unwrap() - r).abs() < 1e-9);
            let neg: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!((pearson_r(&neg, &y).unwrap() + r).abs() < 1e-9);
        }
    }
}

#[test]
fn metric_errors() {
    assert_eq!(wasserstein1(&[], &[1.0]), Err(MetricError::EmptyDistribution));
    assert_eq!(total_variation(&[1.0], &[0.5, 0.5]), Err(MetricError::LengthMismatch(1, 2)));
    assert!(matches!(total_variation(&[0.5, 0.2], &[0.5, 0.5]), Err(MetricError::NotNormalized(_))));
    assert!(pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
    assert_eq!(rmse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
    assert!((wasserstein1(&[0.0], &[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn loglik_clips_predictions() {
    let l = binary_loglik(&[0.0, 1.0], &[1.0, 0.0], 0.01).unwrap();
    assert!((l - 2.0 * 0.01f64.ln()).abs() < 1e-12);
}

fn key(o: &str) -> ObjectKey {
    ("w".to_string(), o.to_string())
}

#[test]
fn fit_recovers_a_planted_parameter() {
    let model = |g: f64| -> BTreeMap<ObjectKey, f64> { (1..=6).map(|i| (key(&format!("o{i}")), (i as f64 / 7.0).powf(g))).collect() };
    let data = model(1.5);
    let grid = ParamGrid::new().axis("g", vec![0.5, 1.0, 1.5, 2.0, 2.5]);
    for objective in [Objective::Pearson, Objective::Rmse, Objective::Loglik] {
        let fit = grid_search_fit(|p| Ok(model(p["g"])), &data, &grid, objective).unwrap();
        assert_eq!(fit.best["g"], 1.5, "{objective}");
        assert_eq!(fit.grid.len(), 5);
    }
}

#[test]
fn fit_errors() {
    let data: BTreeMap<ObjectKey, f64> = [(key("a"), 0.2), (key("b"), 0.8)].into();
    let grid = ParamGrid::new().axis("g", vec![1.0]);
    let elsewhere = |_: &_| Ok(BTreeMap::from([(("x".to_string(), "a".to_string()), 0.5)]));
    assert!(matches!(grid_search_fit(elsewhere, &data, &grid, Objective::Rmse), Err(FitError::NoOverlap)));
    let failing = |_: &_| Err("boom".to_string());
    assert!(matches!(grid_search_fit(failing, &data, &grid, Objective::Rmse), Err(FitError::Model { .. })));
    let empty = ParamGrid::new().axis("g", vec![]);
    assert!(matches!(grid_search_fit(|_: &_| Ok(data.clone()), &data, &empty, Objective::Rmse), Err(FitError::EmptyGrid)));
}

#[test]
fn human_csv_aggregates_per_object() {
    let text = "world_id,object_id,participant_id,measure,value\nw,a,p1,recall,1\nw,a,p2,recall,0\nw,a,p1,hover,3\n";
    let records = parse_human_csv(text.as_bytes()).unwrap();
    let recall = aggregate(&records, Measure::Recall);
    assert_eq!(recall[&key("a")], 0.5);
    assert_eq!(aggregate(&records, Measure::Hover)[&key("a")], 3.0);
    let bad = "world_id,object_id,participant_id,measure,value\nw,a,p1,recall,1\nw,a,p1,smell,1\n";
    assert!(matches!(parse_human_csv(bad.as_bytes()), Err(FitError::DataCsv { row: 3, .. })));
}

fn record(model: ModelKind, utility: f64, compute: f64, repr: f64) -> EfficiencyRecord {
    EfficiencyRecord { model, world_id: "w".into(), plan_utility: utility, compute_cost: compute, representation_cost: repr, n_objects: 4 }
}

#[test]
fn sweep_picks_the_highest_mean_v() {
    let records = vec![
        record(ModelKind::Maximal, -10.0, 10.0, 4.0),
        record(ModelKind::Vgc, -10.0, 100.0, 1.0),
        record(ModelKind::Jit, -11.0, 20.0, 1.0),
        record(ModelKind::Random, -30.0, 10.0, 2.0),
    ];
    assert_eq!(algorithmic_utility(&records[0], 0.1, 1.0), -10.0 - 1.0 - 4.0);
    let cells = efficiency::regime_sweep(&records, &[0.0, 1.0], &[0.0, 1.0]).unwrap();
    let winner = |a: f64, b: f64| cells.iter().find(|c| c.alpha == a && c.beta == b).unwrap().winner;
    assert_eq!(winner(0.0, 0.0), ModelKind::Maximal, "ties go to the earliest model");
    assert_eq!(winner(0.0, 1.0), ModelKind::Vgc);
    assert_eq!(winner(1.0, 0.0), ModelKind::Maximal);
    assert_eq!(winner(1.0, 1.0), ModelKind::Maximal);
    let mut csv = Vec::new();
    efficiency::write_sweep_csv(&cells, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("alpha,beta,model,mean_V,winner\n"));
    assert_eq!(text.lines().count(), 1 + 4 * 4);
    assert!(efficiency::regime_sweep(&[], &[0.0], &[0.0]).is_err());
}
