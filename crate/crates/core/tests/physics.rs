use construal::geometry::{rect, Vec2};
use construal::physics::{self, BallState, EngineConfig, NoiseParams};
use construal::rng;
use construal::sampling;
use construal::worlds::{Ball, Obstacle, PlinkoWorld, Teleporter};
use proptest::prelude::*;

fn obstacle(id: &str, polygon: Vec<Vec2>) -> Obstacle {
    Obstacle { id: id.into(), polygon, solid: true, probe_eligible: true }
}

fn world(ball_x: f64, obstacles: Vec<Obstacle>, teleporters: Vec<Teleporter>) -> PlinkoWorld {
    PlinkoWorld::new(600.0, 600.0, Ball { x: ball_x, y: 40.0, radius: 10.0 }, 580.0, Some(5), obstacles, teleporters).unwrap()
}

#[test]
fn free_fall_lands_below_the_start() {
    let w = world(250.0, vec![], vec![]);
    let t = physics::run_rollout(&w, &NoiseParams::NONE, &EngineConfig::default(), &mut rng::from_seed(0));
    assert!(t.landed);
    assert_eq!(t.landing_x, Some(250.0));
    assert!(t.collision_events.is_empty());
    // semi-implicit Euler: y_n = y_0 + g dt^2 n(n+1)/2
    let (g, dt) = (300.0, 1.0 / 60.0);
    for (n, s) in t.states.iter().enumerate().take(30) {
        let expected = 40.0 + g * dt * dt * (n * (n + 1)) as f64 / 2.0;
        assert!((s.q.y - expected).abs() < 1e-9, "step {n}");
    }
}

#[test]
fn rollouts_are_seeded() {
    let w = world(300.0, vec![obstacle("a", rect(280.0, 200.0, 330.0, 240.0))], vec![]);
    let run = |s| physics::run_rollout(&w, &NoiseParams::FITTED, &EngineConfig::default(), &mut rng::from_seed(s));
    assert_eq!(run(4), run(4));
    assert_ne!(run(4).states, run(5).states);
    assert!(run(4).touched("a"));
}

#[test]
fn inactive_obstacles_are_ignored() {
    let w = world(300.0, vec![obstacle("a", rect(250.0, 200.0, 350.0, 240.0))], vec![]);
    let t = physics::run_rollout_among(&w, &[false], &NoiseParams::NONE, &EngineConfig::default(), &mut rng::from_seed(0));
    assert_eq!(t.landing_x, Some(300.0));
}

#[test]
fn collision_never_adds_energy() {
    let config = EngineConfig::default();
    let noise = NoiseParams::FITTED;
    let mut r = rng::from_seed(3);
    for _ in 0..1000 {
        let s = BallState { q: Vec2::new(0.0, 0.0), v: Vec2::new(r_range(&mut r, -200.0, 200.0), r_range(&mut r, 1.0, 300.0)) };
        let out = physics::resolve_collision(&s, Vec2::new(0.0, -1.0), 0.5, &noise, &config, &mut r).unwrap();
        assert!(out.v.norm() <= s.v.norm() + 1e-9);
        assert!(out.v.y <= 1e-12, "velocity into the surface remains");
        assert!(out.q.y < s.q.y);
    }
    assert!(physics::resolve_collision(&BallState { q: Vec2::new(0.0, 0.0), v: Vec2::new(0.0, 1.0) }, Vec2::new(0.0, 0.0), 0.0, &noise, &config, &mut r).is_err());
}

fn r_range(r: &mut rng::SimRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * sampling::truncated_normal(r, 0.5, 1.0, 0.0, 1.0)
}

#[test]
fn teleporter_relocates_to_exit_centroid() {
    let entry = obstacle("in", rect(270.0, 200.0, 330.0, 220.0));
    let exit = obstacle("out", rect(60.0, 300.0, 100.0, 340.0));
    let w = world(300.0, vec![entry, exit], vec![Teleporter { entry: "in".into(), exit: "out".into() }]);
    let t = physics::run_rollout(&w, &NoiseParams::NONE, &EngineConfig::default(), &mut rng::from_seed(0));
    assert!(t.states.iter().any(|s| s.q == Vec2::new(80.0, 320.0)));
    assert_eq!(t.landing_x, Some(80.0));
}

#[test]
fn timeout_is_reported() {
    let w = world(300.0, vec![obstacle("shelf", rect(200.0, 100.0, 400.0, 140.0))], vec![]);
    let config = EngineConfig { max_sim_time: 3.0, ..EngineConfig::default() };
    let t = physics::run_rollout(&w, &NoiseParams::NONE, &config, &mut rng::from_seed(0));
    assert!(!t.landed);
    assert_eq!(t.landing_x, None);
    assert_eq!(t.states.len(), config.max_steps() + 1);
}

// Mean resultant length of a von Mises(kappa): I1(kappa) / I0(kappa).
fn bessel_ratio(kappa: f64) -> f64 {
    let series = |order: i32| {
        let mut term = (kappa / 2.0).powi(order) / (1..=order).map(f64::from).product::<f64>();
        let mut sum = term;
        for k in 1..60 {
            term *= (kappa / 2.0).powi(2) / (k as f64 * (k + order) as f64);
            sum += term;
        }
        sum
    };
    series(1) / series(0)
}

#[test]
fn von_mises_concentration() {
    let mut r = rng::from_seed(8);
    for kappa in [0.8, 4.0] {
        let n = 200_000;
        let (mut c, mut s) = (0.0, 0.0);
        for _ in 0..n {
            let th = sampling::von_mises(&mut r, kappa);
            assert!((-std::f64::consts::PI..=std::f64::consts::PI).contains(&th));
            c += th.cos();
            s += th.sin();
        }
        assert!((c / n as f64 - bessel_ratio(kappa)).abs() < 0.01, "kappa {kappa}");
        assert!((s / n as f64).abs() < 0.01);
    }
    assert_eq!(sampling::von_mises(&mut r, 0.0), 0.0);
}

proptest! {
    #[test]
    fn truncated_normal_stays_in_bounds(seed in any::<u64>(), mean in -2.0..3.0f64, var in 0.0..4.0f64) {
        let mut r = rng::from_seed(seed);
        for _ in 0..20 {
            let x = sampling::truncated_normal(&mut r, mean, var, 0.0, 1.0);
            prop_assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn noisy_rollouts_do_not_penetrate(seed in 0u64..500) {
        let w = world(300.0, vec![
            obstacle("a", rect(260.0, 150.0, 320.0, 190.0)),
            obstacle("b", construal::geometry::to_ccw(vec![Vec2::new(300.0, 300.0), Vec2::new(380.0, 300.0), Vec2::new(300.0, 360.0)])),
        ], vec![]);
        let config = EngineConfig::default();
        let t = physics::run_rollout(&w, &NoiseParams::FITTED, &config, &mut rng::from_seed(seed));
        for s in &t.states {
            prop_assert!(physics::penetration(s, 10.0, &w, None) <= 0.1);
            prop_assert!(s.q.is_finite() && s.v.is_finite());
        }
    }
}
