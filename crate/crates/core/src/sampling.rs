//! Noise distributions for the stochastic simulator.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::PI;

/// Gaussian with the given variance; zero variance returns `mean` exactly.
pub fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, variance: f64) -> f64 {
    if variance <= 0.0 {
        return mean;
    }
    let z: f64 = StandardNormal.sample(rng);
    mean + variance.sqrt() * z
}

/// Von Mises angle centred at 0 with concentration `kappa` (Best & Fisher
/// rejection sampler).
///
/// `kappa == 0` and `kappa == inf` both return exactly 0: a zero noise
/// parameter switches the source off, and infinite concentration is the
/// noiseless limit.
pub fn von_mises<R: Rng + ?Sized>(rng: &mut R, kappa: f64) -> f64 {
    if kappa <= 0.0 || kappa.is_infinite() {
        return 0.0;
    }
    if kappa > 1e6 {
        // wrapped normal limit
        return normal(rng, 0.0, 1.0 / kappa);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            return if u3 > 0.5 { theta } else { -theta };
        }
    }
}

/// Normal with `mean` and `variance` truncated to `[lo, hi]`, by rejection.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, variance: f64, lo: f64, hi: f64) -> f64 {
    if variance <= 0.0 {
        return mean.clamp(lo, hi);
    }
    for _ in 0..100_000 {
        let x = normal(rng, mean, variance);
        if (lo..=hi).contains(&x) {
            return x;
        }
    }
    // acceptance region carries negligible mass; fall back to a uniform draw
    rng.random_range(lo..=hi)
}
