//! Distribution distances and goodness-of-fit measures.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("probability vector sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),
}

fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// 1-Wasserstein distance between two empirical distributions: the exact
/// integral of the absolute difference of their quantile functions.
pub fn wasserstein1(a: &[f64], b: &[f64]) -> Result<f64, MetricError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricError::EmptyDistribution);
    }
    let (a, b) = (sorted(a), sorted(b));
    let (n, m) = (a.len() as u64, b.len() as u64);
    if n == m {
        return Ok(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64);
    }
    // quantile breakpoints in units of 1 / (n m): a steps at multiples of m,
    // b at multiples of n
    let scale = (n * m) as f64;
    let (mut i, mut j, mut u) = (0u64, 0u64, 0u64);
    let mut total = 0.0;
    while i < n && j < m {
        let next_a = (i + 1) * m;
        let next_b = (j + 1) * n;
        let next = next_a.min(next_b);
        total += (next - u) as f64 * (a[i as usize] - b[j as usize]).abs();
        u = next;
        if next_a == next {
            i += 1;
        }
        if next_b == next {
            j += 1;
        }
    }
    Ok(total / scale)
}

fn check_pmf(p: &[f64]) -> Result<(), MetricError> {
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > 1e-9 {
        return Err(MetricError::NotNormalized(s));
    }
    Ok(())
}

/// Half the summed absolute difference between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64, MetricError> {
    if p.len() != q.len() {
        return Err(MetricError::LengthMismatch(p.len(), q.len()));
    }
    check_pmf(p)?;
    check_pmf(q)?;
    let tv = 0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>();
    Ok(tv.clamp(0.0, 1.0))
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), MetricError> {
    if x.len() != y.len() {
        return Err(MetricError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(MetricError::DegenerateInput("need at least two points"));
    }
    Ok(())
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(MetricError::DegenerateInput("zero variance"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub fn rmse(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_pair(x, y)?;
    let mse = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / x.len() as f64;
    Ok(mse.sqrt())
}

pub const DEFAULT_CLIP: f64 = 0.01;

/// Bernoulli log-likelihood with predictions clipped to `[clip, 1 - clip]`.
pub fn binary_loglik(p: &[f64], outcomes: &[f64], clip: f64) -> Result<f64, MetricError> {
    if p.len() != outcomes.len() {
        return Err(MetricError::LengthMismatch(p.len(), outcomes.len()));
    }
    if p.is_empty() {
        return Err(MetricError::DegenerateInput("no observations"));
    }
    Ok(p.iter()
        .zip(outcomes)
        .map(|(p, o)| {
            let p = p.clamp(clip, 1.0 - clip);
            o * p.ln() + (1.0 - o) * (1.0 - p).ln()
        })
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wasserstein_examples() {
        assert_eq!(wasserstein1(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(wasserstein1(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(wasserstein1(&[3.0, 1.0, 2.0], &[2.0, 3.0, 1.0]).unwrap(), 0.0);
        assert_eq!(wasserstein1(&[], &[1.0]), Err(MetricError::EmptyDistribution));
    }

    #[test]
    fn wasserstein_unequal_sizes() {
        // quantiles of {0} vs {0, 1}: |0-0| on [0, .5), |0-1| on [.5, 1)
        assert!((wasserstein1(&[0.0], &[0.0, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        // {0, 3} vs {1, 1, 1}: |0-1| on [0,.5), |3-1| on [.5,1)
        assert!((wasserstein1(&[0.0, 3.0], &[1.0, 1.0, 1.0]).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn tv_examples() {
        assert_eq!(total_variation(&[0.2, 0.8], &[0.2, 0.8]).unwrap(), 0.0);
        assert_eq!(total_variation(&[1.0, 0.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(total_variation(&[0.5, 0.5], &[0.75, 0.25]).unwrap(), 0.25);
        assert!(matches!(total_variation(&[1.0], &[0.5, 0.5]), Err(MetricError::LengthMismatch(1, 2))));
        assert!(matches!(total_variation(&[0.4, 0.4], &[0.5, 0.5]), Err(MetricError::NotNormalized(_))));
    }

    #[test]
    fn fit_measures() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson_r(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(rmse(&x, &x).unwrap(), 0.0);
        assert!(matches!(pearson_r(&[1.0, 1.0], &[1.0, 2.0]), Err(MetricError::DegenerateInput(_))));
        let ll = binary_loglik(&[0.5, 0.5], &[1.0, 0.0], DEFAULT_CLIP).unwrap();
        assert!((ll - 2.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((ll + 1.3863).abs() < 1e-4);
        // clipping keeps certainty finite
        assert!(binary_loglik(&[0.0], &[1.0], DEFAULT_CLIP).unwrap().is_finite());
    }
}
