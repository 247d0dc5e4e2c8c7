//! Goodness-of-fit tests for the notarization harness.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Kolmogorov distribution tail `P(K > lambda)`.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov test with the asymptotic p-value.
/// Ties are handled by stepping both empirical CDFs past equal values.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> TestResult {
    assert!(!a.is_empty() && !b.is_empty(), "KS needs non-empty samples");
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    TestResult { statistic: d, p_value: kolmogorov_q((en + 0.12 + 0.11 / en) * d) }
}

/// Chi-square goodness of fit of positive counts against Geometric(p) on
/// `{1, 2, ...}`. Cells run while the expected count is at least 5; the
/// last cell collects the tail.
pub fn chi_square_geometric(samples: &[u64], p: f64) -> TestResult {
    assert!(p > 0.0 && p < 1.0, "geometric parameter must lie in (0,1)");
    let n = samples.len() as f64;
    let mut probs = Vec::new();
    let mut mass = 1.0;
    let mut k = 1u64;
    loop {
        let pk = p * (1.0 - p).powi((k - 1) as i32);
        if n * pk < 5.0 || n * (mass - pk) < 5.0 {
            probs.push(mass);
            break;
        }
        probs.push(pk);
        mass -= pk;
        k += 1;
    }
    let cells = probs.len();
    let mut obs = vec![0.0; cells];
    for &s in samples {
        let idx = (s.max(1) - 1).min(cells as u64 - 1) as usize;
        obs[idx] += 1.0;
    }
    let stat: f64 = obs.iter().zip(&probs).map(|(o, q)| (o - n * q).powi(2) / (n * q)).sum();
    let df = (cells.max(2) - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(df).expect("positive dof").cdf(stat);
    TestResult { statistic: stat, p_value }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_samples_have_zero_distance() {
        let a: Vec<f64> = (0..100).map(|i| (i % 7) as f64).collect();
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn shifted_samples_are_separated() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let b: Vec<f64> = (0..2000).map(|_| rng.random::<f64>() + 0.2).collect();
        assert!(ks_two_sample(&a, &b).p_value < 1e-6);
        let c: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        assert!(ks_two_sample(&a, &c).p_value > 0.01);
    }

    #[test]
    fn kolmogorov_tail_reference_values() {
        assert!((kolmogorov_q(1.36) - 0.049).abs() < 1e-3);
        assert!((kolmogorov_q(1.63) - 0.0098).abs() < 5e-4);
    }

    #[test]
    fn geometric_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = 0.1;
        let draw = |rng: &mut ChaCha8Rng, p: f64| {
            let mut k = 1;
            while rng.random::<f64>() >= p {
                k += 1;
            }
            k
        };
        let good: Vec<u64> = (0..5000).map(|_| draw(&mut rng, p)).collect();
        assert!(chi_square_geometric(&good, p).p_value > 0.01);
        let bad: Vec<u64> = (0..5000).map(|_| draw(&mut rng, 0.13)).collect();
        assert!(chi_square_geometric(&bad, p).p_value < 1e-3);
    }
}
