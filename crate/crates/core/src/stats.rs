//! Small statistical helpers used by the diagnostics and the test suites.

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Two-sample Kolmogorov–Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < n && j < m {
        let x = a[i].min(b[j]);
        while i < n && a[i] <= x {
            i += 1;
        }
        while j < m && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic two-sample KS rejection threshold at level `alpha`.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let (m, se) = mean_se(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        // sample variance 5/3, se = sqrt(5/12)
        assert!((se - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_se(&[7.0]).1, 0.0);
    }

    #[test]
    fn ks_on_identical_and_shifted_samples() {
        let a: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(ks_statistic(&a, &a), 0.0);
        let b: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        assert!(ks_statistic(&a, &b) > 0.4);
        // ties across the two samples: gap 1/2 - 1/3 after the shared zero
        assert!((ks_statistic(&[0.0, 1.0], &[0.0, 1.0, 1.0]) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ks_critical_value() {
        // c(0.01) ≈ 1.6276
        let crit = ks_critical(0.01, 1000, 1000);
        assert!((crit - 1.6276 * (2.0f64 / 1000.0).sqrt()).abs() < 1e-3);
    }
}
