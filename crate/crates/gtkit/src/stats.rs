//! Shared statistical helpers: exact binomial confidence intervals and a
//! log-gamma for the large-parameter bound path.

use crate::codes::binomial_tail;

/// Two-sided Clopper-Pearson interval for a binomial proportion.
///
/// Exact by construction: endpoints are solved from the binomial tail
/// itself, so zero-failure runs get the familiar 1 - (alpha/2)^(1/n)
/// upper bound instead of a degenerate normal approximation.
pub fn clopper_pearson(failures: u64, samples: u64, confidence: f64) -> (f64, f64) {
    assert!(failures <= samples && samples > 0);
    assert!((0.0..1.0).contains(&(1.0 - confidence)));
    let tail_mass = (1.0 - confidence) / 2.0;

    let low = if failures == 0 {
        0.0
    } else {
        // Largest p with P(X >= f) <= tail_mass, i.e. tail(n, p, f-1) = 1 - tail_mass.
        solve_tail(samples, failures as i64 - 1, 1.0 - tail_mass)
    };
    let high = if failures == samples {
        1.0
    } else {
        // Smallest p with P(X <= f) <= tail_mass.
        solve_tail(samples, failures as i64, tail_mass)
    };
    (low, high)
}

/// Bisect for the p where P(Bin(n, p) <= r) equals `target`; the tail is
/// strictly decreasing in p on (0, 1).
fn solve_tail(n: u64, r: i64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if binomial_tail(n, mid, r) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// ln Gamma(x) for x > 0: upward shift below 15, then Stirling's series.
/// Accurate to ~1e-13 relative, enough for the log-space binomial path.
pub fn ln_gamma(mut x: f64) -> f64 {
    assert!(x > 0.0);
    let mut shift = 0.0;
    while x < 15.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv / 12.0 - inv * inv2 / 360.0 + inv * inv2 * inv2 / 1260.0
        - inv * inv2 * inv2 * inv2 / 1680.0;
    shift + 0.5 * (2.0 * std::f64::consts::PI).ln() + (x - 0.5) * x.ln() - x + series
}

/// ln C(n, k) via ln_gamma.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_failure_upper_bound_matches_closed_form() {
        let n = 10_000u64;
        let (lo, hi) = clopper_pearson(0, n, 0.95);
        assert_eq!(lo, 0.0);
        let expected = 1.0 - 0.025f64.powf(1.0 / n as f64);
        assert!((hi - expected).abs() < 1e-9, "hi={hi} expected={expected}");
    }

    #[test]
    fn interval_brackets_the_point_estimate() {
        for &(f, n) in &[(1u64, 50u64), (7, 100), (99, 100), (100, 100), (0, 3)] {
            let (lo, hi) = clopper_pearson(f, n, 0.95);
            let p_hat = f as f64 / n as f64;
            assert!(lo <= p_hat + 1e-12 && p_hat <= hi + 1e-12, "f={f} n={n}");
        }
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut fact = 1.0f64;
        for n in 1..25u32 {
            fact *= n as f64;
            let err = (ln_gamma(n as f64 + 1.0) - fact.ln()).abs();
            assert!(err < 1e-11, "n={n} err={err}");
        }
    }

    #[test]
    fn ln_choose_agrees_with_exact_values() {
        assert!((ln_choose(52, 5) - (2_598_960f64).ln()).abs() < 1e-9);
        assert!((ln_choose(1000, 2) - (499_500f64).ln()).abs() < 1e-9);
    }
}
