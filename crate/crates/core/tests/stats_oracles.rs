//! Independent numeric oracles for the normal kernels: bisection against the
//! CDF for the quantile, and trapezoid quadrature for the tail-average
//! identity behind the expected-shortfall closed form.

use subprime_core::risk::es_normal;
use subprime_core::stats::{normal_cdf, normal_pdf, normal_quantile};

/// Quantile by bisection on `normal_cdf` alone; never touches the rational
/// approximation under test.
fn quantile_by_bisection(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid).unwrap() < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Integral of the standard normal quantile over (0, alpha] by trapezoid on
/// a log-spaced grid. The integrand is bounded near zero, and the omitted
/// tail below `eps` contributes about `eps * |quantile(eps)|`.
fn integral_of_quantile(alpha: f64, points: usize) -> f64 {
    let eps = alpha * 1e-9;
    let ratio = (alpha / eps).powf(1.0 / points as f64);
    let mut total = 0.0;
    let mut left = eps;
    let mut f_left = normal_quantile(left).unwrap();
    for _ in 0..points {
        let right = left * ratio;
        let f_right = normal_quantile(right.min(alpha)).unwrap();
        total += 0.5 * (f_left + f_right) * (right.min(alpha) - left);
        left = right;
        f_left = f_right;
    }
    total
}

#[test]
fn quantile_agrees_with_bisection_oracle() {
    for p in [
        1e-9, 1e-6, 1e-4, 0.01, 0.02425, 0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.95, 0.99, 0.9999,
        1.0 - 1e-6,
    ] {
        let fast = normal_quantile(p).unwrap();
        let slow = quantile_by_bisection(p);
        assert!(
            (fast - slow).abs() <= 1e-9 * (1.0 + slow.abs()),
            "p={p}: {fast} vs bisection {slow}"
        );
    }
}

#[test]
fn frozen_constants_from_high_precision_reference() {
    // values computed independently with 40-digit arithmetic
    assert!((normal_quantile(0.05).unwrap() - (-1.6448536269514727)).abs() < 1e-9);
    assert!((normal_quantile(0.01).unwrap() - (-2.3263478740408408)).abs() < 1e-9);
    let q = normal_quantile(0.05).unwrap();
    let es_multiplier = normal_pdf(q).unwrap() / 0.05;
    assert!((es_multiplier - 2.0627128075074260).abs() < 1e-9);
}

#[test]
fn tail_integral_identity() {
    // integral_0^alpha quantile(phi) dphi = -pdf(quantile(alpha))
    for alpha in [0.01, 0.05, 0.1] {
        let numeric = integral_of_quantile(alpha, 100_000);
        let closed = -normal_pdf(normal_quantile(alpha).unwrap()).unwrap();
        assert!(
            (numeric - closed).abs() <= 1e-6,
            "alpha={alpha}: quadrature {numeric} vs closed form {closed}"
        );
    }
}

#[test]
fn es_closed_form_matches_quantile_quadrature() {
    // ES level = (1/alpha) * integral of the profit quantile over (0, alpha]
    for (mean, stdev, alpha) in [(0.0, 1.0, 0.05), (2.0, 3.0, 0.01), (-1.0, 0.5, 0.1)] {
        let tail_average = mean + stdev * integral_of_quantile(alpha, 100_000) / alpha;
        let closed = es_normal(mean, stdev, alpha).unwrap();
        assert!(
            (tail_average - closed).abs() <= 1e-6,
            "({mean},{stdev},{alpha}): {tail_average} vs {closed}"
        );
    }
}

#[test]
fn pdf_value_at_one_matches_reference() {
    // exp(-1/2)/sqrt(2 pi) evaluated with independent high-precision arithmetic
    assert!((normal_pdf(1.0).unwrap() - 0.24197072451914337).abs() < 1e-15);
}
