//! Property tests for the threshold family, the subsidy solvers, and the
//! tail gates.

use proptest::prelude::*;
use subprime_core::risk::{
    es_normal, optimal_subsidy, threshold_pooled, threshold_unilateral, var_gate, var_normal,
    Aggregation, RiskMetric, RiskPolicy,
};
use subprime_core::stats::{normal_cdf, normal_quantile};

fn var_policy(rho: f64, alpha: f64) -> RiskPolicy {
    RiskPolicy::new(rho, alpha, RiskMetric::Var, Aggregation::SumOfStds).unwrap()
}

fn es_policy(rho: f64, alpha: f64) -> RiskPolicy {
    RiskPolicy::new(rho, alpha, RiskMetric::Es, Aggregation::SumOfStds).unwrap()
}

proptest! {
    #[test]
    fn quantile_round_trip(p in 1e-7f64..=0.9999999) {
        let back = normal_cdf(normal_quantile(p).unwrap()).unwrap();
        prop_assert!((back - p).abs() <= 1e-10);
    }

    #[test]
    fn quantile_strictly_increasing(p1 in 1e-7f64..=0.999999, gap in 1e-6f64..=0.3) {
        let p2 = (p1 + gap).min(0.9999999);
        prop_assume!(p2 > p1);
        let q1 = normal_quantile(p1).unwrap();
        let q2 = normal_quantile(p2).unwrap();
        prop_assert!(q2 > q1);
    }

    #[test]
    fn var_es_levels_respect_the_metric_gap(
        mean in -5.0f64..5.0,
        stdev in 0.01f64..4.0,
        alpha in 0.001f64..0.2,
    ) {
        // the tail average is always below the tail quantile
        let var_level = -var_normal(mean, stdev, alpha).unwrap();
        let es_level = es_normal(mean, stdev, alpha).unwrap();
        prop_assert!(es_level < var_level);
    }

    #[test]
    fn es_subsidy_dominates_var_subsidy(
        mu in 0.05f64..5.0,
        rho in -10.0f64..-0.01,
        sigma_w in 0.0f64..2.0,
        sigma_b in 0.0f64..3.0,
        alpha in 0.001f64..0.099,
    ) {
        let s_var = optimal_subsidy(&var_policy(rho, alpha), mu, mu, sigma_w, sigma_b);
        let s_es = optimal_subsidy(&es_policy(rho, alpha), mu, mu, sigma_w, sigma_b);
        prop_assert!(s_es >= s_var);
        if s_var > 0.0 || s_es > 0.0 {
            prop_assert!(s_es > s_var, "s_es {s_es} vs s_var {s_var}");
        }
    }

    #[test]
    fn gate_is_monotone_nonincreasing_in_believed_variance(
        mu in 0.05f64..5.0,
        rho in -10.0f64..-0.01,
        sigma_w in 0.0f64..2.0,
        alpha in 0.001f64..0.099,
        lo in 0.0f64..3.0,
        bump in 0.0f64..3.0,
    ) {
        let policy = var_policy(rho, alpha);
        let hi = lo + bump;
        let pass_hi = var_gate(&policy, 2.0 * mu, policy.combined_std(sigma_w, hi), 0.0);
        let pass_lo = var_gate(&policy, 2.0 * mu, policy.combined_std(sigma_w, lo), 0.0);
        prop_assert!(!pass_hi || pass_lo);
    }

    #[test]
    fn pooled_threshold_grows_with_the_premium(
        mu in 0.05f64..5.0,
        rho in -10.0f64..-0.01,
        sigma_w in 0.0f64..2.0,
        alpha in 0.001f64..0.099,
        premium in 0.0f64..1.0,
        extra in 1e-6f64..1.0,
    ) {
        let policy = var_policy(rho, alpha);
        let base = threshold_pooled(&policy, mu, mu, sigma_w, premium);
        let wider = threshold_pooled(&policy, mu, mu, sigma_w, premium + extra);
        prop_assert!(wider >= base);
        if base > 0.0 {
            prop_assert!(wider > base);
        }
    }

    #[test]
    fn cross_bank_links_always_order(
        mu in 0.05f64..5.0,
        rho_l in -10.0f64..-0.01,
        gap in 0.0f64..5.0,
        sigma_w in 0.0f64..2.0,
        alpha in 0.001f64..0.099,
        premium in 1e-6f64..1.0,
    ) {
        // with rho_H <= rho_L and a positive premium, bank H's bound always
        // sits above bank L's within the same configuration
        let policy_l = var_policy(rho_l, alpha);
        let policy_h = var_policy(rho_l - gap, alpha);
        let l_uni = threshold_unilateral(&policy_l, mu, 0.0);
        let h_uni = threshold_unilateral(&policy_h, mu, premium);
        prop_assert!(l_uni < h_uni);
        let l_pool = threshold_pooled(&policy_l, mu, mu, sigma_w, 0.0);
        let h_pool = threshold_pooled(&policy_h, mu, mu, sigma_w, premium);
        prop_assert!(l_pool <= h_pool);
        if l_pool > 0.0 {
            prop_assert!(l_pool < h_pool);
        }
    }

    #[test]
    fn full_chain_orders_in_the_pooling_friendly_regime(
        mu in 0.05f64..5.0,
        rho_l in -10.0f64..-0.01,
        gap in 0.0f64..5.0,
        sigma_w_frac in 0.0f64..0.999,
        alpha in 0.001f64..0.099,
        premium in 1e-6f64..1.0,
    ) {
        // The strict chain L-uni < L-pool < H-uni < H-pool holds whenever
        // |quantile(alpha)| * sigma_w < mu (pooling helps) and the premium
        // plus loss-floor gap outweigh the second mean: the stated ranges
        // construct exactly that regime.
        let policy_l = var_policy(rho_l, alpha);
        let rho_h = rho_l - gap;
        let policy_h = var_policy(rho_h, alpha);
        let q_abs = -normal_quantile(alpha).unwrap();
        let sigma_w = sigma_w_frac * mu / q_abs;
        prop_assume!(gap + q_abs * sigma_w + premium * mu > mu);

        let l_uni = threshold_unilateral(&policy_l, mu, 0.0);
        let l_pool = threshold_pooled(&policy_l, mu, mu, sigma_w, 0.0);
        let h_uni = threshold_unilateral(&policy_h, mu, premium);
        let h_pool = threshold_pooled(&policy_h, mu, mu, sigma_w, premium);
        prop_assert!(0.0 < l_uni);
        prop_assert!(l_uni < l_pool, "{l_uni} vs {l_pool}");
        prop_assert!(l_pool < h_uni, "{l_pool} vs {h_uni}");
        prop_assert!(h_uni < h_pool, "{h_uni} vs {h_pool}");
    }

    #[test]
    fn optimal_subsidy_sits_exactly_on_the_gate_boundary(
        mu in 0.05f64..5.0,
        rho in -10.0f64..-0.01,
        sigma_w in 0.0f64..2.0,
        sigma_b in 0.0f64..6.0,
        alpha in 0.001f64..0.099,
        es in proptest::bool::ANY,
    ) {
        let policy = if es { es_policy(rho, alpha) } else { var_policy(rho, alpha) };
        let s = optimal_subsidy(&policy, mu, mu, sigma_w, sigma_b);
        let std = policy.combined_std(sigma_w, sigma_b);
        prop_assert!(var_gate(&policy, 2.0 * mu, std, s));
        if s > 0.0 {
            prop_assert!(!var_gate(&policy, 2.0 * mu, std, s - 1e-6));
        }
    }
}
