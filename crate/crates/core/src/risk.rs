//! Closed-form tail risk for normal profits: VaR and Expected Shortfall
//! levels, the variance-threshold family (unilateral/pooled, both banks,
//! both metrics), and the minimal-subsidy solvers.
//!
//! The gate, the thresholds, and the subsidy are all built on one signed
//! slack expression, so a gate fed its own optimal subsidy lands exactly on
//! the boundary and passes.

use crate::error::{Error, Result};
use crate::stats::{pdf_raw, quantile_raw};

/// Which tail functional gates lending.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskMetric {
    Var,
    Es,
}

/// How the two groups' deviations combine into the book's deviation.
///
/// `SumOfStds` adds standard deviations, matching every closed form in the
/// threshold and subsidy family. `Independent` adds variances and exists for
/// sensitivity runs only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    SumOfStds,
    Independent,
}

/// One bank's tail constraint: profit below `rho` with probability at most
/// `alpha` (VaR), or tail-average profit no worse than `rho` (ES).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskPolicy {
    /// Loss floor, typically negative.
    pub rho: f64,
    /// Tail level in (0, 0.5); threshold-ordering guarantees need < 0.1.
    pub alpha: f64,
    pub metric: RiskMetric,
    pub aggregation: Aggregation,
}

impl RiskPolicy {
    pub fn new(rho: f64, alpha: f64, metric: RiskMetric, aggregation: Aggregation) -> Result<Self> {
        if !rho.is_finite() {
            return Err(Error::NonFinite { what: "loss floor" });
        }
        if !alpha.is_finite() || alpha <= 0.0 || alpha >= 0.5 {
            return Err(Error::OutOfRange {
                what: "tail level alpha",
                value: alpha,
            });
        }
        Ok(RiskPolicy {
            rho,
            alpha,
            metric,
            aggregation,
        })
    }

    /// `Phi^{-1}(alpha)`; negative everywhere on the admissible range.
    pub fn tail_quantile(&self) -> f64 {
        quantile_raw(self.alpha)
    }

    /// `phi(Phi^{-1}(alpha)) / alpha`, the expected-shortfall multiplier.
    pub fn es_multiplier(&self) -> f64 {
        pdf_raw(quantile_raw(self.alpha)) / self.alpha
    }

    /// Book standard deviation from the two groups' deviations.
    pub fn combined_std(&self, sigma_w: f64, sigma_b: f64) -> f64 {
        match self.aggregation {
            Aggregation::SumOfStds => sigma_w + sigma_b,
            Aggregation::Independent => libm::sqrt(sigma_w * sigma_w + sigma_b * sigma_b),
        }
    }

    /// Signed distance between the metric level of `N(mean, stdev^2)` profit
    /// and the loss floor. The gate is `slack + subsidy >= 0`;
    /// [`optimal_subsidy`] returns exactly `-slack` clamped at zero.
    pub fn slack(&self, mean: f64, stdev: f64) -> f64 {
        match self.metric {
            RiskMetric::Var => mean - self.rho + stdev * self.tail_quantile(),
            RiskMetric::Es => mean - self.rho - stdev * self.es_multiplier(),
        }
    }

    /// Divisor turning a mean cushion into a deviation bound: `|Phi^{-1}(alpha)|`
    /// for VaR, `phi(Phi^{-1}(alpha))/alpha` for ES.
    fn deviation_divisor(&self) -> f64 {
        match self.metric {
            RiskMetric::Var => -self.tail_quantile(),
            RiskMetric::Es => self.es_multiplier(),
        }
    }
}

/// The five variance bounds for a (bank L, bank H) pair at one premium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdSet {
    pub sigma2_l_uni: f64,
    pub sigma2_h_uni: f64,
    pub sigma2_l_pool: f64,
    pub sigma2_h_pool: f64,
    pub sigma2_l_pool_es: f64,
}

impl ThresholdSet {
    pub fn compute(
        policy_l: &RiskPolicy,
        policy_h: &RiskPolicy,
        mu_w: f64,
        mu_b: f64,
        sigma_w: f64,
        premium: f64,
    ) -> Self {
        ThresholdSet {
            sigma2_l_uni: threshold_unilateral(policy_l, mu_b, 0.0),
            sigma2_h_uni: threshold_unilateral(policy_h, mu_b, premium),
            sigma2_l_pool: threshold_pooled(policy_l, mu_w, mu_b, sigma_w, 0.0),
            sigma2_h_pool: threshold_pooled(policy_h, mu_w, mu_b, sigma_w, premium),
            sigma2_l_pool_es: threshold_pooled_es(policy_l, mu_w, mu_b, sigma_w),
        }
    }

    /// Strict ordering chain `0 < L-uni < L-pool < H-uni < H-pool`.
    pub fn ordered(&self) -> bool {
        0.0 < self.sigma2_l_uni
            && self.sigma2_l_uni < self.sigma2_l_pool
            && self.sigma2_l_pool < self.sigma2_h_uni
            && self.sigma2_h_uni < self.sigma2_h_pool
    }
}

/// VaR of `N(mean, stdev^2)`: `-(mean + stdev * Phi^{-1}(alpha))`.
///
/// The tail constraint `P(profit < rho) <= alpha` holds iff
/// `mean + stdev * Phi^{-1}(alpha) >= rho`.
pub fn var_normal(mean: f64, stdev: f64, alpha: f64) -> Result<f64> {
    check_tail_args(mean, stdev, alpha)?;
    Ok(-(mean + stdev * quantile_raw(alpha)))
}

/// Expected-shortfall level of `N(mean, stdev^2)` profit: the average of the
/// lower-tail quantiles, `mean - stdev * phi(Phi^{-1}(alpha)) / alpha`.
pub fn es_normal(mean: f64, stdev: f64, alpha: f64) -> Result<f64> {
    check_tail_args(mean, stdev, alpha)?;
    let q = quantile_raw(alpha);
    Ok(mean - stdev * pdf_raw(q) / alpha)
}

fn check_tail_args(mean: f64, stdev: f64, alpha: f64) -> Result<()> {
    if !mean.is_finite() || !stdev.is_finite() {
        return Err(Error::NonFinite {
            what: "profit parameter",
        });
    }
    if stdev < 0.0 {
        return Err(Error::OutOfRange {
            what: "profit stdev",
            value: stdev,
        });
    }
    if !alpha.is_finite() || alpha <= 0.0 || alpha >= 1.0 {
        return Err(Error::OutOfRange {
            what: "tail level alpha",
            value: alpha,
        });
    }
    Ok(())
}

fn clamped_square(bound: f64) -> f64 {
    if bound <= 0.0 {
        0.0
    } else {
        bound * bound
    }
}

/// Largest believed variance at which a bank lends to one group alone:
/// `(((1+premium) mu - rho) / divisor)^2`, clamped to zero once the loss
/// floor is out of reach even at zero variance.
pub fn threshold_unilateral(policy: &RiskPolicy, mu: f64, premium: f64) -> f64 {
    let bound = ((1.0 + premium) * mu - policy.rho) / policy.deviation_divisor();
    clamped_square(bound)
}

/// Largest believed group-B variance at which a bank lends to both groups.
///
/// Under `SumOfStds` this is the paper-form
/// `((rho - [(1+premium)(mu_w + mu_b) + Phi^{-1}(alpha) sigma_w]) / Phi^{-1}(alpha))^2`
/// for the VaR metric, clamped to zero when infeasible; `Independent`
/// subtracts variances instead of deviations.
pub fn threshold_pooled(
    policy: &RiskPolicy,
    mu_w: f64,
    mu_b: f64,
    sigma_w: f64,
    premium: f64,
) -> f64 {
    let cushion = ((1.0 + premium) * (mu_w + mu_b) - policy.rho) / policy.deviation_divisor();
    match policy.aggregation {
        Aggregation::SumOfStds => clamped_square(cushion - sigma_w),
        Aggregation::Independent => {
            if cushion <= 0.0 {
                0.0
            } else {
                (cushion * cushion - sigma_w * sigma_w).max(0.0)
            }
        }
    }
}

/// Expected-shortfall pooled bound for bank L, in the printed form
/// `max{0, ((mu_w + mu_b - rho) / (phi(Phi^{-1}(alpha))/alpha))^2 - sigma_w^2}`.
pub fn threshold_pooled_es(policy: &RiskPolicy, mu_w: f64, mu_b: f64, sigma_w: f64) -> f64 {
    let cushion = (mu_w + mu_b - policy.rho) / policy.es_multiplier();
    if cushion <= 0.0 {
        0.0
    } else {
        (cushion * cushion - sigma_w * sigma_w).max(0.0)
    }
}

/// Smallest side payment making the pooled gate feasible at the current
/// believed deviations; zero when the gate already passes.
///
/// VaR: `max{0, rho - (mu_w + mu_b) - Phi^{-1}(alpha)(sigma_b_hat + sigma_w)}`.
/// ES: `max{0, rho - (mu_w + mu_b) + (sigma_w + sigma_b_hat) phi(Phi^{-1}(alpha))/alpha}`.
pub fn optimal_subsidy(
    policy: &RiskPolicy,
    mu_w: f64,
    mu_b: f64,
    sigma_w: f64,
    sigma_b_hat: f64,
) -> f64 {
    let slack = policy.slack(mu_w + mu_b, policy.combined_std(sigma_w, sigma_b_hat));
    if slack >= 0.0 {
        0.0
    } else {
        -slack
    }
}

/// Tail gate for a normal profit plus an unconditional side payment.
pub fn var_gate(policy: &RiskPolicy, mean: f64, stdev: f64, subsidy: f64) -> bool {
    policy.slack(mean, stdev) + subsidy >= 0.0
}
