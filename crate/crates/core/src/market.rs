//! The per-period stage game: approval decisions under each bank's risk
//! gate, applicant choice among approving banks, premium-dependent payoffs,
//! profit bookkeeping, and censored belief updates.
//!
//! Group W's variance is common knowledge, so every gate uses the true
//! `sigma_W`; only group B is gated on the acting bank's posterior estimate.
//! A bank observes a repayment only when its approved offer was accepted.

use crate::beliefs::{BeliefState, CreditFileSpec};
use crate::error::Result;
use crate::risk::{var_gate, RiskPolicy};
use crate::stats::{sample_normal, NormalParams, RandomStream};

/// Lender label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bank {
    L,
    H,
}

/// One applicant group's true payoff law and credit file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupProfile {
    /// Expected payoff, positive under the equal-creditworthiness assumption.
    pub mean: f64,
    /// True payoff variance.
    pub true_variance: f64,
    pub credit_file: CreditFileSpec,
}

impl GroupProfile {
    pub fn new(mean: f64, true_variance: f64, credit_file: CreditFileSpec) -> Result<Self> {
        NormalParams::new(mean, true_variance)?;
        Ok(GroupProfile {
            mean,
            true_variance,
            credit_file,
        })
    }

    pub fn payoff_law(&self) -> NormalParams {
        NormalParams {
            mean: self.mean,
            variance: self.true_variance,
        }
    }

    pub fn true_std(&self) -> f64 {
        libm::sqrt(self.true_variance)
    }
}

/// Premium cap for the subprime bank; the period premium lives in [0, nu_max].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PricingState {
    pub nu_max: f64,
}

impl PricingState {
    pub fn new(nu_max: f64) -> Result<Self> {
        if !nu_max.is_finite() {
            return Err(crate::error::Error::NonFinite {
                what: "premium cap",
            });
        }
        if nu_max < 0.0 {
            return Err(crate::error::Error::OutOfRange {
                what: "premium cap",
                value: nu_max,
            });
        }
        Ok(PricingState { nu_max })
    }
}

/// Approval matrix for one period, indexed (group, bank).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Approvals {
    pub w_l: bool,
    pub b_l: bool,
    pub w_h: bool,
    pub b_h: bool,
}

/// Which bank each group accepted, if any.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Acceptances {
    pub w: Option<Bank>,
    pub b: Option<Bank>,
}

/// Everything observable about one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodOutcome {
    /// 1-based period index.
    pub t: u64,
    pub approvals: Approvals,
    pub acceptances: Acceptances,
    /// Realized payoff total per group (cohort sum); `None` without a loan.
    pub payoff_w: Option<f64>,
    pub payoff_b: Option<f64>,
    /// Bank-only profits; the subsidy is booked separately.
    pub profit_l: f64,
    pub profit_h: f64,
    /// Premium `nu_t` charged by bank H this period.
    pub premium: f64,
    /// Side payment supporting bank L's pooled book this period.
    pub subsidy: f64,
}

/// One bank's beliefs about the two groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankBeliefs {
    pub w: BeliefState,
    pub b: BeliefState,
}

/// Mutable per-replication market state.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub group_w: GroupProfile,
    pub group_b: GroupProfile,
    pub policy_l: RiskPolicy,
    pub policy_h: RiskPolicy,
    pub pricing: PricingState,
    pub beliefs_l: BankBeliefs,
    pub beliefs_h: BankBeliefs,
    /// Applicants per group per period; 1 reproduces the stage game,
    /// larger values only smooth learning. Gates stay per-applicant.
    pub cohort_size: u32,
}

/// Bank H's payoff on a realized return: gains scaled by `1 + premium`,
/// losses dollar for dollar.
pub fn h_payoff(pi: f64, premium: f64) -> f64 {
    (1.0 + premium) * pi.max(0.0) + pi.min(0.0)
}

/// Subprime premium rule: the cap while bank L keeps group B out, zero in
/// any period where bank L approves group B (undercutting leaves no room
/// for a markup).
pub fn h_pricing_rule(l_approves_b: bool, pricing: &PricingState) -> f64 {
    if l_approves_b {
        0.0
    } else {
        pricing.nu_max
    }
}

fn estimate(belief: &BeliefState) -> f64 {
    belief
        .posterior_variance_estimate()
        .expect("posterior shape must stay above 1")
}

/// One bank's approvals: the most profitable configuration whose gate
/// passes, checked in the order pooled, unilateral W, unilateral B. With
/// equal positive means a gate-passing superset always weakly dominates.
/// `pooled_support` is added to the pooled gate only (bank L's subsidy).
fn decide_for_bank(
    policy: &RiskPolicy,
    mu_w: f64,
    mu_b: f64,
    sigma_w_true: f64,
    sigma_b_hat: f64,
    premium: f64,
    pooled_support: f64,
) -> (bool, bool) {
    let markup = 1.0 + premium;
    let pooled_std = policy.combined_std(sigma_w_true, sigma_b_hat);
    if var_gate(policy, markup * (mu_w + mu_b), pooled_std, pooled_support) {
        return (true, true);
    }
    if var_gate(policy, markup * mu_w, sigma_w_true, 0.0) {
        return (true, false);
    }
    if var_gate(policy, markup * mu_b, sigma_b_hat, 0.0) {
        return (false, true);
    }
    (false, false)
}

/// Both banks' approval decisions for one period. Bank L charges the
/// baseline rate; bank H charges `1 + premium`. `l_pooled_support` enters
/// bank L's pooled gate only.
pub fn bank_decisions(
    beliefs_l: &BankBeliefs,
    beliefs_h: &BankBeliefs,
    policy_l: &RiskPolicy,
    policy_h: &RiskPolicy,
    group_w: &GroupProfile,
    group_b: &GroupProfile,
    premium: f64,
    l_pooled_support: f64,
) -> Approvals {
    let sigma_w = group_w.true_std();
    let (w_l, b_l) = decide_for_bank(
        policy_l,
        group_w.mean,
        group_b.mean,
        sigma_w,
        libm::sqrt(estimate(&beliefs_l.b)),
        0.0,
        l_pooled_support,
    );
    let (w_h, b_h) = decide_for_bank(
        policy_h,
        group_w.mean,
        group_b.mean,
        sigma_w,
        libm::sqrt(estimate(&beliefs_h.b)),
        premium,
        0.0,
    );
    Approvals { w_l, b_l, w_h, b_h }
}

fn choose(approved_l: bool, approved_h: bool, premium: f64, rng: &mut RandomStream) -> Option<Bank> {
    match (approved_l, approved_h) {
        (false, false) => None,
        (true, false) => Some(Bank::L),
        (false, true) => Some(Bank::H),
        (true, true) => {
            if premium > 0.0 {
                Some(Bank::L)
            } else if rng.next_bool() {
                Some(Bank::H)
            } else {
                Some(Bank::L)
            }
        }
    }
}

/// Applicant choice: the cheapest approving bank, a fair coin on an exact
/// price tie, none without an approval. The W coin is drawn before the B coin.
pub fn applicant_choice(
    approvals: &Approvals,
    premium: f64,
    rng: &mut RandomStream,
) -> Acceptances {
    Acceptances {
        w: choose(approvals.w_l, approvals.w_h, premium, rng),
        b: choose(approvals.b_l, approvals.b_h, premium, rng),
    }
}

/// Run one period of the stage game and apply the censored belief updates.
///
/// Draw order is fixed: choice coins (W then B, only on ties), then payoff
/// draws (W then B, only for accepted loans, `cohort_size` each).
pub fn run_period(
    state: &mut MarketState,
    t: u64,
    l_pooled_support: f64,
    rng: &mut RandomStream,
) -> PeriodOutcome {
    // Bank L's gate does not depend on the premium, so H can anticipate
    // whether L competes for group B this period before pricing.
    let sigma_w = state.group_w.true_std();
    let (w_l, b_l) = decide_for_bank(
        &state.policy_l,
        state.group_w.mean,
        state.group_b.mean,
        sigma_w,
        libm::sqrt(estimate(&state.beliefs_l.b)),
        0.0,
        l_pooled_support,
    );
    let premium = h_pricing_rule(b_l, &state.pricing);
    let (w_h, b_h) = decide_for_bank(
        &state.policy_h,
        state.group_w.mean,
        state.group_b.mean,
        sigma_w,
        libm::sqrt(estimate(&state.beliefs_h.b)),
        premium,
        0.0,
    );
    let approvals = Approvals { w_l, b_l, w_h, b_h };
    let acceptances = applicant_choice(&approvals, premium, rng);

    let mut profit_l = 0.0;
    let mut profit_h = 0.0;
    let mut payoff_w = None;
    let mut payoff_b = None;

    let cohort = state.cohort_size.max(1);
    let mut settle = |bank: Bank,
                      law: NormalParams,
                      known_mean: f64,
                      belief_l: &mut BeliefState,
                      belief_h: &mut BeliefState,
                      rng: &mut RandomStream| {
        let mut total = 0.0;
        for _ in 0..cohort {
            let pi = sample_normal(law, rng);
            total += pi;
            match bank {
                Bank::L => {
                    profit_l += pi;
                    *belief_l = belief_l
                        .update_with_return(pi, known_mean)
                        .expect("finite draw");
                }
                Bank::H => {
                    profit_h += h_payoff(pi, premium);
                    *belief_h = belief_h
                        .update_with_return(pi, known_mean)
                        .expect("finite draw");
                }
            }
        }
        total
    };

    if let Some(bank) = acceptances.w {
        payoff_w = Some(settle(
            bank,
            state.group_w.payoff_law(),
            state.group_w.mean,
            &mut state.beliefs_l.w,
            &mut state.beliefs_h.w,
            rng,
        ));
    }
    if let Some(bank) = acceptances.b {
        payoff_b = Some(settle(
            bank,
            state.group_b.payoff_law(),
            state.group_b.mean,
            &mut state.beliefs_l.b,
            &mut state.beliefs_h.b,
            rng,
        ));
    }

    PeriodOutcome {
        t,
        approvals,
        acceptances,
        payoff_w,
        payoff_b,
        profit_l,
        profit_h,
        premium,
        subsidy: l_pooled_support,
    }
}
