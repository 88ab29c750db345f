//! Multi-period orchestration: baseline exclusion runs, adaptive-subsidy
//! runs, generalized guarantee schedules, escape-time bookkeeping, and
//! Monte Carlo aggregation over independent replication streams.

use alloc::vec::Vec;

use crate::beliefs::prior_from_credit_file;
use crate::error::{AssumptionViolation, Error, Result};
use crate::market::{
    run_period, Bank, BankBeliefs, GroupProfile, MarketState, PeriodOutcome, PricingState,
};
use crate::risk::{
    optimal_subsidy, threshold_pooled, threshold_unilateral, var_gate, RiskMetric, RiskPolicy,
    ThresholdSet,
};
use crate::stats::{InvGammaParams, RandomStream};

/// How bank L's pooled book is supported each period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsidyMode {
    /// No support; a valid trap scenario is absorbing.
    None,
    /// Pay the minimal VaR subsidy whenever the unassisted gate fails.
    AdaptiveVar,
    /// Pay the minimal ES subsidy whenever the unassisted gate fails.
    AdaptiveEs,
    /// Pay the minimal subsidy plus a fixed margin (a guarantee schedule).
    Guarantee { margin: f64 },
}

/// Side-payment schedule for the exploration phase.
#[derive(Debug, Clone, PartialEq)]
pub enum GuaranteePolicy {
    /// Pay the required subsidy plus a constant margin whenever the
    /// unassisted gate fails. Zero margin replays the adaptive subsidy.
    SubsidyPlus { margin: f64 },
    /// Fixed per-period amounts; periods past the end of the schedule get 0.
    Schedule(Vec<f64>),
}

impl GuaranteePolicy {
    fn amount(&self, t: u64, required: f64) -> f64 {
        match self {
            GuaranteePolicy::SubsidyPlus { margin } => required + margin,
            GuaranteePolicy::Schedule(amounts) => {
                amounts.get((t - 1) as usize).copied().unwrap_or(0.0)
            }
        }
    }
}

/// Full scenario: groups, bank policies, pricing, shared prior, run plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub group_w: GroupProfile,
    pub group_b: GroupProfile,
    pub policy_l: RiskPolicy,
    pub policy_h: RiskPolicy,
    pub pricing: PricingState,
    /// Number of periods T.
    pub horizon: u64,
    /// Base prior (a0, b0) shared by both banks and groups.
    pub prior_base: InvGammaParams,
    pub subsidy_mode: SubsidyMode,
    pub replications: u64,
    pub base_seed: u64,
    pub cohort_size: u32,
    /// Check the five trap assumptions before running.
    pub validate_assumptions: bool,
    /// Permit unequal group means for counterfactual runs.
    pub allow_unequal_means: bool,
}

impl ScenarioConfig {
    /// Bank L's prior variance estimate for group B, before any lending.
    pub fn prior_sigma2_b(&self) -> Result<f64> {
        prior_from_credit_file(self.prior_base, self.group_b.credit_file)
            .posterior_variance_estimate()
    }

    /// The threshold family at the premium cap.
    pub fn threshold_set(&self) -> ThresholdSet {
        ThresholdSet::compute(
            &self.policy_l,
            &self.policy_h,
            self.group_w.mean,
            self.group_b.mean,
            self.group_w.true_std(),
            self.pricing.nu_max,
        )
    }

    /// Bank L's pooled bound on group B's believed variance; escape and
    /// subsidy bookkeeping key off this value.
    pub fn operative_threshold(&self) -> f64 {
        threshold_pooled(
            &self.policy_l,
            self.group_w.mean,
            self.group_b.mean,
            self.group_w.true_std(),
            0.0,
        )
    }
}

/// Per-assumption outcome of the trap validation; `None` means pass.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AssumptionChecks {
    pub a1_equal_means: Option<AssumptionViolation>,
    pub a2_differential_info: Option<AssumptionViolation>,
    pub a3_creditworthy: Option<AssumptionViolation>,
    pub a4_l_prior_above: Option<AssumptionViolation>,
    pub a5_h_prior_below: Option<AssumptionViolation>,
}

impl AssumptionChecks {
    pub fn all_pass(&self) -> bool {
        self.first_violation().is_none()
    }

    pub fn first_violation(&self) -> Option<AssumptionViolation> {
        self.a1_equal_means
            .or(self.a2_differential_info)
            .or(self.a3_creditworthy)
            .or(self.a4_l_prior_above)
            .or(self.a5_h_prior_below)
    }
}

/// Numeric check of the five trap assumptions.
pub fn check_trap_assumptions(config: &ScenarioConfig) -> Result<AssumptionChecks> {
    let mut checks = AssumptionChecks::default();
    let mu_w = config.group_w.mean;
    let mu_b = config.group_b.mean;

    if !config.allow_unequal_means && mu_w != mu_b {
        checks.a1_equal_means = Some(AssumptionViolation::UnequalMeans { mu_w, mu_b });
    } else if mu_w <= 0.0 || mu_b <= 0.0 {
        checks.a1_equal_means = Some(AssumptionViolation::NonPositiveMean {
            mu: mu_w.min(mu_b),
        });
    }

    let p_w = config.group_w.credit_file.completeness;
    let p_b = config.group_b.credit_file.completeness;
    if p_b >= p_w {
        checks.a2_differential_info =
            Some(AssumptionViolation::NotDifferentialInformation { p_w, p_b });
    }

    let sigma2_w = config.group_w.true_variance;
    let sigma2_b = config.group_b.true_variance;
    let l_uni = threshold_unilateral(&config.policy_l, mu_b, 0.0);
    if !(sigma2_w <= sigma2_b && sigma2_b < l_uni) {
        checks.a3_creditworthy = Some(AssumptionViolation::NotCreditworthy {
            sigma2_w,
            sigma2_b,
            bound: l_uni,
        });
    }

    let prior = config.prior_sigma2_b()?;
    let l_pool = config.operative_threshold();
    if prior <= l_pool {
        checks.a4_l_prior_above = Some(AssumptionViolation::PriorNotAboveLPool {
            prior,
            bound: l_pool,
        });
    }

    let h_uni = threshold_unilateral(&config.policy_h, mu_b, config.pricing.nu_max);
    if prior > h_uni {
        checks.a5_h_prior_below = Some(AssumptionViolation::PriorAboveH {
            prior,
            bound: h_uni,
        });
    }

    Ok(checks)
}

fn validate_if_requested(config: &ScenarioConfig) -> Result<()> {
    if !config.validate_assumptions {
        return Ok(());
    }
    match check_trap_assumptions(config)?.first_violation() {
        Some(violation) => Err(Error::Scenario(violation)),
        None => Ok(()),
    }
}

/// Start-of-period posterior variance estimates for group B.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefPoint {
    pub sigma2_bl: f64,
    pub sigma2_bh: f64,
}

/// Full record of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub outcomes: Vec<PeriodOutcome>,
    /// One entry per period, taken before that period's decisions.
    pub belief_path: Vec<BeliefPoint>,
    pub final_sigma2_bl: f64,
    pub final_sigma2_bh: f64,
    /// First period from which bank L's unassisted gate held through the
    /// horizon; `None` if the run never settled below the bound.
    pub escape_time: Option<u64>,
    /// Times the estimate re-exceeded the bound after a crossing.
    pub recross_count: u32,
    pub total_subsidy: f64,
    pub total_profit_l: f64,
    pub total_profit_h: f64,
    /// The pooled bound used for escape bookkeeping.
    pub operative_threshold: f64,
}

enum RunPolicy<'a> {
    Baseline,
    Adaptive,
    Guarantee(&'a GuaranteePolicy),
}

fn run_replication_inner(
    config: &ScenarioConfig,
    policy: RunPolicy<'_>,
    mut rng: RandomStream,
) -> Result<TrajectoryRecord> {
    let base = config.prior_base;
    let beliefs = BankBeliefs {
        w: prior_from_credit_file(base, config.group_w.credit_file),
        b: prior_from_credit_file(base, config.group_b.credit_file),
    };
    let mut state = MarketState {
        group_w: config.group_w,
        group_b: config.group_b,
        policy_l: config.policy_l,
        policy_h: config.policy_h,
        pricing: config.pricing,
        beliefs_l: beliefs,
        beliefs_h: beliefs,
        cohort_size: config.cohort_size,
    };

    let sigma_w = config.group_w.true_std();
    let mu_w = config.group_w.mean;
    let mu_b = config.group_b.mean;

    let horizon = config.horizon;
    let mut outcomes = Vec::with_capacity(horizon as usize);
    let mut belief_path = Vec::with_capacity(horizon as usize);
    let mut unassisted = Vec::with_capacity(horizon as usize);
    let mut total_subsidy = 0.0;
    let mut total_profit_l = 0.0;
    let mut total_profit_h = 0.0;

    for t in 1..=horizon {
        let sigma2_bl = state.beliefs_l.b.posterior_variance_estimate()?;
        let sigma2_bh = state.beliefs_h.b.posterior_variance_estimate()?;
        belief_path.push(BeliefPoint {
            sigma2_bl,
            sigma2_bh,
        });

        let required = optimal_subsidy(
            &config.policy_l,
            mu_w,
            mu_b,
            sigma_w,
            libm::sqrt(sigma2_bl),
        );
        unassisted.push(required == 0.0);

        let support = match &policy {
            RunPolicy::Baseline => 0.0,
            RunPolicy::Adaptive => required,
            RunPolicy::Guarantee(guarantee) => {
                if required > 0.0 {
                    let offered = guarantee.amount(t, required);
                    let book_std = config.policy_l.combined_std(sigma_w, libm::sqrt(sigma2_bl));
                    if !var_gate(&config.policy_l, mu_w + mu_b, book_std, offered) {
                        return Err(Error::InfeasibleGuarantee {
                            period: t,
                            offered,
                            required,
                        });
                    }
                    offered
                } else {
                    0.0
                }
            }
        };

        let outcome = run_period(&mut state, t, support, &mut rng);
        total_subsidy += outcome.subsidy;
        total_profit_l += outcome.profit_l;
        total_profit_h += outcome.profit_h;
        outcomes.push(outcome);
    }

    let final_sigma2_bl = state.beliefs_l.b.posterior_variance_estimate()?;
    let final_sigma2_bh = state.beliefs_h.b.posterior_variance_estimate()?;
    let (escape_time, recross_count) = escape_bookkeeping(&unassisted, matches!(policy, RunPolicy::Baseline));

    Ok(TrajectoryRecord {
        outcomes,
        belief_path,
        final_sigma2_bl,
        final_sigma2_bh,
        escape_time,
        recross_count,
        total_subsidy,
        total_profit_l,
        total_profit_h,
        operative_threshold: config.operative_threshold(),
    })
}

/// Escape time: the first period of the final all-unassisted run; `None`
/// when the horizon ends above the bound (or the run never lends to B).
fn escape_bookkeeping(unassisted: &[bool], baseline: bool) -> (Option<u64>, u32) {
    if baseline {
        return (None, 0);
    }
    let recross = unassisted
        .windows(2)
        .filter(|w| w[0] && !w[1])
        .count() as u32;
    match unassisted.last() {
        Some(true) => {
            let last_blocked = unassisted.iter().rposition(|ok| !ok);
            let tau = match last_blocked {
                Some(idx) => idx as u64 + 2,
                None => 1,
            };
            (Some(tau), recross)
        }
        _ => (None, recross),
    }
}

/// Baseline run: no support, beliefs about B frozen by censoring, the trap
/// absorbs. Requires `SubsidyMode::None`.
pub fn run_baseline(config: &ScenarioConfig, seed: u64) -> Result<TrajectoryRecord> {
    if !matches!(config.subsidy_mode, SubsidyMode::None) {
        return Err(Error::Config {
            what: "run_baseline requires subsidy mode none",
        });
    }
    validate_if_requested(config)?;
    run_replication_inner(config, RunPolicy::Baseline, RandomStream::new(seed, 0))
}

fn check_adaptive_metric(config: &ScenarioConfig) -> Result<()> {
    let wanted = match config.subsidy_mode {
        SubsidyMode::AdaptiveVar => RiskMetric::Var,
        SubsidyMode::AdaptiveEs => RiskMetric::Es,
        _ => {
            return Err(Error::Config {
                what: "run_adaptive_subsidy requires an adaptive subsidy mode",
            })
        }
    };
    if config.policy_l.metric != wanted {
        return Err(Error::Config {
            what: "bank L's risk metric must match the adaptive subsidy mode",
        });
    }
    Ok(())
}

/// Adaptive-subsidy run: each period the minimal subsidy for bank L's pooled
/// book is paid whenever the unassisted gate fails, so lending to B happens
/// every period and beliefs converge.
pub fn run_adaptive_subsidy(config: &ScenarioConfig, seed: u64) -> Result<TrajectoryRecord> {
    check_adaptive_metric(config)?;
    validate_if_requested(config)?;
    run_replication_inner(config, RunPolicy::Adaptive, RandomStream::new(seed, 0))
}

/// Guarantee run: identical learning dynamics with `G(t)` in place of the
/// minimal subsidy; any period where the offered amount fails the tail gate
/// aborts with the offending period.
pub fn run_with_guarantee(
    config: &ScenarioConfig,
    policy: &GuaranteePolicy,
    seed: u64,
) -> Result<TrajectoryRecord> {
    validate_if_requested(config)?;
    run_replication_inner(config, RunPolicy::Guarantee(policy), RandomStream::new(seed, 0))
}

/// True when bank L never approved group B and its estimate never moved.
/// An empty trajectory is vacuously a trap.
pub fn detect_trap(trajectory: &TrajectoryRecord) -> bool {
    let never_approved = trajectory.outcomes.iter().all(|o| !o.approvals.b_l);
    let frozen = trajectory
        .belief_path
        .windows(2)
        .all(|w| w[0].sigma2_bl == w[1].sigma2_bl);
    never_approved && frozen
}

/// Per-replication digest used by the Monte Carlo fold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicationSummary {
    pub stream_id: u64,
    pub escape_time: Option<u64>,
    pub recross_count: u32,
    pub total_subsidy: f64,
    /// Mean premium paid by group B per period before and from tau on;
    /// the pre-tau window is the whole run when there is no escape.
    pub premium_pre_tau: f64,
    pub premium_post_tau: f64,
    /// Some period left group B unapproved by bank H.
    pub h_withdrew: bool,
    pub final_sigma2_bl: f64,
    pub trapped: bool,
}

impl ReplicationSummary {
    pub fn from_trajectory(stream_id: u64, trajectory: &TrajectoryRecord) -> Self {
        let tau = trajectory.escape_time;
        let mut pre_sum = 0.0;
        let mut pre_n = 0u64;
        let mut post_sum = 0.0;
        let mut post_n = 0u64;
        let mut h_withdrew = false;
        for outcome in &trajectory.outcomes {
            if !outcome.approvals.b_h {
                h_withdrew = true;
            }
            let paid = if outcome.acceptances.b == Some(Bank::H) {
                outcome.premium
            } else {
                0.0
            };
            let post = tau.is_some_and(|tau| outcome.t >= tau);
            if post {
                post_sum += paid;
                post_n += 1;
            } else {
                pre_sum += paid;
                pre_n += 1;
            }
        }
        ReplicationSummary {
            stream_id,
            escape_time: tau,
            recross_count: trajectory.recross_count,
            total_subsidy: trajectory.total_subsidy,
            premium_pre_tau: if pre_n > 0 { pre_sum / pre_n as f64 } else { 0.0 },
            premium_post_tau: if post_n > 0 {
                post_sum / post_n as f64
            } else {
                0.0
            },
            h_withdrew,
            final_sigma2_bl: trajectory.final_sigma2_bl,
            trapped: detect_trap(trajectory),
        }
    }
}

/// Aggregate over replications; a pure fold in stream order, so a parallel
/// map must deliver summaries in the same order to reproduce it bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub replications: u64,
    /// Fraction of replications with a finite escape time.
    pub escape_probability: f64,
    pub mean_tau: Option<f64>,
    pub median_tau: Option<f64>,
    pub mean_total_subsidy: f64,
    pub mean_premium_pre_tau: f64,
    pub mean_premium_post_tau: f64,
    /// Fraction of replications where bank H ever left group B unapproved.
    pub h_withdrawal_frequency: f64,
    pub mean_final_sigma2_bl: f64,
    /// Fraction of replications detected as absorbed traps.
    pub trap_frequency: f64,
}

pub fn aggregate(summaries: &[ReplicationSummary]) -> AggregateReport {
    let n = summaries.len() as f64;
    let mut taus: Vec<u64> = summaries.iter().filter_map(|s| s.escape_time).collect();
    taus.sort_unstable();
    let mean_tau = if taus.is_empty() {
        None
    } else {
        Some(taus.iter().map(|&t| t as f64).sum::<f64>() / taus.len() as f64)
    };
    let median_tau = if taus.is_empty() {
        None
    } else if taus.len() % 2 == 1 {
        Some(taus[taus.len() / 2] as f64)
    } else {
        Some((taus[taus.len() / 2 - 1] as f64 + taus[taus.len() / 2] as f64) / 2.0)
    };

    let frac = |pred: fn(&ReplicationSummary) -> bool| {
        if summaries.is_empty() {
            0.0
        } else {
            summaries.iter().filter(|s| pred(s)).count() as f64 / n
        }
    };
    let mean = |f: fn(&ReplicationSummary) -> f64| {
        if summaries.is_empty() {
            0.0
        } else {
            summaries.iter().map(f).sum::<f64>() / n
        }
    };

    AggregateReport {
        replications: summaries.len() as u64,
        escape_probability: frac(|s| s.escape_time.is_some()),
        mean_tau,
        median_tau,
        mean_total_subsidy: mean(|s| s.total_subsidy),
        mean_premium_pre_tau: mean(|s| s.premium_pre_tau),
        mean_premium_post_tau: mean(|s| s.premium_post_tau),
        h_withdrawal_frequency: frac(|s| s.h_withdrew),
        mean_final_sigma2_bl: mean(|s| s.final_sigma2_bl),
        trap_frequency: frac(|s| s.trapped),
    }
}

/// Run replication `r` of the configured mode on stream `(base_seed, r)`.
pub fn run_replication(config: &ScenarioConfig, stream_id: u64) -> Result<TrajectoryRecord> {
    let rng = RandomStream::new(config.base_seed, stream_id);
    match config.subsidy_mode {
        SubsidyMode::None => run_replication_inner(config, RunPolicy::Baseline, rng),
        SubsidyMode::AdaptiveVar | SubsidyMode::AdaptiveEs => {
            check_adaptive_metric(config)?;
            run_replication_inner(config, RunPolicy::Adaptive, rng)
        }
        SubsidyMode::Guarantee { margin } => {
            let guarantee = GuaranteePolicy::SubsidyPlus { margin };
            run_replication_inner(config, RunPolicy::Guarantee(&guarantee), rng)
        }
    }
}

/// Serial Monte Carlo over `replications` independent streams.
pub fn monte_carlo(config: &ScenarioConfig) -> Result<AggregateReport> {
    if config.replications == 0 {
        return Err(Error::Config {
            what: "at least one replication is required",
        });
    }
    validate_if_requested(config)?;
    let mut summaries = Vec::with_capacity(config.replications as usize);
    for r in 0..config.replications {
        let trajectory = run_replication(config, r)?;
        summaries.push(ReplicationSummary::from_trajectory(r, &trajectory));
    }
    Ok(aggregate(&summaries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beliefs::CreditFileSpec;
    use crate::risk::Aggregation;

    pub(crate) fn reference_config(mode: SubsidyMode, horizon: u64) -> ScenarioConfig {
        let metric = match mode {
            SubsidyMode::AdaptiveEs => RiskMetric::Es,
            _ => RiskMetric::Var,
        };
        ScenarioConfig {
            group_w: GroupProfile::new(1.0, 0.25, CreditFileSpec::new(60, 1.0, 1.0).unwrap())
                .unwrap(),
            group_b: GroupProfile::new(1.0, 0.8, CreditFileSpec::new(60, 0.01, 1.0).unwrap())
                .unwrap(),
            policy_l: RiskPolicy::new(-2.0, 0.05, metric, Aggregation::SumOfStds).unwrap(),
            policy_h: RiskPolicy::new(-6.0, 0.05, RiskMetric::Var, Aggregation::SumOfStds)
                .unwrap(),
            pricing: PricingState::new(0.5).unwrap(),
            horizon,
            prior_base: InvGammaParams::new(2.0, 12.0).unwrap(),
            subsidy_mode: mode,
            replications: 10,
            base_seed: 7,
            cohort_size: 1,
            validate_assumptions: true,
            allow_unequal_means: false,
        }
    }

    #[test]
    fn reference_scenario_passes_validation() {
        let config = reference_config(SubsidyMode::None, 100);
        let checks = check_trap_assumptions(&config).unwrap();
        assert!(checks.all_pass(), "{checks:?}");
    }

    #[test]
    fn validation_names_the_violated_assumption() {
        let mut config = reference_config(SubsidyMode::None, 100);
        config.group_b = GroupProfile::new(
            1.0,
            5.0, // above L's unilateral bound of ~3.33
            CreditFileSpec::new(60, 0.01, 1.0).unwrap(),
        )
        .unwrap();
        let err = run_baseline(&config, 1).unwrap_err();
        match err {
            Error::Scenario(v) => assert_eq!(v.assumption_number(), 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn baseline_is_an_absorbing_trap() {
        let config = reference_config(SubsidyMode::None, 400);
        let trajectory = run_baseline(&config, 42).unwrap();
        assert!(trajectory.outcomes.iter().all(|o| !o.approvals.b_l));
        assert!(trajectory
            .outcomes
            .iter()
            .all(|o| o.acceptances.b == Some(Bank::H) && o.premium == 0.5));
        let first = trajectory.belief_path[0].sigma2_bl;
        assert!(trajectory.belief_path.iter().all(|p| p.sigma2_bl == first));
        assert!(detect_trap(&trajectory));
        assert_eq!(trajectory.escape_time, None);
        assert_eq!(trajectory.total_subsidy, 0.0);
    }

    #[test]
    fn baseline_with_zero_premium_cap_still_excludes_b_from_l() {
        let mut config = reference_config(SubsidyMode::None, 200);
        config.pricing = PricingState::new(0.0).unwrap();
        let trajectory = run_baseline(&config, 5).unwrap();
        assert!(trajectory.outcomes.iter().all(|o| !o.approvals.b_l));
        assert!(trajectory
            .outcomes
            .iter()
            .all(|o| o.acceptances.b == Some(Bank::H) && o.premium == 0.0));
        assert!(detect_trap(&trajectory));
    }

    #[test]
    fn adaptive_subsidy_escapes_and_then_needs_nothing() {
        let config = reference_config(SubsidyMode::AdaptiveVar, 2000);
        let trajectory = run_adaptive_subsidy(&config, 11).unwrap();
        let tau = trajectory.escape_time.expect("should escape");
        assert!(tau > 1);
        for outcome in &trajectory.outcomes {
            assert!(outcome.approvals.b_l, "L lends to B every period");
            assert_eq!(outcome.premium, 0.0, "undercutting from period one");
            if outcome.t >= tau {
                assert_eq!(outcome.subsidy, 0.0);
            }
        }
        assert!(!detect_trap(&trajectory));
        assert!((trajectory.final_sigma2_bl - 0.8).abs() < 0.25);
    }

    #[test]
    fn recorded_subsidies_match_the_posterior_formula() {
        let config = reference_config(SubsidyMode::AdaptiveVar, 300);
        let trajectory = run_adaptive_subsidy(&config, 23).unwrap();
        let sigma_w = config.group_w.true_std();
        for (outcome, point) in trajectory.outcomes.iter().zip(&trajectory.belief_path) {
            let expected = optimal_subsidy(
                &config.policy_l,
                1.0,
                1.0,
                sigma_w,
                libm::sqrt(point.sigma2_bl),
            );
            assert_eq!(outcome.subsidy, expected, "period {}", outcome.t);
        }
    }

    #[test]
    fn guarantee_at_the_subsidy_replays_bit_for_bit() {
        let config = reference_config(SubsidyMode::AdaptiveVar, 1200);
        let adaptive = run_adaptive_subsidy(&config, 31).unwrap();
        let guarantee = GuaranteePolicy::SubsidyPlus { margin: 0.0 };
        let replay = run_with_guarantee(&config, &guarantee, 31).unwrap();
        assert_eq!(adaptive, replay);
    }

    #[test]
    fn over_guarantee_keeps_the_learning_path_but_costs_more() {
        let config = reference_config(SubsidyMode::AdaptiveVar, 1200);
        let adaptive = run_adaptive_subsidy(&config, 13).unwrap();
        let generous = run_with_guarantee(&config, &GuaranteePolicy::SubsidyPlus { margin: 1.0 }, 13)
            .unwrap();
        assert_eq!(adaptive.escape_time, generous.escape_time);
        assert_eq!(adaptive.belief_path, generous.belief_path);
        assert!(generous.total_subsidy > adaptive.total_subsidy);
    }

    #[test]
    fn fixed_schedule_covers_the_exploration_phase() {
        let config = reference_config(SubsidyMode::AdaptiveVar, 300);
        let schedule = GuaranteePolicy::Schedule(alloc::vec![10.0; 200]);
        let run = run_with_guarantee(&config, &schedule, 41).unwrap();
        let tau = run.escape_time.expect("generous schedule must escape");
        assert!(tau < 200);
        let supported = run.outcomes.iter().filter(|o| o.subsidy > 0.0).count();
        assert!(supported > 0);
        assert_eq!(run.total_subsidy, 10.0 * supported as f64);

        // a schedule that runs out while support is still needed is rejected
        let too_short = GuaranteePolicy::Schedule(alloc::vec![10.0; 1]);
        match run_with_guarantee(&config, &too_short, 41) {
            Err(Error::InfeasibleGuarantee { period, .. }) => assert!(period >= 2),
            other => panic!("expected infeasible schedule, got {other:?}"),
        }
    }

    #[test]
    fn under_guarantee_is_rejected_at_the_first_active_period() {
        let config = reference_config(SubsidyMode::AdaptiveVar, 100);
        let err = run_with_guarantee(
            &config,
            &GuaranteePolicy::SubsidyPlus { margin: -1e-6 },
            3,
        )
        .unwrap_err();
        match err {
            Error::InfeasibleGuarantee { period, .. } => assert_eq!(period, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn empty_horizon_is_a_degenerate_trap() {
        let config = reference_config(SubsidyMode::None, 0);
        let trajectory = run_baseline(&config, 1).unwrap();
        assert!(trajectory.outcomes.is_empty());
        assert!(detect_trap(&trajectory));
    }

    #[test]
    fn monte_carlo_requires_a_replication() {
        let mut config = reference_config(SubsidyMode::None, 10);
        config.replications = 0;
        assert!(matches!(monte_carlo(&config), Err(Error::Config { .. })));
    }

    #[test]
    fn monte_carlo_baseline_never_escapes() {
        let mut config = reference_config(SubsidyMode::None, 200);
        config.replications = 10;
        let report = monte_carlo(&config).unwrap();
        assert_eq!(report.escape_probability, 0.0);
        assert_eq!(report.trap_frequency, 1.0);
        assert_eq!(report.h_withdrawal_frequency, 0.0);
        assert!((report.mean_premium_pre_tau - 0.5).abs() < 1e-12);
    }

    #[test]
    fn monte_carlo_adaptive_escapes_and_es_costs_more() {
        let mut var_config = reference_config(SubsidyMode::AdaptiveVar, 1500);
        var_config.replications = 10;
        let var_report = monte_carlo(&var_config).unwrap();
        assert_eq!(var_report.escape_probability, 1.0);
        assert!(var_report.mean_total_subsidy > 0.0);
        assert_eq!(var_report.mean_premium_pre_tau, 0.0);

        let mut es_config = reference_config(SubsidyMode::AdaptiveEs, 1500);
        es_config.replications = 10;
        let es_report = monte_carlo(&es_config).unwrap();
        assert_eq!(es_report.escape_probability, 1.0);
        assert!(es_report.mean_total_subsidy > var_report.mean_total_subsidy);
    }

    #[test]
    fn adaptive_mode_rejects_a_mismatched_metric() {
        let mut config = reference_config(SubsidyMode::AdaptiveEs, 100);
        config.policy_l =
            RiskPolicy::new(-2.0, 0.05, RiskMetric::Var, Aggregation::SumOfStds).unwrap();
        assert!(matches!(
            run_adaptive_subsidy(&config, 1),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn replication_summaries_fold_deterministically() {
        let mut config = reference_config(SubsidyMode::AdaptiveVar, 800);
        config.replications = 6;
        let serial = monte_carlo(&config).unwrap();
        let summaries: Vec<ReplicationSummary> = (0..6)
            .map(|r| {
                ReplicationSummary::from_trajectory(r, &run_replication(&config, r).unwrap())
            })
            .collect();
        assert_eq!(serial, aggregate(&summaries));
    }

    #[test]
    fn profit_totals_match_the_period_sums() {
        let config = reference_config(SubsidyMode::AdaptiveVar, 500);
        let trajectory = run_adaptive_subsidy(&config, 77).unwrap();
        let mut sum_l = 0.0;
        let mut sum_h = 0.0;
        let mut sum_s = 0.0;
        for o in &trajectory.outcomes {
            sum_l += o.profit_l;
            sum_h += o.profit_h;
            sum_s += o.subsidy;
        }
        assert_eq!(sum_l, trajectory.total_profit_l);
        assert_eq!(sum_h, trajectory.total_profit_h);
        assert_eq!(sum_s, trajectory.total_subsidy);
    }
}
