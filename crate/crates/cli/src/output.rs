//! CSV and JSON emission. Floats are written with Rust's shortest
//! round-trip formatting so every numeric cell parses back bit-exactly;
//! digests are SHA-256 over the raw bytes written.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use subprime_core::engine::{
    AggregateReport, ReplicationSummary, ScenarioConfig, SubsidyMode, TrajectoryRecord,
};
use subprime_core::market::Bank;

#[derive(Debug, Clone, Serialize)]
pub struct EmittedFile {
    pub name: String,
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        let _ = write!(out, "{byte:02x}");
    }
    out
}

pub fn write_with_digest(dir: &Path, name: &str, contents: &str) -> Result<EmittedFile> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(EmittedFile {
        name: name.to_string(),
        sha256: sha256_hex(contents.as_bytes()),
    })
}

fn push_opt(line: &mut String, value: Option<f64>) {
    if let Some(v) = value {
        let _ = write!(line, "{v}");
    }
}

fn bank_cell(bank: Option<Bank>) -> &'static str {
    match bank {
        Some(Bank::L) => "L",
        Some(Bank::H) => "H",
        None => "",
    }
}

pub const TRAJECTORY_HEADER: &str =
    "t,a_wl,a_bl,a_wh,a_bh,s_w,s_b,nu,subsidy,pi_w,pi_b,profit_l,profit_h,sigma2_bl,sigma2_bh";

/// One row per period: approvals, acceptances, premium, subsidy, realized
/// payoffs, bank profits, and the start-of-period variance estimates.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::new();
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for (outcome, point) in record.outcomes.iter().zip(&record.belief_path) {
        let mut line = String::new();
        let _ = write!(
            line,
            "{},{},{},{},{},{},{},{},{},",
            outcome.t,
            outcome.approvals.w_l as u8,
            outcome.approvals.b_l as u8,
            outcome.approvals.w_h as u8,
            outcome.approvals.b_h as u8,
            bank_cell(outcome.acceptances.w),
            bank_cell(outcome.acceptances.b),
            outcome.premium,
            outcome.subsidy,
        );
        push_opt(&mut line, outcome.payoff_w);
        line.push(',');
        push_opt(&mut line, outcome.payoff_b);
        let _ = write!(
            line,
            ",{},{},{},{}",
            outcome.profit_l, outcome.profit_h, point.sigma2_bl, point.sigma2_bh
        );
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub const BELIEFS_HEADER: &str = "t,sigma2_bl,sigma2_bh,threshold_l_pool,subsidy";

/// Plot-ready belief path: start-of-period estimates against the operative
/// pooled bound, with the period's subsidy.
pub fn beliefs_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::new();
    out.push_str(BELIEFS_HEADER);
    out.push('\n');
    for (outcome, point) in record.outcomes.iter().zip(&record.belief_path) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            outcome.t,
            point.sigma2_bl,
            point.sigma2_bh,
            record.operative_threshold,
            outcome.subsidy
        );
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct PremiumSummary {
    pub mean_pre_tau: f64,
    pub mean_post_tau: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AggregateJson {
    pub replications: u64,
    pub escape_probability: f64,
    pub mean_tau: Option<f64>,
    pub median_tau: Option<f64>,
    pub mean_total_subsidy: f64,
    pub mean_premium_pre_tau: f64,
    pub mean_premium_post_tau: f64,
    pub h_withdrawal_frequency: f64,
    pub mean_final_sigma2_bl: f64,
    pub trap_frequency: f64,
}

impl From<&AggregateReport> for AggregateJson {
    fn from(report: &AggregateReport) -> Self {
        AggregateJson {
            replications: report.replications,
            escape_probability: report.escape_probability,
            mean_tau: report.mean_tau,
            median_tau: report.median_tau,
            mean_total_subsidy: report.mean_total_subsidy,
            mean_premium_pre_tau: report.mean_premium_pre_tau,
            mean_premium_post_tau: report.mean_premium_post_tau,
            h_withdrawal_frequency: report.h_withdrawal_frequency,
            mean_final_sigma2_bl: report.mean_final_sigma2_bl,
            trap_frequency: report.trap_frequency,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryJson {
    pub mode: String,
    pub seed: u64,
    pub horizon: u64,
    pub escaped: bool,
    pub tau: Option<u64>,
    pub recross_count: u32,
    pub total_subsidy: f64,
    pub total_profit_l: f64,
    pub total_profit_h: f64,
    pub trap: bool,
    /// An empty horizon is vacuously a trap; flagged so readers can tell.
    pub degenerate: bool,
    pub operative_threshold: f64,
    pub final_sigma2_bl: f64,
    pub final_sigma2_bh: f64,
    pub premium_paid_by_b: PremiumSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<AggregateJson>,
}

pub fn summary_json(
    mode: &str,
    seed: u64,
    record: &TrajectoryRecord,
    aggregate: Option<&AggregateReport>,
) -> SummaryJson {
    let digest = ReplicationSummary::from_trajectory(0, record);
    SummaryJson {
        mode: mode.to_string(),
        seed,
        horizon: record.outcomes.len() as u64,
        escaped: digest.escape_time.is_some(),
        tau: digest.escape_time,
        recross_count: record.recross_count,
        total_subsidy: record.total_subsidy,
        total_profit_l: record.total_profit_l,
        total_profit_h: record.total_profit_h,
        trap: digest.trapped,
        degenerate: record.outcomes.is_empty(),
        operative_threshold: record.operative_threshold,
        final_sigma2_bl: record.final_sigma2_bl,
        final_sigma2_bh: record.final_sigma2_bh,
        premium_paid_by_b: PremiumSummary {
            mean_pre_tau: digest.premium_pre_tau,
            mean_post_tau: digest.premium_post_tau,
        },
        aggregate: aggregate.map(AggregateJson::from),
    }
}

/// Serializable mirror of the resolved core configuration, embedded in the
/// run manifest so a run can be reproduced from the manifest alone.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfigJson {
    pub mu_w: f64,
    pub mu_b: f64,
    pub sigma2_w: f64,
    pub sigma2_b: f64,
    pub credit_n_w: u64,
    pub credit_p_w: f64,
    pub credit_s2_w: f64,
    pub credit_n_b: u64,
    pub credit_p_b: f64,
    pub credit_s2_b: f64,
    pub rho_l: f64,
    pub alpha_l: f64,
    pub metric_l: String,
    pub aggregation_l: String,
    pub rho_h: f64,
    pub alpha_h: f64,
    pub metric_h: String,
    pub aggregation_h: String,
    pub nu_max: f64,
    pub prior_shape: f64,
    pub prior_scale: f64,
    pub horizon: u64,
    pub replications: u64,
    pub base_seed: u64,
    pub cohort_size: u32,
    pub validate_assumptions: bool,
    pub allow_unequal_means: bool,
    pub subsidy_mode: String,
    pub guarantee_margin: Option<f64>,
}

impl From<&ScenarioConfig> for ResolvedConfigJson {
    fn from(config: &ScenarioConfig) -> Self {
        let metric = |m: subprime_core::risk::RiskMetric| match m {
            subprime_core::risk::RiskMetric::Var => "var".to_string(),
            subprime_core::risk::RiskMetric::Es => "es".to_string(),
        };
        let aggregation = |a: subprime_core::risk::Aggregation| match a {
            subprime_core::risk::Aggregation::SumOfStds => "sum-of-stds".to_string(),
            subprime_core::risk::Aggregation::Independent => "independent".to_string(),
        };
        let (subsidy_mode, guarantee_margin) = match config.subsidy_mode {
            SubsidyMode::None => ("baseline".to_string(), None),
            SubsidyMode::AdaptiveVar => ("adaptive-var".to_string(), None),
            SubsidyMode::AdaptiveEs => ("adaptive-es".to_string(), None),
            SubsidyMode::Guarantee { margin } => ("guarantee".to_string(), Some(margin)),
        };
        ResolvedConfigJson {
            mu_w: config.group_w.mean,
            mu_b: config.group_b.mean,
            sigma2_w: config.group_w.true_variance,
            sigma2_b: config.group_b.true_variance,
            credit_n_w: config.group_w.credit_file.n,
            credit_p_w: config.group_w.credit_file.completeness,
            credit_s2_w: config.group_w.credit_file.sample_variance,
            credit_n_b: config.group_b.credit_file.n,
            credit_p_b: config.group_b.credit_file.completeness,
            credit_s2_b: config.group_b.credit_file.sample_variance,
            rho_l: config.policy_l.rho,
            alpha_l: config.policy_l.alpha,
            metric_l: metric(config.policy_l.metric),
            aggregation_l: aggregation(config.policy_l.aggregation),
            rho_h: config.policy_h.rho,
            alpha_h: config.policy_h.alpha,
            metric_h: metric(config.policy_h.metric),
            aggregation_h: aggregation(config.policy_h.aggregation),
            nu_max: config.pricing.nu_max,
            prior_shape: config.prior_base.shape,
            prior_scale: config.prior_base.scale,
            horizon: config.horizon,
            replications: config.replications,
            base_seed: config.base_seed,
            cohort_size: config.cohort_size,
            validate_assumptions: config.validate_assumptions,
            allow_unequal_means: config.allow_unequal_means,
            subsidy_mode,
            guarantee_margin,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub scenario_path: String,
    pub out_dir: String,
    pub resolved_config: ResolvedConfigJson,
    pub files: Vec<EmittedFile>,
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value).context("cannot serialize JSON")?;
    text.push('\n');
    Ok(text)
}
