//! The scenario file format and its mapping onto the core configuration.
//!
//! A scenario is one JSON document with top-level keys `groups`, `banks`,
//! `pricing`, `simulation`, and `subsidy` (plus an optional free-text
//! `notes`). Field validation is delegated to the core constructors so the
//! CLI and library agree on what is admissible.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use subprime_core::beliefs::CreditFileSpec;
use subprime_core::engine::{ScenarioConfig, SubsidyMode};
use subprime_core::market::{GroupProfile, PricingState};
use subprime_core::risk::{Aggregation, RiskMetric, RiskPolicy};
use subprime_core::stats::InvGammaParams;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub notes: Option<String>,
    pub groups: GroupsSection,
    pub banks: BanksSection,
    pub pricing: PricingSection,
    pub simulation: SimulationSection,
    pub subsidy: SubsidySection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupsSection {
    pub w: GroupSpec,
    pub b: GroupSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    pub mean: f64,
    pub variance: f64,
    pub credit_file: CreditFileSpecDto,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreditFileSpecDto {
    pub n: u64,
    pub completeness: f64,
    #[serde(default = "one")]
    pub sample_variance: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BanksSection {
    pub l: BankSpec,
    pub h: BankSpec,
    /// Base Inverse-Gamma prior (a0, b0) shared by both banks and groups.
    pub prior: PriorSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BankSpec {
    pub rho: f64,
    pub alpha: f64,
    #[serde(default = "var_metric")]
    pub metric: MetricDto,
    #[serde(default)]
    pub aggregation: AggregationDto,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub shape: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingSection {
    pub nu_max: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub horizon: u64,
    pub replications: u64,
    pub base_seed: u64,
    #[serde(default = "one_u32")]
    pub cohort_size: u32,
    #[serde(default = "yes")]
    pub validate_assumptions: bool,
    #[serde(default)]
    pub allow_unequal_means: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsidySection {
    pub mode: ModeDto,
    /// Extra amount on top of the minimal subsidy; guarantee mode only.
    #[serde(default)]
    pub margin: f64,
}

fn one() -> f64 {
    1.0
}
fn one_u32() -> u32 {
    1
}
fn yes() -> bool {
    true
}
fn var_metric() -> MetricDto {
    MetricDto::Var
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MetricDto {
    Var,
    Es,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AggregationDto {
    #[default]
    SumOfStds,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeDto {
    Baseline,
    AdaptiveVar,
    AdaptiveEs,
    Guarantee,
}

impl fmt::Display for ModeDto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ModeDto::Baseline => "baseline",
            ModeDto::AdaptiveVar => "adaptive-var",
            ModeDto::AdaptiveEs => "adaptive-es",
            ModeDto::Guarantee => "guarantee",
        };
        f.write_str(name)
    }
}

impl From<MetricDto> for RiskMetric {
    fn from(dto: MetricDto) -> Self {
        match dto {
            MetricDto::Var => RiskMetric::Var,
            MetricDto::Es => RiskMetric::Es,
        }
    }
}

impl From<AggregationDto> for Aggregation {
    fn from(dto: AggregationDto) -> Self {
        match dto {
            AggregationDto::SumOfStds => Aggregation::SumOfStds,
            AggregationDto::Independent => Aggregation::Independent,
        }
    }
}

/// A parsed scenario: the resolved core config plus the mode it came with.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub mode: ModeDto,
    pub guarantee_margin: f64,
    pub notes: Option<String>,
}

fn mode_to_core(mode: ModeDto, margin: f64) -> SubsidyMode {
    match mode {
        ModeDto::Baseline => SubsidyMode::None,
        ModeDto::AdaptiveVar => SubsidyMode::AdaptiveVar,
        ModeDto::AdaptiveEs => SubsidyMode::AdaptiveEs,
        ModeDto::Guarantee => SubsidyMode::Guarantee { margin },
    }
}

impl ScenarioFile {
    pub fn resolve(&self) -> Result<Scenario> {
        let build_group = |spec: &GroupSpec, label: &str| -> Result<GroupProfile> {
            let file = CreditFileSpec::new(
                spec.credit_file.n,
                spec.credit_file.completeness,
                spec.credit_file.sample_variance,
            )
            .map_err(|e| anyhow::anyhow!("group {label} credit file: {e}"))?;
            GroupProfile::new(spec.mean, spec.variance, file)
                .map_err(|e| anyhow::anyhow!("group {label}: {e}"))
        };
        let build_policy = |spec: &BankSpec, label: &str| -> Result<RiskPolicy> {
            RiskPolicy::new(
                spec.rho,
                spec.alpha,
                spec.metric.into(),
                spec.aggregation.into(),
            )
            .map_err(|e| anyhow::anyhow!("bank {label}: {e}"))
        };

        let config = ScenarioConfig {
            group_w: build_group(&self.groups.w, "w")?,
            group_b: build_group(&self.groups.b, "b")?,
            policy_l: build_policy(&self.banks.l, "l")?,
            policy_h: build_policy(&self.banks.h, "h")?,
            pricing: PricingState::new(self.pricing.nu_max)
                .map_err(|e| anyhow::anyhow!("pricing: {e}"))?,
            horizon: self.simulation.horizon,
            prior_base: InvGammaParams::new(self.banks.prior.shape, self.banks.prior.scale)
                .map_err(|e| anyhow::anyhow!("banks.prior: {e}"))?,
            subsidy_mode: mode_to_core(self.subsidy.mode, self.subsidy.margin),
            replications: self.simulation.replications,
            base_seed: self.simulation.base_seed,
            cohort_size: self.simulation.cohort_size,
            validate_assumptions: self.simulation.validate_assumptions,
            allow_unequal_means: self.simulation.allow_unequal_means,
        };
        Ok(Scenario {
            config,
            mode: self.subsidy.mode,
            guarantee_margin: self.subsidy.margin,
            notes: self.notes.clone(),
        })
    }
}

/// Load and resolve a scenario file. Parse failures keep serde's line and
/// key context.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read scenario {}", path.display()))?;
    let file: ScenarioFile = serde_json::from_str(&text)
        .with_context(|| format!("cannot parse scenario {}", path.display()))?;
    file.resolve()
        .with_context(|| format!("invalid scenario {}", path.display()))
}

/// Set the scenario's subsidy mode, keeping the configured guarantee margin.
pub fn set_mode(scenario: &mut Scenario, mode: ModeDto) {
    scenario.mode = mode;
    scenario.config.subsidy_mode = mode_to_core(mode, scenario.guarantee_margin);
}

/// A sweepable scenario parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    PB,
    Alpha,
    RhoL,
    RhoH,
    NuMax,
    Sigma2B,
    Horizon,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::PB => "p_b",
            SweepParam::Alpha => "alpha",
            SweepParam::RhoL => "rho_l",
            SweepParam::RhoH => "rho_h",
            SweepParam::NuMax => "nu_max",
            SweepParam::Sigma2B => "sigma2_b",
            SweepParam::Horizon => "horizon",
        }
    }
}

impl FromStr for SweepParam {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "p_b" => SweepParam::PB,
            "alpha" => SweepParam::Alpha,
            "rho_l" => SweepParam::RhoL,
            "rho_h" => SweepParam::RhoH,
            "nu_max" => SweepParam::NuMax,
            "sigma2_b" => SweepParam::Sigma2B,
            "horizon" => SweepParam::Horizon,
            other => bail!(
                "unknown sweep parameter `{other}` (expected p_b, alpha, rho_l, rho_h, nu_max, sigma2_b, or horizon)"
            ),
        })
    }
}

/// Apply one grid value to a resolved config, re-running type validation.
/// `alpha` applies to both banks.
pub fn apply_param(config: &mut ScenarioConfig, param: SweepParam, value: f64) -> Result<()> {
    match param {
        SweepParam::PB => {
            let file = config.group_b.credit_file;
            config.group_b.credit_file = CreditFileSpec::new(file.n, value, file.sample_variance)
                .map_err(|e| anyhow::anyhow!("p_b = {value}: {e}"))?;
        }
        SweepParam::Alpha => {
            for policy in [&mut config.policy_l, &mut config.policy_h] {
                *policy = RiskPolicy::new(policy.rho, value, policy.metric, policy.aggregation)
                    .map_err(|e| anyhow::anyhow!("alpha = {value}: {e}"))?;
            }
        }
        SweepParam::RhoL => {
            let p = config.policy_l;
            config.policy_l = RiskPolicy::new(value, p.alpha, p.metric, p.aggregation)
                .map_err(|e| anyhow::anyhow!("rho_l = {value}: {e}"))?;
        }
        SweepParam::RhoH => {
            let p = config.policy_h;
            config.policy_h = RiskPolicy::new(value, p.alpha, p.metric, p.aggregation)
                .map_err(|e| anyhow::anyhow!("rho_h = {value}: {e}"))?;
        }
        SweepParam::NuMax => {
            config.pricing = PricingState::new(value)
                .map_err(|e| anyhow::anyhow!("nu_max = {value}: {e}"))?;
        }
        SweepParam::Sigma2B => {
            let g = config.group_b;
            config.group_b = GroupProfile::new(g.mean, value, g.credit_file)
                .map_err(|e| anyhow::anyhow!("sigma2_b = {value}: {e}"))?;
        }
        SweepParam::Horizon => {
            if value < 0.0 || value.fract() != 0.0 || value > u64::MAX as f64 {
                bail!("horizon = {value}: must be a non-negative integer");
            }
            config.horizon = value as u64;
        }
    }
    Ok(())
}
