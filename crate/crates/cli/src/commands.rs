//! The three subcommands: `thresholds`, `simulate`, and `sweep`.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use subprime_core::engine::{
    aggregate, check_trap_assumptions, run_replication, AggregateReport, ScenarioConfig,
};
use subprime_core::error::AssumptionViolation;

use crate::output::{
    beliefs_csv, summary_json, to_pretty_json, trajectory_csv, write_with_digest, Manifest,
    ResolvedConfigJson,
};
use crate::run::replication_summaries;
use crate::scenario::{
    apply_param, load_scenario, set_mode, AggregationDto, ModeDto, Scenario, SweepParam,
};

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// Scenario JSON file
    #[arg(long, value_name = "PATH")]
    pub scenario: PathBuf,
    /// Override both banks' aggregation rule
    #[arg(long, value_enum, value_name = "RULE")]
    pub aggregation: Option<AggregationDto>,
    /// Force trap-assumption validation on
    #[arg(long, conflicts_with = "no_validate")]
    pub validate_assumptions: bool,
    /// Skip trap-assumption validation
    #[arg(long)]
    pub no_validate: bool,
}

impl CommonArgs {
    fn load(&self) -> Result<Scenario> {
        let mut scenario = load_scenario(&self.scenario)?;
        if let Some(rule) = self.aggregation {
            scenario.config.policy_l.aggregation = rule.into();
            scenario.config.policy_h.aggregation = rule.into();
        }
        if self.validate_assumptions {
            scenario.config.validate_assumptions = true;
        } else if self.no_validate {
            scenario.config.validate_assumptions = false;
        }
        Ok(scenario)
    }
}

#[derive(Debug, clap::Args)]
pub struct ThresholdsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, clap::Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Run mode; defaults to the scenario's subsidy mode
    #[arg(long, value_enum, value_name = "MODE")]
    pub mode: Option<ModeDto>,
    /// Base seed; replication r runs on stream (seed, r)
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Override the horizon T
    #[arg(long, value_name = "N")]
    pub horizon: Option<u64>,
    /// Override the replication count for the aggregate report
    #[arg(long, value_name = "N")]
    pub replications: Option<u64>,
    /// Extra amount on top of the minimal subsidy in guarantee mode
    #[arg(long, value_name = "X")]
    pub guarantee_margin: Option<f64>,
    /// Output directory for trajectory.csv, beliefs.csv, summary.json, manifest.json
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Parameter to sweep: p_b, alpha, rho_l, rho_h, nu_max, sigma2_b, horizon
    #[arg(long, value_name = "NAME")]
    pub param: String,
    /// Comma-separated grid values; empty for a header-only sweep.csv
    #[arg(long, value_name = "V1,V2,...", allow_hyphen_values = true)]
    pub grid: String,
    /// Run mode; defaults to the scenario's subsidy mode
    #[arg(long, value_enum, value_name = "MODE")]
    pub mode: Option<ModeDto>,
    /// Base seed shared by every grid point
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Replications per grid point
    #[arg(long, value_name = "N")]
    pub replications: Option<u64>,
    /// Override the horizon T
    #[arg(long, value_name = "N")]
    pub horizon: Option<u64>,
    /// Output directory for sweep.csv and manifest.json
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

fn check_line(label: &str, violation: Option<AssumptionViolation>) -> String {
    match violation {
        None => format!("  {label}: PASS"),
        Some(v) => format!("  {label}: FAIL -- {v}"),
    }
}

pub fn cmd_thresholds(args: &ThresholdsArgs) -> Result<()> {
    let scenario = args.common.load()?;
    let config = &scenario.config;
    let set = config.threshold_set();
    let prior = config
        .prior_sigma2_b()
        .map_err(|e| anyhow::anyhow!("prior: {e}"))?;

    println!(
        "thresholds at premium cap nu_max = {} (alpha_L = {}, alpha_H = {})",
        config.pricing.nu_max, config.policy_l.alpha, config.policy_h.alpha
    );
    println!("  sigma2_L_uni      {}", set.sigma2_l_uni);
    println!("  sigma2_L_pool     {}", set.sigma2_l_pool);
    println!("  sigma2_H_uni      {}", set.sigma2_h_uni);
    println!("  sigma2_H_pool     {}", set.sigma2_h_pool);
    println!("  sigma2_L_pool_es  {}", set.sigma2_l_pool_es);
    println!("  prior sigma2_B    {}", prior);

    let verdict = if set.ordered() { "PASS" } else { "FAIL" };
    println!("ordering sigma2_L_uni < sigma2_L_pool < sigma2_H_uni < sigma2_H_pool: {verdict}");
    if config.policy_l.alpha >= 0.1 || config.policy_h.alpha >= 0.1 {
        println!("warning: the ordering guarantee requires alpha < 0.1");
    }

    let checks = check_trap_assumptions(config).map_err(|e| anyhow::anyhow!("{e}"))?;
    println!("assumptions:");
    println!("{}", check_line("A1 equal positive means", checks.a1_equal_means));
    println!(
        "{}",
        check_line("A2 differential information", checks.a2_differential_info)
    );
    println!("{}", check_line("A3 groups creditworthy", checks.a3_creditworthy));
    println!(
        "{}",
        check_line("A4 L prior above pooled bound", checks.a4_l_prior_above)
    );
    println!("{}", check_line("A5 H prior within bound", checks.a5_h_prior_below));

    if config.validate_assumptions {
        if let Some(violation) = checks.first_violation() {
            bail!("{violation}");
        }
    }
    Ok(())
}

fn validate_or_bail(config: &ScenarioConfig) -> Result<()> {
    if config.validate_assumptions {
        let checks = check_trap_assumptions(config).map_err(|e| anyhow::anyhow!("{e}"))?;
        if let Some(violation) = checks.first_violation() {
            bail!("scenario validation failed: {violation} (use --no-validate to waive)");
        }
    }
    Ok(())
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let mut scenario = args.common.load()?;
    if let Some(margin) = args.guarantee_margin {
        scenario.guarantee_margin = margin;
        let mode = scenario.mode;
        set_mode(&mut scenario, mode);
    }
    if let Some(mode) = args.mode {
        set_mode(&mut scenario, mode);
    }
    let config = &mut scenario.config;
    if let Some(seed) = args.seed {
        config.base_seed = seed;
    }
    if let Some(horizon) = args.horizon {
        config.horizon = horizon;
    }
    if let Some(replications) = args.replications {
        config.replications = replications;
    }
    validate_or_bail(config)?;

    let trajectory =
        run_replication(config, 0).map_err(|e| anyhow::anyhow!("replication 0: {e}"))?;
    let report: Option<AggregateReport> = if config.replications > 1 {
        let summaries = replication_summaries(config)?;
        Some(aggregate(&summaries))
    } else {
        None
    };

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;

    let mode_name = scenario.mode.to_string();
    let summary = summary_json(&mode_name, config.base_seed, &trajectory, report.as_ref());
    let mut files = Vec::new();
    files.push(write_with_digest(
        &args.out,
        "trajectory.csv",
        &trajectory_csv(&trajectory),
    )?);
    files.push(write_with_digest(
        &args.out,
        "beliefs.csv",
        &beliefs_csv(&trajectory),
    )?);
    files.push(write_with_digest(
        &args.out,
        "summary.json",
        &to_pretty_json(&summary)?,
    )?);
    let manifest = Manifest {
        command: "simulate".to_string(),
        scenario_path: args.common.scenario.display().to_string(),
        out_dir: args.out.display().to_string(),
        resolved_config: ResolvedConfigJson::from(&*config),
        files: files.clone(),
    };
    files.push(write_with_digest(
        &args.out,
        "manifest.json",
        &to_pretty_json(&manifest)?,
    )?);

    println!(
        "simulate mode={} seed={} horizon={} -> {} (escaped: {}, tau: {}, total subsidy: {})",
        mode_name,
        config.base_seed,
        config.horizon,
        args.out.display(),
        summary.escaped,
        summary
            .tau
            .map_or_else(|| "none".to_string(), |t| t.to_string()),
        summary.total_subsidy,
    );
    Ok(())
}

pub const SWEEP_HEADER: &str = "param,value,valid,prior_sigma2_bl,escape_probability,mean_tau,median_tau,mean_total_subsidy,mean_premium_pre_tau,mean_premium_post_tau,h_withdrawal_frequency,mean_final_sigma2_bl,trap_frequency";

fn opt_cell(value: Option<f64>) -> String {
    value.map_or_else(String::new, |v| format!("{v}"))
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let mut scenario = args.common.load()?;
    if let Some(mode) = args.mode {
        set_mode(&mut scenario, mode);
    }
    if let Some(seed) = args.seed {
        scenario.config.base_seed = seed;
    }
    if let Some(horizon) = args.horizon {
        scenario.config.horizon = horizon;
    }
    if let Some(replications) = args.replications {
        scenario.config.replications = replications;
    }

    let param = SweepParam::from_str(&args.param)?;
    let grid: Vec<f64> = if args.grid.trim().is_empty() {
        Vec::new()
    } else {
        args.grid
            .split(',')
            .map(|token| {
                token
                    .trim()
                    .parse::<f64>()
                    .with_context(|| format!("bad grid value `{token}`"))
            })
            .collect::<Result<_>>()?
    };

    let mut csv = String::new();
    csv.push_str(SWEEP_HEADER);
    csv.push('\n');

    for &value in &grid {
        let mut point = scenario.config.clone();
        let row = match apply_param(&mut point, param, value) {
            Err(reason) => {
                eprintln!("grid point {} = {value} is invalid: {reason:#}", param.name());
                format!("{},{},false,,,,,,,,,,", param.name(), value)
            }
            Ok(()) => {
                let checks =
                    check_trap_assumptions(&point).map_err(|e| anyhow::anyhow!("{e}"))?;
                let valid = checks.all_pass();
                if !valid && point.validate_assumptions {
                    eprintln!(
                        "grid point {} = {value} fails validation: {}",
                        param.name(),
                        checks.first_violation().expect("violation present")
                    );
                }
                // the run itself is well-defined either way
                point.validate_assumptions = false;
                let prior = point
                    .prior_sigma2_b()
                    .map_err(|e| anyhow::anyhow!("prior at {value}: {e}"))?;
                let summaries = replication_summaries(&point)?;
                let report = aggregate(&summaries);
                let mut row = String::new();
                let _ = write!(
                    row,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    param.name(),
                    value,
                    valid,
                    prior,
                    report.escape_probability,
                    opt_cell(report.mean_tau),
                    opt_cell(report.median_tau),
                    report.mean_total_subsidy,
                    report.mean_premium_pre_tau,
                    report.mean_premium_post_tau,
                    report.h_withdrawal_frequency,
                    report.mean_final_sigma2_bl,
                );
                let _ = write!(row, ",{}", report.trap_frequency);
                row
            }
        };
        csv.push_str(&row);
        csv.push('\n');
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;
    let mut files = Vec::new();
    files.push(write_with_digest(&args.out, "sweep.csv", &csv)?);
    let manifest = Manifest {
        command: format!("sweep {}", param.name()),
        scenario_path: args.common.scenario.display().to_string(),
        out_dir: args.out.display().to_string(),
        resolved_config: ResolvedConfigJson::from(&scenario.config),
        files: files.clone(),
    };
    files.push(write_with_digest(
        &args.out,
        "manifest.json",
        &to_pretty_json(&manifest)?,
    )?);

    println!(
        "sweep {} over {} points -> {}",
        param.name(),
        grid.len(),
        args.out.display()
    );
    Ok(())
}
