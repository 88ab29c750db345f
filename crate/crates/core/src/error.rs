use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors surfaced by the numeric kernels and the run orchestration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Error {
    /// An argument that must be finite was NaN or infinite.
    NonFinite { what: &'static str },
    /// A parameter fell outside its admissible range.
    OutOfRange { what: &'static str, value: f64 },
    /// Inverse-Gamma mean requested with shape <= 1.
    UndefinedMean { shape: f64 },
    /// A scenario failed numeric validation of the trap assumptions.
    Scenario(AssumptionViolation),
    /// A guarantee schedule failed the tail constraint in some period.
    InfeasibleGuarantee {
        period: u64,
        offered: f64,
        required: f64,
    },
    /// The scenario configuration is internally inconsistent.
    Config { what: &'static str },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite { what } => write!(f, "{what} must be finite"),
            Error::OutOfRange { what, value } => write!(f, "{what} out of range: {value}"),
            Error::UndefinedMean { shape } => {
                write!(f, "inverse-gamma mean undefined for shape {shape} <= 1")
            }
            Error::Scenario(v) => write!(f, "scenario validation failed: {v}"),
            Error::InfeasibleGuarantee {
                period,
                offered,
                required,
            } => write!(
                f,
                "guarantee infeasible in period {period}: offered {offered}, required {required}"
            ),
            Error::Config { what } => write!(f, "invalid configuration: {what}"),
        }
    }
}

/// A numbered trap assumption that failed, with the offending values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AssumptionViolation {
    /// Assumption 1: both groups share one positive expected payoff.
    UnequalMeans { mu_w: f64, mu_b: f64 },
    /// Assumption 1: the common expected payoff must be positive.
    NonPositiveMean { mu: f64 },
    /// Assumption 2: group B's credit files are less complete than group W's.
    NotDifferentialInformation { p_w: f64, p_b: f64 },
    /// Assumption 3: sigma2_W <= sigma2_B < bank L's unilateral bound.
    NotCreditworthy {
        sigma2_w: f64,
        sigma2_b: f64,
        bound: f64,
    },
    /// Assumption 4: bank L's prior for B starts above its pooled bound.
    PriorNotAboveLPool { prior: f64, bound: f64 },
    /// Assumption 5: bank H's prior for B starts at or below its bound.
    PriorAboveH { prior: f64, bound: f64 },
}

impl AssumptionViolation {
    pub fn assumption_number(&self) -> u8 {
        match self {
            AssumptionViolation::UnequalMeans { .. }
            | AssumptionViolation::NonPositiveMean { .. } => 1,
            AssumptionViolation::NotDifferentialInformation { .. } => 2,
            AssumptionViolation::NotCreditworthy { .. } => 3,
            AssumptionViolation::PriorNotAboveLPool { .. } => 4,
            AssumptionViolation::PriorAboveH { .. } => 5,
        }
    }
}

impl fmt::Display for AssumptionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssumptionViolation::UnequalMeans { mu_w, mu_b } => write!(
                f,
                "assumption 1 (equal expected creditworthiness): mu_W {mu_w} != mu_B {mu_b}"
            ),
            AssumptionViolation::NonPositiveMean { mu } => write!(
                f,
                "assumption 1 (equal expected creditworthiness): mean {mu} is not positive"
            ),
            AssumptionViolation::NotDifferentialInformation { p_w, p_b } => write!(
                f,
                "assumption 2 (differential information): p_B {p_b} is not below p_W {p_w}"
            ),
            AssumptionViolation::NotCreditworthy {
                sigma2_w,
                sigma2_b,
                bound,
            } => write!(
                f,
                "assumption 3 (groups creditworthy): need sigma2_W {sigma2_w} <= sigma2_B {sigma2_b} < {bound}"
            ),
            AssumptionViolation::PriorNotAboveLPool { prior, bound } => write!(
                f,
                "assumption 4 (L prior above pooled bound): prior {prior} <= bound {bound}"
            ),
            AssumptionViolation::PriorAboveH { prior, bound } => write!(
                f,
                "assumption 5 (H prior within bound): prior {prior} > bound {bound}"
            ),
        }
    }
}
