//! Conjugate Bayesian machinery for variance beliefs with a known mean.
//!
//! Each bank holds an Inverse-Gamma posterior over each group's payoff
//! variance. Credit files with effective sample size `n * p` shift a common
//! base prior before any lending happens; repayment observations then update
//! shape and scale in closed form. A bank that makes no loan to a group
//! observes nothing and its belief stays bit-identical.

use crate::error::{Error, Result};
use crate::stats::InvGammaParams;

/// Historical credit-file evidence for one group.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CreditFileSpec {
    /// Number of historical applicants.
    pub n: u64,
    /// Fraction of files complete enough to use, in [0, 1].
    pub completeness: f64,
    /// Historical sample variance of payoffs; 1.0 by convention.
    pub sample_variance: f64,
}

impl CreditFileSpec {
    pub fn new(n: u64, completeness: f64, sample_variance: f64) -> Result<Self> {
        if !completeness.is_finite() || !sample_variance.is_finite() {
            return Err(Error::NonFinite {
                what: "credit file parameter",
            });
        }
        if !(0.0..=1.0).contains(&completeness) {
            return Err(Error::OutOfRange {
                what: "credit file completeness",
                value: completeness,
            });
        }
        if sample_variance < 0.0 {
            return Err(Error::OutOfRange {
                what: "credit file sample variance",
                value: sample_variance,
            });
        }
        Ok(CreditFileSpec {
            n,
            completeness,
            sample_variance,
        })
    }

    /// Effective sample size `n * p`; real-valued, not a draw.
    pub fn effective_size(&self) -> f64 {
        self.n as f64 * self.completeness
    }
}

/// One bank's Inverse-Gamma posterior over one group's payoff variance.
///
/// `shape`/`scale` are the live posterior parameters. `observations` counts
/// absorbed repayments and `sum_sq_dev` accumulates `(pi - mu)^2`, so the
/// sequential path can be cross-checked against a batch recomputation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeliefState {
    pub shape: f64,
    pub scale: f64,
    pub observations: u64,
    pub sum_sq_dev: f64,
}

impl BeliefState {
    /// Absorb one observed repayment given the known group mean.
    ///
    /// Shape gains 1/2 per observation, scale gains half the squared
    /// deviation; a return equal to the mean leaves the scale untouched.
    pub fn update_with_return(self, observed_return: f64, known_mean: f64) -> Result<BeliefState> {
        if !observed_return.is_finite() {
            return Err(Error::NonFinite {
                what: "observed return",
            });
        }
        if !known_mean.is_finite() {
            return Err(Error::NonFinite {
                what: "known mean",
            });
        }
        let dev = observed_return - known_mean;
        let sq = dev * dev;
        Ok(BeliefState {
            shape: self.shape + 0.5,
            scale: self.scale + 0.5 * sq,
            observations: self.observations + 1,
            sum_sq_dev: self.sum_sq_dev + sq,
        })
    }

    /// Posterior mean variance `b / (a - 1)`; this is the estimate every
    /// risk gate consumes.
    pub fn posterior_variance_estimate(&self) -> Result<f64> {
        if self.shape <= 1.0 {
            return Err(Error::UndefinedMean { shape: self.shape });
        }
        Ok(self.scale / (self.shape - 1.0))
    }
}

/// Seed a group's belief from the base prior and its credit file:
/// `a = a0 + n p / 2`, `b = b0 + n p S^2 / 2`.
pub fn prior_from_credit_file(base: InvGammaParams, file: CreditFileSpec) -> BeliefState {
    let effective = file.effective_size();
    BeliefState {
        shape: base.shape + 0.5 * effective,
        scale: base.scale + 0.5 * effective * file.sample_variance,
        observations: 0,
        sum_sq_dev: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{sample_normal, NormalParams, RandomStream};

    fn base(a: f64, b: f64) -> InvGammaParams {
        InvGammaParams::new(a, b).unwrap()
    }

    #[test]
    fn empty_credit_file_leaves_base_prior() {
        let file = CreditFileSpec::new(0, 1.0, 1.0).unwrap();
        let belief = prior_from_credit_file(base(2.0, 2.0), file);
        assert_eq!(belief.shape, 2.0);
        assert_eq!(belief.scale, 2.0);
        assert_eq!(belief.observations, 0);
    }

    #[test]
    fn full_credit_file_shifts_prior() {
        let file = CreditFileSpec::new(100, 1.0, 1.0).unwrap();
        let belief = prior_from_credit_file(base(2.0, 2.0), file);
        assert_eq!(belief.shape, 52.0);
        assert_eq!(belief.scale, 52.0);
        let mean = belief.posterior_variance_estimate().unwrap();
        assert!((mean - 52.0 / 51.0).abs() < 1e-15);
    }

    #[test]
    fn thinner_files_inflate_the_prior_mean() {
        // with base mean above S^2, lower completeness leaves a larger estimate
        let b = prior_from_credit_file(base(2.0, 2.0), CreditFileSpec::new(100, 0.2, 1.0).unwrap());
        let w = prior_from_credit_file(base(2.0, 2.0), CreditFileSpec::new(100, 1.0, 1.0).unwrap());
        let mean_b = b.posterior_variance_estimate().unwrap();
        let mean_w = w.posterior_variance_estimate().unwrap();
        assert!(mean_b > mean_w, "{mean_b} vs {mean_w}");
    }

    #[test]
    fn update_examples() {
        let belief = BeliefState {
            shape: 52.0,
            scale: 52.0,
            observations: 0,
            sum_sq_dev: 0.0,
        };
        // return equal to the mean: ssd unchanged, shape up by one half
        let same = belief.update_with_return(3.0, 3.0).unwrap();
        assert_eq!(same.shape, 52.5);
        assert_eq!(same.scale, 52.0);
        assert_eq!(same.sum_sq_dev, 0.0);

        // squared deviation of 4
        let moved = belief.update_with_return(5.0, 3.0).unwrap();
        assert_eq!(moved.shape, 52.5);
        assert_eq!(moved.scale, 54.0);
        assert_eq!(moved.observations, 1);

        assert!(belief.update_with_return(f64::NAN, 3.0).is_err());
        assert!(belief.update_with_return(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn fresh_prior_estimate_equals_prior_mean() {
        let file = CreditFileSpec::new(60, 0.01, 1.0).unwrap();
        let belief = prior_from_credit_file(base(2.0, 12.0), file);
        let prior_mean = belief.posterior_variance_estimate().unwrap();
        assert!((prior_mean - 12.3 / 1.3).abs() < 1e-12);
    }

    #[test]
    fn sequential_matches_batch_posterior() {
        let file = CreditFileSpec::new(40, 0.5, 1.0).unwrap();
        let prior = prior_from_credit_file(base(2.0, 3.0), file);
        let mu = 1.0;
        let returns = [1.5, 0.25, -0.75, 1.0, 2.5];

        let mut sequential = prior;
        for r in returns {
            sequential = sequential.update_with_return(r, mu).unwrap();
        }

        let m = returns.len() as f64;
        let ssd: f64 = returns.iter().map(|r| (r - mu) * (r - mu)).sum();
        let batch_shape = prior.shape + 0.5 * m;
        let batch_scale = prior.scale + 0.5 * ssd;

        assert!((sequential.shape - batch_shape).abs() <= 1e-12 * batch_shape.abs());
        assert!((sequential.scale - batch_scale).abs() <= 1e-12 * batch_scale.abs());
    }

    #[test]
    fn posterior_concentrates_on_the_true_variance() {
        let file = CreditFileSpec::new(0, 1.0, 1.0).unwrap();
        let mut belief = prior_from_credit_file(base(2.0, 2.0), file);
        let law = NormalParams::new(1.0, 0.8).unwrap();
        let mut rng = RandomStream::new(5150, 0);
        for _ in 0..20_000 {
            let pi = sample_normal(law, &mut rng);
            belief = belief.update_with_return(pi, 1.0).unwrap();
        }
        let estimate = belief.posterior_variance_estimate().unwrap();
        assert!(
            (estimate - 0.8).abs() / 0.8 < 0.1,
            "estimate {estimate} too far from 0.8"
        );
    }

    #[test]
    fn undefined_mean_below_shape_one() {
        let belief = BeliefState {
            shape: 1.0,
            scale: 5.0,
            observations: 0,
            sum_sq_dev: 0.0,
        };
        assert!(matches!(
            belief.posterior_variance_estimate(),
            Err(Error::UndefinedMean { .. })
        ));
    }

    #[test]
    fn credit_file_validation() {
        assert!(CreditFileSpec::new(10, 1.5, 1.0).is_err());
        assert!(CreditFileSpec::new(10, -0.1, 1.0).is_err());
        assert!(CreditFileSpec::new(10, 0.5, -1.0).is_err());
        assert!(CreditFileSpec::new(10, 0.5, f64::NAN).is_err());
    }
}
