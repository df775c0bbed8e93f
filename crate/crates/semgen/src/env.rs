//! Environment specifications for the three structural noise terms.
//!
//! The `sigma` fields are noise VARIANCES, not standard deviations. The
//! closed-form regression coefficients in [`crate::model1::ols_oracle`] are
//! the variance-parameterized least-squares solutions, and the sampler here
//! uses the same reading so the two stay consistent.

use crate::error::{Result, SemgenError};
use serde::{Deserialize, Serialize};

/// Noise variances stay within a finite range.
pub const SIGMA_MAX: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvSpec {
    pub sigma1: f64,
    pub sigma2: f64,
    pub sigma3: f64,
}

impl EnvSpec {
    pub fn new(sigma1: f64, sigma2: f64, sigma3: f64) -> Result<Self> {
        for (name, v) in [("sigma1", sigma1), ("sigma2", sigma2), ("sigma3", sigma3)] {
            if !v.is_finite() || v < 0.0 {
                return Err(SemgenError::InvalidEnvSpec {
                    reason: format!("{name} = {v} must be a nonnegative finite variance"),
                });
            }
            if v > SIGMA_MAX {
                return Err(SemgenError::InvalidEnvSpec {
                    reason: format!("{name} = {v} exceeds the configured maximum {SIGMA_MAX}"),
                });
            }
        }
        Ok(EnvSpec {
            sigma1,
            sigma2,
            sigma3,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_oversized_variances() {
        assert!(EnvSpec::new(1.0, 0.0, 0.2).is_ok());
        assert!(EnvSpec::new(-0.1, 0.0, 0.2).is_err());
        assert!(EnvSpec::new(1.0, f64::NAN, 0.2).is_err());
        assert!(EnvSpec::new(1.0, 0.0, 2e6).is_err());
    }
}
