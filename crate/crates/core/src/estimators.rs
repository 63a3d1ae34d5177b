//! Sample correlations, standard errors and σ-counts.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::dataset::{DataSet, Outcome};
use crate::error::{Error, Result};

/// Σᵢ xᵢyᵢ over n realizations, kept as integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactCorrelation {
    pub sum: i64,
    pub n: u64,
}

impl ExactCorrelation {
    pub fn of(x: &[Outcome], y: &[Outcome]) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                left: x.len(),
                right: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::EmptyInput("correlation of empty sequences"));
        }
        let sum = x
            .iter()
            .zip(y)
            .map(|(a, b)| i64::from(a.value() * b.value()))
            .sum();
        Ok(Self {
            sum,
            n: x.len() as u64,
        })
    }

    pub fn ratio(&self) -> Ratio<i64> {
        Ratio::new(self.sum, self.n as i64)
    }

    pub fn estimate(&self) -> CorrelationEstimate {
        CorrelationEstimate::from_sum(self.sum, self.n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub value: f64,
    pub n: u64,
    pub std_error: f64,
}

impl CorrelationEstimate {
    /// Estimate from an exact product sum; the only rounding is the final division.
    pub fn from_sum(sum: i64, n: u64) -> Self {
        assert!(
            n > 0 && sum.unsigned_abs() <= n,
            "sum {sum} impossible for n = {n}"
        );
        let nf = n as f64;
        // 1 − C² = (n − s)(n + s)/n², exact zero iff |s| = n
        let one_minus_sq = ((n as i64 - sum) as f64) * ((n as i64 + sum) as f64) / (nf * nf);
        Self {
            value: sum as f64 / nf,
            n,
            std_error: (one_minus_sq / nf).sqrt(),
        }
    }

    /// Estimate from an already combined value (e.g. a stratified reconstruction).
    pub fn from_value(value: f64, n: u64) -> Self {
        assert!(n > 0);
        let value = value.clamp(-1.0, 1.0);
        Self {
            value,
            n,
            std_error: ((1.0 - value * value).max(0.0) / n as f64).sqrt(),
        }
    }
}

pub fn correlate(x: &DataSet, y: &DataSet) -> Result<CorrelationEstimate> {
    Ok(ExactCorrelation::of(x.outcomes(), y.outcomes())?.estimate())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    pub violation: f64,
    pub combined_std_error: f64,
    /// ±∞ (serialized as null) when the standard error is zero and the violation is not.
    pub sigma_count: f64,
    pub infinite: bool,
    /// Margins of jointly recorded data are fixed by algebra; their σ-count is informational.
    pub joint_run: bool,
}

/// σ-count of `lhs − bound` against the root-sum-square of independent component errors.
pub fn sigma_count(lhs: f64, bound: f64, components: &[CorrelationEstimate]) -> Result<SigmaReport> {
    if components.is_empty() {
        return Err(Error::EmptyInput("sigma_count needs component estimates"));
    }
    let violation = lhs - bound;
    let combined_std_error = components
        .iter()
        .map(|c| c.std_error * c.std_error)
        .sum::<f64>()
        .sqrt();
    let (sigma_count, infinite) = if combined_std_error > 0.0 {
        (violation / combined_std_error, false)
    } else if violation == 0.0 {
        (0.0, false)
    } else {
        (f64::INFINITY.copysign(violation), true)
    };
    Ok(SigmaReport {
        violation,
        combined_std_error,
        sigma_count,
        infinite,
        joint_run: false,
    })
}
