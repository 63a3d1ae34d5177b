//! Inequality evaluators.
//!
//! Two families live here. The *identity* forms take aligned ±1 data and are
//! evaluated in exact rational arithmetic; they hold for every input, so a
//! failure is reported as [`Error::IdentityViolated`]. The *correlation* and
//! *probability* forms take real numbers and may legitimately be violated,
//! which certifies that no aligned data sets can produce those inputs.

use std::collections::BTreeMap;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::dataset::AlignedRuns;
use crate::error::{Error, Result};
use crate::estimators::{CorrelationEstimate, ExactCorrelation};

/// Float-mode satisfaction tolerance on the margin.
pub const FLOAT_TOLERANCE: f64 = 1e-12;

/// Sign pattern of C(ab) + C(ab′) + C(a′b) − C(a′b′).
pub const CHSH_SIGNS: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

/// Pair indices into (a, a′, b, b′) for the four CHSH correlations.
pub const CHSH_PAIRS: [(usize, usize); 4] = [(0, 2), (0, 3), (1, 2), (1, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    Bell3Identity,
    Bell3Corr,
    Bell3CorrBellform,
    ChshIdentity,
    ChshCorr,
    Wigner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub inequality_id: InequalityId,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs
    pub margin: f64,
    pub satisfied: bool,
    pub exact: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<BTreeMap<String, f64>>,
}

impl InequalityReport {
    pub(crate) fn float(id: InequalityId, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        Self {
            inequality_id: id,
            lhs,
            rhs,
            margin,
            satisfied: margin >= -FLOAT_TOLERANCE,
            exact: false,
            diagnostics: None,
        }
    }

    fn exact(id: InequalityId, lhs: Ratio<i64>, rhs: Ratio<i64>) -> Self {
        let margin = rhs - lhs;
        Self {
            inequality_id: id,
            lhs: ratio_to_f64(lhs),
            rhs: ratio_to_f64(rhs),
            margin: ratio_to_f64(margin),
            satisfied: !margin.is_negative(),
            exact: true,
            diagnostics: None,
        }
    }

    pub(crate) fn with_diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics
            .get_or_insert_with(BTreeMap::new)
            .insert(key.to_string(), value);
        self
    }
}

pub(crate) fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn check_corr(what: &'static str, c: f64) -> Result<()> {
    Error::check_range(what, c, -1.0, 1.0)
}

fn identity_result(report: InequalityReport) -> Result<InequalityReport> {
    if report.satisfied {
        Ok(report)
    } else {
        Err(Error::IdentityViolated(format!(
            "{:?}: lhs {} > rhs {}",
            report.inequality_id, report.lhs, report.rhs
        )))
    }
}

/// |C_ab − C_ac| ≤ 1 − C_bc for three aligned data sets (a, b, c), exactly.
pub fn bell3_identity(runs: &AlignedRuns) -> Result<InequalityReport> {
    runs.require_arity(3, "three aligned data sets (a, b, c)")?;
    let [a, b, c] = [0, 1, 2].map(|i| runs.set(i).outcomes());
    let ab = ExactCorrelation::of(a, b)?.ratio();
    let ac = ExactCorrelation::of(a, c)?.ratio();
    let bc = ExactCorrelation::of(b, c)?.ratio();
    let lhs = (ab - ac).abs();
    let rhs = Ratio::from_integer(1) - bc;
    identity_result(InequalityReport::exact(InequalityId::Bell3Identity, lhs, rhs))
}

/// |Σ aᵢ(bᵢ + b′ᵢ) + a′ᵢ(bᵢ − b′ᵢ)| / N ≤ 2 for four aligned sets (a, a′, b, b′).
///
/// Each per-realization bracket is checked to lie in [−2, 2] before summing.
pub fn chsh4_identity(runs: &AlignedRuns) -> Result<InequalityReport> {
    runs.require_arity(4, "four aligned data sets (a, a', b, b')")?;
    let [a, ap, b, bp] = [0, 1, 2, 3].map(|i| runs.set(i).outcomes());
    let mut total: i64 = 0;
    for i in 0..runs.len() {
        let (a, ap, b, bp) = (
            i64::from(a[i].value()),
            i64::from(ap[i].value()),
            i64::from(b[i].value()),
            i64::from(bp[i].value()),
        );
        let bracket = a * (b + bp) + ap * (b - bp);
        if bracket.abs() > 2 {
            return Err(Error::IdentityViolated(format!(
                "realization {i}: bracket {bracket} outside [-2, 2]"
            )));
        }
        total += bracket;
    }
    let s = Ratio::new(total, runs.len() as i64);
    let report = InequalityReport::exact(InequalityId::ChshIdentity, s.abs(), Ratio::from_integer(2))
        .with_diagnostic("s", ratio_to_f64(s));
    identity_result(report)
}

/// |⟨ab⟩ − ⟨ac⟩| ≤ 1 − ⟨bc⟩ for given correlations.
pub fn bell3_correlation_form(c_ab: f64, c_ac: f64, c_bc: f64) -> Result<InequalityReport> {
    check_corr("c_ab", c_ab)?;
    check_corr("c_ac", c_ac)?;
    check_corr("c_bc", c_bc)?;
    Ok(InequalityReport::float(
        InequalityId::Bell3Corr,
        (c_ab - c_ac).abs(),
        1.0 - c_bc,
    ))
}

/// ⟨ab⟩ − ⟨ac⟩ − ⟨a′b⟩ ≤ 1, the form with c on the right replaced by a′ = −c.
pub fn bell3_bellform(c_ab: f64, c_ac: f64, c_apb: f64) -> Result<InequalityReport> {
    check_corr("c_ab", c_ab)?;
    check_corr("c_ac", c_ac)?;
    check_corr("c_a'b", c_apb)?;
    Ok(InequalityReport::float(
        InequalityId::Bell3CorrBellform,
        c_ab - c_ac - c_apb,
        1.0,
    ))
}

/// −2 ≤ S ≤ 2 with S = C(ab) + C(ab′) + C(a′b) − C(a′b′).
///
/// The report's `lhs` is |S| so that the two-sided bound is one margin; the
/// signed S is kept under diagnostics key `"s"`.
pub fn chsh_correlation_form(c_ab: f64, c_abp: f64, c_apb: f64, c_apbp: f64) -> Result<InequalityReport> {
    check_corr("c_ab", c_ab)?;
    check_corr("c_ab'", c_abp)?;
    check_corr("c_a'b", c_apb)?;
    check_corr("c_a'b'", c_apbp)?;
    let s = c_ab + c_abp + c_apb - c_apbp;
    Ok(InequalityReport::float(InequalityId::ChshCorr, s.abs(), 2.0).with_diagnostic("s", s))
}

/// P₊₊(a,b) ≤ P₊₊(a,c) + P₊₊(a′,b).
pub fn wigner_probability_form(p_ab: f64, p_ac: f64, p_apb: f64) -> Result<InequalityReport> {
    Error::check_range("p_ab", p_ab, 0.0, 0.5)?;
    Error::check_range("p_ac", p_ac, 0.0, 0.5)?;
    Error::check_range("p_a'b", p_apb, 0.0, 0.5)?;
    Ok(InequalityReport::float(InequalityId::Wigner, p_ab, p_ac + p_apb))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaMode {
    Joint,
    Separate,
}

/// Finite-N deviations of the four CHSH correlation estimates from their limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaDecomposition {
    pub mode: DeltaMode,
    pub limits: [f64; 4],
    pub estimates: [CorrelationEstimate; 4],
    pub deltas: [f64; 4],
    pub s_finite: f64,
    pub s_limit: f64,
    /// Signed sum of the deltas with the CHSH sign pattern.
    pub delta_sum: f64,
    /// |s_finite| > 2; never true in joint mode.
    pub exceeds_bound: bool,
}

pub enum DeltaSource<'a> {
    /// One aligned record (a, a′, b, b′) of all four variables per realization.
    Joint(&'a AlignedRuns),
    /// Estimates of C(ab), C(ab′), C(a′b), C(a′b′) from independent runs.
    Separate([CorrelationEstimate; 4]),
}

pub fn delta_decomposition(limits: [f64; 4], source: DeltaSource<'_>) -> Result<DeltaDecomposition> {
    for &l in &limits {
        check_corr("limit correlation", l)?;
    }
    let (mode, estimates, s_finite) = match source {
        DeltaSource::Joint(runs) => {
            runs.require_arity(4, "four aligned data sets (a, a', b, b')")?;
            let mut exact_s = Ratio::zero();
            let mut estimates = [CorrelationEstimate::from_sum(0, 1); 4];
            for (k, &(i, j)) in CHSH_PAIRS.iter().enumerate() {
                let c = ExactCorrelation::of(runs.set(i).outcomes(), runs.set(j).outcomes())?;
                estimates[k] = c.estimate();
                let r = c.ratio();
                exact_s = if CHSH_SIGNS[k] > 0.0 {
                    exact_s + r
                } else {
                    exact_s - r
                };
            }
            if exact_s.abs() > Ratio::from_integer(2) {
                return Err(Error::IdentityViolated(format!(
                    "joint S = {} outside [-2, 2]",
                    ratio_to_f64(exact_s)
                )));
            }
            (DeltaMode::Joint, estimates, ratio_to_f64(exact_s))
        }
        DeltaSource::Separate(estimates) => {
            let s = estimates
                .iter()
                .zip(CHSH_SIGNS)
                .map(|(e, sign)| sign * e.value)
                .sum();
            (DeltaMode::Separate, estimates, s)
        }
    };
    let deltas: [f64; 4] = std::array::from_fn(|k| estimates[k].value - limits[k]);
    let s_limit = limits.iter().zip(CHSH_SIGNS).map(|(l, s)| s * l).sum();
    let delta_sum = deltas.iter().zip(CHSH_SIGNS).map(|(d, s)| s * d).sum();
    Ok(DeltaDecomposition {
        mode,
        limits,
        estimates,
        deltas,
        s_finite,
        s_limit,
        delta_sum,
        exceeds_bound: s_finite.abs() > 2.0,
    })
}
