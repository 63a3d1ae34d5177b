//! Joint, separate and sequential measurement protocols and the finite-N
//! studies built on them.
//!
//! Every stochastic component draws from a generator derived from the
//! experiment seed by [`seed::derive_seed`], so trials can run in any order
//! or in parallel without changing results.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{apply_crosstalk, gen_from_lhv, AlignedRuns, DataSet, LhvProcess, Pickup};
use crate::error::{Error, Result};
use crate::estimators::{correlate, sigma_count, CorrelationEstimate, SigmaReport};
use crate::inequality::{
    bell3_correlation_form, bell3_identity, chsh4_identity, chsh_correlation_form, delta_decomposition,
    DeltaDecomposition, DeltaSource, InequalityReport, CHSH_PAIRS, CHSH_SIGNS,
};
use crate::model::{fold_separation, Convention, ModelKind};
use crate::quantum::{AngleConfig, BellStateModel};
use crate::seed;

/// Pairs of a three-setting list (a, b, c) correlated in |C_ab − C_ac| ≤ 1 − C_bc.
pub const BELL3_PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

const SAME_SETTING_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Protocol {
    Joint,
    Separate,
    Sequential,
}

impl FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(Protocol::Joint),
            "separate" => Ok(Protocol::Separate),
            "sequential" => Ok(Protocol::Sequential),
            other => Err(Error::Parse(format!("unknown protocol `{other}`"))),
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Protocol::Joint => "joint",
            Protocol::Separate => "separate",
            Protocol::Sequential => "sequential",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub protocol: Protocol,
    pub model: ModelKind,
    pub angles: AngleConfig,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub crosstalk: Option<f64>,
}

impl ExperimentSpec {
    pub fn convention(&self) -> Convention {
        self.angles.convention
    }

    /// Checks the spec and returns its settings in data-set order.
    pub fn validate(&self) -> Result<Vec<f64>> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        if let Some(p) = self.crosstalk {
            Error::check_range("crosstalk", p, 0.0, 1.0)?;
        }
        let settings = self.angles.settings()?;
        match self.protocol {
            Protocol::Joint | Protocol::Separate if !(3..=4).contains(&settings.len()) => {
                Err(Error::InvalidSpec(format!(
                    "{} protocol needs 3 or 4 settings, got {}",
                    self.protocol,
                    settings.len()
                )))
            }
            Protocol::Joint if self.model == ModelKind::BellState => {
                check_commuting(&settings)?;
                Ok(settings)
            }
            Protocol::Sequential if self.model != ModelKind::BellState => Err(Error::InvalidSpec(
                "sequential protocol is defined for the bell-state model".into(),
            )),
            Protocol::Sequential if settings.len() != 3 => Err(Error::InvalidSpec(format!(
                "sequential protocol needs settings (a, b, b'), got {}",
                settings.len()
            ))),
            _ => Ok(settings),
        }
    }
}

fn same_setting(x: f64, y: f64) -> bool {
    fold_separation(x - y) <= SAME_SETTING_TOL
}

/// A Bell-state pair admits one commuting measurement per particle, so a joint
/// record is possible only when each side uses a single setting.
fn check_commuting(settings: &[f64]) -> Result<()> {
    let (a_side, b_side): (&[f64], &[f64]) = match settings.len() {
        3 => (&settings[..1], &settings[1..]),
        _ => (&settings[..2], &settings[2..]),
    };
    for (side, list) in [("A", a_side), ("B", b_side)] {
        if list.iter().any(|&t| !same_setting(t, list[0])) {
            let degs: Vec<String> = list.iter().map(|t| format!("{}°", deg(*t))).collect();
            return Err(Error::NonCommuting(format!(
                "{side}-side settings {} do not commute; a bell-state pair can be recorded jointly at one setting per side only (use the separate or sequential protocol)",
                degs.join(", ")
            )));
        }
    }
    Ok(())
}

pub(crate) fn deg(theta: f64) -> f64 {
    (theta.to_degrees() * 1e9).round() / 1e9
}

/// Samples one independent pair run at (θ₁, θ₂).
pub fn sample_pair<R: Rng + ?Sized>(
    model: ModelKind,
    convention: Convention,
    theta_1: f64,
    theta_2: f64,
    n: usize,
    rng: &mut R,
) -> Result<AlignedRuns> {
    match model {
        ModelKind::BellState => BellStateModel::new(convention).sample_pair(theta_1, theta_2, n, rng),
        ModelKind::LhvSawtooth => {
            let process = LhvProcess::new(convention);
            let mut xs = Vec::with_capacity(n);
            let mut ys = Vec::with_capacity(n);
            for _ in 0..n {
                let lambda = LhvProcess::sample_lambda(rng);
                xs.push(process.readout(theta_1, lambda));
                ys.push(process.readout(theta_2, lambda));
            }
            AlignedRuns::new(vec![DataSet::new(theta_1, xs)?, DataSet::new(theta_2, ys)?])
        }
    }
}

fn chsh_limits(model: ModelKind, convention: Convention, settings: &[f64]) -> [f64; 4] {
    CHSH_PAIRS.map(|(i, j)| model.pair_correlation(settings[i], settings[j], convention))
}

/// Limit value of S for a four-setting list.
pub fn chsh_limit(model: ModelKind, convention: Convention, settings: &[f64]) -> f64 {
    chsh_limits(model, convention, settings)
        .iter()
        .zip(CHSH_SIGNS)
        .map(|(c, s)| c * s)
        .sum()
}

fn maybe_crosstalk(runs: AlignedRuns, spec: &ExperimentSpec, stream: u64) -> Result<AlignedRuns> {
    match spec.crosstalk {
        Some(p) if p > 0.0 => apply_crosstalk(&runs, p, Pickup::AToB, seed::derive_seed(spec.seed, stream)),
        _ => Ok(runs),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointOutcome {
    pub runs: AlignedRuns,
    pub identity: InequalityReport,
    pub estimates: Vec<CorrelationEstimate>,
    /// Present for four settings.
    pub delta: Option<DeltaDecomposition>,
    pub sigma: SigmaReport,
}

/// All settings read out in every realization; the identity must hold.
pub fn run_joint_protocol(spec: &ExperimentSpec) -> Result<JointOutcome> {
    if spec.protocol != Protocol::Joint {
        return Err(Error::InvalidSpec(
            "run_joint_protocol needs protocol = joint".into(),
        ));
    }
    let settings = spec.validate()?;
    let conv = spec.convention();
    let runs = match spec.model {
        ModelKind::LhvSawtooth => gen_from_lhv(
            spec.n,
            &settings,
            LhvProcess::new(conv),
            seed::derive_seed(spec.seed, 0),
        )?,
        ModelKind::BellState => {
            // validated: one setting per side
            let (ta, tb) = (settings[0], settings[settings.len() - 1]);
            let mut rng = seed::rng(seed::derive_seed(spec.seed, 0));
            let pair = sample_pair(spec.model, conv, ta, tb, spec.n, &mut rng)?;
            let [a, b]: [DataSet; 2] = pair.into_sets().try_into().expect("pair run");
            let sets = match settings.len() {
                3 => vec![a, b.clone(), DataSet::new(settings[2], b.outcomes().to_vec())?],
                _ => vec![
                    a.clone(),
                    DataSet::new(settings[1], a.outcomes().to_vec())?,
                    b.clone(),
                    DataSet::new(settings[3], b.outcomes().to_vec())?,
                ],
            };
            AlignedRuns::new(sets)?
        }
    };
    let runs = maybe_crosstalk(runs, spec, 1)?;
    let pairs: &[(usize, usize)] = if settings.len() == 3 {
        &BELL3_PAIRS
    } else {
        &CHSH_PAIRS
    };
    let estimates = pairs
        .iter()
        .map(|&(i, j)| correlate(runs.set(i), runs.set(j)))
        .collect::<Result<Vec<_>>>()?;
    let (identity, delta) = if settings.len() == 3 {
        (bell3_identity(&runs)?, None)
    } else {
        let limits = chsh_limits(spec.model, conv, &settings);
        (
            chsh4_identity(&runs)?,
            Some(delta_decomposition(limits, DeltaSource::Joint(&runs))?),
        )
    };
    let mut sigma = sigma_count(identity.lhs, identity.rhs, &estimates)?;
    sigma.joint_run = true;
    Ok(JointOutcome {
        runs,
        identity,
        estimates,
        delta,
        sigma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparateOutcome {
    pub pair_runs: Vec<AlignedRuns>,
    pub estimates: Vec<CorrelationEstimate>,
    pub report: InequalityReport,
    /// Present for four settings.
    pub delta: Option<DeltaDecomposition>,
    pub sigma: SigmaReport,
}

/// Each correlation from its own independent run of n pairs.
pub fn run_separate_protocol(spec: &ExperimentSpec) -> Result<SeparateOutcome> {
    if spec.protocol != Protocol::Separate {
        return Err(Error::InvalidSpec(
            "run_separate_protocol needs protocol = separate".into(),
        ));
    }
    let settings = spec.validate()?;
    let conv = spec.convention();
    let pairs: &[(usize, usize)] = if settings.len() == 3 {
        &BELL3_PAIRS
    } else {
        &CHSH_PAIRS
    };
    let mut pair_runs = Vec::with_capacity(pairs.len());
    let mut estimates = Vec::with_capacity(pairs.len());
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let mut rng = seed::rng(seed::derive_seed(spec.seed, k as u64));
        let run = sample_pair(spec.model, conv, settings[i], settings[j], spec.n, &mut rng)?;
        let run = maybe_crosstalk(run, spec, 100 + k as u64)?;
        estimates.push(correlate(run.set(0), run.set(1))?);
        pair_runs.push(run);
    }
    let v: Vec<f64> = estimates.iter().map(|e| e.value).collect();
    let (report, delta) = if settings.len() == 3 {
        (bell3_correlation_form(v[0], v[1], v[2])?, None)
    } else {
        let limits = chsh_limits(spec.model, conv, &settings);
        let est: [CorrelationEstimate; 4] = estimates.clone().try_into().expect("four estimates");
        (
            chsh_correlation_form(v[0], v[1], v[2], v[3])?,
            Some(delta_decomposition(limits, DeltaSource::Separate(est))?),
        )
    };
    let sigma = sigma_count(report.lhs, report.rhs, &estimates)?;
    Ok(SeparateOutcome {
        pair_runs,
        estimates,
        report,
        delta,
        sigma,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialOutcome {
    pub runs: AlignedRuns,
    pub identity: InequalityReport,
    pub ab: CorrelationEstimate,
    pub abp: CorrelationEstimate,
    pub bbp: CorrelationEstimate,
    /// cos(k(θb − θa))·cos(k(θb′ − θa)).
    pub bbp_limit: f64,
}

/// a, then b and b′ each drawn conditionally on a: three aligned data sets.
pub fn run_sequential_protocol(spec: &ExperimentSpec) -> Result<SequentialOutcome> {
    if spec.protocol != Protocol::Sequential {
        return Err(Error::InvalidSpec(
            "run_sequential_protocol needs protocol = sequential".into(),
        ));
    }
    let s = spec.validate()?;
    let model = BellStateModel::new(spec.convention());
    let mut rng = seed::rng(seed::derive_seed(spec.seed, 0));
    let runs = model.sample_sequential(s[0], s[1], s[2], spec.n, &mut rng)?;
    let runs = maybe_crosstalk(runs, spec, 1)?;
    let identity = bell3_identity(&runs)?;
    Ok(SequentialOutcome {
        ab: correlate(runs.set(0), runs.set(1))?,
        abp: correlate(runs.set(0), runs.set(2))?,
        bbp: correlate(runs.set(1), runs.set(2))?,
        bbp_limit: model.corr_conditional_product(s[0], s[1], s[2]),
        identity,
        runs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub n_values: Vec<usize>,
    /// Median of |S| − 2 over trials with |S| > 2.
    pub median_violation: Vec<f64>,
    pub positive_violation_rate: Vec<f64>,
    /// Least-squares slope of ln(median) against ln(n).
    pub fitted_exponent: f64,
    pub exponent_stderr: f64,
    pub trials: usize,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

/// Ordinary least squares; returns (slope, slope standard error).
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::FitRefused("at least 3 points are required".into()));
    }
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::FitRefused("all x values coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Ok((slope, (ssr / (k - 2.0) / sxx).sqrt()))
}

/// Finite-N excess |S| − 2 for independent separate-run trials of a
/// boundary (S_limit = 2) hidden-variable configuration.
pub fn scaling_study(spec: &ExperimentSpec, n_values: &[usize], trials: usize) -> Result<ScalingReport> {
    if trials == 0 {
        return Err(Error::InvalidSpec("trials must be at least 1".into()));
    }
    if n_values.len() < 3 {
        return Err(Error::FitRefused(format!(
            "need at least 3 n values, got {}",
            n_values.len()
        )));
    }
    if spec.model != ModelKind::LhvSawtooth || spec.protocol != Protocol::Separate {
        return Err(Error::InvalidSpec(
            "scaling study uses the lhv-sawtooth model with the separate protocol".into(),
        ));
    }
    let settings = spec.angles.settings()?;
    if settings.len() != 4 {
        return Err(Error::InvalidSpec(
            "scaling study needs four CHSH settings".into(),
        ));
    }
    let s_limit = chsh_limit(spec.model, spec.convention(), &settings);
    if (s_limit.abs() - 2.0).abs() > 1e-9 {
        return Err(Error::InvalidSpec(format!(
            "settings give S_limit = {s_limit}; the scaling study needs a boundary set with |S_limit| = 2"
        )));
    }
    let mut medians = Vec::with_capacity(n_values.len());
    let mut rates = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let excess = (0..trials)
            .into_par_iter()
            .map(|t| {
                let trial = ExperimentSpec {
                    n,
                    trials: 1,
                    seed: seed::derive_path(spec.seed, &[n as u64, t as u64]),
                    ..spec.clone()
                };
                Ok(-run_separate_protocol(&trial)?.report.margin)
            })
            .collect::<Result<Vec<f64>>>()?;
        let positive: Vec<f64> = excess.into_iter().filter(|v| *v > 0.0).collect();
        if positive.is_empty() {
            return Err(Error::FitRefused(format!("no positive violation at n = {n}")));
        }
        rates.push(positive.len() as f64 / trials as f64);
        medians.push(median(positive));
    }
    let xs: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = medians.iter().map(|m| m.ln()).collect();
    let (slope, stderr) = fit_slope(&xs, &ys)?;
    Ok(ScalingReport {
        n_values: n_values.to_vec(),
        median_violation: medians,
        positive_violation_rate: rates,
        fitted_exponent: slope,
        exponent_stderr: stderr,
        trials,
    })
}

pub const SIGMA_NOTE: &str = "separate-run CHSH at the default angles; the lhv-sawtooth count stays O(1) \
(|sigma| <= 4 is the operational threshold used here), the bell-state count grows as sqrt(n); \
the magnitude comparison with published laboratory sigma-counts is qualitative only";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaComparison {
    pub n: usize,
    pub seed: u64,
    pub lhv: SigmaReport,
    pub lhv_s: f64,
    pub bell_state: SigmaReport,
    pub bell_state_s: f64,
    pub note: String,
}

/// σ-counts of separate-run CHSH for the saw-tooth and Bell-state models.
pub fn sigma_comparison(n: usize, seed: u64, convention: Convention) -> Result<SigmaComparison> {
    if n < 100 {
        return Err(Error::InvalidSpec(format!(
            "sigma comparison needs n >= 100, got {n}"
        )));
    }
    let run = |model: ModelKind, stream: u64| {
        run_separate_protocol(&ExperimentSpec {
            protocol: Protocol::Separate,
            model,
            angles: AngleConfig::chsh_default(convention),
            n,
            trials: 1,
            seed: seed::derive_seed(seed, stream),
            crosstalk: None,
        })
    };
    let lhv = run(ModelKind::LhvSawtooth, 0)?;
    let bell = run(ModelKind::BellState, 1)?;
    let signed = |o: &SeparateOutcome| o.delta.as_ref().map_or(o.report.lhs, |d| d.s_finite);
    Ok(SigmaComparison {
        n,
        seed,
        lhv_s: signed(&lhv),
        lhv: lhv.sigma,
        bell_state_s: signed(&bell),
        bell_state: bell.sigma,
        note: SIGMA_NOTE.to_string(),
    })
}
