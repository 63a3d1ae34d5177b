//! Bell-state probabilities and correlations.
//!
//! Outcome probabilities for a pair of detectors at θ₁, θ₂ follow from the
//! symmetries P₊₊ = P₋₋, P₊₋ = P₋₊, the normalization 2P₊₊ + 2P₊₋ = 1 and
//! C = 4P₊₊ − 1 with C = −cos(kΔ). Only one setting per particle commutes;
//! a third setting enters through probabilities conditional on the first
//! outcome, which yields ⟨bb′⟩ = cos(k(θb − θa))·cos(k(θb′ − θa)).

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{AlignedRuns, DataSet, Outcome};
use crate::error::{Error, Result};
use crate::estimators::CorrelationEstimate;
use crate::inequality::{wigner_probability_form, InequalityId, InequalityReport};
use crate::model::{Convention, ModelKind};
use crate::seed;

/// Detector settings in radians, normalized to [0, 2π).
///
/// Settings are optional because protocols use different subsets: two-setting
/// pair runs use (a, b), three-setting protocols use (a, b, b′) where b′ plays
/// the role of c, and CHSH protocols use all four.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AngleConfig {
    pub theta_a: Option<f64>,
    pub theta_a_prime: Option<f64>,
    pub theta_b: Option<f64>,
    pub theta_b_prime: Option<f64>,
    #[serde(default)]
    pub convention: Convention,
}

pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if t >= TAU {
        0.0
    } else {
        t
    }
}

impl AngleConfig {
    /// Builds a configuration from a list of angles in degrees.
    ///
    /// | len | order |
    /// |-----|-------|
    /// | 2   | θa, θb |
    /// | 3   | θa, θb, θb′ (= θc) |
    /// | 4   | θa′, θa, θb, θb′ |
    ///
    /// With four settings the first listed A-side angle is the one whose pairing
    /// with θb′ carries the minus sign in C(ab) + C(ab′) + C(a′b) − C(a′b′), so
    /// `0,90,45,135` is the usual optimal set.
    pub fn from_degrees(list: &[f64], convention: Convention) -> Result<Self> {
        if let Some(bad) = list.iter().find(|d| !d.is_finite()) {
            return Err(Error::Parse(format!("angle {bad} is not finite")));
        }
        let r: Vec<f64> = list.iter().map(|d| normalize_angle(d.to_radians())).collect();
        let cfg = match r.as_slice() {
            [a, b] => Self {
                theta_a: Some(*a),
                theta_b: Some(*b),
                ..Self::default()
            },
            [a, b, bp] => Self {
                theta_a: Some(*a),
                theta_b: Some(*b),
                theta_b_prime: Some(*bp),
                ..Self::default()
            },
            [ap, a, b, bp] => Self {
                theta_a: Some(*a),
                theta_a_prime: Some(*ap),
                theta_b: Some(*b),
                theta_b_prime: Some(*bp),
                ..Self::default()
            },
            other => {
                return Err(Error::ArityMismatch {
                    expected: "2, 3 or 4 angles",
                    actual: other.len(),
                })
            }
        };
        Ok(Self { convention, ..cfg })
    }

    /// Default CHSH settings (0°, 90°, 45°, 135°) in list order.
    pub fn chsh_default(convention: Convention) -> Self {
        Self::from_degrees(&[0.0, 90.0, 45.0, 135.0], convention).expect("valid literal")
    }

    /// Settings in data-set order: (a, b), (a, b, b′) or (a, a′, b, b′).
    pub fn settings(&self) -> Result<Vec<f64>> {
        match (self.theta_a, self.theta_a_prime, self.theta_b, self.theta_b_prime) {
            (Some(a), None, Some(b), None) => Ok(vec![a, b]),
            (Some(a), None, Some(b), Some(bp)) => Ok(vec![a, b, bp]),
            (Some(a), Some(ap), Some(b), Some(bp)) => Ok(vec![a, ap, b, bp]),
            _ => Err(Error::InvalidSpec(
                "angles must set (a, b), (a, b, b') or all of (a, a', b, b')".into(),
            )),
        }
    }

    pub fn normalized(self) -> Self {
        Self {
            theta_a: self.theta_a.map(normalize_angle),
            theta_a_prime: self.theta_a_prime.map(normalize_angle),
            theta_b: self.theta_b.map(normalize_angle),
            theta_b_prime: self.theta_b_prime.map(normalize_angle),
            convention: self.convention,
        }
    }
}

/// Two-particle Bell state with correlation C(Δ) = −cos(kΔ).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BellStateModel {
    pub convention: Convention,
}

/// Outcome of the stratified C(bb′) reconstruction from two pair runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction {
    pub estimate: CorrelationEstimate,
    pub strata: [Stratum; 2],
    /// One stratum had no pairable realizations; the estimate rests on the other.
    pub empty_stratum: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stratum {
    /// Conditioning value of a.
    pub a: i8,
    pub pairs: u64,
    /// Pooled frequency of this a-value across both runs.
    pub weight: f64,
    pub correlation: Option<f64>,
}

impl BellStateModel {
    pub fn new(convention: Convention) -> Self {
        Self { convention }
    }

    fn cos_k(&self, delta: f64) -> f64 {
        (self.convention.factor() * delta).cos()
    }

    /// P(α, β) at (θ₁, θ₂) = (1 − αβ·cos(kΔ))/4.
    pub fn joint_prob(&self, alpha: Outcome, beta: Outcome, theta_1: f64, theta_2: f64) -> f64 {
        let ab = f64::from(alpha.value() * beta.value());
        (1.0 - ab * self.cos_k(theta_1 - theta_2)) / 4.0
    }

    /// P(β | α): the joint probability over the marginal ½.
    pub fn conditional_prob(&self, beta: Outcome, given_alpha: Outcome, theta_1: f64, theta_2: f64) -> f64 {
        let ab = f64::from(given_alpha.value() * beta.value());
        (1.0 - ab * self.cos_k(theta_1 - theta_2)) / 2.0
    }

    pub fn corr_cosine(&self, theta_1: f64, theta_2: f64) -> f64 {
        -self.cos_k(theta_1 - theta_2)
    }

    /// ⟨bb′⟩ when b and b′ are both drawn conditionally on the A-side outcome.
    pub fn corr_conditional_product(&self, theta_a: f64, theta_b: f64, theta_bp: f64) -> f64 {
        self.cos_k(theta_b - theta_a) * self.cos_k(theta_bp - theta_a)
    }

    pub fn wigner_p_pp(&self, theta_1: f64, theta_2: f64) -> f64 {
        (1.0 - self.cos_k(theta_1 - theta_2)) / 4.0
    }

    /// |⟨ab⟩ − ⟨ab′⟩| ≤ 1 − ⟨bb′⟩ with the cosine pair correlations and the
    /// conditional-product ⟨bb′⟩. Diagnostics carry the half-angle sine forms
    /// of both sides, whose difference is (|s₊| − |s₋|)² ≥ 0.
    pub fn verify_qm_bell3(&self, theta_a: f64, theta_b: f64, theta_bp: f64) -> InequalityReport {
        let k = self.convention.factor();
        let t1 = k * (theta_b - theta_a);
        let t2 = k * (theta_bp - theta_a);
        let (x, y) = (t1.cos(), t2.cos());
        let lhs = (-x + y).abs();
        let rhs = 1.0 - x * y;
        let s_plus = ((t1 + t2) / 2.0).sin();
        let s_minus = ((t1 - t2) / 2.0).sin();
        InequalityReport::float(InequalityId::Bell3Corr, lhs, rhs)
            .with_diagnostic("sine_lhs", (2.0 * s_plus * s_minus).abs())
            .with_diagnostic("sine_rhs", s_plus * s_plus + s_minus * s_minus)
    }

    fn draw_conditional<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        given: Outcome,
        theta_1: f64,
        theta_2: f64,
    ) -> Outcome {
        let p_plus = self.conditional_prob(Outcome::Plus, given, theta_1, theta_2);
        Outcome::from_sign(rng.gen::<f64>() < p_plus)
    }

    /// One commuting pair measurement per realization: a fair, b conditional on a.
    pub fn sample_pair<R: Rng + ?Sized>(
        &self,
        theta_1: f64,
        theta_2: f64,
        n: usize,
        rng: &mut R,
    ) -> Result<AlignedRuns> {
        if n == 0 {
            return Err(Error::EmptyInput("n must be at least 1"));
        }
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            let a = Outcome::from_sign(rng.gen::<bool>());
            xs.push(a);
            ys.push(self.draw_conditional(rng, a, theta_1, theta_2));
        }
        AlignedRuns::new(vec![DataSet::new(theta_1, xs)?, DataSet::new(theta_2, ys)?])
    }

    /// Sequential measurement: a fair, then b and b′ each conditional on a.
    pub fn sample_sequential<R: Rng + ?Sized>(
        &self,
        theta_a: f64,
        theta_b: f64,
        theta_bp: f64,
        n: usize,
        rng: &mut R,
    ) -> Result<AlignedRuns> {
        if n == 0 {
            return Err(Error::EmptyInput("n must be at least 1"));
        }
        let mut a_s = Vec::with_capacity(n);
        let mut b_s = Vec::with_capacity(n);
        let mut bp_s = Vec::with_capacity(n);
        for _ in 0..n {
            let a = Outcome::from_sign(rng.gen::<bool>());
            a_s.push(a);
            b_s.push(self.draw_conditional(rng, a, theta_a, theta_b));
            bp_s.push(self.draw_conditional(rng, a, theta_a, theta_bp));
        }
        AlignedRuns::new(vec![
            DataSet::new(theta_a, a_s)?,
            DataSet::new(theta_b, b_s)?,
            DataSet::new(theta_bp, bp_s)?,
        ])
    }
}

/// C(bb′) = C(bb′|a=1)P(a=1) + C(bb′|a=−1)P(a=−1) from two pair runs (a, b)
/// and (a, b′) sharing θa.
///
/// Realizations are stratified by the a-outcome, shuffled within each stratum
/// (seeded) and paired index by index. Stratum weights are the pooled
/// a-frequencies; an empty stratum drops out and the remaining weight is
/// renormalized.
pub fn reconstruct_corr_4_1(
    run_ab: &AlignedRuns,
    run_abp: &AlignedRuns,
    seed: u64,
) -> Result<Reconstruction> {
    run_ab.require_arity(2, "a pair run (a, b)")?;
    run_abp.require_arity(2, "a pair run (a, b')")?;
    let (ta, tb) = (run_ab.set(0).setting(), run_abp.set(0).setting());
    if crate::model::fold_separation(ta - tb) > 1e-12 {
        return Err(Error::InvalidSpec(format!(
            "pair runs use different A-side settings ({ta} vs {tb})"
        )));
    }
    let mut rng = seed::rng(seed);
    let total = (run_ab.len() + run_abp.len()) as f64;
    let mut strata = [Outcome::Plus, Outcome::Minus].map(|a| Stratum {
        a: a.value(),
        pairs: 0,
        weight: 0.0,
        correlation: None,
    });
    for stratum in strata.iter_mut() {
        let a = Outcome::try_from(stratum.a)?;
        let pick = |runs: &AlignedRuns| -> Vec<Outcome> {
            runs.set(0)
                .outcomes()
                .iter()
                .zip(runs.set(1).outcomes())
                .filter(|(x, _)| **x == a)
                .map(|(_, y)| *y)
                .collect()
        };
        let mut bs = pick(run_ab);
        let mut bps = pick(run_abp);
        stratum.weight = (bs.len() + bps.len()) as f64 / total;
        bs.shuffle(&mut rng);
        bps.shuffle(&mut rng);
        let pairs = bs.len().min(bps.len());
        if pairs > 0 {
            let sum: i64 = bs
                .iter()
                .zip(&bps)
                .map(|(b, bp)| i64::from(b.value() * bp.value()))
                .sum();
            stratum.pairs = pairs as u64;
            stratum.correlation = Some(sum as f64 / pairs as f64);
        }
    }
    let live: Vec<&Stratum> = strata.iter().filter(|s| s.correlation.is_some()).collect();
    if live.is_empty() {
        return Err(Error::EmptyInput("no a-stratum is populated in both runs"));
    }
    let weight: f64 = live.iter().map(|s| s.weight).sum();
    let value = live
        .iter()
        .map(|s| s.weight * s.correlation.unwrap_or(0.0))
        .sum::<f64>()
        / weight;
    let n: u64 = live.iter().map(|s| s.pairs).sum();
    Ok(Reconstruction {
        estimate: CorrelationEstimate::from_value(value, n),
        strata,
        empty_stratum: live.len() < 2,
    })
}

/// One grid point of a scan with its evaluated inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub theta_a_deg: f64,
    pub theta_b_deg: f64,
    pub theta_c_deg: f64,
    pub report: InequalityReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub step_deg: f64,
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    /// Violating rows, most negative margin first.
    pub fn violations(&self) -> Vec<&ScanRow> {
        let mut v: Vec<&ScanRow> = self.rows.iter().filter(|r| !r.report.satisfied).collect();
        v.sort_by(|x, y| x.report.margin.total_cmp(&y.report.margin));
        v
    }

    pub fn min_margin(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.report.margin)
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest violation magnitude (0 if nothing is violated).
    pub fn max_violation(&self) -> f64 {
        self.violations().first().map_or(0.0, |r| -r.report.margin)
    }
}

/// Number of grid points per turn; the step must divide 360°.
pub fn grid_points(step_deg: f64) -> Result<usize> {
    if !(step_deg.is_finite() && step_deg > 0.0 && step_deg <= 360.0) {
        return Err(Error::InvalidSpec(format!(
            "grid step {step_deg}° must be in (0, 360]"
        )));
    }
    let m = (360.0 / step_deg).round();
    if (m * step_deg - 360.0).abs() > 1e-9 {
        return Err(Error::InvalidSpec(format!(
            "grid step {step_deg}° does not divide 360°"
        )));
    }
    Ok(m as usize)
}

/// Grid scan of P₊₊(a,b) ≤ P₊₊(a,c) + P₊₊(a′,b) with θa′ = θc.
///
/// Both models depend on setting differences only, so θa is pinned at 0 and
/// (θb, θc) run over the full grid.
pub fn scan_wigner(step_deg: f64, model: ModelKind, convention: Convention) -> Result<ScanResult> {
    let m = grid_points(step_deg)?;
    let p = |t1: f64, t2: f64| model.p_plus_plus(t1, t2, convention);
    let rows = (0..m)
        .into_par_iter()
        .map(|ib| {
            let tb = (ib as f64 * step_deg).to_radians();
            (0..m)
                .map(|ic| {
                    let tc = (ic as f64 * step_deg).to_radians();
                    let report = wigner_probability_form(p(0.0, tb), p(0.0, tc), p(tc, tb))?;
                    Ok(ScanRow {
                        theta_a_deg: 0.0,
                        theta_b_deg: ib as f64 * step_deg,
                        theta_c_deg: ic as f64 * step_deg,
                        report,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    Ok(ScanResult { step_deg, rows })
}

/// Grid scan of the conditional-product three-correlation inequality, θa = 0,
/// (θb, θb′) over the full grid; θb′ is reported in the `theta_c` column.
pub fn scan_bell3_qm(step_deg: f64, model: &BellStateModel) -> Result<ScanResult> {
    let m = grid_points(step_deg)?;
    let rows = (0..m)
        .into_par_iter()
        .flat_map_iter(|ib| {
            (0..m).map(move |ic| {
                let (b, c) = (ib as f64 * step_deg, ic as f64 * step_deg);
                ScanRow {
                    theta_a_deg: 0.0,
                    theta_b_deg: b,
                    theta_c_deg: c,
                    report: model.verify_qm_bell3(0.0, b.to_radians(), c.to_radians()),
                }
            })
        })
        .collect();
    Ok(ScanResult { step_deg, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::correlate;
    use proptest::prelude::*;

    const SPIN: BellStateModel = BellStateModel {
        convention: Convention::Spin,
    };

    fn rad(d: f64) -> f64 {
        d.to_radians()
    }

    #[test]
    fn joint_prob_examples() {
        use Outcome::*;
        assert!(SPIN.joint_prob(Plus, Plus, 0.0, 0.0).abs() < 1e-15);
        for (a, b) in [(Plus, Plus), (Plus, Minus), (Minus, Plus), (Minus, Minus)] {
            assert!((SPIN.joint_prob(a, b, 0.0, rad(90.0)) - 0.25).abs() < 1e-15);
        }
        for deg in [0.0, 17.0, 90.0, 233.0] {
            let total: f64 = [(Plus, Plus), (Plus, Minus), (Minus, Plus), (Minus, Minus)]
                .iter()
                .map(|&(a, b)| SPIN.joint_prob(a, b, rad(11.0), rad(deg)))
                .sum();
            assert!((total - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn conditional_prob_examples() {
        use Outcome::*;
        assert!((SPIN.conditional_prob(Minus, Plus, 0.3, 0.3) - 1.0).abs() < 1e-15);
        assert!((SPIN.conditional_prob(Plus, Minus, 0.0, rad(90.0)) - 0.5).abs() < 1e-15);
        for alpha in [Plus, Minus] {
            let s =
                SPIN.conditional_prob(Plus, alpha, 0.1, 1.3) + SPIN.conditional_prob(Minus, alpha, 0.1, 1.3);
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn correlation_examples() {
        assert_eq!(SPIN.corr_cosine(0.4, 0.4), -1.0);
        assert!((SPIN.corr_cosine(0.0, rad(180.0)) - 1.0).abs() < 1e-15);
        assert!((SPIN.corr_cosine(0.0, rad(60.0)) + 0.5).abs() < 1e-15);
        assert!((SPIN.corr_conditional_product(0.2, 0.2, 0.2) - 1.0).abs() < 1e-15);
        assert!(SPIN.corr_conditional_product(0.0, rad(135.0), rad(270.0)).abs() < 1e-15);
        assert!((SPIN.corr_conditional_product(0.0, rad(60.0), rad(120.0)) + 0.25).abs() < 1e-15);
        let optics = BellStateModel::new(Convention::Optics);
        assert!((optics.corr_cosine(0.0, rad(45.0))).abs() < 1e-15);
    }

    #[test]
    fn wigner_p_pp_examples() {
        assert_eq!(SPIN.wigner_p_pp(1.0, 1.0), 0.0);
        assert!((SPIN.wigner_p_pp(0.0, rad(120.0)) - 0.375).abs() < 1e-15);
        assert!((SPIN.wigner_p_pp(0.0, rad(60.0)) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn verify_qm_bell3_examples() {
        let r = SPIN.verify_qm_bell3(0.0, rad(40.0), rad(40.0));
        assert_eq!(r.lhs, 0.0);
        let d = r.diagnostics.as_ref().unwrap();
        assert!((d["sine_rhs"] - r.rhs).abs() < 1e-12);
        assert!(r.rhs >= 0.0);

        let r = SPIN.verify_qm_bell3(0.0, rad(135.0), rad(270.0));
        assert!((r.lhs - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((r.rhs - 1.0).abs() < 1e-12);
        assert!(r.satisfied);
    }

    #[test]
    fn sine_forms_match_cosine_forms_on_grid() {
        for b in (0..360).step_by(5) {
            for c in (0..360).step_by(5) {
                let r = SPIN.verify_qm_bell3(0.0, rad(f64::from(b)), rad(f64::from(c)));
                let d = r.diagnostics.unwrap();
                assert!((d["sine_lhs"] - r.lhs).abs() < 1e-12);
                assert!((d["sine_rhs"] - r.rhs).abs() < 1e-12);
                assert!(r.margin >= -1e-12);
            }
        }
    }

    #[test]
    fn angle_config_lists() {
        let c = AngleConfig::from_degrees(&[0.0, 90.0, 45.0, 135.0], Convention::Spin).unwrap();
        assert_eq!(c.theta_a_prime, Some(0.0));
        assert_eq!(c.theta_a, Some(rad(90.0)));
        let s = c.settings().unwrap();
        assert_eq!(s, vec![rad(90.0), 0.0, rad(45.0), rad(135.0)]);
        let c = AngleConfig::from_degrees(&[-90.0, 400.0, 10.0], Convention::Spin).unwrap();
        assert!((c.theta_a.unwrap() - rad(270.0)).abs() < 1e-12);
        assert!((c.theta_b.unwrap() - rad(40.0)).abs() < 1e-12);
        assert!(AngleConfig::from_degrees(&[1.0], Convention::Spin).is_err());
        assert!(AngleConfig::from_degrees(&[1.0, f64::NAN], Convention::Spin).is_err());
        assert!(AngleConfig::default().settings().is_err());
        assert_eq!(normalize_angle(-1e-18), 0.0);
    }

    #[test]
    fn chsh_default_gives_two_root_two() {
        let c = AngleConfig::chsh_default(Convention::Spin);
        let s = c.settings().unwrap();
        let corr = |i: usize, j: usize| SPIN.corr_cosine(s[i], s[j]);
        let chsh = corr(0, 2) + corr(0, 3) + corr(1, 2) - corr(1, 3);
        assert!((chsh.abs() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let saw = |i: usize, j: usize| ModelKind::LhvSawtooth.pair_correlation(s[i], s[j], Convention::Spin);
        let chsh = saw(0, 2) + saw(0, 3) + saw(1, 2) - saw(1, 3);
        assert!((chsh - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sequential_sampling_matches_conditional_product() {
        let n = 100_000;
        let mut hits = 0;
        let trials = 20;
        for s in 0..trials {
            let mut rng = seed::rng(s);
            let runs = SPIN
                .sample_sequential(0.0, rad(60.0), rad(120.0), n, &mut rng)
                .unwrap();
            let bbp = correlate(runs.set(1), runs.set(2)).unwrap();
            if (bbp.value + 0.25).abs() <= 5.0 * bbp.std_error {
                hits += 1;
            }
        }
        assert_eq!(hits, trials);
    }

    #[test]
    fn pair_sampling_reproduces_cosine() {
        let mut rng = seed::rng(3);
        let n = 100_000;
        for deg in [0.0, 45.0, 120.0, 180.0] {
            let r = SPIN.sample_pair(0.0, rad(deg), n, &mut rng).unwrap();
            let c = correlate(r.set(0), r.set(1)).unwrap();
            let expect = -rad(deg).cos();
            let se = ((1.0 - expect * expect) / n as f64).sqrt();
            assert!((c.value - expect).abs() <= 5.0 * se + 1e-12, "{deg}: {}", c.value);
        }
    }

    #[test]
    fn reconstruction_equal_settings_is_one() {
        let mut rng = seed::rng(8);
        let ab = SPIN.sample_pair(0.5, 0.5, 500, &mut rng).unwrap();
        let abp = SPIN.sample_pair(0.5, 0.5, 500, &mut rng).unwrap();
        let r = reconstruct_corr_4_1(&ab, &abp, 1).unwrap();
        assert_eq!(r.estimate.value, 1.0);
        assert!(!r.empty_stratum);
    }

    #[test]
    fn reconstruction_matches_conditional_product() {
        let n = 100_000;
        let mut rng = seed::rng(21);
        let ab = SPIN.sample_pair(0.0, rad(60.0), n, &mut rng).unwrap();
        let abp = SPIN.sample_pair(0.0, rad(120.0), n, &mut rng).unwrap();
        let r = reconstruct_corr_4_1(&ab, &abp, 2).unwrap();
        assert!((r.estimate.value + 0.25).abs() <= 5.0 * r.estimate.std_error);
    }

    #[test]
    fn reconstruction_small_and_degenerate() {
        let mut rng = seed::rng(5);
        for _ in 0..50 {
            let ab = SPIN.sample_pair(0.0, rad(60.0), 10, &mut rng).unwrap();
            let abp = SPIN.sample_pair(0.0, rad(120.0), 10, &mut rng).unwrap();
            let r = reconstruct_corr_4_1(&ab, &abp, 2).unwrap();
            assert!((-1.0..=1.0).contains(&r.estimate.value));
        }
        let mk = |a: &[i8], b: &[i8], t: f64| {
            let to = |v: &[i8]| v.iter().map(|&x| Outcome::try_from(x).unwrap()).collect();
            AlignedRuns::new(vec![
                DataSet::new(0.0, to(a)).unwrap(),
                DataSet::new(t, to(b)).unwrap(),
            ])
            .unwrap()
        };
        // minus stratum empty in the first run
        let r = reconstruct_corr_4_1(
            &mk(&[1, 1, 1], &[1, -1, 1], 1.0),
            &mk(&[1, -1, -1], &[1, 1, 1], 2.0),
            0,
        )
        .unwrap();
        assert!(r.empty_stratum);
        assert_eq!(r.estimate.n, 1);
        // no common stratum at all
        assert!(reconstruct_corr_4_1(&mk(&[1], &[1], 1.0), &mk(&[-1], &[1], 2.0), 0).is_err());
        // mismatched A-side setting
        let other = AlignedRuns::new(vec![
            DataSet::new(0.3, vec![Outcome::Plus]).unwrap(),
            DataSet::new(0.0, vec![Outcome::Plus]).unwrap(),
        ])
        .unwrap();
        assert!(reconstruct_corr_4_1(&mk(&[1], &[1], 1.0), &other, 0).is_err());
    }

    #[test]
    fn wigner_scan_quantum_and_lhv() {
        let q = scan_wigner(1.0, ModelKind::BellState, Convention::Spin).unwrap();
        assert_eq!(q.rows.len(), 360 * 360);
        assert!((q.max_violation() - 0.125).abs() < 1e-9);
        assert!(q
            .violations()
            .iter()
            .take_while(|r| (r.report.margin + 0.125).abs() < 1e-9)
            .any(|r| r.theta_b_deg == 120.0 && r.theta_c_deg == 60.0));
        let l = scan_wigner(1.0, ModelKind::LhvSawtooth, Convention::Spin).unwrap();
        assert!(l.violations().is_empty());
        assert!(l.min_margin() >= -1e-12);
    }

    #[test]
    fn wigner_degenerate_diagonal_is_equality() {
        let q = scan_wigner(5.0, ModelKind::BellState, Convention::Spin).unwrap();
        for r in q.rows.iter().filter(|r| r.theta_b_deg == r.theta_c_deg) {
            assert!(r.report.satisfied);
            assert!(r.report.margin.abs() < 1e-15);
        }
    }

    #[test]
    fn grid_step_validation() {
        assert_eq!(grid_points(1.0).unwrap(), 360);
        assert_eq!(grid_points(0.5).unwrap(), 720);
        assert!(grid_points(7.0).is_err());
        assert!(grid_points(0.0).is_err());
        assert!(grid_points(-1.0).is_err());
        assert!(grid_points(f64::NAN).is_err());
    }

    #[test]
    fn bell3_qm_scan_never_violated() {
        let s = scan_bell3_qm(1.0, &SPIN).unwrap();
        assert_eq!(s.rows.len(), 360 * 360);
        assert!(s.min_margin() >= -1e-12);
        assert!(s.violations().is_empty());
    }

    proptest! {
        #[test]
        fn probability_symmetries(t1 in -10.0f64..10.0, t2 in -10.0f64..10.0, optics: bool) {
            use Outcome::*;
            let m = BellStateModel::new(if optics { Convention::Optics } else { Convention::Spin });
            let pp = m.joint_prob(Plus, Plus, t1, t2);
            let mm = m.joint_prob(Minus, Minus, t1, t2);
            let pm = m.joint_prob(Plus, Minus, t1, t2);
            let mp = m.joint_prob(Minus, Plus, t1, t2);
            prop_assert_eq!(pp, mm);
            prop_assert_eq!(pm, mp);
            prop_assert!((2.0 * pp + 2.0 * pm - 1.0).abs() <= 1e-15);
            prop_assert!((4.0 * m.wigner_p_pp(t1, t2) - 1.0 - m.corr_cosine(t1, t2)).abs() <= 1e-15);
        }
    }
}
