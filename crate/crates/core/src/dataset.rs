//! ±1 data sets and their generators.
//!
//! A [`DataSet`] is a sequence of ±1 outcomes recorded at one setting. An
//! [`AlignedRuns`] groups data sets of equal length whose i-th entries belong
//! to the same realization, which is the only requirement the Bell identities
//! place on data.

use std::f64::consts::TAU;
use std::ops::Mul;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Convention;
use crate::seed;

/// Largest number of data sets combined in one [`AlignedRuns`].
pub const MAX_ARITY: usize = 4;

/// Exhaustive enumeration refuses more than 2^24 sign assignments.
pub const ENUMERATION_CAP_BITS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
#[repr(i8)]
pub enum Outcome {
    Plus = 1,
    Minus = -1,
}

impl Outcome {
    #[inline]
    pub fn value(self) -> i8 {
        self as i8
    }

    #[inline]
    pub fn from_sign(positive: bool) -> Self {
        if positive {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    }

    #[inline]
    pub fn flip(self) -> Self {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl Mul for Outcome {
    type Output = Outcome;
    #[inline]
    fn mul(self, rhs: Outcome) -> Outcome {
        Outcome::from_sign(self == rhs)
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        o.value()
    }
}

impl TryFrom<i8> for Outcome {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Outcome::Plus),
            -1 => Ok(Outcome::Minus),
            other => Err(Error::Parse(format!("outcome must be +1 or -1, got {other}"))),
        }
    }
}

/// Outcomes recorded at a single instrument setting (radians).
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    setting: f64,
    outcomes: Vec<Outcome>,
}

impl DataSet {
    pub fn new(setting: f64, outcomes: Vec<Outcome>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::EmptyInput("data set has no outcomes"));
        }
        Ok(Self { setting, outcomes })
    }

    pub fn setting(&self) -> f64 {
        self.setting
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }
}

/// Data sets of equal length sharing realizations index by index.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedRuns {
    sets: Vec<DataSet>,
}

impl AlignedRuns {
    pub fn new(sets: Vec<DataSet>) -> Result<Self> {
        if sets.is_empty() || sets.len() > MAX_ARITY {
            return Err(Error::ArityMismatch {
                expected: "1 to 4 data sets",
                actual: sets.len(),
            });
        }
        let len = sets[0].len();
        if let Some(bad) = sets.iter().find(|s| s.len() != len) {
            return Err(Error::LengthMismatch {
                left: len,
                right: bad.len(),
            });
        }
        Ok(Self { sets })
    }

    pub fn arity(&self) -> usize {
        self.sets.len()
    }

    /// Number of realizations N.
    pub fn len(&self) -> usize {
        self.sets[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn sets(&self) -> &[DataSet] {
        &self.sets
    }

    pub fn set(&self, index: usize) -> &DataSet {
        &self.sets[index]
    }

    pub fn settings(&self) -> Vec<f64> {
        self.sets.iter().map(DataSet::setting).collect()
    }

    pub fn into_sets(self) -> Vec<DataSet> {
        self.sets
    }

    pub(crate) fn require_arity(&self, arity: usize, expected: &'static str) -> Result<()> {
        if self.arity() != arity {
            return Err(Error::ArityMismatch {
                expected,
                actual: self.arity(),
            });
        }
        Ok(())
    }
}

/// Bell's readout A(θ, λ) realized as sign(cos(kθ − λ)) with λ uniform on [0, 2π).
///
/// The pair correlation is the saw-tooth 1 − 2Δ/π of the folded separation,
/// a function of the setting difference only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LhvProcess {
    pub convention: Convention,
}

impl LhvProcess {
    pub fn new(convention: Convention) -> Self {
        Self { convention }
    }

    /// Deterministic readout. cos = 0 maps to +1.
    #[inline]
    pub fn readout(&self, theta: f64, lambda: f64) -> Outcome {
        Outcome::from_sign((self.convention.factor() * theta - lambda).cos() >= 0.0)
    }

    pub fn sample_lambda<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.gen::<f64>() * TAU
    }

    pub fn pair_correlation(&self, theta_1: f64, theta_2: f64) -> f64 {
        crate::model::sawtooth_correlation(theta_1, theta_2, self.convention)
    }
}

fn random_outcomes<R: RngCore>(rng: &mut R, n: usize) -> Vec<Outcome> {
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let word = rng.next_u64();
        let take = (n - out.len()).min(64);
        out.extend((0..take).map(|bit| Outcome::from_sign((word >> bit) & 1 == 0)));
    }
    out
}

/// Independent fair ±1 outcomes for three or four settings.
pub fn gen_random_iid(n: usize, settings: &[f64], seed: u64) -> Result<AlignedRuns> {
    if n == 0 {
        return Err(Error::EmptyInput("n must be at least 1"));
    }
    if !(3..=4).contains(&settings.len()) {
        return Err(Error::ArityMismatch {
            expected: "3 or 4 settings",
            actual: settings.len(),
        });
    }
    let mut rng = seed::rng(seed);
    let sets = settings
        .iter()
        .map(|&s| DataSet {
            setting: s,
            outcomes: random_outcomes(&mut rng, n),
        })
        .collect();
    AlignedRuns::new(sets)
}

/// Joint readouts of one hidden-variable process: every setting is evaluated
/// at the same λᵢ for realization i.
pub fn gen_from_lhv(n: usize, settings: &[f64], process: LhvProcess, seed: u64) -> Result<AlignedRuns> {
    if n == 0 {
        return Err(Error::EmptyInput("n must be at least 1"));
    }
    if settings.is_empty() || settings.len() > MAX_ARITY {
        return Err(Error::ArityMismatch {
            expected: "1 to 4 settings",
            actual: settings.len(),
        });
    }
    let mut rng = seed::rng(seed);
    let mut outcomes: Vec<Vec<Outcome>> = vec![Vec::with_capacity(n); settings.len()];
    for _ in 0..n {
        let lambda = LhvProcess::sample_lambda(&mut rng);
        for (col, &theta) in outcomes.iter_mut().zip(settings) {
            col.push(process.readout(theta, lambda));
        }
    }
    let sets = settings
        .iter()
        .zip(outcomes)
        .map(|(&setting, outcomes)| DataSet { setting, outcomes })
        .collect();
    AlignedRuns::new(sets)
}

/// Every sign assignment of `arity` data sets of length `n`.
///
/// Case `k` assigns bit `j·n + i` of `k` to realization `i` of set `j`
/// (1 ↦ −1). Settings are abstract labels equal to the set index. Cases can be
/// materialized out of order with [`Enumeration::case`] for range-partitioned
/// parallel consumption.
#[derive(Debug, Clone)]
pub struct Enumeration {
    n: usize,
    arity: usize,
    next: u64,
    total: u64,
}

pub fn enumerate_all(n: usize, arity: usize) -> Result<Enumeration> {
    if n == 0 {
        return Err(Error::EmptyInput("n must be at least 1"));
    }
    if !(3..=4).contains(&arity) {
        return Err(Error::ArityMismatch {
            expected: "arity 3 or 4",
            actual: arity,
        });
    }
    let bits = arity.checked_mul(n).ok_or(Error::EnumerationCap {
        bits: usize::MAX,
        cap: ENUMERATION_CAP_BITS,
    })?;
    if bits > ENUMERATION_CAP_BITS {
        return Err(Error::EnumerationCap {
            bits,
            cap: ENUMERATION_CAP_BITS,
        });
    }
    Ok(Enumeration {
        n,
        arity,
        next: 0,
        total: 1u64 << bits,
    })
}

impl Enumeration {
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn case(&self, index: u64) -> AlignedRuns {
        assert!(index < self.total, "case {index} out of range");
        let sets = (0..self.arity)
            .map(|j| DataSet {
                setting: j as f64,
                outcomes: (0..self.n)
                    .map(|i| Outcome::from_sign((index >> (j * self.n + i)) & 1 == 0))
                    .collect(),
            })
            .collect();
        AlignedRuns { sets }
    }
}

impl Iterator for Enumeration {
    type Item = AlignedRuns;

    fn next(&mut self) -> Option<AlignedRuns> {
        if self.next >= self.total {
            return None;
        }
        let case = self.case(self.next);
        self.next += 1;
        Some(case)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.total - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for Enumeration {}

/// Which data set receives the pickup from the A-side set (index 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pickup {
    /// Set 1.
    #[default]
    AToB,
    /// Set 2.
    AToC,
}

impl Pickup {
    fn target(self) -> usize {
        match self {
            Pickup::AToB => 1,
            Pickup::AToC => 2,
        }
    }
}

/// Detector crosstalk as outcome substitution: with probability `p` per
/// realization, the target outcome is overwritten by the A-side outcome.
pub fn apply_crosstalk(
    runs: &AlignedRuns,
    pickup_probability: f64,
    direction: Pickup,
    seed: u64,
) -> Result<AlignedRuns> {
    Error::check_range("pickup probability", pickup_probability, 0.0, 1.0)?;
    let target = direction.target();
    if target >= runs.arity() {
        return Err(Error::ArityMismatch {
            expected: "a data set on the pickup target side",
            actual: runs.arity(),
        });
    }
    let mut rng = seed::rng(seed);
    let mut sets = runs.sets.clone();
    let (head, tail) = sets.split_at_mut(1);
    let source = &head[0].outcomes;
    let victim = &mut tail[target - 1].outcomes;
    for (v, &a) in victim.iter_mut().zip(source) {
        if rng.gen_bool(pickup_probability) {
            *v = a;
        }
    }
    Ok(AlignedRuns { sets })
}
