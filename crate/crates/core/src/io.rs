//! Text formats: aligned data CSV, scan and scaling CSV, experiment config
//! JSON and the comma-separated lists accepted on the command line.
//!
//! All parsers take untrusted input and return [`Error::Parse`] rather than
//! panicking.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{AlignedRuns, DataSet, Outcome, MAX_ARITY};
use crate::error::{Error, Result};
use crate::experiments::{Protocol, ScalingReport};
use crate::model::ModelKind;
use crate::quantum::{AngleConfig, ScanResult};

const SETTING_PREFIX: &str = "setting_";

/// Degrees rounded to 1e-9 so that e.g. π/4 prints as `45`.
pub fn format_degrees(theta: f64) -> String {
    let d = (theta.to_degrees() * 1e9).round() / 1e9;
    // avoid "-0"
    format!("{}", if d == 0.0 { 0.0 } else { d })
}

fn outcome_str(o: Outcome) -> &'static str {
    match o {
        Outcome::Plus => "+1",
        Outcome::Minus => "-1",
    }
}

fn parse_outcome(field: &str) -> Result<Outcome> {
    match field {
        "+1" => Ok(Outcome::Plus),
        "-1" => Ok(Outcome::Minus),
        other => Err(Error::Parse(format!(
            "outcome must be `+1` or `-1`, got `{other}`"
        ))),
    }
}

/// One row per realization, one `setting_<deg>` column per data set.
pub fn write_aligned_csv<W: Write>(runs: &AlignedRuns, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(
        runs.sets()
            .iter()
            .map(|s| format!("{SETTING_PREFIX}{}", format_degrees(s.setting()))),
    )?;
    for i in 0..runs.len() {
        w.write_record(runs.sets().iter().map(|s| outcome_str(s.outcomes()[i])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_aligned_csv(text: &str) -> Result<AlignedRuns> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let settings = reader
        .headers()
        .map_err(|e| Error::Parse(e.to_string()))?
        .iter()
        .map(|h| {
            let deg = h
                .strip_prefix(SETTING_PREFIX)
                .ok_or_else(|| Error::Parse(format!("header `{h}` lacks `{SETTING_PREFIX}`")))?;
            let deg: f64 = deg
                .parse()
                .map_err(|_| Error::Parse(format!("header `{h}` has no numeric angle")))?;
            if !deg.is_finite() {
                return Err(Error::Parse(format!("header `{h}` angle is not finite")));
            }
            Ok(deg.to_radians())
        })
        .collect::<Result<Vec<f64>>>()?;
    if settings.is_empty() || settings.len() > MAX_ARITY {
        return Err(Error::Parse(format!(
            "expected 1 to {MAX_ARITY} setting columns, got {}",
            settings.len()
        )));
    }
    let mut columns: Vec<Vec<Outcome>> = vec![Vec::new(); settings.len()];
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            col.push(parse_outcome(field)?);
        }
    }
    if columns[0].is_empty() {
        return Err(Error::Parse("no data rows".into()));
    }
    let sets = settings
        .into_iter()
        .zip(columns)
        .map(|(s, c)| DataSet::new(s, c))
        .collect::<Result<Vec<_>>>()?;
    AlignedRuns::new(sets)
}

/// Independent pair runs in long form: `run,theta_x_deg,theta_y_deg,x,y`.
pub fn write_pair_runs_csv<W: Write>(runs: &[AlignedRuns], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "theta_x_deg", "theta_y_deg", "x", "y"])?;
    for (k, run) in runs.iter().enumerate() {
        let (x, y) = (run.set(0), run.set(1));
        let (tx, ty) = (format_degrees(x.setting()), format_degrees(y.setting()));
        let k = k.to_string();
        for (a, b) in x.outcomes().iter().zip(y.outcomes()) {
            w.write_record([k.as_str(), &tx, &ty, outcome_str(*a), outcome_str(*b)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_scan_csv<W: Write>(scan: &ScanResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "theta_a_deg",
        "theta_b_deg",
        "theta_c_deg",
        "lhs",
        "rhs",
        "margin",
    ])?;
    for r in &scan.rows {
        w.write_record([
            r.theta_a_deg.to_string(),
            r.theta_b_deg.to_string(),
            r.theta_c_deg.to_string(),
            r.report.lhs.to_string(),
            r.report.rhs.to_string(),
            r.report.margin.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_scaling_csv<W: Write>(report: &ScalingReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "median_violation", "rate"])?;
    for ((n, m), r) in report
        .n_values
        .iter()
        .zip(&report.median_violation)
        .zip(&report.positive_violation_rate)
    {
        w.write_record([n.to_string(), m.to_string(), r.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Comma-separated angles in degrees, e.g. `0,90,45,135`.
pub fn parse_angle_list(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(|t| {
            let t = t.trim();
            let v: f64 = t
                .parse()
                .map_err(|_| Error::Parse(format!("`{t}` is not an angle in degrees")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::Parse(format!("angle `{t}` is not finite")))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() > MAX_ARITY {
        return Err(Error::Parse(format!(
            "at most {MAX_ARITY} angles, got {}",
            values.len()
        )));
    }
    Ok(values)
}

/// Comma-separated positive counts, e.g. `100,1000,10000`.
pub fn parse_count_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            match t.parse::<usize>() {
                Ok(0) => Err(Error::Parse("counts must be positive".into())),
                Ok(v) => Ok(v),
                Err(_) => Err(Error::Parse(format!("`{t}` is not a count"))),
            }
        })
        .collect()
}

/// Experiment config file. Field names mirror `ExperimentSpec`; every field
/// is optional so that command-line flags and defaults can fill the gaps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub protocol: Option<Protocol>,
    pub model: Option<ModelKind>,
    pub angles: Option<AngleConfig>,
    pub n: Option<usize>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub crosstalk: Option<f64>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let cfg: ConfigFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if let Some(angles) = &cfg.angles {
        for t in [
            angles.theta_a,
            angles.theta_a_prime,
            angles.theta_b,
            angles.theta_b_prime,
        ]
        .into_iter()
        .flatten()
        {
            if !t.is_finite() {
                return Err(Error::Parse("angles must be finite".into()));
            }
        }
    }
    if let Some(p) = cfg.crosstalk {
        Error::check_range("crosstalk", p, 0.0, 1.0).map_err(|e| Error::Parse(e.to_string()))?;
    }
    Ok(cfg)
}
