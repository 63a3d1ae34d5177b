//! `bellkit` command-line front end.
//!
//! Exit status: 0 on success (including physical-model inequality
//! violations), 1 on validation errors, 2 when an algebraic identity fails.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bellkit_core::experiments::{chsh_limit, SeparateOutcome};
use bellkit_core::io::{self as formats, ConfigFile};
use bellkit_core::{
    bell3_identity, chsh4_identity, enumerate_all, run_joint_protocol, run_separate_protocol,
    run_sequential_protocol, scaling_study, scan_bell3_qm, scan_wigner, sigma_comparison, AngleConfig,
    BellStateModel, Convention, Error, ExperimentSpec, ModelKind, Protocol,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

const OUT_ENV: &str = "BELLKIT_OUT";
const DEFAULT_OUT: &str = "bellkit-out";

#[derive(Debug, Parser)]
#[command(
    name = "bellkit",
    version,
    about = "Bell-inequality identities, scans and finite-N simulations"
)]
struct Cli {
    /// Worker threads for parallel sections (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output root directory [env: BELLKIT_OUT, default: bellkit-out].
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exhaustively check the three- or four-set identity for every sign assignment.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        arity: usize,
    },
    /// Run one joint, separate or sequential experiment and write a run directory.
    Simulate(SimulateArgs),
    /// Grid-scan the probability or conditional-product inequality.
    Scan(ScanArgs),
    /// Median positive CHSH excess versus n for the boundary hidden-variable process.
    Scaling(ScalingArgs),
    /// σ-counts of separate-run CHSH for the hidden-variable and Bell-state models.
    Sigma(SigmaArgs),
}

#[derive(Debug, Args)]
struct ExperimentArgs {
    /// JSON file with ExperimentSpec fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    model: Option<String>,
    /// Degrees: `a,b`, `a,b,b'` or `a',a,b,b'`.
    #[arg(long, allow_hyphen_values = true)]
    angles: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    convention: Option<String>,
    /// A→B pickup probability applied to every recorded pair.
    #[arg(long)]
    crosstalk: Option<f64>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScanKind {
    Wigner,
    #[value(name = "bell3-qm")]
    Bell3Qm,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long, value_enum)]
    inequality: ScanKind,
    /// Grid step in degrees; must divide 360.
    #[arg(long, default_value_t = 1.0)]
    grid: f64,
    #[arg(long, default_value = "bell-state")]
    model: String,
    #[arg(long, default_value = "spin")]
    convention: String,
}

#[derive(Debug, Args)]
struct ScalingArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Comma-separated run sizes.
    #[arg(long, default_value = "100,1000,10000,100000")]
    n: String,
}

#[derive(Debug, Args)]
struct SigmaArgs {
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "spin")]
    convention: String,
}

#[derive(Debug)]
enum Failure {
    Validation(String),
    Defect(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_defect() {
            Failure::Defect(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Validation(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.threads {
        Some(0) => Err(Failure::Validation("--threads must be at least 1".into())),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| run(&cli)),
            Err(e) => Err(Failure::Validation(e.to_string())),
        },
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Defect(msg)) => {
            eprintln!("defect: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> CmdResult {
    let root = output_root(cli.out.as_deref());
    match &cli.command {
        Command::Enumerate { n, arity } => cmd_enumerate(*n, *arity),
        Command::Simulate(args) => cmd_simulate(args, &root),
        Command::Scan(args) => cmd_scan(args, &root),
        Command::Scaling(args) => cmd_scaling(args, &root),
        Command::Sigma(args) => cmd_sigma(args, &root),
    }
}

fn output_root(flag: Option<&Path>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

fn run_dir(root: &Path, name: &str) -> Result<PathBuf, Failure> {
    let dir = root.join(name);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn print_json(value: &serde_json::Value) -> CmdResult {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn cmd_enumerate(n: usize, arity: usize) -> CmdResult {
    let cases = enumerate_all(n, arity)?;
    let total = cases.total();
    // (violations, equality cases, min margin)
    let (violations, equality, min_margin) = (0..total)
        .into_par_iter()
        .map(|k| {
            let case = cases.case(k);
            let report = if arity == 3 {
                bell3_identity(&case)
            } else {
                chsh4_identity(&case)
            };
            match report {
                Ok(r) => (0u64, u64::from(r.margin == 0.0), r.margin),
                Err(e) if e.is_defect() => (1, 0, f64::NEG_INFINITY),
                Err(_) => unreachable!("enumerated cases are well formed"),
            }
        })
        .reduce(
            || (0, 0, f64::INFINITY),
            |a, b| (a.0 + b.0, a.1 + b.1, a.2.min(b.2)),
        );
    print_json(&json!({
        "n": n,
        "arity": arity,
        "cases": total,
        "violations": violations,
        "equality_cases": equality,
        "min_margin": min_margin,
    }))?;
    if violations > 0 {
        return Err(Failure::Defect(format!(
            "{violations} enumerated cases violate the identity"
        )));
    }
    Ok(())
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, Failure> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text =
                fs::read_to_string(p).map_err(|e| Failure::Validation(format!("{}: {e}", p.display())))?;
            Ok(formats::parse_config(&text)?)
        }
    }
}

/// flags > config file > defaults
fn resolve_spec(
    args: &ExperimentArgs,
    n_flag: Option<usize>,
    defaults: (Protocol, ModelKind),
) -> Result<ExperimentSpec, Failure> {
    let cfg = load_config(args.config.as_deref())?;
    let protocol = match &args.protocol {
        Some(p) => p.parse()?,
        None => cfg.protocol.unwrap_or(defaults.0),
    };
    let model = match &args.model {
        Some(m) => m.parse()?,
        None => cfg.model.unwrap_or(defaults.1),
    };
    let convention: Convention = match &args.convention {
        Some(c) => c.parse()?,
        None => cfg.angles.map(|a| a.convention).unwrap_or_default(),
    };
    let angles = match (&args.angles, cfg.angles) {
        (Some(list), _) => AngleConfig::from_degrees(&formats::parse_angle_list(list)?, convention)?,
        (None, Some(a)) => AngleConfig { convention, ..a }.normalized(),
        (None, None) => AngleConfig::chsh_default(convention),
    };
    let crosstalk = args.crosstalk.or(cfg.crosstalk);
    Ok(ExperimentSpec {
        protocol,
        model,
        angles,
        n: n_flag.or(cfg.n).unwrap_or(10_000),
        trials: args.trials.or(cfg.trials).unwrap_or(1),
        seed: args.seed.or(cfg.seed).unwrap_or(0),
        crosstalk,
    })
}

fn fmt_sigma(s: f64) -> String {
    if s.is_finite() {
        format!("{s:.2}")
    } else {
        format!("{s}")
    }
}

fn cmd_simulate(args: &SimulateArgs, root: &Path) -> CmdResult {
    let spec = resolve_spec(&args.common, args.n, (Protocol::Separate, ModelKind::BellState))?;
    spec.validate()?;
    let dir = run_dir(
        root,
        &format!("simulate-{}-{}-seed{}", spec.protocol, spec.model, spec.seed),
    )?;
    write_json(&dir.join("spec.json"), &spec)?;
    let data = fs::File::create(dir.join("data.csv"))?;
    let (report, summary) =
        match spec.protocol {
            Protocol::Joint => {
                let out = run_joint_protocol(&spec)?;
                formats::write_aligned_csv(&out.runs, io::BufWriter::new(data))?;
                let label = match &out.delta {
                    Some(d) => format!("S={:.6}", d.s_finite),
                    None => format!("lhs={:.6}", out.identity.lhs),
                };
                let summary = format!(
                    "{} {} {label} margin={:.6} sigma={} (joint run: identity holds by algebra)",
                    spec.protocol,
                    spec.model,
                    out.identity.margin,
                    fmt_sigma(out.sigma.sigma_count)
                );
                let report = json!({
                    "identity": out.identity,
                    "estimates": out.estimates,
                    "delta": out.delta,
                    "sigma": out.sigma,
                });
                (report, summary)
            }
            Protocol::Separate => {
                let out = run_separate_protocol(&spec)?;
                formats::write_pair_runs_csv(&out.pair_runs, io::BufWriter::new(data))?;
                let summary = separate_summary(&spec, &out);
                let report = json!({
                    "inequality": out.report,
                    "estimates": out.estimates,
                    "delta": out.delta,
                    "sigma": out.sigma,
                });
                (report, summary)
            }
            Protocol::Sequential => {
                let out = run_sequential_protocol(&spec)?;
                formats::write_aligned_csv(&out.runs, io::BufWriter::new(data))?;
                let summary =
                    format!(
                "{} {} lhs={:.6} margin={:.6} identity={} bbp={:.6} (conditional-product limit {:.6})",
                spec.protocol,
                spec.model,
                out.identity.lhs,
                out.identity.margin,
                if out.identity.satisfied { "satisfied" } else { "violated" },
                out.bbp.value,
                out.bbp_limit
            );
                let report = json!({
                    "identity": out.identity,
                    "ab": out.ab,
                    "abp": out.abp,
                    "bbp": out.bbp,
                    "bbp_limit": out.bbp_limit,
                });
                (report, summary)
            }
        };
    write_json(&dir.join("report.json"), &report)?;
    println!("{summary}");
    Ok(())
}

fn separate_summary(spec: &ExperimentSpec, out: &SeparateOutcome) -> String {
    let label = match &out.delta {
        Some(d) => format!("S={:.6}", d.s_finite.abs()),
        None => format!("lhs={:.6}", out.report.lhs),
    };
    format!(
        "{} {} {label} margin={:.6} sigma={}{}",
        spec.protocol,
        spec.model,
        out.report.margin,
        fmt_sigma(out.sigma.sigma_count),
        if out.report.satisfied { "" } else { " (violated)" }
    )
}

fn cmd_scan(args: &ScanArgs, root: &Path) -> CmdResult {
    let model: ModelKind = args.model.parse()?;
    let convention: Convention = args.convention.parse()?;
    let (name, scan) = match args.inequality {
        ScanKind::Wigner => ("wigner", scan_wigner(args.grid, model, convention)?),
        ScanKind::Bell3Qm => {
            if model != ModelKind::BellState {
                return Err(Failure::Validation(
                    "bell3-qm scan evaluates bell-state conditional correlations only".into(),
                ));
            }
            (
                "bell3-qm",
                scan_bell3_qm(args.grid, &BellStateModel::new(convention))?,
            )
        }
    };
    let dir = run_dir(root, &format!("scan-{name}-{model}-step{}", args.grid))?;
    let file = fs::File::create(dir.join("scan.csv"))?;
    formats::write_scan_csv(&scan, io::BufWriter::new(file))?;
    let violations = scan.violations();
    let worst = violations.first().map(|r| {
        json!({
            "theta_a_deg": r.theta_a_deg,
            "theta_b_deg": r.theta_b_deg,
            "theta_c_deg": r.theta_c_deg,
            "margin": r.report.margin,
        })
    });
    let summary = json!({
        "inequality": name,
        "model": model,
        "convention": convention,
        "step_deg": args.grid,
        "rows": scan.rows.len(),
        "violations": violations.len(),
        "min_margin": scan.min_margin(),
        "max_violation": scan.max_violation(),
        "worst": worst,
    });
    write_json(&dir.join("summary.json"), &summary)?;
    print_json(&summary)
}

fn cmd_scaling(args: &ScalingArgs, root: &Path) -> CmdResult {
    let n_values = formats::parse_count_list(&args.n)?;
    let mut spec = resolve_spec(&args.common, None, (Protocol::Separate, ModelKind::LhvSawtooth))?;
    if args.common.trials.is_none() && load_config(args.common.config.as_deref())?.trials.is_none() {
        spec.trials = 200;
    }
    let trials = spec.trials;
    let report = scaling_study(&spec, &n_values, trials)?;
    let dir = run_dir(root, &format!("scaling-{}-seed{}", spec.model, spec.seed))?;
    write_json(&dir.join("spec.json"), &spec)?;
    let file = fs::File::create(dir.join("scaling.csv"))?;
    formats::write_scaling_csv(&report, io::BufWriter::new(file))?;
    let s_limit = chsh_limit(spec.model, spec.convention(), &spec.angles.settings()?);
    write_json(
        &dir.join("report.json"),
        &json!({ "scaling": report, "s_limit": s_limit }),
    )?;
    println!(
        "fitted exponent {:.4} ± {:.4} over n = {:?} ({} trials each)",
        report.fitted_exponent, report.exponent_stderr, report.n_values, trials
    );
    Ok(())
}

fn cmd_sigma(args: &SigmaArgs, root: &Path) -> CmdResult {
    let convention: Convention = args.convention.parse()?;
    let report = sigma_comparison(args.n, args.seed, convention)?;
    let dir = run_dir(root, &format!("sigma-n{}-seed{}", args.n, args.seed))?;
    write_json(&dir.join("report.json"), &report)?;
    println!(
        "lhv-sawtooth S={:.6} sigma={} | bell-state S={:.6} sigma={}",
        report.lhv_s,
        fmt_sigma(report.lhv.sigma_count),
        report.bell_state_s.abs(),
        fmt_sigma(report.bell_state.sigma_count)
    );
    println!("note: {}", report.note);
    Ok(())
}
