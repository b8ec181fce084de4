//! Thin command-line binding over the library: every subcommand parses flags,
//! calls library functions, and formats their output. No numeric logic lives
//! here.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error (unreadable or invalid
//! input), 4 numeric/convergence error.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use wcr_core::bayes::{
    draw_importance_restricted, draw_importance_unrestricted, posterior_summary, Priors,
};
use wcr_core::bootstrap::{bootstrap_mles, normal_bootstrap_interval, percentile_interval};
use wcr_core::censoring::{
    generate_sample, parse_scheme, plan_sidecar_path, read_sample, write_sample, CensoringPlan,
};
use wcr_core::error::Error;
use wcr_core::interval::IntervalReport;
use wcr_core::likelihood::{
    fit_restricted, fit_unrestricted, lrt_equal_scales, profile_p1, FitOptions, FitSummary,
    FittedModel, ModelKind,
};
use wcr_core::sampling::StreamKey;
use wcr_core::study::{
    monitored_functionals, factorial_grid, render_table, run_study, ScenarioConfig, ScenarioSpec,
    TableFormat,
};
use wcr_core::Sample;

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

/// A failed command: message plus the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Io(_)
            | Error::Parse(_)
            | Error::Schema(_)
            | Error::InvalidSample(_)
            | Error::InvalidPlan(_)
            | Error::InvalidParameter(_)
            | Error::Degenerate(_)
            | Error::Precondition(_) => EXIT_DATA,
            Error::NonConvergence { .. }
            | Error::SolverInconsistency(_)
            | Error::WeightDegeneracy(_)
            | Error::Resolution(_)
            | Error::BootstrapFailures { .. } => EXIT_NUMERIC,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure {
            code: EXIT_DATA,
            message: err.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

#[derive(Parser)]
#[command(
    name = "wcr",
    version,
    about = "Weibull competing-risks inference under adaptive progressive type-II censoring"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset under an adaptive progressive censoring plan.
    Simulate(SimulateArgs),
    /// Fit model families to a dataset, optionally with the equal-scales test.
    Fit(FitArgs),
    /// Equal-scales likelihood-ratio test (shorthand for `fit --lrt`).
    Lrt(LrtArgs),
    /// Parametric-bootstrap confidence intervals for the fitted parameters.
    Bootstrap(BootstrapArgs),
    /// Importance-sampled Bayes estimates and credible intervals.
    Bayes(BayesArgs),
    /// Run a Monte Carlo study described by a JSON config.
    Study(StudyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModelChoice {
    Restricted,
    Unrestricted,
    Both,
}

impl ModelChoice {
    fn kinds(self) -> Vec<ModelKind> {
        match self {
            ModelChoice::Restricted => vec![ModelKind::Restricted],
            ModelChoice::Unrestricted => vec![ModelKind::Unrestricted],
            ModelChoice::Both => vec![ModelKind::Restricted, ModelKind::Unrestricted],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Text,
    Json,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of units put on test.
    #[arg(long)]
    n: usize,
    /// Number of failures to observe.
    #[arg(long)]
    m: usize,
    /// Removal scheme: "right:k", "fsp:k", "osp:k", or a comma list of m counts.
    #[arg(long)]
    scheme: String,
    /// Ideal test duration: a positive number or "inf".
    #[arg(long = "T", value_name = "T")]
    duration: String,
    /// Common Weibull shape.
    #[arg(long)]
    alpha: f64,
    /// Scale of the first cause.
    #[arg(long = "l1")]
    lambda1: f64,
    /// Scale of the second cause.
    #[arg(long = "l2")]
    lambda2: f64,
    /// Random seed.
    #[arg(long)]
    seed: u64,
    /// Output CSV path; the plan sidecar is written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    /// Input sample CSV (plan sidecar expected beside it).
    #[arg(long)]
    input: PathBuf,
    /// Model family to fit.
    #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
    model: ModelChoice,
    /// Also run the equal-scales likelihood-ratio test.
    #[arg(long)]
    lrt: bool,
    /// Significance level of the test.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    /// Write a CSV series of (alpha, profile_loglik) over a log grid around
    /// the estimate, for external plotting.
    #[arg(long, value_name = "PATH")]
    profile_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LrtArgs {
    /// Input sample CSV (plan sidecar expected beside it).
    #[arg(long)]
    input: PathBuf,
    /// Significance level of the test.
    #[arg(long, default_value_t = 0.05)]
    level: f64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Text)]
    format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BootstrapArgs {
    /// Input sample CSV (plan sidecar expected beside it).
    #[arg(long)]
    input: PathBuf,
    /// Model family to resample.
    #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
    model: ModelChoice,
    /// Number of bootstrap resamples.
    #[arg(long = "B", value_name = "B", default_value_t = 500)]
    resamples: usize,
    /// Confidence level of the intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Random seed for the resampling streams.
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BayesArgs {
    /// Input sample CSV (plan sidecar expected beside it).
    #[arg(long)]
    input: PathBuf,
    /// Model family for the posterior.
    #[arg(long, value_enum, default_value_t = ModelChoice::Both)]
    model: ModelChoice,
    /// Number of importance draws.
    #[arg(long = "M", value_name = "M", default_value_t = 2000)]
    draws: usize,
    /// Credible level of the intervals.
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    /// Random seed for the importance stream.
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StudyOutputFormat {
    Csv,
    Markdown,
    Both,
}

#[derive(Args)]
struct StudyArgs {
    /// Study config: one scenario object or an array of them.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path prefix; writes <prefix>.csv and/or <prefix>.md.
    #[arg(long, default_value = "study_results")]
    out: String,
    /// Worker threads for the replication loop (default: all cores).
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long, value_enum, default_value_t = StudyOutputFormat::Both)]
    format: StudyOutputFormat,
    /// Write the bundled 24-scenario factorial grid to this path and exit
    /// (unless --config is also given).
    #[arg(long, value_name = "PATH")]
    emit_grid: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Lrt(args) => cmd_fit(FitArgs {
            input: args.input,
            model: ModelChoice::Both,
            lrt: true,
            level: args.level,
            profile_out: None,
            format: args.format,
            out: args.out,
        }),
        Command::Bootstrap(args) => cmd_bootstrap(args),
        Command::Bayes(args) => cmd_bayes(args),
        Command::Study(args) => cmd_study(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn parse_duration_flag(text: &str) -> Result<f64, Failure> {
    let trimmed = text.trim();
    if trimmed.eq_ignore_ascii_case("inf") || trimmed.eq_ignore_ascii_case("infinity") {
        return Ok(f64::INFINITY);
    }
    trimmed
        .parse::<f64>()
        .map_err(|_| Failure::usage(format!("--T must be a number or \"inf\", got \"{text}\"")))
}

/// Prints a line to stdout, swallowing a closed pipe (e.g. `| head`).
fn print_line(text: &str) {
    use std::io::Write;
    let mut stdout = std::io::stdout().lock();
    let _ = writeln!(stdout, "{text}");
}

/// Writes `text` to `out` when given, otherwise to stdout.
fn deliver(text: &str, out: Option<&Path>) -> CmdResult {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            print_line(text.trim_end());
            Ok(())
        }
    }
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    // Flag problems are usage errors: report the violated constraint verbatim.
    let removals =
        parse_scheme(&args.scheme, args.m).map_err(|e| Failure::usage(e.to_string()))?;
    let duration = parse_duration_flag(&args.duration)?;
    let plan = CensoringPlan::new(args.n, args.m, removals, duration)
        .map_err(|e| Failure::usage(e.to_string()))?;
    for (value, flag) in [
        (args.alpha, "--alpha"),
        (args.lambda1, "--l1"),
        (args.lambda2, "--l2"),
    ] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Failure::usage(format!(
                "{flag} must be finite and strictly positive, got {value}"
            )));
        }
    }
    let mut rng = StreamKey::new(args.seed, 0).generation();
    let sample = generate_sample(&plan, args.alpha, args.lambda1, args.lambda2, &mut rng)?;
    write_sample(&sample, &args.out)?;
    print_line(&format!(
        "wrote {} (plan sidecar {})",
        args.out.display(),
        plan_sidecar_path(&args.out).display()
    ));
    print_line(&format!(
        "m1 = {}, m2 = {}, J = {} (of m = {})",
        sample.m1(),
        sample.m2(),
        sample.change_index,
        sample.m()
    ));
    Ok(())
}

fn load_sample(path: &Path) -> Result<Sample, Failure> {
    Ok(read_sample::<f64>(path)?)
}

fn fit_text_block(summary: &FitSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[{}]", summary.model);
    let _ = writeln!(out, "alpha    = {:.6}", summary.alpha);
    let _ = writeln!(out, "lambda1  = {:.6}", summary.lambda1);
    let _ = writeln!(out, "lambda2  = {:.6}", summary.lambda2);
    if let Some(beta) = summary.beta {
        let _ = writeln!(out, "beta     = {:.6}", beta);
    }
    let _ = writeln!(out, "loglik   = {:.6}", summary.loglik);
    let _ = writeln!(
        out,
        "converged: {} ({} iterations){}",
        summary.converged,
        summary.iterations,
        if summary.boundary { "; boundary fit" } else { "" }
    );
    out
}

fn cmd_fit(args: FitArgs) -> CmdResult {
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(Failure::usage(format!(
            "--level must lie in (0, 1), got {}",
            args.level
        )));
    }
    let sample = load_sample(&args.input)?;
    let opts = FitOptions::default();

    let mut summaries: Vec<FitSummary> = Vec::new();
    for kind in args.model.kinds() {
        match kind {
            ModelKind::Restricted => summaries.push(fit_restricted(&sample, &opts)?.summary()),
            ModelKind::Unrestricted => summaries.push(fit_unrestricted(&sample, &opts)?.summary()),
        }
    }
    let lrt = if args.lrt {
        Some(lrt_equal_scales(&sample, args.level)?)
    } else {
        None
    };

    if let Some(path) = &args.profile_out {
        let alpha_hat = summaries
            .first()
            .map(|s| s.alpha)
            .expect("at least one model family is always fitted");
        let mut series = String::from("alpha,profile_loglik\n");
        let span = 8.0f64.ln();
        for i in 0..=200 {
            let alpha = alpha_hat * ((i as f64 / 200.0) * 2.0 * span - span).exp();
            let value = profile_p1(alpha, &sample)?;
            let _ = writeln!(series, "{alpha},{value}");
        }
        std::fs::write(path, series)?;
        eprintln!("wrote {}", path.display());
    }

    match args.format {
        OutputFormat::Json => {
            let mut body = serde_json::Map::new();
            for summary in &summaries {
                body.insert(summary.model.to_string(), serde_json::to_value(summary).unwrap());
            }
            if let Some(test) = &lrt {
                body.insert("lrt".into(), serde_json::to_value(test).unwrap());
            }
            let text = serde_json::to_string_pretty(&serde_json::Value::Object(body)).unwrap();
            deliver(&text, args.out.as_deref())
        }
        OutputFormat::Text => {
            let mut text = String::new();
            for summary in &summaries {
                text.push_str(&fit_text_block(summary));
                text.push('\n');
            }
            if let Some(test) = &lrt {
                let _ = writeln!(text, "[equal-scales test]");
                let _ = writeln!(text, "statistic = {:.6}", test.lambda_stat);
                let _ = writeln!(
                    text,
                    "critical  = {:.6} (level {})",
                    test.critical, test.significance
                );
                let _ = writeln!(text, "p-value   = {:.6}", test.p_value);
                let _ = writeln!(
                    text,
                    "decision  = {}",
                    if test.reject {
                        "reject equal scales"
                    } else {
                        "no evidence against equal scales"
                    }
                );
            }
            deliver(&text, args.out.as_deref())
        }
    }
}

fn cmd_bootstrap(args: BootstrapArgs) -> CmdResult {
    if args.resamples < 2 {
        return Err(Failure::usage(format!(
            "--B must be at least 2, got {}",
            args.resamples
        )));
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(Failure::usage(format!(
            "--level must lie in (0, 1), got {}",
            args.level
        )));
    }
    let sample = load_sample(&args.input)?;
    let opts = FitOptions::default();
    let key = StreamKey::new(args.seed, 0);
    let gamma = 1.0 - args.level;

    let mut reports = serde_json::Map::new();
    let mut text = String::new();
    for kind in args.model.kinds() {
        let fitted: FittedModel<f64> = match kind {
            ModelKind::Restricted => fit_restricted(&sample, &opts)?.fitted(),
            ModelKind::Unrestricted => fit_unrestricted(&sample, &opts)?.fitted(),
        };
        let run = bootstrap_mles(&sample.plan, &fitted, args.resamples, &key, &opts)?;
        if run.warn_failures() {
            eprintln!(
                "warning: {} of {} bootstrap refits failed for the {} family",
                run.failures, run.requested, kind
            );
        }
        let mut table = BTreeMap::new();
        let mut intervals: Vec<IntervalReport> = Vec::new();
        let _ = writeln!(text, "[{kind}] B = {}, level = {}", run.requested, args.level);
        for &functional in monitored_functionals(kind) {
            let draws = run.draws_for(functional);
            let normal = normal_bootstrap_interval(&draws, gamma)?;
            let pct = percentile_interval(&draws, gamma)?;
            table.insert(
                functional.to_string(),
                json!({
                    "MLE": draws.point_estimate,
                    "BB": [normal.lower, normal.upper],
                    "PB": [pct.lower, pct.upper],
                }),
            );
            let _ = writeln!(
                text,
                "{:8} MLE = {:.6}  BB = [{:.6}, {:.6}]  PB = [{:.6}, {:.6}]",
                functional.to_string(),
                draws.point_estimate,
                normal.lower,
                normal.upper,
                pct.lower,
                pct.upper
            );
            intervals.push(
                IntervalReport::from(&normal).with_bootstrap_counts(run.requested, run.failures),
            );
            intervals.push(
                IntervalReport::from(&pct).with_bootstrap_counts(run.requested, run.failures),
            );
        }
        text.push('\n');
        reports.insert(
            kind.to_string(),
            json!({
                "model": kind,
                "B": run.requested,
                "failures": run.failures,
                "level": args.level,
                "table": table,
                "intervals": intervals,
            }),
        );
    }

    match args.format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&serde_json::Value::Object(reports)).unwrap();
            deliver(&text, args.out.as_deref())
        }
        OutputFormat::Text => deliver(&text, args.out.as_deref()),
    }
}

fn cmd_bayes(args: BayesArgs) -> CmdResult {
    if args.draws < 2 {
        return Err(Failure::usage(format!(
            "--M must be at least 2, got {}",
            args.draws
        )));
    }
    if !(args.level > 0.0 && args.level < 1.0) {
        return Err(Failure::usage(format!(
            "--level must lie in (0, 1), got {}",
            args.level
        )));
    }
    let sample = load_sample(&args.input)?;
    let priors = Priors::default();
    let key = StreamKey::new(args.seed, 0);
    let gamma = 1.0 - args.level;

    let mut reports = serde_json::Map::new();
    let mut text = String::new();
    for kind in args.model.kinds() {
        let restricted = kind == ModelKind::Restricted;
        let mut rng = key.importance(restricted);
        let posterior = if restricted {
            draw_importance_restricted(&sample, &priors, args.draws, &mut rng)?
        } else {
            draw_importance_unrestricted(&sample, &priors, args.draws, &mut rng)?
        };
        if posterior.low_ess() {
            eprintln!(
                "warning: effective sample size {:.2} below 10 for the {} family; \
                 estimates may be unstable",
                posterior.ess(),
                kind
            );
        }
        let summary = posterior_summary(&posterior, gamma)?;
        let mut table = BTreeMap::new();
        let _ = writeln!(
            text,
            "[{kind}] M = {}, level = {}, ESS = {:.2}",
            summary.draws, args.level, summary.ess
        );
        for &functional in monitored_functionals(kind) {
            let name = functional.name();
            let be = summary.estimates[name];
            let scri = summary.cri.symmetric[name];
            let hpd = summary.cri.hpd[name];
            table.insert(
                name.to_string(),
                json!({ "BE": be, "SCRI": scri, "HPD": hpd }),
            );
            let _ = writeln!(
                text,
                "{:8} BE = {:.6}  SCRI = [{:.6}, {:.6}]  HPD = [{:.6}, {:.6}]",
                name, be, scri[0], scri[1], hpd[0], hpd[1]
            );
        }
        text.push('\n');
        let mut body = serde_json::to_value(&summary).unwrap();
        body.as_object_mut()
            .unwrap()
            .insert("table".into(), serde_json::Value::Object(table.into_iter().collect()));
        body.as_object_mut()
            .unwrap()
            .insert("level".into(), json!(args.level));
        reports.insert(kind.to_string(), body);
    }

    match args.format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&serde_json::Value::Object(reports)).unwrap();
            deliver(&text, args.out.as_deref())
        }
        OutputFormat::Text => deliver(&text, args.out.as_deref()),
    }
}

/// A study config file: one scenario or a list of them.
#[derive(Deserialize)]
#[serde(untagged)]
enum StudyConfigFile {
    One(ScenarioConfig),
    Many(Vec<ScenarioConfig>),
}

fn cmd_study(args: StudyArgs) -> CmdResult {
    if let Some(path) = &args.emit_grid {
        let grid = factorial_grid();
        let text = serde_json::to_string_pretty(&grid).unwrap();
        std::fs::write(path, text + "\n")?;
        eprintln!("wrote {} ({} scenarios)", path.display(), grid.len());
        if args.config.is_none() {
            return Ok(());
        }
    }
    let Some(config_path) = &args.config else {
        return Err(Failure::usage(
            "--config is required (or use --emit-grid)".to_string(),
        ));
    };
    if let Some(workers) = args.workers {
        if workers == 0 {
            return Err(Failure::usage("--workers must be at least 1".to_string()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| Failure::usage(format!("could not size the worker pool: {e}")))?;
    }
    let raw = std::fs::read_to_string(config_path)?;
    let parsed: StudyConfigFile = serde_json::from_str(&raw)
        .map_err(|e| Failure::from(Error::Parse(format!("bad study config: {e}"))))?;
    let configs = match parsed {
        StudyConfigFile::One(c) => vec![c],
        StudyConfigFile::Many(v) => v,
    };
    let specs: Vec<ScenarioSpec<f64>> = configs
        .iter()
        .map(|c| c.resolve::<f64>())
        .collect::<Result<_, _>>()?;
    let rows = run_study(&specs)?;
    for row in &rows {
        if row.flagged {
            eprintln!(
                "warning: scenario \"{}\" lost {} of {} replications (>5%)",
                row.scenario, row.failures, row.reps_requested
            );
        }
    }
    if matches!(args.format, StudyOutputFormat::Csv | StudyOutputFormat::Both) {
        let path = format!("{}.csv", args.out);
        std::fs::write(&path, render_table(&rows, TableFormat::Csv)?)?;
        eprintln!("wrote {path}");
    }
    if matches!(
        args.format,
        StudyOutputFormat::Markdown | StudyOutputFormat::Both
    ) {
        let path = format!("{}.md", args.out);
        std::fs::write(&path, render_table(&rows, TableFormat::Markdown)?)?;
        eprintln!("wrote {path}");
    }
    Ok(())
}
