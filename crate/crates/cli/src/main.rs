//! `divergelab`: evaluate distinguishability quantifiers, run property
//! suites, and reproduce the partial-trace counterexamples.
//!
//! Exit codes: 0 success, 1 a must-hold property failed, 2 usage or input error.

mod output;
mod source;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use divergelab::cdiv::Mu;
use divergelab::harness::{self, PatternSearchConfig, PropertyReport, SuiteName, CLOSED_FORM_TOL};
use divergelab::qdiv::{evaluate, LogBase, QuantifierId};
use serde::Serialize;

use output::{format_number, format_value, write_csv, RunDocument};
use source::load_state;

#[derive(Parser)]
#[command(name = "divergelab", version, about = "Quantum distinguishability quantifiers and property suites")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate one quantifier on two states.
    Eval(EvalArgs),
    /// Run a property suite and report violations.
    Suite(SuiteArgs),
    /// Print (before, after, ratio) for a partial-trace counterexample.
    Counterexample(CounterexampleArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum LogBaseArg {
    #[default]
    Nat,
    Bits,
}

impl From<LogBaseArg> for LogBase {
    fn from(b: LogBaseArg) -> Self {
        match b {
            LogBaseArg::Nat => LogBase::Nat,
            LogBaseArg::Bits => LogBase::Bits,
        }
    }
}

#[derive(Args)]
struct EvalArgs {
    /// Quantifier tag, e.g. trace_dist or qsd(mu=0.3).
    #[arg(long = "q")]
    q: String,
    /// Skew parameter for qsd / holevo_skew when the tag has none.
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    log_base: LogBaseArg,
    /// First state: JSON file, fixture:NAME, or generator spec.
    state_a: String,
    /// Second state.
    state_b: String,
}

#[derive(Args, Serialize)]
struct SuiteArgs {
    /// One of: dpi, invariance, optimal-pair, plateau, joint-convexity, kadison, purity-bound, stinespring.
    #[arg(value_parser = parse_suite)]
    #[serde(serialize_with = "serialize_display")]
    name: SuiteName,
    /// Quantifier tags (repeatable); defaults to every quantifier the suite applies to.
    #[arg(long = "q")]
    q: Vec<String>,
    /// Skew parameters for qsd / holevo_skew tags without one (repeatable; default 0.5).
    #[arg(long)]
    mu: Vec<f64>,
    /// Dimension or inclusive range, e.g. 4 or 2..6.
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    /// Falls back to DIVERGELAB_SEED, then to a random seed (always recorded in the report).
    #[arg(long, env = "DIVERGELAB_SEED")]
    seed: Option<u64>,
    /// Pattern-search restarts (optimal-pair only).
    #[arg(long)]
    restarts: Option<usize>,
    /// Objective evaluations per restart (optimal-pair only).
    #[arg(long)]
    budget: Option<usize>,
    /// Report file; without it only summary lines are printed.
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Accepted for symmetry with eval; suite reports are always in nats.
    #[arg(long, value_enum, default_value_t)]
    log_base: LogBaseArg,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(value_enum)]
    name: CounterexampleName,
    /// Dimension of the traced-out factor (at least 2).
    #[arg(default_value_t = 2)]
    n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CounterexampleName {
    Hs,
    Dinf,
}

fn serialize_display<S: serde::Serializer>(v: &SuiteName, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn parse_suite(s: &str) -> Result<SuiteName, String> {
    s.parse().map_err(|e: divergelab::Error| e.to_string())
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure { code: 2, message: e.to_string() }
}

fn parse_quantifier(tag: &str, mu: Option<f64>) -> Result<QuantifierId, Failure> {
    if tag.contains(['(', ':']) {
        return tag.parse().map_err(usage);
    }
    let needs_mu = matches!(tag, "qsd" | "holevo_skew");
    QuantifierId::from_tag(tag, if needs_mu { Some(mu.unwrap_or(0.5)) } else { None }).map_err(usage)
}

fn cmd_eval(args: EvalArgs) -> Result<(), Failure> {
    let q = parse_quantifier(&args.q, args.mu)?;
    let a = load_state(&args.state_a).map_err(usage)?;
    let b = load_state(&args.state_b).map_err(usage)?;
    let v = evaluate(q, &a, &b).map_err(usage)?;
    println!("{}", format_value(LogBase::from(args.log_base).convert(q, v)));
    Ok(())
}

fn cmd_counterexample(args: CounterexampleArgs) -> Result<(), Failure> {
    let rec = match args.name {
        CounterexampleName::Hs => harness::hs_counterexample(args.n),
        CounterexampleName::Dinf => harness::dinf_counterexample(args.n),
    }
    .map_err(usage)?;
    println!("{} {} {}", format_number(rec.before), format_number(rec.after), format_number(rec.ratio));
    if !rec.matches(CLOSED_FORM_TOL) {
        return Err(Failure {
            code: 1,
            message: format!("closed forms {:?} missed by {:.3e}", rec.expected, rec.max_error),
        });
    }
    Ok(())
}

fn parse_dims(s: &str) -> Result<(usize, usize), Failure> {
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|_| usage(format!("bad dimension {s:?}")));
    match s.split_once("..") {
        Some((lo, hi)) => Ok((parse(lo)?, parse(hi.trim_start_matches('='))?)),
        None => {
            let d = parse(s)?;
            Ok((d, d))
        }
    }
}

fn default_quantifiers(suite: SuiteName, mu: Mu) -> Vec<QuantifierId> {
    use QuantifierId as Q;
    match suite {
        SuiteName::Kadison | SuiteName::PurityBound => vec![Q::HsDist],
        SuiteName::JointConvexity => {
            vec![Q::RelEntropy, Q::HsDist, Q::DInf, Q::Qsd(mu), Q::HolevoSkew(mu), Q::Qjs]
        }
        SuiteName::OptimalPair => Q::all(mu).into_iter().filter(QuantifierId::is_bounded).collect(),
        _ => Q::all(mu),
    }
}

#[derive(Serialize)]
struct RunConfig<'a> {
    command: &'static str,
    #[serde(flatten)]
    args: &'a SuiteArgs,
    quantifiers: Vec<QuantifierId>,
    seed_used: u64,
    dims_used: (usize, usize),
    trials_used: usize,
}

fn run_suite(
    args: &SuiteArgs,
    q: QuantifierId,
    dims: (usize, usize),
    trials: usize,
    seed: u64,
) -> divergelab::Result<Vec<PropertyReport>> {
    Ok(match args.name {
        SuiteName::Dpi => vec![harness::dpi_suite(q, trials, dims, seed)?],
        SuiteName::Invariance => harness::invariance_suite(q, trials, seed)?,
        SuiteName::Plateau => vec![harness::orthogonal_plateau_check(q, trials, dims, seed)?],
        SuiteName::JointConvexity => vec![harness::joint_convexity_suite(q, trials, seed)?],
        SuiteName::Kadison => vec![harness::kadison_bound_check(trials, seed)?],
        SuiteName::PurityBound => vec![harness::purity_bound_check(trials, seed)?],
        SuiteName::Stinespring => vec![harness::stinespring_dpi_equivalence(q, trials, seed)?],
        SuiteName::OptimalPair => {
            let defaults = PatternSearchConfig::default();
            let cfg = PatternSearchConfig {
                restarts: args.restarts.unwrap_or(defaults.restarts),
                budget: args.budget.unwrap_or(defaults.budget),
                ..defaults
            };
            (dims.0..=dims.1)
                .map(|d| harness::optimal_pair_search_with(q, d, cfg, seed).map(|r| r.to_report()))
                .collect::<divergelab::Result<Vec<_>>>()?
        }
    })
}

fn default_trials(suite: SuiteName) -> usize {
    match suite {
        SuiteName::Dpi => 500,
        SuiteName::JointConvexity | SuiteName::Kadison | SuiteName::PurityBound => 300,
        SuiteName::Stinespring => 50,
        SuiteName::OptimalPair => 1,
        SuiteName::Invariance | SuiteName::Plateau => 100,
    }
}

fn cmd_suite(args: SuiteArgs) -> Result<(), Failure> {
    let mus = if args.mu.is_empty() { vec![0.5] } else { args.mu.clone() };
    let mus = mus.into_iter().map(Mu::new).collect::<Result<Vec<_>, _>>().map_err(usage)?;
    let mut quantifiers = Vec::new();
    if args.q.is_empty() {
        for &mu in &mus {
            for q in default_quantifiers(args.name, mu) {
                if !quantifiers.contains(&q) {
                    quantifiers.push(q);
                }
            }
        }
    } else {
        for tag in &args.q {
            for &mu in &mus {
                let q = parse_quantifier(tag, Some(mu.get()))?;
                if !quantifiers.contains(&q) {
                    quantifiers.push(q);
                }
            }
        }
    }
    if args.name.is_quantifier_free() {
        quantifiers = vec![QuantifierId::HsDist];
    }
    let default_dims = if args.name == SuiteName::OptimalPair { (2, 4) } else { (2, 6) };
    let dims = args.dim.as_deref().map(parse_dims).transpose()?.unwrap_or(default_dims);
    let trials = args.trials.unwrap_or_else(|| default_trials(args.name));
    let seed = args.seed.unwrap_or_else(rand::random);

    let mut reports = Vec::new();
    for &q in &quantifiers {
        reports.extend(run_suite(&args, q, dims, trials, seed).map_err(usage)?);
    }
    for r in &reports {
        println!("{}", r.summary_line());
    }

    if let Some(path) = &args.out {
        let config = RunConfig {
            command: "suite",
            args: &args,
            quantifiers: quantifiers.clone(),
            seed_used: seed,
            dims_used: dims,
            trials_used: trials,
        };
        let file = File::create(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        match args.format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, &RunDocument::new(&config, &reports)).map_err(usage)?;
                writeln!(w).map_err(usage)?;
            }
            Format::Csv => write_csv(&mut w, &reports).map_err(usage)?,
        }
        w.flush().map_err(usage)?;
    }

    let failed: Vec<&PropertyReport> = reports.iter().filter(|r| !r.passed()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("{} report(s) violated a must-hold property (seed {seed})", failed.len()),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Suite(a) => cmd_suite(a),
        Command::Counterexample(a) => cmd_counterexample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = writeln!(io::stderr(), "error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
