//! The `phantom` command-line driver.
//!
//! Every command renders a canonical JSON document (see [`canonical`]); the
//! binary only decides where it goes and which exit code to return.

pub mod canonical;
pub mod document;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use phantom_core::adversarial::search::{search_max_loss, Family, SearchReport};
use phantom_core::constructions::{build, verify, ConstructionSpec, Theorem};
use phantom_core::suites::{run_suite, Suite};
use phantom_core::{Division, Error, LossReport, Mechanism, SIMPLEX_TOL};
use serde_json::{json, Value};

use crate::canonical::to_canonical;
use crate::document::{read_profile, ProfileDocument};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Exit codes. Each failure maps to exactly one.
pub mod exit {
    pub const OK: i32 = 0;
    pub const VIOLATION: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const INVARIANT: i32 = 3;
    pub const MISMATCH: i32 = 4;
    pub const NUMERICAL: i32 = 5;
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Parse(String),
    Io(String),
    Invariant(String),
    Core(Error),
    /// A verification ran and failed; carries the rendered report.
    Violation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violation(_) => exit::VIOLATION,
            CliError::Usage(_) | CliError::Parse(_) | CliError::Io(_) => exit::USAGE,
            CliError::Invariant(_) => exit::INVARIANT,
            CliError::Core(e) => match e {
                Error::InvalidParameter(_) => exit::USAGE,
                Error::DimensionMismatch { .. }
                | Error::InvalidDivision(_)
                | Error::InvalidProfile(_)
                | Error::Precondition(_) => exit::INVARIANT,
                Error::ProjectCountMismatch { .. } | Error::MechanismMismatch(_) => exit::MISMATCH,
                Error::BracketViolated { .. } | Error::NoConvergence(_) => exit::NUMERICAL,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Invariant(m) => write!(f, "invalid input: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Violation(_) => write!(f, "verification failed"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

#[derive(Debug, Parser)]
#[command(name = "phantom", version, about = "Moving phantom budget aggregation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Write the JSON document here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a mechanism on a profile.
    Aggregate(AggregateArgs),
    /// Loss of a given outcome on a profile.
    Loss(LossArgs),
    /// Emit a lower-bound construction and its predicted loss.
    Construct(ConstructArgs),
    /// Stratified search for the largest loss on three projects.
    Search(SearchArgs),
    /// Run a property suite, or check a construction against a mechanism.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Profile file (JSON or CSV).
    pub path: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub mechanism: String,
    /// Tolerance on the feasibility sum at t*.
    #[arg(long, default_value_t = SIMPLEX_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct LossArgs {
    pub path: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Comma-separated shares, e.g. `0.5,0.5`.
    #[arg(long)]
    pub outcome: String,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    pub theorem: Option<String>,
    #[arg(long = "theorem")]
    pub theorem_flag: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Also run this mechanism on the construction and compare.
    #[arg(long)]
    pub mechanism: Option<String>,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    pub mechanism: Option<String>,
    #[arg(long = "mechanism")]
    pub mechanism_flag: Option<String>,
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Project count; must match the mechanism (3, or 2 for uniform).
    #[arg(long)]
    pub m: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub suite: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub theorem: Option<String>,
    #[arg(long)]
    pub mechanism: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
}

fn pick<T>(positional: Option<T>, flag: Option<T>, what: &str) -> Result<T, CliError> {
    match (positional, flag) {
        (Some(_), Some(_)) => Err(CliError::Usage(format!("{what} given twice"))),
        (Some(v), None) | (None, Some(v)) => Ok(v),
        (None, None) => Err(CliError::Usage(format!("missing {what}"))),
    }
}

fn loss_document(mechanism: Option<&str>, m: usize, n: usize, r: &LossReport) -> Value {
    let mut v = json!({
        "m": m,
        "n": n,
        "outcome": r.outcome.shares(),
        "proportional": r.proportional.shares(),
        "loss": r.loss,
    });
    if let Some(mech) = mechanism {
        v["mechanism"] = json!(mech);
    }
    if let Some(t) = r.tstar {
        v["tstar"] = json!(t);
    }
    v
}

fn parse_shares(s: &str) -> Result<Vec<f64>, CliError> {
    s.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| CliError::Parse(format!("outcome `{p}`: {e}"))))
        .collect()
}

fn aggregate(a: AggregateArgs) -> Result<Value, CliError> {
    let path = pick(a.path, a.input, "input profile")?;
    let mechanism: Mechanism = a.mechanism.parse()?;
    if a.tol.is_nan() || a.tol <= 0.0 {
        return Err(CliError::Usage(format!("--tol must be positive, got {}", a.tol)));
    }
    let profile = read_profile(&path)?.to_profile()?;
    let r = mechanism.run_with_tol(&profile, a.tol)?;
    Ok(loss_document(Some(mechanism.descriptor()), profile.m(), profile.n(), &r))
}

fn loss(a: LossArgs) -> Result<Value, CliError> {
    let path = pick(a.path, a.input, "input profile")?;
    let profile = read_profile(&path)?.to_profile()?;
    let outcome = Division::new(parse_shares(&a.outcome)?)?;
    let r = LossReport::new(&profile, outcome, None)?;
    Ok(loss_document(None, profile.m(), profile.n(), &r))
}

fn construct(a: ConstructArgs) -> Result<Value, CliError> {
    let theorem: Theorem = pick(a.theorem, a.theorem_flag, "theorem")?.parse()?;
    let c = build(&ConstructionSpec::new(theorem, a.m, a.n)?)?;
    let mut doc = json!({
        "theorem": theorem.tag(),
        "m": c.spec.m,
        "n": c.spec.n,
        "profile": ProfileDocument::from_profile(&c.profile),
        "prediction": {
            "loss": c.predicted_loss,
            "kind": c.kind,
            "closed_form": c.closed_form,
            "theorem_bound": c.theorem_bound,
            "expected_outcome": c.expected_outcome,
        },
    });
    if let Some(mech) = a.mechanism {
        let report = verify(&c, mech.parse()?)?;
        let pass = report.pass;
        doc["verification"] = serde_json::to_value(&report).map_err(|e| CliError::Parse(e.to_string()))?;
        if !pass {
            return Err(CliError::Violation(to_canonical(&doc)));
        }
    }
    Ok(doc)
}

/// Maps a mechanism descriptor to the search family, checking `--m`.
pub fn search_family(descriptor: &str, m: Option<usize>) -> Result<Family, CliError> {
    let mechanism: Mechanism = descriptor.parse()?;
    let family = match mechanism {
        Mechanism::Phantom(kind) => kind.descriptor().parse::<Family>().map_err(|_| {
            CliError::Core(Error::MechanismMismatch(format!("no relaxed search for `{descriptor}`")))
        })?,
        Mechanism::Utilitarian => {
            return Err(CliError::Core(Error::MechanismMismatch("the utilitarian rule has no phantoms".into())))
        }
    };
    let want = if family == Family::UniformTwo { 2 } else { 3 };
    match m {
        Some(m) if m != want => Err(CliError::Core(Error::ProjectCountMismatch { expected: want.to_string(), got: m })),
        _ => Ok(family),
    }
}

pub fn search_document(r: &SearchReport) -> Value {
    let witness = r.witness.as_ref().map(|w| {
        json!({
            "n": w.n,
            "loss": w.loss,
            "relaxed_loss": w.relaxed_loss,
            "outcome": w.outcome.shares(),
            "tstar": w.tstar,
            "profile": w.three_type,
        })
    });
    json!({
        "version": VERSION,
        "mechanism": r.family.descriptor(),
        "budget": r.budget,
        "seed": r.seed,
        "best_loss": r.best_loss,
        "best_pattern": r.best_stratum.map(|i| r.rows[i].pattern.clone()),
        "best": r.best,
        "witness": witness,
        "rows": r.rows.iter().map(|row| json!({
            "pattern": row.pattern,
            "status": row.status,
            "best_lower_bound": row.loss,
            "objective": row.objective,
            "witness": row.witness,
        })).collect::<Vec<_>>(),
    })
}

fn search(a: SearchArgs) -> Result<Value, CliError> {
    let descriptor = pick(a.mechanism, a.mechanism_flag, "mechanism")?;
    if a.budget == 0 {
        return Err(CliError::Usage("--budget must be at least 1".into()));
    }
    let family = search_family(&descriptor, a.m)?;
    Ok(search_document(&search_max_loss(family, a.budget, a.seed)?))
}

fn verify_cmd(a: VerifyArgs) -> Result<Value, CliError> {
    match (a.suite, a.theorem) {
        (Some(suite), None) => {
            let suite: Suite = suite.parse()?;
            let trials = a.trials.unwrap_or(suite.default_trials());
            let report = run_suite(suite, trials, a.seed)?;
            let mut doc = serde_json::to_value(&report).map_err(|e| CliError::Parse(e.to_string()))?;
            doc["version"] = json!(VERSION);
            if report.pass {
                Ok(doc)
            } else {
                Err(CliError::Violation(to_canonical(&doc)))
            }
        }
        (None, Some(theorem)) => {
            let mech = a.mechanism.ok_or_else(|| CliError::Usage("--theorem needs --mechanism".into()))?;
            construct(ConstructArgs { theorem: Some(theorem), theorem_flag: None, m: a.m, n: a.n, mechanism: Some(mech) })
                .map(|mut doc| {
                    doc.as_object_mut().map(|o| o.remove("profile"));
                    doc
                })
                .map_err(|e| match e {
                    CliError::Violation(text) => {
                        let mut doc: Value = serde_json::from_str(&text).expect("rendered by us");
                        doc.as_object_mut().map(|o| o.remove("profile"));
                        CliError::Violation(to_canonical(&doc))
                    }
                    other => other,
                })
        }
        (Some(_), Some(_)) => Err(CliError::Usage("give a suite or --theorem, not both".into())),
        (None, None) => Err(CliError::Usage("missing suite name".into())),
    }
}

/// Runs a parsed command and renders its document.
pub fn execute(cli: Cli) -> Result<String, CliError> {
    let doc = match cli.command {
        Command::Aggregate(a) => aggregate(a)?,
        Command::Loss(a) => loss(a)?,
        Command::Construct(a) => construct(a)?,
        Command::Search(a) => search(a)?,
        Command::Verify(a) => verify_cmd(a)?,
    };
    Ok(to_canonical(&doc))
}

/// Parses `args`, runs the command and writes the document to `--output` or
/// returns it for stdout. Returns the exit code alongside.
pub fn run<I, T>(args: I) -> (i32, String, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            return if code == exit::OK { (code, e.to_string(), String::new()) } else { (code, String::new(), e.to_string()) };
        }
    };
    let output = cli.output.clone();
    let (code, text, err) = match execute(cli) {
        Ok(text) => (exit::OK, text, String::new()),
        Err(CliError::Violation(text)) => (exit::VIOLATION, text, "verification failed\n".to_string()),
        Err(e) => (e.exit_code(), String::new(), format!("error: {e}\n")),
    };
    match output {
        Some(path) if !text.is_empty() => match std::fs::write(&path, &text) {
            Ok(()) => (code, String::new(), err),
            Err(e) => (exit::USAGE, String::new(), format!("error: {}: {e}\n", path.display())),
        },
        _ => (code, text, err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_code_table() {
        assert_eq!(CliError::Violation(String::new()).exit_code(), 1);
        assert_eq!(CliError::Parse("x".into()).exit_code(), 2);
        assert_eq!(CliError::Invariant("x".into()).exit_code(), 3);
        assert_eq!(CliError::Core(Error::MechanismMismatch("x".into())).exit_code(), 4);
        assert_eq!(CliError::Core(Error::ProjectCountMismatch { expected: "2".into(), got: 3 }).exit_code(), 4);
        assert_eq!(CliError::Core(Error::NoConvergence("x".into())).exit_code(), 5);
        let bracket = Error::BracketViolated { system: "pu".into(), low: 1.5, high: 2.0 };
        assert_eq!(CliError::Core(bracket).exit_code(), 5);
    }

    #[test]
    fn search_families() {
        assert_eq!(search_family("pu", None).unwrap(), Family::PiecewiseUniform);
        assert_eq!(search_family("uniform", Some(2)).unwrap(), Family::UniformTwo);
        assert_eq!(search_family("uniform", Some(3)).unwrap_err().exit_code(), 4);
        assert_eq!(search_family("utilitarian", None).unwrap_err().exit_code(), 4);
    }

    #[test]
    fn shares_parse() {
        assert_eq!(parse_shares("[0.5, 0.5]").unwrap(), vec![0.5, 0.5]);
        assert!(parse_shares("a,b").is_err());
    }
}
