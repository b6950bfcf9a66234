//! Command-line front end.
//!
//! Exit codes: 0 success (a `+∞` divergence is a success), 1 malformed input
//! or usage, 2 precondition violation, 3 conditioning failure, 4 a suite ran
//! and at least one trial failed.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nclp_core::divergence::{self, DivergenceParams, DivergenceValue};
use nclp_core::lp::{self, KosakiSpec, LpExponent};
use nclp_core::tensorprod::{self, TensorAlgebra};
use nclp_core::{Error, SpectralConfig};
use serde_json::json;

use crate::format::{self, FormatError, Kind, MatrixFile};
use crate::propsuite::{self, SuiteConfig, SuiteError, SuiteName};
use crate::report::{self, RunReport, Status};

/// Environment variable consulted for the kernel threshold when `--eps-rel` is absent.
pub const EPS_ENV: &str = "NCLP_EPS_REL";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_PRECONDITION: i32 = 2;
pub const EXIT_CONDITIONING: i32 = 3;
pub const EXIT_SUITE_FAILED: i32 = 4;

const SUITE_NAMES: [&str; 10] = [
    "lemma1",
    "lemma3",
    "lemma5",
    "theorem6",
    "corollary7",
    "lemma8",
    "lemma9",
    "prop11",
    "appendixA",
    "dpi",
];

#[derive(Parser, Debug)]
#[command(name = "nclp", version, about = "Noncommutative L^p norms and Renyi divergences on block matrix algebras")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sandwiched or alpha-z Renyi divergence D(psi || phi).
    Divergence(DivergenceArgs),
    /// Schatten norm of an element, or its Kosaki L^p(M, phi)_eta norm.
    LpNorm(LpNormArgs),
    /// Tensor product of two matrix files.
    Tensor(TensorArgs),
    /// Run a named property suite and emit a JSON report.
    Suite(SuiteArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum DivergenceKind {
    Sandwiched,
    AlphaZ,
}

#[derive(Args, Debug)]
struct DivergenceArgs {
    #[arg(long, value_enum)]
    kind: DivergenceKind,
    #[arg(long, allow_negative_numbers = true)]
    alpha: f64,
    /// Required with --kind alpha-z.
    #[arg(long, allow_negative_numbers = true)]
    z: Option<f64>,
    #[arg(long)]
    psi: PathBuf,
    #[arg(long)]
    phi: PathBuf,
    /// Emit a JSON run report instead of text.
    #[arg(long)]
    json: bool,
    #[arg(long)]
    eps_rel: Option<f64>,
}

#[derive(Args, Debug)]
struct LpNormArgs {
    /// Exponent; `inf` for the operator norm.
    #[arg(long, value_parser = parse_exponent, allow_negative_numbers = true)]
    p: f64,
    #[arg(long)]
    x: PathBuf,
    /// Treat --x as an element of L^p(M, phi)_eta.
    #[arg(long, requires_all = ["phi", "eta"])]
    kosaki: bool,
    #[arg(long, requires = "kosaki")]
    phi: Option<PathBuf>,
    #[arg(long, requires = "kosaki", allow_negative_numbers = true)]
    eta: Option<f64>,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    eps_rel: Option<f64>,
}

#[derive(Args, Debug)]
struct TensorArgs {
    #[arg(long)]
    left: PathBuf,
    #[arg(long)]
    right: PathBuf,
    #[arg(short = 'o', long = "out")]
    out: PathBuf,
    #[arg(long)]
    eps_rel: Option<f64>,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    #[arg(long, value_parser = PossibleValuesParser::new(SUITE_NAMES).map(|s| s.parse::<SuiteName>().expect("listed name")))]
    name: SuiteName,
    #[arg(long)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Comma-separated profiles such as 2x2,3x2,2+3x2; defaults depend on the suite.
    #[arg(long)]
    dims: Option<String>,
    /// Replace a tolerance, e.g. --tol-override relative_error=1e-9 (repeatable).
    #[arg(long = "tol-override", value_name = "KEY=VALUE")]
    tol_override: Vec<String>,
    /// Write the report here and print a summary line instead.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    eps_rel: Option<f64>,
}

fn parse_exponent(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| e.to_string()),
    }
}

#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        Self::input(e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Shape(_) => EXIT_INPUT,
            Error::Conditioning { .. } => EXIT_CONDITIONING,
            _ => EXIT_PRECONDITION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<SuiteError> for Failure {
    fn from(e: SuiteError) -> Self {
        Self::input(e.to_string())
    }
}

/// `--eps-rel`, else `NCLP_EPS_REL`, else the default.
fn spectral_config(flag: Option<f64>) -> Result<SpectralConfig, Failure> {
    let eps = match flag {
        Some(e) => e,
        None => match std::env::var(EPS_ENV) {
            Ok(v) => v
                .trim()
                .parse::<f64>()
                .map_err(|_| Failure::input(format!("{EPS_ENV}={v:?} is not a number")))?,
            Err(_) => return Ok(SpectralConfig::default()),
        },
    };
    SpectralConfig::new(eps).map_err(|e| Failure::input(e.to_string()))
}

/// Shortest round-trip decimal, or `inf`.
fn show(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else {
        format!("{x}")
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_INPUT,
            };
            let sink: &mut dyn Write = if code == EXIT_OK { out } else { err };
            let rendered = e.render().to_string();
            let _ = write!(sink, "{rendered}");
            if code != EXIT_OK && !rendered.contains("Usage:") {
                let _ = writeln!(sink, "\n{}", usage_for(&args));
            }
            return code;
        }
    };
    let json = match &cli.command {
        Command::Divergence(a) => a.json,
        Command::LpNorm(a) => a.json,
        _ => false,
    };
    let outcome = match cli.command {
        Command::Divergence(a) => cmd_divergence(&a, out),
        Command::LpNorm(a) => cmd_lp_norm(&a, out),
        Command::Tensor(a) => cmd_tensor(&a, out),
        Command::Suite(a) => cmd_suite(&a, out),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            if json {
                let mut r = RunReport::new("error", &SpectralConfig::default());
                r.fail_with(f.message.clone());
                r.summary.insert("exit_code".into(), json!(f.code));
                let _ = write!(out, "{}", r.to_json());
            }
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn divergence_params(a: &DivergenceArgs) -> Result<DivergenceParams, Failure> {
    Ok(match (a.kind, a.z) {
        (DivergenceKind::Sandwiched, None) => DivergenceParams::sandwiched(a.alpha)?,
        (DivergenceKind::Sandwiched, Some(_)) => return Err(Failure::input("--z only applies to --kind alpha-z")),
        (DivergenceKind::AlphaZ, Some(z)) => DivergenceParams::alpha_z(a.alpha, z)?,
        (DivergenceKind::AlphaZ, None) => return Err(Failure::input("--kind alpha-z needs --z")),
    })
}

fn value_json(v: &DivergenceValue) -> serde_json::Value {
    json!({"value": format::number(v.value()), "reason": v.reason().code()})
}

fn cmd_divergence(a: &DivergenceArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = spectral_config(a.eps_rel)?;
    let params = divergence_params(a)?;
    let psi = format::read(&a.psi, &cfg)?.to_functional(&cfg)?;
    let phi = format::read(&a.phi, &cfg)?.to_functional(&cfg)?;
    let q = divergence::q_tilde(&psi, &phi, &params, &cfg)?;
    let d = divergence::d_from_q(q, params.alpha(), psi.mass(), phi.is_zero());
    if a.json {
        let mut r = RunReport::new("divergence", &cfg);
        r.echo("kind", json!(if params.is_sandwiched() { "sandwiched" } else { "alpha-z" }))
            .echo("alpha", format::number(params.alpha()))
            .echo("z", format::number(params.z()))
            .echo("psi", json!(path_str(&a.psi)))
            .echo("phi", json!(path_str(&a.phi)));
        r.results.push(json!({"Q": value_json(&q), "D": value_json(&d)}));
        write!(out, "{}", r.to_json()).map_err(|e| Failure::input(e.to_string()))?;
    } else {
        writeln!(out, "Q={} reason={}", show(q.value()), q.reason())
            .and_then(|_| writeln!(out, "D={} reason={}", show(d.value()), d.reason()))
            .map_err(|e| Failure::input(e.to_string()))?;
    }
    Ok(EXIT_OK)
}

fn cmd_lp_norm(a: &LpNormArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = spectral_config(a.eps_rel)?;
    let p = LpExponent::new(a.p)?;
    let x = format::read(&a.x, &cfg)?.element;
    let norm = if a.kosaki {
        let phi_path = a.phi.as_ref().ok_or_else(|| Failure::input("--kosaki needs --phi"))?;
        let eta = a.eta.ok_or_else(|| Failure::input("--kosaki needs --eta"))?;
        let phi = format::read(phi_path, &cfg)?.to_functional(&cfg)?;
        let spec = KosakiSpec::new(&phi, p, eta, &cfg)?;
        lp::kosaki_norm(&x, &spec)?
    } else {
        lp::lp_norm(&x, p)
    };
    if a.json {
        let mut r = RunReport::new("lp-norm", &cfg);
        r.echo("p", format::number(p.value()))
            .echo("x", json!(path_str(&a.x)))
            .echo("kosaki", json!(a.kosaki));
        if let (Some(phi), Some(eta)) = (&a.phi, a.eta) {
            r.echo("phi", json!(path_str(phi))).echo("eta", format::number(eta));
        }
        r.results.push(json!({"norm": format::number(norm)}));
        write!(out, "{}", r.to_json()).map_err(|e| Failure::input(e.to_string()))?;
    } else {
        writeln!(out, "norm={}", show(norm)).map_err(|e| Failure::input(e.to_string()))?;
    }
    Ok(EXIT_OK)
}

fn cmd_tensor(a: &TensorArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = spectral_config(a.eps_rel)?;
    let left = format::read(&a.left, &cfg)?;
    let right = format::read(&a.right, &cfg)?;
    let t = TensorAlgebra::new(left.algebra(), right.algebra());
    let product = tensorprod::kron_element(&t, &left.element, &right.element)?;
    let kind = if left.kind == Kind::Functional && right.kind == Kind::Functional {
        Kind::Functional
    } else {
        Kind::Element
    };
    format::write(&a.out, &MatrixFile { kind, element: product })?;
    writeln!(out, "wrote {}", a.out.display()).map_err(|e| Failure::input(e.to_string()))?;
    Ok(EXIT_OK)
}

fn cmd_suite(a: &SuiteArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let cfg = spectral_config(a.eps_rel)?;
    let mut config = SuiteConfig::new(a.name, a.trials, a.seed).with_spectral(cfg);
    if let Some(d) = &a.dims {
        config = config.with_dims(propsuite::parse_dims(d)?);
    }
    for o in &a.tol_override {
        config = config.with_override(o)?;
    }
    let trials = propsuite::run_suite(&config)?;
    let report = report::suite_report(&config, &trials);
    let io = |e: std::io::Error| Failure::input(e.to_string());
    match &a.out {
        Some(path) => {
            std::fs::write(path, report.to_json()).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
            writeln!(
                out,
                "suite={} trials={} passed={} failed={} status={}",
                config.name,
                trials.len(),
                report.summary["passed"],
                report.summary["failed"],
                report.status.as_str()
            )
            .map_err(io)?;
        }
        None => write!(out, "{}", report.to_json()).map_err(io)?,
    }
    Ok(if report.status == Status::Ok { EXIT_OK } else { EXIT_SUITE_FAILED })
}

fn usage_for(args: &[OsString]) -> clap::builder::StyledStr {
    use clap::CommandFactory;
    let mut cmd = Cli::command();
    cmd.build();
    let name = args
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| cmd.find_subcommand(a).is_some())
        .map(str::to_owned);
    match name.and_then(|n| cmd.find_subcommand_mut(&n)) {
        Some(sub) => sub.render_usage(),
        None => cmd.render_usage(),
    }
}
