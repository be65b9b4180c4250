//! Command-line front end. Every command writes one JSON or CSV document to
//! `--out` (stdout by default); floats carry 17 significant digits.
//!
//! Exit codes: 0 success, 2 usage or parse error, 3 contract violation,
//! 4 numerical failure (non-convergence, failed cross-check).

pub mod grid;

use crate::cusp_model::{relative_trace_exact, relative_trace_quadrature, ModelCuspPair, TraceDomain};
use crate::error::{Error, Result};
use crate::output::{float17, json_string};
use crate::polyakov::{cocycle_check, minimize_ops, polyakov_delta, MinimizeOptions, StepRule};
use crate::surface::synthetic::random_decaying_factor;
use crate::surface::{conformal_transform, gauss_bonnet, load_surface, ConformalFactor, DiscreteSurface};
use crate::trace_expansion::{
    expansion_from_geometry, fit_expansion, read_samples_file, ExpansionCoeffs, FitOptions, RelativeTrace,
};
use crate::zeta_det::{zeta_prime_zero, ZetaOptions, ZetaResult};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

pub const THREADS_ENV: &str = "CUSP_SPECTRA_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "cusp-spectra",
    version,
    about = "Relative determinants and conformal extremal metrics on surfaces with cusps"
)]
pub struct Cli {
    /// Tolerance for the command's acceptance check (defaults per command).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Output file (stdout if omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for random conformal factors.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; the CUSP_SPECTRA_THREADS environment variable takes precedence.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Model cusp trace: closed form against the quadrature oracle.
    ModelTrace(ModelTraceArgs),
    /// Relative determinant of a built-in model pair or a sampled trace.
    Det(DetArgs),
    /// Fit expansion coefficients to (t, R(t)) samples.
    FitExpansion(FitArgs),
    /// Conformal change of the log-determinant, with an optional cocycle check.
    Polyakov(PolyakovArgs),
    /// Minimize the uniformization functional.
    Uniformize(UniformizeArgs),
    /// Gauss–Bonnet residual, optionally after random conformal changes.
    GaussBonnet(GaussBonnetArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DomainArg {
    Full,
    Restricted,
}

impl From<DomainArg> for TraceDomain {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Full => TraceDomain::FullHalfLine,
            DomainArg::Restricted => TraceDomain::Restricted,
        }
    }
}

#[derive(Args, Debug)]
pub struct ModelTraceArgs {
    #[arg(long)]
    pub a: f64,
    #[arg(long, value_enum, default_value = "full")]
    pub domain: DomainArg,
    /// Time grid, e.g. `0.01:10:geometric:40`.
    #[arg(long, allow_hyphen_values = true, default_value = "0.01:10:geometric:40")]
    pub t: String,
}

#[derive(Args, Debug)]
pub struct DetArgs {
    /// Built-in model pair with this cusp start height.
    #[arg(long, conflicts_with = "samples")]
    pub model: Option<f64>,
    #[arg(long, value_enum, default_value = "full")]
    pub domain: DomainArg,
    /// CSV of (t, R(t)) samples.
    #[arg(long)]
    pub samples: Option<PathBuf>,
    /// JSON file with a0, a10, a11, a2.
    #[arg(long)]
    pub coeffs: Option<PathBuf>,
    /// Take the coefficients from area, Euler characteristic and cusp count.
    #[arg(long, requires_all = ["euler_char", "cusps"])]
    pub area: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub euler_char: Option<i64>,
    #[arg(long)]
    pub cusps: Option<u32>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub a0: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub a10: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub a11: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub a2: f64,
    /// Kernel offset h (large-t limit of the trace).
    #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
    pub offset: i64,
    /// Large-t decay rate; fitted from samples with t >= 1 when omitted.
    #[arg(long)]
    pub decay: Option<f64>,
    /// Split point of the Mellin integral.
    #[arg(long, default_value_t = 1.0)]
    pub split: f64,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Number of remainder terms fitted alongside the coefficients (0-3).
    #[arg(long, default_value_t = 3)]
    pub remainder_terms: usize,
}

#[derive(Args, Debug)]
pub struct FactorArgs {
    /// Seeded random decaying factor of this amplitude (used when no file is given).
    #[arg(long, default_value_t = 0.2)]
    pub amplitude: f64,
    /// Declared cusp decay order k of random factors.
    #[arg(long, default_value_t = 2.0)]
    pub decay_order: f64,
}

#[derive(Args, Debug)]
pub struct PolyakovArgs {
    #[arg(long)]
    pub surface: PathBuf,
    /// Conformal factor JSON (`values`, `decay_order`, `decay_bound`).
    #[arg(long)]
    pub phi: Option<PathBuf>,
    #[arg(long)]
    pub psi: Option<PathBuf>,
    /// Draw φ from the seed instead of reading a file.
    #[arg(long)]
    pub random: bool,
    /// Also check F(g, φ+ψ) = F(g, φ) + F(e^{2φ}g, ψ).
    #[arg(long)]
    pub cocycle: bool,
    #[command(flatten)]
    pub factor: FactorArgs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum StepArg {
    Gradient,
    Preconditioned,
}

#[derive(Args, Debug)]
pub struct UniformizeArgs {
    #[arg(long)]
    pub surface: PathBuf,
    /// Starting factor JSON; zero if omitted.
    #[arg(long, conflicts_with = "perturb")]
    pub phi0: Option<PathBuf>,
    /// Start from a seeded random decaying factor of this amplitude.
    #[arg(long)]
    pub perturb: Option<f64>,
    #[arg(long, default_value_t = 2.0)]
    pub decay_order: f64,
    #[arg(long, value_enum, default_value = "preconditioned")]
    pub step_rule: StepArg,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Stop when max |r| on free sites is below this (falls back to --tol, then 1e-8).
    #[arg(long)]
    pub grad_tol: Option<f64>,
    /// Shift φ at the end so that the area is 2π(2p + m − 2).
    #[arg(long)]
    pub normalize_area: bool,
    /// Write the iteration trace (iteration, functional, grad_norm, step) here.
    #[arg(long)]
    pub history: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GaussBonnetArgs {
    #[arg(long)]
    pub surface: PathBuf,
    /// Also apply this many seeded random decaying factors and compare.
    #[arg(long, default_value_t = 0)]
    pub random: usize,
    #[command(flatten)]
    pub factor: FactorArgs,
}

/// Rendered output and the exit status it implies.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub status: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self { text, status: 0 }
    }
}

fn tolerance(cli: &Cli, default: f64) -> Result<f64> {
    let tol = cli.tol.unwrap_or(default);
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Domain(format!("--tol must be positive, got {tol}")));
    }
    Ok(tol)
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{}: no such file", path.display()),
        )));
    }
    Ok(())
}

fn read_factor(path: &Path) -> Result<ConformalFactor> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Load { invariant: "schema".into(), detail: format!("{}: {e}", path.display()) })
}

/// Thread count: environment first, then `--threads`.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::Parse(format!("{THREADS_ENV}='{v}' is not a positive integer"))),
        Err(_) => match flag {
            Some(0) => Err(Error::Domain("--threads must be positive".into())),
            other => Ok(other),
        },
    }
}

#[derive(Serialize)]
struct DetOutput<'a> {
    source: serde_json::Value,
    #[serde(flatten)]
    result: &'a ZetaResult,
}

fn cmd_model_trace(cli: &Cli, args: &ModelTraceArgs) -> Result<Outcome> {
    let tol = tolerance(cli, 1e-8)?;
    let grid = grid::parse_grid(&args.t)?;
    let pair = ModelCuspPair::new(args.a, args.domain.into())?;
    let mut text = String::from("t,exact,quadrature,abs_diff\n");
    let mut worst = 0.0f64;
    for &t in &grid {
        let exact = relative_trace_exact(&pair, t)?;
        let quad = relative_trace_quadrature(&pair, t, (tol * 1e-2).min(1e-3))?;
        let diff = (exact - quad).abs();
        worst = worst.max(diff);
        text.push_str(&format!("{},{},{},{}\n", float17(t), float17(exact), float17(quad), float17(diff)));
    }
    Ok(Outcome { text, status: if worst > tol { 4 } else { 0 } })
}

fn coefficients(args: &DetArgs) -> Result<ExpansionCoeffs> {
    if let Some(path) = &args.coeffs {
        let text = std::fs::read_to_string(path)?;
        return serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())));
    }
    if let (Some(area), Some(chi), Some(m)) = (args.area, args.euler_char, args.cusps) {
        return expansion_from_geometry(area, chi, m);
    }
    Ok(ExpansionCoeffs { a0: args.a0, a10: args.a10, a11: args.a11, a2: args.a2 })
}

fn cmd_det(cli: &Cli, args: &DetArgs) -> Result<Outcome> {
    let opts = ZetaOptions { split: args.split, agreement_tol: tolerance(cli, 1e-6)?, ..ZetaOptions::default() };
    let (trace, source): (RelativeTrace, serde_json::Value) = match (&args.model, &args.samples) {
        (Some(a), None) => {
            let pair = ModelCuspPair::new(*a, args.domain.into())?;
            (pair.relative_trace(), serde_json::json!({"model": {"a": a, "domain": pair.domain()}}))
        }
        (None, Some(path)) => {
            require_file(path)?;
            if let Some(c) = &args.coeffs {
                require_file(c)?;
            }
            let samples = read_samples_file(path)?;
            let coeffs = coefficients(args)?;
            let trace = RelativeTrace::from_samples(&samples, coeffs, args.offset, args.decay)?;
            let source = serde_json::json!({
                "samples": path.display().to_string(),
                "count": samples.len(),
                "coeffs": coeffs,
                "kernel_offset": args.offset,
                "decay_rate": trace.decay_rate,
            });
            (trace, source)
        }
        _ => return Err(Error::Domain("give exactly one of --model or --samples".into())),
    };
    let result = zeta_prime_zero(&trace, &opts)?;
    Ok(Outcome::ok(json_string(&DetOutput { source, result: &result })?))
}

fn cmd_fit(_cli: &Cli, args: &FitArgs) -> Result<Outcome> {
    require_file(&args.input)?;
    let samples = read_samples_file(&args.input)?;
    let report =
        fit_expansion(&samples, FitOptions { remainder_terms: args.remainder_terms, ..FitOptions::default() })?;
    Ok(Outcome::ok(json_string(&report)?))
}

fn load(path: &Path) -> Result<DiscreteSurface> {
    require_file(path)?;
    Ok(load_surface(path)?.surface)
}

fn cmd_polyakov(cli: &Cli, args: &PolyakovArgs) -> Result<Outcome> {
    for p in [&args.phi, &args.psi].into_iter().flatten() {
        require_file(p)?;
    }
    let surf = load(&args.surface)?;
    let tol = tolerance(cli, 10.0 * surf.tolerance())?;
    let random = |seed: u64| random_decaying_factor(&surf, seed, args.factor.amplitude, args.factor.decay_order);
    let phi = match &args.phi {
        Some(p) => read_factor(p)?,
        None if args.random || args.cocycle => random(cli.seed),
        None => ConformalFactor::zero(surf.sites()),
    };
    let delta = polyakov_delta(&surf, &phi)?;
    let mut out = serde_json::json!({ "surface": surf.name(), "sites": surf.sites(), "delta": delta });
    let mut status = 0;
    if args.cocycle {
        let psi = match &args.psi {
            Some(p) => read_factor(p)?,
            None => random(cli.seed.wrapping_add(1)),
        };
        let check = cocycle_check(&surf, &phi, &psi)?;
        let passed = check.residual.abs() < tol;
        if !passed {
            status = 4;
        }
        out["cocycle"] = serde_json::json!({ "check": check, "tolerance": tol, "passed": passed });
    }
    Ok(Outcome { text: json_string(&out)?, status })
}

fn cmd_uniformize(cli: &Cli, args: &UniformizeArgs) -> Result<Outcome> {
    if let Some(p) = &args.phi0 {
        require_file(p)?;
    }
    let surf = load(&args.surface)?;
    let grad_tol = match args.grad_tol {
        Some(g) => g,
        None => tolerance(cli, 1e-8)?,
    };
    let phi0 = match (&args.phi0, args.perturb) {
        (Some(p), _) => read_factor(p)?,
        (None, Some(amp)) => random_decaying_factor(&surf, cli.seed, amp, args.decay_order),
        (None, None) => ConformalFactor::new(vec![0.0; surf.sites()], args.decay_order, 0.0),
    };
    let opts = MinimizeOptions {
        step_rule: match args.step_rule {
            StepArg::Gradient => StepRule::Gradient,
            StepArg::Preconditioned => StepRule::Preconditioned,
        },
        max_iter: args.max_iter,
        grad_tol,
        area_normalization: args.normalize_area,
        ..MinimizeOptions::default()
    };
    let report = minimize_ops(&surf, &phi0, &opts)?;
    if let Some(path) = &args.history {
        std::fs::write(path, report.history_csv())?;
    }
    Ok(Outcome { text: json_string(&report)?, status: if report.converged { 0 } else { 4 } })
}

fn cmd_gauss_bonnet(cli: &Cli, args: &GaussBonnetArgs) -> Result<Outcome> {
    let surf = load(&args.surface)?;
    let base = gauss_bonnet(&surf)?;
    let tol = tolerance(cli, 10.0 * surf.tolerance())?;
    let mut changes = Vec::with_capacity(args.random);
    for k in 0..args.random {
        let phi = random_decaying_factor(
            &surf,
            cli.seed.wrapping_add(k as u64),
            args.factor.amplitude,
            args.factor.decay_order,
        );
        let h = conformal_transform(&surf, &phi)?;
        changes.push(gauss_bonnet(&h)?.integral - base.integral);
    }
    let max_change = changes.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let invariant = max_change < tol;
    let out = serde_json::json!({
        "surface": surf.name(),
        "gauss_bonnet": base,
        "conformal_changes": changes,
        "max_change": max_change,
        "tolerance": tol,
        "invariant": invariant,
    });
    let status = if base.passed && invariant { 0 } else { 4 };
    Ok(Outcome { text: json_string(&out)?, status })
}

/// Run a parsed command line and return its output.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    if let Some(out) = &cli.out {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            if !parent.is_dir() {
                return Err(Error::Io(std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("output directory {} does not exist", parent.display()),
                )));
            }
        }
    }
    match &cli.command {
        Command::ModelTrace(a) => cmd_model_trace(cli, a),
        Command::Det(a) => cmd_det(cli, a),
        Command::FitExpansion(a) => cmd_fit(cli, a),
        Command::Polyakov(a) => cmd_polyakov(cli, a),
        Command::Uniformize(a) => cmd_uniformize(cli, a),
        Command::GaussBonnet(a) => cmd_gauss_bonnet(cli, a),
    }
}

fn configure_threads(flag: Option<usize>) -> Result<()> {
    if let Some(n) = thread_count(flag)? {
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Full process behaviour: parse, run, write, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = configure_threads(cli.threads).and_then(|_| execute(&cli)).and_then(|outcome| {
        match &cli.out {
            Some(path) => std::fs::write(path, &outcome.text)?,
            None => print!("{}", outcome.text),
        }
        Ok(outcome.status)
    });
    match result {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
