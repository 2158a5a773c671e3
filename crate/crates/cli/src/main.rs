//! Command-line front end for stepcross.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use stepcross::cross::{enumerate_cross, lacunary_tail_sum};
use stepcross::gridpath::{project_sharp, sharp_residual, SampledGrid};
use stepcross::kernels::eval_a_star;
use stepcross::norms::{block_lp_norm, factor_lp_norm_rel_error, QuadratureSpec};
use stepcross::rates::{format_exponent, run_theorem1, run_theorem2, verify_lemma_brackets, RateReport, SupSettings};
use stepcross::{CrossSpec, MultiIndex, SmoothnessProfile};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lib(#[from] stepcross::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Bracket(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use stepcross::Error as E;
        match self {
            Self::Usage(_) => 2,
            Self::Bracket(_) => 3,
            Self::Lib(E::Validation(_) | E::Domain(_) | E::DimensionMismatch { .. } | E::Nyquist { .. }) => 2,
            Self::Lib(_) => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Step hyperbolic cross approximation: index sets, kernels, norms and rate experiments.
#[derive(Parser)]
#[command(name = "stepcross", version)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    format: Format,
    /// Write results to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Cap on worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Cross index sets.
    #[command(subcommand)]
    Cross(CrossCmd),
    /// Single-block kernels.
    #[command(subcommand)]
    Kernel(KernelCmd),
    /// Norm brackets and lacunary sums.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Approximation-rate experiments.
    #[command(subcommand)]
    Rates(RatesCmd),
    /// Sampled-grid operations.
    #[command(subcommand)]
    Grid(GridCmd),
}

#[derive(Subcommand)]
enum CrossCmd {
    /// List every index s with (s, gamma) <= n.
    Enum {
        #[arg(long)]
        d: usize,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        gamma: Vec<f64>,
        #[arg(long)]
        n: u32,
    },
}

#[derive(Subcommand)]
enum KernelCmd {
    /// Value of the block kernel A*_s at x.
    Eval {
        #[arg(long, value_delimiter = ',')]
        s: Vec<u32>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
    },
    /// L_p norm of the block kernel A*_s.
    Norm {
        #[arg(long, value_delimiter = ',')]
        s: Vec<u32>,
        /// Exponent in [1, inf]; `inf` gives the sup norm.
        #[arg(long, value_parser = parse_real)]
        p: f64,
        /// Largest accepted relative error of the value.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Sup norm of single blocks against 2^{||s||_1}.
    Lemma1(BracketArgs),
    /// L_p norm of single blocks against 2^{||s||_1 (1 - 1/p)}.
    Lemma2(BracketArgs),
    /// Lacunary sum over the cross complement, against 2^{-alpha n} n^{nu-1}.
    #[command(name = "lemma-v")]
    LemmaV(LacunaryArgs),
    /// Lacunary sum with a second direction, against 2^{-alpha n}.
    #[command(name = "lemma-g")]
    LemmaG(LacunaryArgs),
}

#[derive(Args)]
struct BracketArgs {
    #[arg(long)]
    d: usize,
    /// Smallest scale per coordinate.
    #[arg(long, default_value_t = 1)]
    smin: u32,
    /// Largest scale per coordinate.
    #[arg(long)]
    smax: u32,
    /// Norm exponent (lemma2 only; lemma1 always uses inf).
    #[arg(long, value_parser = parse_real, default_value = "inf")]
    p: f64,
    /// Largest accepted max/min ratio.
    #[arg(long, default_value_t = 1.05)]
    max_bracket: f64,
}

#[derive(Args)]
struct LacunaryArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    /// Direction of the summation constraint (defaults to gamma).
    #[arg(long, value_delimiter = ',')]
    alt_gamma: Option<Vec<f64>>,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    nmin: u32,
    #[arg(long)]
    nmax: u32,
    /// Absolute tolerance of each sum.
    #[arg(long, default_value_t = 1e-14)]
    tol: f64,
    /// Largest accepted max/min ratio.
    #[arg(long, default_value_t = 2.5)]
    max_bracket: f64,
}

#[derive(Subcommand)]
enum RatesCmd {
    /// Uniform-norm error of the extremal functions.
    Theorem1 {
        #[arg(long, value_delimiter = ',')]
        r: Vec<f64>,
        #[arg(long, value_parser = parse_real)]
        theta: f64,
        #[arg(long)]
        nmin: u32,
        #[arg(long)]
        nmax: u32,
        /// Sup-norm search points per finest period.
        #[arg(long, default_value_t = 16)]
        resolution: u32,
        /// Golden-section polish steps.
        #[arg(long, default_value_t = 4)]
        refine_steps: u32,
        /// Largest accepted ratio spread.
        #[arg(long, default_value_t = 2.5)]
        max_spread: f64,
    },
    /// L_q error of the extremal functions.
    Theorem2 {
        #[arg(long, value_delimiter = ',')]
        r: Vec<f64>,
        #[arg(long, value_parser = parse_real)]
        theta: f64,
        #[arg(long, value_parser = parse_real)]
        q: f64,
        #[arg(long)]
        nmin: u32,
        #[arg(long)]
        nmax: u32,
        /// Initial quadrature box half-width.
        #[arg(long = "quad-L")]
        quad_l: Option<f64>,
        /// Quadrature points per finest wavelength.
        #[arg(long)]
        quad_res: Option<u32>,
        /// Relative tail tolerance.
        #[arg(long)]
        tail_tol: Option<f64>,
        /// Largest accepted ratio spread.
        #[arg(long, default_value_t = 2.5)]
        max_spread: f64,
    },
}

#[derive(Subcommand)]
enum GridCmd {
    /// Sharp cross projection of a sampled grid and its residual.
    Decompose {
        /// Grid header (JSON with a binary payload).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_delimiter = ',')]
        gamma: Vec<f64>,
        #[arg(long)]
        n: u32,
        /// Also write the projected grid to this header path.
        #[arg(long)]
        projected: Option<PathBuf>,
    },
}

/// Decimal float or the literal `inf`.
fn parse_real(s: &str) -> Result<f64, String> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| format!("expected a decimal number or `inf`, got `{s}`"))?;
    if !v.is_finite() {
        return Err(format!("expected a decimal number or `inf`, got `{s}`"));
    }
    Ok(v)
}

fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn check_dim(name: &str, expected: usize, got: usize) -> CliResult<()> {
    if expected != got {
        return Err(CliError::Usage(format!(
            "--{name} has {got} entries, expected {expected}"
        )));
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v).map_err(stepcross::Error::from)? + "\n")
}

fn cube(d: usize, lo: u32, hi: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    if lo > hi {
        return out;
    }
    let mut cur = vec![lo; d];
    loop {
        out.push(MultiIndex::from(cur.clone()));
        let mut j = d;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            if cur[j] < hi {
                cur[j] += 1;
                for v in cur.iter_mut().skip(j + 1) {
                    *v = lo;
                }
                break;
            }
        }
    }
}

/// Output text plus an optional failed check.
struct Outcome {
    text: String,
    failure: Option<String>,
}

impl From<String> for Outcome {
    fn from(text: String) -> Self {
        Self { text, failure: None }
    }
}

fn run(cli: &Cli) -> CliResult<Outcome> {
    let fmt = cli.format;
    match &cli.command {
        Command::Cross(CrossCmd::Enum { d, gamma, n }) => {
            check_dim("gamma", *d, gamma.len())?;
            let idx = enumerate_cross(&CrossSpec::new(gamma.clone(), *n)?);
            Ok(match fmt {
                Format::Json => json(&idx)?,
                Format::Csv => {
                    let mut out = (1..=*d).map(|j| format!("s{j}")).collect::<Vec<_>>().join(",") + "\n";
                    for s in &idx {
                        out += &s.as_slice().iter().map(u32::to_string).collect::<Vec<_>>().join(",");
                        out.push('\n');
                    }
                    out
                }
            }
            .into())
        }
        Command::Kernel(KernelCmd::Eval { s, x }) => {
            let s = MultiIndex::new(s.clone())?;
            check_dim("x", s.dim(), x.len())?;
            let value = eval_a_star(&s, x)?;
            Ok(match fmt {
                Format::Json => json(&serde_json::json!({ "s": s, "x": x, "value": value }))?,
                Format::Csv => format!("value\n{}\n", sci(value)),
            }
            .into())
        }
        Command::Kernel(KernelCmd::Norm { s, p, tol }) => {
            let s = MultiIndex::new(s.clone())?;
            let value = block_lp_norm(&s, *p)?;
            let rel_error: f64 = s.as_slice().iter().map(|&m| factor_lp_norm_rel_error(m, *p)).sum();
            let text = match fmt {
                Format::Json => json(&serde_json::json!({
                    "s": s, "p": format_exponent(*p), "value": value, "rel_error": rel_error
                }))?,
                Format::Csv => format!("value,rel_error\n{},{}\n", sci(value), sci(rel_error)),
            };
            let failure = (rel_error > *tol).then(|| format!("relative error {rel_error:e} exceeds --tol {tol:e}"));
            Ok(Outcome { text, failure })
        }
        Command::Verify(VerifyCmd::Lemma1(a)) => lemma_bracket(a, f64::INFINITY, fmt),
        Command::Verify(VerifyCmd::Lemma2(a)) => lemma_bracket(a, a.p, fmt),
        Command::Verify(VerifyCmd::LemmaV(a)) => lacunary(a, false, fmt),
        Command::Verify(VerifyCmd::LemmaG(a)) => lacunary(a, true, fmt),
        Command::Rates(RatesCmd::Theorem1 {
            r,
            theta,
            nmin,
            nmax,
            resolution,
            refine_steps,
            max_spread,
        }) => {
            let profile = SmoothnessProfile::new(r)?;
            let sup = SupSettings {
                resolution: *resolution,
                refine_steps: *refine_steps,
            };
            rate_outcome(run_theorem1(&profile, *theta, *nmin, *nmax, sup)?, *max_spread, fmt)
        }
        Command::Rates(RatesCmd::Theorem2 {
            r,
            theta,
            q,
            nmin,
            nmax,
            quad_l,
            quad_res,
            tail_tol,
            max_spread,
        }) => {
            let profile = SmoothnessProfile::new(r)?;
            let mut quad = QuadratureSpec::default();
            if let Some(l) = quad_l {
                quad.box_halfwidth = *l;
            }
            if let Some(p) = quad_res {
                quad.points_per_wavelength = *p;
            }
            if let Some(t) = tail_tol {
                quad.tail_tol = *t;
            }
            rate_outcome(
                run_theorem2(&profile, *theta, *q, *nmin, *nmax, &quad)?,
                *max_spread,
                fmt,
            )
        }
        Command::Grid(GridCmd::Decompose {
            input,
            gamma,
            n,
            projected,
        }) => {
            let grid = SampledGrid::read(input)?;
            check_dim("gamma", grid.dim(), gamma.len())?;
            let spec = CrossSpec::new(gamma.clone(), *n)?;
            let report = sharp_residual(&grid, &spec)?;
            if let Some(header) = projected {
                let p = project_sharp(&grid, &spec)?;
                p.write(header, &header.with_extension("bin"))?;
            }
            Ok(match fmt {
                Format::Json => json(&report)?,
                Format::Csv => format!(
                    "residual_sup,residual_l2,signal_sup,signal_l2\n{},{},{},{}\n",
                    sci(report.residual_sup),
                    sci(report.residual_l2),
                    sci(report.signal_sup),
                    sci(report.signal_l2)
                ),
            }
            .into())
        }
    }
}

fn lemma_bracket(a: &BracketArgs, p: f64, fmt: Format) -> CliResult<Outcome> {
    let set = cube(a.d, a.smin, a.smax);
    if a.d == 0 || set.is_empty() {
        return Err(CliError::Usage("need --d >= 1 and --smin <= --smax".into()));
    }
    let report = verify_lemma_brackets(&set, p)?;
    let power = if p.is_infinite() { 1.0 } else { 1.0 - 1.0 / p };
    let mut rows = Vec::with_capacity(set.len());
    for s in &set {
        let norm = block_lp_norm(s, p)?;
        rows.push((s.clone(), norm, norm * (-(s.l1() as f64) * power).exp2()));
    }
    let text = match fmt {
        Format::Json => json(&serde_json::json!({
            "p": format_exponent(p),
            "rows": rows.iter().map(|(s, v, r)| serde_json::json!({"s": s, "norm": v, "normalized": r})).collect::<Vec<_>>(),
            "bracket": report,
        }))?,
        Format::Csv => {
            let mut out = (1..=a.d).map(|j| format!("s{j}")).collect::<Vec<_>>().join(",") + ",norm,normalized\n";
            for (s, v, r) in &rows {
                let cols = s.as_slice().iter().map(u32::to_string).collect::<Vec<_>>().join(",");
                let _ = writeln!(out, "{cols},{},{}", sci(*v), sci(*r));
            }
            out
        }
    };
    let failure = (report.bracket > a.max_bracket).then(|| {
        format!(
            "bracket ratio {} exceeds --max-bracket {}",
            report.bracket, a.max_bracket
        )
    });
    Ok(Outcome { text, failure })
}

fn lacunary(a: &LacunaryArgs, with_alt: bool, fmt: Format) -> CliResult<Outcome> {
    check_dim("gamma", a.d, a.gamma.len())?;
    if a.nmin > a.nmax {
        return Err(CliError::Usage("--nmin must be <= --nmax".into()));
    }
    let constraint = match (&a.alt_gamma, with_alt) {
        (Some(g), _) => {
            check_dim("alt-gamma", a.d, g.len())?;
            g.clone()
        }
        (None, true) => return Err(CliError::Usage("lemma-g needs --alt-gamma".into())),
        (None, false) => a.gamma.clone(),
    };
    // Lemma V carries the log factor n^{nu-1}; the second direction removes it
    let gmin = a.gamma.iter().copied().fold(f64::INFINITY, f64::min);
    let nu = a.gamma.iter().filter(|&&g| g == gmin).count();
    let log_power = if with_alt { 0.0 } else { (nu - 1) as f64 };
    let mut rows = Vec::new();
    for n in a.nmin..=a.nmax {
        let sum = lacunary_tail_sum(&a.gamma, &constraint, a.alpha, n, a.tol)?;
        let nf = f64::from(n.max(1));
        let reference = (-a.alpha * f64::from(n)).exp2() * if log_power == 0.0 { 1.0 } else { nf.powf(log_power) };
        rows.push((n, sum, reference, sum / reference));
    }
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.3), hi.max(r.3)));
    let bracket = hi / lo;
    let text = match fmt {
        Format::Json => json(&serde_json::json!({
            "rows": rows.iter().map(|r| serde_json::json!({"n": r.0, "sum": r.1, "reference": r.2, "ratio": r.3})).collect::<Vec<_>>(),
            "bracket": bracket,
        }))?,
        Format::Csv => {
            let mut out = String::from("n,sum,reference,ratio\n");
            for r in &rows {
                let _ = writeln!(out, "{},{},{},{}", r.0, sci(r.1), sci(r.2), sci(r.3));
            }
            out
        }
    };
    let failure =
        (bracket > a.max_bracket).then(|| format!("bracket ratio {bracket} exceeds --max-bracket {}", a.max_bracket));
    Ok(Outcome { text, failure })
}

fn rate_outcome(report: RateReport, max_spread: f64, fmt: Format) -> CliResult<Outcome> {
    let text = match fmt {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv(),
    };
    let failure = (report.ratio_spread > max_spread)
        .then(|| format!("ratio spread {} exceeds --max-spread {max_spread}", report.ratio_spread));
    Ok(Outcome { text, failure })
}

fn emit(text: &str, output: Option<&Path>) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Lib(e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let args = match config::inject_config(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = run(&cli).and_then(|out| {
        emit(&out.text, cli.output.as_deref())?;
        match out.failure {
            Some(msg) => Err(CliError::Bracket(msg)),
            None => Ok(()),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
