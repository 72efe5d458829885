//! The `ratbounds` command line.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::beliefs::History;
use crate::error::{Error, Result};
use crate::noise::{NoiseFamily, NoiseKind};
use crate::payoffs::{posterior_mean, rank_belief, ExtReal, ModelKind, ModelParams};
use crate::rationalizability::{
    critical_sigma_f, iterate_bounds, solve_limits_main, sufficient_sigma_l, BoundsState, SolveOptions,
};
use crate::verify::{run_suite, Suite};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "ratbounds", version, about = "Dominance bounds for leader-follower coordination games")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Bounds for one parameter point, as JSON.
    Bounds(BoundsArgs),
    /// Critical follower noise, or the sufficient leader noise with --gamma.
    Critical(CriticalArgs),
    /// Bounds over a parameter grid, or a residual curve, as CSV.
    Sweep(SweepArgs),
    /// Runs the invariant suites.
    Verify(VerifyArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Number of followers.
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    /// Follower noise; defaults to gamma * sigma_l when --gamma is given.
    #[arg(long, allow_hyphen_values = true)]
    pub sigma_f: Option<f64>,
    /// Leader noise (0 for a perfectly informed leader).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub sigma_l: f64,
    /// Ratio sigma_f / sigma_l.
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
    #[arg(long, value_enum, default_value_t = FamilyArg::Gaussian)]
    pub family: FamilyArg,
    /// Scale of the noise family.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub scale: f64,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_rounds: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyArg {
    Gaussian,
    Laplace,
    Logistic,
}

impl From<FamilyArg> for NoiseKind {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Gaussian => NoiseKind::Gaussian,
            FamilyArg::Laplace => NoiseKind::Laplace,
            FamilyArg::Logistic => NoiseKind::Logistic,
        }
    }
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug)]
pub struct CriticalArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variable {
    SigmaF,
    SigmaL,
    N,
    Gamma,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    /// Fixed-point residual of the Effort threshold against x.
    Residual,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long = "var", value_enum, default_value_t = Variable::SigmaF)]
    pub variable: Variable,
    #[arg(long, allow_hyphen_values = true)]
    pub start: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub stop: f64,
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Linear)]
    pub spacing: Spacing,
    /// Emit a curve over x in [start, stop] instead of a parameter sweep.
    #[arg(long, value_enum)]
    pub curve: Option<Curve>,
    /// Leader threshold for the residual curve.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub z: f64,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteArg {
    Analytic,
    Mc,
    All,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = SuiteArg::Analytic)]
    pub suite: SuiteArg,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

impl ModelArgs {
    pub fn params(&self) -> Result<ModelParams> {
        let sigma_f = match (self.sigma_f, self.gamma) {
            (Some(s), _) => s,
            (None, Some(g)) if self.sigma_l > 0.0 => g * self.sigma_l,
            _ => return Err(Error::invalid("--sigma-f is required (or --gamma with a positive --sigma-l)")),
        };
        let p = ModelParams::new(self.n, sigma_f)?;
        let p = if self.family == FamilyArg::Gaussian && self.scale == 1.0 {
            p
        } else {
            p.with_family(NoiseFamily::new(self.family.into(), self.scale)?)?
        };
        p.with_sigma_l(self.sigma_l)
    }

    pub fn options(&self) -> Result<SolveOptions> {
        SolveOptions::new(self.max_rounds, self.tol)
    }
}

/// One solved parameter point.
#[derive(Debug, Clone, Serialize)]
pub struct PointResult {
    pub model: ModelKind,
    pub n: usize,
    pub sigma_f: f64,
    pub sigma_l: f64,
    pub family: &'static str,
    pub theta_bar: ExtReal,
    pub x_e_bar: ExtReal,
    pub x_n_lo: ExtReal,
    pub unique: bool,
    pub converged: bool,
    pub rounds: usize,
    /// "iteration", or "limits" when the direct solver stood in.
    pub method: &'static str,
    #[serde(skip)]
    pub limits: BoundsState,
}

/// Runs the iteration; for the perfectly informed Gaussian model a run that
/// exhausts its rounds falls back to the direct limit solver.
pub fn solve_point(params: &ModelParams, opts: &SolveOptions) -> Result<PointResult> {
    let r = iterate_bounds(params, opts)?;
    let mut out = PointResult {
        model: r.model,
        n: params.n,
        sigma_f: params.sigma_f,
        sigma_l: params.sigma_l,
        family: params.family.name(),
        theta_bar: r.limits.theta_hi,
        x_e_bar: r.limits.x_e_hi,
        x_n_lo: r.limits.x_n_lo,
        unique: r.unique,
        converged: r.converged,
        rounds: r.rounds_used,
        method: "iteration",
        limits: r.limits,
    };
    if !r.converged && r.model == ModelKind::Main {
        log::info!("iteration stopped after {} rounds; using the direct limit solver", r.rounds_used);
        let l = solve_limits_main(params)?;
        out.theta_bar = l.theta_bar;
        out.x_e_bar = l.x_e_bar;
        out.x_n_lo = l.x_n_lo;
        out.unique = l.unique();
        out.converged = true;
        out.method = "limits";
        out.limits = l.state(r.rounds_used);
    }
    Ok(out)
}

fn usage_error(e: impl std::fmt::Display) -> i32 {
    eprintln!("error: {e}");
    eprintln!("run `ratbounds --help` for usage");
    EXIT_USAGE
}

fn code_for(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_) | Error::Unsupported(_) => EXIT_USAGE,
        _ => EXIT_NOT_CONVERGED,
    }
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn cmd_bounds(a: &BoundsArgs) -> i32 {
    let (params, opts) = match a.model.params().and_then(|p| Ok((p, a.model.options()?))) {
        Ok(v) => v,
        Err(e) => return usage_error(e),
    };
    match solve_point(&params, &opts) {
        Ok(r) => {
            print_json(&r);
            if r.converged {
                EXIT_OK
            } else {
                eprintln!("error: no convergence after {} rounds", r.rounds);
                EXIT_NOT_CONVERGED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            code_for(&e)
        }
    }
}

#[derive(Serialize)]
struct CriticalFollower {
    n: usize,
    sigma_f_hat: f64,
}

#[derive(Serialize)]
struct CriticalLeader {
    n: usize,
    gamma: f64,
    lambda_max: f64,
    sigma_l_hat1: f64,
    sigma_l_hat2: f64,
    sigma_l_hat: f64,
}

fn cmd_critical(a: &CriticalArgs) -> i32 {
    if a.n < 2 {
        return usage_error(format!("need at least 2 followers, got n = {}", a.n));
    }
    let res = match a.gamma {
        None => critical_sigma_f(a.n).map(|s| print_json(&CriticalFollower { n: a.n, sigma_f_hat: s })),
        Some(g) => sufficient_sigma_l(g, a.n).map(|b| {
            print_json(&CriticalLeader {
                n: a.n,
                gamma: g,
                lambda_max: b.lambda_max,
                sigma_l_hat1: b.sigma_l_hat1,
                sigma_l_hat2: b.sigma_l_hat2,
                sigma_l_hat: b.sigma_l_hat,
            })
        }),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            code_for(&e)
        }
    }
}

/// Grid of `points` values from `start` to `stop`.
pub fn spaced(start: f64, stop: f64, points: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::invalid("--points must be at least 2"));
    }
    if !(start < stop) {
        return Err(Error::invalid(format!("--start ({start}) must be below --stop ({stop})")));
    }
    let t = |i: usize| i as f64 / (points - 1) as f64;
    match spacing {
        Spacing::Linear => Ok((0..points).map(|i| start * (1.0 - t(i)) + stop * t(i)).collect()),
        Spacing::Log => {
            if start <= 0.0 {
                return Err(Error::invalid("log spacing needs a positive --start"));
            }
            let (a, b) = (start.ln(), stop.ln());
            let mut g: Vec<f64> = (0..points).map(|i| (a + (b - a) * t(i)).exp()).collect();
            g[0] = start;
            g[points - 1] = stop;
            Ok(g)
        }
    }
}

fn point_params(base: &ModelArgs, var: Variable, v: f64) -> Result<ModelParams> {
    let mut m = base.clone();
    match var {
        Variable::SigmaF => m.sigma_f = Some(v),
        Variable::SigmaL => {
            m.sigma_l = v;
            if m.gamma.is_some() {
                m.sigma_f = None;
            }
        }
        Variable::N => {
            if v.fract() != 0.0 || v < 2.0 {
                return Err(Error::invalid(format!("n must be an integer of at least 2, got {v}")));
            }
            m.n = v as usize;
        }
        Variable::Gamma => {
            m.gamma = Some(v);
            m.sigma_f = None;
        }
    }
    m.params()
}

fn variable_name(v: Variable) -> &'static str {
    match v {
        Variable::SigmaF => "sigma_f",
        Variable::SigmaL => "sigma_l",
        Variable::N => "n",
        Variable::Gamma => "gamma",
    }
}

fn metadata(a: &SweepArgs) -> Vec<String> {
    let m = &a.model;
    let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
    vec![
        format!("# ratbounds {}", env!("CARGO_PKG_VERSION")),
        format!(
            "# mode={} var={} start={} stop={} points={} spacing={:?}",
            if a.curve.is_some() { "residual" } else { "sweep" },
            variable_name(a.variable),
            a.start,
            a.stop,
            a.points,
            a.spacing
        )
        .to_lowercase(),
        format!(
            "# n={} sigma_f={} sigma_l={} gamma={} family={} scale={} tol={} max_rounds={} z={}",
            m.n,
            opt(m.sigma_f),
            m.sigma_l,
            opt(m.gamma),
            NoiseKind::from(m.family).name(),
            m.scale,
            m.tol,
            m.max_rounds,
            a.z
        ),
    ]
}

fn sweep_rows(a: &SweepArgs) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let xs = spaced(a.start, a.stop, a.points, a.spacing)?;
    if let Some(Curve::Residual) = a.curve {
        let p = a.model.params()?;
        let header = ["x", "lhs", "rhs", "residual"].map(String::from).to_vec();
        let rows = xs
            .iter()
            .map(|&x| {
                // posterior mean against the weighted rank belief after Effort
                let lhs = posterior_mean(x, a.z, History::Effort, &p);
                let rhs = p.weight() * rank_belief(x, a.z, History::Effort, &p);
                vec![x.to_string(), lhs.to_string(), rhs.to_string(), (lhs - rhs).to_string()]
            })
            .collect();
        return Ok((header, rows));
    }
    let opts = a.model.options()?;
    let params: Vec<ModelParams> = xs.iter().map(|&v| point_params(&a.model, a.variable, v)).collect::<Result<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let solved: Vec<Result<(PointResult, f64)>> =
        pool.install(|| params.par_iter().map(|p| Ok((solve_point(p, &opts)?, critical_sigma_f(p.n)?))).collect());
    let header = [
        "model",
        "n",
        "sigma_f",
        "sigma_l",
        "gamma",
        "family",
        "theta_lo",
        "theta_bar",
        "x_e_lo",
        "x_e_bar",
        "x_n_lo",
        "x_n_hi",
        "unique",
        "converged",
        "rounds",
        "method",
        "sigma_f_hat",
    ]
    .map(String::from)
    .to_vec();
    let mut rows = Vec::with_capacity(xs.len());
    for r in solved {
        let (r, hat) = r?;
        let s = r.limits;
        let gamma = if r.sigma_l > 0.0 { (r.sigma_f / r.sigma_l).to_string() } else { String::new() };
        rows.push(vec![
            r.model.to_string(),
            r.n.to_string(),
            r.sigma_f.to_string(),
            r.sigma_l.to_string(),
            gamma,
            r.family.to_string(),
            s.theta_lo.to_string(),
            s.theta_hi.to_string(),
            s.x_e_lo.to_string(),
            s.x_e_hi.to_string(),
            s.x_n_lo.to_string(),
            s.x_n_hi.to_string(),
            r.unique.to_string(),
            r.converged.to_string(),
            r.rounds.to_string(),
            r.method.to_string(),
            hat.to_string(),
        ]);
    }
    Ok((header, rows))
}

fn write_csv<W: Write>(mut w: W, meta: &[String], header: &[String], rows: &[Vec<String>]) -> io::Result<()> {
    for line in meta {
        writeln!(w, "{line}")?;
    }
    let mut c = csv::Writer::from_writer(w);
    c.write_record(header)?;
    for r in rows {
        c.write_record(r)?;
    }
    c.flush()
}

fn cmd_sweep(a: &SweepArgs) -> i32 {
    // open the destination first so an unwritable path fails before the work
    let file = match &a.out {
        Some(path) => match File::create(path) {
            Ok(f) => Some(f),
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_IO;
            }
        },
        None => None,
    };
    let (header, rows) = match sweep_rows(a) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return code_for(&e);
        }
    };
    let meta = metadata(a);
    let res = match file {
        Some(f) => write_csv(io::BufWriter::new(f), &meta, &header, &rows),
        None => write_csv(io::stdout().lock(), &meta, &header, &rows),
    };
    match res {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: write failed: {e}");
            EXIT_IO
        }
    }
}

fn cmd_verify(a: &VerifyArgs) -> i32 {
    let suite = match a.suite {
        SuiteArg::Analytic => Suite::Analytic,
        SuiteArg::Mc => Suite::Mc,
        SuiteArg::All => Suite::All,
    };
    let results = run_suite(suite, a.seed);
    let width = results.iter().map(|c| c.name.len()).max().unwrap_or(0);
    for c in &results {
        println!("{:<4}  {:<width$}  {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<&str> = results.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        println!("{} checks passed (suite {suite}, seed {})", results.len(), a.seed);
        EXIT_OK
    } else {
        println!("failed: {}", failed.join(", "));
        EXIT_VERIFY_FAILED
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("RATBOUNDS_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match &cli.command {
        Command::Bounds(a) => cmd_bounds(a),
        Command::Critical(a) => cmd_critical(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
