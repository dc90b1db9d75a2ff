//! The `mstep` command line.

pub mod artifact;

use crate::analysis::{
    consistency_qbar, consistency_qk, consistency_qtilde, fbdf_boundary, stability_boundary, zero_stability_check,
};
use crate::bdf::{bdf_coefficients, genfun_taylor, GeneratingFunction};
use crate::error::{Error, Result};
use crate::mittag_leffler::ml_sequence;
use crate::problems::{fokker_planck, nigmatullin, scalar_linear, FokkerPlanckParams};
use crate::rational::{build_method, error_report, log_grid, tau_hat, tau_scan, ScanObjective, StepCoefficients};
use crate::solver::{solve_fbdf, solve_kstep_streaming, FdeProblem, RecursionForm, Trajectory};
pub use artifact::{Artifact, Cell, Format, RowWriter};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde_json::{json, Map, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

pub const OUT_DIR_ENV: &str = "MSTEP_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "mstep", version, about = "Rational m-step methods for Caputo fractional ODEs")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Csv, global = true)]
    pub format: Format,
    /// Output file; `-` for stdout. Defaults to `$MSTEP_OUT_DIR/<command>.<ext>`
    /// when that variable is set, otherwise stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct TauArgs {
    /// Fixed tau in (0, 1].
    #[arg(long, conflicts_with_all = ["tau_hat", "tau_scan"])]
    pub tau: Option<f64>,
    /// tau = (7 + p) k / (2 N), clamped to 1 (the default).
    #[arg(long)]
    pub tau_hat: bool,
    /// Minimise the approximation error over a grid, e.g. `log:1e-3:1:50`.
    #[arg(long, conflicts_with = "tau_hat")]
    pub tau_scan: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProblemKind {
    Scalar,
    Nigmatullin,
    FokkerPlanck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Fbdf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Taylor coefficients of the FBDF generating function a(zeta)^alpha.
    Coeffs {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        alpha: f64,
        /// Highest index.
        #[arg(long)]
        n: usize,
    },
    /// Coefficients of the m-step method.
    Method {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        alpha: f64,
        /// Number of steps the method is tuned for.
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[command(flatten)]
        tau: TauArgs,
    },
    /// Componentwise error of the rational approximation and its bound.
    Error {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[command(flatten)]
        tau: TauArgs,
    },
    /// Integrate a built-in problem on [0, 1].
    Solve {
        #[arg(long, value_enum)]
        problem: ProblemKind,
        #[arg(long)]
        alpha: f64,
        /// Number of steps.
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        p: usize,
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[command(flatten)]
        tau: TauArgs,
        /// Coefficient of the scalar problem.
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        lambda: f64,
        /// Interior grid points of the spatial problems.
        #[arg(long, default_value_t = 50)]
        s: usize,
        /// Constant drift p(x) of the Fokker-Planck problem.
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        drift: f64,
        /// Growth rate of the Fokker-Planck problem.
        #[arg(long, default_value_t = 0.2)]
        r: f64,
        /// Also run the full-memory FBDF of the same order.
        #[arg(long, value_enum)]
        baseline: Option<Baseline>,
        /// Emit rows as they are computed instead of storing the trajectory.
        #[arg(long)]
        no_store: bool,
    },
    /// Stability region boundary and root certification.
    Stability {
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 8)]
        k: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[command(flatten)]
        tau: TauArgs,
        #[arg(long, default_value_t = 256)]
        n_theta: usize,
        /// Boundary of the FBDF of order p instead.
        #[arg(long)]
        fbdf: bool,
    },
    /// Consistency diagnostics q_k, q~_k, q-bar_k (p = 1).
    Consistency {
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.1)]
        tau: f64,
        #[arg(long)]
        k: usize,
        /// `pow2:a:b` for h = 2^-a .. 2^-b, or a comma-separated list.
        #[arg(long, default_value = "pow2:4:10")]
        h_grid: String,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Coeffs { .. } => "coeffs",
            Command::Method { .. } => "method",
            Command::Error { .. } => "error",
            Command::Solve { .. } => "solve",
            Command::Stability { .. } => "stability",
            Command::Consistency { .. } => "consistency",
        }
    }
}

fn parse_num(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::domain(format!("{what}: cannot parse '{s}'")))
}

/// `log:lo:hi:count`
pub fn parse_tau_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 || parts[0] != "log" {
        return Err(Error::domain(format!("tau grid must look like log:lo:hi:count, got '{spec}'")));
    }
    let lo = parse_num(parts[1], "tau grid")?;
    let hi = parse_num(parts[2], "tau grid")?;
    let n: usize = parts[3]
        .parse()
        .map_err(|_| Error::domain(format!("tau grid count '{}' is not an integer", parts[3])))?;
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) || n == 0 {
        return Err(Error::domain("tau grid needs 0 < lo <= hi <= 1 and count >= 1"));
    }
    Ok(log_grid(lo, hi, n))
}

/// `pow2:a:b` or `h1,h2,...`
pub fn parse_h_grid(spec: &str) -> Result<Vec<f64>> {
    if let Some(rest) = spec.strip_prefix("pow2:") {
        let (a, b) = rest
            .split_once(':')
            .ok_or_else(|| Error::domain("h grid must look like pow2:a:b"))?;
        let a: i32 = a.parse().map_err(|_| Error::domain("h grid exponent is not an integer"))?;
        let b: i32 = b.parse().map_err(|_| Error::domain("h grid exponent is not an integer"))?;
        if !(1..=30).contains(&a) || !(1..=30).contains(&b) {
            return Err(Error::domain("h grid exponents must be in 1..30"));
        }
        let step = if b >= a { 1 } else { -1 };
        let mut out = vec![];
        let mut e = a;
        loop {
            out.push(2f64.powi(-e));
            if e == b {
                break;
            }
            e += step;
        }
        return Ok(out);
    }
    spec.split(',').map(|s| parse_num(s, "h grid")).collect()
}

struct TauChoice {
    tau: f64,
    policy: &'static str,
    clamped: bool,
}

fn choose_tau(t: &TauArgs, p: usize, k: usize, alpha: f64, n: usize) -> Result<TauChoice> {
    if let Some(tau) = t.tau {
        return Ok(TauChoice {
            tau,
            policy: "fixed",
            clamped: false,
        });
    }
    if let Some(spec) = &t.tau_scan {
        let grid = parse_tau_grid(spec)?;
        let scan = tau_scan(p, alpha, k, n, &grid, ScanObjective::default())?;
        return Ok(TauChoice {
            tau: scan.tau_star,
            policy: "scan",
            clamped: false,
        });
    }
    if n == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    let th = tau_hat(p, k, n);
    Ok(TauChoice {
        tau: th.tau,
        policy: "tau_hat",
        clamped: th.clamped,
    })
}

fn method_meta(sc: &StepCoefficients, choice: &TauChoice, n: usize) -> Map<String, Value> {
    let v = json!({
        "p": sc.p,
        "k": sc.k,
        "m": sc.m,
        "alpha": sc.alpha,
        "n": n,
        "tau": sc.tau,
        "tau_policy": choice.policy,
        "tau_clamped": choice.clamped,
    });
    v.as_object().cloned().unwrap_or_default()
}

fn open_output<'a>(cli: &Cli, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>> {
    let path = match &cli.out {
        Some(p) if p.as_os_str() == "-" => None,
        Some(p) => Some(p.clone()),
        None => std::env::var_os(OUT_DIR_ENV).map(|dir| {
            PathBuf::from(dir).join(format!("{}.{}", cli.command.name(), cli.format.extension()))
        }),
    };
    match path {
        None => Ok(Box::new(stdout)),
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            Ok(Box::new(std::io::BufWriter::new(std::fs::File::create(&p)?)))
        }
    }
}

/// Parses `args` (including the program name) and runs the command. Returns
/// the process exit code; messages go to `stderr`.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(stderr, "{text}");
            } else {
                let _ = write!(stdout, "{text}");
            }
            return code;
        }
    };
    match execute(&cli, stdout) {
        Ok(()) => EXIT_OK,
        Err(Error::Io(msg)) if msg.contains("Broken pipe") => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            if e.is_argument_error() || matches!(e, Error::Io(_)) {
                EXIT_USAGE
            } else {
                EXIT_NUMERIC
            }
        }
    }
}

pub fn execute(cli: &Cli, stdout: &mut dyn Write) -> Result<()> {
    // validate before touching the output file
    let plan = prepare(&cli.command)?;
    let mut out = open_output(cli, stdout)?;
    plan(&mut *out, cli.format)
}

type Plan<'a> = Box<dyn FnOnce(&mut dyn Write, Format) -> Result<()> + 'a>;

fn prepare(cmd: &Command) -> Result<Plan<'_>> {
    match cmd {
        Command::Coeffs { p, alpha, n } => {
            let gf = GeneratingFunction::new(bdf_coefficients(*p)?, *alpha)?;
            let om = genfun_taylor(&gf, *n);
            let meta = json!({"p": p, "alpha": alpha, "n": n});
            Ok(Box::new(move |w, f| {
                let meta = meta.as_object().cloned().unwrap_or_default();
                let mut rw = RowWriter::begin(w, f, &meta, &["j", "omega"])?;
                for (j, x) in om.as_slice().iter().enumerate() {
                    rw.row(&[j.into(), (*x).into()])?;
                }
                rw.finish()
            }))
        }
        Command::Method { p, k, alpha, n, tau } => {
            let choice = choose_tau(tau, *p, *k, *alpha, *n)?;
            let sc = build_method(*p, *k, *alpha, choice.tau)?;
            Ok(Box::new(move |w, f| {
                let meta = method_meta(&sc, &choice, *n);
                let mut rw = RowWriter::begin(w, f, &meta, &["coef", "index", "value"])?;
                let groups: [(&str, &[f64]); 4] = [
                    ("alpha", &sc.alpha_coef),
                    ("beta", &sc.beta_coef),
                    ("gamma", &sc.partial_fractions.gamma),
                    ("eta", &sc.partial_fractions.eta),
                ];
                for (name, vals) in groups {
                    for (i, v) in vals.iter().enumerate() {
                        rw.row(&[name.into(), i.into(), (*v).into()])?;
                    }
                }
                rw.finish()
            }))
        }
        Command::Error { p, k, alpha, n, tau } => {
            let choice = choose_tau(tau, *p, *k, *alpha, *n)?;
            let sc = build_method(*p, *k, *alpha, choice.tau)?;
            let rep = error_report(&sc, *n)?;
            Ok(Box::new(move |w, f| {
                let mut meta = method_meta(&sc, &choice, *n);
                meta.insert("max_abs_e".into(), json!(rep.max_abs_e));
                meta.insert("bound_available".into(), json!(rep.bound_available));
                let mut rw = RowWriter::begin(w, f, &meta, &["j", "omega", "gamma", "e", "bound"])?;
                for j in 0..rep.e.len() {
                    let bound = rep.bound_available.then(|| rep.bound[j]);
                    rw.row(&[
                        j.into(),
                        rep.omega[j].into(),
                        rep.gamma[j].into(),
                        rep.e[j].into(),
                        bound.into(),
                    ])?;
                }
                rw.finish()
            }))
        }
        Command::Solve {
            problem,
            alpha,
            n,
            p,
            k,
            tau,
            lambda,
            s,
            drift,
            r,
            baseline,
            no_store,
        } => {
            if *no_store && baseline.is_some() {
                return Err(Error::domain("--baseline needs the stored trajectory; drop --no-store"));
            }
            let choice = choose_tau(tau, *p, *k, *alpha, *n)?;
            let sc = build_method(*p, *k, *alpha, choice.tau)?;
            let setup = SolveSetup::new(*problem, *alpha, *lambda, *s, *drift, *r)?;
            let mut meta = method_meta(&sc, &choice, *n);
            meta.insert("problem".into(), json!(format!("{problem:?}").to_lowercase()));
            meta.insert("dim".into(), json!(setup.prob.dim()));
            let (p, n, baseline, no_store) = (*p, *n, *baseline, *no_store);
            // fail fast on numeric problems before any output is opened
            let stored = if no_store {
                if n < sc.m {
                    return Err(Error::domain("N must be at least m"));
                }
                None
            } else {
                let kstep = crate::solver::solve_kstep(&setup.prob, &sc, n)?;
                let base = match baseline {
                    Some(Baseline::Fbdf) => Some(solve_fbdf(&setup.prob, p, n)?),
                    None => None,
                };
                Some((kstep, base))
            };
            Ok(Box::new(move |w, f| write_solution(w, f, &meta, &setup, &sc, n, stored)))
        }
        Command::Stability {
            p,
            k,
            alpha,
            n,
            tau,
            n_theta,
            fbdf,
        } => {
            if *fbdf {
                let b = fbdf_boundary(*p, *alpha, *n_theta)?;
                let meta = json!({"method": format!("FBDF{p}"), "p": p, "alpha": alpha, "n_theta": n_theta});
                return Ok(Box::new(move |w, f| {
                    let meta = meta.as_object().cloned().unwrap_or_default();
                    let mut rw = RowWriter::begin(w, f, &meta, &["kind", "theta", "re", "im"])?;
                    for (t, z) in b.theta.iter().zip(&b.points) {
                        rw.row(&["boundary".into(), (*t).into(), z.re.into(), z.im.into()])?;
                    }
                    rw.finish()
                }));
            }
            let choice = choose_tau(tau, *p, *k, *alpha, *n)?;
            let sc = build_method(*p, *k, *alpha, choice.tau)?;
            let b = stability_boundary(&sc, *n_theta)?;
            let roots = zero_stability_check(&sc)?;
            Ok(Box::new(move |w, f| {
                let mut meta = method_meta(&sc, &choice, *n);
                meta.insert("n_theta".into(), json!(n_theta));
                meta.insert("certified".into(), json!(true));
                meta.insert("min_root_modulus".into(), json!(roots.min_modulus));
                meta.insert("unit_root_offset".into(), json!(roots.unit_root_offset));
                meta.insert("backward_error".into(), json!(roots.backward_error));
                meta.insert("crosscheck_residual".into(), json!(roots.crosscheck_residual));
                let mut rw = RowWriter::begin(w, f, &meta, &["kind", "theta", "re", "im"])?;
                for (t, z) in b.theta.iter().zip(&b.points) {
                    rw.row(&["boundary".into(), (*t).into(), z.re.into(), z.im.into()])?;
                }
                for (kind, list) in [("p_root", &roots.p_roots), ("q_root", &roots.q_roots)] {
                    for z in list {
                        rw.row(&[kind.into(), Cell::Empty, z.re.into(), z.im.into()])?;
                    }
                }
                rw.finish()
            }))
        }
        Command::Consistency { alpha, tau, k, h_grid } => {
            let h = parse_h_grid(h_grid)?;
            let qk = consistency_qk(*alpha, *tau, *k, &h)?;
            let qt = consistency_qtilde(*alpha, *tau, *k, &h)?;
            let qb = consistency_qbar(*alpha, *tau, *k, &h)?;
            let meta = json!({"p": 1, "k": k, "alpha": alpha, "tau": tau});
            Ok(Box::new(move |w, f| {
                let meta = meta.as_object().cloned().unwrap_or_default();
                let mut rw = RowWriter::begin(w, f, &meta, &["h", "q_k", "q_tilde", "q_bar"])?;
                for (i, hi) in h.iter().enumerate() {
                    rw.row(&[
                        (*hi).into(),
                        qk.q_values[i].into(),
                        qt.q_values[i].into(),
                        qb.q_values[i].into(),
                    ])?;
                }
                rw.finish()
            }))
        }
    }
}

struct SolveSetup {
    prob: FdeProblem,
    /// Eigenvalue and profile for problems with a Mittag-Leffler solution.
    exact: Option<(f64, DVector<f64>)>,
}

impl SolveSetup {
    fn new(kind: ProblemKind, alpha: f64, lambda: f64, s: usize, drift: f64, r: f64) -> Result<Self> {
        Ok(match kind {
            ProblemKind::Scalar => SolveSetup {
                prob: scalar_linear(alpha, lambda)?,
                exact: Some((lambda, DVector::from_element(1, 1.0))),
            },
            ProblemKind::Nigmatullin => {
                let ng = nigmatullin(s, alpha)?;
                let profile = ng.disc.y0.clone();
                SolveSetup {
                    prob: ng.problem()?,
                    exact: Some((ng.lambda, profile)),
                }
            }
            ProblemKind::FokkerPlanck => SolveSetup {
                prob: fokker_planck(s, alpha, &FokkerPlanckParams::constant_drift(drift, r))?,
                exact: None,
            },
        })
    }

    fn exact_error(&self, t: f64, y: &DVector<f64>) -> Result<Option<f64>> {
        match &self.exact {
            None => Ok(None),
            Some((lam, prof)) => {
                let e = ml_sequence(self.prob.alpha, *lam, &[t])?[0];
                Ok(Some((y - prof * e).amax()))
            }
        }
    }
}

fn write_solution(
    w: &mut dyn Write,
    f: Format,
    meta: &Map<String, Value>,
    setup: &SolveSetup,
    sc: &StepCoefficients,
    n: usize,
    stored: Option<(Trajectory, Option<Trajectory>)>,
) -> Result<()> {
    let dim = setup.prob.dim();
    let mut columns: Vec<String> = vec!["n".into(), "t".into()];
    columns.extend((0..dim).map(|i| format!("y{i}")));
    let has_exact = setup.exact.is_some();
    let has_base = matches!(stored, Some((_, Some(_))));
    if has_exact {
        columns.push("err_kstep".into());
    }
    if has_base {
        columns.push(if has_exact { "err_fbdf" } else { "diff_fbdf" }.into());
    }
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut rw = RowWriter::begin(w, f, meta, &cols)?;
    let mut emit = |i: usize, t: f64, y: &DVector<f64>, base: Option<&DVector<f64>>| -> Result<()> {
        let mut cells: Vec<Cell> = vec![i.into(), t.into()];
        cells.extend(y.iter().map(|&v| Cell::Num(v)));
        if has_exact {
            cells.push(setup.exact_error(t, y)?.into());
        }
        if let Some(b) = base {
            let e = if has_exact {
                setup.exact_error(t, b)?
            } else {
                Some((y - b).amax())
            };
            cells.push(e.into());
        }
        rw.row(&cells)
    };
    match stored {
        Some((kstep, base)) => {
            for i in 0..kstep.times.len() {
                let b = base.as_ref().map(|b| &b.states[i]);
                emit(i, kstep.times[i], &kstep.states[i], b)?;
            }
        }
        None => {
            let mut sink = |i: usize, t: f64, y: &DVector<f64>| emit(i, t, y, None);
            solve_kstep_streaming(&setup.prob, sc, n, RecursionForm::Factored, &mut sink)?;
        }
    }
    rw.finish()
}
