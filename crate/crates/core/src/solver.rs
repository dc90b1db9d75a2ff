//! Time stepping for `D^alpha y = L y + f(t, y)`, `y(t0) = y0` (Caputo).
//!
//! Both engines are written for the deviations `d_n = y_n - y_0`:
//!
//! ```text
//! sum_{j=0..J(n)} alpha_j d_{n-j} = h^alpha sum_{j=0..J(n)} beta_j g_{n-j}
//! ```
//!
//! For the m-step method `J(n) = min(n - 1, m)`. The first `m` steps are the
//! self-starting phase and the rest are the fixed-width recursion. Because
//! `sum alpha_j = 0`, the deviation form is the same recursion as the one on
//! `y` itself, but it reproduces constant solutions exactly. The full-memory
//! FBDF is the same engine with `alpha = omega` (all of it) and `beta = [1]`.

use crate::bdf::{bdf_coefficients, genfun_taylor, GeneratingFunction};
use crate::error::{Error, Result};
use crate::rational::StepCoefficients;
use nalgebra::{DMatrix, DVector};
use std::collections::VecDeque;
use std::sync::Arc;

pub type RhsFn = Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>;
pub type DenseJacFn = Arc<dyn Fn(f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
pub type DiagJacFn = Arc<dyn Fn(f64, &DVector<f64>) -> DVector<f64> + Send + Sync>;

pub const NEWTON_MAX_ITER: usize = 25;
pub const NEWTON_TOL: f64 = 1e-12;
const MAX_HALVINGS: usize = 4;

/// Tridiagonal matrix; `lower[i]` is entry `(i + 1, i)`, `upper[i]` is `(i, i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let s = diag.len();
        if s == 0 || lower.len() + 1 != s || upper.len() + 1 != s {
            return Err(Error::domain("inconsistent tridiagonal band lengths"));
        }
        Ok(Self { lower, diag, upper })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn mul_vec(&self, y: &DVector<f64>) -> DVector<f64> {
        let s = self.dim();
        DVector::from_fn(s, |i, _| {
            let mut v = self.diag[i] * y[i];
            if i > 0 {
                v += self.lower[i - 1] * y[i - 1];
            }
            if i + 1 < s {
                v += self.upper[i] * y[i + 1];
            }
            v
        })
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let s = self.dim();
        let mut m = DMatrix::zeros(s, s);
        for i in 0..s {
            m[(i, i)] = self.diag[i];
            if i + 1 < s {
                m[(i + 1, i)] = self.lower[i];
                m[(i, i + 1)] = self.upper[i];
            }
        }
        m
    }

    /// `a I + c self`.
    fn shifted(&self, a: f64, c: f64) -> Tridiagonal {
        Tridiagonal {
            lower: self.lower.iter().map(|x| c * x).collect(),
            diag: self.diag.iter().map(|x| a + c * x).collect(),
            upper: self.upper.iter().map(|x| c * x).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinearPart {
    Dense(DMatrix<f64>),
    Tridiagonal(Tridiagonal),
}

impl LinearPart {
    pub fn dim(&self) -> usize {
        match self {
            LinearPart::Dense(m) => m.nrows(),
            LinearPart::Tridiagonal(t) => t.dim(),
        }
    }

    pub fn mul_vec(&self, y: &DVector<f64>) -> DVector<f64> {
        match self {
            LinearPart::Dense(m) => m * y,
            LinearPart::Tridiagonal(t) => t.mul_vec(y),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            LinearPart::Dense(m) => m.clone(),
            LinearPart::Tridiagonal(t) => t.to_dense(),
        }
    }
}

#[derive(Clone)]
pub enum NonlinearJacobian {
    /// No derivative supplied; forward differences are used.
    None,
    Dense(DenseJacFn),
    /// The Jacobian is diagonal; the function returns its diagonal.
    Diagonal(DiagJacFn),
}

#[derive(Clone)]
pub struct Nonlinear {
    pub f: RhsFn,
    pub jacobian: NonlinearJacobian,
}

/// `D^alpha y = L y + f(t, y)` on `[t0, t_end]`; either part may be absent
/// (both absent means `g = 0`).
#[derive(Clone)]
pub struct FdeProblem {
    pub alpha: f64,
    pub t0: f64,
    pub t_end: f64,
    pub y0: DVector<f64>,
    pub linear: Option<LinearPart>,
    pub nonlinear: Option<Nonlinear>,
}

impl std::fmt::Debug for FdeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FdeProblem")
            .field("alpha", &self.alpha)
            .field("t0", &self.t0)
            .field("t_end", &self.t_end)
            .field("s", &self.dim())
            .field("linear", &self.linear.is_some())
            .field("nonlinear", &self.nonlinear.is_some())
            .finish()
    }
}

impl FdeProblem {
    pub fn new(
        alpha: f64,
        t0: f64,
        t_end: f64,
        y0: DVector<f64>,
        linear: Option<LinearPart>,
        nonlinear: Option<Nonlinear>,
    ) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain("alpha must be in (0, 1]"));
        }
        if !(t_end > t0) || !t0.is_finite() || !t_end.is_finite() {
            return Err(Error::domain("t_end must exceed t0"));
        }
        if y0.is_empty() || y0.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("y0 must be a non-empty finite vector"));
        }
        if let Some(l) = &linear {
            if l.dim() != y0.len() {
                return Err(Error::domain("linear part dimension does not match y0"));
            }
            if let LinearPart::Dense(m) = l {
                if !m.is_square() {
                    return Err(Error::domain("linear part must be square"));
                }
            }
        }
        Ok(Self {
            alpha,
            t0,
            t_end,
            y0,
            linear,
            nonlinear,
        })
    }

    pub fn dim(&self) -> usize {
        self.y0.len()
    }

    pub fn rhs(&self, t: f64, y: &DVector<f64>) -> DVector<f64> {
        let mut g = match &self.linear {
            Some(l) => l.mul_vec(y),
            None => DVector::zeros(y.len()),
        };
        if let Some(nl) = &self.nonlinear {
            g += (nl.f)(t, y);
        }
        g
    }

    /// Dense Jacobian of the full right-hand side.
    pub fn jacobian(&self, t: f64, y: &DVector<f64>) -> DMatrix<f64> {
        let s = self.dim();
        let mut jac = match &self.linear {
            Some(l) => l.to_dense(),
            None => DMatrix::zeros(s, s),
        };
        if let Some(nl) = &self.nonlinear {
            match &nl.jacobian {
                NonlinearJacobian::Dense(j) => jac += j(t, y),
                NonlinearJacobian::Diagonal(j) => {
                    let d = j(t, y);
                    for i in 0..s {
                        jac[(i, i)] += d[i];
                    }
                }
                NonlinearJacobian::None => jac += finite_difference_jacobian(&nl.f, t, y),
            }
        }
        jac
    }
}

fn finite_difference_jacobian(f: &RhsFn, t: f64, y: &DVector<f64>) -> DMatrix<f64> {
    let s = y.len();
    let f0 = f(t, y);
    let mut jac = DMatrix::zeros(s, s);
    let mut yp = y.clone();
    for j in 0..s {
        let h = f64::EPSILON.sqrt() * y[j].abs().max(1.0);
        yp[j] = y[j] + h;
        let col = (f(t, &yp) - &f0) / h;
        jac.set_column(j, &col);
        yp[j] = y[j];
    }
    jac
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryMeta {
    pub method: String,
    pub p: usize,
    pub k: Option<usize>,
    pub m: Option<usize>,
    pub tau: Option<f64>,
    pub newton_iterations: usize,
    pub max_newton_iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn step(&self) -> f64 {
        self.times[1] - self.times[0]
    }
}

/// Receives each accepted step. Returning an error aborts the run.
pub trait StepSink {
    fn accept(&mut self, n: usize, t: f64, y: &DVector<f64>) -> Result<()>;
}

#[derive(Default)]
struct Collect {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
}

impl StepSink for Collect {
    fn accept(&mut self, _n: usize, t: f64, y: &DVector<f64>) -> Result<()> {
        self.times.push(t);
        self.states.push(y.clone());
        Ok(())
    }
}

impl<F: FnMut(usize, f64, &DVector<f64>) -> Result<()>> StepSink for F {
    fn accept(&mut self, n: usize, t: f64, y: &DVector<f64>) -> Result<()> {
        self(n, t, y)
    }
}

/// Linear system matrix of one implicit step, `alpha0 I - c J`.
enum StepMatrix {
    Tridiagonal(Tridiagonal),
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl StepMatrix {
    fn dense(m: DMatrix<f64>, step: usize) -> Result<Self> {
        let lu = m.lu();
        if !lu.is_invertible() {
            return Err(Error::SingularSystem(step));
        }
        Ok(StepMatrix::Dense(lu))
    }

    fn solve(&self, b: &DVector<f64>, step: usize) -> Result<DVector<f64>> {
        match self {
            StepMatrix::Tridiagonal(t) => thomas(t, b).ok_or(Error::SingularSystem(step)),
            StepMatrix::Dense(lu) => lu.solve(b).ok_or(Error::SingularSystem(step)),
        }
    }
}

/// Tridiagonal solve without pivoting; `None` on a vanishing pivot.
fn thomas(t: &Tridiagonal, b: &DVector<f64>) -> Option<DVector<f64>> {
    let s = t.dim();
    let mut c = vec![0.0; s];
    let mut d = vec![0.0; s];
    let mut piv = t.diag[0];
    if piv == 0.0 {
        return None;
    }
    c[0] = if s > 1 { t.upper[0] / piv } else { 0.0 };
    d[0] = b[0] / piv;
    for i in 1..s {
        piv = t.diag[i] - t.lower[i - 1] * c[i - 1];
        if piv == 0.0 || !piv.is_finite() {
            return None;
        }
        c[i] = if i + 1 < s { t.upper[i] / piv } else { 0.0 };
        d[i] = (b[i] - t.lower[i - 1] * d[i - 1]) / piv;
    }
    let mut x = DVector::zeros(s);
    x[s - 1] = d[s - 1];
    for i in (0..s - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Some(x)
}

fn step_matrix(prob: &FdeProblem, alpha0: f64, c: f64, t: f64, y: &DVector<f64>, step: usize) -> Result<StepMatrix> {
    let diag_nonlinear = match &prob.nonlinear {
        None => Some(None),
        Some(Nonlinear {
            jacobian: NonlinearJacobian::Diagonal(j),
            ..
        }) => Some(Some(j(t, y))),
        _ => None,
    };
    let s = prob.dim();
    match (&prob.linear, diag_nonlinear) {
        (Some(LinearPart::Tridiagonal(l)), Some(d)) => {
            let mut m = l.shifted(alpha0, -c);
            if let Some(d) = d {
                for i in 0..s {
                    m.diag[i] -= c * d[i];
                }
            }
            if thomas(&m, &DVector::zeros(s)).is_some() {
                return Ok(StepMatrix::Tridiagonal(m));
            }
            StepMatrix::dense(m.to_dense(), step)
        }
        (None, Some(d)) => {
            let diag: Vec<f64> = (0..s)
                .map(|i| alpha0 - c * d.as_ref().map_or(0.0, |d| d[i]))
                .collect();
            let m = Tridiagonal {
                lower: vec![0.0; s - 1],
                diag,
                upper: vec![0.0; s - 1],
            };
            if m.diag.contains(&0.0) {
                return Err(Error::SingularSystem(step));
            }
            Ok(StepMatrix::Tridiagonal(m))
        }
        _ => {
            let jac = prob.jacobian(t, y);
            StepMatrix::dense(DMatrix::identity(s, s) * alpha0 - jac * c, step)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepOutcome {
    pub iterations: usize,
}

/// Solves `alpha0 y - c g(t, y) = r` with `c = h^alpha beta0`, starting from
/// `y` (the predictor) and overwriting it. Damped Newton with up to four step
/// halvings; tolerance `1e-12 (1 + |r|_inf)` on the residual.
pub fn implicit_step(
    prob: &FdeProblem,
    alpha0: f64,
    c: f64,
    t: f64,
    r: &DVector<f64>,
    y: &mut DVector<f64>,
    step: usize,
) -> Result<StepOutcome> {
    let base = DVector::zeros(prob.dim());
    newton(prob, alpha0, c, t, &base, r, y, step)
}

/// Newton on the deviation: `alpha0 d - c g(t, base + d) = r`.
#[allow(clippy::too_many_arguments)]
fn newton(
    prob: &FdeProblem,
    alpha0: f64,
    c: f64,
    t: f64,
    base: &DVector<f64>,
    r: &DVector<f64>,
    d: &mut DVector<f64>,
    step: usize,
) -> Result<StepOutcome> {
    if alpha0 == 0.0 {
        return Err(Error::domain("alpha_0 must be non-zero"));
    }
    let tol = NEWTON_TOL * (1.0 + (base * alpha0 + r).amax());
    let residual = |d: &DVector<f64>| d * alpha0 - prob.rhs(t, &(base + d)) * c - r;
    let mut f = residual(d);
    let mut norm = f.amax();
    for it in 0..NEWTON_MAX_ITER {
        if norm <= tol {
            return Ok(StepOutcome { iterations: it });
        }
        let m = step_matrix(prob, alpha0, c, t, &(base + &*d), step)?;
        let delta = m.solve(&(-&f), step)?;
        let mut lambda = 1.0;
        let mut trial = &*d + &delta;
        let mut f_trial = residual(&trial);
        for _ in 0..MAX_HALVINGS {
            if f_trial.amax() < norm && f_trial.iter().all(|v| v.is_finite()) {
                break;
            }
            lambda *= 0.5;
            trial = &*d + &delta * lambda;
            f_trial = residual(&trial);
        }
        *d = trial;
        f = f_trial;
        norm = f.amax();
        if !norm.is_finite() {
            break;
        }
    }
    if norm <= tol {
        return Ok(StepOutcome {
            iterations: NEWTON_MAX_ITER,
        });
    }
    Err(Error::Convergence {
        step,
        residual: norm,
        iterations: NEWTON_MAX_ITER,
    })
}

/// A product of short polynomials applied to a vector sequence, one factor
/// after another. Each factor keeps its last `deg` inputs.
struct Cascade {
    factors: Vec<Vec<f64>>,
    hist: Vec<VecDeque<DVector<f64>>>,
}

impl Cascade {
    fn new(factors: Vec<Vec<f64>>, s: usize) -> Self {
        let hist = factors
            .iter()
            .map(|f| (1..f.len()).map(|_| DVector::zeros(s)).collect())
            .collect();
        Self { factors, hist }
    }

    fn slope(&self) -> f64 {
        self.factors.iter().map(|f| f[0]).product()
    }

    /// The output at the current index is `slope * x_n + offset`.
    fn offset(&self, s: usize) -> DVector<f64> {
        let mut o = DVector::zeros(s);
        for (f, h) in self.factors.iter().zip(&self.hist) {
            o *= f[0];
            for (fj, hj) in f[1..].iter().zip(h) {
                o.axpy(*fj, hj, 1.0);
            }
        }
        o
    }

    fn commit(&mut self, x: &DVector<f64>) {
        let mut w = x.clone();
        for (f, h) in self.factors.iter().zip(self.hist.iter_mut()) {
            let mut out = &w * f[0];
            for (fj, hj) in f[1..].iter().zip(h.iter()) {
                out.axpy(*fj, hj, 1.0);
            }
            if !h.is_empty() {
                h.pop_back();
                h.push_front(w);
            }
            w = out;
        }
    }
}

/// How the left and right convolution sums are formed.
enum Recursion<'a> {
    /// Explicit coefficients; the sums use `j <= min(n - 1, window)`.
    Monomial {
        alpha: &'a [f64],
        beta: &'a [f64],
        window: usize,
        d_hist: VecDeque<DVector<f64>>,
        g_hist: VecDeque<DVector<f64>>,
    },
    /// `alpha` and `beta` as products of degree-`p` factors.
    Factored { alpha: Cascade, beta: Cascade },
}

impl Recursion<'_> {
    fn monomial<'a>(alpha: &'a [f64], beta: &'a [f64], window: usize) -> Recursion<'a> {
        Recursion::Monomial {
            alpha,
            beta,
            window,
            d_hist: VecDeque::new(),
            g_hist: VecDeque::new(),
        }
    }

    fn factored(sc: &StepCoefficients, s: usize) -> Recursion<'static> {
        let (num, den) = sc.factors();
        Recursion::Factored {
            alpha: Cascade::new(num, s),
            beta: Cascade::new(den, s),
        }
    }

    fn leading(&self) -> (f64, f64) {
        match self {
            Recursion::Monomial { alpha, beta, .. } => (alpha[0], beta[0]),
            Recursion::Factored { alpha, beta } => (alpha.slope(), beta.slope()),
        }
    }

    fn needs_rhs_history(&self) -> bool {
        match self {
            Recursion::Monomial { beta, .. } => beta.len() > 1,
            Recursion::Factored { .. } => true,
        }
    }

    /// `h^alpha (beta-sum without j = 0) - (alpha-sum without j = 0)` at step `n`.
    fn history_term(&self, n: usize, ha: f64, s: usize) -> DVector<f64> {
        match self {
            Recursion::Monomial {
                alpha,
                beta,
                window,
                d_hist,
                g_hist,
            } => {
                let jmax = (n - 1).min(*window);
                let mut r = DVector::zeros(s);
                for j in 1..=jmax.min(alpha.len() - 1) {
                    r.axpy(-alpha[j], &d_hist[j - 1], 1.0);
                }
                for j in 1..=jmax.min(beta.len() - 1) {
                    r.axpy(ha * beta[j], &g_hist[j - 1], 1.0);
                }
                r
            }
            Recursion::Factored { alpha, beta } => beta.offset(s) * ha - alpha.offset(s),
        }
    }

    fn commit(&mut self, d: DVector<f64>, g: Option<DVector<f64>>) {
        match self {
            Recursion::Monomial {
                alpha,
                beta,
                window,
                d_hist,
                g_hist,
            } => {
                if let Some(g) = g {
                    g_hist.push_front(g);
                    g_hist.truncate((*window).min(beta.len() - 1));
                }
                d_hist.push_front(d);
                d_hist.truncate((*window).min(alpha.len().saturating_sub(1)).max(1));
            }
            Recursion::Factored { alpha, beta } => {
                alpha.commit(&d);
                if let Some(g) = g {
                    beta.commit(&g);
                }
            }
        }
    }
}

struct Engine<'a> {
    prob: &'a FdeProblem,
    rec: Recursion<'a>,
    h: f64,
    alpha0: f64,
    /// `h^alpha beta_0`
    c: f64,
    linear_solver: Option<StepMatrix>,
    /// `g(t0, y0)` for linear problems
    g0: DVector<f64>,
    last: DVector<f64>,
    iterations: usize,
    max_iterations: usize,
}

impl<'a> Engine<'a> {
    fn new(prob: &'a FdeProblem, rec: Recursion<'a>, n_steps: usize) -> Result<Self> {
        let h = (prob.t_end - prob.t0) / n_steps as f64;
        let (alpha0, beta0) = rec.leading();
        if beta0 == 0.0 {
            return Err(Error::SingularMethod);
        }
        let c = h.powf(prob.alpha) * beta0;
        let linear_solver = if prob.nonlinear.is_none() {
            Some(step_matrix(prob, alpha0, c, prob.t0, &prob.y0, 0)?)
        } else {
            None
        };
        Ok(Self {
            prob,
            rec,
            h,
            alpha0,
            c,
            linear_solver,
            g0: prob.rhs(prob.t0, &prob.y0),
            last: DVector::zeros(prob.dim()),
            iterations: 0,
            max_iterations: 0,
        })
    }

    fn time(&self, n: usize, n_steps: usize) -> f64 {
        let p = self.prob;
        if n == n_steps {
            p.t_end
        } else {
            p.t0 + (p.t_end - p.t0) * (n as f64 / n_steps as f64)
        }
    }

    /// Advance to step `n`, returning `d_n`. The previous deviation is the
    /// Newton predictor.
    fn step(&mut self, n: usize, t: f64) -> Result<DVector<f64>> {
        let prob = self.prob;
        let s = prob.dim();
        let r = self.rec.history_term(n, self.h.powf(prob.alpha), s);
        let d = match &self.linear_solver {
            Some(m) => {
                let d = m.solve(&(&r + &self.g0 * self.c), n)?;
                if !d.iter().all(|v| v.is_finite()) {
                    return Err(Error::SingularSystem(n));
                }
                d
            }
            None => {
                let mut d = self.last.clone();
                let out = newton(prob, self.alpha0, self.c, t, &prob.y0, &r, &mut d, n)?;
                self.iterations += out.iterations;
                self.max_iterations = self.max_iterations.max(out.iterations);
                d
            }
        };
        self.push(d.clone(), t);
        Ok(d)
    }

    fn push(&mut self, d: DVector<f64>, t: f64) {
        let g = self
            .rec
            .needs_rhs_history()
            .then(|| self.prob.rhs(t, &(&self.prob.y0 + &d)));
        self.last = d.clone();
        self.rec.commit(d, g);
    }

    fn run(&mut self, n_steps: usize, first: usize, sink: &mut dyn StepSink) -> Result<()> {
        for n in first..=n_steps {
            let t = self.time(n, n_steps);
            let d = self.step(n, t)?;
            sink.accept(n, t, &(&self.prob.y0 + &d))?;
        }
        Ok(())
    }
}

fn check_method(prob: &FdeProblem, sc: &StepCoefficients, n_steps: usize) -> Result<()> {
    if (prob.alpha - sc.alpha).abs() > 1e-15 {
        return Err(Error::domain("method and problem have different alpha"));
    }
    if n_steps < sc.m.max(1) {
        return Err(Error::domain("N must be at least m"));
    }
    if sc.beta_coef[0] == 0.0 {
        return Err(Error::SingularMethod);
    }
    Ok(())
}

/// Which representation of the m-step recursion to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RecursionForm {
    /// Products of the degree-`p` factors `a + eta_l` and `a - z_i`. Stable
    /// for any `k`.
    #[default]
    Factored,
    /// The stored `alpha_coef`, `beta_coef`. Loses accuracy as `k` grows.
    Monomial,
}

fn kstep_engine<'a>(
    prob: &'a FdeProblem,
    sc: &'a StepCoefficients,
    n_steps: usize,
    form: RecursionForm,
) -> Result<Engine<'a>> {
    check_method(prob, sc, n_steps)?;
    let rec = match form {
        RecursionForm::Factored => Recursion::factored(sc, prob.dim()),
        RecursionForm::Monomial => Recursion::monomial(&sc.alpha_coef, &sc.beta_coef, sc.m),
    };
    Engine::new(prob, rec, n_steps)
}

fn kstep_meta(sc: &StepCoefficients, e: &Engine) -> TrajectoryMeta {
    TrajectoryMeta {
        method: format!("rational m-step (p={}, k={}, m={})", sc.p, sc.k, sc.m),
        p: sc.p,
        k: Some(sc.k),
        m: Some(sc.m),
        tau: Some(sc.tau),
        newton_iterations: e.iterations,
        max_newton_iterations: e.max_iterations,
    }
}

/// Runs the m-step method, sending every step (including `n = 0`) to `sink`.
pub fn solve_kstep_streaming(
    prob: &FdeProblem,
    sc: &StepCoefficients,
    n_steps: usize,
    form: RecursionForm,
    sink: &mut dyn StepSink,
) -> Result<TrajectoryMeta> {
    let mut e = kstep_engine(prob, sc, n_steps, form)?;
    sink.accept(0, prob.t0, &prob.y0)?;
    e.run(n_steps, 1, sink)?;
    Ok(kstep_meta(sc, &e))
}

pub fn solve_kstep(prob: &FdeProblem, sc: &StepCoefficients, n_steps: usize) -> Result<Trajectory> {
    let mut c = Collect::default();
    let meta = solve_kstep_streaming(prob, sc, n_steps, RecursionForm::Factored, &mut c)?;
    Ok(Trajectory {
        times: c.times,
        states: c.states,
        meta,
    })
}

/// Runs only the fixed-width recursion, from prescribed `y_1..y_m`
/// (`start[i]` is `y_{i+1}`).
pub fn solve_kstep_from_history(
    prob: &FdeProblem,
    sc: &StepCoefficients,
    n_steps: usize,
    start: &[DVector<f64>],
) -> Result<Trajectory> {
    if start.len() != sc.m || start.iter().any(|y| y.len() != prob.dim()) {
        return Err(Error::domain("history must hold m states of dimension s"));
    }
    let mut e = kstep_engine(prob, sc, n_steps, RecursionForm::Factored)?;
    let mut c = Collect::default();
    c.accept(0, prob.t0, &prob.y0)?;
    for (i, y) in start.iter().enumerate() {
        let t = e.time(i + 1, n_steps);
        e.push(y - &prob.y0, t);
        c.accept(i + 1, t, y)?;
    }
    e.run(n_steps, sc.m + 1, &mut c)?;
    Ok(Trajectory {
        times: c.times,
        states: c.states,
        meta: kstep_meta(sc, &e),
    })
}

/// Full-memory FBDF of order `p` (no starting-term correction).
pub fn solve_fbdf_streaming(
    prob: &FdeProblem,
    p: usize,
    n_steps: usize,
    sink: &mut dyn StepSink,
) -> Result<TrajectoryMeta> {
    if n_steps == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    let gf = GeneratingFunction::new(bdf_coefficients(p)?, prob.alpha)?;
    let omega = genfun_taylor(&gf, n_steps).omega;
    let beta = [1.0];
    let mut e = Engine::new(prob, Recursion::monomial(&omega, &beta, n_steps), n_steps)?;
    sink.accept(0, prob.t0, &prob.y0)?;
    e.run(n_steps, 1, sink)?;
    Ok(TrajectoryMeta {
        method: format!("FBDF{p}"),
        p,
        k: None,
        m: None,
        tau: None,
        newton_iterations: e.iterations,
        max_newton_iterations: e.max_iterations,
    })
}

pub fn solve_fbdf(prob: &FdeProblem, p: usize, n_steps: usize) -> Result<Trajectory> {
    let mut c = Collect::default();
    let meta = solve_fbdf_streaming(prob, p, n_steps, &mut c)?;
    Ok(Trajectory {
        times: c.times,
        states: c.states,
        meta,
    })
}
