//! Rational m-step methods from Gauss-Jacobi quadrature of the integral
//! representation of `A^(alpha - 1)`.
//!
//! A k-point rule with nodes `t_l` and weights `w_l` gives
//! `z^(alpha-1) ~ sum_l gamma_l / (eta_l + z)` with
//! `eta_l = tau (1 - t_l) / (1 + t_l)` and
//! `gamma_l = 2 sin(alpha pi) tau^alpha w_l / (pi (1 + t_l))`.
//! Substituting the BDF polynomial `a(zeta)` for `z` and multiplying by it gives
//! the generating function `p_m(zeta) / q_m(zeta)` of a method with
//! `m = k p` steps.
//!
//! The monomial coefficients of `p_m` and `q_m` are what the time stepper
//! uses, but they are badly conditioned for small `tau` and large `k`. Every
//! quantity that can be computed from the factored data (Taylor coefficients,
//! values on the unit circle, roots) is therefore computed from `gamma`, `eta`
//! and `a` directly.

use crate::bdf::{bdf_coefficients, bdf_power_taylor, genfun_taylor, BdfTable, GeneratingFunction, TaylorCoefficients};
use crate::error::{Error, Result};
use crate::gauss_jacobi::{gauss_jacobi_rule, JacobiWeight, QuadRule};
use crate::poly;
use num_complex::Complex64;
use std::f64::consts::{LN_2, PI};

#[derive(Debug, Clone, PartialEq)]
pub struct PartialFractionForm {
    pub gamma: Vec<f64>,
    pub eta: Vec<f64>,
    pub tau: f64,
    pub alpha: f64,
    pub k: usize,
}

impl PartialFractionForm {
    /// `sum_l gamma_l / (eta_l + z)`, the approximation of `z^(alpha - 1)`.
    pub fn eval(&self, z: f64) -> f64 {
        self.gamma.iter().zip(&self.eta).map(|(g, e)| g / (e + z)).sum()
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.gamma
            .iter()
            .zip(&self.eta)
            .map(|(&g, &e)| g / (z + e))
            .sum()
    }

    /// Leading coefficient of the numerator `p~(z) = sum_l gamma_l prod_{i != l} (eta_i + z)`.
    pub fn numerator_leading(&self) -> f64 {
        self.gamma.iter().sum()
    }

    /// The `k - 1` zeros of `p~`, one between each pair of adjacent poles
    /// `-eta_l` (all `gamma_l > 0`), found by bisection. Descending order.
    pub fn numerator_roots(&self) -> Vec<f64> {
        let mut eta = self.eta.clone();
        eta.sort_by(f64::total_cmp);
        let mut roots = Vec::with_capacity(eta.len().saturating_sub(1));
        for w in eta.windows(2) {
            // f decreases from +inf at -w[1] to -inf at -w[0]
            let (mut lo, mut hi) = (-w[1], -w[0]);
            loop {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let f = self.eval(mid);
                if f > 0.0 {
                    lo = mid;
                } else if f < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    hi = mid;
                    break;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        roots
    }
}

pub fn partial_fractions(rule: &QuadRule, tau: f64, alpha: f64, a0: f64) -> Result<PartialFractionForm> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::domain("tau must be in (0, 1]"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha must be in (0, 1)"));
    }
    if !(a0 > 0.0) {
        return Err(Error::domain("a0 must be positive"));
    }
    let scale = 2.0 * (alpha * PI).sin() * tau.powf(alpha) / PI;
    let gamma = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(&t, &w)| scale * w / (1.0 + t))
        .collect();
    let eta = rule.nodes.iter().map(|&t| tau * (1.0 - t) / (1.0 + t)).collect();
    Ok(PartialFractionForm {
        gamma,
        eta,
        tau,
        alpha,
        k: rule.len(),
    })
}

/// `p~(z) / q~(z)` in the monomial basis of `z`; `q~` is monic.
#[derive(Debug, Clone, PartialEq)]
pub struct PolyQuotient {
    pub p_num: Vec<f64>,
    pub q_den: Vec<f64>,
    pub source: PartialFractionForm,
}

impl PolyQuotient {
    pub fn eval(&self, z: f64) -> f64 {
        poly::eval(&self.p_num, z) / poly::eval(&self.q_den, z)
    }
}

pub fn pf_to_quotient(pf: &PartialFractionForm) -> PolyQuotient {
    let mut q = vec![1.0];
    for &e in &pf.eta {
        q = poly::mul(&q, &[e, 1.0]);
    }
    let mut p = vec![0.0; pf.k.max(1)];
    for (l, &g) in pf.gamma.iter().enumerate() {
        let mut term = vec![g];
        for (i, &e) in pf.eta.iter().enumerate() {
            if i != l {
                term = poly::mul(&term, &[e, 1.0]);
            }
        }
        p = poly::add(&p, &term);
    }
    PolyQuotient {
        p_num: p,
        q_den: q,
        source: pf.clone(),
    }
}

/// The m-step method: `sum_j alpha_j y_{n-j} = h^alpha sum_j beta_j g_{n-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCoefficients {
    pub alpha_coef: Vec<f64>,
    pub beta_coef: Vec<f64>,
    pub m: usize,
    pub p: usize,
    pub k: usize,
    pub tau: f64,
    pub alpha: f64,
    pub partial_fractions: PartialFractionForm,
    pub bdf: BdfTable,
}

impl StepCoefficients {
    /// `p_m(zeta) / q_m(zeta) = a(zeta)^alpha` approximant, evaluated from the
    /// factored form.
    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        let a = poly::eval_complex(self.bdf.coefficients(), zeta);
        a * self.partial_fractions.eval_complex(a)
    }

    /// Degree-`p` factors whose products are `alpha(zeta)` and `beta(zeta)`:
    /// `alpha = (sum gamma) a prod_i (a - z_i)` and `beta = prod_l (a + eta_l)`.
    pub fn factors(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let pf = &self.partial_fractions;
        let a = self.bdf.coefficients();
        let shift = |c: f64| {
            let mut f = a.to_vec();
            f[0] += c;
            f
        };
        let mut num = vec![a.iter().map(|x| x * pf.numerator_leading()).collect::<Vec<_>>()];
        num.extend(pf.numerator_roots().into_iter().map(|z| shift(-z)));
        let den = pf.eta.iter().map(|&e| shift(e)).collect();
        (num, den)
    }

    /// The same quotient by Horner evaluation of the stored coefficients.
    pub fn eval_monomial(&self, zeta: Complex64) -> Complex64 {
        poly::eval_complex(&self.alpha_coef, zeta) / poly::eval_complex(&self.beta_coef, zeta)
    }
}

pub fn compose_with_bdf(pq: &PolyQuotient, bdf: &BdfTable) -> StepCoefficients {
    let a = bdf.coefficients();
    let alpha_coef = poly::mul(a, &poly::compose(&pq.p_num, a));
    let beta_coef = poly::compose(&pq.q_den, a);
    let pf = &pq.source;
    let m = pf.k * bdf.order();
    let mut alpha_coef = alpha_coef;
    alpha_coef.resize(m + 1, 0.0);
    StepCoefficients {
        alpha_coef,
        beta_coef,
        m,
        p: bdf.order(),
        k: pf.k,
        tau: pf.tau,
        alpha: pf.alpha,
        partial_fractions: pf.clone(),
        bdf: bdf.clone(),
    }
}

/// Full construction from `(p, k, alpha, tau)`.
pub fn build_method(p: usize, k: usize, alpha: f64, tau: f64) -> Result<StepCoefficients> {
    let bdf = bdf_coefficients(p)?;
    let w = JacobiWeight::fractional(alpha)?;
    let rule = gauss_jacobi_rule(&w, k)?;
    let pf = partial_fractions(&rule, tau, alpha, bdf.a0())?;
    Ok(compose_with_bdf(&pf_to_quotient(&pf), &bdf))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauHat {
    pub tau: f64,
    pub clamped: bool,
}

/// `(7 + p) k / (2 N)`, clamped to 1.
pub fn tau_hat(p: usize, k: usize, n: usize) -> TauHat {
    let t = (7 + p) as f64 * k as f64 / (2.0 * n as f64);
    if t > 1.0 {
        TauHat { tau: 1.0, clamped: true }
    } else {
        TauHat { tau: t, clamped: false }
    }
}

/// Taylor coefficients of `sum_l gamma_l / (eta_l + a(zeta))`, the
/// approximant of `a(zeta)^(alpha - 1)`.
pub fn approximant_taylor(pf: &PartialFractionForm, bdf: &BdfTable, n: usize) -> Vec<f64> {
    let a = bdf.coefficients();
    let mut sum = vec![0.0; n + 1];
    let mut s = vec![0.0; n + 1];
    for (&g, &e) in pf.gamma.iter().zip(&pf.eta) {
        // 1 / (e + a(zeta)); its poles lie outside the unit disk, so the
        // forward recursion is stable
        let c0 = e + a[0];
        s[0] = 1.0 / c0;
        for j in 1..=n {
            let mut acc = 0.0;
            for i in 1..=j.min(a.len() - 1) {
                acc += a[i] * s[j - i];
            }
            s[j] = -acc / c0;
        }
        for j in 0..=n {
            sum[j] += g * s[j];
        }
    }
    sum
}

/// `gamma_0..gamma_n`, Taylor coefficients of `p_m / q_m`, from
/// `a(zeta) sum_l gamma_l / (eta_l + a(zeta))`.
pub fn rational_taylor(sc: &StepCoefficients, n: usize) -> Result<TaylorCoefficients> {
    if sc.beta_coef.first().copied().unwrap_or(0.0) == 0.0 {
        return Err(Error::SingularMethod);
    }
    let sum = approximant_taylor(&sc.partial_fractions, &sc.bdf, n);
    let omega = crate::bdf::toeplitz_lower_apply(sc.bdf.coefficients(), &sum);
    Ok(TaylorCoefficients { omega })
}

/// Taylor coefficients by the recurrence
/// `beta_0 gamma_n = alpha_n - sum_{j=1..min(n,m)} beta_j gamma_{n-j}` on the
/// stored monomial coefficients. Inherits their conditioning.
pub fn taylor_by_recurrence(sc: &StepCoefficients, n: usize) -> Result<TaylorCoefficients> {
    let b = &sc.beta_coef;
    if b.first().copied().unwrap_or(0.0) == 0.0 {
        return Err(Error::SingularMethod);
    }
    let mut g = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut acc = sc.alpha_coef.get(i).copied().unwrap_or(0.0);
        for j in 1..=i.min(b.len() - 1) {
            acc -= b[j] * g[i - j];
        }
        g.push(acc / b[0]);
    }
    Ok(TaylorCoefficients { omega: g })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub e: Vec<f64>,
    pub bound: Vec<f64>,
    pub max_abs_e: f64,
    /// False when no bound applies (`p > 1` or `tau = 1`); `bound` is then zero.
    pub bound_available: bool,
    pub omega: Vec<f64>,
    pub gamma: Vec<f64>,
}

pub fn componentwise_error(p: usize, alpha: f64, k: usize, tau: f64, n: usize) -> Result<ErrorReport> {
    let sc = build_method(p, k, alpha, tau)?;
    error_report(&sc, n)
}

pub fn error_report(sc: &StepCoefficients, n: usize) -> Result<ErrorReport> {
    let gf = GeneratingFunction::new(sc.bdf.clone(), sc.alpha)?;
    let omega = genfun_taylor(&gf, n).omega;
    let gamma = rational_taylor(sc, n)?.omega;
    let e: Vec<f64> = omega.iter().zip(&gamma).map(|(w, g)| w - g).collect();
    let max_abs_e = e.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let bound_available = sc.p == 1 && sc.tau < 1.0;
    let bound = if bound_available {
        (0..=n)
            .map(|j| error_bound(sc.alpha, sc.tau, j, sc.k))
            .collect::<Result<Vec<_>>>()?
    } else {
        vec![0.0; n + 1]
    };
    Ok(ErrorReport {
        e,
        bound,
        max_abs_e,
        bound_available,
        omega,
        gamma,
    })
}

/// What `tau_scan` minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanObjective {
    /// `||A_p^(alpha-1) - R~(A_p)||_inf` for the `N x N` lower triangular
    /// Toeplitz matrices, i.e. the absolute sum of the first `N` first-column
    /// errors of the approximant of `a(zeta)^(alpha - 1)`.
    #[default]
    InversePowerNorm,
    /// `max_{j<=N} |omega_j - gamma_j|` on the method's own coefficients.
    CoefficientMax,
}

pub fn scan_error(objective: ScanObjective, p: usize, alpha: f64, k: usize, tau: f64, n: usize) -> Result<f64> {
    let sc = build_method(p, k, alpha, tau)?;
    match objective {
        ScanObjective::InversePowerNorm => {
            let exact = bdf_power_taylor(&sc.bdf, alpha - 1.0, n);
            let approx = approximant_taylor(&sc.partial_fractions, &sc.bdf, n);
            Ok((0..n).map(|j| (exact[j] - approx[j]).abs()).sum())
        }
        ScanObjective::CoefficientMax => {
            let gf = GeneratingFunction::new(sc.bdf.clone(), alpha)?;
            let omega = genfun_taylor(&gf, n);
            let gamma = rational_taylor(&sc, n)?;
            Ok((0..=n).fold(0.0f64, |m, j| m.max((omega[j] - gamma[j]).abs())))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TauScan {
    pub tau_star: f64,
    pub curve: Vec<(f64, f64)>,
}

pub fn tau_scan(
    p: usize,
    alpha: f64,
    k: usize,
    n: usize,
    grid: &[f64],
    objective: ScanObjective,
) -> Result<TauScan> {
    if grid.is_empty() {
        return Err(Error::domain("tau grid is empty"));
    }
    let mut curve = Vec::with_capacity(grid.len());
    for &tau in grid {
        curve.push((tau, scan_error(objective, p, alpha, k, tau, n)?));
    }
    let tau_star = curve
        .iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .map(|c| c.0)
        .expect("non-empty");
    Ok(TauScan { tau_star, curve })
}

/// `n` points spaced evenly in `log10` between `lo` and `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
            }
        })
        .collect()
}

fn ln_psi(a: f64, j: usize, k: usize) -> f64 {
    let (jf, kf) = (j as f64, k as f64);
    let sa = a.sqrt();
    let branch1 = || 0.5 * a.ln() - (2.0 * kf + 2.0) * (sa - 1.0).ln() + jf * ((a + 1.0) / (2.0 * sa)).ln();
    let c = ((a + 1.0).sqrt() + 2f64.sqrt()).ln();
    let branch2 = || {
        c + ((jf - 1.0) / 2.0 - kf) * ((jf - 2.0 * kf - 1.0) / (4.0 * kf + 1.0)).ln()
            - (jf / 2.0 + kf) * ((jf + 2.0 * kf) / (4.0 * kf + 1.0)).ln()
            + jf * ((a + 1.0) / 2.0).ln()
            - (2.0 * kf + 1.5) * (a - 1.0).ln()
    };
    let branch3 = || c - (a - 1.0).ln() + (jf / 2.0 - kf) * (a + 1.0).ln() - ((jf + 1.0) / 2.0 + kf) * LN_2;
    if j <= 2 * k + 1 {
        return branch1();
    }
    let j_star = (6.0 * kf + 1.0 + a * (2.0 * kf + 1.0)) / (a - 1.0);
    if jf < j_star {
        branch2()
    } else if jf > j_star {
        branch3()
    } else {
        branch2().min(branch3())
    }
}

/// The three-branch factor `Psi(a, j, k)` of the coefficient error bound.
pub fn psi_bound(a: f64, j: usize, k: usize) -> Result<f64> {
    if !(a > 1.0) {
        return Err(Error::domain("a must exceed 1"));
    }
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    Ok(ln_psi(a, j, k).exp())
}

/// `2^(3-2k) sin(alpha pi) tau^alpha Psi(a, j, k)` with `a = (1+tau)/(1-tau)`.
/// May be `+inf` for large `j`.
pub fn error_bound(alpha: f64, tau: f64, j: usize, k: usize) -> Result<f64> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::domain("tau must be in (0, 1) for the error bound"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain("alpha must be in (0, 1)"));
    }
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    let a = (1.0 + tau) / (1.0 - tau);
    let ln = (3.0 - 2.0 * k as f64) * LN_2 + (alpha * PI).sin().ln() + alpha * tau.ln() + ln_psi(a, j, k);
    Ok(ln.exp())
}

/// `(4k + 3) / (2j)`, the `tau` minimizing the bound at fixed `j`.
pub fn tau_opt_formula(j: usize, k: usize) -> Result<f64> {
    if j < 2 * k + 3 {
        return Err(Error::domain("j must be at least 2k + 3"));
    }
    Ok((4 * k + 3) as f64 / (2.0 * j as f64))
}
