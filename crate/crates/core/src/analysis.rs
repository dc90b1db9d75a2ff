//! Stability regions, root certification and consistency diagnostics.

use crate::bdf::{bdf_coefficients, BdfTable};
use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::gauss_jacobi::{jacobi_polynomial_roots, JacobiWeight};
use crate::mittag_leffler::ml_sequence;
use crate::poly;
use crate::rational::{build_method, PartialFractionForm, StepCoefficients};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Image of the unit circle under a method's generating function. The
/// stability region is the complement of the enclosed set.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityBoundary {
    /// `n` equispaced angles from 0 to `2 pi` inclusive, so the curve closes.
    pub theta: Vec<f64>,
    pub points: Vec<Complex64>,
}

fn theta_grid(n_theta: usize) -> Result<Vec<f64>> {
    if n_theta < 8 {
        return Err(Error::domain("n_theta must be at least 8"));
    }
    let last = (n_theta - 1) as f64;
    Ok((0..n_theta).map(|i| 2.0 * PI * i as f64 / last).collect())
}

/// `p_m(zeta) / q_m(zeta)` on `|zeta| = 1`, evaluated as
/// `a(zeta) sum_l gamma_l / (eta_l + a(zeta))`.
pub fn stability_boundary(sc: &StepCoefficients, n_theta: usize) -> Result<StabilityBoundary> {
    let theta = theta_grid(n_theta)?;
    let points: Vec<Complex64> = theta.iter().map(|&t| sc.eval(Complex64::from_polar(1.0, t))).collect();
    if let Some(i) = points.iter().position(|z| !z.is_finite()) {
        return Err(Error::Stability(format!("q_m vanishes on the unit circle near theta = {}", theta[i])));
    }
    Ok(StabilityBoundary { theta, points })
}

/// `a(zeta)^alpha` on `|zeta| = 1` for the FBDF of order `p`. The principal
/// branch is the analytic one: `a(e^{i theta})` never meets the negative real
/// axis for `p <= 6`.
pub fn fbdf_boundary(p: usize, alpha: f64, n_theta: usize) -> Result<StabilityBoundary> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain("alpha must be in (0, 1]"));
    }
    let bdf = bdf_coefficients(p)?;
    let theta = theta_grid(n_theta)?;
    let scale: f64 = bdf.coefficients().iter().map(|c| c.abs()).sum();
    let points = theta
        .iter()
        .map(|&t| {
            let a = poly::eval_complex(bdf.coefficients(), Complex64::from_polar(1.0, t));
            // zeta = 1 up to the rounding of theta
            if a.norm() <= 8.0 * f64::EPSILON * scale {
                Complex64::new(0.0, 0.0)
            } else {
                a.powf(alpha)
            }
        })
        .collect();
    Ok(StabilityBoundary { theta, points })
}

/// Symmetric Hausdorff distance between the sampled point sets.
pub fn boundary_distance(a: &StabilityBoundary, b: &StabilityBoundary) -> f64 {
    let one_way = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(&a.points, &b.points).max(one_way(&b.points, &a.points))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootReport {
    pub p_roots: Vec<Complex64>,
    pub q_roots: Vec<Complex64>,
    /// Largest `|poly(root)| / sum |c_j| |root|^j` over all roots, using the
    /// stored monomial coefficients.
    pub backward_error: f64,
    /// Distance of the root nearest to 1 from 1.
    pub unit_root_offset: f64,
    /// Smallest modulus among the remaining p-roots and all q-roots.
    pub min_modulus: f64,
    /// `jacobi_root_crosscheck` for `p = 1`, otherwise `None`.
    pub crosscheck_residual: Option<f64>,
}

pub const UNIT_ROOT_TOL: f64 = 1e-8;

fn roots_of_shifted(bdf: &BdfTable, shift: f64) -> Vec<Complex64> {
    let mut c = bdf.coefficients().to_vec();
    c[0] += shift;
    poly::roots(&c)
}

fn p_roots(sc: &StepCoefficients) -> Vec<Complex64> {
    let mut out = roots_of_shifted(&sc.bdf, 0.0);
    for z in sc.partial_fractions.numerator_roots() {
        out.extend(roots_of_shifted(&sc.bdf, -z));
    }
    out
}

fn q_roots(sc: &StepCoefficients) -> Vec<Complex64> {
    sc.partial_fractions
        .eta
        .iter()
        .flat_map(|&e| roots_of_shifted(&sc.bdf, e))
        .collect()
}

/// Roots of `p_m` and `q_m` from the factored form: `q_m` vanishes where
/// `a(zeta) = -eta_l`, and `p_m` where `a(zeta) = 0` or `a(zeta) = z_i` with
/// `z_i` the zeros of the partial-fraction numerator. Each is a degree-`p`
/// problem. Certifies that `q_m` has all roots outside the closed unit disk
/// and `p_m` has a simple root at 1 and all others outside.
pub fn zero_stability_check(sc: &StepCoefficients) -> Result<RootReport> {
    let pr = p_roots(sc);
    let qr = q_roots(sc);
    let backward = |c: &[f64], roots: &[Complex64]| {
        roots
            .iter()
            .map(|&z| poly::eval_complex(c, z).norm() / poly::abs_scale(c, z))
            .fold(0.0, f64::max)
    };
    let backward_error = backward(&sc.alpha_coef, &pr).max(backward(&sc.beta_coef, &qr));

    let unit = pr
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - 1.0).norm().total_cmp(&(b.1 - 1.0).norm()))
        .map(|(i, z)| (i, (z - 1.0).norm()));
    let (unit_idx, unit_root_offset) = unit.unwrap_or((usize::MAX, f64::INFINITY));
    let others = pr
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != unit_idx)
        .map(|(_, z)| *z)
        .chain(qr.iter().copied());
    let min_modulus = others.clone().map(|z| z.norm()).fold(f64::INFINITY, f64::min);

    let mut problems = Vec::new();
    if unit_root_offset > UNIT_ROOT_TOL {
        problems.push(format!("no root of p_m within {UNIT_ROOT_TOL:e} of 1"));
    }
    let bad: Vec<Complex64> = others.filter(|z| z.norm() <= 1.0 + UNIT_ROOT_TOL).collect();
    if !bad.is_empty() {
        problems.push(format!("roots in the closed unit disk: {bad:?}"));
    }
    if !problems.is_empty() {
        return Err(Error::Stability(problems.join("; ")));
    }
    let crosscheck_residual = if sc.p == 1 {
        Some(crosscheck(sc, &pr, &qr)?)
    } else {
        None
    };
    Ok(RootReport {
        p_roots: pr,
        q_roots: qr,
        backward_error,
        unit_root_offset,
        min_modulus,
        crosscheck_residual,
    })
}

fn sorted_real(v: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = v.collect();
    v.sort_by(f64::total_cmp);
    v
}

fn crosscheck(sc: &StepCoefficients, pr: &[Complex64], qr: &[Complex64]) -> Result<f64> {
    let (alpha, tau, k) = (sc.alpha, sc.tau, sc.k);
    let map = |t: f64| 1.0 + tau * (1.0 - t) / (1.0 + t);
    let theta = if k > 1 {
        jacobi_polynomial_roots(&JacobiWeight::new(1.0 - alpha, alpha)?, k - 1)?
    } else {
        Vec::new()
    };
    let vartheta = jacobi_polynomial_roots(&JacobiWeight::fractional(alpha)?, k)?;
    let mut expect_p = sorted_real(theta.into_iter().map(map));
    expect_p.insert(0, 1.0);
    let expect_q = sorted_real(vartheta.into_iter().map(map));
    let dist = |expect: &[f64], got: &[Complex64]| -> f64 {
        if expect.len() != got.len() {
            return f64::INFINITY;
        }
        let mut got: Vec<Complex64> = got.to_vec();
        got.sort_by(|a, b| a.re.total_cmp(&b.re));
        expect
            .iter()
            .zip(&got)
            .map(|(e, g)| (g - e).norm())
            .fold(0.0, f64::max)
    };
    Ok(dist(&expect_p, pr).max(dist(&expect_q, qr)))
}

/// Largest distance between the roots of `p_k`, `q_k` (p = 1) and the images
/// `1 + tau (1 - x) / (1 + x)` of the roots of `P_{k-1}^(1-alpha, alpha)` and
/// `P_k^(alpha-1, -alpha)`, the latter computed by Newton on the Jacobi
/// recurrence rather than from the quadrature rule.
pub fn jacobi_root_crosscheck(k: usize, alpha: f64, tau: f64) -> Result<f64> {
    let sc = build_method(1, k, alpha, tau)?;
    crosscheck(&sc, &p_roots(&sc), &q_roots(&sc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyCurve {
    pub h_values: Vec<f64>,
    /// `+inf` where the argument of the logarithm is exactly zero.
    pub q_values: Vec<f64>,
}

fn log_h(h: f64, alpha: f64, arg: Dd) -> f64 {
    if arg.is_zero() {
        return f64::INFINITY;
    }
    (arg.abs().to_f64().ln() - alpha * h.ln()) / h.ln()
}

fn check_h(h_grid: &[f64]) -> Result<()> {
    if h_grid.is_empty() || h_grid.iter().any(|&h| !(h > 0.0 && h < 1.0)) {
        return Err(Error::domain("h values must lie in (0, 1)"));
    }
    Ok(())
}

fn steps_for(h: f64) -> Result<usize> {
    let n = (1.0 / h).round();
    if (n * h - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("h = {h} is not of the form 1/N")));
    }
    Ok(n as usize)
}

/// `R_k(zeta) = a sum_l gamma_l / (eta_l + a)` with `a = 1 - zeta`.
fn rk_dd(pf: &PartialFractionForm, a: Dd) -> Dd {
    let s: Dd = pf
        .gamma
        .iter()
        .zip(&pf.eta)
        .map(|(&g, &e)| Dd::from(g) / (a + e))
        .sum();
    a * s
}

/// Taylor coefficients of `R_k(zeta)` for `p = 1`:
/// `c_j = sum_l gamma_l (1 + eta_l)^(-j-1)`, `gamma_j = c_j - c_{j-1}`.
pub(crate) fn rk_taylor_dd(pf: &PartialFractionForm, n: usize) -> Vec<Dd> {
    let mut pow: Vec<Dd> = pf.eta.iter().map(|&e| (Dd::ONE + e).recip()).collect();
    let ratio = pow.clone();
    let mut out = Vec::with_capacity(n + 1);
    let mut prev = Dd::ZERO;
    for _ in 0..=n {
        let c: Dd = pf.gamma.iter().zip(&pow).map(|(&g, &p)| p * g).sum();
        out.push(c - prev);
        prev = c;
        for (p, r) in pow.iter_mut().zip(&ratio) {
            *p *= *r;
        }
    }
    out
}

/// `(-1)^j binom(alpha, j)`, `j = 0..=n`.
pub(crate) fn grunwald_dd(alpha: f64, n: usize) -> Vec<Dd> {
    let mut w = Vec::with_capacity(n + 1);
    let mut cur = Dd::ONE;
    w.push(cur);
    for j in 1..=n {
        cur *= Dd::from(j as f64 - 1.0 - alpha) / j as f64;
        w.push(cur);
    }
    w
}

fn method_data(alpha: f64, tau: f64, k: usize) -> Result<PartialFractionForm> {
    Ok(build_method(1, k, alpha, tau)?.partial_fractions)
}

/// `log_h(h^-alpha |R_k(e^-h) - (1 - e^-h)^alpha|)`, evaluated in
/// double-double for the method's (rounded) `gamma_l`, `eta_l`.
pub fn consistency_qk(alpha: f64, tau: f64, k: usize, h_grid: &[f64]) -> Result<ConsistencyCurve> {
    check_h(h_grid)?;
    let pf = method_data(alpha, tau, k)?;
    let q_values = h_grid
        .iter()
        .map(|&h| {
            let a = Dd::ONE - Dd::from(-h).exp();
            log_h(h, alpha, rk_dd(&pf, a) - a.powf(alpha))
        })
        .collect();
    Ok(ConsistencyCurve {
        h_values: h_grid.to_vec(),
        q_values,
    })
}

/// `log_h(h^-alpha |sum_{j=0..N} (omega_j - gamma_{j,k}) (y(t_{N-j}) - y(0))|)`
/// with `y(t) = E_alpha(-t^alpha)`, `N = 1/h`.
pub fn consistency_qtilde(alpha: f64, tau: f64, k: usize, h_grid: &[f64]) -> Result<ConsistencyCurve> {
    check_h(h_grid)?;
    let pf = method_data(alpha, tau, k)?;
    let mut q_values = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let n = steps_for(h)?;
        let times: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
        let y = ml_sequence(alpha, -1.0, &times)?;
        let om = grunwald_dd(alpha, n);
        let ga = rk_taylor_dd(&pf, n);
        let sum: Dd = (0..=n).map(|j| (om[j] - ga[j]) * (y[n - j] - y[0])).sum();
        q_values.push(log_h(h, alpha, sum));
    }
    Ok(ConsistencyCurve {
        h_values: h_grid.to_vec(),
        q_values,
    })
}

/// `log_h(h^-alpha sum_{j=0..N} |omega_j - gamma_{j,k}|)`, `N = 1/h`.
pub fn consistency_qbar(alpha: f64, tau: f64, k: usize, h_grid: &[f64]) -> Result<ConsistencyCurve> {
    check_h(h_grid)?;
    let pf = method_data(alpha, tau, k)?;
    let mut q_values = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let n = steps_for(h)?;
        let om = grunwald_dd(alpha, n);
        let ga = rk_taylor_dd(&pf, n);
        let sum: Dd = (0..=n).map(|j| (om[j] - ga[j]).abs()).sum();
        q_values.push(log_h(h, alpha, sum));
    }
    Ok(ConsistencyCurve {
        h_values: h_grid.to_vec(),
        q_values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rational_taylor;
    use approx::assert_relative_eq;

    #[test]
    fn fbdf1_boundary_values() {
        let b = fbdf_boundary(1, 0.5, 9).unwrap();
        assert!(b.points[0].norm() < 1e-12);
        // theta = pi is sample 4 of 9
        assert_relative_eq!(b.points[4].re, 2f64.sqrt(), max_relative = 1e-14);
        assert!(b.points[4].im.abs() < 1e-14);
        assert!((b.points[0] - b.points[8]).norm() < 1e-10);
        assert!(fbdf_boundary(1, 0.5, 7).is_err());
    }

    #[test]
    fn fbdf_boundary_matches_truncated_series() {
        for p in 1..=4 {
            let b = fbdf_boundary(p, 0.6, 16).unwrap();
            let gf = crate::bdf::GeneratingFunction::new(bdf_coefficients(p).unwrap(), 0.6).unwrap();
            let om = crate::bdf::genfun_taylor(&gf, 200);
            // inside the disk the series converges fast
            for &t in &b.theta {
                let z = Complex64::from_polar(0.7, t);
                let series = poly::eval_complex(om.as_slice(), z);
                let a = poly::eval_complex(bdf_coefficients(p).unwrap().coefficients(), z);
                assert!((series - a.powf(0.6)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kstep_boundary_closes_at_zero() {
        let sc = build_method(2, 6, 0.5, 0.1).unwrap();
        let b = stability_boundary(&sc, 64).unwrap();
        assert!(b.points[0].norm() <= 1e-12);
        assert!((b.points[0] - b.points[63]).norm() <= 1e-10);
        let sc = build_method(1, 3, 0.5, 0.4).unwrap();
        let b = stability_boundary(&sc, 32).unwrap();
        for (t, z) in b.theta.iter().zip(&b.points) {
            let w = sc.eval_monomial(Complex64::from_polar(1.0, *t));
            assert!((w - z).norm() < 1e-12);
        }
    }

    #[test]
    fn boundary_close_to_fbdf1() {
        let sc = build_method(1, 12, 0.5, 0.1).unwrap();
        let a = stability_boundary(&sc, 720).unwrap();
        let b = fbdf_boundary(1, 0.5, 720).unwrap();
        assert!(boundary_distance(&a, &b) <= 0.05);
        assert_eq!(boundary_distance(&b, &b), 0.0);
    }

    #[test]
    fn one_point_method_roots() {
        let sc = build_method(1, 1, 0.5, 1.0).unwrap();
        let r = zero_stability_check(&sc).unwrap();
        assert_eq!(r.p_roots.len(), 1);
        assert_eq!(r.q_roots.len(), 1);
        assert!((r.p_roots[0] - 1.0).norm() < 1e-14);
        assert!((r.q_roots[0] - 2.0).norm() < 1e-14);
        assert!(r.crosscheck_residual.unwrap() < 1e-14);
    }

    #[test]
    fn root_counts_and_backward_error() {
        for &(p, k, tau) in &[(1, 8, 0.1), (2, 5, 0.5), (3, 4, 1.0)] {
            let sc = build_method(p, k, 0.4, tau).unwrap();
            let r = zero_stability_check(&sc).unwrap();
            assert_eq!(r.p_roots.len(), sc.m);
            assert_eq!(r.q_roots.len(), sc.m);
            assert!(r.backward_error < 1e-12, "{}", r.backward_error);
            assert!(r.min_modulus > 1.0);
        }
    }

    #[test]
    fn q_roots_are_shifted_quadrature_nodes() {
        let sc = build_method(1, 6, 0.3, 0.2).unwrap();
        let r = zero_stability_check(&sc).unwrap();
        let mut got: Vec<f64> = r.q_roots.iter().map(|z| z.re).collect();
        got.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = sc.partial_fractions.eta.iter().map(|e| 1.0 + e).collect();
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            assert_relative_eq!(g, w, max_relative = 1e-15);
        }
    }

    #[test]
    fn crosscheck_small_sweep() {
        for &k in &[1, 2, 5, 10, 16] {
            for &a in &[0.25, 0.5, 0.75] {
                for &t in &[0.1, 0.5, 1.0] {
                    let r = jacobi_root_crosscheck(k, a, t).unwrap();
                    assert!(r <= 1e-8, "k={k} a={a} t={t}: {r}");
                }
            }
        }
    }

    #[test]
    fn grunwald_and_taylor_dd_match_f64() {
        let g = grunwald_dd(0.5, 50);
        let w = crate::bdf::grunwald_weights(0.5, 50).unwrap();
        for j in 0..=50 {
            assert!((g[j].to_f64() - w[j]).abs() <= 1e-16 * w[j].abs().max(1e-300) * 4.0);
        }
        let sc = build_method(1, 6, 0.5, 0.2).unwrap();
        let t = rational_taylor(&sc, 40).unwrap();
        let d = rk_taylor_dd(&sc.partial_fractions, 40);
        for j in 0..=40 {
            assert!((d[j].to_f64() - t[j]).abs() <= 1e-13 * t[0].abs());
        }
    }

    #[test]
    fn qk_closed_form_at_one_h() {
        let (alpha, tau, k, h) = (0.5, 0.1, 3, 0.25);
        let c = consistency_qk(alpha, tau, k, &[h]).unwrap();
        let pf = build_method(1, k, alpha, tau).unwrap().partial_fractions;
        let a = -(-h).exp_m1();
        let d = a * pf.eval(a) - a.powf(alpha);
        let expect = (h.powf(-alpha) * d.abs()).ln() / h.ln();
        assert_relative_eq!(c.q_values[0], expect, max_relative = 1e-9);
    }

    #[test]
    fn qk_grows_with_k() {
        let h: Vec<f64> = (4..=10).map(|e| 2f64.powi(-e)).collect();
        let q8 = consistency_qk(0.5, 0.1, 8, &h).unwrap();
        let q32 = consistency_qk(0.5, 0.1, 32, &h).unwrap();
        for (a, b) in q8.q_values.iter().zip(&q32.q_values) {
            assert!(b > a);
        }
    }

    #[test]
    fn qtilde_requires_unit_fraction() {
        assert!(consistency_qtilde(0.5, 0.1, 4, &[0.3]).is_err());
        assert!(consistency_qbar(0.5, 0.1, 4, &[0.0]).is_err());
    }

    #[test]
    fn qbar_increases_with_k() {
        let h: Vec<f64> = (4..=8).map(|e| 2f64.powi(-e)).collect();
        let a = consistency_qbar(0.5, 0.1, 8, &h).unwrap();
        let b = consistency_qbar(0.5, 0.1, 16, &h).unwrap();
        let c = consistency_qbar(0.5, 0.1, 32, &h).unwrap();
        for i in 0..h.len() {
            assert!(a.q_values[i] < b.q_values[i] && b.q_values[i] < c.q_values[i]);
        }
    }

    #[test]
    fn qbar_with_pade_data_is_near_exact() {
        // tau = 1: gamma_j = omega_j for j < 2k up to the rounding of the rule
        let c = consistency_qbar(0.5, 1.0, 8, &[1.0 / 15.0]).unwrap();
        assert!(c.q_values[0] > 10.0);
    }
}
