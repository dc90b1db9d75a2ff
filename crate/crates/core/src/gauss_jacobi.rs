//! Gauss-Jacobi quadrature for `(1 - t)^a (1 + t)^b` on `[-1, 1]`.
//!
//! Nodes are eigenvalues of the symmetric tridiagonal Jacobi matrix (implicit
//! QL, no eigenvectors), polished by one Newton step on the three-term
//! recurrence. Weights use `mu_0 / sum_n phat_n(x)^2`, which is the squared first
//! eigenvector component times `mu_0` but keeps full relative accuracy for the
//! small weights near the endpoints.

use crate::error::{Error, Result};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

pub const MAX_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiWeight {
    a: f64,
    b: f64,
}

impl JacobiWeight {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a > -1.0 && b > -1.0) || !a.is_finite() || !b.is_finite() {
            return Err(Error::domain("Jacobi exponents must exceed -1"));
        }
        Ok(Self { a, b })
    }

    /// `(1 - t)^(alpha - 1) (1 + t)^(-alpha)`.
    pub fn fractional(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain("alpha must be in (0, 1)"));
        }
        Self::new(alpha - 1.0, -alpha)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `2^(a+b+1) B(a+1, b+1)`.
    pub fn zeroth_moment(&self) -> f64 {
        let (x, y) = (self.a + 1.0, self.b + 1.0);
        let scale = 2f64.powf(self.a + self.b + 1.0);
        if (x + y - 1.0).abs() < 1e-15 {
            // B(x, 1 - x) = pi / sin(pi x)
            return scale * PI / (PI * x).sin();
        }
        scale * (ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp()
    }

    /// Diagonal of the monic recurrence, `alpha_n`.
    fn rec_a(&self, n: usize) -> f64 {
        let (a, b) = (self.a, self.b);
        if n == 0 {
            return (b - a) / (a + b + 2.0);
        }
        let s = 2.0 * n as f64 + a + b;
        (b * b - a * a) / (s * (s + 2.0))
    }

    /// Off-diagonal squared, `beta_n` for `n >= 1`.
    fn rec_b(&self, n: usize) -> f64 {
        let (a, b) = (self.a, self.b);
        let nf = n as f64;
        if n == 1 {
            // the general formula is 0/0 when a + b = -1
            let s = 2.0 + a + b;
            return 4.0 * (1.0 + a) * (1.0 + b) / (s * s * (s + 1.0));
        }
        let s = 2.0 * nf + a + b;
        4.0 * nf * (nf + a) * (nf + b) * (nf + a + b) / (s * s * (s + 1.0) * (s - 1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn apply(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Eigenvalues of the symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e[i]` couples `i` and `i + 1`), plus the first component
/// of each normalized eigenvector.
fn tridiagonal_eigen(mut d: Vec<f64>, off: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = d.len();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(&off[..n - 1]);
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::Range("tridiagonal QL did not converge".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let zf = z[i + 1];
                z[i + 1] = s * z[i] + c * zf;
                z[i] = c * z[i] - s * zf;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

/// Orthonormal recurrence at `x` (with `phat_0 = 1`): returns
/// `(pi_k(x), pi_k'(x), sum_{n<k} phat_n(x)^2)` where `pi_k` is `phat_k` up to a
/// positive constant.
fn recurrence(w: &JacobiWeight, k: usize, x: f64) -> (f64, f64, f64) {
    let (mut p_prev, mut p) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    let mut sum = 1.0;
    for n in 0..k {
        let sb = if n == 0 { 0.0 } else { w.rec_b(n).sqrt() };
        let next = (x - w.rec_a(n)) * p - sb * p_prev;
        let dnext = p + (x - w.rec_a(n)) * d - sb * d_prev;
        if n + 1 == k {
            return (next, dnext, sum);
        }
        let sn = w.rec_b(n + 1).sqrt();
        p_prev = p;
        d_prev = d;
        p = next / sn;
        d = dnext / sn;
        sum += p * p;
    }
    unreachable!("k >= 1")
}

pub fn gauss_jacobi_rule(w: &JacobiWeight, k: usize) -> Result<QuadRule> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    if k > MAX_POINTS {
        return Err(Error::domain(format!("k must be at most {MAX_POINTS}")));
    }
    let mu0 = w.zeroth_moment();
    let diag: Vec<f64> = (0..k).map(|n| w.rec_a(n)).collect();
    let off: Vec<f64> = (1..k).map(|n| w.rec_b(n).sqrt()).chain([0.0]).collect();
    let (mut nodes, _) = tridiagonal_eigen(diag, &off)?;
    nodes.sort_by(|x, y| x.total_cmp(y));
    let mut weights = Vec::with_capacity(k);
    for x in nodes.iter_mut() {
        let (v, dv, _) = recurrence(w, k, *x);
        if dv != 0.0 {
            let step = v / dv;
            if step.abs() < 1e-8 {
                *x -= step;
            }
        }
        let (_, _, sum) = recurrence(w, k, *x);
        weights.push(mu0 / sum);
    }
    Ok(QuadRule { nodes, weights })
}

/// Moments `mu_0..mu_m` from
/// `(r + a + b + 2) mu_{r+1} = (b - a) mu_r + r mu_{r-1}`.
pub fn jacobi_moments(w: &JacobiWeight, m: usize) -> Vec<f64> {
    let (a, b) = (w.a, w.b);
    let mut mu = Vec::with_capacity(m + 1);
    mu.push(w.zeroth_moment());
    for r in 0..m {
        let rf = r as f64;
        let prev = if r == 0 { 0.0 } else { mu[r - 1] };
        let next = ((b - a) * mu[r] + rf * prev) / (rf + a + b + 2.0);
        mu.push(next);
    }
    mu
}

/// Jacobi polynomial `P_n^(a,b)` and its derivative, standard normalization.
pub fn jacobi_polynomial(w: &JacobiWeight, n: usize, x: f64) -> (f64, f64) {
    let (a, b) = (w.a, w.b);
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = (a + 1.0) + (a + b + 2.0) * (x - 1.0) / 2.0;
    for j in 2..=n {
        let jf = j as f64;
        let s = 2.0 * jf + a + b;
        let c1 = 2.0 * jf * (jf + a + b) * (s - 2.0);
        let c2 = (s - 1.0) * (s * (s - 2.0) * x + a * a - b * b);
        let c3 = 2.0 * (jf + a - 1.0) * (jf + b - 1.0) * s;
        let p2 = (c2 * p1 - c3 * p0) / c1;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let s = 2.0 * nf + a + b;
    let dp = (nf * (a - b - s * x) * p1 + 2.0 * (nf + a) * (nf + b) * p0) / (s * (1.0 - x * x));
    (p1, dp)
}

/// Roots of `P_n^(a,b)` in ascending order, by Newton's method with deflation
/// applied directly to the polynomial recurrence. Independent of the
/// eigenvalue route in [`gauss_jacobi_rule`].
pub fn jacobi_polynomial_roots(w: &JacobiWeight, n: usize) -> Result<Vec<f64>> {
    let mut roots: Vec<f64> = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = -((i as f64 + 0.5) * PI / n as f64).cos();
        if let Some(&last) = roots.last() {
            if x <= last {
                x = 0.5 * (last + 1.0);
            }
        }
        let mut converged = false;
        let mut prev_step = f64::INFINITY;
        for _ in 0..200 {
            let (p, dp) = jacobi_polynomial(w, n, x);
            let defl: f64 = roots.iter().map(|r| 1.0 / (x - r)).sum();
            let step = p / (dp - p * defl);
            let mut nx = x - step;
            if !(nx > -1.0 && nx < 1.0) {
                nx = if nx <= -1.0 { 0.5 * (x - 1.0) } else { 0.5 * (x + 1.0) };
            }
            let moved = (nx - x).abs();
            // rounding-limited once the step stops shrinking
            let done = moved <= 4.0 * f64::EPSILON * nx.abs().max(1e-3) || (moved < 1e-10 && moved >= prev_step);
            prev_step = moved;
            x = nx;
            if done {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::Range(format!("Jacobi root {i} of degree {n} did not converge")));
        }
        roots.push(x);
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    Ok(roots)
}
