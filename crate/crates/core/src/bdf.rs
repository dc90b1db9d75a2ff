//! BDF coefficient tables and the Taylor coefficients of the FBDF generating
//! function `(a_0 + a_1 z + ... + a_p z^p)^alpha`.
//!
//! The coefficients decay like `j^(-alpha-1)`, so there is no overflow risk for
//! any `N` that fits in memory.

use crate::error::{Error, Result};

/// Coefficients `a_0..a_p` of the BDF of order `p`, i.e. the monomial
/// coefficients of `sum_{i=1..p} (1 - z)^i / i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdfTable {
    order: usize,
    coefficients: Vec<f64>,
}

impl BdfTable {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn a0(&self) -> f64 {
        self.coefficients[0]
    }
}

pub fn bdf_coefficients(p: usize) -> Result<BdfTable> {
    if !(1..=6).contains(&p) {
        return Err(Error::domain("p must be in 1..6"));
    }
    let mut a = vec![0.0; p + 1];
    for i in 1..=p {
        // (1 - z)^i / i
        let mut binom = 1.0;
        for (j, aj) in a.iter_mut().enumerate().take(i + 1) {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            *aj += sign * binom / i as f64;
            binom = binom * (i - j) as f64 / (j + 1) as f64;
        }
    }
    Ok(BdfTable {
        order: p,
        coefficients: a,
    })
}

/// `(a(z))^alpha` for a BDF polynomial `a`.
///
/// `alpha = 1` is admitted so that the integer-power identity can be checked
/// on the same code path.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingFunction {
    bdf: BdfTable,
    alpha: f64,
}

impl GeneratingFunction {
    pub fn new(bdf: BdfTable, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::domain("alpha must be in (0, 1)"));
        }
        Ok(Self { bdf, alpha })
    }

    pub fn bdf(&self) -> &BdfTable {
        &self.bdf
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Taylor coefficients `omega_0..omega_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorCoefficients {
    pub omega: Vec<f64>,
}

impl TaylorCoefficients {
    pub fn as_slice(&self) -> &[f64] {
        &self.omega
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

impl std::ops::Index<usize> for TaylorCoefficients {
    type Output = f64;
    fn index(&self, j: usize) -> &f64 {
        &self.omega[j]
    }
}

/// `omega_0..omega_n` by the power-series power recurrence
/// `n a_0 w_n = sum_{i=1..min(n,p)} (i (alpha + 1) - n) a_i w_{n-i}`.
pub fn genfun_taylor(gf: &GeneratingFunction, n: usize) -> TaylorCoefficients {
    bdf_power_taylor(&gf.bdf, gf.alpha, n)
}

/// Taylor coefficients of `a(z)^e` for any real exponent `e`, by the same
/// recurrence. Negative exponents are used for `A^(alpha - 1)`.
pub fn bdf_power_taylor(bdf: &BdfTable, e: f64, n: usize) -> TaylorCoefficients {
    let a = bdf.coefficients();
    let p = bdf.order();
    let mut w = Vec::with_capacity(n + 1);
    w.push(a[0].powf(e));
    for j in 1..=n {
        let mut s = 0.0;
        for i in 1..=j.min(p) {
            s += ((i as f64) * (e + 1.0) - j as f64) * a[i] * w[j - i];
        }
        w.push(s / (j as f64 * a[0]));
    }
    TaylorCoefficients { omega: w }
}

/// Grünwald-Letnikov weights `(-1)^j binom(alpha, j)`, `j = 0..n`.
pub fn grunwald_weights(alpha: f64, n: usize) -> Result<TaylorCoefficients> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain("alpha must be in (0, 1)"));
    }
    let mut w = Vec::with_capacity(n + 1);
    w.push(1.0);
    for j in 1..=n {
        let prev = w[j - 1];
        w.push(prev * ((j - 1) as f64 - alpha) / j as f64);
    }
    Ok(TaylorCoefficients { omega: w })
}

/// Product of the lower-triangular Toeplitz matrix with the given first column
/// and `v`, i.e. the causal convolution truncated to `v.len()`.
pub fn toeplitz_lower_apply(first_column: &[f64], v: &[f64]) -> Vec<f64> {
    (0..v.len())
        .map(|i| {
            let lo = i.saturating_sub(first_column.len() - 1);
            (lo..=i).map(|j| first_column[i - j] * v[j]).sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn gf(p: usize, alpha: f64) -> GeneratingFunction {
        GeneratingFunction::new(bdf_coefficients(p).unwrap(), alpha).unwrap()
    }

    /// Independent route: exp(alpha * log(a(z))) on truncated power series.
    fn taylor_via_exp_log(a: &[f64], alpha: f64, n: usize) -> Vec<f64> {
        // u = a / a0 - 1, log(1 + u) = sum (-1)^{k+1} u^k / k via log' = u' / (1 + u)
        let a0 = a[0];
        let mut f = vec![0.0; n + 1];
        for (i, &ai) in a.iter().enumerate().take(n + 1) {
            f[i] = ai / a0;
        }
        // g = log f, g' f = f'
        let mut g = vec![0.0; n + 1];
        for j in 1..=n {
            let mut s = j as f64 * f[j];
            for i in 1..j {
                s -= i as f64 * g[i] * f[j - i];
            }
            g[j] = s / j as f64;
        }
        let h: Vec<f64> = g.iter().map(|x| alpha * x).collect();
        // e = exp h, e' = h' e
        let mut e = vec![0.0; n + 1];
        e[0] = 1.0;
        for j in 1..=n {
            let mut s = 0.0;
            for i in 1..=j {
                s += i as f64 * h[i] * e[j - i];
            }
            e[j] = s / j as f64;
        }
        let scale = a0.powf(alpha);
        e.iter().map(|x| x * scale).collect()
    }

    #[test]
    fn bdf_tables() {
        assert_eq!(bdf_coefficients(1).unwrap().coefficients(), &[1.0, -1.0]);
        let b2 = bdf_coefficients(2).unwrap();
        for (x, y) in b2.coefficients().iter().zip([1.5, -2.0, 0.5]) {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-15);
        }
        let b3 = bdf_coefficients(3).unwrap();
        for (x, y) in b3
            .coefficients()
            .iter()
            .zip([11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0])
        {
            assert_abs_diff_eq!(*x, y, epsilon = 1e-15);
        }
        for p in 1..=6 {
            let b = bdf_coefficients(p).unwrap();
            assert!(b.a0() > 0.0);
            assert_abs_diff_eq!(b.coefficients().iter().sum::<f64>(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn bdf_order_out_of_range() {
        assert!(bdf_coefficients(0).is_err());
        assert_eq!(
            bdf_coefficients(7).unwrap_err(),
            Error::Domain("p must be in 1..6".into())
        );
    }

    #[test]
    fn half_power_of_first_difference() {
        let w = genfun_taylor(&gf(1, 0.5), 2);
        assert_eq!(w.omega, vec![1.0, -0.5, -0.125]);
    }

    #[test]
    fn leading_coefficient() {
        let w = genfun_taylor(&gf(3, 0.5), 0);
        assert_eq!(w[0], (11.0f64 / 6.0).sqrt());
    }

    #[test]
    fn integer_power_reproduces_bdf() {
        for p in 1..=6 {
            let g = gf(p, 1.0);
            let w = genfun_taylor(&g, p + 10);
            for j in 0..=p + 10 {
                let expect = if j <= p { g.bdf().coefficients()[j] } else { 0.0 };
                assert_abs_diff_eq!(w[j], expect, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn negative_power() {
        // (1 - z)^-1 = 1 + z + z^2 + ...
        let w = bdf_power_taylor(&bdf_coefficients(1).unwrap(), -1.0, 20);
        assert!(w.omega.iter().all(|&x| (x - 1.0).abs() < 1e-15));
        // a^(alpha - 1) * a = a^alpha
        let b = bdf_coefficients(3).unwrap();
        let m = bdf_power_taylor(&b, -0.6, 60);
        let prod = toeplitz_lower_apply(b.coefficients(), m.as_slice());
        let direct = bdf_power_taylor(&b, 0.4, 60);
        for j in 0..=60 {
            assert_abs_diff_eq!(prod[j], direct[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn grunwald_basics() {
        let w = grunwald_weights(0.5, 3).unwrap();
        assert_eq!(w[0], 1.0);
        assert_eq!(w[1], -0.5);
        assert!(grunwald_weights(0.0, 3).is_err());
        let w1 = grunwald_weights(1.0, 4).unwrap();
        assert_eq!(w1.omega, vec![1.0, -1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn grunwald_partial_sums_telescope() {
        // sum_{j<=N} (-1)^j binom(a, j) = (-1)^N binom(a - 1, N)
        for &alpha in &[0.2, 0.5, 0.9] {
            let w = grunwald_weights(alpha, 60).unwrap();
            let mut partial = 0.0;
            let mut rhs = 1.0; // (-1)^N binom(alpha - 1, N) via its own ratio recurrence
            for n in 0..=60 {
                partial += w[n];
                if n > 0 {
                    rhs *= (n as f64 - alpha) / n as f64 * 1.0;
                    // (-1)^N binom(alpha-1, N) = prod_{i=1..N} (i - alpha) / i
                }
                assert_abs_diff_eq!(partial, rhs, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn p1_matches_grunwald() {
        for &alpha in &[0.1, 0.5, 0.9] {
            let a = genfun_taylor(&gf(1, alpha), 500);
            let b = grunwald_weights(alpha, 500).unwrap();
            for j in 0..=500 {
                assert_abs_diff_eq!(a[j], b[j], epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn recurrence_matches_exp_log_oracle() {
        for p in 1..=3 {
            for &alpha in &[0.25, 0.5, 0.8] {
                let g = gf(p, alpha);
                let w = genfun_taylor(&g, 100);
                let oracle = taylor_via_exp_log(g.bdf().coefficients(), alpha, 100);
                for j in 0..=100 {
                    assert_abs_diff_eq!(w[j], oracle[j], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn toeplitz_examples() {
        let v = [3.0, -1.0, 2.0, 5.0];
        assert_eq!(toeplitz_lower_apply(&[1.0, 0.0, 0.0], &v), v.to_vec());
        assert_eq!(
            toeplitz_lower_apply(&[1.0, -1.0], &[1.0, 1.0, 1.0]),
            vec![1.0, 0.0, 0.0]
        );
        let half = grunwald_weights(0.5, 40).unwrap();
        let full = toeplitz_lower_apply(half.as_slice(), half.as_slice());
        assert_abs_diff_eq!(full[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(full[1], -1.0, epsilon = 1e-15);
        for x in &full[2..] {
            assert_abs_diff_eq!(*x, 0.0, epsilon = 1e-15);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn semigroup(p in 1usize..=6, a1 in 0.01f64..0.5, a2 in 0.01f64..0.49, n in 1usize..=200) {
            let w1 = genfun_taylor(&gf(p, a1), n);
            let w2 = genfun_taylor(&gf(p, a2), n);
            let w12 = genfun_taylor(&gf(p, a1 + a2), n);
            let conv = toeplitz_lower_apply(w1.as_slice(), w2.as_slice());
            for j in 0..=n {
                prop_assert!((conv[j] - w12[j]).abs() <= 1e-12, "j={} {} {}", j, conv[j], w12[j]);
            }
        }
    }
}
