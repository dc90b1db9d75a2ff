//! Dense real polynomials in the monomial basis, coefficients stored in
//! ascending order (`c[0] + c[1] x + ...`).

use nalgebra::DMatrix;
use num_complex::Complex64;

pub fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, &x) in a.iter().enumerate() {
        out[i] += x;
    }
    for (i, &x) in b.iter().enumerate() {
        out[i] += x;
    }
    out
}

/// `p(inner(x))` by Horner's scheme on polynomials.
pub fn compose(p: &[f64], inner: &[f64]) -> Vec<f64> {
    let mut acc: Vec<f64> = Vec::new();
    for &c in p.iter().rev() {
        acc = mul(&acc, inner);
        acc = add(&acc, &[c]);
    }
    acc
}

pub fn eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn eval_complex(p: &[f64], z: Complex64) -> Complex64 {
    p.iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Value and derivative at `z`.
pub fn eval_with_derivative(p: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::new(0.0, 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// `sum |c_j| |z|^j`, the natural scale for the rounding error of `eval_complex`.
pub fn abs_scale(p: &[f64], z: Complex64) -> f64 {
    let r = z.norm();
    p.iter().rev().fold(0.0, |acc, &c| acc * r + c.abs())
}

/// Index of the highest non-zero coefficient.
pub fn degree(p: &[f64]) -> Option<usize> {
    p.iter().rposition(|&c| c != 0.0)
}

/// All complex roots, from the eigenvalues of the companion matrix followed by
/// one Newton step on the original coefficients.
pub fn roots(p: &[f64]) -> Vec<Complex64> {
    let Some(deg) = degree(p) else {
        return Vec::new();
    };
    if deg == 0 {
        return Vec::new();
    }
    let lead = p[deg];
    if deg == 1 {
        return vec![Complex64::new(-p[0] / lead, 0.0)];
    }
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -p[i] / lead;
    }
    let eig = companion.complex_eigenvalues();
    eig.iter()
        .map(|&z| {
            let (v, d) = eval_with_derivative(&p[..=deg], z);
            if d.norm() > 0.0 {
                let step = v / d;
                let polished = z - step;
                if polished.is_finite() && step.norm() < 0.5 * z.norm().max(1e-300) {
                    return polished;
                }
            }
            z
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_binomial() {
        // (1 + x)^2 with x = 1 - z  ->  4 - 4z + z^2
        let out = compose(&[1.0, 2.0, 1.0], &[1.0, -1.0]);
        assert_eq!(out, vec![4.0, -4.0, 1.0]);
    }

    #[test]
    fn roots_of_quadratic() {
        let mut r: Vec<f64> = roots(&[2.0, -3.0, 1.0]).iter().map(|z| z.re).collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((r[0] - 1.0).abs() < 1e-14 && (r[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn complex_pair() {
        let r = roots(&[1.0, 0.0, 1.0]);
        assert_eq!(r.len(), 2);
        for z in r {
            assert!((z.norm() - 1.0).abs() < 1e-14);
            assert!(z.re.abs() < 1e-14);
        }
    }

    #[test]
    fn eval_derivative() {
        let (v, d) = eval_with_derivative(&[1.0, 2.0, 3.0], Complex64::new(2.0, 0.0));
        assert_eq!(v.re, 17.0);
        assert_eq!(d.re, 14.0);
    }
}
