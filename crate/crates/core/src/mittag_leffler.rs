//! One-parameter Mittag-Leffler function `E_alpha(x) = sum_k x^k / Gamma(alpha k + 1)`
//! for real `x` and `alpha` in `[0.1, 1]`.
//!
//! `|x| <= 1` uses the power series. Outside it the series cancels badly, so
//! the Laplace-type integral representations are used instead:
//!
//! ```text
//! x < 0:  E(x) = s / (alpha pi) int_0^inf exp(-(|x| v)^(1/alpha)) / (v^2 + 2 v c + 1) dv
//! x > 0:  E(x) = exp(x^(1/alpha)) / alpha
//!              - s / (alpha pi) int_0^inf exp(-(x v)^(1/alpha)) / (v^2 - 2 v c + 1) dv
//! ```
//!
//! with `s = sin(alpha pi)`, `c = cos(alpha pi)`. The integrals are evaluated by
//! adaptive Gauss-Kronrod quadrature on a finite range where the exponential
//! factor is above `e^-800`.

use crate::error::{Error, Result};
use statrs::function::gamma::gamma;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

pub const ALPHA_MIN: f64 = 0.1;
pub const X_MIN: f64 = -60.0;
pub const X_MAX: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlQuery {
    pub alpha: f64,
    pub x: f64,
}

pub fn ml(q: MlQuery) -> Result<f64> {
    let MlQuery { alpha, x } = q;
    if !(alpha > 0.0 && alpha <= 1.0) || !x.is_finite() {
        return Err(Error::domain("alpha must be in (0, 1] and x finite"));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(x.exp());
    }
    if !(ALPHA_MIN..=1.0).contains(&alpha) || !(X_MIN..=X_MAX).contains(&x) {
        return Err(Error::Range(format!(
            "Mittag-Leffler evaluation supports alpha in [{ALPHA_MIN}, 1] and x in [{X_MIN}, {X_MAX}], got alpha = {alpha}, x = {x}"
        )));
    }
    let v = if x.abs() <= 1.0 {
        series(alpha, x)
    } else {
        integral(alpha, x)
    };
    if !v.is_finite() {
        return Err(Error::Range(format!(
            "E_{alpha}({x}) is not representable in double precision"
        )));
    }
    Ok(v)
}

/// `E_alpha(lam t^alpha)` for each `t`.
pub fn ml_sequence(alpha: f64, lam: f64, times: &[f64]) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| {
            if t < 0.0 {
                return Err(Error::domain("times must be non-negative"));
            }
            if t == 0.0 {
                return Ok(1.0);
            }
            ml(MlQuery {
                alpha,
                x: lam * t.powf(alpha),
            })
        })
        .collect()
}

/// Power series with Neumaier-compensated summation.
pub(crate) fn series(alpha: f64, x: f64) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut xk = 1.0;
    for k in 0..2000 {
        let term = xk / gamma(alpha * k as f64 + 1.0);
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
        if k > 2 && term.abs() < 1e-18 * sum.abs() {
            break;
        }
        xk *= x;
    }
    sum + comp
}

pub(crate) fn integral(alpha: f64, x: f64) -> f64 {
    let s = (alpha * PI).sin();
    let c = (alpha * PI).cos();
    let ax = x.abs();
    let inv = 1.0 / alpha;
    let sign = if x < 0.0 { 1.0 } else { -1.0 };
    let f = |v: f64| (-(ax * v).powf(inv)).exp() / (v * v + 2.0 * sign * c * v + 1.0);
    let upper = 800f64.powf(alpha) / ax;
    // the exponential cuts off near v = 1/|x|; the denominator peaks at v = -sign c
    let mut breaks = vec![0.0, 1.0 / ax];
    let peak = -sign * c;
    if peak > 0.0 {
        breaks.push(peak);
    }
    breaks.push(upper);
    breaks.retain(|&b| b <= upper);
    breaks.sort_by(|a, b| a.total_cmp(b));
    breaks.dedup();
    let mut total = 0.0;
    for w in breaks.windows(2) {
        total += gauss_kronrod(&f, w[0], w[1], 1e-15);
    }
    let tail = s / (alpha * PI) * total;
    if x < 0.0 {
        tail
    } else {
        ax.powf(inv).exp() / alpha - tail
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 7-point Gauss / 15-point Kronrod pair on `[a, b]`: `(kronrod, |kronrod - gauss|)`.
fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let s = f(c - h * XGK[i]) + f(c + h * XGK[i]);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive Gauss-Kronrod: bisect the interval with the largest error
/// estimate until the total estimate is below `rel_tol` times the integral.
pub(crate) fn gauss_kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (value, err) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, value, err });
    let (mut total, mut total_err) = (value, err);
    for _ in 0..4000 {
        if total_err <= rel_tol * total.abs() || total_err < 1e-300 {
            break;
        }
        let p = heap.pop().expect("non-empty");
        let m = 0.5 * (p.a + p.b);
        let (v1, e1) = gk15(f, p.a, m);
        let (v2, e2) = gk15(f, m, p.b);
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.err;
        heap.push(Piece { a: p.a, b: m, value: v1, err: e1 });
        heap.push(Piece { a: m, b: p.b, value: v2, err: e2 });
    }
    // re-sum to shed the drift of the running updates
    heap.iter().map(|p| p.value).sum()
}
