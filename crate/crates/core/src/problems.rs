//! Built-in test problems.

use crate::error::{Error, Result};
use crate::mittag_leffler::{ml, ml_sequence, MlQuery};
use crate::solver::{
    DiagJacFn, FdeProblem, LinearPart, Nonlinear, NonlinearJacobian, RhsFn, Tridiagonal,
};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Method-of-lines data on the interior grid `x_i = i delta`, `i = 1..s`,
/// with homogeneous Dirichlet boundaries.
#[derive(Clone)]
pub struct SemiDiscretization {
    pub s: usize,
    pub delta: f64,
    pub grid: Vec<f64>,
    pub matrix: Tridiagonal,
    pub y0: DVector<f64>,
    pub nonlinear: Option<Nonlinear>,
}

impl SemiDiscretization {
    pub fn into_problem(self, alpha: f64, t_end: f64) -> Result<FdeProblem> {
        FdeProblem::new(
            alpha,
            0.0,
            t_end,
            self.y0,
            Some(LinearPart::Tridiagonal(self.matrix)),
            self.nonlinear,
        )
    }
}

/// `D^alpha y = lam y`, `y(0) = 1` on `[0, 1]`.
pub fn scalar_linear(alpha: f64, lam: f64) -> Result<FdeProblem> {
    if !lam.is_finite() {
        return Err(Error::domain("lambda must be finite"));
    }
    FdeProblem::new(
        alpha,
        0.0,
        1.0,
        DVector::from_element(1, 1.0),
        Some(LinearPart::Dense(DMatrix::from_element(1, 1, lam))),
        None,
    )
}

/// `E_alpha(lam t^alpha)`.
pub fn scalar_exact(alpha: f64, lam: f64, t: f64) -> Result<f64> {
    ml(MlQuery {
        alpha,
        x: lam * t.powf(alpha),
    })
}

/// Diffusion `D^alpha u = u_xx` on `(0, pi)`, started from the sine mode.
#[derive(Clone)]
pub struct Nigmatullin {
    pub disc: SemiDiscretization,
    pub alpha: f64,
    /// Eigenvalue of the discrete Laplacian belonging to `y0`.
    pub lambda: f64,
}

impl Nigmatullin {
    pub fn problem(&self) -> Result<FdeProblem> {
        self.disc.clone().into_problem(self.alpha, 1.0)
    }

    pub fn exact(&self, t: f64) -> Result<DVector<f64>> {
        Ok(&self.disc.y0 * scalar_exact(self.alpha, self.lambda, t)?)
    }

    pub fn exact_at(&self, times: &[f64]) -> Result<Vec<DVector<f64>>> {
        let e = ml_sequence(self.alpha, self.lambda, times)?;
        Ok(e.into_iter().map(|v| &self.disc.y0 * v).collect())
    }
}

pub fn nigmatullin(s: usize, alpha: f64) -> Result<Nigmatullin> {
    if s < 2 {
        return Err(Error::domain("s must be at least 2"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::domain("alpha must be in (0, 1]"));
    }
    let delta = std::f64::consts::PI / (s + 1) as f64;
    let d2 = 1.0 / (delta * delta);
    let grid: Vec<f64> = (1..=s).map(|i| i as f64 * delta).collect();
    let matrix = Tridiagonal::new(vec![d2; s - 1], vec![-2.0 * d2; s], vec![d2; s - 1])?;
    let y0 = DVector::from_iterator(s, grid.iter().map(|x| x.sin()));
    let lambda = -4.0 * (delta / 2.0).sin().powi(2) * d2;
    Ok(Nigmatullin {
        disc: SemiDiscretization {
            s,
            delta,
            grid,
            matrix,
            y0,
            nonlinear: None,
        },
        alpha,
        lambda,
    })
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct FokkerPlanckParams {
    pub p: ScalarFn,
    pub p_prime: ScalarFn,
    pub r: f64,
    pub k: f64,
    pub k_alpha: f64,
}

impl FokkerPlanckParams {
    /// Constant drift `p`, growth `r`, and unit `K`, `K_alpha`.
    pub fn constant_drift(p: f64, r: f64) -> Self {
        Self {
            p: Arc::new(move |_| p),
            p_prime: Arc::new(|_| 0.0),
            r,
            k: 1.0,
            k_alpha: 1.0,
        }
    }
}

/// Fractional Fokker-Planck equation with Fisher growth on `(0, 5)`,
/// `u(x, 0) = x^2 (5 - x)^2`, central differences on `s` interior points.
pub fn fokker_planck_semidiscretization(s: usize, par: &FokkerPlanckParams) -> Result<SemiDiscretization> {
    if s < 2 {
        return Err(Error::domain("s must be at least 2"));
    }
    if !(par.k > 0.0) {
        return Err(Error::domain("K must be positive"));
    }
    let delta = 5.0 / (s + 1) as f64;
    let grid: Vec<f64> = (1..=s).map(|i| i as f64 * delta).collect();
    let d2 = par.k_alpha / (delta * delta);
    let diag = grid.iter().map(|&x| (par.p_prime)(x) - 2.0 * d2).collect();
    let lower = grid[1..].iter().map(|&x| -(par.p)(x) / (2.0 * delta) + d2).collect();
    let upper = grid[..s - 1].iter().map(|&x| (par.p)(x) / (2.0 * delta) + d2).collect();
    let matrix = Tridiagonal::new(lower, diag, upper)?;
    let y0 = DVector::from_iterator(s, grid.iter().map(|x| x * x * (5.0 - x) * (5.0 - x)));
    let (r, k) = (par.r, par.k);
    let f: RhsFn = Arc::new(move |_t, y: &DVector<f64>| y.map(|v| r * v * (1.0 - v / k)));
    let jac: DiagJacFn = Arc::new(move |_t, y: &DVector<f64>| y.map(|v| r * (1.0 - 2.0 * v / k)));
    Ok(SemiDiscretization {
        s,
        delta,
        grid,
        matrix,
        y0,
        nonlinear: Some(Nonlinear {
            f,
            jacobian: NonlinearJacobian::Diagonal(jac),
        }),
    })
}

pub fn fokker_planck(s: usize, alpha: f64, par: &FokkerPlanckParams) -> Result<FdeProblem> {
    fokker_planck_semidiscretization(s, par)?.into_problem(alpha, 1.0)
}
