//! Classical fourth-order Runge-Kutta with step halving and Richardson
//! convergence control, plus cubic-Hermite dense output.

use std::ops::{Add, Mul};

use crate::error::{Error, Result};

/// Anything RK4 can advance.
pub trait OdeState: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn norm(&self) -> f64;
}

impl OdeState for f64 {
    fn norm(&self) -> f64 {
        self.abs()
    }
}

impl<const D: usize> OdeState for nalgebra::SVector<f64, D> {
    fn norm(&self) -> f64 {
        self.amax()
    }
}

pub fn rk4_step<S: OdeState, F: Fn(f64, S) -> S>(f: &F, t: f64, y: S, h: f64) -> S {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, y + k1 * (0.5 * h));
    let k3 = f(t + 0.5 * h, y + k2 * (0.5 * h));
    let k4 = f(t + h, y + k3 * h);
    y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

pub fn rk4_fixed<S: OdeState, F: Fn(f64, S) -> S>(f: &F, t0: f64, y0: S, t1: f64, steps: usize) -> S {
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for i in 0..steps {
        y = rk4_step(f, t0 + i as f64 * h, y, h);
    }
    y
}

#[derive(Clone, Copy, Debug)]
pub struct Converged<S> {
    pub value: S,
    pub steps: usize,
    pub error_estimate: f64,
}

/// Integrates from `t0` to `t1`, doubling the step count until two successive
/// Richardson-extrapolated values agree to `tol_rel` (relative, with an
/// absolute floor of `tol_rel * scale`).
pub fn rk4_richardson<S: OdeState, F: Fn(f64, S) -> S>(
    f: &F,
    t0: f64,
    y0: S,
    t1: f64,
    initial_steps: usize,
    tol_rel: f64,
    scale: f64,
) -> Result<Converged<S>> {
    let mut n = initial_steps.max(1);
    let mut coarse = rk4_fixed(f, t0, y0, t1, n);
    let mut prev_extrap: Option<S> = None;
    for _ in 0..22 {
        let fine = rk4_fixed(f, t0, y0, t1, 2 * n);
        let extrap = fine + (fine + coarse * -1.0) * (1.0 / 15.0);
        if let Some(p) = prev_extrap {
            let diff = (extrap + p * -1.0).norm();
            let tol = tol_rel * extrap.norm().max(scale);
            if diff <= tol {
                return Ok(Converged { value: extrap, steps: 2 * n, error_estimate: diff });
            }
        }
        prev_extrap = Some(extrap);
        coarse = fine;
        n *= 2;
    }
    Err(Error::IntegrationFailure(format!("rk4 step halving did not converge on [{t0}, {t1}]")))
}

/// Definite integral of a smooth scalar integrand via the RK4 quadrature rule.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, initial_steps: usize, tol_rel: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let g = |t: f64, _y: f64| f(t);
    let scale = (b - a).abs() * f(0.5 * (a + b)).abs().max(1e-300);
    rk4_richardson(&g, a, 0.0, b, initial_steps, tol_rel, scale).map(|c| c.value)
}

/// Nodes, values and slopes of an integrated scalar trajectory, with cubic
/// Hermite interpolation between nodes.
#[derive(Clone, Debug)]
pub struct DenseTrajectory {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

impl DenseTrajectory {
    /// Fixed-step RK4 integration storing every node.
    pub fn integrate<F: Fn(f64, f64) -> f64>(f: &F, t0: f64, y0: f64, t1: f64, steps: usize) -> Self {
        let h = (t1 - t0) / steps as f64;
        let mut t = Vec::with_capacity(steps + 1);
        let mut y = Vec::with_capacity(steps + 1);
        let mut dy = Vec::with_capacity(steps + 1);
        let mut yc = y0;
        for i in 0..=steps {
            let ti = t0 + i as f64 * h;
            t.push(ti);
            y.push(yc);
            dy.push(f(ti, yc));
            if i < steps {
                yc = rk4_step(f, ti, yc, h);
            }
        }
        Self { t, y, dy }
    }

    pub fn start(&self) -> f64 {
        self.t[0]
    }

    pub fn end(&self) -> f64 {
        *self.t.last().expect("non-empty trajectory")
    }

    pub fn eval(&self, s: f64) -> f64 {
        let n = self.t.len();
        let (t0, t1) = (self.t[0], self.t[n - 1]);
        let h = (t1 - t0) / (n - 1) as f64;
        let i = (((s - t0) / h).floor().max(0.0) as usize).min(n - 2);
        let (a, b) = (self.t[i], self.t[i + 1]);
        let hh = b - a;
        let x = (s - a) / hh;
        let h00 = (1.0 + 2.0 * x) * (1.0 - x) * (1.0 - x);
        let h10 = x * (1.0 - x) * (1.0 - x);
        let h01 = x * x * (3.0 - 2.0 * x);
        let h11 = x * x * (x - 1.0);
        h00 * self.y[i] + h10 * hh * self.dy[i] + h01 * self.y[i + 1] + h11 * hh * self.dy[i + 1]
    }

    /// Largest deviation between this trajectory and `finer` at the nodes of
    /// `self`.
    pub fn max_node_difference(&self, finer: &DenseTrajectory) -> f64 {
        self.t.iter().zip(&self.y).map(|(&t, &y)| (finer.eval(t) - y).abs()).fold(0.0, f64::max)
    }
}
