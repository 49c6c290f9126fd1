//! Sound-speed laws and the scalar functions built on them.
//!
//! `F` solves `dF/dH = 1/(H c)` with `F(H_bar) = 0`; the antiderivative `A`
//! integrates the genuine-nonlinearity coefficient along the simple-wave
//! family `R_minus = 0`. Both are tabulated on dense monotone grids at
//! construction and refined locally by RK4 quadrature, so that `F_inv` and
//! `A_inv` stay cheap inside grid sweeps.

use std::cell::RefCell;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::jet::Jet;
use crate::numerics::ode::{integrate, rk4_richardson};
use crate::numerics::roots::{bisect_newton, locate_monotone, TOL_ROOT};
use crate::numerics::spline::CubicSpline;

/// Number of samples in the `F` and `A` tables.
pub const TABLE_SAMPLES: usize = 4097;

const QUAD_TOL: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EosKind {
    /// `c = c_bar`.
    Constant,
    /// `c = c_bar (H/H_bar)^exponent exp(-entropy_rate s)`.
    Power,
    /// Natural cubic spline through `(table_enthalpy, table_sound_speed)`.
    Tabulated,
}

/// Key-value description of an equation of state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EosConfig {
    pub kind: EosKind,
    #[serde(default = "default_c_bar")]
    pub c_bar: f64,
    #[serde(default)]
    pub exponent: f64,
    #[serde(default)]
    pub entropy_rate: f64,
    #[serde(default)]
    pub table_enthalpy: Vec<f64>,
    #[serde(default)]
    pub table_sound_speed: Vec<f64>,
    #[serde(default = "default_h_bar")]
    pub h_bar: f64,
    #[serde(default = "default_h_min")]
    pub h_min: f64,
    #[serde(default = "default_h_max")]
    pub h_max: f64,
    /// Constant value of `q = theta / H`.
    #[serde(default = "default_q")]
    pub q: f64,
    /// Half-width of the tabulated `R_plus` range for `A`.
    #[serde(default = "default_r_max")]
    pub r_max: f64,
    /// Reference particle density; enables `n`, `theta`, `theta_h` callbacks.
    #[serde(default)]
    pub n_bar: Option<f64>,
}

fn default_c_bar() -> f64 {
    0.5
}
fn default_h_bar() -> f64 {
    1.0
}
fn default_h_min() -> f64 {
    0.05
}
fn default_h_max() -> f64 {
    20.0
}
fn default_q() -> f64 {
    0.5
}
fn default_r_max() -> f64 {
    1.5
}

impl Default for EosConfig {
    fn default() -> Self {
        Self {
            kind: EosKind::Constant,
            c_bar: 0.5,
            exponent: 0.0,
            entropy_rate: 0.0,
            table_enthalpy: Vec::new(),
            table_sound_speed: Vec::new(),
            h_bar: 1.0,
            h_min: default_h_min(),
            h_max: default_h_max(),
            q: default_q(),
            r_max: default_r_max(),
            n_bar: Some(1.0),
        }
    }
}

impl EosConfig {
    pub fn constant(c_bar: f64, h_bar: f64) -> Self {
        Self { c_bar, h_bar, ..Self::default() }
    }

    pub fn power(c_bar: f64, exponent: f64, h_bar: f64) -> Self {
        Self { kind: EosKind::Power, c_bar, exponent, h_bar, ..Self::default() }
    }
}

#[derive(Clone, Debug)]
enum Law {
    Constant { c: f64 },
    Power { c: f64, k: f64, beta: f64, h_bar: f64 },
    Tabulated { spline: CubicSpline },
}

impl Law {
    /// `[c, dc/dH, d2c/dH2, d3c/dH3]` at fixed entropy.
    fn derivs(&self, h: f64, s: f64) -> [f64; 4] {
        match *self {
            Law::Constant { c } => [c, 0.0, 0.0, 0.0],
            Law::Power { c, k, beta, h_bar } => {
                let v = c * (h / h_bar).powf(k) * (-beta * s).exp();
                [v, v * k / h, v * k * (k - 1.0) / (h * h), v * k * (k - 1.0) * (k - 2.0) / (h * h * h)]
            }
            Law::Tabulated { ref spline } => {
                let (v, d1, d2) = spline.eval(h);
                let eps = 1e-4 * h;
                let d3 = (spline.eval(h + eps).2 - spline.eval(h - eps).2) / (2.0 * eps);
                [v, d1, d2, d3]
            }
        }
    }
}

/// Enthalpy, sound speed and its `H` derivative along the simple-wave family.
#[derive(Clone, Copy, Debug)]
pub struct SimpleWaveJet {
    /// `H(R_plus)` and its first two `R_plus` derivatives (Taylor-normalized).
    pub enthalpy: Jet<3>,
    pub c: Jet<3>,
    pub u0: Jet<3>,
    pub u1: Jet<3>,
    /// Integrand of `A`, i.e. `dA/dR_plus`.
    pub a_prime: Jet<3>,
    /// `n / c`.
    pub n_over_c: Jet<3>,
    /// `L^1`.
    pub l1: Jet<3>,
}

#[derive(Clone, Debug)]
pub struct EquationOfState {
    config: EosConfig,
    law: Law,
    /// Log-enthalpy nodes `ln(H/H_bar)` and `F` there.
    f_nodes: Vec<f64>,
    f_values: Vec<f64>,
    /// `R_plus` nodes and `A` there, covering only the hyperbolic range.
    a_nodes: Vec<f64>,
    a_values: Vec<f64>,
    /// Integrand of `A` at the nodes, for cubic Hermite evaluation.
    a_slopes: Vec<f64>,
}

impl EquationOfState {
    pub fn new(config: EosConfig) -> Result<Self> {
        if !(config.h_bar > 0.0) {
            return Err(Error::Config(format!("h_bar must be positive, got {}", config.h_bar)));
        }
        if !(config.h_min > 0.0 && config.h_min < config.h_bar && config.h_bar < config.h_max) {
            return Err(Error::Config(format!(
                "enthalpy domain must satisfy 0 < h_min < h_bar < h_max, got [{}, {}]",
                config.h_min, config.h_max
            )));
        }
        let law = match config.kind {
            EosKind::Constant => Law::Constant { c: config.c_bar },
            EosKind::Power => Law::Power { c: config.c_bar, k: config.exponent, beta: config.entropy_rate, h_bar: config.h_bar },
            EosKind::Tabulated => {
                let spline = CubicSpline::natural(config.table_enthalpy.clone(), config.table_sound_speed.clone())
                    .ok_or_else(|| Error::Config("tabulated EOS needs >= 3 increasing enthalpy nodes".into()))?;
                let (lo, hi) = spline.domain();
                if config.h_min < lo || config.h_max > hi {
                    return Err(Error::Config(format!(
                        "tabulated EOS covers [{lo}, {hi}] but the domain is [{}, {}]",
                        config.h_min, config.h_max
                    )));
                }
                Law::Tabulated { spline }
            }
        };
        let mut eos = Self {
            config,
            law,
            f_nodes: Vec::new(),
            f_values: Vec::new(),
            a_nodes: Vec::new(),
            a_values: Vec::new(),
            a_slopes: Vec::new(),
        };
        eos.build_f_table()?;
        eos.build_a_table()?;
        Ok(eos)
    }

    pub fn default_constant() -> Self {
        Self::new(EosConfig::default()).expect("default EOS is valid")
    }

    pub fn config(&self) -> &EosConfig {
        &self.config
    }

    pub fn h_bar(&self) -> f64 {
        self.config.h_bar
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.law, Law::Constant { .. })
    }

    /// Sound speed `c(H, s)`.
    pub fn c(&self, h: f64, s: f64) -> f64 {
        self.law.derivs(h, s)[0]
    }

    /// `dc/dH` at fixed `s`.
    pub fn dc_dh(&self, h: f64, s: f64) -> f64 {
        self.law.derivs(h, s)[1]
    }

    /// `[c, c', c'', c''']` with primes denoting `H` derivatives.
    pub fn c_derivatives(&self, h: f64, s: f64) -> [f64; 4] {
        self.law.derivs(h, s)
    }

    /// `q = theta / H`.
    pub fn q(&self, _log_enthalpy: f64, _s: f64) -> f64 {
        self.config.q
    }

    /// Sound speed as a function of log-enthalpy `h = ln(H/H_bar)`.
    pub fn c_of_log(&self, log_enthalpy: f64, s: f64) -> f64 {
        self.c(self.config.h_bar * log_enthalpy.exp(), s)
    }

    /// Particle density with `d ln n / dh = c^-2` and `n(0) = n_bar`.
    pub fn n(&self, log_enthalpy: f64, s: f64) -> Result<f64> {
        let n_bar = self.config.n_bar.ok_or(Error::MissingThermoCallback("n"))?;
        let exponent = match self.law {
            Law::Constant { c } => log_enthalpy / (c * c),
            _ => integrate(
                |l| {
                    let c = self.c_of_log(l, s);
                    1.0 / (c * c)
                },
                0.0,
                log_enthalpy,
                4,
                QUAD_TOL,
            )?,
        };
        Ok(n_bar * exponent.exp())
    }

    /// Temperature `theta = q H`.
    pub fn theta(&self, log_enthalpy: f64, s: f64) -> Result<f64> {
        self.config.n_bar.ok_or(Error::MissingThermoCallback("theta"))?;
        Ok(self.q(log_enthalpy, s) * self.config.h_bar * log_enthalpy.exp())
    }

    /// `d theta / dh` at fixed entropy.
    pub fn theta_h(&self, log_enthalpy: f64, s: f64) -> Result<f64> {
        self.config.n_bar.ok_or(Error::MissingThermoCallback("theta_h"))?;
        Ok(self.q(log_enthalpy, s) * self.config.h_bar * log_enthalpy.exp())
    }

    fn check_speed(&self, h: f64, s: f64) -> Result<f64> {
        let c = self.c(h, s);
        if c > 0.0 && c <= 1.0 && c.is_finite() {
            Ok(c)
        } else {
            Err(Error::Domain(format!("c({h}, {s}) = {c} outside (0, 1]")))
        }
    }

    fn log_bounds(&self) -> (f64, f64) {
        ((self.config.h_min / self.config.h_bar).ln(), (self.config.h_max / self.config.h_bar).ln())
    }

    fn build_f_table(&mut self) -> Result<()> {
        let (lo, hi) = self.log_bounds();
        let n = TABLE_SAMPLES;
        let nodes: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
        for &l in &nodes {
            self.check_speed(self.config.h_bar * l.exp(), 0.0)?;
        }
        // Integrate outward from the node closest to 0 so that F(H_bar) = 0 exactly.
        let i0 = nodes.iter().enumerate().min_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).map(|p| p.0).unwrap_or(0);
        let mut values = vec![0.0; n];
        values[i0] = self.integrate_f_piece(0.0, nodes[i0], 0.0)?;
        for i in i0 + 1..n {
            values[i] = values[i - 1] + self.integrate_f_piece(nodes[i - 1], nodes[i], 0.0)?;
        }
        for i in (0..i0).rev() {
            values[i] = values[i + 1] + self.integrate_f_piece(nodes[i + 1], nodes[i], 0.0)?;
        }
        self.f_nodes = nodes;
        self.f_values = values;
        Ok(())
    }

    fn integrate_f_piece(&self, a: f64, b: f64, s: f64) -> Result<f64> {
        integrate(|l| 1.0 / self.c_of_log(l, s), a, b, 1, QUAD_TOL)
    }

    /// `F(H)` with `F(H_bar) = 0`.
    pub fn f(&self, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("H = {h} must be positive")));
        }
        self.f_of_log((h / self.config.h_bar).ln())
    }

    fn f_of_log(&self, l: f64) -> Result<f64> {
        let nodes = &self.f_nodes;
        let (lo, hi) = (nodes[0], nodes[nodes.len() - 1]);
        if !(l >= lo && l <= hi) {
            return Err(Error::Domain(format!(
                "H = {} outside the EOS domain [{}, {}]",
                self.config.h_bar * l.exp(),
                self.config.h_min,
                self.config.h_max
            )));
        }
        let step = (hi - lo) / (nodes.len() - 1) as f64;
        let i = (((l - lo) / step).round() as usize).min(nodes.len() - 1);
        Ok(self.f_values[i] + self.integrate_f_piece(nodes[i], l, 0.0)?)
    }

    /// Range of `F` over the EOS domain.
    pub fn f_range(&self) -> (f64, f64) {
        (self.f_values[0], self.f_values[self.f_values.len() - 1])
    }

    /// `F^{-1}(y)`.
    pub fn f_inv(&self, y: f64) -> Result<f64> {
        let i = locate_monotone(&self.f_values, y).ok_or_else(|| {
            let (lo, hi) = self.f_range();
            Error::OutOfRange { value: y, lo, hi }
        })?;
        if let Law::Constant { c } = self.law {
            return Ok(self.config.h_bar * (c * y).exp());
        }
        let l = bisect_newton(
            |l| {
                let v = self.f_of_log(l).unwrap_or(f64::NAN) - y;
                (v, 1.0 / self.c_of_log(l, 0.0))
            },
            self.f_nodes[i],
            self.f_nodes[i + 1],
            TOL_ROOT * 1e-2,
        )?;
        Ok(self.config.h_bar * l.exp())
    }

    /// Sound speed at the state whose `F` value is `y`, skipping the inversion
    /// when `c` is constant.
    pub fn c_at_f(&self, y: f64) -> Result<f64> {
        match self.law {
            Law::Constant { c } => Ok(c),
            _ => Ok(self.c(self.f_inv(y)?, 0.0)),
        }
    }

    /// Per-entropy `F(H, s)` with `F(H_bar, s) = 0`.
    pub fn almost_riemann_f(&self, h: f64, s: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(Error::Domain(format!("H = {h} must be positive")));
        }
        let l = (h / self.config.h_bar).ln();
        let (lo, hi) = self.log_bounds();
        if !(l >= lo && l <= hi) {
            return Err(Error::Domain(format!("H = {h} outside the EOS domain")));
        }
        let steps = ((l.abs() / 1e-2).ceil() as usize).max(1);
        let f = |x: f64, _y: f64| -> f64 { 1.0 / self.c_of_log(x, s) };
        for k in 0..8 {
            let x = lo + (hi - lo) * k as f64 / 7.0;
            self.check_speed(self.config.h_bar * x.exp(), s)?;
        }
        Ok(rk4_richardson(&f, 0.0, 0.0, l, steps, QUAD_TOL, l.abs() / self.config.c_bar.max(1e-3))?.value)
    }

    /// `1 - c^2 + c'/(c H)` at `(H_bar, 0)`.
    pub fn nondegeneracy_factor(&self) -> f64 {
        let hb = self.config.h_bar;
        let [c, dc, _, _] = self.law.derivs(hb, 0.0);
        1.0 - c * c + dc / (c * hb)
    }

    /// Integrand of `A`: `-(1 - c^2 + c'/(cH)) / (2 (u0 + c u1)^2)` with the
    /// fluid state of the simple wave `(R_plus, R_minus) = (z, 0)`.
    pub fn a_integrand(&self, z: f64) -> Result<f64> {
        let (u0, u1) = ((0.5 * z).cosh(), (0.5 * z).sinh());
        let (c, nonlin) = match self.law {
            Law::Constant { c } => (c, 1.0 - c * c),
            _ => {
                let h = self.f_inv(0.5 * z)?;
                let [c, dc, _, _] = self.law.derivs(h, 0.0);
                if !(c > 0.0 && c <= 1.0) {
                    return Err(Error::Hyperbolicity(format!("c = {c} at R_plus = {z}")));
                }
                (c, 1.0 - c * c + dc / (c * h))
            }
        };
        let d = u0 + c * u1;
        Ok(-nonlin / (2.0 * d * d))
    }

    fn build_a_table(&mut self) -> Result<()> {
        let n = TABLE_SAMPLES;
        let half = (n - 1) / 2;
        let r_max = self.config.r_max;
        let step = r_max / half as f64;
        let mut up = vec![0.0];
        let mut up_nodes = vec![0.0];
        for i in 1..=half {
            let (a, b) = ((i - 1) as f64 * step, i as f64 * step);
            match self.a_piece(a, b) {
                Ok(v) => {
                    up.push(up[i - 1] + v);
                    up_nodes.push(b);
                }
                Err(_) => break,
            }
        }
        let mut down = vec![0.0];
        let mut down_nodes = vec![0.0];
        for i in 1..=half {
            let (a, b) = (-((i - 1) as f64) * step, -(i as f64) * step);
            match self.a_piece(a, b) {
                Ok(v) => {
                    down.push(down[i - 1] + v);
                    down_nodes.push(b);
                }
                Err(_) => break,
            }
        }
        if up_nodes.len() < 2 || down_nodes.len() < 2 {
            return Err(Error::Hyperbolicity("A cannot be tabulated around R_plus = 0".into()));
        }
        let mut nodes: Vec<f64> = down_nodes.iter().rev().copied().collect();
        let mut values: Vec<f64> = down.iter().rev().copied().collect();
        nodes.extend_from_slice(&up_nodes[1..]);
        values.extend_from_slice(&up[1..]);
        self.a_slopes = nodes.iter().map(|&z| self.a_integrand(z)).collect::<Result<_>>()?;
        self.a_nodes = nodes;
        self.a_values = values;
        Ok(())
    }

    fn a_piece(&self, a: f64, b: f64) -> Result<f64> {
        for z in [a, 0.5 * (a + b), b] {
            let v = self.a_integrand(z)?;
            if !v.is_finite() {
                return Err(Error::Hyperbolicity(format!("A integrand not finite at {z}")));
            }
        }
        let failure = RefCell::new(None);
        let v = integrate(
            |z| match self.a_integrand(z) {
                Ok(v) => v,
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    0.0
                }
            },
            a,
            b,
            1,
            QUAD_TOL,
        )?;
        match failure.into_inner() {
            Some(e) => Err(e),
            None => Ok(v),
        }
    }

    /// `R_plus` interval on which `A` is tabulated.
    pub fn a_domain(&self) -> (f64, f64) {
        (self.a_nodes[0], self.a_nodes[self.a_nodes.len() - 1])
    }

    /// Range of `A` over its tabulated domain (ordered low, high).
    pub fn a_range(&self) -> (f64, f64) {
        let (a, b) = (self.a_values[0], self.a_values[self.a_values.len() - 1]);
        (a.min(b), a.max(b))
    }

    /// `A[R_plus]`, normalized by `A[0] = 0`.
    pub fn antiderivative_a(&self, r: f64) -> Result<f64> {
        let (lo, hi) = self.a_domain();
        if !(r >= lo && r <= hi) {
            if r.abs() <= self.config.r_max {
                return Err(Error::Hyperbolicity(format!("R_plus = {r} leaves the hyperbolic range [{lo}, {hi}]")));
            }
            return Err(Error::OutOfRange { value: r, lo, hi });
        }
        Ok(self.a_hermite(r).0)
    }

    /// `(A, A')` from the cubic Hermite interpolant on the table; the node
    /// spacing keeps its error near rounding level.
    fn a_hermite(&self, r: f64) -> (f64, f64) {
        let (lo, hi) = self.a_domain();
        let last = self.a_nodes.len() - 1;
        let step = (hi - lo) / last as f64;
        let i = (((r - lo) / step).floor().max(0.0) as usize).min(last - 1);
        let (x0, x1) = (self.a_nodes[i], self.a_nodes[i + 1]);
        let h = x1 - x0;
        let s = (r - x0) / h;
        let (y0, y1) = (self.a_values[i], self.a_values[i + 1]);
        let (d0, d1) = (self.a_slopes[i] * h, self.a_slopes[i + 1] * h);
        let (s2, s3) = (s * s, s * s * s);
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1;
        let slope = ((6.0 * s2 - 6.0 * s) * (y0 - y1) + (3.0 * s2 - 4.0 * s + 1.0) * d0 + (3.0 * s2 - 2.0 * s) * d1) / h;
        (value, slope)
    }

    /// `A^{-1}(y)`.
    pub fn a_inv(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            return Ok(0.0);
        }
        let i = locate_monotone(&self.a_values, y).ok_or_else(|| {
            let (lo, hi) = self.a_range();
            Error::OutOfRange { value: y, lo, hi }
        })?;
        bisect_newton(
            |r| {
                let (v, d) = self.a_hermite(r);
                (v - y, d)
            },
            self.a_nodes[i],
            self.a_nodes[i + 1],
            TOL_ROOT * 1e-2,
        )
    }

    /// Derivatives in `R_plus` of the simple-wave quantities at `R_plus = z`.
    pub fn simple_wave_jet(&self, z: f64) -> Result<SimpleWaveJet> {
        let y = 0.5 * z;
        let h0 = match self.law {
            Law::Constant { c } => self.config.h_bar * (c * y).exp(),
            _ => self.f_inv(y)?,
        };
        let d = self.law.derivs(h0, 0.0);
        if !(d[0] > 0.0 && d[0] <= 1.0) {
            return Err(Error::Hyperbolicity(format!("c = {} at R_plus = {z}", d[0])));
        }
        // dH/dz = H c / 2 and d2H/dz2 = (H_z c + H c_z) / 2 with c_z = c' H_z.
        let h1 = 0.5 * h0 * d[0];
        let cz = d[1] * h1;
        let h2 = 0.5 * (h1 * d[0] + h0 * cz);
        let enthalpy = Jet { c: [h0, h1, 0.5 * h2] };
        let c = enthalpy.compose([d[0], d[1], d[2]]);
        let dc = enthalpy.compose([d[1], d[2], d[3]]);
        let half = Jet::<3>::var(z) * 0.5;
        let (u0, u1) = (half.cosh(), half.sinh());
        let one = Jet::<3>::constant(1.0);
        let nonlin = one - c * c + dc / (c * enthalpy);
        let den = u0 + c * u1;
        let a_prime = -(nonlin / (den * den * 2.0));
        let n = c * c + (one - c * c) * u0 * u0;
        let n_over_c = n / c;
        let l1 = (u1 + c * u0) / (u0 + c * u1);
        Ok(SimpleWaveJet { enthalpy, c, u0, u1, a_prime, n_over_c, l1 })
    }
}
