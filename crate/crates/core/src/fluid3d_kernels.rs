//! Tensor kernels on sampled `(t, x1, x2, x3)` fields.
//!
//! Indices are raised and lowered with the Minkowski metric `m = diag(-1, 1, 1, 1)`.
//! Derivatives are fourth-order central differences on a virtual uniform grid
//! whose values come from a sampling closure.

use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::fluid_state::{fluid_from_invariants, null_frame};
use crate::numerics::roots::bisect_newton;

pub type Vec4 = Vector4<f64>;
pub type Mat4 = Matrix4<f64>;

/// Grid points needed on each side of a first-derivative stencil.
pub const FIRST_REACH: i64 = 2;
/// Grid points needed on each side when first derivatives are nested.
pub const NESTED_REACH: i64 = 4;

pub fn minkowski() -> Mat4 {
    Mat4::from_diagonal(&Vec4::new(-1.0, 1.0, 1.0, 1.0))
}

pub fn lower(v: &Vec4) -> Vec4 {
    Vec4::new(-v[0], v[1], v[2], v[3])
}

/// Raising is the same sign flip as lowering for `m`.
pub fn raise(w: &Vec4) -> Vec4 {
    lower(w)
}

pub fn m_inner(v: &Vec4, w: &Vec4) -> f64 {
    -v[0] * w[0] + v[1] * w[1] + v[2] * w[2] + v[3] * w[3]
}

/// `epsilon^{abcd}` with `epsilon^{0123} = -1`.
pub fn levi_civita_upper(a: usize, b: usize, c: usize, d: usize) -> f64 {
    let p = [a, b, c, d];
    if (0..4).any(|i| (i + 1..4).any(|j| p[i] == p[j])) {
        return 0.0;
    }
    let mut inversions = 0;
    for i in 0..4 {
        for j in i + 1..4 {
            if p[i] > p[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Four-velocity with the given spatial part and `m(u, u) = -1`.
pub fn four_velocity(spatial: [f64; 3]) -> Vec4 {
    let s2 = spatial.iter().map(|x| x * x).sum::<f64>();
    Vec4::new((1.0 + s2).sqrt(), spatial[0], spatial[1], spatial[2])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AcousticalMetric {
    pub h: Mat4,
    pub h_inv: Mat4,
    pub n_factor: f64,
}

impl AcousticalMetric {
    pub fn inner(&self, v: &Vec4, w: &Vec4) -> f64 {
        v.dot(&(self.h * w))
    }

    pub fn inner_inv(&self, a: &Vec4, b: &Vec4) -> f64 {
        a.dot(&(self.h_inv * b))
    }
}

/// `h_{ab} = n (c^-2 m_{ab} + (c^-2 - 1) u_a u_b)`, its inverse, and
/// `n = c^2 + (1 - c^2) (u^0)^2`.
pub fn acoustical_metric_state(c: f64, u: &Vec4) -> AcousticalMetric {
    let c2 = c * c;
    let n = c2 + (1.0 - c2) * u[0] * u[0];
    let ul = lower(u);
    let m = minkowski();
    let h = (m / c2 + (1.0 / c2 - 1.0) * ul * ul.transpose()) * n;
    let h_inv = (m * c2 + (c2 - 1.0) * u * u.transpose()) / n;
    AcousticalMetric { h, h_inv, n_factor: n }
}

/// `Pi^{ab} = m^{ab} + u^a u^b`.
pub fn projection(u: &Vec4) -> Mat4 {
    minkowski() + u * u.transpose()
}

/// `B = u / u^0` and `N^a = -(h^-1)^{a0}`.
pub fn b_and_n_state(u: &Vec4, metric: &AcousticalMetric) -> (Vec4, Vec4) {
    (u / u[0], -metric.h_inv.column(0).into_owned())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldSample {
    /// Log-enthalpy `h = ln(H / H_bar)`.
    pub h: f64,
    pub s: f64,
    pub u: [f64; 4],
}

impl FieldSample {
    pub fn u(&self) -> Vec4 {
        Vec4::from(self.u)
    }
}

pub type Sampler = Arc<dyn Fn([f64; 4]) -> FieldSample + Send + Sync>;
pub type ScalarField = Arc<dyn Fn([f64; 4]) -> f64 + Send + Sync>;
pub type OneFormField = Arc<dyn Fn([f64; 4]) -> Vec4 + Send + Sync>;
/// `(n, theta, theta_;h)` at `(h, s)`.
pub type ThermoCallback = Arc<dyn Fn(f64, f64) -> Result<[f64; 3]> + Send + Sync>;

/// Fourth-order central difference along `axis`.
fn fd1<T, F>(f: F, p: [i64; 4], axis: usize, dx: f64) -> T
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    F: Fn([i64; 4]) -> T,
{
    let at = |k: i64| {
        let mut q = p;
        q[axis] += k;
        f(q)
    };
    (at(-2) - at(2) + (at(1) - at(-1)) * 8.0) * (1.0 / (12.0 * dx))
}

fn fd1_result<T, F>(f: F, p: [i64; 4], axis: usize, dx: f64) -> Result<T>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
    F: Fn([i64; 4]) -> Result<T>,
{
    let mut vals = [None; 4];
    for (slot, k) in vals.iter_mut().zip([-2i64, -1, 1, 2]) {
        let mut q = p;
        q[axis] += k;
        *slot = Some(f(q)?);
    }
    let [a, b, c, d] = vals.map(|v| v.expect("filled above"));
    Ok((a - d + (c - b) * 8.0) * (1.0 / (12.0 * dx)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NullForm {
    /// `(h^-1)^{kl} d_k phi d_l psi`.
    Qh,
    /// `d_mu phi d_nu psi - d_nu phi d_mu psi`.
    Q(usize, usize),
}

/// A fluid field on the virtual grid `origin + spacing * index`,
/// `0 <= index[a] < dims[a]`.
#[derive(Clone)]
pub struct FluidField4D {
    pub origin: [f64; 4],
    pub spacing: f64,
    pub dims: [usize; 4],
    sampler: Sampler,
    pub eos: Arc<EquationOfState>,
    thermo: Option<ThermoCallback>,
}

impl std::fmt::Debug for FluidField4D {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FluidField4D")
            .field("origin", &self.origin)
            .field("spacing", &self.spacing)
            .field("dims", &self.dims)
            .finish_non_exhaustive()
    }
}

impl FluidField4D {
    pub fn new(origin: [f64; 4], spacing: f64, dims: [usize; 4], sampler: Sampler, eos: Arc<EquationOfState>) -> Self {
        Self { origin, spacing, dims, sampler, eos, thermo: None }
    }

    /// Replaces the equation-of-state thermodynamics used by the modified variables.
    pub fn with_thermo(mut self, thermo: ThermoCallback) -> Self {
        self.thermo = Some(thermo);
        self
    }

    /// Grid centred on `center` with `2 * half + 1` points per axis.
    pub fn centered(center: [f64; 4], spacing: f64, half: usize, sampler: Sampler, eos: Arc<EquationOfState>) -> Self {
        let origin = center.map(|c| c - half as f64 * spacing);
        Self::new(origin, spacing, [2 * half + 1; 4], sampler, eos)
    }

    pub fn center_index(&self) -> [i64; 4] {
        self.dims.map(|d| (d / 2) as i64)
    }

    pub fn position(&self, p: [i64; 4]) -> [f64; 4] {
        std::array::from_fn(|a| self.origin[a] + p[a] as f64 * self.spacing)
    }

    fn check(&self, p: [i64; 4], reach: i64) -> Result<()> {
        for a in 0..4 {
            if p[a] - reach < 0 || p[a] + reach >= self.dims[a] as i64 {
                return Err(Error::StencilOutOfBounds(p));
            }
        }
        Ok(())
    }

    pub fn sample(&self, p: [i64; 4]) -> FieldSample {
        (self.sampler)(self.position(p))
    }

    pub fn sound_speed(&self, sample: &FieldSample) -> f64 {
        self.eos.c_of_log(sample.h, sample.s)
    }

    fn metric_at(&self, p: [i64; 4]) -> AcousticalMetric {
        let f = self.sample(p);
        acoustical_metric_state(self.sound_speed(&f), &f.u())
    }

    pub fn acoustical_metric(&self, p: [i64; 4]) -> Result<AcousticalMetric> {
        self.check(p, 0)?;
        Ok(self.metric_at(p))
    }

    pub fn projection_pi(&self, p: [i64; 4]) -> Result<Mat4> {
        self.check(p, 0)?;
        Ok(projection(&self.sample(p).u()))
    }

    pub fn b_and_n(&self, p: [i64; 4]) -> Result<(Vec4, Vec4)> {
        self.check(p, 0)?;
        let f = self.sample(p);
        let metric = acoustical_metric_state(self.sound_speed(&f), &f.u());
        Ok(b_and_n_state(&f.u(), &metric))
    }

    /// `d_a phi` for a scalar given on positions.
    pub fn gradient(&self, phi: &dyn Fn([f64; 4]) -> f64, p: [i64; 4]) -> Result<Vec4> {
        self.check(p, FIRST_REACH)?;
        Ok(Vec4::from_fn(|a, _| fd1(|q| phi(self.position(q)), p, a, self.spacing)))
    }

    /// `D[g][d] = d_g xi_d` for a one-form given on grid indices.
    fn one_form_jacobian(&self, xi: &dyn Fn([i64; 4]) -> Result<Vec4>, p: [i64; 4]) -> Result<Mat4> {
        let mut d = Mat4::zeros();
        for g in 0..4 {
            let row = fd1_result(xi, p, g, self.spacing)?;
            d.set_row(g, &row.transpose());
        }
        Ok(d)
    }

    fn vort_from_jacobian(u: &Vec4, d: &Mat4) -> Vec4 {
        let ul = lower(u);
        Vec4::from_fn(|a, _| {
            let mut acc = 0.0;
            for b in 0..4 {
                for g in 0..4 {
                    for e in 0..4 {
                        let eps = levi_civita_upper(a, b, g, e);
                        if eps != 0.0 {
                            acc += eps * ul[b] * d[(g, e)];
                        }
                    }
                }
            }
            -acc
        })
    }

    /// `vort^a(xi) = -epsilon^{abgd} u_b d_g xi_d`.
    pub fn vort(&self, xi: &dyn Fn([f64; 4]) -> Vec4, p: [i64; 4]) -> Result<Vec4> {
        self.check(p, FIRST_REACH)?;
        let d = self.one_form_jacobian(&|q| Ok(xi(self.position(q))), p)?;
        Ok(Self::vort_from_jacobian(&self.sample(p).u(), &d))
    }

    fn vort_indexed(&self, xi: &dyn Fn([i64; 4]) -> Result<Vec4>, p: [i64; 4]) -> Result<Vec4> {
        let d = self.one_form_jacobian(xi, p)?;
        Ok(Self::vort_from_jacobian(&self.sample(p).u(), &d))
    }

    fn enthalpy_velocity(&self, q: [i64; 4]) -> Vec4 {
        let f = self.sample(q);
        lower(&f.u()) * (self.eos.h_bar() * f.h.exp())
    }

    /// `varpi = vort(H u)`.
    pub fn vorticity(&self, p: [i64; 4]) -> Result<Vec4> {
        self.check(p, FIRST_REACH)?;
        self.vort_indexed(&|q| Ok(self.enthalpy_velocity(q)), p)
    }

    fn vorticity_unchecked(&self, p: [i64; 4]) -> Result<Vec4> {
        self.vort_indexed(&|q| Ok(self.enthalpy_velocity(q)), p)
    }

    /// `S_a = d_a s`.
    pub fn entropy_gradient(&self, p: [i64; 4]) -> Result<Vec4> {
        self.check(p, FIRST_REACH)?;
        Ok(self.entropy_gradient_unchecked(p))
    }

    fn entropy_gradient_unchecked(&self, p: [i64; 4]) -> Vec4 {
        Vec4::from_fn(|a, _| fd1(|q| self.sample(q).s, p, a, self.spacing))
    }

    fn log_enthalpy_gradient(&self, p: [i64; 4]) -> Vec4 {
        Vec4::from_fn(|a, _| fd1(|q| self.sample(q).h, p, a, self.spacing))
    }

    /// `J[l][k] = d_l u^k`.
    fn velocity_jacobian(&self, p: [i64; 4]) -> Mat4 {
        let mut d = Mat4::zeros();
        for l in 0..4 {
            let row: Vec4 = fd1(|q| self.sample(q).u(), p, l, self.spacing);
            d.set_row(l, &row.transpose());
        }
        d
    }

    fn thermo(&self, h: f64, s: f64) -> Result<[f64; 3]> {
        match &self.thermo {
            Some(f) => f(h, s),
            None => Ok([self.eos.n(h, s)?, self.eos.theta(h, s)?, self.eos.theta_h(h, s)?]),
        }
    }

    /// Modified fluid variables `(C^a, D)`.
    pub fn modified_variables(&self, p: [i64; 4]) -> Result<(Vec4, f64)> {
        self.check(p, NESTED_REACH)?;
        let f = self.sample(p);
        let [n, theta, theta_h] = self.thermo(f.h, f.s)?;
        let c = self.sound_speed(&f);
        let c2 = c * c;
        let u = f.u();
        let ul = lower(&u);
        let dh = self.log_enthalpy_gradient(p);
        let s_low = self.entropy_gradient_unchecked(p);
        let s_up = raise(&s_low);
        let varpi = self.vorticity_unchecked(p)?;
        let varpi_low = lower(&varpi);

        let vort_varpi = self.vort_indexed(&|q| Ok(lower(&self.vorticity_unchecked(q)?)), p)?;
        let mut twist = Vec4::zeros();
        for a in 0..4 {
            for b in 0..4 {
                for g in 0..4 {
                    for e in 0..4 {
                        let eps = levi_civita_upper(a, b, g, e);
                        if eps != 0.0 {
                            twist[a] += eps * ul[b] * dh[g] * varpi_low[e];
                        }
                    }
                }
            }
        }
        let du = self.velocity_jacobian(p);
        let div_u = du.trace();
        let s_dh = s_up.dot(&dh);
        // d_l u_k with the lower index from m.
        let mut grad_ul = du;
        grad_ul.column_mut(0).neg_mut();
        let mut last = Vec4::zeros();
        for a in 0..4 {
            let sign = if a == 0 { -1.0 } else { 1.0 };
            for k in 0..4 {
                last[a] += s_up[k] * sign * grad_ul[(a, k)];
            }
        }
        let dtheta = theta - theta_h;
        let c_mod = vort_varpi + twist / c2 + s_up * (dtheta * div_u) + u * (dtheta * s_dh) - last * dtheta;

        let div_s: f64 = (0..4).map(|k| fd1(|q| raise(&self.entropy_gradient_unchecked(q))[k], p, k, self.spacing)).sum();
        let d_mod = (div_s + s_dh - s_dh / c2) / n;
        Ok((c_mod, d_mod))
    }

    pub fn null_form(
        &self,
        kind: NullForm,
        phi: &dyn Fn([f64; 4]) -> f64,
        psi: &dyn Fn([f64; 4]) -> f64,
        p: [i64; 4],
    ) -> Result<f64> {
        let dphi = self.gradient(phi, p)?;
        let dpsi = self.gradient(psi, p)?;
        Ok(match kind {
            NullForm::Qh => self.metric_at(p).inner_inv(&dphi, &dpsi),
            NullForm::Q(mu, nu) => dphi[mu] * dpsi[nu] - dphi[nu] * dpsi[mu],
        })
    }

    /// `|det h|^{-1/2} d_a (|det h|^{1/2} (h^-1)^{ab} d_b phi)`.
    pub fn covariant_wave_op(&self, phi: &dyn Fn([f64; 4]) -> f64, p: [i64; 4]) -> Result<f64> {
        self.check(p, NESTED_REACH)?;
        let flux = |q: [i64; 4]| -> Vec4 {
            let g = self.metric_at(q);
            let grad = Vec4::from_fn(|b, _| fd1(|r| phi(self.position(r)), q, b, self.spacing));
            g.h_inv * grad * g.h.determinant().abs().sqrt()
        };
        let div: f64 = (0..4).map(|a| fd1(|q| flux(q)[a], p, a, self.spacing)).sum();
        Ok(div / self.metric_at(p).h.determinant().abs().sqrt())
    }

    /// `2 u_l u^k d_k u^l + 2 (m(u, u) + 1) u^k d_k h`, which vanishes for
    /// solutions of the Euler system whether or not `u` is normalized.
    pub fn constraint_residual(&self, p: [i64; 4]) -> Result<f64> {
        self.check(p, FIRST_REACH)?;
        let u = self.sample(p).u();
        let du = self.velocity_jacobian(p);
        let dh = self.log_enthalpy_gradient(p);
        let transport = du.transpose() * u;
        let norm = m_inner(&u, &u) + 1.0;
        Ok(2.0 * m_inner(&u, &transport) + 2.0 * norm * u.dot(&dh))
    }

    /// Residuals of the enthalpy, velocity (four components) and entropy equations.
    pub fn euler_residuals(&self, p: [i64; 4]) -> Result<[f64; 6]> {
        self.check(p, FIRST_REACH)?;
        let f = self.sample(p);
        let u = f.u();
        let c = self.sound_speed(&f);
        let q = self.eos.q(f.h, f.s);
        let du = self.velocity_jacobian(p);
        let dh = self.log_enthalpy_gradient(p);
        let ds = self.entropy_gradient_unchecked(p);
        let pi = projection(&u);
        let transport = du.transpose() * u;
        let vel = transport + pi * dh - raise(&ds) * q;
        Ok([u.dot(&dh) + c * c * du.trace(), vel[0], vel[1], vel[2], vel[3], u.dot(&ds)])
    }
}

/// Plane-symmetric simple wave `R+ = A exp(-U^2)`, `R- = 0`, with the
/// eikonal function `U` solving `x1 = -U + t L1(U)`.
#[derive(Clone)]
pub struct PlaneSimpleWave {
    pub amplitude: f64,
    pub eos: Arc<EquationOfState>,
}

impl PlaneSimpleWave {
    pub fn data(&self, u: f64) -> f64 {
        self.amplitude * (-u * u).exp()
    }

    fn speed(&self, u: f64) -> f64 {
        fluid_from_invariants(self.data(u), 0.0, &self.eos).and_then(|s| null_frame(&s)).map(|f| f.l1).unwrap_or(f64::NAN)
    }

    pub fn eikonal(&self, x: [f64; 4]) -> f64 {
        let (t, x1) = (x[0], x[1]);
        if t == 0.0 {
            return -x1;
        }
        let pad = t.abs() + 1e-9;
        let dspeed = |u: f64| (self.speed(u + 1e-6) - self.speed(u - 1e-6)) / 2e-6;
        bisect_newton(|u| (-u + t * self.speed(u) - x1, -1.0 + t * dspeed(u)), -x1 - pad, -x1 + pad, 1e-15).unwrap_or(f64::NAN)
    }

    pub fn r_plus(&self, x: [f64; 4]) -> f64 {
        self.data(self.eikonal(x))
    }

    pub fn sample(&self, x: [f64; 4]) -> FieldSample {
        let state = fluid_from_invariants(self.r_plus(x), 0.0, &self.eos).expect("simple-wave state in range");
        FieldSample { h: state.h, s: 0.0, u: [state.u0, state.u1, 0.0, 0.0] }
    }

    pub fn field(&self, center: [f64; 4], spacing: f64, half: usize) -> FluidField4D {
        let wave = self.clone();
        FluidField4D::centered(center, spacing, half, Arc::new(move |x| wave.sample(x)), self.eos.clone())
    }

    /// `(L1, Lbar1)` of the wave at `x`.
    pub fn frame(&self, x: [f64; 4]) -> (f64, f64) {
        let state = fluid_from_invariants(self.r_plus(x), 0.0, &self.eos).expect("simple-wave state in range");
        let f = null_frame(&state).expect("subluminal");
        (f.l1, f.lbar1)
    }
}

/// Smooth, non-solution field with genuine dependence on all four coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrigField {
    pub amplitude: f64,
}

impl TrigField {
    pub fn sample(&self, x: [f64; 4]) -> FieldSample {
        let a = self.amplitude;
        let [t, x1, x2, x3] = x;
        let u = four_velocity([
            a * (x1 + 0.3 * t).sin() * (0.7 * x2).cos(),
            a * (0.8 * x3 - 0.2 * t).cos() * (0.5 * x1).sin(),
            a * (0.6 * x2 + 0.4 * x1 + 0.1 * t).sin(),
        ]);
        FieldSample { h: 0.3 * (0.9 * x1 - 0.4 * x2 + 0.2 * t).sin(), s: self.entropy(x), u: u.into() }
    }

    pub fn entropy(&self, x: [f64; 4]) -> f64 {
        let [t, x1, x2, x3] = x;
        0.2 * (x1 + 0.5 * x3).sin() * (0.7 * x2 - 0.3 * t).cos() + 0.05 * t * x3
    }

    /// Exact `d_a s`.
    pub fn entropy_gradient(&self, x: [f64; 4]) -> Vec4 {
        let [t, x1, x2, x3] = x;
        let (sa, ca) = (x1 + 0.5 * x3).sin_cos();
        let (sb, cb) = (0.7 * x2 - 0.3 * t).sin_cos();
        Vec4::new(0.2 * sa * (-sb) * (-0.3) + 0.05 * x3, 0.2 * ca * cb, 0.2 * sa * (-sb) * 0.7, 0.2 * ca * 0.5 * cb + 0.05 * t)
    }

    pub fn field(&self, eos: Arc<EquationOfState>, center: [f64; 4], spacing: f64, half: usize) -> FluidField4D {
        let me = *self;
        FluidField4D::centered(center, spacing, half, Arc::new(move |x| me.sample(x)), eos)
    }
}

/// Fluid at rest with constant enthalpy and a varying entropy profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PureEntropyField {
    pub amplitude: f64,
}

impl PureEntropyField {
    pub fn entropy(&self, x: [f64; 4]) -> f64 {
        let [t, x1, x2, x3] = x;
        self.amplitude * (x1.sin() * (0.5 * x2).cos() + 0.3 * (x3 + 0.2 * t).sin())
    }

    /// Exact `d^a d_a s` (Minkowski divergence of `S^a`).
    pub fn entropy_laplacian(&self, x: [f64; 4]) -> f64 {
        let [t, x1, x2, x3] = x;
        let a = self.amplitude;
        let spatial = -x1.sin() * (0.5 * x2).cos() * (1.0 + 0.25) - 0.3 * (x3 + 0.2 * t).sin();
        let temporal = 0.3 * 0.04 * (x3 + 0.2 * t).sin();
        a * (spatial + temporal)
    }

    pub fn field(&self, eos: Arc<EquationOfState>, center: [f64; 4], spacing: f64, half: usize) -> FluidField4D {
        let me = *self;
        FluidField4D::centered(
            center,
            spacing,
            half,
            Arc::new(move |x| FieldSample { h: 0.0, s: me.entropy(x), u: [1.0, 0.0, 0.0, 0.0] }),
            eos,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eos::EosConfig;
    use crate::fluid_state::metric_1d;
    use proptest::prelude::*;

    fn eos() -> Arc<EquationOfState> {
        Arc::new(EquationOfState::default_constant())
    }

    fn constant_field(u: [f64; 3]) -> FluidField4D {
        let u = four_velocity(u);
        FluidField4D::centered([0.0; 4], 0.1, 5, Arc::new(move |_| FieldSample { h: 0.0, s: 0.0, u: u.into() }), eos())
    }

    fn wave() -> PlaneSimpleWave {
        PlaneSimpleWave { amplitude: 0.3, eos: eos() }
    }

    #[test]
    fn rest_frame_metric() {
        let g = acoustical_metric_state(0.5, &Vec4::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!(g.n_factor, 1.0);
        assert!((g.h - Mat4::from_diagonal(&Vec4::new(-1.0, 4.0, 4.0, 4.0))).amax() < 1e-15);
        let (b, n) = b_and_n_state(&Vec4::new(1.0, 0.0, 0.0, 0.0), &g);
        assert_eq!((b, n), (Vec4::new(1.0, 0.0, 0.0, 0.0), Vec4::new(1.0, 0.0, 0.0, 0.0)));
        assert!((projection(&Vec4::new(1.0, 0.0, 0.0, 0.0)) - Mat4::from_diagonal(&Vec4::new(0.0, 1.0, 1.0, 1.0))).amax() == 0.0);
    }

    #[test]
    fn epsilon_sign_convention() {
        assert_eq!(levi_civita_upper(0, 1, 2, 3), -1.0);
        assert_eq!(levi_civita_upper(1, 0, 2, 3), 1.0);
        assert_eq!(levi_civita_upper(0, 0, 2, 3), 0.0);
    }

    #[test]
    fn vort_of_rotation_is_the_curl() {
        let f = constant_field([0.0; 3]);
        let v = f.vort(&|x| Vec4::new(0.0, -x[2], x[1], 0.0), f.center_index()).unwrap();
        assert!((v - Vec4::new(0.0, 0.0, 0.0, 2.0)).amax() < 1e-12, "{v}");
    }

    #[test]
    fn vort_of_gradient_vanishes() {
        let f = TrigField { amplitude: 0.3 }.field(eos(), [0.1, 0.2, -0.3, 0.4], 0.05, 3);
        // d of sin(t x1) + x2 x3^2.
        let grad =
            |x: [f64; 4]| Vec4::new(x[1] * (x[0] * x[1]).cos(), x[0] * (x[0] * x[1]).cos(), x[3] * x[3], 2.0 * x[2] * x[3]);
        assert!(f.vort(&grad, f.center_index()).unwrap().amax() < 1e-7);
    }

    #[test]
    fn vort_is_orthogonal_to_u() {
        let f = TrigField { amplitude: 0.4 }.field(eos(), [0.2, -0.1, 0.3, 0.0], 0.05, 3);
        let p = f.center_index();
        let xi = |x: [f64; 4]| Vec4::new(x[1] * x[2], (x[0] + x[3]).sin(), x[0] * x[0], x[1].cos());
        let v = f.vort(&xi, p).unwrap();
        assert!(m_inner(&f.sample(p).u(), &v).abs() < 1e-12);
    }

    #[test]
    fn plane_wave_has_no_vorticity_or_entropy() {
        let f = wave().field([0.5, 0.1, 0.0, 0.0], 0.05, 5);
        let p = f.center_index();
        assert!(f.vorticity(p).unwrap().amax() < 1e-12);
        assert_eq!(f.entropy_gradient(p).unwrap(), Vec4::zeros());
        let (c, d) = f.modified_variables(p).unwrap();
        assert!(c.amax() < 1e-10 && d.abs() < 1e-12);
    }

    #[test]
    fn plane_wave_restricts_to_one_dimensional_metric() {
        let w = wave();
        let x = [0.7, 0.2, 0.0, 0.0];
        let s = fluid_from_invariants(w.r_plus(x), 0.0, &w.eos).unwrap();
        let (h1, hinv1) = metric_1d(&s);
        let g = acoustical_metric_state(s.c, &Vec4::new(s.u0, s.u1, 0.0, 0.0));
        for a in 0..2 {
            for b in 0..2 {
                assert!((g.h[(a, b)] - h1[(a, b)]).abs() < 1e-10);
                assert!((g.h_inv[(a, b)] - hinv1[(a, b)]).abs() < 1e-10);
            }
        }
        let (l1, lb1) = w.frame(x);
        for v in [l1, lb1] {
            let z = Vec4::new(1.0, v, 0.0, 0.0);
            assert!(g.inner(&z, &z).abs() < 1e-12);
            let (b, _) = b_and_n_state(&Vec4::new(s.u0, s.u1, 0.0, 0.0), &g);
            assert!(g.inner(&b, &z) < 0.0);
        }
    }

    #[test]
    fn wave_operator_on_flat_metric() {
        let f = constant_field([0.0; 3]);
        let p = f.center_index();
        assert!((f.covariant_wave_op(&|x| x[0] * x[0], p).unwrap() + 2.0).abs() < 1e-10);
        let a = f.covariant_wave_op(&|x| x[1] * x[1], p).unwrap();
        let b = f.covariant_wave_op(&|x| x[0] * x[0] + 3.0 * x[1] * x[1], p).unwrap();
        assert!((b - (-2.0 + 3.0 * a)).abs() < 1e-9);
        assert!((f.null_form(NullForm::Qh, &|x| x[0], &|x| x[0], p).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constraint_vanishes_on_constant_state() {
        let f = constant_field([0.3, -0.2, 0.1]);
        assert_eq!(f.constraint_residual(f.center_index()).unwrap(), 0.0);
    }

    #[test]
    fn constraint_detects_unnormalized_velocity() {
        let w = wave();
        let residual = |delta: f64| {
            let w = w.clone();
            let sampler: Sampler = Arc::new(move |x| {
                let mut s = w.sample(x);
                s.u = s.u.map(|c| c * (1.0 + delta));
                s
            });
            let f = FluidField4D::centered([1.0, 0.3, 0.0, 0.0], 0.01, 3, sampler, eos());
            f.constraint_residual(f.center_index()).unwrap()
        };
        let (r1, r2) = (residual(1e-3), residual(2e-3));
        assert!(r1.abs() > 1e-6);
        assert!((r2 / r1 - 2.0).abs() < 0.01, "{r1} {r2}");
    }

    #[test]
    fn entropy_terms_scale_linearly() {
        let center = [0.1, 0.2, 0.3, 0.4];
        let d = |a: f64| {
            let f = PureEntropyField { amplitude: a }.field(eos(), center, 0.05, 5);
            f.modified_variables(f.center_index()).unwrap()
        };
        let ((c1, d1), (c2, d2)) = (d(0.1), d(0.2));
        assert!(c1.amax() < 1e-12 && c2.amax() < 1e-12);
        assert!((d2 - 2.0 * d1).abs() < 1e-12);
    }

    #[test]
    fn missing_thermodynamics_is_reported() {
        let e = Arc::new(EquationOfState::new(EosConfig { n_bar: None, ..EosConfig::default() }).unwrap());
        let f = PureEntropyField { amplitude: 0.1 }.field(e, [0.0; 4], 0.05, 5);
        assert!(matches!(f.modified_variables(f.center_index()), Err(Error::MissingThermoCallback(_))));
        let thermo: ThermoCallback = Arc::new(|_, _| Ok([1.0, 0.5, 0.5]));
        let f = f.with_thermo(thermo);
        assert!(f.modified_variables(f.center_index()).is_ok());
    }

    #[test]
    fn stencil_bounds_are_enforced() {
        let f = constant_field([0.0; 3]);
        assert!(matches!(f.gradient(&|x| x[0], [1, 5, 5, 5]), Err(Error::StencilOutOfBounds(_))));
        assert!(f.gradient(&|x| x[0], [2, 5, 5, 5]).is_ok());
        assert!(matches!(f.covariant_wave_op(&|x| x[0], [3, 5, 5, 5]), Err(Error::StencilOutOfBounds(_))));
    }

    #[test]
    fn antisymmetric_null_form_vanishes_on_diagonal() {
        let f = TrigField { amplitude: 0.2 }.field(eos(), [0.0; 4], 0.05, 3);
        let phi = |x: [f64; 4]| (x[0] + 2.0 * x[1]).sin() * x[3];
        assert_eq!(f.null_form(NullForm::Q(0, 1), &phi, &phi, f.center_index()).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn algebraic_identities(spatial in prop::array::uniform3(-2.0f64..2.0), c in 0.05f64..1.0) {
            let u = four_velocity(spatial);
            prop_assert!((m_inner(&u, &u) + 1.0).abs() < 1e-12 * u[0] * u[0]);
            let g = acoustical_metric_state(c, &u);
            prop_assert!((g.h * g.h_inv - Mat4::identity()).amax() < 1e-12 * g.n_factor.max(1.0) / (c * c));
            prop_assert!((g.h_inv[(0, 0)] + 1.0).abs() < 1e-12);
            prop_assert!(g.n_factor >= 1.0 - 1e-15);
            prop_assert!((g.inner(&u, &u) + g.n_factor).abs() < 1e-11 * g.n_factor * u[0] * u[0] / (c * c));
            let pi = projection(&u);
            prop_assert!((pi * lower(&u)).amax() < 1e-12 * u[0] * u[0]);
            let pi_mixed = pi * minkowski();
            prop_assert!((pi_mixed * pi_mixed - pi_mixed).amax() < 1e-11 * u[0].powi(4));
            prop_assert!((pi_mixed.trace() - 3.0).abs() < 1e-12 * u[0] * u[0]);
            let (b, n) = b_and_n_state(&u, &g);
            prop_assert!((g.inner(&n, &n) + 1.0).abs() < 1e-11 * u[0].powi(2) / (c * c));
            prop_assert!((g.inner(&b, &n) + 1.0).abs() < 1e-11 * u[0].powi(2) / (c * c));
        }

        #[test]
        fn h_timelike_is_m_timelike(spatial in prop::array::uniform3(-2.0f64..2.0), c in 0.05f64..1.0, z in prop::array::uniform4(-1.0f64..1.0)) {
            let g = acoustical_metric_state(c, &four_velocity(spatial));
            let z = Vec4::from(z);
            if g.inner(&z, &z) < 0.0 {
                prop_assert!(m_inner(&z, &z) < 0.0);
            }
        }
    }
}
