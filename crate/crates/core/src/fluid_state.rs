//! Riemann invariants, plane-symmetric fluid states and their acoustical
//! geometry in `(t, x1)` components.

use nalgebra::{Matrix2, Vector2};
use serde::Serialize;

use crate::eos::EquationOfState;
use crate::error::{Error, Result};

/// Hyperbolic functions overflow long before this; states beyond it are rejected.
pub const OVERFLOW_GUARD: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluidState1D {
    pub r_plus: f64,
    pub r_minus: f64,
    /// Log-enthalpy `ln(H/H_bar)`.
    pub h: f64,
    pub enthalpy: f64,
    pub u0: f64,
    pub u1: f64,
    pub c: f64,
    /// `(u0 + u1 c)(u0 - u1 c)`.
    pub n_factor: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NullFrame1D {
    pub l1: f64,
    pub lbar1: f64,
    pub x1: f64,
}

impl NullFrame1D {
    pub fn l(&self) -> Vector2<f64> {
        Vector2::new(1.0, self.l1)
    }

    pub fn lbar(&self) -> Vector2<f64> {
        Vector2::new(1.0, self.lbar1)
    }

    pub fn x(&self) -> Vector2<f64> {
        Vector2::new(0.0, self.x1)
    }

    /// `Xbreve = mu X`.
    pub fn xbreve(&self, mu: f64) -> Vector2<f64> {
        self.x() * mu
    }
}

/// `(R_plus, R_minus)` from enthalpy and velocity component `u1`.
pub fn invariants_from_fluid(enthalpy: f64, u1: f64, eos: &EquationOfState) -> Result<(f64, f64)> {
    let f = eos.f(enthalpy)?;
    let u0 = (1.0 + u1 * u1).sqrt();
    let v = u1 / u0;
    let rapidity = 0.5 * ((1.0 + v) / (1.0 - v)).ln();
    Ok((f + rapidity, f - rapidity))
}

pub fn fluid_from_invariants(r_plus: f64, r_minus: f64, eos: &EquationOfState) -> Result<FluidState1D> {
    if !(r_plus.abs() <= OVERFLOW_GUARD && r_minus.abs() <= OVERFLOW_GUARD) {
        return Err(Error::Hyperbolicity(format!("|R| exceeds {OVERFLOW_GUARD}: ({r_plus}, {r_minus})")));
    }
    let half_diff = 0.5 * (r_plus - r_minus);
    let enthalpy = eos.f_inv(0.5 * (r_plus + r_minus))?;
    let c = eos.c(enthalpy, 0.0);
    if !(c > 0.0 && c <= 1.0) {
        return Err(Error::Hyperbolicity(format!("c = {c} at H = {enthalpy}")));
    }
    let (u0, u1) = (half_diff.cosh(), half_diff.sinh());
    let n_factor = (u0 + u1 * c) * (u0 - u1 * c);
    if !(n_factor > 0.0) {
        return Err(Error::Hyperbolicity(format!("n = {n_factor} is not positive")));
    }
    Ok(FluidState1D { r_plus, r_minus, h: (enthalpy / eos.h_bar()).ln(), enthalpy, u0, u1, c, n_factor })
}

pub fn null_frame(state: &FluidState1D) -> Result<NullFrame1D> {
    let FluidState1D { u0, u1, c, .. } = *state;
    let ratio = (u1 / u0).abs() * c;
    if ratio >= 1.0 {
        return Err(Error::DegenerateFrame(ratio));
    }
    Ok(NullFrame1D { l1: (u1 + c * u0) / (u0 + c * u1), lbar1: (u1 - c * u0) / (u0 - c * u1), x1: -c / state.n_factor })
}

/// `(L1, Lbar1)` directly from the invariants, without building the full state.
pub fn characteristic_speeds(r_plus: f64, r_minus: f64, eos: &EquationOfState) -> Result<(f64, f64)> {
    let v = (0.5 * (r_plus - r_minus)).tanh();
    let c = eos.c_at_f(0.5 * (r_plus + r_minus))?;
    Ok(((v + c) / (1.0 + v * c), (v - c) / (1.0 - v * c)))
}

/// Acoustical metric restricted to the `(t, x1)` plane and its inverse.
pub fn metric_1d(state: &FluidState1D) -> (Matrix2<f64>, Matrix2<f64>) {
    let FluidState1D { u0, u1, c, .. } = *state;
    let c2 = c * c;
    let lower = [-u0, u1];
    let upper = [u0, u1];
    let m = [-1.0, 1.0];
    let mut h = Matrix2::zeros();
    let mut h_inv = Matrix2::zeros();
    let n = state.n_factor;
    for a in 0..2 {
        for b in 0..2 {
            let delta = if a == b { 1.0 } else { 0.0 };
            h[(a, b)] = n * (m[a] * delta / c2 + (1.0 / c2 - 1.0) * lower[a] * lower[b]);
            h_inv[(a, b)] = (c2 * m[a] * delta + (c2 - 1.0) * upper[a] * upper[b]) / n;
        }
    }
    (h, h_inv)
}

/// `h(v, w)` for the metric of `state`.
pub fn h_inner(state: &FluidState1D, v: &Vector2<f64>, w: &Vector2<f64>) -> f64 {
    let (h, _) = metric_1d(state);
    v.dot(&(h * w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eos() -> EquationOfState {
        EquationOfState::default_constant()
    }

    #[test]
    fn background_state() {
        let s = fluid_from_invariants(0.0, 0.0, &eos()).unwrap();
        assert_eq!((s.u0, s.u1, s.enthalpy), (1.0, 0.0, 1.0));
        let f = null_frame(&s).unwrap();
        assert_eq!((f.l1, f.lbar1), (0.5, -0.5));
    }

    #[test]
    fn antisymmetric_invariants_keep_reference_enthalpy() {
        let s = fluid_from_invariants(0.3, -0.3, &eos()).unwrap();
        assert!((s.enthalpy - 1.0).abs() < 1e-15);
        assert!((s.u1 - 0.3f64.sinh()).abs() < 1e-15);
    }

    #[test]
    fn metric_normalization() {
        let s = fluid_from_invariants(0.2, -0.1, &eos()).unwrap();
        let (h, h_inv) = metric_1d(&s);
        assert!((h * h_inv - Matrix2::identity()).amax() < 1e-12);
        assert!((h_inv[(0, 0)] + 1.0).abs() < 1e-12);
        let u = Vector2::new(s.u0, s.u1);
        assert!((u.dot(&(h * u)) + s.n_factor).abs() < 1e-12);
    }

    #[test]
    fn velocity_reflection_swaps_invariants() {
        let e = eos();
        // At H_bar the pair is antisymmetric, so the swap is also a negation.
        let (rp, rm) = invariants_from_fluid(1.0, 0.2, &e).unwrap();
        let (sp, sm) = invariants_from_fluid(1.0, -0.2, &e).unwrap();
        assert!((sp + rp).abs() < 1e-12 && (sm + rm).abs() < 1e-12);
        let (rp, rm) = invariants_from_fluid(1.3, 0.2, &e).unwrap();
        let (sp, sm) = invariants_from_fluid(1.3, -0.2, &e).unwrap();
        assert!((sp - rm).abs() < 1e-12 && (sm - rp).abs() < 1e-12);
    }
}
