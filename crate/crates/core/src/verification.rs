//! Randomized identity suites and stencil-convergence tables over the
//! state, energy-current and kernel layers.

use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy_currents::{bilinear_form, contracted_current, energy_current, SolutionArray, Vec6};
use crate::eos::EquationOfState;
use crate::error::Result;
use crate::fluid3d_kernels::{
    acoustical_metric_state, b_and_n_state, four_velocity, lower, m_inner, minkowski, projection, FluidField4D, Mat4, NullForm,
    PlaneSimpleWave, TrigField, Vec4,
};
use crate::fluid_state::{fluid_from_invariants, invariants_from_fluid, metric_1d, null_frame};
use crate::geo_solution::GeometricSolution;
use crate::numerics::fd::{d1_c4, d1_c6, observed_orders};

pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance for identities that pass through a tabulated inverse.
pub const ROUND_TRIP_TOL: f64 = 1e-10;
pub const MIN_ORDER: f64 = 3.5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityFamily {
    pub name: String,
    /// Largest defect, scaled by the magnitudes entering the identity.
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IdentityReport {
    pub samples: usize,
    pub seed: u64,
    pub families: Vec<IdentityFamily>,
    pub passed: bool,
}

#[derive(Default)]
struct Defects(Vec<IdentityFamily>);

impl Defects {
    fn record(&mut self, name: &str, defect: f64, tolerance: f64) {
        match self.0.iter_mut().find(|e| e.name == name) {
            Some(e) => e.worst = e.worst.max(defect),
            None => self.0.push(IdentityFamily { name: name.to_string(), worst: defect, tolerance, passed: false }),
        }
    }

    fn finish(mut self, samples: usize, seed: u64) -> IdentityReport {
        for f in &mut self.0 {
            f.passed = f.worst <= f.tolerance;
        }
        let passed = self.0.iter().all(|f| f.passed);
        IdentityReport { samples, seed, families: self.0, passed }
    }
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1.0)
}

/// Draws `samples` plane-symmetric states (`|R_pm| < state_bound`), 3+1
/// states and energy-current inputs, and records the worst defect of every
/// algebraic identity. With a solution, also checks the closed-form
/// relations of the geometric solution on a `U` lattice.
pub fn identity_suite(
    eos: &EquationOfState,
    sol: Option<&GeometricSolution>,
    samples: usize,
    state_bound: f64,
    seed: u64,
) -> Result<IdentityReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut d = Defects::default();
    for _ in 0..samples {
        let (rp, rm) = (rng.gen_range(-state_bound..state_bound), rng.gen_range(-state_bound..state_bound));
        let s = fluid_from_invariants(rp, rm, eos)?;
        let (h, h_inv) = metric_1d(&s);
        d.record("1d h h^-1 = I", (h * h_inv - Matrix2::identity()).amax() / (h.amax() * h_inv.amax()), IDENTITY_TOL);
        d.record("1d (h^-1)^00 = -1", (h_inv[(0, 0)] + 1.0).abs(), IDENTITY_TOL);
        let u = Vector2::new(s.u0, s.u1);
        d.record("1d h(u,u) = -n", rel(u.dot(&(h * u)), -s.n_factor, h.amax() * s.u0 * s.u0), IDENTITY_TOL);
        let f = null_frame(&s)?;
        for l in [f.l(), f.lbar()] {
            d.record("1d L, Lbar null", l.dot(&(h * l)).abs() / h.amax(), IDENTITY_TOL);
        }
        let (rp2, rm2) = invariants_from_fluid(s.enthalpy, s.u1, eos)?;
        d.record("invariant round trip", (rp2 - rp).abs().max((rm2 - rm).abs()), ROUND_TRIP_TOL);

        let spatial: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let c = rng.gen_range(0.2..1.0);
        let u = four_velocity(spatial);
        let g = acoustical_metric_state(c, &u);
        let u2 = u[0] * u[0];
        d.record("h h^-1 = I", (g.h * g.h_inv - Mat4::identity()).amax() / (g.h.amax() * g.h_inv.amax()), IDENTITY_TOL);
        d.record("(h^-1)^00 = -1", (g.h_inv[(0, 0)] + 1.0).abs(), IDENTITY_TOL);
        d.record("m(u,u) = -1", (m_inner(&u, &u) + 1.0).abs() / u2, IDENTITY_TOL);
        d.record("h(u,u) = -n", rel(g.inner(&u, &u), -g.n_factor, g.h.amax() * u2), IDENTITY_TOL);
        let pi = projection(&u);
        d.record("Pi u = 0", (pi * lower(&u)).amax() / u2, IDENTITY_TOL);
        let pm = pi * minkowski();
        d.record("Pi Pi = Pi", (pm * pm - pm).amax() / (u2 * u2), IDENTITY_TOL);
        d.record("tr Pi = 3", (pm.trace() - 3.0).abs() / u2, IDENTITY_TOL);
        let (b, n) = b_and_n_state(&u, &g);
        d.record("h(N,N) = -1", (g.inner(&n, &n) + 1.0).abs() / (g.h.amax() * n.amax() * n.amax()), IDENTITY_TOL);
        d.record("h(B,N) = -1", (g.inner(&b, &n) + 1.0).abs() / (g.h.amax() * b.amax() * n.amax()), IDENTITY_TOL);
        let p = Vec4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let q = Vec4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let anti = p * q.transpose() - q * p.transpose();
        d.record("Q antisymmetric", (anti + anti.transpose()).amax(), IDENTITY_TOL);

        let state = SolutionArray::from_spatial(rng.gen_range(-1.0..1.0), spatial, 0.0);
        let k = state.coefficients(eos)?;
        let xi = Vec4::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let v = Vec6::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let (f1, f2) = (rng.gen_range(0.0..20.0), rng.gen_range(0.0..20.0));
        let m = bilinear_form(&k, &xi, f1, f2);
        let js = energy_current(&k, f1 + f2 + 1.0, 0.0, &Vec6::repeat(1.0)).amax() * u2;
        let direct = contracted_current(&k, &xi, f1, f2, &v);
        d.record("xi.J = V^T M V", rel(v.dot(&(m * v)), direct, js * v.amax() * v.amax()), IDENTITY_TOL);
        d.record("M symmetric", (m - m.transpose()).amax(), 0.0);
        let lambda: f64 = rng.gen_range(-3.0..3.0);
        let jl = energy_current(&k, f1, f2, &(v * lambda));
        let quad = (jl - energy_current(&k, f1, f2, &v) * (lambda * lambda)).amax() / (js * (1.0 + lambda * lambda));
        d.record("J quadratic", quad, IDENTITY_TOL);
    }
    if let Some(sol) = sol {
        geometric_identities(sol, &mut d)?;
    }
    Ok(d.finish(samples, seed))
}

fn geometric_identities(sol: &GeometricSolution, d: &mut Defects) -> Result<()> {
    let (a, ur, t_shock) = (sol.center(), sol.u_rad(), sol.t_shock());
    let n = 257;
    for j in 0..n {
        let u = a - ur + 2.0 * ur * j as f64 / (n - 1) as f64;
        let mu0 = sol.mu(0.0, u)?;
        d.record("mu(0, U) = n/c", (mu0 - sol.c_over_n(u)?.recip()).abs() / mu0, IDENTITY_TOL);
        let lmu = sol.l_mu(0.0, u)?;
        d.record("L mu = (n/c) G", rel(lmu, mu0 * sol.g(u), mu0 * sol.g(u).abs()), IDENTITY_TOL);
        for k in 1..=8 {
            let t = t_shock * k as f64 / 8.0;
            let affine = mu0 + t * lmu;
            d.record("mu affine in t", rel(sol.mu(t, u)?, affine, mu0 + t * lmu.abs()), IDENTITY_TOL);
        }
        let h = 1e-3 * ur;
        if (u - a).abs() + 3.0 * h <= ur {
            let t = 0.5 * t_shock;
            let fd = d1_c6(|x| sol.mu(t, x).unwrap_or(f64::NAN), u, h);
            let x = sol.xbreve_mu(t, u)?;
            // Sixth-order stencil at h = 1e-3 U_rad.
            d.record("dmu/dU = Xbreve mu", (fd - x).abs() / x.abs().max(1.0), 1e-9);
        }
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualConvergence {
    pub name: String,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelReport {
    pub spacings: Vec<f64>,
    pub center: [f64; 4],
    pub residuals: Vec<ResidualConvergence>,
    pub passed: bool,
}

/// `Lbar (L R+)` for the simple wave, with `L R+` differenced on the same mesh.
fn wave_residual(wave: &PlaneSimpleWave, field: &FluidField4D, dx: f64) -> Result<f64> {
    let w = wave.clone();
    let l_rplus = move |x: [f64; 4]| -> f64 {
        let (l1, _) = w.frame(x);
        let d = |k: usize| {
            d1_c4(
                |s: f64| {
                    let mut y = x;
                    y[k] += s;
                    w.r_plus(y)
                },
                0.0,
                dx,
            )
        };
        d(0) + l1 * d(1)
    };
    let p = field.center_index();
    let g = field.gradient(&l_rplus, p)?;
    let (_, lb) = wave.frame(field.position(p));
    Ok(g[0] + lb * g[1])
}

/// Residuals of differential identities that hold exactly in the continuum,
/// evaluated with the kernel stencils on a ladder of halving spacings.
pub fn kernel_convergence(eos: Arc<EquationOfState>, amplitude: f64, center: [f64; 4], spacings: &[f64]) -> Result<KernelReport> {
    let wave = PlaneSimpleWave { amplitude, eos: eos.clone() };
    let trig = TrigField { amplitude };
    let names = ["vort(S)", "eikonal Q_h(dU, dU)", "wave Lbar(L R+)", "constraint"];
    let mut errors = vec![Vec::new(); names.len()];
    for &dx in spacings {
        let f = wave.field(center, dx, 5);
        let p = f.center_index();
        let w = wave.clone();
        let eik = f.null_form(NullForm::Qh, &|x| w.eikonal(x), &|x| w.eikonal(x), p)?;
        let tf = trig.field(eos.clone(), center, dx, 5);
        let vs = tf.vort(&|x| trig.entropy_gradient(x), tf.center_index())?;
        errors[0].push(vs.amax());
        errors[1].push(eik.abs());
        errors[2].push(wave_residual(&wave, &f, dx)?.abs());
        errors[3].push(f.constraint_residual(p)?.abs());
    }
    let ratio = if spacings.len() > 1 { spacings[0] / spacings[1] } else { 2.0 };
    let residuals: Vec<ResidualConvergence> = names
        .iter()
        .zip(errors)
        .map(|(name, errors)| {
            let orders = observed_orders(&errors, ratio);
            let passed = !orders.is_empty() && orders.iter().all(|&o| o >= MIN_ORDER);
            ResidualConvergence { name: name.to_string(), errors, orders, passed }
        })
        .collect();
    let passed = residuals.iter().all(|r| r.passed);
    Ok(KernelReport { spacings: spacings.to_vec(), center, residuals, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::solution;

    #[test]
    fn identity_suite_passes_on_default_law() {
        let eos = EquationOfState::default_constant();
        let r = identity_suite(&eos, Some(solution()), 500, 0.8, 3).unwrap();
        assert!(r.passed, "{:?}", r.families.iter().filter(|f| !f.passed).collect::<Vec<_>>());
        assert!(r.families.len() >= 20);
    }

    #[test]
    fn identity_suite_is_deterministic() {
        let eos = EquationOfState::default_constant();
        assert_eq!(identity_suite(&eos, None, 50, 0.5, 7).unwrap(), identity_suite(&eos, None, 50, 0.5, 7).unwrap());
    }

    #[test]
    fn kernel_residuals_converge() {
        let eos = Arc::new(EquationOfState::default_constant());
        let r = kernel_convergence(eos, 0.3, [0.3, 0.2, 0.1, -0.2], &[0.1, 0.05, 0.025]).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.residuals[0].orders.len(), 2);
    }
}
