//! Seed profiles, their admissibility certificate, the Riemann-invariant
//! data `R_plus = A^{-1}(phi)` and the certified half-width `U_rad` of the
//! interesting region around the crease.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eos::EquationOfState;
use crate::error::{Error, Result, SeedCondition, SeedViolation};
use crate::fluid_state::fluid_from_invariants;
use crate::numerics::jet::Jet;

/// Derivative orders carried by profile jets (value through fourth derivative).
pub type Jet5 = Jet<5>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeedKind {
    /// `phi(U) = eps * w(U - a) * p(U - a)` with `w` a smooth plateau bump.
    #[default]
    BumpPolynomial,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default)]
    pub kind: SeedKind,
    /// Ascending polynomial coefficients of `p`.
    #[serde(default = "default_coefficients")]
    pub coefficients: Vec<f64>,
    /// `[U_1, U_2]`: the profile vanishes outside `[a - U_1, a + U_2]`.
    #[serde(default = "default_support")]
    pub support: [f64; 2],
    /// Half-width of the region where `w = 1`.
    #[serde(default = "default_plateau")]
    pub plateau: f64,
    #[serde(default = "default_epsilon0")]
    pub epsilon0: f64,
    #[serde(default = "default_max_halvings")]
    pub max_halvings: u32,
    /// Translation `a` of the profile.
    #[serde(default)]
    pub shift: f64,
    /// Bound on `|R_plus|` defining the compact subset of the hyperbolic regime.
    #[serde(default = "default_state_bound")]
    pub state_bound: f64,
    #[serde(default = "default_uniform_points")]
    pub uniform_points: usize,
    #[serde(default = "default_clustered_points")]
    pub clustered_points: usize,
    /// Smallest admissible `U_rad`.
    #[serde(default = "default_u_rad_min")]
    pub u_rad_min: f64,
}

fn default_coefficients() -> Vec<f64> {
    vec![0.0, -1.0, 0.0, 1.0 / 6.0]
}
fn default_support() -> [f64; 2] {
    [2.0, 2.0]
}
fn default_plateau() -> f64 {
    1.0
}
fn default_epsilon0() -> f64 {
    0.1
}
fn default_max_halvings() -> u32 {
    40
}
fn default_state_bound() -> f64 {
    0.5
}
fn default_uniform_points() -> usize {
    4096
}
fn default_clustered_points() -> usize {
    1024
}
fn default_u_rad_min() -> f64 {
    1.0 / 128.0
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self {
            kind: SeedKind::BumpPolynomial,
            coefficients: default_coefficients(),
            support: default_support(),
            plateau: default_plateau(),
            epsilon0: default_epsilon0(),
            max_halvings: default_max_halvings(),
            shift: 0.0,
            state_bound: default_state_bound(),
            uniform_points: default_uniform_points(),
            clustered_points: default_clustered_points(),
            u_rad_min: default_u_rad_min(),
        }
    }
}

/// `exp(-1/x) / (exp(-1/x) + exp(-1/(1-x)))`, a smooth step from 0 to 1 on `[0, 1]`.
fn smooth_step(x: Jet5) -> Jet5 {
    let v = x.value();
    // Outside this window every derivative is below exp(-1000).
    if v <= 1e-3 {
        return Jet::constant(0.0);
    }
    if v >= 1.0 - 1e-3 {
        return Jet::constant(1.0);
    }
    let a = (-x.recip()).exp();
    let b = (-(Jet::constant(1.0) - x).recip()).exp();
    a / (a + b)
}

/// A seed profile with amplitude `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedProfile {
    pub coefficients: Vec<f64>,
    pub u1: f64,
    pub u2: f64,
    pub plateau: f64,
    pub shift: f64,
    pub epsilon: f64,
}

impl SeedProfile {
    pub fn from_config(config: &SeedConfig) -> Self {
        Self {
            coefficients: config.coefficients.clone(),
            u1: config.support[0],
            u2: config.support[1],
            plateau: config.plateau,
            shift: config.shift,
            epsilon: config.epsilon0,
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    /// Closed support interval `[a - U_1, a + U_2]`.
    pub fn support(&self) -> (f64, f64) {
        (self.shift - self.u1, self.shift + self.u2)
    }

    fn plateau_weight(&self, v: Jet5) -> Jet5 {
        let x = v.value();
        if x.abs() <= self.plateau {
            Jet::constant(1.0)
        } else if x > 0.0 {
            smooth_step((Jet::constant(self.u2) - v).scale(1.0 / (self.u2 - self.plateau)))
        } else {
            smooth_step((v + self.u1).scale(1.0 / (self.u1 - self.plateau)))
        }
    }

    /// `[phi, phi', phi'', phi''', phi'''']` at `u`.
    pub fn derivatives(&self, u: f64) -> [f64; 5] {
        let (lo, hi) = self.support();
        if u <= lo || u >= hi {
            return [0.0; 5];
        }
        let v = Jet5::var(u - self.shift);
        let mut p = Jet5::constant(0.0);
        for &coef in self.coefficients.iter().rev() {
            p = p * v + coef;
        }
        (self.plateau_weight(v) * p).scale(self.epsilon).derivatives()
    }

    pub fn phi(&self, u: f64) -> f64 {
        self.derivatives(u)[0]
    }

    /// Certification grid: uniform on the support plus points clustered near the shift.
    pub fn certification_grid(&self, uniform: usize, clustered: usize) -> Vec<f64> {
        let (lo, hi) = self.support();
        let mut grid: Vec<f64> = (0..uniform).map(|i| lo + (hi - lo) * i as f64 / (uniform - 1) as f64).collect();
        grid.extend((0..clustered).map(|i| self.shift - 0.1 + 0.2 * i as f64 / (clustered - 1) as f64));
        grid.push(self.shift);
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        grid
    }
}

/// `(delta_star, b, p)` certified for a seed profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeedConstants {
    pub delta_star: f64,
    pub b_coeff: f64,
    pub p_coeff: f64,
}

fn violation(condition: SeedCondition, location: f64, margin: f64, detail: impl Into<String>) -> Error {
    Error::Seed(SeedViolation { condition, location, margin, detail: detail.into() })
}

pub fn validate_seed(profile: &SeedProfile) -> Result<SeedConstants> {
    validate_seed_on(profile, default_uniform_points(), default_clustered_points())
}

pub fn validate_seed_on(profile: &SeedProfile, uniform: usize, clustered: usize) -> Result<SeedConstants> {
    let a = profile.shift;
    if !(profile.u1 > 1.0 && profile.u2 > 1.0) {
        let location = if profile.u1 <= 1.0 { a - profile.u1 } else { a + profile.u2 };
        return Err(violation(
            SeedCondition::ViolatedSupport,
            location,
            profile.u1.min(profile.u2) - 1.0,
            "support half-widths U_1, U_2 must exceed 1",
        ));
    }
    if !(profile.plateau > 0.0 && profile.plateau < profile.u1.min(profile.u2)) {
        return Err(violation(
            SeedCondition::ViolatedSupport,
            a + profile.plateau,
            profile.u1.min(profile.u2) - profile.plateau,
            "plateau must lie strictly inside the support",
        ));
    }
    if !(profile.epsilon > 0.0 && profile.epsilon.is_finite()) {
        return Err(violation(SeedCondition::ViolatedMinimum, a, profile.epsilon, "amplitude must be positive"));
    }
    let d0 = profile.derivatives(a);
    let delta_star = -d0[1];
    if !(delta_star > 0.0) {
        return Err(violation(SeedCondition::ViolatedMinimum, a, -delta_star, "phi' at the minimum point must be negative"));
    }
    if d0[2].abs() > 1e-10 * delta_star {
        return Err(violation(SeedCondition::ViolatedMinimum, a, d0[2], "phi'' must vanish at the minimum point"));
    }
    let b_coeff = d0[3];
    if !(b_coeff > 0.0) {
        return Err(violation(
            SeedCondition::ViolatedThirdDerivative,
            a,
            b_coeff,
            "phi''' must be positive at the minimum point",
        ));
    }
    let grid = profile.certification_grid(uniform, clustered);
    let samples: Vec<(f64, [f64; 5])> = grid.par_iter().map(|&u| (u, profile.derivatives(u))).collect();
    for &(u, d) in &samples {
        let v = u - a;
        if v.abs() <= 1.0 {
            if d[3] < 0.5 * b_coeff || d[3] > 2.0 * b_coeff {
                let margin = (d[3] - 0.5 * b_coeff).min(2.0 * b_coeff - d[3]);
                return Err(violation(SeedCondition::ViolatedThirdDerivative, u, margin, "phi''' leaves [b/2, 2b] on |U| <= 1"));
            }
            if v != 0.0 && d[1] <= -delta_star - 1e-12 * delta_star {
                return Err(violation(SeedCondition::ViolatedMinimum, u, d[1] + delta_star, "minimum of phi' is not unique"));
            }
        }
    }
    let mut p_coeff: f64 = 0.0;
    let mut witness = a + 1.0;
    for &(u, d) in &samples {
        if (u - a).abs() >= 1.0 && -d[1] / delta_star > p_coeff {
            p_coeff = -d[1] / delta_star;
            witness = u;
        }
    }
    if p_coeff >= 1.0 {
        return Err(violation(
            SeedCondition::ViolatedTail,
            witness,
            1.0 - p_coeff,
            "phi' > -p delta_star on |U| >= 1 requires p < 1",
        ));
    }
    Ok(SeedConstants { delta_star, b_coeff, p_coeff })
}

/// `R_plus` and the `U`-derivatives of every data quantity the closed-form
/// solution needs, evaluated at one `U`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DataPoint {
    pub u: f64,
    pub r: f64,
    pub dr: f64,
    pub ddr: f64,
    /// `G = d A[R_plus(U)]/dU` and its first two derivatives.
    pub g: f64,
    pub dg: f64,
    pub ddg: f64,
    /// `n/c` and its first two `U` derivatives.
    pub noc: f64,
    pub dnoc: f64,
    pub ddnoc: f64,
    pub c: f64,
    pub l1: f64,
    pub dl1: f64,
}

/// Empirical brackets accompanying a certified `U_rad`.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Certification {
    pub u_rad: f64,
    pub l_mu: [f64; 2],
    pub l_mu_bounds: [f64; 2],
    pub xx_mu_at_shock: [f64; 2],
    pub xx_mu_bounds: [f64; 2],
    pub xbreve_mu_zero: f64,
    pub min_abs_xbreve_mu_outer: f64,
    pub xbreve_mu_outer_bound: f64,
    pub min_mu_outside: f64,
    /// `(G + delta_star) / U^2` over the interesting region.
    pub g_quadratic: [f64; 2],
    pub candidates_rejected: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct InitialData {
    pub profile: SeedProfile,
    #[serde(skip)]
    pub eos: Arc<EquationOfState>,
    pub epsilon: f64,
    pub delta_star: f64,
    pub b_coeff: f64,
    pub p_coeff: f64,
    pub t_shock: f64,
    pub u_rad: f64,
    /// Minimum and maximum of `c/n` over all `U`.
    pub c_lo: f64,
    pub c_hi: f64,
    /// `max [G]_-` over the certification grid.
    pub max_negative_g: f64,
    /// `max |A[R_plus(U)] - phi(U)|` over the certification grid.
    pub round_trip_error: f64,
    pub certification: Certification,
    #[serde(skip)]
    pub state_bound: f64,
}

impl InitialData {
    /// Shift `a` of the profile; the crease sits at `U = a`.
    pub fn center(&self) -> f64 {
        self.profile.shift
    }

    pub fn r_plus(&self, u: f64) -> Result<f64> {
        let phi = self.profile.phi(u);
        if phi == 0.0 {
            return Ok(0.0);
        }
        self.eos.a_inv(phi)
    }

    pub fn g(&self, u: f64) -> f64 {
        self.profile.derivatives(u)[1]
    }

    pub fn point(&self, u: f64) -> Result<DataPoint> {
        let d = self.profile.derivatives(u);
        let r = self.r_plus(u)?;
        let jet = self.eos.simple_wave_jet(r)?;
        let ap = jet.a_prime.derivatives();
        let dr = d[1] / ap[0];
        let ddr = (d[2] - ap[1] * dr * dr) / ap[0];
        let n = jet.n_over_c.derivatives();
        let l = jet.l1.derivatives();
        Ok(DataPoint {
            u,
            r,
            dr,
            ddr,
            g: d[1],
            dg: d[2],
            ddg: d[3],
            noc: n[0],
            dnoc: n[1] * dr,
            ddnoc: n[2] * dr * dr + n[1] * ddr,
            c: jet.c.value(),
            l1: l[0],
            dl1: l[1] * dr,
        })
    }
}

fn state_is_admissible(eos: &EquationOfState, r: f64, bound: f64) -> bool {
    if r.abs() > bound {
        return false;
    }
    match fluid_from_invariants(r, 0.0, eos) {
        Ok(s) => s.c > 0.0 && s.c < 1.0 && s.n_factor > 0.0,
        Err(_) => false,
    }
}

/// Shrinks the amplitude until the data stay in the compact hyperbolic set
/// `|R| <= state_bound` and `|A'(R_plus)| >= |A'(0)| / 2` along the data.
pub fn build_initial_data(config: &SeedConfig, eos: Arc<EquationOfState>) -> Result<InitialData> {
    let base = SeedProfile::from_config(config);
    validate_seed_on(&base, config.uniform_points, config.clustered_points)?;
    let slope0 = eos.a_integrand(0.0)?;
    if slope0 == 0.0 {
        return Err(Error::NonDegeneracyFailure("1 - c^2 + c'/(cH) vanishes at the background state".into()));
    }
    let grid = base.certification_grid(config.uniform_points, config.clustered_points);
    let mut epsilon = config.epsilon0;
    let mut accepted = None;
    for _ in 0..=config.max_halvings {
        let profile = base.with_epsilon(epsilon);
        let ok = grid.par_iter().all(|&u| {
            let phi = profile.phi(u);
            let r = if phi == 0.0 { Ok(0.0) } else { eos.a_inv(phi) };
            match r {
                Ok(r) => {
                    state_is_admissible(&eos, r, config.state_bound)
                        && eos
                            .a_integrand(r)
                            .map(|s| s.signum() == slope0.signum() && s.abs() >= 0.5 * slope0.abs())
                            .unwrap_or(false)
                }
                Err(_) => false,
            }
        });
        if ok {
            accepted = Some(profile);
            break;
        }
        epsilon *= 0.5;
    }
    let profile = accepted.ok_or_else(|| {
        Error::NonDegeneracyFailure(format!("no amplitude in [{}, {}] keeps the data admissible", epsilon, config.epsilon0))
    })?;
    let constants = validate_seed_on(&profile, config.uniform_points, config.clustered_points)?;
    let mut data = InitialData {
        epsilon: profile.epsilon,
        profile,
        eos,
        delta_star: constants.delta_star,
        b_coeff: constants.b_coeff,
        p_coeff: constants.p_coeff,
        t_shock: 1.0 / constants.delta_star,
        u_rad: f64::NAN,
        c_lo: f64::NAN,
        c_hi: f64::NAN,
        max_negative_g: 0.0,
        round_trip_error: 0.0,
        certification: Certification::default(),
        state_bound: config.state_bound,
    };
    let points: Vec<DataPoint> = grid.par_iter().map(|&u| data.point(u)).collect::<Result<_>>()?;
    let exterior = 1.0 / data.eos.simple_wave_jet(0.0)?.n_over_c.value();
    let (mut c_lo, mut c_hi) = (exterior, exterior);
    for p in &points {
        c_lo = c_lo.min(1.0 / p.noc);
        c_hi = c_hi.max(1.0 / p.noc);
        data.max_negative_g = data.max_negative_g.max(-p.g);
    }
    data.c_lo = c_lo;
    data.c_hi = c_hi;
    data.round_trip_error = grid
        .par_iter()
        .map(|&u| {
            let r = data.r_plus(u)?;
            Ok((data.eos.antiderivative_a(r)? - data.profile.phi(u)).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let cert = compute_u_rad(&data, config.u_rad_min)?;
    data.u_rad = cert.u_rad;
    data.certification = cert;
    Ok(data)
}

struct Sample {
    v: f64,
    p: DataPoint,
}

/// Largest `U_rad` on a `1/128` lattice below 1 for which every bracket of
/// the sharp estimates hold on a grid of the interesting region.
pub fn compute_u_rad(data: &InitialData, u_rad_min: f64) -> Result<Certification> {
    let a = data.center();
    let n = 2049;
    let outer: Vec<Sample> = (0..n)
        .into_par_iter()
        .map(|i| {
            let v = -1.0 + 2.0 * i as f64 / (n - 1) as f64;
            data.point(a + v).map(|p| Sample { v, p })
        })
        .collect::<Result<_>>()?;
    let far: Vec<DataPoint> =
        data.profile.certification_grid(1024, 2).into_par_iter().map(|u| data.point(u)).collect::<Result<_>>()?;
    let (ds, b, t) = (data.delta_star, data.b_coeff, data.t_shock);
    let mut rejected = 0;
    let mut k = 127;
    while k as f64 / 128.0 >= u_rad_min && k > 0 {
        let ur = k as f64 / 128.0;
        if let Some(cert) = certify(&outer, &far, ur, a, ds, b, t, data.c_lo, data.c_hi) {
            return Ok(Certification { candidates_rejected: rejected, ..cert });
        }
        rejected += 1;
        k -= 1;
    }
    Err(Error::SearchExhausted(format!("no U_rad >= {u_rad_min} passes the sharp-estimate brackets")))
}

#[allow(clippy::too_many_arguments)]
fn certify(
    outer: &[Sample],
    far: &[DataPoint],
    ur: f64,
    a: f64,
    ds: f64,
    b: f64,
    t: f64,
    c_lo: f64,
    c_hi: f64,
) -> Option<Certification> {
    let inside: Vec<&Sample> = outer.iter().filter(|s| s.v.abs() <= ur).collect();
    let l_mu_bounds = [-ds / c_lo, -0.5 * ds / c_hi];
    let xx_bounds = [0.5 * t * b / c_hi, 2.0 * t * b / c_lo];
    let mut l_mu = [f64::INFINITY, f64::NEG_INFINITY];
    let mut xx = [f64::INFINITY, f64::NEG_INFINITY];
    let mut quad = [f64::INFINITY, f64::NEG_INFINITY];
    let mut min_outer = f64::INFINITY;
    let mut zeros = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for s in &inside {
        let p = &s.p;
        if !(p.g < 0.0) {
            return None;
        }
        if s.v != 0.0 && !(p.dg * s.v > 0.0) {
            return None;
        }
        let lm = p.noc * p.g;
        l_mu = [l_mu[0].min(lm), l_mu[1].max(lm)];
        let one_tg = 1.0 + t * p.g;
        let x_mu = t * p.noc * p.dg + p.dnoc * one_tg;
        let xx_mu = t * p.noc * p.ddg + 2.0 * t * p.dnoc * p.dg + p.ddnoc * one_tg;
        xx = [xx[0].min(xx_mu), xx[1].max(xx_mu)];
        if s.v != 0.0 {
            let qv = (p.g + ds) / (s.v * s.v);
            quad = [quad[0].min(qv), quad[1].max(qv)];
        }
        if s.v.abs() >= 0.5 * ur {
            min_outer = min_outer.min(x_mu.abs());
        }
        if let Some((pv, px)) = prev {
            if px == 0.0 || px.signum() != x_mu.signum() {
                zeros.push(if px == x_mu { pv } else { pv + (s.v - pv) * px / (px - x_mu) });
            }
        }
        prev = Some((s.v, x_mu));
    }
    if !(l_mu[0] >= l_mu_bounds[0] && l_mu[1] <= l_mu_bounds[1]) {
        return None;
    }
    if !(xx[0] >= xx_bounds[0] && xx[1] <= xx_bounds[1]) {
        return None;
    }
    zeros.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    if zeros.len() != 1 || zeros[0].abs() > 0.25 * ur {
        return None;
    }
    if !(min_outer >= b * ur / 8.0) {
        return None;
    }
    let mut min_mu = f64::INFINITY;
    for p in far {
        if (p.u - a).abs() >= ur {
            min_mu = min_mu.min(p.noc * (1.0 + t * p.g).min(1.0));
        }
    }
    if !(min_mu > 0.0) {
        return None;
    }
    Some(Certification {
        u_rad: ur,
        l_mu,
        l_mu_bounds,
        xx_mu_at_shock: xx,
        xx_mu_bounds: xx_bounds,
        xbreve_mu_zero: a + zeros[0],
        min_abs_xbreve_mu_outer: min_outer,
        xbreve_mu_outer_bound: b * ur / 8.0,
        min_mu_outside: min_mu,
        g_quadratic: quad,
        candidates_rejected: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_profile_constants() {
        let p = SeedProfile::from_config(&SeedConfig::default());
        let k = validate_seed(&p).unwrap();
        assert!((k.delta_star - 0.1).abs() < 1e-15);
        assert!((k.b_coeff - 0.1).abs() < 1e-15);
        assert!(k.p_coeff > 0.0 && k.p_coeff < 1.0);
    }

    #[test]
    fn profile_vanishes_outside_support() {
        let p = SeedProfile::from_config(&SeedConfig::default());
        assert_eq!(p.derivatives(-2.0), [0.0; 5]);
        assert_eq!(p.derivatives(2.5), [0.0; 5]);
        assert!(p.phi(1.999).abs() < 1e-300);
    }

    #[test]
    fn curvature_at_minimum_is_rejected() {
        let cfg = SeedConfig { coefficients: vec![0.0, -1.0, 0.3, 1.0 / 6.0], ..SeedConfig::default() };
        let err = validate_seed(&SeedProfile::from_config(&cfg)).unwrap_err();
        assert_eq!(err.code(), "ViolatedMinimum");
    }

    #[test]
    fn increasing_profile_is_rejected() {
        let cfg = SeedConfig { coefficients: vec![0.0, 1.0], ..SeedConfig::default() };
        let err = validate_seed(&SeedProfile::from_config(&cfg)).unwrap_err();
        assert_eq!(err.code(), "ViolatedMinimum");
    }

    #[test]
    fn narrow_support_is_rejected() {
        let cfg = SeedConfig { support: [0.9, 2.0], plateau: 0.5, ..SeedConfig::default() };
        let err = validate_seed(&SeedProfile::from_config(&cfg)).unwrap_err();
        assert_eq!(err.code(), "ViolatedSupport");
    }

    #[test]
    fn heavy_tail_is_rejected() {
        // A constant offset makes the left ramp of the bump dive below -delta_star.
        let cfg = SeedConfig { coefficients: vec![-2.0, -1.0, 0.0, 1.0 / 6.0], support: [1.5, 1.5], ..SeedConfig::default() };
        let err = validate_seed(&SeedProfile::from_config(&cfg)).unwrap_err();
        assert_eq!(err.code(), "ViolatedTail", "{err}");
    }
}
