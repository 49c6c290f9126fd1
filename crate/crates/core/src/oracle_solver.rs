//! Brute-force evolution of the Riemann-invariant transport system on a
//! uniform `x1` mesh, independent of the characteristic construction.
//!
//! `d_t R+ + L1 d_x R+ = 0` and `d_t R- + Lbar1 d_x R- = 0`, discretized with
//! speed-sign upwinding (optionally minmod-limited) and Heun time stepping.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coordinate_map::CoordinateMap;
use crate::eos::EquationOfState;
use crate::error::{Error, Result};
use crate::fluid_state::characteristic_speeds;
use crate::mghd_boundary::MghdBoundary;
use crate::numerics::fit::linear_fit;
use crate::seed_data::InitialData;

pub const MAX_CFL: f64 = 0.9;
const PAR_CHUNK: usize = 4096;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Upwind,
    Minmod,
}

impl Scheme {
    pub fn order(self) -> f64 {
        match self {
            Scheme::Upwind => 1.0,
            Scheme::Minmod => 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleParams {
    pub dx: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    pub margin: f64,
}

impl Default for OracleParams {
    fn default() -> Self {
        Self { dx: 4.0 / 2048.0, cfl: 0.45, scheme: Scheme::Upwind, margin: 0.5 }
    }
}

/// Uniform nodes `x_i = x0 + i dx`, `i < n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Mesh {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Mesh {
    pub fn covering(lo: f64, hi: f64, dx: f64) -> Self {
        let n = ((hi - lo) / dx).ceil() as usize + 1;
        Self { x0: lo, dx, n }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RectangularOracleRun {
    pub mesh: Mesh,
    pub cfl: f64,
    pub scheme: Scheme,
    pub t: f64,
    pub steps: usize,
    pub r_plus: Vec<f64>,
    pub r_minus: Vec<f64>,
    /// `(t, max |d_x R+|)` after every step, starting with `t = 0`.
    pub history: Vec<(f64, f64)>,
}

impl RectangularOracleRun {
    pub fn r_minus_sup(&self) -> f64 {
        self.r_minus.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    }

    pub fn total_variation(&self) -> f64 {
        total_variation(&self.r_plus)
    }
}

pub fn total_variation(r: &[f64]) -> f64 {
    r.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

pub fn max_gradient(r: &[f64], dx: f64) -> f64 {
    r.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs())) / dx
}

fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a.abs() < b.abs() {
        a
    } else {
        b
    }
}

const GHOST: usize = 2;
/// Cells around the nonzero range that are advanced each stage; beyond it
/// every stencil reads only exact zeros, so those cells stay exactly zero.
const PAD: usize = 5;

/// A mesh function with two constant-extension ghost cells on each side.
struct Padded {
    v: Vec<f64>,
    slope: Vec<f64>,
}

impl Padded {
    fn new(inner: &[f64]) -> Self {
        let n = inner.len();
        let mut v = vec![0.0; n + 2 * GHOST];
        v[GHOST..GHOST + n].copy_from_slice(inner);
        Self { v, slope: vec![0.0; n + 2 * GHOST] }
    }

    fn n(&self) -> usize {
        self.v.len() - 2 * GHOST
    }

    fn fill_ghosts(&mut self) {
        let n = self.n();
        let (first, last) = (self.v[GHOST], self.v[GHOST + n - 1]);
        self.v[..GHOST].fill(first);
        self.v[GHOST + n..].fill(last);
    }

    /// Smallest inner index range holding every nonzero value.
    fn support(&self) -> Option<(usize, usize)> {
        let inner = &self.v[GHOST..GHOST + self.n()];
        let lo = inner.iter().position(|&x| x != 0.0)?;
        let hi = inner.iter().rposition(|&x| x != 0.0)?;
        Some((lo, hi))
    }

    fn inner(&self) -> &[f64] {
        &self.v[GHOST..GHOST + self.n()]
    }

    /// Upwind `d_x` at inner index `i` for the sign of `speed`. Requires the
    /// limiter slopes on `i - 1 ..= i + 1` when `scheme` is minmod.
    fn derivative(&self, i: usize, speed: f64, scheme: Scheme, dx: f64) -> f64 {
        let (v, s, j) = (&self.v, &self.slope, i + GHOST);
        match (scheme, speed > 0.0) {
            (Scheme::Upwind, true) => (v[j] - v[j - 1]) / dx,
            (Scheme::Upwind, false) => (v[j + 1] - v[j]) / dx,
            (Scheme::Minmod, true) => (v[j] + 0.5 * s[j] - v[j - 1] - 0.5 * s[j - 1]) / dx,
            (Scheme::Minmod, false) => (v[j + 1] - 0.5 * s[j + 1] - v[j] + 0.5 * s[j]) / dx,
        }
    }

    fn compute_slopes(&mut self, lo: usize, hi: usize) {
        let last = self.v.len() - 2;
        for j in (lo + GHOST - 1)..=(hi + GHOST + 1).min(last) {
            self.slope[j] = minmod(self.v[j] - self.v[j - 1], self.v[j + 1] - self.v[j]);
        }
    }
}

fn union(a: Option<(usize, usize)>, b: Option<(usize, usize)>) -> Option<(usize, usize)> {
    match (a, b) {
        (Some(x), Some(y)) => Some((x.0.min(y.0), x.1.max(y.1))),
        (x, None) => x,
        (None, y) => y,
    }
}

struct Stepper<'a> {
    eos: &'a EquationOfState,
    scheme: Scheme,
    dx: f64,
    exterior_speed: f64,
    /// Sound speed when the equation of state makes it constant.
    constant_c: Option<f64>,
}

impl Stepper<'_> {
    #[inline]
    fn speeds(&self, r_plus: f64, r_minus: f64) -> Result<(f64, f64)> {
        match self.constant_c {
            Some(c) => {
                let v = (0.5 * (r_plus - r_minus)).tanh();
                Ok(((v + c) / (1.0 + v * c), (v - c) / (1.0 - v * c)))
            }
            None => characteristic_speeds(r_plus, r_minus, self.eos),
        }
    }
}

impl Stepper<'_> {
    /// Time derivatives of both fields on the inner window `lo..=hi` and the
    /// largest characteristic speed on the mesh.
    fn rhs(&self, rp: &mut Padded, rm: &mut Padded, lo: usize, hi: usize, dp: &mut [f64], dm: &mut [f64]) -> Result<f64> {
        rp.fill_ghosts();
        rm.fill_ghosts();
        let minus_active = rm.support().is_some();
        if self.scheme == Scheme::Minmod {
            rp.compute_slopes(lo, hi);
            if minus_active {
                rm.compute_slopes(lo, hi);
            }
        }
        let (rp, rm) = (&*rp, &*rm);
        let (p_in, m_in) = (rp.inner(), rm.inner());
        let speed = dp[lo..=hi]
            .par_iter_mut()
            .zip(dm[lo..=hi].par_iter_mut())
            .enumerate()
            .with_min_len(PAR_CHUNK)
            .map(|(k, (p, m))| {
                let i = lo + k;
                let (l, lbar) = self.speeds(p_in[i], m_in[i])?;
                *p = -l * rp.derivative(i, l, self.scheme, self.dx);
                *m = if minus_active { -lbar * rm.derivative(i, lbar, self.scheme, self.dx) } else { 0.0 };
                Ok(l.abs().max(lbar.abs()))
            })
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
        Ok(speed.max(self.exterior_speed))
    }
}

/// Evolves arbitrary initial invariants on `mesh` until `t_end`, calling
/// `observe(t, max |d_x R+|)` after each step; a `false` return stops early.
///
/// The exterior state must be `R+ = R- = 0`; only a window around the
/// nonzero cells is advanced.
pub fn evolve_fields<F: FnMut(f64, f64) -> bool>(
    eos: &EquationOfState,
    mesh: Mesh,
    r_plus: Vec<f64>,
    r_minus: Vec<f64>,
    params: &OracleParams,
    t_end: f64,
    mut observe: F,
) -> Result<RectangularOracleRun> {
    if !(params.cfl > 0.0 && params.cfl <= MAX_CFL) {
        return Err(Error::CflViolation(params.cfl));
    }
    if !(params.dx > 0.0) || r_plus.len() != mesh.n || r_minus.len() != mesh.n || mesh.n < 2 {
        return Err(Error::Config("mesh and field sizes disagree".into()));
    }
    let dx = mesh.dx;
    let n = mesh.n;
    let (l0, lbar0) = characteristic_speeds(0.0, 0.0, eos)?;
    let constant_c = if eos.is_constant() { Some(eos.c_at_f(0.0)?) } else { None };
    let stepper = Stepper { eos, scheme: params.scheme, dx, exterior_speed: l0.abs().max(lbar0.abs()), constant_c };
    let bound = 1.0 / (10.0 * dx);
    let (mut rp, mut rm) = (Padded::new(&r_plus), Padded::new(&r_minus));
    let (mut sp, mut sm) = (Padded::new(&r_plus), Padded::new(&r_minus));
    let (mut kp, mut km) = (vec![0.0; n], vec![0.0; n]);
    let mut t = 0.0;
    let mut steps = 0;
    let mut history = vec![(0.0, max_gradient(&r_plus, dx))];
    while t < t_end {
        let Some((nz_lo, nz_hi)) = union(rp.support(), rm.support()) else {
            // Zero data stay zero.
            t = t_end;
            history.push((t, 0.0));
            break;
        };
        let lo = nz_lo.saturating_sub(PAD);
        let hi = (nz_hi + PAD).min(n - 1);
        let speed = stepper.rhs(&mut rp, &mut rm, lo, hi, &mut kp, &mut km)?;
        let mut dt = if speed > 0.0 { params.cfl * dx / speed } else { t_end - t };
        let last = t + dt >= t_end;
        if last {
            dt = t_end - t;
        }
        let (w_lo, w_hi) = (lo.saturating_sub(GHOST) + GHOST, (hi + GHOST).min(n - 1) + GHOST);
        sp.v[w_lo..=w_hi].copy_from_slice(&rp.v[w_lo..=w_hi]);
        sm.v[w_lo..=w_hi].copy_from_slice(&rm.v[w_lo..=w_hi]);
        for i in lo..=hi {
            sp.v[i + GHOST] += dt * kp[i];
            sm.v[i + GHOST] += dt * km[i];
        }
        let speed2 = stepper.rhs(&mut sp, &mut sm, lo, hi, &mut kp, &mut km)?;
        let courant = speed2 * dt / dx;
        if courant > MAX_CFL {
            return Err(Error::CflViolation(courant));
        }
        for i in lo..=hi {
            let j = i + GHOST;
            rp.v[j] = 0.5 * (rp.v[j] + sp.v[j] + dt * kp[i]);
            rm.v[j] = 0.5 * (rm.v[j] + sm.v[j] + dt * km[i]);
        }
        t = if last { t_end } else { t + dt };
        steps += 1;
        let g_lo = lo.saturating_sub(1);
        let g = max_gradient(&rp.inner()[g_lo..=hi], dx);
        history.push((t, g));
        if g > bound {
            return Err(Error::ResolutionExhausted { t, gradient: g, bound });
        }
        if !observe(t, g) {
            break;
        }
    }
    Ok(RectangularOracleRun {
        mesh,
        cfl: params.cfl,
        scheme: params.scheme,
        t,
        steps,
        r_plus: rp.inner().to_vec(),
        r_minus: rm.inner().to_vec(),
        history,
    })
}

/// Range `[min, max]` of `L1` over the simple-wave states of the data.
fn speed_range(data: &InitialData) -> Result<(f64, f64)> {
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for u in data.profile.certification_grid(1024, 0) {
        let (l, _) = characteristic_speeds(data.r_plus(u)?, 0.0, &data.eos)?;
        range = (range.0.min(l), range.1.max(l));
    }
    Ok(range)
}

/// Mesh containing `[-(a + U2) - m, -(a - U1) + m]` swept by the
/// characteristic speeds up to `t_end`.
pub fn oracle_mesh(data: &InitialData, params: &OracleParams, t_end: f64) -> Result<Mesh> {
    let (u_lo, u_hi) = data.profile.support();
    let (l_min, l_max) = speed_range(data)?;
    let lo = -u_hi - params.margin - (-l_min).max(0.0) * t_end;
    let hi = -u_lo + params.margin + l_max.max(0.0) * t_end;
    Ok(Mesh::covering(lo, hi, params.dx))
}

/// `R+(0, x1) = R+_data(-x1)`, `R-(0, .) = 0`.
pub fn initial_fields(data: &InitialData, mesh: &Mesh) -> Result<(Vec<f64>, Vec<f64>)> {
    let rp = (0..mesh.n).into_par_iter().map(|i| data.r_plus(-mesh.x(i))).collect::<Result<Vec<_>>>()?;
    Ok((rp, vec![0.0; mesh.n]))
}

pub fn evolve(data: &InitialData, params: &OracleParams, t_end: f64) -> Result<RectangularOracleRun> {
    let mesh = oracle_mesh(data, params, t_end)?;
    let (rp, rm) = initial_fields(data, &mesh)?;
    evolve_fields(&data.eos, mesh, rp, rm, params, t_end, |_, _| true)
}

#[derive(Clone, Debug, Serialize)]
pub struct ComparisonReport {
    pub t: f64,
    pub dx: f64,
    pub mesh_points: usize,
    /// Mesh points whose preimage lies in `M_*`.
    pub compared: usize,
    /// Mesh points outside `Upsilon(M_*)`, excluded from the `M_*` norms.
    pub excluded: usize,
    pub l1: f64,
    pub linf: f64,
    /// Norms over the whole mesh (only defined before the shock time).
    pub l1_full: Option<f64>,
    pub linf_full: Option<f64>,
    /// Largest numerical value trailing the wave, where the exact solution vanishes.
    pub trailing_exterior_max: f64,
}

pub fn compare_with_geometric(
    run: &RectangularOracleRun,
    map: &CoordinateMap,
    boundary: &MghdBoundary,
) -> Result<ComparisonReport> {
    let sol = &map.sol;
    let t = run.t;
    if t > 0.9 * sol.t_shock() {
        return Err(Error::Domain(format!("comparison time {t} exceeds 0.9 T_shock")));
    }
    let slice = map.slice(boundary, t)?;
    let mesh = run.mesh;
    let rows: Vec<(Option<f64>, f64, f64)> = (0..mesh.n)
        .into_par_iter()
        .map(|i| {
            let x = mesh.x(i);
            let num = run.r_plus[i];
            let star = match slice.invert(x) {
                Ok(inv) => Some((num - sol.r_plus(t, inv.u)?).abs()),
                Err(Error::NotInImage { .. }) => None,
                Err(e) => return Err(e),
            };
            let inv = map.upsilon_inverse_global(t, x)?;
            let full = (num - sol.r_plus(t, inv.u)?).abs();
            Ok((star, full, inv.u))
        })
        .collect::<Result<_>>()?;
    let (u_lo, u_hi) = sol.data.profile.support();
    let trailing_limit = if sol.data.eos.simple_wave_jet(0.0)?.l1.value() > 0.0 { u_hi } else { u_lo };
    let mut report = ComparisonReport {
        t,
        dx: mesh.dx,
        mesh_points: mesh.n,
        compared: 0,
        excluded: 0,
        l1: 0.0,
        linf: 0.0,
        l1_full: Some(0.0),
        linf_full: Some(0.0),
        trailing_exterior_max: 0.0,
    };
    let (mut l1_full, mut linf_full) = (0.0, 0.0f64);
    for (i, &(star, full, u)) in rows.iter().enumerate() {
        match star {
            Some(e) => {
                report.compared += 1;
                report.l1 += e * mesh.dx;
                report.linf = report.linf.max(e);
            }
            None => report.excluded += 1,
        }
        l1_full += full * mesh.dx;
        linf_full = linf_full.max(full);
        let trailing = if trailing_limit == u_hi { u > u_hi } else { u < u_lo };
        if trailing {
            report.trailing_exterior_max = report.trailing_exterior_max.max(run.r_plus[i].abs());
        }
    }
    report.l1_full = Some(l1_full);
    report.linf_full = Some(linf_full);
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupLadder {
    /// Finest spacing as a fraction of the support width.
    pub finest_fraction: f64,
    pub levels: usize,
    pub ratio: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    pub margin: f64,
    /// Gradient thresholds as multiples of the initial maximum gradient.
    pub thresholds: Vec<f64>,
    /// Hard stop for runs whose gradient never reaches the last threshold.
    pub t_max: f64,
}

impl Default for BlowupLadder {
    fn default() -> Self {
        Self {
            finest_fraction: 1.0 / 8192.0,
            levels: 4,
            ratio: std::f64::consts::SQRT_2,
            cfl: 0.45,
            scheme: Scheme::Minmod,
            margin: 0.5,
            thresholds: vec![10.0, 20.0, 40.0, 80.0],
            t_max: 12.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelEstimate {
    pub dx: f64,
    pub steps: usize,
    pub initial_gradient: f64,
    /// First time the gradient exceeds each threshold.
    pub crossing_times: Vec<f64>,
    /// Limit of the crossing time as the threshold grows, from a line in `1/threshold`.
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowupEstimate {
    pub levels: Vec<LevelEstimate>,
    /// Convergence order used for the extrapolation.
    pub order: f64,
    pub estimate: f64,
    pub uncertainty: f64,
}

fn crossing_time(history: &[(f64, f64)], level: f64) -> Option<f64> {
    history.windows(2).find(|w| w[1].1 >= level && w[0].1 < level).map(|w| {
        let ((t0, g0), (t1, g1)) = (w[0], w[1]);
        t0 + (t1 - t0) * (level - g0) / (g1 - g0)
    })
}

pub fn blowup_level(data: &InitialData, ladder: &BlowupLadder, dx: f64) -> Result<LevelEstimate> {
    let params = OracleParams { dx, cfl: ladder.cfl, scheme: ladder.scheme, margin: ladder.margin };
    let mesh = oracle_mesh(data, &params, ladder.t_max)?;
    let (rp, rm) = initial_fields(data, &mesh)?;
    let g0 = max_gradient(&rp, dx);
    let top = g0 * ladder.thresholds.iter().copied().fold(0.0, f64::max);
    let run = evolve_fields(&data.eos, mesh, rp, rm, &params, ladder.t_max, |_, g| g < top)?;
    let crossing_times = ladder
        .thresholds
        .iter()
        .map(|&k| {
            crossing_time(&run.history, k * g0)
                .ok_or_else(|| Error::NonMonotoneLadder(format!("gradient never reached {k} x initial by t = {}", ladder.t_max)))
        })
        .collect::<Result<Vec<_>>>()?;
    let inv: Vec<f64> = ladder.thresholds.iter().map(|k| 1.0 / k).collect();
    let (slope, intercept) = linear_fit(&inv, &crossing_times);
    Ok(LevelEstimate { dx, steps: run.steps, initial_gradient: g0, crossing_times, intercept, slope })
}

/// Richardson extrapolation of blowup-time estimates on the mesh ladder
/// `dx_fine * ratio^k`, `k < levels`.
pub fn estimate_blowup_time(data: &InitialData, ladder: &BlowupLadder) -> Result<BlowupEstimate> {
    if ladder.levels < 3 {
        return Err(Error::Config(format!("blowup ladder needs at least 3 levels, got {}", ladder.levels)));
    }
    let (lo, hi) = data.profile.support();
    let dx_fine = (hi - lo) * ladder.finest_fraction;
    let dxs: Vec<f64> = (0..ladder.levels).map(|k| dx_fine * ladder.ratio.powi(k as i32)).collect();
    let levels = dxs.par_iter().map(|&dx| blowup_level(data, ladder, dx)).collect::<Result<Vec<_>>>()?;
    let t: Vec<f64> = levels.iter().map(|l| l.intercept).collect();
    let increments: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    if !(increments.iter().all(|&d| d > 0.0) || increments.iter().all(|&d| d < 0.0)) {
        return Err(Error::NonMonotoneLadder(format!("level estimates {t:?} are not ordered")));
    }
    // Observed order from the three finest levels, nominal order as fallback.
    let r = ladder.ratio;
    let observed = ((t[2] - t[1]) / (t[1] - t[0])).ln() / r.ln();
    let order = if observed.is_finite() && (0.5..=4.0).contains(&observed) { observed } else { ladder.scheme.order() };
    let extrapolate = |fine: f64, coarse: f64, p: f64| fine + (fine - coarse) / (r.powf(p) - 1.0);
    let estimate = extrapolate(t[0], t[1], order);
    let nominal = extrapolate(t[0], t[1], ladder.scheme.order());
    let uncertainty = (estimate - nominal).abs().max((estimate - extrapolate(t[1], t[2], order)).abs());
    Ok(BlowupEstimate { levels, order, estimate, uncertainty })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{boundary, data, solution};
    use proptest::prelude::*;

    fn bump(mesh: &Mesh, amplitude: f64, center: f64, width: f64) -> Vec<f64> {
        (0..mesh.n)
            .map(|i| {
                let z = (mesh.x(i) - center) / width;
                if z.abs() < 1.0 {
                    amplitude * (1.0 - z * z).powi(4)
                } else {
                    0.0
                }
            })
            .collect()
    }

    #[test]
    fn zero_data_stay_zero() {
        let mesh = Mesh::covering(-1.0, 1.0, 0.01);
        let n = mesh.n;
        let run = evolve_fields(
            &EquationOfState::default_constant(),
            mesh,
            vec![0.0; n],
            vec![0.0; n],
            &OracleParams::default(),
            3.0,
            |_, _| true,
        )
        .unwrap();
        assert!(run.r_plus.iter().chain(&run.r_minus).all(|&x| x == 0.0));
        assert_eq!(run.t, 3.0);
    }

    #[test]
    fn rejects_large_cfl() {
        let mesh = Mesh::covering(-1.0, 1.0, 0.01);
        let n = mesh.n;
        let params = OracleParams { cfl: 0.95, ..Default::default() };
        let err =
            evolve_fields(&EquationOfState::default_constant(), mesh, vec![0.0; n], vec![0.0; n], &params, 1.0, |_, _| true);
        assert!(matches!(err, Err(Error::CflViolation(_))));
    }

    #[test]
    fn steep_data_exhaust_resolution() {
        let mesh = Mesh::covering(-1.0, 1.0, 0.01);
        let rp = bump(&mesh, 0.4, 0.0, 0.02);
        let n = mesh.n;
        let err =
            evolve_fields(&EquationOfState::default_constant(), mesh, rp, vec![0.0; n], &OracleParams::default(), 1.0, |_, _| {
                true
            });
        assert!(matches!(err, Err(Error::ResolutionExhausted { .. })));
    }

    #[test]
    fn minmod_selects_smaller_slope() {
        assert_eq!(minmod(1.0, 2.0), 1.0);
        assert_eq!(minmod(-3.0, -2.0), -2.0);
        assert_eq!(minmod(1.0, -2.0), 0.0);
    }

    #[test]
    fn crossing_time_interpolates() {
        let h = [(0.0, 1.0), (1.0, 2.0), (2.0, 4.0)];
        assert_eq!(crossing_time(&h, 3.0), Some(1.5));
        assert_eq!(crossing_time(&h, 5.0), None);
    }

    #[test]
    fn mesh_covers_interval() {
        let m = Mesh::covering(-1.3, 2.1, 0.1);
        assert!(m.x(0) <= -1.3 && m.x(m.n - 1) >= 2.1);
        assert_eq!(m.nodes().len(), m.n);
    }

    #[test]
    fn coarse_run_tracks_geometric_solution() {
        let sol = solution();
        let map = crate::coordinate_map::CoordinateMap::new(sol).unwrap();
        let params = OracleParams { dx: 4.0 / 256.0, ..Default::default() };
        let run = evolve(data(), &params, 2.0).unwrap();
        assert_eq!(run.r_minus_sup(), 0.0);
        let r = compare_with_geometric(&run, &map, boundary()).unwrap();
        assert!(r.l1 < 0.02 && r.linf < 0.02, "{r:?}");
        assert!(r.trailing_exterior_max < 5e-3);
    }

    #[test]
    fn comparison_refuses_late_times() {
        let sol = solution();
        let map = crate::coordinate_map::CoordinateMap::new(sol).unwrap();
        let params = OracleParams { dx: 4.0 / 128.0, ..Default::default() };
        let run = evolve(data(), &params, 9.5).unwrap();
        assert!(matches!(compare_with_geometric(&run, &map, boundary()), Err(Error::Domain(_))));
    }

    #[test]
    fn short_ladder_is_rejected() {
        let ladder = BlowupLadder { levels: 2, ..Default::default() };
        assert!(matches!(estimate_blowup_time(data(), &ladder), Err(Error::Config(_))));
    }

    #[test]
    fn scheme_parses_lowercase() {
        let p: OracleParams = serde_json::from_str(r#"{"scheme": "minmod", "dx": 0.01}"#).unwrap();
        assert_eq!(p.scheme, Scheme::Minmod);
        assert!(serde_json::from_str::<OracleParams>(r#"{"dt": 0.1}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn upwind_keeps_extrema(amplitude in -0.3f64..0.3, center in -0.3f64..0.3, width in 0.3f64..0.6) {
            let mesh = Mesh::covering(-1.5, 1.5, 0.02);
            let rp = bump(&mesh, amplitude, center, width);
            let (lo, hi) = (rp.iter().copied().fold(0.0, f64::min), rp.iter().copied().fold(0.0, f64::max));
            let n = mesh.n;
            let run = evolve_fields(&EquationOfState::default_constant(), mesh, rp, vec![0.0; n], &OracleParams::default(), 0.5, |_, _| true).unwrap();
            prop_assert!(run.r_plus.iter().all(|&x| x >= lo - 1e-15 && x <= hi + 1e-15));
            prop_assert_eq!(run.r_minus_sup(), 0.0);
        }

        #[test]
        fn minmod_is_bounded(a in -5.0f64..5.0, b in -5.0f64..5.0) {
            let m = minmod(a, b);
            prop_assert!(m.abs() <= a.abs().min(b.abs()));
            prop_assert!(m * a >= 0.0 && m * b >= 0.0);
        }
    }
}
