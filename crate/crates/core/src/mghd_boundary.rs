//! Singular curve, crease, Cauchy horizon and the region decomposition of
//! the classical development in geometric coordinates.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo_solution::GeometricSolution;
use crate::numerics::fit::{power_fit, PowerFit};
use crate::numerics::ode::DenseTrajectory;

/// Cells per direction of the crease search grid. Odd, so `T_shock` and the
/// profile center fall in the middle of a cell rather than on an edge.
pub const CREASE_GRID: usize = 63;
const CREASE_TOL: f64 = 1e-10;
const HORIZON_TOL: f64 = 1e-9;

/// `U - center`, with grid endpoints that round just past `+-limit` pulled back onto it.
fn offset_within(sol: &GeometricSolution, u: f64, limit: f64) -> f64 {
    let v = u - sol.center();
    let slack = 4.0 * f64::EPSILON * (u.abs() + sol.center().abs());
    if v.abs() > limit && v.abs() <= limit + slack {
        limit.copysign(v)
    } else {
        v
    }
}

/// `t_Sing(U) - T_shock = -(G + delta_star) / (G delta_star)`.
pub fn singular_curve_offset(sol: &GeometricSolution, u: f64) -> Result<f64> {
    let v = offset_within(sol, u, sol.u_rad());
    if v.abs() > sol.u_rad() {
        return Err(Error::OutOfCertifiedRegion(u));
    }
    let g = sol.g(u);
    if g >= 0.0 {
        return Err(Error::PositiveG { u, g });
    }
    Ok(-sol.g_plus_delta(u) / (g * sol.delta_star()))
}

/// `t_Sing(U) = -1/G(U)`; for `U` above the center this is the branch cut
/// off by the horizon.
pub fn singular_curve(sol: &GeometricSolution, u: f64) -> Result<f64> {
    Ok(sol.t_shock() + singular_curve_offset(sol, u)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CreasePoint {
    pub t: f64,
    pub u: f64,
    pub newton_iterations: usize,
    /// Distance from `(T_shock, center)` in each coordinate.
    pub deviation: [f64; 2],
    pub bracketing_cells: usize,
}

pub fn crease(sol: &GeometricSolution) -> Result<CreasePoint> {
    let (t_shock, a, ur) = (sol.t_shock(), sol.center(), sol.u_rad());
    let n = CREASE_GRID;
    let ts: Vec<f64> = (0..=n).map(|i| 2.0 * t_shock * i as f64 / n as f64).collect();
    let us: Vec<f64> = (0..=n).map(|j| a - ur + 2.0 * ur * j as f64 / n as f64).collect();
    let values: Vec<Vec<(f64, f64)>> = us
        .par_iter()
        .map(|&u| ts.iter().map(|&t| Ok((sol.mu(t, u)?, sol.xbreve_mu(t, u)?))).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mixed = |xs: [f64; 4]| {
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && hi >= 0.0
    };
    let mut cells = Vec::new();
    for j in 0..n {
        for i in 0..n {
            let corners = [values[j][i], values[j][i + 1], values[j + 1][i], values[j + 1][i + 1]];
            if mixed(corners.map(|c| c.0)) && mixed(corners.map(|c| c.1)) {
                cells.push((i, j));
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::CreaseNotFound("no grid cell brackets mu = Xbreve mu = 0".into()));
    }
    let clusters = count_clusters(&cells);
    if clusters > 1 {
        return Err(Error::MultipleCreasePoints(clusters));
    }
    let (ci, cj) = cells[cells.len() / 2];
    let mut t = 0.5 * (ts[ci] + ts[ci + 1]);
    let mut u = 0.5 * (us[cj] + us[cj + 1]);
    for it in 1..=60 {
        let s = sol.sample(t, u)?;
        let lx = sol.l_xbreve_mu(t, u)?;
        let det = s.l_mu * s.xx_mu - s.xbreve_mu * lx;
        if det == 0.0 {
            return Err(Error::CreaseNotFound(format!("singular Jacobian at ({t}, {u})")));
        }
        let dt = (s.mu * s.xx_mu - s.xbreve_mu * s.xbreve_mu) / det;
        let du = (s.l_mu * s.xbreve_mu - lx * s.mu) / det;
        t -= dt;
        u -= du;
        if dt.abs() <= CREASE_TOL * t_shock.max(1.0) && du.abs() <= CREASE_TOL {
            return Ok(CreasePoint {
                t,
                u,
                newton_iterations: it,
                deviation: [(t - t_shock).abs(), (u - a).abs()],
                bracketing_cells: cells.len(),
            });
        }
    }
    Err(Error::CreaseNotFound("Newton iteration did not converge".into()))
}

fn count_clusters(cells: &[(usize, usize)]) -> usize {
    let mut label = vec![usize::MAX; cells.len()];
    let mut count = 0;
    for start in 0..cells.len() {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = count;
        while let Some(k) = stack.pop() {
            let (i, j) = cells[k];
            for (m, &(p, q)) in cells.iter().enumerate() {
                if label[m] == usize::MAX && p.abs_diff(i) <= 1 && q.abs_diff(j) <= 1 {
                    label[m] = count;
                    stack.push(m);
                }
            }
        }
        count += 1;
    }
    count
}

/// The horizon `t_CH(U)`, stored as the offset `t_CH - T_shock` against
/// `U - center` on `[0, U_max]`.
#[derive(Clone, Debug)]
pub struct CauchyHorizon {
    pub offset: DenseTrajectory,
    pub steps: usize,
    /// Largest node difference between the accepted and the halved-step run.
    pub step_error: f64,
    pub u_max: f64,
}

pub fn cauchy_horizon(sol: &GeometricSolution, u_max: f64) -> Result<CauchyHorizon> {
    let ur = sol.u_rad();
    if !(u_max > 0.0 && u_max <= ur) {
        return Err(Error::OutOfCertifiedRegion(sol.center() + u_max));
    }
    let (a, t_shock, ds) = (sol.center(), sol.t_shock(), sol.delta_star());
    let base = 1.0 - t_shock * ds;
    let failure = std::sync::Mutex::new(None);
    let rhs = |v: f64, tau: f64| -> f64 {
        let u = a + v;
        match sol.point(u) {
            Ok(p) => 0.5 * p.noc * (base + t_shock * sol.g_plus_delta(u) + tau * p.g),
            Err(e) => {
                failure.lock().expect("poisoned").get_or_insert(e);
                0.0
            }
        }
    };
    let mut steps = ((u_max / (ur / 4096.0)).ceil() as usize).max(8);
    let mut coarse = DenseTrajectory::integrate(&rhs, 0.0, 0.0, u_max, steps);
    for _ in 0..12 {
        let fine = DenseTrajectory::integrate(&rhs, 0.0, 0.0, u_max, 2 * steps);
        if let Some(e) = failure.lock().expect("poisoned").take() {
            return Err(e);
        }
        let diff = coarse.max_node_difference(&fine);
        let scale = fine.y.iter().fold(0.0f64, |m, y| m.max(y.abs()));
        if diff <= HORIZON_TOL * scale.max(f64::MIN_POSITIVE) || diff == 0.0 {
            return Ok(CauchyHorizon { offset: coarse, steps, step_error: diff, u_max });
        }
        coarse = fine;
        steps *= 2;
    }
    Err(Error::IntegrationFailure("horizon step halving stalled".into()))
}

impl CauchyHorizon {
    /// `t_CH(U) - T_shock` for `U - center = v`.
    pub fn offset_at(&self, v: f64) -> f64 {
        self.offset.eval(v)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    MSing,
    MReg,
    SingularBoundary,
    CauchyHorizon,
    Crease,
    Exterior,
}

impl Region {
    /// Membership in the development `M_*`, which contains the horizon but
    /// not the singular boundary or the crease.
    pub fn in_m_star(self) -> bool {
        matches!(self, Region::MSing | Region::MReg | Region::CauchyHorizon)
    }
}

/// Singular curve on `[-U_rad, 0]`, crease and horizon on `[0, U_rad]`.
#[derive(Clone, Debug)]
pub struct MghdBoundary {
    pub sol: GeometricSolution,
    pub crease: CreasePoint,
    pub horizon: CauchyHorizon,
    /// Tolerance in `t` for curve membership tags.
    pub tolerance: f64,
}

impl MghdBoundary {
    pub fn build(sol: &GeometricSolution) -> Result<Self> {
        let crease = crease(sol)?;
        let horizon = cauchy_horizon(sol, sol.u_rad())?;
        Ok(Self { sol: sol.clone(), crease, horizon, tolerance: 1e-9 * sol.t_shock().max(1.0) })
    }

    pub fn t_shock(&self) -> f64 {
        self.sol.t_shock()
    }

    pub fn t_sing(&self, u: f64) -> Result<f64> {
        singular_curve(&self.sol, u)
    }

    pub fn t_ch(&self, u: f64) -> Result<f64> {
        let v = offset_within(&self.sol, u, self.horizon.u_max);
        if !(0.0..=self.horizon.u_max).contains(&v) {
            return Err(Error::OutOfCertifiedRegion(u));
        }
        Ok(self.t_shock() + self.horizon.offset_at(v))
    }

    pub fn mu_on_ch(&self, u: f64) -> Result<f64> {
        let v = offset_within(&self.sol, u, self.horizon.u_max);
        let p = self.sol.point(u)?;
        let tau = self.horizon.offset_at(v);
        let base = 1.0 - self.t_shock() * self.sol.delta_star();
        Ok(p.noc * (base + self.t_shock() * self.sol.g_plus_delta(u) + tau * p.g))
    }

    /// Largest admissible `t` at `U` (the top boundary of `M_*`).
    pub fn t_top(&self, u: f64) -> Result<f64> {
        if u <= self.sol.center() {
            self.t_sing(u)
        } else {
            self.t_ch(u)
        }
    }

    pub fn classify(&self, t: f64, u: f64) -> Region {
        let (a, ur, tol) = (self.sol.center(), self.sol.u_rad(), self.tolerance);
        let v = u - a;
        if (t - self.t_shock()).abs() <= tol && v.abs() <= tol {
            return Region::Crease;
        }
        if t < 0.0 || v.abs() > ur {
            return Region::Exterior;
        }
        if v <= 0.0 {
            match self.t_sing(u) {
                Ok(ts) if (t - ts).abs() <= tol => Region::SingularBoundary,
                Ok(ts) if t < ts => Region::MSing,
                _ => Region::Exterior,
            }
        } else {
            match self.t_ch(u) {
                Ok(tc) if (t - tc).abs() <= tol => Region::CauchyHorizon,
                Ok(tc) if t < tc => Region::MReg,
                _ => Region::Exterior,
            }
        }
    }

    pub fn singular_table(&self, n: usize) -> Result<Vec<(f64, f64)>> {
        let (a, ur) = (self.sol.center(), self.sol.u_rad());
        (0..n)
            .map(|i| {
                let u = a - ur + ur * i as f64 / (n - 1) as f64;
                Ok((u, self.t_sing(u)?))
            })
            .collect()
    }

    /// Rows `(U, t_CH, mu on the horizon)`.
    pub fn horizon_table(&self, n: usize) -> Result<Vec<(f64, f64, f64)>> {
        let (a, um) = (self.sol.center(), self.horizon.u_max);
        (0..n)
            .map(|i| {
                let u = a + um * i as f64 / (n - 1) as f64;
                Ok((u, self.t_ch(u)?, self.mu_on_ch(u)?))
            })
            .collect()
    }

    pub fn asymptotics(&self) -> Result<BoundaryAsymptotics> {
        let (a, ur) = (self.sol.center(), self.sol.u_rad());
        let (lo, hi) = (1e-3 * ur, 1e-1 * ur);
        for x in [lo, hi] {
            singular_curve_offset(&self.sol, a - x)?;
            self.sol.point(a + x)?;
        }
        let sing = power_fit(|x| singular_curve_offset(&self.sol, a - x).unwrap_or(f64::NAN), lo, hi, 16);
        let horizon = power_fit(|x| self.horizon.offset_at(x), lo, hi, 16);
        let mu = power_fit(|x| self.mu_on_ch(a + x).unwrap_or(f64::NAN), lo, hi, 16);
        Ok(BoundaryAsymptotics { singular_curve: sing, cauchy_horizon: horizon, mu_on_horizon: mu })
    }
}

/// Log-log fits of boundary offsets on `[1e-3, 1e-1] U_rad`.
#[derive(Clone, Debug, Serialize)]
pub struct BoundaryAsymptotics {
    pub singular_curve: PowerFit,
    pub cauchy_horizon: PowerFit,
    pub mu_on_horizon: PowerFit,
}

impl BoundaryAsymptotics {
    pub fn passes(&self, tol: f64) -> bool {
        self.singular_curve.within(2.0, tol)
            && self.singular_curve.sign > 0.0
            && self.cauchy_horizon.within(3.0, tol)
            && self.cauchy_horizon.sign > 0.0
            && self.mu_on_horizon.within(2.0, tol)
            && self.mu_on_horizon.sign > 0.0
    }
}

/// `Q = d/dt + (G^2 / G') d/dU` at the point of the singular curve above `U`.
pub fn q_on_singular_curve(sol: &GeometricSolution, u: f64) -> Result<[f64; 2]> {
    let v = u - sol.center();
    if v.abs() > sol.u_rad() || v > 0.0 {
        return Err(Error::OutOfCertifiedRegion(u));
    }
    let p = sol.point(u)?;
    if p.dg == 0.0 || v == 0.0 {
        return Err(Error::CreaseDegeneracy(u));
    }
    Ok([1.0, p.g * p.g / p.dg])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{boundary, solution};
    use proptest::prelude::*;

    #[test]
    fn crease_is_the_first_singular_point() {
        let c = boundary().crease;
        assert!((c.t - 10.0).abs() < 1e-8 && c.u.abs() < 1e-8, "{c:?}");
        assert_eq!(boundary().classify(10.0, 0.0), Region::Crease);
    }

    #[test]
    fn boundary_exponents() {
        let a = boundary().asymptotics().unwrap();
        assert!(a.passes(0.05), "{a:?}");
        assert!(a.singular_curve.coefficient > 0.0 && a.cauchy_horizon.coefficient > 0.0);
    }

    #[test]
    fn mu_vanishes_on_singular_curve() {
        let b = boundary();
        let table = b.singular_table(33).unwrap();
        assert_eq!(b.classify(table[32].1, table[32].0), Region::Crease);
        for &(u, t) in &table[..32] {
            assert!(solution().mu(t, u).unwrap().abs() < 1e-12);
            assert_eq!(b.classify(t, u), Region::SingularBoundary);
            assert_eq!(b.classify(t - 1e-3, u), Region::MSing);
        }
    }

    #[test]
    fn horizon_stays_in_the_regular_region() {
        let b = boundary();
        for (u, t, mu) in b.horizon_table(33).unwrap().into_iter().skip(1) {
            assert!(t > b.t_shock());
            assert!(mu > 0.0);
            assert!(t < b.t_sing(u).unwrap(), "mu = 0 branch must lie above the horizon at U = {u}");
            assert_eq!(b.classify(t, u), Region::CauchyHorizon);
            assert!(Region::CauchyHorizon.in_m_star());
        }
    }

    #[test]
    fn outside_region_is_rejected() {
        let b = boundary();
        let ur = solution().u_rad();
        assert_eq!(b.classify(1.0, 1.01 * ur), Region::Exterior);
        assert_eq!(b.classify(-0.1, 0.0), Region::Exterior);
        assert!(matches!(b.t_sing(1.5 * ur), Err(Error::OutOfCertifiedRegion(_))));
        assert!(matches!(b.t_ch(-0.1), Err(Error::OutOfCertifiedRegion(_))));
    }

    proptest! {
        #[test]
        fn q_is_tangent_to_singular_curve(frac in 0.05f64..0.95) {
            let sol = solution();
            let u = -frac * sol.u_rad();
            let q = q_on_singular_curve(sol, u).unwrap();
            let h = 1e-5;
            let slope = (singular_curve(sol, u + h).unwrap() - singular_curve(sol, u - h).unwrap()) / (2.0 * h);
            prop_assert!((slope * q[1] - 1.0).abs() < 1e-6);
        }

        #[test]
        fn interior_samples_have_positive_mu(frac_u in -1.0f64..1.0, frac_t in 0.0f64..0.999) {
            let b = boundary();
            let u = frac_u * solution().u_rad();
            let t = frac_t * b.t_top(u).unwrap();
            prop_assert!(b.classify(t, u).in_m_star());
            prop_assert!(solution().mu(t, u).unwrap() > 0.0);
        }
    }
}
