//! The map `Upsilon(t, U) = (t, x1)` from geometric to rectangular
//! coordinates, with `x1 = -U + t L1(U)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geo_solution::GeometricSolution;
use crate::mghd_boundary::MghdBoundary;
use crate::numerics::roots::{bisect, bisect_newton, locate_monotone};

/// Samples of the per-`t` inversion table.
pub const INVERSE_SAMPLES: usize = 4097;
const NEAR_SINGULAR: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct CoordinateMap {
    pub sol: GeometricSolution,
    /// `(U, L1(U), G(U))` on the certified interval, shared by every slice.
    nodes: Vec<(f64, f64, f64)>,
    exterior_speed: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Inverse {
    pub u: f64,
    pub residual: f64,
    /// Set when `|det dUpsilon| < 1e-8` at the preimage.
    pub near_singular: bool,
}

impl CoordinateMap {
    pub fn new(sol: &GeometricSolution) -> Result<Self> {
        let (a, ur) = (sol.center(), sol.u_rad());
        let n = INVERSE_SAMPLES;
        let nodes = (0..n)
            .into_par_iter()
            .map(|i| {
                let u = a - ur + 2.0 * ur * i as f64 / (n - 1) as f64;
                let p = sol.point(u)?;
                Ok((u, p.l1, p.g))
            })
            .collect::<Result<Vec<_>>>()?;
        let exterior_speed = sol.data.eos.simple_wave_jet(0.0)?.l1.value();
        Ok(Self { sol: sol.clone(), nodes, exterior_speed })
    }

    pub fn l1(&self, u: f64) -> Result<f64> {
        if self.sol.data.profile.phi(u) == 0.0 && self.sol.g(u) == 0.0 {
            return Ok(self.exterior_speed);
        }
        Ok(self.sol.point(u)?.l1)
    }

    pub fn upsilon(&self, t: f64, u: f64) -> Result<(f64, f64)> {
        Ok((t, -u + t * self.l1(u)?))
    }

    /// `det dUpsilon = dx1/dU = -(1 + t G(U))`.
    pub fn jacobian_det(&self, t: f64, u: f64) -> f64 {
        -self.sol.one_plus_tg(t, u)
    }

    /// Determinant of the centered-difference Jacobian of `upsilon`.
    pub fn fd_jacobian_det(&self, t: f64, u: f64, h: f64) -> Result<f64> {
        let dx_dt = (self.upsilon(t + h, u)?.1 - self.upsilon(t - h, u)?.1) / (2.0 * h);
        let dx_du = (self.upsilon(t, u + h)?.1 - self.upsilon(t, u - h)?.1) / (2.0 * h);
        // dt/dt = 1 and dt/dU = 0.
        Ok(1.0 * dx_du - 0.0 * dx_dt)
    }

    fn refine(&self, t: f64, x1: f64, lo: f64, hi: f64) -> Result<Inverse> {
        let u = bisect_newton(
            |u| match self.l1(u) {
                Ok(l) => (-u + t * l - x1, self.jacobian_det(t, u)),
                Err(_) => (f64::NAN, f64::NAN),
            },
            lo,
            hi,
            1e-14,
        )?;
        let residual = (self.upsilon(t, u)?.1 - x1).abs();
        if residual > 1e-10 * (1.0 + x1.abs()) {
            return Err(Error::NotInImage { t, x1 });
        }
        Ok(Inverse { u, residual, near_singular: self.jacobian_det(t, u).abs() < NEAR_SINGULAR })
    }

    /// Inversion table for `Upsilon(M_*)` at time `t`.
    pub fn slice(&self, boundary: &MghdBoundary, t: f64) -> Result<InverseSlice<'_>> {
        let (a, ur) = (self.sol.center(), self.sol.u_rad());
        let t_shock = self.sol.t_shock();
        if t < 0.0 {
            return Ok(InverseSlice { map: self, t, runs: Vec::new() });
        }
        let mut intervals = Vec::new();
        if t <= t_shock {
            intervals.push((a - ur, a + ur));
        } else {
            if t < boundary.t_sing(a - ur)? {
                let v1 = bisect(|v| boundary.t_sing(a + v).unwrap_or(f64::NAN) - t, -ur, 0.0, 1e-15)?;
                intervals.push((a - ur, a + v1));
            }
            if t <= boundary.t_ch(a + ur)? {
                let v2 = bisect(|v| boundary.t_ch(a + v).unwrap_or(f64::NAN) - t, 0.0, ur, 1e-15)?;
                intervals.push((a + v2, a + ur));
            }
        }
        let mut runs = Vec::new();
        for (lo, hi) in intervals {
            let mut us = vec![lo];
            let mut xs = vec![self.upsilon(t, lo)?.1];
            for &(u, l1, _) in &self.nodes {
                if u > lo && u < hi {
                    us.push(u);
                    xs.push(-u + t * l1);
                }
            }
            us.push(hi);
            xs.push(self.upsilon(t, hi)?.1);
            runs.push(Run { us, xs });
        }
        Ok(InverseSlice { map: self, t, runs })
    }

    /// Preimage in `M_*` of `(t, x1)`.
    pub fn upsilon_inverse(&self, boundary: &MghdBoundary, t: f64, x1: f64) -> Result<Inverse> {
        self.slice(boundary, t)?.invert(x1)
    }

    /// Preimage over all `U` for `0 <= t < T_shock`, where `Upsilon(t, .)` is
    /// a strictly decreasing bijection of the line.
    pub fn upsilon_inverse_global(&self, t: f64, x1: f64) -> Result<Inverse> {
        if !(t >= 0.0 && t < self.sol.t_shock()) {
            return Err(Error::NotInImage { t, x1 });
        }
        let (lo, hi) = self.sol.data.profile.support();
        let x_lo = self.upsilon(t, lo)?.1;
        let x_hi = self.upsilon(t, hi)?.1;
        if x1 >= x_lo || x1 <= x_hi {
            let u = -x1 + t * self.exterior_speed;
            return Ok(Inverse { u, residual: 0.0, near_singular: false });
        }
        self.refine(t, x1, lo, hi)
    }

    pub fn injectivity_audit(&self, boundary: &MghdBoundary, n_u: usize, n_t: usize) -> Result<InjectivityReport> {
        injectivity_audit(self, boundary, n_u, n_t)
    }
}

#[derive(Clone, Debug)]
struct Run {
    us: Vec<f64>,
    xs: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct InverseSlice<'a> {
    map: &'a CoordinateMap,
    pub t: f64,
    runs: Vec<Run>,
}

impl InverseSlice<'_> {
    pub fn invert(&self, x1: f64) -> Result<Inverse> {
        for run in &self.runs {
            if let Some(i) = locate_monotone(&run.xs, x1) {
                return self.map.refine(self.t, x1, run.us[i], run.us[i + 1]);
            }
        }
        Err(Error::NotInImage { t: self.t, x1 })
    }

    /// `x1` ranges covered by the slice, one per admissible `U` interval.
    pub fn ranges(&self) -> Vec<(f64, f64)> {
        self.runs.iter().map(|r| (r.xs[r.xs.len() - 1], r.xs[0])).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InjectivityReport {
    pub grid: [usize; 2],
    pub slices_monotone: bool,
    pub slice_violations: usize,
    pub top_boundary_monotone: bool,
    pub top_violations: usize,
    pub collisions: usize,
    pub collision_tolerance: f64,
    pub min_mu_interior: f64,
    pub interior_samples: usize,
    pub max_abs_mu_on_singular_boundary: f64,
    pub singular_boundary_samples: usize,
    pub passed: bool,
}

fn injectivity_audit(map: &CoordinateMap, boundary: &MghdBoundary, n_u: usize, n_t: usize) -> Result<InjectivityReport> {
    let sol = &map.sol;
    let (a, ur) = (sol.center(), sol.u_rad());
    // Column positions avoid the crease for even n_u.
    let columns: Vec<f64> = (0..n_u).map(|j| a - ur + 2.0 * ur * j as f64 / (n_u - 1) as f64).collect();
    struct Column {
        u: f64,
        l1: f64,
        t_top: f64,
        rows: Vec<(f64, f64, f64)>,
    }
    let cols: Vec<Column> = columns
        .par_iter()
        .map(|&u| {
            let t_top = boundary.t_top(u)?;
            let p = sol.point(u)?;
            let rows = (0..n_t)
                .map(|i| {
                    let t = t_top * i as f64 / (n_t - 1) as f64;
                    let one = if i == n_t - 1 && u <= a {
                        // On the singular curve the affine factor vanishes identically.
                        (1.0 - t_top * sol.delta_star()) + t_top * sol.g_plus_delta(u)
                    } else {
                        sol.one_plus_tg(t, u)
                    };
                    (t, -u + t * p.l1, p.noc * one)
                })
                .collect();
            Ok(Column { u, l1: p.l1, t_top, rows })
        })
        .collect::<Result<_>>()?;

    let mut min_mu = f64::INFINITY;
    let mut interior = 0;
    let mut max_mu_b: f64 = 0.0;
    let mut on_b = 0;
    for c in &cols {
        for (i, &(t, _, mu)) in c.rows.iter().enumerate() {
            if i == n_t - 1 {
                if c.u < a {
                    max_mu_b = max_mu_b.max(mu.abs());
                    on_b += 1;
                }
            } else if boundary.classify(t, c.u).in_m_star() {
                min_mu = min_mu.min(mu);
                interior += 1;
            }
        }
    }

    let top: Vec<f64> = cols.iter().map(|c| c.rows[n_t - 1].1).collect();
    let top_violations = top.windows(2).filter(|w| !(w[1] < w[0])).count();

    // Slices at fixed t through the closure of M_*.
    let t_max = cols.iter().map(|c| c.t_top).fold(0.0, f64::max);
    let slice_violations: usize = (0..n_t)
        .into_par_iter()
        .map(|i| {
            let t = t_max * i as f64 / (n_t - 1) as f64;
            let mut count = 0;
            let mut prev: Option<f64> = None;
            for c in &cols {
                if t > c.t_top {
                    prev = None;
                    continue;
                }
                let x = -c.u + t * c.l1;
                if let Some(px) = prev {
                    if !(x < px) {
                        count += 1;
                    }
                }
                prev = Some(x);
            }
            count
        })
        .sum();

    let mut pts: Vec<(f64, f64)> = cols.iter().flat_map(|c| c.rows.iter().map(|r| (r.0, r.1))).collect();
    let (t_lo, t_hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |m, p| (m.0.min(p.0), m.1.max(p.0)));
    let (x_lo, x_hi) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |m, p| (m.0.min(p.1), m.1.max(p.1)));
    let diameter = ((t_hi - t_lo).powi(2) + (x_hi - x_lo).powi(2)).sqrt();
    let tol = 1e-9 * diameter;
    pts.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    let mut collisions = 0;
    for i in 0..pts.len() {
        let mut k = i + 1;
        while k < pts.len() && pts[k].0 - pts[i].0 <= tol {
            if (pts[k].1 - pts[i].1).abs() <= tol {
                collisions += 1;
            }
            k += 1;
        }
    }
    // t = 0 row: distinct U give distinct x1 = -U, so any collision is genuine.
    let passed = slice_violations == 0 && top_violations == 0 && collisions == 0 && min_mu > 0.0 && max_mu_b <= 1e-12;
    Ok(InjectivityReport {
        grid: [n_u, n_t],
        slices_monotone: slice_violations == 0,
        slice_violations,
        top_boundary_monotone: top_violations == 0,
        top_violations,
        collisions,
        collision_tolerance: tol,
        min_mu_interior: min_mu,
        interior_samples: interior,
        max_abs_mu_on_singular_boundary: max_mu_b,
        singular_boundary_samples: on_b,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{boundary, solution};
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn map() -> &'static CoordinateMap {
        static MAP: OnceLock<CoordinateMap> = OnceLock::new();
        MAP.get_or_init(|| CoordinateMap::new(solution()).unwrap())
    }

    #[test]
    fn identity_at_initial_time() {
        let m = map();
        for u in [-3.0, -1.0, 0.0, 0.4, 2.5] {
            assert_eq!(m.upsilon(0.0, u).unwrap(), (0.0, -u));
            assert_eq!(m.jacobian_det(0.0, u), -1.0);
        }
    }

    #[test]
    fn exterior_moves_with_background_speed() {
        let m = map();
        assert_eq!(m.l1(3.0).unwrap(), 0.5);
        assert!((m.upsilon(4.0, -2.5).unwrap().1 - 4.5).abs() < 1e-15);
    }

    #[test]
    fn jacobian_degenerates_at_crease() {
        let m = map();
        assert!(m.jacobian_det(10.0, 0.0).abs() < 1e-13);
        for (t, u) in [(3.0, 0.3), (9.0, -0.4), (10.5, 0.5)] {
            assert!((m.fd_jacobian_det(t, u, 1e-5).unwrap() - m.jacobian_det(t, u)).abs() < 1e-6);
        }
    }

    #[test]
    fn audit_passes_on_coarse_grid() {
        let r = map().injectivity_audit(boundary(), 60, 60).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.collisions, 0);
        assert!(r.max_abs_mu_on_singular_boundary < 1e-12);
    }

    #[test]
    fn slice_above_shock_has_two_runs() {
        let s = map().slice(boundary(), 10.1).unwrap();
        assert_eq!(s.ranges().len(), 2);
        let s = map().slice(boundary(), 5.0).unwrap();
        assert_eq!(s.ranges().len(), 1);
    }

    #[test]
    fn global_inverse_requires_pre_shock_time() {
        assert!(matches!(map().upsilon_inverse_global(10.5, 0.0), Err(Error::NotInImage { .. })));
        assert!(matches!(map().upsilon_inverse_global(-0.5, 0.0), Err(Error::NotInImage { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn slice_round_trip(frac_u in -0.999f64..0.999, frac_t in 0.0f64..0.99) {
            let (m, b) = (map(), boundary());
            let u = frac_u * solution().u_rad();
            let t = frac_t * b.t_top(u).unwrap();
            let x = m.upsilon(t, u).unwrap().1;
            let inv = m.upsilon_inverse(b, t, x).unwrap();
            prop_assert!((inv.u - u).abs() < 1e-10, "{} vs {}", inv.u, u);
        }

        #[test]
        fn global_round_trip(u in -3.0f64..3.0, frac_t in 0.0f64..0.95) {
            let m = map();
            let t = frac_t * solution().t_shock();
            let x = m.upsilon(t, u).unwrap().1;
            prop_assert!((m.upsilon_inverse_global(t, x).unwrap().u - u).abs() < 1e-10);
        }

        #[test]
        fn jacobian_is_minus_one_plus_tg(u in -2.0f64..2.0, t in 0.0f64..12.0) {
            let sol = solution();
            prop_assert_eq!(map().jacobian_det(t, u), -sol.one_plus_tg(t, u));
        }
    }
}
