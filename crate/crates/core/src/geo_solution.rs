//! Closed-form solution in geometric coordinates `(t, U)`.
//!
//! `R_plus` is constant along `L = d/dt`, and `(c/n) mu = 1 + t G(U)`, so
//! every field below is an explicit expression in the data at `U`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed_data::{DataPoint, InitialData};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeoSample {
    pub t: f64,
    pub u: f64,
    pub r_plus: f64,
    pub mu: f64,
    pub l_mu: f64,
    pub xbreve_mu: f64,
    pub xx_mu: f64,
    /// `None` on the singular curve.
    pub partial1_rplus: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct GeometricSolution {
    pub data: Arc<InitialData>,
}

impl GeometricSolution {
    pub fn new(data: Arc<InitialData>) -> Self {
        Self { data }
    }

    pub fn t_shock(&self) -> f64 {
        self.data.t_shock
    }

    pub fn delta_star(&self) -> f64 {
        self.data.delta_star
    }

    pub fn u_rad(&self) -> f64 {
        self.data.u_rad
    }

    pub fn center(&self) -> f64 {
        self.data.center()
    }

    pub fn point(&self, u: f64) -> Result<DataPoint> {
        self.data.point(u)
    }

    pub fn r_plus(&self, _t: f64, u: f64) -> Result<f64> {
        self.data.r_plus(u)
    }

    pub fn g(&self, u: f64) -> f64 {
        self.data.g(u)
    }

    /// `G(U) + delta_star`, evaluated without cancellation on the plateau.
    pub fn g_plus_delta(&self, u: f64) -> f64 {
        let p = &self.data.profile;
        let v = u - p.shift;
        if v.abs() <= p.plateau {
            let mut acc = 0.0;
            for (k, &c) in p.coefficients.iter().enumerate().skip(2).rev() {
                acc = acc * v + k as f64 * c;
            }
            p.epsilon * acc * v
        } else {
            self.g(u) + self.data.delta_star
        }
    }

    /// `1 + t G(U)` written as `(1 - t delta_star) + t (G + delta_star)`.
    pub fn one_plus_tg(&self, t: f64, u: f64) -> f64 {
        (1.0 - t * self.data.delta_star) + t * self.g_plus_delta(u)
    }

    pub fn c_over_n(&self, u: f64) -> Result<f64> {
        Ok(1.0 / self.point(u)?.noc)
    }

    pub fn mu(&self, t: f64, u: f64) -> Result<f64> {
        Ok(self.point(u)?.noc * self.one_plus_tg(t, u))
    }

    pub fn l_mu(&self, _t: f64, u: f64) -> Result<f64> {
        let p = self.point(u)?;
        Ok(p.noc * p.g)
    }

    pub fn xbreve_mu(&self, t: f64, u: f64) -> Result<f64> {
        let p = self.point(u)?;
        Ok(t * p.noc * p.dg + p.dnoc * self.one_plus_tg(t, u))
    }

    pub fn xx_mu(&self, t: f64, u: f64) -> Result<f64> {
        let p = self.point(u)?;
        Ok(t * p.noc * p.ddg + 2.0 * t * p.dnoc * p.dg + p.ddnoc * self.one_plus_tg(t, u))
    }

    /// `L Xbreve mu`, the `t` derivative of `Xbreve mu`.
    pub fn l_xbreve_mu(&self, _t: f64, u: f64) -> Result<f64> {
        let p = self.point(u)?;
        Ok(p.noc * p.dg + p.dnoc * p.g)
    }

    pub fn partial1_rplus(&self, t: f64, u: f64) -> Result<f64> {
        let p = self.point(u)?;
        let den = self.one_plus_tg(t, u);
        if den.abs() < 1e-13 * (t * self.data.delta_star).max(1.0) {
            return Err(Error::AtSingularity { t, u });
        }
        Ok(-p.dr / den)
    }

    pub fn sample(&self, t: f64, u: f64) -> Result<GeoSample> {
        let p = self.point(u)?;
        let one = self.one_plus_tg(t, u);
        let singular = one.abs() < 1e-13 * (t * self.data.delta_star).max(1.0);
        Ok(GeoSample {
            t,
            u,
            r_plus: p.r,
            mu: p.noc * one,
            l_mu: p.noc * p.g,
            xbreve_mu: t * p.noc * p.dg + p.dnoc * one,
            xx_mu: t * p.noc * p.ddg + 2.0 * t * p.dnoc * p.dg + p.ddnoc * one,
            partial1_rplus: if singular { None } else { Some(-p.dr / one) },
        })
    }

    /// Samples on a `nt x nu` tensor grid over `[0, t_max] x [u_lo, u_hi]`.
    pub fn grid(&self, t_max: f64, nt: usize, u_lo: f64, u_hi: f64, nu: usize) -> Result<Vec<GeoSample>> {
        let us: Vec<f64> = (0..nu).map(|j| u_lo + (u_hi - u_lo) * j as f64 / (nu - 1).max(1) as f64).collect();
        let points: Vec<DataPoint> = us.par_iter().map(|&u| self.point(u)).collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(nt * nu);
        for i in 0..nt {
            let t = t_max * i as f64 / (nt - 1).max(1) as f64;
            for p in &points {
                let one = self.one_plus_tg(t, p.u);
                let singular = one.abs() < 1e-13 * (t * self.data.delta_star).max(1.0);
                out.push(GeoSample {
                    t,
                    u: p.u,
                    r_plus: p.r,
                    mu: p.noc * one,
                    l_mu: p.noc * p.g,
                    xbreve_mu: t * p.noc * p.dg + p.dnoc * one,
                    xx_mu: t * p.noc * p.ddg + 2.0 * t * p.dnoc * p.dg + p.ddnoc * one,
                    partial1_rplus: if singular { None } else { Some(-p.dr / one) },
                });
            }
        }
        Ok(out)
    }

    pub fn verify_sharp_estimates(&self) -> Result<SharpEstimateReport> {
        verify_sharp_estimates(self)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateCheck {
    pub name: String,
    pub passed: bool,
    /// Observed `[min, max]` of the checked quantity.
    pub observed: [f64; 2],
    /// Admissible `[lower, upper]` (infinite where one-sided).
    pub bounds: [f64; 2],
}

#[derive(Clone, Debug, Serialize)]
pub struct SharpEstimateReport {
    pub u_rad: f64,
    pub t_shock: f64,
    pub checks: Vec<EstimateCheck>,
    pub all_passed: bool,
}

fn check(name: &str, observed: [f64; 2], bounds: [f64; 2]) -> EstimateCheck {
    EstimateCheck { name: name.to_string(), passed: observed[0] >= bounds[0] && observed[1] <= bounds[1], observed, bounds }
}

fn extend(range: &mut [f64; 2], v: f64) {
    range[0] = range[0].min(v);
    range[1] = range[1].max(v);
}

const EMPTY: [f64; 2] = [f64::INFINITY, f64::NEG_INFINITY];

fn verify_sharp_estimates(sol: &GeometricSolution) -> Result<SharpEstimateReport> {
    let d = &sol.data;
    let (a, ur, t_shock, ds, b) = (d.center(), d.u_rad, d.t_shock, d.delta_star, d.b_coeff);
    let nu = 801;
    let nt = 101;
    let points: Vec<DataPoint> =
        (0..nu).into_par_iter().map(|j| sol.point(a - ur + 2.0 * ur * j as f64 / (nu - 1) as f64)).collect::<Result<_>>()?;

    let mut mu_ratio = EMPTY;
    let mut l_mu = EMPTY;
    let mut g = EMPTY;
    let mut g_sign = EMPTY;
    let mut xx_at_shock = EMPTY;
    let mut outer = EMPTY;
    let mut zeros = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for p in &points {
        let v = p.u - a;
        extend(&mut l_mu, p.noc * p.g);
        extend(&mut g, p.g);
        if v != 0.0 {
            extend(&mut g_sign, p.dg * v.signum());
        }
        for i in 0..nt {
            let t = t_shock * i as f64 / (nt - 1) as f64;
            let mu = p.noc * sol.one_plus_tg(t, p.u);
            let model = 0.5 * b * v * v + ds * (t_shock - t);
            if model > 0.0 {
                extend(&mut mu_ratio, mu / model);
            }
        }
        let one = sol.one_plus_tg(t_shock, p.u);
        let x_mu = t_shock * p.noc * p.dg + p.dnoc * one;
        extend(&mut xx_at_shock, t_shock * p.noc * p.ddg + 2.0 * t_shock * p.dnoc * p.dg + p.ddnoc * one);
        if v.abs() >= 0.5 * ur {
            extend(&mut outer, x_mu.abs());
        }
        if let Some((pv, px)) = prev {
            if px.signum() != x_mu.signum() || x_mu == 0.0 {
                zeros.push(if px == x_mu { v } else { pv + (v - pv) * px / (px - x_mu) });
            }
        }
        prev = Some((v, x_mu));
    }
    zeros.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    let zero_range = zeros.iter().fold(EMPTY, |mut r, &z| {
        extend(&mut r, z.abs());
        r
    });

    let far: Vec<f64> = d
        .profile
        .certification_grid(2048, 2)
        .into_par_iter()
        .filter(|&u| (u - a).abs() >= ur)
        .map(|u| sol.point(u).map(|p| p.noc * sol.one_plus_tg(t_shock, u).min(1.0)))
        .collect::<Result<_>>()?;
    let min_far = far.iter().copied().fold(f64::INFINITY, f64::min);

    let checks = vec![
        check("mu_bracket_positive", mu_ratio, [f64::MIN_POSITIVE, f64::INFINITY]),
        check("l_mu_bracket", l_mu, d.certification.l_mu_bounds),
        check("g_negative", g, [f64::NEG_INFINITY, -f64::MIN_POSITIVE]),
        check("g_prime_sign_of_u", g_sign, [0.0, f64::INFINITY]),
        check("xx_mu_transversal_convexity", xx_at_shock, [0.5 * t_shock * b / d.c_hi, 2.0 * t_shock * b / d.c_lo]),
        check("xbreve_mu_zero_location", zero_range, [0.0, 0.25 * ur]),
        EstimateCheck {
            name: "xbreve_mu_single_zero".into(),
            passed: zeros.len() == 1,
            observed: [zeros.len() as f64; 2],
            bounds: [1.0, 1.0],
        },
        check("xbreve_mu_outer_band", outer, [b * ur / 8.0, f64::INFINITY]),
        check("mu_positive_outside", [min_far, min_far], [f64::MIN_POSITIVE, f64::INFINITY]),
    ];
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(SharpEstimateReport { u_rad: ur, t_shock, checks, all_passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::solution;
    use crate::numerics::fd::d1_c4;
    use proptest::prelude::*;

    #[test]
    fn default_shock_time() {
        let sol = solution();
        assert!((sol.t_shock() - 10.0).abs() < 1e-12);
        assert!((sol.delta_star() - 0.1).abs() < 1e-15);
        assert!((sol.g(sol.center()) + 0.1).abs() < 1e-13);
    }

    #[test]
    fn mu_starts_at_n_over_c() {
        let sol = solution();
        for u in [-1.5, -0.3, 0.0, 0.7, 3.0] {
            assert_eq!(sol.mu(0.0, u).unwrap(), sol.point(u).unwrap().noc);
        }
    }

    #[test]
    fn mu_vanishes_first_at_the_center() {
        let sol = solution();
        assert!(sol.mu(sol.t_shock(), sol.center()).unwrap().abs() < 1e-12);
        assert!(sol.xbreve_mu(sol.t_shock(), sol.center()).unwrap().abs() < 1e-12);
        assert!(matches!(sol.partial1_rplus(sol.t_shock(), sol.center()), Err(Error::AtSingularity { .. })));
    }

    #[test]
    fn transversal_derivatives_match_differences() {
        let sol = solution();
        let (t, h) = (6.0, 1e-3);
        for u in [-0.8, -0.2, 0.35, 0.9] {
            let fd = d1_c4(|x| sol.mu(t, x).unwrap(), u, h);
            assert!((fd - sol.xbreve_mu(t, u).unwrap()).abs() < 1e-9);
            let fd2 = d1_c4(|x| sol.xbreve_mu(t, x).unwrap(), u, h);
            assert!((fd2 - sol.xx_mu(t, u).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn sharp_estimates_hold() {
        let report = solution().verify_sharp_estimates().unwrap();
        assert!(report.all_passed, "{report:?}");
    }

    #[test]
    fn grid_matches_pointwise_samples() {
        let sol = solution();
        let grid = sol.grid(5.0, 3, -1.0, 1.0, 5).unwrap();
        assert_eq!(grid.len(), 15);
        for s in &grid {
            let p = sol.sample(s.t, s.u).unwrap();
            assert_eq!((p.mu, p.xbreve_mu, p.partial1_rplus), (s.mu, s.xbreve_mu, s.partial1_rplus));
        }
    }

    proptest! {
        #[test]
        fn mu_is_affine_in_t(u in -2.5f64..2.5, t in 0.0f64..9.9) {
            let sol = solution();
            let fd = (sol.mu(t + 0.05, u).unwrap() - sol.mu(t - 0.05, u).unwrap()) / 0.1;
            prop_assert!((fd - sol.l_mu(t, u).unwrap()).abs() < 1e-12);
            let x = (sol.xbreve_mu(t + 0.05, u).unwrap() - sol.xbreve_mu(t - 0.05, u).unwrap()) / 0.1;
            prop_assert!((x - sol.l_xbreve_mu(t, u).unwrap()).abs() < 1e-11);
        }

        #[test]
        fn mu_positive_before_shock(u in -2.5f64..2.5, frac in 0.0f64..0.999) {
            let sol = solution();
            prop_assert!(sol.mu(frac * sol.t_shock(), u).unwrap() > 0.0);
        }
    }
}
