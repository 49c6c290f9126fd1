use std::sync::Arc;

use mghd_core::coordinate_map::CoordinateMap;
use mghd_core::energy_currents::{positivity_scan, sample_pairs, threshold_for};
use mghd_core::geo_solution::GeometricSolution;
use mghd_core::mghd_boundary::MghdBoundary;
use mghd_core::oracle_solver::{compare_with_geometric, estimate_blowup_time, evolve, max_gradient, OracleParams, Scheme};
use mghd_core::seed_data::{build_initial_data, InitialData};
use mghd_core::verification::{identity_suite, kernel_convergence};
use mghd_core::EquationOfState;
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::output::{row, OutputDir};
use crate::scenario::Scenario;
use crate::svg::Figure;

/// Flag overrides for the rectangular solver.
#[derive(Clone, Debug, Default)]
pub struct OracleOverrides {
    pub dx: Option<f64>,
    pub cfl: Option<f64>,
    pub t_end: Option<f64>,
    pub scheme: Option<Scheme>,
}

/// The pipeline stages a subcommand needs, built once from the scenario.
pub struct Pipeline {
    pub scenario: Scenario,
    pub data: Arc<InitialData>,
    pub sol: GeometricSolution,
}

impl Pipeline {
    pub fn build(scenario: &Scenario) -> CliResult<Self> {
        let eos = Arc::new(EquationOfState::new(scenario.eos.clone())?);
        let data = Arc::new(build_initial_data(&scenario.seed, eos)?);
        let sol = GeometricSolution::new(data.clone());
        Ok(Self { scenario: scenario.clone(), data, sol })
    }

    fn boundary(&self) -> CliResult<MghdBoundary> {
        Ok(MghdBoundary::build(&self.sol)?)
    }

    fn map(&self) -> CliResult<CoordinateMap> {
        Ok(CoordinateMap::new(&self.sol)?)
    }

    fn certified_nodes(&self, n: usize) -> Vec<f64> {
        let (a, ur) = (self.sol.center(), self.sol.u_rad());
        (0..n).map(|j| a - ur + 2.0 * ur * j as f64 / (n - 1) as f64).collect()
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn seed(p: &Pipeline, out: &mut OutputDir) -> CliResult<Value> {
    let d = &p.data;
    let (lo, hi) = d.profile.support();
    let pad = 0.1 * (hi - lo);
    let rows = linspace(lo - pad, hi + pad, 801)
        .into_iter()
        .map(|u| {
            let pt = d.point(u)?;
            Ok(row(&[u, d.profile.phi(u), pt.r, pt.g, pt.noc]))
        })
        .collect::<CliResult<Vec<_>>>()?;
    out.csv("seed_profile.csv", &["U", "phi", "R_plus", "G", "n_over_c"], rows)?;
    let summary = json!({
        "eos": p.scenario.eos,
        "initial_data": d.as_ref(),
    });
    out.json("seed.json", &summary)?;
    Ok(json!({
        "epsilon": d.epsilon,
        "delta_star": d.delta_star,
        "T_shock": d.t_shock,
        "U_rad": d.u_rad,
    }))
}

pub fn solve_geo(p: &Pipeline, out: &mut OutputDir) -> CliResult<Value> {
    let g = &p.scenario.grids;
    let (lo, hi) = p.data.profile.support();
    let samples = p.sol.grid(p.sol.t_shock(), g.geo_nt, lo, hi, g.geo_nu)?;
    let mut min_mu = (f64::INFINITY, 0.0, 0.0);
    for s in &samples {
        if s.mu < min_mu.0 {
            min_mu = (s.mu, s.t, s.u);
        }
    }
    let rows = samples.iter().map(|s| {
        vec![Some(s.t), Some(s.u), Some(s.r_plus), Some(s.mu), Some(s.l_mu), Some(s.xbreve_mu), Some(s.xx_mu), s.partial1_rplus]
    });
    out.csv("geo.csv", &["t", "U", "R_plus", "mu", "L_mu", "Xbreve_mu", "XX_mu", "partial1_Rplus"], rows)?;
    let summary = json!({
        "T_shock": p.sol.t_shock(),
        "delta_star": p.sol.delta_star(),
        "grid": [g.geo_nt, g.geo_nu],
        "U_range": [lo, hi],
        "min_mu": { "value": min_mu.0, "t": min_mu.1, "U": min_mu.2 },
    });
    out.json("geo.json", &summary)?;
    Ok(summary)
}

pub fn boundary(p: &Pipeline, out: &mut OutputDir) -> CliResult<Value> {
    let b = p.boundary()?;
    let n = p.scenario.grids.boundary_rows;
    let sing = b.singular_table(n)?;
    out.csv("singular_curve.csv", &["U", "t_sing"], sing.iter().map(|&(u, t)| row(&[u, t])))?;
    let ch = b.horizon_table(n)?;
    out.csv("cauchy_horizon.csv", &["U", "t_ch", "mu_on_ch"], ch.iter().map(|&(u, t, m)| row(&[u, t, m])))?;
    let asymptotics = b.asymptotics()?;
    let summary = json!({
        "crease": [b.crease.t, b.crease.u],
        "T_shock": b.t_shock(),
        "delta_star": p.sol.delta_star(),
        "U_rad": p.sol.u_rad(),
        "crease_search": b.crease,
        "horizon": { "steps": b.horizon.steps, "step_error": b.horizon.step_error, "U_max": b.horizon.u_max },
        "asymptotics": asymptotics,
        "asymptotics_pass": asymptotics.passes(0.05),
    });
    out.json("boundary.json", &summary)?;
    Ok(json!({ "crease": [b.crease.t, b.crease.u], "T_shock": b.t_shock() }))
}

pub fn map(p: &Pipeline, out: &mut OutputDir) -> CliResult<Value> {
    let b = p.boundary()?;
    let m = p.map()?;
    let g = &p.scenario.grids;
    let mut rows = Vec::with_capacity(g.map_nt * g.map_nu);
    for u in p.certified_nodes(g.map_nu) {
        let top = b.t_top(u)?;
        for t in linspace(0.0, top, g.map_nt) {
            rows.push(row(&[t, u, m.upsilon(t, u)?.1, m.jacobian_det(t, u)]));
        }
    }
    out.csv("map.csv", &["t", "U", "x1", "jac_det"], rows)?;
    let audit = m.injectivity_audit(&b, g.audit[0], g.audit[1])?;
    out.json("map_audit.json", &audit)?;
    out.text("map.svg", &rectangular_figure(p, &b, &m)?.render())?;
    let passed = audit.passed;
    Ok(json!({ "injectivity_passed": passed, "collisions": audit.collisions }))
}

fn oracle_params(p: &Pipeline, o: &OracleOverrides) -> (OracleParams, f64) {
    let mut params = p.scenario.oracle.params();
    params.dx = o.dx.unwrap_or(params.dx);
    params.cfl = o.cfl.unwrap_or(params.cfl);
    params.scheme = o.scheme.unwrap_or(params.scheme);
    let t_end = o.t_end.or(p.scenario.oracle.t_end).unwrap_or(0.5 * p.sol.t_shock());
    (params, t_end)
}

pub fn oracle(p: &Pipeline, o: &OracleOverrides, blowup: bool, out: &mut OutputDir) -> CliResult<Value> {
    let (params, t_end) = oracle_params(p, o);
    let run = evolve(&p.data, &params, t_end)?;
    let rows = (0..run.mesh.n).map(|i| row(&[run.mesh.x(i), run.r_plus[i], run.r_minus[i]]));
    out.csv("oracle.csv", &["x1", "R_plus", "R_minus"], rows)?;
    out.csv("oracle_history.csv", &["t", "max_abs_dx_R_plus"], run.history.iter().map(|&(t, g)| row(&[t, g])))?;
    let mut summary = json!({
        "params": params,
        "t_end": run.t,
        "mesh": run.mesh,
        "steps": run.steps,
        "initial_max_gradient": run.history.first().map(|h| h.1),
        "final_max_gradient": max_gradient(&run.r_plus, run.mesh.dx),
        "total_variation": run.total_variation(),
        "r_minus_sup": run.r_minus_sup(),
        "T_shock": p.sol.t_shock(),
    });
    if blowup {
        let est = estimate_blowup_time(&p.data, &p.scenario.ladder)?;
        let rel = (est.estimate - p.sol.t_shock()).abs() / p.sol.t_shock();
        summary["blowup"] = json!({ "ladder": p.scenario.ladder, "estimate": est, "relative_error": rel });
    }
    out.json("oracle.json", &summary)?;
    Ok(summary)
}

pub fn compare(p: &Pipeline, o: &OracleOverrides, out: &mut OutputDir) -> CliResult<Value> {
    let (params, t_end) = oracle_params(p, o);
    let b = p.boundary()?;
    let m = p.map()?;
    let mut reports = Vec::new();
    let mut finest = None;
    for k in 0..=p.scenario.oracle.refinements {
        let level = OracleParams { dx: params.dx / 2f64.powi(k as i32), ..params.clone() };
        let run = evolve(&p.data, &level, t_end)?;
        reports.push(compare_with_geometric(&run, &m, &b)?);
        finest = Some(run);
    }
    let run = finest.expect("at least one level");
    let slice = m.slice(&b, run.t)?;
    let rows = (0..run.mesh.n)
        .map(|i| {
            let x = run.mesh.x(i);
            let exact = match slice.invert(x) {
                Ok(inv) => Some(p.sol.r_plus(run.t, inv.u)?),
                Err(mghd_core::Error::NotInImage { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            Ok(vec![Some(x), Some(run.r_plus[i]), exact, exact.map(|e| (run.r_plus[i] - e).abs())])
        })
        .collect::<CliResult<Vec<_>>>()?;
    out.csv("compare.csv", &["x1", "R_plus_oracle", "R_plus_geometric", "abs_error"], rows)?;
    let ratios: Vec<f64> = reports.windows(2).map(|w| w[0].l1 / w[1].l1).collect();
    let orders: Vec<f64> = ratios.iter().map(|r| r.log2()).collect();
    let summary = json!({
        "t": run.t,
        "scheme": params.scheme,
        "cfl": params.cfl,
        "levels": reports,
        "l1_ratios": ratios,
        "observed_orders": orders,
        "nominal_order": params.scheme.order(),
    });
    out.json("compare.json", &summary)?;
    Ok(json!({ "t": run.t, "l1_ratios": summary["l1_ratios"], "observed_orders": summary["observed_orders"] }))
}

fn verdict(name: &str, passed: bool, summary: Value) -> CliResult<Value> {
    if passed {
        Ok(summary)
    } else {
        Err(CliError::CheckFailed(format!("{name}: at least one check failed, see the report")))
    }
}

pub fn check_identities(p: &Pipeline, out: &mut OutputDir) -> CliResult<Value> {
    let s = &p.scenario.identities;
    let report = identity_suite(&p.data.eos, Some(&p.sol), s.samples, s.state_bound, s.rng_seed)?;
    out.json("identities.json", &report)?;
    let failed: Vec<&str> = report.families.iter().filter(|f| !f.passed).map(|f| f.name.as_str()).collect();
    verdict("identities", report.passed, json!({ "passed": report.passed, "families": report.families.len(), "failed": failed }))
}

pub fn check_energy_current(p: &Pipeline, samples: Option<usize>, out: &mut OutputDir) -> CliResult<Value> {
    let s = &p.scenario.energy;
    let eos = &p.data.eos;
    let pairs = sample_pairs(&s.compact_set, eos, samples.unwrap_or(s.samples), s.rng_seed);
    let mut thresholds = Vec::with_capacity(pairs.len());
    let mut failures = 0usize;
    for pair in &pairs {
        match threshold_for(pair, eos) {
            Ok((f, lambda)) => thresholds.push((f, lambda)),
            Err(_) => failures += 1,
        }
    }
    let scan = positivity_scan(&pairs, eos, s.variations, s.rng_seed + 1)?;
    let max_threshold = thresholds.iter().map(|t| t.0).fold(0.0, f64::max);
    let min_lambda = thresholds.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let passed = failures == 0 && min_lambda > 0.0 && scan.passed && scan.reduced_all_positive;
    let report = json!({
        "compact_set": s.compact_set,
        "samples": pairs.len(),
        "doubling_failures": failures,
        "max_threshold": max_threshold,
        "min_eigenvalue_at_own_threshold": min_lambda,
        "scan": scan,
        "passed": passed,
    });
    out.json("energy_current.json", &report)?;
    verdict(
        "energy-current",
        passed,
        json!({ "passed": passed, "threshold": scan.threshold, "min_eigenvalue": scan.min_eigenvalue, "min_reduced_constant": scan.min_reduced_constant }),
    )
}

pub fn check_kernels(p: &Pipeline, out: &mut OutputDir) -> CliResult<Value> {
    let k = &p.scenario.kernels;
    let report = kernel_convergence(p.data.eos.clone(), k.amplitude, k.center, &k.spacings)?;
    out.json("kernels.json", &report)?;
    let orders: Vec<(&str, &Vec<f64>)> = report.residuals.iter().map(|r| (r.name.as_str(), &r.orders)).collect();
    verdict("kernels", report.passed, json!({ "passed": report.passed, "orders": orders }))
}

pub fn check_sharp_estimates(p: &Pipeline, out: &mut OutputDir) -> CliResult<Value> {
    let estimates = p.sol.verify_sharp_estimates()?;
    let asymptotics = p.boundary()?.asymptotics()?;
    let passed = estimates.all_passed && asymptotics.passes(0.05);
    let report = json!({
        "estimates": estimates,
        "certification": p.data.certification,
        "bounds_c_over_n": [p.data.c_lo, p.data.c_hi],
        "boundary_asymptotics": asymptotics,
        "passed": passed,
    });
    out.json("sharp_estimates.json", &report)?;
    let failed: Vec<&str> = estimates.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    verdict("sharp-estimates", passed, json!({ "passed": passed, "checks": estimates.checks.len(), "failed": failed }))
}

pub fn plot(p: &Pipeline, out: &mut OutputDir) -> CliResult<Value> {
    let b = p.boundary()?;
    let m = p.map()?;
    out.text("seed_profile.svg", &seed_figure(p)?.render())?;
    out.text("development.svg", &geometric_figure(p, &b)?.render())?;
    let mut rect = rectangular_figure(p, &b, &m)?;
    out.text("rectangular.svg", &rect.render())?;
    let crease = m.upsilon(b.crease.t, b.crease.u)?;
    let (t0, x0) = (crease.0, crease.1);
    rect.window([x0 - 0.15 * t0, x0 + 0.1 * t0, 0.8 * t0, 1.05 * t0]);
    out.text("rectangular_crease.svg", &rect.render())?;
    Ok(json!({ "figures": ["seed_profile.svg", "development.svg", "rectangular.svg", "rectangular_crease.svg"] }))
}

fn seed_figure(p: &Pipeline) -> CliResult<Figure> {
    let d = &p.data;
    let (lo, hi) = d.profile.support();
    let pad = 0.1 * (hi - lo);
    let us = linspace(lo - pad, hi + pad, 601);
    let phi: Vec<(f64, f64)> = us.iter().map(|&u| (u, d.profile.phi(u))).collect();
    let r = us.iter().map(|&u| Ok((u, d.r_plus(u)?))).collect::<CliResult<Vec<_>>>()?;
    let g: Vec<(f64, f64)> = us.iter().map(|&u| (u, d.g(u))).collect();
    let mut f = Figure::new("Seed profile", "U", "value");
    f.line(phi, "#1f4e9c", 2.0, Some("phi"))
        .dashed(r, "#2a9d3f", Some("R+ data"))
        .line(g, "#c0392b", 1.5, Some("G = phi'"))
        .line(vec![(lo - pad, -d.delta_star), (hi + pad, -d.delta_star)], "#888888", 1.0, Some("-delta*"))
        .marker((d.center(), d.g(d.center())), "black", "min G");
    Ok(f)
}

fn geometric_figure(p: &Pipeline, b: &MghdBoundary) -> CliResult<Figure> {
    let (a, ur) = (p.sol.center(), p.sol.u_rad());
    let n = p.scenario.grids.boundary_rows;
    let sing: Vec<(f64, f64)> = b.singular_table(n)?.into_iter().collect();
    let ch: Vec<(f64, f64)> = b.horizon_table(n)?.into_iter().map(|(u, t, _)| (u, t)).collect();
    // Fictitious mu = 0 branch beyond the horizon, clipped to the plot height.
    let t_cap = 1.25 * p.sol.t_shock();
    let ghost: Vec<(f64, f64)> =
        linspace(a, a + ur, n).into_iter().filter_map(|u| b.t_sing(u).ok().filter(|&t| t <= t_cap).map(|t| (u, t))).collect();
    let mut top = sing.clone();
    top.extend(ch.iter().skip(1));
    let bottom: Vec<(f64, f64)> = top.iter().map(|&(u, _)| (u, 0.0)).collect();
    let mut f = Figure::new("Development in geometric coordinates", "U", "t");
    f.band(bottom, top, "#dce8f7")
        .line(sing, "#c0392b", 2.5, Some("singular boundary"))
        .line(ch, "#1f4e9c", 2.5, Some("Cauchy horizon"))
        .dashed(ghost, "#c0392b", Some("mu = 0 (not reached)"))
        .line(vec![(a - ur, p.sol.t_shock()), (a + ur, p.sol.t_shock())], "#888888", 1.0, Some("t = T_shock"))
        .marker((b.crease.u, b.crease.t), "black", "crease");
    Ok(f)
}

fn rectangular_figure(p: &Pipeline, b: &MghdBoundary, m: &CoordinateMap) -> CliResult<Figure> {
    let (a, ur) = (p.sol.center(), p.sol.u_rad());
    let g = &p.scenario.grids;
    let mut f = Figure::new("Image of the development in (x1, t)", "x1", "t");
    for (k, u) in p.certified_nodes(g.plot_characteristics).into_iter().enumerate() {
        let top = b.t_top(u)?;
        let pts = linspace(0.0, top, 64).into_iter().map(|t| Ok((m.upsilon(t, u)?.1, t))).collect::<CliResult<Vec<_>>>()?;
        f.line(pts, "#9aa5b1", 0.8, (k == 0).then_some("characteristics"));
    }
    let n = g.boundary_rows;
    let sing = b.singular_table(n)?.into_iter().map(|(u, t)| Ok((m.upsilon(t, u)?.1, t))).collect::<CliResult<Vec<_>>>()?;
    let ch = b.horizon_table(n)?.into_iter().map(|(u, t, _)| Ok((m.upsilon(t, u)?.1, t))).collect::<CliResult<Vec<_>>>()?;
    let bottom = vec![(m.upsilon(0.0, a + ur)?.1, 0.0), (m.upsilon(0.0, a - ur)?.1, 0.0)];
    let crease = m.upsilon(b.crease.t, b.crease.u)?;
    f.line(sing, "#c0392b", 2.5, Some("image of singular boundary"))
        .line(ch, "#1f4e9c", 2.5, Some("image of Cauchy horizon"))
        .line(bottom, "black", 1.5, Some("t = 0"))
        .marker((crease.1, crease.0), "black", "crease");
    Ok(f)
}
