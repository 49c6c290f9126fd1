use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn mghd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mghd"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .env_remove("MGHD_SCENARIO")
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

fn stderr_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stderr)
        .unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&o.stderr)))
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn scenario(dir: &Path, body: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

#[test]
fn identities_pass_on_default_scenario() {
    let tmp = TempDir::new().unwrap();
    let o = mghd(tmp.path(), &["check", "identities"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout_json(&o)["result"]["passed"], true);
    let report = read_json(&tmp.path().join("out/identities.json"));
    assert_eq!(report["samples"], 10_000);
    assert!(report["families"].as_array().unwrap().iter().all(|f| f["passed"] == true));
}

#[test]
fn boundary_reports_the_crease() {
    let tmp = TempDir::new().unwrap();
    let o = mghd(tmp.path(), &["boundary"]);
    assert_eq!(o.status.code(), Some(0));
    let report = read_json(&tmp.path().join("out/boundary.json"));
    let delta = report["delta_star"].as_f64().unwrap();
    let crease = report["crease"].as_array().unwrap();
    assert!((crease[0].as_f64().unwrap() - 1.0 / delta).abs() < 1e-8);
    assert!(crease[1].as_f64().unwrap().abs() < 1e-8);
    assert_eq!(report["asymptotics_pass"], true);
    let table = fs::read_to_string(tmp.path().join("out/cauchy_horizon.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("U,t_ch,mu_on_ch"));
    assert_eq!(table.lines().count(), 130);
}

#[test]
fn malformed_seed_exits_with_condition() {
    let tmp = TempDir::new().unwrap();
    let path = scenario(tmp.path(), "[seed]\ncoefficients = [0.0, 1.0]\n");
    let o = mghd(tmp.path(), &["seed", "--scenario", &path]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["error"]["code"], "ViolatedMinimum");
    assert_eq!(err["error"]["condition"], "ViolatedMinimum");
    assert_eq!(err["exit_code"], 2);
    assert!(o.stdout.is_empty());
}

#[test]
fn narrow_support_names_its_condition() {
    let tmp = TempDir::new().unwrap();
    let path = scenario(tmp.path(), "[seed]\nsupport = [0.9, 2.0]\nplateau = 0.5\n");
    let o = mghd(tmp.path(), &["solve-geo", "--scenario", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["condition"], "ViolatedSupport");
}

#[test]
fn unknown_scenario_keys_are_config_errors() {
    let tmp = TempDir::new().unwrap();
    let path = scenario(tmp.path(), "[seed]\namplitude = 0.1\n");
    let o = mghd(tmp.path(), &["seed", "--scenario", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["code"], "Config");
    let missing = mghd(tmp.path(), &["seed", "--scenario", "/nonexistent/scenario.toml"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn bad_flags_give_usage_json() {
    let tmp = TempDir::new().unwrap();
    let o = mghd(tmp.path(), &["oracle", "--scheme", "weno"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["code"], "Usage");
    let o = mghd(tmp.path(), &["oracle", "--cfl", "1.5", "--t-end", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"]["code"], "CflViolation");
}

#[test]
fn outputs_are_byte_identical_across_runs_and_workers() {
    let tmp = TempDir::new().unwrap();
    let names =
        ["geo.csv", "geo.json", "singular_curve.csv", "cauchy_horizon.csv", "boundary.json", "seed.json", "seed_profile.csv"];
    let mut snapshots = Vec::new();
    for (k, workers) in ["1", "3"].iter().enumerate() {
        let dir = tmp.path().join(format!("run{k}"));
        fs::create_dir_all(&dir).unwrap();
        for cmd in ["seed", "solve-geo", "boundary"] {
            let o = mghd(&dir, &[cmd, "--workers", workers]);
            assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        }
        snapshots.push(names.map(|n| fs::read(dir.join("out").join(n)).unwrap()));
    }
    for (i, n) in names.iter().enumerate() {
        assert!(snapshots[0][i] == snapshots[1][i], "{n} differs between runs");
    }
}

#[test]
fn csv_uses_seventeen_significant_digits() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(mghd(tmp.path(), &["solve-geo"]).status.code(), Some(0));
    let text = fs::read_to_string(tmp.path().join("out/geo.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,U,R_plus,mu,L_mu,Xbreve_mu,XX_mu,partial1_Rplus"));
    let row: Vec<&str> = lines.nth(100).unwrap().split(',').collect();
    assert_eq!(row.len(), 8);
    for cell in row {
        let mantissa = cell.split('e').next().unwrap().replace(['-', '.'], "");
        assert_eq!(mantissa.len(), 17, "{cell}");
    }
    // The crease sample has no finite rectangular derivative.
    assert!(text.lines().any(|l| l.ends_with(',')));
}

#[test]
fn scenario_comes_from_the_environment() {
    let tmp = TempDir::new().unwrap();
    let path = scenario(tmp.path(), "[seed]\nshift = 0.37\n");
    let o = Command::new(env!("CARGO_BIN_EXE_mghd"))
        .args(["boundary", "--out"])
        .arg(tmp.path().join("env"))
        .env("MGHD_SCENARIO", &path)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let crease = &stdout_json(&o)["result"]["crease"];
    assert!((crease[1].as_f64().unwrap() - 0.37).abs() < 1e-8);
}

#[test]
fn oracle_flags_reach_the_solver() {
    let tmp = TempDir::new().unwrap();
    let o = mghd(tmp.path(), &["oracle", "--dx", "0.01", "--cfl", "0.3", "--t-end", "2", "--scheme", "minmod"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&tmp.path().join("out/oracle.json"));
    assert_eq!(report["params"]["scheme"], "minmod");
    assert_eq!(report["params"]["dx"], 0.01);
    assert_eq!(report["t_end"], 2.0);
    assert!(report["r_minus_sup"].as_f64().unwrap() < 1e-12);
    let csv = fs::read_to_string(tmp.path().join("out/oracle.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x1,R_plus,R_minus"));
}

#[test]
fn compare_reports_first_order_convergence() {
    let tmp = TempDir::new().unwrap();
    let o = mghd(tmp.path(), &["compare", "--dx", "0.008", "--t-end", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&tmp.path().join("out/compare.json"));
    assert_eq!(report["levels"].as_array().unwrap().len(), 3);
    for r in report["l1_ratios"].as_array().unwrap() {
        assert!((r.as_f64().unwrap() - 2.0).abs() < 0.3, "{report}");
    }
}

#[test]
fn remaining_checks_pass() {
    let tmp = TempDir::new().unwrap();
    for args in [&["check", "kernels"][..], &["check", "sharp-estimates"], &["check", "energy-current", "--samples", "200"]] {
        let o = mghd(tmp.path(), args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout_json(&o)["result"]["passed"], true);
    }
    assert_eq!(read_json(&tmp.path().join("out/energy_current.json"))["samples"], 200);
}

#[test]
fn failing_check_exits_nonzero_with_report() {
    let tmp = TempDir::new().unwrap();
    // Spacings this coarse leave the stencils outside their asymptotic regime.
    let path = scenario(tmp.path(), "[kernels]\nspacings = [0.8, 0.4]\n");
    let o = mghd(tmp.path(), &["check", "kernels", "--scenario", &path]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["error"]["code"], "CheckFailed");
    assert_eq!(read_json(&tmp.path().join("out/kernels.json"))["passed"], false);
}

#[test]
fn plot_and_map_emit_svg() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(mghd(tmp.path(), &["plot"]).status.code(), Some(0));
    for name in ["seed_profile.svg", "development.svg", "rectangular.svg", "rectangular_crease.svg"] {
        let svg = fs::read_to_string(tmp.path().join("out").join(name)).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"), "{name}");
        assert!(svg.contains("<polyline"), "{name}");
    }
    let dev = fs::read_to_string(tmp.path().join("out/development.svg")).unwrap();
    assert!(dev.contains("singular boundary") && dev.contains("Cauchy horizon") && dev.contains("crease"));
    let o = mghd(tmp.path(), &["map"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_json(&tmp.path().join("out/map_audit.json"))["passed"], true);
    let map = fs::read_to_string(tmp.path().join("out/map.csv")).unwrap();
    assert_eq!(map.lines().next(), Some("t,U,x1,jac_det"));
}
