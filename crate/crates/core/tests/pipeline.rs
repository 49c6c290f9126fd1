use std::sync::Arc;

use mghd_core::coordinate_map::CoordinateMap;
use mghd_core::eos::EosConfig;
use mghd_core::geo_solution::GeometricSolution;
use mghd_core::mghd_boundary::{MghdBoundary, Region};
use mghd_core::seed_data::{build_initial_data, SeedConfig};
use mghd_core::EquationOfState;

fn pipeline(eos: EosConfig, seed: SeedConfig) -> (GeometricSolution, MghdBoundary) {
    let eos = Arc::new(EquationOfState::new(eos).unwrap());
    let data = build_initial_data(&seed, eos).unwrap();
    let sol = GeometricSolution::new(Arc::new(data));
    let boundary = MghdBoundary::build(&sol).unwrap();
    (sol, boundary)
}

#[test]
fn shifted_seed_moves_the_crease() {
    let (sol, b) = pipeline(EosConfig::default(), SeedConfig { shift: 0.37, ..SeedConfig::default() });
    assert!((b.crease.t - sol.t_shock()).abs() < 1e-8);
    assert!((b.crease.u - 0.37).abs() < 1e-8);
    assert!(b.asymptotics().unwrap().passes(0.05));
    let map = CoordinateMap::new(&sol).unwrap();
    assert!(map.injectivity_audit(&b, 50, 50).unwrap().passed);
}

#[test]
fn power_law_sound_speed() {
    let (sol, b) = pipeline(EosConfig::power(0.5, 0.1, 1.0), SeedConfig::default());
    assert!(sol.verify_sharp_estimates().unwrap().all_passed);
    assert!((b.crease.t - sol.t_shock()).abs() < 1e-8 && b.crease.u.abs() < 1e-8);
    let a = b.asymptotics().unwrap();
    assert!(a.passes(0.05), "{a:?}");
    assert_eq!(b.classify(0.5 * sol.t_shock(), 0.1), Region::MReg);
}

#[test]
fn smaller_amplitude_shocks_later() {
    let (weak, _) = pipeline(EosConfig::default(), SeedConfig { epsilon0: 0.05, ..SeedConfig::default() });
    let (base, _) = pipeline(EosConfig::default(), SeedConfig::default());
    assert_eq!(weak.data.epsilon, 0.05);
    assert!((weak.t_shock() - 2.0 * base.t_shock()).abs() < 1e-10);
    assert!((weak.t_shock() * weak.delta_star() - 1.0).abs() < 1e-12);
}

#[test]
fn initial_data_serializes() {
    let (sol, b) = pipeline(EosConfig::default(), SeedConfig::default());
    let json = serde_json::to_value(&*sol.data).unwrap();
    assert_eq!(json["t_shock"].as_f64().unwrap(), sol.t_shock());
    let crease = serde_json::to_value(b.crease).unwrap();
    assert_eq!(crease["t"].as_f64().unwrap(), b.crease.t);
    let cfg: SeedConfig = serde_json::from_str(r#"{"epsilon0": 0.05}"#).unwrap();
    assert_eq!(cfg.epsilon0, 0.05);
    assert!(serde_json::from_str::<SeedConfig>(r#"{"epsilon": 0.05}"#).is_err());
}
