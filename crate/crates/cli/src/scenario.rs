use std::path::{Path, PathBuf};

use mghd_core::energy_currents::CompactSet;
use mghd_core::oracle_solver::{BlowupLadder, OracleParams, Scheme};
use mghd_core::seed_data::SeedConfig;
use mghd_core::{EosConfig, Error, Result};
use serde::{Deserialize, Serialize};

/// Environment variable naming the scenario used when `--scenario` is absent.
pub const SCENARIO_ENV: &str = "MGHD_SCENARIO";

/// Everything a subcommand needs, read from one TOML file.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Output directory, relative to the working directory.
    pub output: Option<PathBuf>,
    pub eos: EosConfig,
    pub seed: SeedConfig,
    pub grids: Grids,
    pub oracle: OracleSection,
    pub ladder: BlowupLadder,
    pub identities: IdentitySection,
    pub energy: EnergySection,
    pub kernels: KernelSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Grids {
    /// `solve-geo` grid: time levels over `[0, T_shock]` and `U` nodes over the support.
    pub geo_nt: usize,
    pub geo_nu: usize,
    /// `map` grid over the closure of the development.
    pub map_nt: usize,
    pub map_nu: usize,
    pub boundary_rows: usize,
    pub audit: [usize; 2],
    /// Characteristics drawn by `plot`.
    pub plot_characteristics: usize,
}

impl Default for Grids {
    fn default() -> Self {
        Self { geo_nt: 41, geo_nu: 201, map_nt: 41, map_nu: 101, boundary_rows: 129, audit: [200, 200], plot_characteristics: 33 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub dx: f64,
    pub cfl: f64,
    pub scheme: Scheme,
    pub margin: f64,
    /// End time; `None` means half the shock time.
    pub t_end: Option<f64>,
    /// Successive halvings of `dx` used by `compare`.
    pub refinements: usize,
}

impl Default for OracleSection {
    fn default() -> Self {
        let p = OracleParams::default();
        Self { dx: p.dx, cfl: p.cfl, scheme: p.scheme, margin: p.margin, t_end: None, refinements: 2 }
    }
}

impl OracleSection {
    pub fn params(&self) -> OracleParams {
        OracleParams { dx: self.dx, cfl: self.cfl, scheme: self.scheme, margin: self.margin }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentitySection {
    pub samples: usize,
    pub state_bound: f64,
    pub rng_seed: u64,
}

impl Default for IdentitySection {
    fn default() -> Self {
        Self { samples: 10_000, state_bound: 0.8, rng_seed: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergySection {
    pub compact_set: CompactSet,
    pub samples: usize,
    /// Random unit variations tested per sample.
    pub variations: usize,
    pub rng_seed: u64,
}

impl Default for EnergySection {
    fn default() -> Self {
        Self { compact_set: CompactSet::default(), samples: 1000, variations: 100, rng_seed: 8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub amplitude: f64,
    pub center: [f64; 4],
    pub spacings: Vec<f64>,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self { amplitude: 0.3, center: [0.3, 0.2, 0.1, -0.2], spacings: vec![0.1, 0.05, 0.025, 0.0125] }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// `--scenario`, then the environment variable, then built-in defaults.
    pub fn resolve(flag: Option<&Path>) -> Result<Self> {
        match flag {
            Some(p) => Self::load(p),
            None => match std::env::var_os(SCENARIO_ENV) {
                Some(p) if !p.is_empty() => Self::load(Path::new(&p)),
                _ => Ok(Self::default()),
            },
        }
    }

    /// Shape checks that do not need any computation.
    pub fn validate(&self) -> Result<()> {
        let g = &self.grids;
        let sizes = [g.geo_nt, g.geo_nu, g.map_nt, g.map_nu, g.boundary_rows, g.audit[0], g.audit[1], g.plot_characteristics];
        if sizes.iter().any(|&n| n < 2) {
            return Err(Error::Config("every grid needs at least 2 points".into()));
        }
        if !(self.oracle.dx > 0.0) {
            return Err(Error::Config(format!("oracle dx must be positive, got {}", self.oracle.dx)));
        }
        if self.oracle.t_end.is_some_and(|t| !(t >= 0.0)) {
            return Err(Error::Config("oracle t_end must be non-negative".into()));
        }
        if self.kernels.spacings.len() < 2 || self.kernels.spacings.iter().any(|&h| !(h > 0.0)) {
            return Err(Error::Config("kernel spacings need at least two positive entries".into()));
        }
        if self.identities.samples == 0 || self.energy.samples == 0 {
            return Err(Error::Config("sample counts must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_scenario_matches_defaults() {
        let text = include_str!("../../../scenarios/default.toml");
        let mut s = Scenario::parse(text).unwrap();
        assert_eq!(s.output, Some(PathBuf::from("out")));
        s.output = None;
        assert_eq!(s, Scenario::default());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(Scenario::parse("[seed]\nepsilon = 0.1\n"), Err(Error::Config(_))));
        assert!(matches!(Scenario::parse("bogus = 1\n"), Err(Error::Config(_))));
    }

    #[test]
    fn partial_sections_keep_defaults() {
        let s = Scenario::parse("[oracle]\nscheme = \"minmod\"\nt_end = 2.5\n").unwrap();
        assert_eq!(s.oracle.scheme, Scheme::Minmod);
        assert_eq!(s.oracle.t_end, Some(2.5));
        assert_eq!(s.oracle.dx, OracleParams::default().dx);
        assert_eq!(s.seed, SeedConfig::default());
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(Scenario::parse("[grids]\ngeo_nt = 1\n").is_err());
        assert!(Scenario::parse("[kernels]\nspacings = [0.1]\n").is_err());
    }
}
