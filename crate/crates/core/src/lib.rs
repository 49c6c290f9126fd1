//! Numerical construction of the maximal development of shock-forming
//! simple plane-symmetric relativistic Euler flows.
//!
//! The pipeline runs `eos` → `seed_data` → `geo_solution` → `mghd_boundary`
//! → `coordinate_map`, with `oracle_solver` as an independent check in
//! rectangular coordinates. `energy_currents` and `fluid3d_kernels` verify
//! the 3+1 dimensional algebra on sampled states and fields; `verification`
//! bundles the randomized identity and stencil-convergence suites.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coordinate_map;
pub mod energy_currents;
pub mod eos;
pub mod error;
pub mod fluid3d_kernels;
pub mod fluid_state;
pub mod geo_solution;
pub mod mghd_boundary;
pub mod numerics;
pub mod oracle_solver;
pub mod seed_data;
pub mod verification;

pub use eos::{EosConfig, EosKind, EquationOfState};
pub use error::{Error, Result, SeedCondition, SeedViolation};

#[cfg(test)]
pub(crate) mod fixtures {
    use std::sync::{Arc, OnceLock};

    use crate::geo_solution::GeometricSolution;
    use crate::mghd_boundary::MghdBoundary;
    use crate::seed_data::{build_initial_data, InitialData, SeedConfig};
    use crate::EquationOfState;

    pub fn data() -> &'static InitialData {
        static DATA: OnceLock<InitialData> = OnceLock::new();
        DATA.get_or_init(|| build_initial_data(&SeedConfig::default(), Arc::new(EquationOfState::default_constant())).unwrap())
    }

    pub fn solution() -> &'static GeometricSolution {
        static SOL: OnceLock<GeometricSolution> = OnceLock::new();
        SOL.get_or_init(|| GeometricSolution::new(Arc::new(data().clone())))
    }

    pub fn boundary() -> &'static MghdBoundary {
        static B: OnceLock<MghdBoundary> = OnceLock::new();
        B.get_or_init(|| MghdBoundary::build(solution()).unwrap())
    }
}
