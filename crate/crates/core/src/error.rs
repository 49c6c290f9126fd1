use serde::Serialize;
use thiserror::Error;

/// Which admissibility condition of a seed profile failed, where, and by how much.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeedViolation {
    pub condition: SeedCondition,
    pub location: f64,
    pub margin: f64,
    pub detail: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedCondition {
    ViolatedSupport,
    ViolatedMinimum,
    ViolatedThirdDerivative,
    ViolatedTail,
}

impl SeedCondition {
    pub fn name(self) -> &'static str {
        match self {
            SeedCondition::ViolatedSupport => "ViolatedSupport",
            SeedCondition::ViolatedMinimum => "ViolatedMinimum",
            SeedCondition::ViolatedThirdDerivative => "ViolatedThirdDerivative",
            SeedCondition::ViolatedTail => "ViolatedTail",
        }
    }
}

#[derive(Clone, Debug, Error)]
pub enum Error {
    #[error("EOS domain error: {0}")]
    Domain(String),
    #[error("value {value} outside tabulated range [{lo}, {hi}]")]
    OutOfRange { value: f64, lo: f64, hi: f64 },
    #[error("state leaves the regime of hyperbolicity: {0}")]
    Hyperbolicity(String),
    #[error("degenerate null frame: |u1/u0| c = {0}")]
    DegenerateFrame(f64),
    #[error("root not bracketed on [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },
    #[error("integration failure: {0}")]
    IntegrationFailure(String),
    #[error("{}: {} at U = {} (margin {})", .0.condition.name(), .0.detail, .0.location, .0.margin)]
    Seed(SeedViolation),
    #[error("no amplitude in the search range keeps the data non-degenerate: {0}")]
    NonDegeneracyFailure(String),
    #[error("U_rad search exhausted: {0}")]
    SearchExhausted(String),
    #[error("1 + tG vanishes at (t, U) = ({t}, {u})")]
    AtSingularity { t: f64, u: f64 },
    #[error("U = {0} lies outside the certified region")]
    OutOfCertifiedRegion(f64),
    #[error("G({u}) = {g} is not negative")]
    PositiveG { u: f64, g: f64 },
    #[error("{0} separate cells bracket a simultaneous zero of mu and Xbreve mu")]
    MultipleCreasePoints(usize),
    #[error("crease search failed: {0}")]
    CreaseNotFound(String),
    #[error("Q is undefined at the crease (G' = 0 at U = {0})")]
    CreaseDegeneracy(f64),
    #[error("(t, x1) = ({t}, {x1}) is not in the image of the development")]
    NotInImage { t: f64, x1: f64 },
    #[error("CFL number {0} outside (0, 0.9]")]
    CflViolation(f64),
    #[error("gradient {gradient} exceeds the resolvable bound {bound} at t = {t}")]
    ResolutionExhausted { t: f64, gradient: f64, bound: f64 },
    #[error("blowup estimates do not order with the mesh: {0}")]
    NonMonotoneLadder(String),
    #[error("one-form is not past-directed h-timelike: {0}")]
    NotTimelike(String),
    #[error("stencil at {0:?} leaves the grid")]
    StencilOutOfBounds([i64; 4]),
    #[error("thermodynamic callback `{0}` is not configured")]
    MissingThermoCallback(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    /// Stable machine-readable identifier.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "Domain",
            Error::OutOfRange { .. } => "OutOfRange",
            Error::Hyperbolicity(_) => "Hyperbolicity",
            Error::DegenerateFrame(_) => "DegenerateFrame",
            Error::RootNotBracketed { .. } => "RootNotBracketed",
            Error::IntegrationFailure(_) => "IntegrationFailure",
            Error::Seed(v) => v.condition.name(),
            Error::NonDegeneracyFailure(_) => "NonDegeneracyFailure",
            Error::SearchExhausted(_) => "SearchExhausted",
            Error::AtSingularity { .. } => "AtSingularity",
            Error::OutOfCertifiedRegion(_) => "OutOfCertifiedRegion",
            Error::PositiveG { .. } => "PositiveG",
            Error::MultipleCreasePoints(_) => "MultipleCreasePoints",
            Error::CreaseNotFound(_) => "CreaseNotFound",
            Error::CreaseDegeneracy(_) => "CreaseDegeneracy",
            Error::NotInImage { .. } => "NotInImage",
            Error::CflViolation(_) => "CflViolation",
            Error::ResolutionExhausted { .. } => "ResolutionExhausted",
            Error::NonMonotoneLadder(_) => "NonMonotoneLadder",
            Error::NotTimelike(_) => "NotTimelike",
            Error::StencilOutOfBounds(_) => "StencilOutOfBounds",
            Error::MissingThermoCallback(_) => "MissingThermoCallback",
            Error::Config(_) => "Config",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
