//! Numerical building blocks shared by the solution modules.

pub mod fd;
pub mod fit;
pub mod jet;
pub mod ode;
pub mod roots;
pub mod spline;
