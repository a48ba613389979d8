//! Structure-preserving finite element solver for the Cahn-Hilliard-Navier-Stokes
//! system with concentration-dependent mobility and viscosity on the periodic
//! unit square.
//!
//! Space: Taylor-Hood P2/P1 for velocity and pressure, P2 for the phase field
//! and chemical potential. Time: continuous piecewise-linear trial functions
//! tested with piecewise constants, which conserves mass and satisfies a
//! discrete energy-dissipation identity step by step.

pub mod diagnostics;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod projections;
pub mod scheme;

pub mod cli;

pub use error::{
    CliError, ConfigError, DiagnosticsError, FemError, LinearSolveError, MeshError, ModelError,
    ProjectionError, SchemeError,
};
pub use mesh::PeriodicTriMesh;
pub use model::ModelParams;
