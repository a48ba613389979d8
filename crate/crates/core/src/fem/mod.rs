//! Continuous periodic P1/P2 spaces, quadrature, assembly and evaluation.

pub mod assembly;
pub mod function;
pub mod quadrature;
pub mod space;

pub use assembly::{
    assemble_divergence_block, assemble_gradient_load, assemble_load, assemble_mass,
    assemble_stiffness, assemble_weighted_matrix, assemble_weighted_vector, integrate_fields,
    skew_convection, FieldRef, FieldSample, FormKind, LoadKind, Weight,
};
pub use function::{prolongation_matrix, FeFunction, VectorFeFunction};
pub use quadrature::{make_quadrature, QuadratureRule};
pub use space::FeSpace;

/// Exactness degree shared by all nonlinear assembly and energy evaluation.
pub const NONLINEAR_QUADRATURE_DEGREE: usize = 10;
