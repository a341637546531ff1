//! Darcy flow through media with thin inclusions, where each inclusion is
//! replaced by interface conditions on a conforming split mesh.
//!
//! The pressure average across an inclusion diffuses tangentially with
//! coefficient `ε k_f`, and the pressure jump is penalized with `k_f / ε`.
//! Modules follow the pipeline: build a [`mesh`], cut it along the fractures
//! ([`split`]), assemble the weak form ([`assembly`]), solve ([`solver`]) and
//! extract profiles and fluxes ([`postprocess`]). [`oracle`] holds the
//! analytic and resolved reference solutions used for verification.
//!
//! All numerics are generic over [`Real`] (`f32` or `f64`); the aliases below
//! fix the scalar to `f64`.

// `!(x > 0)` is the NaN-rejecting form of a positivity check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod error;
pub mod fem;
pub mod fracture;
pub mod geometry;
pub mod mesh;
pub mod oracle;
pub mod postprocess;
pub mod scalar;
pub mod solver;
pub mod sparse;
pub mod split;

pub use error::{Error, Result};
pub use geometry::BoundaryTag;
pub use scalar::Real;
pub use solver::{SolveMethod, SolveOptions, SolveReport};

pub type Point = geometry::Point<f64>;
pub type Mesh = mesh::Mesh<f64>;
pub type SplitMesh = split::SplitMesh<f64>;
pub type InterfaceEdge = split::InterfaceEdge<f64>;
pub type Aperture = fracture::Aperture<f64>;
pub type FractureSpec = fracture::FractureSpec<f64>;
pub type FractureNetwork = fracture::FractureNetwork<f64>;
pub type InterfaceCoefficients = assembly::InterfaceCoefficients<f64>;
pub type InterfaceModel = assembly::InterfaceModel<f64>;
pub type BoundaryValue = assembly::BoundaryValue<f64>;
pub type BoundaryConditionSet = assembly::BoundaryConditionSet<f64>;
pub type LinearSystem = assembly::LinearSystem<f64>;
pub type UnconstrainedSystem = assembly::UnconstrainedSystem<f64>;
pub type CsrMatrix = sparse::CsrMatrix<f64>;
pub type Profile = postprocess::Profile<f64>;
pub type PiecewiseLinear1D = oracle::PiecewiseLinear1D<f64>;
