//! Validity certification and untangling for hexahedral meshes.
//!
//! A hexahedron is treated as the trilinear image of the unit cube; it is
//! valid when the Jacobian determinant of that map is strictly positive
//! everywhere inside the cell. This crate provides
//!
//! * three per-hex validity classifiers of increasing sharpness: the 8
//!   corner-tetrahedron screen (necessary), the 58-tetrahedron certificate
//!   (sufficient), and a tensor-Bernstein bound with de Casteljau
//!   subdivision ([`validity`]);
//! * a regularized, foldover-tolerant distortion energy with an analytic
//!   gradient ([`energy`]);
//! * a monotone Newton-type minimizer ([`optimizer`]);
//! * the outer untangling driver with its epsilon schedule, tetrahedron
//!   escalation, localized "blob" optimization, and penalized boundary
//!   relaxation ([`untangle`](mod@untangle));
//! * boundary-movement reporting ([`metrics`]) and VTK legacy ASCII mesh
//!   I/O ([`vtk`]).
//!
//! The usual entry points are [`vtk::read_vtk`], [`validity::classify_mesh`],
//! and [`untangle::untangle`].

pub mod energy;
pub mod fixtures;
pub mod mesh;
pub mod metrics;
pub mod optimizer;
pub mod tets;
pub mod untangle;
pub mod validity;
pub mod vtk;

/// Cartesian point in mesh coordinates.
pub type Point3 = nalgebra::Point3<f64>;
/// Displacement / direction vector.
pub type Vector3 = nalgebra::Vector3<f64>;
/// Dense 3×3 real matrix (Jacobians and their factors).
pub type Matrix3 = nalgebra::Matrix3<f64>;

pub use mesh::{BoundaryGraph, HexMesh, MeshError};
pub use metrics::BoundaryMovementReport;
pub use tets::{TetPattern, TetTable};
pub use untangle::{
    untangle, BoundaryMode, IterationRecord, Strategy, UntangleConfig, UntangleOutcome,
    UntangleReport,
};
pub use validity::{classify_mesh, HexClass, ValidityMethod, ValidityReport};
