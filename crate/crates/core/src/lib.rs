//! Topological band structure of a three-state rovibrational model over the
//! rotational phase sphere: Chern numbers, degeneracy walls in the control
//! plane, delta-Chern invariants across them and the quantum level counts
//! they predict.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chern;
pub mod cli;
pub mod error;
pub mod mesh;
pub mod model;
pub mod quantum;
pub mod spectral;
pub mod symmetry;
pub mod walls;

pub use chern::{chern_numbers, refine_until_stable, ChernOptions, ChernRecord};
pub use error::{Error, Result};
pub use model::{build_hamiltonian, ControlPoint, HamiltonianFamily, HermitianMatrix, SpherePoint, TripletModel};
pub use quantum::{count_bands, QuantumBandCount};
pub use spectral::{discriminant, eigensolve, min_discriminant};
pub use symmetry::OrbitType;
pub use walls::{build_domain_chart, delta_chern, wall_catalog, DomainChart, Wall, WallCrossing, WallId};
