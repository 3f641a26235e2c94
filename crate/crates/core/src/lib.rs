//! Bearing-based leader-follower formation control in three dimensions.
//!
//! The crate validates sensing graphs, measures persistence of excitation of
//! bearing signals, runs the distributed position observer and the
//! double-integrator formation controller, and evaluates the closed-form
//! stability constants that certify exponential convergence.

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certificates;
pub mod controller;
pub mod error;
pub mod geometry;
pub mod graph;
pub mod integrator;
pub mod io;
pub mod linalg;
pub mod observer;
pub mod pe;
pub mod presets;
pub mod sim;
pub mod trajectory;

pub use error::{Error, ErrorClass, Result};
pub use geometry::{projector, relative_state, skew, Mat3, RelState, UnitVec3, Vec3};
pub use graph::{build_digraph, topological_numbering, validate_leader_follower, AgentId, Digraph, Ordering, StructureReport};
