//! Decision procedures for constraint satisfaction problems over finite
//! templates with few subpowers.
//!
//! The pipeline: reduce an instance to a syntactically simple binary one
//! over a power algebra, enforce (2,3)-consistency and singleton linear arc
//! consistency, exclude unsatisfiable affine subinstances by solving test
//! instances as linear systems over prime fields, and shrink domains via
//! absorbing subuniverses until the instance is decided. A brute-force
//! oracle validates every stage at desk scale.

pub mod absorption;
pub mod affine_consistency;
pub mod algebra;
pub mod consistency;
pub mod csp;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod linear;
pub mod sets;
pub mod solver;

pub use error::{Error, Result};
