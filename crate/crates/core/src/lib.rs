//! Construction and verification of cellulated 3-spheres built from
//! finite-field surface cellulations, thickened Heegaard splittings and
//! independent octahedron triangulations.
//!
//! The pipeline: [`field`] supplies GF(p^e) arithmetic; [`heffter`] builds
//! the neighborly surface cellulations and their triangulations; [`surface`]
//! finds and reroutes homology generator curves; [`assembly`] stacks prisms,
//! applies the E-construction and glues the handlebodies into a sphere
//! cellulation with a registry of octahedral cells; [`verify`] certifies
//! outputs and samples distinct triangulations.

pub mod assembly;
pub mod canonical;
pub mod cellulation;
pub mod error;
pub mod field;
pub mod heffter;
pub mod homology;
pub mod io;
pub mod simplicial;
pub mod surface;
pub mod verify;

pub use error::{AssemblyError, ComplexError, Error, FieldError, HeffterError, SurfaceError};
pub use field::{make_field, Field, FieldElement};
pub use simplicial::{FVector, SimplicialComplex};
