//! Error types, one enum per subsystem plus a crate-wide umbrella.

use thiserror::Error;

/// Errors from finite-field construction and arithmetic.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("composite characteristic: {0} is not prime")]
    CompositeCharacteristic(u64),
    #[error("reducible modulus: {0} factors over Z/{1}")]
    ReducibleModulus(String, u64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("field mismatch: elements belong to different fields")]
    FieldMismatch,
    #[error("bad polynomial syntax: {0}")]
    BadPolynomial(String),
}

/// Errors from complex queries and canonical forms.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ComplexError {
    #[error("complex is not pure of dimension {0}")]
    NotPure(usize),
    #[error("face {0:?} is not present in the complex")]
    FaceNotPresent(Vec<String>),
    #[error("canonical-form search exceeded its node budget of {0}")]
    BudgetExceeded(u64),
    #[error("cellulation is malformed: {0}")]
    Malformed(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Errors from Heffter cellulation construction.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeffterError {
    #[error("alpha is not a generator of the multiplicative group")]
    NotPrimitive,
    #[error("bad residue: q = {0} is not congruent to 1 mod 4")]
    BadResidue(u64),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Errors from surface curve machinery.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SurfaceError {
    #[error("complex is not a closed connected surface: {0}")]
    NotASurface(String),
    #[error("surface is not orientable")]
    NotOrientable,
    #[error("intersection form is degenerate")]
    DegeneratePairing,
    #[error("rerouting failed: {0}")]
    ReroutingFailed(String),
}

/// Errors from the 3-dimensional assembly.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssemblyError {
    #[error("ridge {0} lies in {1} facets; cannot classify as interior or boundary")]
    UnclassifiableRidge(String, usize),
    #[error("refinement does not respect the base cellulation: {0}")]
    NotARefinement(String),
    #[error("curve {0} cannot be filled by a meridian disk: {1}")]
    NonDiskCurve(String, String),
    #[error("gluing boundaries do not match: {0}")]
    BoundaryMismatch(String),
    #[error("bad octahedron triangulation choice {0}; must be 0, 1 or 2")]
    BadChoice(u8),
    #[error("choice vector has length {got}, registry has {want} octahedra")]
    ChoiceLengthMismatch { got: usize, want: usize },
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Heffter(#[from] HeffterError),
    #[error("assembly invariant violated: {0}")]
    Invariant(String),
}

/// Umbrella error for pipeline-level callers.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Heffter(#[from] HeffterError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
