//! Certified numerics for semigroups of Hénon maps of C².
//!
//! A semigroup is given by finitely many generators, each a composition of
//! generalized Hénon factors `(x, y) -> (y, p(y) - a x)`. This crate computes
//!
//! * a certified filtration radius and growth constants ([`filtration`]),
//! * the averaged dynamical Green's functions `G±` as certified intervals,
//!   their finite-level approximations and the non-autonomous variants
//!   ([`green`]),
//! * escape classifications with replayable word certificates ([`classify`]),
//! * slice samplings, discrete Laplacian densities of the Green currents and
//!   pullback potentials of curves ([`currents`]),
//! * attracting parameters, basin membership and boundary probes
//!   ([`basin`]).
//!
//! The crate is `no_std` (it needs `alloc`); file formats, the CLI and the
//! parallel grid drivers live in the `henon-lab` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod basin;
pub mod classify;
pub mod currents;
pub mod filtration;
pub mod green;
pub mod henon;
pub mod semigroup;

pub mod rng;

pub use basin::{AttractingParams, BasinContext, BasinVerdict, BoundaryProbe};
pub use classify::{Classification, Verdict};
pub use currents::{BivariatePoly, Density, SliceGrid, SliceKind, SliceSpec, Window};
pub use filtration::{FiltrationData, Region};
pub use green::{GreenEstimate, GreenParams, Residual, SequenceSpec};
pub use henon::{ComplexPoint, Direction, HenonFactor, HenonMap, LogOrbitState};
pub use num_complex::Complex64;
pub use semigroup::{GeneratorSet, Word};

/// Which Green's function / escaping direction is meant: `Plus` follows
/// forward orbits towards `V_R^+`, `Minus` follows inverse orbits towards
/// `V_R^-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid Hénon factor: {0}")]
    InvalidFactor(&'static str),
    #[error("a Hénon map needs at least one factor")]
    EmptyMap,
    #[error("magnitude overflow in exact arithmetic; use the log-space path")]
    Overflow,
    #[error("contract violated: {0}")]
    Contract(&'static str),
    #[error("budget exceeded: {0}")]
    Budget(&'static str),
    #[error("no admissible filtration radius found below 2^60")]
    FiltrationNotFound,
    #[error("generator set is empty")]
    EmptyGeneratorSet,
    #[error("generator index {index} out of range for {n0} generators")]
    IndexOutOfRange { index: usize, n0: usize },
    #[error("grid spacing is not uniform (hx = {hx}, hy = {hy})")]
    NonUniformGrid { hx: f64, hy: f64 },
    #[error("invalid grid: {0}")]
    InvalidGrid(&'static str),
    #[error("the curve polynomial vanished at a sampled image; resample")]
    DegenerateSample,
    #[error("no contracting neighbourhood of the origin found down to r = 1e-6")]
    NotAttracting,
    #[error("generator {0} does not fix the origin")]
    OriginNotFixed(usize),
    #[error("segment endpoints do not straddle the basin boundary")]
    NoVerdictFlip,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
