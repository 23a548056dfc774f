//! Lie point and contact-like symmetries of ordinary difference schemes.
//!
//! Discrete jets are built from Newton divided differences on non-uniform
//! lattices, vector fields are prolonged by the total-difference recursion,
//! and invariance, symmetry-matrix rank, flows and continuous limits are
//! checked numerically on seeded samples.
//!
//! Everything that touches stencil values is generic over [`Scalar`], so the
//! same code runs on `f32`, `f64` and forward-mode [`Dual`] numbers; divided
//! differences also run exactly on rationals.

pub mod expr;
pub mod fields;
pub mod flows;
pub mod invariance;
pub mod jets;
pub mod prolong;
pub mod scalar;
pub mod schemes;

pub use expr::{EvalError, Expression, ParseError};
pub use fields::{algebra, catalog, lie_bracket, FieldError, FieldKind, VectorField};
pub use flows::{classify_symmetry, flow_closed_form_x7, flow_numeric, FlowError, SymmetryClass, Verdict};
pub use invariance::{check_invariance, check_scheme, rank_report, InvarianceReport, MMatrixReport, Sampler};
pub use jets::{ContCoord, ContJet, Coord, JetError, JetPoint, Lattice, Stencil, Trajectory};
pub use prolong::{prolong_continuous, prolong_discrete, restrict, ProlongError, ProlongedField, RestrictedField};
pub use scalar::{Dual, Scalar, Taylor};
pub use schemes::{Scheme, SchemeError};

pub type Stencil64 = Stencil<f64>;
pub type Stencil32 = Stencil<f32>;
pub type Trajectory64 = Trajectory<f64>;
pub type Trajectory32 = Trajectory<f32>;
pub type JetPoint64 = JetPoint<f64>;
pub type ContJet64 = ContJet<f64>;
pub type Dual64 = Dual<f64>;
