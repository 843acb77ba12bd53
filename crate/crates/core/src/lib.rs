//! Desk-scale toolkit for simplicial quasi-trees.
//!
//! * [`graph`]: pointed graphs and their edge-path metric.
//! * [`kerr`]: the radial quotient of a pointed graph, its tree realization
//!   and the branch-point check.
//! * [`free_space`]: Lipschitz-free norms on graph metrics, computed both as
//!   a linear program over 1-Lipschitz functions and as a min-cost flow.
//! * [`groups`]: normal-form groups, Cayley balls, coset sections and
//!   Bass–Serre trees of free products.
//! * [`actions`]: affine actions on indexed coefficient spaces and their
//!   verification.
//! * [`cli`]: report-producing commands behind the `qtf` binary.
//!
//! Numerical code is generic over [`Scalar`]; the aliases below fix the
//! exact rational instantiation used for verification.

pub mod actions;
pub mod cli;
pub mod corpus;
pub mod free_space;
pub mod graph;
pub mod groups;
pub mod kerr;
pub mod scalar;
pub mod union_find;

pub use scalar::Scalar;

/// Exact arbitrary-precision rational; the default verification field.
pub type Rational = num_rational::BigRational;

pub type ExactFreeVector = free_space::FreeVector<Rational>;
pub type ExactLipFunction = free_space::LipFunction<Rational>;
pub type ExactSparseVector = actions::SparseVector<Rational>;
pub type ExactTreeRealization = kerr::TreeRealization<Rational>;

pub type FloatFreeVector = free_space::FreeVector<f64>;
pub type FloatSparseVector = actions::SparseVector<f64>;
