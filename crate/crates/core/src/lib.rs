//! # majflow
//!
//! Majorization extrema over total-variation balls, tight continuity bounds for
//! Schur-concave functionals, spectral classification of quantum channels, and
//! counting statistics of entropy production in adiabatic repeated-interaction systems.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`majorization`] | probability vectors, the majorization preorder, infimum and minimum |
//! | [`ball`] | minimizer and maximizer of the ε-ball, randomized dominance oracle |
//! | [`flow`] | flow generator, degeneracy horizon, path, derivative Γ_H |
//! | [`entropy`] | functional catalog, uniform bounds, Lipschitz constants |
//! | [`qlinalg`] | density matrices, Choi matrices, partial trace and transpose |
//! | [`channel`] | channel classification, irreducible constructor, RWA example |
//! | [`ris`] | repeated-interaction protocols, entropy production, rate functions |
//! | [`cli`] | command runner behind the `majflow` binary |
//!
//! Entropies in [`entropy`] use base-2 logarithms; [`ris`] uses natural logarithms.
//! Superoperators act on column-stacked operators throughout.

pub mod ball;
pub mod channel;
pub mod cli;
pub mod entropy;
pub mod error;
pub mod flow;
pub mod majorization;
pub mod qlinalg;
pub mod ris;
pub mod quad;

pub use error::{Error, Result};
pub use majorization::{ProbabilityVector, SortedProbabilityVector};
