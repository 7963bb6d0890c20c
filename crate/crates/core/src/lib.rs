//! Simulation and ergodicity criteria for finite-alphabet interacting particle
//! systems (IPS) and probabilistic cellular automata (PCA).
//!
//! The crate is organised around a handful of modules:
//!
//! - [`rules`]: transition-matrix construction, time scaling, state renaming,
//!   structural classifiers and Griffeath-type decompositions.
//! - [`basis`]: product bases, the representational seminorm, update
//!   coefficients and the α/β contractivity criterion.
//! - [`sim`]: event-driven forward simulation on rings, synchronous PCA
//!   updates, shared-randomness couplings and the backward cone sampler.
//! - [`oracle`]: exact time-t laws of tiny rings by uniformization.
//! - [`estimators`]: Monte Carlo covariance decay, disagreement and
//!   boundary-start diagnostics.
//!
//! Symbols of an alphabet of size `q` are the integers `0..q` with their
//! natural order.

pub mod basis;
pub mod error;
pub mod estimators;
pub mod linalg;
pub mod lp;
pub mod oracle;
pub mod rules;
pub mod sim;
pub mod stats;

pub use error::{Error, Result};
pub use rules::{Alphabet, Neighborhood, ParamsNN2, PeriodicRule, Rule, RuleTable, Symbol};
