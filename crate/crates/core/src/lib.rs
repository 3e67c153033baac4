//! Exact symplectic constraint-chain analysis for first-order Lagrangians.
//!
//! A model is loaded or built ([`model`], [`lattice`]), the chain of
//! extended symplectic matrices is iterated ([`chain`]), and the result can
//! be cross-checked against the Dirac–Bergmann algorithm ([`oracle`]). All
//! arithmetic is over exact rationals ([`expr`], [`linalg`]).

pub mod chain;
pub mod cli;
pub mod expr;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod report;
