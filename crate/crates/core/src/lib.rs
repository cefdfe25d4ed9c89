//! Quantum and classical Hamilton algebras and their tensor composition.
//!
//! A Hamilton algebra carries a symmetric product `σ`, an antisymmetric
//! product `α` and a quantum constant `a ≥ 0` (`a = ħ²/4`). Hermitian
//! matrices with the anticommutator and the scaled commutator realize the
//! quantum case; phase-space polynomials with the pointwise product and the
//! Poisson bracket realize the classical case `a = 0`.
//!
//! Modules:
//! - [`algebra`]: the two concrete realizations, the envelope product `τ`.
//! - [`compose`]: tensor products with a free composed constant `a12`.
//! - [`identities`]: randomized defect measurement of the defining identities.
//! - [`brackets`]: published mixed quantum-classical brackets and their defects.
//! - [`dynamics`]: the coupled free-particle measurement model.
//! - [`uniqueness`]: restriction factors of the composed products.
//! - [`cli`]: the `hamalg` command-line driver.

pub mod algebra;
pub mod brackets;
pub mod cli;
pub mod compose;
pub mod dynamics;
pub mod error;
pub mod identities;
pub mod par;
pub mod uniqueness;

pub use error::{AlgebraError, Result};
