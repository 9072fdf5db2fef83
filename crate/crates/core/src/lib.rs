//! Numerical laboratory for the parabolic Anderson problem ∂u/∂t = Lu − V^ω u
//! driven by a symmetric pure-jump Lévy generator L and a Poissonian
//! potential V^ω.
//!
//! Modules are layered bottom-up: [`levy`] (processes), [`field`]
//! (environments), [`spectral`] (Dirichlet eigenproblems), [`fk`]
//! (Feynman–Kac Monte Carlo), [`asymptotics`] (explicit constants and
//! envelopes). [`acceptance`] bundles the verification suite run by the CLI
//! and by `cargo test`.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod acceptance;
pub mod asymptotics;
pub mod error;
pub mod field;
pub mod fk;
pub mod geometry;
pub mod levy;
pub mod quad;
pub mod rng;
pub(crate) mod serde_inf;
pub mod spectral;
pub mod stats;

pub use error::{Error, Result};
