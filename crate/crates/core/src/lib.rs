//! Gate synthesis for a single bosonic mode controlled by displacements and
//! SNAP (selective number-dependent arbitrary phase) gates.
//!
//! - [`fock`]: truncated Fock space, the two primitive gates, sequences and fidelities.
//! - [`optimizer`]: Nelder–Mead, finite-difference BFGS and multi-start drivers.
//! - [`state_prep`]: state preparation by amplitude unrolling, and a folding scheme for Fock states.
//! - [`unitary`]: column-wise synthesis of unitaries on the lowest `d` levels.
//! - [`cli`]: the `snapsynth` command-line front end.

pub mod cli;
pub mod error;
pub mod fock;
pub mod json;
pub mod optimizer;
pub mod state_prep;
pub mod unitary;

pub use error::{Error, Result};
