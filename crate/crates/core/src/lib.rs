//! Random-matrix simulator for excitation transport across disordered
//! centrosymmetric networks with a dominant in/out doublet.
//!
//! The crate samples constrained GOE Hamiltonians ([`ensemble`]), analyses
//! their symmetry sectors ([`spectral`]), runs the unitary dynamics
//! ([`dynamics`]), evaluates the closed-form predictions ([`theory`]) and
//! drives reproducible Monte Carlo experiments ([`harness`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod par;
pub mod rng;
pub mod spectral;
pub mod theory;

pub use error::{Error, Result};
pub use par::Execution;
