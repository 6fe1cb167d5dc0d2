//! Entanglement-assisted local discrimination of maximally entangled bases.
//!
//! A maximally entangled basis of C^d⊗C^d, shared together with a partially
//! entangled resource |τ⟩, is to be identified by two separated parties.
//! This crate computes the three quantities that pin down the optimal
//! success probability:
//!
//! * the success probability of a teleportation-based LOCC protocol
//!   ([`protocol`]), a lower bound;
//! * the trace of an analytic dual-feasible operator for the PPT
//!   discrimination SDP ([`certificate`]), an upper bound;
//! * the PPT optimum itself, solved numerically by operator splitting
//!   ([`sdp`]).
//!
//! All three equal the fully entangled fraction of the resource
//! ([`measures::fef`]) for a complete basis.

pub mod certificate;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod protocol;
pub mod random;
pub mod sdp;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{ComplexMatrix, Ket, SubsystemLayout, C64};
pub use states::{build_ensemble, weyl_basis, Ensemble, MaxEntBasis, ResourceSpectrum};
