//! Phase-space simulation of bosonic quantum fields.
//!
//! The crate covers the three stages of a weighted stochastic field
//! calculation:
//!
//! * sampling initial quantum states (Gaussian states via covariance
//!   factorization, number states via weighted contour sampling) in the
//!   positive-P, Wigner and Q representations,
//! * propagating the sampled fields on a periodic lattice with a midpoint
//!   interaction-picture split-step integrator for Stratonovich SPDEs,
//! * absorbing outgoing flux near the boundary with a complex power-law
//!   apodiser, including the quantum noise and reservoir bookkeeping that
//!   keep particle number conserved.
//!
//! Everything is verified against closed-form oracles collected in
//! [`oracle`].

pub mod apodisation;
pub mod convolution;
pub mod ensemble;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod integrator;
pub mod lattice;
pub mod oracle;
pub mod special;

pub use ensemble::{MeanEstimate, Ordering, PhaseSample, WeightedEnsemble};
pub use error::{Error, Result};
pub use lattice::Lattice;

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
