//! Steady-state analysis of multi-channel random access systems.
//!
//! A single access point offers `m` identical channels. Every access attempt
//! scans a random subset of the channels and succeeds with a probability
//! `theta(b)` that depends only on the number `b` of busy channels.
//! Non-persistent users arrive in Poisson classes and leave after one failed
//! attempt; persistent users cycle through Idle, Waiting and Transmitting and
//! retry until they get through.
//!
//! The underlying Markov chain is reversible with a product-form stationary
//! law. This crate computes its normalizing constant and every marginal of
//! interest exactly ([`nonpersistent`], [`mixed`]), extracting the needed
//! polynomial coefficients through an overflow-safe discrete Fourier
//! transform ([`dft`]). The results are cross-checked by a brute-force
//! balance-equation solver ([`oracle`]) and an embedded-jump-chain
//! simulator ([`simulator`]).

pub mod dft;
pub mod error;
pub mod mixed;
pub mod model;
pub mod nonpersistent;
pub mod oracle;
pub mod simulator;

pub use dft::{AffineFactor, ScaledComplex, ScaledReal};
pub use error::{Error, ProfileAxiom, Result};
pub use mixed::{ExactReport, PersistentMetrics};
pub use model::{
    loading, scan_success_profile, validate_profile, ActivityState, NonPersistentClass,
    PersistentUser, Scan, Scenario, SuccessProfile,
};
pub use nonpersistent::BusyDistribution;
pub use oracle::Verification;
pub use simulator::{Comparison, SimulationConfig, SimulationReport};
