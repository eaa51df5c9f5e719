//! Core algorithms for modelling moral-foundation scores from music-genre
//! preferences: survey encoding, principal axis factoring with promax
//! rotation, preference-space diversity (GS) scores, gradient-boosted trees,
//! exact TreeSHAP attribution, a cross-validated experiment grid, and a
//! synthetic-survey oracle with planted ground truth.
//!
//! The crate is `no_std`-compatible (allocation required); everything that
//! touches the filesystem lives in the companion `ethos-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod attribution;
pub mod boosting;
pub mod dataset;
pub mod error;
pub mod experiments;
pub mod factors;
pub mod linalg;
pub mod prefspace;
pub mod stats;
pub mod synth;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;
