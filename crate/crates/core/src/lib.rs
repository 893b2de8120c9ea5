//! Agenda control in a two-round runoff with cyclically oriented preferences.
//!
//! Every voter's ballot is a clockwise rotation of the candidate cycle, so a
//! ballot is fully described by its first entry (the *seed*). An agenda setter
//! splits the `n` candidates into two halves `A` and `B`; each half elects a
//! plurality winner and the two winners meet in a final. The crate computes how
//! likely a designated candidate (or every candidate at once, under rotated
//! agendas) is to win:
//!
//! * [`election`] holds the exact discrete model and brute-force oracles,
//! * [`estimator`] runs reproducible parallel Monte Carlo with Wilson intervals
//!   and the plateau-centroid width optimizer,
//! * [`continuum`] evaluates the continuous limit, in machine or extended
//!   precision, and checks the continuous universal event exactly,
//! * [`bounds`] carries the Chernoff-type failure bounds and decay-law fit.

pub mod bounds;
pub mod continuum;
pub mod election;
mod error;
pub mod estimator;
mod extended;
pub mod rng;

pub use error::{Error, Result};
