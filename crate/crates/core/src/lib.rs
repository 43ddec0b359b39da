//! Quantum-game access controller.
//!
//! A dense statevector simulator ([`qstate`]) drives two-player quantum games
//! ([`duel`]), a four-player game that elects which process may use a shared
//! resource ([`arbiter`]), a genetic algorithm that tunes the players'
//! strategies to a priority vector ([`ga`]), and a Grover search whose oracle
//! target is loaded from the winner's data ([`grover`]).
//!
//! Batch work (surface sweeps, population fitness, sampled rounds) runs on
//! rayon when the default `parallel` feature is enabled and sequentially
//! otherwise; results are identical either way.

pub mod arbiter;
pub mod duel;
pub mod error;
pub mod ga;
pub mod grover;
pub mod par;
pub mod qstate;

pub use error::{Error, Result};
