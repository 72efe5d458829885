//! Dominance bounds for a leader–follower global coordination game.
//!
//! A leader who observes the state (or a noisy signal of it) decides whether to
//! exert effort; `n` followers observe the leader's action and private noisy signals and
//! then decide. The crate iterates the six dominance-bound sequences of
//! Δ-rationalizability, locates the critical follower noise at which play
//! becomes unique, and checks every closed form against a Monte Carlo oracle.

// `!(a > b)` comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beliefs;
pub mod cli;
pub mod error;
pub mod mc;
pub mod noise;
pub mod payoffs;
pub mod quad;
pub mod rationalizability;
pub mod roots;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
