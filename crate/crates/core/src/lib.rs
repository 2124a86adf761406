//! Simulation and verification toolkit for half-duplex two-hop relay
//! networks with linear processing at the relays.
//!
//! The relays apply `N x N` matrices `G_i` with `G_i G_i^H = I/N`; the
//! destination sees the effective channel `H_eff`. The crate samples fading,
//! evaluates mutual information and outage, checks the code-difference
//! rank conditions, and estimates diversity exponents.

// `!(x > 0.0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codebook;
pub mod config;
pub mod error;
pub mod experiments;
pub mod fileio;
pub mod information;
pub mod linalg;
pub mod outage;
pub mod scheme;
pub mod selfcheck;
pub mod special;
pub mod stats;
pub mod streams;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
