//! Random linear codes decoded with GRAND over a zero-forcing massive MIMO link.
//!
//! The crate is organised along the transmission chain:
//!
//! - [`gf2`]: packed binary vectors and matrices
//! - [`code`]: systematic random linear codes and the syndrome membership test
//! - [`modem`]: square QAM with natural or Gray labeling on each PAM axis
//! - [`channel`]: flat Rayleigh channel, complex-to-real model, perfect hardening
//! - [`detector`]: zero-forcing filter, noise diagnostics, Neumann inverse
//! - [`decoder`]: hard-decision GRAND and its query accounting
//! - [`sim`]: Monte Carlo trials, Eb/N0 sweeps, CSV output
//! - [`cli`]: the `grand-mimo` command line

pub mod channel;
pub mod cli;
pub mod code;
pub mod decoder;
pub mod detector;
pub mod gf2;
pub mod modem;
pub mod sim;

pub use code::RlcCode;
pub use decoder::{grand_decode, query_upper_bound, DecodeOutcome, DecodeStatus, GrandConfig};
pub use gf2::{BitMatrix, BitWord};
pub use modem::{Constellation, Mapping};
pub use sim::{ChannelModel, PointResult, SweepConfig};
