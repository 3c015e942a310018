//! Time-selective fading channels, pilot-based CSI aging and score-driven
//! feature-channel permutation for transmitting feature blocks over the air.
//!
//! The pipeline runs `codec::encode` → `transport::permute` →
//! `transport::modulate` → `transport::transmit` → `transport::demodulate`
//! → `transport::inverse_permute` → `codec::decode`, with `aging` supplying
//! the CSI each end sees and `metrics` judging the result.

// `!(x > 0.0)`-style guards deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aging;
pub mod channel;
pub mod codec;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod transport;

pub use error::{Error, Result};
