//! Channel charting and location-based beamforming on synthetic multipath
//! MIMO-OFDM channels.

// NaN must fail the `!(x >= bound)` guards used for input validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamform;
pub mod chart;
pub mod error;
pub mod io;
pub mod nn;
pub mod pipeline;
pub mod scene;
pub mod stats;

pub use error::{Error, Result};
