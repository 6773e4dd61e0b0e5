//! Cramér-Rao bounds and transmit beamforming for integrated sensing and
//! communication with extended targets.
//!
//! The modules follow the processing chain: [`contour`] geometry, [`array`]
//! responses and channels, [`crb`] bounds, [`design`] beamformers and
//! [`sim`] Monte-Carlo validation. [`scenario`] ties them to a file format.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod array;
pub mod contour;
pub mod crb;
pub mod design;
mod error;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use isac_sdp as sdp;
