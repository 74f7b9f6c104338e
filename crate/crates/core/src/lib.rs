#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod bounds;
pub mod channel_params;
pub mod cli;
pub mod distortion;
pub mod error;
pub mod level_crossing;
pub mod quad;
pub mod sim;
pub mod special;
pub mod spectrum;
