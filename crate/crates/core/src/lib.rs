//! Randomized, replayable image degradation for blind super-resolution.
//!
//! HR images are blurred, downsampled, and corrupted by Gaussian, JPEG, and
//! processed-sensor noise in a randomly shuffled order. Every sampled
//! parameter is materialized in a [`pipeline::DegradationPlan`] and recorded in
//! a [`pipeline::Manifest`] so any LR output can be regenerated bit-exactly.

pub mod error;
pub mod image;
pub mod kernels;
pub mod rng;

pub use error::{Error, Result};
pub use image::{ImageF, Kernel2D};
pub mod dataset;
pub mod degrade;
pub mod isp;
pub mod mat3;
pub mod pipeline;
pub mod synth;
