//! Individual degradation operators: Gaussian blur, the four downsamplers,
//! cross-channel Gaussian noise, and JPEG compression noise.

mod blur;
mod downsample;
pub mod jpeg;
mod noise;

pub use blur::apply_blur;
pub(crate) use downsample::down_up_mid_dims;
pub use downsample::{down_up_stage1, down_up_stage2, downsample, downsampled_dims, DownSpec};
pub use jpeg::{jpeg_noise, jpeg_round_trip, JpegSpec};
pub use noise::{
    add_gaussian_noise, psd_factor, sample_general_covariance, sample_noise_specs,
    GaussianNoiseSpec, Mat3, NoiseMode, NoiseSampling,
};
