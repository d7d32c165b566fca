//! Seeded synthetic scenes: subclass centroids on the unit sphere, noisy
//! prototypes standing in for image features, noisy and anisotropically
//! distorted point features standing in for distilled lidar features, and
//! posed scan sequences with corrupted labels for the voxel pipeline.
//!
//! Every random draw comes from [`Xorshift64Star`] and every transcendental
//! function from `libm`, so a config reproduces the same scene bit for bit on
//! any platform.

mod rng;
mod scene;
mod sequence;

pub use rng::Xorshift64Star;
pub use scene::{generate, Anisotropy, SynthConfig, SynthScene, MAX_CENTROID_ATTEMPTS};
pub use sequence::{generate_sequence, SynthSequence};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synth config: {0}")]
    InvalidConfig(String),
    #[error("could not place centroid {index} at angle >= {min_angle} rad after {attempts} attempts")]
    Infeasible { index: usize, min_angle: f64, attempts: usize },
}
