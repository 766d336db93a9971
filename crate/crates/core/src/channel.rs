//! Deterministic link-budget computations and the random primitives used by
//! the simulator: exponential fading draws and radial Poisson-point-process
//! sampling on a disk.
//!
//! The process sampler stores distances only. Everything downstream depends
//! on distances alone, so angles are never generated.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::config::LinkParams;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("distance must be positive, got {0}")]
    NonpositiveDistance(f64),
    #[error("fading gain must be nonnegative, got {0}")]
    NegativeFading(f64),
}

/// One sampled link: distance, fading power, resulting SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRealization {
    pub distance: f64,
    pub fading_gain: f64,
    pub snr_linear: f64,
}

impl LinkRealization {
    /// Draws the fading power and evaluates the SNR at a fixed distance.
    pub fn sample<R: Rng>(distance: f64, link: &LinkParams, rng: &mut R) -> Result<Self, ChannelError> {
        let fading_gain = sample_fading(link.fading_rate, rng);
        let snr_linear = snr(distance, fading_gain, link)?;
        Ok(Self {
            distance,
            fading_gain,
            snr_linear,
        })
    }
}

/// Distance-dependent channel gain C·R^(-α).
pub fn path_loss(distance: f64, link: &LinkParams) -> Result<f64, ChannelError> {
    if !(distance > 0.0) {
        return Err(ChannelError::NonpositiveDistance(distance));
    }
    Ok(link.intercept * distance.powf(-link.exponent))
}

/// Received SNR P·G_t·G_r·L(R)·|h|²/σ² for either link direction.
pub fn snr(distance: f64, fading_gain: f64, link: &LinkParams) -> Result<f64, ChannelError> {
    if !(fading_gain >= 0.0) {
        return Err(ChannelError::NegativeFading(fading_gain));
    }
    let loss = path_loss(distance, link)?;
    Ok(link.power * link.g_tx * link.g_rx * loss * fading_gain / link.noise_power)
}

/// Mean SNR coefficient at distance R: the SNR per unit of fading power.
/// Multiplying by a drawn |h|² gives the realized SNR.
pub fn mean_snr(distance: f64, link: &LinkParams) -> Result<f64, ChannelError> {
    snr(distance, 1.0, link)
}

/// Exponential fading power |h|² with rate μ (mean 1/μ), by inverse CDF.
pub fn sample_fading<R: Rng>(rate: f64, rng: &mut R) -> f64 {
    debug_assert!(rate > 0.0);
    let u: f64 = rng.gen(); // [0, 1)
    -(1.0 - u).ln() / rate
}

/// Distances of one Poisson-point-process realization on a disk of the given
/// radius: count ~ Poisson(λπD²), radii with the uniform-in-area density
/// 2r/D², clamped to at least `min_distance` (far-field model guard).
/// Returned unsorted.
pub fn sample_ppp_disk<R: Rng>(
    density: f64,
    radius: f64,
    min_distance: f64,
    rng: &mut R,
) -> Vec<f64> {
    debug_assert!(density > 0.0 && radius > 0.0);
    let mean = density * std::f64::consts::PI * radius * radius;
    let count = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    (0..count)
        .map(|_| {
            let u: f64 = rng.gen();
            (radius * u.sqrt()).max(min_distance)
        })
        .collect()
}
