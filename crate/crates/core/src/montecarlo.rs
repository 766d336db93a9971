//! Stochastic-geometry simulator: unbiased estimates of coverage
//! probability and connectable-AP counts, independent of the analytical
//! chain, for validation.
//!
//! Randomness is counter-based: every trial (or spatial realization) owns a
//! ChaCha stream keyed by its index under a fixed master seed. Results are
//! therefore reproducible and identical for any worker count, and the
//! parallel reduction is an exact integer sum.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::channel::{mean_snr, sample_fading, sample_ppp_disk};
use crate::config::SystemConfig;
use crate::thresholds::{critical_snr_feedback, critical_snr_forward, Mode, ThresholdError};

#[derive(Debug, Error)]
pub enum McError {
    #[error("need at least 100 trials, got {0}")]
    TooFewTrials(u64),
    #[error("need at least 10 realizations, got {0}")]
    TooFewRealizations(u64),
    #[error(transparent)]
    Threshold(#[from] ThresholdError),
    #[error(transparent)]
    Channel(#[from] crate::channel::ChannelError),
}

/// A Monte Carlo estimate with its uncertainty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    /// Normal-approximation 95% interval, mean ± 1.96·std_error.
    pub ci95: (f64, f64),
    /// Wilson 95% interval, reported alongside when fewer than 10 successes
    /// were observed (binomial estimates only).
    pub wilson95: Option<(f64, f64)>,
    pub n_trials: u64,
    pub seed: u64,
}

/// Expands a master seed into a ChaCha key. SplitMix64 over four rounds.
fn expand_seed(master: u64) -> [u8; 32] {
    let mut state = master;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    key
}

/// The random stream owned by one trial: (seed, index) -> generator.
fn trial_rng(key: &[u8; 32], index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(*key);
    rng.set_stream(index);
    rng
}

fn wilson95(successes: u64, n: u64) -> (f64, f64) {
    let z = 1.96_f64;
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

fn binomial_estimate(successes: u64, n: u64, seed: u64) -> McEstimate {
    let mean = successes as f64 / n as f64;
    let std_error = (mean * (1.0 - mean) / n as f64).sqrt();
    let half = 1.96 * std_error;
    McEstimate {
        mean,
        std_error,
        ci95: (mean - half, mean + half),
        wilson95: if successes < 10 {
            Some(wilson95(successes, n))
        } else {
            None
        },
        n_trials: n,
        seed,
    }
}

/// Per-trial success test shared by both modes: draw the uplink fade, then
/// obtain the trial's threshold, then compare realized SNR against it.
/// The draw order (uplink fade first) is part of the determinism contract.
fn coverage_successes<F>(
    distance: f64,
    cfg: &SystemConfig,
    n_trials: u64,
    key: &[u8; 32],
    threshold_of: F,
) -> u64
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let snr_scale = mean_snr(distance, &cfg.uplink).expect("validated distance");
    let mu_u = cfg.uplink.fading_rate;
    (0..n_trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(key, i);
            let h_u = sample_fading(mu_u, &mut rng);
            let eta_u = snr_scale * h_u;
            let threshold = threshold_of(&mut rng);
            u64::from(eta_u >= threshold)
        })
        .sum()
}

fn feedback_threshold(distance: f64, cfg: &SystemConfig, rng: &mut ChaCha8Rng) -> f64 {
    let h_d = sample_fading(cfg.downlink.fading_rate, rng);
    let eta_d = mean_snr(distance, &cfg.downlink).expect("validated distance") * h_d;
    critical_snr_feedback(10.0 * eta_d.log10(), cfg.code.a_ratio, &cfg.code.u).omega_linear
}

/// Estimates the coverage probability at distance R by direct simulation of
/// the fading (and, in feedback mode, the per-trial threshold coupling).
pub fn mc_coverage(
    distance: f64,
    mode: Mode,
    cfg: &SystemConfig,
    n_trials: u64,
    seed: u64,
) -> Result<McEstimate, McError> {
    if n_trials < 100 {
        return Err(McError::TooFewTrials(n_trials));
    }
    crate::channel::path_loss(distance, &cfg.uplink)?; // distance domain check
    let key = expand_seed(seed);
    let successes = match mode {
        Mode::Forward => {
            let omega =
                critical_snr_forward(cfg.code.k_bits, cfg.code.n_uses, cfg.code.target_per)?;
            coverage_successes(distance, cfg, n_trials, &key, |_| omega.omega_linear)
        }
        Mode::Feedback => coverage_successes(distance, cfg, n_trials, &key, |rng| {
            feedback_threshold(distance, cfg, rng)
        }),
    };
    Ok(binomial_estimate(successes, n_trials, seed))
}

/// Counts connectable APs in one spatial realization.
fn realization_count(
    region_radius: f64,
    mode: Mode,
    cfg: &SystemConfig,
    omega_forward: f64,
    rng: &mut ChaCha8Rng,
) -> u64 {
    let aps = sample_ppp_disk(cfg.ap_density, region_radius, cfg.min_distance, rng);
    let mu_u = cfg.uplink.fading_rate;
    let mut connectable = 0u64;
    for r in aps {
        let h_u = sample_fading(mu_u, rng);
        let eta_u = mean_snr(r, &cfg.uplink).expect("clamped distance") * h_u;
        let threshold = match mode {
            Mode::Forward => omega_forward,
            Mode::Feedback => feedback_threshold(r, cfg, rng),
        };
        if eta_u >= threshold {
            connectable += 1;
        }
    }
    connectable
}

/// Estimates the mean number of connectable APs within radius D over
/// independent spatial realizations of the AP process.
pub fn mc_connectable_aps(
    region_radius: f64,
    mode: Mode,
    cfg: &SystemConfig,
    n_realizations: u64,
    seed: u64,
) -> Result<McEstimate, McError> {
    if n_realizations < 10 {
        return Err(McError::TooFewRealizations(n_realizations));
    }
    let omega_forward = match mode {
        Mode::Forward => {
            critical_snr_forward(cfg.code.k_bits, cfg.code.n_uses, cfg.code.target_per)?
                .omega_linear
        }
        Mode::Feedback => f64::NAN, // unused
    };
    let key = expand_seed(seed);
    let (sum, sum_sq) = (0..n_realizations)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(&key, i);
            let c = realization_count(region_radius, mode, cfg, omega_forward, &mut rng);
            (c, (c as u128) * (c as u128))
        })
        .reduce(|| (0u64, 0u128), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = n_realizations as f64;
    let mean = sum as f64 / n;
    let variance = ((sum_sq as f64) - n * mean * mean) / (n - 1.0);
    let std_error = (variance.max(0.0) / n).sqrt();
    let half = 1.96 * std_error;
    Ok(McEstimate {
        mean,
        std_error,
        ci95: (mean - half, mean + half),
        wilson95: None,
        n_trials: n_realizations,
        seed,
    })
}
