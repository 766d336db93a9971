//! Coverage analysis for feedback-aided IoT uplink connectivity.
//!
//! An IoT device's uplink reaches an access point when the uplink SNR
//! clears a critical threshold. In forward mode that threshold comes from
//! the finite-blocklength coding relation; with AP decoding feedback it
//! drops according to a logistic model in the downlink SNR and the feedback
//! expansion ratio, coupling the two channels. This crate provides:
//!
//! - closed-form coverage probabilities and connectable-AP counts for both
//!   modes ([`coverage`]), with the feedback mode in three tiers (exact
//!   integral, quadrature on the exact threshold, full closed form);
//! - an independent Monte Carlo simulator over Poisson-deployed APs and
//!   Rayleigh fading for validating every analytical result
//!   ([`montecarlo`]);
//! - the approximation-error analysis of the closed-form chain
//!   ([`sensitivity`]);
//! - the supporting special functions ([`specfun`]) and parameter handling
//!   ([`config`]).

pub mod channel;
pub mod config;
pub mod coverage;
pub mod montecarlo;
pub mod sensitivity;
pub mod specfun;
pub mod thresholds;

pub use config::{load_config, SystemConfig};
pub use coverage::{CoverageCurve, CurveMethod};
pub use montecarlo::McEstimate;
pub use thresholds::Mode;
