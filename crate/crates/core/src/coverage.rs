//! Coverage probabilities and connectable-AP counts.
//!
//! Feedback-mode coverage is provided in three tiers of increasing
//! approximation, so quadrature error and Taylor-chain error can be isolated
//! from each other:
//!
//! 1. [`coverage_feedback_exact`] — adaptive integration of the exact
//!    integrand over the downlink fade; the module's ground-truth oracle.
//! 2. [`coverage_feedback_gl`] — Gauss-Laguerre applied to the exact
//!    threshold function (quadrature error only).
//! 3. [`coverage_feedback_closed`] — the full closed form built on the
//!    per-node decay/shift coefficients ([`prop1_coefficients`]), which
//!    additionally absorbs the Taylor chain.
//!
//! Forward-mode coverage and both connectable-AP counts close in terms of
//! the lower incomplete gamma function.

use serde::Serialize;
use thiserror::Error;

use crate::config::SystemConfig;
use crate::specfun::{self, QuadratureRule, SpecFunError};
use crate::thresholds::{critical_snr_feedback, ThresholdResult};

const LN_10: f64 = std::f64::consts::LN_10;

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("distance must be positive, got {0}")]
    NonpositiveDistance(f64),
    #[error("downlink fading gain must be nonnegative, got {0}")]
    NegativeFading(f64),
    #[error("Taylor base B1 is nonpositive at node {node}: {value} (approximation chain invalid for this config)")]
    NonpositiveTaylorBase { node: usize, value: f64 },
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
    #[error("coverage curve invariant violated: {0}")]
    CurveInvariant(&'static str),
}

/// σ_U² / (P_U·G_t·G_r·C_U): the uplink noise-to-signal ratio that scales
/// every uplink threshold comparison.
pub fn uplink_noise_ratio(cfg: &SystemConfig) -> f64 {
    let u = &cfg.uplink;
    u.noise_power / (u.power * u.g_tx * u.g_rx * u.intercept)
}

/// Effective uplink fading threshold g(R, |h_D|²): the AP at distance R is
/// connectable exactly when |h_U|² exceeds it. Exact; no Taylor steps.
///
/// `h_d_sq = 0` is accepted as the deep-fade limit (the feedback threshold
/// sits at its ceiling there).
pub fn threshold_function_g(
    distance: f64,
    h_d_sq: f64,
    cfg: &SystemConfig,
) -> Result<f64, CoverageError> {
    if !(distance > 0.0) {
        return Err(CoverageError::NonpositiveDistance(distance));
    }
    if !(h_d_sq >= 0.0) {
        return Err(CoverageError::NegativeFading(h_d_sq));
    }
    let d = &cfg.downlink;
    let eta_d =
        d.power * d.g_tx * d.g_rx * d.intercept * distance.powf(-d.exponent) * h_d_sq
            / d.noise_power;
    let eta_d_db = 10.0 * eta_d.log10(); // -inf at h_d_sq = 0, handled by the logistic
    let omega = critical_snr_feedback(eta_d_db, cfg.code.a_ratio, &cfg.code.u);
    Ok(omega.omega_linear * uplink_noise_ratio(cfg) * distance.powf(cfg.uplink.exponent))
}

/// Feedback-mode coverage probability by adaptive integration of the exact
/// integrand over the downlink fade distribution, to absolute tolerance
/// 1e-10. Ground truth for the quadrature and closed-form tiers.
pub fn coverage_feedback_exact(distance: f64, cfg: &SystemConfig) -> Result<f64, CoverageError> {
    if !(distance > 0.0) {
        return Err(CoverageError::NonpositiveDistance(distance));
    }
    let mu_u = cfg.uplink.fading_rate;
    let mu_d = cfg.downlink.fading_rate;
    // e^(-mu_d·x) mass beyond x_max is below 3e-20, far under tolerance
    let x_max = 45.0 / mu_d;
    let integrand = |x: f64| {
        let g = threshold_function_g(distance, x, cfg).expect("domain checked");
        (-mu_u * g).exp() * mu_d * (-mu_d * x).exp()
    };
    Ok(specfun::adaptive_simpson(&integrand, 0.0, x_max, 1e-10)?)
}

/// Feedback-mode coverage via Gauss-Laguerre on the exact threshold
/// function: Σ w_k exp(-μ_U·g(R, x_k/μ_D)). Converges to
/// [`coverage_feedback_exact`] as the order grows.
pub fn coverage_feedback_gl(
    distance: f64,
    cfg: &SystemConfig,
    rule: &QuadratureRule,
) -> Result<f64, CoverageError> {
    if !(distance > 0.0) {
        return Err(CoverageError::NonpositiveDistance(distance));
    }
    let mu_u = cfg.uplink.fading_rate;
    let mu_d = cfg.downlink.fading_rate;
    let mut acc = 0.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        let g = threshold_function_g(distance, x / mu_d, cfg)?;
        acc += w * (-mu_u * g).exp();
    }
    Ok(acc)
}

/// Per-node coefficients of the closed-form coverage approximation.
///
/// `b1[k] = w[k] + q[k] * a` exactly: `w` collects the ratio-independent
/// part and `q` the per-ratio slope, both of which depend on the node
/// through Z_{1,k}.
#[derive(Debug, Clone, Serialize)]
pub struct PropOneCoefficients {
    /// Feedback expansion ratio the table was built for.
    pub a_ratio: u32,
    /// Quadrature nodes x_k.
    pub nodes: Vec<f64>,
    /// Quadrature weights w_k.
    pub weights: Vec<f64>,
    /// Downlink SNR scale per node: P_D·G_t·G_r·C_D·x_k/(μ_D·σ_D²).
    pub z1: Vec<f64>,
    /// Taylor base per node.
    pub b1: Vec<f64>,
    /// Ratio-independent part of b1.
    pub w: Vec<f64>,
    /// Per-ratio slope of b1.
    pub q: Vec<f64>,
    /// Decay coefficient per node (multiplies R^α_U).
    pub j1: Vec<f64>,
    /// Additive shift gain per node.
    pub j2: Vec<f64>,
    /// Uplink noise-to-signal ratio Z₂.
    pub z2: f64,
    /// dB-slope term B₂ = (10/ln10)(u0 + u2·a).
    pub b2: f64,
}

/// Builds the closed-form coefficient table at the config's own feedback
/// ratio.
pub fn prop1_coefficients(
    cfg: &SystemConfig,
    rule: &QuadratureRule,
) -> Result<PropOneCoefficients, CoverageError> {
    prop1_coefficients_with_ratio(cfg, rule, cfg.code.a_ratio)
}

/// Ratio-independent pieces of the Taylor chain per node: Z_{1,k} plus the
/// W/Q split of B1, without the B1 > 0 guard (sensitivity analysis needs to
/// inspect invalid regimes rather than reject them).
pub(crate) struct TaylorBases {
    pub z1: Vec<f64>,
    pub w: Vec<f64>,
    pub q: Vec<f64>,
    pub b2: f64,
}

pub(crate) fn taylor_bases(cfg: &SystemConfig, rule: &QuadratureRule, a_ratio: u32) -> TaylorBases {
    let [u0, u1, u2, u3, u4, _u5] = cfg.code.u;
    let a = a_ratio as f64;
    let d = &cfg.downlink;
    let n = rule.order;
    let mut z1 = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    for &x in &rule.nodes {
        let z1k = d.power * d.g_tx * d.g_rx * d.intercept * x / (d.fading_rate * d.noise_power);
        let lg_term = z1k.log10() - 1.0 / LN_10;
        z1.push(z1k);
        w.push(1.0 + u3 + u4 + 10.0 * u0 * lg_term);
        q.push(u1 + 10.0 * u2 * lg_term);
    }
    TaylorBases {
        z1,
        w,
        q,
        b2: 10.0 / LN_10 * (u0 + u2 * a),
    }
}

/// Builds the coefficient table at an explicit feedback ratio (parameter
/// sweeps evaluate ratios other than the configured one).
pub fn prop1_coefficients_with_ratio(
    cfg: &SystemConfig,
    rule: &QuadratureRule,
    a_ratio: u32,
) -> Result<PropOneCoefficients, CoverageError> {
    let u5 = cfg.code.u[5];
    let a = a_ratio as f64;
    let z2 = uplink_noise_ratio(cfg);
    let bases = taylor_bases(cfg, rule, a_ratio);
    let b2 = bases.b2;

    let n = rule.order;
    let mut b1 = Vec::with_capacity(n);
    let mut j1 = Vec::with_capacity(n);
    let mut j2 = Vec::with_capacity(n);

    for k in 0..n {
        let b1k = bases.w[k] + bases.q[k] * a;
        if !(b1k > 0.0) {
            return Err(CoverageError::NonpositiveTaylorBase {
                node: k,
                value: b1k,
            });
        }
        let s = 1.0 + u5 * b1k;
        let j1k = z2 + z2 * s * LN_10 / (10.0 * b1k) + z2 * s * s * LN_10 * LN_10 / (200.0 * b1k * b1k);
        let j2k = z2 * b2 * LN_10 / (10.0 * b1k * b1k)
            + z2 * b2 * s * LN_10 * LN_10 / (100.0 * b1k * b1k * b1k);
        b1.push(b1k);
        j1.push(j1k);
        j2.push(j2k);
    }

    Ok(PropOneCoefficients {
        a_ratio,
        nodes: rule.nodes.clone(),
        weights: rule.weights.clone(),
        z1: bases.z1,
        b1,
        w: bases.w,
        q: bases.q,
        j1,
        j2,
        z2,
        b2,
    })
}

/// Closed-form feedback coverage, unclamped:
/// Σ w_k exp(-μ_U(J_{1,k}·R^α_U - J_{2,k})). The shift terms can push the
/// raw value above 1 at small R; sensitivity analysis needs that raw value.
pub fn coverage_feedback_closed_raw(
    distance: f64,
    coeffs: &PropOneCoefficients,
    cfg: &SystemConfig,
) -> f64 {
    let mu_u = cfg.uplink.fading_rate;
    let r_pow = distance.powf(cfg.uplink.exponent);
    coeffs
        .weights
        .iter()
        .zip(coeffs.j1.iter().zip(&coeffs.j2))
        .map(|(&w, (&j1, &j2))| w * (-mu_u * (j1 * r_pow - j2)).exp())
        .sum()
}

/// Closed-form feedback coverage clamped to [0, 1] for reporting.
pub fn coverage_feedback_closed(
    distance: f64,
    coeffs: &PropOneCoefficients,
    cfg: &SystemConfig,
) -> f64 {
    coverage_feedback_closed_raw(distance, coeffs, cfg).clamp(0.0, 1.0)
}

/// Forward-mode coverage probability exp(-A·R^α_U) with
/// A = μ_U·Ω_c·σ_U²/(P_U·G_t·G_r·C_U).
pub fn coverage_forward(distance: f64, cfg: &SystemConfig, omega_c: &ThresholdResult) -> f64 {
    let a = cfg.uplink.fading_rate * omega_c.omega_linear * uplink_noise_ratio(cfg);
    (-a * distance.powf(cfg.uplink.exponent)).exp()
}

/// Expected number of connectable APs within radius D, forward mode:
/// 2πλ·γ(2/α, A·D^α) / (α·A^(2/α)).
pub fn aps_forward(
    region_radius: f64,
    cfg: &SystemConfig,
    omega_c: &ThresholdResult,
) -> Result<f64, CoverageError> {
    let alpha = cfg.uplink.exponent;
    let a = cfg.uplink.fading_rate * omega_c.omega_linear * uplink_noise_ratio(cfg);
    let s = 2.0 / alpha;
    let gamma_term = specfun::lower_incomplete_gamma(s, a * region_radius.powf(alpha))?;
    Ok(2.0 * std::f64::consts::PI * cfg.ap_density * gamma_term / (alpha * a.powf(s)))
}

/// Expected number of connectable APs within radius D, feedback mode:
/// 2πλ·Σ w_k e^(μ_U·J_{2,k})·γ(2/α, μ_U·J_{1,k}·D^α) / ((μ_U·J_{1,k})^(2/α)·α).
pub fn aps_feedback(
    region_radius: f64,
    coeffs: &PropOneCoefficients,
    cfg: &SystemConfig,
) -> Result<f64, CoverageError> {
    let alpha = cfg.uplink.exponent;
    let mu_u = cfg.uplink.fading_rate;
    let s = 2.0 / alpha;
    let d_pow = region_radius.powf(alpha);
    let mut acc = 0.0;
    for ((&w, &j1), &j2) in coeffs
        .weights
        .iter()
        .zip(&coeffs.j1)
        .zip(&coeffs.j2)
    {
        let scale = mu_u * j1;
        let gamma_term = specfun::lower_incomplete_gamma(s, scale * d_pow)?;
        acc += w * (mu_u * j2).exp() * gamma_term / (scale.powf(s) * alpha);
    }
    Ok(2.0 * std::f64::consts::PI * cfg.ap_density * acc)
}

// ---------------------------------------------------------------------------
// Sampled curves
// ---------------------------------------------------------------------------

/// Which computation produced a coverage curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CurveMethod {
    #[serde(rename = "forward-closed")]
    ForwardClosed,
    #[serde(rename = "feedback-exact")]
    FeedbackExact,
    #[serde(rename = "feedback-gl")]
    FeedbackGl,
    #[serde(rename = "feedback-closed")]
    FeedbackClosed,
}

impl CurveMethod {
    pub fn label(self) -> &'static str {
        match self {
            CurveMethod::ForwardClosed => "forward-closed",
            CurveMethod::FeedbackExact => "feedback-exact",
            CurveMethod::FeedbackGl => "feedback-gl",
            CurveMethod::FeedbackClosed => "feedback-closed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub distance_m: f64,
    pub probability: f64,
}

/// A sampled (distance -> probability) series with provenance.
#[derive(Debug, Clone, Serialize)]
pub struct CoverageCurve {
    pub method: CurveMethod,
    pub points: Vec<CurvePoint>,
    pub config_hash: String,
}

impl CoverageCurve {
    pub fn new(
        method: CurveMethod,
        points: Vec<CurvePoint>,
        config_hash: String,
    ) -> Result<Self, CoverageError> {
        let mut prev = f64::NEG_INFINITY;
        for p in &points {
            if !(p.probability >= 0.0 && p.probability <= 1.0) {
                return Err(CoverageError::CurveInvariant("probability outside [0, 1]"));
            }
            if p.distance_m <= prev {
                return Err(CoverageError::CurveInvariant(
                    "distances not strictly increasing",
                ));
            }
            prev = p.distance_m;
        }
        Ok(Self {
            method,
            points,
            config_hash,
        })
    }

    /// CSV with columns distance_m, probability, method.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "distance_m,probability,method")?;
        for p in &self.points {
            writeln!(out, "{},{},{}", p.distance_m, p.probability, self.method.label())?;
        }
        Ok(())
    }
}

/// Samples one coverage curve over a distance grid.
pub fn generate_curve(
    cfg: &SystemConfig,
    method: CurveMethod,
    grid: &[f64],
) -> Result<CoverageCurve, CoverageError> {
    let hash = cfg.digest();
    let mut points = Vec::with_capacity(grid.len());
    match method {
        CurveMethod::ForwardClosed => {
            let omega = crate::thresholds::critical_snr_forward(
                cfg.code.k_bits,
                cfg.code.n_uses,
                cfg.code.target_per,
            )
            .map_err(|_| CoverageError::CurveInvariant("forward threshold unavailable"))?;
            for &r in grid {
                points.push(CurvePoint {
                    distance_m: r,
                    probability: coverage_forward(r, cfg, &omega),
                });
            }
        }
        CurveMethod::FeedbackExact => {
            for &r in grid {
                points.push(CurvePoint {
                    distance_m: r,
                    probability: coverage_feedback_exact(r, cfg)?,
                });
            }
        }
        CurveMethod::FeedbackGl => {
            let rule = specfun::gauss_laguerre(cfg.quadrature_order)?;
            for &r in grid {
                points.push(CurvePoint {
                    distance_m: r,
                    probability: coverage_feedback_gl(r, cfg, &rule)?,
                });
            }
        }
        CurveMethod::FeedbackClosed => {
            let rule = specfun::gauss_laguerre(cfg.quadrature_order)?;
            let coeffs = prop1_coefficients(cfg, &rule)?;
            for &r in grid {
                points.push(CurvePoint {
                    distance_m: r,
                    probability: coverage_feedback_closed(r, &coeffs, cfg),
                });
            }
        }
    }
    CoverageCurve::new(method, points, hash)
}
