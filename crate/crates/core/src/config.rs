//! Parameter schema, JSON loading, unit conversion, and constraint
//! validation. Everything downstream works in linear units (watts, meters,
//! unitless gains); the config file may express power-like quantities in
//! dBm/dBi/dB via field-name suffixes.
//!
//! The JSON schema (see `configs/default.json` and the README) accepts
//! exactly one of the suffixed alternatives per quantity, e.g. `power_dbm`
//! or `power_w`. Unknown keys are a hard error so that typos in parameter
//! sweeps fail loudly instead of silently running defaults.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Default Gauss-Laguerre order applied when the file omits it.
pub const DEFAULT_QUADRATURE_ORDER: usize = 16;
/// Default far-field clamp radius in meters (path loss diverges at R -> 0).
pub const DEFAULT_MIN_DISTANCE_M: f64 = 0.1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed config file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid {field}: {value} violates `{requirement}`")]
    Constraint {
        field: String,
        value: f64,
        requirement: &'static str,
    },
    #[error("{section}: specify exactly one of `{a}` or `{b}`")]
    UnitChoice {
        section: String,
        a: &'static str,
        b: &'static str,
    },
    #[error("linear_to_db requires a positive input, got {0}")]
    NonpositiveDb(f64),
}

/// 10^(x/10).
pub fn db_to_linear(x_db: f64) -> f64 {
    10.0_f64.powf(x_db / 10.0)
}

/// 10·log10(x); errors on nonpositive input.
pub fn linear_to_db(x: f64) -> Result<f64, ConfigError> {
    if x <= 0.0 {
        return Err(ConfigError::NonpositiveDb(x));
    }
    Ok(10.0 * x.log10())
}

/// Physical parameters of one direction of the link, in linear units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Transmit power in watts.
    pub power: f64,
    /// Transmit antenna gain, linear.
    pub g_tx: f64,
    /// Receive antenna gain, linear.
    pub g_rx: f64,
    /// AWGN power σ² in watts.
    pub noise_power: f64,
    /// Path-loss intercept C, linear.
    pub intercept: f64,
    /// Path-loss exponent α.
    pub exponent: f64,
    /// Exponential rate μ of the fading power |h|².
    pub fading_rate: f64,
}

/// Code parameters for both operating modes, plus the feedback-threshold
/// logistic coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackCodeParams {
    /// Message size K in bits.
    pub k_bits: u32,
    /// Uplink channel uses N.
    pub n_uses: u32,
    /// Target packet error rate ε*.
    pub target_per: f64,
    /// Feedback expansion a (downlink uses N' = a·N).
    pub a_ratio: u32,
    /// Logistic coefficients u0..u5.
    pub u: [f64; 6],
}

/// One fully validated scenario. Immutable after load; share by reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub uplink: LinkParams,
    pub downlink: LinkParams,
    pub code: FeedbackCodeParams,
    /// AP density λ in APs per square meter.
    pub ap_density: f64,
    /// Analysis region radius D in meters.
    pub region_radius: f64,
    /// Gauss-Laguerre order L.
    pub quadrature_order: usize,
    /// Far-field clamp radius for sampled distances, meters.
    pub min_distance: f64,
}

impl SystemConfig {
    /// SHA-256 of the canonical JSON serialization, as lowercase hex.
    /// Embedded in output files so results can be traced to exact inputs.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let hash = Sha256::digest(json.as_bytes());
        let mut out = String::with_capacity(64);
        for byte in hash {
            out.push_str(&format!("{byte:02x}"));
        }
        out
    }

    /// Checks every invariant; returns the first violation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        validate_link("uplink", &self.uplink)?;
        validate_link("downlink", &self.downlink)?;
        validate_code(&self.code)?;
        positive("ap_density", self.ap_density)?;
        positive("region_radius", self.region_radius)?;
        if self.quadrature_order < 1 {
            return Err(ConfigError::Constraint {
                field: "quadrature_order".into(),
                value: self.quadrature_order as f64,
                requirement: "quadrature_order >= 1",
            });
        }
        positive("min_distance", self.min_distance)?;
        Ok(())
    }
}

fn positive(field: &str, value: f64) -> Result<(), ConfigError> {
    if !(value > 0.0) {
        return Err(ConfigError::Constraint {
            field: field.into(),
            value,
            requirement: "value > 0",
        });
    }
    Ok(())
}

fn validate_link(section: &str, link: &LinkParams) -> Result<(), ConfigError> {
    positive(&format!("{section}.power"), link.power)?;
    positive(&format!("{section}.g_tx"), link.g_tx)?;
    positive(&format!("{section}.g_rx"), link.g_rx)?;
    positive(&format!("{section}.noise_power"), link.noise_power)?;
    positive(&format!("{section}.intercept"), link.intercept)?;
    if !(link.exponent > 2.0) {
        // α <= 2 breaks convergence of the radial integrals at large D
        return Err(ConfigError::Constraint {
            field: format!("{section}.exponent"),
            value: link.exponent,
            requirement: "exponent > 2",
        });
    }
    positive(&format!("{section}.fading_rate"), link.fading_rate)?;
    Ok(())
}

fn validate_code(code: &FeedbackCodeParams) -> Result<(), ConfigError> {
    if !(code.target_per > 0.0 && code.target_per < 1.0) {
        return Err(ConfigError::Constraint {
            field: "code.target_per".into(),
            value: code.target_per,
            requirement: "0 < target_per < 1",
        });
    }
    if code.k_bits < 1 {
        return Err(ConfigError::Constraint {
            field: "code.k_bits".into(),
            value: code.k_bits as f64,
            requirement: "k_bits >= 1",
        });
    }
    if code.n_uses < code.k_bits {
        return Err(ConfigError::Constraint {
            field: "code.n_uses".into(),
            value: code.n_uses as f64,
            requirement: "n_uses >= k_bits",
        });
    }
    if code.a_ratio < 1 {
        return Err(ConfigError::Constraint {
            field: "code.a_ratio".into(),
            value: code.a_ratio as f64,
            requirement: "a_ratio >= 1",
        });
    }
    let [u0, _u1, u2, _u3, u4, u5] = code.u;
    if !(u4 > 0.0) {
        return Err(ConfigError::Constraint {
            field: "code.u[4]".into(),
            value: u4,
            requirement: "u4 > 0 (orders the logistic asymptotes)",
        });
    }
    if !(u5 < 0.0) {
        return Err(ConfigError::Constraint {
            field: "code.u[5]".into(),
            value: u5,
            requirement: "u5 < 0 (keeps the step-3 sign condition attainable)",
        });
    }
    let slope = u0 + u2 * code.a_ratio as f64;
    if !(slope > 0.0) {
        return Err(ConfigError::Constraint {
            field: "code.u[0]+u[2]*a".into(),
            value: slope,
            requirement: "u0 + u2*a > 0 (threshold decreasing in downlink SNR)",
        });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// File schema with unit suffixes
// ---------------------------------------------------------------------------

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    uplink: RawLink,
    downlink: RawLink,
    code: RawCode,
    ap_density_per_m2: f64,
    region_radius_m: f64,
    quadrature_order: Option<usize>,
    min_distance_m: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLink {
    power_w: Option<f64>,
    power_dbm: Option<f64>,
    g_tx_linear: Option<f64>,
    g_tx_dbi: Option<f64>,
    g_rx_linear: Option<f64>,
    g_rx_dbi: Option<f64>,
    noise_power_w: Option<f64>,
    noise_power_dbm: Option<f64>,
    intercept_linear: Option<f64>,
    intercept_db: Option<f64>,
    exponent: f64,
    fading_rate: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCode {
    k_bits: u32,
    n_uses: u32,
    target_per: f64,
    a_ratio: u32,
    u: [f64; 6],
}

fn pick_unit(
    section: &str,
    a: (&'static str, Option<f64>),
    b: (&'static str, Option<f64>),
    convert_b: impl Fn(f64) -> f64,
) -> Result<f64, ConfigError> {
    match (a.1, b.1) {
        (Some(v), None) => Ok(v),
        (None, Some(v)) => Ok(convert_b(v)),
        _ => Err(ConfigError::UnitChoice {
            section: section.into(),
            a: a.0,
            b: b.0,
        }),
    }
}

fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm) * 1e-3
}

impl RawLink {
    fn into_link(self, section: &str) -> Result<LinkParams, ConfigError> {
        Ok(LinkParams {
            power: pick_unit(
                section,
                ("power_w", self.power_w),
                ("power_dbm", self.power_dbm),
                dbm_to_watts,
            )?,
            g_tx: pick_unit(
                section,
                ("g_tx_linear", self.g_tx_linear),
                ("g_tx_dbi", self.g_tx_dbi),
                db_to_linear,
            )?,
            g_rx: pick_unit(
                section,
                ("g_rx_linear", self.g_rx_linear),
                ("g_rx_dbi", self.g_rx_dbi),
                db_to_linear,
            )?,
            noise_power: pick_unit(
                section,
                ("noise_power_w", self.noise_power_w),
                ("noise_power_dbm", self.noise_power_dbm),
                dbm_to_watts,
            )?,
            intercept: pick_unit(
                section,
                ("intercept_linear", self.intercept_linear),
                ("intercept_db", self.intercept_db),
                db_to_linear,
            )?,
            exponent: self.exponent,
            fading_rate: self.fading_rate,
        })
    }
}

/// Parses a JSON config string, converts units, validates every invariant.
pub fn parse_config(json: &str) -> Result<SystemConfig, ConfigError> {
    let raw: RawConfig = serde_json::from_str(json)?;
    let cfg = SystemConfig {
        uplink: raw.uplink.into_link("uplink")?,
        downlink: raw.downlink.into_link("downlink")?,
        code: FeedbackCodeParams {
            k_bits: raw.code.k_bits,
            n_uses: raw.code.n_uses,
            target_per: raw.code.target_per,
            a_ratio: raw.code.a_ratio,
            u: raw.code.u,
        },
        ap_density: raw.ap_density_per_m2,
        region_radius: raw.region_radius_m,
        quadrature_order: raw.quadrature_order.unwrap_or(DEFAULT_QUADRATURE_ORDER),
        min_distance: raw.min_distance_m.unwrap_or(DEFAULT_MIN_DISTANCE_M),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Loads and validates a config file.
pub fn load_config<P: AsRef<Path>>(path: P) -> Result<SystemConfig, ConfigError> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

/// The checked-in default scenario. Deployment geometry, path loss, fading,
/// and code-rate parameters follow the dense-IoT evaluation setup this
/// project targets; antenna gains, noise powers, and the logistic
/// coefficients are synthetic stand-ins (no published values exist) chosen
/// so that forward-mode coverage collapses across the 100-250 m band. See
/// the README parameter table before trusting absolute numbers.
pub fn default_config() -> SystemConfig {
    let link = |power: f64| LinkParams {
        power,
        g_tx: 1.0,
        g_rx: 1.0,
        noise_power: db_to_linear(-165.0), // 10^-16.5 W
        intercept: db_to_linear(-47.0),    // 10^-4.7
        exponent: 4.0,
        fading_rate: 2.0,
    };
    SystemConfig {
        uplink: link(1e-3),
        downlink: link(50e-3),
        code: FeedbackCodeParams {
            k_bits: 48,
            n_uses: 144,
            target_per: 1e-4,
            a_ratio: 4,
            u: [0.9, 15.0, 0.03, 4.0, 3.0, -0.8],
        },
        ap_density: 6e-3,
        region_radius: 300.0,
        quadrature_order: DEFAULT_QUADRATURE_ORDER,
        min_distance: DEFAULT_MIN_DISTANCE_M,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn default_json() -> String {
        r#"{
            "uplink": {
                "power_dbm": 0.0,
                "g_tx_dbi": 0.0, "g_rx_dbi": 0.0,
                "noise_power_dbm": -135.0,
                "intercept_db": -47.0,
                "exponent": 4.0, "fading_rate": 2.0
            },
            "downlink": {
                "power_w": 0.05,
                "g_tx_linear": 1.0, "g_rx_linear": 1.0,
                "noise_power_dbm": -135.0,
                "intercept_db": -47.0,
                "exponent": 4.0, "fading_rate": 2.0
            },
            "code": {
                "k_bits": 48, "n_uses": 144, "target_per": 1e-4,
                "a_ratio": 4, "u": [0.9, 15.0, 0.03, 4.0, 3.0, -0.8]
            },
            "ap_density_per_m2": 6e-3,
            "region_radius_m": 300.0
        }"#
        .to_string()
    }

    #[test]
    fn db_conversions() {
        assert_eq!(db_to_linear(0.0), 1.0);
        assert_eq!(db_to_linear(10.0), 10.0);
        assert!(linear_to_db(0.0).is_err());
        assert!(linear_to_db(-1.0).is_err());
    }

    proptest! {
        #[test]
        fn db_round_trip(x in -200.0..200.0f64) {
            let back = linear_to_db(db_to_linear(x)).unwrap();
            prop_assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn parses_reference_scenario() {
        let cfg = parse_config(&default_json()).unwrap();
        assert!((cfg.uplink.exponent - 4.0).abs() < 1e-15);
        assert!(((cfg.uplink.intercept - db_to_linear(-47.0)) / cfg.uplink.intercept).abs() < 1e-15);
        assert!((cfg.ap_density - 6e-3).abs() < 1e-18);
        assert!((cfg.uplink.power - 1e-3).abs() < 1e-12);
        assert!((cfg.downlink.power - 0.05).abs() < 1e-15);
        // noise: -135 dBm = 10^-16.5 W
        assert!(((cfg.uplink.noise_power - 10f64.powf(-16.5)) / cfg.uplink.noise_power).abs() < 1e-12);
        assert_eq!(cfg, default_config());
    }

    #[test]
    fn quadrature_order_defaults_to_16() {
        let cfg = parse_config(&default_json()).unwrap();
        assert_eq!(cfg.quadrature_order, 16);
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = default_json().replace("\"ap_density_per_m2\"", "\"ap_densty_per_m2\"");
        assert!(matches!(parse_config(&json), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn both_unit_forms_rejected() {
        let json = default_json().replace(
            "\"power_dbm\": 0.0,",
            "\"power_dbm\": 0.0, \"power_w\": 1e-3,",
        );
        assert!(matches!(parse_config(&json), Err(ConfigError::UnitChoice { .. })));
    }

    fn expect_constraint(cfg: SystemConfig, field_fragment: &str) {
        match cfg.validate() {
            Err(ConfigError::Constraint { field, .. }) => {
                assert!(
                    field.contains(field_fragment),
                    "expected violation naming `{field_fragment}`, got `{field}`"
                );
            }
            other => panic!("expected constraint violation for {field_fragment}, got {other:?}"),
        }
    }

    #[test]
    fn each_invariant_rejected_individually() {
        let base = default_config;

        let mut c = base();
        c.uplink.power = 0.0;
        expect_constraint(c, "uplink.power");

        let mut c = base();
        c.uplink.noise_power = -1.0;
        expect_constraint(c, "uplink.noise_power");

        let mut c = base();
        c.downlink.intercept = 0.0;
        expect_constraint(c, "downlink.intercept");

        let mut c = base();
        c.uplink.g_tx = 0.0;
        expect_constraint(c, "uplink.g_tx");

        let mut c = base();
        c.downlink.g_rx = -2.0;
        expect_constraint(c, "downlink.g_rx");

        let mut c = base();
        c.uplink.exponent = 2.0;
        expect_constraint(c, "uplink.exponent");

        let mut c = base();
        c.downlink.fading_rate = 0.0;
        expect_constraint(c, "downlink.fading_rate");

        let mut c = base();
        c.code.target_per = 0.0;
        expect_constraint(c, "target_per");

        let mut c = base();
        c.code.target_per = 1.0;
        expect_constraint(c, "target_per");

        let mut c = base();
        c.code.k_bits = 0;
        expect_constraint(c, "k_bits");

        let mut c = base();
        c.code.n_uses = 40;
        expect_constraint(c, "n_uses");

        let mut c = base();
        c.code.a_ratio = 0;
        expect_constraint(c, "a_ratio");

        let mut c = base();
        c.code.u[4] = 0.0;
        expect_constraint(c, "u[4]");

        let mut c = base();
        c.code.u[5] = 0.1;
        expect_constraint(c, "u[5]");

        let mut c = base();
        c.code.u[0] = -0.5;
        c.code.u[2] = 0.0;
        expect_constraint(c, "u[0]+u[2]*a");

        let mut c = base();
        c.ap_density = 0.0;
        expect_constraint(c, "ap_density");

        let mut c = base();
        c.region_radius = -10.0;
        expect_constraint(c, "region_radius");

        let mut c = base();
        c.quadrature_order = 0;
        expect_constraint(c, "quadrature_order");
    }

    #[test]
    fn serialize_load_round_trip_is_bit_identical() {
        let cfg = default_config();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: SystemConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg.uplink.power.to_bits(), back.uplink.power.to_bits());
        assert_eq!(
            cfg.uplink.noise_power.to_bits(),
            back.uplink.noise_power.to_bits()
        );
        assert_eq!(
            cfg.downlink.intercept.to_bits(),
            back.downlink.intercept.to_bits()
        );
        for i in 0..6 {
            assert_eq!(cfg.code.u[i].to_bits(), back.code.u[i].to_bits());
        }
        assert_eq!(cfg.ap_density.to_bits(), back.ap_density.to_bits());
        assert_eq!(cfg, back);
    }

    #[test]
    fn digest_is_stable_and_sensitive() {
        let cfg = default_config();
        assert_eq!(cfg.digest(), cfg.digest());
        let mut other = cfg.clone();
        other.ap_density *= 2.0;
        assert_ne!(cfg.digest(), other.digest());
        assert_eq!(cfg.digest().len(), 64);
    }
}
