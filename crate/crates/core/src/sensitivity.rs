//! Approximation-error analysis for the closed-form chain.
//!
//! The closed form rests on three successive approximations of the
//! threshold function: exp(y) ≈ 1+y on the logistic denominator,
//! 1/(1+x) ≈ 1-x on the resulting reciprocal, and a truncated expansion of
//! the dB-to-linear exponentiation. Each step has a closed-form absolute
//! error (δ(y), δ(z), δ(v)); this module evaluates them per quadrature node
//! over (a, R) grids, checks the sign preconditions under which their
//! monotonicity claims hold, and measures the end-to-end absolute error of
//! the connectable-AP count against the exact-coverage oracle on a
//! (a × D × P_U) grid.
//!
//! Monotonicity is verified numerically, never assumed: coefficient sets
//! that violate a precondition get a report, not an assertion failure.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::SystemConfig;
use crate::coverage::{
    aps_feedback, coverage_feedback_exact, prop1_coefficients_with_ratio, taylor_bases,
    CoverageError,
};
use crate::specfun::{adaptive_simpson, gauss_laguerre, QuadratureRule, SpecFunError};

const LN_10: f64 = std::f64::consts::LN_10;

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error("step {step} regime violated at a={a}, R={distance}, node {node}: {detail}")]
    RegimeViolation {
        step: u8,
        a: u32,
        distance: f64,
        node: usize,
        detail: String,
    },
    #[error("node index {index} out of range for order-{order} rule")]
    NodeOutOfRange { index: usize, order: usize },
    #[error("axis `{0}` is empty")]
    EmptyAxis(&'static str),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    SpecFun(#[from] SpecFunError),
}

/// Absolute approximation error of one step at one (a, R, node) point.
/// Steps 1-2 act on the threshold in dB; step 3 is unitless.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StepErrorPoint {
    pub a_ratio: u32,
    pub distance: f64,
    pub node_index: usize,
    pub error: f64,
}

/// Which approximation step an error series belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Step {
    One,
    Two,
    Three,
}

impl Step {
    pub fn index(self) -> u8 {
        match self {
            Step::One => 1,
            Step::Two => 2,
            Step::Three => 3,
        }
    }
}

struct NodeTerms {
    w: f64,
    q: f64,
    b1: f64,
    b2: f64,
}

fn node_terms(
    cfg: &SystemConfig,
    rule: &QuadratureRule,
    a_ratio: u32,
    node: usize,
) -> Result<NodeTerms, SensitivityError> {
    if node >= rule.order {
        return Err(SensitivityError::NodeOutOfRange {
            index: node,
            order: rule.order,
        });
    }
    let bases = taylor_bases(cfg, rule, a_ratio);
    Ok(NodeTerms {
        w: bases.w[node],
        q: bases.q[node],
        b1: bases.w[node] + bases.q[node] * a_ratio as f64,
        b2: bases.b2,
    })
}

fn step1_delta(y: f64, u4: f64) -> f64 {
    1.0 / (y + 1.0 + u4) - 1.0 / (y.exp() + u4)
}

/// Absolute error of the exp(y) ≈ 1 + y step at one grid point:
/// y = B1 + B2·R^(-α_D) - 1 - u4, δ(y) = 1/(y+1+u4) - 1/(e^y + u4).
pub fn step1_error(
    a_ratio: u32,
    distance: f64,
    node: usize,
    cfg: &SystemConfig,
) -> Result<StepErrorPoint, SensitivityError> {
    let rule = gauss_laguerre(cfg.quadrature_order)?;
    step1_error_with_rule(a_ratio, distance, node, cfg, &rule)
}

fn step1_error_with_rule(
    a_ratio: u32,
    distance: f64,
    node: usize,
    cfg: &SystemConfig,
    rule: &QuadratureRule,
) -> Result<StepErrorPoint, SensitivityError> {
    let u4 = cfg.code.u[4];
    let t = node_terms(cfg, rule, a_ratio, node)?;
    let y = t.b1 + t.b2 * distance.powf(-cfg.downlink.exponent) - 1.0 - u4;
    if y + 1.0 + u4 <= 0.0 {
        return Err(SensitivityError::RegimeViolation {
            step: 1,
            a: a_ratio,
            distance,
            node,
            detail: format!("y + 1 + u4 = {} is nonpositive", y + 1.0 + u4),
        });
    }
    Ok(StepErrorPoint {
        a_ratio,
        distance,
        node_index: node,
        error: step1_delta(y, u4),
    })
}

/// Absolute error of the 1/(1+x) ≈ 1 - x step:
/// z = B2·R^(-α_D)/(W + Q·a), δ(z) = z²/((W + Q·a)(1 + z)).
pub fn step2_error(
    a_ratio: u32,
    distance: f64,
    node: usize,
    cfg: &SystemConfig,
) -> Result<StepErrorPoint, SensitivityError> {
    let rule = gauss_laguerre(cfg.quadrature_order)?;
    step2_error_with_rule(a_ratio, distance, node, cfg, &rule)
}

fn step2_error_with_rule(
    a_ratio: u32,
    distance: f64,
    node: usize,
    cfg: &SystemConfig,
    rule: &QuadratureRule,
) -> Result<StepErrorPoint, SensitivityError> {
    let t = node_terms(cfg, rule, a_ratio, node)?;
    let denom = t.w + t.q * a_ratio as f64;
    if denom <= 0.0 {
        return Err(SensitivityError::RegimeViolation {
            step: 2,
            a: a_ratio,
            distance,
            node,
            detail: format!("W + Q·a = {denom} is nonpositive"),
        });
    }
    let z = t.b2 * distance.powf(-cfg.downlink.exponent) / denom;
    if 1.0 + z <= 0.0 {
        return Err(SensitivityError::RegimeViolation {
            step: 2,
            a: a_ratio,
            distance,
            node,
            detail: format!("1 + z = {} is nonpositive", 1.0 + z),
        });
    }
    Ok(StepErrorPoint {
        a_ratio,
        distance,
        node_index: node,
        error: z * z / ((1.0 + z) * denom),
    })
}

/// Absolute error of the truncated exponentiation remainder:
/// v = -B2·R^(-α_D)/(B1·(1 + u5·B1)),
/// δ(v) = (ln²10/200)·(1/(W + Q·a) + u5)²·v².
pub fn step3_error(
    a_ratio: u32,
    distance: f64,
    node: usize,
    cfg: &SystemConfig,
) -> Result<StepErrorPoint, SensitivityError> {
    let rule = gauss_laguerre(cfg.quadrature_order)?;
    step3_error_with_rule(a_ratio, distance, node, cfg, &rule)
}

fn step3_error_with_rule(
    a_ratio: u32,
    distance: f64,
    node: usize,
    cfg: &SystemConfig,
    rule: &QuadratureRule,
) -> Result<StepErrorPoint, SensitivityError> {
    let u5 = cfg.code.u[5];
    let t = node_terms(cfg, rule, a_ratio, node)?;
    let scale = t.b1 * (1.0 + u5 * t.b1);
    if scale == 0.0 {
        return Err(SensitivityError::RegimeViolation {
            step: 3,
            a: a_ratio,
            distance,
            node,
            detail: "B1·(1 + u5·B1) is zero".into(),
        });
    }
    let v = -t.b2 * distance.powf(-cfg.downlink.exponent) / scale;
    let prefactor = 1.0 / (t.w + t.q * a_ratio as f64) + u5;
    Ok(StepErrorPoint {
        a_ratio,
        distance,
        node_index: node,
        error: LN_10 * LN_10 / 200.0 * prefactor * prefactor * v * v,
    })
}

/// Lower bound on y(a, R) over a >= 1, a per-node diagnostic:
/// Γ_k = u1 + u3 + 10(u0 + u2)(lg Z_{1,k} - 1/ln10).
pub fn step1_lower_bound(node: usize, cfg: &SystemConfig) -> Result<f64, SensitivityError> {
    let [u0, u1, u2, u3, _, _] = cfg.code.u;
    let rule = gauss_laguerre(cfg.quadrature_order)?;
    if node >= rule.order {
        return Err(SensitivityError::NodeOutOfRange {
            index: node,
            order: rule.order,
        });
    }
    let bases = taylor_bases(cfg, &rule, 1);
    Ok(u1 + u3 + 10.0 * (u0 + u2) * (bases.z1[node].log10() - 1.0 / LN_10))
}

/// Evaluates one step's error at every (a, R, node) grid point.
pub fn step_error_grid(
    step: Step,
    cfg: &SystemConfig,
    a_values: &[u32],
    r_values: &[f64],
) -> Result<Vec<StepErrorPoint>, SensitivityError> {
    if a_values.is_empty() {
        return Err(SensitivityError::EmptyAxis("a"));
    }
    if r_values.is_empty() {
        return Err(SensitivityError::EmptyAxis("R"));
    }
    let rule = gauss_laguerre(cfg.quadrature_order)?;
    let mut out = Vec::with_capacity(a_values.len() * r_values.len() * rule.order);
    for &a in a_values {
        for &r in r_values {
            for k in 0..rule.order {
                let point = match step {
                    Step::One => step1_error_with_rule(a, r, k, cfg, &rule)?,
                    Step::Two => step2_error_with_rule(a, r, k, cfg, &rule)?,
                    Step::Three => step3_error_with_rule(a, r, k, cfg, &rule)?,
                };
                out.push(point);
            }
        }
    }
    Ok(out)
}

/// Weight-aggregated step error Σ w_k·δ_k at one (a, R) point, connecting
/// the per-node errors to the final quadrature sum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AggregatedStepError {
    pub a_ratio: u32,
    pub distance: f64,
    pub error: f64,
}

pub fn aggregate_step_errors(
    step: Step,
    cfg: &SystemConfig,
    a_values: &[u32],
    r_values: &[f64],
) -> Result<Vec<AggregatedStepError>, SensitivityError> {
    if a_values.is_empty() {
        return Err(SensitivityError::EmptyAxis("a"));
    }
    if r_values.is_empty() {
        return Err(SensitivityError::EmptyAxis("R"));
    }
    let rule = gauss_laguerre(cfg.quadrature_order)?;
    let mut out = Vec::with_capacity(a_values.len() * r_values.len());
    for &a in a_values {
        for &r in r_values {
            let mut acc = 0.0;
            for k in 0..rule.order {
                let point = match step {
                    Step::One => step1_error_with_rule(a, r, k, cfg, &rule)?,
                    Step::Two => step2_error_with_rule(a, r, k, cfg, &rule)?,
                    Step::Three => step3_error_with_rule(a, r, k, cfg, &rule)?,
                };
                acc += rule.weights[k] * point.error;
            }
            out.push(AggregatedStepError {
                a_ratio: a,
                distance: r,
                error: acc,
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Monotonicity verdicts
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    InsufficientAxis,
    PreconditionViolated,
}

/// Outcome of one monotonicity claim over the evaluated grid.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub claim: &'static str,
    pub status: VerdictStatus,
    pub detail: String,
}

#[derive(Clone, Copy)]
enum Direction {
    Decreasing,
    Increasing,
}

fn check_series(values: &[(f64, f64)], dir: Direction) -> Option<String> {
    for pair in values.windows(2) {
        let ((x0, v0), (x1, v1)) = (pair[0], pair[1]);
        let ok = match dir {
            Direction::Decreasing => v1 < v0,
            Direction::Increasing => v1 > v0,
        };
        if !ok {
            return Some(format!("violation between axis={x0} ({v0:e}) and axis={x1} ({v1:e})"));
        }
    }
    None
}

/// Numerically evaluates the sign preconditions behind the per-step
/// monotonicity claims, then checks each claim on the weight-aggregated
/// error series. Claims whose preconditions fail are reported as
/// `PreconditionViolated` rather than asserted.
pub fn monotonicity_report(
    cfg: &SystemConfig,
    a_values: &[u32],
    r_values: &[f64],
) -> Result<Vec<Verdict>, SensitivityError> {
    if a_values.is_empty() {
        return Err(SensitivityError::EmptyAxis("a"));
    }
    if r_values.is_empty() {
        return Err(SensitivityError::EmptyAxis("R"));
    }
    let [u0, _u1, u2, _u3, u4, u5] = cfg.code.u;
    let rule = gauss_laguerre(cfg.quadrature_order)?;
    let a_min = *a_values.iter().min().unwrap();

    // config-level premise: threshold decreasing in downlink SNR for every
    // swept ratio
    let slope_violation = a_values
        .iter()
        .find(|&&a| u0 + u2 * a as f64 <= 0.0)
        .copied();

    // step-1 preconditions at the smallest swept ratio: y > 0 and the sign
    // chain s(y) < 0, s'(y) < 0, s''(y) < 0 over the grid
    let mut step1_pre: Option<String> = slope_violation
        .map(|a| format!("u0 + u2·a = {} at a={a}", u0 + u2 * a as f64));
    if step1_pre.is_none() {
        'outer1: for &r in r_values {
            for k in 0..rule.order {
                let t = node_terms(cfg, &rule, a_min, k)?;
                let y = t.b1 + t.b2 * r.powf(-cfg.downlink.exponent) - 1.0 - u4;
                let s = (y + 1.0) * (y + 1.0) - y.exp() + 2.0 * u4;
                let sp = 2.0 * y + 2.0 - y.exp();
                let spp = 2.0 - y.exp();
                if !(y > 0.0 && s < 0.0 && sp < 0.0 && spp < 0.0) {
                    step1_pre = Some(format!(
                        "sign chain fails at a={a_min}, R={r}, node {k}: y={y:.3}, s={s:.3e}, s'={sp:.3e}, s''={spp:.3e}"
                    ));
                    break 'outer1;
                }
            }
        }
    }

    // step-2 preconditions: z > 0 with W + Q·a > 0, and z decreasing in the
    // ratio (W·u2 - Q·u0 < 0)
    let mut step2_pre: Option<String> =
        slope_violation.map(|a| format!("u0 + u2·a nonpositive at a={a}"));
    if step2_pre.is_none() {
        'outer2: for k in 0..rule.order {
            let t = node_terms(cfg, &rule, a_min, k)?;
            if t.w * u2 - t.q * u0 >= 0.0 {
                step2_pre = Some(format!("W·u2 - Q·u0 = {} at node {k}", t.w * u2 - t.q * u0));
                break;
            }
            for &a in a_values {
                let denom = t.w + t.q * a as f64;
                if denom <= 0.0 {
                    step2_pre = Some(format!("W + Q·a = {denom} at a={a}, node {k}"));
                    break 'outer2;
                }
            }
        }
    }

    // step-3 preconditions: u2·u5 < 0 and v decreasing at the smallest ratio
    // (finite difference across the first axis step)
    let mut step3_pre: Option<String> =
        slope_violation.map(|a| format!("u0 + u2·a nonpositive at a={a}"));
    if step3_pre.is_none() && u2 * u5 >= 0.0 {
        step3_pre = Some(format!("u2·u5 = {} is not negative", u2 * u5));
    }
    if step3_pre.is_none() {
        let v_at = |a: f64, w: f64, q: f64, b2: f64, r: f64| {
            let b1 = w + q * a;
            -b2 * r.powf(-cfg.downlink.exponent) / (b1 * (1.0 + u5 * b1))
        };
        'outer3: for &r in r_values {
            for k in 0..rule.order {
                let t = node_terms(cfg, &rule, a_min, k)?;
                let h = 1e-4;
                let slope = (v_at(a_min as f64 + h, t.w, t.q, t.b2, r)
                    - v_at(a_min as f64, t.w, t.q, t.b2, r))
                    / h;
                if slope >= 0.0 {
                    step3_pre = Some(format!("v'({a_min}, {r}) = {slope:e} at node {k}"));
                    break 'outer3;
                }
            }
        }
    }

    let mut verdicts = Vec::new();
    let claims: [(&'static str, Step, Direction, bool, &Option<String>); 6] = [
        ("step1 error decreasing in a", Step::One, Direction::Decreasing, true, &step1_pre),
        ("step1 error increasing in R", Step::One, Direction::Increasing, false, &step1_pre),
        ("step2 error decreasing in a", Step::Two, Direction::Decreasing, true, &step2_pre),
        ("step2 error decreasing in R", Step::Two, Direction::Decreasing, false, &step2_pre),
        ("step3 error decreasing in a", Step::Three, Direction::Decreasing, true, &step3_pre),
        ("step3 error decreasing in R", Step::Three, Direction::Decreasing, false, &step3_pre),
    ];

    for (claim, step, dir, along_a, precondition) in claims {
        let axis_len = if along_a { a_values.len() } else { r_values.len() };
        if let Some(reason) = precondition {
            verdicts.push(Verdict {
                claim,
                status: VerdictStatus::PreconditionViolated,
                detail: reason.clone(),
            });
            continue;
        }
        if axis_len < 2 {
            verdicts.push(Verdict {
                claim,
                status: VerdictStatus::InsufficientAxis,
                detail: "insufficient axis length".into(),
            });
            continue;
        }
        let agg = aggregate_step_errors(step, cfg, a_values, r_values)?;
        let mut failure = None;
        if along_a {
            for &r in r_values {
                let series: Vec<(f64, f64)> = agg
                    .iter()
                    .filter(|p| p.distance == r)
                    .map(|p| (p.a_ratio as f64, p.error))
                    .collect();
                if let Some(msg) = check_series(&series, dir) {
                    failure = Some(format!("at R={r}: {msg}"));
                    break;
                }
            }
        } else {
            for &a in a_values {
                let series: Vec<(f64, f64)> = agg
                    .iter()
                    .filter(|p| p.a_ratio == a)
                    .map(|p| (p.distance, p.error))
                    .collect();
                if let Some(msg) = check_series(&series, dir) {
                    failure = Some(format!("at a={a}: {msg}"));
                    break;
                }
            }
        }
        verdicts.push(match failure {
            None => Verdict {
                claim,
                status: VerdictStatus::Pass,
                detail: String::new(),
            },
            Some(detail) => Verdict {
                claim,
                status: VerdictStatus::Fail,
                detail,
            },
        });
    }
    Ok(verdicts)
}

// ---------------------------------------------------------------------------
// End-to-end AP-count error grid
// ---------------------------------------------------------------------------

/// Absolute error of the closed-form connectable-AP count over an
/// (a × D × P_U) grid, against numerical integration of the exact coverage
/// integrand.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorGrid {
    pub a_values: Vec<u32>,
    /// Region radii in meters, ascending.
    pub d_values: Vec<f64>,
    /// Uplink powers in watts, ascending.
    pub pu_values: Vec<f64>,
    /// Row-major |closed - oracle|, indexed [a][D][P_U].
    pub cells: Vec<f64>,
    /// Which oracle produced the ground truth.
    pub reference: String,
}

impl ErrorGrid {
    pub fn error_at(&self, ia: usize, id: usize, ip: usize) -> f64 {
        self.cells[(ia * self.d_values.len() + id) * self.pu_values.len() + ip]
    }

    /// Verifies the error is nonincreasing along the ratio axis at every
    /// (D, P_U) cell; `slack` absorbs oracle tolerance. Returns the first
    /// violation.
    pub fn check_nonincreasing_in_a(&self, slack: f64) -> Result<(), String> {
        for id in 0..self.d_values.len() {
            for ip in 0..self.pu_values.len() {
                for ia in 1..self.a_values.len() {
                    let prev = self.error_at(ia - 1, id, ip);
                    let cur = self.error_at(ia, id, ip);
                    if cur > prev + slack {
                        return Err(format!(
                            "error grew from {prev:e} to {cur:e} between a={} and a={} at D={}, P_U={} W",
                            self.a_values[ia - 1],
                            self.a_values[ia],
                            self.d_values[id],
                            self.pu_values[ip]
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Long-form CSV: a, d_m, p_u_mw, abs_error.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "a,d_m,p_u_mw,abs_error")?;
        for (ia, &a) in self.a_values.iter().enumerate() {
            for (id, &d) in self.d_values.iter().enumerate() {
                for (ip, &pu) in self.pu_values.iter().enumerate() {
                    writeln!(out, "{a},{d},{},{}", pu * 1e3, self.error_at(ia, id, ip))?;
                }
            }
        }
        Ok(())
    }
}

const MF_ORACLE_TOL: f64 = 1e-8;

/// Oracle count: ∫₀^D φ_exact(R)·λ·2πR dR by cumulative adaptive
/// integration over the ascending radii, to total tolerance.
fn mf_oracle_counts(cfg: &SystemConfig, d_values: &[f64]) -> Result<Vec<f64>, SensitivityError> {
    let integrand = |r: f64| {
        if r <= 0.0 {
            return 0.0; // φ -> 1 and the area element vanishes
        }
        let phi = coverage_feedback_exact(r, cfg).expect("positive radius");
        phi * cfg.ap_density * 2.0 * std::f64::consts::PI * r
    };
    let seg_tol = MF_ORACLE_TOL / (2.0 * d_values.len() as f64);
    let mut counts = Vec::with_capacity(d_values.len());
    let mut acc = 0.0;
    let mut lo = 0.0;
    for &d in d_values {
        acc += adaptive_simpson(&integrand, lo, d, seg_tol)?;
        counts.push(acc);
        lo = d;
    }
    Ok(counts)
}

/// Builds the end-to-end error grid. Each (a, P_U) combination is
/// independent and evaluated in parallel.
pub fn mf_error_grid(
    cfg: &SystemConfig,
    a_values: &[u32],
    d_values: &[f64],
    pu_values: &[f64],
) -> Result<ErrorGrid, SensitivityError> {
    if a_values.is_empty() {
        return Err(SensitivityError::EmptyAxis("a"));
    }
    if d_values.is_empty() {
        return Err(SensitivityError::EmptyAxis("D"));
    }
    if pu_values.is_empty() {
        return Err(SensitivityError::EmptyAxis("P_U"));
    }
    let rule = gauss_laguerre(cfg.quadrature_order)?;
    let combos: Vec<(usize, usize)> = (0..a_values.len())
        .flat_map(|ia| (0..pu_values.len()).map(move |ip| (ia, ip)))
        .collect();
    let per_combo: Vec<(usize, usize, Vec<f64>)> = combos
        .into_par_iter()
        .map(|(ia, ip)| -> Result<(usize, usize, Vec<f64>), SensitivityError> {
            let mut variant = cfg.clone();
            variant.code.a_ratio = a_values[ia];
            variant.uplink.power = pu_values[ip];
            let coeffs = prop1_coefficients_with_ratio(&variant, &rule, a_values[ia])?;
            let oracle = mf_oracle_counts(&variant, d_values)?;
            let mut errors = Vec::with_capacity(d_values.len());
            for (id, &d) in d_values.iter().enumerate() {
                let closed = aps_feedback(d, &coeffs, &variant)?;
                errors.push((closed - oracle[id]).abs());
            }
            Ok((ia, ip, errors))
        })
        .collect::<Result<_, _>>()?;
    let (nd, np) = (d_values.len(), pu_values.len());
    let mut cells = vec![0.0; a_values.len() * nd * np];
    for (ia, ip, errors) in per_combo {
        for (id, err) in errors.into_iter().enumerate() {
            cells[(ia * nd + id) * np + ip] = err;
        }
    }
    Ok(ErrorGrid {
        a_values: a_values.to_vec(),
        d_values: d_values.to_vec(),
        pu_values: pu_values.to_vec(),
        cells,
        reference: format!(
            "adaptive integration of the exact coverage integrand (abs tol {MF_ORACLE_TOL:e})"
        ),
    })
}
