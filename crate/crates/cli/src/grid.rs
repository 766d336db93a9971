//! Grid specifications: `start:stop:step` with inclusive stop, or a single
//! value. Grids must ascend.

use anyhow::{bail, Context, Result};

pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts.as_slice() {
        [single] => {
            vec![single
                .trim()
                .parse::<f64>()
                .with_context(|| format!("invalid grid value `{single}`"))?]
        }
        [start, stop, step] => {
            let start: f64 = start.trim().parse().context("invalid grid start")?;
            let stop: f64 = stop.trim().parse().context("invalid grid stop")?;
            let step: f64 = step.trim().parse().context("invalid grid step")?;
            if step <= 0.0 {
                bail!("grid step must be positive, got {step}");
            }
            if stop < start {
                bail!("grid must ascend: stop {stop} is below start {start}");
            }
            let n = ((stop - start) / step).round() as usize;
            let mut values: Vec<f64> = (0..=n)
                .map(|i| start + step * i as f64)
                .filter(|v| *v <= stop + 1e-9 * step)
                .collect();
            // keep the inclusive endpoint exact when it lands on the grid
            if let Some(last) = values.last_mut() {
                if (*last - stop).abs() < 1e-9 * step {
                    *last = stop;
                }
            }
            values
        }
        _ => bail!("grid spec `{spec}` is not `value` or `start:stop:step`"),
    };
    if values.is_empty() {
        bail!("grid spec `{spec}` produced no points");
    }
    for pair in values.windows(2) {
        if pair[1] <= pair[0] {
            bail!("grid must be strictly ascending");
        }
    }
    Ok(values)
}

/// Integer grid (feedback-ratio sweeps).
pub fn parse_grid_u32(spec: &str) -> Result<Vec<u32>> {
    parse_grid(spec)?
        .into_iter()
        .map(|v| {
            if v.fract() != 0.0 || v < 1.0 || v > u32::MAX as f64 {
                bail!("grid value {v} is not a positive integer");
            }
            Ok(v as u32)
        })
        .collect()
}

/// Comma-separated list of positive values.
pub fn parse_list(spec: &str) -> Result<Vec<f64>> {
    let values: Vec<f64> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("invalid list value `{s}`"))
        })
        .collect::<Result<_>>()?;
    if values.is_empty() {
        bail!("empty list");
    }
    for &v in &values {
        if v <= 0.0 {
            bail!("list values must be positive, got {v}");
        }
    }
    Ok(values)
}
