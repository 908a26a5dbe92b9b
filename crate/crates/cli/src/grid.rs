//! Numeric grids given on the command line: `start:stop:step`, a comma
//! list, or a single value.

use anyhow::{bail, Context, Result};

const TOLERANCE: f64 = 1e-9;

/// Parses a grid. A range includes `stop` when it is reached within 1e-9.
/// Values are rounded to nine decimals so `0.1` steps print cleanly.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    let num = |s: &str| -> Result<f64> {
        let v: f64 = s.trim().parse().with_context(|| format!("not a number: {s:?}"))?;
        if !v.is_finite() {
            bail!("not finite: {s:?}");
        }
        Ok(v)
    };
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step <= 0.0 {
                bail!("range step must be positive in {spec:?}");
            }
            if stop < start {
                bail!("range stop below start in {spec:?}");
            }
            let mut out = Vec::new();
            let mut i = 0u32;
            loop {
                let v = start + f64::from(i) * step;
                if v > stop + TOLERANCE {
                    break;
                }
                out.push(snap(v));
                i += 1;
            }
            Ok(out)
        }
        [_] => spec.split(',').map(num).collect(),
        _ => bail!("expected start:stop:step, a comma list or a value, got {spec:?}"),
    }
}

fn snap(v: f64) -> f64 {
    let r = (v * 1e9).round() / 1e9;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}
