//! Value lists: `a,b,c` or inclusive ranges `start:step:end`.

use anyhow::{bail, Context, Result};

const RANGE_SLACK: f64 = 1e-12;
const MAX_POINTS: usize = 1_000_000;

pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if part.contains(':') {
            out.extend(parse_range(part)?);
        } else {
            out.push(parse_number(part)?);
        }
    }
    Ok(out)
}

fn parse_number(s: &str) -> Result<f64> {
    let v: f64 = s.parse().with_context(|| format!("invalid number {s:?}"))?;
    if !v.is_finite() {
        bail!("non-finite value {s:?}");
    }
    Ok(v)
}

fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, step, end] = parts[..] else {
        bail!("range {s:?} must have the form start:step:end");
    };
    let (start, step, end) = (
        parse_number(start)?,
        parse_number(step)?,
        parse_number(end)?,
    );
    if step == 0.0 {
        bail!("range {s:?} has zero step");
    }
    let span = (end - start) / step;
    if span < -RANGE_SLACK {
        bail!("range {s:?} never reaches its end");
    }
    let count = (span + RANGE_SLACK).floor() as usize + 1;
    if count > MAX_POINTS {
        bail!("range {s:?} has too many points");
    }
    Ok((0..count)
        .map(|k| {
            let v = start + k as f64 * step;
            // land exactly on the end point when rounding left us within slack
            if (v - end).abs() <= RANGE_SLACK * end.abs().max(1.0) {
                end
            } else {
                v
            }
        })
        .collect())
}

pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    parse_values(spec)?
        .into_iter()
        .map(|v| {
            if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
                bail!("seed {v:?} is not a non-negative integer");
            }
            Ok(v as u64)
        })
        .collect()
}
