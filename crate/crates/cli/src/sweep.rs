//! Value lists given as `lo:hi:n` ranges or comma-separated values.

use crate::error::{validation, CliResult};
use oscillotex_core::stokes2::geometric_sweep;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spacing {
    Linear,
    Geometric,
}

fn num(s: &str) -> CliResult<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => validation(format!("not a finite number: {s:?}")),
    }
}

pub fn parse_list(s: &str, spacing: Spacing) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.len() {
        1 => {
            let v = s.split(',').map(num).collect::<CliResult<Vec<f64>>>()?;
            if v.is_empty() {
                return validation("empty value list");
            }
            Ok(v)
        }
        3 => {
            let lo = num(parts[0])?;
            let hi = num(parts[1])?;
            let n: usize = match parts[2].trim().parse() {
                Ok(n) if n >= 1 => n,
                _ => return validation(format!("range count must be a positive integer: {s:?}")),
            };
            match spacing {
                Spacing::Geometric => Ok(geometric_sweep(lo, hi, n)?),
                Spacing::Linear => {
                    if n == 1 {
                        return Ok(vec![lo]);
                    }
                    Ok((0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect())
                }
            }
        }
        _ => validation(format!("expected lo:hi:n or a comma list, got {s:?}")),
    }
}

/// Frequencies from a single `--omega` or an `--omega-sweep` list.
pub fn frequencies(omega: Option<f64>, sweep: Option<&str>, default: f64) -> CliResult<Vec<f64>> {
    let w = match (omega, sweep) {
        (Some(_), Some(_)) => return validation("give either --omega or --omega-sweep, not both"),
        (None, Some(s)) => parse_list(s, Spacing::Geometric)?,
        (Some(w), None) => vec![w],
        (None, None) => vec![default],
    };
    if w.iter().any(|x| !(*x > 0.0)) {
        return validation("frequencies must be positive");
    }
    Ok(w)
}

pub fn parse_pair(s: &str) -> CliResult<(f64, f64)> {
    let v = s.split(',').map(num).collect::<CliResult<Vec<f64>>>()?;
    match v[..] {
        [a, b] => Ok((a, b)),
        _ => validation(format!("expected two comma-separated numbers, got {s:?}")),
    }
}
