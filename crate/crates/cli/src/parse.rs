// Copyright 2026 The stprep Authors
// SPDX-License-Identifier: Apache-2.0

//! Parsers for state and value-range arguments.

use std::f64::consts::FRAC_1_SQRT_2;

use stprep::quantum::{PureState, C64};
use stprep::{Error, Result};

/// A state given on the command line:
///
/// * `k` - computational basis state `k`
/// * `+`, `-` - single-qubit x eigenstates
/// * `bloch:THETA,PHI` - single-qubit state at those Bloch angles
/// * `amps:A0,A1,...` - explicit amplitudes such as `0.6`, `0.8i` or
///   `0.1+0.2i`, normalized on input
pub fn parse_state(spec: &str, dim: usize) -> Result<PureState> {
    let spec = spec.trim();
    let bad = |why: &str| Error::InvalidParameter(format!("state '{spec}': {why}"));
    if let Ok(k) = spec.parse::<usize>() {
        return PureState::basis(dim, k).map_err(|_| bad("basis index out of range"));
    }
    let single = || {
        if dim == 2 {
            Ok(())
        } else {
            Err(bad("only defined for one qubit"))
        }
    };
    match spec {
        "+" | "-" => {
            single()?;
            let s = if spec == "+" { 1.0 } else { -1.0 };
            return PureState::new(vec![C64::new(FRAC_1_SQRT_2, 0.0), C64::new(s * FRAC_1_SQRT_2, 0.0)]);
        }
        _ => {}
    }
    if let Some(rest) = spec.strip_prefix("bloch:") {
        single()?;
        let v: Vec<f64> = rest
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("expected bloch:THETA,PHI"))?;
        let [theta, phi] = v[..] else {
            return Err(bad("expected bloch:THETA,PHI"));
        };
        return PureState::new(vec![
            C64::new((theta / 2.0).cos(), 0.0),
            C64::from_polar((theta / 2.0).sin(), phi),
        ]);
    }
    if let Some(rest) = spec.strip_prefix("amps:") {
        let amps: Vec<C64> = rest
            .split(',')
            .map(|x| x.trim().parse::<C64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad("unparsable amplitude"))?;
        if amps.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: amps.len(),
            });
        }
        return PureState::normalized(amps);
    }
    Err(bad("expected an index, +, -, bloch:THETA,PHI or amps:..."))
}

fn tidy(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

/// `START:STOP:STEP` (inclusive), a comma list, or a single value.
pub fn parse_values(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter(format!("bad value list '{spec}'"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = spec.split(':').collect();
    let values = match parts[..] {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|k| tidy(start + k as f64 * step)).collect()
        }
        [_] => spec.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad()),
    };
    if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
        return Err(bad());
    }
    Ok(values)
}
