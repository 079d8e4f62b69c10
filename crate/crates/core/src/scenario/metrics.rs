use serde::Serialize;

use crate::error::{invalid, Result};

/// Convergence summary of one estimated parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub converged: bool,
    /// Seconds from `t_start` until the estimate enters the band for good.
    pub convergence_time: Option<f64>,
    /// Mean relative error over the final 10% of the samples.
    pub steady_state_error: f64,
    /// Largest excursion past the reference, relative to the step size.
    pub overshoot: f64,
    pub band: f64,
}

/// Convergence of `values` (sampled at `times`) toward `reference`.
///
/// Only samples at or after `t_start` count. The step size used for the
/// overshoot is the distance between the first counted sample and the
/// reference; a zero step gives zero overshoot.
pub fn convergence_metrics(
    times: &[f64],
    values: &[f64],
    reference: f64,
    band: f64,
    t_start: f64,
) -> Result<ConvergenceReport> {
    if times.len() != values.len() {
        return invalid("times and values differ in length");
    }
    if !(band > 0.0) {
        return invalid(format!("band must be positive, got {band}"));
    }
    if reference == 0.0 || !reference.is_finite() {
        return invalid("reference must be finite and non-zero");
    }
    let first = times.iter().position(|&t| t >= t_start);
    let Some(first) = first else {
        return invalid("trajectory has no samples after the start time");
    };
    let (t, v) = (&times[first..], &values[first..]);

    let inside = |x: f64| ((x - reference) / reference).abs() <= band;
    let mut entered = None;
    for k in (0..v.len()).rev() {
        if inside(v[k]) {
            entered = Some(k);
        } else {
            break;
        }
    }
    let convergence_time = entered.map(|k| t[k] - t_start);

    let tail = (v.len() / 10).max(1);
    let steady_state_error =
        v[v.len() - tail..].iter().map(|x| (x - reference) / reference).sum::<f64>() / tail as f64;

    let step = reference - v[0];
    let overshoot = if step == 0.0 {
        0.0
    } else {
        v.iter()
            .map(|x| (x - reference) / step)
            .fold(0.0_f64, f64::max)
    };

    Ok(ConvergenceReport {
        converged: convergence_time.is_some(),
        convergence_time,
        steady_state_error,
        overshoot,
        band,
    })
}
