//! Minimum detectable difference for a two-arm time-to-event comparison.

use super::normal_quantile;
use crate::error::{Error, Result};

/// Smallest hazard ratio below 1 that reaches two-sided significance
/// `alpha` with `events` observed events and allocation fraction
/// `allocation` in the experimental arm, under the asymptotic normal
/// approximation to the log hazard ratio (Schoenfeld variance
/// 1 / (d a (1 - a))):
///
///   mdd = exp(-z_{1-alpha/2} / sqrt(d a (1 - a)))
///
/// A fitted hazard ratio at or below this value is detectable at level
/// `alpha`.
pub fn mdd(events: usize, allocation: f64, alpha: f64) -> Result<f64> {
    if events == 0 {
        return Err(Error::Parameter("events must be positive".to_string()));
    }
    if !(allocation > 0.0 && allocation < 1.0) {
        return Err(Error::Parameter(format!(
            "allocation fraction must lie strictly between 0 and 1, got {allocation}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!(
            "alpha must lie strictly between 0 and 1, got {alpha}"
        )));
    }
    let z = normal_quantile(1.0 - alpha / 2.0);
    let d = events as f64;
    Ok((-z / (d * allocation * (1.0 - allocation)).sqrt()).exp())
}
