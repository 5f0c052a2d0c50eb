//! Kaplan-Meier product-limit estimation.

use crate::data::TimeDoublet;
use crate::error::{Error, Result};

/// One step of the survival curve, recorded at an event time.
#[derive(Debug, Clone, PartialEq)]
pub struct KMStep {
    pub time: f64,
    /// Survival estimate just after `time`.
    pub survival: f64,
    /// Risk-set size just before `time`.
    pub at_risk: usize,
    /// Events at exactly `time`.
    pub events: usize,
}

/// Estimated survival curve. Steps appear only at event times; the curve
/// starts at 1.0 and is piecewise constant between steps. A curve with no
/// steps (all records censored) is 1.0 everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct KMCurve {
    pub steps: Vec<KMStep>,
}

impl KMCurve {
    /// Survival estimate at time `t` (right-continuous).
    pub fn survival_at(&self, t: f64) -> f64 {
        let mut s = 1.0;
        for step in &self.steps {
            if step.time <= t {
                s = step.survival;
            } else {
                break;
            }
        }
        s
    }

    /// First time at which the survival estimate drops to 0.5 or below.
    pub fn median(&self) -> Option<f64> {
        self.steps.iter().find(|s| s.survival <= 0.5).map(|s| s.time)
    }
}

/// Product-limit estimator over one group of observations.
///
/// Censored records reduce the risk set at their time without producing a
/// survival step. Records censored at an event time are counted at risk
/// for that event and leave afterwards.
pub fn km_estimate(times_and_flags: &[TimeDoublet]) -> Result<KMCurve> {
    if times_and_flags.is_empty() {
        return Err(Error::Data("no observations".to_string()));
    }
    for d in times_and_flags {
        if !d.time.is_finite() || d.time < 0.0 {
            return Err(Error::Data(format!(
                "observation times must be finite and non-negative, got {}",
                d.time
            )));
        }
    }

    let mut order: Vec<usize> = (0..times_and_flags.len()).collect();
    order.sort_by(|&a, &b| {
        times_and_flags[a]
            .time
            .partial_cmp(&times_and_flags[b].time)
            .unwrap()
    });

    let n = times_and_flags.len();
    let mut steps = Vec::new();
    let mut survival = 1.0;
    let mut at_risk = n;
    let mut i = 0;
    while i < order.len() {
        let t = times_and_flags[order[i]].time;
        let mut events = 0;
        let mut leaving = 0;
        while i < order.len() && times_and_flags[order[i]].time == t {
            if times_and_flags[order[i]].event {
                events += 1;
            }
            leaving += 1;
            i += 1;
        }
        if events > 0 {
            survival *= 1.0 - events as f64 / at_risk as f64;
            steps.push(KMStep {
                time: t,
                survival,
                at_risk,
                events,
            });
        }
        at_risk -= leaving;
    }
    Ok(KMCurve { steps })
}
