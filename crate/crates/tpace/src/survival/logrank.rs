//! Two-group log-rank test.

use super::normal_cdf;
use crate::data::{Arm, TrialDataset};
use crate::error::{Error, Result};

/// Log-rank test result.
///
/// `z` is signed: negative when the experimental arm has fewer events than
/// expected under the null. `chi_square` equals `z * z`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LogRankResult {
    pub chi_square: f64,
    pub z: f64,
    pub p_two_sided: f64,
    /// Lower-tail probability of `z`; small when the experimental arm does
    /// better than expected.
    pub p_one_sided: f64,
    pub observed_experimental: f64,
    pub expected_experimental: f64,
    pub observed_control: f64,
    pub expected_control: f64,
}

/// Arm data pre-sorted for O(log n) risk-set counts.
struct ArmTimes {
    /// All observed times, ascending.
    all: Vec<f64>,
    /// Event times only, ascending.
    events: Vec<f64>,
}

impl ArmTimes {
    fn collect(dataset: &TrialDataset, arm: Arm) -> ArmTimes {
        let mut all = Vec::new();
        let mut events = Vec::new();
        for s in dataset.arm_subjects(arm) {
            all.push(s.doublet.time);
            if s.doublet.event {
                events.push(s.doublet.time);
            }
        }
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        events.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ArmTimes { all, events }
    }

    /// Number of subjects still at risk at `t` (observed time >= t).
    fn at_risk(&self, t: f64) -> usize {
        self.all.len() - self.all.partition_point(|&x| x < t)
    }

    /// Number of events at exactly `t`.
    fn events_at(&self, t: f64) -> usize {
        self.events.partition_point(|&x| x <= t) - self.events.partition_point(|&x| x < t)
    }
}

/// Standard two-group log-rank statistic with hypergeometric variance.
pub fn logrank_test(dataset: &TrialDataset) -> Result<LogRankResult> {
    let exp = ArmTimes::collect(dataset, Arm::Experimental);
    let ctl = ArmTimes::collect(dataset, Arm::Control);

    if exp.events.is_empty() && ctl.events.is_empty() {
        return Err(Error::Data("degenerate: no events".to_string()));
    }

    // Distinct pooled event times.
    let mut times: Vec<f64> = exp.events.iter().chain(ctl.events.iter()).copied().collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();

    let mut u = 0.0; // observed minus expected, experimental arm
    let mut v = 0.0;
    let mut observed_e = 0.0;
    let mut expected_e = 0.0;
    let mut observed_c = 0.0;
    let mut total_events = 0.0;
    for &t in &times {
        let n1 = exp.at_risk(t) as f64;
        let n0 = ctl.at_risk(t) as f64;
        let n = n1 + n0;
        let d1 = exp.events_at(t) as f64;
        let d0 = ctl.events_at(t) as f64;
        let d = d1 + d0;
        let e1 = d * n1 / n;
        u += d1 - e1;
        observed_e += d1;
        observed_c += d0;
        expected_e += e1;
        total_events += d;
        if n > 1.0 {
            v += d * (n1 / n) * (n0 / n) * (n - d) / (n - 1.0);
        }
    }

    if v <= 0.0 {
        return Err(Error::Numeric(
            "log-rank variance is zero; arms never share a risk set at an event time".to_string(),
        ));
    }

    let z = u / v.sqrt();
    let p_two_sided = 2.0 * normal_cdf(-z.abs());
    let p_one_sided = normal_cdf(z);
    Ok(LogRankResult {
        chi_square: z * z,
        z,
        p_two_sided,
        p_one_sided,
        observed_experimental: observed_e,
        expected_experimental: expected_e,
        observed_control: observed_c,
        expected_control: total_events - expected_e,
    })
}
