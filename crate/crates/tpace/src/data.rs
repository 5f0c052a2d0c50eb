//! Trial data types: the observed time/event doublet, per-subject records
//! with an optional maintenance phase, and the two-arm dataset container.
//!
//! Times are months as `f64`. A subject's follow-up splits into a
//! combination phase from randomization to `maintenance_onset` and a
//! maintenance phase from there to the observed endpoint. Subjects without
//! an onset never entered maintenance and spend their whole follow-up in
//! the combination phase.

use crate::error::{Error, Result};

// ── Arms ────────────────────────────────────────────────────────────────

/// Randomized arm of a subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize)]
pub enum Arm {
    Experimental,
    Control,
}

// ── Observed doublet ────────────────────────────────────────────────────

/// Observed follow-up time and event indicator for one subject.
///
/// `time` is the minimum of the latent event and censoring times; `event`
/// is true when the event was observed rather than censored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeDoublet {
    /// Observed time in months, non-negative.
    pub time: f64,
    /// True for an observed event, false for a censored record.
    pub event: bool,
}

impl TimeDoublet {
    pub fn new(time: f64, event: bool) -> Self {
        TimeDoublet { time, event }
    }
}

// ── Subject records ─────────────────────────────────────────────────────

/// One subject's observed data.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectRecord {
    /// Opaque unique identifier.
    pub id: String,
    pub arm: Arm,
    pub doublet: TimeDoublet,
    /// Months from randomization to maintenance start; `None` when the
    /// subject never entered maintenance.
    pub maintenance_onset: Option<f64>,
    /// Months from this subject's randomization to the administrative
    /// data cutoff.
    pub cutoff_time: f64,
}

impl SubjectRecord {
    /// Checks the invariants of an observed record: finite non-negative
    /// times, onset at or before the observed time, observed time at or
    /// before the cutoff.
    ///
    /// Counterfactually re-timed records are exempt from the cutoff bound
    /// (a re-timed event may fall past the administrative cutoff) and are
    /// not re-validated.
    pub fn validate(&self) -> Result<()> {
        let t = self.doublet.time;
        if !t.is_finite() || t < 0.0 {
            return Err(Error::Data(format!(
                "subject {}: time must be finite and non-negative, got {t}",
                self.id
            )));
        }
        if !self.cutoff_time.is_finite() || self.cutoff_time < 0.0 {
            return Err(Error::Data(format!(
                "subject {}: cutoff_time must be finite and non-negative, got {}",
                self.id, self.cutoff_time
            )));
        }
        if let Some(x) = self.maintenance_onset {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::Data(format!(
                    "subject {}: maintenance_onset must be finite and non-negative, got {x}",
                    self.id
                )));
            }
            if x > t {
                return Err(Error::Data(format!(
                    "subject {}: maintenance_onset {x} exceeds observed time {t}",
                    self.id
                )));
            }
        }
        if t > self.cutoff_time {
            return Err(Error::Data(format!(
                "subject {}: observed time {t} exceeds cutoff_time {}",
                self.id, self.cutoff_time
            )));
        }
        Ok(())
    }

    /// Maintenance-phase exposure `time - onset`, when the subject entered
    /// maintenance.
    pub fn maintenance_exposure(&self) -> Option<f64> {
        self.maintenance_onset.map(|x| self.doublet.time - x)
    }
}

// ── Dataset ─────────────────────────────────────────────────────────────

/// A two-arm cohort.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialDataset {
    pub subjects: Vec<SubjectRecord>,
}

impl TrialDataset {
    /// Builds a dataset and checks every invariant (per-record checks,
    /// both arms non-empty, unique ids).
    pub fn new(subjects: Vec<SubjectRecord>) -> Result<Self> {
        let ds = TrialDataset { subjects };
        ds.validate()?;
        Ok(ds)
    }

    /// Re-checks all invariants of an observed dataset.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for rec in &self.subjects {
            rec.validate()?;
            if !seen.insert(rec.id.as_str()) {
                return Err(Error::Data(format!("duplicate subject id {}", rec.id)));
            }
        }
        for arm in [Arm::Experimental, Arm::Control] {
            if self.n_in_arm(arm) == 0 {
                return Err(Error::Data(format!("arm {arm:?} is empty")));
            }
        }
        Ok(())
    }

    pub fn arm_subjects(&self, arm: Arm) -> impl Iterator<Item = &SubjectRecord> {
        self.subjects.iter().filter(move |s| s.arm == arm)
    }

    pub fn n_in_arm(&self, arm: Arm) -> usize {
        self.arm_subjects(arm).count()
    }

    /// Number of observed events across both arms.
    pub fn n_events(&self) -> usize {
        self.subjects.iter().filter(|s| s.doublet.event).count()
    }
}
