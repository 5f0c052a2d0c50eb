//! Counterfactual re-timing of maintenance-phase exposure.
//!
//! A subject who reaches maintenance splits follow-up into a combination
//! phase of length X = x and a maintenance phase of length Y = s - x. The
//! structural model stretches or shrinks only the maintenance phase:
//!
//!   t' = x + lambda * (s - x)
//!
//! Effect 1 re-times the control arm with lambda >= 1, answering "how well
//! would control subjects have done had they received a maintenance
//! benefit of size lambda". Effect 2 re-times the experimental arm with
//! 0 < lambda <= 1, answering "how much of the experimental maintenance
//! benefit can be taken away". Either way the other arm passes through
//! untouched, as do subjects who never reach maintenance.
//!
//! Re-timed events can run past a subject's censoring horizon (Effect 1)
//! and censored records can be converted to events after imputing the
//! latent event time (Effect 2); the case analysis lives in
//! [`counterfactual_effect1`] and [`counterfactual_effect2`].
//!
//! # Randomness
//!
//! All latent draws come from per-subject streams keyed by
//! (master seed, replicate index, subject id) — see [`RngStream`]. Because
//! the stream does not depend on lambda, sweeping lambda under one seed
//! re-uses identical latent draws (common random numbers), which makes the
//! downstream hazard-ratio curves monotone in lambda and bisection on them
//! well-posed.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

use crate::data::{Arm, SubjectRecord, TimeDoublet, TrialDataset};
use crate::error::{Error, Result};

/// Which arm gets re-timed, and which side of 1 lambda lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Effect {
    /// Re-time the control arm; lambda >= 1 inflates its maintenance phase.
    #[serde(rename = "effect_1")]
    One,
    /// Re-time the experimental arm; lambda <= 1 deflates its maintenance
    /// phase.
    #[serde(rename = "effect_2")]
    Two,
}

impl Effect {
    pub fn lambda_valid(self, lambda: f64) -> bool {
        match self {
            Effect::One => lambda.is_finite() && lambda >= 1.0,
            Effect::Two => lambda.is_finite() && lambda > 0.0 && lambda <= 1.0,
        }
    }
}

/// A validated (effect, lambda) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpsftParams {
    pub effect: Effect,
    pub lambda: f64,
}

impl RpsftParams {
    pub fn new(effect: Effect, lambda: f64) -> Result<Self> {
        if !effect.lambda_valid(lambda) {
            let range = match effect {
                Effect::One => "lambda >= 1",
                Effect::Two => "0 < lambda <= 1",
            };
            return Err(Error::Parameter(format!(
                "{effect:?} re-timing requires {range}, got {lambda}"
            )));
        }
        Ok(RpsftParams { effect, lambda })
    }
}

/// Which censoring model to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CensoringKind {
    AdministrativeCutoff,
    ParametricFit,
}

/// Source of the latent censoring time r used when an Effect 1 re-timed
/// event overshoots follow-up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CensoringModel {
    /// r is the subject's own administrative cutoff; fully deterministic.
    AdministrativeCutoff,
    /// r is drawn from an exponential fitted to the censoring process,
    /// conditional on r being at least the subject's observed time.
    ParametricExponential { rate: f64 },
}

/// Exponential model for maintenance-phase event times on the
/// experimental arm, used to impute latent events behind censored records
/// in Effect 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventModel {
    pub rate: f64,
}

// ── Randomness ──────────────────────────────────────────────────────────

/// Deterministic per-subject random streams.
///
/// The generator for a subject is ChaCha12 seeded with
/// SHA-256("tpace.cf.v1" || master_seed as 8 LE bytes || replicate as
/// 4 LE bytes || subject id bytes). Streams are therefore independent
/// across subjects and replicates, identical across runs, and crucially
/// independent of lambda.
///
/// Draw protocol, per subject, in stream order:
/// - Effect 1 under a parametric censoring model, record is an event:
///   exponential candidates (u from the open unit interval,
///   r = -ln(u)/rate) drawn until one is >= the observed time.
/// - Effect 2, record censored after maintenance onset: one exponential
///   residual draw.
/// - every other record consumes no draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub replicate: u32,
}

impl RngStream {
    pub fn new(master_seed: u64, replicate: u32) -> Self {
        RngStream {
            master_seed,
            replicate,
        }
    }

    pub fn subject_rng(&self, subject_id: &str) -> ChaCha12Rng {
        let mut h = Sha256::new();
        h.update(b"tpace.cf.v1");
        h.update(self.master_seed.to_le_bytes());
        h.update(self.replicate.to_le_bytes());
        h.update(subject_id.as_bytes());
        ChaCha12Rng::from_seed(h.finalize().into())
    }
}

/// Strictly positive exponential draw; u is sampled from the open unit
/// interval so -ln(u) can be neither 0 nor infinite.
fn exp_draw<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.sample(Open01);
    -u.ln() / rate
}

const REJECTION_CAP: usize = 10_000;

// ── Core arithmetic ─────────────────────────────────────────────────────

/// Maintenance-phase re-timing t' = onset + lambda * (time - onset).
///
/// lambda = 1 short-circuits to `time` so the anchor is exact to the bit,
/// not merely up to floating-point round trip.
pub fn retime(onset: f64, time: f64, lambda: f64) -> f64 {
    if lambda == 1.0 {
        time
    } else {
        onset + lambda * (time - onset)
    }
}

/// Effect 1 case split for an observed event: the stretched event stands
/// if it happens by the latent censoring time r, otherwise the record is
/// censored at r.
fn effect1_event_doublet(onset: f64, time: f64, latent_censor: f64, lambda: f64) -> TimeDoublet {
    let t = retime(onset, time, lambda);
    if t <= latent_censor {
        TimeDoublet::new(t, true)
    } else {
        TimeDoublet::new(latent_censor, false)
    }
}

/// Effect 2 case split for a censored record with imputed full maintenance
/// duration y: the shrunk latent event surfaces if it fits inside the
/// observed maintenance exposure (the censoring horizon r equals the
/// observed time here), otherwise the record stays as it was.
fn effect2_censored_doublet(onset: f64, time: f64, imputed_y: f64, lambda: f64) -> TimeDoublet {
    if lambda * imputed_y <= time - onset {
        TimeDoublet::new(onset + lambda * imputed_y, true)
    } else {
        TimeDoublet::new(time, false)
    }
}

// ── Model fitting ───────────────────────────────────────────────────────

/// Fits the censoring model on the pooled arms.
///
/// For the parametric fit the censoring indicator is reversed: original
/// censorings become the "events" of the censoring process and original
/// events its censored observations, giving the exponential MLE
/// rate = censorings / total follow-up time.
pub fn fit_censoring_model(dataset: &TrialDataset, kind: CensoringKind) -> Result<CensoringModel> {
    match kind {
        CensoringKind::AdministrativeCutoff => Ok(CensoringModel::AdministrativeCutoff),
        CensoringKind::ParametricFit => {
            let censorings = dataset
                .subjects
                .iter()
                .filter(|s| !s.doublet.event)
                .count();
            if censorings == 0 {
                return Err(Error::Data(
                    "cannot fit a parametric censoring model: no censored observations"
                        .to_string(),
                ));
            }
            let exposure: f64 = dataset.subjects.iter().map(|s| s.doublet.time).sum();
            if exposure <= 0.0 {
                return Err(Error::Data(
                    "cannot fit a parametric censoring model: zero total follow-up time"
                        .to_string(),
                ));
            }
            Ok(CensoringModel::ParametricExponential {
                rate: censorings as f64 / exposure,
            })
        }
    }
}

/// Fits the exponential event model to maintenance-phase exposure on the
/// experimental arm: rate = maintenance-phase events / total time from
/// maintenance onset to event or censoring.
pub fn fit_event_model(dataset: &TrialDataset) -> Result<EventModel> {
    let mut events = 0usize;
    let mut exposure = 0.0;
    for s in dataset.arm_subjects(Arm::Experimental) {
        if let Some(y) = s.maintenance_exposure() {
            exposure += y;
            if s.doublet.event {
                events += 1;
            }
        }
    }
    if events == 0 {
        return Err(Error::Data(
            "cannot fit the maintenance event model: no experimental-arm maintenance-phase events"
                .to_string(),
        ));
    }
    if exposure <= 0.0 {
        return Err(Error::Data(
            "cannot fit the maintenance event model: zero maintenance-phase exposure".to_string(),
        ));
    }
    Ok(EventModel {
        rate: events as f64 / exposure,
    })
}

// ── Counterfactual construction ─────────────────────────────────────────

/// Builds the Effect 1 counterfactual dataset: control-arm maintenance
/// events are pushed later by `lambda_c` and censored at the latent
/// censoring time when they overshoot it; everything else passes through
/// bit for bit. `cutoff_time` and `maintenance_onset` are preserved on
/// re-timed records (only the analysis doublet is counterfactual).
pub fn counterfactual_effect1(
    dataset: &TrialDataset,
    lambda_c: f64,
    censoring: &CensoringModel,
    stream: &RngStream,
) -> Result<TrialDataset> {
    if !Effect::One.lambda_valid(lambda_c) {
        return Err(Error::Parameter(format!(
            "control-arm re-timing requires lambda >= 1, got {lambda_c}"
        )));
    }
    if let CensoringModel::ParametricExponential { rate } = censoring {
        if !(*rate > 0.0) {
            return Err(Error::Parameter(format!(
                "censoring model rate must be positive, got {rate}"
            )));
        }
    }

    let mut subjects = Vec::with_capacity(dataset.subjects.len());
    for s in &dataset.subjects {
        let out = match (s.arm, s.maintenance_onset, s.doublet.event) {
            (Arm::Control, Some(x), true) => {
                let r = match censoring {
                    CensoringModel::AdministrativeCutoff => s.cutoff_time,
                    CensoringModel::ParametricExponential { rate } => {
                        sample_censor_at_least(&mut stream.subject_rng(&s.id), *rate, s)?
                    }
                };
                SubjectRecord {
                    doublet: effect1_event_doublet(x, s.doublet.time, r, lambda_c),
                    ..s.clone()
                }
            }
            _ => s.clone(),
        };
        subjects.push(out);
    }
    Ok(TrialDataset { subjects })
}

fn sample_censor_at_least(rng: &mut ChaCha12Rng, rate: f64, s: &SubjectRecord) -> Result<f64> {
    for _ in 0..REJECTION_CAP {
        let r = exp_draw(rng, rate);
        if r >= s.doublet.time {
            return Ok(r);
        }
    }
    Err(Error::Numeric(format!(
        "censoring imputation for subject {} gave no draw >= {} within {} attempts (model rate {})",
        s.id, s.doublet.time, REJECTION_CAP, rate
    )))
}

/// Builds the Effect 2 counterfactual dataset: experimental-arm
/// maintenance exposure is shrunk by `lambda_e`. Observed events move
/// earlier and stay events; censored maintenance records get a latent
/// event imputed past their observed exposure (memoryless residual), which
/// surfaces as an event only if the shrunk latent time fits inside the
/// observed follow-up. Everything else passes through bit for bit.
pub fn counterfactual_effect2(
    dataset: &TrialDataset,
    lambda_e: f64,
    event_model: &EventModel,
    stream: &RngStream,
) -> Result<TrialDataset> {
    if !Effect::Two.lambda_valid(lambda_e) {
        return Err(Error::Parameter(format!(
            "experimental-arm re-timing requires 0 < lambda <= 1, got {lambda_e}"
        )));
    }
    if !(event_model.rate > 0.0) {
        return Err(Error::Parameter(format!(
            "event model rate must be positive, got {}",
            event_model.rate
        )));
    }

    let mut subjects = Vec::with_capacity(dataset.subjects.len());
    for s in &dataset.subjects {
        let out = match (s.arm, s.maintenance_onset) {
            (Arm::Experimental, Some(x)) => {
                let doublet = if s.doublet.event {
                    TimeDoublet::new(retime(x, s.doublet.time, lambda_e), true)
                } else {
                    let residual = exp_draw(&mut stream.subject_rng(&s.id), event_model.rate);
                    let y = (s.doublet.time - x) + residual;
                    effect2_censored_doublet(x, s.doublet.time, y, lambda_e)
                };
                SubjectRecord {
                    doublet,
                    ..s.clone()
                }
            }
            _ => s.clone(),
        };
        subjects.push(out);
    }
    Ok(TrialDataset { subjects })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn record(
        id: &str,
        arm: Arm,
        time: f64,
        event: bool,
        onset: Option<f64>,
        cutoff: f64,
    ) -> SubjectRecord {
        SubjectRecord {
            id: id.to_string(),
            arm,
            doublet: TimeDoublet::new(time, event),
            maintenance_onset: onset,
            cutoff_time: cutoff,
        }
    }

    fn two_arm(subjects: Vec<SubjectRecord>) -> TrialDataset {
        TrialDataset::new(subjects).unwrap()
    }

    fn stream() -> RngStream {
        RngStream::new(42, 0)
    }

    #[test]
    fn stretched_event_within_cutoff_stays_an_event() {
        let ds = two_arm(vec![
            record("c1", Arm::Control, 10.0, true, Some(6.0), 20.0),
            record("e1", Arm::Experimental, 9.0, false, None, 20.0),
        ]);
        let out =
            counterfactual_effect1(&ds, 2.0, &CensoringModel::AdministrativeCutoff, &stream())
                .unwrap();
        assert_eq!(out.subjects[0].doublet, TimeDoublet::new(14.0, true));
        assert_eq!(out.subjects[0].maintenance_onset, Some(6.0));
        assert_eq!(out.subjects[0].cutoff_time, 20.0);
    }

    #[test]
    fn stretched_event_past_cutoff_censors_at_cutoff() {
        let ds = two_arm(vec![
            record("c1", Arm::Control, 10.0, true, Some(6.0), 12.0),
            record("e1", Arm::Experimental, 9.0, false, None, 12.0),
        ]);
        let out =
            counterfactual_effect1(&ds, 2.0, &CensoringModel::AdministrativeCutoff, &stream())
                .unwrap();
        assert_eq!(out.subjects[0].doublet, TimeDoublet::new(12.0, false));
    }

    #[test]
    fn effect1_identity_at_lambda_one() {
        let ds = two_arm(vec![
            record("c1", Arm::Control, 10.0, true, Some(6.0), 12.0),
            record("c2", Arm::Control, 7.0, false, Some(2.5), 12.0),
            record("c3", Arm::Control, 4.0, true, None, 12.0),
            record("e1", Arm::Experimental, 9.0, true, Some(3.0), 12.0),
        ]);
        let out =
            counterfactual_effect1(&ds, 1.0, &CensoringModel::AdministrativeCutoff, &stream())
                .unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn effect2_identity_at_lambda_one() {
        // Event records re-time to exactly their own time; censored records
        // stay censored because the imputed residual is strictly positive.
        let ds = two_arm(vec![
            record("e1", Arm::Experimental, 9.0, true, Some(3.0), 12.0),
            record("e2", Arm::Experimental, 7.0, false, Some(4.0), 12.0),
            record("e3", Arm::Experimental, 5.0, false, None, 12.0),
            record("c1", Arm::Control, 10.0, true, Some(6.0), 12.0),
        ]);
        let out = counterfactual_effect2(&ds, 1.0, &EventModel { rate: 0.2 }, &stream()).unwrap();
        assert_eq!(out, ds);
    }

    #[test]
    fn shrunk_event_moves_earlier() {
        let ds = two_arm(vec![
            record("e1", Arm::Experimental, 10.0, true, Some(6.0), 20.0),
            record("c1", Arm::Control, 9.0, false, None, 20.0),
        ]);
        let out = counterfactual_effect2(&ds, 0.5, &EventModel { rate: 0.2 }, &stream()).unwrap();
        assert_eq!(out.subjects[0].doublet, TimeDoublet::new(8.0, true));
    }

    #[test]
    fn censored_case_split_surfaces_latent_event() {
        // Observed exposure 4, imputed full duration 6 + 4 = 10, shrunk to
        // 3 <= 4, so the record becomes an event at 6 + 3 = 9.
        let d = effect2_censored_doublet(6.0, 10.0, 10.0, 0.3);
        assert_eq!(d, TimeDoublet::new(9.0, true));
        // Shrunk duration still exceeding exposure leaves it censored.
        let d = effect2_censored_doublet(6.0, 10.0, 10.0, 0.5);
        assert_eq!(d, TimeDoublet::new(10.0, false));
    }

    #[test]
    fn event_case_split_respects_latent_censor() {
        assert_eq!(
            effect1_event_doublet(6.0, 10.0, 20.0, 2.0),
            TimeDoublet::new(14.0, true)
        );
        assert_eq!(
            effect1_event_doublet(6.0, 10.0, 12.0, 2.0),
            TimeDoublet::new(12.0, false)
        );
    }

    #[test]
    fn censoring_rate_counts_censorings_over_total_time() {
        let ds = two_arm(vec![
            record("c1", Arm::Control, 2.0, false, None, 30.0),
            record("e1", Arm::Experimental, 4.0, false, None, 30.0),
        ]);
        match fit_censoring_model(&ds, CensoringKind::ParametricFit).unwrap() {
            CensoringModel::ParametricExponential { rate } => {
                assert!((rate - 1.0 / 3.0).abs() < 1e-15)
            }
            other => panic!("unexpected model {other:?}"),
        }

        let ds = two_arm(vec![
            record("c1", Arm::Control, 2.0, false, None, 30.0),
            record("e1", Arm::Experimental, 4.0, true, None, 30.0),
        ]);
        match fit_censoring_model(&ds, CensoringKind::ParametricFit).unwrap() {
            CensoringModel::ParametricExponential { rate } => {
                assert!((rate - 1.0 / 6.0).abs() < 1e-15)
            }
            other => panic!("unexpected model {other:?}"),
        }
    }

    #[test]
    fn censoring_fit_requires_a_censoring() {
        let ds = two_arm(vec![
            record("c1", Arm::Control, 2.0, true, None, 30.0),
            record("e1", Arm::Experimental, 4.0, true, None, 30.0),
        ]);
        assert!(fit_censoring_model(&ds, CensoringKind::ParametricFit).is_err());
        assert!(fit_censoring_model(&ds, CensoringKind::AdministrativeCutoff).is_ok());
    }

    #[test]
    fn event_rate_is_events_over_maintenance_exposure() {
        let ds = two_arm(vec![
            record("e1", Arm::Experimental, 5.0, true, Some(3.0), 30.0),
            record("e2", Arm::Experimental, 7.0, true, Some(4.0), 30.0),
            record("e3", Arm::Experimental, 11.0, false, Some(6.0), 30.0),
            record("e4", Arm::Experimental, 2.0, true, None, 30.0),
            record("c1", Arm::Control, 8.0, true, Some(1.0), 30.0),
        ]);
        let m = fit_event_model(&ds).unwrap();
        assert!((m.rate - 0.2).abs() < 1e-15);

        let ds = two_arm(vec![
            record("e1", Arm::Experimental, 6.0, true, Some(2.0), 30.0),
            record("c1", Arm::Control, 8.0, false, None, 30.0),
        ]);
        assert!((fit_event_model(&ds).unwrap().rate - 0.25).abs() < 1e-15);
    }

    #[test]
    fn event_fit_requires_a_maintenance_event() {
        let ds = two_arm(vec![
            record("e1", Arm::Experimental, 5.0, false, Some(3.0), 30.0),
            record("e2", Arm::Experimental, 6.0, true, None, 30.0),
            record("c1", Arm::Control, 8.0, true, Some(1.0), 30.0),
        ]);
        let err = fit_event_model(&ds).unwrap_err();
        assert!(err.to_string().contains("no experimental-arm maintenance-phase events"));
    }

    #[test]
    fn rejection_draws_always_clear_the_observed_time() {
        let ds = two_arm(vec![
            record("c1", Arm::Control, 10.0, true, Some(6.0), 12.0),
            record("c2", Arm::Control, 3.0, true, Some(1.0), 12.0),
            record("e1", Arm::Experimental, 9.0, false, None, 12.0),
        ]);
        let model = CensoringModel::ParametricExponential { rate: 0.08 };
        for lambda in [1.5, 4.0, 9.0] {
            let out = counterfactual_effect1(&ds, lambda, &model, &stream()).unwrap();
            for (orig, cf) in ds.subjects.iter().zip(&out.subjects) {
                assert!(cf.doublet.time >= orig.doublet.time);
                assert!(orig.doublet.event || cf.doublet == orig.doublet);
            }
        }
    }

    #[test]
    fn hopeless_rejection_names_the_subject() {
        let ds = two_arm(vec![
            record("c77", Arm::Control, 10.0, true, Some(6.0), 12.0),
            record("e1", Arm::Experimental, 9.0, false, None, 12.0),
        ]);
        // Mean censoring time 1/50 makes a draw >= 10 a ~e^-500 event.
        let model = CensoringModel::ParametricExponential { rate: 50.0 };
        let err = counterfactual_effect1(&ds, 2.0, &model, &stream()).unwrap_err();
        assert!(err.to_string().contains("c77"), "got: {err}");
    }

    #[test]
    fn lambda_range_is_enforced_per_effect() {
        let ds = two_arm(vec![
            record("c1", Arm::Control, 10.0, true, Some(6.0), 20.0),
            record("e1", Arm::Experimental, 9.0, true, Some(3.0), 20.0),
        ]);
        let cm = CensoringModel::AdministrativeCutoff;
        let em = EventModel { rate: 0.2 };
        assert!(counterfactual_effect1(&ds, 0.9, &cm, &stream()).is_err());
        assert!(counterfactual_effect2(&ds, 1.1, &em, &stream()).is_err());
        assert!(counterfactual_effect2(&ds, 0.0, &em, &stream()).is_err());
        assert!(RpsftParams::new(Effect::One, f64::NAN).is_err());
        assert!(RpsftParams::new(Effect::Two, 0.5).is_ok());
    }

    #[test]
    fn same_stream_means_same_output() {
        let ds = two_arm(vec![
            record("c1", Arm::Control, 10.0, true, Some(6.0), 12.0),
            record("c2", Arm::Control, 8.0, false, Some(2.0), 12.0),
            record("e1", Arm::Experimental, 9.0, false, Some(3.0), 12.0),
            record("e2", Arm::Experimental, 7.0, true, Some(1.0), 12.0),
        ]);
        let cm = fit_censoring_model(&ds, CensoringKind::ParametricFit).unwrap();
        let em = fit_event_model(&ds).unwrap();
        let s = RngStream::new(1234, 7);
        let a1 = counterfactual_effect1(&ds, 3.0, &cm, &s).unwrap();
        let a2 = counterfactual_effect1(&ds, 3.0, &cm, &s).unwrap();
        assert_eq!(a1, a2);
        let b1 = counterfactual_effect2(&ds, 0.4, &em, &s).unwrap();
        let b2 = counterfactual_effect2(&ds, 0.4, &em, &s).unwrap();
        assert_eq!(b1, b2);
        // A different replicate index is a genuinely different stream.
        let s2 = RngStream::new(1234, 8);
        assert_ne!(
            s.subject_rng("e1").random::<u64>(),
            s2.subject_rng("e1").random::<u64>()
        );
    }

    proptest! {
        #[test]
        fn effect1_retiming_is_monotone_and_event_demoting(
            x in 0.0f64..20.0,
            y in 0.0f64..20.0,
            slack in 0.0f64..30.0,
            event in any::<bool>(),
            lam1 in 1.0f64..8.0,
            dlam in 0.0f64..4.0,
        ) {
            let s = x + y;
            let cutoff = s + slack;
            let ds = two_arm(vec![
                record("c1", Arm::Control, s, event, Some(x), cutoff),
                record("e1", Arm::Experimental, 1.0, true, None, cutoff),
            ]);
            let cm = CensoringModel::AdministrativeCutoff;
            let st = stream();
            let lo = counterfactual_effect1(&ds, lam1, &cm, &st).unwrap();
            let hi = counterfactual_effect1(&ds, lam1 + dlam, &cm, &st).unwrap();
            let (o, l, h) = (&ds.subjects[0].doublet, &lo.subjects[0].doublet, &hi.subjects[0].doublet);
            prop_assert!(l.time >= o.time);
            prop_assert!(h.time >= l.time);
            prop_assert!(u8::from(l.event) <= u8::from(o.event));
            prop_assert!(u8::from(h.event) <= u8::from(l.event));
        }

        #[test]
        fn effect2_retiming_is_monotone_and_event_promoting(
            x in 0.0f64..20.0,
            y in 0.0f64..20.0,
            event in any::<bool>(),
            lam1 in 0.05f64..1.0,
            frac in 0.0f64..1.0,
        ) {
            let s = x + y;
            let lam2 = lam1 + frac * (1.0 - lam1);
            let ds = two_arm(vec![
                record("e1", Arm::Experimental, s, event, Some(x), s + 5.0),
                record("c1", Arm::Control, 1.0, true, None, s + 5.0),
            ]);
            let em = EventModel { rate: 0.3 };
            let st = stream();
            let lo = counterfactual_effect2(&ds, lam1, &em, &st).unwrap();
            let hi = counterfactual_effect2(&ds, lam2, &em, &st).unwrap();
            let (o, l, h) = (&ds.subjects[0].doublet, &lo.subjects[0].doublet, &hi.subjects[0].doublet);
            prop_assert!(l.time <= o.time + 1e-12);
            prop_assert!(l.time <= h.time + 1e-12);
            prop_assert!(u8::from(l.event) >= u8::from(o.event));
            prop_assert!(u8::from(l.event) >= u8::from(h.event));
        }

        #[test]
        fn bystanders_pass_through_bit_for_bit(
            t in 0.1f64..20.0,
            event in any::<bool>(),
            lam_c in 1.0f64..6.0,
            lam_e in 0.1f64..1.0,
        ) {
            // Experimental never touched by Effect 1; control never touched
            // by Effect 2; no-maintenance records never touched by either.
            let ds = two_arm(vec![
                record("e1", Arm::Experimental, t, event, Some(t * 0.5), t + 10.0),
                record("e2", Arm::Experimental, t, event, None, t + 10.0),
                record("c1", Arm::Control, t, event, Some(t * 0.25), t + 10.0),
                record("c2", Arm::Control, t, event, None, t + 10.0),
            ]);
            let st = stream();
            let out1 = counterfactual_effect1(
                &ds, lam_c, &CensoringModel::AdministrativeCutoff, &st).unwrap();
            prop_assert_eq!(&out1.subjects[0], &ds.subjects[0]);
            prop_assert_eq!(&out1.subjects[1], &ds.subjects[1]);
            prop_assert_eq!(&out1.subjects[3], &ds.subjects[3]);
            let out2 = counterfactual_effect2(&ds, lam_e, &EventModel { rate: 0.3 }, &st).unwrap();
            prop_assert_eq!(&out2.subjects[1], &ds.subjects[1]);
            prop_assert_eq!(&out2.subjects[2], &ds.subjects[2]);
            prop_assert_eq!(&out2.subjects[3], &ds.subjects[3]);
        }
    }
}
