//! Cox proportional-hazards regression for a single binary covariate (the
//! arm indicator), on counting-process episodes with delayed entry.
//!
//! The partial likelihood is maximized by Newton iteration with
//! step-halving, starting at beta = 0, with the Efron correction for tied
//! event times (the Breslow form is available for comparison). Because the
//! covariate is binary, risk-set sums reduce to at-risk counts per arm,
//! which are precomputed once per fit from sorted entry/exit times; each
//! Newton iteration is then linear in the number of distinct event times.
//!
//! At-risk convention: an episode is at risk at time t when
//! entry <= t <= exit, with its event (if any) at exit. Inclusive entry
//! keeps a zero-length episode inside its own risk set, which is how a
//! maintenance onset tied with the event time is treated as a
//! maintenance-phase event.

use super::normal_cdf;
use crate::data::{Arm, TrialDataset};
use crate::error::{Error, Result};

// ── Types ───────────────────────────────────────────────────────────────

/// Tie handling for the partial likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieMethod {
    Efron,
    Breslow,
}

/// One at-risk interval. At risk on [entry, exit]; `event` means the
/// episode ends in an event at `exit`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoxEpisode {
    pub entry: f64,
    pub exit: f64,
    pub event: bool,
    /// True when the episode belongs to the experimental arm.
    pub experimental: bool,
}

/// A fitted arm coefficient.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CoxFit {
    /// Estimated log hazard ratio, experimental over control.
    pub log_hr: f64,
    /// Standard error of `log_hr` from the observed information.
    pub se: f64,
    /// `exp(log_hr)`.
    pub hr: f64,
    pub wald_z: f64,
    /// Score test statistic at beta = 0; equals the log-rank z on tie-free
    /// two-group data.
    pub score_z: f64,
    pub p_two_sided: f64,
    /// Lower-tail probability of `wald_z`; small when the experimental arm
    /// is estimated to do better.
    pub p_one_sided: f64,
    pub n_events: usize,
    pub converged: bool,
    /// Set when the fit is unreliable, e.g. monotone likelihood from
    /// complete separation.
    pub diagnostic: Option<String>,
}

/// Phase-split model: arm hazard ratios for the combination phase
/// (`phase_a`) and the maintenance phase (`phase_b`). A phase with no
/// episodes, no events, or only one arm at risk is reported as `None`
/// (not estimable).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PhaseCoxFit {
    pub phase_a: Option<CoxFit>,
    pub phase_b: Option<CoxFit>,
}

// ── Risk-set precomputation ─────────────────────────────────────────────

/// Per distinct event time: event and at-risk counts by arm.
struct EventBlock {
    d0: f64,
    d1: f64,
    n0: f64,
    n1: f64,
}

fn build_blocks(episodes: &[CoxEpisode]) -> Result<Vec<EventBlock>> {
    let mut entries = [Vec::new(), Vec::new()];
    let mut exits = [Vec::new(), Vec::new()];
    let mut events: Vec<(f64, bool)> = Vec::new();
    for e in episodes {
        if !e.entry.is_finite() || !e.exit.is_finite() || e.entry < 0.0 || e.exit < e.entry {
            return Err(Error::Data(format!(
                "invalid episode interval [{}, {}]",
                e.entry, e.exit
            )));
        }
        let arm = e.experimental as usize;
        entries[arm].push(e.entry);
        exits[arm].push(e.exit);
        if e.event {
            events.push((e.exit, e.experimental));
        }
    }
    for v in entries.iter_mut().chain(exits.iter_mut()) {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
    events.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let at_risk = |arm: usize, t: f64| -> f64 {
        let entered = entries[arm].partition_point(|&x| x <= t);
        let gone = exits[arm].partition_point(|&x| x < t);
        (entered - gone) as f64
    };

    let mut blocks = Vec::new();
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        let mut d0 = 0.0;
        let mut d1 = 0.0;
        while i < events.len() && events[i].0 == t {
            if events[i].1 {
                d1 += 1.0;
            } else {
                d0 += 1.0;
            }
            i += 1;
        }
        blocks.push(EventBlock {
            d0,
            d1,
            n0: at_risk(0, t),
            n1: at_risk(1, t),
        });
    }
    Ok(blocks)
}

// ── Partial likelihood ──────────────────────────────────────────────────

/// Log partial likelihood, score, and observed information at `beta`.
fn ll_score_info(blocks: &[EventBlock], beta: f64, ties: TieMethod) -> (f64, f64, f64) {
    let b = beta.exp();
    let mut ll = 0.0;
    let mut score = 0.0;
    let mut info = 0.0;
    for blk in blocks {
        let d = blk.d0 + blk.d1;
        ll += blk.d1 * beta;
        score += blk.d1;
        match ties {
            TieMethod::Efron => {
                for j in 0..d as usize {
                    let f = j as f64 / d;
                    let w1 = (blk.n1 - f * blk.d1) * b;
                    let z = (blk.n0 - f * blk.d0) + w1;
                    let m = w1 / z;
                    ll -= z.ln();
                    score -= m;
                    info += m * (1.0 - m);
                }
            }
            TieMethod::Breslow => {
                let w1 = blk.n1 * b;
                let z = blk.n0 + w1;
                let m = w1 / z;
                ll -= d * z.ln();
                score -= d * m;
                info += d * m * (1.0 - m);
            }
        }
    }
    (ll, score, info)
}

// ── Newton solver ───────────────────────────────────────────────────────

const MAX_ITER: usize = 50;
const SCORE_TOL: f64 = 1e-9;
const STEP_TOL: f64 = 1e-9;
const BETA_ESCAPE: f64 = 30.0;

/// Fits the arm coefficient on counting-process episodes.
///
/// Errors when there are no events or when no event-time risk set ever
/// contains both arms (the contrast is not estimable). Monotone
/// likelihood (e.g. complete separation) is reported through
/// `converged = false` plus a diagnostic rather than an error.
pub fn cox_fit_episodes(episodes: &[CoxEpisode], ties: TieMethod) -> Result<CoxFit> {
    let blocks = build_blocks(episodes)?;
    if blocks.is_empty() {
        return Err(Error::Data("no events".to_string()));
    }
    let n_events = blocks.iter().map(|b| (b.d0 + b.d1) as usize).sum();

    let (ll0, u0, i0) = ll_score_info(&blocks, 0.0, ties);
    if i0 <= 0.0 {
        return Err(Error::Data(
            "hazard ratio not estimable: no event risk set contains both arms".to_string(),
        ));
    }
    let score_z = u0 / i0.sqrt();

    let mut beta = 0.0;
    let mut ll = ll0;
    let mut u = u0;
    let mut info = i0;
    let mut converged = false;
    let mut diagnostic: Option<String> = None;

    for _ in 0..MAX_ITER {
        if !u.is_finite() || !info.is_finite() || info <= 0.0 {
            diagnostic = Some("partial likelihood degenerate at current estimate".to_string());
            break;
        }
        let mut step = u / info;
        let mut halvings = 0;
        // Decreases below the evaluation noise of the log likelihood itself
        // must not trigger halving, or the iteration stalls short of the
        // score tolerance; scale the cutoff with |ll|.
        let noise = 1e-10 * (1.0 + ll.abs());
        let (mut nb, mut nll, mut nu, mut ninfo);
        loop {
            nb = beta + step;
            let (a, b, c) = ll_score_info(&blocks, nb, ties);
            nll = a;
            nu = b;
            ninfo = c;
            if nll.is_finite() && nll >= ll - noise {
                break;
            }
            halvings += 1;
            if halvings > 30 {
                break;
            }
            step *= 0.5;
        }
        beta = nb;
        ll = nll;
        u = nu;
        info = ninfo;
        if beta.abs() > BETA_ESCAPE {
            diagnostic =
                Some("monotone partial likelihood (possible complete separation)".to_string());
            break;
        }
        if u.abs() < SCORE_TOL && step.abs() < STEP_TOL {
            converged = true;
            break;
        }
    }
    if !converged && diagnostic.is_none() {
        diagnostic = Some(format!("Newton iteration limit ({MAX_ITER}) reached"));
    }

    let se = if info > 0.0 { 1.0 / info.sqrt() } else { f64::NAN };
    let wald_z = beta / se;
    Ok(CoxFit {
        log_hr: beta,
        se,
        hr: beta.exp(),
        wald_z,
        score_z,
        p_two_sided: 2.0 * normal_cdf(-wald_z.abs()),
        p_one_sided: normal_cdf(wald_z),
        n_events,
        converged,
        diagnostic,
    })
}

// ── Dataset-level fits ──────────────────────────────────────────────────

/// Cox fit of the arm effect over whole follow-up times.
pub fn cox_fit(dataset: &TrialDataset) -> Result<CoxFit> {
    let episodes: Vec<CoxEpisode> = dataset
        .subjects
        .iter()
        .map(|s| CoxEpisode {
            entry: 0.0,
            exit: s.doublet.time,
            event: s.doublet.event,
            experimental: s.arm == Arm::Experimental,
        })
        .collect();
    cox_fit_episodes(&episodes, TieMethod::Efron)
}

/// Phase-split Cox fit via counting-process episode splitting.
///
/// Every subject with a maintenance onset x contributes a combination-phase
/// episode [0, x] (always censored, since the observed endpoint is at or
/// after x) and a maintenance-phase episode [x, time] carrying the
/// subject's event flag; subjects without maintenance contribute a single
/// combination-phase episode. The two phases are disjoint strata of the
/// joint partial likelihood, and the likelihood factors across them, so
/// maximizing each stratum separately is exactly the joint maximizer. The
/// phase-A stratum coincides with a plain fit on the dataset with
/// maintenance subjects censored at onset, and the phase-B stratum with a
/// delayed-entry fit on the maintenance subset over time on study.
pub fn cox_timevarying_fit(dataset: &TrialDataset) -> Result<PhaseCoxFit> {
    let mut phase_a = Vec::new();
    let mut phase_b = Vec::new();
    for s in &dataset.subjects {
        let experimental = s.arm == Arm::Experimental;
        match s.maintenance_onset {
            None => phase_a.push(CoxEpisode {
                entry: 0.0,
                exit: s.doublet.time,
                event: s.doublet.event,
                experimental,
            }),
            Some(x) => {
                phase_a.push(CoxEpisode {
                    entry: 0.0,
                    exit: x,
                    event: false,
                    experimental,
                });
                phase_b.push(CoxEpisode {
                    entry: x,
                    exit: s.doublet.time,
                    event: s.doublet.event,
                    experimental,
                });
            }
        }
    }
    Ok(PhaseCoxFit {
        phase_a: fit_if_estimable(&phase_a)?,
        phase_b: fit_if_estimable(&phase_b)?,
    })
}

/// `None` when the stratum has no episodes, no events, or a single-arm
/// risk structure; real numerical trouble still comes back as a fit with
/// `converged = false`.
fn fit_if_estimable(episodes: &[CoxEpisode]) -> Result<Option<CoxFit>> {
    if episodes.is_empty() {
        return Ok(None);
    }
    match cox_fit_episodes(episodes, TieMethod::Efron) {
        Ok(fit) => Ok(Some(fit)),
        Err(Error::Data(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{SubjectRecord, TimeDoublet};

    fn subject(
        id: &str,
        arm: Arm,
        time: f64,
        event: bool,
        onset: Option<f64>,
    ) -> SubjectRecord {
        SubjectRecord {
            id: id.to_string(),
            arm,
            doublet: TimeDoublet::new(time, event),
            maintenance_onset: onset,
            cutoff_time: time * 10.0 + 10.0,
        }
    }

    fn dataset(exp: &[(f64, bool)], ctl: &[(f64, bool)]) -> TrialDataset {
        let mut subjects = Vec::new();
        for (i, &(t, e)) in exp.iter().enumerate() {
            subjects.push(subject(&format!("e{i}"), Arm::Experimental, t, e, None));
        }
        for (i, &(t, e)) in ctl.iter().enumerate() {
            subjects.push(subject(&format!("c{i}"), Arm::Control, t, e, None));
        }
        TrialDataset::new(subjects).unwrap()
    }

    #[test]
    fn four_subject_closed_form_maximizer() {
        // E = {(1,1),(3,1)}, C = {(2,1),(4,1)}. Setting the score of the
        // four-term partial likelihood to zero gives exp(beta) as the
        // positive root of u^2 - u - 4 = 0.
        let fit = cox_fit(&dataset(&[(1.0, true), (3.0, true)], &[(2.0, true), (4.0, true)])).unwrap();
        let expect = ((1.0 + 17.0_f64.sqrt()) / 2.0).ln();
        assert!(fit.converged);
        assert!((fit.log_hr - expect).abs() < 1e-9, "got {}", fit.log_hr);
        assert!((fit.hr - fit.log_hr.exp()).abs() < 1e-12);
        assert_eq!(fit.n_events, 4);
    }

    #[test]
    fn identical_arms_give_zero_coefficient() {
        let arm = [(1.0, true), (2.0, false), (3.0, true), (5.0, true)];
        let fit = cox_fit(&dataset(&arm, &arm)).unwrap();
        assert!(fit.converged);
        assert!(fit.log_hr.abs() < 1e-8);
    }

    #[test]
    fn depends_only_on_time_ranks() {
        let exp = [(1.5, true), (2.5, false), (4.0, true), (9.0, true)];
        let ctl = [(1.0, true), (3.0, true), (5.0, false), (7.0, true)];
        let scale = |v: &[(f64, bool)]| v.iter().map(|&(t, e)| (t * 10.0, e)).collect::<Vec<_>>();
        let a = cox_fit(&dataset(&exp, &ctl)).unwrap();
        let b = cox_fit(&dataset(&scale(&exp), &scale(&ctl))).unwrap();
        assert_eq!(a.log_hr, b.log_hr);
    }

    #[test]
    fn separation_is_flagged_not_silent() {
        // All experimental events strictly precede all control events, so
        // the likelihood increases without bound in beta.
        let fit = cox_fit(&dataset(&[(1.0, true), (2.0, true)], &[(3.0, true), (4.0, true)])).unwrap();
        assert!(!fit.converged);
        assert!(fit.diagnostic.as_deref().unwrap().contains("monotone"));
    }

    #[test]
    fn error_without_events() {
        let err = cox_fit(&dataset(&[(1.0, false)], &[(2.0, false)])).unwrap_err();
        assert!(err.to_string().contains("no events"));
    }

    #[test]
    fn efron_equals_breslow_on_tie_free_data() {
        let mut episodes = Vec::new();
        // Deterministic distinct times.
        for i in 0..15 {
            let t = 1.0 + i as f64 * 0.37;
            episodes.push(CoxEpisode {
                entry: 0.0,
                exit: t,
                event: i % 3 != 0,
                experimental: i % 2 == 0,
            });
            let t2 = 0.83 + i as f64 * 0.41;
            episodes.push(CoxEpisode {
                entry: 0.0,
                exit: t2,
                event: i % 4 != 0,
                experimental: i % 2 == 1,
            });
        }
        let e = cox_fit_episodes(&episodes, TieMethod::Efron).unwrap();
        let b = cox_fit_episodes(&episodes, TieMethod::Breslow).unwrap();
        assert!((e.log_hr - b.log_hr).abs() < 1e-10);
    }

    #[test]
    fn efron_and_breslow_differ_under_ties() {
        let exp = [(1.0, true), (1.0, true), (3.0, false)];
        let ctl = [(1.0, true), (2.0, true), (2.0, true)];
        let ds = dataset(&exp, &ctl);
        let episodes: Vec<CoxEpisode> = ds
            .subjects
            .iter()
            .map(|s| CoxEpisode {
                entry: 0.0,
                exit: s.doublet.time,
                event: s.doublet.event,
                experimental: s.arm == Arm::Experimental,
            })
            .collect();
        let e = cox_fit_episodes(&episodes, TieMethod::Efron).unwrap();
        let b = cox_fit_episodes(&episodes, TieMethod::Breslow).unwrap();
        assert!((e.log_hr - b.log_hr).abs() > 1e-6);
    }

    #[test]
    fn score_test_matches_logrank_on_tie_free_data() {
        let exp = [(1.5, true), (2.7, false), (4.1, true), (9.2, true), (11.0, false)];
        let ctl = [(0.9, true), (3.3, true), (5.8, false), (7.4, true), (8.8, true)];
        let ds = dataset(&exp, &ctl);
        let fit = cox_fit(&ds).unwrap();
        let lr = crate::survival::logrank_test(&ds).unwrap();
        assert!(
            (fit.score_z - lr.z).abs() < 1e-6,
            "score z {} vs log-rank z {}",
            fit.score_z,
            lr.z
        );
    }

    #[test]
    fn timevarying_collapses_without_maintenance() {
        let exp = [(1.5, true), (2.5, false), (4.0, true)];
        let ctl = [(1.0, true), (3.0, true), (5.0, false)];
        let ds = dataset(&exp, &ctl);
        let plain = cox_fit(&ds).unwrap();
        let phased = cox_timevarying_fit(&ds).unwrap();
        let a = phased.phase_a.unwrap();
        assert_eq!(a.log_hr, plain.log_hr);
        assert!(phased.phase_b.is_none());
    }

    #[test]
    fn timevarying_matches_two_subset_construction() {
        let mut subjects = vec![
            subject("e0", Arm::Experimental, 10.0, true, Some(6.0)),
            subject("e1", Arm::Experimental, 7.5, true, Some(5.0)),
            subject("e2", Arm::Experimental, 4.0, true, None),
            subject("e3", Arm::Experimental, 12.0, false, Some(6.5)),
            subject("c0", Arm::Control, 8.0, true, Some(5.5)),
            subject("c1", Arm::Control, 6.0, true, None),
            subject("c2", Arm::Control, 9.5, false, Some(7.0)),
            subject("c3", Arm::Control, 3.0, true, None),
        ];
        subjects.push(subject("c4", Arm::Control, 11.0, true, Some(4.5)));
        let ds = TrialDataset::new(subjects).unwrap();
        let phased = cox_timevarying_fit(&ds).unwrap();

        // Subset 1: maintenance subjects censored at onset, plain fit.
        let censored: Vec<SubjectRecord> = ds
            .subjects
            .iter()
            .map(|s| match s.maintenance_onset {
                Some(x) => SubjectRecord {
                    doublet: TimeDoublet::new(x, false),
                    maintenance_onset: None,
                    ..s.clone()
                },
                None => s.clone(),
            })
            .collect();
        let subset1 = cox_fit(&TrialDataset::new(censored).unwrap()).unwrap();
        let theta1 = phased.phase_a.unwrap();
        assert!((theta1.log_hr - subset1.log_hr).abs() < 1e-8);

        // Subset 2: maintenance subjects only, left-truncated at onset on
        // the time-on-study clock.
        let trunc: Vec<CoxEpisode> = ds
            .subjects
            .iter()
            .filter_map(|s| {
                s.maintenance_onset.map(|x| CoxEpisode {
                    entry: x,
                    exit: s.doublet.time,
                    event: s.doublet.event,
                    experimental: s.arm == Arm::Experimental,
                })
            })
            .collect();
        let subset2 = cox_fit_episodes(&trunc, TieMethod::Efron).unwrap();
        let theta2 = phased.phase_b.unwrap();
        assert!((theta2.log_hr - subset2.log_hr).abs() < 1e-8);
    }

    #[test]
    fn onset_tied_with_event_counts_as_phase_b_event() {
        let subjects = vec![
            subject("e0", Arm::Experimental, 5.0, true, Some(5.0)),
            subject("e1", Arm::Experimental, 9.0, false, Some(4.0)),
            subject("c0", Arm::Control, 6.0, true, Some(3.0)),
            subject("c1", Arm::Control, 8.0, false, Some(2.0)),
        ];
        let ds = TrialDataset::new(subjects).unwrap();
        let phased = cox_timevarying_fit(&ds).unwrap();
        let b = phased.phase_b.unwrap();
        assert_eq!(b.n_events, 2);
        assert!(phased.phase_a.is_none(), "no events belong to the combination phase");
    }

    #[test]
    fn simulated_phase_effects_recovered() {
        let cfg = crate::simulate::SimConfig {
            n_experimental: 1500,
            n_control: 1500,
            hazard_control: 0.09,
            hr_phase_a: 0.8,
            hr_phase_b: 0.5,
            maintenance_entry: 0.75,
            combination_duration: crate::simulate::CombinationDuration::Exponential { rate: 0.25 },
            accrual_window: 6.0,
            followup_cutoff: 60.0,
            dropout_rate: 0.0,
            carryover_window: 0.0,
            master_seed: 7,
        };
        let ds = crate::simulate::simulate_trial(&cfg).unwrap();
        let phased = cox_timevarying_fit(&ds).unwrap();
        let a = phased.phase_a.unwrap();
        let b = phased.phase_b.unwrap();
        assert!(
            (a.log_hr - 0.8_f64.ln()).abs() < 3.5 * a.se,
            "phase A hr {} not near 0.8",
            a.hr
        );
        assert!(
            (b.log_hr - 0.5_f64.ln()).abs() < 3.5 * b.se,
            "phase B hr {} not near 0.5",
            b.hr
        );
    }
}
