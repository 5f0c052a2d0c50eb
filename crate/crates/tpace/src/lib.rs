//! Tipping point analysis by counterfactual elicitation for two-arm
//! trials with a combination phase followed by a maintenance phase.
//!
//! Given subject-level time-to-event data, the engine asks how strong a
//! hypothetical maintenance-phase effect would have to be to overturn the
//! observed treatment difference. It re-times maintenance-phase exposure
//! by a factor lambda (stretching the control arm, Effect 1, or shrinking
//! the experimental arm, Effect 2), re-runs the survival analyses at each
//! lambda, and locates three tipping points: loss of significance (a),
//! neutralization of the maintenance-phase hazard ratio (b), and
//! neutralization of the overall hazard ratio (c). The spacing of (b) and
//! (c) yields indices splitting the overall benefit between the two
//! phases.
//!
//! Modules: [`data`] (records and datasets), [`survival`] (Kaplan-Meier,
//! log-rank, Cox with phase strata, minimum detectable difference),
//! [`counterfactual`] (the re-timing engine), [`tipping`] (lambda search
//! and indices), [`simulate`] (synthetic trial generator), [`io`]
//! (CSV/JSON/TOML), [`cli`] (the command-line tool).
//!
//! ```
//! use tpace::{contribution_indices_effect1, mdd};
//!
//! // Smallest detectable hazard ratio with 349 events, 2:1 allocation.
//! let threshold = mdd(349, 2.0 / 3.0, 0.05).unwrap();
//! assert!((threshold - 0.80).abs() < 0.01);
//!
//! // Benefit split when phase-B neutralization needs lambda 3.48 and
//! // full neutralization needs 5.15.
//! let ix = contribution_indices_effect1(3.48, 5.15).unwrap();
//! assert!((ix.index_a - 0.402).abs() < 1e-3);
//! ```

pub mod cli;
pub mod counterfactual;
pub mod data;
pub mod error;
pub mod io;
pub mod simulate;
pub mod survival;
pub mod tipping;

pub use counterfactual::{
    counterfactual_effect1, counterfactual_effect2, fit_censoring_model, fit_event_model, retime,
    CensoringKind, CensoringModel, Effect, EventModel, RngStream, RpsftParams,
};
pub use data::{Arm, SubjectRecord, TimeDoublet, TrialDataset};
pub use error::{Error, Result};
pub use simulate::{
    brocade_like_config, simulate_brocade_like, simulate_trial, CombinationDuration, SimConfig,
};
pub use survival::{
    cox_fit, cox_fit_episodes, cox_timevarying_fit, km_estimate, logrank_test, mdd, CoxEpisode,
    CoxFit, KMCurve, LogRankResult, PhaseCoxFit, TieMethod,
};
pub use tipping::{
    contribution_indices_effect1, efficacy_indices_effect2, evaluate_lambda, find_tipping_point,
    run_tpace, ContributionIndices, Criterion, ImputationModels, RunConfig, SearchConfig,
    TippingCurvePoint, TippingReport,
};
