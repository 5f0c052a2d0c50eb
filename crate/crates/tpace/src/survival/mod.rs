//! Survival statistics on trial datasets.
//!
//! # Overview
//!
//! Four estimators, all taking times in months:
//!
//! - [`km_estimate`]: Kaplan-Meier product-limit survival curve for one
//!   group of observations.
//! - [`logrank_test`]: two-group log-rank test with a signed normal
//!   statistic (negative favors the experimental arm).
//! - [`cox_fit`] / [`cox_timevarying_fit`]: Cox proportional-hazards
//!   regression on the arm indicator, either over the whole follow-up or
//!   split by treatment phase via counting-process episodes.
//! - [`mdd`]: minimum detectable difference, the hazard ratio at which a
//!   study with a given event count exactly meets the significance
//!   boundary.
//!
//! # Example
//!
//! ```
//! use tpace::survival::km_estimate;
//! use tpace::data::TimeDoublet;
//!
//! let curve = km_estimate(&[
//!     TimeDoublet::new(1.0, true),
//!     TimeDoublet::new(2.0, false),
//!     TimeDoublet::new(3.0, true),
//! ])
//! .unwrap();
//! assert!((curve.survival_at(2.5) - 2.0 / 3.0).abs() < 1e-12);
//! ```

mod cox;
mod km;
mod logrank;
mod mdd;

pub use cox::{cox_fit, cox_fit_episodes, cox_timevarying_fit, CoxEpisode, CoxFit, PhaseCoxFit, TieMethod};
pub use km::{km_estimate, KMCurve, KMStep};
pub use logrank::{logrank_test, LogRankResult};
pub use mdd::mdd;

/// Standard normal CDF.
pub(crate) fn normal_cdf(x: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    statrs::distribution::Normal::new(0.0, 1.0).unwrap().cdf(x)
}

/// Standard normal quantile.
pub(crate) fn normal_quantile(p: f64) -> f64 {
    use statrs::distribution::ContinuousCDF;
    statrs::distribution::Normal::new(0.0, 1.0).unwrap().inverse_cdf(p)
}
