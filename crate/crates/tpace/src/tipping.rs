//! Tipping-point search over the re-timing factor lambda.
//!
//! For a grid of lambda values the engine rebuilds the counterfactual
//! dataset (averaging over Monte Carlo replicates when imputation is
//! stochastic), re-runs the survival analyses, and tracks three target
//! functions: the one-sided log-rank p-value p(lambda), the overall Cox
//! hazard ratio theta(lambda), and the maintenance-phase hazard ratio
//! theta2(lambda). Three tipping points are located per effect:
//!
//! - criterion (a): significance is lost, p(lambda) >= 0.025;
//! - criterion (b): the maintenance-phase difference is neutralized,
//!   theta2(lambda) >= 1;
//! - criterion (c): the whole difference is neutralized,
//!   theta(lambda) >= 1.
//!
//! Effect 1 scans lambda upward from 1 and reports the infimum; Effect 2
//! scans downward from 1 and reports the supremum. Fixing the master seed
//! across lambda (common random numbers) makes each target monotone along
//! the scan, so a coarse grid bracket refined by bisection is well-posed.
//! The two tipping points for criteria (b) and (c) combine into indices
//! splitting the overall benefit between the combination phase and the
//! maintenance phase.

use std::collections::BTreeMap;

use crate::counterfactual::{
    counterfactual_effect1, counterfactual_effect2, CensoringModel, Effect, EventModel,
    RngStream, RpsftParams,
};
use crate::data::TrialDataset;
use crate::error::{Error, Result};
use crate::survival::{cox_fit, cox_timevarying_fit, logrank_test};

/// One-sided significance threshold for criterion (a).
pub const SIGNIFICANCE_ONE_SIDED: f64 = 0.025;

// ── Types ───────────────────────────────────────────────────────────────

/// Tipping criterion identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Criterion {
    /// Loss of one-sided significance.
    A,
    /// Maintenance-phase hazard ratio reaches 1.
    B,
    /// Overall hazard ratio reaches 1.
    C,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::A, Criterion::B, Criterion::C];

    pub fn label(self) -> &'static str {
        match self {
            Criterion::A => "a",
            Criterion::B => "b",
            Criterion::C => "c",
        }
    }

    fn met(self, point: &TippingCurvePoint) -> Result<bool> {
        match self {
            Criterion::A => Ok(point.p_one_sided >= SIGNIFICANCE_ONE_SIDED),
            Criterion::B => match point.hr_phase_b {
                Some(hr) => Ok(hr >= 1.0),
                None => Err(Error::Numeric(format!(
                    "maintenance-phase hazard ratio not estimable at lambda {}",
                    point.lambda
                ))),
            },
            Criterion::C => Ok(point.hr_overall >= 1.0),
        }
    }

    fn describe(self, point: &TippingCurvePoint) -> String {
        match self {
            Criterion::A => format!("p = {}", point.p_one_sided),
            Criterion::B => match point.hr_phase_b {
                Some(hr) => format!("maintenance-phase hr = {hr}"),
                None => "maintenance-phase hr not estimable".to_string(),
            },
            Criterion::C => format!("overall hr = {}", point.hr_overall),
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "a" | "A" => Ok(Criterion::A),
            "b" | "B" => Ok(Criterion::B),
            "c" | "C" => Ok(Criterion::C),
            other => Err(Error::Parameter(format!(
                "unknown criterion {other:?} (expected a, b, or c)"
            ))),
        }
    }
}

/// Fitted imputation models feeding the counterfactual construction.
/// Effect 1 consumes `censoring`; Effect 2 consumes `event`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImputationModels {
    pub censoring: Option<CensoringModel>,
    pub event: Option<EventModel>,
}

impl ImputationModels {
    pub fn for_effect1(censoring: CensoringModel) -> Self {
        ImputationModels {
            censoring: Some(censoring),
            event: None,
        }
    }

    pub fn for_effect2(event: EventModel) -> Self {
        ImputationModels {
            censoring: None,
            event: Some(event),
        }
    }
}

/// Aggregated re-analysis results at one lambda.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TippingCurvePoint {
    pub lambda: f64,
    /// Overall hazard ratio theta(lambda), geometric mean across replicates.
    pub hr_overall: f64,
    /// Maintenance-phase hazard ratio theta2(lambda); `None` when no
    /// replicate had an estimable, converged maintenance-phase fit.
    pub hr_phase_b: Option<f64>,
    /// One-sided log-rank p-value, median across replicates.
    pub p_one_sided: f64,
    /// Mean event count of the counterfactual datasets.
    pub avg_events: f64,
}

/// How the overall benefit splits between phases: `index_a` attributes to
/// the combination phase, `index_b` to the maintenance phase; they are
/// complements by construction.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ContributionIndices {
    pub index_a: f64,
    pub index_b: f64,
}

/// Grid and refinement controls for the lambda scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_step: f64,
    /// Bisection stops once the bracket is at most this wide.
    pub bisect_tol: f64,
    /// Monte Carlo replicates per lambda; forced to 1 on the fully
    /// deterministic Effect 1 + administrative-cutoff path.
    pub replicates: usize,
}

impl SearchConfig {
    pub fn default_for(effect: Effect) -> Self {
        match effect {
            Effect::One => SearchConfig {
                lambda_min: 1.0,
                lambda_max: 10.0,
                lambda_step: 0.1,
                bisect_tol: 1e-3,
                replicates: 200,
            },
            Effect::Two => SearchConfig {
                lambda_min: 0.05,
                lambda_max: 1.0,
                lambda_step: 0.01,
                bisect_tol: 1e-3,
                replicates: 200,
            },
        }
    }

    fn validate(&self, effect: Effect) -> Result<()> {
        let ok = self.lambda_min.is_finite()
            && self.lambda_max.is_finite()
            && self.lambda_min < self.lambda_max
            && self.lambda_step > 0.0
            && self.bisect_tol > 0.0
            && self.replicates >= 1;
        if !ok {
            return Err(Error::Parameter(format!(
                "invalid search configuration: {self:?}"
            )));
        }
        match effect {
            Effect::One if self.lambda_min < 1.0 => Err(Error::Parameter(
                "Effect 1 search range must start at lambda >= 1".to_string(),
            )),
            Effect::Two if !(self.lambda_min > 0.0 && self.lambda_max <= 1.0) => {
                Err(Error::Parameter(
                    "Effect 2 search range must lie inside (0, 1]".to_string(),
                ))
            }
            _ => Ok(()),
        }
    }
}

/// Full run controls: search grid, seed, and which criteria to locate.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub search: SearchConfig,
    pub master_seed: u64,
    pub criteria: Vec<Criterion>,
}

impl RunConfig {
    pub fn default_for(effect: Effect) -> Self {
        RunConfig {
            search: SearchConfig::default_for(effect),
            master_seed: 0,
            criteria: Criterion::ALL.to_vec(),
        }
    }
}

/// Configuration echo embedded in the report so a run can be reproduced
/// from its output alone.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ReportConfig {
    pub master_seed: u64,
    pub replicates: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_step: f64,
    pub bisect_tol: f64,
    pub criteria: Vec<String>,
    pub censoring_model: Option<String>,
    pub censoring_rate: Option<f64>,
    pub event_model_rate: Option<f64>,
}

/// Complete tipping analysis for one effect.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TippingReport {
    pub effect: Effect,
    /// Tipping points for the requested criteria; a criterion that was not
    /// requested is `None`.
    pub lambda_a: Option<f64>,
    pub lambda_b: Option<f64>,
    pub lambda_c: Option<f64>,
    /// Overall hazard ratio evaluated at each located tipping point.
    pub hr_at_a: Option<f64>,
    pub hr_at_b: Option<f64>,
    pub hr_at_c: Option<f64>,
    pub p_at_a: Option<f64>,
    pub indices: Option<ContributionIndices>,
    /// Set when the located points violate the expected ordering or the
    /// indices could not be formed; never a hard failure.
    pub ordering_note: Option<String>,
    pub config: ReportConfig,
    pub curve: Vec<TippingCurvePoint>,
}

// ── Aggregation helpers ─────────────────────────────────────────────────

/// Geometric mean; an all-equal slice returns its first element bit for
/// bit so single-replicate and anchored evaluations stay exact.
fn geometric_mean(values: &[f64]) -> f64 {
    if values.iter().all(|&v| v == values[0]) {
        return values[0];
    }
    (values.iter().map(|v| v.ln()).sum::<f64>() / values.len() as f64).exp()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// ── Core evaluation ─────────────────────────────────────────────────────

/// Re-analyzes the counterfactual dataset at one lambda.
///
/// Per replicate: build the counterfactual dataset, run the log-rank test,
/// the overall Cox fit, and the phase-split Cox fit, and count events.
/// Replicates where the log-rank test or the overall fit fails (or fails
/// to converge) are dropped with a warning; more than 20% dropped is a
/// hard error. The maintenance-phase ratio is aggregated over the
/// replicates where that fit exists and converged, and is `None` when
/// there are none.
pub fn evaluate_lambda(
    dataset: &TrialDataset,
    params: &RpsftParams,
    models: &ImputationModels,
    replicates: usize,
    master_seed: u64,
) -> Result<TippingCurvePoint> {
    if replicates == 0 {
        return Err(Error::Parameter("replicates must be >= 1".to_string()));
    }
    let deterministic = params.effect == Effect::One
        && models.censoring == Some(CensoringModel::AdministrativeCutoff);
    let m = if deterministic { 1 } else { replicates };

    let mut hrs = Vec::with_capacity(m);
    let mut hr2s = Vec::with_capacity(m);
    let mut ps = Vec::with_capacity(m);
    let mut events = Vec::with_capacity(m);
    let mut dropped = 0usize;

    for rep in 0..m {
        let stream = RngStream::new(master_seed, rep as u32);
        let cf = match params.effect {
            Effect::One => {
                let censoring = models.censoring.as_ref().ok_or_else(|| {
                    Error::Parameter(
                        "control-arm re-timing requires a censoring model".to_string(),
                    )
                })?;
                counterfactual_effect1(dataset, params.lambda, censoring, &stream)?
            }
            Effect::Two => {
                let event = models.event.as_ref().ok_or_else(|| {
                    Error::Parameter(
                        "experimental-arm re-timing requires a fitted event model".to_string(),
                    )
                })?;
                counterfactual_effect2(dataset, params.lambda, event, &stream)?
            }
        };

        let lr = logrank_test(&cf);
        let overall = cox_fit(&cf);
        let (lr, overall) = match (lr, overall) {
            (Ok(l), Ok(o)) if o.converged => (l, o),
            _ => {
                dropped += 1;
                continue;
            }
        };
        let phased = cox_timevarying_fit(&cf)?;
        if let Some(b) = phased.phase_b {
            if b.converged {
                hr2s.push(b.hr);
            }
        }
        hrs.push(overall.hr);
        ps.push(lr.p_one_sided);
        events.push(cf.n_events() as f64);
    }

    if dropped > 0 {
        eprintln!(
            "warning: dropped {dropped} of {m} replicates at lambda {} (model fitting failed)",
            params.lambda
        );
    }
    if hrs.is_empty() || dropped * 5 > m {
        return Err(Error::Numeric(format!(
            "{dropped} of {m} replicates failed model fitting at lambda {}",
            params.lambda
        )));
    }

    Ok(TippingCurvePoint {
        lambda: params.lambda,
        hr_overall: geometric_mean(&hrs),
        hr_phase_b: if hr2s.is_empty() {
            None
        } else {
            Some(geometric_mean(&hr2s))
        },
        p_one_sided: median(&ps),
        avg_events: events.iter().sum::<f64>() / events.len() as f64,
    })
}

/// Caches curve points by lambda bit pattern so the three criterion
/// searches and the curve output share evaluations.
struct Evaluator<'a> {
    dataset: &'a TrialDataset,
    effect: Effect,
    models: &'a ImputationModels,
    replicates: usize,
    master_seed: u64,
    cache: BTreeMap<u64, TippingCurvePoint>,
}

impl<'a> Evaluator<'a> {
    fn new(
        dataset: &'a TrialDataset,
        effect: Effect,
        models: &'a ImputationModels,
        replicates: usize,
        master_seed: u64,
    ) -> Self {
        Evaluator {
            dataset,
            effect,
            models,
            replicates,
            master_seed,
            cache: BTreeMap::new(),
        }
    }

    fn at(&mut self, lambda: f64) -> Result<TippingCurvePoint> {
        if let Some(p) = self.cache.get(&lambda.to_bits()) {
            return Ok(p.clone());
        }
        let params = RpsftParams::new(self.effect, lambda)?;
        let point = evaluate_lambda(
            self.dataset,
            &params,
            self.models,
            self.replicates,
            self.master_seed,
        )?;
        self.cache.insert(lambda.to_bits(), point.clone());
        Ok(point)
    }
}

/// Scan order: Effect 1 ascends from `lambda_min`, Effect 2 descends from
/// `lambda_max`, so the first grid point is always the anchor end and the
/// first threshold crossing matches the inf/sup definition of the tipping
/// point.
fn scan_grid(effect: Effect, s: &SearchConfig) -> Vec<f64> {
    let mut grid = Vec::new();
    for k in 0.. {
        let v = match effect {
            Effect::One => s.lambda_min + k as f64 * s.lambda_step,
            Effect::Two => s.lambda_max - k as f64 * s.lambda_step,
        };
        match effect {
            Effect::One => {
                if v > s.lambda_max + 1e-9 {
                    break;
                }
                grid.push(v.min(s.lambda_max));
            }
            Effect::Two => {
                if v < s.lambda_min - 1e-9 {
                    break;
                }
                grid.push(v.max(s.lambda_min));
            }
        }
    }
    grid
}

fn bisect(
    ev: &mut Evaluator,
    criterion: Criterion,
    not_met: f64,
    met: f64,
    tol: f64,
) -> Result<f64> {
    let mut a = not_met;
    let mut b = met;
    for _ in 0..200 {
        if (a - b).abs() <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        if criterion.met(&ev.at(mid)?)? {
            b = mid;
        } else {
            a = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn locate(ev: &mut Evaluator, criterion: Criterion, search: &SearchConfig) -> Result<f64> {
    let grid = scan_grid(ev.effect, search);
    let anchor = ev.at(grid[0])?;
    if criterion.met(&anchor)? {
        return Ok(grid[0]);
    }
    let mut prev = grid[0];
    for &lambda in &grid[1..] {
        let point = ev.at(lambda)?;
        if criterion.met(&point)? {
            return bisect(ev, criterion, prev, lambda, search.bisect_tol);
        }
        prev = lambda;
    }
    let last = ev.at(prev)?;
    Err(Error::Parameter(format!(
        "criterion ({}) tipping point outside search range [{}, {}]: {} at lambda {}, {} at lambda {}",
        criterion.label(),
        search.lambda_min,
        search.lambda_max,
        criterion.describe(&anchor),
        anchor.lambda,
        criterion.describe(&last),
        last.lambda,
    )))
}

/// Locates one tipping point: the smallest (Effect 1) or largest
/// (Effect 2) lambda at which the criterion's threshold is reached,
/// refined by bisection to `search.bisect_tol` under common random
/// numbers. Returns the anchor end immediately when the threshold is
/// already met there.
pub fn find_tipping_point(
    dataset: &TrialDataset,
    effect: Effect,
    criterion: Criterion,
    models: &ImputationModels,
    search: &SearchConfig,
    master_seed: u64,
) -> Result<f64> {
    search.validate(effect)?;
    let mut ev = Evaluator::new(dataset, effect, models, search.replicates, master_seed);
    locate(&mut ev, criterion, search)
}

// ── Indices ─────────────────────────────────────────────────────────────

/// Splits the Effect 1 overall benefit between phases from the tipping
/// points for criteria (b) and (c):
/// index_a = (lambda_c - lambda_b) / (lambda_c - 1).
pub fn contribution_indices_effect1(lambda_b: f64, lambda_c: f64) -> Result<ContributionIndices> {
    if !(lambda_c > 1.0) {
        return Err(Error::Parameter(format!(
            "no overall effect to decompose: lambda_c must exceed 1, got {lambda_c}"
        )));
    }
    if !(1.0 <= lambda_b && lambda_b <= lambda_c) {
        return Err(Error::Parameter(format!(
            "tipping points out of order: need 1 <= lambda_b <= lambda_c, got lambda_b = {lambda_b}, lambda_c = {lambda_c}"
        )));
    }
    let index_a = (lambda_c - lambda_b) / (lambda_c - 1.0);
    Ok(ContributionIndices {
        index_a,
        index_b: 1.0 - index_a,
    })
}

/// Effect 2 twin of [`contribution_indices_effect1`]; identical formula on
/// the shrinking side of 1, so lambda_c < 1 is required instead.
pub fn efficacy_indices_effect2(lambda_b: f64, lambda_c: f64) -> Result<ContributionIndices> {
    if !(lambda_c < 1.0) {
        return Err(Error::Parameter(format!(
            "no overall effect to decompose: lambda_c must be below 1, got {lambda_c}"
        )));
    }
    if !(lambda_c <= lambda_b && lambda_b <= 1.0) {
        return Err(Error::Parameter(format!(
            "tipping points out of order: need lambda_c <= lambda_b <= 1, got lambda_b = {lambda_b}, lambda_c = {lambda_c}"
        )));
    }
    let index_a = (lambda_c - lambda_b) / (lambda_c - 1.0);
    Ok(ContributionIndices {
        index_a,
        index_b: 1.0 - index_a,
    })
}

// ── Orchestration ───────────────────────────────────────────────────────

/// Runs the full tipping analysis: the curve over the scan grid, the
/// requested tipping points, and the phase-contribution indices, all under
/// one master seed. Curve points that fail numerically (away from any
/// requested crossing) are skipped with a warning rather than failing the
/// run; criterion searches propagate their errors.
pub fn run_tpace(
    dataset: &TrialDataset,
    effect: Effect,
    models: &ImputationModels,
    config: &RunConfig,
) -> Result<TippingReport> {
    config.search.validate(effect)?;
    if config.criteria.is_empty() {
        return Err(Error::Parameter(
            "at least one tipping criterion must be requested".to_string(),
        ));
    }
    let mut criteria = config.criteria.clone();
    criteria.sort();
    criteria.dedup();

    let mut ev = Evaluator::new(
        dataset,
        effect,
        models,
        config.search.replicates,
        config.master_seed,
    );

    let mut curve = Vec::new();
    for &lambda in &scan_grid(effect, &config.search) {
        match ev.at(lambda) {
            Ok(p) => curve.push(p),
            Err(Error::Numeric(msg)) => {
                eprintln!("warning: skipping lambda {lambda} in curve output: {msg}");
            }
            Err(e) => return Err(e),
        }
    }
    curve.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).unwrap());

    let mut found: BTreeMap<Criterion, (f64, TippingCurvePoint)> = BTreeMap::new();
    for &c in &criteria {
        let lambda = locate(&mut ev, c, &config.search)?;
        let at = ev.at(lambda)?;
        found.insert(c, (lambda, at));
    }
    let lambda_of = |c: Criterion| found.get(&c).map(|(l, _)| *l);
    let hr_of = |c: Criterion| found.get(&c).map(|(_, p)| p.hr_overall);

    let mut notes: Vec<String> = Vec::new();
    let (la, lb, lc) = (
        lambda_of(Criterion::A),
        lambda_of(Criterion::B),
        lambda_of(Criterion::C),
    );
    if let (Some(a), Some(b), Some(c)) = (la, lb, lc) {
        let ordered = match effect {
            Effect::One => a <= b && b <= c,
            Effect::Two => c <= b && b <= a,
        };
        if !ordered {
            notes.push(format!(
                "tipping points violate the expected ordering for this effect: \
                 lambda_a = {a}, lambda_b = {b}, lambda_c = {c}"
            ));
        }
    }

    let indices = match (lb, lc) {
        (Some(b), Some(c)) => {
            let r = match effect {
                Effect::One => contribution_indices_effect1(b, c),
                Effect::Two => efficacy_indices_effect2(b, c),
            };
            match r {
                Ok(ix) => Some(ix),
                Err(e) => {
                    notes.push(format!("phase-contribution indices unavailable: {e}"));
                    None
                }
            }
        }
        _ => None,
    };

    Ok(TippingReport {
        effect,
        lambda_a: la,
        lambda_b: lb,
        lambda_c: lc,
        hr_at_a: hr_of(Criterion::A),
        hr_at_b: hr_of(Criterion::B),
        hr_at_c: hr_of(Criterion::C),
        p_at_a: found.get(&Criterion::A).map(|(_, p)| p.p_one_sided),
        indices,
        ordering_note: if notes.is_empty() {
            None
        } else {
            Some(notes.join("; "))
        },
        config: ReportConfig {
            master_seed: config.master_seed,
            replicates: config.search.replicates,
            lambda_min: config.search.lambda_min,
            lambda_max: config.search.lambda_max,
            lambda_step: config.search.lambda_step,
            bisect_tol: config.search.bisect_tol,
            criteria: criteria.iter().map(|c| c.label().to_string()).collect(),
            censoring_model: models.censoring.as_ref().map(|m| {
                match m {
                    CensoringModel::AdministrativeCutoff => "administrative_cutoff",
                    CensoringModel::ParametricExponential { .. } => "parametric_exponential",
                }
                .to_string()
            }),
            censoring_rate: match models.censoring {
                Some(CensoringModel::ParametricExponential { rate }) => Some(rate),
                _ => None,
            },
            event_model_rate: models.event.map(|m| m.rate),
        },
        curve,
    })
}
