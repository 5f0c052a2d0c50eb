//! Command-line interface.
//!
//! Subcommands:
//! - `analyze`: run the tipping analysis on a dataset CSV and write the
//!   report JSON plus the plot-ready curve CSV.
//! - `simulate`: generate a synthetic trial dataset from a TOML config or
//!   a named preset.
//! - `validate`: check a dataset CSV against the schema and invariants.
//!
//! Exit codes: 0 success, 1 usage or parameter error, 2 data error,
//! 3 numerical failure.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::counterfactual::{fit_censoring_model, fit_event_model, CensoringKind, Effect};
use crate::data::Arm;
use crate::error::{Error, Result};
use crate::io::{emit_report, load_sim_config, parse_dataset_csv, write_dataset_csv};
use crate::simulate::{brocade_like_config, simulate_trial};
use crate::tipping::{run_tpace, Criterion, ImputationModels, RunConfig, SearchConfig};

#[derive(Parser)]
#[command(
    name = "tpace",
    version,
    about = "Tipping point analysis by counterfactual elicitation for two-phase survival trials"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the tipping analysis on a dataset
    Analyze(AnalyzeArgs),
    /// Generate a synthetic trial dataset
    Simulate(SimulateArgs),
    /// Check a dataset file against the schema and invariants
    Validate(ValidateArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input dataset CSV
    #[arg(long)]
    data: PathBuf,
    /// Which arm to re-time: 1 (control, lambda >= 1) or 2 (experimental,
    /// 0 < lambda <= 1)
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    effect: u8,
    /// Tipping criteria to locate, comma-separated subset of a,b,c
    #[arg(long, value_delimiter = ',', default_value = "a,b,c")]
    criteria: Vec<String>,
    /// Latent censoring source for Effect 1
    #[arg(long, value_enum, default_value_t = CensoringChoice::Cutoff)]
    censoring: CensoringChoice,
    /// Monte Carlo replicates per lambda when imputation is stochastic
    #[arg(long, default_value_t = 200)]
    replicates: usize,
    /// Master seed; required whenever imputation is stochastic
    #[arg(long)]
    seed: Option<u64>,
    /// Lower end of the lambda search range
    #[arg(long)]
    lambda_min: Option<f64>,
    /// Upper end of the lambda search range
    #[arg(long)]
    lambda_max: Option<f64>,
    /// Coarse grid step of the lambda scan
    #[arg(long)]
    lambda_step: Option<f64>,
    /// Output stem: writes STEM.json and STEM_curve.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CensoringChoice {
    /// Use each subject's administrative cutoff (deterministic)
    Cutoff,
    /// Draw from an exponential fitted to the censoring process
    Parametric,
}

#[derive(Args)]
struct SimulateArgs {
    /// TOML generator config
    #[arg(long, required_unless_present = "preset", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset (available: brocade-like)
    #[arg(long)]
    preset: Option<String>,
    /// Master seed (overrides the config file's master_seed)
    #[arg(long)]
    seed: Option<u64>,
    /// Output dataset CSV
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    /// Dataset CSV to check
    #[arg(long)]
    data: PathBuf,
}

/// Parses argv and runs the requested command, returning the process exit
/// code. Usage problems exit 1, data problems 2, numerical failures 3.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Analyze(args) => analyze(args),
        Command::Simulate(args) => simulate(args),
        Command::Validate(args) => validate(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let dataset = parse_dataset_csv(&args.data)?;
    let effect = match args.effect {
        1 => Effect::One,
        _ => Effect::Two,
    };

    let mut criteria = Vec::new();
    for c in &args.criteria {
        criteria.push(c.parse::<Criterion>()?);
    }

    let stochastic = effect == Effect::Two
        || (effect == Effect::One && args.censoring == CensoringChoice::Parametric);
    let master_seed = match (args.seed, stochastic) {
        (Some(s), _) => s,
        (None, false) => 0,
        (None, true) => {
            return Err(Error::Parameter(
                "--seed is required when imputation is stochastic \
                 (effect 2, or effect 1 with --censoring parametric)"
                    .to_string(),
            ))
        }
    };

    let models = match effect {
        Effect::One => {
            let kind = match args.censoring {
                CensoringChoice::Cutoff => CensoringKind::AdministrativeCutoff,
                CensoringChoice::Parametric => CensoringKind::ParametricFit,
            };
            ImputationModels::for_effect1(fit_censoring_model(&dataset, kind)?)
        }
        Effect::Two => ImputationModels::for_effect2(fit_event_model(&dataset)?),
    };

    let mut search = SearchConfig::default_for(effect);
    search.replicates = args.replicates;
    if let Some(v) = args.lambda_min {
        search.lambda_min = v;
    }
    if let Some(v) = args.lambda_max {
        search.lambda_max = v;
    }
    if let Some(v) = args.lambda_step {
        search.lambda_step = v;
    }
    let config = RunConfig {
        search,
        master_seed,
        criteria,
    };

    let report = run_tpace(&dataset, effect, &models, &config)?;

    let effect_name = match effect {
        Effect::One => "effect 1 (re-time control)",
        Effect::Two => "effect 2 (re-time experimental)",
    };
    println!("tipping analysis, {effect_name}");
    let rows = [
        ("a", report.lambda_a, report.hr_at_a),
        ("b", report.lambda_b, report.hr_at_b),
        ("c", report.lambda_c, report.hr_at_c),
    ];
    for (label, lambda, hr) in rows {
        if let (Some(l), Some(h)) = (lambda, hr) {
            let extra = if label == "a" {
                report
                    .p_at_a
                    .map(|p| format!(", p = {p:.4}"))
                    .unwrap_or_default()
            } else {
                String::new()
            };
            println!("  lambda_{label} = {l:.3} (overall hr = {h:.3}{extra})");
        }
    }
    if let Some(ix) = &report.indices {
        println!(
            "  phase contributions: index_a = {:.3}, index_b = {:.3}",
            ix.index_a, ix.index_b
        );
    }
    if let Some(note) = &report.ordering_note {
        println!("  note: {note}");
    }
    let (report_path, curve_path) = emit_report(&report, &args.out)?;
    println!("report: {}", report_path.display());
    println!("curve:  {}", curve_path.display());
    Ok(())
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = match (&args.config, &args.preset) {
        (Some(path), None) => {
            let (cfg, has_seed) = load_sim_config(path)?;
            if !has_seed && args.seed.is_none() {
                return Err(Error::Parameter(
                    "no seed: set master_seed in the config file or pass --seed".to_string(),
                ));
            }
            cfg
        }
        (None, Some(name)) => match name.as_str() {
            "brocade-like" => {
                let seed = args.seed.ok_or_else(|| {
                    Error::Parameter("--seed is required with --preset".to_string())
                })?;
                brocade_like_config(seed)
            }
            other => {
                return Err(Error::Parameter(format!(
                    "unknown preset {other:?} (available: brocade-like)"
                )))
            }
        },
        // clap enforces exactly one of --config/--preset.
        _ => unreachable!(),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }

    let dataset = simulate_trial(&cfg)?;
    write_dataset_csv(&dataset, &args.out)?;
    println!(
        "simulated {} subjects (E: {}, C: {}), {} events, seed {}",
        dataset.subjects.len(),
        dataset.n_in_arm(Arm::Experimental),
        dataset.n_in_arm(Arm::Control),
        dataset.n_events(),
        cfg.master_seed
    );
    println!("dataset: {}", args.out.display());
    Ok(())
}

fn validate(args: ValidateArgs) -> Result<()> {
    let dataset = parse_dataset_csv(&args.data)?;
    let maintenance = dataset
        .subjects
        .iter()
        .filter(|s| s.maintenance_onset.is_some())
        .count();
    println!(
        "dataset OK: {} subjects (E: {}, C: {}), {} events, {} with maintenance",
        dataset.subjects.len(),
        dataset.n_in_arm(Arm::Experimental),
        dataset.n_in_arm(Arm::Control),
        dataset.n_events(),
        maintenance
    );
    Ok(())
}
