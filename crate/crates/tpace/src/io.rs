//! Dataset CSV ingestion/emission, report files, and generator configs.
//!
//! Dataset schema (header required):
//!
//! ```text
//! subject_id,arm,time_to_maintenance,time,event,cutoff_time
//! ```
//!
//! `arm` is `E` or `C`, `event` is `0` or `1`, `time_to_maintenance` is
//! empty for subjects who never reached maintenance, and times are
//! non-negative decimals in months. Ingestion is all-or-nothing: every
//! offending row is reported with its row number (the header is row 1)
//! and the violated constraint. Times are written with the shortest
//! decimal representation that round-trips, so write-then-parse
//! reproduces a dataset bit for bit.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::data::{Arm, SubjectRecord, TimeDoublet, TrialDataset};
use crate::error::{Error, Result};
use crate::simulate::SimConfig;
use crate::tipping::TippingReport;

pub const DATASET_HEADER: [&str; 6] = [
    "subject_id",
    "arm",
    "time_to_maintenance",
    "time",
    "event",
    "cutoff_time",
];

const MAX_REPORTED_PROBLEMS: usize = 25;

// ── Dataset reading ─────────────────────────────────────────────────────

pub fn parse_dataset_csv(path: &Path) -> Result<TrialDataset> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    parse_dataset_from(file, &path.display().to_string())
}

fn parse_dataset_from(reader: impl Read, source: &str) -> Result<TrialDataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| Error::Data(format!("{source}: cannot read header: {e}")))?
        .clone();
    let got: Vec<&str> = headers.iter().collect();
    if got != DATASET_HEADER {
        return Err(Error::Data(format!(
            "{source}: header mismatch: expected `{}`, found `{}`",
            DATASET_HEADER.join(","),
            got.join(",")
        )));
    }

    let mut subjects = Vec::new();
    let mut problems = Vec::new();
    let mut seen: std::collections::BTreeMap<String, usize> = std::collections::BTreeMap::new();

    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("row {row}: {e}"));
                continue;
            }
        };
        if record.len() != DATASET_HEADER.len() {
            problems.push(format!(
                "row {row}: expected {} fields, found {}",
                DATASET_HEADER.len(),
                record.len()
            ));
            continue;
        }

        let mut ok = true;
        let id = record[0].to_string();
        if id.is_empty() {
            problems.push(format!("row {row}: subject_id is empty"));
            ok = false;
        }
        let arm = match &record[1] {
            "E" => Some(Arm::Experimental),
            "C" => Some(Arm::Control),
            other => {
                problems.push(format!("row {row}: arm must be E or C, found {other:?}"));
                ok = false;
                None
            }
        };
        let onset = if record[2].is_empty() {
            None
        } else {
            match record[2].parse::<f64>() {
                Ok(v) => Some(v),
                Err(_) => {
                    problems.push(format!(
                        "row {row}: time_to_maintenance is not a number: {:?}",
                        &record[2]
                    ));
                    ok = false;
                    None
                }
            }
        };
        let time = parse_number(&record[3], "time", row, &mut problems, &mut ok);
        let event = match &record[4] {
            "0" => Some(false),
            "1" => Some(true),
            other => {
                problems.push(format!("row {row}: event must be 0 or 1, found {other:?}"));
                ok = false;
                None
            }
        };
        let cutoff = parse_number(&record[5], "cutoff_time", row, &mut problems, &mut ok);

        if !ok {
            continue;
        }
        let subject = SubjectRecord {
            id: id.clone(),
            arm: arm.unwrap(),
            doublet: TimeDoublet::new(time.unwrap(), event.unwrap()),
            maintenance_onset: onset,
            cutoff_time: cutoff.unwrap(),
        };
        if let Err(e) = subject.validate() {
            problems.push(format!("row {row}: {e}"));
            continue;
        }
        if let Some(first) = seen.insert(id.clone(), row) {
            problems.push(format!(
                "row {row}: duplicate subject_id {id:?} (first seen at row {first})"
            ));
            continue;
        }
        subjects.push(subject);
    }

    if !problems.is_empty() {
        let shown = problems.len().min(MAX_REPORTED_PROBLEMS);
        let mut msg = format!(
            "{source}: {} invalid row(s):\n  {}",
            problems.len(),
            problems[..shown].join("\n  ")
        );
        if problems.len() > shown {
            msg.push_str(&format!("\n  ... and {} more", problems.len() - shown));
        }
        return Err(Error::Data(msg));
    }

    TrialDataset::new(subjects)
        .map_err(|e| Error::Data(format!("{source}: {e}")))
}

fn parse_number(
    raw: &str,
    field: &str,
    row: usize,
    problems: &mut Vec<String>,
    ok: &mut bool,
) -> Option<f64> {
    match raw.parse::<f64>() {
        Ok(v) => Some(v),
        Err(_) => {
            problems.push(format!("row {row}: {field} is not a number: {raw:?}"));
            *ok = false;
            None
        }
    }
}

// ── Dataset writing ─────────────────────────────────────────────────────

pub fn write_dataset_csv(dataset: &TrialDataset, path: &Path) -> Result<()> {
    let file = fs::File::create(path)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))?;
    write_dataset_to(dataset, file)
}

fn write_dataset_to(dataset: &TrialDataset, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| Error::Data(format!("csv write failed: {e}"));
    w.write_record(DATASET_HEADER).map_err(io_err)?;
    for s in &dataset.subjects {
        let arm = match s.arm {
            Arm::Experimental => "E",
            Arm::Control => "C",
        };
        let onset = s
            .maintenance_onset
            .map(|x| x.to_string())
            .unwrap_or_default();
        w.write_record([
            s.id.as_str(),
            arm,
            &onset,
            &s.doublet.time.to_string(),
            if s.doublet.event { "1" } else { "0" },
            &s.cutoff_time.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(|e| Error::Data(format!("csv write failed: {e}")))?;
    Ok(())
}

// ── Report emission ─────────────────────────────────────────────────────

/// Writes `{stem}.json` (the full report) and `{stem}_curve.csv` (one row
/// per scanned lambda, plot-ready). A trailing `.json` on `stem` is
/// tolerated. Returns the two paths written.
pub fn emit_report(report: &TippingReport, stem: &Path) -> Result<(PathBuf, PathBuf)> {
    let stem_str = stem.to_string_lossy();
    let base = stem_str.strip_suffix(".json").unwrap_or(&stem_str);
    let report_path = PathBuf::from(format!("{base}.json"));
    let curve_path = PathBuf::from(format!("{base}_curve.csv"));

    let mut json = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Data(format!("report serialization failed: {e}")))?;
    json.push('\n');
    fs::write(&report_path, json)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", report_path.display())))?;

    let mut csv = String::from("lambda,hr_overall,hr_phase_b,p_one_sided,avg_events\n");
    for p in &report.curve {
        let hb = p.hr_phase_b.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            p.lambda, p.hr_overall, hb, p.p_one_sided, p.avg_events
        ));
    }
    fs::write(&curve_path, csv)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", curve_path.display())))?;

    Ok((report_path, curve_path))
}

// ── Simulation config loading ───────────────────────────────────────────

/// Loads a TOML generator config. Returns the config plus whether the
/// file set `master_seed` explicitly (callers require a seed from either
/// the file or the command line).
pub fn load_sim_config(path: &Path) -> Result<(SimConfig, bool)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let raw: toml::Value = toml::from_str(&text)
        .map_err(|e| Error::Data(format!("{}: invalid TOML: {e}", path.display())))?;
    let has_seed = raw.get("master_seed").is_some();
    let cfg: SimConfig = raw
        .try_into()
        .map_err(|e| Error::Data(format!("{}: invalid simulation config: {e}", path.display())))?;
    Ok((cfg, has_seed))
}
