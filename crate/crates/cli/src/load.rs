use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::Path;

use chrono::Duration;
use storm_core::implicit::ImplicitModel;
use storm_core::ingest::{
    complete_cases, join_lagged, parse_best_track, parse_buoy_stdmet, read_buoys_csv, read_storms_csv, BuoyReading,
    JoinedRecord, Parsed, RowIssue, StormReading, BUOY_CSV_HEADER, STORM_CSV_HEADER,
};
use storm_core::presets::preset;
use storm_core::terms::{expand_terms, parse_terms, TermDescriptor};
use storm_core::{Error, ImplicitModel64};

use crate::run::{sha256_file, CmdResult, Run, Stage};
use crate::{Data, TermsArg};

pub struct Loaded<R> {
    pub readings: Vec<R>,
    pub errors: Vec<RowIssue>,
    pub lints: Vec<RowIssue>,
    pub units: BTreeMap<String, String>,
}

impl<R> From<Parsed<R>> for Loaded<R> {
    fn from(p: Parsed<R>) -> Self {
        Self { readings: p.readings, errors: p.errors, lints: p.lints, units: p.units }
    }
}

fn canonical(text: &str, header: &[&str]) -> bool {
    text.lines().next().is_some_and(|l| l.trim_end() == header.join(","))
}

fn read_input(path: &Path, role: &str, run: &mut Run) -> CmdResult<String> {
    let text = fs::read_to_string(path).stage("read input")?;
    run.input(role, path, sha256_file(path).stage("read input")?);
    Ok(text)
}

pub fn storms(path: &Path, run: &mut Run) -> CmdResult<Loaded<StormReading>> {
    let text = read_input(path, "storms", run)?;
    let loaded: Loaded<StormReading> = if canonical(&text, &STORM_CSV_HEADER) {
        Parsed { readings: read_storms_csv(text.as_bytes()).stage("parse storms")?, ..Default::default() }.into()
    } else {
        parse_best_track(BufReader::new(text.as_bytes())).stage("parse storms")?.into()
    };
    run.count("storm_readings", loaded.readings.len());
    run.drop_count("storm_row_errors", loaded.errors.len());
    run.count("storm_lints", loaded.lints.len());
    Ok(loaded)
}

pub fn station_for(path: &Path, station: Option<&str>) -> String {
    station
        .map(str::to_string)
        .or_else(|| path.file_stem().map(|s| s.to_string_lossy().into_owned()))
        .unwrap_or_default()
}

pub fn buoys(path: &Path, station: Option<&str>, run: &mut Run) -> CmdResult<Loaded<BuoyReading>> {
    let text = read_input(path, "buoys", run)?;
    let loaded: Loaded<BuoyReading> = if canonical(&text, &BUOY_CSV_HEADER) {
        Parsed { readings: read_buoys_csv(text.as_bytes()).stage("parse buoys")?, ..Default::default() }.into()
    } else {
        let station = station_for(path, station);
        parse_buoy_stdmet(BufReader::new(text.as_bytes()), &station).stage("parse buoys")?.into()
    };
    run.count("buoy_readings", loaded.readings.len());
    run.drop_count("buoy_row_errors", loaded.errors.len());
    Ok(loaded)
}

pub fn tolerance(minutes: i64) -> CmdResult<Duration> {
    if minutes <= 0 {
        return Err(Error::InvalidArgument("--tolerance-min must be positive".into())).stage("configure");
    }
    Ok(Duration::minutes(minutes))
}

pub struct Dataset {
    pub storms: Vec<StormReading>,
    pub buoys: Vec<BuoyReading>,
}

pub fn dataset(storms_path: &Path, buoys_path: &Path, station: Option<&str>, run: &mut Run) -> CmdResult<Dataset> {
    let s = storms(storms_path, run)?;
    let b = buoys(buoys_path, station, run)?;
    Ok(Dataset { storms: s.readings, buoys: b.readings })
}

/// Complete joined records at one lag, with counts recorded in the manifest.
pub fn joined(ds: &Dataset, dt: i64, tolerance_min: i64, run: &mut Run) -> CmdResult<Vec<JoinedRecord>> {
    let out = join_lagged(&ds.storms, &ds.buoys, dt, tolerance(tolerance_min)?).stage("join")?;
    let (records, incomplete) = complete_cases(out.records);
    run.drop_count("unmatched", out.unmatched);
    run.drop_count("incomplete", incomplete);
    run.count("joined_complete", records.len());
    Ok(records)
}

pub fn joined_data(data: &Data, run: &mut Run) -> CmdResult<Vec<JoinedRecord>> {
    let ds = dataset(&data.storms, &data.buoys, data.station.as_deref(), run)?;
    joined(&ds, data.dt, data.tolerance_min, run)
}

/// Term list from `--preset`/`--terms`, else the given preset, else every term.
pub fn terms(arg: &TermsArg, default_preset: Option<&str>) -> CmdResult<Vec<TermDescriptor>> {
    let vars = storm_core::ingest::VARIABLES;
    match (&arg.preset, &arg.terms, default_preset) {
        (Some(p), _, _) => preset(p).stage("configure"),
        (None, Some(names), _) => {
            let refs: Vec<&str> = names.iter().map(|s| s.trim()).collect();
            parse_terms(&refs, &vars).stage("configure")
        }
        (None, None, Some(p)) => preset(p).stage("configure"),
        (None, None, None) => expand_terms(&vars).stage("configure"),
    }
}

pub fn model(path: &Path, run: &mut Run) -> CmdResult<ImplicitModel64> {
    let text = read_input(path, "model", run)?;
    ImplicitModel::from_json(&text).stage("read model")
}
