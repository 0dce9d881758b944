//! Storm best-track and buoy standard-meteorological ingestion, the canonical
//! CSV forms of both, and the day-lagged join between them.
//!
//! Best-track input is accepted in two line-oriented layouts, detected from the
//! first nonblank line:
//!
//! * HURDAT2: a header `AL092005, KATRINA, 34,` followed by comma-separated
//!   observation rows `20050823, 1800, , TD, 23.1N, 75.1W, 30, 1008, ...`.
//!   Wind `-99` and pressure `-999` are missing markers.
//! * UNISYS track files: a `Date:` line carrying the year, a line ending in the
//!   storm name, an `ADV LAT LON TIME WIND PR STAT` column line, then one row
//!   per advisory. Pressure `-` is missing.
//!
//! Buoy files are NDBC standard-meteorological text: a header naming the
//! columns (`#YY MM DD hh mm WDIR WSPD ... PRES ATMP WTMP ...`), an optional
//! `#`-prefixed units line, then whitespace-separated rows.

use std::collections::BTreeMap;
use std::io::{BufRead, Read, Write};

use chrono::{DateTime, Duration, NaiveDate, TimeZone, Utc};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::terms::Variables;

/// Storm wind speed (knots).
pub const STORM_WIND: &str = "W";
/// Storm central pressure (mb).
pub const STORM_PRESSURE: &str = "P";
/// Buoy wind speed.
pub const BUOY_WIND: &str = "w";
/// Buoy pressure.
pub const BUOY_PRESSURE: &str = "p";
/// Buoy air temperature.
pub const AIR_TEMP: &str = "a";
/// Buoy water temperature.
pub const WATER_TEMP: &str = "t";

/// The six joined variables in their declared order.
pub const VARIABLES: [&str; 6] = [STORM_WIND, STORM_PRESSURE, BUOY_WIND, BUOY_PRESSURE, AIR_TEMP, WATER_TEMP];
/// The four buoy variables.
pub const BUOY_VARIABLES: [&str; 4] = [BUOY_WIND, BUOY_PRESSURE, AIR_TEMP, WATER_TEMP];

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StormReading {
    pub timestamp: DateTime<Utc>,
    pub storm_id: String,
    pub storm_name: String,
    pub lat: f64,
    pub lon: f64,
    /// Knots.
    pub wind: f64,
    /// Millibars.
    pub pressure: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BuoyReading {
    pub timestamp: DateTime<Utc>,
    pub station_id: String,
    pub wind: Option<f64>,
    pub pressure: Option<f64>,
    pub air_temp: Option<f64>,
    pub water_temp: Option<f64>,
}

impl BuoyReading {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            BUOY_WIND => self.wind,
            BUOY_PRESSURE => self.pressure,
            AIR_TEMP => self.air_temp,
            WATER_TEMP => self.water_temp,
            _ => None,
        }
    }
}

/// A storm reading paired with the buoy reading taken `lag_days` earlier.
#[derive(Clone, Debug, PartialEq)]
pub struct JoinedRecord {
    pub storm: StormReading,
    pub buoy: BuoyReading,
    pub lag_days: i64,
}

impl JoinedRecord {
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            STORM_WIND => Some(self.storm.wind),
            STORM_PRESSURE => self.storm.pressure,
            other => self.buoy.get(other),
        }
    }

    pub fn is_complete(&self) -> bool {
        VARIABLES.iter().all(|v| self.get(v).is_some())
    }

    pub fn key(&self) -> String {
        format!("{}@{}", self.storm.storm_id, self.storm.timestamp.format(TIMESTAMP_FORMAT))
    }
}

impl<T: Scalar> Variables<T> for JoinedRecord {
    fn value(&self, name: &str) -> Option<T> {
        self.get(name).and_then(T::from_f64)
    }

    fn record_key(&self) -> Option<String> {
        Some(self.key())
    }
}

/// A problem tied to one input line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RowIssue {
    pub line: usize,
    pub message: String,
}

/// Parsed readings plus everything noticed along the way. Rows listed in
/// `errors` were rejected; rows listed in `lints` were kept.
#[derive(Clone, Debug, Serialize)]
pub struct Parsed<R> {
    pub readings: Vec<R>,
    pub errors: Vec<RowIssue>,
    pub lints: Vec<RowIssue>,
    /// Units as declared by the source, keyed by variable name.
    pub units: BTreeMap<String, String>,
}

impl<R> Default for Parsed<R> {
    fn default() -> Self {
        Self { readings: Vec::new(), errors: Vec::new(), lints: Vec::new(), units: BTreeMap::new() }
    }
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format { line, message: message.into() }
}

/// Parses best-track text in HURDAT2 or UNISYS layout.
pub fn parse_best_track<R: BufRead>(reader: R) -> Result<Parsed<StormReading>> {
    let lines: Vec<String> = reader.lines().collect::<std::io::Result<_>>()?;
    let first = lines.iter().find(|l| !l.trim().is_empty());
    let mut parsed = match first {
        None => Parsed::default(),
        Some(l) if l.trim_start().starts_with("Date:") => parse_unisys(&lines)?,
        Some(_) => parse_hurdat2(&lines)?,
    };
    parsed.units.insert(STORM_WIND.into(), "kt".into());
    parsed.units.insert(STORM_PRESSURE.into(), "mb".into());
    Ok(parsed)
}

struct StormHeader {
    id: String,
    name: String,
}

fn is_hurdat_id(s: &str) -> bool {
    s.len() == 8
        && s[..2].chars().all(|c| c.is_ascii_alphabetic())
        && s[2..].chars().all(|c| c.is_ascii_digit())
}

fn parse_hurdat2(lines: &[String]) -> Result<Parsed<StormReading>> {
    let mut out = Parsed::default();
    let mut header: Option<StormHeader> = None;
    for (idx, raw) in lines.iter().enumerate() {
        let line_no = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        let first = fields[0];
        if first.len() == 8 && first.chars().all(|c| c.is_ascii_digit()) {
            let Some(h) = &header else {
                return Err(format_err(line_no, "observation row before any storm header"));
            };
            match hurdat_row(&fields, h) {
                Ok(r) => {
                    lint_wind(&mut out.lints, line_no, r.wind);
                    out.readings.push(r);
                }
                Err(message) => out.errors.push(RowIssue { line: line_no, message }),
            }
        } else if is_hurdat_id(first) && fields.len() >= 2 {
            let name = fields[1];
            if name.is_empty() {
                return Err(format_err(line_no, format!("storm header `{}` has no name", raw.trim())));
            }
            header = Some(StormHeader { id: first.to_string(), name: name.to_string() });
        } else {
            return Err(format_err(line_no, format!("unreadable storm header `{}`", raw.trim())));
        }
    }
    Ok(out)
}

fn parse_coord(s: &str, pos: char, neg: char, limit: f64) -> std::result::Result<f64, String> {
    let s = s.trim();
    let (num, sign) = match s.chars().last() {
        Some(c) if c == pos => (&s[..s.len() - 1], 1.0),
        Some(c) if c == neg => (&s[..s.len() - 1], -1.0),
        _ => (s, 1.0),
    };
    let v: f64 = num.trim().parse().map_err(|_| format!("bad coordinate `{s}`"))?;
    let v = v * sign;
    if !v.is_finite() || v.abs() > limit {
        return Err(format!("coordinate `{s}` out of range"));
    }
    Ok(v)
}

fn check_storm_values(wind: f64, pressure: Option<f64>) -> std::result::Result<(), String> {
    if !wind.is_finite() || wind < 0.0 {
        return Err(format!("wind {wind} out of range"));
    }
    if let Some(p) = pressure {
        if !(p > 800.0 && p < 1100.0) {
            return Err(format!("pressure {p} outside (800, 1100) mb"));
        }
    }
    Ok(())
}

fn hurdat_row(fields: &[&str], header: &StormHeader) -> std::result::Result<StormReading, String> {
    if fields.len() < 8 {
        return Err(format!("expected at least 8 fields, found {}", fields.len()));
    }
    let date = NaiveDate::parse_from_str(fields[0], "%Y%m%d").map_err(|_| format!("bad date `{}`", fields[0]))?;
    let hhmm: u32 = fields[1].parse().map_err(|_| format!("bad time `{}`", fields[1]))?;
    let naive = date
        .and_hms_opt(hhmm / 100, hhmm % 100, 0)
        .ok_or_else(|| format!("bad time `{}`", fields[1]))?;
    let lat = parse_coord(fields[4], 'N', 'S', 90.0)?;
    let lon = parse_coord(fields[5], 'E', 'W', 180.0)?;
    let wind: f64 = fields[6].parse().map_err(|_| format!("bad wind `{}`", fields[6]))?;
    if wind == -99.0 {
        return Err("wind missing".into());
    }
    let pressure: f64 = fields[7].parse().map_err(|_| format!("bad pressure `{}`", fields[7]))?;
    let pressure = (pressure != -999.0).then_some(pressure);
    check_storm_values(wind, pressure)?;
    Ok(StormReading {
        timestamp: Utc.from_utc_datetime(&naive),
        storm_id: header.id.clone(),
        storm_name: header.name.clone(),
        lat,
        lon,
        wind,
        pressure,
    })
}

fn parse_unisys(lines: &[String]) -> Result<Parsed<StormReading>> {
    let mut out = Parsed::default();
    // (id, name, start year, last month seen)
    let mut block: Option<(String, String, i32, u32)> = None;
    let mut idx = 0;
    while idx < lines.len() {
        let line_no = idx + 1;
        let line = lines[idx].trim();
        idx += 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("Date:") {
            let year = rest
                .split(|c: char| !c.is_ascii_digit())
                .find(|t| t.len() == 4)
                .and_then(|t| t.parse::<i32>().ok())
                .ok_or_else(|| format_err(line_no, format!("no year in `{line}`")))?;
            let first_month = rest
                .split_whitespace()
                .find_map(month_number)
                .unwrap_or(1);
            let name_line = lines
                .get(idx)
                .map(|l| l.trim())
                .filter(|l| !l.is_empty() && !l.starts_with("ADV"))
                .ok_or_else(|| format_err(line_no + 1, "missing storm name line"))?;
            let name = name_line.split_whitespace().last().unwrap_or_default().to_string();
            idx += 1;
            match lines.get(idx) {
                Some(l) if l.trim_start().starts_with("ADV") => idx += 1,
                _ => return Err(format_err(idx + 1, "missing `ADV LAT LON TIME WIND PR STAT` column line")),
            }
            block = Some((format!("{year}-{name}"), name, year, first_month));
            continue;
        }
        let Some((id, name, year, last_month)) = block.as_mut() else {
            return Err(format_err(line_no, format!("unreadable storm header `{line}`")));
        };
        match unisys_row(line, id, name, year, last_month) {
            Ok(r) => {
                lint_wind(&mut out.lints, line_no, r.wind);
                out.readings.push(r);
            }
            Err(message) => out.errors.push(RowIssue { line: line_no, message }),
        }
    }
    Ok(out)
}

fn month_number(tok: &str) -> Option<u32> {
    const MONTHS: [&str; 12] = ["JAN", "FEB", "MAR", "APR", "MAY", "JUN", "JUL", "AUG", "SEP", "OCT", "NOV", "DEC"];
    MONTHS.iter().position(|m| tok.eq_ignore_ascii_case(m)).map(|i| i as u32 + 1)
}

fn unisys_row(
    line: &str,
    id: &str,
    name: &str,
    year: &mut i32,
    last_month: &mut u32,
) -> std::result::Result<StormReading, String> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    if toks.len() < 6 {
        return Err(format!("expected at least 6 fields, found {}", toks.len()));
    }
    let lat = parse_coord(toks[1], 'N', 'S', 90.0)?;
    let lon = parse_coord(toks[2], 'E', 'W', 180.0)?;
    let time = toks[3].trim_end_matches('Z');
    let parts: Vec<&str> = time.split('/').collect();
    let [mm, dd, hh] = parts[..] else {
        return Err(format!("bad time `{}`", toks[3]));
    };
    let (mm, dd, hh): (u32, u32, u32) = match (mm.parse(), dd.parse(), hh.parse()) {
        (Ok(a), Ok(b), Ok(c)) => (a, b, c),
        _ => return Err(format!("bad time `{}`", toks[3])),
    };
    if mm < *last_month {
        *year += 1;
    }
    *last_month = mm;
    let naive = NaiveDate::from_ymd_opt(*year, mm, dd)
        .and_then(|d| d.and_hms_opt(hh, 0, 0))
        .ok_or_else(|| format!("bad time `{}`", toks[3]))?;
    if toks[4] == "-" {
        return Err("wind missing".into());
    }
    let wind: f64 = toks[4].parse().map_err(|_| format!("bad wind `{}`", toks[4]))?;
    let pressure = match toks[5] {
        "-" => None,
        s => Some(s.parse::<f64>().map_err(|_| format!("bad pressure `{s}`"))?),
    };
    check_storm_values(wind, pressure)?;
    Ok(StormReading {
        timestamp: Utc.from_utc_datetime(&naive),
        storm_id: id.to_string(),
        storm_name: name.to_string(),
        lat,
        lon,
        wind,
        pressure,
    })
}

fn lint_wind(lints: &mut Vec<RowIssue>, line: usize, wind: f64) {
    if wind % 5.0 != 0.0 {
        lints.push(RowIssue { line, message: format!("wind {wind} kt is not a multiple of 5") });
    }
}

struct BuoyColumn {
    names: &'static [&'static str],
    variable: &'static str,
    sentinels: &'static [f64],
}

const BUOY_COLUMNS: [BuoyColumn; 4] = [
    BuoyColumn { names: &["WSPD", "SPD"], variable: BUOY_WIND, sentinels: &[99.0, 999.0] },
    BuoyColumn { names: &["PRES", "BAR"], variable: BUOY_PRESSURE, sentinels: &[9999.0] },
    BuoyColumn { names: &["ATMP"], variable: AIR_TEMP, sentinels: &[99.0, 999.0] },
    BuoyColumn { names: &["WTMP"], variable: WATER_TEMP, sentinels: &[99.0, 999.0] },
];

fn find_column(header: &[&str], names: &[&str]) -> Option<usize> {
    header.iter().position(|h| names.contains(h))
}

/// Parses NDBC standard-meteorological text for one station.
///
/// Column positions come from the header. Missing-value sentinels are
/// per column: `99.0`/`999.0` for wind speed and temperatures, `9999.0` for
/// pressure.
pub fn parse_buoy_stdmet<R: BufRead>(reader: R, station_id: &str) -> Result<Parsed<BuoyReading>> {
    let mut out = Parsed::default();
    let mut header: Option<Vec<String>> = None;
    let mut cols: Option<([usize; 4], [usize; 4], Option<usize>)> = None;

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let Some(hdr) = &header else {
            let starts_alpha = trimmed.trim_start_matches('#').starts_with(|c: char| c.is_ascii_alphabetic());
            if !(trimmed.starts_with('#') || starts_alpha) {
                return Err(format_err(line_no, "missing column header"));
            }
            let toks: Vec<String> = trimmed
                .trim_start_matches('#')
                .split_whitespace()
                .map(str::to_string)
                .collect();
            let refs: Vec<&str> = toks.iter().map(String::as_str).collect();
            let time_cols = [
                find_column(&refs, &["YY", "YYYY"]).ok_or_else(|| Error::MissingColumn("YY".into()))?,
                find_column(&refs, &["MM"]).ok_or_else(|| Error::MissingColumn("MM".into()))?,
                find_column(&refs, &["DD"]).ok_or_else(|| Error::MissingColumn("DD".into()))?,
                find_column(&refs, &["hh"]).ok_or_else(|| Error::MissingColumn("hh".into()))?,
            ];
            let minute = find_column(&refs, &["mm"]);
            let mut value_cols = [0usize; 4];
            for (slot, col) in value_cols.iter_mut().zip(&BUOY_COLUMNS) {
                *slot = find_column(&refs, col.names).ok_or_else(|| Error::MissingColumn(col.names[0].into()))?;
            }
            cols = Some((time_cols, value_cols, minute));
            header = Some(toks);
            continue;
        };
        if trimmed.starts_with('#') {
            // Units line: aligned with the header columns.
            let units: Vec<&str> = trimmed.trim_start_matches('#').split_whitespace().collect();
            if units.len() == hdr.len() && out.units.is_empty() {
                let (_, value_cols, _) = cols.as_ref().expect("columns set with header");
                for (col, &j) in BUOY_COLUMNS.iter().zip(value_cols) {
                    out.units.insert(col.variable.to_string(), units[j].to_string());
                }
            }
            continue;
        }
        let (time_cols, value_cols, minute) = cols.as_ref().expect("columns set with header");
        match buoy_row(trimmed, station_id, time_cols, value_cols, *minute) {
            Ok(r) => out.readings.push(r),
            Err(message) => out.errors.push(RowIssue { line: line_no, message }),
        }
    }
    if header.is_none() {
        return Err(format_err(1, "missing column header"));
    }
    Ok(out)
}

fn buoy_row(
    line: &str,
    station: &str,
    time_cols: &[usize; 4],
    value_cols: &[usize; 4],
    minute: Option<usize>,
) -> std::result::Result<BuoyReading, String> {
    let toks: Vec<&str> = line.split_whitespace().collect();
    let field = |j: usize| toks.get(j).copied().ok_or_else(|| format!("row has only {} fields", toks.len()));
    let int = |j: usize| -> std::result::Result<u32, String> {
        let s = field(j)?;
        s.parse().map_err(|_| format!("bad integer `{s}`"))
    };
    let mut year = int(time_cols[0])? as i32;
    if year < 100 {
        year += 1900;
    }
    let naive = NaiveDate::from_ymd_opt(year, int(time_cols[1])?, int(time_cols[2])?)
        .and_then(|d| d.and_hms_opt(int(time_cols[3]).ok()?, minute.map_or(Ok(0), int).ok()?, 0))
        .ok_or_else(|| "bad date/time fields".to_string())?;
    let mut values = [None; 4];
    for ((slot, &j), col) in values.iter_mut().zip(value_cols).zip(&BUOY_COLUMNS) {
        let s = field(j)?;
        let v: f64 = s.parse().map_err(|_| format!("bad {} value `{s}`", col.names[0]))?;
        if !v.is_finite() {
            return Err(format!("non-finite {} value", col.names[0]));
        }
        *slot = (!col.sentinels.contains(&v)).then_some(v);
    }
    Ok(BuoyReading {
        timestamp: Utc.from_utc_datetime(&naive),
        station_id: station.to_string(),
        wind: values[0],
        pressure: values[1],
        air_temp: values[2],
        water_temp: values[3],
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn parse_ts(s: &str, line: usize) -> Result<DateTime<Utc>> {
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.with_timezone(&Utc))
        .map_err(|_| format_err(line, format!("bad timestamp `{s}`")))
}

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| format_err(line, format!("bad number `{s}`")))
}

fn parse_req(s: &str, line: usize) -> Result<f64> {
    parse_opt(s, line)?.ok_or_else(|| format_err(line, "required value is empty"))
}

pub const STORM_CSV_HEADER: [&str; 7] = ["timestamp", "storm_id", "name", "lat", "lon", "W", "P"];
pub const BUOY_CSV_HEADER: [&str; 6] = ["timestamp", "station", "w", "p", "a", "t"];

pub fn write_storms_csv<W: Write>(writer: W, storms: &[StormReading]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(STORM_CSV_HEADER)?;
    for s in storms {
        w.write_record([
            s.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            s.storm_id.clone(),
            s.storm_name.clone(),
            s.lat.to_string(),
            s.lon.to_string(),
            s.wind.to_string(),
            opt(s.pressure),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_storms_csv<R: Read>(reader: R) -> Result<Vec<StormReading>> {
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(STORM_CSV_HEADER) {
        return Err(format_err(1, format!("expected header {}", STORM_CSV_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != STORM_CSV_HEADER.len() {
            return Err(format_err(line, "wrong field count"));
        }
        out.push(StormReading {
            timestamp: parse_ts(&rec[0], line)?,
            storm_id: rec[1].to_string(),
            storm_name: rec[2].to_string(),
            lat: parse_req(&rec[3], line)?,
            lon: parse_req(&rec[4], line)?,
            wind: parse_req(&rec[5], line)?,
            pressure: parse_opt(&rec[6], line)?,
        });
    }
    Ok(out)
}

pub fn write_buoys_csv<W: Write>(writer: W, buoys: &[BuoyReading]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(BUOY_CSV_HEADER)?;
    for b in buoys {
        w.write_record([
            b.timestamp.format(TIMESTAMP_FORMAT).to_string(),
            b.station_id.clone(),
            opt(b.wind),
            opt(b.pressure),
            opt(b.air_temp),
            opt(b.water_temp),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_buoys_csv<R: Read>(reader: R) -> Result<Vec<BuoyReading>> {
    let mut r = csv::Reader::from_reader(reader);
    if r.headers()?.iter().ne(BUOY_CSV_HEADER) {
        return Err(format_err(1, format!("expected header {}", BUOY_CSV_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != BUOY_CSV_HEADER.len() {
            return Err(format_err(line, "wrong field count"));
        }
        out.push(BuoyReading {
            timestamp: parse_ts(&rec[0], line)?,
            station_id: rec[1].to_string(),
            wind: parse_opt(&rec[2], line)?,
            pressure: parse_opt(&rec[3], line)?,
            air_temp: parse_opt(&rec[4], line)?,
            water_temp: parse_opt(&rec[5], line)?,
        });
    }
    Ok(out)
}

/// Result of [`join_lagged`].
#[derive(Clone, Debug, Default)]
pub struct JoinOutcome {
    pub records: Vec<JoinedRecord>,
    /// Storm readings with no buoy reading inside the tolerance window.
    pub unmatched: usize,
}

/// Attaches to each storm reading the buoy reading nearest to
/// `storm time − dt days`, provided it lies within `tolerance`. Equidistant
/// candidates resolve to the earlier buoy reading. Output is sorted by storm
/// timestamp (stable with respect to input order).
pub fn join_lagged(
    storms: &[StormReading],
    buoys: &[BuoyReading],
    dt_days: i64,
    tolerance: Duration,
) -> Result<JoinOutcome> {
    if dt_days < 0 {
        return Err(Error::InvalidArgument(format!("lag must be nonnegative, got {dt_days}")));
    }
    if tolerance <= Duration::zero() {
        return Err(Error::InvalidArgument("join tolerance must be positive".into()));
    }
    let mut order: Vec<&BuoyReading> = buoys.iter().collect();
    order.sort_by_key(|b| b.timestamp);
    let mut storm_order: Vec<&StormReading> = storms.iter().collect();
    storm_order.sort_by_key(|s| s.timestamp);

    let lag = Duration::days(dt_days);
    let mut out = JoinOutcome::default();
    for s in storm_order {
        let target = s.timestamp - lag;
        let idx = order.partition_point(|b| b.timestamp < target);
        let before = idx.checked_sub(1).map(|i| order[i]);
        let after = order.get(idx).copied();
        let pick = match (before, after) {
            (Some(b), Some(a)) => {
                if target - b.timestamp <= a.timestamp - target {
                    Some(b)
                } else {
                    Some(a)
                }
            }
            (b, a) => b.or(a),
        };
        match pick {
            Some(b) if (b.timestamp - target).abs() <= tolerance => out.records.push(JoinedRecord {
                storm: s.clone(),
                buoy: b.clone(),
                lag_days: dt_days,
            }),
            _ => out.unmatched += 1,
        }
    }
    Ok(out)
}

/// Keeps records with all six variables present; returns the number dropped.
pub fn complete_cases(records: Vec<JoinedRecord>) -> (Vec<JoinedRecord>, usize) {
    let before = records.len();
    let kept: Vec<JoinedRecord> = records.into_iter().filter(JoinedRecord::is_complete).collect();
    let dropped = before - kept.len();
    (kept, dropped)
}

/// Groups storm readings by storm id, preserving first-appearance order.
pub fn group_by_storm(storms: &[StormReading]) -> Vec<(&str, Vec<&StormReading>)> {
    let mut groups: Vec<(&str, Vec<&StormReading>)> = Vec::new();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for s in storms {
        let slot = *index.entry(&s.storm_id).or_insert_with(|| {
            groups.push((&s.storm_id, Vec::new()));
            groups.len() - 1
        });
        groups[slot].1.push(s);
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    const HURDAT: &str = "\
AL122005,            KATRINA,      2,
20050823, 1800,  , TD, 23.1N,  75.1W,  30, 1008,
20050829, 1200, L, HU, 29.5N,  89.6W,  65,  987,
";

    #[test]
    fn hurdat_block() {
        let p = parse_best_track(HURDAT.as_bytes()).unwrap();
        assert_eq!(p.readings.len(), 2);
        assert!(p.errors.is_empty());
        assert!(p.readings.iter().all(|r| r.storm_id == "AL122005" && r.storm_name == "KATRINA"));
        let r = &p.readings[1];
        assert_eq!(r.wind, 65.0);
        assert_eq!(r.pressure, Some(987.0));
        assert_eq!(r.lat, 29.5);
        assert_eq!(r.lon, -89.6);
        assert_eq!(r.timestamp, Utc.with_ymd_and_hms(2005, 8, 29, 12, 0, 0).unwrap());
    }

    #[test]
    fn empty_input() {
        let p = parse_best_track("".as_bytes()).unwrap();
        assert!(p.readings.is_empty() && p.errors.is_empty());
    }

    #[test]
    fn missing_pressure_and_bad_rows() {
        let text = "\
AL011851,            UNNAMED,      3,
18510625, 0000,  , HU, 28.0N,  94.8W,  80, -999,
18510625, 0600,  , HU, 28.0N,  95.4W, -99, -999,
18510625, 1200,  , HU, 28.1N,  96.0W,  72, -999,
18510625, 1800,  , HU, 9X.0N,  96.5W,  70, -999,
";
        let p = parse_best_track(text.as_bytes()).unwrap();
        assert_eq!(p.readings.len(), 2);
        assert_eq!(p.readings[0].pressure, None);
        assert_eq!(p.errors.iter().map(|e| e.line).collect::<Vec<_>>(), vec![3, 5]);
        assert_eq!(p.lints, vec![RowIssue { line: 4, message: "wind 72 kt is not a multiple of 5".into() }]);
    }

    #[test]
    fn unreadable_header_names_line() {
        let text = "AL122005, KATRINA, 1,\ngarbage here\n";
        match parse_best_track(text.as_bytes()) {
            Err(Error::Format { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unisys_block() {
        let text = "\
Date: 28 DEC 2004-02 JAN 2005
Tropical Storm ZETA
ADV  LAT    LON      TIME     WIND  PR  STAT
  1  25.00  -94.60 12/31/18Z   40  1004 TROPICAL STORM
  2  25.10  -95.00 01/01/00Z   45     - TROPICAL STORM
";
        let p = parse_best_track(text.as_bytes()).unwrap();
        assert_eq!(p.readings.len(), 2);
        assert_eq!(p.readings[0].storm_name, "ZETA");
        assert_eq!(p.readings[1].timestamp, Utc.with_ymd_and_hms(2005, 1, 1, 0, 0, 0).unwrap());
        assert_eq!(p.readings[1].pressure, None);
        assert_eq!(p.readings[0].lon, -94.6);
    }

    const STDMET: &str = "\
#YY  MM DD hh mm WDIR WSPD GST  WVHT   DPD   APD MWD   PRES  ATMP  WTMP  DEWP  VIS  TIDE
#yr  mo dy hr mn degT m/s  m/s     m   sec   sec degT   hPa  degC  degC  degC   mi    ft
2005 08 26 12 50 120  5.0  6.0   0.6     6   4.2 134 9999.0  29.3  30.5  24.4 99.0 99.00
2005 08 26 13 50 130  6.1  7.0   0.6     6   4.2 134 1012.4  29.1  30.4  24.4 99.0 99.00
";

    #[test]
    fn stdmet_sentinels_and_units() {
        let p = parse_buoy_stdmet(STDMET.as_bytes(), "42001").unwrap();
        assert_eq!(p.readings.len(), 2);
        assert_eq!(p.readings[0].pressure, None);
        assert_eq!(p.readings[0].wind, Some(5.0));
        let full = &p.readings[1];
        assert_eq!(
            (full.wind, full.pressure, full.air_temp, full.water_temp),
            (Some(6.1), Some(1012.4), Some(29.1), Some(30.4))
        );
        assert_eq!(full.timestamp, Utc.with_ymd_and_hms(2005, 8, 26, 13, 50, 0).unwrap());
        assert_eq!(p.units.get("p").map(String::as_str), Some("hPa"));
    }

    #[test]
    fn stdmet_header_only_and_absent() {
        let header_only = STDMET.lines().take(2).collect::<Vec<_>>().join("\n");
        assert!(parse_buoy_stdmet(header_only.as_bytes(), "x").unwrap().readings.is_empty());
        assert!(matches!(
            parse_buoy_stdmet("2005 08 26 12 50 120\n".as_bytes(), "x"),
            Err(Error::Format { .. })
        ));
        assert!(matches!(
            parse_buoy_stdmet("#YY MM DD hh WSPD PRES ATMP\n".as_bytes(), "x"),
            Err(Error::MissingColumn(c)) if c == "WTMP"
        ));
    }

    #[test]
    fn legacy_header_without_hash() {
        let text = "YYYY MM DD hh WD   WSPD GST  WVHT  DPD   APD  MWD  BAR    ATMP  WTMP  DEWP  VIS\n\
                    1998 01 01 00 200  4.0  5.0  1.2   7.0   5.1  99  1019.9  21.3  23.1  999.0 99.0\n";
        let p = parse_buoy_stdmet(text.as_bytes(), "x").unwrap();
        assert_eq!(p.readings[0].pressure, Some(1019.9));
    }

    fn storm(h: i64) -> StormReading {
        StormReading {
            timestamp: Utc.with_ymd_and_hms(2005, 8, 20, 0, 0, 0).unwrap() + Duration::hours(h),
            storm_id: "S".into(),
            storm_name: "S".into(),
            lat: 20.0,
            lon: -60.0,
            wind: 50.0,
            pressure: Some(990.0),
        }
    }

    fn buoy(at: DateTime<Utc>, wind: f64) -> BuoyReading {
        BuoyReading {
            timestamp: at,
            station_id: "B".into(),
            wind: Some(wind),
            pressure: Some(1010.0),
            air_temp: Some(28.0),
            water_temp: Some(29.0),
        }
    }

    #[test]
    fn join_exact_outside_and_tie() {
        let s = storm(100);
        let target = s.timestamp - Duration::days(3);
        let tol = Duration::minutes(90);

        let j = join_lagged(&[s.clone()], &[buoy(target, 1.0)], 3, tol).unwrap();
        assert_eq!(j.records.len(), 1);

        let j = join_lagged(&[s.clone()], &[buoy(target + Duration::minutes(210), 1.0)], 3, tol).unwrap();
        assert_eq!((j.records.len(), j.unmatched), (0, 1));

        let j = join_lagged(
            &[s],
            &[buoy(target + Duration::minutes(30), 2.0), buoy(target - Duration::minutes(30), 1.0)],
            3,
            tol,
        )
        .unwrap();
        assert_eq!(j.records[0].buoy.wind, Some(1.0));
    }

    #[test]
    fn join_rejects_bad_arguments() {
        assert!(join_lagged(&[], &[], -1, Duration::minutes(1)).is_err());
        assert!(join_lagged(&[], &[], 1, Duration::zero()).is_err());
    }

    #[test]
    fn complete_case_filter() {
        let s = storm(0);
        let mut b = buoy(s.timestamp, 3.0);
        b.air_temp = None;
        let recs = vec![
            JoinedRecord { storm: s.clone(), buoy: buoy(s.timestamp, 3.0), lag_days: 0 },
            JoinedRecord { storm: s, buoy: b, lag_days: 0 },
        ];
        let (kept, dropped) = complete_cases(recs);
        assert_eq!((kept.len(), dropped), (1, 1));
    }
}
