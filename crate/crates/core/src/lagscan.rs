//! Day-lag scan: for each lag, join, fit the unity model, invert it in the
//! target variable and correlate the selected root with the observation.

use std::io::Write;

use chrono::Duration;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::implicit::{fit_unity, quadratic_in, select_root};
use crate::ingest::{complete_cases, join_lagged, BuoyReading, StormReading, JoinedRecord};
use crate::linalg::pearson;
use crate::scalar::Scalar;
use crate::terms::{evaluate, TermDescriptor};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct LagEntry<T> {
    pub dt: i64,
    /// Complete joined records available at this lag.
    pub n_records: usize,
    /// Records dropped because no buoy reading fell inside the window.
    pub n_unmatched: usize,
    /// Records dropped for missing values.
    pub n_incomplete: usize,
    /// Records whose quadratic had no real root.
    pub n_excluded: usize,
    pub r_squared: Option<T>,
    pub correlation: Option<T>,
    pub skip_reason: Option<String>,
}

impl<T> LagEntry<T> {
    pub fn skipped(&self) -> bool {
        self.skip_reason.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct LagScanResult<T> {
    pub entries: Vec<LagEntry<T>>,
    pub best_lag: i64,
    pub best_correlation: T,
}

/// Lag with the highest correlation; the earliest entry wins ties.
pub fn best_of<T: Scalar>(entries: &[LagEntry<T>]) -> Option<(i64, T)> {
    let mut best: Option<(i64, T)> = None;
    for e in entries {
        if let Some(r) = e.correlation {
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((e.dt, r));
            }
        }
    }
    best
}

/// Settings shared by every lag of a scan.
#[derive(Clone, Debug)]
pub struct ScanConfig {
    pub target: String,
    pub tolerance: Duration,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { target: crate::ingest::STORM_WIND.to_string(), tolerance: Duration::minutes(90) }
    }
}

fn scan_one<T: Scalar>(
    storms: &[StormReading],
    buoys: &[BuoyReading],
    terms: &[TermDescriptor],
    dt: i64,
    config: &ScanConfig,
) -> Result<LagEntry<T>> {
    let joined = join_lagged(storms, buoys, dt, config.tolerance)?;
    let (records, n_incomplete) = complete_cases(joined.records);
    let mut entry = LagEntry {
        dt,
        n_records: records.len(),
        n_unmatched: joined.unmatched,
        n_incomplete,
        n_excluded: 0,
        r_squared: None,
        correlation: None,
        skip_reason: None,
    };
    if records.len() <= terms.len() {
        entry.skip_reason = Some(format!("{} records for {} terms", records.len(), terms.len()));
        return Ok(entry);
    }
    let design = evaluate::<T, JoinedRecord>(terms, &records)?;
    let model = match fit_unity(&design) {
        Ok(m) => m,
        Err(e @ Error::RankDeficient { .. }) => {
            entry.skip_reason = Some(e.to_string());
            return Ok(entry);
        }
        Err(e) => return Err(e),
    };
    entry.r_squared = Some(model.r_squared);

    let mut observed = Vec::with_capacity(records.len());
    let mut estimated = Vec::with_capacity(records.len());
    for rec in &records {
        let bounds = quadratic_in(&model, &config.target, rec)?;
        let obs: T = crate::terms::Variables::value(rec, &config.target).ok_or_else(|| Error::MissingValue {
            record: rec.key(),
            variable: config.target.clone(),
        })?;
        match select_root(&bounds, obs) {
            Ok((root, _)) => {
                observed.push(obs);
                estimated.push(root);
            }
            Err(_) => entry.n_excluded += 1,
        }
    }
    entry.correlation = pearson(&observed, &estimated);
    if entry.correlation.is_none() {
        entry.skip_reason = Some("correlation undefined (fewer than two roots or zero variance)".into());
    }
    Ok(entry)
}

/// Runs every lag in `dts` independently; entries keep the order of `dts`.
pub fn scan<T: Scalar>(
    storms: &[StormReading],
    buoys: &[BuoyReading],
    terms: &[TermDescriptor],
    dts: &[i64],
    config: &ScanConfig,
) -> Result<LagScanResult<T>> {
    if dts.is_empty() {
        return Err(Error::InvalidArgument("lag range is empty".into()));
    }
    if storms.is_empty() || buoys.is_empty() {
        return Err(Error::InsufficientData("lag scan needs storm and buoy readings".into()));
    }
    if !terms.iter().any(|t| t.power_of(&config.target) > 0) {
        return Err(Error::TargetAbsent(config.target.clone()));
    }
    let entries = dts
        .par_iter()
        .map(|&dt| scan_one(storms, buoys, terms, dt, config))
        .collect::<Result<Vec<_>>>()?;
    let (best_lag, best_correlation) =
        best_of(&entries).ok_or_else(|| Error::InsufficientData("every lag was skipped".into()))?;
    Ok(LagScanResult { entries, best_lag, best_correlation })
}

fn cell<T: Scalar>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub const CURVE_CSV_HEADER: &str = "dt,n,r_squared,correlation,excluded,skipped";

/// One row per lag in scan order: `dt,n,r_squared,correlation,excluded,skipped`.
pub fn correlation_curve_csv<T: Scalar, W: Write>(result: &LagScanResult<T>, mut out: W) -> Result<()> {
    writeln!(out, "{CURVE_CSV_HEADER}")?;
    for e in &result.entries {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.dt,
            e.n_records,
            cell(e.r_squared),
            cell(e.correlation),
            e.n_excluded,
            e.skipped()
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(dt: i64, r: Option<f64>) -> LagEntry<f64> {
        LagEntry {
            dt,
            n_records: 10,
            n_unmatched: 0,
            n_incomplete: 0,
            n_excluded: 0,
            r_squared: r.map(|_| 0.5),
            correlation: r,
            skip_reason: r.is_none().then(|| "skipped".into()),
        }
    }

    #[test]
    fn best_lag_ties_go_to_smaller_dt() {
        let e = vec![entry(1, Some(0.5)), entry(2, Some(0.9)), entry(3, Some(0.9)), entry(4, None)];
        assert_eq!(best_of(&e), Some((2, 0.9)));
    }

    #[test]
    fn appending_lower_lag_keeps_best() {
        let mut e = vec![entry(1, Some(0.5)), entry(2, Some(0.9))];
        let before = best_of(&e);
        e.push(entry(3, Some(0.89)));
        assert_eq!(best_of(&e), before);
    }

    #[test]
    fn curve_rows() {
        let result = LagScanResult {
            entries: vec![entry(1, Some(0.25)), entry(2, None), entry(3, Some(0.75))],
            best_lag: 3,
            best_correlation: 0.75,
        };
        let mut buf = Vec::new();
        correlation_curve_csv(&result, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "1,10,0.5,0.25,0,false");
        assert_eq!(lines[2], "2,10,,,0,true");
        assert_eq!(lines[3], "3,10,0.5,0.75,0,false");
    }
}
