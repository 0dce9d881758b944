//! Mean buoy conditions per observed storm wind speed, and how constant each
//! per-bin mean series is across bins.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::factor::constancy_index;
use crate::ingest::{JoinedRecord, AIR_TEMP, BUOY_PRESSURE, BUOY_WIND, WATER_TEMP};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindBinSummary {
    pub wind: f64,
    pub n: usize,
    pub mean_w: f64,
    pub mean_p: f64,
    pub mean_a: f64,
    pub mean_t: f64,
}

#[derive(Clone, Debug, Default)]
pub struct BinOutcome {
    pub bins: Vec<WindBinSummary>,
    /// Wind values that are not multiples of 5 kt (binned anyway).
    pub lints: Vec<f64>,
}

/// Groups complete records by exact storm wind and averages the buoy
/// variables within each group. Bins come out in ascending wind order.
pub fn bin_means(records: &[JoinedRecord]) -> Result<BinOutcome> {
    let mut rows: Vec<(f64, [f64; 4])> = Vec::with_capacity(records.len());
    for r in records {
        let mut vals = [0.0; 4];
        for (slot, var) in vals.iter_mut().zip([BUOY_WIND, BUOY_PRESSURE, AIR_TEMP, WATER_TEMP]) {
            *slot = r.get(var).ok_or_else(|| Error::MissingValue { record: r.key(), variable: var.into() })?;
        }
        rows.push((r.storm.wind, vals));
    }
    // sorted so the summation order does not depend on input order
    rows.sort_by(|x, y| {
        x.0.total_cmp(&y.0).then_with(|| {
            x.1.iter().zip(&y.1).map(|(a, b)| a.total_cmp(b)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });

    let mut out = BinOutcome::default();
    let mut i = 0;
    while i < rows.len() {
        let wind = rows[i].0;
        let j = rows[i..].iter().position(|r| r.0 != wind).map_or(rows.len(), |p| i + p);
        let group = &rows[i..j];
        let n = group.len();
        let mean = |k: usize| group.iter().map(|r| r.1[k]).sum::<f64>() / n as f64;
        if wind % 5.0 != 0.0 {
            out.lints.push(wind);
        }
        out.bins.push(WindBinSummary { wind, n, mean_w: mean(0), mean_p: mean(1), mean_a: mean(2), mean_t: mean(3) });
        i = j;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VariabilityRow {
    pub variable: String,
    pub constancy: f64,
}

/// Constancy index of each per-bin mean series, most constant first.
pub fn variability_report(bins: &[WindBinSummary]) -> Result<Vec<VariabilityRow>> {
    if bins.len() < 2 {
        return Err(Error::InsufficientData(format!("{} wind bins; need at least 2", bins.len())));
    }
    let series: [(&str, fn(&WindBinSummary) -> f64); 4] = [
        (BUOY_WIND, |b| b.mean_w),
        (BUOY_PRESSURE, |b| b.mean_p),
        (AIR_TEMP, |b| b.mean_a),
        (WATER_TEMP, |b| b.mean_t),
    ];
    let mut rows = series
        .iter()
        .map(|(name, get)| {
            let xs: Vec<f64> = bins.iter().map(get).collect();
            Ok(VariabilityRow { variable: name.to_string(), constancy: constancy_index(&xs)? })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.constancy.total_cmp(&a.constancy));
    Ok(rows)
}

pub fn write_bins_csv<W: Write>(bins: &[WindBinSummary], mut out: W) -> Result<()> {
    writeln!(out, "wind,n,mean_w,mean_p,mean_a,mean_t")?;
    for b in bins {
        writeln!(out, "{},{},{},{},{},{}", b.wind, b.n, b.mean_w, b.mean_p, b.mean_a, b.mean_t)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{BuoyReading, StormReading};
    use chrono::{TimeZone, Utc};

    fn rec(wind: f64, t: f64) -> JoinedRecord {
        let ts = Utc.with_ymd_and_hms(2004, 9, 1, 0, 0, 0).unwrap();
        JoinedRecord {
            storm: StormReading {
                timestamp: ts,
                storm_id: "X".into(),
                storm_name: "X".into(),
                lat: 0.0,
                lon: 0.0,
                wind,
                pressure: Some(1000.0),
            },
            buoy: BuoyReading {
                timestamp: ts,
                station_id: "B".into(),
                wind: Some(3.0),
                pressure: Some(1012.0),
                air_temp: Some(27.0),
                water_temp: Some(t),
            },
            lag_days: 0,
        }
    }

    #[test]
    fn examples() {
        let b = bin_means(&[rec(50.0, 28.0), rec(50.0, 30.0)]).unwrap();
        assert_eq!(b.bins.len(), 1);
        assert_eq!((b.bins[0].wind, b.bins[0].n, b.bins[0].mean_t), (50.0, 2, 29.0));
        assert!(bin_means(&[]).unwrap().bins.is_empty());
        let b = bin_means(&[rec(15.0, 1.0), rec(10.0, 1.0)]).unwrap();
        assert_eq!(b.bins.iter().map(|x| x.wind).collect::<Vec<_>>(), vec![10.0, 15.0]);
        assert!(bin_means(&[rec(12.0, 1.0)]).unwrap().lints == vec![12.0]);
    }

    #[test]
    fn variability() {
        let b = bin_means(&[rec(10.0, 1.0), rec(15.0, 3.0)]).unwrap();
        let v = variability_report(&b.bins).unwrap();
        assert_eq!(v.last().unwrap().variable, "t");
        assert_eq!(v.last().unwrap().constancy, 0.8);
        assert!(v[..3].iter().all(|r| r.constancy == 1.0));
        assert!(variability_report(&b.bins[..1]).is_err());
    }
}
