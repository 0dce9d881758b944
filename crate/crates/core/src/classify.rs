//! Storm categories by lifetime maximum wind, and descriptive statistics over
//! a best-track dataset.

use std::collections::BTreeMap;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{group_by_storm, StormReading};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub label: String,
    /// Inclusive lower bound in knots.
    pub min_wind: f64,
}

/// Ordered wind thresholds. The first category also covers every wind below
/// the second category's minimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryScale {
    pub name: String,
    pub thresholds: Vec<Threshold>,
}

impl CategoryScale {
    pub fn new(name: impl Into<String>, thresholds: Vec<Threshold>) -> Result<Self> {
        let scale = Self { name: name.into(), thresholds };
        scale.validate()?;
        Ok(scale)
    }

    fn validate(&self) -> Result<()> {
        if self.thresholds.is_empty() {
            return Err(Error::Scale("no categories".into()));
        }
        for w in self.thresholds.windows(2) {
            if !(w[1].min_wind > w[0].min_wind) {
                return Err(Error::Scale(format!(
                    "minimum for `{}` ({}) does not exceed `{}` ({})",
                    w[1].label, w[1].min_wind, w[0].label, w[0].min_wind
                )));
            }
        }
        Ok(())
    }

    /// Stand-in scale using the conventional wind thresholds: tropical storm
    /// below 64 kt, categories 1–5 from 64/83/96/113/137 kt.
    pub fn conventional() -> Self {
        let t = |label: &str, min_wind: f64| Threshold { label: label.into(), min_wind };
        Self {
            name: "conventional wind thresholds (stand-in)".into(),
            thresholds: vec![
                t("tropical storm", 0.0),
                t("category 1", 64.0),
                t("category 2", 83.0),
                t("category 3", 96.0),
                t("category 4", 113.0),
                t("category 5", 137.0),
            ],
        }
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let scale: Self = serde_json::from_str(s).map_err(|e| Error::Scale(e.to_string()))?;
        scale.validate()?;
        Ok(scale)
    }

    /// Reads `label,min_wind` rows (with that header); the scale name is given.
    pub fn from_csv<R: Read>(name: &str, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers().map_err(|e| Error::Scale(e.to_string()))?.clone();
        if headers.iter().ne(["label", "min_wind"]) {
            return Err(Error::Scale("expected header `label,min_wind`".into()));
        }
        let mut thresholds = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::Scale(e.to_string()))?;
            let min_wind = rec[1]
                .trim()
                .parse()
                .map_err(|_| Error::Scale(format!("bad minimum `{}`", &rec[1])))?;
            thresholds.push(Threshold { label: rec[0].trim().to_string(), min_wind });
        }
        Self::new(name, thresholds)
    }

    pub fn category_of(&self, wind: f64) -> &str {
        let idx = self.thresholds.iter().rposition(|t| wind >= t.min_wind).unwrap_or(0);
        &self.thresholds[idx].label
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.thresholds.iter().map(|t| t.label.as_str())
    }
}

/// Category of a storm's maximum wind.
pub fn classify_storm<'a>(readings: &[&StormReading], scale: &'a CategoryScale) -> Result<&'a str> {
    let max = readings
        .iter()
        .map(|r| r.wind)
        .max_by(f64::total_cmp)
        .ok_or_else(|| Error::InsufficientData("storm has no readings".into()))?;
    Ok(scale.category_of(max))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CategoryCount {
    pub label: String,
    pub storms: usize,
    pub readings: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StormSummary {
    pub scale: String,
    pub n_storms: usize,
    pub n_readings: usize,
    /// Storms counted by lifetime-maximum category; readings by their own wind.
    pub categories: Vec<CategoryCount>,
    pub mean_wind: f64,
    /// Most frequent wind value; ties go to the smaller wind.
    pub mode_wind: f64,
}

pub fn summarize(storms: &[StormReading], scale: &CategoryScale) -> Result<StormSummary> {
    if storms.is_empty() {
        return Err(Error::InsufficientData("no storm readings".into()));
    }
    let mut by_label: BTreeMap<&str, (usize, usize)> = scale.labels().map(|l| (l, (0, 0))).collect();
    let groups = group_by_storm(storms);
    for (_, readings) in &groups {
        by_label.get_mut(classify_storm(readings, scale)?).expect("label from scale").0 += 1;
    }
    for r in storms {
        by_label.get_mut(scale.category_of(r.wind)).expect("label from scale").1 += 1;
    }

    let mut winds: Vec<f64> = storms.iter().map(|r| r.wind).collect();
    winds.sort_by(f64::total_cmp);
    let mean_wind = winds.iter().sum::<f64>() / winds.len() as f64;
    let (mut mode_wind, mut best) = (winds[0], 0);
    let mut i = 0;
    while i < winds.len() {
        let j = winds[i..].iter().position(|w| *w != winds[i]).map_or(winds.len(), |p| i + p);
        if j - i > best {
            best = j - i;
            mode_wind = winds[i];
        }
        i = j;
    }

    Ok(StormSummary {
        scale: scale.name.clone(),
        n_storms: groups.len(),
        n_readings: storms.len(),
        categories: scale
            .labels()
            .map(|l| {
                let (storms, readings) = by_label[l];
                CategoryCount { label: l.to_string(), storms, readings }
            })
            .collect(),
        mean_wind,
        mode_wind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{TimeZone, Utc};

    fn reading(id: &str, wind: f64) -> StormReading {
        StormReading {
            timestamp: Utc.with_ymd_and_hms(2003, 9, 1, 0, 0, 0).unwrap(),
            storm_id: id.into(),
            storm_name: id.into(),
            lat: 20.0,
            lon: -50.0,
            wind,
            pressure: None,
        }
    }

    #[test]
    fn classify_examples() {
        let scale = CategoryScale::conventional();
        let r = reading("A", 30.0);
        assert_eq!(classify_storm(&[&r], &scale).unwrap(), "tropical storm");
        let r = reading("A", 96.0);
        assert_eq!(classify_storm(&[&r], &scale).unwrap(), "category 3");
        assert!(classify_storm(&[], &scale).is_err());
    }

    #[test]
    fn summary_examples() {
        let scale = CategoryScale::conventional();
        let s = summarize(&[reading("A", 30.0), reading("A", 50.0), reading("A", 70.0)], &scale).unwrap();
        assert_eq!((s.mean_wind, s.mode_wind, s.n_storms), (50.0, 30.0, 1));
        assert_eq!(s.categories[1].storms, 1);
        let s = summarize(&[reading("A", 30.0), reading("B", 140.0)], &scale).unwrap();
        assert_eq!(s.n_storms, 2);
        assert_eq!(s.categories.iter().map(|c| c.storms).sum::<usize>(), 2);
    }

    #[test]
    fn scale_loading() {
        let json = r#"{"name":"x","thresholds":[{"label":"low","min_wind":0},{"label":"high","min_wind":50}]}"#;
        assert_eq!(CategoryScale::from_json(json).unwrap().category_of(50.0), "high");
        let bad = r#"{"name":"x","thresholds":[{"label":"low","min_wind":60},{"label":"high","min_wind":50}]}"#;
        assert!(matches!(CategoryScale::from_json(bad), Err(Error::Scale(_))));
        let csv = "label,min_wind\nts,0\nhu,64\n";
        assert_eq!(CategoryScale::from_csv("c", csv.as_bytes()).unwrap().category_of(70.0), "hu");
    }
}
