//! Published headline values for the 2000–2009 Atlantic archive, and a
//! loose relative comparison used for reporting (never for gating).

use serde::Serialize;

pub const MEAN_WIND_KT: f64 = 50.0;
pub const MODE_WIND_KT: f64 = 30.0;
pub const N_STORMS: f64 = 165.0;
/// Storm counts by category: tropical storm, then categories 1–5.
pub const CATEGORY_STORMS: [f64; 6] = [16.0, 82.0, 28.0, 15.0, 13.0, 10.0];
/// Constancy of raw buoy columns `p`, `a`, `t`, `w`.
pub const RAW_CONSTANCY: [(&str, f64); 4] = [("p", 0.9999852), ("a", 0.9876067), ("t", 0.9919942), ("w", 0.79)];
/// Constancy of per-wind-bin means `p`, `a`, `t`, `w`.
pub const BIN_CONSTANCY: [(&str, f64); 4] = [("p", 0.99984), ("a", 0.9853786), ("t", 0.92936), ("w", 0.8624187)];
pub const PEAK_CORRELATION: f64 = 0.9882843;
pub const PEAK_LAG_DAYS: f64 = 3.0;
pub const SS_LOADINGS: [f64; 5] = [9.05, 8.77, 6.35, 1.84, 0.37];

pub const RELATIVE_TOLERANCE: f64 = 0.10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceCheck {
    pub name: String,
    pub observed: f64,
    pub reference: f64,
    pub relative_error: f64,
    pub within_tolerance: bool,
}

impl ReferenceCheck {
    pub fn new(name: impl Into<String>, observed: f64, reference: f64) -> Self {
        let relative_error = if reference == 0.0 {
            observed.abs()
        } else {
            ((observed - reference) / reference).abs()
        };
        Self {
            name: name.into(),
            observed,
            reference,
            relative_error,
            within_tolerance: relative_error <= RELATIVE_TOLERANCE,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_check() {
        assert!(ReferenceCheck::new("m", 54.0, 50.0).within_tolerance);
        assert!(!ReferenceCheck::new("m", 56.0, 50.0).within_tolerance);
    }
}
