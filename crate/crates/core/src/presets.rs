//! Named term lists for the standard models.

use crate::error::{Error, Result};
use crate::ingest::VARIABLES;
use crate::terms::{parse_terms, TermDescriptor};

/// Storm-wind model over the terms sharing the first factor with `W`.
pub const FACTOR1_WIND: [&str; 10] = ["W", "P", "W^2", "P^2", "Ww", "Wp", "Wa", "Wt", "WP", "Pp"];
/// Buoy-only model: linear and square terms in `p`, `a`, `t`.
pub const BUOY_6TERM: [&str; 6] = ["p", "a", "t", "p^2", "a^2", "t^2"];
/// Buoy-only full quadratic in `w`, `p`, `a`, `t`.
pub const BUOY_14TERM: [&str; 14] = [
    "w", "p", "a", "t", "w^2", "p^2", "a^2", "t^2", "wp", "wa", "wt", "pa", "pt", "at",
];

pub const PRESET_NAMES: [&str; 3] = ["factor1-wind", "buoy-6term", "buoy-14term"];

pub fn preset_names(name: &str) -> Result<&'static [&'static str]> {
    match name {
        "factor1-wind" => Ok(&FACTOR1_WIND),
        "buoy-6term" => Ok(&BUOY_6TERM),
        "buoy-14term" => Ok(&BUOY_14TERM),
        other => Err(Error::InvalidArgument(format!(
            "unknown preset `{other}` (expected one of {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

pub fn preset(name: &str) -> Result<Vec<TermDescriptor>> {
    parse_terms(preset_names(name)?, &VARIABLES)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse_to_expected_sizes() {
        assert_eq!(preset("factor1-wind").unwrap().len(), 10);
        assert_eq!(preset("buoy-6term").unwrap().len(), 6);
        let full = preset("buoy-14term").unwrap();
        assert_eq!(full.len(), 14);
        assert!(full.iter().all(|t| t.power_of("W") == 0 && t.power_of("P") == 0));
        assert!(preset("nope").is_err());
    }

    #[test]
    fn wind_model_is_quadratic_in_storm_wind() {
        let t = preset("factor1-wind").unwrap();
        assert_eq!(t.iter().filter(|t| t.power_of("W") == 2).count(), 1);
        assert_eq!(t.iter().filter(|t| t.power_of("W") == 1).count(), 6);
    }
}
