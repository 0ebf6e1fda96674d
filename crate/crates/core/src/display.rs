//! Display rounding for the reporting boundary.
//!
//! The engine keeps every value unrounded; these helpers produce the
//! printed forms — whole counts, whole percentages, one-decimal rates —
//! using half-away-from-zero rounding. Undefined values are emitted as a
//! fixed sentinel token so file schemas stay stable.

/// Sentinel for undefined or missing values in CSV output.
pub const NA: &str = "NA";

/// Rounds half away from zero to an integer value.
pub fn round_half_away(x: f64) -> f64 {
    x.round()
}

/// Rounds half away from zero at `dp` decimal places.
pub fn round_dp(x: f64, dp: u32) -> f64 {
    let scale = 10f64.powi(dp as i32);
    (x * scale).round() / scale
}

/// Unrounded machine column: shortest round-trip decimal form.
pub fn fmt_raw(x: f64) -> String {
    format!("{x}")
}

/// Display form for person counts: whole numbers.
pub fn fmt_count(x: f64) -> String {
    format!("{}", round_half_away(x) as i64)
}

/// Display form for percentages: whole percents, `NA` when undefined.
pub fn fmt_pct(x: Option<f64>) -> String {
    match x {
        Some(p) => format!("{}", round_half_away(p) as i64),
        None => NA.to_string(),
    }
}

/// Display form for per-1000 rates: one decimal place.
pub fn fmt_rate(x: f64) -> String {
    format!("{:.1}", round_dp(x, 1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halves_round_away_from_zero() {
        assert_eq!(fmt_count(2.5), "3");
        assert_eq!(fmt_count(-2.5), "-3");
        assert_eq!(fmt_pct(Some(36.5)), "37");
        assert_eq!(fmt_pct(Some(-41.5)), "-42");
        assert_eq!(fmt_pct(None), NA);
    }

    #[test]
    fn rates_print_one_decimal() {
        assert_eq!(fmt_rate(10.4997), "10.5");
        assert_eq!(fmt_rate(11.46), "11.5");
        assert_eq!(fmt_rate(8.0), "8.0");
    }

    #[test]
    fn raw_form_round_trips() {
        for v in [240.0, 0.1, 532_319.0, 9979.7] {
            assert_eq!(fmt_raw(v).parse::<f64>().unwrap(), v);
        }
    }
}
