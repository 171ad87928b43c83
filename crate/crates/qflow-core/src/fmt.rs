//! Deterministic number formatting for telemetry and report files.

/// Formats `value` with 12 significant digits, '.' decimal separator.
///
/// Zero prints as `0`; values at or above 1e12 print their integer part.
pub fn sig12(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    if !value.is_finite() {
        return value.to_string();
    }
    let exponent = value.abs().log10().floor() as i32;
    let decimals = (11 - exponent).clamp(0, 17) as usize;
    format!("{value:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_twelve_significant_digits() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(-0.04), "-0.0400000000000");
        assert_eq!(sig12(2.0), "2.00000000000");
        assert_eq!(sig12(1234.56789), "1234.56789000");
        assert_eq!(sig12(0.123456789012345), "0.123456789012");
    }

    #[test]
    fn round_trips_within_twelve_digits() {
        for &v in &[1.76, -0.4, 0.2, 123.456, 9.87654321e-5] {
            let parsed: f64 = sig12(v).parse().unwrap();
            assert!((parsed - v).abs() <= v.abs() * 1e-11 + 1e-15);
        }
    }
}
