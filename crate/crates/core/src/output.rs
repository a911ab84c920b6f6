//! Fixed float formatting shared by every CSV writer.

/// Scientific notation with 17 significant digits, enough for an exact
/// `f64` round trip. Negative zero prints as zero.
pub fn format_float(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::format_float;

    #[test]
    fn round_trips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(-0.0), format_float(0.0));
    }
}
