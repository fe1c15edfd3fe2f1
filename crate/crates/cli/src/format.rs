//! Number formatting shared by the CSV and JSON writers.

/// Rounds to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

/// Shortest decimal text of `x` rounded to 12 significant digits, with
/// exponent notation only for very small or very large magnitudes.
pub fn num(x: f64) -> String {
    let r = round12(x);
    if r == 0.0 {
        return "0".to_string();
    }
    let a = r.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

/// JSON number rounded to 12 significant digits; non-finite values map to null.
pub fn json_num(x: f64) -> serde_json::Value {
    serde_json::Number::from_f64(round12(x))
        .map(serde_json::Value::Number)
        .unwrap_or(serde_json::Value::Null)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(num(19.947_114_020_071_634), "19.9471140201");
        assert_eq!(num(50.0), "50");
        assert_eq!(num(-0.0), "0");
        assert_eq!(num(1.234_567_890_123_456e-9), "1.23456789012e-9");
        assert_eq!(num(-150.0), "-150");
        assert_eq!(num(0.1 + 0.2), "0.3");
    }

    #[test]
    fn json_nan_is_null() {
        assert!(json_num(f64::NAN).is_null());
        assert_eq!(json_num(2.5), serde_json::json!(2.5));
    }
}
