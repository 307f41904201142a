//! Fixed-notation number formatting shared by every CLI output.

use std::fmt::Write;

pub const SIGNIFICANT_DIGITS: usize = 9;

/// `x` in plain decimal notation with nine significant digits.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    // The exponent after rounding decides how many decimals survive.
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let exponent: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Comma-joined numbers.
pub fn join(values: impl IntoIterator<Item = f64>) -> String {
    let mut line = String::new();
    for (i, v) in values.into_iter().enumerate() {
        if i > 0 {
            line.push(',');
        }
        line.push_str(&num(v));
    }
    line
}

pub fn push_line(buf: &mut String, fields: &[&str]) {
    let _ = writeln!(buf, "{}", fields.join(","));
}
