//! Fixed-precision number formatting shared by every text output.

/// Nine decimal places, with negative zero printed as zero so that golden
/// files do not depend on the sign of a vanishing residual.
pub fn fixed9(v: f64) -> String {
    let s = format!("{v:.9}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}
