//! Deterministic number formatting for CSV output.

/// Twelve significant digits in scientific notation; negative zero prints as zero.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000e0".to_string();
    }
    format!("{x:.11e}")
}
