//! Shared numeric formatting: all floating output uses 9 significant digits
//! so repeated runs compare byte-for-byte.

/// Formats with 9 significant digits in scientific notation.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}
