//! Fixed-format numeric output shared by all CSV writers.

/// Nine significant digits in scientific notation; non-finite values print as `nan`/`inf`.
pub fn sig9(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.8e}")
    }
}
