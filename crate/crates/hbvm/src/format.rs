//! Number and matrix rendering.

use std::fmt::Write as _;

use hbvm_core::Matrix;

/// Scientific notation with 17 significant digits, enough to round-trip.
pub fn float17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Rows of a matrix, one per line, with a leading label line.
pub fn matrix(label: &str, m: &Matrix) -> String {
    let mut out = format!("{label} ({}x{}):\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|v| format!("{v:>24.16e}")).collect();
        let _ = writeln!(out, " {}", row.join(" "));
    }
    out
}

/// A labelled vector on one line.
pub fn vector(label: &str, v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| float17(*x)).collect();
    format!("{label} = [{}]\n", items.join(", "))
}
