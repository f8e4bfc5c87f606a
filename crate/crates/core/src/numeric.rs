//! Small numeric helpers shared across modules.

use std::cmp::Ordering;

/// Absolute tolerance used when validating concavity of real-valued tables.
pub const CONCAVITY_TOLERANCE: f64 = 1e-9;

/// Relative tolerance for the inequality checks on traces.
pub const INEQUALITY_TOLERANCE: f64 = 1e-9;

/// `a * b` as an unevaluated sum `hi + lo`, exact for finite inputs that do
/// not underflow.
#[inline]
fn two_product(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    let lo = a.mul_add(b, -hi);
    (hi, lo)
}

/// Compares the per-item ratios `value_a / qty_a` and `value_b / qty_b`
/// without dividing.
///
/// The cross products `value_a * qty_b` and `value_b * qty_a` are compared
/// exactly, so two requests tie iff their ratios are equal as rationals.
/// Both quantities must be positive and both values finite.
pub fn cmp_ratio(value_a: f64, qty_a: usize, value_b: f64, qty_b: usize) -> Ordering {
    debug_assert!(qty_a > 0 && qty_b > 0);
    let (hi_a, lo_a) = two_product(value_a, qty_b as f64);
    let (hi_b, lo_b) = two_product(value_b, qty_a as f64);
    match hi_a.total_cmp(&hi_b) {
        Ordering::Equal => lo_a.total_cmp(&lo_b),
        ord => ord,
    }
}

/// `lhs <= rhs` up to a relative tolerance scaled by the magnitudes involved.
pub fn le_tol(lhs: f64, rhs: f64, rel: f64) -> bool {
    let scale = 1.0_f64.max(lhs.abs()).max(rhs.abs());
    lhs <= rhs + rel * scale
}

/// Formats `x` rounded to nine significant digits, printed in shortest
/// round-trip form.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.8e}").parse().unwrap_or(x);
    format!("{rounded}")
}
