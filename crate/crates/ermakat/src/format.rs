//! Fixed numeric formatting for file output.
//!
//! All CSV output uses C-style `%.12e` notation (twelve fractional digits,
//! two-digit exponent with sign) so that identical runs produce byte-identical
//! files on any platform.

use std::fmt::Write;

/// Format a finite float as C `%.12e` would, e.g. `3.141592653590e+00`.
pub fn fmt_e12(x: f64) -> String {
    let mut s = String::with_capacity(20);
    write_e12(&mut s, x);
    s
}

/// Append the `%.12e` rendering of `x` to an existing buffer.
pub fn write_e12(buf: &mut String, x: f64) {
    if !x.is_finite() {
        // Only finite values ever reach file output; keep a readable fallback.
        let _ = write!(buf, "{x}");
        return;
    }
    // Rust's `{:e}` gives `d.dddddddddddde<exp>` with a bare signed exponent;
    // rewrite the exponent field as sign + at least two digits.
    let base = format!("{:.12e}", x);
    let (mantissa, exp) = base.split_once('e').expect("exponent in {:e} output");
    let (sign, digits) = match exp.strip_prefix('-') {
        Some(d) => ('-', d),
        None => ('+', exp),
    };
    let _ = if digits.len() < 2 {
        write!(buf, "{mantissa}e{sign}0{digits}")
    } else {
        write!(buf, "{mantissa}e{sign}{digits}")
    };
}
