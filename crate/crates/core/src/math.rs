//! Thin wrappers so the rest of the crate reads like ordinary float code
//! without `std`.

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn powi(x: f64, n: usize) -> f64 {
    let mut acc = 1.0;
    for _ in 0..n {
        acc *= x;
    }
    acc
}

/// Number of whole steps of size `h` in `span`, if `span` is (numerically) a
/// multiple of `h`.
pub fn whole_steps(span: f64, h: f64) -> Option<usize> {
    let n = round(span / h);
    if n < 0.0 || (n * h - span).abs() > 1e-9 * h.max(span.abs()) {
        None
    } else {
        Some(n as usize)
    }
}
