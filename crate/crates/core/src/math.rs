//! Float helpers backed by `libm` so the crate stays `no_std`.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub(crate) fn exp_m1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// `exp(a) * sinh(h)` evaluated as `sign(h) * exp(a + |h|) * (1 - exp(-2|h|)) / 2`.
///
/// Accurate for small `|h|` and safe for large `|h|` with very negative `a`.
#[inline]
pub(crate) fn scaled_sinh(a: f64, h: f64) -> f64 {
    let m = abs(h);
    let v = 0.5 * exp(a + m) * -exp_m1(-2.0 * m);
    if h < 0.0 {
        -v
    } else {
        v
    }
}

/// `exp(a) * cosh(h)`, same conventions as [`scaled_sinh`].
#[inline]
pub(crate) fn scaled_cosh(a: f64, h: f64) -> f64 {
    let m = abs(h);
    0.5 * exp(a + m) * (1.0 + exp(-2.0 * m))
}
