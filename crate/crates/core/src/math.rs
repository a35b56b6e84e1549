//! Small float helpers shared across modules.
//!
//! All transcendental functions go through `libm` so results are identical
//! with and without `std`.

/// Natural logarithm.
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

/// `ln(1 + x)`, accurate near zero.
pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

/// Logistic sigmoid, evaluated without overflow for large |x|.
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` in the overflow-safe form `max(x, 0) + ln(1 + e^-|x|)`.
///
/// `-softplus(-delta)` is the stable way to evaluate `ln sigmoid(delta)`.
pub(crate) fn softplus(x: f64) -> f64 {
    let m = if x > 0.0 { x } else { 0.0 };
    m + ln_1p(exp(-libm::fabs(x)))
}

/// Shannon entropy of a binary distribution `(p, 1 - p)` in nats.
///
/// Zero probabilities contribute zero (the `p ln p` limit).
pub(crate) fn binary_entropy(p: f64) -> f64 {
    let q = 1.0 - p;
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * ln(p);
    }
    if q > 0.0 {
        h -= q * ln(q);
    }
    h
}

/// Shannon entropy of a probability vector in nats.
pub(crate) fn entropy(dist: &[f64]) -> f64 {
    let mut h = 0.0;
    for &p in dist {
        if p > 0.0 {
            h -= p * ln(p);
        }
    }
    h
}
