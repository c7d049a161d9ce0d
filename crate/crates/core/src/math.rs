//! Scalar math kernels shared by the whole crate.
//!
//! Everything routes through `libm` so the crate builds without `std`.
//! The log-sigmoid forms here are the numerically stable ones used by all
//! reconstruction terms; naive `ln(1/(1+e^-x))` overflows for large `|x|`.

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

/// Logistic function 1/(1+e^-x), exact at the extremes.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// log(sigmoid(x)) = -ln(1 + e^-x), stable for any x.
#[inline]
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -ln_1p(exp(-x))
    } else {
        x - ln_1p(exp(x))
    }
}

/// log(1 - sigmoid(x)) = log(sigmoid(-x)).
#[inline]
pub fn log_one_minus_sigmoid(x: f64) -> f64 {
    log_sigmoid(-x)
}
