//! Central-difference gradient verification.
//!
//! Treats the parameter as a flat vector: callers flatten whatever tensor
//! set they are checking and rebuild inside the closure.

use crate::dense::Dense;
use crate::error::NumericError;
use crate::math;

/// Max over coordinates of |fd_i - g_i| / max(1, |fd_i|, |g_i|), with
/// fd_i the central difference of `f` at `point` along coordinate i.
pub fn finite_diff_check<F>(
    mut f: F,
    point: &Dense,
    analytic_grad: &Dense,
    eps: f64,
) -> Result<f64, NumericError>
where
    F: FnMut(&Dense) -> f64,
{
    assert!(eps > 0.0, "eps must be positive");
    if !point.same_shape(analytic_grad) {
        return Err(NumericError::ShapeMismatch {
            context: "finite_diff_check",
            lhs: (point.rows(), point.cols()),
            rhs: (analytic_grad.rows(), analytic_grad.cols()),
        });
    }
    let mut x = point.clone();
    let mut worst = 0.0f64;
    for i in 0..x.as_slice().len() {
        let orig = x.as_slice()[i];
        x.as_mut_slice()[i] = orig + eps;
        let up = f(&x);
        x.as_mut_slice()[i] = orig - eps;
        let down = f(&x);
        x.as_mut_slice()[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(NumericError::NonFinite { context: "finite_diff_check evaluation" });
        }
        let fd = (up - down) / (2.0 * eps);
        let g = analytic_grad.as_slice()[i];
        let err = math::abs(fd - g) / 1.0f64.max(math::abs(fd)).max(math::abs(g));
        worst = worst.max(err);
    }
    Ok(worst)
}
