//! Adam in ascent form.
//!
//! Every objective in this crate is a lower bound to be maximized, so the
//! update moves parameters along `+lr * m_hat / (sqrt(v_hat) + eps)`.
//! Losses are never negated anywhere.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dense::Dense;
use crate::error::NumericError;
use crate::math;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AdamState {
    m: Vec<Dense>,
    v: Vec<Dense>,
    t: u64,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    /// Fresh state for parameters of the given shapes.
    pub fn new(shapes: &[(usize, usize)], lr: f64, beta1: f64, beta2: f64, eps: f64) -> Self {
        AdamState {
            m: shapes.iter().map(|&(r, c)| Dense::zeros(r, c)).collect(),
            v: shapes.iter().map(|&(r, c)| Dense::zeros(r, c)).collect(),
            t: 0,
            lr,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }

    pub fn tensors(&self) -> (&[Dense], &[Dense]) {
        (&self.m, &self.v)
    }

    /// Restore accumulators (checkpoint load). Shapes must already agree.
    pub fn restore(&mut self, m: Vec<Dense>, v: Vec<Dense>, t: u64) {
        debug_assert_eq!(m.len(), self.m.len());
        debug_assert_eq!(v.len(), self.v.len());
        self.m = m;
        self.v = v;
        self.t = t;
    }

    /// One bias-corrected ascent step over a parameter list. `term` names the
    /// objective for the non-finite-gradient diagnostic.
    pub fn step(
        &mut self,
        params: &mut [&mut Dense],
        grads: &[&Dense],
        term: &str,
    ) -> Result<(), NumericError> {
        assert_eq!(params.len(), self.m.len(), "adam parameter count mismatch");
        assert_eq!(grads.len(), self.m.len(), "adam gradient count mismatch");
        for (g, p) in grads.iter().zip(params.iter()) {
            if !g.same_shape(p) {
                return Err(NumericError::ShapeMismatch {
                    context: "adam_step",
                    lhs: (p.rows(), p.cols()),
                    rhs: (g.rows(), g.cols()),
                });
            }
            if !g.is_finite() {
                return Err(NumericError::NonFiniteGradient { term: String::from(term) });
            }
        }
        self.t += 1;
        let t = self.t as f64;
        let bc1 = 1.0 - libm::pow(self.beta1, t);
        let bc2 = 1.0 - libm::pow(self.beta2, t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let ps = p.as_mut_slice();
            let gs = g.as_slice();
            let ms = m.as_mut_slice();
            let vs = v.as_mut_slice();
            for k in 0..ps.len() {
                ms[k] = self.beta1 * ms[k] + (1.0 - self.beta1) * gs[k];
                vs[k] = self.beta2 * vs[k] + (1.0 - self.beta2) * gs[k] * gs[k];
                let m_hat = ms[k] / bc1;
                let v_hat = vs[k] / bc2;
                ps[k] += self.lr * m_hat / (math::sqrt(v_hat) + self.eps);
            }
        }
        Ok(())
    }
}
