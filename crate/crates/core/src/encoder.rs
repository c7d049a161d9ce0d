//! Two-layer variational GCN encoder with reparameterized sampling and the
//! inner-product edge decoder.
//!
//! Forward:
//! ```text
//! S1 = P (X W1)          P = normalized propagation matrix
//! Z1 = ReLU(S1)
//! H  = P Z1
//! mu = H W2mu,  logvar = H W2sigma
//! z  = mu + exp(logvar/2) .* eps
//! ```
//! The sigma head produces log-variance so positivity needs no constraint.
//! The backward pass is written out by hand; there is no tape.

use alloc::vec::Vec;

use crate::dense::{dot, Dense};
use crate::error::NumericError;
use crate::graph::PropagationMatrix;
use crate::math;
use crate::rng::RngStream;

/// Trainable tensors. `omega` (cluster centers) exists only in the
/// clustering phase.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EncoderParams {
    pub w1: Dense,
    pub w2_mu: Dense,
    pub w2_sigma: Dense,
    pub omega: Option<Dense>,
}

impl EncoderParams {
    /// Glorot-uniform init of the three encoder weights, seeded.
    pub fn init(feat_dim: usize, hidden: usize, latent: usize, rng: &mut RngStream) -> Self {
        EncoderParams {
            w1: glorot(feat_dim, hidden, rng),
            w2_mu: glorot(hidden, latent, rng),
            w2_sigma: glorot(hidden, latent, rng),
            omega: None,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.cols()
    }

    pub fn latent_dim(&self) -> usize {
        self.w2_mu.cols()
    }

    pub fn feat_dim(&self) -> usize {
        self.w1.rows()
    }
}

pub fn glorot(rows: usize, cols: usize, rng: &mut RngStream) -> Dense {
    let limit = math::sqrt(6.0 / (rows + cols) as f64);
    let mut out = Dense::zeros(rows, cols);
    for v in out.as_mut_slice() {
        *v = rng.uniform_in(-limit, limit);
    }
    out
}

/// Per-node Gaussian posterior q(z|X, A): means and log-variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub mu: Dense,
    pub logvar: Dense,
}

impl Posterior {
    pub fn node_count(&self) -> usize {
        self.mu.rows()
    }

    pub fn latent_dim(&self) -> usize {
        self.mu.cols()
    }

    pub fn sigma(&self) -> Dense {
        self.logvar.map(|lv| math::exp(0.5 * lv))
    }
}

/// Monte Carlo draws plus the standard-normal noise that produced them, so
/// gradients can flow back through the reparameterization.
#[derive(Debug, Clone)]
pub struct LatentSamples {
    pub draws: Vec<Dense>,
    pub noise: Vec<Dense>,
}

impl LatentSamples {
    pub fn count(&self) -> usize {
        self.draws.len()
    }
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct EncoderCache {
    /// Layer-1 pre-activation P(X W1).
    pub s1: Dense,
    /// P ReLU(S1), shared input of both heads.
    pub h: Dense,
}

#[derive(Debug, Clone)]
pub struct EncoderGrads {
    pub w1: Dense,
    pub w2_mu: Dense,
    pub w2_sigma: Dense,
}

impl EncoderGrads {
    pub fn zeros_like(params: &EncoderParams) -> Self {
        EncoderGrads {
            w1: Dense::zeros(params.w1.rows(), params.w1.cols()),
            w2_mu: Dense::zeros(params.w2_mu.rows(), params.w2_mu.cols()),
            w2_sigma: Dense::zeros(params.w2_sigma.rows(), params.w2_sigma.cols()),
        }
    }

    pub fn add_assign(&mut self, other: &EncoderGrads) {
        self.w1.axpy(1.0, &other.w1);
        self.w2_mu.axpy(1.0, &other.w2_mu);
        self.w2_sigma.axpy(1.0, &other.w2_sigma);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.w1.scale(alpha);
        self.w2_mu.scale(alpha);
        self.w2_sigma.scale(alpha);
    }
}

/// Forward pass of the two GCN layers.
pub fn encode_posterior(
    params: &EncoderParams,
    prop: &PropagationMatrix,
    x: &Dense,
) -> Result<(Posterior, EncoderCache), NumericError> {
    let xw = x.matmul(&params.w1)?;
    let s1 = prop.spmm(&xw)?;
    let z1 = s1.map(|v| if v > 0.0 { v } else { 0.0 });
    let h = prop.spmm(&z1)?;
    let mu = h.matmul(&params.w2_mu)?;
    let logvar = h.matmul(&params.w2_sigma)?;
    if !mu.is_finite() || !logvar.is_finite() || !s1.is_finite() {
        return Err(NumericError::NonFinite { context: "encode_posterior" });
    }
    Ok((Posterior { mu, logvar }, EncoderCache { s1, h }))
}

/// Backward pass: gradients of a scalar loss w.r.t. the three weights, given
/// its gradients w.r.t. mu and logvar. `prop` is symmetric, so P^T = P.
pub fn encoder_backward(
    params: &EncoderParams,
    prop: &PropagationMatrix,
    x: &Dense,
    cache: &EncoderCache,
    d_mu: &Dense,
    d_logvar: &Dense,
) -> Result<EncoderGrads, NumericError> {
    let d_w2_mu = cache.h.matmul_tn(d_mu)?;
    let d_w2_sigma = cache.h.matmul_tn(d_logvar)?;
    let mut d_h = d_mu.matmul_nt(&params.w2_mu)?;
    d_h.axpy(1.0, &d_logvar.matmul_nt(&params.w2_sigma)?);
    let d_z1 = prop.spmm(&d_h)?;
    let mask = cache.s1.map(|v| if v > 0.0 { 1.0 } else { 0.0 });
    let mut d_s1 = d_z1;
    d_s1.hadamard_assign(&mask);
    let d_xw = prop.spmm(&d_s1)?;
    let d_w1 = x.matmul_tn(&d_xw)?;
    Ok(EncoderGrads { w1: d_w1, w2_mu: d_w2_mu, w2_sigma: d_w2_sigma })
}

/// Draw L reparameterized samples z = mu + sigma .* eps.
pub fn sample_latent(post: &Posterior, l: usize, rng: &mut RngStream) -> LatentSamples {
    assert!(l >= 1, "need at least one Monte Carlo sample");
    let (n, d) = (post.node_count(), post.latent_dim());
    let noise: Vec<Dense> = (0..l)
        .map(|_| Dense::from_vec(n, d, rng.gaussian_vec(n * d)))
        .collect();
    sample_with_noise(post, noise)
}

/// Deterministic variant for gradient checks: the caller supplies the noise.
pub fn sample_with_noise(post: &Posterior, noise: Vec<Dense>) -> LatentSamples {
    let sigma = post.sigma();
    let draws = noise
        .iter()
        .map(|eps| {
            let mut z = eps.clone();
            z.hadamard_assign(&sigma);
            z.axpy(1.0, &post.mu);
            z
        })
        .collect();
    LatentSamples { draws, noise }
}

/// Route per-sample gradients dL/dz back to the posterior:
/// dmu += dz, dlogvar += dz .* eps .* sigma / 2.
pub fn backprop_samples(
    post: &Posterior,
    samples: &LatentSamples,
    d_draws: &[Dense],
) -> (Dense, Dense) {
    assert_eq!(d_draws.len(), samples.count());
    let sigma = post.sigma();
    let mut d_mu = Dense::zeros(post.node_count(), post.latent_dim());
    let mut d_logvar = Dense::zeros(post.node_count(), post.latent_dim());
    for (dz, eps) in d_draws.iter().zip(&samples.noise) {
        d_mu.axpy(1.0, dz);
        let mut t = dz.clone();
        t.hadamard_assign(eps);
        t.hadamard_assign(&sigma);
        d_logvar.axpy(0.5, &t);
    }
    (d_mu, d_logvar)
}

/// Inner-product decoder logit.
#[inline]
pub fn edge_logit(zi: &[f64], zj: &[f64]) -> f64 {
    dot(zi, zj)
}

/// Bernoulli edge probability Sigmoid(z_i . z_j).
#[inline]
pub fn edge_prob(zi: &[f64], zj: &[f64]) -> f64 {
    math::sigmoid(edge_logit(zi, zj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Adjacency;
    use crate::rng::streams;
    use alloc::vec;

    fn identity(n: usize) -> Dense {
        let mut d = Dense::zeros(n, n);
        for i in 0..n {
            d.set(i, i, 1.0);
        }
        d
    }

    #[test]
    fn zero_weights_give_standard_posterior() {
        let adj = Adjacency::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let prop = PropagationMatrix::from_adjacency(&adj);
        let x = Dense::from_rows(&[&[1.0, 2.0], &[0.5, -1.0], &[0.0, 3.0]]);
        let params = EncoderParams {
            w1: Dense::zeros(2, 4),
            w2_mu: Dense::zeros(4, 2),
            w2_sigma: Dense::zeros(4, 2),
            omega: None,
        };
        let (post, _) = encode_posterior(&params, &prop, &x).unwrap();
        assert!(post.mu.as_slice().iter().all(|&v| v == 0.0));
        assert!(post.logvar.as_slice().iter().all(|&v| v == 0.0));
        assert!(post.sigma().as_slice().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn isolated_node_identity_weights_pass_features_through() {
        // prop = [[1]] for an isolated node, so mu = ReLU(X W1) W2mu = X for
        // identity weights and nonnegative X.
        let adj = Adjacency::from_edges(1, &[]).unwrap();
        let prop = PropagationMatrix::from_adjacency(&adj);
        let x = Dense::from_rows(&[&[0.7, 1.3]]);
        let params = EncoderParams {
            w1: identity(2),
            w2_mu: identity(2),
            w2_sigma: Dense::zeros(2, 2),
            omega: None,
        };
        let (post, cache) = encode_posterior(&params, &prop, &x).unwrap();
        assert_eq!(cache.s1.as_slice(), x.as_slice());
        assert_eq!(post.mu.as_slice(), x.as_slice());
    }

    #[test]
    fn mu_is_linear_in_x_on_the_active_region() {
        let adj = Adjacency::from_edges(2, &[(0, 1)]).unwrap();
        let prop = PropagationMatrix::from_adjacency(&adj);
        let x = Dense::from_rows(&[&[1.0, 0.5], &[2.0, 1.5]]);
        let mut rng = RngStream::new(3, streams::WEIGHT_INIT);
        let mut params = EncoderParams::init(2, 3, 2, &mut rng);
        // force positive first-layer weights so pre-activations stay positive
        params.w1 = params.w1.map(|v| math::abs(v) + 0.1);
        let (p1, _) = encode_posterior(&params, &prop, &x).unwrap();
        let x2 = x.map(|v| 2.0 * v);
        let (p2, _) = encode_posterior(&params, &prop, &x2).unwrap();
        for (a, b) in p1.mu.as_slice().iter().zip(p2.mu.as_slice()) {
            assert!((2.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn forced_zero_noise_returns_mu() {
        let post = Posterior {
            mu: Dense::from_rows(&[&[1.0, -2.0]]),
            logvar: Dense::from_rows(&[&[0.3, -0.7]]),
        };
        let s = sample_with_noise(&post, vec![Dense::zeros(1, 2)]);
        assert_eq!(s.draws[0].as_slice(), post.mu.as_slice());
    }

    #[test]
    fn tiny_logvar_collapses_to_mu() {
        let post = Posterior {
            mu: Dense::from_rows(&[&[1.0, -2.0]]),
            logvar: Dense::from_rows(&[&[-40.0, -40.0]]),
        };
        let mut rng = RngStream::new(1, streams::REPARAM);
        let s = sample_latent(&post, 1, &mut rng);
        for (z, m) in s.draws[0].as_slice().iter().zip(post.mu.as_slice()) {
            assert!((z - m).abs() < 1e-8);
        }
    }

    #[test]
    fn sample_mean_concentrates_on_mu() {
        let post = Posterior {
            mu: Dense::from_rows(&[&[0.8]]),
            logvar: Dense::from_rows(&[&[0.0]]),
        };
        let mut rng = RngStream::new(6, streams::REPARAM);
        let n = 100_000usize;
        let s = sample_latent(&post, n, &mut rng);
        let mean = s.draws.iter().map(|d| d.get(0, 0)).sum::<f64>() / n as f64;
        let bound = 3.0 / math::sqrt(n as f64);
        assert!((mean - 0.8).abs() < bound, "mean {mean}");
    }

    #[test]
    fn sampling_is_bit_reproducible_per_stream() {
        let post = Posterior {
            mu: Dense::from_rows(&[&[0.1, 0.2], &[0.3, 0.4]]),
            logvar: Dense::from_rows(&[&[0.0, -1.0], &[0.5, 0.2]]),
        };
        let mut r1 = RngStream::new(9, streams::REPARAM);
        let mut r2 = RngStream::new(9, streams::REPARAM);
        let a = sample_latent(&post, 3, &mut r1);
        let b = sample_latent(&post, 3, &mut r2);
        for (x, y) in a.draws.iter().zip(&b.draws) {
            assert_eq!(x.as_slice(), y.as_slice());
        }
    }

    #[test]
    fn edge_probabilities_match_hand_values() {
        assert_eq!(edge_prob(&[1.0, 0.0], &[0.0, 1.0]), 0.5);
        let p = edge_prob(&[2.0, 0.0], &[2.0, 0.0]);
        assert!((p - 0.9820137900379085).abs() < 1e-9);
        let mut rng = RngStream::new(4, 0);
        for _ in 0..20 {
            let a: Vec<f64> = (0..3).map(|_| rng.gaussian()).collect();
            let b: Vec<f64> = (0..3).map(|_| rng.gaussian()).collect();
            assert_eq!(edge_prob(&a, &b), edge_prob(&b, &a));
        }
    }
}
