//! Probabilistic quantities and loss terms: soft/target assignments,
//! confidence margins, the reliable set, the pretraining bound, and the
//! three-term clustering objective with hand-written gradients.
//!
//! Sign convention: every quantity here is a lower bound to be maximized.
//! The contrastive term `l3` follows the closed form
//! `N * sum_i sum_u [ln s2n - mp^2 - s2p + s2p/s2n + (mp-mn)^2/s2n]`,
//! which equals `2N * sum_i E_qpos[ln p(z) - ln q_neg(z)]`; the total bound
//! then exceeds the plain clustering bound by exactly
//! `2N * sum_i KL(q_pos_i || q_neg_i) >= 0` (reported as `theorem1_gap`).

use alloc::vec;
use alloc::vec::Vec;

use crate::dense::{dot, Dense};
use crate::encoder::{LatentSamples, Posterior};
use crate::graph::Adjacency;
use crate::math;

/// Soft assignments, frozen targets, margins, and the reliable set for one
/// refresh window.
#[derive(Debug, Clone)]
pub struct ClusterState {
    /// Soft assignments, N x K, rows sum to 1.
    pub p: Dense,
    /// Targets, N x K: one-hot for reliable nodes, copies of P otherwise.
    /// Held constant by the loss (no gradient flows through Q).
    pub q: Dense,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    /// Sorted node indices with margin >= alpha.
    pub theta: Vec<usize>,
    pub alpha: f64,
}

impl ClusterState {
    /// Build the full state from latent codes and centers. `hard_all`
    /// replaces the margin gate with one-hot targets for every node
    /// (the -FR model variant).
    pub fn compute(z: &Dense, omega: &Dense, alpha: f64, hard_all: bool) -> Self {
        let p = soft_assignments(z, omega);
        let (lambda1, lambda2) = confidence_margins(&p);
        let theta = reliable_set(&lambda1, &lambda2, alpha);
        let q = if hard_all {
            hard_assignments(&p)
        } else {
            target_assignments(&p, &lambda1, &lambda2, alpha)
        };
        ClusterState { p, q, lambda1, lambda2, theta, alpha }
    }

    /// Argmax cluster per node.
    pub fn predicted(&self) -> Vec<u32> {
        argmax_rows(&self.p)
    }

    pub fn margin(&self, i: usize) -> f64 {
        self.lambda1[i] - self.lambda2[i]
    }

    pub fn is_reliable(&self, i: usize) -> bool {
        self.theta.binary_search(&i).is_ok()
    }
}

pub fn argmax_rows(p: &Dense) -> Vec<u32> {
    (0..p.rows())
        .map(|i| {
            let row = p.row(i);
            let mut best = 0usize;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best as u32
        })
        .collect()
}

/// Student's t soft assignments:
/// p_ij = (1+|z_i-omega_j|^2)^-1 / sum_j' (1+|z_i-omega_j'|^2)^-1.
pub fn soft_assignments(z: &Dense, omega: &Dense) -> Dense {
    let (kernels, sums) = t_kernels(z, omega);
    let mut p = kernels;
    for i in 0..p.rows() {
        let s = sums[i];
        for v in p.row_mut(i) {
            *v /= s;
        }
    }
    p
}

/// Unnormalized kernels k_ij = (1+|z_i-omega_j|^2)^-1 and their row sums.
fn t_kernels(z: &Dense, omega: &Dense) -> (Dense, Vec<f64>) {
    let (n, k) = (z.rows(), omega.rows());
    debug_assert_eq!(z.cols(), omega.cols());
    let mut kern = Dense::zeros(n, k);
    let mut sums = vec![0.0; n];
    for i in 0..n {
        let zi = z.row(i);
        let row = kern.row_mut(i);
        for j in 0..k {
            let oj = omega.row(j);
            let mut d2 = 0.0;
            for (a, b) in zi.iter().zip(oj) {
                let t = a - b;
                d2 += t * t;
            }
            let v = 1.0 / (1.0 + d2);
            row[j] = v;
            sums[i] += v;
        }
    }
    (kern, sums)
}

/// First and second highest assignment scores per row. The second score is
/// the second-largest value counting duplicates, so a duplicated maximum
/// yields a zero margin and the node stays out of the reliable set.
pub fn confidence_margins(p: &Dense) -> (Vec<f64>, Vec<f64>) {
    let mut l1 = Vec::with_capacity(p.rows());
    let mut l2 = Vec::with_capacity(p.rows());
    for i in 0..p.rows() {
        let (mut best, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &v in p.row(i) {
            if v > best {
                second = best;
                best = v;
            } else if v > second {
                second = v;
            }
        }
        l1.push(best);
        l2.push(second);
    }
    (l1, l2)
}

/// Nodes whose top-two margin reaches `alpha`, ascending.
pub fn reliable_set(lambda1: &[f64], lambda2: &[f64], alpha: f64) -> Vec<usize> {
    lambda1
        .iter()
        .zip(lambda2)
        .enumerate()
        .filter(|(_, (a, b))| **a - **b >= alpha)
        .map(|(i, _)| i)
        .collect()
}

/// Target distribution: one-hot at the argmax where the margin reaches
/// `alpha`, otherwise a copy of the soft row.
pub fn target_assignments(p: &Dense, lambda1: &[f64], lambda2: &[f64], alpha: f64) -> Dense {
    let mut q = p.clone();
    for i in 0..p.rows() {
        if lambda1[i] - lambda2[i] >= alpha {
            one_hot_row(q.row_mut(i));
        }
    }
    q
}

/// One-hot targets for every node regardless of margin (-FR variant).
pub fn hard_assignments(p: &Dense) -> Dense {
    let mut q = p.clone();
    for i in 0..q.rows() {
        one_hot_row(q.row_mut(i));
    }
    q
}

fn one_hot_row(row: &mut [f64]) {
    let mut best = 0usize;
    for (j, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = j;
        }
    }
    for (j, v) in row.iter_mut().enumerate() {
        *v = if j == best { 1.0 } else { 0.0 };
    }
}

/// Reconstruction term shared by Eq.-9-style pretraining and `l1`: the
/// cross-sample Monte Carlo estimate
/// `(1/L^2) sum_{l1,l2} sum_{i,j} [a_ij ln s(z_i^(l1).z_j^(l2)) + (1-a_ij) ln(1-s(..))]`
/// over all N^2 ordered pairs. With `diag_one` the self-pair target is 1.
pub fn pair_log_likelihood(samples: &LatentSamples, target: &Adjacency, diag_one: bool) -> f64 {
    pair_sum(samples, target, diag_one, None)
}

/// Same sum plus gradients w.r.t. each sample matrix.
pub fn pair_log_likelihood_grad(
    samples: &LatentSamples,
    target: &Adjacency,
    diag_one: bool,
) -> (f64, Vec<Dense>) {
    let n = samples.draws[0].rows();
    let d = samples.draws[0].cols();
    let mut grads = vec![Dense::zeros(n, d); samples.count()];
    let v = pair_sum(samples, target, diag_one, Some(&mut grads));
    (v, grads)
}

fn pair_sum(
    samples: &LatentSamples,
    target: &Adjacency,
    diag_one: bool,
    mut grads: Option<&mut Vec<Dense>>,
) -> f64 {
    let l = samples.count();
    let n = target.node_count();
    let d = samples.draws[0].cols();
    let weight = 1.0 / (l * l) as f64;
    let mut raw = 0.0;
    let mut dza_row = vec![0.0; d];
    for la in 0..l {
        for lb in 0..l {
            let za = &samples.draws[la];
            for i in 0..n {
                let zi_row: Vec<f64> = za.row(i).to_vec();
                let neigh = target.neighbors(i);
                let mut ptr = 0usize;
                if grads.is_some() {
                    dza_row.iter_mut().for_each(|v| *v = 0.0);
                }
                for j in 0..n {
                    while ptr < neigh.len() && (neigh[ptr] as usize) < j {
                        ptr += 1;
                    }
                    let connected = ptr < neigh.len() && neigh[ptr] as usize == j;
                    let a = if connected || (diag_one && i == j) { 1.0 } else { 0.0 };
                    let zb = &samples.draws[lb];
                    let logit = dot(&zi_row, zb.row(j));
                    raw += if a == 1.0 {
                        math::log_sigmoid(logit)
                    } else {
                        math::log_one_minus_sigmoid(logit)
                    };
                    if let Some(gs) = grads.as_deref_mut() {
                        let coef = weight * (a - math::sigmoid(logit));
                        let zb_row = zb.row(j);
                        for (acc, &b) in dza_row.iter_mut().zip(zb_row) {
                            *acc += coef * b;
                        }
                        let gb = gs[lb].row_mut(j);
                        for (g, &x) in gb.iter_mut().zip(&zi_row) {
                            *g += coef * x;
                        }
                    }
                }
                if let Some(gs) = grads.as_deref_mut() {
                    let ga = gs[la].row_mut(i);
                    for (g, &acc) in ga.iter_mut().zip(&dza_row) {
                        *g += acc;
                    }
                }
            }
        }
    }
    weight * raw
}

/// `sum_i KL(q_i || N(0, I))` for a diagonal-Gaussian posterior.
pub fn gaussian_kl_to_prior(post: &Posterior) -> f64 {
    let mut acc = 0.0;
    for (m, lv) in post.mu.as_slice().iter().zip(post.logvar.as_slice()) {
        acc += m * m + math::exp(*lv) - lv - 1.0;
    }
    0.5 * acc
}

/// Gradients of [`gaussian_kl_to_prior`] w.r.t. mu and logvar.
pub fn gaussian_kl_to_prior_grad(post: &Posterior) -> (Dense, Dense) {
    let d_mu = post.mu.clone();
    let d_logvar = post.logvar.map(|lv| 0.5 * (math::exp(lv) - 1.0));
    (d_mu, d_logvar)
}

/// `sum_i KL(q_pos_i || q_neg_i)` between two diagonal-Gaussian posteriors.
pub fn gaussian_kl_between(pos: &Posterior, neg: &Posterior) -> f64 {
    debug_assert!(pos.mu.same_shape(&neg.mu));
    let mut acc = 0.0;
    let (mp, lp) = (pos.mu.as_slice(), pos.logvar.as_slice());
    let (mn, ln_) = (neg.mu.as_slice(), neg.logvar.as_slice());
    for k in 0..mp.len() {
        let s2p = math::exp(lp[k]);
        let s2n = math::exp(ln_[k]);
        let dm = mp[k] - mn[k];
        acc += ln_[k] - lp[k] + (s2p + dm * dm) / s2n - 1.0;
    }
    0.5 * acc
}

/// Pretraining bound pieces: reconstruction estimate, prior KL, and
/// `elbo = recon - 2N * kl`.
pub fn elbo_pretrain(
    post: &Posterior,
    samples: &LatentSamples,
    target: &Adjacency,
    diag_one: bool,
) -> (f64, f64, f64) {
    let recon = pair_log_likelihood(samples, target, diag_one);
    let kl = gaussian_kl_to_prior(post);
    let n = post.node_count() as f64;
    (recon, kl, recon - 2.0 * n * kl)
}

/// Pretraining bound with gradients folded back to the posterior.
pub struct PretrainEval {
    pub recon: f64,
    pub kl: f64,
    pub elbo: f64,
    pub d_mu: Dense,
    pub d_logvar: Dense,
}

pub fn elbo_pretrain_with_grad(
    post: &Posterior,
    samples: &LatentSamples,
    target: &Adjacency,
    diag_one: bool,
) -> PretrainEval {
    let (recon, d_draws) = pair_log_likelihood_grad(samples, target, diag_one);
    let (mut d_mu, mut d_logvar) = crate::encoder::backprop_samples(post, samples, &d_draws);
    let kl = gaussian_kl_to_prior(post);
    let n = post.node_count() as f64;
    let (kl_dmu, kl_dlv) = gaussian_kl_to_prior_grad(post);
    d_mu.axpy(-2.0 * n, &kl_dmu);
    d_logvar.axpy(-2.0 * n, &kl_dlv);
    PretrainEval { recon, kl, elbo: recon - 2.0 * n * kl, d_mu, d_logvar }
}

/// First clustering term: reconstruction of the generative structure from
/// positive-branch samples (targets `a_gen`, add-only refinement).
pub fn loss_l1(samples: &LatentSamples, a_gen: &Adjacency, diag_one: bool) -> f64 {
    pair_log_likelihood(samples, a_gen, diag_one)
}

pub fn loss_l1_with_grad(
    samples: &LatentSamples,
    a_gen: &Adjacency,
    diag_one: bool,
) -> (f64, Vec<Dense>) {
    pair_log_likelihood_grad(samples, a_gen, diag_one)
}

/// Second clustering term:
/// `-(2N/L) sum_l sum_i sum_j q_ij ln(q_ij / p_ij(z_i^(l)))`,
/// with p recomputed per sample and q held constant. Always <= 0.
pub fn loss_l2(samples: &LatentSamples, q: &Dense, omega: &Dense) -> f64 {
    l2_inner(samples, q, omega, None)
}

pub fn loss_l2_with_grad(
    samples: &LatentSamples,
    q: &Dense,
    omega: &Dense,
) -> (f64, Vec<Dense>, Dense) {
    let n = q.rows();
    let d = samples.draws[0].cols();
    let mut dz = vec![Dense::zeros(n, d); samples.count()];
    let mut d_omega = Dense::zeros(omega.rows(), omega.cols());
    let v = l2_inner(samples, q, omega, Some((&mut dz, &mut d_omega)));
    (v, dz, d_omega)
}

fn l2_inner(
    samples: &LatentSamples,
    q: &Dense,
    omega: &Dense,
    mut grads: Option<(&mut Vec<Dense>, &mut Dense)>,
) -> f64 {
    let l = samples.count();
    let n = q.rows();
    let k = omega.rows();
    let big_n = n as f64;
    let c = 2.0 * big_n / l as f64;
    let mut kl_sum = 0.0;
    for (ls, z) in samples.draws.iter().enumerate() {
        let (kern, sums) = t_kernels(z, omega);
        for i in 0..n {
            let s = sums[i];
            debug_assert!(s > 0.0, "t-kernel row sum must stay positive");
            let qi = q.row(i);
            for j in 0..k {
                let kij = kern.get(i, j);
                let pij = kij / s;
                let qij = qi[j];
                if qij > 0.0 {
                    kl_sum += qij * (math::ln(qij) - math::ln(pij));
                }
                if let Some((dz, d_omega)) = grads.as_mut() {
                    // dL2/dk_ij = c*q_ij/k_ij - c/S_i; dk/dz = -2k^2 (z - w)
                    let gk = c * (qij / kij) - c / s;
                    let factor = -2.0 * gk * kij * kij;
                    let zi = z.row(i);
                    let oj = omega.row(j);
                    {
                        let dzi = dz[ls].row_mut(i);
                        for u in 0..dzi.len() {
                            dzi[u] += factor * (zi[u] - oj[u]);
                        }
                    }
                    let doj = d_omega.row_mut(j);
                    for u in 0..doj.len() {
                        doj[u] -= factor * (zi[u] - oj[u]);
                    }
                }
            }
        }
    }
    -c * kl_sum
}

/// Third clustering term, closed form over the two Gaussian posteriors:
/// `N * sum_i sum_u [ln s2n - mp^2 - s2p + s2p/s2n + (mp-mn)^2/s2n]`.
pub fn loss_l3(post_pos: &Posterior, post_neg: &Posterior) -> f64 {
    debug_assert!(post_pos.mu.same_shape(&post_neg.mu));
    let big_n = post_pos.node_count() as f64;
    let (mp, lp) = (post_pos.mu.as_slice(), post_pos.logvar.as_slice());
    let (mn, ln_) = (post_neg.mu.as_slice(), post_neg.logvar.as_slice());
    let mut acc = 0.0;
    for k in 0..mp.len() {
        let s2p = math::exp(lp[k]);
        let s2n = math::exp(ln_[k]);
        let dm = mp[k] - mn[k];
        acc += ln_[k] - mp[k] * mp[k] - s2p + s2p / s2n + dm * dm / s2n;
    }
    big_n * acc
}

pub struct L3Grads {
    pub d_mu_pos: Dense,
    pub d_logvar_pos: Dense,
    pub d_mu_neg: Dense,
    pub d_logvar_neg: Dense,
}

pub fn loss_l3_with_grad(post_pos: &Posterior, post_neg: &Posterior) -> (f64, L3Grads) {
    let big_n = post_pos.node_count() as f64;
    let (n, d) = (post_pos.node_count(), post_pos.latent_dim());
    let mut g = L3Grads {
        d_mu_pos: Dense::zeros(n, d),
        d_logvar_pos: Dense::zeros(n, d),
        d_mu_neg: Dense::zeros(n, d),
        d_logvar_neg: Dense::zeros(n, d),
    };
    let (mp, lp) = (post_pos.mu.as_slice(), post_pos.logvar.as_slice());
    let (mn, ln_) = (post_neg.mu.as_slice(), post_neg.logvar.as_slice());
    let mut acc = 0.0;
    for k in 0..mp.len() {
        let s2p = math::exp(lp[k]);
        let s2n = math::exp(ln_[k]);
        let dm = mp[k] - mn[k];
        acc += ln_[k] - mp[k] * mp[k] - s2p + s2p / s2n + dm * dm / s2n;
        g.d_mu_pos.as_mut_slice()[k] = big_n * (-2.0 * mp[k] + 2.0 * dm / s2n);
        g.d_logvar_pos.as_mut_slice()[k] = big_n * (-s2p + s2p / s2n);
        g.d_mu_neg.as_mut_slice()[k] = big_n * (-2.0 * dm / s2n);
        g.d_logvar_neg.as_mut_slice()[k] = big_n * (1.0 - s2p / s2n - dm * dm / s2n);
    }
    (big_n * acc, g)
}

/// Per-iteration loss report. `total` is always the exact sum of the three
/// clustering terms; the pretraining fields are zero during clustering and
/// vice versa.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LossBreakdown {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub total: f64,
    pub pretrain_recon: f64,
    pub pretrain_kl: f64,
    pub theorem1_gap: f64,
}

/// Assemble the full clustering objective from its pieces. `include_l3`
/// is false for the -PC variant (term identically zero). `theorem1_gap`
/// is `2N * sum_i KL(q_pos || q_neg)`, the exact excess of this bound over
/// the plain clustering bound on the positive graph.
pub fn cvgae_objective(
    samples: &LatentSamples,
    post_pos: &Posterior,
    post_neg: &Posterior,
    a_gen: &Adjacency,
    q: &Dense,
    omega: &Dense,
    diag_one: bool,
    include_l3: bool,
) -> LossBreakdown {
    let l1 = loss_l1(samples, a_gen, diag_one);
    let l2 = loss_l2(samples, q, omega);
    let l3 = if include_l3 { loss_l3(post_pos, post_neg) } else { 0.0 };
    let big_n = post_pos.node_count() as f64;
    LossBreakdown {
        l1,
        l2,
        l3,
        total: l1 + l2 + l3,
        pretrain_recon: 0.0,
        pretrain_kl: 0.0,
        theorem1_gap: 2.0 * big_n * gaussian_kl_between(post_pos, post_neg),
    }
}
