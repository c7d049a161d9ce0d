//! Graph representation, symmetric normalization, synthetic generation,
//! and input perturbation.
//!
//! Adjacency is stored in CSR form without self-loops; the self-loop of the
//! propagation rule is added only inside [`PropagationMatrix::from_adjacency`],
//! which keeps the original, positive, and generative structures directly
//! comparable as edge sets.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::Dense;
use crate::error::GraphError;
use crate::math;
use crate::rng::{streams, RngStream};

/// Undirected simple-graph structure: CSR over sorted neighbor lists,
/// symmetric, no self-loops, no duplicates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Adjacency {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
}

impl Adjacency {
    /// Build from an edge list. Duplicate and reversed pairs collapse to one
    /// undirected edge; self-loops are ignored (callers that need to report
    /// them count before calling).
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self, GraphError> {
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::EndpointOutOfRange { u, v, n });
            }
            if u == v {
                continue;
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(Self::from_edge_set(n, &set))
    }

    /// Build from canonical `(min, max)` pairs already known to be in range.
    pub fn from_edge_set(n: usize, edges: &BTreeSet<(u32, u32)>) -> Self {
        let mut deg = vec![0usize; n];
        for &(u, v) in edges {
            debug_assert!(u < v && (v as usize) < n);
            deg[u as usize] += 1;
            deg[v as usize] += 1;
        }
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0);
        for d in &deg {
            indptr.push(indptr.last().unwrap() + d);
        }
        let mut indices = vec![0u32; indptr[n]];
        let mut cursor = indptr.clone();
        for &(u, v) in edges {
            indices[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            indices[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        // BTreeSet iteration fills row u in ascending v order, but row v
        // receives u values out of order; sort each row once.
        let adj = Adjacency { n, indptr, indices };
        let mut indices = adj.indices;
        for i in 0..n {
            indices[adj.indptr[i]..adj.indptr[i + 1]].sort_unstable();
        }
        Adjacency { n, indptr: adj.indptr, indices }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.indices.len() / 2
    }

    #[inline]
    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Canonical `(u, v)` pairs with `u < v`, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.n).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (u as u32) < v)
                .map(move |&v| (u as u32, v))
        })
    }

    pub fn edge_set(&self) -> BTreeSet<(u32, u32)> {
        self.edges().collect()
    }
}

/// Attributed graph: structure, dense feature matrix, optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    pub adj: Adjacency,
    pub x: Dense,
    pub labels: Option<Vec<u32>>,
}

impl Graph {
    pub fn new(adj: Adjacency, x: Dense, labels: Option<Vec<u32>>) -> Result<Self, GraphError> {
        let n = adj.node_count();
        if x.rows() != n {
            return Err(GraphError::FeatureCountMismatch { feature_rows: x.rows(), n });
        }
        for i in 0..n {
            for (j, &v) in x.row(i).iter().enumerate() {
                if !v.is_finite() {
                    return Err(GraphError::NonFiniteFeature { node: i, dim: j });
                }
            }
        }
        if let Some(ref l) = labels {
            if l.len() != n {
                return Err(GraphError::LabelCountMismatch { labels: l.len(), n });
            }
        }
        Ok(Graph { adj, x, labels })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.adj.node_count()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.cols()
    }

    /// Number of distinct label values, when labels are present.
    pub fn label_classes(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().copied().max().map_or(0, |m| m as usize + 1))
    }
}

/// Symmetrically normalized propagation matrix D^-1/2 (A+I) D^-1/2 with the
/// degrees of A+I. Sparse, symmetric by construction (each entry is the
/// product of the two endpoint scalings, which commutes).
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl PropagationMatrix {
    pub fn from_adjacency(adj: &Adjacency) -> Self {
        let n = adj.node_count();
        let inv_sqrt: Vec<f64> = (0..n)
            .map(|i| 1.0 / math::sqrt((adj.degree(i) + 1) as f64))
            .collect();
        let mut indptr = Vec::with_capacity(n + 1);
        indptr.push(0usize);
        let mut indices = Vec::with_capacity(adj.indices.len() + n);
        let mut values = Vec::with_capacity(adj.indices.len() + n);
        for i in 0..n {
            let mut inserted_self = false;
            for &j in adj.neighbors(i) {
                if !inserted_self && (j as usize) > i {
                    indices.push(i as u32);
                    values.push(inv_sqrt[i] * inv_sqrt[i]);
                    inserted_self = true;
                }
                indices.push(j);
                values.push(inv_sqrt[i] * inv_sqrt[j as usize]);
            }
            if !inserted_self {
                indices.push(i as u32);
                values.push(inv_sqrt[i] * inv_sqrt[i]);
            }
            indptr.push(indices.len());
        }
        PropagationMatrix { n, indptr, indices, values }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    /// Sparse-dense product `self * d`.
    pub fn spmm(&self, d: &Dense) -> Result<Dense, crate::error::NumericError> {
        if d.rows() != self.n {
            return Err(crate::error::NumericError::ShapeMismatch {
                context: "spmm",
                lhs: (self.n, self.n),
                rhs: (d.rows(), d.cols()),
            });
        }
        let mut out = Dense::zeros(self.n, d.cols());
        for i in 0..self.n {
            let (cols, vals) = (
                &self.indices[self.indptr[i]..self.indptr[i + 1]],
                &self.values[self.indptr[i]..self.indptr[i + 1]],
            );
            let out_row = out.row_mut(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let src = d.row(j as usize);
                for (o, &s) in out_row.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Dense {
        let mut out = Dense::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                out.set(i, j as usize, v);
            }
        }
        out
    }
}

/// Stochastic block model parameters for the synthetic benchmark graphs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SbmConfig {
    /// Nodes per block; block count is `sizes.len()`.
    pub sizes: Vec<usize>,
    pub p_in: f64,
    pub p_out: f64,
    pub feat_dim: usize,
    /// Distance between block feature means along their assigned axes.
    pub feat_sep: f64,
    pub noise_sd: f64,
}

/// Draw a stochastic block model graph with Gaussian blob features and the
/// block ids as ground-truth labels. Deterministic per seed.
pub fn generate_sbm(cfg: &SbmConfig, seed: u64) -> Result<Graph, GraphError> {
    if cfg.sizes.is_empty() || cfg.sizes.iter().any(|&s| s == 0) {
        return Err(GraphError::EmptySizes);
    }
    for (name, p) in [("p_in", cfg.p_in), ("p_out", cfg.p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(GraphError::ProbabilityOutOfRange { name, value: p });
        }
    }
    if cfg.p_out > cfg.p_in {
        return Err(GraphError::ProbabilityOutOfRange { name: "p_out > p_in", value: cfg.p_out });
    }
    let n: usize = cfg.sizes.iter().sum();
    let mut labels = Vec::with_capacity(n);
    for (block, &s) in cfg.sizes.iter().enumerate() {
        labels.extend(core::iter::repeat(block as u32).take(s));
    }

    let mut rng = RngStream::new(seed, streams::SBM);
    let mut edges = BTreeSet::new();
    for u in 0..n {
        for v in (u + 1)..n {
            let p = if labels[u] == labels[v] { cfg.p_in } else { cfg.p_out };
            if rng.uniform() < p {
                edges.insert((u as u32, v as u32));
            }
        }
    }
    let adj = Adjacency::from_edge_set(n, &edges);

    let mut x = Dense::zeros(n, cfg.feat_dim);
    for i in 0..n {
        let axis = labels[i] as usize % cfg.feat_dim;
        let row = x.row_mut(i);
        for (j, slot) in row.iter_mut().enumerate() {
            let mean = if j == axis { cfg.feat_sep } else { 0.0 };
            *slot = mean + cfg.noise_sd * rng.gaussian();
        }
    }

    Graph::new(adj, x, Some(labels))
}

/// Randomly edit structure and features: drop/add edges, zero feature
/// columns per node, add Gaussian feature noise. Node count and labels are
/// preserved. Deterministic per seed, so two models can be trained on the
/// identical perturbed input.
pub fn perturb_graph(
    g: &Graph,
    edge_add_frac: f64,
    edge_drop_frac: f64,
    feat_drop_frac: f64,
    feat_noise_sd: f64,
    seed: u64,
) -> Result<Graph, GraphError> {
    for (name, f) in [
        ("edge_add_frac", edge_add_frac),
        ("edge_drop_frac", edge_drop_frac),
        ("feat_drop_frac", feat_drop_frac),
    ] {
        if !(0.0..=1.0).contains(&f) {
            return Err(GraphError::FractionOutOfRange { name, value: f });
        }
    }
    let n = g.node_count();
    let m = g.adj.edge_count();
    let drop_count = (edge_drop_frac * m as f64) as usize;
    let add_count = (edge_add_frac * m as f64) as usize;
    let total_pairs = n * (n - 1) / 2;
    let available = total_pairs - m;
    if add_count > available {
        return Err(GraphError::NotEnoughNonEdges { requested: add_count, available });
    }

    let mut rng = RngStream::new(seed, streams::PERTURB);
    let canonical: Vec<(u32, u32)> = g.adj.edges().collect();
    let dropped: BTreeSet<usize> = rng.choose_distinct(m, drop_count).into_iter().collect();
    let mut edges: BTreeSet<(u32, u32)> = canonical
        .iter()
        .enumerate()
        .filter(|(idx, _)| !dropped.contains(idx))
        .map(|(_, &e)| e)
        .collect();

    let mut added = 0usize;
    if available > 0 && add_count > 0 {
        if available * 4 < total_pairs {
            // Dense graph: enumerate non-edges and sample without rejection.
            let mut non_edges = Vec::with_capacity(available);
            for u in 0..n {
                for v in (u + 1)..n {
                    if !g.adj.has_edge(u, v) {
                        non_edges.push((u as u32, v as u32));
                    }
                }
            }
            for idx in rng.choose_distinct(non_edges.len(), add_count) {
                edges.insert(non_edges[idx]);
            }
        } else {
            let original = g.adj.edge_set();
            while added < add_count {
                let u = rng.index(n) as u32;
                let v = rng.index(n) as u32;
                if u == v {
                    continue;
                }
                let e = (u.min(v), u.max(v));
                if original.contains(&e) || !edges.insert(e) {
                    continue;
                }
                added += 1;
            }
        }
    }

    let adj = Adjacency::from_edge_set(n, &edges);

    let j = g.feature_dim();
    let zero_cols = (feat_drop_frac * j as f64) as usize;
    let mut x = g.x.clone();
    for i in 0..n {
        let zeroed: BTreeSet<usize> = rng.choose_distinct(j, zero_cols).into_iter().collect();
        let row = x.row_mut(i);
        for (c, slot) in row.iter_mut().enumerate() {
            if zeroed.contains(&c) {
                *slot = 0.0;
            } else if feat_noise_sd > 0.0 {
                *slot += feat_noise_sd * rng.gaussian();
            }
        }
    }

    Graph::new(adj, x, g.labels.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3() -> Adjacency {
        Adjacency::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn reversed_duplicates_collapse() {
        let a = Adjacency::from_edges(2, &[(0, 1), (1, 0), (0, 1)]).unwrap();
        assert_eq!(a.edge_count(), 1);
        assert!(a.has_edge(0, 1) && a.has_edge(1, 0));
    }

    #[test]
    fn endpoint_out_of_range_rejected() {
        assert!(matches!(
            Adjacency::from_edges(2, &[(0, 2)]),
            Err(GraphError::EndpointOutOfRange { .. })
        ));
    }

    #[test]
    fn normalization_single_edge() {
        let a = Adjacency::from_edges(2, &[(0, 1)]).unwrap();
        let p = PropagationMatrix::from_adjacency(&a).to_dense();
        for i in 0..2 {
            for j in 0..2 {
                assert!((p.get(i, j) - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn normalization_isolated_node() {
        let a = Adjacency::from_edges(1, &[]).unwrap();
        let p = PropagationMatrix::from_adjacency(&a).to_dense();
        assert_eq!(p.get(0, 0), 1.0);
    }

    #[test]
    fn normalization_path_off_diagonal() {
        // Node 1 has degree 2, so (0,1) entry is 1/sqrt(2*3).
        let p = PropagationMatrix::from_adjacency(&path3()).to_dense();
        let expect = 1.0 / math::sqrt(6.0);
        assert!((p.get(0, 1) - expect).abs() < 1e-15);
        assert!((p.get(1, 0) - expect).abs() < 1e-15);
        assert!((expect - 0.40825).abs() < 1e-5);
    }

    #[test]
    fn normalization_bitwise_symmetric() {
        let mut rng = RngStream::new(42, 0);
        let mut edges = alloc::vec::Vec::new();
        let n = 17;
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                if rng.uniform() < 0.3 {
                    edges.push((u, v));
                }
            }
        }
        let p = PropagationMatrix::from_adjacency(&Adjacency::from_edges(n, &edges).unwrap())
            .to_dense();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(p.get(i, j).to_bits(), p.get(j, i).to_bits());
            }
        }
    }

    #[test]
    fn spmm_identity_and_hand_product() {
        let a = Adjacency::from_edges(2, &[(0, 1)]).unwrap();
        let p = PropagationMatrix::from_adjacency(&a);
        let d = Dense::from_rows(&[&[1.0], &[3.0]]);
        let out = p.spmm(&d).unwrap();
        assert_eq!(out.as_slice(), &[2.0, 2.0]);
    }

    #[test]
    fn sbm_degenerate_probabilities_give_cliques() {
        let g = generate_sbm(
            &SbmConfig {
                sizes: alloc::vec![4, 3],
                p_in: 1.0,
                p_out: 0.0,
                feat_dim: 2,
                feat_sep: 1.0,
                noise_sd: 0.0,
            },
            9,
        )
        .unwrap();
        assert_eq!(g.adj.edge_count(), 4 * 3 / 2 + 3 * 2 / 2);
        // zero noise: same-block feature rows identical
        assert_eq!(g.x.row(0), g.x.row(3));
        assert_eq!(g.x.row(4), g.x.row(6));
        assert_ne!(g.x.row(0), g.x.row(4));
        // blocks are exactly the connected components: no cross edges
        for (u, v) in g.adj.edges() {
            assert_eq!(
                g.labels.as_ref().unwrap()[u as usize],
                g.labels.as_ref().unwrap()[v as usize]
            );
        }
    }

    #[test]
    fn sbm_is_deterministic_per_seed() {
        let cfg = SbmConfig {
            sizes: alloc::vec![5, 5],
            p_in: 0.6,
            p_out: 0.1,
            feat_dim: 3,
            feat_sep: 2.0,
            noise_sd: 0.5,
        };
        let a = generate_sbm(&cfg, 31).unwrap();
        let b = generate_sbm(&cfg, 31).unwrap();
        assert_eq!(a, b);
        let c = generate_sbm(&cfg, 32).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn perturb_identity_when_all_zero() {
        let g = generate_sbm(
            &SbmConfig {
                sizes: alloc::vec![6, 6],
                p_in: 0.5,
                p_out: 0.1,
                feat_dim: 4,
                feat_sep: 1.0,
                noise_sd: 0.3,
            },
            1,
        )
        .unwrap();
        let p = perturb_graph(&g, 0.0, 0.0, 0.0, 0.0, 77).unwrap();
        assert_eq!(g, p);
    }

    #[test]
    fn perturb_full_drop_empties_graph() {
        let g = generate_sbm(
            &SbmConfig {
                sizes: alloc::vec![5, 5],
                p_in: 0.8,
                p_out: 0.2,
                feat_dim: 2,
                feat_sep: 1.0,
                noise_sd: 0.1,
            },
            2,
        )
        .unwrap();
        let p = perturb_graph(&g, 0.0, 1.0, 0.0, 0.0, 3).unwrap();
        assert_eq!(p.adj.edge_count(), 0);
        assert_eq!(p.node_count(), g.node_count());
        assert_eq!(p.labels, g.labels);
    }

    #[test]
    fn perturb_deterministic_per_seed() {
        let g = generate_sbm(
            &SbmConfig {
                sizes: alloc::vec![8, 8],
                p_in: 0.5,
                p_out: 0.05,
                feat_dim: 3,
                feat_sep: 2.0,
                noise_sd: 0.2,
            },
            5,
        )
        .unwrap();
        let a = perturb_graph(&g, 0.2, 0.2, 0.25, 0.1, 11).unwrap();
        let b = perturb_graph(&g, 0.2, 0.2, 0.25, 0.1, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn perturb_rejects_impossible_additions() {
        // complete graph on 4 nodes: no non-edges left
        let edges: Vec<(u32, u32)> = (0..4u32)
            .flat_map(|u| ((u + 1)..4).map(move |v| (u, v)))
            .collect();
        let adj = Adjacency::from_edges(4, &edges).unwrap();
        let g = Graph::new(adj, Dense::zeros(4, 2), None).unwrap();
        assert!(matches!(
            perturb_graph(&g, 1.0, 0.0, 0.0, 0.0, 1),
            Err(GraphError::NotEnoughNonEdges { .. })
        ));
    }

    #[test]
    fn propagation_row_sums_at_most_one() {
        let g = generate_sbm(
            &SbmConfig {
                sizes: alloc::vec![7, 6],
                p_in: 0.7,
                p_out: 0.15,
                feat_dim: 2,
                feat_sep: 1.0,
                noise_sd: 0.0,
            },
            13,
        )
        .unwrap();
        let p = PropagationMatrix::from_adjacency(&g.adj).to_dense();
        for i in 0..g.node_count() {
            let s: f64 = p.row(i).iter().sum();
            assert!(s <= 1.0 + 1e-12, "row {i} sums to {s}");
        }
        // equality case: regular neighborhood (single edge graph)
        let a = Adjacency::from_edges(2, &[(0, 1)]).unwrap();
        let q = PropagationMatrix::from_adjacency(&a).to_dense();
        let s: f64 = q.row(0).iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
    }
}
