//! Clustering-oriented graph refinement.
//!
//! Two constructions over the original structure, both restricted to the
//! reliable set:
//! - positive graph: drop edges whose reliable endpoints disagree on their
//!   predicted cluster, add missing edges from each cluster's centroid node
//!   to that cluster's reliable members;
//! - generative target: the additions only, never a removal.
//!
//! Both always start from the original adjacency, not from the previous
//! refinement, so the structures cannot drift across refreshes.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::dense::Dense;
use crate::graph::Adjacency;
use crate::objectives::ClusterState;

/// True/false link counts (same-label vs cross-label) for a refined
/// structure, split into surviving, added, and deleted edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinkAudit {
    pub true_links: usize,
    pub false_links: usize,
    pub added_true: usize,
    pub added_false: usize,
    pub deleted_true: usize,
    pub deleted_false: usize,
}

/// The refined structures for one refresh window. `a_neg` is always the
/// untouched input structure.
#[derive(Debug, Clone)]
pub struct RefinedGraphs {
    pub a_pos: Adjacency,
    pub a_gen: Adjacency,
    pub a_neg: Adjacency,
    pub link_audit: Option<LinkAudit>,
}

/// For each cluster, the reliable node nearest (in posterior mean) to the
/// cluster center; `None` when the cluster has no reliable member, in which
/// case both refinement operations skip that cluster this round. Ties break
/// toward the lower node index.
pub fn centroid_nodes(mu: &Dense, omega: &Dense, state: &ClusterState) -> Vec<Option<usize>> {
    let k = omega.rows();
    let pred = state.predicted();
    let mut best: Vec<Option<(f64, usize)>> = alloc::vec![None; k];
    for &i in &state.theta {
        let j = pred[i] as usize;
        let mut d2 = 0.0;
        for (a, b) in mu.row(i).iter().zip(omega.row(j)) {
            let t = a - b;
            d2 += t * t;
        }
        match best[j] {
            Some((bd, _)) if bd <= d2 => {}
            _ => best[j] = Some((d2, i)),
        }
    }
    best.iter().map(|b| b.map(|(_, i)| i)).collect()
}

/// Missing centroid-to-member edges, shared by both constructions. Members
/// are the reliable nodes predicted into the cluster; `widen` extends to
/// every node predicted into the cluster.
pub fn centroid_additions(
    a: &Adjacency,
    state: &ClusterState,
    centroids: &[Option<usize>],
    widen: bool,
) -> Vec<(u32, u32)> {
    let pred = state.predicted();
    let mut out = Vec::new();
    for (j, c) in centroids.iter().enumerate() {
        let Some(c) = *c else { continue };
        let members: Vec<usize> = if widen {
            (0..pred.len()).filter(|&v| pred[v] as usize == j).collect()
        } else {
            state.theta.iter().copied().filter(|&v| pred[v] as usize == j).collect()
        };
        for v in members {
            if v != c && !a.has_edge(c, v) {
                out.push(((c.min(v)) as u32, (c.max(v)) as u32));
            }
        }
    }
    out
}

/// The positive-graph construction: deletions among disagreeing reliable
/// pairs plus the centroid additions.
pub fn build_positive_graph(
    a: &Adjacency,
    state: &ClusterState,
    additions: &[(u32, u32)],
) -> Adjacency {
    let pred = state.predicted();
    let reliable = reliable_mask(state, a.node_count());
    let mut edges: BTreeSet<(u32, u32)> = a
        .edges()
        .filter(|&(u, v)| {
            let (u, v) = (u as usize, v as usize);
            !(reliable[u] && reliable[v] && pred[u] != pred[v])
        })
        .collect();
    edges.extend(additions.iter().copied());
    Adjacency::from_edge_set(a.node_count(), &edges)
}

/// The generative-target construction: additions only.
pub fn build_generative_graph(a: &Adjacency, additions: &[(u32, u32)]) -> Adjacency {
    let mut edges = a.edge_set();
    edges.extend(additions.iter().copied());
    Adjacency::from_edge_set(a.node_count(), &edges)
}

fn reliable_mask(state: &ClusterState, n: usize) -> Vec<bool> {
    let mut mask = alloc::vec![false; n];
    for &i in &state.theta {
        mask[i] = true;
    }
    mask
}

/// Count true/false links of the refined structure against ground truth,
/// overall and among the edges added to / deleted from the base structure.
pub fn audit_links(base: &Adjacency, refined: &Adjacency, labels: &[u32]) -> LinkAudit {
    let mut audit = LinkAudit::default();
    let base_set = base.edge_set();
    let refined_set = refined.edge_set();
    for &(u, v) in &refined_set {
        if labels[u as usize] == labels[v as usize] {
            audit.true_links += 1;
        } else {
            audit.false_links += 1;
        }
    }
    for e in refined_set.difference(&base_set) {
        if labels[e.0 as usize] == labels[e.1 as usize] {
            audit.added_true += 1;
        } else {
            audit.added_false += 1;
        }
    }
    for e in base_set.difference(&refined_set) {
        if labels[e.0 as usize] == labels[e.1 as usize] {
            audit.deleted_true += 1;
        } else {
            audit.deleted_false += 1;
        }
    }
    audit
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Triangle 0-1-2; nodes 0,1 confidently in cluster 0, node 2 in
    /// cluster 1; mu placed so node 0 and node 2 are the centroids.
    fn triangle_state() -> (Adjacency, ClusterState, Dense, Dense) {
        let a = Adjacency::from_edges(3, &[(0, 1), (0, 2), (1, 2)]).unwrap();
        let omega = Dense::from_rows(&[&[0.0], &[4.0]]);
        let mu = Dense::from_rows(&[&[0.0], &[0.4], &[4.0]]);
        let state = ClusterState::compute(&mu, &omega, 0.2, false);
        assert_eq!(state.theta, vec![0, 1, 2]);
        (a, state, mu, omega)
    }

    #[test]
    fn centroid_is_the_exact_match_when_one_exists() {
        let (_, state, mu, omega) = triangle_state();
        let c = centroid_nodes(&mu, &omega, &state);
        assert_eq!(c, vec![Some(0), Some(2)]);
    }

    #[test]
    fn centroid_ties_break_to_lower_index() {
        let omega = Dense::from_rows(&[&[0.0]]);
        let mu = Dense::from_rows(&[&[1.0], &[-1.0]]);
        // single cluster, both nodes reliable and equidistant
        let state = ClusterState::compute(&mu, &Dense::from_rows(&[&[0.0], &[100.0]]), 0.2, false);
        let c = centroid_nodes(&mu, &omega, &state);
        assert_eq!(c[0], Some(0));
    }

    #[test]
    fn triangle_positive_graph_drops_cross_cluster_edges() {
        let (a, state, mu, omega) = triangle_state();
        let cents = centroid_nodes(&mu, &omega, &state);
        let adds = centroid_additions(&a, &state, &cents, false);
        assert!(adds.is_empty());
        let pos = build_positive_graph(&a, &state, &adds);
        assert_eq!(pos.edge_set().into_iter().collect::<Vec<_>>(), vec![(0, 1)]);
        let gen = build_generative_graph(&a, &adds);
        assert_eq!(gen.edge_set(), a.edge_set());
    }

    #[test]
    fn detached_member_gets_a_centroid_edge() {
        // node 3 reliable in cluster 0, not adjacent to centroid 0
        let a = Adjacency::from_edges(4, &[(0, 1), (1, 3), (2, 3)]).unwrap();
        let omega = Dense::from_rows(&[&[0.0], &[4.0]]);
        let mu = Dense::from_rows(&[&[0.0], &[0.4], &[4.0], &[0.6]]);
        let state = ClusterState::compute(&mu, &omega, 0.2, false);
        let cents = centroid_nodes(&mu, &omega, &state);
        assert_eq!(cents, vec![Some(0), Some(2)]);
        let adds = centroid_additions(&a, &state, &cents, false);
        assert_eq!(adds, vec![(0, 3)]);
        let pos = build_positive_graph(&a, &state, &adds);
        assert!(pos.has_edge(0, 3));
        let gen = build_generative_graph(&a, &adds);
        assert!(gen.has_edge(0, 3));
        // additions agree between the two constructions
        let added_pos: BTreeSet<_> = pos.edge_set().difference(&a.edge_set()).copied().collect();
        let added_gen: BTreeSet<_> = gen.edge_set().difference(&a.edge_set()).copied().collect();
        assert_eq!(added_pos, added_gen);
    }

    #[test]
    fn empty_reliable_set_leaves_the_graph_alone() {
        let a = Adjacency::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let omega = Dense::from_rows(&[&[0.0], &[0.1]]);
        // every node equidistant-ish: use alpha = 1.0 so nothing is reliable
        let mu = Dense::from_rows(&[&[0.05], &[0.05], &[0.05]]);
        let state = ClusterState::compute(&mu, &omega, 1.0, false);
        assert!(state.theta.is_empty());
        let cents = centroid_nodes(&mu, &omega, &state);
        assert_eq!(cents, vec![None, None]);
        let adds = centroid_additions(&a, &state, &cents, false);
        let pos = build_positive_graph(&a, &state, &adds);
        let gen = build_generative_graph(&a, &adds);
        assert_eq!(pos.edge_set(), a.edge_set());
        assert_eq!(gen.edge_set(), a.edge_set());
    }

    #[test]
    fn audit_counts_the_triangle_example() {
        let (a, state, mu, omega) = triangle_state();
        let cents = centroid_nodes(&mu, &omega, &state);
        let adds = centroid_additions(&a, &state, &cents, false);
        let pos = build_positive_graph(&a, &state, &adds);
        let labels = vec![0, 0, 1];
        let audit = audit_links(&a, &pos, &labels);
        assert_eq!(audit.deleted_false, 2);
        assert_eq!(audit.deleted_true, 0);
        assert_eq!(audit.true_links, 1);
        assert_eq!(audit.false_links, 0);
        assert_eq!(audit.added_true + audit.added_false, 0);
    }

    #[test]
    fn all_intra_label_edges_count_as_true() {
        let a = Adjacency::from_edges(4, &[(0, 1), (2, 3)]).unwrap();
        let audit = audit_links(&a, &a, &[0, 0, 1, 1]);
        assert_eq!(audit.false_links, 0);
        assert_eq!(audit.true_links, 2);
    }
}
