//! End-to-end node clustering with a contrastive variational graph
//! auto-encoder: a two-layer variational GCN encoder, a pretraining bound,
//! a three-term contrastive clustering objective, clustering-oriented graph
//! refinement, the two-phase training loop, and the evaluation/diagnostic
//! suite. All gradients are written out by hand and verified against central
//! differences.
//!
//! The crate is `no_std`-compatible (requires `alloc`); file formats, the
//! CLI, and everything that touches the filesystem live in the companion
//! `cvgae-cli` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod adam;
pub mod dense;
pub mod diagnostics;
pub mod encoder;
pub mod error;
pub mod gradcheck;
pub mod graph;
pub mod kmeans;
pub mod math;
pub mod metrics;
pub mod objectives;
pub mod refine;
pub mod rng;
pub mod trainer;

pub use adam::AdamState;
pub use dense::Dense;
pub use encoder::{EncoderParams, LatentSamples, Posterior};
pub use error::{CheckpointError, GraphError, MetricsError, NumericError, TrainError};
pub use gradcheck::finite_diff_check;
pub use graph::{generate_sbm, perturb_graph, Adjacency, Graph, PropagationMatrix, SbmConfig};
pub use metrics::{clustering_metrics, MetricsScores};
pub use objectives::{ClusterState, LossBreakdown};
pub use rng::RngStream;
pub use trainer::{Checkpoint, TrainConfig, Trainer};
