//! Error types for the crate.

use alloc::string::String;
use core::fmt;

/// Errors from the dense/sparse kernels and the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub enum NumericError {
    ShapeMismatch {
        context: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    /// A forward evaluation produced a non-finite value.
    NonFinite { context: &'static str },
    /// A gradient fed to the optimizer is non-finite; `term` names the loss
    /// term the gradient came from.
    NonFiniteGradient { term: String },
}

impl fmt::Display for NumericError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumericError::ShapeMismatch { context, lhs, rhs } => write!(
                f,
                "{context}: shape mismatch {}x{} vs {}x{}",
                lhs.0, lhs.1, rhs.0, rhs.1
            ),
            NumericError::NonFinite { context } => {
                write!(f, "{context}: non-finite value")
            }
            NumericError::NonFiniteGradient { term } => {
                write!(f, "non-finite gradient in loss term `{term}`")
            }
        }
    }
}

impl core::error::Error for NumericError {}

/// Errors from graph construction and perturbation.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphError {
    EndpointOutOfRange { u: u32, v: u32, n: usize },
    FeatureCountMismatch { feature_rows: usize, n: usize },
    LabelCountMismatch { labels: usize, n: usize },
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    FractionOutOfRange { name: &'static str, value: f64 },
    /// More edge additions requested than non-edges exist.
    NotEnoughNonEdges { requested: usize, available: usize },
    EmptySizes,
    NonFiniteFeature { node: usize, dim: usize },
}

impl fmt::Display for GraphError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphError::EndpointOutOfRange { u, v, n } => {
                write!(f, "edge ({u},{v}) has an endpoint >= node count {n}")
            }
            GraphError::FeatureCountMismatch { feature_rows, n } => {
                write!(f, "feature/node count mismatch: {feature_rows} rows for {n} nodes")
            }
            GraphError::LabelCountMismatch { labels, n } => {
                write!(f, "label/node count mismatch: {labels} labels for {n} nodes")
            }
            GraphError::ProbabilityOutOfRange { name, value } => {
                write!(f, "probability `{name}` = {value} outside [0,1]")
            }
            GraphError::FractionOutOfRange { name, value } => {
                write!(f, "fraction `{name}` = {value} outside [0,1]")
            }
            GraphError::NotEnoughNonEdges { requested, available } => {
                write!(f, "requested {requested} edge additions but only {available} non-edges exist")
            }
            GraphError::EmptySizes => write!(f, "cluster sizes must be positive"),
            GraphError::NonFiniteFeature { node, dim } => {
                write!(f, "non-finite feature at node {node}, dim {dim}")
            }
        }
    }
}

impl core::error::Error for GraphError {}

/// Errors from the clustering metric suite.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    LengthMismatch { pred: usize, truth: usize },
    EmptyInput,
    NonFiniteCost,
    NotSquare { rows: usize, cols: usize },
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::LengthMismatch { pred, truth } => {
                write!(f, "pred length {pred} != truth length {truth}")
            }
            MetricsError::EmptyInput => write!(f, "empty label vectors"),
            MetricsError::NonFiniteCost => write!(f, "non-finite entry in cost matrix"),
            MetricsError::NotSquare { rows, cols } => {
                write!(f, "cost matrix is {rows}x{cols}, expected square")
            }
        }
    }
}

impl core::error::Error for MetricsError {}

/// Errors raised by the two training phases.
#[derive(Debug, Clone, PartialEq)]
pub enum TrainError {
    /// The objective went non-finite; training halts with the last finite
    /// parameters still owned by the caller-visible trainer state.
    NonFiniteLoss { phase: &'static str, iteration: usize, term: String },
    InvalidConfig { reason: String },
    Numeric(NumericError),
    TooFewNodes { n: usize, k: usize },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::NonFiniteLoss { phase, iteration, term } => {
                write!(f, "non-finite loss in {phase} iteration {iteration} (term `{term}`)")
            }
            TrainError::InvalidConfig { reason } => write!(f, "invalid config: {reason}"),
            TrainError::Numeric(e) => write!(f, "{e}"),
            TrainError::TooFewNodes { n, k } => {
                write!(f, "{n} nodes cannot seed {k} cluster centers")
            }
        }
    }
}

impl From<NumericError> for TrainError {
    fn from(e: NumericError) -> Self {
        TrainError::Numeric(e)
    }
}

impl core::error::Error for TrainError {}

/// Errors from checkpoint encoding/decoding.
#[derive(Debug, Clone, PartialEq)]
pub enum CheckpointError {
    BadMagic,
    UnsupportedVersion { found: u32, expected: u32 },
    ConfigHashMismatch { found: u64, expected: u64 },
    ShapeMismatch { tensor: &'static str, found: (usize, usize), expected: (usize, usize) },
    Truncated,
    TrailingBytes { extra: usize },
}

impl fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CheckpointError::BadMagic => write!(f, "corrupt checkpoint: bad magic"),
            CheckpointError::UnsupportedVersion { found, expected } => {
                write!(f, "unsupported checkpoint version {found} (expected {expected})")
            }
            CheckpointError::ConfigHashMismatch { found, expected } => {
                write!(f, "checkpoint config hash {found:#018x} does not match current config {expected:#018x}")
            }
            CheckpointError::ShapeMismatch { tensor, found, expected } => write!(
                f,
                "checkpoint tensor `{tensor}` is {}x{}, config expects {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            CheckpointError::Truncated => write!(f, "corrupt checkpoint: truncated"),
            CheckpointError::TrailingBytes { extra } => {
                write!(f, "corrupt checkpoint: {extra} trailing bytes")
            }
        }
    }
}

impl core::error::Error for CheckpointError {}
