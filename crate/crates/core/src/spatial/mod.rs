//! Spatial analysis of target layouts: k-means over target centers,
//! region-level distance summaries, and drift to target centers.

mod kmeans;
mod regions;

pub use kmeans::{kmeans, kmeans_with, Clustering, KMeansConfig};
pub use regions::{
    euclidean_drift, quadrant_analysis, region_analysis, Drift, PointKind, Region, RegionInputs,
    RegionSummary, ScatterPoint,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpatialError {
    #[error("no points to cluster")]
    Empty,
    #[error("k must be at least 1")]
    ZeroK,
    #[error("cannot form {k} clusters from {distinct} distinct points")]
    Infeasible { k: usize, distinct: usize },
    #[error("point {index} has a non-finite coordinate")]
    NonFinite { index: usize },
    #[error("paired inputs differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
}
