//! Windowed link variances and regularized motion-image reconstruction.
//!
//! Each link keeps the last `N_B` RSS values; their unbiased sample variance
//! forms the measurement vector `s`. Motion in voxel `j` adds variance to
//! link `l` only when the voxel centre lies inside the ellipse around the link
//! with a small excess path length, scaled by `1/sqrt(d_l)`. The image is
//! the Tikhonov solution `(W'W + a(Dx'Dx + Dy'Dy))^-1 W' s`, precomputed as a
//! single projection matrix so each frame costs one matrix-vector product.

mod buffer;
mod grid;
mod image;
mod links;
mod projection;
mod sparse;
mod weights;

use thiserror::Error;

pub use buffer::{sample_variance, RssBuffer, VarianceBank};
pub use grid::VoxelGrid;
pub use image::{read_frame_csv, write_frame_csv, write_frame_pgm, MotionImage};
pub use links::{Link, LinkIndex, LinkMode};
pub use projection::{build_projection, reconstruct, regularizer, TikhonovProjection};
pub use sparse::SparseMatrix;
pub use weights::{build_difference_ops, build_weight_matrix, WeightMatrix};

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("regularized normal matrix is not positive definite (smallest eigenvalue {smallest_eigenvalue:e})")]
    Singular { smallest_eigenvalue: f64 },
    #[error("regularized normal matrix is numerically rank deficient (smallest pivot {smallest_pivot:e}, largest {largest_pivot:e})")]
    RankDeficient { smallest_pivot: f64, largest_pivot: f64 },
    #[error("frame file line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
