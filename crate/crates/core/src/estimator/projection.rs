use nalgebra::{DMatrix, DVector};

use super::image::MotionImage;
use super::links::LinkIndex;
use super::weights::{build_difference_ops, WeightMatrix};
use super::{EstimatorError, VoxelGrid};

/// Precomputed linear map from link variances to a motion image.
#[derive(Debug, Clone, PartialEq)]
pub struct TikhonovProjection {
    /// `N x M`: voxels by links.
    pub pi: DMatrix<f64>,
    pub alpha: f64,
    pub grid: VoxelGrid,
    pub links: LinkIndex,
}

/// `Dx'Dx + Dy'Dy`, the grid's graph Laplacian.
pub fn regularizer(grid: &VoxelGrid) -> DMatrix<f64> {
    let (dx, dy) = build_difference_ops(grid);
    dx.gram() + dy.gram()
}

/// `Pi = (W'W + alpha (Dx'Dx + Dy'Dy))^-1 W'`, by Cholesky factorization of
/// the regularized normal matrix.
pub fn build_projection(w: &WeightMatrix, alpha: f64, grid: &VoxelGrid) -> Result<TikhonovProjection, EstimatorError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(EstimatorError::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if w.ncols() != grid.len() {
        return Err(EstimatorError::DimensionMismatch {
            expected: grid.len(),
            got: w.ncols(),
        });
    }
    let normal = w.matrix.gram() + regularizer(grid) * alpha;
    let n = normal.nrows();

    let Some(chol) = normal.clone().cholesky() else {
        let smallest_eigenvalue = normal.symmetric_eigenvalues().min();
        return Err(EstimatorError::Singular { smallest_eigenvalue });
    };
    // squared Cholesky pivots are the Schur-complement diagonal
    let pivots = chol.l_dirty().diagonal().map(|p| p * p);
    let (smallest_pivot, largest_pivot) = (pivots.min(), pivots.max());
    if smallest_pivot <= largest_pivot * n as f64 * f64::EPSILON {
        return Err(EstimatorError::RankDeficient {
            smallest_pivot,
            largest_pivot,
        });
    }

    let pi = chol.solve(&w.matrix.to_dense().transpose());
    Ok(TikhonovProjection {
        pi,
        alpha,
        grid: *grid,
        links: w.links.clone(),
    })
}

/// `x = Pi s`.
pub fn reconstruct(proj: &TikhonovProjection, s_hat: &[f64]) -> Result<MotionImage, EstimatorError> {
    if s_hat.len() != proj.pi.ncols() {
        return Err(EstimatorError::DimensionMismatch {
            expected: proj.pi.ncols(),
            got: s_hat.len(),
        });
    }
    let x = &proj.pi * DVector::from_column_slice(s_hat);
    Ok(MotionImage::new(x.as_slice().to_vec(), proj.grid, 0.0))
}
