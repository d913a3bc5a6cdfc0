use log::warn;

use super::links::{Link, LinkIndex, LinkMode};
use super::sparse::SparseMatrix;
use super::{EstimatorError, VoxelGrid};
use crate::geometry::Point;

/// Link-by-voxel variance weights, one row per link of `links`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    pub matrix: SparseMatrix,
    pub links: LinkIndex,
}

impl WeightMatrix {
    pub fn new(matrix: SparseMatrix, links: LinkIndex) -> Result<Self, EstimatorError> {
        if matrix.nrows() != links.len() {
            return Err(EstimatorError::DimensionMismatch {
                expected: links.len(),
                got: matrix.nrows(),
            });
        }
        Ok(Self { matrix, links })
    }

    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Elliptical weight model: `psi / sqrt(d_l)` for every voxel whose centre
/// satisfies `d1 + d2 < d_l + lambda`, zero elsewhere.
///
/// Node pairs at the same position have no defined weight and are left out
/// of the link index.
pub fn build_weight_matrix(
    nodes: &[Point],
    grid: &VoxelGrid,
    lambda: f64,
    psi: f64,
    mode: LinkMode,
) -> Result<WeightMatrix, EstimatorError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(EstimatorError::InvalidParameter(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    if !(psi > 0.0) || !psi.is_finite() {
        return Err(EstimatorError::InvalidParameter(format!(
            "psi must be positive, got {psi}"
        )));
    }
    let candidates = LinkIndex::all_pairs(nodes.len(), mode);
    let links = LinkIndex::new(
        mode,
        candidates.links().iter().copied().filter(|l: &Link| {
            let coincident = nodes[l.a].distance(&nodes[l.b]) == 0.0;
            if coincident {
                warn!(
                    "nodes {} and {} coincide; link excluded from the weight model",
                    l.a, l.b
                );
            }
            !coincident
        }),
    );

    let centers: Vec<Point> = grid.centers().collect();
    let mut matrix = SparseMatrix::new(grid.len());
    for l in links.links() {
        let (a, b) = (nodes[l.a], nodes[l.b]);
        let d = a.distance(&b);
        let w = psi / d.sqrt();
        let row = centers
            .iter()
            .enumerate()
            .filter(|(_, c)| c.distance(&a) + c.distance(&b) < d + lambda)
            .map(|(j, _)| (j, w))
            .collect();
        matrix.push_row(row);
    }
    WeightMatrix::new(matrix, links)
}

/// Horizontal and vertical first-difference operators on the grid. Each row
/// holds `+1` at a voxel and `-1` at its right (or upper) neighbour.
pub fn build_difference_ops(grid: &VoxelGrid) -> (SparseMatrix, SparseMatrix) {
    let mut dx = SparseMatrix::new(grid.len());
    let mut dy = SparseMatrix::new(grid.len());
    for row in 0..grid.height {
        for col in 0..grid.width {
            let j = grid.index(row, col);
            if col + 1 < grid.width {
                dx.push_row(vec![(j, 1.0), (j + 1, -1.0)]);
            }
            if row + 1 < grid.height {
                dy.push_row(vec![(j, 1.0), (j + grid.width, -1.0)]);
            }
        }
    }
    (dx, dy)
}
