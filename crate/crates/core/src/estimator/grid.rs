use serde::{Deserialize, Serialize};

use super::EstimatorError;
use crate::geometry::Point;

/// Square voxels laid out row-major: voxel `j` is at row `j / width`, column
/// `j % width`. Row 0 is at the lowest `y`, column 0 at the lowest `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub origin: Point,
    pub width: usize,
    pub height: usize,
    pub pixel_size: f64,
}

impl VoxelGrid {
    pub fn new(origin: Point, width: usize, height: usize, pixel_size: f64) -> Result<Self, EstimatorError> {
        if width == 0 || height == 0 {
            return Err(EstimatorError::InvalidParameter("grid needs at least one voxel".into()));
        }
        if !(pixel_size > 0.0) || !pixel_size.is_finite() {
            return Err(EstimatorError::InvalidParameter("pixel size must be positive".into()));
        }
        if !origin.is_finite() {
            return Err(EstimatorError::InvalidParameter("grid origin must be finite".into()));
        }
        Ok(Self {
            origin,
            width,
            height,
            pixel_size,
        })
    }

    /// Smallest grid anchored at `origin` that covers `extent_x` by
    /// `extent_y` feet.
    pub fn covering(origin: Point, extent_x: f64, extent_y: f64, pixel_size: f64) -> Result<Self, EstimatorError> {
        let cells = |e: f64| ((e / pixel_size).ceil() as usize).max(1);
        Self::new(origin, cells(extent_x), cells(extent_y), pixel_size)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }

    pub fn row_col(&self, j: usize) -> (usize, usize) {
        (j / self.width, j % self.width)
    }

    pub fn center(&self, j: usize) -> Point {
        let (row, col) = self.row_col(j);
        Point::new(
            self.origin.x + (col as f64 + 0.5) * self.pixel_size,
            self.origin.y + (row as f64 + 0.5) * self.pixel_size,
        )
    }

    pub fn centers(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(|j| self.center(j))
    }

    pub fn contains(&self, p: &Point) -> bool {
        p.x >= self.origin.x
            && p.y >= self.origin.y
            && p.x <= self.origin.x + self.width as f64 * self.pixel_size
            && p.y <= self.origin.y + self.height as f64 * self.pixel_size
    }
}
