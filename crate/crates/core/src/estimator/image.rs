use std::io::{Read, Write};

use super::{EstimatorError, VoxelGrid};
use crate::geometry::Point;

/// Reconstructed motion intensity per voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionImage {
    pub values: Vec<f64>,
    pub grid: VoxelGrid,
    pub timestamp: f64,
}

impl MotionImage {
    /// # Panics
    /// If `values` does not have one entry per voxel.
    pub fn new(values: Vec<f64>, grid: VoxelGrid, timestamp: f64) -> Self {
        assert_eq!(values.len(), grid.len(), "one value per voxel");
        Self {
            values,
            grid,
            timestamp,
        }
    }

    pub fn with_timestamp(mut self, timestamp: f64) -> Self {
        self.timestamp = timestamp;
        self
    }

    /// Index of the largest value; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (j, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = j;
            }
        }
        best
    }

    pub fn peak_center(&self) -> Point {
        self.grid.center(self.argmax())
    }

    pub fn is_flat(&self) -> bool {
        self.values.iter().all(|v| *v == self.values[0])
    }
}

/// ASCII PGM (P2), min-max scaled to 0..=255, highest row first so that `y`
/// points up when viewed.
pub fn write_frame_pgm<W: Write>(mut out: W, image: &MotionImage) -> std::io::Result<()> {
    let g = &image.grid;
    let (lo, hi) = image
        .values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(*v), hi.max(*v))
        });
    writeln!(out, "P2\n{} {}\n255", g.width, g.height)?;
    for row in (0..g.height).rev() {
        let line: Vec<String> = (0..g.width)
            .map(|col| {
                let v = image.values[g.index(row, col)];
                let level = if hi > lo {
                    ((v - lo) / (hi - lo) * 255.0).round()
                } else {
                    0.0
                };
                (level as u8).to_string()
            })
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Lossless `row,col,value` CSV, one line per voxel in index order.
pub fn write_frame_csv<W: Write>(out: W, image: &MotionImage) -> Result<(), EstimatorError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(["row", "col", "value"])?;
    for (j, v) in image.values.iter().enumerate() {
        let (row, col) = image.grid.row_col(j);
        w.write_record([row.to_string(), col.to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Read a frame written by [`write_frame_csv`] onto `grid`. Every voxel
/// must appear exactly once.
pub fn read_frame_csv<R: Read>(input: R, grid: VoxelGrid, timestamp: f64) -> Result<MotionImage, EstimatorError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let mut values = vec![f64::NAN; grid.len()];
    let mut seen = vec![false; grid.len()];
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |message: String| EstimatorError::Malformed { line, message };
        let (row, col, value): (usize, usize, f64) = record.deserialize(None).map_err(|e| bad(e.to_string()))?;
        if row >= grid.height || col >= grid.width {
            return Err(bad(format!(
                "voxel ({row}, {col}) is outside the {}x{} grid",
                grid.height, grid.width
            )));
        }
        if !value.is_finite() {
            return Err(bad("value is not finite".into()));
        }
        let j = grid.index(row, col);
        if std::mem::replace(&mut seen[j], true) {
            return Err(bad(format!("voxel ({row}, {col}) appears twice")));
        }
        values[j] = value;
    }
    if let Some(j) = seen.iter().position(|s| !s) {
        let (row, col) = grid.row_col(j);
        return Err(EstimatorError::Malformed {
            line: 0,
            message: format!("voxel ({row}, {col}) missing"),
        });
    }
    Ok(MotionImage::new(values, grid, timestamp))
}
