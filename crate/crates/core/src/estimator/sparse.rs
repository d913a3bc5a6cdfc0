use nalgebra::DMatrix;

/// Row-oriented sparse matrix: each row is a list of `(column, value)`
/// entries with strictly increasing columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    ncols: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(ncols: usize) -> Self {
        Self {
            ncols,
            rows: Vec::new(),
        }
    }

    /// # Panics
    /// If a column is out of range or columns are not strictly increasing.
    pub fn push_row(&mut self, entries: Vec<(usize, f64)>) {
        assert!(
            entries.windows(2).all(|w| w[0].0 < w[1].0),
            "columns must be strictly increasing"
        );
        assert!(entries.last().is_none_or(|e| e.0 < self.ncols), "column out of range");
        self.rows.push(entries);
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Self {
        let mut out = Self::new(m.ncols());
        for r in 0..m.nrows() {
            out.push_row(
                (0..m.ncols())
                    .filter(|&c| m[(r, c)] != 0.0)
                    .map(|c| (c, m[(r, c)]))
                    .collect(),
            );
        }
        out
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row(&self, r: usize) -> &[(usize, f64)] {
        &self.rows[r]
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.rows[r]
            .binary_search_by_key(&c, |e| e.0)
            .map_or(0.0, |i| self.rows[r][i].1)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn transpose_mul_vec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows());
        let mut out = vec![0.0; self.ncols];
        for (row, &yr) in self.rows.iter().zip(y) {
            for &(c, v) in row {
                out[c] += v * yr;
            }
        }
        out
    }

    /// `A'A` as a dense matrix.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = DMatrix::zeros(self.ncols, self.ncols);
        for row in &self.rows {
            for &(i, vi) in row {
                for &(j, vj) in row {
                    g[(i, j)] += vi * vj;
                }
            }
        }
        g
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows(), self.ncols);
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, v) in row {
                m[(r, c)] = v;
            }
        }
        m
    }
}
