use std::collections::BTreeSet;

/// Compressed sparse row matrix.
#[derive(Clone, Debug)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix with the given structure; each row's columns are sorted.
    pub fn from_pattern(dim: usize, rows: Vec<BTreeSet<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in rows {
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        Self { dim, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    fn position(&self, row: usize, col: usize) -> Option<usize> {
        let cols = &self.col_idx[self.row_ptr[row]..self.row_ptr[row + 1]];
        cols.binary_search(&col).ok().map(|p| self.row_ptr[row] + p)
    }

    /// Adds `v` to entry `(row, col)`, which must be in the pattern.
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let p = self.position(row, col).expect("entry outside sparsity pattern");
        self.values[p] += v;
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.position(row, col).map_or(0.0, |p| self.values[p])
    }

    pub fn row(&self, row: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[row]..self.row_ptr[row + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`.
    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = self.col_idx[r.clone()].iter().zip(&self.values[r]).map(|(&j, v)| v * x[j]).sum();
        }
    }

    /// `self * a + other * b`, entry-wise on identical patterns.
    pub fn combine(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        assert_eq!(self.row_ptr, other.row_ptr);
        assert_eq!(self.col_idx, other.col_idx);
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        CsrMatrix { dim: self.dim, row_ptr: self.row_ptr.clone(), col_idx: self.col_idx.clone(), values }
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
