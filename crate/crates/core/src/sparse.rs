//! Internal CSR matrix with explicit values, shared by the normalized
//! adjacency and the model's cached feature propagation.

use ndarray::Array2;

/// Row-major compressed sparse matrix over f64.
///
/// Invariants: `row_ptr` has length `rows + 1` and is monotone nondecreasing;
/// column indices are strictly ascending within each row.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Csr {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Sparsify a dense matrix, dropping exact zeros.
    ///
    /// Skipping zero terms leaves later accumulations bit-identical to the
    /// dense product because the per-row accumulation order is preserved.
    pub fn from_dense(a: &Array2<f64>) -> Csr {
        let (rows, cols) = (a.nrows(), a.ncols());
        let mut row_ptr = Vec::with_capacity(rows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in a.rows() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Csr {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// `self · x`, accumulating each output row over nonzeros in ascending
    /// column order (deterministic).
    pub fn mul_dense(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(self.cols, x.nrows(), "sparse-dense shape mismatch");
        let d = x.ncols();
        let x_std = x.as_standard_layout();
        let xs = x_std.as_slice().expect("standard layout");
        let mut out = Array2::<f64>::zeros((self.rows, d));
        {
            let os = out.as_slice_mut().expect("standard layout");
            for i in 0..self.rows {
                let acc = &mut os[i * d..(i + 1) * d];
                for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let k = self.col_idx[idx];
                    let v = self.values[idx];
                    let xr = &xs[k * d..(k + 1) * d];
                    for (o, &xv) in acc.iter_mut().zip(xr) {
                        *o += v * xv;
                    }
                }
            }
        }
        out
    }

    /// `selfᵀ · x`, scattering row `i` of `x` into output row `col` for each
    /// stored entry `(i, col)`. Iteration is row-major over `self`, so the
    /// accumulation order is fixed.
    pub fn transpose_mul_dense(&self, x: &Array2<f64>) -> Array2<f64> {
        assert_eq!(self.rows, x.nrows(), "sparse-dense shape mismatch");
        let d = x.ncols();
        let x_std = x.as_standard_layout();
        let xs = x_std.as_slice().expect("standard layout");
        let mut out = Array2::<f64>::zeros((self.cols, d));
        {
            let os = out.as_slice_mut().expect("standard layout");
            for i in 0..self.rows {
                let xr = &xs[i * d..(i + 1) * d];
                for idx in self.row_ptr[i]..self.row_ptr[i + 1] {
                    let k = self.col_idx[idx];
                    let v = self.values[idx];
                    let acc = &mut os[k * d..(k + 1) * d];
                    for (o, &xv) in acc.iter_mut().zip(xr) {
                        *o += v * xv;
                    }
                }
            }
        }
        out
    }
}
