//! Compressed sparse row storage.

use std::io::Write;

/// Sparse matrix in CSR form with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

/// Accumulates `(row, col, value)` entries; duplicates are summed on build.
#[derive(Debug, Clone)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    /// Builds the CSR matrix. Rows are bucketed first so only the (short)
    /// per-row lists need sorting.
    pub fn build(self) -> CsrMatrix {
        let n = self.nrows;
        let mut counts = vec![0usize; n + 1];
        for &r in &self.rows {
            counts[r + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut bucket: Vec<(usize, f64)> = vec![(0, 0.0); self.vals.len()];
        for k in 0..self.vals.len() {
            let r = self.rows[k];
            bucket[next[r]] = (self.cols[k], self.vals[k]);
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(self.vals.len());
        let mut values = Vec::with_capacity(self.vals.len());
        row_ptr.push(0);
        for i in 0..n {
            let seg = &mut bucket[counts[i]..counts[i + 1]];
            seg.sort_unstable_by_key(|e| e.0);
            let mut last: Option<usize> = None;
            for &(c, v) in seg.iter() {
                if last == Some(c) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                    last = Some(c);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix {
            nrows: n,
            ncols: self.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut b = TripletBuilder::new(rows.len(), ncols);
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    b.push(i, j, v);
                }
            }
        }
        b.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "dimension mismatch in mat-vec");
        (0..self.nrows)
            .map(|i| {
                let (cols, vals) = self.row(i);
                cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum()
            })
            .collect()
    }

    /// `y += self * x`
    pub fn mul_vec_add(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi += cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum::<f64>();
        }
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                col_idx[next[c]] = i;
                values[next[c]] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr: counts,
            col_idx,
            values,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest entry of `|self - other|`, treating missing entries as zero.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut m = 0.0f64;
        for i in 0..self.nrows {
            let (ca, va) = self.row(i);
            let (cb, vb) = other.row(i);
            let (mut p, mut q) = (0, 0);
            while p < ca.len() || q < cb.len() {
                let d = match (ca.get(p), cb.get(q)) {
                    (Some(&a), Some(&b)) if a == b => {
                        p += 1;
                        q += 1;
                        va[p - 1] - vb[q - 1]
                    }
                    (Some(&a), Some(&b)) if a < b => {
                        p += 1;
                        va[p - 1]
                    }
                    (Some(_), None) => {
                        p += 1;
                        va[p - 1]
                    }
                    _ => {
                        q += 1;
                        vb[q - 1]
                    }
                };
                m = m.max(d.abs());
            }
        }
        m
    }

    pub fn is_row_empty(&self, i: usize) -> bool {
        self.row(i).1.iter().all(|&v| v == 0.0)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }

    /// Writes `row col value` lines (0-based) for offline inspection.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                writeln!(w, "{i} {c} {v:.17e}")?;
            }
        }
        Ok(())
    }

    /// Computes `Y^T = (self * X)^T` where `xt` holds `X^T` column-major,
    /// i.e. row `j` of `X` is the contiguous slice `xt[j*k..(j+1)*k]`.
    pub(crate) fn mul_dense_transposed(&self, xt: &[f64], k: usize) -> Vec<f64> {
        assert_eq!(xt.len(), self.ncols * k);
        let mut yt = vec![0.0; self.nrows * k];
        for i in 0..self.nrows {
            let out = &mut yt[i * k..(i + 1) * k];
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                let src = &xt[c * k..(c + 1) * k];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
        yt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed_and_sorted() {
        let mut b = TripletBuilder::new(2, 3);
        b.push(1, 2, 1.0);
        b.push(0, 1, 2.0);
        b.push(1, 0, 3.0);
        b.push(1, 2, 4.0);
        let m = b.build();
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.row(1).0, &[0, 2]);
        assert_eq!(m.get(1, 2), 5.0);
        assert_eq!(m.get(0, 0), 0.0);
    }

    #[test]
    fn transpose_round_trip() {
        let m = CsrMatrix::from_dense(&[vec![1.0, 0.0, 2.0], vec![0.0, 3.0, 0.0]]);
        let t = m.transpose();
        assert_eq!(
            t.to_dense(),
            vec![vec![1.0, 0.0], vec![0.0, 3.0], vec![2.0, 0.0]]
        );
        assert_eq!(t.transpose(), m);
    }

    #[test]
    fn transposed_dense_product_matches_matvec() {
        let m = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, -1.0], vec![4.0, 0.5]]);
        // X is 2x2 = [[1, 3], [2, 5]] stored as X^T column-major (rows of X contiguous)
        let xt = [1.0, 3.0, 2.0, 5.0];
        let yt = m.mul_dense_transposed(&xt, 2);
        let c0 = m.mul_vec(&[1.0, 2.0]);
        let c1 = m.mul_vec(&[3.0, 5.0]);
        for i in 0..3 {
            assert_eq!(yt[i * 2], c0[i]);
            assert_eq!(yt[i * 2 + 1], c1[i]);
        }
    }

    #[test]
    fn max_abs_diff_handles_disjoint_patterns() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 2.0]]);
        let b = CsrMatrix::from_dense(&[vec![0.0, 0.5], vec![0.0, 2.0]]);
        assert_eq!(a.max_abs_diff(&b), 1.0);
    }
}
