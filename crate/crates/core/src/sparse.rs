//! Compressed sparse row matrices and a conjugate-gradient solver.
//!
//! Only the operations the pipeline needs are provided: construction from
//! triplets, matrix-vector products, row access and element lookup.

use thiserror::Error;

/// Square sparse matrix in CSR layout. Column indices within each row are
/// sorted and unique.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Builds an `n x n` matrix from `(row, col, value)` triplets. Duplicate
    /// coordinates are summed; explicit zeros are dropped.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut trips: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        trips.sort_by_key(|a| (a.0, a.1));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(trips.len());
        let mut values: Vec<f64> = Vec::with_capacity(trips.len());
        let mut rows = Vec::with_capacity(trips.len());

        for (r, c, v) in trips {
            assert!(r < n && c < n, "triplet ({r}, {c}) out of bounds for n = {n}");
            if let (Some(&lr), Some(&lc)) = (rows.last(), col_idx.last()) {
                if lr == r && lc == c {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            rows.push(r);
            col_idx.push(c);
            values.push(v);
        }

        // drop entries that summed to zero
        let mut keep_rows = Vec::with_capacity(rows.len());
        let mut keep_cols = Vec::with_capacity(rows.len());
        let mut keep_vals = Vec::with_capacity(rows.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(values) {
            if v != 0.0 {
                keep_rows.push(r);
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }

        for &r in &keep_rows {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }

        Self {
            n,
            row_ptr,
            col_idx: keep_cols,
            values: keep_vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[s..e], &self.values[s..e])
    }

    pub fn row_iter(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (cols, vals) = self.row(i);
        cols.iter().copied().zip(vals.iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).1.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row_sum(i)).collect()
    }

    /// All stored entries as `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row_iter(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.n, self.triplets().map(|(i, j, v)| (j, i, v)))
    }

    pub fn is_symmetric(&self) -> bool {
        self.triplets().all(|(i, j, v)| self.get(j, i) == v)
    }

    /// `y = A x`
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
    }

    /// Principal submatrix on `keep` (indices into this matrix, in the order
    /// given). Entry `(a, b)` of the result is `self[keep[a]][keep[b]]`.
    pub fn submatrix(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            new_index[old] = new;
        }
        let trips = keep.iter().enumerate().flat_map(|(new_i, &old_i)| {
            let new_index = &new_index;
            self.row_iter(old_i).filter_map(move |(old_j, v)| {
                let new_j = new_index[old_j];
                (new_j != usize::MAX).then_some((new_i, new_j, v))
            })
        });
        Self::from_triplets(keep.len(), trips.collect::<Vec<_>>())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("conjugate gradient did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("matrix is not positive definite along the search direction")]
    Breakdown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    /// Euclidean norm of the final residual `b - A x`.
    pub residual: f64,
}

/// Solves `A x = b` for symmetric positive-definite `A`, given only as a
/// matrix-vector product. Stops when `||b - A x||_2 <= tol`.
pub fn conjugate_gradient<F>(
    apply: F,
    b: &[f64],
    x: &mut [f64],
    tol: f64,
    max_iterations: usize,
) -> Result<CgOutcome, SolveError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut ax = vec![0.0; n];
    apply(x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs_old = dot(&r, &r);

    if rs_old.sqrt() <= tol {
        return Ok(CgOutcome { iterations: 0, residual: rs_old.sqrt() });
    }

    for it in 1..=max_iterations {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 || !pap.is_finite() {
            return Err(SolveError::Breakdown);
        }
        let step = rs_old / pap;
        for i in 0..n {
            x[i] += step * p[i];
            r[i] -= step * ap[i];
        }
        let rs_new = dot(&r, &r);
        if rs_new.sqrt() <= tol {
            return Ok(CgOutcome { iterations: it, residual: rs_new.sqrt() });
        }
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
    }

    Err(SolveError::NotConverged {
        iterations: max_iterations,
        residual: rs_old.sqrt(),
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 1, 1.0), (0, 1, 2.0), (2, 0, 1.0), (2, 0, -1.0)]);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(2, 0), 0.0);
        assert_eq!(m.nnz(), 1);
    }

    #[test]
    fn submatrix_reorders() {
        let m = CsrMatrix::from_triplets(3, vec![(0, 2, 5.0), (2, 0, 5.0), (1, 2, 1.0), (2, 1, 1.0)]);
        let s = m.submatrix(&[2, 0]);
        assert_eq!(s.get(0, 1), 5.0);
        assert_eq!(s.get(1, 0), 5.0);
        assert_eq!(s.nnz(), 2);
    }

    #[test]
    fn cg_solves_small_spd_system() {
        // [[4,1],[1,3]] x = [1,2] -> x = [1/11, 7/11]
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)]);
        let mut x = vec![0.0; 2];
        let out = conjugate_gradient(|v, y| a.mul_vec_into(v, y), &[1.0, 2.0], &mut x, 1e-14, 10).unwrap();
        assert!(out.iterations <= 2);
        assert!((x[0] - 1.0 / 11.0).abs() < 1e-14);
        assert!((x[1] - 7.0 / 11.0).abs() < 1e-14);
    }

    #[test]
    fn cg_reports_non_convergence() {
        let n = 50;
        let a = CsrMatrix::from_triplets(
            n,
            (0..n).map(|i| (i, i, 1.0 + i as f64)).collect::<Vec<_>>(),
        );
        let b = vec![1.0; n];
        let mut x = vec![0.0; n];
        let err = conjugate_gradient(|v, y| a.mul_vec_into(v, y), &b, &mut x, 1e-14, 2).unwrap_err();
        assert!(matches!(err, SolveError::NotConverged { iterations: 2, .. }));
    }
}
