//! Sparse symmetric linear algebra: CSR and diagonal matrices plus a
//! conjugate-gradient solver.
//!
//! Reductions run sequentially in index order, so results are bit-identical
//! between runs.

use crate::error::{Error, Result};

/// Square matrix in compressed sparse row form with sorted, unique columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            if i >= n || j >= n {
                return Err(Error::OutOfRange { index: i.max(j), len: n });
            }
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            for (j, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == j {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    /// Wraps an existing pattern. Columns in each row must be strictly increasing.
    pub fn from_parts(n: usize, row_ptr: Vec<usize>, col_idx: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if row_ptr.len() != n + 1 {
            return Err(Error::DimensionMismatch { expected: n + 1, found: row_ptr.len() });
        }
        if col_idx.len() != values.len() || row_ptr[n] != values.len() {
            return Err(Error::DimensionMismatch { expected: row_ptr[n], found: values.len() });
        }
        for i in 0..n {
            let cols = &col_idx[row_ptr[i]..row_ptr[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&j| j >= n) {
                return Err(Error::InvalidArgument(format!("row {i} has unsorted, duplicate or out-of-range columns")));
            }
        }
        Ok(Self { n, row_ptr, col_idx, values })
    }

    pub fn dim(&self) -> usize {
        self.n
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

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Entry `(i, j)`, zero when structurally absent.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    /// y = A x
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        check_len(self.n, x.len())?;
        check_len(self.n, y.len())?;
        self.spmv_unchecked(x, y);
        Ok(())
    }

    fn spmv_unchecked(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n];
        self.spmv(x, &mut y)?;
        Ok(y)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let triplets: Vec<_> = (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v)))
            .collect();
        Self::from_triplets(self.n, &triplets).expect("indices in range")
    }

    /// max |A_ij − A_ji| over all stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v)))
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// self += s · other, where both share the same sparsity pattern.
    pub fn add_scaled(&mut self, s: f64, other: &CsrMatrix) -> Result<()> {
        if self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(Error::InvalidArgument("matrices have different sparsity patterns".into()));
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
        Ok(())
    }

    /// self += s · D. Every diagonal entry must be structurally present.
    pub fn add_diagonal(&mut self, s: f64, d: &DiagMatrix) -> Result<()> {
        check_len(self.n, d.dim())?;
        for i in 0..self.n {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            match self.col_idx[r.clone()].binary_search(&i) {
                Ok(k) => self.values[r.start + k] += s * d.values()[i],
                Err(_) => return Err(Error::InvalidArgument(format!("row {i} has no diagonal slot"))),
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Diagonal matrix, the algebraic form of lumped (nodal-quadrature) products.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagMatrix {
    values: Vec<f64>,
}

impl DiagMatrix {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("diagonal entry {i}")));
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.dim(), x.len())?;
        Ok(self.values.iter().zip(x).map(|(d, x)| d * x).collect())
    }

    /// xᵀ D y
    pub fn quadratic(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_len(self.dim(), x.len())?;
        check_len(self.dim(), y.len())?;
        let mut acc = 0.0;
        for i in 0..self.values.len() {
            acc += x[i] * self.values[i] * y[i];
        }
        Ok(acc)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * s).collect() }
    }
}

/// A symmetric linear operator usable by [`cg_solve`].
pub trait LinearOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_unchecked(x, y);
    }
    fn diagonal(&self) -> Vec<f64> {
        CsrMatrix::diagonal(self)
    }
}

impl LinearOperator for DiagMatrix {
    fn dim(&self) -> usize {
        self.values.len()
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.values.len() {
            y[i] = self.values[i] * x[i];
        }
    }
    fn diagonal(&self) -> Vec<f64> {
        self.values.clone()
    }
}

/// `A + D` without materializing the sum.
pub struct CsrPlusDiag<'a> {
    pub matrix: &'a CsrMatrix,
    pub diag: &'a DiagMatrix,
}

impl LinearOperator for CsrPlusDiag<'_> {
    fn dim(&self) -> usize {
        self.matrix.n
    }
    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matrix.spmv_unchecked(x, y);
        for i in 0..y.len() {
            y[i] += self.diag.values[i] * x[i];
        }
    }
    fn diagonal(&self) -> Vec<f64> {
        let mut d = self.matrix.diagonal();
        for (a, b) in d.iter_mut().zip(&self.diag.values) {
            *a += b;
        }
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOptions {
    /// Relative residual target ‖Ax − b‖ ≤ tol·‖b‖.
    pub tol: f64,
    /// Defaults to 10·n when `None`.
    pub max_iter: Option<usize>,
    pub jacobi: bool,
}

impl Default for CgOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: None, jacobi: false }
    }
}

impl CgOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

#[derive(Debug, Clone)]
pub struct CgSolution {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Final true relative residual.
    pub residual: f64,
}

/// Conjugate gradients for a symmetric positive definite operator.
///
/// Convergence of the recursive residual is confirmed against the true
/// residual before returning; a mismatch restarts the recursion.
pub fn cg_solve<A: LinearOperator + ?Sized>(
    a: &A,
    b: &[f64],
    x0: Option<&[f64]>,
    opts: &CgOptions,
) -> Result<CgSolution> {
    let n = a.dim();
    check_len(n, b.len())?;
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    if let Some(i) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("right-hand side entry {i}")));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n.max(1));
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(CgSolution { x: vec![0.0; n], iterations: 0, residual: 0.0 });
    }
    let target = opts.tol * b_norm;

    let inv_diag: Option<Vec<f64>> = if opts.jacobi {
        let d = a.diagonal();
        if let Some(i) = d.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::InvalidArgument(format!("Jacobi preconditioner needs a positive diagonal (row {i})")));
        }
        Some(d.iter().map(|v| 1.0 / v).collect())
    } else {
        None
    };
    let precondition = |r: &[f64], z: &mut [f64]| match &inv_diag {
        Some(d) => {
            for i in 0..r.len() {
                z[i] = d[i] * r[i];
            }
        }
        None => z.copy_from_slice(r),
    };

    let mut x = match x0 {
        Some(x0) => {
            check_len(n, x0.len())?;
            x0.to_vec()
        }
        None => vec![0.0; n],
    };
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];

    let true_residual = |x: &[f64], r: &mut [f64], ap: &mut [f64]| {
        a.apply(x, ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        norm2(r)
    };

    let mut iterations = 0;
    let mut res = true_residual(&x, &mut r, &mut ap);
    loop {
        if !res.is_finite() {
            return Err(Error::NonFinite(format!("residual after {iterations} CG iterations")));
        }
        if res <= target {
            return Ok(CgSolution { x, iterations, residual: res / b_norm });
        }
        precondition(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        let mut converged = false;
        while iterations < max_iter {
            a.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !pap.is_finite() {
                return Err(Error::NonFinite(format!("search direction after {iterations} CG iterations")));
            }
            if pap <= 0.0 {
                return Err(Error::InvalidArgument("operator is not positive definite".into()));
            }
            let alpha = rz / pap;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &ap, &mut r);
            iterations += 1;
            if norm2(&r) <= target {
                converged = true;
                break;
            }
            precondition(&r, &mut z);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        res = true_residual(&x, &mut r, &mut ap);
        if !converged && res > target {
            return Err(Error::NoConvergence { iterations, residual: res / b_norm });
        }
        if iterations >= max_iter && res > target {
            return Err(Error::NoConvergence { iterations, residual: res / b_norm });
        }
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..x.len() {
        acc += x[i] * y[i];
    }
    acc
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// y += a·x
pub fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for i in 0..x.len() {
        y[i] += a * x[i];
    }
}

pub fn checked_dot(x: &[f64], y: &[f64]) -> Result<f64> {
    check_len(x.len(), y.len())?;
    Ok(dot(x, y))
}

pub fn checked_axpy(a: f64, x: &[f64], y: &mut [f64]) -> Result<()> {
    check_len(y.len(), x.len())?;
    axpy(a, x, y);
    Ok(())
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve_takes_one_iteration() {
        let a = CsrMatrix::identity(5);
        let b = [1.0, -2.0, 3.0, 0.5, 7.0];
        let sol = cg_solve(&a, &b, None, &CgOptions::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.x, b);
    }

    #[test]
    fn diagonal_solve() {
        let a = CsrMatrix::from_triplets(2, &[(0, 0, 2.0), (1, 1, 4.0)]).unwrap();
        let sol = cg_solve(&a, &[2.0, 8.0], None, &CgOptions::default()).unwrap();
        assert!((sol.x[0] - 1.0).abs() < 1e-14 && (sol.x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let a = CsrMatrix::identity(3);
        let sol = cg_solve(&a, &[0.0; 3], Some(&[1.0, 2.0, 3.0]), &CgOptions::default()).unwrap();
        assert_eq!(sol.x, vec![0.0; 3]);
    }

    #[test]
    fn nonconvergence_reports_residual() {
        let a = CsrMatrix::from_triplets(3, &[(0, 0, 4.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0), (2, 2, 9.0), (1, 2, -1.0), (2, 1, -1.0)]).unwrap();
        let opts = CgOptions { tol: 1e-14, max_iter: Some(1), jacobi: false };
        match cg_solve(&a, &[1.0, 2.0, 3.0], None, &opts) {
            Err(Error::NoConvergence { iterations, residual }) => {
                assert_eq!(iterations, 1);
                assert!(residual > 1e-14);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nan_rhs_is_numeric_error() {
        let a = CsrMatrix::identity(2);
        assert!(matches!(cg_solve(&a, &[f64::NAN, 1.0], None, &CgOptions::default()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn vector_primitives() {
        let id = CsrMatrix::identity(3);
        assert_eq!(id.mul_vec(&[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
        for i in 0..3 {
            for j in 0..3 {
                let mut ei = [0.0; 3];
                let mut ej = [0.0; 3];
                ei[i] = 1.0;
                ej[j] = 1.0;
                assert_eq!(dot(&ei, &ej), if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!(norm2(&[3.0, 4.0]), 5.0);
        assert!(checked_dot(&[1.0], &[1.0, 2.0]).is_err());
        assert!(id.mul_vec(&[1.0]).is_err());
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = CsrMatrix::from_triplets(2, &[(0, 1, 1.0), (0, 1, 2.0), (1, 0, 3.0), (0, 0, 1.0)]).unwrap();
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 1), 3.0);
        assert_eq!(a.max_asymmetry(), 0.0);
        assert_eq!(a.transpose().get(1, 0), 3.0);
    }

    #[test]
    fn jacobi_matches_plain() {
        let a = CsrMatrix::from_triplets(3, &[(0, 0, 10.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 0.5), (2, 2, 100.0)]).unwrap();
        let b = [1.0, 1.0, 1.0];
        let plain = cg_solve(&a, &b, None, &CgOptions::with_tol(1e-13)).unwrap();
        let pre = cg_solve(&a, &b, None, &CgOptions { tol: 1e-13, max_iter: None, jacobi: true }).unwrap();
        for i in 0..3 {
            assert!((plain.x[i] - pre.x[i]).abs() < 1e-12);
        }
    }
}
