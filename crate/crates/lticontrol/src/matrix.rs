//! Dense real matrices with the numerical kernels the rest of the crate
//! builds on: matrix exponential, numerical rank, orthonormal range basis,
//! and minimum-norm least-squares solves.
//!
//! Entries are stored in row-major order and validated to be finite on
//! construction. Singular value decompositions are delegated to `nalgebra`;
//! the exponential uses scaling-and-squaring with a Taylor series evaluated
//! at scaled norm ≤ 0.5.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Dense real matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    /// Builds a matrix from row-major entries, rejecting non-finite values
    /// and length mismatches.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "expected {} entries for {}x{}, got {}",
                rows * cols,
                rows,
                cols,
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("matrix entries must be finite".into()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        let mut m = Matrix::zeros(d.len(), d.len());
        for (i, &x) in d.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Invalid("diagonal entries must be finite".into()));
            }
            m.data[i * d.len() + i] = x;
        }
        Ok(m)
    }

    /// Builds from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Matrix::new(r, c, rows.concat())
    }

    /// Single-column matrix from a vector.
    pub fn column(v: &[f64]) -> Result<Self> {
        Matrix::new(v.len(), 1, v.to_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        assert!(i < self.rows && j < self.cols, "index out of bounds");
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Matrix product; panics on inner-dimension mismatch.
    pub fn mul(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let lhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(lhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Matrix-vector product; panics on dimension mismatch.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.mul_vec_into(v, &mut out);
        out
    }

    /// Allocation-free matrix-vector product into a caller buffer.
    pub fn mul_vec_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        assert_eq!(self.rows, out.len(), "matvec output mismatch");
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            out[i] = dot(row, v);
        }
    }

    /// Transposed matrix-vector product Aᵀv without forming the transpose.
    pub fn mul_vec_transposed(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.mul_vec_transposed_into(v, &mut out);
        out
    }

    /// Allocation-free transposed matrix-vector product into a buffer.
    pub fn mul_vec_transposed_into(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(self.rows, v.len(), "matvec dimension mismatch");
        assert_eq!(self.cols, out.len(), "matvec output mismatch");
        out.fill(0.0);
        for i in 0..self.rows {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            let vi = v[i];
            for (o, &a) in out.iter_mut().zip(row) {
                *o += a * vi;
            }
        }
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum (operator 1-norm).
    pub fn norm_1(&self) -> f64 {
        let mut best = 0.0_f64;
        for j in 0..self.cols {
            let mut s = 0.0;
            for i in 0..self.rows {
                s += self.data[i * self.cols + j].abs();
            }
            best = best.max(s);
        }
        best
    }

    /// Horizontal concatenation [self | rhs].
    pub fn hstack(&self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.rows, rhs.rows, "hstack row mismatch");
        let cols = self.cols + rhs.cols;
        let mut out = Matrix::zeros(self.rows, cols);
        for i in 0..self.rows {
            out.data[i * cols..i * cols + self.cols]
                .copy_from_slice(&self.data[i * self.cols..(i + 1) * self.cols]);
            out.data[i * cols + self.cols..(i + 1) * cols]
                .copy_from_slice(&rhs.data[i * rhs.cols..(i + 1) * rhs.cols]);
        }
        out
    }

    /// Copies a rectangular block starting at (i0, j0).
    pub fn block(&self, i0: usize, j0: usize, rows: usize, cols: usize) -> Matrix {
        assert!(i0 + rows <= self.rows && j0 + cols <= self.cols);
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                out.data[i * cols + j] = self.data[(i0 + i) * self.cols + (j0 + j)];
            }
        }
        out
    }

    pub fn col_vec(&self, j: usize) -> Vec<f64> {
        assert!(j < self.cols);
        (0..self.rows).map(|i| self.data[i * self.cols + j]).collect()
    }

    pub(crate) fn to_na(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

}

/// Relative rank threshold matching the usual numerical-rank convention:
/// singular values below `dim · ε · σ_max` are treated as zero.
pub fn default_rank_tol(dim: usize) -> f64 {
    dim.max(1) as f64 * f64::EPSILON
}

/// Matrix exponential e^{At} by scaling-and-squaring: the argument is scaled
/// until its 1-norm is ≤ 0.5, expanded in a Taylor series to machine-epsilon
/// tail, and squared back up.
pub fn expm(a: &Matrix, t: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "expm needs a square matrix, got {}x{}",
            a.rows, a.cols
        )));
    }
    if !t.is_finite() {
        return Err(Error::Invalid("expm: time must be finite".into()));
    }
    let n = a.rows;
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let x = a.scale(t);
    let norm = x.norm_1();
    if !norm.is_finite() {
        return Err(Error::Invalid("expm: scaled matrix overflowed".into()));
    }
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let y = x.scale(0.5_f64.powi(s as i32));

    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=24 {
        term = term.mul(&y).scale(1.0 / k as f64);
        result = result.add(&term);
        if term.norm_1() <= 1e-19 * result.norm_1().max(1.0) {
            break;
        }
    }
    for _ in 0..s {
        result = result.mul(&result);
    }
    if result.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Invalid(
            "expm: result overflowed; horizon too large for this spectrum".into(),
        ));
    }
    Ok(result)
}

/// Number of singular values exceeding `tol · σ_max`.
pub fn rank(m: &Matrix, tol: f64) -> usize {
    assert!(tol > 0.0, "rank tolerance must be positive");
    if m.rows == 0 || m.cols == 0 {
        return 0;
    }
    let svd = m.to_na().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > tol * smax)
        .count()
}

/// Orthonormal basis of the column space at tolerance `tol`; returns an
/// n×r matrix with r = rank(m, tol) (possibly zero columns).
pub fn range_basis(m: &Matrix, tol: f64) -> Matrix {
    assert!(tol > 0.0, "rank tolerance must be positive");
    if m.rows == 0 || m.cols == 0 {
        return Matrix::zeros(m.rows, 0);
    }
    let svd = m.to_na().svd(true, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let u = svd.u.expect("svd requested u");
    if smax == 0.0 {
        return Matrix::zeros(m.rows, 0);
    }
    let r = svd
        .singular_values
        .iter()
        .filter(|&&s| s > tol * smax)
        .count();
    let mut out = Matrix::zeros(m.rows, r);
    for j in 0..r {
        for i in 0..m.rows {
            out.data[i * r + j] = u[(i, j)];
        }
    }
    out
}

/// Full orthogonal factor whose leading `rank` columns span the column space
/// of `m`; the trailing columns span the orthogonal complement.
pub fn full_orthogonal_basis(m: &Matrix, tol: f64) -> (Matrix, usize) {
    assert!(tol > 0.0);
    let n = m.rows;
    let r = if m.cols == 0 { 0 } else { rank(m, tol) };
    if m.cols == 0 || r == 0 {
        return (Matrix::identity(n), 0);
    }
    let svd = m.to_na().svd(true, false);
    let u = svd.u.expect("svd requested u");
    // u is n×min(n,cols); complete to a full orthogonal basis by projecting
    // out the computed columns from the identity and re-orthonormalizing.
    let mut basis: Vec<Vec<f64>> = (0..u.ncols().min(n))
        .map(|j| (0..n).map(|i| u[(i, j)]).collect())
        .collect();
    basis.truncate(r);
    gram_schmidt_complete(&mut basis, n);
    let mut k = Matrix::zeros(n, n);
    for (j, col) in basis.iter().enumerate() {
        for i in 0..n {
            k.data[i * n + j] = col[i];
        }
    }
    (k, r)
}

/// Extends a partial orthonormal set to a full orthonormal basis of R^n by
/// Gram-Schmidt against the coordinate directions, picking the candidate
/// with the largest residual each round.
fn gram_schmidt_complete(basis: &mut Vec<Vec<f64>>, n: usize) {
    while basis.len() < n {
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..n {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            for b in basis.iter() {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
            let nv = norm2(&v);
            if best.as_ref().map_or(true, |(bn, _)| nv > *bn) {
                best = Some((nv, v));
            }
        }
        let (nv, mut v) = best.expect("n > 0");
        assert!(nv > 1e-12, "failed to complete orthonormal basis");
        for x in v.iter_mut() {
            *x /= nv;
        }
        // one re-orthogonalization pass for numerical hygiene
        for b in basis.iter() {
            let c = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= c * bi;
            }
        }
        let nv2 = norm2(&v);
        for x in v.iter_mut() {
            *x /= nv2;
        }
        basis.push(v);
    }
}

/// Minimum-norm least-squares solution of `m x = rhs` via SVD, truncating
/// singular values below `tol · σ_max`.
pub fn pinv_solve(m: &Matrix, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    if rhs.len() != m.rows {
        return Err(Error::Dimension("pinv_solve rhs length".into()));
    }
    if m.rows == 0 || m.cols == 0 {
        return Ok(vec![0.0; m.cols]);
    }
    let svd = m.to_na().svd(true, true);
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let mut x = vec![0.0; m.cols];
    if smax == 0.0 {
        return Ok(x);
    }
    for k in 0..svd.singular_values.len() {
        let s = svd.singular_values[k];
        if s <= tol * smax {
            continue;
        }
        let mut c = 0.0;
        for i in 0..m.rows {
            c += u[(i, k)] * rhs[i];
        }
        c /= s;
        for j in 0..m.cols {
            x[j] += c * vt[(k, j)];
        }
    }
    Ok(x)
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scale_vec(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|x| x * s).collect()
}
