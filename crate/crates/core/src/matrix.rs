//! Dense matrices, binary masks, rank-1 factors and the KL costs built on them.
//!
//! Everything is stored row-major in `f64`. Matrices with zero rows or zero
//! columns are ordinary values: an absent block of a [`MatrixTriple`] is just
//! an empty matrix with the right number of columns (or rows).

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows. All rows must have equal length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::InvalidArgument(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.rows && j < self.cols);
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| v * factor)
    }

    /// `S(M)`, the sum of all entries.
    pub fn total_sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, &v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    /// Copy of the block `rows × cols`.
    pub fn submatrix(&self, rows: Range<usize>, cols: Range<usize>) -> Self {
        assert!(rows.end <= self.rows && cols.end <= self.cols);
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for i in rows.clone() {
            data.extend_from_slice(&self.row(i)[cols.clone()]);
        }
        Self {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    /// `out[r][c] = self[row_src[r]][col_src[c]]`.
    pub fn permuted(&self, row_src: &[usize], col_src: &[usize]) -> Self {
        assert_eq!(row_src.len(), self.rows);
        assert_eq!(col_src.len(), self.cols);
        let mut data = Vec::with_capacity(self.data.len());
        for &r in row_src {
            let src = self.row(r);
            data.extend(col_src.iter().map(|&c| src[c]));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    /// Fails with the first entry (row-major) that is not strictly positive.
    pub fn ensure_positive(&self, block: &'static str) -> Result<()> {
        match self.data.iter().position(|&v| !(v > 0.0)) {
            None => Ok(()),
            Some(k) => Err(Error::NonPositive {
                block,
                row: k / self.cols,
                col: k % self.cols,
                value: self.data[k],
            }),
        }
    }

    /// Entries below `eps` (including NaN) are replaced by `eps`.
    pub fn clamped_below(&self, eps: f64) -> Self {
        self.map(|v| if v >= eps { v } else { eps })
    }

    pub(crate) fn ensure_shape(&self, expected: (usize, usize)) -> Result<()> {
        if self.shape() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: self.shape(),
            });
        }
        Ok(())
    }
}

/// Binary weight matrix: `true` marks an observed entry, `false` a missing one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskMatrix {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl MaskMatrix {
    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            bits: vec![true; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                bits.push(f(i, j));
            }
        }
        Self { rows, cols, bits }
    }

    /// Builds a mask from 0/1 rows; any nonzero value counts as observed.
    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut bits = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::InvalidArgument(format!(
                    "mask row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            bits.extend(r.iter().map(|&b| b != 0));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            bits,
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.bits[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, observed: bool) {
        self.bits[i * self.cols + j] = observed;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[bool] {
        &self.bits[i * self.cols..(i + 1) * self.cols]
    }

    pub fn missing_count(&self) -> usize {
        self.bits.iter().filter(|&&b| !b).count()
    }

    pub fn observed_count(&self) -> usize {
        self.bits.len() - self.missing_count()
    }

    pub fn permuted(&self, row_src: &[usize], col_src: &[usize]) -> Self {
        assert_eq!(row_src.len(), self.rows);
        assert_eq!(col_src.len(), self.cols);
        let mut bits = Vec::with_capacity(self.bits.len());
        for &r in row_src {
            let src = self.row(r);
            bits.extend(col_src.iter().map(|&c| src[c]));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            bits,
        }
    }

    /// 0/1 rendering, mostly for tests and debugging.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|&b| b as u8).collect())
            .collect()
    }
}

/// Rank-1 factors `w ⊗ h` of the main block plus the side factors `a`
/// (rows of `Y`, sharing `h`) and `b` (columns of `Z`, sharing `w`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rank1Factors {
    pub w: Vec<f64>,
    pub h: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Rank1Factors {
    pub fn new(w: Vec<f64>, h: Vec<f64>) -> Self {
        Self {
            w,
            h,
            a: Vec::new(),
            b: Vec::new(),
        }
    }

    pub fn reconstruct_x(&self) -> DenseMatrix {
        outer(&self.w, &self.h)
    }

    pub fn reconstruct_y(&self) -> DenseMatrix {
        outer(&self.a, &self.h)
    }

    pub fn reconstruct_z(&self) -> DenseMatrix {
        outer(&self.w, &self.b)
    }

    /// The simultaneous rank-1 triple `(w⊗h, a⊗h, w⊗b)`.
    pub fn reconstruct(&self) -> MatrixTriple {
        MatrixTriple {
            x: self.reconstruct_x(),
            y: self.reconstruct_y(),
            z: self.reconstruct_z(),
        }
    }
}

/// NMMF input `(X, Y, Z)` laid out as `[[X, Z], [Y, ·]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixTriple {
    pub x: DenseMatrix,
    pub y: DenseMatrix,
    pub z: DenseMatrix,
}

impl MatrixTriple {
    /// `Y` must share the column count of `X` and `Z` its row count. An empty
    /// `Y` or `Z` of any width/height is normalized to the compatible empty shape.
    pub fn new(x: DenseMatrix, y: DenseMatrix, z: DenseMatrix) -> Result<Self> {
        let (i, j) = x.shape();
        let y = if y.rows() == 0 {
            DenseMatrix::zeros(0, j)
        } else {
            y
        };
        let z = if z.cols() == 0 {
            DenseMatrix::zeros(i, 0)
        } else {
            z
        };
        if y.cols() != j {
            return Err(Error::ShapeMismatch {
                expected: (y.rows(), j),
                found: y.shape(),
            });
        }
        if z.rows() != i {
            return Err(Error::ShapeMismatch {
                expected: (i, z.cols()),
                found: z.shape(),
            });
        }
        Ok(Self { x, y, z })
    }

    pub fn x_only(x: DenseMatrix) -> Self {
        let (i, j) = x.shape();
        Self {
            x,
            y: DenseMatrix::zeros(0, j),
            z: DenseMatrix::zeros(i, 0),
        }
    }

    /// `(I, J, N, M)`.
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.x.rows(), self.x.cols(), self.y.rows(), self.z.cols())
    }
}

/// `result[i][j] = u[i] * v[j]`.
pub fn outer(u: &[f64], v: &[f64]) -> DenseMatrix {
    let mut data = Vec::with_capacity(u.len() * v.len());
    for &ui in u {
        data.extend(v.iter().map(|&vj| ui * vj));
    }
    DenseMatrix {
        rows: u.len(),
        cols: v.len(),
        data,
    }
}

/// One generalized-KL term `x log(x/y) - x + y` with `0 log 0 = 0`.
/// `None` when `x > 0` and `y <= 0`.
#[inline]
pub(crate) fn kl_term(x: f64, y: f64) -> Option<f64> {
    if x == 0.0 {
        Some(y)
    } else if y > 0.0 {
        Some(x * (x / y).ln() - x + y)
    } else {
        None
    }
}

/// Generalized KL divergence `D(X, Y) = Σ X log(X/Y) - X + Y`.
pub fn kl_div(x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
    y.ensure_shape(x.shape())?;
    let mut total = 0.0;
    for (k, (&xv, &yv)) in x.data.iter().zip(&y.data).enumerate() {
        total += kl_term(xv, yv).ok_or_else(|| undefined_at(k, x.cols, xv, yv))?;
    }
    Ok(total)
}

/// `D_Φ(X, Y)`: KL divergence over observed entries only. Values at missing
/// positions are never read.
pub fn masked_kl(phi: &MaskMatrix, x: &DenseMatrix, y: &DenseMatrix) -> Result<f64> {
    x.ensure_shape(phi.shape())?;
    y.ensure_shape(phi.shape())?;
    let mut total = 0.0;
    for (k, &observed) in phi.bits.iter().enumerate() {
        if observed {
            let (xv, yv) = (x.data[k], y.data[k]);
            total += kl_term(xv, yv).ok_or_else(|| undefined_at(k, x.cols, xv, yv))?;
        }
    }
    Ok(total)
}

/// `D_Φ(X, u ⊗ v)` without materializing the outer product.
pub fn masked_kl_outer(phi: &MaskMatrix, x: &DenseMatrix, u: &[f64], v: &[f64]) -> Result<f64> {
    x.ensure_shape(phi.shape())?;
    if u.len() != x.rows() {
        return Err(Error::LengthMismatch {
            name: "row factor",
            expected: x.rows(),
            found: u.len(),
        });
    }
    if v.len() != x.cols() {
        return Err(Error::LengthMismatch {
            name: "column factor",
            expected: x.cols(),
            found: v.len(),
        });
    }
    let mut total = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        let (xr, mr) = (x.row(i), phi.row(i));
        for j in 0..v.len() {
            if mr[j] {
                let yv = ui * v[j];
                total += kl_term(xr[j], yv).ok_or(Error::DivergenceUndefined {
                    row: i,
                    col: j,
                    data: xr[j],
                    recon: yv,
                })?;
            }
        }
    }
    Ok(total)
}

fn undefined_at(k: usize, cols: usize, data: f64, recon: f64) -> Error {
    Error::DivergenceUndefined {
        row: k / cols.max(1),
        col: k % cols.max(1),
        data,
        recon,
    }
}

/// NMMF cost `D(X, w⊗h) + α D(Y, a⊗h) + β D(Z, w⊗b)`. Empty blocks and
/// blocks with zero weight contribute nothing.
pub fn nmmf_cost(t: &MatrixTriple, f: &Rank1Factors, alpha: f64, beta: f64) -> Result<f64> {
    let (i, j, n, m) = t.dims();
    for (name, expected, found) in [
        ("w", i, f.w.len()),
        ("h", j, f.h.len()),
        ("a", n, f.a.len()),
        ("b", m, f.b.len()),
    ] {
        if expected != found {
            return Err(Error::LengthMismatch {
                name,
                expected,
                found,
            });
        }
    }
    let mut cost = kl_div(&t.x, &f.reconstruct_x())?;
    if alpha > 0.0 && n > 0 {
        cost += alpha * kl_div(&t.y, &f.reconstruct_y())?;
    }
    if beta > 0.0 && m > 0 {
        cost += beta * kl_div(&t.z, &f.reconstruct_z())?;
    }
    Ok(cost)
}
