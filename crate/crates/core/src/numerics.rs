//! Dense complex linear algebra.
//!
//! [`ComplexMatrix`] is a column-major, double precision complex matrix. The
//! heavy kernels (products and the singular value decomposition) run on
//! `faer`; norms are reduced here in a fixed column-major order so repeated
//! runs produce bit-identical results.

use faer::{Mat, MatRef};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Dense complex matrix, column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    inner: Mat<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: Mat::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: Mat::identity(n, n),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self {
            inner: Mat::from_fn(rows, cols, f),
        }
    }

    /// Builds a matrix from column-major data, rejecting non-finite entries.
    pub fn from_column_major(rows: usize, cols: usize, data: &[C64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::NonFinite {
                row: pos % rows.max(1),
                col: pos / rows.max(1),
            });
        }
        Ok(Self::from_fn(rows, cols, |i, j| data[j * rows + i]))
    }

    /// Builds a matrix from equally sized columns.
    pub fn from_columns(rows: usize, columns: &[Vec<C64>]) -> Result<Self> {
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch {
                op: "from_columns",
                left_rows: rows,
                left_cols: columns.len(),
                right_rows: bad.len(),
                right_cols: 1,
            });
        }
        Ok(Self::from_fn(rows, columns.len(), |i, j| columns[j][i]))
    }

    pub fn from_faer(inner: Mat<C64>) -> Self {
        Self { inner }
    }

    pub fn as_faer(&self) -> MatRef<'_, C64> {
        self.inner.as_ref()
    }

    pub fn into_faer(self) -> Mat<C64> {
        self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.inner[(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.inner[(row, col)] = value;
    }

    pub fn column(&self, col: usize) -> Vec<C64> {
        (0..self.rows()).map(|i| self.get(i, col)).collect()
    }

    pub fn is_finite(&self) -> bool {
        (0..self.cols()).all(|j| (0..self.rows()).all(|i| self.get(i, j).is_finite()))
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(self)
    }

    pub fn adjoint(&self) -> Self {
        adjoint(self)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                op: "mul_vec",
                left_rows: self.rows(),
                left_cols: self.cols(),
                right_rows: x.len(),
                right_cols: 1,
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.rows()];
        for (j, &xj) in x.iter().enumerate() {
            if xj == C64::new(0.0, 0.0) {
                continue;
            }
            let col = self.inner.col(j);
            for (o, a) in out.iter_mut().zip(col.iter()) {
                *o += a * xj;
            }
        }
        Ok(out)
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self::from_fn(self.rows(), self.cols(), |i, j| self.get(i, j) * alpha)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape("add", other)?;
        Ok(Self::from_fn(self.rows(), self.cols(), |i, j| {
            self.get(i, j) + other.get(i, j)
        }))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape("sub", other)?;
        Ok(Self::from_fn(self.rows(), self.cols(), |i, j| {
            self.get(i, j) - other.get(i, j)
        }))
    }

    fn check_same_shape(&self, op: &'static str, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left_rows: self.rows(),
                left_cols: self.cols(),
                right_rows: other.rows(),
                right_cols: other.cols(),
            });
        }
        Ok(())
    }
}

/// Frobenius norm, accumulated column by column.
pub fn frobenius(a: &ComplexMatrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.cols() {
        for z in a.inner.col(j).iter() {
            acc += z.norm_sqr();
        }
    }
    acc.sqrt()
}

/// Euclidean norm of a complex vector.
pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate-linear inner product `<x, y> = sum conj(x_i) y_i`.
pub fn dot_conj(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn matmul(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "matmul",
            left_rows: a.rows(),
            left_cols: a.cols(),
            right_rows: b.rows(),
            right_cols: b.cols(),
        });
    }
    Ok(ComplexMatrix::from_faer(a.as_faer() * b.as_faer()))
}

pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_faer(a.as_faer().adjoint().to_owned())
}

/// Thin singular value decomposition `A = U diag(S) V*`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    /// `m x r` with orthonormal columns.
    pub u: ComplexMatrix,
    /// Descending, non-negative; length `r = min(m, n)`.
    pub s: Vec<f64>,
    /// `n x r` with orthonormal columns.
    pub v: ComplexMatrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.s.len()
    }

    /// `U diag(S) V*`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let us = ComplexMatrix::from_fn(self.u.rows(), self.s.len(), |i, j| {
            self.u.get(i, j) * self.s[j]
        });
        ComplexMatrix::from_faer(us.as_faer() * self.v.as_faer().adjoint())
    }
}

pub fn svd(a: &ComplexMatrix) -> Result<SvdResult> {
    let (m, n) = a.shape();
    if !a.is_finite() {
        let pos = (0..n)
            .flat_map(|j| (0..m).map(move |i| (i, j)))
            .find(|&(i, j)| !a.get(i, j).is_finite())
            .unwrap_or((0, 0));
        return Err(Error::NonFinite {
            row: pos.0,
            col: pos.1,
        });
    }
    let r = m.min(n);
    if r == 0 {
        return Ok(SvdResult {
            u: ComplexMatrix::zeros(m, 0),
            s: Vec::new(),
            v: ComplexMatrix::zeros(n, 0),
        });
    }
    let dec = a
        .as_faer()
        .thin_svd()
        .map_err(|_| Error::SvdNoConvergence { rows: m, cols: n })?;
    let s_diag = dec.S().column_vector();
    let mut s: Vec<f64> = (0..r).map(|i| s_diag[i].re.max(0.0)).collect();
    let u = dec.U().to_owned();
    let v = dec.V().to_owned();

    // faer returns descending values; enforce it so the contract never depends on that.
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&i, &j| s[j].total_cmp(&s[i]));
    if order.iter().enumerate().any(|(k, &i)| k != i) {
        let u = ComplexMatrix::from_fn(m, r, |i, j| u[(i, order[j])]);
        let v = ComplexMatrix::from_fn(n, r, |i, j| v[(i, order[j])]);
        s = order.iter().map(|&i| s[i]).collect();
        return Ok(SvdResult { u, s, v });
    }
    Ok(SvdResult {
        u: ComplexMatrix::from_faer(u),
        s,
        v: ComplexMatrix::from_faer(v),
    })
}

/// Largest `k` with `s[k-1] >= tol_rel * s[0]`; zero for empty or all-zero spectra.
pub fn truncated_rank(s: &[f64], tol_rel: f64) -> usize {
    let Some(&top) = s.first() else {
        return 0;
    };
    if top <= 0.0 {
        return 0;
    }
    let threshold = tol_rel * top;
    s.iter().take_while(|&&v| v >= threshold).count()
}

/// Matrix with independent standard complex Gaussian entries (variance one).
pub fn random_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        data.push(C64::new(re * scale, im * scale));
    }
    ComplexMatrix::from_fn(rows, cols, |i, j| data[j * rows + i])
}

/// Random `rows x cols` matrix of exact rank `rank` (product of Gaussian factors).
pub fn random_rank<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    rank: usize,
    rng: &mut R,
) -> ComplexMatrix {
    let left = random_gaussian(rows, rank, rng);
    let right = random_gaussian(rank, cols, rng);
    ComplexMatrix::from_faer(left.as_faer() * right.as_faer())
}

/// Haar-ish random unitary from the QR factor of a Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = random_gaussian(n, n, rng);
    let q = g.as_faer().qr().compute_Q();
    ComplexMatrix::from_faer(q)
}
