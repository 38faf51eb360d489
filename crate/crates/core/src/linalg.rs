//! Dense real linear algebra: row-major matrices, a cyclic Jacobi symmetric
//! eigensolver, empirical covariance and Gram-Schmidt orthonormalization.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::subspace::OrthonormalBasis;

/// Maximum number of cyclic Jacobi sweeps before giving up.
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Convergence threshold on the off-diagonal Frobenius mass, relative to `‖A‖_F`.
pub const JACOBI_REL_TOL: f64 = 1e-12;
/// Relative pivot size below which a column is treated as linearly dependent.
pub const RANK_TOL: f64 = 1e-10;

/// Rectangular real matrix stored in row-major order. All entries are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / cols.max(1),
                col: pos % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::dimension(format!(
                    "row {i} has {} entries, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
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

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub(crate) fn from_vec_unchecked(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `self · other`
    pub fn matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            let out_row = &mut out[i * other.cols..(i + 1) * other.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(other.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_vec_unchecked(self.rows, other.cols, out))
    }

    /// `selfᵀ · other`, without materializing the transpose.
    pub fn t_matmul(&self, other: &DenseMatrix) -> Result<Self> {
        if self.rows != other.rows {
            return Err(Error::dimension(format!(
                "cannot multiply ({}x{})ᵀ by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = vec![0.0; self.cols * other.cols];
        for k in 0..self.rows {
            let b_row = other.row(k);
            for (i, &a) in self.row(k).iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Self::from_vec_unchecked(self.cols, other.cols, out))
    }

    pub fn sub(&self, other: &DenseMatrix) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dimension(format!(
                "cannot subtract {}x{} from {}x{}",
                other.rows, other.cols, self.rows, self.cols
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_vec_unchecked(self.rows, self.cols, data))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_vec_unchecked(
            self.rows,
            self.cols,
            self.data.iter().map(|v| v * s).collect(),
        )
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(self)
    }

    /// Copies a contiguous block of rows.
    pub fn select_rows(&self, range: Range<usize>) -> Result<Self> {
        if range.start > range.end || range.end > self.rows {
            return Err(Error::argument(format!(
                "row range {range:?} out of bounds for {} rows",
                self.rows
            )));
        }
        let data = self.data[range.start * self.cols..range.end * self.cols].to_vec();
        Ok(Self::from_vec_unchecked(range.len(), self.cols, data))
    }

    /// Keeps the first `k` columns.
    pub fn leading_columns(&self, k: usize) -> Result<Self> {
        if k > self.cols {
            return Err(Error::argument(format!(
                "requested {k} columns from a matrix with {}",
                self.cols
            )));
        }
        Ok(Self::from_fn(self.rows, k, |i, j| self.get(i, j)))
    }

    /// Stacks matrices with equal column counts on top of each other.
    pub fn vstack(parts: &[&DenseMatrix]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::argument("cannot stack an empty list of matrices"));
        };
        let cols = first.cols;
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.data.len()).sum());
        let mut rows = 0;
        for p in parts {
            if p.cols != cols {
                return Err(Error::dimension(format!(
                    "cannot stack {} columns onto {cols}",
                    p.cols
                )));
            }
            data.extend_from_slice(&p.data);
            rows += p.rows;
        }
        Ok(Self::from_vec_unchecked(rows, cols, data))
    }

    /// Concatenates matrices with equal row counts side by side.
    pub fn hstack(parts: &[&DenseMatrix]) -> Result<Self> {
        let Some(first) = parts.first() else {
            return Err(Error::argument(
                "cannot concatenate an empty list of matrices",
            ));
        };
        let rows = first.rows;
        if let Some(p) = parts.iter().find(|p| p.rows != rows) {
            return Err(Error::dimension(format!(
                "cannot concatenate {} rows beside {rows}",
                p.rows
            )));
        }
        let cols: usize = parts.iter().map(|p| p.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for p in parts {
                data.extend_from_slice(p.row(i));
            }
        }
        Ok(Self::from_vec_unchecked(rows, cols, data))
    }

    pub fn column_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.cols];
        if self.rows == 0 {
            return means;
        }
        for row in self.row_iter() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        let inv = 1.0 / self.rows as f64;
        means.iter_mut().for_each(|m| *m *= inv);
        means
    }

    /// Subtracts `offset` from every row.
    pub fn subtract_row_vector(&mut self, offset: &[f64]) -> Result<()> {
        if offset.len() != self.cols {
            return Err(Error::dimension(format!(
                "offset has {} entries, matrix has {} columns",
                offset.len(),
                self.cols
            )));
        }
        for i in 0..self.rows {
            for (v, o) in self.row_mut(i).iter_mut().zip(offset) {
                *v -= o;
            }
        }
        Ok(())
    }
}

/// Square symmetric matrix in full dense storage.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    inner: DenseMatrix,
}

impl SymmetricMatrix {
    /// Accepts `m` if it is square and symmetric to within
    /// `1e-12 × (1 + max |m_ij|)`; the stored matrix is exactly symmetrized.
    pub fn new(m: DenseMatrix) -> Result<Self> {
        if m.rows != m.cols {
            return Err(Error::dimension(format!(
                "symmetric matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let d = m.rows;
        let max_abs = m.data.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let mut asym = 0.0f64;
        for i in 0..d {
            for j in (i + 1)..d {
                asym = asym.max((m.get(i, j) - m.get(j, i)).abs());
            }
        }
        if asym > 1e-12 * (1.0 + max_abs) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        Ok(Self::symmetrized(m))
    }

    pub(crate) fn symmetrized(mut m: DenseMatrix) -> Self {
        let d = m.rows;
        for i in 0..d {
            for j in (i + 1)..d {
                let v = 0.5 * (m.get(i, j) + m.get(j, i));
                m.set(i, j, v);
                m.set(j, i, v);
            }
        }
        Self { inner: m }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            inner: DenseMatrix::zeros(dim, dim),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        let m = DenseMatrix::from_fn(d, d, |i, j| if i == j { diag[i] } else { 0.0 });
        // from_fn skips the finiteness check
        DenseMatrix::new(d, d, m.into_vec()).map(|m| Self { inner: m })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.rows
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner.get(i, j)
    }

    pub fn as_matrix(&self) -> &DenseMatrix {
        &self.inner
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.inner
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius_norm(&self.inner)
    }

    /// `self += scale · B Bᵀ` for a `dim × k` factor `B`.
    pub(crate) fn add_scaled_outer(&mut self, factor: &DenseMatrix, scale: f64) -> Result<()> {
        let d = self.dim();
        if factor.rows != d {
            return Err(Error::dimension(format!(
                "factor has {} rows, matrix dimension is {d}",
                factor.rows
            )));
        }
        for i in 0..d {
            let ri = factor.row(i);
            for j in i..d {
                let rj = factor.row(j);
                let v: f64 = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
                let v = scale * v;
                let cur = self.inner.get(i, j) + v;
                self.inner.set(i, j, cur);
                if i != j {
                    self.inner.set(j, i, cur);
                }
            }
        }
        Ok(())
    }
}

/// Eigenvalues in descending order with matching orthonormal eigenvectors.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub basis: OrthonormalBasis,
}

impl EigenDecomposition {
    /// `V Λ Vᵀ`
    pub fn reconstruct(&self) -> SymmetricMatrix {
        let v = self.basis.matrix();
        let d = v.rows();
        let scaled = DenseMatrix::from_fn(d, v.cols(), |i, j| v.get(i, j) * self.values[j]);
        let prod = scaled.matmul(&v.transpose()).expect("conforming shapes");
        SymmetricMatrix::symmetrized(prod)
    }
}

pub fn frobenius_norm(a: &DenseMatrix) -> f64 {
    a.data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn off_diagonal_norm(a: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            let v = a[i * d + j];
            s += 2.0 * v * v;
        }
    }
    s.sqrt()
}

/// Flips `col` so that its largest-magnitude entry is positive (first index wins ties).
pub(crate) fn canonical_sign(col: &mut [f64]) {
    let mut best = 0;
    let mut best_abs = -1.0;
    for (i, v) in col.iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = i;
        }
    }
    if !col.is_empty() && col[best] < 0.0 {
        col.iter_mut().for_each(|v| *v = -*v);
    }
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Eigenvalues are returned in descending order; each eigenvector is
/// normalized so its largest-magnitude entry is positive. Repeated
/// eigenvalues leave the basis of their eigenspace unspecified.
pub fn sym_eig(a: &SymmetricMatrix) -> Result<EigenDecomposition> {
    let d = a.dim();
    if d == 0 {
        return Err(Error::argument("eigendecomposition of a 0x0 matrix"));
    }
    let mut m = a.as_matrix().as_slice().to_vec();
    let mut v = DenseMatrix::identity(d).into_vec();
    let tol = JACOBI_REL_TOL * a.frobenius_norm();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&m, d) <= tol {
            converged = true;
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = m[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * d + p];
                let aqq = m[q * d + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                m[p * d + p] = app - t * apq;
                m[q * d + q] = aqq + t * apq;
                m[p * d + q] = 0.0;
                m[q * d + p] = 0.0;
                for k in 0..d {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[k * d + p];
                    let akq = m[k * d + q];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    m[k * d + p] = np;
                    m[p * d + k] = np;
                    m[k * d + q] = nq;
                    m[q * d + k] = nq;
                }
                for k in 0..d {
                    let vkp = v[k * d + p];
                    let vkq = v[k * d + q];
                    v[k * d + p] = c * vkp - s * vkq;
                    v[k * d + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let residual = off_diagonal_norm(&m, d);
        if residual > tol {
            return Err(Error::Convergence {
                sweeps: JACOBI_MAX_SWEEPS,
                residual,
            });
        }
    }

    let diag: Vec<f64> = (0..d).map(|i| m[i * d + i]).collect();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]).then(i.cmp(&j)));

    let values = order.iter().map(|&i| diag[i]).collect();
    let mut cols = vec![0.0; d * d];
    let mut col = vec![0.0; d];
    for (new_j, &old_j) in order.iter().enumerate() {
        for k in 0..d {
            col[k] = v[k * d + old_j];
        }
        canonical_sign(&mut col);
        for k in 0..d {
            cols[k * d + new_j] = col[k];
        }
    }
    Ok(EigenDecomposition {
        values,
        basis: OrthonormalBasis::from_matrix_unchecked(DenseMatrix::from_vec_unchecked(d, d, cols)),
    })
}

/// The `k` leading eigenpairs of `a`, taken from its full decomposition.
pub fn top_k_eig(a: &SymmetricMatrix, k: usize) -> Result<(Vec<f64>, OrthonormalBasis)> {
    if k == 0 || k > a.dim() {
        return Err(Error::argument(format!("rank {k} outside 1..={}", a.dim())));
    }
    let eig = sym_eig(a)?;
    let mut values = eig.values;
    values.truncate(k);
    Ok((values, eig.basis.truncate(k)?))
}

/// `Σ_i x_i x_iᵀ` over the rows of `x` (no scaling).
fn row_outer_sum(x: &DenseMatrix) -> DenseMatrix {
    let d = x.cols;
    let mut acc = vec![0.0; d * d];
    for row in x.row_iter() {
        for (i, &xi) in row.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let acc_row = &mut acc[i * d..(i + 1) * d];
            for j in i..d {
                acc_row[j] += xi * row[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            acc[i * d + j] = acc[j * d + i];
        }
    }
    DenseMatrix::from_vec_unchecked(d, d, acc)
}

/// `n⁻¹ Σ_i x_i x_iᵀ` over the `n` rows. No mean is subtracted.
pub fn empirical_covariance(samples: &DenseMatrix) -> Result<SymmetricMatrix> {
    let n = samples.rows();
    if n == 0 {
        return Err(Error::argument("covariance of zero samples"));
    }
    let mut acc = row_outer_sum(samples);
    let inv = 1.0 / n as f64;
    acc.data.iter_mut().for_each(|v| *v *= inv);
    Ok(SymmetricMatrix { inner: acc })
}

/// Top-`k` eigenpairs of `FᵀF` for a factor `F` (`r × c`).
///
/// When `F` is wide (`r < c`) the `r × r` Gram matrix `FFᵀ` is decomposed
/// instead and its eigenvectors are lifted through `Fᵀ`, which avoids
/// forming the `c × c` product. The wide path falls back to the dense one
/// when `k > r` or when the `k`-th eigenvalue is numerically zero.
pub fn factored_top_k(factor: &DenseMatrix, k: usize) -> Result<(Vec<f64>, OrthonormalBasis)> {
    let (r, c) = (factor.rows(), factor.cols());
    if k == 0 || k > c {
        return Err(Error::argument(format!("rank {k} outside 1..={c}")));
    }
    if r >= c || k > r {
        return top_k_eig(
            &SymmetricMatrix {
                inner: row_outer_sum(factor),
            },
            k,
        );
    }

    let mut gram = vec![0.0; r * r];
    for i in 0..r {
        for j in i..r {
            let v: f64 = factor
                .row(i)
                .iter()
                .zip(factor.row(j))
                .map(|(a, b)| a * b)
                .sum();
            gram[i * r + j] = v;
            gram[j * r + i] = v;
        }
    }
    let eig = sym_eig(&SymmetricMatrix {
        inner: DenseMatrix::from_vec_unchecked(r, r, gram),
    })?;
    let top = eig.values[0];
    if !(top > 0.0) || eig.values[k - 1] <= RANK_TOL * top {
        return top_k_eig(
            &SymmetricMatrix {
                inner: row_outer_sum(factor),
            },
            k,
        );
    }

    let w = eig.basis.matrix().leading_columns(k)?;
    let mut lifted = factor.t_matmul(&w)?;
    for j in 0..k {
        let inv = 1.0 / eig.values[j].sqrt();
        for i in 0..c {
            let v = lifted.get(i, j) * inv;
            lifted.set(i, j, v);
        }
    }
    let mut basis = orthonormalize(&lifted)?.into_matrix();
    let mut col = vec![0.0; c];
    for j in 0..k {
        for i in 0..c {
            col[i] = basis.get(i, j);
        }
        canonical_sign(&mut col);
        for i in 0..c {
            basis.set(i, j, col[i]);
        }
    }
    let mut values = eig.values;
    values.truncate(k);
    Ok((values, OrthonormalBasis::from_matrix_unchecked(basis)))
}

/// Modified Gram-Schmidt with one re-orthogonalization pass.
pub fn orthonormalize(b: &DenseMatrix) -> Result<OrthonormalBasis> {
    let (d, k) = (b.rows(), b.cols());
    if k == 0 || k > d {
        return Err(Error::argument(format!(
            "cannot orthonormalize {k} columns in dimension {d}"
        )));
    }
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| b.column(j)).collect();
    for j in 0..k {
        let original = norm2(&cols[j]);
        let (done, rest) = cols.split_at_mut(j);
        let col = &mut rest[0];
        for _ in 0..2 {
            for q in done.iter() {
                let proj: f64 = q.iter().zip(col.iter()).map(|(a, b)| a * b).sum();
                col.iter_mut().zip(q).for_each(|(c, qi)| *c -= proj * qi);
            }
        }
        let norm = norm2(col);
        if !(original > 0.0) || norm < RANK_TOL * original {
            return Err(Error::RankDeficient { column: j });
        }
        col.iter_mut().for_each(|c| *c /= norm);
    }
    let m = DenseMatrix::from_fn(d, k, |i, j| cols[j][i]);
    Ok(OrthonormalBasis::from_matrix_unchecked(m))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
