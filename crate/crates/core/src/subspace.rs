//! Subspaces as orthonormal bases, the projection distance between them, the
//! mean-squared-distance objective and summary statistics of a spectrum.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, SymmetricMatrix};

/// Tolerance on `‖UᵀU − I‖_F` accepted by [`OrthonormalBasis::new`].
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// A `d × K` matrix with orthonormal columns, standing for the subspace it spans.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis {
    columns: DenseMatrix,
}

impl OrthonormalBasis {
    pub fn new(columns: DenseMatrix) -> Result<Self> {
        let (d, k) = (columns.rows(), columns.cols());
        if k == 0 || k > d {
            return Err(Error::argument(format!(
                "basis rank {k} must lie in 1..={d}"
            )));
        }
        let deviation = columns
            .t_matmul(&columns)?
            .sub(&DenseMatrix::identity(k))?
            .frobenius_norm();
        if deviation > ORTHONORMAL_TOL {
            return Err(Error::NotOrthonormal { deviation });
        }
        Ok(Self { columns })
    }

    pub(crate) fn from_matrix_unchecked(columns: DenseMatrix) -> Self {
        Self { columns }
    }

    /// Coordinate subspace spanned by `e_i` for each `i` in `indices`.
    pub fn standard(ambient_dim: usize, indices: &[usize]) -> Result<Self> {
        if indices.iter().any(|&i| i >= ambient_dim) {
            return Err(Error::argument("coordinate index out of range"));
        }
        let m = DenseMatrix::from_fn(ambient_dim, indices.len(), |i, j| {
            if indices[j] == i {
                1.0
            } else {
                0.0
            }
        });
        Self::new(m)
    }

    #[inline]
    pub fn ambient_dim(&self) -> usize {
        self.columns.rows()
    }

    #[inline]
    pub fn rank(&self) -> usize {
        self.columns.cols()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.columns
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.columns
    }

    /// The first `k` columns.
    pub fn truncate(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.rank() {
            return Err(Error::argument(format!(
                "cannot truncate a rank-{} basis to {k}",
                self.rank()
            )));
        }
        Ok(Self {
            columns: self.columns.leading_columns(k)?,
        })
    }

    /// Dense `UUᵀ`. Costs `O(d²K)`; only the aggregation paths and tests need it.
    pub fn projector(&self) -> SymmetricMatrix {
        let mut p = SymmetricMatrix::zeros(self.ambient_dim());
        p.add_scaled_outer(&self.columns, 1.0)
            .expect("factor rows equal ambient dimension");
        p
    }
}

fn check_same_ambient(u: &OrthonormalBasis, v: &OrthonormalBasis) -> Result<()> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(Error::dimension(format!(
            "bases live in R^{} and R^{}",
            u.ambient_dim(),
            v.ambient_dim()
        )));
    }
    Ok(())
}

/// `Δ(U, V) = ‖UUᵀ − VVᵀ‖_F`.
///
/// Evaluated from the cross-Gram `C = UᵀV` as
/// `Δ² = ‖V − UC‖_F² + ‖U − VCᵀ‖_F²`, which equals
/// `rank U + rank V − 2‖C‖_F²` but keeps full relative accuracy when the two
/// subspaces nearly coincide. No `d × d` matrix is formed.
pub fn projection_distance(u: &OrthonormalBasis, v: &OrthonormalBasis) -> Result<f64> {
    check_same_ambient(u, v)?;
    let c = u.matrix().t_matmul(v.matrix())?;
    let v_off_u = v.matrix().sub(&u.matrix().matmul(&c)?)?;
    let u_off_v = u.matrix().sub(&v.matrix().matmul(&c.transpose())?)?;
    let sq = v_off_u.frobenius_norm().powi(2) + u_off_v.frobenius_norm().powi(2);
    Ok(sq.sqrt())
}

/// `Δ` through the plain Gram identity `Δ² = rank U + rank V − 2‖UᵀV‖_F²`.
pub fn projection_distance_gram(u: &OrthonormalBasis, v: &OrthonormalBasis) -> Result<f64> {
    check_same_ambient(u, v)?;
    let c = u.matrix().t_matmul(v.matrix())?.frobenius_norm();
    let sq = (u.rank() + v.rank()) as f64 - 2.0 * c * c;
    Ok(sq.max(0.0).sqrt())
}

/// `Δ` by materializing both `d × d` projectors.
pub fn projection_distance_dense(u: &OrthonormalBasis, v: &OrthonormalBasis) -> Result<f64> {
    check_same_ambient(u, v)?;
    let diff = u.projector().as_matrix().sub(v.projector().as_matrix())?;
    Ok(diff.frobenius_norm())
}

/// Neumaier-compensated running sum; terms are added in the order given.
#[derive(Default, Clone, Copy, Debug)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// `H(U)`: the mean of `Δ²(U, V_i)` over the given bases.
pub fn h_objective(u: &OrthonormalBasis, bases: &[OrthonormalBasis]) -> Result<f64> {
    if bases.is_empty() {
        return Err(Error::argument("objective over an empty list of bases"));
    }
    let mut acc = CompensatedSum::default();
    for b in bases {
        acc.add(projection_distance(u, b)?.powi(2));
    }
    Ok(acc.value() / bases.len() as f64)
}

/// `Ω`: the average of the projectors `V_i V_iᵀ`.
pub fn mean_projector(bases: &[OrthonormalBasis]) -> Result<SymmetricMatrix> {
    let Some(first) = bases.first() else {
        return Err(Error::argument("mean projector of an empty list"));
    };
    let d = first.ambient_dim();
    let mut acc = SymmetricMatrix::zeros(d);
    let scale = 1.0 / bases.len() as f64;
    for b in bases {
        check_same_ambient(first, b)?;
        acc.add_scaled_outer(b.matrix(), scale)?;
    }
    Ok(acc)
}

/// Eigengap, condition number and effective rank of a covariance spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpectrumStats {
    pub lambda1: f64,
    pub lambda_k: f64,
    pub lambda_k1: f64,
    /// `λ_K − λ_{K+1}`
    pub eigengap: f64,
    /// `λ_1 / eigengap`
    pub kappa: f64,
    /// `Tr Σ / λ_1`
    pub effective_rank: f64,
}

pub fn spectrum_stats(values: &[f64], k: usize) -> Result<SpectrumStats> {
    if k == 0 || k + 1 > values.len() {
        return Err(Error::argument(format!(
            "rank {k} needs at least {} eigenvalues, got {}",
            k + 1,
            values.len()
        )));
    }
    if values.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::argument(
            "eigenvalues must be sorted in descending order",
        ));
    }
    let lambda1 = values[0];
    if !(lambda1 > 0.0) {
        return Err(Error::argument("leading eigenvalue must be positive"));
    }
    let (lambda_k, lambda_k1) = (values[k - 1], values[k]);
    let eigengap = lambda_k - lambda_k1;
    if !(eigengap > 0.0) {
        return Err(Error::Identifiability { eigengap });
    }
    let trace: f64 = values.iter().sum();
    Ok(SpectrumStats {
        lambda1,
        lambda_k,
        lambda_k1,
        eigengap,
        kappa: lambda1 / eigengap,
        effective_rank: trace / lambda1,
    })
}
