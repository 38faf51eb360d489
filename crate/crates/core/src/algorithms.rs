//! Principal-eigenspace estimators: pooled PCA, one-shot distributed PCA, the
//! online distributed estimator and the all-eigenvector baseline.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    empirical_covariance, factored_top_k, sym_eig, top_k_eig, DenseMatrix, EigenDecomposition,
    SymmetricMatrix,
};
use crate::subspace::OrthonormalBasis;

/// Top-`k` eigenvectors of the batch second moment `n⁻¹ Σ x xᵀ`.
///
/// Batches with fewer rows than columns are decomposed through their
/// `n × n` Gram matrix instead of the `d × d` covariance.
pub fn local_top_k(batch: &DenseMatrix, k: usize) -> Result<OrthonormalBasis> {
    let (n, d) = (batch.rows(), batch.cols());
    if n == 0 {
        return Err(Error::argument("local batch is empty"));
    }
    if k == 0 || k > d {
        return Err(Error::argument(format!("rank {k} outside 1..={d}")));
    }
    if n >= d {
        Ok(top_k_eig(&empirical_covariance(batch)?, k)?.1)
    } else {
        Ok(factored_top_k(&batch.scaled(1.0 / (n as f64).sqrt()), k)?.1)
    }
}

/// Local bases for every node, computed in parallel.
pub fn local_bases(node_batches: &[DenseMatrix], k: usize) -> Result<Vec<OrthonormalBasis>> {
    if node_batches.is_empty() {
        return Err(Error::argument("no node batches"));
    }
    let d = node_batches[0].cols();
    if let Some(b) = node_batches.iter().find(|b| b.cols() != d) {
        return Err(Error::dimension(format!(
            "node batches have {} and {d} columns",
            b.cols()
        )));
    }
    node_batches.par_iter().map(|b| local_top_k(b, k)).collect()
}

/// Top-`k` eigenvectors of `m⁻¹ Σ_ℓ U_ℓ U_ℓᵀ`. Inputs may have any rank ≥ `k`.
pub fn aggregate_local(bases: &[OrthonormalBasis], k: usize) -> Result<OrthonormalBasis> {
    let Some(first) = bases.first() else {
        return Err(Error::argument("aggregation over zero bases"));
    };
    let d = first.ambient_dim();
    if k == 0 || k > d {
        return Err(Error::argument(format!("rank {k} outside 1..={d}")));
    }
    for b in bases {
        if b.ambient_dim() != d {
            return Err(Error::dimension(format!(
                "bases live in R^{} and R^{d}",
                b.ambient_dim()
            )));
        }
        if b.rank() < k {
            return Err(Error::argument(format!(
                "local basis of rank {} cannot yield rank {k}",
                b.rank()
            )));
        }
    }
    let parts: Vec<&DenseMatrix> = bases.iter().map(|b| b.matrix()).collect();
    // Σ̄ = FᵀF with F = [U_1 … U_m]ᵀ / √m
    let factor = DenseMatrix::hstack(&parts)?
        .transpose()
        .scaled(1.0 / (bases.len() as f64).sqrt());
    Ok(factored_top_k(&factor, k)?.1)
}

/// Fusion-center state of the online estimator.
///
/// The accumulator `Σ̃(t) = Σ_{s≤t} T⁻¹ V̄(s) V̄(s)ᵀ` is held in factored form
/// as the list of round bases; [`OdpcaState::accumulator`] materializes it.
#[derive(Clone, Debug)]
pub struct OdpcaState {
    ambient_dim: usize,
    rank: usize,
    horizon: usize,
    round_bases: Vec<OrthonormalBasis>,
}

impl OdpcaState {
    /// Empty accumulator at round 0.
    pub fn new(ambient_dim: usize, rank: usize, horizon: usize) -> Result<Self> {
        if rank == 0 || rank > ambient_dim {
            return Err(Error::argument(format!(
                "rank {rank} outside 1..={ambient_dim}"
            )));
        }
        if horizon == 0 {
            return Err(Error::argument("horizon must be at least one round"));
        }
        Ok(Self {
            ambient_dim,
            rank,
            horizon,
            round_bases: Vec::with_capacity(horizon),
        })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Number of completed rounds.
    pub fn round(&self) -> usize {
        self.round_bases.len()
    }

    pub fn round_bases(&self) -> &[OrthonormalBasis] {
        &self.round_bases
    }

    /// Dense `Σ̃(t)`.
    pub fn accumulator(&self) -> SymmetricMatrix {
        let mut acc = SymmetricMatrix::zeros(self.ambient_dim);
        let w = 1.0 / self.horizon as f64;
        for b in &self.round_bases {
            acc.add_scaled_outer(b.matrix(), w)
                .expect("round bases share the ambient dimension");
        }
        acc
    }

    /// `tr Σ̃(t)`, evaluated from the stored round bases.
    pub fn accumulator_trace(&self) -> f64 {
        let w = 1.0 / self.horizon as f64;
        self.round_bases
            .iter()
            .map(|b| w * b.matrix().frobenius_norm().powi(2))
            .sum()
    }

    /// One round: local top-`projection_rank` bases on every node, rank-`K`
    /// aggregation, accumulator update. Returns the round basis `V̄(t)`.
    pub fn step(
        &mut self,
        node_batches: &[DenseMatrix],
        projection_rank: usize,
    ) -> Result<OrthonormalBasis> {
        self.check_open()?;
        self.check_projection_rank(projection_rank)?;
        if let Some(b) = node_batches.iter().find(|b| b.cols() != self.ambient_dim) {
            return Err(Error::dimension(format!(
                "batch has {} columns, state expects {}",
                b.cols(),
                self.ambient_dim
            )));
        }
        let locals = local_bases(node_batches, projection_rank)?;
        self.absorb(&locals)
    }

    /// The center's half of [`OdpcaState::step`], for callers that computed the
    /// local bases themselves.
    pub fn absorb(&mut self, local: &[OrthonormalBasis]) -> Result<OrthonormalBasis> {
        self.check_open()?;
        if let Some(b) = local.iter().find(|b| b.ambient_dim() != self.ambient_dim) {
            return Err(Error::dimension(format!(
                "local basis lives in R^{}, state expects R^{}",
                b.ambient_dim(),
                self.ambient_dim
            )));
        }
        let round_basis = aggregate_local(local, self.rank)?;
        self.round_bases.push(round_basis.clone());
        Ok(round_basis)
    }

    /// Top-`K` eigenvectors of `Σ̃(T)`. Only valid once every round has run.
    pub fn finalize(&self) -> Result<OrthonormalBasis> {
        if self.round() != self.horizon {
            return Err(Error::State(format!(
                "finalize after {} of {} rounds",
                self.round(),
                self.horizon
            )));
        }
        let parts: Vec<&DenseMatrix> = self.round_bases.iter().map(|b| b.matrix()).collect();
        let factor = DenseMatrix::hstack(&parts)?
            .transpose()
            .scaled(1.0 / (self.horizon as f64).sqrt());
        Ok(factored_top_k(&factor, self.rank)?.1)
    }

    fn check_open(&self) -> Result<()> {
        if self.round() >= self.horizon {
            return Err(Error::State(format!(
                "all {} rounds already absorbed",
                self.horizon
            )));
        }
        Ok(())
    }

    fn check_projection_rank(&self, p: usize) -> Result<()> {
        if p < self.rank || p > self.ambient_dim {
            return Err(Error::argument(format!(
                "projection rank {p} outside {}..={}",
                self.rank, self.ambient_dim
            )));
        }
        Ok(())
    }
}

/// Runs the online estimator over `rounds[t][ℓ]` and returns `Ṽ_K(T)`.
pub fn odpca(
    rounds: &[Vec<DenseMatrix>],
    k: usize,
    projection_rank: usize,
) -> Result<OrthonormalBasis> {
    let d = rounds
        .first()
        .and_then(|r| r.first())
        .map(|b| b.cols())
        .ok_or_else(|| Error::argument("no data rounds"))?;
    let mut state = OdpcaState::new(d, k, rounds.len())?;
    for batches in rounds {
        state.step(batches, projection_rank)?;
    }
    state.finalize()
}

/// One-shot distributed PCA: local top-`projection_rank` bases, then rank-`k`
/// aggregation at the center.
pub fn dpca(
    node_batches: &[DenseMatrix],
    k: usize,
    projection_rank: usize,
) -> Result<OrthonormalBasis> {
    if projection_rank < k {
        return Err(Error::argument(format!(
            "projection rank {projection_rank} below target rank {k}"
        )));
    }
    let locals = local_bases(node_batches, projection_rank)?;
    aggregate_local(&locals, k)
}

/// Top-`k` eigenvectors of the pooled second moment.
pub fn full_pca(samples: &DenseMatrix, k: usize) -> Result<OrthonormalBasis> {
    local_top_k(samples, k)
}

/// Every node sends its full eigendecomposition (values and vectors); the
/// center rebuilds and averages the node covariances, then truncates to `k`.
///
/// Requires equal batch sizes so the average equals the pooled covariance.
pub fn baseline_all_eigenvectors(
    node_batches: &[DenseMatrix],
    k: usize,
) -> Result<OrthonormalBasis> {
    let Some(first) = node_batches.first() else {
        return Err(Error::argument("no node batches"));
    };
    let (n, d) = (first.rows(), first.cols());
    if let Some(b) = node_batches.iter().find(|b| b.cols() != d) {
        return Err(Error::dimension(format!(
            "node batches have {} and {d} columns",
            b.cols()
        )));
    }
    if node_batches.iter().any(|b| b.rows() != n) {
        return Err(Error::argument(
            "all-eigenvector baseline requires equal batch sizes on every node",
        ));
    }
    let decomps = node_batches
        .par_iter()
        .map(baseline_local)
        .collect::<Result<Vec<_>>>()?;
    baseline_center(&decomps, k)
}

/// A node's transmission for the all-eigenvector baseline: its full
/// eigendecomposition.
pub fn baseline_local(batch: &DenseMatrix) -> Result<EigenDecomposition> {
    sym_eig(&empirical_covariance(batch)?)
}

/// Rebuilds each node covariance from its eigenpairs, averages them and
/// returns the top-`k` eigenvectors of the average.
pub fn baseline_center(decomps: &[EigenDecomposition], k: usize) -> Result<OrthonormalBasis> {
    let Some(first) = decomps.first() else {
        return Err(Error::argument("no node decompositions"));
    };
    let d = first.basis.ambient_dim();
    let mut center = vec![0.0; d * d];
    let w = 1.0 / decomps.len() as f64;
    for e in decomps {
        if e.basis.ambient_dim() != d {
            return Err(Error::dimension("node decompositions differ in dimension"));
        }
        let rebuilt = e.reconstruct();
        for (c, v) in center.iter_mut().zip(rebuilt.as_matrix().as_slice()) {
            *c += w * v;
        }
    }
    Ok(top_k_eig(&SymmetricMatrix::new(DenseMatrix::new(d, d, center)?)?, k)?.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{make_spiked_model, sample_gaussian, SeededStream};
    use crate::linalg::sym_eig;
    use crate::subspace::{mean_projector, projection_distance};

    fn spiked_batches(m: usize, n: usize, seed: u64) -> Vec<DenseMatrix> {
        let model = make_spiked_model(8, 2, &[6.0, 4.0], 1.0, 5).unwrap();
        let mut s = SeededStream::new(seed);
        (0..m).map(|_| sample_gaussian(&model, n, &mut s)).collect()
    }

    fn dist(a: &OrthonormalBasis, b: &OrthonormalBasis) -> f64 {
        projection_distance(a, b).unwrap()
    }

    #[test]
    fn rank_one_batch_recovers_axis() {
        let batch =
            DenseMatrix::from_rows(&[[2.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [0.5, 0.0, 0.0]]).unwrap();
        let u = local_top_k(&batch, 1).unwrap();
        assert!(dist(&u, &OrthonormalBasis::standard(3, &[0]).unwrap()) < 1e-12);
        // wide batch takes the Gram path
        let batch = DenseMatrix::from_rows(&[[0.0, 3.0, 0.0, 0.0]]).unwrap();
        let u = local_top_k(&batch, 1).unwrap();
        assert!(dist(&u, &OrthonormalBasis::standard(4, &[1]).unwrap()) < 1e-12);
    }

    #[test]
    fn isotropic_batch_gives_orthonormal_basis() {
        let batch = DenseMatrix::identity(4).scaled(2.0);
        let u = local_top_k(&batch, 2).unwrap();
        let g = u.matrix().t_matmul(u.matrix()).unwrap();
        assert!(g.sub(&DenseMatrix::identity(2)).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn local_top_k_errors() {
        assert!(local_top_k(&DenseMatrix::zeros(0, 3), 1).is_err());
        assert!(local_top_k(&DenseMatrix::identity(3), 4).is_err());
    }

    #[test]
    fn aggregation_of_single_or_repeated_basis_is_identity() {
        let batches = spiked_batches(1, 30, 1);
        let u = local_top_k(&batches[0], 2).unwrap();
        assert!(dist(&aggregate_local(std::slice::from_ref(&u), 2).unwrap(), &u) < 1e-12);
        assert!(dist(&aggregate_local(&[u.clone(), u.clone()], 2).unwrap(), &u) < 1e-12);
    }

    #[test]
    fn aggregation_matches_dense_oracle() {
        let bases: Vec<_> = spiked_batches(3, 5, 2)
            .iter()
            .map(|b| local_top_k(&b.leading_columns(4).unwrap(), 2).unwrap())
            .collect();
        let agg = aggregate_local(&bases, 2).unwrap();
        let oracle = sym_eig(&mean_projector(&bases).unwrap())
            .unwrap()
            .basis
            .truncate(2)
            .unwrap();
        assert!(dist(&agg, &oracle) <= 1e-8);
    }

    #[test]
    fn aggregation_accepts_surplus_rank() {
        let bases: Vec<_> = spiked_batches(4, 40, 3)
            .iter()
            .map(|b| local_top_k(b, 4).unwrap())
            .collect();
        let agg = aggregate_local(&bases, 2).unwrap();
        assert_eq!(agg.rank(), 2);
        let oracle = sym_eig(&mean_projector(&bases).unwrap())
            .unwrap()
            .basis
            .truncate(2)
            .unwrap();
        assert!(dist(&agg, &oracle) <= 1e-8);
        assert!(aggregate_local(&bases, 5).is_err());
        assert!(aggregate_local(&[], 1).is_err());
    }

    #[test]
    fn init_state() {
        let s = OdpcaState::new(3, 1, 2).unwrap();
        assert_eq!(s.accumulator(), SymmetricMatrix::zeros(3));
        assert_eq!(s.accumulator_trace(), 0.0);
        assert_eq!(s.round(), 0);
        assert!(OdpcaState::new(3, 0, 2).is_err());
        assert!(OdpcaState::new(3, 4, 2).is_err());
        assert!(OdpcaState::new(3, 1, 0).is_err());
    }

    #[test]
    fn state_errors_on_overflow_and_premature_finalize() {
        let batches = spiked_batches(2, 20, 4);
        let mut s = OdpcaState::new(8, 2, 1).unwrap();
        assert!(matches!(s.finalize(), Err(Error::State(_))));
        assert!(s.step(&batches, 1).is_err());
        s.step(&batches, 2).unwrap();
        assert!(matches!(s.step(&batches, 2), Err(Error::State(_))));
        assert!(s.finalize().is_ok());

        let mut s = OdpcaState::new(7, 2, 1).unwrap();
        assert!(matches!(s.step(&batches, 2), Err(Error::Dimension(_))));
        assert_eq!(s.round(), 0);
    }

    #[test]
    fn trace_grows_by_k_over_t_per_round() {
        let mut s = OdpcaState::new(8, 2, 4).unwrap();
        for t in 1..=4 {
            let batches = spiked_batches(3, 25, 10 + t as u64);
            let before = s.accumulator();
            s.step(&batches, 3).unwrap();
            let expected = t as f64 * 2.0 / 4.0;
            assert!((s.accumulator().trace() - expected).abs() <= 1e-8);
            assert!((s.accumulator_trace() - expected).abs() <= 1e-8);
            let inc = SymmetricMatrix::new(
                s.accumulator()
                    .into_matrix()
                    .sub(before.as_matrix())
                    .unwrap(),
            )
            .unwrap();
            let vals = sym_eig(&inc).unwrap().values;
            assert!((vals[0] - 0.25).abs() < 1e-10 && (vals[1] - 0.25).abs() < 1e-10);
            assert!(vals[2..].iter().all(|v| v.abs() <= 1e-10));
        }
    }

    #[test]
    fn identical_rounds_reproduce_round_basis() {
        let batches = spiked_batches(3, 30, 6);
        let mut s = OdpcaState::new(8, 2, 3).unwrap();
        let first = s.step(&batches, 2).unwrap();
        s.step(&batches, 2).unwrap();
        s.step(&batches, 2).unwrap();
        assert!(dist(&s.finalize().unwrap(), &first) <= 1e-8);
    }

    #[test]
    fn finalize_matches_dense_accumulator() {
        let mut s = OdpcaState::new(8, 2, 5).unwrap();
        for t in 0..5 {
            s.step(&spiked_batches(2, 10, 100 + t), 2).unwrap();
        }
        let (_, oracle) = top_k_eig(&s.accumulator(), 2).unwrap();
        assert!(dist(&s.finalize().unwrap(), &oracle) <= 1e-8);
    }

    #[test]
    fn reduction_chain() {
        let batch = spiked_batches(1, 50, 7).pop().unwrap();
        let full = full_pca(&batch, 2).unwrap();
        let one_shot = dpca(std::slice::from_ref(&batch), 2, 2).unwrap();
        let online = odpca(&[vec![batch.clone()]], 2, 2).unwrap();
        let baseline = baseline_all_eigenvectors(std::slice::from_ref(&batch), 2).unwrap();
        assert!(dist(&full, &one_shot) <= 1e-8);
        assert!(dist(&full, &online) <= 1e-8);
        assert!(dist(&full, &baseline) <= 1e-8);
    }

    #[test]
    fn dpca_equals_single_round_odpca() {
        let batches = spiked_batches(4, 20, 8);
        let a = dpca(&batches, 2, 3).unwrap();
        let b = odpca(&[batches], 2, 3).unwrap();
        assert!(dist(&a, &b) <= 1e-10);
    }

    #[test]
    fn baseline_equals_pooled_pca() {
        let batches = spiked_batches(3, 15, 9);
        let refs: Vec<&DenseMatrix> = batches.iter().collect();
        let pooled = DenseMatrix::vstack(&refs).unwrap();
        let a = baseline_all_eigenvectors(&batches, 2).unwrap();
        assert!(dist(&a, &full_pca(&pooled, 2).unwrap()) <= 1e-8);

        let uneven = vec![batches[0].clone(), batches[1].select_rows(0..10).unwrap()];
        assert!(matches!(
            baseline_all_eigenvectors(&uneven, 2),
            Err(Error::Argument(_))
        ));
    }

    #[test]
    fn node_order_does_not_matter() {
        let mut batches = spiked_batches(4, 20, 12);
        let a = dpca(&batches, 2, 2).unwrap();
        batches.reverse();
        let b = dpca(&batches, 2, 2).unwrap();
        assert!(dist(&a, &b) <= 1e-8);
    }
}
