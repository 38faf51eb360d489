//! Synthetic spiked-covariance data with a known principal eigenspace.
//!
//! Randomness comes from counter-addressed ChaCha20 streams: the `c`-th
//! standard normal of a `(seed, lane)` pair depends only on `c`, so the batch
//! of any node and round can be generated independently and in any order.

use rand::SeedableRng;
use rand_chacha::rand_core::RngCore;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::linalg::{orthonormalize, DenseMatrix, SymmetricMatrix};
use crate::subspace::{spectrum_stats, OrthonormalBasis, SpectrumStats};

/// Independent ChaCha stream identifiers, one per consumer of randomness.
pub mod lane {
    pub const SAMPLES: u64 = 0;
    pub const SIGNS: u64 = 1;
    pub const MODEL: u64 = 2;
    pub const CLUSTERING: u64 = 3;
    pub const SHUFFLE: u64 = 4;
}

/// A ChaCha20 generator for one `(seed, lane)` pair, positioned at its start.
pub fn lane_rng(seed: u64, lane: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(lane);
    rng
}

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Seekable source of standard normal draws.
///
/// `counter` is the index of the next draw. Draws come in Box-Muller pairs;
/// pair `j` is built from the two 64-bit words at ChaCha word position `4j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeededStream {
    seed: u64,
    counter: u64,
}

impl SeededStream {
    pub fn new(seed: u64) -> Self {
        Self { seed, counter: 0 }
    }

    pub fn at(seed: u64, counter: u64) -> Self {
        Self { seed, counter }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Fills `out` with the next `out.len()` standard normals.
    pub fn fill_normals(&mut self, out: &mut [f64]) {
        if out.is_empty() {
            return;
        }
        let mut rng = lane_rng(self.seed, lane::SAMPLES);
        let first_pair = self.counter / 2;
        rng.set_word_pos(4 * first_pair as u128);
        let mut idx = 0;
        if self.counter % 2 == 1 {
            let (_, z1) = box_muller(&mut rng);
            out[0] = z1;
            idx = 1;
        }
        while idx < out.len() {
            let (z0, z1) = box_muller(&mut rng);
            out[idx] = z0;
            if idx + 1 < out.len() {
                out[idx + 1] = z1;
            }
            idx += 2;
        }
        self.counter += out.len() as u64;
    }

    /// Rademacher signs aligned with the normal draws at the same counters.
    /// Does not advance the stream.
    fn signs_at(&self, start: u64, out: &mut [f64]) {
        let mut rng = lane_rng(self.seed, lane::SIGNS);
        rng.set_word_pos(2 * start as u128);
        for s in out.iter_mut() {
            *s = if rng.next_u64() & 1 == 0 { 1.0 } else { -1.0 };
        }
    }
}

fn box_muller(rng: &mut ChaCha20Rng) -> (f64, f64) {
    let a = rng.next_u64();
    let b = rng.next_u64();
    let u1 = ((a >> 11) + 1) as f64 * TWO_POW_M53;
    let u2 = (b >> 11) as f64 * TWO_POW_M53;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * std::f64::consts::PI * u2).sin_cos();
    (r * c, r * s)
}

/// Population covariance `Σ = V Λ Vᵀ` whose top-`K` eigenspace is known.
#[derive(Clone, Debug)]
pub struct SpikedModel {
    ambient_dim: usize,
    rank: usize,
    eigenvalues: Vec<f64>,
    ground_truth: OrthonormalBasis,
    full_basis: OrthonormalBasis,
    /// `V Λ^{1/2}`
    loading: DenseMatrix,
}

impl SpikedModel {
    /// d = 50, K = 5, spikes 10, 9, 8, 7, 6 over a unit bulk.
    pub fn desk_default(seed: u64) -> Self {
        make_spiked_model(50, 5, &[10.0, 9.0, 8.0, 7.0, 6.0], 1.0, seed)
            .expect("default model parameters are valid")
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn ground_truth(&self) -> &OrthonormalBasis {
        &self.ground_truth
    }

    pub fn full_basis(&self) -> &OrthonormalBasis {
        &self.full_basis
    }

    pub fn stats(&self) -> SpectrumStats {
        spectrum_stats(&self.eigenvalues, self.rank).expect("validated at construction")
    }

    /// Dense `V Λ Vᵀ`.
    pub fn covariance(&self) -> SymmetricMatrix {
        let mut cov = SymmetricMatrix::zeros(self.ambient_dim);
        cov.add_scaled_outer(&self.loading, 1.0)
            .expect("loading is d × d");
        cov
    }
}

/// Builds `Σ = V diag(spikes, bulk, …, bulk) Vᵀ` with `V` Haar-random.
///
/// `V` is the Q factor of a seeded standard Gaussian matrix with the R
/// diagonal made positive, which Gram-Schmidt produces directly.
pub fn make_spiked_model(
    d: usize,
    k: usize,
    spike_values: &[f64],
    bulk_value: f64,
    seed: u64,
) -> Result<SpikedModel> {
    if k == 0 || k >= d {
        return Err(Error::argument(format!(
            "spike count {k} must lie in 1..{d}"
        )));
    }
    if spike_values.len() != k {
        return Err(Error::argument(format!(
            "expected {k} spike values, got {}",
            spike_values.len()
        )));
    }
    if spike_values.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::argument("spike values must be descending"));
    }
    if !(bulk_value > 0.0 && bulk_value.is_finite()) {
        return Err(Error::argument("bulk value must be positive"));
    }
    if !(spike_values[k - 1] > bulk_value) || spike_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::argument("smallest spike must exceed the bulk value"));
    }

    let mut eigenvalues = spike_values.to_vec();
    eigenvalues.resize(d, bulk_value);

    let mut rng = lane_rng(seed, lane::MODEL);
    let mut draws = vec![0.0; d * d];
    let mut i = 0;
    while i < draws.len() {
        let (z0, z1) = box_muller(&mut rng);
        draws[i] = z0;
        if i + 1 < draws.len() {
            draws[i + 1] = z1;
        }
        i += 2;
    }
    let gaussian = DenseMatrix::from_vec_unchecked(d, d, draws);
    let full_basis = orthonormalize(&gaussian)?;
    let ground_truth = full_basis.truncate(k)?;
    let v = full_basis.matrix();
    let loading = DenseMatrix::from_fn(d, d, |i, j| v.get(i, j) * eigenvalues[j].sqrt());

    Ok(SpikedModel {
        ambient_dim: d,
        rank: k,
        eigenvalues,
        ground_truth,
        full_basis,
        loading,
    })
}

/// `n` i.i.d. rows `x = V Λ^{1/2} z` with `z ~ N(0, I_d)`; advances `stream` by `n·d`.
pub fn sample_gaussian(model: &SpikedModel, n: usize, stream: &mut SeededStream) -> DenseMatrix {
    let d = model.ambient_dim;
    let mut z = vec![0.0; n * d];
    stream.fill_normals(&mut z);
    load(model, n, z)
}

/// Like [`sample_gaussian`] but with latent coordinates `ε ⊙ |g|`, where the
/// Rademacher signs `ε` come from a separate lane. The covariance is still `Σ`.
pub fn sample_heavy_shuffled(
    model: &SpikedModel,
    n: usize,
    stream: &mut SeededStream,
) -> DenseMatrix {
    let d = model.ambient_dim;
    let start = stream.counter;
    let mut z = vec![0.0; n * d];
    stream.fill_normals(&mut z);
    let mut signs = vec![0.0; n * d];
    stream.signs_at(start, &mut signs);
    for (zi, s) in z.iter_mut().zip(&signs) {
        *zi = zi.abs() * s;
    }
    load(model, n, z)
}

fn load(model: &SpikedModel, n: usize, latent: Vec<f64>) -> DenseMatrix {
    let d = model.ambient_dim;
    let z = DenseMatrix::from_vec_unchecked(n, d, latent);
    z.matmul(&model.loading.transpose())
        .expect("latent width equals ambient dimension")
}

/// Spiked-model noise around `k ≤ K` planted means `separation · √λ_c · v_c`.
/// Row `i` belongs to cluster `i mod k`.
pub fn sample_planted_clusters(
    model: &SpikedModel,
    k: usize,
    separation: f64,
    n: usize,
    stream: &mut SeededStream,
) -> Result<(DenseMatrix, Vec<usize>)> {
    if k == 0 || k > model.rank {
        return Err(Error::argument(format!(
            "cluster count {k} must lie in 1..={}",
            model.rank
        )));
    }
    let mut x = sample_gaussian(model, n, stream);
    let v = model.ground_truth.matrix();
    let labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    for (i, &c) in labels.iter().enumerate() {
        let scale = separation * model.eigenvalues[c].sqrt();
        for (j, x_ij) in x.row_mut(i).iter_mut().enumerate() {
            *x_ij += scale * v.get(j, c);
        }
    }
    Ok((x, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{empirical_covariance, top_k_eig};
    use crate::subspace::projection_distance;

    #[test]
    fn small_model_spectrum() {
        let m = make_spiked_model(3, 1, &[4.0], 1.0, 1).unwrap();
        assert_eq!(m.eigenvalues(), &[4.0, 1.0, 1.0]);
        let s = m.stats();
        assert_eq!(s.eigengap, 3.0);
        assert_eq!(s.effective_rank, 1.5);
    }

    #[test]
    fn desk_default_stats() {
        let m = SpikedModel::desk_default(0);
        let s = m.stats();
        assert_eq!(s.lambda1, 10.0);
        assert_eq!(s.eigengap, 5.0);
        assert_eq!(s.kappa, 2.0);
        assert!((s.effective_rank - 8.5).abs() < 1e-12);
    }

    #[test]
    fn ground_truth_is_top_eigenspace_of_covariance() {
        for seed in 0..3 {
            let m = make_spiked_model(12, 3, &[6.0, 5.0, 4.0], 1.0, seed).unwrap();
            let (vals, top) = top_k_eig(&m.covariance(), 3).unwrap();
            assert!(projection_distance(&top, m.ground_truth()).unwrap() <= 1e-8);
            for (a, b) in vals.iter().zip([6.0, 5.0, 4.0]) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn argument_errors() {
        assert!(make_spiked_model(3, 1, &[1.0], 1.0, 0).is_err());
        assert!(make_spiked_model(3, 2, &[2.0, 3.0], 1.0, 0).is_err());
        assert!(make_spiked_model(3, 3, &[4.0, 3.0, 2.0], 1.0, 0).is_err());
        assert!(make_spiked_model(3, 1, &[4.0], 0.0, 0).is_err());
        assert!(make_spiked_model(3, 1, &[4.0, 2.0], 1.0, 0).is_err());
    }

    #[test]
    fn stream_is_seekable() {
        let mut whole = SeededStream::new(9);
        let mut all = vec![0.0; 11];
        whole.fill_normals(&mut all);
        assert_eq!(whole.counter(), 11);

        let mut head = vec![0.0; 3];
        let mut tail = vec![0.0; 8];
        let mut s = SeededStream::new(9);
        s.fill_normals(&mut head);
        s.fill_normals(&mut tail);
        assert_eq!(&all[..3], &head[..]);
        assert_eq!(&all[3..], &tail[..]);

        let mut jumped = vec![0.0; 4];
        SeededStream::at(9, 5).fill_normals(&mut jumped);
        assert_eq!(&all[5..9], &jumped[..]);
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = make_spiked_model(6, 2, &[5.0, 4.0], 1.0, 3).unwrap();
        let a = sample_gaussian(&m, 20, &mut SeededStream::new(4));
        let b = sample_gaussian(&m, 20, &mut SeededStream::new(4));
        assert!(a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        let c = sample_heavy_shuffled(&m, 20, &mut SeededStream::new(4));
        let e = sample_heavy_shuffled(&m, 20, &mut SeededStream::new(4));
        assert_eq!(c, e);
        assert_ne!(a, c);
    }

    #[test]
    fn counter_advances_by_n_times_d() {
        let m = make_spiked_model(5, 1, &[3.0], 1.0, 0).unwrap();
        let mut s = SeededStream::new(1);
        sample_gaussian(&m, 7, &mut s);
        assert_eq!(s.counter(), 35);
        sample_heavy_shuffled(&m, 3, &mut s);
        assert_eq!(s.counter(), 50);
    }

    /// Entry (i, j) of the sample second moment has variance
    /// `(Σ_ii Σ_jj + Σ_ij²) / n` for zero-mean Gaussian rows; the sign-scrambled
    /// sampler has the same fourth moments in the latent coordinates.
    fn assert_covariance_within_five_se(x: &DenseMatrix, sigma: &SymmetricMatrix) {
        let n = x.rows() as f64;
        let c = empirical_covariance(x).unwrap();
        let d = sigma.dim();
        for i in 0..d {
            for j in 0..d {
                let se = ((sigma.get(i, i) * sigma.get(j, j) + sigma.get(i, j).powi(2)) / n).sqrt();
                let z = (c.get(i, j) - sigma.get(i, j)).abs() / se;
                assert!(z < 5.0, "entry ({i},{j}) off by {z} standard errors");
            }
        }
    }

    #[test]
    fn gaussian_covariance_and_mean() {
        let m = make_spiked_model(5, 2, &[4.0, 3.0], 1.0, 17).unwrap();
        let n = 100_000;
        let x = sample_gaussian(&m, n, &mut SeededStream::new(2));
        let sigma = m.covariance();
        assert_covariance_within_five_se(&x, &sigma);
        for (j, mean) in x.column_means().iter().enumerate() {
            let bound = 5.0 * (sigma.get(j, j) / n as f64).sqrt();
            assert!(mean.abs() < bound);
        }
    }

    #[test]
    fn sign_scrambled_covariance_and_symmetry() {
        let m = make_spiked_model(5, 2, &[4.0, 3.0], 1.0, 17).unwrap();
        let n = 100_000;
        let x = sample_heavy_shuffled(&m, n, &mut SeededStream::new(8));
        assert_covariance_within_five_se(&x, &m.covariance());
        // skewness of a symmetric law: standard error √(6/n)
        let means = x.column_means();
        for j in 0..5 {
            let (mut m2, mut m3) = (0.0, 0.0);
            for row in x.row_iter() {
                let c = row[j] - means[j];
                m2 += c * c;
                m3 += c * c * c;
            }
            let skew = (m3 / n as f64) / (m2 / n as f64).powf(1.5);
            assert!(skew.abs() < 5.0 * (6.0 / n as f64).sqrt());
        }
    }

    #[test]
    fn planted_clusters_shift_means() {
        let m = make_spiked_model(6, 2, &[5.0, 4.0], 1.0, 1).unwrap();
        let (x, labels) =
            sample_planted_clusters(&m, 2, 10.0, 400, &mut SeededStream::new(0)).unwrap();
        assert_eq!(labels.len(), 400);
        let v1 = m.ground_truth().matrix().column(0);
        let proj: f64 = x.row(0).iter().zip(&v1).map(|(a, b)| a * b).sum();
        assert!(proj > 10.0);
        assert!(sample_planted_clusters(&m, 3, 1.0, 10, &mut SeededStream::new(0)).is_err());
    }
}
