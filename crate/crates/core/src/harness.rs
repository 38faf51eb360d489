//! Star-topology streaming simulator.
//!
//! A run draws (or partitions) `N = T·m·n` samples into a node × round grid,
//! feeds the grid to each requested estimator and records errors against the
//! ground truth, analytic communication counts and phase timings. Every
//! estimator sees exactly the same `N` rows: the online estimator consumes
//! them round by round, the one-shot estimators consume each node's rows
//! pooled over all rounds.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::algorithms::{
    aggregate_local, baseline_center, baseline_local, full_pca, local_bases, OdpcaState,
};
use crate::datagen::{sample_gaussian, sample_heavy_shuffled, SeededStream, SpikedModel};
use crate::error::{Error, Result};
use crate::io::{partition_stream, ReportRow, StreamGrid};
use crate::linalg::DenseMatrix;
use crate::stats::{mean, median, std_dev};
use crate::subspace::{projection_distance, OrthonormalBasis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Odpca,
    Dpca,
    Full,
    Baseline,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Odpca,
        Algorithm::Dpca,
        Algorithm::Full,
        Algorithm::Baseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Odpca => "odpca",
            Algorithm::Dpca => "dpca",
            Algorithm::Full => "full",
            Algorithm::Baseline => "baseline",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::argument(format!("unknown algorithm `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    #[default]
    Gaussian,
    SignScrambled,
}

/// Where the `N` samples come from.
#[derive(Clone, Debug)]
pub enum DataSource {
    /// Seeded draws from a spiked model; the ground truth is known.
    Synthetic {
        model: Arc<SpikedModel>,
        sampler: Sampler,
    },
    /// Rows of a loaded dataset, consumed in order.
    Matrix {
        data: Arc<DenseMatrix>,
        center_batches: bool,
        label: String,
    },
}

impl DataSource {
    pub fn synthetic(model: SpikedModel) -> Self {
        DataSource::Synthetic {
            model: Arc::new(model),
            sampler: Sampler::Gaussian,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            DataSource::Synthetic { model, .. } => model.ambient_dim(),
            DataSource::Matrix { data, .. } => data.cols(),
        }
    }

    pub fn ground_truth(&self) -> Option<&OrthonormalBasis> {
        match self {
            DataSource::Synthetic { model, .. } => Some(model.ground_truth()),
            DataSource::Matrix { .. } => None,
        }
    }

    fn describe(&self) -> String {
        match self {
            DataSource::Synthetic { model, sampler } => {
                let s = model.stats();
                format!(
                    "synthetic(d={}, K={}, eigengap={}, kappa={}, r={}, sampler={:?})",
                    model.ambient_dim(),
                    model.rank(),
                    s.eigengap,
                    s.kappa,
                    s.effective_rank,
                    sampler
                )
            }
            DataSource::Matrix {
                label,
                center_batches,
                data,
            } => format!(
                "dataset({label}, rows={}, per_batch_centering={center_batches})",
                data.rows()
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// `m`
    pub nodes: usize,
    /// `n`, samples per node per round
    pub batch_size: usize,
    /// `T`
    pub horizon: usize,
    /// `K`
    pub rank: usize,
    /// `Z`; nodes transmit `K + Z` eigenvectors
    pub surplus: usize,
    pub ambient_dim: usize,
    pub seed: u64,
    pub source: DataSource,
    pub algorithms: Vec<Algorithm>,
}

impl RunConfig {
    /// All four estimators, `Z = 0`, ambient dimension taken from `source`.
    pub fn new(
        source: DataSource,
        nodes: usize,
        batch_size: usize,
        horizon: usize,
        rank: usize,
        seed: u64,
    ) -> Self {
        Self {
            nodes,
            batch_size,
            horizon,
            rank,
            surplus: 0,
            ambient_dim: source.ambient_dim(),
            seed,
            source,
            algorithms: Algorithm::ALL.to_vec(),
        }
    }

    pub fn total_samples(&self) -> usize {
        self.horizon * self.nodes * self.batch_size
    }

    pub fn projection_rank(&self) -> usize {
        self.rank + self.surplus
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes == 0 || self.batch_size == 0 || self.horizon == 0 || self.rank == 0 {
            return Err(Error::argument("m, n, T and K must all be at least 1"));
        }
        if self.projection_rank() > self.ambient_dim {
            return Err(Error::argument(format!(
                "K + Z = {} exceeds d = {}",
                self.projection_rank(),
                self.ambient_dim
            )));
        }
        if self.source.ambient_dim() != self.ambient_dim {
            return Err(Error::dimension(format!(
                "configured d = {} but the source has dimension {}",
                self.ambient_dim,
                self.source.ambient_dim()
            )));
        }
        if self.algorithms.is_empty() {
            return Err(Error::argument("no algorithms requested"));
        }
        Ok(())
    }

    /// Analytic count of reals sent from nodes to the center.
    pub fn comm_entries(&self, algorithm: Algorithm) -> u64 {
        let (t, m, d, p) = (
            self.horizon as u64,
            self.nodes as u64,
            self.ambient_dim as u64,
            self.projection_rank() as u64,
        );
        match algorithm {
            Algorithm::Odpca => t * m * d * p,
            Algorithm::Dpca => m * d * p,
            // every raw sample moves to the center
            Algorithm::Full => self.total_samples() as u64 * d,
            // d eigenvectors plus d eigenvalues per node
            Algorithm::Baseline => m * d * (d + 1),
        }
    }

    fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            nodes: self.nodes,
            batch_size: self.batch_size,
            horizon: self.horizon,
            rank: self.rank,
            surplus: self.surplus,
            ambient_dim: self.ambient_dim,
            seed: self.seed,
            total_samples: self.total_samples(),
            source: self.source.describe(),
            algorithms: self.algorithms.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub nodes: usize,
    pub batch_size: usize,
    pub horizon: usize,
    pub rank: usize,
    pub surplus: usize,
    pub ambient_dim: usize,
    pub seed: u64,
    pub total_samples: usize,
    pub source: String,
    pub algorithms: Vec<Algorithm>,
}

/// Milliseconds spent at the nodes, at the center, and end to end.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PhaseTimes {
    pub local_ms: f64,
    pub aggregate_ms: f64,
    pub total_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgorithmReport {
    pub algorithm: Algorithm,
    /// `Δ(estimate, V_K)` when the ground truth is known.
    pub final_error: Option<f64>,
    pub comm_entries: u64,
    pub wall: PhaseTimes,
    /// Rows in each batch a node decomposes during its local phase.
    pub local_batch_rows: usize,
    /// Order-independent digest of every sample row the estimator consumed.
    pub data_digest: u64,
    #[serde(skip)]
    pub basis: OrthonormalBasis,
}

#[derive(Clone, Debug, Serialize)]
pub struct OdpcaTrace {
    /// `Δ(V̄_K(t), V_K)` per round, when the ground truth is known.
    pub round_errors: Option<Vec<f64>>,
    /// `tr Σ̃(t)` after each round.
    pub accumulator_traces: Vec<f64>,
    pub round_ms: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub config: ConfigEcho,
    pub odpca: Option<OdpcaTrace>,
    pub algorithms: Vec<AlgorithmReport>,
}

impl RunReport {
    pub fn get(&self, algorithm: Algorithm) -> Option<&AlgorithmReport> {
        self.algorithms.iter().find(|a| a.algorithm == algorithm)
    }

    pub fn final_error(&self, algorithm: Algorithm) -> Option<f64> {
        self.get(algorithm).and_then(|a| a.final_error)
    }

    /// Per-round rows for the online estimator, then one summary row per
    /// estimator (`round` = `None`).
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows = Vec::new();
        let per_round = self.config.nodes as u64
            * self.config.ambient_dim as u64
            * (self.config.rank + self.config.surplus) as u64;
        if let Some(trace) = &self.odpca {
            for (t, ms) in trace.round_ms.iter().enumerate() {
                rows.push(ReportRow {
                    algorithm: Algorithm::Odpca.name().to_string(),
                    round: Some(t + 1),
                    error: trace.round_errors.as_ref().map(|e| e[t]),
                    comm_entries: per_round,
                    wall_ms: *ms,
                });
            }
        }
        for a in &self.algorithms {
            rows.push(ReportRow {
                algorithm: a.algorithm.name().to_string(),
                round: None,
                error: a.final_error,
                comm_entries: a.comm_entries,
                wall_ms: a.wall.total_ms,
            });
        }
        rows
    }
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

fn row_digest(row: &[f64]) -> u64 {
    // FNV-1a over the IEEE bit patterns
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in row {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

/// Order-independent digest of a set of sample rows.
pub fn sample_digest<'a>(parts: impl IntoIterator<Item = &'a DenseMatrix>) -> u64 {
    parts
        .into_iter()
        .flat_map(|m| m.row_iter())
        .fold(0u64, |acc, r| acc.wrapping_add(row_digest(r)))
}

/// Draws or partitions the `N` samples of a run into its grid.
pub fn build_grid(config: &RunConfig) -> Result<StreamGrid> {
    let (m, n, t) = (config.nodes, config.batch_size, config.horizon);
    match &config.source {
        DataSource::Synthetic { model, sampler } => {
            let d = model.ambient_dim() as u64;
            let batches = (0..m * t)
                .into_par_iter()
                .map(|cell| {
                    // each cell owns a disjoint counter range of the seed's stream
                    let mut stream = SeededStream::at(config.seed, cell as u64 * n as u64 * d);
                    match sampler {
                        Sampler::Gaussian => sample_gaussian(model, n, &mut stream),
                        Sampler::SignScrambled => sample_heavy_shuffled(model, n, &mut stream),
                    }
                })
                .collect();
            StreamGrid::from_batches(m, t, batches)
        }
        DataSource::Matrix {
            data,
            center_batches,
            ..
        } => {
            let mut grid = partition_stream(data, m, n, t)?;
            if *center_batches {
                grid.center_batches();
            }
            Ok(grid)
        }
    }
}

/// Runs every requested estimator on one shared sample grid.
pub fn run_stream(config: &RunConfig) -> Result<RunReport> {
    config.validate()?;
    let grid = build_grid(config)?;
    run_on_grid(config, &grid)
}

/// As [`run_stream`], on a grid the caller already built.
pub fn run_on_grid(config: &RunConfig, grid: &StreamGrid) -> Result<RunReport> {
    config.validate()?;
    if grid.nodes() != config.nodes
        || grid.rounds() != config.horizon
        || grid.batch_size() != config.batch_size
        || grid.ambient_dim() != config.ambient_dim
    {
        return Err(Error::argument("grid shape does not match the run config"));
    }
    let truth = config.source.ground_truth();
    let error_to_truth = |b: &OrthonormalBasis| -> Result<Option<f64>> {
        truth.map(|v| projection_distance(b, v)).transpose()
    };
    let (k, p) = (config.rank, config.projection_rank());

    let mut reports = Vec::with_capacity(config.algorithms.len());
    let mut odpca_trace = None;
    let mut pools: Option<Vec<DenseMatrix>> = None;

    for &algorithm in &config.algorithms {
        let mut wall = PhaseTimes::default();
        let total = Instant::now();
        let (basis, local_rows, digest) = match algorithm {
            Algorithm::Odpca => {
                let mut state = OdpcaState::new(config.ambient_dim, k, config.horizon)?;
                let mut round_ms = Vec::with_capacity(config.horizon);
                let mut traces = Vec::with_capacity(config.horizon);
                for t in 0..config.horizon {
                    let round_start = Instant::now();
                    let clock = Instant::now();
                    let locals = local_bases(grid.round_batches(t), p)?;
                    wall.local_ms += elapsed_ms(clock);
                    let clock = Instant::now();
                    state.absorb(&locals)?;
                    wall.aggregate_ms += elapsed_ms(clock);
                    round_ms.push(elapsed_ms(round_start));
                    traces.push(state.accumulator_trace());
                }
                let clock = Instant::now();
                let basis = state.finalize()?;
                wall.aggregate_ms += elapsed_ms(clock);
                wall.total_ms = elapsed_ms(total);

                let round_errors = truth
                    .map(|v| {
                        state
                            .round_bases()
                            .iter()
                            .map(|b| projection_distance(b, v))
                            .collect::<Result<Vec<_>>>()
                    })
                    .transpose()?;
                odpca_trace = Some(OdpcaTrace {
                    round_errors,
                    accumulator_traces: traces,
                    round_ms,
                });
                let digest = sample_digest((0..config.horizon).flat_map(|t| grid.round_batches(t)));
                (basis, config.batch_size, digest)
            }
            Algorithm::Dpca | Algorithm::Baseline => {
                let pools = pools.get_or_insert_with(|| grid.node_pools());
                let basis = if algorithm == Algorithm::Dpca {
                    let clock = Instant::now();
                    let locals = local_bases(pools, p)?;
                    wall.local_ms = elapsed_ms(clock);
                    let clock = Instant::now();
                    let b = aggregate_local(&locals, k)?;
                    wall.aggregate_ms = elapsed_ms(clock);
                    b
                } else {
                    let clock = Instant::now();
                    let decomps = pools
                        .par_iter()
                        .map(baseline_local)
                        .collect::<Result<Vec<_>>>()?;
                    wall.local_ms = elapsed_ms(clock);
                    let clock = Instant::now();
                    let b = baseline_center(&decomps, k)?;
                    wall.aggregate_ms = elapsed_ms(clock);
                    b
                };
                wall.total_ms = elapsed_ms(total);
                let rows = config.batch_size * config.horizon;
                (basis, rows, sample_digest(pools.iter()))
            }
            Algorithm::Full => {
                let pooled = grid.pooled();
                let clock = Instant::now();
                let basis = full_pca(&pooled, k)?;
                wall.aggregate_ms = elapsed_ms(clock);
                wall.total_ms = elapsed_ms(total);
                (basis, 0, sample_digest([&pooled]))
            }
        };
        reports.push(AlgorithmReport {
            algorithm,
            final_error: error_to_truth(&basis)?,
            comm_entries: config.comm_entries(algorithm),
            wall,
            local_batch_rows: local_rows,
            data_digest: digest,
            basis,
        });
    }

    Ok(RunReport {
        config: config.echo(),
        odpca: odpca_trace,
        algorithms: reports,
    })
}

/// Which quantity a scaling experiment multiplies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleAxis {
    #[default]
    Horizon,
    BatchSize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub multiplier: usize,
    pub total_samples: usize,
    pub mean_error: f64,
    pub std_error: f64,
    pub errors: Vec<f64>,
}

/// Online-estimator error against the ground truth as the total sample count
/// grows. Replication `r` uses seed `base.seed + r`.
pub fn scaling_experiment(
    base: &RunConfig,
    factors: &[usize],
    replications: usize,
    axis: ScaleAxis,
) -> Result<Vec<ScalingRow>> {
    if replications < 2 {
        return Err(Error::argument(
            "scaling experiment needs at least 2 replications",
        ));
    }
    if base.source.ground_truth().is_none() {
        return Err(Error::argument(
            "scaling experiment needs a synthetic source",
        ));
    }
    factors
        .iter()
        .map(|&f| {
            if f == 0 {
                return Err(Error::argument("sample multipliers must be positive"));
            }
            let mut cfg = base.clone();
            cfg.algorithms = vec![Algorithm::Odpca];
            match axis {
                ScaleAxis::Horizon => cfg.horizon *= f,
                ScaleAxis::BatchSize => cfg.batch_size *= f,
            }
            cfg.validate()?;
            let errors = (0..replications)
                .into_par_iter()
                .map(|r| {
                    let mut c = cfg.clone();
                    c.seed = cfg.seed.wrapping_add(r as u64);
                    let report = run_stream(&c)?;
                    Ok(report
                        .final_error(Algorithm::Odpca)
                        .expect("synthetic source"))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(ScalingRow {
                multiplier: f,
                total_samples: cfg.total_samples(),
                mean_error: mean(&errors).expect("nonempty"),
                std_error: std_dev(&errors).expect("nonempty"),
                errors,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TimingRow {
    pub algorithm: Algorithm,
    pub surplus: usize,
    pub projection_rank: usize,
    /// Medians over repetitions.
    pub local_ms: f64,
    pub aggregate_ms: f64,
    pub total_ms: f64,
    /// Sample standard deviation of the end-to-end time.
    pub total_std_ms: f64,
    pub local_batch_rows: usize,
    pub comm_entries: u64,
    pub final_error: Option<f64>,
}

/// Median phase timings for every requested estimator at each surplus `Z`.
pub fn timing_probe(
    config: &RunConfig,
    surpluses: &[usize],
    repetitions: usize,
) -> Result<Vec<TimingRow>> {
    if repetitions < 3 {
        return Err(Error::argument("timing needs at least 3 repetitions"));
    }
    let mut rows = Vec::new();
    for &z in surpluses {
        let mut cfg = config.clone();
        cfg.surplus = z;
        cfg.validate()?;
        let grid = build_grid(&cfg)?;
        let runs = (0..repetitions)
            .map(|_| run_on_grid(&cfg, &grid))
            .collect::<Result<Vec<_>>>()?;
        for (idx, &algorithm) in cfg.algorithms.iter().enumerate() {
            let pick = |f: fn(&PhaseTimes) -> f64| -> Vec<f64> {
                runs.iter().map(|r| f(&r.algorithms[idx].wall)).collect()
            };
            let totals = pick(|w| w.total_ms);
            let first = &runs[0].algorithms[idx];
            rows.push(TimingRow {
                algorithm,
                surplus: z,
                projection_rank: cfg.projection_rank(),
                local_ms: median(&pick(|w| w.local_ms)).unwrap_or(0.0),
                aggregate_ms: median(&pick(|w| w.aggregate_ms)).unwrap_or(0.0),
                total_ms: median(&totals).unwrap_or(0.0),
                total_std_ms: std_dev(&totals).unwrap_or(0.0),
                local_batch_rows: first.local_batch_rows,
                comm_entries: first.comm_entries,
                final_error: first.final_error,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::make_spiked_model;

    fn small_config(m: usize, n: usize, t: usize) -> RunConfig {
        let model = make_spiked_model(10, 2, &[6.0, 5.0], 1.0, 3).unwrap();
        RunConfig::new(DataSource::synthetic(model), m, n, t, 2, 11)
    }

    #[test]
    fn single_node_single_round_reduces_to_full_pca() {
        let report = run_stream(&small_config(1, 60, 1)).unwrap();
        let a = report.final_error(Algorithm::Odpca).unwrap();
        let b = report.final_error(Algorithm::Full).unwrap();
        assert!((a - b).abs() <= 1e-8);
    }

    #[test]
    fn comm_entries_closed_forms() {
        let mut cfg = small_config(3, 20, 4);
        cfg.surplus = 2;
        let report = run_stream(&cfg).unwrap();
        let (t, m, d, p) = (4u64, 3u64, 10u64, 4u64);
        assert_eq!(
            report.get(Algorithm::Odpca).unwrap().comm_entries,
            t * m * d * p
        );
        assert_eq!(report.get(Algorithm::Dpca).unwrap().comm_entries, m * d * p);
        assert_eq!(
            report.get(Algorithm::Baseline).unwrap().comm_entries,
            m * d * (d + 1)
        );
    }

    #[test]
    fn every_algorithm_consumes_the_same_samples() {
        let report = run_stream(&small_config(3, 15, 4)).unwrap();
        let digests: Vec<u64> = report.algorithms.iter().map(|a| a.data_digest).collect();
        assert!(digests.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn reports_are_deterministic_apart_from_timing() {
        let a = run_stream(&small_config(2, 20, 3)).unwrap();
        let b = run_stream(&small_config(2, 20, 3)).unwrap();
        for (x, y) in a.algorithms.iter().zip(&b.algorithms) {
            assert_eq!(x.final_error, y.final_error);
            assert_eq!(x.basis, y.basis);
        }
        assert_eq!(
            a.odpca.as_ref().unwrap().round_errors,
            b.odpca.as_ref().unwrap().round_errors
        );
    }

    #[test]
    fn round_errors_are_bounded() {
        let report = run_stream(&small_config(2, 10, 5)).unwrap();
        let bound = (2.0f64 * 2.0).sqrt();
        let errs = report.odpca.unwrap().round_errors.unwrap();
        assert_eq!(errs.len(), 5);
        assert!(errs.iter().all(|e| *e >= 0.0 && *e <= bound));
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = small_config(2, 10, 2);
        cfg.surplus = 9;
        assert!(matches!(run_stream(&cfg), Err(Error::Argument(_))));
        let mut cfg = small_config(2, 10, 2);
        cfg.nodes = 0;
        assert!(run_stream(&cfg).is_err());
        let mut cfg = small_config(2, 10, 2);
        cfg.ambient_dim = 11;
        assert!(run_stream(&cfg).is_err());
    }

    #[test]
    fn exhausted_dataset_is_an_ingestion_error() {
        let data = DenseMatrix::from_fn(10, 3, |i, j| (i + j) as f64);
        let source = DataSource::Matrix {
            data: Arc::new(data),
            center_batches: false,
            label: "tiny".into(),
        };
        let cfg = RunConfig::new(source, 2, 3, 2, 1, 0);
        assert!(matches!(run_stream(&cfg), Err(Error::Ingestion(_))));
    }

    #[test]
    fn dataset_runs_have_no_errors_but_finish() {
        let model = make_spiked_model(6, 1, &[5.0], 1.0, 0).unwrap();
        let data = sample_gaussian(&model, 40, &mut SeededStream::new(1));
        let source = DataSource::Matrix {
            data: Arc::new(data),
            center_batches: true,
            label: "sampled".into(),
        };
        let report = run_stream(&RunConfig::new(source, 2, 5, 4, 1, 0)).unwrap();
        assert!(report.algorithms.iter().all(|a| a.final_error.is_none()));
        assert!(report.odpca.unwrap().round_errors.is_none());
    }

    #[test]
    fn report_rows_cover_rounds_and_summaries() {
        let report = run_stream(&small_config(2, 10, 3)).unwrap();
        let rows = report.rows();
        assert_eq!(rows.len(), 3 + 4);
        assert_eq!(rows[0].round, Some(1));
        assert_eq!(rows[3].algorithm, "odpca");
        assert_eq!(rows[3].round, None);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!("pca".parse::<Algorithm>().is_err());
    }

    #[test]
    fn timing_rows_per_surplus() {
        let mut cfg = small_config(2, 10, 3);
        cfg.algorithms = vec![Algorithm::Odpca, Algorithm::Dpca];
        let rows = timing_probe(&cfg, &[0, 1, 2], 3).unwrap();
        assert_eq!(rows.len(), 6);
        assert!(rows.iter().all(|r| r.total_ms >= 0.0 && r.local_ms >= 0.0));
        assert_eq!(rows[0].local_batch_rows, 10);
        assert_eq!(rows[1].local_batch_rows, 30);
        assert!(timing_probe(&cfg, &[0], 2).is_err());
    }
}
