use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use odpca::datagen::{sample_planted_clusters, SeededStream};
use odpca::harness::{
    build_grid, run_on_grid, run_stream, scaling_experiment, timing_probe, Algorithm, DataSource,
    RunConfig, RunReport, Sampler, ScaleAxis, TimingRow,
};
use odpca::io::{load_dataset, write_report_csv, Centering, DatasetSpec, ReportRow};
use odpca::tasks::{clustering_cost_ratio, lowrank_error, relative_error};
use odpca::{full_pca, make_spiked_model, SpikedModel};
use serde_json::{json, Value};

use crate::CommonArgs;

pub const SUMMARY_SCHEMA: &str = "odpca-summary/1";
pub const BENCH_SCHEMA_LINE: &str = "# odpca-bench schema=1";
pub const BENCH_HEADER: &str =
    "algorithm,projection_dim,local_ms,aggregate_ms,total_ms,total_std_ms,local_batch_rows,comm_entries,error";

const SCALING_FACTORS: [usize; 3] = [1, 2, 4];

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(odpca::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_argument_error() => 1,
            CliError::Core(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<odpca::Error> for CliError {
    fn from(e: odpca::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_algorithms(names: &[String]) -> Result<Vec<Algorithm>> {
    let mut out = Vec::new();
    for n in names {
        let a: Algorithm = n.trim().parse()?;
        if !out.contains(&a) {
            out.push(a);
        }
    }
    if out.is_empty() {
        return Err(usage("--algorithms must name at least one estimator"));
    }
    Ok(out)
}

fn single_surplus(args: &CommonArgs) -> Result<usize> {
    match args.z.as_slice() {
        [z] => Ok(*z),
        _ => Err(usage(
            "--Z takes a single value for this command; use `bench` to sweep",
        )),
    }
}

/// Spikes `K + 5, K + 4, …, 6` over a unit bulk; d = 50, K = 5 gives 10..6.
fn default_model(d: usize, k: usize, seed: u64) -> Result<SpikedModel> {
    let spikes: Vec<f64> = (0..k).map(|j| (5 + k - j) as f64).collect();
    Ok(make_spiked_model(d, k, &spikes, 1.0, seed)?)
}

fn centering(args: &CommonArgs) -> Result<Centering> {
    Ok(args.center.parse()?)
}

fn load(args: &CommonArgs, path: &Path) -> Result<DataSource> {
    let center = centering(args)?;
    let mut spec = DatasetSpec::new(path, args.format.parse()?);
    spec.center = center;
    spec.has_header = args.header;
    spec.limit_rows = args.limit_rows;
    spec.shuffle_seed = args.shuffle;
    spec.dim = args.d;
    if !(args.memory_cap_gb > 0.0) {
        return Err(usage("--memory-cap-gb must be positive"));
    }
    spec.memory_cap_bytes = (args.memory_cap_gb * (1u64 << 30) as f64) as u64;
    let data = load_dataset(&spec)?;
    Ok(DataSource::Matrix {
        data: Arc::new(data),
        center_batches: center == Centering::PerBatch,
        label: path.display().to_string(),
    })
}

fn synthetic(args: &CommonArgs) -> Result<(DataSource, SpikedModel)> {
    let d = args
        .d
        .ok_or_else(|| usage("either --dataset or --d is required"))?;
    let model = default_model(d, args.k, args.model_seed)?;
    let sampler = if args.sign_scrambled {
        Sampler::SignScrambled
    } else {
        Sampler::Gaussian
    };
    Ok((
        DataSource::Synthetic {
            model: Arc::new(model.clone()),
            sampler,
        },
        model,
    ))
}

fn config(args: &CommonArgs, source: DataSource) -> Result<RunConfig> {
    let mut cfg = RunConfig::new(source, args.m, args.n, args.t, args.k, args.seed);
    cfg.surplus = single_surplus(args)?;
    cfg.algorithms = parse_algorithms(&args.algorithms)?;
    cfg.validate()?;
    Ok(cfg)
}

fn open_out(args: &CommonArgs) -> Result<Box<dyn Write>> {
    Ok(match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn write_summary(args: &CommonArgs, summary: &Value) -> Result<()> {
    if let Some(p) = &args.out {
        let mut w = BufWriter::new(File::create(p.with_extension("json"))?);
        serde_json::to_writer_pretty(&mut w, summary)?;
        writeln!(w)?;
        w.flush()?;
    }
    Ok(())
}

fn timings(report: &RunReport) -> Value {
    let map: BTreeMap<&str, Value> = report
        .algorithms
        .iter()
        .map(|a| (a.algorithm.name(), json!(a.wall)))
        .collect();
    json!(map)
}

fn finals(report: &RunReport) -> Value {
    let map: BTreeMap<&str, Value> = report
        .algorithms
        .iter()
        .map(|a| {
            (
                a.algorithm.name(),
                json!({ "error": a.final_error, "comm_entries": a.comm_entries,
                        "local_batch_rows": a.local_batch_rows }),
            )
        })
        .collect();
    json!(map)
}

pub fn synth(args: &CommonArgs) -> Result<()> {
    if args.dataset.is_some() {
        return Err(usage("synth runs on a synthetic model; drop --dataset"));
    }
    let (source, model) = synthetic(args)?;
    let cfg = config(args, source)?;
    let report = run_stream(&cfg)?;

    let reps = args.reps.unwrap_or(1);
    let scaling = if reps >= 2 {
        Some(scaling_experiment(
            &cfg,
            &SCALING_FACTORS,
            reps,
            ScaleAxis::Horizon,
        )?)
    } else {
        None
    };

    let mut out = open_out(args)?;
    write_report_csv(&mut out, &report.rows())?;
    out.flush()?;

    let summary = json!({
        "schema": SUMMARY_SCHEMA,
        "command": "synth",
        "config": report.config,
        "spectrum": model.stats(),
        "final": finals(&report),
        "odpca": report.odpca,
        "scaling": scaling,
        "timings": timings(&report),
    });
    write_summary(args, &summary)
}

/// Data for `lowrank`/`kmeans`: the loaded dataset, or a synthetic sample.
fn task_source(args: &CommonArgs, planted: bool) -> Result<DataSource> {
    if let Some(path) = &args.dataset {
        return load(args, path);
    }
    let (source, model) = synthetic(args)?;
    if !planted {
        return Ok(source);
    }
    let k = args.clusters.unwrap_or(args.k);
    let n = args.m * args.n * args.t;
    let (x, _) = sample_planted_clusters(
        &model,
        k,
        args.separation,
        n,
        &mut SeededStream::new(args.seed),
    )?;
    Ok(DataSource::Matrix {
        data: Arc::new(x),
        center_batches: false,
        label: format!("planted(k={k}, separation={})", args.separation),
    })
}

pub fn lowrank(args: &CommonArgs) -> Result<()> {
    let source = task_source(args, false)?;
    let cfg = config(args, source)?;
    let grid = build_grid(&cfg)?;
    let report = run_on_grid(&cfg, &grid)?;
    let x = grid.pooled();
    let reference = lowrank_error(&x, &full_pca(&x, cfg.rank)?)?;

    let mut rows = Vec::new();
    let mut absolute = BTreeMap::new();
    for a in &report.algorithms {
        let err = lowrank_error(&x, &a.basis)?;
        absolute.insert(a.algorithm.name(), err);
        rows.push(ReportRow {
            algorithm: a.algorithm.name().to_string(),
            round: None,
            error: Some(relative_error(err, reference)?),
            comm_entries: a.comm_entries,
            wall_ms: a.wall.total_ms,
        });
    }
    let mut out = open_out(args)?;
    write_report_csv(&mut out, &rows)?;
    out.flush()?;

    let relative: BTreeMap<&str, Option<f64>> = rows
        .iter()
        .map(|r| (r.algorithm.as_str(), r.error))
        .collect();
    let summary = json!({
        "schema": SUMMARY_SCHEMA,
        "command": "lowrank",
        "config": report.config,
        "centering": centering(args)?.to_string(),
        "reference_error": reference,
        "absolute_error": absolute,
        "relative_error": relative,
        "final": finals(&report),
        "timings": timings(&report),
    });
    write_summary(args, &summary)
}

pub fn kmeans(args: &CommonArgs) -> Result<()> {
    let source = task_source(args, true)?;
    let cfg = config(args, source)?;
    let grid = build_grid(&cfg)?;
    let report = run_on_grid(&cfg, &grid)?;
    let x = grid.pooled();
    let reference = full_pca(&x, cfg.rank)?;
    let k = args.clusters.unwrap_or(args.k);
    let seeds: Vec<u64> = (0..args.reps.unwrap_or(5) as u64)
        .map(|s| args.seed.wrapping_add(s))
        .collect();

    let mut rows = Vec::new();
    for a in &report.algorithms {
        let ratio = clustering_cost_ratio(&a.basis, &reference, &x, k, &seeds)?;
        rows.push(ReportRow {
            algorithm: a.algorithm.name().to_string(),
            round: None,
            error: Some(ratio),
            comm_entries: a.comm_entries,
            wall_ms: a.wall.total_ms,
        });
    }
    let mut out = open_out(args)?;
    write_report_csv(&mut out, &rows)?;
    out.flush()?;

    let ratios: BTreeMap<&str, Option<f64>> = rows
        .iter()
        .map(|r| (r.algorithm.as_str(), r.error))
        .collect();
    let summary = json!({
        "schema": SUMMARY_SCHEMA,
        "command": "kmeans",
        "config": report.config,
        "centering": centering(args)?.to_string(),
        "clusters": k,
        "seeds": seeds,
        "cost_ratio": ratios,
        "final": finals(&report),
        "timings": timings(&report),
    });
    write_summary(args, &summary)
}

fn write_bench_csv(mut w: impl Write, rows: &[TimingRow]) -> Result<()> {
    writeln!(w, "{BENCH_SCHEMA_LINE}")?;
    writeln!(w, "{BENCH_HEADER}")?;
    for r in rows {
        let err = r
            .final_error
            .map_or_else(String::new, |e| format!("{e:.12e}"));
        writeln!(
            w,
            "{},{},{:.3},{:.3},{:.3},{:.3},{},{},{}",
            r.algorithm,
            r.projection_rank,
            r.local_ms,
            r.aggregate_ms,
            r.total_ms,
            r.total_std_ms,
            r.local_batch_rows,
            r.comm_entries,
            err
        )?;
    }
    Ok(())
}

pub fn bench(args: &CommonArgs) -> Result<()> {
    let source = match &args.dataset {
        Some(path) => load(args, path)?,
        None => synthetic(args)?.0,
    };
    let mut cfg = RunConfig::new(source, args.m, args.n, args.t, args.k, args.seed);
    cfg.algorithms = parse_algorithms(&args.algorithms)?;
    if args.z.is_empty() {
        return Err(usage("--Z needs at least one value"));
    }
    let reps = args.reps.unwrap_or(3);
    if reps < 3 {
        return Err(usage("bench needs --reps of at least 3"));
    }
    let rows = timing_probe(&cfg, &args.z, reps)?;

    let mut out = open_out(args)?;
    write_bench_csv(&mut out, &rows)?;
    out.flush()?;

    let summary = json!({
        "schema": SUMMARY_SCHEMA,
        "command": "bench",
        "surpluses": args.z,
        "repetitions": reps,
        "config": {
            "nodes": cfg.nodes, "batch_size": cfg.batch_size, "horizon": cfg.horizon,
            "rank": cfg.rank, "ambient_dim": cfg.ambient_dim, "seed": cfg.seed,
            "algorithms": cfg.algorithms,
        },
        "timings": rows,
    });
    write_summary(args, &summary)
}
