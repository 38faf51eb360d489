//! Dataset ingestion (dense CSV, sparse libsvm), centering, partitioning of a
//! sample stream into the node × round grid, and report/matrix writers.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::datagen::{lane, lane_rng};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Default refusal threshold for densified inputs, in bytes.
pub const DEFAULT_MEMORY_CAP: u64 = 8 << 30;

/// First line of every report CSV.
pub const REPORT_SCHEMA_LINE: &str = "# odpca-report schema=1";
pub const REPORT_HEADER: &str = "algorithm,round,error,comm_entries,wall_ms";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Libsvm,
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "libsvm" | "svmlight" => Ok(Self::Libsvm),
            other => Err(Error::argument(format!("unknown dataset format `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    #[default]
    None,
    /// Subtract the column means of the loaded matrix.
    Global,
    /// Subtract each batch's own column means after partitioning.
    PerBatch,
}

impl FromStr for Centering {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "global" => Ok(Self::Global),
            "per_batch" | "per-batch" => Ok(Self::PerBatch),
            other => Err(Error::argument(format!("unknown centering mode `{other}`"))),
        }
    }
}

impl fmt::Display for Centering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::Global => "global",
            Self::PerBatch => "per_batch",
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub format: DatasetFormat,
    pub center: Centering,
    pub limit_rows: Option<usize>,
    pub shuffle_seed: Option<u64>,
    /// CSV only: skip the first non-empty line.
    pub has_header: bool,
    /// libsvm only: ambient dimension; inferred from the largest index when absent.
    pub dim: Option<usize>,
    pub memory_cap_bytes: u64,
}

impl DatasetSpec {
    pub fn new(path: impl Into<PathBuf>, format: DatasetFormat) -> Self {
        Self {
            path: path.into(),
            format,
            center: Centering::None,
            limit_rows: None,
            shuffle_seed: None,
            has_header: false,
            dim: None,
            memory_cap_bytes: DEFAULT_MEMORY_CAP,
        }
    }
}

/// Reads the dataset into a dense `N × d` matrix, then shuffles rows and
/// applies global centering as requested. Per-batch centering is left to
/// [`StreamGrid::center_batches`].
pub fn load_dataset(spec: &DatasetSpec) -> Result<DenseMatrix> {
    let file = File::open(&spec.path)?;
    let reader = BufReader::new(file);
    let mut x = match spec.format {
        DatasetFormat::Csv => parse_csv(reader, spec)?,
        DatasetFormat::Libsvm => parse_libsvm(reader, spec)?,
    };
    if let Some(seed) = spec.shuffle_seed {
        x = shuffle_rows(&x, seed);
    }
    if spec.center == Centering::Global {
        let means = x.column_means();
        x.subtract_row_vector(&means)?;
    }
    Ok(x)
}

fn parse_err(spec: &DatasetSpec, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: spec.path.clone(),
        line,
        message: message.into(),
    }
}

fn check_cap(spec: &DatasetSpec, rows: usize, cols: usize) -> Result<()> {
    let bytes = (rows as u64).saturating_mul(cols as u64).saturating_mul(8);
    if bytes > spec.memory_cap_bytes {
        return Err(Error::Ingestion(format!(
            "dense {rows}x{cols} matrix needs ~{bytes} bytes, above the {} byte cap",
            spec.memory_cap_bytes
        )));
    }
    Ok(())
}

fn parse_csv(reader: impl BufRead, spec: &DatasetSpec) -> Result<DenseMatrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0usize;
    let mut header_pending = spec.has_header;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if header_pending {
            header_pending = false;
            continue;
        }
        if spec.limit_rows.is_some_and(|l| rows >= l) {
            break;
        }
        let start = data.len();
        for field in trimmed.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                parse_err(spec, line_no, format!("invalid number `{}`", field.trim()))
            })?;
            if !v.is_finite() {
                return Err(parse_err(spec, line_no, "non-finite value"));
            }
            data.push(v);
        }
        let width = data.len() - start;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(parse_err(
                    spec,
                    line_no,
                    format!("row has {width} fields, expected {c}"),
                ))
            }
            _ => {}
        }
        rows += 1;
        check_cap(spec, rows, width)?;
    }
    DenseMatrix::new(rows, cols.unwrap_or(0), data)
}

fn parse_libsvm(reader: impl BufRead, spec: &DatasetSpec) -> Result<DenseMatrix> {
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if spec.limit_rows.is_some_and(|l| entries.len() >= l) {
            break;
        }
        let mut tokens = content.split_whitespace();
        // label is discarded, but must look like a number
        let label = tokens.next().unwrap_or("");
        if label.parse::<f64>().is_err() {
            return Err(parse_err(spec, line_no, format!("invalid label `{label}`")));
        }
        let mut row = Vec::new();
        for tok in tokens {
            let (i, v) = tok.split_once(':').ok_or_else(|| {
                parse_err(spec, line_no, format!("expected idx:val, got `{tok}`"))
            })?;
            if i == "qid" {
                continue;
            }
            let i: usize = i
                .parse()
                .map_err(|_| parse_err(spec, line_no, format!("invalid index `{i}`")))?;
            if i == 0 {
                return Err(parse_err(spec, line_no, "feature indices are 1-based"));
            }
            let v: f64 = v
                .parse()
                .map_err(|_| parse_err(spec, line_no, format!("invalid value `{v}`")))?;
            if !v.is_finite() {
                return Err(parse_err(spec, line_no, "non-finite value"));
            }
            if let Some(d) = spec.dim {
                if i > d {
                    return Err(parse_err(
                        spec,
                        line_no,
                        format!("index {i} exceeds dimension {d}"),
                    ));
                }
            }
            max_index = max_index.max(i);
            row.push((i - 1, v));
        }
        entries.push(row);
    }
    let d = spec.dim.unwrap_or(max_index);
    check_cap(spec, entries.len(), d)?;
    let mut x = DenseMatrix::zeros(entries.len(), d);
    for (r, row) in entries.iter().enumerate() {
        for &(j, v) in row {
            x.set(r, j, v);
        }
    }
    Ok(x)
}

/// Rows permuted by a seeded Fisher-Yates shuffle.
pub fn shuffle_rows(x: &DenseMatrix, seed: u64) -> DenseMatrix {
    let mut order: Vec<usize> = (0..x.rows()).collect();
    order.shuffle(&mut lane_rng(seed, lane::SHUFFLE));
    let mut data = Vec::with_capacity(x.as_slice().len());
    for &i in &order {
        data.extend_from_slice(x.row(i));
    }
    DenseMatrix::from_vec_unchecked(x.rows(), x.cols(), data)
}

/// Batches indexed by (node, round); node ℓ at round t holds source rows
/// `[(t·m + ℓ)·n, (t·m + ℓ + 1)·n)` (zero-based).
#[derive(Clone, Debug)]
pub struct StreamGrid {
    nodes: usize,
    rounds: usize,
    batch_size: usize,
    batches: Vec<DenseMatrix>,
}

impl StreamGrid {
    /// Assembles a grid from batches listed round-major (`t·m + ℓ`).
    pub fn from_batches(nodes: usize, rounds: usize, batches: Vec<DenseMatrix>) -> Result<Self> {
        if nodes == 0 || rounds == 0 || batches.len() != nodes * rounds {
            return Err(Error::argument(format!(
                "{} batches cannot fill a {nodes}x{rounds} grid",
                batches.len()
            )));
        }
        let (n, d) = (batches[0].rows(), batches[0].cols());
        if batches.iter().any(|b| b.rows() != n || b.cols() != d) {
            return Err(Error::dimension("grid batches must share one shape"));
        }
        Ok(Self {
            nodes,
            rounds,
            batch_size: n,
            batches,
        })
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    pub fn ambient_dim(&self) -> usize {
        self.batches[0].cols()
    }

    pub fn batch(&self, node: usize, round: usize) -> &DenseMatrix {
        &self.batches[round * self.nodes + node]
    }

    /// All node batches of one round, in node order.
    pub fn round_batches(&self, round: usize) -> &[DenseMatrix] {
        &self.batches[round * self.nodes..(round + 1) * self.nodes]
    }

    /// Source row range of batch (node, round).
    pub fn source_rows(&self, node: usize, round: usize) -> Range<usize> {
        let start = (round * self.nodes + node) * self.batch_size;
        start..start + self.batch_size
    }

    /// Everything node ℓ sees over the horizon, rounds in order.
    pub fn node_pool(&self, node: usize) -> DenseMatrix {
        let parts: Vec<&DenseMatrix> = (0..self.rounds).map(|t| self.batch(node, t)).collect();
        DenseMatrix::vstack(&parts).expect("grid batches share a width")
    }

    pub fn node_pools(&self) -> Vec<DenseMatrix> {
        (0..self.nodes).map(|l| self.node_pool(l)).collect()
    }

    /// All batches stacked in source order.
    pub fn pooled(&self) -> DenseMatrix {
        let parts: Vec<&DenseMatrix> = self.batches.iter().collect();
        DenseMatrix::vstack(&parts).expect("grid batches share a width")
    }

    /// Subtracts every batch's own column means.
    pub fn center_batches(&mut self) {
        for b in &mut self.batches {
            let means = b.column_means();
            b.subtract_row_vector(&means).expect("means match width");
        }
    }
}

/// Splits the first `m·n·T` rows of `x` row-contiguously into the grid.
pub fn partition_stream(x: &DenseMatrix, m: usize, n: usize, t: usize) -> Result<StreamGrid> {
    if m == 0 || n == 0 || t == 0 {
        return Err(Error::argument("m, n and T must all be positive"));
    }
    let needed = m * n * t;
    if x.rows() < needed {
        return Err(Error::Ingestion(format!(
            "stream needs {needed} rows (m={m}, n={n}, T={t}), source has {}",
            x.rows()
        )));
    }
    let batches = (0..m * t)
        .map(|cell| x.select_rows(cell * n..(cell + 1) * n))
        .collect::<Result<Vec<_>>>()?;
    StreamGrid::from_batches(m, t, batches)
}

/// Writes one matrix row per line with 17 significant digits, which
/// round-trips every finite `f64` exactly.
pub fn write_matrix_csv(path: &Path, x: &DenseMatrix) -> Result<()> {
    let mut w = std::io::BufWriter::new(File::create(path)?);
    for row in x.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// One line of the report CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub algorithm: String,
    /// `None` marks the per-algorithm summary row.
    pub round: Option<usize>,
    pub error: Option<f64>,
    pub comm_entries: u64,
    pub wall_ms: f64,
}

/// Writes the schema comment, the header and the rows.
pub fn write_report_csv(mut w: impl Write, rows: &[ReportRow]) -> Result<()> {
    writeln!(w, "{REPORT_SCHEMA_LINE}")?;
    writeln!(w, "{REPORT_HEADER}")?;
    for r in rows {
        let round = r
            .round
            .map_or_else(|| "final".to_string(), |t| t.to_string());
        let error = r.error.map_or_else(String::new, |e| format!("{e:.12e}"));
        writeln!(
            w,
            "{},{},{},{},{:.3}",
            r.algorithm, round, error, r.comm_entries, r.wall_ms
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_for(content: &str, format: DatasetFormat) -> (tempfile::TempDir, DatasetSpec) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("data");
        std::fs::write(&path, content).unwrap();
        (dir, DatasetSpec::new(path, format))
    }

    #[test]
    fn csv_basic() {
        let (_d, spec) = spec_for("1,2\n3,4", DatasetFormat::Csv);
        let x = load_dataset(&spec).unwrap();
        assert_eq!(
            x,
            DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap()
        );
    }

    #[test]
    fn csv_header_and_limit() {
        let (_d, mut spec) = spec_for("a,b\n1,2\n3,4\n5,6\n", DatasetFormat::Csv);
        spec.has_header = true;
        spec.limit_rows = Some(2);
        let x = load_dataset(&spec).unwrap();
        assert_eq!(
            x,
            DenseMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap()
        );
    }

    #[test]
    fn csv_errors_carry_line_numbers() {
        let (_d, spec) = spec_for("1,2\n3,x\n", DatasetFormat::Csv);
        match load_dataset(&spec) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let (_d, spec) = spec_for("1,2\n\n3\n", DatasetFormat::Csv);
        assert!(matches!(
            load_dataset(&spec),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn libsvm_densifies() {
        let (_d, mut spec) = spec_for("0 2:5\n", DatasetFormat::Libsvm);
        spec.dim = Some(3);
        let x = load_dataset(&spec).unwrap();
        assert_eq!(x, DenseMatrix::from_rows(&[[0.0, 5.0, 0.0]]).unwrap());

        let (_d, spec) = spec_for("1 1:1 4:2 # comment\n-1 2:3\n", DatasetFormat::Libsvm);
        let x = load_dataset(&spec).unwrap();
        assert_eq!(x.cols(), 4);
        assert_eq!(x.row(1), &[0.0, 3.0, 0.0, 0.0]);
    }

    #[test]
    fn libsvm_errors() {
        let (_d, spec) = spec_for("1 0:1\n", DatasetFormat::Libsvm);
        assert!(matches!(
            load_dataset(&spec),
            Err(Error::Parse { line: 1, .. })
        ));
        let (_d, spec) = spec_for("1 1:1\n1 3\n", DatasetFormat::Libsvm);
        assert!(matches!(
            load_dataset(&spec),
            Err(Error::Parse { line: 2, .. })
        ));
        let (_d, mut spec) = spec_for("1 5:1\n", DatasetFormat::Libsvm);
        spec.dim = Some(3);
        assert!(load_dataset(&spec).is_err());
    }

    #[test]
    fn memory_cap_refuses_large_loads() {
        let (_d, mut spec) = spec_for("1 1000:1\n", DatasetFormat::Libsvm);
        spec.memory_cap_bytes = 1000;
        assert!(matches!(load_dataset(&spec), Err(Error::Ingestion(_))));
    }

    #[test]
    fn global_centering_zeroes_means() {
        let (_d, mut spec) = spec_for("1,10\n2,20\n6,0\n", DatasetFormat::Csv);
        spec.center = Centering::Global;
        let x = load_dataset(&spec).unwrap();
        assert!(x.column_means().iter().all(|m| m.abs() < 1e-10));
    }

    #[test]
    fn shuffle_is_a_seeded_permutation() {
        let x = DenseMatrix::from_fn(20, 2, |i, j| (i * 2 + j) as f64);
        let a = shuffle_rows(&x, 3);
        assert_eq!(a, shuffle_rows(&x, 3));
        assert_ne!(a, x);
        let mut firsts: Vec<f64> = a.row_iter().map(|r| r[0]).collect();
        firsts.sort_by(f64::total_cmp);
        assert_eq!(firsts, x.column(0));
    }

    #[test]
    fn partition_layout() {
        let x = DenseMatrix::from_fn(5, 1, |i, _| i as f64);
        let g = partition_stream(&x, 2, 1, 2).unwrap();
        assert_eq!(g.batch(0, 0).row(0), &[0.0]);
        assert_eq!(g.batch(1, 0).row(0), &[1.0]);
        assert_eq!(g.batch(0, 1).row(0), &[2.0]);
        assert_eq!(g.batch(1, 1).row(0), &[3.0]);
        assert_eq!(g.pooled(), x.select_rows(0..4).unwrap());
        assert_eq!(g.node_pool(1).column(0), vec![1.0, 3.0]);
        assert!(matches!(
            partition_stream(&x, 2, 2, 2),
            Err(Error::Ingestion(_))
        ));
    }

    #[test]
    fn per_batch_centering() {
        let x = DenseMatrix::from_fn(8, 2, |i, j| (i * i + j) as f64);
        let mut g = partition_stream(&x, 2, 2, 2).unwrap();
        g.center_batches();
        for t in 0..2 {
            for l in 0..2 {
                assert!(g.batch(l, t).column_means().iter().all(|m| m.abs() < 1e-12));
            }
        }
    }

    #[test]
    fn matrix_csv_round_trip_is_bitwise() {
        let x = DenseMatrix::from_fn(4, 3, |i, j| {
            ((i + 1) as f64 / (j + 3) as f64).sin() * 1e-3 + 1.0 / 3.0
        });
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix_csv(&path, &x).unwrap();
        let back = load_dataset(&DatasetSpec::new(&path, DatasetFormat::Csv)).unwrap();
        assert!(x
            .as_slice()
            .iter()
            .zip(back.as_slice())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn report_csv_layout() {
        let rows = vec![
            ReportRow {
                algorithm: "odpca".into(),
                round: Some(1),
                error: Some(0.5),
                comm_entries: 10,
                wall_ms: 1.25,
            },
            ReportRow {
                algorithm: "full".into(),
                round: None,
                error: None,
                comm_entries: 0,
                wall_ms: 2.0,
            },
        ];
        let mut buf = Vec::new();
        write_report_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REPORT_SCHEMA_LINE);
        assert_eq!(lines[1], REPORT_HEADER);
        assert_eq!(lines[2], "odpca,1,5.000000000000e-1,10,1.250");
        assert_eq!(lines[3], "full,final,,0,2.000");
    }
}
