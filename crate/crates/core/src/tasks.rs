//! Downstream evaluations of an estimated subspace: rank-K reconstruction
//! error and k-means clustering cost on projected data.

use rand::Rng;

use crate::datagen::{lane, lane_rng};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::stats::median;
use crate::subspace::OrthonormalBasis;

/// Default Lloyd iteration cap used by [`clustering_cost_ratio`].
pub const DEFAULT_MAX_ITERS: usize = 100;

fn check_dims(x: &DenseMatrix, u: &OrthonormalBasis) -> Result<()> {
    if x.cols() != u.ambient_dim() {
        return Err(Error::dimension(format!(
            "data has {} columns, basis lives in R^{}",
            x.cols(),
            u.ambient_dim()
        )));
    }
    Ok(())
}

/// `X U`
pub fn project_data(x: &DenseMatrix, u: &OrthonormalBasis) -> Result<DenseMatrix> {
    check_dims(x, u)?;
    x.matmul(u.matrix())
}

/// `‖X − X U Uᵀ‖_F`, accumulated row by row as `x − U(Uᵀx)`.
pub fn lowrank_error(x: &DenseMatrix, u: &OrthonormalBasis) -> Result<f64> {
    check_dims(x, u)?;
    let coords = project_data(x, u)?;
    let basis = u.matrix();
    let mut ss = 0.0;
    for (row, c) in x.row_iter().zip(coords.row_iter()) {
        for (j, &xj) in row.iter().enumerate() {
            let fit: f64 = basis.row(j).iter().zip(c).map(|(a, b)| a * b).sum();
            ss += (xj - fit).powi(2);
        }
    }
    Ok(ss.sqrt())
}

/// `method_err / baseline_err`.
pub fn relative_error(method_err: f64, baseline_err: f64) -> Result<f64> {
    if !(baseline_err > 0.0) {
        return Err(Error::Degenerate(format!(
            "baseline error {baseline_err} leaves the ratio undefined"
        )));
    }
    Ok(method_err / baseline_err)
}

#[derive(Clone, Debug)]
pub struct ClusteringResult {
    /// `k × p`
    pub centers: DenseMatrix,
    pub assignments: Vec<usize>,
    /// Sum of squared distances from each point to its assigned center.
    pub cost: f64,
    /// Lloyd update steps performed.
    pub iterations: usize,
    /// Cost after seeding and after every update step.
    pub cost_history: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn assign(points: &DenseMatrix, centers: &DenseMatrix) -> (Vec<usize>, f64) {
    let mut labels = Vec::with_capacity(points.rows());
    let mut cost = 0.0;
    for p in points.row_iter() {
        let (best, d) = centers.row_iter().map(|c| sq_dist(p, c)).enumerate().fold(
            (0, f64::INFINITY),
            |acc, (j, d)| if d < acc.1 { (j, d) } else { acc },
        );
        labels.push(best);
        cost += d;
    }
    (labels, cost)
}

/// Cluster means for `labels`; an empty cluster is moved onto the point
/// farthest from its current center.
fn update_centers(points: &DenseMatrix, centers: &DenseMatrix, labels: &[usize]) -> DenseMatrix {
    let (k, p) = (centers.rows(), centers.cols());
    let mut sums = DenseMatrix::zeros(k, p);
    let mut counts = vec![0usize; k];
    for (row, &c) in points.row_iter().zip(labels) {
        counts[c] += 1;
        for (s, v) in sums.row_mut(c).iter_mut().zip(row) {
            *s += v;
        }
    }
    let mut taken = vec![false; points.rows()];
    for c in 0..k {
        if counts[c] > 0 {
            let inv = 1.0 / counts[c] as f64;
            sums.row_mut(c).iter_mut().for_each(|s| *s *= inv);
            continue;
        }
        let far = points
            .row_iter()
            .zip(labels)
            .enumerate()
            .filter(|(i, _)| !taken[*i])
            .map(|(i, (row, &l))| (i, sq_dist(row, centers.row(l))))
            .fold(
                (0, -1.0),
                |acc, (i, d)| if d > acc.1 { (i, d) } else { acc },
            )
            .0;
        taken[far] = true;
        sums.row_mut(c).copy_from_slice(points.row(far));
    }
    sums
}

/// Lloyd iterations from the given centers until the assignment stops
/// changing or `max_iters` updates have run.
pub fn lloyd_from_centers(
    points: &DenseMatrix,
    initial: DenseMatrix,
    max_iters: usize,
) -> Result<ClusteringResult> {
    if initial.cols() != points.cols() || initial.rows() == 0 {
        return Err(Error::dimension(format!(
            "{}x{} centers for points of width {}",
            initial.rows(),
            initial.cols(),
            points.cols()
        )));
    }
    let mut centers = initial;
    let (mut labels, mut cost) = assign(points, &centers);
    let mut history = vec![cost];
    let mut iterations = 0;
    while iterations < max_iters {
        let next = update_centers(points, &centers, &labels);
        let (next_labels, next_cost) = assign(points, &next);
        iterations += 1;
        centers = next;
        cost = next_cost;
        history.push(cost);
        if next_labels == labels {
            break;
        }
        labels = next_labels;
    }
    Ok(ClusteringResult {
        centers,
        assignments: labels,
        cost,
        iterations,
        cost_history: history,
    })
}

/// k-means++ seeding followed by Lloyd iterations.
pub fn kmeans_lloyd(
    points: &DenseMatrix,
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<ClusteringResult> {
    let n = points.rows();
    if k == 0 || n < k {
        return Err(Error::argument(format!(
            "cannot form {k} clusters from {n} points"
        )));
    }
    let mut rng = lane_rng(seed, lane::CLUSTERING);
    let mut chosen = vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = points
        .row_iter()
        .map(|p| sq_dist(p, points.row(chosen[0])))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in nearest.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            // every point coincides with a chosen center
            (0..n).find(|i| !chosen.contains(i)).expect("n ≥ k")
        };
        chosen.push(next);
        for (d, p) in nearest.iter_mut().zip(points.row_iter()) {
            *d = d.min(sq_dist(p, points.row(next)));
        }
    }
    let init = DenseMatrix::from_fn(k, points.cols(), |c, j| points.get(chosen[c], j));
    lloyd_from_centers(points, init, max_iters)
}

/// Clustering cost measured in the original space: projected-space centers
/// are lifted back through `U` before distances to the raw rows are taken.
pub fn lifted_cost(
    x: &DenseMatrix,
    u: &OrthonormalBasis,
    result: &ClusteringResult,
) -> Result<f64> {
    check_dims(x, u)?;
    let lifted = result.centers.matmul(&u.matrix().transpose())?;
    Ok(x.row_iter()
        .zip(&result.assignments)
        .map(|(row, &c)| sq_dist(row, lifted.row(c)))
        .sum())
}

/// Median over `seeds` of the lifted k-means cost on `X·method` divided by
/// the lifted cost on `X·baseline`.
pub fn clustering_cost_ratio(
    method: &OrthonormalBasis,
    baseline: &OrthonormalBasis,
    x: &DenseMatrix,
    k: usize,
    seeds: &[u64],
) -> Result<f64> {
    if seeds.is_empty() {
        return Err(Error::argument("clustering ratio needs at least one seed"));
    }
    let cost = |u: &OrthonormalBasis, seed: u64| -> Result<f64> {
        let y = project_data(x, u)?;
        let r = kmeans_lloyd(&y, k, seed, DEFAULT_MAX_ITERS)?;
        lifted_cost(x, u, &r)
    };
    let mut ratios = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let base = cost(baseline, s)?;
        ratios.push(relative_error(cost(method, s)?, base)?);
    }
    Ok(median(&ratios).expect("at least one ratio"))
}
