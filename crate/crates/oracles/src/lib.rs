//! Reference computations for the odpca test suites.
//!
//! Everything here works on plain `Vec<Vec<f64>>` matrices and shares no code
//! with the library under test, so agreement between the two is meaningful.

pub type Mat = Vec<Vec<f64>>;

/// SplitMix64; used only to generate test inputs.
#[derive(Debug, Clone)]
pub struct SplitMix(u64);

impl SplitMix {
    pub fn new(seed: u64) -> Self {
        SplitMix(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.uniform() * n as f64) as usize % n
    }
}

pub fn random_symmetric(rng: &mut SplitMix, d: usize, scale: f64) -> Mat {
    let mut a = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let v = scale * rng.normal();
            a[i][j] = v;
            a[j][i] = v;
        }
    }
    a
}

pub fn transpose(a: &Mat) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    (0..a[0].len())
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|p| row[p] * b[p][j]).sum())
                .collect()
        })
        .collect()
}

pub fn frobenius(a: &Mat) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

/// Classical Gram-Schmidt on the columns of a d×k matrix (inputs are assumed
/// well conditioned).
pub fn gram_schmidt(a: &Mat) -> Mat {
    let d = a.len();
    let k = a[0].len();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let mut v: Vec<f64> = (0..d).map(|i| a[i][j]).collect();
        for _ in 0..2 {
            for q in &cols {
                let dot: f64 = v.iter().zip(q).map(|(x, y)| x * y).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(norm > 1e-8, "gram_schmidt: dependent columns");
        cols.push(v.into_iter().map(|x| x / norm).collect());
    }
    (0..d)
        .map(|i| cols.iter().map(|c| c[i]).collect())
        .collect()
}

/// Random d×k matrix with orthonormal columns.
pub fn random_basis(rng: &mut SplitMix, d: usize, k: usize) -> Mat {
    let a: Mat = (0..d)
        .map(|_| (0..k).map(|_| rng.normal()).collect())
        .collect();
    gram_schmidt(&a)
}

/// Dense projector U Uᵀ.
pub fn projector(u: &Mat) -> Mat {
    matmul(u, &transpose(u))
}

/// ‖UUᵀ − VVᵀ‖_F from explicitly formed projectors.
pub fn dense_projection_distance(u: &Mat, v: &Mat) -> f64 {
    frobenius(&sub(&projector(u), &projector(v)))
}

/// Householder reduction to tridiagonal form; returns (diagonal, subdiagonal).
pub fn tridiagonalize(a: &Mat) -> (Vec<f64>, Vec<f64>) {
    let n = a.len();
    let mut a = a.clone();
    for k in 0..n.saturating_sub(2) {
        let x: Vec<f64> = (k + 1..n).map(|i| a[i][k]).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|t| t * t).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for t in v.iter_mut() {
            *t /= vnorm;
        }
        // A <- H A H with H = I - 2 v vᵀ acting on indices k+1..n.
        for col in 0..n {
            let dot: f64 = (0..v.len()).map(|p| v[p] * a[k + 1 + p][col]).sum();
            for p in 0..v.len() {
                a[k + 1 + p][col] -= 2.0 * v[p] * dot;
            }
        }
        for row in a.iter_mut() {
            let dot: f64 = (0..v.len()).map(|p| row[k + 1 + p] * v[p]).sum();
            for p in 0..v.len() {
                row[k + 1 + p] -= 2.0 * dot * v[p];
            }
        }
    }
    let diag = (0..n).map(|i| a[i][i]).collect();
    let off = (0..n.saturating_sub(1)).map(|i| a[i + 1][i]).collect();
    (diag, off)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`
/// (sign changes in the Sturm sequence of leading principal minors).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut q = diag[0] - x;
    if q == 0.0 {
        q = -tiny;
    }
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        q = diag[i] - x - off[i - 1] * off[i - 1] / q;
        if q == 0.0 {
            q = -tiny;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// All eigenvalues of a symmetric matrix, descending, as roots of the
/// characteristic polynomial located by Sturm bisection.
pub fn bisection_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let (diag, off) = tridiagonalize(a);
    let mut radius: f64 = 0.0;
    for i in 0..n {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < n { off[i].abs() } else { 0.0 };
        radius = radius.max(diag[i].abs() + left + right);
    }
    let bound = radius + 1.0;
    let tol = 1e-14 * bound;
    let mut ascending = Vec::with_capacity(n);
    for j in 0..n {
        // j-th smallest: smallest x with count(x) > j.
        let (mut lo, mut hi) = (-bound, bound);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(&diag, &off, mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        ascending.push(0.5 * (lo + hi));
    }
    ascending.reverse();
    ascending
}

/// Squared-distance k-means cost of a fixed labelling (centers = cluster means).
pub fn partition_cost(points: &Mat, labels: &[usize], k: usize) -> f64 {
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    points
        .iter()
        .zip(labels)
        .map(|(p, &l)| {
            p.iter()
                .zip(&sums[l])
                .map(|(v, s)| {
                    let c = s / counts[l] as f64;
                    (v - c) * (v - c)
                })
                .sum::<f64>()
        })
        .sum()
}

/// Optimal k-means cost by enumerating every labelling with no empty cluster.
/// Exponential; meant for n ≤ 10.
pub fn exhaustive_kmeans_cost(points: &Mat, k: usize) -> f64 {
    let n = points.len();
    assert!(k >= 1 && k <= n && n <= 12);
    let total = (k as u64).pow(n as u32);
    let mut best = f64::INFINITY;
    let mut labels = vec![0usize; n];
    for code in 0..total {
        let mut c = code;
        let mut seen = vec![false; k];
        for l in labels.iter_mut() {
            *l = (c % k as u64) as usize;
            seen[*l] = true;
            c /= k as u64;
        }
        if seen.iter().all(|&s| s) {
            best = best.min(partition_cost(points, &labels, k));
        }
    }
    best
}

/// H(u) for unit vectors: mean over i of ‖uuᵀ − v_i v_iᵀ‖_F² = 2 − 2(uᵀv_i)².
pub fn h_rank_one(u: &[f64], lines: &[Vec<f64>]) -> f64 {
    lines
        .iter()
        .map(|v| {
            let c: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
            2.0 - 2.0 * c * c
        })
        .sum::<f64>()
        / lines.len() as f64
}

/// Unit vectors covering the sphere in R^d for d ∈ {2, 3}. d = 2 uses a
/// half-circle of angles, d = 3 a Fibonacci lattice on the full sphere.
pub fn sphere_grid(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        2 => (0..count)
            .map(|i| {
                let th = std::f64::consts::PI * i as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * i as f64;
                    vec![r * phi.cos(), r * phi.sin(), z]
                })
                .collect()
        }
        _ => panic!("sphere_grid supports d = 2 or 3"),
    }
}

/// Grid-search minimizer of H over unit vectors.
pub fn grid_h_minimizer(lines: &[Vec<f64>], count: usize) -> Vec<f64> {
    let d = lines[0].len();
    sphere_grid(d, count)
        .into_iter()
        .map(|u| (h_rank_one(&u, lines), u))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, u)| u)
        .unwrap()
}

/// Power iteration for the leading eigenvector of a small PSD matrix.
pub fn power_top_vector(a: &Mat, iters: usize) -> Vec<f64> {
    let d = a.len();
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 0.1 * i as f64).collect();
    for _ in 0..iters {
        let w: Vec<f64> = a
            .iter()
            .map(|row| row.iter().zip(&v).map(|(x, y)| x * y).sum())
            .collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.into_iter().map(|x| x / norm).collect();
    }
    v
}

/// ‖X − X U Uᵀ‖_F with the projector formed densely.
pub fn dense_lowrank_error(x: &Mat, u: &Mat) -> f64 {
    frobenius(&sub(x, &matmul(x, &projector(u))))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_on_diagonal() {
        let a = vec![
            vec![3.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ];
        let ev = bisection_eigenvalues(&a);
        for (got, want) in ev.iter().zip([3.0, 2.0, -1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn bisection_on_known_two_by_two() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let ev = bisection_eigenvalues(&vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((ev[0] - 3.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_trace_and_frobenius() {
        let mut rng = SplitMix::new(4);
        let a = random_symmetric(&mut rng, 7, 1.0);
        let ev = bisection_eigenvalues(&a);
        let trace: f64 = (0..7).map(|i| a[i][i]).sum();
        assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-10);
        let fro2: f64 = ev.iter().map(|v| v * v).sum();
        assert!((fro2 - frobenius(&a).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn exhaustive_two_pairs() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.0, 2.0],
            vec![10.0, 0.0],
            vec![10.0, 2.0],
        ];
        assert!((exhaustive_kmeans_cost(&pts, 2) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn grid_finds_common_line() {
        let s = 0.5f64.sqrt();
        let lines = vec![vec![s, s], vec![s, s]];
        let u = grid_h_minimizer(&lines, 10_000);
        assert!((u[0].abs() - s).abs() < 1e-3);
    }

    #[test]
    fn basis_is_orthonormal() {
        let mut rng = SplitMix::new(1);
        let u = random_basis(&mut rng, 6, 3);
        let g = matmul(&transpose(&u), &u);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g[i][j] - want).abs() < 1e-12);
            }
        }
    }
}
