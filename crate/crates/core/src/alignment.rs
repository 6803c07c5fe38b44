//! Spectral clustering used to make communities contiguous before the tree
//! search, plus an eigengap estimate of the number of communities.

use faer::{Mat, MatRef};
use rand::Rng as _;

use crate::eigen::sym_eig;
use crate::error::{Error, Result};
use crate::graph::{EigenvalueVector, Permutation};
use crate::rng;

pub const KMEANS_RESTARTS: usize = 20;
pub const KMEANS_MAX_ITER: usize = 300;
/// Fresh seedings a restart may try after producing an empty cluster.
pub const KMEANS_MAX_RESEEDS: usize = 10;

/// Eigenvalues at or above `1 − BULK_DELTA` count as bulk in [`estimate_m`].
pub const BULK_DELTA: f64 = 0.1;
/// Smallest eigengap [`estimate_m`] accepts as community structure.
pub const MIN_GAP: f64 = 0.05;

/// Cluster id per node (0-based) and per-cluster degree volume.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAssignment {
    pub labels: Vec<usize>,
    pub volumes: Vec<f64>,
}

impl ClusterAssignment {
    pub fn num_clusters(&self) -> usize {
        self.volumes.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_clusters()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// Eigenvectors of the `m` largest eigenvalues, largest first, as columns.
pub fn spectral_embed(a_hat: MatRef<'_, f64>, m: usize) -> Result<Mat<f64>> {
    let n = a_hat.nrows();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "cannot embed {n} nodes in {m} dimensions"
        )));
    }
    let eig = sym_eig(a_hat)?;
    Ok(Mat::from_fn(n, m, |i, k| eig.vectors[(i, n - 1 - k)]))
}

/// k-means on the row-normalized embedding. Volumes sum `degrees` per
/// cluster. The best of [`KMEANS_RESTARTS`] k-means++ runs wins; restart `r`
/// uses stream `r` of `seed`.
pub fn cluster_nodes(
    embedding: MatRef<'_, f64>,
    degrees: &[f64],
    m: usize,
    seed: u64,
) -> Result<ClusterAssignment> {
    let n = embedding.nrows();
    if degrees.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: degrees.len(),
        });
    }
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "cannot form {m} clusters from {n} points"
        )));
    }
    let dim = embedding.ncols();
    let mut points = vec![0.0; n * dim];
    for i in 0..n {
        let row = &mut points[i * dim..(i + 1) * dim];
        for (k, x) in row.iter_mut().enumerate() {
            *x = embedding[(i, k)];
            if !x.is_finite() {
                return Err(Error::InvalidMatrix(format!(
                    "embedding entry ({i}, {k}) is not finite"
                )));
            }
        }
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm >= 1e-12 {
            row.iter_mut().for_each(|x| *x /= norm);
        } else {
            row.fill(0.0);
        }
    }
    let data = Points { dim, xs: &points };

    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 0..KMEANS_RESTARTS {
        let mut rng = rng::stream(seed, r as u64);
        let run = (0..=KMEANS_MAX_RESEEDS).find_map(|_| lloyd(&data, m, &mut rng));
        if let Some((obj, labels)) = run {
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, labels));
            }
        }
    }
    let (_, labels) = best.ok_or_else(|| {
        Error::Clustering(format!(
            "every k-means restart left a cluster empty (m = {m}, n = {n})"
        ))
    })?;
    let mut volumes = vec![0.0; m];
    for (i, &l) in labels.iter().enumerate() {
        volumes[l] += degrees[i];
    }
    Ok(ClusterAssignment { labels, volumes })
}

struct Points<'a> {
    dim: usize,
    xs: &'a [f64],
}

impl Points<'_> {
    fn len(&self) -> usize {
        self.xs.len() / self.dim
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// One seeded Lloyd run; `None` if a cluster ends up empty.
fn lloyd(data: &Points<'_>, m: usize, rng: &mut rng::Rng) -> Option<(f64, Vec<usize>)> {
    let n = data.len();
    let dim = data.dim;
    let mut centers = plus_plus(data, m, rng);
    let mut labels = vec![usize::MAX; n];
    for _ in 0..KMEANS_MAX_ITER {
        let mut changed = false;
        for (i, label) in labels.iter_mut().enumerate() {
            let x = data.row(i);
            let nearest = (0..m)
                .map(|c| (c, dist2(x, &centers[c * dim..(c + 1) * dim])))
                .fold(
                    (0, f64::INFINITY),
                    |acc, cur| if cur.1 < acc.1 { cur } else { acc },
                )
                .0;
            if *label != nearest {
                *label = nearest;
                changed = true;
            }
        }
        let mut counts = vec![0usize; m];
        centers.fill(0.0);
        for (i, &l) in labels.iter().enumerate() {
            counts[l] += 1;
            for (c, x) in centers[l * dim..(l + 1) * dim].iter_mut().zip(data.row(i)) {
                *c += x;
            }
        }
        if counts.contains(&0) {
            return None;
        }
        for (c, &k) in centers.chunks_mut(dim).zip(&counts) {
            c.iter_mut().for_each(|x| *x /= k as f64);
        }
        if !changed {
            break;
        }
    }
    let objective = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| dist2(data.row(i), &centers[l * dim..(l + 1) * dim]))
        .sum();
    Some((objective, labels))
}

/// k-means++ seeding: each new center is drawn with probability proportional
/// to its squared distance from the nearest chosen center.
fn plus_plus(data: &Points<'_>, m: usize, rng: &mut rng::Rng) -> Vec<f64> {
    let n = data.len();
    let dim = data.dim;
    let mut centers = Vec::with_capacity(m * dim);
    centers.extend_from_slice(data.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n)
        .map(|i| dist2(data.row(i), &centers[..dim]))
        .collect();
    for _ in 1..m {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            d2.iter()
                .position(|&w| {
                    u -= w;
                    u < 0.0
                })
                .unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap_or(n - 1))
        } else {
            rng.random_range(0..n)
        };
        let c = data.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(dist2(data.row(i), &c));
        }
        centers.extend_from_slice(&c);
    }
    centers
}

/// Relabelling that lists clusters by descending volume (ties: the cluster
/// holding the smaller original index first), nodes inside a cluster by
/// original index.
pub fn canonical_permutation(assignment: &ClusterAssignment) -> Result<Permutation> {
    let m = assignment.num_clusters();
    let mut first = vec![usize::MAX; m];
    for (i, &l) in assignment.labels.iter().enumerate() {
        if l >= m {
            return Err(Error::InvalidParameter(format!(
                "node {i} has label {l} but there are {m} clusters"
            )));
        }
        first[l] = first[l].min(i);
    }
    let mut clusters: Vec<usize> = (0..m).collect();
    clusters.sort_by(|&a, &b| {
        assignment.volumes[b]
            .total_cmp(&assignment.volumes[a])
            .then(first[a].cmp(&first[b]))
    });
    let mut order = Vec::with_capacity(assignment.labels.len());
    for c in clusters {
        order.extend(
            assignment
                .labels
                .iter()
                .enumerate()
                .filter(|&(_, &l)| l == c)
                .map(|(i, _)| i),
        );
    }
    Permutation::from_order(order)
}

/// Eigengap estimate of the number of communities from an ascending
/// Laplacian spectrum.
///
/// Returns the 1-based `k ≤ n/2` with the widest gap `λ_{k+1} − λ_k` among
/// those whose lower eigenvalue `λ_k` lies below the bulk edge
/// `1 − BULK_DELTA`; 1 if no such gap exceeds [`MIN_GAP`].
pub fn estimate_m(lambda: &EigenvalueVector) -> usize {
    let v = lambda.as_slice();
    let n = v.len();
    let mut best = (1, MIN_GAP);
    for k in 1..=n / 2 {
        if k >= n || v[k - 1] >= 1.0 - BULK_DELTA {
            break;
        }
        let gap = v[k] - v[k - 1];
        if gap > best.1 {
            best = (k, gap);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{normalized_adjacency, AdjacencyMatrix};
    use crate::sbm::{population_mean, SbmSpec};

    /// Fraction of nodes labelled consistently with `truth` under the best
    /// matching of two labels (brute force for two clusters).
    fn agreement2(labels: &[usize], truth: &[usize]) -> f64 {
        let same = labels.iter().zip(truth).filter(|(a, b)| a == b).count();
        let n = labels.len();
        same.max(n - same) as f64 / n as f64
    }

    fn two_block_embedding() -> (Mat<f64>, Vec<usize>) {
        let spec = SbmSpec::new(&[7, 5], vec![0.8, 0.6], 0.1).unwrap();
        let a = AdjacencyMatrix::new(population_mean(&spec).into_inner()).unwrap();
        (
            spectral_embed(normalized_adjacency(&a).as_ref(), 2).unwrap(),
            spec.labels(),
        )
    }

    #[test]
    fn embedding_is_constant_on_blocks() {
        let (emb, truth) = two_block_embedding();
        for i in 0..emb.nrows() {
            for j in 0..emb.nrows() {
                if truth[i] == truth[j] {
                    for k in 0..2 {
                        assert!((emb[(i, k)] - emb[(j, k)]).abs() < 1e-8);
                    }
                }
            }
        }
        // Perron vector of a connected nonnegative matrix
        let spec = SbmSpec::new(&[4, 4], vec![0.5, 0.7], 0.2).unwrap();
        let a = AdjacencyMatrix::new(population_mean(&spec).into_inner()).unwrap();
        let e1 = spectral_embed(normalized_adjacency(&a).as_ref(), 1).unwrap();
        assert!((0..8).all(|i| e1[(i, 0)] > 0.0));
        assert!(spectral_embed(a.entries(), 9).is_err());
        let id = Mat::<f64>::identity(3, 3);
        assert_eq!(spectral_embed(id.as_ref(), 2).unwrap().ncols(), 2);
    }

    #[test]
    fn clusters_separated_clouds() {
        let emb = Mat::from_fn(8, 2, |i, k| match (i < 4, k) {
            (true, 0) | (false, 1) => 1.0 + 0.01 * i as f64,
            _ => 0.01,
        });
        let a = cluster_nodes(emb.as_ref(), &[1.0; 8], 2, 0).unwrap();
        assert_eq!(agreement2(&a.labels, &[0, 0, 0, 0, 1, 1, 1, 1]), 1.0);
        assert_eq!(a.volumes.iter().sum::<f64>(), 8.0);

        let same = Mat::from_fn(5, 2, |_, _| 0.3);
        let one = cluster_nodes(same.as_ref(), &[1.0; 5], 1, 4).unwrap();
        assert_eq!(one.labels, vec![0; 5]);
        assert!(matches!(
            cluster_nodes(same.as_ref(), &[1.0; 5], 2, 4),
            Err(Error::Clustering(_))
        ));
    }

    #[test]
    fn clusters_noisy_two_block_embedding() {
        let (emb, truth) = two_block_embedding();
        let mut noisy = Mat::from_fn(240, 2, |i, k| emb[(i % 12, k)]);
        let truth: Vec<usize> = (0..240).map(|i| truth[i % 12]).collect();
        let mut r = rng::stream(99, 0);
        for i in 0..240 {
            if r.random::<f64>() < 0.05 {
                for k in 0..2 {
                    noisy[(i, k)] += r.random_range(-0.2..0.2);
                }
            }
        }
        let a = cluster_nodes(noisy.as_ref(), &vec![1.0; 240], 2, 7).unwrap();
        assert!(agreement2(&a.labels, &truth) >= 0.95);
        let b = cluster_nodes(noisy.as_ref(), &vec![1.0; 240], 2, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn canonical_permutation_examples() {
        let single = ClusterAssignment {
            labels: vec![0; 4],
            volumes: vec![3.0],
        };
        assert!(canonical_permutation(&single).unwrap().is_identity());

        let two = ClusterAssignment {
            labels: vec![0, 1, 0, 1],
            volumes: vec![10.0, 20.0],
        };
        let p = canonical_permutation(&two).unwrap();
        assert_eq!(
            (0..4).map(|k| p.preimage(k)).collect::<Vec<_>>(),
            vec![1, 3, 0, 2]
        );

        let tied = ClusterAssignment {
            labels: vec![1, 0, 1, 0],
            volumes: vec![5.0, 5.0],
        };
        let p = canonical_permutation(&tied).unwrap();
        assert_eq!(p.preimage(0), 0);
    }

    #[test]
    fn estimate_m_examples() {
        let ev = |v: Vec<f64>| EigenvalueVector::new(v).unwrap();
        let mut limit = vec![0.0, 0.4, 0.4, 0.4];
        limit.extend(std::iter::repeat_n(1.0, 12));
        assert_eq!(estimate_m(&ev(limit)), 4);
        assert_eq!(estimate_m(&ev(vec![1.0; 10])), 1);
        let mut flat = vec![0.0];
        flat.extend((1..10).map(|k| 0.9 + 0.01 * k as f64));
        assert_eq!(estimate_m(&ev(flat)), 1);
        assert_eq!(estimate_m(&ev(vec![0.0])), 1);
    }
}
