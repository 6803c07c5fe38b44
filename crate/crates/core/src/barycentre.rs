//! The spectral barycentre pipeline.
//!
//! Given `T` graphs on a common node set, the barycentre keeps the `M`
//! smallest mean Laplacian eigenvalues, sets the bulk to its limit 1, pairs
//! the result with a Soules basis found on the (community-aligned) sample mean
//! adjacency and maps the resulting Laplacian back to an adjacency matrix with
//! block-constant degree estimates.

use std::ops::Range;

use faer::{Mat, MatRef};

use crate::alignment::{
    canonical_permutation, cluster_nodes, estimate_m, spectral_embed, ClusterAssignment,
};
use crate::eigen::sym_eigvals;
use crate::error::{Error, Result};
use crate::graph::{
    normalized_adjacency, normalized_laplacian, permute_matrix, row_sums, AdjacencyMatrix,
    EigenvalueVector, NormalizedLaplacian, Permutation,
};
use crate::soules::{best_soules_basis, Leaf, SoulesBasis, SoulesTree};

/// Slack allowed above 1 for the last kept eigenvalue before the regularized
/// spectrum is flagged as non-monotone.
pub const MONOTONE_TOL: f64 = 1e-9;

/// Entrywise mean `(1/T) Σ_t A_t`.
pub fn sample_mean_adjacency(graphs: &[AdjacencyMatrix]) -> Result<Mat<f64>> {
    let first = graphs.first().ok_or(Error::Empty("graph list"))?;
    let n = first.n();
    let mut sum = Mat::<f64>::zeros(n, n);
    for g in graphs {
        if g.n() != n {
            return Err(Error::Dimension {
                expected: n,
                found: g.n(),
            });
        }
        sum += g.entries();
    }
    let t = graphs.len() as f64;
    Ok(Mat::from_fn(n, n, |i, j| sum[(i, j)] / t))
}

/// Componentwise mean of ascending spectra.
pub fn sample_mean_eigenvalues(spectra: &[EigenvalueVector]) -> Result<EigenvalueVector> {
    let first = spectra.first().ok_or(Error::Empty("spectrum list"))?;
    let n = first.len();
    let mut mean = vec![0.0; n];
    for s in spectra {
        if s.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: s.len(),
            });
        }
        for (m, x) in mean.iter_mut().zip(s.as_slice()) {
            *m += x;
        }
    }
    let t = spectra.len() as f64;
    mean.iter_mut().for_each(|m| *m /= t);
    // Guard the ascending invariant against rounding in the division.
    for k in 1..n {
        if mean[k] < mean[k - 1] {
            mean[k] = mean[k - 1];
        }
    }
    EigenvalueVector::new(mean)
}

/// Mean spectrum together with its regularized form.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanSpectrum {
    pub sample_mean: EigenvalueVector,
    pub m: usize,
    /// First `m` mean eigenvalues followed by ones. Not necessarily ascending.
    pub regularized: Vec<f64>,
    /// Set when the `m`-th mean eigenvalue exceeds 1, so the regularized
    /// spectrum is no longer ascending.
    pub non_monotone: bool,
}

/// Keeps the `m` smallest mean eigenvalues and replaces the rest by 1.
pub fn regularize_eigenvalues(mean: &EigenvalueVector, m: usize) -> Result<MeanSpectrum> {
    let n = mean.len();
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= M <= n, got M = {m}, n = {n}"
        )));
    }
    let v = mean.as_slice();
    let mut regularized = v[..m].to_vec();
    regularized.resize(n, 1.0);
    let non_monotone = v[m - 1] > 1.0 + MONOTONE_TOL;
    if non_monotone {
        log::warn!(
            "eigenvalue {} of the mean spectrum is {:.6} > 1; regularized spectrum is not ascending",
            m,
            v[m - 1]
        );
    }
    Ok(MeanSpectrum {
        sample_mean: mean.clone(),
        m,
        regularized,
        non_monotone,
    })
}

/// `𝓛̂ = I − Σ_{k≤M} (1 − λ̄_k) ψ_k ψ_kᵀ`.
pub fn truncated_laplacian(
    spectrum: &MeanSpectrum,
    basis: &SoulesBasis,
) -> Result<NormalizedLaplacian> {
    let n = basis.n();
    if !basis.is_complete() {
        return Err(Error::InvalidParameter(format!(
            "basis has {} of {n} vectors",
            basis.num_vectors()
        )));
    }
    if spectrum.regularized.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: spectrum.regularized.len(),
        });
    }
    let m = spectrum.m;
    let v = basis.vectors.subcols(0, m);
    let w = Mat::from_fn(n, m, |i, k| v[(i, k)] * (1.0 - spectrum.regularized[k]));
    let mut l = -(w * v.transpose());
    for i in 0..n {
        l[(i, i)] += 1.0;
    }
    Ok(NormalizedLaplacian::from_mat(l))
}

/// Ordered partition of `0..n` into contiguous blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPartition {
    blocks: Vec<Range<usize>>,
}

impl BlockPartition {
    pub fn new(blocks: Vec<Range<usize>>) -> Result<Self> {
        let mut next = 0;
        for b in &blocks {
            if b.start != next || b.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "block {b:?} does not continue the partition at {next}"
                )));
            }
            next = b.end;
        }
        if blocks.is_empty() {
            return Err(Error::Empty("block partition"));
        }
        Ok(Self { blocks })
    }

    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let blocks = sizes
            .iter()
            .map(|&s| {
                let b = start..start + s;
                start += s;
                b
            })
            .collect();
        Self::new(blocks)
    }

    /// Blocks from 1-based inclusive Soules leaves.
    pub fn from_leaves(leaves: &[Leaf]) -> Result<Self> {
        Self::new(leaves.iter().map(|l| l.i0 - 1..l.i1).collect())
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn n(&self) -> usize {
        self.blocks.last().map_or(0, |b| b.end)
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }
}

/// Per-block degree estimates `d̂_m`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDegrees {
    pub dhat: Vec<f64>,
    pub blocks: BlockPartition,
}

impl BlockDegrees {
    /// Degree of every node, `d̂_m` for nodes of block `m`.
    pub fn per_node(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.blocks.n()];
        for (b, &x) in self.blocks.blocks().iter().zip(&self.dhat) {
            d[b.clone()].fill(x);
        }
        d
    }
}

fn check_partition(mean_adj: MatRef<'_, f64>, blocks: &BlockPartition) -> Result<()> {
    if mean_adj.nrows() != blocks.n() || mean_adj.ncols() != blocks.n() {
        return Err(Error::Dimension {
            expected: blocks.n(),
            found: mean_adj.nrows(),
        });
    }
    Ok(())
}

/// Within-block average degree `d̂_m = (1/|B_m|) Σ_{i,j ∈ B_m} ā_ij`, which
/// ignores edges leaving the block.
pub fn estimate_block_degrees(
    mean_adj: MatRef<'_, f64>,
    blocks: &BlockPartition,
) -> Result<BlockDegrees> {
    check_partition(mean_adj, blocks)?;
    let dhat = blocks
        .blocks()
        .iter()
        .map(|b| {
            let s: f64 = b
                .clone()
                .flat_map(|j| b.clone().map(move |i| mean_adj[(i, j)]))
                .sum();
            s / b.len() as f64
        })
        .collect();
    Ok(BlockDegrees {
        dhat,
        blocks: blocks.clone(),
    })
}

/// Average full degree over each block, `d̂_m = (1/|B_m|) Σ_{i∈B_m} Σ_j ā_ij`,
/// which estimates `|B_m| p_m + (n − |B_m|) q`.
pub fn estimate_block_row_degrees(
    mean_adj: MatRef<'_, f64>,
    blocks: &BlockPartition,
) -> Result<BlockDegrees> {
    check_partition(mean_adj, blocks)?;
    let rows = row_sums(mean_adj);
    let dhat = blocks
        .blocks()
        .iter()
        .map(|b| rows[b.clone()].iter().sum::<f64>() / b.len() as f64)
        .collect();
    Ok(BlockDegrees {
        dhat,
        blocks: blocks.clone(),
    })
}

/// `μ̂ = D̂^{1/2} (I − 𝓛̂) D̂^{1/2}`.
pub fn reconstruct_barycentre(
    lap: &NormalizedLaplacian,
    degrees: &BlockDegrees,
) -> Result<Mat<f64>> {
    let n = lap.n();
    let d = degrees.per_node();
    if d.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: d.len(),
        });
    }
    if let Some(m) = degrees.dhat.iter().position(|&x| x.is_nan() || x < 0.0) {
        return Err(Error::InvalidParameter(format!(
            "block {m} has negative degree estimate {}",
            degrees.dhat[m]
        )));
    }
    let s: Vec<f64> = d.iter().map(|x| x.sqrt()).collect();
    let l = lap.entries();
    Ok(Mat::from_fn(n, n, |i, j| {
        let id = if i == j { 1.0 } else { 0.0 };
        s[i] * (id - l[(i, j)]) * s[j]
    }))
}

/// `(1/n²) Σ_ij (p_ij − p̂_ij)²`.
pub fn mse(reference: MatRef<'_, f64>, estimate: MatRef<'_, f64>) -> Result<f64> {
    if reference.nrows() != estimate.nrows() || reference.ncols() != estimate.ncols() {
        return Err(Error::Dimension {
            expected: reference.nrows(),
            found: estimate.nrows(),
        });
    }
    let (r, c) = (reference.nrows(), reference.ncols());
    if r * c == 0 {
        return Err(Error::Empty("matrix"));
    }
    let sum: f64 = (0..c)
        .flat_map(|j| (0..r).map(move |i| (i, j)))
        .map(|(i, j)| (reference[(i, j)] - estimate[(i, j)]).powi(2))
        .sum();
    Ok(sum / (r * c) as f64)
}

/// How many communities to look for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Communities {
    Fixed(usize),
    /// Eigengap estimate on the mean spectrum.
    Auto,
}

/// Which per-block degree to plug into the reconstruction.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DegreeEstimator {
    /// [`estimate_block_row_degrees`]: full node degrees averaged per block.
    #[default]
    RowAverage,
    /// [`estimate_block_degrees`]: within-block edges only.
    WithinBlock,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BarycentreConfig {
    pub communities: Communities,
    /// Seeds the k-means restarts of the alignment step.
    pub seed: u64,
    pub degree_estimator: DegreeEstimator,
}

impl BarycentreConfig {
    pub fn new(communities: Communities, seed: u64) -> Self {
        Self {
            communities,
            seed,
            degree_estimator: DegreeEstimator::default(),
        }
    }
}

/// Barycentre together with every intermediate the pipeline produced.
#[derive(Clone, Debug)]
pub struct BarycentreResult {
    /// Barycentre adjacency in the original node order.
    pub mu_hat: Mat<f64>,
    /// Estimated Laplacian in the original node order.
    pub laplacian_hat: NormalizedLaplacian,
    pub spectrum: MeanSpectrum,
    /// Degree estimates over blocks of the aligned order.
    pub degrees: BlockDegrees,
    /// Alignment: node `i` sits at position `permutation.image(i)`.
    pub permutation: Permutation,
    /// Soules tree found on the aligned sample mean.
    pub tree: SoulesTree,
    /// Clustering behind the alignment; `None` when `M = 1`.
    pub assignment: Option<ClusterAssignment>,
    pub communities: usize,
    pub warnings: Vec<String>,
}

impl BarycentreResult {
    /// Leaf blocks of the depth-`M` tree in original node ids.
    pub fn communities_original(&self) -> Vec<Vec<usize>> {
        self.degrees
            .blocks
            .blocks()
            .iter()
            .map(|b| {
                let mut nodes: Vec<usize> =
                    b.clone().map(|k| self.permutation.preimage(k)).collect();
                nodes.sort_unstable();
                nodes
            })
            .collect()
    }
}

/// Runs the full pipeline on `graphs`.
pub fn compute_barycentre(
    graphs: &[AdjacencyMatrix],
    config: &BarycentreConfig,
) -> Result<BarycentreResult> {
    let mean = sample_mean_adjacency(graphs)?;
    let n = mean.nrows();
    if n == 0 {
        return Err(Error::Empty("graph"));
    }
    let spectra = graphs
        .iter()
        .map(|g| sym_eigvals(normalized_laplacian(g).entries()))
        .collect::<Result<Vec<_>>>()?;
    let mean_spectrum = sample_mean_eigenvalues(&spectra)?;
    let mut warnings = Vec::new();

    let m = match config.communities {
        Communities::Fixed(m) => m,
        Communities::Auto => {
            let m = estimate_m(&mean_spectrum);
            log::info!("estimated {m} communities");
            m
        }
    };
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= M <= n, got M = {m}, n = {n}"
        )));
    }
    if m == n {
        let w = "M equals n: regularization keeps every eigenvalue".to_string();
        log::warn!("{w}");
        warnings.push(w);
    }

    let mean_adj = AdjacencyMatrix::new(mean.clone())?;
    let (assignment, permutation) = if m == 1 {
        (None, Permutation::identity(n))
    } else {
        let embedding = spectral_embed(normalized_adjacency(&mean_adj).as_ref(), m)?;
        let degrees = row_sums(mean.as_ref());
        let assignment = cluster_nodes(embedding.as_ref(), &degrees, m, config.seed)?;
        let perm = canonical_permutation(&assignment)?;
        (Some(assignment), perm)
    };

    let aligned = permute_matrix(mean.as_ref(), &permutation)?;
    let basis = best_soules_basis(aligned.as_ref(), m)?;
    let spectrum = regularize_eigenvalues(&mean_spectrum, m)?;
    if spectrum.non_monotone {
        warnings.push(format!(
            "mean eigenvalue {m} is {:.6} > 1; regularized spectrum is not ascending",
            mean_spectrum[m - 1]
        ));
    }
    let lap = truncated_laplacian(&spectrum, &basis)?;
    let blocks = BlockPartition::from_leaves(&basis.tree.leaves_at(m)?)?;
    let degrees = match config.degree_estimator {
        DegreeEstimator::RowAverage => estimate_block_row_degrees(aligned.as_ref(), &blocks)?,
        DegreeEstimator::WithinBlock => estimate_block_degrees(aligned.as_ref(), &blocks)?,
    };
    let mu_aligned = reconstruct_barycentre(&lap, &degrees)?;

    let back = permutation.inverse();
    let mu_hat = permute_matrix(mu_aligned.as_ref(), &back)?;
    let laplacian_hat = NormalizedLaplacian::from_mat(permute_matrix(lap.entries(), &back)?);
    let mut tree = basis.tree;
    // Only the searched part of the tree carries information about the data.
    tree = SoulesTree::from_splits(n, &tree.splits()[..m - 1])?;

    Ok(BarycentreResult {
        mu_hat,
        laplacian_hat,
        spectrum,
        degrees,
        permutation,
        tree,
        assignment,
        communities: m,
        warnings,
    })
}
