//! Dense graph representations and the normalized Laplacian.
//!
//! Graphs are stored as dense `n × n` matrices. The symmetric normalization
//! `Â = D^{-1/2} A D^{-1/2}` uses the convention `â_ij = 0` whenever
//! `d_i d_j = 0`, so an isolated node contributes an identity row to the
//! normalized Laplacian `𝓛 = I − Â`.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};

/// Relative tolerance used when validating symmetry of input matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Dense symmetric adjacency matrix with nonnegative weights.
#[derive(Clone, Debug, PartialEq)]
pub struct AdjacencyMatrix {
    entries: Mat<f64>,
}

impl AdjacencyMatrix {
    /// Wraps `entries` after checking it is square, finite, nonnegative and
    /// symmetric (within [`SYMMETRY_TOL`] relative to the largest entry).
    pub fn new(entries: Mat<f64>) -> Result<Self> {
        check_symmetric(entries.as_ref())?;
        for j in 0..entries.ncols() {
            for i in 0..entries.nrows() {
                let v = entries[(i, j)];
                if v.is_nan() || v < 0.0 {
                    return Err(Error::InvalidMatrix(format!(
                        "entry ({i}, {j}) = {v} is negative or not finite"
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                found: bad.len(),
            });
        }
        Self::new(Mat::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Builds an unweighted graph from an edge list over nodes `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut entries = Mat::zeros(n, n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({i}, {j}) out of range for n = {n}"
                )));
            }
            entries[(i, j)] = 1.0;
            entries[(j, i)] = 1.0;
        }
        Ok(Self { entries })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            entries: Mat::zeros(n, n),
        }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn entries(&self) -> MatRef<'_, f64> {
        self.entries.as_ref()
    }

    pub fn into_inner(self) -> Mat<f64> {
        self.entries
    }

    /// Number of undirected edges with nonzero weight, self-loops excluded.
    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .flat_map(|j| (0..j).map(move |i| (i, j)))
            .filter(|&(i, j)| self.entries[(i, j)] != 0.0)
            .count()
    }
}

/// Diagonal of the degree matrix `D = diag(A·1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DegreeMatrix {
    pub diag: Vec<f64>,
}

/// Symmetric normalized Laplacian `I − D^{-1/2} A D^{-1/2}`.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalizedLaplacian {
    entries: Mat<f64>,
}

impl NormalizedLaplacian {
    pub(crate) fn from_mat(entries: Mat<f64>) -> Self {
        Self { entries }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> MatRef<'_, f64> {
        self.entries.as_ref()
    }

    pub fn into_inner(self) -> Mat<f64> {
        self.entries
    }
}

/// Eigenvalues sorted in non-decreasing order.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenvalueVector {
    values: Vec<f64>,
}

impl EigenvalueVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.windows(2).position(|w| w[0].is_nan() || w[0] > w[1]) {
            return Err(Error::InvalidParameter(format!(
                "eigenvalues not ascending at index {k}: {} > {}",
                values[k],
                values[k + 1]
            )));
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }
}

impl std::ops::Index<usize> for EigenvalueVector {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.values[k]
    }
}

/// Node relabelling: `forward[old] = new`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    forward: Vec<usize>,
    inverse: Vec<usize>,
}

impl Permutation {
    pub fn new(forward: Vec<usize>) -> Result<Self> {
        let n = forward.len();
        let mut inverse = vec![usize::MAX; n];
        for (old, &new) in forward.iter().enumerate() {
            if new >= n {
                return Err(Error::InvalidPermutation(format!(
                    "image {new} of {old} out of range for n = {n}"
                )));
            }
            if inverse[new] != usize::MAX {
                return Err(Error::InvalidPermutation(format!(
                    "{new} is the image of both {} and {old}",
                    inverse[new]
                )));
            }
            inverse[new] = old;
        }
        Ok(Self { forward, inverse })
    }

    pub fn identity(n: usize) -> Self {
        let forward: Vec<usize> = (0..n).collect();
        Self {
            inverse: forward.clone(),
            forward,
        }
    }

    /// Builds the permutation that places `order[k]` at position `k`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let p = Self::new(order)?;
        Ok(p.inverse())
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    /// Position of node `old` after relabelling.
    pub fn image(&self, old: usize) -> usize {
        self.forward[old]
    }

    /// Original node at position `new`.
    pub fn preimage(&self, new: usize) -> usize {
        self.inverse[new]
    }

    pub fn forward(&self) -> &[usize] {
        &self.forward
    }

    pub fn inverse(&self) -> Permutation {
        Permutation {
            forward: self.inverse.clone(),
            inverse: self.forward.clone(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.forward.iter().enumerate().all(|(i, &p)| i == p)
    }
}

pub fn degree_matrix(a: &AdjacencyMatrix) -> DegreeMatrix {
    DegreeMatrix {
        diag: row_sums(a.entries()),
    }
}

pub(crate) fn row_sums(m: MatRef<'_, f64>) -> Vec<f64> {
    let mut sums = vec![0.0; m.nrows()];
    for j in 0..m.ncols() {
        for (i, s) in sums.iter_mut().enumerate() {
            *s += m[(i, j)];
        }
    }
    sums
}

/// `â_ij = a_ij / √(d_i d_j)` when `d_i d_j ≠ 0`, zero otherwise.
pub fn normalized_adjacency(a: &AdjacencyMatrix) -> Mat<f64> {
    normalize_symmetric(a.entries())
}

fn normalize_symmetric(a: MatRef<'_, f64>) -> Mat<f64> {
    let d = row_sums(a);
    let inv_sqrt: Vec<f64> = d
        .iter()
        .map(|&x| if x > 0.0 { 1.0 / x.sqrt() } else { 0.0 })
        .collect();
    Mat::from_fn(a.nrows(), a.ncols(), |i, j| {
        if d[i] * d[j] != 0.0 {
            a[(i, j)] * inv_sqrt[i] * inv_sqrt[j]
        } else {
            0.0
        }
    })
}

pub fn normalized_laplacian(a: &AdjacencyMatrix) -> NormalizedLaplacian {
    let mut l = normalized_adjacency(a);
    let n = l.nrows();
    for j in 0..n {
        for i in 0..n {
            let v = -l[(i, j)];
            l[(i, j)] = if i == j { 1.0 + v } else { v };
        }
    }
    NormalizedLaplacian { entries: l }
}

/// Laplacian spectral pseudo-distance `‖λ_a − λ_b‖₂`.
pub fn spectral_distance(la: &EigenvalueVector, lb: &EigenvalueVector) -> Result<f64> {
    if la.len() != lb.len() {
        return Err(Error::Dimension {
            expected: la.len(),
            found: lb.len(),
        });
    }
    Ok(la
        .as_slice()
        .iter()
        .zip(lb.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

/// Relabels nodes so that `result[perm(i)][perm(j)] = a[i][j]`.
pub fn permute(a: &AdjacencyMatrix, perm: &Permutation) -> Result<AdjacencyMatrix> {
    Ok(AdjacencyMatrix {
        entries: permute_matrix(a.entries(), perm)?,
    })
}

/// [`permute`] for an arbitrary square matrix.
pub fn permute_matrix(m: MatRef<'_, f64>, perm: &Permutation) -> Result<Mat<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            found: m.ncols(),
        });
    }
    if perm.len() != n {
        return Err(Error::Dimension {
            expected: n,
            found: perm.len(),
        });
    }
    Ok(Mat::from_fn(n, n, |i, j| {
        m[(perm.preimage(i), perm.preimage(j))]
    }))
}

pub(crate) fn check_symmetric(m: MatRef<'_, f64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            found: m.ncols(),
        });
    }
    let mut scale = 1.0_f64;
    for j in 0..n {
        for i in 0..n {
            let v = m[(i, j)];
            if !v.is_finite() {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({i}, {j}) is not finite"
                )));
            }
            scale = scale.max(v.abs());
        }
    }
    let tol = SYMMETRY_TOL * scale;
    for j in 0..n {
        for i in 0..j {
            let gap = (m[(i, j)] - m[(j, i)]).abs();
            if gap > tol {
                return Err(Error::NotSymmetric {
                    row: i,
                    col: j,
                    gap,
                });
            }
        }
    }
    Ok(())
}
