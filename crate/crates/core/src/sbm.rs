//! Stochastic block models and their population-level spectra.

use std::ops::Range;

use faer::{Mat, MatRef};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AdjacencyMatrix, EigenvalueVector, NormalizedLaplacian};
use crate::rng;

/// Block model with contiguous blocks `B_1, …, B_M` covering `0..n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SbmSpec {
    n: usize,
    blocks: Vec<Range<usize>>,
    p: Vec<f64>,
    q: f64,
}

/// On-disk form: `{"n": …, "block_sizes": […], "p": […], "q": …}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SbmSpecFile {
    pub n: usize,
    pub block_sizes: Vec<usize>,
    pub p: Vec<f64>,
    pub q: f64,
}

impl SbmSpec {
    pub fn new(block_sizes: &[usize], p: Vec<f64>, q: f64) -> Result<Self> {
        if block_sizes.is_empty() {
            return Err(Error::Empty("block list"));
        }
        if block_sizes.len() != p.len() {
            return Err(Error::Dimension {
                expected: block_sizes.len(),
                found: p.len(),
            });
        }
        if let Some(m) = block_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidParameter(format!("block {m} is empty")));
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("q = {q} outside [0, 1]")));
        }
        for (m, &pm) in p.iter().enumerate() {
            if !(q..=1.0).contains(&pm) {
                return Err(Error::InvalidParameter(format!(
                    "p[{m}] = {pm} must lie in [q, 1] with q = {q}"
                )));
            }
        }
        let mut blocks = Vec::with_capacity(block_sizes.len());
        let mut start = 0;
        for &s in block_sizes {
            blocks.push(start..start + s);
            start += s;
        }
        Ok(Self {
            n: start,
            blocks,
            p,
            q,
        })
    }

    /// `m` blocks of near-equal size (the first `n mod m` get one extra node),
    /// all with within-block probability `p`.
    pub fn balanced(n: usize, m: usize, p: f64, q: f64) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::InvalidParameter(format!(
                "cannot split {n} nodes into {m} blocks"
            )));
        }
        let sizes: Vec<usize> = (0..m).map(|k| n / m + usize::from(k < n % m)).collect();
        Self::new(&sizes, vec![p; m], q)
    }

    pub fn from_file(f: &SbmSpecFile) -> Result<Self> {
        let spec = Self::new(&f.block_sizes, f.p.clone(), f.q)?;
        if spec.n != f.n {
            return Err(Error::Dimension {
                expected: f.n,
                found: spec.n,
            });
        }
        Ok(spec)
    }

    pub fn to_file(&self) -> SbmSpecFile {
        SbmSpecFile {
            n: self.n,
            block_sizes: self.block_sizes(),
            p: self.p.clone(),
            q: self.q,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Range<usize>] {
        &self.blocks
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.len()).collect()
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Block index of every node.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = vec![0; self.n];
        for (m, b) in self.blocks.iter().enumerate() {
            labels[b.clone()].fill(m);
        }
        labels
    }
}

/// Entrywise expectation `P = Σ_m (p_m − q) 1_{B_m} 1_{B_m}ᵀ + q J`.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationMean {
    entries: Mat<f64>,
}

impl PopulationMean {
    pub fn entries(&self) -> MatRef<'_, f64> {
        self.entries.as_ref()
    }

    pub fn into_inner(self) -> Mat<f64> {
        self.entries
    }
}

pub fn population_mean(spec: &SbmSpec) -> PopulationMean {
    let labels = spec.labels();
    let entries = Mat::from_fn(spec.n, spec.n, |i, j| {
        if labels[i] == labels[j] {
            spec.p[labels[i]]
        } else {
            spec.q
        }
    });
    PopulationMean { entries }
}

/// One graph drawn with stream 0 of `seed`.
pub fn sample(spec: &SbmSpec, seed: u64) -> AdjacencyMatrix {
    sample_stream(spec, seed, 0)
}

/// One graph drawn from stream `stream` of `seed`: independent Bernoulli
/// edges above the diagonal, mirrored, zero diagonal.
pub fn sample_stream(spec: &SbmSpec, seed: u64, stream: u64) -> AdjacencyMatrix {
    let mut rng = rng::stream(seed, stream);
    let labels = spec.labels();
    let n = spec.n;
    let mut a = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..j {
            let prob = if labels[i] == labels[j] {
                spec.p[labels[i]]
            } else {
                spec.q
            };
            if rng.random::<f64>() < prob {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
    }
    AdjacencyMatrix::new(a).expect("sampled graph is a valid adjacency matrix")
}

/// `t` graphs, graph `k` drawn from stream `k`.
pub fn sample_ensemble(spec: &SbmSpec, t: usize, seed: u64) -> Vec<AdjacencyMatrix> {
    (0..t as u64)
        .map(|k| sample_stream(spec, seed, k))
        .collect()
}

/// `d̄_m = |B_m| p_m + (n − |B_m|) q`, one entry per block.
pub fn expected_degrees(spec: &SbmSpec) -> Vec<f64> {
    spec.blocks
        .iter()
        .zip(&spec.p)
        .map(|(b, &pm)| b.len() as f64 * pm + (spec.n - b.len()) as f64 * spec.q)
        .collect()
}

/// Expected normalized Laplacian: 1 on the diagonal, `−p_m/d̄_m` within
/// block `m`, `−q/√(d̄_m d̄_m')` across blocks.
pub fn expected_laplacian(spec: &SbmSpec) -> Result<NormalizedLaplacian> {
    let d = expected_degrees(spec);
    if let Some(m) = d.iter().position(|&x| x.is_nan() || x <= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "block {m} has zero expected degree"
        )));
    }
    let labels = spec.labels();
    let l = Mat::from_fn(spec.n, spec.n, |i, j| {
        let (a, b) = (labels[i], labels[j]);
        if i == j {
            1.0
        } else if a == b {
            -spec.p[a] / d[a]
        } else {
            -spec.q / (d[a] * d[b]).sqrt()
        }
    });
    Ok(NormalizedLaplacian::from_mat(l))
}

/// Limits of the Laplacian eigenvalues of a balanced model:
/// `0`, then `Mq/(p + (M−1)q)` repeated `M − 1` times, then `1`.
pub fn limit_eigenvalues(m: usize, p: f64, q: f64, n: usize) -> Result<EigenvalueVector> {
    if m == 0 || m > n {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= M <= n, got M = {m}, n = {n}"
        )));
    }
    if q > p {
        return Err(Error::InvalidParameter(format!("q = {q} exceeds p = {p}")));
    }
    let denom = p + (m as f64 - 1.0) * q;
    if denom.is_nan() || denom <= 0.0 {
        return Err(Error::InvalidParameter(
            "p + (M - 1) q must be positive".into(),
        ));
    }
    let l = m as f64 * q / denom;
    let mut v = Vec::with_capacity(n);
    v.push(0.0);
    v.extend(std::iter::repeat_n(l, m - 1));
    v.extend(std::iter::repeat_n(1.0, n - m));
    EigenvalueVector::new(v)
}
