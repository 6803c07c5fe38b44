//! Soules bases and the greedy top-down tree search.
//!
//! A Soules basis starts from `ψ₁ = n^{-1/2}·1` and adds one vector per
//! interval split. Splitting `[i0, i1]` at `i*` yields a vector that is
//! constant and positive on `[i0, i*]`, constant and negative on
//! `[i* + 1, i1]` and zero elsewhere. The splits form a binary tree whose
//! leaves after `M − 1` splits are the blocks of the partial projector
//! `E_M = Σ_{k≤M} ψ_k ψ_kᵀ`.
//!
//! Split indices are 1-based and inclusive throughout this module.

use faer::{Mat, MatRef};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::check_symmetric;
use crate::rng::Rng;

/// Relative margin a candidate must beat the incumbent by to win a split.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoulesSplit {
    pub i0: usize,
    pub i1: usize,
    pub istar: usize,
    /// Depth of the split in the tree; the root split has level 1.
    pub level: usize,
}

impl SoulesSplit {
    pub fn new(i0: usize, i1: usize, istar: usize, level: usize) -> Self {
        Self {
            i0,
            i1,
            istar,
            level,
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.i0 >= 1 && self.i0 <= self.istar && self.istar < self.i1 && self.i1 <= n {
            Ok(())
        } else {
            Err(Error::InvalidSplit {
                n,
                i0: self.i0,
                i1: self.i1,
                istar: self.istar,
            })
        }
    }

    /// Sizes of the positive and negative parts.
    fn sides(&self) -> (f64, f64) {
        (
            (self.istar - self.i0 + 1) as f64,
            (self.i1 - self.istar) as f64,
        )
    }
}

/// A current leaf interval `[i0, i1]` and its depth in the tree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Leaf {
    pub i0: usize,
    pub i1: usize,
    pub depth: usize,
}

impl Leaf {
    pub fn len(&self) -> usize {
        self.i1 - self.i0 + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Binary tree of interval splits over `1..=n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoulesTree {
    n: usize,
    splits: Vec<SoulesSplit>,
    leaves: Vec<Leaf>,
}

impl SoulesTree {
    /// Tree with no splits: a single leaf `[1, n]`.
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("Soules tree"));
        }
        Ok(Self {
            n,
            splits: Vec::new(),
            leaves: vec![Leaf {
                i0: 1,
                i1: n,
                depth: 0,
            }],
        })
    }

    /// Replays `splits` in order; each must subdivide a current leaf and carry
    /// the level that leaf implies.
    pub fn from_splits(n: usize, splits: &[SoulesSplit]) -> Result<Self> {
        let mut tree = Self::new(n)?;
        for s in splits {
            let made = tree.split(s.i0, s.i1, s.istar)?;
            if made.level != s.level {
                return Err(Error::InvalidParameter(format!(
                    "split [{}, {}] at {} has level {} but sits at depth {}",
                    s.i0, s.i1, s.istar, s.level, made.level
                )));
            }
        }
        Ok(tree)
    }

    /// Splits the leaf `[i0, i1]` at `istar`.
    pub fn split(&mut self, i0: usize, i1: usize, istar: usize) -> Result<SoulesSplit> {
        let pos = self
            .leaves
            .iter()
            .position(|l| l.i0 == i0 && l.i1 == i1)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("[{i0}, {i1}] is not a current leaf"))
            })?;
        let depth = self.leaves[pos].depth;
        let split = SoulesSplit::new(i0, i1, istar, depth + 1);
        split.validate(self.n)?;
        self.leaves.splice(
            pos..=pos,
            [
                Leaf {
                    i0,
                    i1: istar,
                    depth: depth + 1,
                },
                Leaf {
                    i0: istar + 1,
                    i1,
                    depth: depth + 1,
                },
            ],
        );
        self.splits.push(split);
        Ok(split)
    }

    /// Uniformly random complete tree: splits a random non-singleton leaf at a
    /// random position until every leaf is a singleton.
    pub fn random(n: usize, rng: &mut Rng) -> Result<Self> {
        Self::random_partial(n, n, rng)
    }

    /// Random tree with `k` leaves (`k − 1` splits).
    pub fn random_partial(n: usize, k: usize, rng: &mut Rng) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::InvalidParameter(format!(
                "a tree over {n} nodes cannot have {k} leaves"
            )));
        }
        let mut tree = Self::new(n)?;
        while tree.leaves.len() < k {
            let open: Vec<Leaf> = tree
                .leaves
                .iter()
                .copied()
                .filter(|l| l.len() > 1)
                .collect();
            let leaf = open[rng.random_range(0..open.len())];
            let istar = rng.random_range(leaf.i0..leaf.i1);
            tree.split(leaf.i0, leaf.i1, istar)?;
        }
        Ok(tree)
    }

    /// Splits every remaining non-singleton leaf at its midpoint, sweeping
    /// left to right until the tree is complete.
    pub fn complete(&mut self) {
        while self.leaves.len() < self.n {
            let open: Vec<Leaf> = self
                .leaves
                .iter()
                .copied()
                .filter(|l| l.len() > 1)
                .collect();
            for l in open {
                self.split(l.i0, l.i1, (l.i0 + l.i1) / 2)
                    .expect("midpoint split of a current leaf is valid");
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn splits(&self) -> &[SoulesSplit] {
        &self.splits
    }

    /// Current leaves, ordered left to right.
    pub fn leaves(&self) -> &[Leaf] {
        &self.leaves
    }

    /// Number of basis vectors the tree defines (`splits + 1`).
    pub fn num_vectors(&self) -> usize {
        self.splits.len() + 1
    }

    pub fn is_complete(&self) -> bool {
        self.leaves.len() == self.n
    }

    /// Leaves of the subtree made by the first `m − 1` splits, i.e. the blocks
    /// of `E_m`.
    pub fn leaves_at(&self, m: usize) -> Result<Vec<Leaf>> {
        if m == 0 || m > self.num_vectors() {
            return Err(Error::InvalidParameter(format!(
                "tree defines {} vectors, asked for {m}",
                self.num_vectors()
            )));
        }
        let sub = Self::from_splits(self.n, &self.splits[..m - 1])?;
        Ok(sub.leaves)
    }
}

/// Orthonormal basis induced by a tree; column `k` is `ψ_{k+1}`.
#[derive(Clone, Debug)]
pub struct SoulesBasis {
    pub tree: SoulesTree,
    pub vectors: Mat<f64>,
}

impl SoulesBasis {
    pub fn from_tree(tree: SoulesTree) -> Self {
        let n = tree.n();
        let mut vectors = Mat::zeros(n, tree.num_vectors());
        let c = 1.0 / (n as f64).sqrt();
        for i in 0..n {
            vectors[(i, 0)] = c;
        }
        for (k, s) in tree.splits().iter().enumerate() {
            fill_vector(s, |i, v| vectors[(i, k + 1)] = v);
        }
        Self { tree, vectors }
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn num_vectors(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_complete(&self) -> bool {
        self.num_vectors() == self.n()
    }
}

fn fill_vector(s: &SoulesSplit, mut put: impl FnMut(usize, f64)) {
    let (a, b) = s.sides();
    let norm = 1.0 / (a + b).sqrt();
    let pos = norm * (b / a).sqrt();
    let neg = -norm * (a / b).sqrt();
    for i in s.i0..=s.istar {
        put(i - 1, pos);
    }
    for i in s.istar + 1..=s.i1 {
        put(i - 1, neg);
    }
}

/// Soules vector of `split` as a length-`n` vector.
pub fn build_vector(n: usize, split: &SoulesSplit) -> Result<Vec<f64>> {
    split.validate(n)?;
    let mut v = vec![0.0; n];
    fill_vector(split, |i, x| v[i] = x);
    Ok(v)
}

/// `ψψᵀ` from its closed form: `b/(aL)` on the positive block, `a/(bL)` on the
/// negative block, `−1/L` across, zero elsewhere.
pub fn rank_one_projection(n: usize, split: &SoulesSplit) -> Result<Mat<f64>> {
    split.validate(n)?;
    let (a, b) = split.sides();
    let len = a + b;
    let (lo, mid, hi) = (split.i0 - 1, split.istar - 1, split.i1 - 1);
    Ok(Mat::from_fn(n, n, |i, j| {
        let inside = |x: usize| (lo..=hi).contains(&x);
        if !inside(i) || !inside(j) {
            0.0
        } else {
            match (i <= mid, j <= mid) {
                (true, true) => b / (a * len),
                (false, false) => a / (b * len),
                _ => -1.0 / len,
            }
        }
    }))
}

/// `E_m = Σ_{k≤m} ψ_k ψ_kᵀ`, summed from the basis vectors.
pub fn cumulative_projector(basis: &SoulesBasis, m: usize) -> Result<Mat<f64>> {
    if m == 0 || m > basis.num_vectors() {
        return Err(Error::InvalidParameter(format!(
            "basis has {} vectors, asked for {m}",
            basis.num_vectors()
        )));
    }
    let v = basis.vectors.subcols(0, m);
    Ok(v * v.transpose())
}

/// Block-diagonal matrix with `1/|J|` on each leaf block `J × J`.
pub fn leaf_projector(n: usize, leaves: &[Leaf]) -> Mat<f64> {
    let mut e = Mat::zeros(n, n);
    for l in leaves {
        let w = 1.0 / l.len() as f64;
        for j in l.i0 - 1..l.i1 {
            for i in l.i0 - 1..l.i1 {
                e[(i, j)] = w;
            }
        }
    }
    e
}

/// `Ψ diag(λ) Ψᵀ` for non-increasing `λ` and a complete basis. Off-diagonal
/// entries are then nonnegative, and all entries are if `λ_n ≥ 0`.
pub fn synthesize_symmetric(basis: &SoulesBasis, lambda: &[f64]) -> Result<Mat<f64>> {
    if let Some(k) = lambda.windows(2).position(|w| w[0].is_nan() || w[0] < w[1]) {
        return Err(Error::InvalidParameter(format!(
            "eigenvalues must be non-increasing, broken at index {k}"
        )));
    }
    synthesize(basis, lambda)
}

/// `Ψ diag(λ) Ψᵀ` for non-decreasing `λ`: the negation of
/// [`synthesize_symmetric`] on `−λ`, so off-diagonals are nonpositive and,
/// when `λ₁ = 0`, rows sum to zero.
pub fn synthesize_laplacian(basis: &SoulesBasis, lambda: &[f64]) -> Result<Mat<f64>> {
    let neg: Vec<f64> = lambda.iter().map(|x| -x).collect();
    let m = synthesize_symmetric(basis, &neg)?;
    Ok(Mat::from_fn(m.nrows(), m.ncols(), |i, j| -m[(i, j)]))
}

fn synthesize(basis: &SoulesBasis, lambda: &[f64]) -> Result<Mat<f64>> {
    if !basis.is_complete() {
        return Err(Error::InvalidParameter(format!(
            "basis has {} of {} vectors",
            basis.num_vectors(),
            basis.n()
        )));
    }
    if lambda.len() != basis.n() {
        return Err(Error::Dimension {
            expected: basis.n(),
            found: lambda.len(),
        });
    }
    let v = &basis.vectors;
    let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, k| v[(i, k)] * lambda[k]);
    Ok(scaled * v.transpose())
}

/// `|⟨ψψᵀ, s⟩_F|²` using the piecewise-constant structure of `ψ`.
pub fn inner_product_score(split: &SoulesSplit, s: MatRef<'_, f64>) -> Result<f64> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            found: s.ncols(),
        });
    }
    split.validate(n)?;
    let block = |r: std::ops::Range<usize>, c: std::ops::Range<usize>| -> f64 {
        c.flat_map(|j| r.clone().map(move |i| (i, j)))
            .map(|(i, j)| s[(i, j)])
            .sum()
    };
    let left = split.i0 - 1..split.istar;
    let right = split.istar..split.i1;
    let x = block(left.clone(), left.clone());
    let y = block(right.clone(), right.clone());
    let z = block(left.clone(), right.clone()) + block(right, left);
    let inner = combine(split, x, y, z);
    Ok(inner * inner)
}

/// `⟨ψψᵀ, S⟩` from the left-left sum `x`, right-right sum `y` and the total
/// of both cross blocks `z`.
fn combine(split: &SoulesSplit, x: f64, y: f64, z: f64) -> f64 {
    let (a, b) = split.sides();
    ((b / a) * x + (a / b) * y - z) / (a + b)
}

/// Two-dimensional prefix sums for O(1) rectangle sums.
struct BlockSums {
    n: usize,
    cum: Vec<f64>,
}

impl BlockSums {
    fn new(s: MatRef<'_, f64>) -> Self {
        let n = s.nrows();
        let w = n + 1;
        let mut cum = vec![0.0; w * w];
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += s[(i, j)];
                cum[(i + 1) * w + j + 1] = cum[i * w + j + 1] + row;
            }
        }
        Self { n, cum }
    }

    /// Sum over rows `r0..r1`, columns `c0..c1` (0-based, half-open).
    fn rect(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> f64 {
        let w = self.n + 1;
        self.cum[r1 * w + c1] - self.cum[r0 * w + c1] - self.cum[r1 * w + c0]
            + self.cum[r0 * w + c0]
    }

    fn score(&self, split: &SoulesSplit) -> f64 {
        let (lo, mid, hi) = (split.i0 - 1, split.istar, split.i1);
        let x = self.rect(lo, mid, lo, mid);
        let y = self.rect(mid, hi, mid, hi);
        let z = self.rect(lo, mid, mid, hi) + self.rect(mid, hi, lo, mid);
        let inner = combine(split, x, y, z);
        inner * inner
    }
}

/// Greedy top-down search for a Soules basis adapted to `s`.
///
/// Each of the first `depth − 1` splits is chosen over every current
/// non-singleton leaf and every split position, maximizing
/// `|⟨ψψᵀ, s⟩|²`. Ties go to the leftmost leaf, then the leftmost position;
/// a later candidate must beat the incumbent by `TIE_TOL·‖s‖²_F`. The tree is
/// then completed with midpoint splits so the basis has `n` columns.
pub fn best_soules_basis(s: MatRef<'_, f64>, depth: usize) -> Result<SoulesBasis> {
    check_symmetric(s)?;
    let n = s.nrows();
    if depth == 0 || depth > n {
        return Err(Error::InvalidParameter(format!(
            "depth {depth} outside 1..={n}"
        )));
    }
    let sums = BlockSums::new(s);
    let frob2: f64 = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| s[(i, j)] * s[(i, j)])
        .sum();
    let margin = TIE_TOL * frob2;

    let mut tree = SoulesTree::new(n)?;
    for _ in 1..depth {
        let mut best: Option<(f64, SoulesSplit)> = None;
        for leaf in tree.leaves().iter().filter(|l| l.len() > 1) {
            for istar in leaf.i0..leaf.i1 {
                let cand = SoulesSplit::new(leaf.i0, leaf.i1, istar, leaf.depth + 1);
                let score = sums.score(&cand);
                if best.is_none_or(|(b, _)| score > b + margin) {
                    best = Some((score, cand));
                }
            }
        }
        let (_, win) = best.expect("depth <= n leaves a splittable leaf");
        log::trace!("split [{}, {}] at {}", win.i0, win.i1, win.istar);
        tree.split(win.i0, win.i1, win.istar)?;
    }
    tree.complete();
    Ok(SoulesBasis::from_tree(tree))
}
