//! Monte Carlo harness for the block-model experiments.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::Serialize;

use crate::barycentre::{compute_barycentre, mse, BarycentreConfig, Communities};
use crate::eigen::sym_eigvals;
use crate::error::{Error, Result};
use crate::graph::{normalized_laplacian, permute, permute_matrix, AdjacencyMatrix, Permutation};
use crate::rng::{self, derive_seed};
use crate::sbm::{population_mean, sample_ensemble, SbmSpec};

/// Within-block scale factors `c_m` in `p_m = c_m (ln n)² / n`.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficients {
    Fixed(Vec<f64>),
    /// Drawn independently from `U[lo, hi]` for every instance.
    Uniform {
        lo: f64,
        hi: f64,
    },
}

/// Sparse block models indexed by `n`: block sizes proportional to
/// `base_sizes`, `p_m = c_m (ln n)²/n`, `q = q_coeff · ln n / n`.
#[derive(Clone, Debug, PartialEq)]
pub struct SbmFamily {
    pub base_sizes: Vec<usize>,
    pub coefficients: Coefficients,
    pub q_coeff: f64,
}

impl SbmFamily {
    /// Four unequal blocks of sizes 63, 147, 105, 197 at `n = 512`,
    /// `c_m ~ U[1, 4]`, `q = 2 ln n / n`.
    pub fn four_block() -> Self {
        Self {
            base_sizes: vec![63, 147, 105, 197],
            coefficients: Coefficients::Uniform { lo: 1.0, hi: 4.0 },
            q_coeff: 2.0,
        }
    }

    /// `m` equal blocks with `p = 3 (ln n)²/n`, `q = 2 ln n / n`.
    pub fn balanced(m: usize) -> Self {
        Self {
            base_sizes: vec![1; m],
            coefficients: Coefficients::Fixed(vec![3.0; m]),
            q_coeff: 2.0,
        }
    }

    pub fn m(&self) -> usize {
        self.base_sizes.len()
    }

    /// Model at size `n`; `rng` draws the coefficients when they are random.
    pub fn instantiate(&self, n: usize, rng: &mut rng::Rng) -> Result<SbmSpec> {
        let sizes = scale_block_sizes(&self.base_sizes, n)?;
        let ln = (n as f64).ln();
        let c: Vec<f64> = match &self.coefficients {
            Coefficients::Fixed(c) => c.clone(),
            Coefficients::Uniform { lo, hi } => {
                (0..self.m()).map(|_| rng.random_range(*lo..*hi)).collect()
            }
        };
        let p = c.iter().map(|c| c * ln * ln / n as f64).collect();
        SbmSpec::new(&sizes, p, self.q_coeff * ln / n as f64)
    }
}

/// Rescales `base` to sum to `n`: each size is rounded down and the
/// remainder goes to the last block.
pub fn scale_block_sizes(base: &[usize], n: usize) -> Result<Vec<usize>> {
    let total: usize = base.iter().sum();
    if total == 0 {
        return Err(Error::Empty("block sizes"));
    }
    let mut sizes: Vec<usize> = base.iter().map(|&b| b * n / total).collect();
    let assigned: usize = sizes.iter().sum();
    *sizes.last_mut().expect("nonempty") += n - assigned;
    if sizes.contains(&0) {
        return Err(Error::InvalidParameter(format!(
            "n = {n} is too small for block proportions {base:?}"
        )));
    }
    Ok(sizes)
}

/// `t` graphs from `spec`, all relabelled by one random permutation drawn
/// from `seed`. Returns the graphs and the permutation.
pub fn permuted_ensemble(
    spec: &SbmSpec,
    t: usize,
    seed: u64,
) -> Result<(Vec<AdjacencyMatrix>, Permutation)> {
    let perm = random_permutation(spec.n(), &mut rng::stream(derive_seed(seed, 1), 0))?;
    let graphs = sample_ensemble(spec, t, seed)
        .iter()
        .map(|g| permute(g, &perm))
        .collect::<Result<Vec<_>>>()?;
    Ok((graphs, perm))
}

pub fn random_permutation(n: usize, rng: &mut rng::Rng) -> Result<Permutation> {
    let mut forward: Vec<usize> = (0..n).collect();
    forward.shuffle(rng);
    Permutation::new(forward)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    /// `NaN` when the pipeline failed.
    pub mse: f64,
    pub non_monotone: bool,
    pub error: Option<String>,
}

/// Samples `t` permuted graphs, computes the barycentre with `m` communities
/// and returns its MSE against the (identically permuted) population mean.
/// Numerical failures are reported in the outcome rather than returned.
pub fn run_mse_trial(spec: &SbmSpec, t: usize, m: usize, seed: u64) -> Result<TrialOutcome> {
    let (graphs, perm) = permuted_ensemble(spec, t, seed)?;
    let reference = permute_matrix(population_mean(spec).entries(), &perm)?;
    let cfg = BarycentreConfig::new(Communities::Fixed(m), derive_seed(seed, 2));
    match compute_barycentre(&graphs, &cfg) {
        Ok(res) => Ok(TrialOutcome {
            mse: mse(reference.as_ref(), res.mu_hat.as_ref())?,
            non_monotone: res.spectrum.non_monotone,
            error: None,
        }),
        Err(e) if e.is_numerical() => {
            log::warn!("trial with seed {seed} failed: {e}");
            Ok(TrialOutcome {
                mse: f64::NAN,
                non_monotone: false,
                error: Some(e.to_string()),
            })
        }
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    /// The swept parameter (`n` or `M`).
    pub x: usize,
    pub seed: u64,
    pub mse: f64,
    pub non_monotone: bool,
}

/// MSE of `family` at each size in `n_list`, one `T = 1` trial per seed.
/// The model coefficients are redrawn for every (n, seed).
pub fn size_sweep(family: &SbmFamily, n_list: &[usize], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in n_list {
        for &seed in seeds {
            let spec = family.instantiate(n, &mut rng::stream(derive_seed(seed, 3), n as u64))?;
            let out = run_mse_trial(&spec, 1, family.m(), seed)?;
            log::info!("n = {n}, seed = {seed}: mse = {:.4e}", out.mse);
            rows.push(SweepRow {
                x: n,
                seed,
                mse: out.mse,
                non_monotone: out.non_monotone,
            });
        }
    }
    Ok(rows)
}

/// MSE of the balanced model with `M` blocks at size `n`, for every `M` in
/// `m_list`, one `T = 1` trial per seed.
pub fn block_sweep(n: usize, m_list: &[usize], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &m in m_list {
        let spec = SbmFamily::balanced(m).instantiate(n, &mut rng::stream(0, 0))?;
        for &seed in seeds {
            let out = run_mse_trial(&spec, 1, m, seed)?;
            log::info!("M = {m}, seed = {seed}: mse = {:.4e}", out.mse);
            rows.push(SweepRow {
                x: m,
                seed,
                mse: out.mse,
                non_monotone: out.non_monotone,
            });
        }
    }
    Ok(rows)
}

/// Median of the finite values; `None` if there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    })
}

/// Per-`x` medians of sweep rows, in order of first appearance.
pub fn medians_by_x(rows: &[SweepRow]) -> Vec<(usize, f64)> {
    let mut xs: Vec<usize> = Vec::new();
    for r in rows {
        if !xs.contains(&r.x) {
            xs.push(r.x);
        }
    }
    xs.into_iter()
        .filter_map(|x| {
            let v: Vec<f64> = rows.iter().filter(|r| r.x == x).map(|r| r.mse).collect();
            median(&v).map(|m| (x, m))
        })
        .collect()
}

/// Least-squares slope of `ln y` against `ln x`; `None` with fewer than two
/// distinct `x` or any nonpositive value.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 1e-12).then(|| sxy / sxx)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` equally spaced edges from 0 to 2.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Pooled histogram of the Laplacian eigenvalues of `graphs` on `[0, 2]`.
/// Bins are half-open except the last, which includes 2; values within
/// rounding of the ends are clamped in.
pub fn spectrum_histogram(graphs: &[AdjacencyMatrix], bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let edges: Vec<f64> = (0..=bins).map(|k| 2.0 * k as f64 / bins as f64).collect();
    let mut counts = vec![0; bins];
    for g in graphs {
        for &x in sym_eigvals(normalized_laplacian(g).entries())?.as_slice() {
            let k = ((x / 2.0) * bins as f64).floor();
            counts[(k.max(0.0) as usize).min(bins - 1)] += 1;
        }
    }
    Ok(Histogram { edges, counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn block_scaling() {
        assert_eq!(
            scale_block_sizes(&[63, 147, 105, 197], 512).unwrap(),
            vec![63, 147, 105, 197]
        );
        let s = scale_block_sizes(&[63, 147, 105, 197], 128).unwrap();
        assert_eq!(s.iter().sum::<usize>(), 128);
        assert_eq!(s, vec![15, 36, 26, 51]);
        assert!(scale_block_sizes(&[1, 100], 10).is_err());
    }

    #[test]
    fn four_block_family_matches_the_published_setup() {
        let spec = SbmFamily::four_block()
            .instantiate(512, &mut rng::stream(0, 0))
            .unwrap();
        let ln = 512f64.ln();
        assert_abs_diff_eq!(spec.q(), 2.0 * ln / 512.0, epsilon = 1e-15);
        for &p in spec.p() {
            let c = p * 512.0 / (ln * ln);
            assert!((1.0..4.0).contains(&c));
        }
        assert_eq!(spec.block_sizes(), vec![63, 147, 105, 197]);
    }

    #[test]
    fn slope_and_median() {
        let pts: Vec<(f64, f64)> = [1.0f64, 2.0, 4.0, 8.0]
            .iter()
            .map(|&x| (x, 3.0 * x.powf(-1.5)))
            .collect();
        assert_abs_diff_eq!(loglog_slope(&pts).unwrap(), -1.5, epsilon = 1e-12);
        assert!(loglog_slope(&[(2.0, 1.0)]).is_none());
        assert!(loglog_slope(&[(2.0, 1.0), (2.0, 3.0)]).is_none());
        assert_eq!(median(&[3.0, f64::NAN, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0]), Some(2.5));
        assert_eq!(median(&[f64::NAN]), None);
    }

    #[test]
    fn histogram_of_empty_graphs_sits_at_one() {
        let h =
            spectrum_histogram(&[AdjacencyMatrix::zeros(4), AdjacencyMatrix::zeros(4)], 4).unwrap();
        assert_eq!(h.counts, vec![0, 0, 8, 0]);
        assert_eq!(h.edges, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let k2 = AdjacencyMatrix::from_edges(2, &[(0, 1)]).unwrap();
        let h = spectrum_histogram(&[k2], 4).unwrap();
        assert_eq!(h.counts, vec![1, 0, 0, 1]);
    }

    #[test]
    fn trial_is_deterministic() {
        let spec = SbmSpec::balanced(60, 2, 0.6, 0.05).unwrap();
        let a = run_mse_trial(&spec, 2, 2, 5).unwrap();
        let b = run_mse_trial(&spec, 2, 2, 5).unwrap();
        assert_eq!(a, b);
        assert!(a.mse.is_finite() && a.mse < 0.05);
    }
}
