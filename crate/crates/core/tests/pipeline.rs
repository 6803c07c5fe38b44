use specbary::experiments::{median, run_mse_trial, SbmFamily};
use specbary::rng::stream;
use specbary::*;

#[test]
fn four_block_population_splits_at_block_ends() {
    let spec = SbmSpec::new(&[63, 147, 105, 197], vec![0.3, 0.15, 0.2, 0.12], 0.03).unwrap();
    let basis = best_soules_basis(population_mean(&spec).entries(), 4).unwrap();
    let mut cuts: Vec<usize> = basis.tree.splits()[..3].iter().map(|s| s.istar).collect();
    cuts.sort_unstable();
    assert_eq!(cuts, vec![63, 210, 315]);
    assert!(basis.is_complete());
}

#[test]
fn error_shrinks_with_more_samples() {
    let spec = SbmFamily::balanced(4)
        .instantiate(256, &mut stream(0, 0))
        .unwrap();
    let medians: Vec<f64> = [1, 4, 16, 64]
        .iter()
        .map(|&t| {
            let errs: Vec<f64> = (0..20)
                .map(|seed| run_mse_trial(&spec, t, 4, 700 + seed).unwrap().mse)
                .collect();
            median(&errs).unwrap()
        })
        .collect();
    assert!(
        medians.windows(2).all(|w| w[1] < w[0]),
        "medians by T: {medians:?}"
    );
}

#[test]
fn sample_mean_concentrates_entrywise() {
    let spec = SbmSpec::balanced(20, 2, 0.5, 0.1).unwrap();
    let pm = population_mean(&spec);
    let (mut exceed, mut total) = (0usize, 0usize);
    for trial in 0..50 {
        let graphs = sample_ensemble(&spec, 100, 300 + trial);
        let mean = sample_mean_adjacency(&graphs).unwrap();
        for j in 0..20 {
            for i in 0..j {
                total += 1;
                if (mean[(i, j)] - pm.entries()[(i, j)]).abs() >= 0.2 {
                    exceed += 1;
                }
            }
        }
    }
    assert!(
        (exceed as f64) / (total as f64) <= 0.01,
        "{exceed} of {total}"
    );
}

#[test]
fn mean_second_eigenvalue_matches_limit() {
    let (n, p, q) = (1000, 0.5, 0.1);
    let spec = SbmSpec::balanced(n, 2, p, q).unwrap();
    let spectra: Vec<EigenvalueVector> = sample_ensemble(&spec, 50, 11)
        .iter()
        .map(|g| sym_eigvals(normalized_laplacian(g).entries()).unwrap())
        .collect();
    let mean = sample_mean_eigenvalues(&spectra).unwrap();
    let limit = limit_eigenvalues(2, p, q, n).unwrap();
    assert!(
        (mean[1] - limit[1]).abs() < 0.05,
        "{} vs {}",
        mean[1],
        limit[1]
    );
}

#[test]
fn barycentre_is_permutation_equivariant() {
    let spec = SbmSpec::balanced(90, 3, 0.4, 0.05).unwrap();
    let graphs = sample_ensemble(&spec, 5, 21);
    let cfg = BarycentreConfig::new(Communities::Fixed(3), 4);
    let base = compute_barycentre(&graphs, &cfg).unwrap();

    let perm = specbary::experiments::random_permutation(90, &mut stream(21, 9)).unwrap();
    let shuffled: Vec<AdjacencyMatrix> =
        graphs.iter().map(|g| permute(g, &perm).unwrap()).collect();
    let moved = compute_barycentre(&shuffled, &cfg).unwrap();
    let expected = permute_matrix(base.mu_hat.as_ref(), &perm).unwrap();
    assert!(mse(expected.as_ref(), moved.mu_hat.as_ref()).unwrap() < 1e-20);
}

#[test]
fn auto_communities_recover_block_count() {
    let spec = SbmSpec::balanced(120, 3, 0.5, 0.05).unwrap();
    let graphs = sample_ensemble(&spec, 10, 5);
    let res = compute_barycentre(&graphs, &BarycentreConfig::new(Communities::Auto, 1)).unwrap();
    assert_eq!(res.communities, 3);
    let mut groups = res.communities_original();
    groups.sort();
    let want: Vec<Vec<usize>> = spec.blocks().iter().map(|b| b.clone().collect()).collect();
    assert_eq!(groups, want);
}

#[test]
fn large_eigendecomposition_reconstructs() {
    let n = 512;
    let spec = SbmSpec::balanced(n, 4, 0.2, 0.02).unwrap();
    let l = normalized_laplacian(&sample(&spec, 3));
    let s = sym_eig(l.entries()).unwrap();
    let scaled = Mat::from_fn(n, n, |i, k| s.vectors[(i, k)] * s.values[k]);
    let rec = &scaled * s.vectors.transpose();
    let mut err = 0.0;
    let mut norm = 0.0;
    for j in 0..n {
        for i in 0..n {
            err += (rec[(i, j)] - l.entries()[(i, j)]).powi(2);
            norm += l.entries()[(i, j)].powi(2);
        }
    }
    assert!(err.sqrt() <= 1e-7 * (1.0 + norm.sqrt()));
}
