//! Spectral barycentres of graph ensembles with community structure.
//!
//! The barycentre of `T` graphs on a common node set is built from the mean
//! of their normalized-Laplacian spectra: the `M` smallest mean eigenvalues
//! are kept, the rest are set to 1, and the spectrum is paired with a Soules
//! basis found greedily on the community-aligned sample mean adjacency. The
//! resulting Laplacian is mapped back to a weighted adjacency matrix using
//! block-constant degree estimates.
//!
//! ```
//! use specbary::{compute_barycentre, sample_ensemble, BarycentreConfig, Communities, SbmSpec};
//!
//! let spec = SbmSpec::balanced(60, 3, 0.6, 0.05).unwrap();
//! let graphs = sample_ensemble(&spec, 4, 7);
//! let res = compute_barycentre(&graphs, &BarycentreConfig::new(Communities::Fixed(3), 1)).unwrap();
//! assert_eq!(res.degrees.blocks.len(), 3);
//! ```

pub mod alignment;
pub mod barycentre;
pub mod eigen;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod ingest;
pub mod io;
pub mod rng;
pub mod sbm;
pub mod soules;

pub use alignment::{
    canonical_permutation, cluster_nodes, estimate_m, spectral_embed, ClusterAssignment,
};
pub use barycentre::{
    compute_barycentre, estimate_block_degrees, estimate_block_row_degrees, mse,
    reconstruct_barycentre, regularize_eigenvalues, sample_mean_adjacency, sample_mean_eigenvalues,
    truncated_laplacian, BarycentreConfig, BarycentreResult, BlockDegrees, BlockPartition,
    Communities, DegreeEstimator, MeanSpectrum,
};
pub use eigen::{sym_eig, sym_eigvals, SpectralSummary};
pub use error::{Error, Result};
pub use faer::{Mat, MatRef};
pub use graph::{
    degree_matrix, normalized_adjacency, normalized_laplacian, permute, permute_matrix,
    spectral_distance, AdjacencyMatrix, DegreeMatrix, EigenvalueVector, NormalizedLaplacian,
    Permutation,
};
pub use ingest::{
    parse_contacts, read_contacts_file, window_graphs, ContactEvent, Period, SnapshotSeries,
};
pub use sbm::{
    expected_degrees, expected_laplacian, limit_eigenvalues, population_mean, sample,
    sample_ensemble, sample_stream, PopulationMean, SbmSpec, SbmSpecFile,
};
pub use soules::{
    best_soules_basis, build_vector, cumulative_projector, inner_product_score, leaf_projector,
    rank_one_projection, synthesize_laplacian, synthesize_symmetric, Leaf, SoulesBasis,
    SoulesSplit, SoulesTree,
};
