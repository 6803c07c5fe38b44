//! File formats: headerless CSV matrices, JSON manifests and the barycentre
//! export directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::barycentre::BarycentreResult;
use crate::error::{self, Error, Result};
use crate::graph::{AdjacencyMatrix, Permutation};
use crate::ingest::SnapshotSeries;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    Adjacency,
    Laplacian,
}

/// `{"n": …, "path": …, "kind": "adjacency" | "laplacian"}`; `path` is
/// relative to the manifest's directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub n: usize,
    pub path: String,
    pub kind: MatrixKind,
}

/// Index of a directory of matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub matrices: Vec<MatrixEntry>,
    /// Ground-truth mean adjacency, in the original node order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<MatrixEntry>,
    /// CSV with one row per matrix giving the relabelling applied to it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutations: Option<String>,
    #[serde(default)]
    pub parameters: serde_json::Value,
}

pub fn write_matrix_csv(path: &Path, m: MatRef<'_, f64>) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_err)?;
    for i in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|j| m[(i, j)].to_string()))
            .map_err(csv_err)?;
    }
    w.flush().map_err(|e| error::io(path, e))
}

pub fn read_matrix_csv(path: &Path) -> Result<Mat<f64>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| Error::Parse {
                    path: path.display().to_string(),
                    line: k + 1,
                    message: format!("{f:?} is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(Error::Dimension {
            expected: n,
            found: bad.len(),
        });
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn read_adjacency_csv(path: &Path) -> Result<AdjacencyMatrix> {
    AdjacencyMatrix::new(read_matrix_csv(path)?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(|e| error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    writeln!(w).map_err(|e| error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

fn write_lines(path: &Path, lines: impl IntoIterator<Item = String>) -> Result<()> {
    let file = File::create(path).map_err(|e| error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        writeln!(w, "{line}").map_err(|e| error::io(path, e))?;
    }
    w.flush().map_err(|e| error::io(path, e))
}

pub fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| error::io(dir, e))
}

/// Permutations as CSV rows of `forward` maps.
pub fn write_permutations(path: &Path, perms: &[Permutation]) -> Result<()> {
    write_lines(
        path,
        perms.iter().map(|p| {
            p.forward()
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",")
        }),
    )
}

pub fn read_permutations(path: &Path) -> Result<Vec<Permutation>> {
    let text = fs::read_to_string(path).map_err(|e| error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, line)| {
            let forward = line
                .split(',')
                .map(|f| {
                    f.trim().parse::<usize>().map_err(|_| Error::Parse {
                        path: path.display().to_string(),
                        line: k + 1,
                        message: format!("{f:?} is not an index"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Permutation::new(forward)
        })
        .collect()
}

/// Graphs stored in a directory, with their manifest.
#[derive(Clone, Debug)]
pub struct GraphDir {
    pub graphs: Vec<AdjacencyMatrix>,
    pub names: Vec<String>,
    pub reference: Option<Mat<f64>>,
    pub permutations: Option<Vec<Permutation>>,
    pub parameters: serde_json::Value,
}

/// Writes `graph_000.csv, …`, the optional reference and permutations, and a
/// manifest.
pub fn write_graph_dir(
    dir: &Path,
    graphs: &[AdjacencyMatrix],
    reference: Option<MatRef<'_, f64>>,
    permutations: Option<&[Permutation]>,
    parameters: serde_json::Value,
) -> Result<Manifest> {
    create_dir(dir)?;
    let width = graphs.len().saturating_sub(1).to_string().len().max(3);
    let mut matrices = Vec::with_capacity(graphs.len());
    for (t, g) in graphs.iter().enumerate() {
        let name = format!("graph_{t:0width$}.csv");
        write_matrix_csv(&dir.join(&name), g.entries())?;
        matrices.push(MatrixEntry {
            n: g.n(),
            path: name,
            kind: MatrixKind::Adjacency,
        });
    }
    let reference = reference
        .map(|p| {
            let name = "population_mean.csv".to_string();
            write_matrix_csv(&dir.join(&name), p)?;
            Ok::<_, Error>(MatrixEntry {
                n: p.nrows(),
                path: name,
                kind: MatrixKind::Adjacency,
            })
        })
        .transpose()?;
    let permutations = permutations
        .map(|perms| {
            let name = "permutations.csv".to_string();
            write_permutations(&dir.join(&name), perms)?;
            Ok::<_, Error>(name)
        })
        .transpose()?;
    let manifest = Manifest {
        matrices,
        reference,
        permutations,
        parameters,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    Ok(manifest)
}

/// Reads the adjacency matrices of `dir`: those listed in its manifest, or
/// every `*.csv` file in name order if there is none.
pub fn read_graph_dir(dir: &Path) -> Result<GraphDir> {
    let manifest_path = dir.join(MANIFEST);
    if manifest_path.exists() {
        let manifest: Manifest = read_json(&manifest_path)?;
        let mut graphs = Vec::new();
        let mut names = Vec::new();
        for entry in manifest
            .matrices
            .iter()
            .filter(|e| e.kind == MatrixKind::Adjacency)
        {
            let g = read_adjacency_csv(&dir.join(&entry.path))?;
            if g.n() != entry.n {
                return Err(Error::Dimension {
                    expected: entry.n,
                    found: g.n(),
                });
            }
            graphs.push(g);
            names.push(entry.path.clone());
        }
        let reference = manifest
            .reference
            .as_ref()
            .map(|e| read_matrix_csv(&dir.join(&e.path)))
            .transpose()?;
        let permutations = manifest
            .permutations
            .as_ref()
            .map(|p| read_permutations(&dir.join(p)))
            .transpose()?;
        return Ok(GraphDir {
            graphs,
            names,
            reference,
            permutations,
            parameters: manifest.parameters,
        });
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    let graphs = paths
        .iter()
        .map(|p| read_adjacency_csv(p))
        .collect::<Result<Vec<_>>>()?;
    let names = paths
        .iter()
        .map(|p| {
            p.file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned()
        })
        .collect();
    Ok(GraphDir {
        graphs,
        names,
        reference: None,
        permutations: None,
        parameters: serde_json::Value::Null,
    })
}

/// Writes a snapshot series: graphs and manifest, plus `nodes.csv`
/// (`index,raw_id,class`) and `windows.csv` (`index,start,end`).
pub fn write_series(
    dir: &Path,
    series: &SnapshotSeries,
    parameters: serde_json::Value,
) -> Result<()> {
    write_graph_dir(dir, &series.graphs, None, None, parameters)?;
    write_lines(
        &dir.join("nodes.csv"),
        std::iter::once("index,raw_id,class".to_string()).chain(
            series
                .node_ids
                .iter()
                .zip(&series.node_classes)
                .enumerate()
                .map(|(k, (id, c))| format!("{k},{id},{}", c.as_deref().unwrap_or(""))),
        ),
    )?;
    write_lines(
        &dir.join("windows.csv"),
        std::iter::once("index,start,end".to_string()).chain(
            series
                .window_bounds
                .iter()
                .enumerate()
                .map(|(k, (s, e))| format!("{k},{s},{e}")),
        ),
    )
}

/// Summary written to `diagnostics.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub n: usize,
    pub graphs: usize,
    pub communities: usize,
    /// Leaf blocks as half-open `[start, end)` positions in the aligned order.
    pub leaf_blocks: Vec<[usize; 2]>,
    pub block_degrees: Vec<f64>,
    pub non_monotone_spectrum: bool,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mse: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default)]
    pub parameters: serde_json::Value,
}

impl Diagnostics {
    pub fn from_result(result: &BarycentreResult, graphs: usize) -> Self {
        Self {
            n: result.mu_hat.nrows(),
            graphs,
            communities: result.communities,
            leaf_blocks: result
                .degrees
                .blocks
                .blocks()
                .iter()
                .map(|b| [b.start, b.end])
                .collect(),
            block_degrees: result.degrees.dhat.clone(),
            non_monotone_spectrum: result.spectrum.non_monotone,
            warnings: result.warnings.clone(),
            mse: None,
            notes: Vec::new(),
            parameters: serde_json::Value::Null,
        }
    }
}

#[derive(Serialize)]
struct SpectrumFile<'a> {
    communities: usize,
    sample_mean: &'a [f64],
    regularized: &'a [f64],
}

#[derive(Serialize)]
struct DegreesFile<'a> {
    block_sizes: Vec<usize>,
    dhat: &'a [f64],
}

/// Writes the barycentre export directory.
pub fn write_barycentre(
    dir: &Path,
    result: &BarycentreResult,
    diagnostics: &Diagnostics,
) -> Result<()> {
    create_dir(dir)?;
    write_matrix_csv(&dir.join("mu_hat.csv"), result.mu_hat.as_ref())?;
    write_matrix_csv(
        &dir.join("laplacian_hat.csv"),
        result.laplacian_hat.entries(),
    )?;
    write_json(
        &dir.join("spectrum.json"),
        &SpectrumFile {
            communities: result.spectrum.m,
            sample_mean: result.spectrum.sample_mean.as_slice(),
            regularized: &result.spectrum.regularized,
        },
    )?;
    write_json(
        &dir.join("degrees.json"),
        &DegreesFile {
            block_sizes: result.degrees.blocks.sizes(),
            dhat: &result.degrees.dhat,
        },
    )?;
    write_lines(
        &dir.join("permutation.csv"),
        std::iter::once("node,position".to_string()).chain(
            result
                .permutation
                .forward()
                .iter()
                .enumerate()
                .map(|(i, p)| format!("{i},{p}")),
        ),
    )?;
    write_json(&dir.join("soules_tree.json"), &result.tree.splits())?;
    if let Some(a) = &result.assignment {
        write_lines(
            &dir.join("assignment.csv"),
            std::iter::once("node,cluster".to_string())
                .chain(a.labels.iter().enumerate().map(|(i, c)| format!("{i},{c}"))),
        )?;
    }
    write_json(&dir.join("diagnostics.json"), diagnostics)
}
