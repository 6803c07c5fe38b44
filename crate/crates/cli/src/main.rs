use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use specbary::experiments::{
    block_sweep, loglog_slope, medians_by_x, random_permutation, size_sweep, spectrum_histogram,
    Coefficients, SbmFamily, SweepRow,
};
use specbary::ingest::{surrogate, write_contacts};
use specbary::io::{
    read_graph_dir, read_json, write_barycentre, write_graph_dir, write_series, Diagnostics,
};
use specbary::rng::{derive_seed, stream};
use specbary::*;

/// Spectral barycentres of graph ensembles with community structure.
#[derive(Parser)]
#[command(name = "specbary", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample graphs from a block model, each relabelled by a random permutation.
    Sample(SampleArgs),
    /// Compute the barycentre of the graphs in a directory.
    Barycentre(BarycentreArgs),
    /// MSE against graph size for a family of block models.
    SizeSweep(SizeSweepArgs),
    /// MSE against the number of balanced blocks.
    BlockSweep(BlockSweepArgs),
    /// Pooled histogram of Laplacian eigenvalues.
    Spectrum(SpectrumArgs),
    /// Turn a contact list into windowed snapshot graphs.
    Ingest(IngestArgs),
    /// Write a synthetic school contact list with the study's class layout.
    SurrogateSchool(SurrogateArgs),
}

#[derive(Args)]
struct SampleArgs {
    /// Block model JSON: {"n", "block_sizes", "p", "q"}.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long = "T", default_value_t = 1)]
    t: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relabel every graph with the same permutation.
    #[arg(long)]
    shared_permutation: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BarycentreArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Number of communities.
    #[arg(
        long = "M",
        required_unless_present = "auto_m",
        conflicts_with = "auto_m"
    )]
    m: Option<usize>,
    /// Estimate the number of communities from the mean spectrum.
    #[arg(long = "auto-M")]
    auto_m: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Estimate degrees from within-block sums only.
    #[arg(long)]
    within_block_degrees: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct Seeds {
    /// First seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of consecutive seeds, one trial each.
    #[arg(long, default_value_t = 10)]
    runs: u64,
}

impl Seeds {
    fn list(&self) -> Result<Vec<u64>> {
        if self.runs == 0 {
            bail!(Usage("--runs must be positive".into()));
        }
        Ok((self.seed..self.seed + self.runs).collect())
    }
}

#[derive(Args)]
struct SizeSweepArgs {
    /// Base model; its relative block sizes and its coefficients in
    /// p = c (ln n)²/n, q = c' ln n / n are kept. Defaults to the four-block
    /// model with random c.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "100,200,300,400,500,600,700,800,900,1000,1075"
    )]
    n_list: Vec<usize>,
    #[command(flatten)]
    seeds: Seeds,
    /// Output CSV; a summary JSON is written next to it.
    #[arg(long)]
    out: PathBuf,
    /// Also write a gnuplot script next to the CSV.
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Args)]
struct BlockSweepArgs {
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16,32")]
    m_list: Vec<usize>,
    #[command(flatten)]
    seeds: Seeds,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    gnuplot: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum PeriodArg {
    Morning,
    Afternoon,
}

#[derive(Args)]
struct IngestArgs {
    /// Contact list: `t i j [class_i class_j]` per line, optionally gzipped.
    #[arg(long)]
    contacts: PathBuf,
    /// Default time range and window width.
    #[arg(long, value_enum, default_value = "morning")]
    period: PeriodArg,
    /// Overrides the period start; seconds or HH:MM.
    #[arg(long, value_parser = parse_time)]
    start: Option<i64>,
    #[arg(long, value_parser = parse_time)]
    end: Option<i64>,
    /// Window width in seconds.
    #[arg(long)]
    width: Option<i64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SurrogateArgs {
    #[arg(long, default_value_t = 2011)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Bad arguments detected after parsing; exits with status 2.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn parse_time(s: &str) -> std::result::Result<i64, String> {
    if let Some((h, m)) = s.split_once(':') {
        let h: i64 = h.parse().map_err(|_| format!("bad hour in {s:?}"))?;
        let m: i64 = m.parse().map_err(|_| format!("bad minute in {s:?}"))?;
        if !(0..60).contains(&m) {
            return Err(format!("bad minute in {s:?}"));
        }
        Ok(h * 3600 + m * 60)
    } else {
        s.parse()
            .map_err(|_| format!("expected seconds or HH:MM, got {s:?}"))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<Usage>()) {
        return 2;
    }
    match e.chain().find_map(|c| c.downcast_ref::<Error>()) {
        Some(err) if err.is_numerical() => 4,
        _ => 3,
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Sample(a) => cmd_sample(a),
        Command::Barycentre(a) => cmd_barycentre(a),
        Command::SizeSweep(a) => cmd_size_sweep(a),
        Command::BlockSweep(a) => cmd_block_sweep(a),
        Command::Spectrum(a) => cmd_spectrum(a),
        Command::Ingest(a) => cmd_ingest(a),
        Command::SurrogateSchool(a) => cmd_surrogate(a),
    }
}

fn read_spec(path: &Path) -> Result<SbmSpec> {
    let file: SbmSpecFile = read_json(path)?;
    SbmSpec::from_file(&file).with_context(|| format!("invalid model in {}", path.display()))
}

fn cmd_sample(a: SampleArgs) -> Result<()> {
    if a.t == 0 {
        bail!(Usage("--T must be at least 1".into()));
    }
    let spec = read_spec(&a.spec)?;
    let n = spec.n();
    let perm_seed = derive_seed(a.seed, 1);
    let perms: Vec<Permutation> = (0..a.t)
        .map(|k| {
            let s = if a.shared_permutation { 0 } else { k as u64 };
            random_permutation(n, &mut stream(perm_seed, s))
        })
        .collect::<specbary::Result<_>>()?;
    let graphs = sample_ensemble(&spec, a.t, a.seed)
        .iter()
        .zip(&perms)
        .map(|(g, p)| permute(g, p))
        .collect::<specbary::Result<Vec<_>>>()?;
    let params = json!({
        "command": "sample",
        "spec": spec.to_file(),
        "T": a.t,
        "seed": a.seed,
        "shared_permutation": a.shared_permutation,
    });
    write_graph_dir(
        &a.out,
        &graphs,
        Some(population_mean(&spec).entries()),
        Some(&perms),
        params,
    )?;
    println!("wrote {} graphs of size {n} to {}", a.t, a.out.display());
    Ok(())
}

fn cmd_barycentre(a: BarycentreArgs) -> Result<()> {
    let dir = read_graph_dir(&a.input)?;
    if dir.graphs.is_empty() {
        bail!("no graphs found in {}", a.input.display());
    }
    let communities = match a.m {
        Some(m) => Communities::Fixed(m),
        None => Communities::Auto,
    };
    let mut config = BarycentreConfig::new(communities, a.seed);
    if a.within_block_degrees {
        config.degree_estimator = DegreeEstimator::WithinBlock;
    }
    let result = compute_barycentre(&dir.graphs, &config)?;
    for w in &result.warnings {
        log::warn!("{w}");
    }

    let mut diag = Diagnostics::from_result(&result, dir.graphs.len());
    diag.parameters = json!({
        "command": "barycentre",
        "input": a.input,
        "M": a.m,
        "auto_M": a.auto_m,
        "seed": a.seed,
        "degree_estimator": if a.within_block_degrees { "within-block" } else { "row-average" },
    });
    if let Some(reference) = &dir.reference {
        // A single reference matches the inputs only when they share one labelling.
        let shared = match &dir.permutations {
            Some(perms) => perms
                .windows(2)
                .all(|w| w[0] == w[1])
                .then(|| perms.first().cloned()),
            None => Some(None),
        };
        match shared {
            Some(perm) => {
                let reference = match perm {
                    Some(p) => permute_matrix(reference.as_ref(), &p)?,
                    None => reference.clone(),
                };
                diag.mse = Some(mse(reference.as_ref(), result.mu_hat.as_ref())?);
            }
            None => diag.notes.push(
                "mse omitted: the graphs carry different permutations, so no single \
                 labelling of the population mean matches the barycentre"
                    .into(),
            ),
        }
    }
    write_barycentre(&a.out, &result, &diag)?;
    print!(
        "barycentre of {} graphs with M = {}",
        dir.graphs.len(),
        result.communities
    );
    match diag.mse {
        Some(e) => println!(", mse {e:.4e}"),
        None => println!(),
    }
    Ok(())
}

/// Keeps the block proportions of `spec` and its coefficients in the
/// logarithmic scaling rules.
fn family_from_spec(spec: &SbmSpec) -> SbmFamily {
    let n = spec.n() as f64;
    let ln = n.ln();
    SbmFamily {
        base_sizes: spec.block_sizes(),
        coefficients: Coefficients::Fixed(spec.p().iter().map(|p| p * n / (ln * ln)).collect()),
        q_coeff: spec.q() * n / ln,
    }
}

fn write_rows(path: &Path, label: &str, rows: &[SweepRow]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut out =
        BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(out, "{label},seed,mse,non_monotone")?;
    for r in rows {
        writeln!(out, "{},{},{:e},{}", r.x, r.seed, r.mse, r.non_monotone)?;
    }
    out.flush()?;
    Ok(())
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gnuplot_sweep(csv: &Path, xlabel: &str, logx: bool) -> String {
    let name = csv.file_name().unwrap_or_default().to_string_lossy();
    let stem = csv.file_stem().unwrap_or_default().to_string_lossy();
    format!(
        "set datafile separator ','\n\
         set key off\n\
         set logscale y\n\
         {logx}set xlabel '{xlabel}'\n\
         set ylabel 'MSE'\n\
         set terminal pngcairo size 800,600\n\
         set output '{stem}.png'\n\
         plot '{name}' using 1:3 every ::1 with points pt 7\n",
        logx = if logx { "set logscale x\n" } else { "" },
    )
}

fn cmd_size_sweep(a: SizeSweepArgs) -> Result<()> {
    let seeds = a.seeds.list()?;
    if a.n_list.is_empty() {
        bail!(Usage("--n-list is empty".into()));
    }
    let family = match &a.spec {
        Some(p) => family_from_spec(&read_spec(p)?),
        None => SbmFamily::four_block(),
    };
    let rows = size_sweep(&family, &a.n_list, &seeds)?;
    write_rows(&a.out, "n", &rows)?;

    let medians = medians_by_x(&rows);
    let points: Vec<(f64, f64)> = medians.iter().map(|&(n, e)| (n as f64, e)).collect();
    let slope = loglog_slope(&points);
    let mut summary = json!({
        "command": "size-sweep",
        "spec": a.spec,
        "n_list": a.n_list,
        "seeds": seeds,
        "medians": medians.iter().map(|(n, e)| json!({"n": n, "mse": e})).collect::<Vec<_>>(),
    });
    if let Some(s) = slope {
        summary["loglog_slope"] = json!(s);
    }
    let summary_path = sibling(&a.out, "_summary.json");
    write_text(&summary_path, &serde_json::to_string_pretty(&summary)?)?;
    if a.gnuplot {
        write_text(&sibling(&a.out, ".gp"), &gnuplot_sweep(&a.out, "n", true))?;
    }
    match slope {
        Some(s) => println!("log-log slope {s:.3} over {} sizes", medians.len()),
        None => println!("slope undefined with {} distinct size(s)", medians.len()),
    }
    Ok(())
}

fn cmd_block_sweep(a: BlockSweepArgs) -> Result<()> {
    let seeds = a.seeds.list()?;
    if a.m_list.is_empty() {
        bail!(Usage("--m-list is empty".into()));
    }
    let rows = block_sweep(a.n, &a.m_list, &seeds)?;
    write_rows(&a.out, "M", &rows)?;
    let medians = medians_by_x(&rows);
    let summary = json!({
        "command": "block-sweep",
        "n": a.n,
        "m_list": a.m_list,
        "seeds": seeds,
        "p_rule": "3 (ln n)^2 / n",
        "q_rule": "2 ln n / n",
        "medians": medians.iter().map(|(m, e)| json!({"M": m, "mse": e})).collect::<Vec<_>>(),
    });
    write_text(
        &sibling(&a.out, "_summary.json"),
        &serde_json::to_string_pretty(&summary)?,
    )?;
    if a.gnuplot {
        write_text(&sibling(&a.out, ".gp"), &gnuplot_sweep(&a.out, "M", true))?;
    }
    for (m, e) in medians {
        println!("M = {m}: median mse {e:.4e}");
    }
    Ok(())
}

fn cmd_spectrum(a: SpectrumArgs) -> Result<()> {
    if a.bins == 0 {
        bail!(Usage("--bins must be positive".into()));
    }
    let dir = read_graph_dir(&a.input)?;
    if dir.graphs.is_empty() {
        bail!("no graphs found in {}", a.input.display());
    }
    let h = spectrum_histogram(&dir.graphs, a.bins)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let mut out = BufWriter::new(
        File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?,
    );
    writeln!(out, "lo,hi,count")?;
    for (k, c) in h.counts.iter().enumerate() {
        writeln!(out, "{},{},{}", h.edges[k], h.edges[k + 1], c)?;
    }
    out.flush()?;
    if a.gnuplot {
        let name = a.out.file_name().unwrap_or_default().to_string_lossy();
        let stem = a.out.file_stem().unwrap_or_default().to_string_lossy();
        let script = format!(
            "set datafile separator ','\n\
             set key off\n\
             set xlabel 'eigenvalue'\n\
             set ylabel 'count'\n\
             set style fill solid 0.6\n\
             set terminal pngcairo size 800,600\n\
             set output '{stem}.png'\n\
             plot '{name}' using (($1+$2)/2):3:($2-$1) every ::1 with boxes\n"
        );
        write_text(&sibling(&a.out, ".gp"), &script)?;
    }
    let total: usize = h.counts.iter().sum();
    println!(
        "{total} eigenvalues from {} graphs in {} bins",
        dir.graphs.len(),
        a.bins
    );
    Ok(())
}

fn cmd_ingest(a: IngestArgs) -> Result<()> {
    let period = match a.period {
        PeriodArg::Morning => Period::Morning,
        PeriodArg::Afternoon => Period::Afternoon,
    };
    let (start, end, width) = period.bounds();
    let (start, end, width) = (
        a.start.unwrap_or(start),
        a.end.unwrap_or(end),
        a.width.unwrap_or(width),
    );
    if width <= 0 || start >= end {
        bail!(Usage(format!(
            "need width > 0 and start < end, got [{start}, {end}) by {width}"
        )));
    }
    let events = read_contacts_file(&a.contacts)?;
    let series = window_graphs(&events, start, end, width)?;
    let params = json!({
        "command": "ingest",
        "contacts": a.contacts,
        "start": start,
        "end": end,
        "width": width,
    });
    write_series(&a.out, &series, params)?;
    println!("{} snapshots over {} nodes", series.len(), series.n());
    Ok(())
}

fn cmd_surrogate(a: SurrogateArgs) -> Result<()> {
    let events = surrogate::school_surrogate(a.seed);
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let file = File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut out = BufWriter::new(file);
    write_contacts(&mut out, &events)?;
    out.flush()?;
    println!("{} contact events", events.len());
    Ok(())
}
