use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use lims::bench::{downsample, gaussmix, signature, skewed};
use lims::bench::{run_bench, write_csv, DatasetKind, WorkloadSpec};
use lims::dataset::DATASET_MAGIC;
use lims::query::default_delta_r;
use lims::{IndexConfig, LimsIndex, Locator, Metric, MetricDataset, Payload, QueryStats};

#[derive(Parser)]
#[command(name = "lims", version, about = "Learned index for exact similarity search in metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Gaussmix,
    Skewed,
    Signature,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Point,
    Range,
    Knn,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset file.
    Gen {
        #[arg(long, value_enum)]
        kind: Kind,
        /// Number of records. Signature data is generated at 100,000 and
        /// downsampled when n is smaller.
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 8)]
        d: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build an index file from a dataset file.
    Build {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "K", default_value_t = 50)]
        clusters: usize,
        #[arg(long = "m", default_value_t = 3)]
        pivots: usize,
        #[arg(long = "N", default_value_t = 20)]
        rings: usize,
        #[arg(long, default_value_t = 20)]
        deg_rp: usize,
        #[arg(long, default_value_t = 1)]
        deg_addr: usize,
        #[arg(long, default_value_t = 4096)]
        page_size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run queries from a file against an index.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Dataset file, or text with one query per line: numbers separated
        /// by commas or spaces for vectors, raw strings for edit distance.
        #[arg(long)]
        q_file: PathBuf,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        k: Option<usize>,
        /// kNN radius step; estimated from the indexed data when absent.
        #[arg(long)]
        delta_r: Option<f64>,
        #[arg(long, default_value = "lims")]
        locator: Locator,
    },
    /// Run a benchmark spec and write CSV rows.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        csv: PathBuf,
        /// LMSD dataset file to use instead of the spec's `dataset`.
        #[arg(long)]
        load: Option<PathBuf>,
    },
    /// Print index parameters and sizes.
    Stats {
        #[arg(long)]
        index: PathBuf,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cli.command {
        Command::Gen { kind, n, d, seed, out: path } => {
            let ds = match kind {
                Kind::Gaussmix => gaussmix(n, d, seed),
                Kind::Skewed => skewed(n, d, seed),
                Kind::Signature => {
                    let full = signature(seed);
                    if n < full.len() {
                        downsample(&full, n, seed).0
                    } else {
                        full
                    }
                }
            };
            ds.save(&path).with_context(|| format!("writing {}", path.display()))?;
            writeln!(out, "wrote {} records ({}, d={}) to {}", ds.len(), ds.metric(), ds.dim(), path.display())?;
        }
        Command::Build { data, out: path, clusters, pivots, rings, deg_rp, deg_addr, page_size, seed } => {
            let ds = MetricDataset::load(&data).with_context(|| format!("reading {}", data.display()))?;
            let config = IndexConfig {
                clusters,
                pivots,
                rings,
                pivot_degree: deg_rp,
                address_degree: deg_addr,
                page_size,
                seed,
            };
            let start = Instant::now();
            let index = LimsIndex::build(&ds, config)?;
            let elapsed = start.elapsed();
            index.save(&path).with_context(|| format!("writing {}", path.display()))?;
            writeln!(
                out,
                "built index over {} records in {:.1} ms: {} pages, {} bytes",
                ds.len(),
                elapsed.as_secs_f64() * 1e3,
                index.store().page_count(),
                fs::metadata(&path)?.len()
            )?;
        }
        Command::Query { index, mode, q_file, r, k, delta_r, locator } => {
            let mut idx = LimsIndex::open(&index).with_context(|| format!("opening {}", index.display()))?;
            idx.set_locator(locator);
            let queries = read_queries(&q_file, idx.metric())?;
            run_queries(&idx, mode, &queries, r, k, delta_r, &mut out)?;
        }
        Command::Bench { spec, csv, load } => {
            let text = fs::read_to_string(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let mut spec = WorkloadSpec::parse(&text)?;
            if let Some(path) = load {
                spec.dataset = DatasetKind::Load(path);
            }
            let rows = run_bench(&spec)?;
            write_csv(&rows, File::create(&csv).with_context(|| format!("creating {}", csv.display()))?)?;
            writeln!(out, "wrote {} rows to {}", rows.len(), csv.display())?;
        }
        Command::Stats { index } => {
            let idx = LimsIndex::open(&index).with_context(|| format!("opening {}", index.display()))?;
            let c = idx.config();
            writeln!(out, "metric  {}", idx.metric())?;
            writeln!(out, "d       {}", idx.dim())?;
            writeln!(out, "n       {}", idx.len())?;
            writeln!(out, "K       {}", c.clusters)?;
            writeln!(out, "m       {}", c.pivots)?;
            writeln!(out, "N       {}", c.rings)?;
            writeln!(out, "omega   {}", idx.records_per_page())?;
            writeln!(out, "pages   {}", idx.store().page_count())?;
            writeln!(out, "bytes   {}", fs::metadata(&index)?.len())?;
            let sizes: Vec<String> = idx.clusters().iter().map(|cl| (cl.live + cl.buffer.len()).to_string()).collect();
            writeln!(out, "clusters {}", sizes.join(" "))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_queries(path: &Path, metric: Metric) -> Result<Vec<Payload>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if bytes.starts_with(DATASET_MAGIC) {
        let ds = MetricDataset::from_bytes(&bytes)?;
        return Ok(ds.into_records().into_iter().map(|r| r.payload).collect());
    }
    let text = String::from_utf8(bytes).context("query file is neither a dataset nor UTF-8 text")?;
    let mut queries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let payload = if metric.is_vector() {
            let values = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<Vec<f64>, _>>()
                .with_context(|| format!("line {}: expected numbers", i + 1))?;
            Payload::Vector(values)
        } else {
            Payload::text(line)
        };
        queries.push(payload);
    }
    Ok(queries)
}

fn write_stats(out: &mut impl Write, i: usize, hits: usize, s: &QueryStats) -> io::Result<()> {
    writeln!(
        out,
        "# query {i}: {hits} hits, pages_read={} distance_computations={} clusters_pruned={} intervals={} range_calls={}",
        s.pages_read, s.distance_computations, s.clusters_pruned, s.intervals_generated, s.range_calls
    )
}

fn run_queries(
    idx: &LimsIndex,
    mode: Mode,
    queries: &[Payload],
    r: Option<f64>,
    k: Option<usize>,
    delta_r: Option<f64>,
    out: &mut impl Write,
) -> Result<()> {
    let delta_r = match (mode, delta_r) {
        (Mode::Knn, None) => {
            let sample: Vec<Payload> = idx.scan_live()?.into_iter().take(5000).map(|r| r.payload).collect();
            default_delta_r(&sample, idx.metric(), 0)?
        }
        (_, dr) => dr.unwrap_or(1.0),
    };
    writeln!(out, "query\tid\tdistance")?;
    for (i, q) in queries.iter().enumerate() {
        match mode {
            Mode::Point => {
                let (found, stats) = idx.point_with_stats(q)?;
                write_stats(out, i, usize::from(found.is_some()), &stats)?;
                if let Some(rec) = found {
                    writeln!(out, "{i}\t{}\t0", rec.id)?;
                }
            }
            Mode::Range => {
                let Some(r) = r else { bail!("range queries need --r") };
                let res = idx.range(q, r)?;
                write_stats(out, i, res.hits.len(), &res.stats)?;
                for h in &res.hits {
                    writeln!(out, "{i}\t{}\t{}", h.id, h.distance)?;
                }
            }
            Mode::Knn => {
                let Some(k) = k else { bail!("kNN queries need --k") };
                let res = idx.knn(q, k, delta_r)?;
                write_stats(out, i, res.neighbors.len(), &res.stats)?;
                for h in &res.neighbors {
                    writeln!(out, "{i}\t{}\t{}", h.id, h.distance)?;
                }
            }
        }
    }
    Ok(())
}
