//! Workload specs, the benchmark loop and its CSV output.
//!
//! A spec is a list of `key = value` lines; `#` starts a comment:
//!
//! ```text
//! dataset = gaussmix        # gaussmix | skewed | signature | path to an LMSD file
//! n = 10000
//! d = 8
//! queries = 200
//! repetitions = 20
//! selectivities = 0.0001, 0.001, 0.01
//! ks = 1, 5, 25, 50, 100
//! K = 50
//! m = 3
//! N = 20
//! sweep = m                 # K | m | N, optional
//! values = 1, 2, 3, 4, 5
//! variants = lims, nlims
//! ```

use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bench::generators::{downsample, gaussmix, signature, skewed};
use crate::bench::oracle::{distance_multiset, id_set, scan};
use crate::dataset::{MetricDataset, Record};
use crate::error::{Error, Result};
use crate::index::{IndexConfig, LimsIndex};
use crate::query::{default_delta_r, Hit};
use crate::rank_model::Locator;

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetKind {
    GaussMix,
    Skewed,
    Signature,
    Load(PathBuf),
}

impl DatasetKind {
    pub fn name(&self) -> String {
        match self {
            DatasetKind::GaussMix => "gaussmix".into(),
            DatasetKind::Skewed => "skewed".into(),
            DatasetKind::Signature => "signature".into(),
            DatasetKind::Load(p) => p.display().to_string(),
        }
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gaussmix" => DatasetKind::GaussMix,
            "skewed" => DatasetKind::Skewed,
            "signature" => DatasetKind::Signature,
            path => DatasetKind::Load(PathBuf::from(path)),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParam {
    Clusters,
    Pivots,
    Rings,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub dataset: DatasetKind,
    pub n: usize,
    pub d: usize,
    pub seed: u64,
    pub queries: usize,
    pub repetitions: usize,
    pub selectivities: Vec<f64>,
    pub ks: Vec<usize>,
    pub config: IndexConfig,
    pub sweep: Option<(SweepParam, Vec<usize>)>,
    pub variants: Vec<Locator>,
    /// kNN radius step; estimated from the data when absent.
    pub delta_r: Option<f64>,
    /// Split queries across threads. Page counts are unaffected.
    pub parallel: bool,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            dataset: DatasetKind::GaussMix,
            n: 10_000,
            d: 8,
            seed: 0,
            queries: 200,
            repetitions: 20,
            selectivities: vec![0.0001, 0.001, 0.01],
            ks: vec![1, 5, 25, 50, 100],
            config: IndexConfig::default(),
            sweep: None,
            variants: vec![Locator::Learned, Locator::BinarySearch],
            delta_r: None,
            parallel: false,
        }
    }
}

fn list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::param(format!("bad value {s:?} for {key}"))))
        .collect()
}

fn one<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::param(format!("bad value {value:?} for {key}")))
}

impl WorkloadSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = WorkloadSpec::default();
        let mut sweep_param = None;
        let mut sweep_values = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::param(format!("line {}: expected key = value", lineno + 1)))?;
            let key = key.trim();
            let value = value.trim().trim_matches('"');
            match key {
                "dataset" => spec.dataset = value.parse()?,
                "n" => spec.n = one(key, value)?,
                "d" => spec.d = one(key, value)?,
                "seed" => spec.seed = one(key, value)?,
                "queries" => spec.queries = one(key, value)?,
                "repetitions" => spec.repetitions = one(key, value)?,
                "selectivities" => spec.selectivities = list(key, value)?,
                "ks" => spec.ks = list(key, value)?,
                "K" => spec.config.clusters = one(key, value)?,
                "m" => spec.config.pivots = one(key, value)?,
                "N" => spec.config.rings = one(key, value)?,
                "deg_rp" => spec.config.pivot_degree = one(key, value)?,
                "deg_addr" => spec.config.address_degree = one(key, value)?,
                "page_size" => spec.config.page_size = one(key, value)?,
                "index_seed" => spec.config.seed = one(key, value)?,
                "delta_r" => spec.delta_r = Some(one(key, value)?),
                "parallel" => spec.parallel = one(key, value)?,
                "variants" => spec.variants = list(key, value)?,
                "sweep" => {
                    sweep_param = Some(match value {
                        "K" => SweepParam::Clusters,
                        "m" => SweepParam::Pivots,
                        "N" => SweepParam::Rings,
                        other => return Err(Error::param(format!("cannot sweep {other:?}"))),
                    })
                }
                "values" => sweep_values = Some(list(key, value)?),
                other => return Err(Error::param(format!("line {}: unknown key {other:?}", lineno + 1))),
            }
        }
        spec.sweep = match (sweep_param, sweep_values) {
            (Some(p), Some(v)) => Some((p, v)),
            (None, None) => None,
            _ => return Err(Error::param("sweep and values must be given together")),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.queries == 0 || self.repetitions == 0 {
            return Err(Error::param("n, queries and repetitions must be positive"));
        }
        if self.variants.is_empty() {
            return Err(Error::param("at least one variant is required"));
        }
        if self.selectivities.iter().any(|&s| !(s > 0.0 && s <= 1.0)) || self.ks.contains(&0) {
            return Err(Error::param("selectivities must lie in (0, 1] and ks be positive"));
        }
        for cfg in self.configs() {
            cfg.validate()?;
        }
        Ok(())
    }

    /// One index configuration per sweep value, or the base configuration.
    pub fn configs(&self) -> Vec<IndexConfig> {
        match &self.sweep {
            None => vec![self.config],
            Some((param, values)) => values
                .iter()
                .map(|&v| {
                    let mut c = self.config;
                    match param {
                        SweepParam::Clusters => c.clusters = v,
                        SweepParam::Pivots => c.pivots = v,
                        SweepParam::Rings => c.rings = v,
                    }
                    c
                })
                .collect(),
        }
    }

    /// The indexed dataset and the query records. Generated datasets get
    /// held-out queries from the same distribution; loaded datasets use a
    /// seeded sample of their own records.
    pub fn materialize(&self) -> Result<(MetricDataset, Vec<Record>)> {
        let q = self.queries;
        Ok(match &self.dataset {
            DatasetKind::GaussMix => gaussmix(self.n + q, self.d, self.seed).split_tail(q),
            DatasetKind::Skewed => skewed(self.n + q, self.d, self.seed).split_tail(q),
            DatasetKind::Signature => {
                let (ds, rest) = downsample(&signature(self.seed), self.n, self.seed);
                (ds, pick(&rest, q, self.seed))
            }
            DatasetKind::Load(path) => {
                let ds = MetricDataset::load(path)?;
                let queries = pick(ds.records(), q, self.seed);
                (ds, queries)
            }
        })
    }
}

fn pick(records: &[Record], count: usize, seed: u64) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let count = count.min(records.len());
    sample(&mut rng, records.len(), count).into_iter().map(|i| records[i].clone()).collect()
}

/// One line of benchmark output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub dataset: String,
    pub n: usize,
    pub d: usize,
    pub metric: String,
    pub variant: String,
    #[serde(rename = "K")]
    pub clusters: usize,
    pub m: usize,
    #[serde(rename = "N")]
    pub rings: usize,
    /// `range:<selectivity>` or `knn:<k>`.
    pub workload: String,
    pub mean_query_us: f64,
    pub mean_pages_read: f64,
    pub build_ms: f64,
    pub index_bytes: u64,
}

pub fn write_csv(rows: &[BenchRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Radius at which `q` has `⌈s·n⌉` (at least one) records in range, from
/// its sorted oracle scan.
pub fn selectivity_radius(sorted: &[Hit], s: f64) -> f64 {
    let k = ((s * sorted.len() as f64).round() as usize).clamp(1, sorted.len());
    sorted[k - 1].distance
}

#[derive(Clone, Copy)]
enum Task {
    Range(f64),
    Knn(usize),
}

struct Measured {
    micros: f64,
    pages: u64,
}

fn run_one(index: &LimsIndex, q: &Record, oracle: &[Hit], task: Task, delta_r: f64, check: bool) -> Result<Measured> {
    let start = Instant::now();
    let (hits, pages) = match task {
        Task::Range(s) => {
            let r = selectivity_radius(oracle, s);
            let res = index.range(&q.payload, r)?;
            let elapsed = start.elapsed();
            if check {
                let want: Vec<Hit> = oracle.iter().take_while(|h| h.distance <= r).copied().collect();
                if id_set(&res.hits) != id_set(&want) {
                    return Err(Error::OracleMismatch(format!(
                        "range query {} r={r}: index {} hits, oracle {}",
                        q.id,
                        res.hits.len(),
                        want.len()
                    )));
                }
            }
            return Ok(Measured { micros: elapsed.as_secs_f64() * 1e6, pages: res.stats.pages_read });
        }
        Task::Knn(k) => {
            let res = index.knn(&q.payload, k, delta_r)?;
            (res.neighbors, res.stats.pages_read)
        }
    };
    let elapsed = start.elapsed();
    if let (true, Task::Knn(k)) = (check, task) {
        let want = &oracle[..k.min(oracle.len())];
        if distance_multiset(&hits) != distance_multiset(want) {
            return Err(Error::OracleMismatch(format!("{k}NN query {}: distances differ from oracle", q.id)));
        }
    }
    Ok(Measured { micros: elapsed.as_secs_f64() * 1e6, pages })
}

fn run_task(
    index: &LimsIndex,
    queries: &[Record],
    oracles: &[Vec<Hit>],
    task: Task,
    delta_r: f64,
    repetitions: usize,
    parallel: bool,
) -> Result<(f64, f64)> {
    let run_range = |lo: usize, hi: usize| -> Result<(f64, u64)> {
        let mut micros = 0.0;
        let mut pages = 0;
        for rep in 0..repetitions {
            for i in lo..hi {
                let m = run_one(index, &queries[i], &oracles[i], task, delta_r, rep == 0)?;
                micros += m.micros;
                if rep == 0 {
                    pages += m.pages;
                }
            }
        }
        Ok((micros, pages))
    };
    let (micros, pages) = if parallel {
        let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(queries.len()).max(1);
        let chunk = queries.len().div_ceil(threads);
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..threads)
                .map(|t| {
                    let lo = (t * chunk).min(queries.len());
                    let hi = ((t + 1) * chunk).min(queries.len());
                    s.spawn(move || run_range(lo, hi))
                })
                .collect();
            handles.into_iter().try_fold((0.0, 0), |acc, h| {
                let (m, p) = h.join().expect("bench thread panicked")?;
                Ok::<_, Error>((acc.0 + m, acc.1 + p))
            })
        })?
    } else {
        run_range(0, queries.len())?
    };
    let nq = queries.len() as f64;
    Ok((micros / (nq * repetitions as f64), pages as f64 / nq))
}

/// Builds one index per configuration and measures every workload for
/// every variant. Each query is checked against the oracle on its first
/// repetition; a mismatch aborts the run.
pub fn run_bench(spec: &WorkloadSpec) -> Result<Vec<BenchRow>> {
    spec.validate()?;
    let (ds, queries) = spec.materialize()?;
    let metric = ds.metric();
    let oracles: Vec<Vec<Hit>> = queries.iter().map(|q| scan(ds.records(), metric, &q.payload)).collect();
    let delta_r = match spec.delta_r {
        Some(dr) => dr,
        None => {
            let sample: Vec<_> = ds.records().iter().take(5000).map(|r| r.payload.clone()).collect();
            default_delta_r(&sample, metric, spec.seed)?
        }
    };
    let mut tasks: Vec<(String, Task)> =
        spec.selectivities.iter().map(|&s| (format!("range:{s}"), Task::Range(s))).collect();
    tasks.extend(spec.ks.iter().map(|&k| (format!("knn:{k}"), Task::Knn(k))));

    let mut rows = Vec::new();
    for config in spec.configs() {
        let start = Instant::now();
        let mut index = LimsIndex::build(&ds, config)?;
        let build_ms = start.elapsed().as_secs_f64() * 1e3;
        let index_bytes = index.to_bytes()?.len() as u64;
        for &variant in &spec.variants {
            index.set_locator(variant);
            for (name, task) in &tasks {
                let (mean_query_us, mean_pages_read) =
                    run_task(&index, &queries, &oracles, *task, delta_r, spec.repetitions, spec.parallel)?;
                rows.push(BenchRow {
                    dataset: spec.dataset.name(),
                    n: ds.len(),
                    d: ds.dim(),
                    metric: metric.name().to_string(),
                    variant: variant.name().to_string(),
                    clusters: config.clusters,
                    m: config.pivots,
                    rings: config.rings,
                    workload: name.clone(),
                    mean_query_us,
                    mean_pages_read,
                    build_ms,
                    index_bytes,
                });
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_spec() {
        let spec = WorkloadSpec::parse(
            "# small\n dataset = skewed\nn=500\nd = 4\nqueries = 10 # inline\nrepetitions=1\n\
             selectivities = 0.01\nks = 1, 3\nK = 5\nsweep = m\nvalues = 1,2,3,4,5\nvariants = lims\n",
        )
        .unwrap();
        assert_eq!(spec.dataset, DatasetKind::Skewed);
        assert_eq!((spec.n, spec.d, spec.queries), (500, 4, 10));
        assert_eq!(spec.ks, vec![1, 3]);
        assert_eq!(spec.configs().len(), 5);
        assert_eq!(spec.configs()[4].pivots, 5);
        assert_eq!(spec.variants, vec![Locator::Learned]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(WorkloadSpec::parse("colour = red").is_err());
        assert!(WorkloadSpec::parse("n = many").is_err());
        assert!(WorkloadSpec::parse("sweep = m").is_err());
        assert!(WorkloadSpec::parse("sweep = d\nvalues = 1").is_err());
        assert!(WorkloadSpec::parse("selectivities = 2").is_err());
        assert!(WorkloadSpec::parse("just text").is_err());
    }

    #[test]
    fn selectivity_radius_picks_the_kth_distance() {
        let hits: Vec<Hit> = (0..1000).map(|i| Hit { id: i, distance: i as f64 / 10.0 }).collect();
        assert_eq!(selectivity_radius(&hits, 0.0001), 0.0);
        assert_eq!(selectivity_radius(&hits, 0.01), 0.9);
        assert_eq!(selectivity_radius(&hits, 1.0), 99.9);
    }

    #[test]
    fn m_sweep_is_exact_and_deterministic() {
        let spec = WorkloadSpec {
            n: 800,
            d: 4,
            queries: 12,
            repetitions: 2,
            selectivities: vec![0.01],
            ks: vec![],
            config: IndexConfig { clusters: 6, ..Default::default() },
            sweep: Some((SweepParam::Pivots, vec![1, 2, 3, 4, 5])),
            variants: vec![Locator::Learned],
            ..Default::default()
        };
        let rows = run_bench(&spec).unwrap();
        assert_eq!(rows.len(), 5);
        let again = run_bench(&WorkloadSpec { parallel: true, ..spec }).unwrap();
        let pages = |rows: &[BenchRow]| rows.iter().map(|r| r.mean_pages_read).collect::<Vec<_>>();
        assert_eq!(pages(&rows), pages(&again));

        let mut csv = Vec::new();
        write_csv(&rows, &mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "dataset,n,d,metric,variant,K,m,N,workload,mean_query_us,mean_pages_read,build_ms,index_bytes"
        );
        assert_eq!(text.lines().count(), 6);
    }
}
