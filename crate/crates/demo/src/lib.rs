//! Browser demo: a LIMS index over 2-D GaussMix points, driven from a
//! canvas page. Every call returns JSON so the page needs no bindings
//! beyond strings.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use lims::bench::gaussmix;
use lims::query::default_delta_r;
use lims::{Hit, IndexConfig, LimsIndex, Locator, MetricDataset, Payload, QueryStats};

#[derive(Serialize, Debug)]
pub struct Point {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub cluster: usize,
}

#[derive(Serialize, Debug)]
pub struct Cluster {
    pub centroid: [f64; 2],
    pub pivots: Vec<[f64; 2]>,
    pub size: usize,
}

#[derive(Serialize, Debug)]
pub struct Snapshot {
    pub points: Vec<Point>,
    pub clusters: Vec<Cluster>,
    pub pages: u64,
    pub records_per_page: usize,
    pub build_ms: f64,
    pub delta_r: f64,
}

#[derive(Serialize, Debug, PartialEq)]
pub struct Stats {
    pub pages_read: u64,
    pub full_scan_pages: u64,
    pub distance_computations: u64,
    pub clusters_pruned: u64,
    pub intervals: u64,
    pub range_calls: u64,
}

#[derive(Serialize, Debug)]
pub struct Answer {
    pub ids: Vec<u64>,
    pub distances: Vec<f64>,
    /// Radius of the circle that encloses the answer.
    pub radius: f64,
    pub stats: Stats,
    /// Same query with binary search in place of the rank models.
    pub binary_search_stats: Stats,
}

/// Index plus the data it was built from.
pub struct Demo {
    index: LimsIndex,
    dataset: MetricDataset,
    delta_r: f64,
    build_ms: f64,
}

fn xy(p: &Payload) -> [f64; 2] {
    let v = p.as_vector().expect("demo data is vectors");
    [v[0], v[1]]
}

impl Demo {
    pub fn build(n: usize, clusters: usize, pivots: usize, rings: usize, seed: u64) -> lims::Result<Self> {
        let dataset = gaussmix(n, 2, seed);
        let config = IndexConfig { clusters, pivots, rings, seed, ..Default::default() };
        let start = now_ms();
        let index = LimsIndex::build(&dataset, config)?;
        let build_ms = now_ms() - start;
        let sample: Vec<Payload> = dataset.records().iter().take(5000).map(|r| r.payload.clone()).collect();
        let delta_r = default_delta_r(&sample, dataset.metric(), seed)?;
        Ok(Demo { index, dataset, delta_r, build_ms })
    }

    pub fn snapshot(&self) -> Snapshot {
        let owner = self.index.record_positions();
        let points = self
            .dataset
            .records()
            .iter()
            .map(|r| {
                let [x, y] = xy(&r.payload);
                Point { id: r.id, x, y, cluster: owner[&r.id].0 }
            })
            .collect();
        let clusters = self
            .index
            .clusters()
            .iter()
            .map(|c| Cluster {
                centroid: xy(&c.centroid().payload),
                pivots: c.pivots.iter().map(|o| xy(&o.payload)).collect(),
                size: c.len(),
            })
            .collect();
        Snapshot {
            points,
            clusters,
            pages: self.index.full_scan_pages(),
            records_per_page: self.index.records_per_page(),
            build_ms: self.build_ms,
            delta_r: self.delta_r,
        }
    }

    fn stats(&self, s: &QueryStats) -> Stats {
        Stats {
            pages_read: s.pages_read,
            full_scan_pages: self.index.full_scan_pages(),
            distance_computations: s.distance_computations,
            clusters_pruned: s.clusters_pruned,
            intervals: s.intervals_generated,
            range_calls: s.range_calls,
        }
    }

    fn with_both_locators<T>(&mut self, f: impl Fn(&LimsIndex) -> lims::Result<T>) -> lims::Result<(T, T)> {
        self.index.set_locator(Locator::BinarySearch);
        let binary = f(&self.index);
        self.index.set_locator(Locator::Learned);
        Ok((f(&self.index)?, binary?))
    }

    fn answer(&self, hits: &[Hit], radius: f64, stats: &QueryStats, binary: &QueryStats) -> Answer {
        Answer {
            ids: hits.iter().map(|h| h.id).collect(),
            distances: hits.iter().map(|h| h.distance).collect(),
            radius,
            stats: self.stats(stats),
            binary_search_stats: self.stats(binary),
        }
    }

    pub fn range(&mut self, x: f64, y: f64, r: f64) -> lims::Result<Answer> {
        let q = Payload::Vector(vec![x, y]);
        let (res, bin) = self.with_both_locators(|idx| idx.range(&q, r))?;
        Ok(self.answer(&res.hits, r, &res.stats, &bin.stats))
    }

    pub fn knn(&mut self, x: f64, y: f64, k: usize) -> lims::Result<Answer> {
        let q = Payload::Vector(vec![x, y]);
        let dr = self.delta_r;
        let (res, bin) = self.with_both_locators(|idx| idx.knn(&q, k, dr))?;
        let radius = res.neighbors.last().map_or(0.0, |h| h.distance);
        Ok(self.answer(&res.neighbors, radius, &res.stats, &bin.stats))
    }
}

#[cfg(target_arch = "wasm32")]
fn now_ms() -> f64 {
    js_sys_now()
}

#[cfg(target_arch = "wasm32")]
#[wasm_bindgen]
extern "C" {
    #[wasm_bindgen(js_namespace = Date, js_name = now)]
    fn js_sys_now() -> f64;
}

#[cfg(not(target_arch = "wasm32"))]
fn now_ms() -> f64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64() * 1e3)
}

fn to_js<T: Serialize>(value: lims::Result<T>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

/// Handle held by the page.
#[wasm_bindgen]
pub struct LimsDemo {
    inner: Demo,
}

#[wasm_bindgen]
impl LimsDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(n: usize, clusters: usize, pivots: usize, rings: usize, seed: u32) -> Result<LimsDemo, JsError> {
        let inner = Demo::build(n, clusters, pivots, rings, u64::from(seed)).map_err(|e| JsError::new(&e.to_string()))?;
        Ok(LimsDemo { inner })
    }

    /// Points, clusters and pivots as JSON.
    pub fn snapshot(&self) -> Result<String, JsError> {
        to_js(Ok(self.inner.snapshot()))
    }

    pub fn range(&mut self, x: f64, y: f64, r: f64) -> Result<String, JsError> {
        to_js(self.inner.range(x, y, r))
    }

    pub fn knn(&mut self, x: f64, y: f64, k: usize) -> Result<String, JsError> {
        to_js(self.inner.knn(x, y, k))
    }
}
