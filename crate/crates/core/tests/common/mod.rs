#![allow(dead_code)]

use lims::bench::harness::selectivity_radius;
use lims::bench::oracle::{distance_multiset, id_set, scan};
use lims::{Hit, LimsIndex, Metric, Record};

pub const SELECTIVITIES: [f64; 3] = [0.0001, 0.001, 0.01];
pub const KS: [usize; 4] = [1, 5, 25, 100];

#[derive(Default, Debug)]
pub struct SuiteStats {
    pub range_queries: usize,
    pub knn_queries: usize,
    pub range_pages: Vec<u64>,
}

/// Runs every query at every selectivity and k against `index` and a
/// linear scan of `records`. Returns the first mismatch.
pub fn exactness_suite(
    index: &LimsIndex,
    records: &[Record],
    queries: &[Record],
    delta_r: f64,
) -> Result<SuiteStats, String> {
    let metric = index.metric();
    let mut stats = SuiteStats::default();
    for q in queries {
        let oracle = scan(records, metric, &q.payload);
        for s in SELECTIVITIES {
            let r = selectivity_radius(&oracle, s);
            let got = index.range(&q.payload, r).map_err(|e| e.to_string())?;
            let want: Vec<Hit> = oracle.iter().take_while(|h| h.distance <= r).copied().collect();
            if id_set(&got.hits) != id_set(&want) {
                return Err(format!(
                    "range mismatch: query {} s={s} r={r}: {} vs oracle {}",
                    q.id,
                    got.hits.len(),
                    want.len()
                ));
            }
            stats.range_queries += 1;
            stats.range_pages.push(got.stats.pages_read);
        }
        for k in KS {
            let got = index.knn(&q.payload, k, delta_r).map_err(|e| e.to_string())?;
            let want = &oracle[..k.min(oracle.len())];
            if distance_multiset(&got.neighbors) != distance_multiset(want) {
                return Err(format!("{k}NN mismatch on query {}", q.id));
            }
            stats.knn_queries += 1;
        }
    }
    Ok(stats)
}

pub fn mean(xs: &[u64]) -> f64 {
    xs.iter().sum::<u64>() as f64 / xs.len().max(1) as f64
}

pub fn payload_sample(records: &[Record], n: usize) -> Vec<lims::Payload> {
    records.iter().take(n).map(|r| r.payload.clone()).collect()
}

pub fn delta_r(records: &[Record], metric: Metric) -> f64 {
    lims::query::default_delta_r(&payload_sample(records, 5000), metric, 7).unwrap()
}
