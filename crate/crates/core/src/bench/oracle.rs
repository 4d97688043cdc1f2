//! Linear-scan answers used to check every index result.

use crate::dataset::Record;
use crate::metric::{Metric, Payload};
use crate::query::Hit;
use crate::rank_model::exact_rank;

/// Every record within `r` of `q`, in record order.
pub fn oracle_range(records: &[Record], metric: Metric, q: &Payload, r: f64) -> Vec<Hit> {
    records
        .iter()
        .map(|rec| Hit { id: rec.id, distance: metric.distance(q, &rec.payload) })
        .filter(|h| h.distance <= r)
        .collect()
}

/// The `k` nearest records by a stable sort on distance.
pub fn oracle_knn(records: &[Record], metric: Metric, q: &Payload, k: usize) -> Vec<Hit> {
    let mut all = scan(records, metric, q);
    all.truncate(k);
    all
}

/// Distances from `q` to every record, sorted stably.
pub fn scan(records: &[Record], metric: Metric, q: &Payload) -> Vec<Hit> {
    let mut all: Vec<Hit> =
        records.iter().map(|rec| Hit { id: rec.id, distance: metric.distance(q, &rec.payload) }).collect();
    all.sort_by(|a, b| a.distance.total_cmp(&b.distance));
    all
}

/// Rank by plain binary search, the locator of the N-LIMS ablation.
pub fn nlims_locate<T: PartialOrd>(keys: &[T], x: &T) -> usize {
    exact_rank(keys, x)
}

/// Sorted ids of a hit list.
pub fn id_set(hits: &[Hit]) -> Vec<u64> {
    let mut ids: Vec<u64> = hits.iter().map(|h| h.id).collect();
    ids.sort_unstable();
    ids
}

/// Sorted distances of a hit list.
pub fn distance_multiset(hits: &[Hit]) -> Vec<f64> {
    let mut d: Vec<f64> = hits.iter().map(|h| h.distance).collect();
    d.sort_by(f64::total_cmp);
    d
}
