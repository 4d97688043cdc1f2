//! Exact point, range and kNN queries with page-access accounting.
//!
//! A range query runs four stages before refinement:
//!
//! 1. [`tri_prune`] drops clusters whose pivot distance ranges cannot
//!    reach the query ball.
//! 2. [`area_locate`] turns the ball into a ring-ID interval per pivot.
//! 3. [`interval_gen`] enumerates the LIMS key ranges those intervals span.
//! 4. [`pos_locate`] maps key ranges to page ids.
//!
//! Every record on the selected pages is then checked against the true
//! distance. Insert buffers are searched separately by centroid distance.
//! kNN runs range queries of radius `Δr, 2Δr, ...` without re-reading pages.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Record;
use crate::error::{Error, Result};
use crate::index::{ClusterIndex, LimsIndex};
use crate::metric::{Metric, Payload};
use crate::rank_model::Locator;
use crate::storage::AccessCounter;

/// Pruning bounds are widened by this relative amount so that rounding in
/// computed distances cannot drop a qualifying record. Refinement uses the
/// exact radius.
const PRUNE_SLACK: f64 = 1e-9;

fn widen(r: f64) -> f64 {
    r + PRUNE_SLACK * (1.0 + r)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QueryStats {
    pub pages_read: u64,
    pub distance_computations: u64,
    pub clusters_pruned: u64,
    pub intervals_generated: u64,
    /// Range queries issued (1 for a plain range query).
    pub range_calls: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub id: u64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RangeResult {
    /// Matches sorted by distance, then id.
    pub hits: Vec<Hit>,
    pub stats: QueryStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnnResult {
    /// Nearest neighbors sorted by distance.
    pub neighbors: Vec<Hit>,
    pub stats: QueryStats,
    /// Pages in the order they were read; never repeats.
    pub pages: Vec<u64>,
}

/// Inclusive ring-ID interval for one pivot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RingBounds {
    pub rid_min: u64,
    pub rid_max: u64,
}

/// Inclusive LIMS key range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct KeyRange {
    pub left: u64,
    pub right: u64,
}

/// Distances from `q` to every pivot of every cluster.
pub fn pivot_distances(index: &LimsIndex, q: &Payload) -> Vec<Vec<f64>> {
    let metric = index.metric();
    index
        .clusters()
        .iter()
        .map(|c| c.pivots.iter().map(|o| metric.distance(q, &o.payload)).collect())
        .collect()
}

/// Clusters that may hold records within `r` of the query, given the
/// query's pivot distances `qd`.
pub fn tri_prune(index: &LimsIndex, qd: &[Vec<f64>], r: f64) -> Vec<usize> {
    let r = widen(r);
    index
        .clusters()
        .iter()
        .enumerate()
        .filter(|(i, c)| {
            c.lists
                .iter()
                .zip(&qd[*i])
                .all(|(l, &d)| d <= l.dist_max + r && d >= l.dist_min - r)
        })
        .map(|(i, _)| i)
        .collect()
}

/// Ring-ID bounds per pivot of the region of `cluster` within `r` of the
/// query. `None` when some pivot's band holds no records.
pub fn area_locate(
    cluster: &ClusterIndex,
    qd: &[f64],
    r: f64,
    rings: usize,
    locator: Locator,
) -> Option<Vec<RingBounds>> {
    let r = widen(r);
    cluster
        .lists
        .iter()
        .zip(qd)
        .map(|(list, &d)| {
            let r_min = (d - r).max(list.dist_min);
            let r_max = (d + r).min(list.dist_max);
            if r_min > r_max {
                return None;
            }
            list.boundary_ranks(r_min, r_max, rings, locator)
                .map(|b| RingBounds { rid_min: b.rid_min, rid_max: b.rid_max })
        })
        .collect()
}

/// LIMS key ranges covering every ring-ID tuple inside `bounds`: one range
/// per path through the first `m-1` digit sets, spanning the last digit
/// from its minimum to its maximum.
pub fn interval_gen(bounds: &[RingBounds], rings: u64) -> Vec<KeyRange> {
    fn dfs(bounds: &[RingBounds], rings: u64, prefix: u64, out: &mut Vec<KeyRange>) {
        let (head, rest) = bounds.split_first().expect("at least one pivot");
        if rest.is_empty() {
            out.push(KeyRange {
                left: prefix * rings + head.rid_min,
                right: prefix * rings + head.rid_max,
            });
            return;
        }
        for rid in head.rid_min..=head.rid_max {
            dfs(rest, rings, prefix * rings + rid, out);
        }
    }
    let mut out = Vec::new();
    if !bounds.is_empty() {
        dfs(bounds, rings, 0, &mut out);
    }
    out
}

/// Pages of `cluster` holding keys inside any of `ranges`, ascending.
pub fn pos_locate(cluster: &ClusterIndex, ranges: &[KeyRange], per_page: usize, locator: Locator) -> Vec<u64> {
    let keys = &cluster.keys;
    let n = keys.len();
    let mut pages = BTreeSet::new();
    for range in ranges {
        let lbound = locator.first_geq(keys, &cluster.key_model, &range.left, range.left as f64);
        if lbound >= n {
            continue;
        }
        let upper = locator.first_geq(keys, &cluster.key_model, &range.right, range.right as f64);
        let ubound = if upper < n && keys[upper] == range.right {
            locator.last_occurrence(keys, upper, &range.right).unwrap_or(upper)
        } else if upper == 0 {
            continue;
        } else {
            upper - 1
        };
        if lbound > ubound {
            continue;
        }
        for page in cluster.page_of(lbound, per_page)..=cluster.page_of(ubound, per_page) {
            pages.insert(page);
        }
    }
    pages.into_iter().collect()
}

/// Insert-buffer pages of `cluster` whose records may lie within `r`,
/// given the query's distance to the centroid.
pub fn buffer_pages(cluster: &ClusterIndex, centroid_dist: f64, r: f64, per_page: usize) -> Vec<u64> {
    let buf = &cluster.buffer;
    if buf.is_empty() {
        return Vec::new();
    }
    let r = widen(r);
    let lo = buf.dists.partition_point(|&d| d < centroid_dist - r);
    let hi = buf.dists.partition_point(|&d| d <= centroid_dist + r);
    if lo >= hi {
        return Vec::new();
    }
    buf.pages[lo / per_page..=(hi - 1) / per_page].to_vec()
}

/// Every intermediate product of a range query, for inspection.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RangePlan {
    pub relevant: Vec<usize>,
    /// Ring bounds of clusters that survived area location.
    pub bounds: BTreeMap<usize, Vec<RingBounds>>,
    pub intervals: BTreeMap<usize, Vec<KeyRange>>,
    /// Main-region pages, ascending.
    pub pages: Vec<u64>,
    pub buffer_pages: Vec<u64>,
}

impl RangePlan {
    pub fn intervals_generated(&self) -> u64 {
        self.intervals.values().map(|v| v.len() as u64).sum()
    }

    /// All pages to read, ascending and distinct.
    pub fn all_pages(&self) -> Vec<u64> {
        let mut all: Vec<u64> = self.pages.iter().chain(&self.buffer_pages).copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

/// Runs every pruning stage for `(q, r)` given precomputed pivot distances.
pub fn plan_range(index: &LimsIndex, qd: &[Vec<f64>], r: f64) -> RangePlan {
    let per_page = index.records_per_page();
    let rings = index.rings();
    let locator = index.locator();
    let mut plan = RangePlan { relevant: tri_prune(index, qd, r), ..Default::default() };
    let mut pages = BTreeSet::new();
    for &i in &plan.relevant {
        let cluster = &index.clusters()[i];
        let Some(bounds) = area_locate(cluster, &qd[i], r, rings, locator) else {
            continue;
        };
        let ranges = interval_gen(&bounds, rings as u64);
        pages.extend(pos_locate(cluster, &ranges, per_page, locator));
        plan.bounds.insert(i, bounds);
        plan.intervals.insert(i, ranges);
    }
    plan.pages = pages.into_iter().collect();
    for (i, cluster) in index.clusters().iter().enumerate() {
        plan.buffer_pages.extend(buffer_pages(cluster, qd[i][0], r, per_page));
    }
    plan.buffer_pages.sort_unstable();
    plan
}

struct Found {
    record: Record,
    distance: f64,
}

impl LimsIndex {
    fn pivot_distance_count(&self) -> u64 {
        self.clusters().iter().map(|c| c.pivot_count() as u64).sum()
    }

    fn execute_range(&self, q: &Payload, r: f64) -> Result<(Vec<Found>, QueryStats)> {
        self.check_payload(q)?;
        if !(r >= 0.0) {
            return Err(Error::param(format!("radius must be non-negative, got {r}")));
        }
        let metric = self.metric();
        let qd = pivot_distances(self, q);
        let plan = plan_range(self, &qd, r);
        let mut counter = AccessCounter::default();
        let mut stats = QueryStats {
            distance_computations: self.pivot_distance_count(),
            clusters_pruned: (self.clusters().len() - plan.relevant.len()) as u64,
            intervals_generated: plan.intervals_generated(),
            range_calls: 1,
            ..Default::default()
        };
        let mut found = Vec::new();
        for page in plan.all_pages() {
            for record in self.store.read_page(page, &mut counter)? {
                if self.is_deleted(record.id) {
                    continue;
                }
                stats.distance_computations += 1;
                let distance = metric.distance(q, &record.payload);
                if distance <= r {
                    found.push(Found { record, distance });
                }
            }
        }
        stats.pages_read = counter.pages_read;
        Ok((found, stats))
    }

    /// All live records within distance `r` of `q`.
    pub fn range(&self, q: &Payload, r: f64) -> Result<RangeResult> {
        let (found, stats) = self.execute_range(q, r)?;
        let mut hits: Vec<Hit> = found.iter().map(|f| Hit { id: f.record.id, distance: f.distance }).collect();
        hits.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.id.cmp(&b.id)));
        Ok(RangeResult { hits, stats })
    }

    /// A live record equal to `q`, if any.
    pub fn point(&self, q: &Payload) -> Result<Option<Record>> {
        Ok(self.point_with_stats(q)?.0)
    }

    pub fn point_with_stats(&self, q: &Payload) -> Result<(Option<Record>, QueryStats)> {
        let (found, stats) = self.execute_range(q, 0.0)?;
        let hit = found.into_iter().map(|f| f.record).find(|rec| rec.payload == *q);
        Ok((hit, stats))
    }

    /// The `k` live records nearest to `q`, found by range queries of radius
    /// `Δr, 2Δr, ...`. Returns all records when `k` exceeds the count.
    pub fn knn(&self, q: &Payload, k: usize, delta_r: f64) -> Result<KnnResult> {
        self.check_payload(q)?;
        if k == 0 {
            return Err(Error::param("k must be positive"));
        }
        if !(delta_r > 0.0) || !delta_r.is_finite() {
            return Err(Error::param(format!("Δr must be positive, got {delta_r}")));
        }
        let k = k.min(self.len());
        let mut stats = QueryStats { distance_computations: self.pivot_distance_count(), ..Default::default() };
        let mut pages_read = Vec::new();
        if k == 0 {
            return Ok(KnnResult { neighbors: Vec::new(), stats, pages: pages_read });
        }
        let metric = self.metric();
        let qd = pivot_distances(self, q);
        let mut visited = BTreeSet::new();
        let mut counter = AccessCounter::default();
        let mut seq = 0u64;
        // scanned records not yet inside the radius
        let mut pool: BinaryHeap<Reverse<Candidate>> = BinaryHeap::new();
        // current k best within the radius, max at the top
        let mut best: BinaryHeap<Candidate> = BinaryHeap::with_capacity(k + 1);
        let mut step = 0u64;
        loop {
            step += 1;
            let r = step as f64 * delta_r;
            let done = best.len() == k && best.peek().is_some_and(|c| c.distance < r);
            let plan = plan_range(self, &qd, r);
            stats.range_calls += 1;
            stats.clusters_pruned += (self.clusters().len() - plan.relevant.len()) as u64;
            stats.intervals_generated += plan.intervals_generated();
            for page in plan.all_pages() {
                if !visited.insert(page) {
                    continue;
                }
                pages_read.push(page);
                for record in self.store.read_page(page, &mut counter)? {
                    if self.is_deleted(record.id) {
                        continue;
                    }
                    stats.distance_computations += 1;
                    let distance = metric.distance(q, &record.payload);
                    pool.push(Reverse(Candidate { distance, seq, id: record.id }));
                    seq += 1;
                }
            }
            while pool.peek().is_some_and(|c| c.0.distance <= r) {
                let Reverse(c) = pool.pop().unwrap();
                if best.len() < k {
                    best.push(c);
                } else if best.peek().is_some_and(|top| c.distance < top.distance) {
                    best.pop();
                    best.push(c);
                }
            }
            if done {
                break;
            }
        }
        stats.pages_read = counter.pages_read;
        let mut neighbors: Vec<Hit> = best
            .into_sorted_vec()
            .into_iter()
            .map(|c| Hit { id: c.id, distance: c.distance })
            .collect();
        neighbors.sort_by(|a, b| a.distance.total_cmp(&b.distance));
        Ok(KnnResult { neighbors, stats, pages: pages_read })
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    distance: f64,
    /// Scan order; earlier candidates win ties.
    seq: u64,
    id: u64,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.distance.total_cmp(&other.distance).then(self.seq.cmp(&other.seq))
    }
}

/// Range calls a kNN query issues when its k-th neighbor is at distance
/// `kth`: `⌈kth/Δr⌉ + 1`, with at least two calls since the first can never
/// terminate the search.
pub fn expected_range_calls(kth: f64, delta_r: f64) -> u64 {
    ((kth / delta_r).ceil() as u64).max(1) + 1
}

/// Initial kNN radius: the 1st percentile of 1000 seeded random pairwise
/// distances. Falls back to the smallest positive sampled distance, then
/// to 1.0, when the percentile is zero.
pub fn default_delta_r(sample: &[Payload], metric: Metric, seed: u64) -> Result<f64> {
    const PAIRS: usize = 1000;
    if sample.len() < 2 {
        return Err(Error::param("Δr estimation needs at least two objects"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dists: Vec<f64> = (0..PAIRS)
        .map(|_| {
            let a = rng.random_range(0..sample.len());
            let mut b = rng.random_range(0..sample.len() - 1);
            if b >= a {
                b += 1;
            }
            metric.distance(&sample[a], &sample[b])
        })
        .collect();
    dists.sort_by(f64::total_cmp);
    let pct = dists[PAIRS.div_ceil(100) - 1];
    if pct > 0.0 {
        return Ok(pct);
    }
    Ok(dists.iter().copied().find(|&d| d > 0.0).unwrap_or(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::MetricDataset;
    use crate::index::{decode_lims, encode_lims, IndexConfig};

    fn words() -> MetricDataset {
        MetricDataset::words(&["fame", "gain", "aim", "ACM"]).unwrap()
    }

    fn word_index() -> LimsIndex {
        let cfg = IndexConfig { clusters: 1, pivots: 1, rings: 2, ..Default::default() };
        LimsIndex::build(&words(), cfg).unwrap()
    }

    #[test]
    fn word_queries() {
        let idx = word_index();
        let game = Payload::text("game");
        let res = idx.range(&game, 2.0).unwrap();
        let found: Vec<&[u8]> = res.hits.iter().map(|h| words().records()[h.id as usize].payload.as_text().unwrap().to_vec().leak() as &[u8]).collect();
        assert_eq!(found, vec![b"fame" as &[u8], b"gain"]);
        let nn = idx.knn(&game, 1, 1.0).unwrap();
        assert_eq!(nn.neighbors.len(), 1);
        assert_eq!(nn.neighbors[0].id, 0);
        assert_eq!(nn.neighbors[0].distance, 1.0);
        assert_eq!(nn.stats.range_calls, expected_range_calls(1.0, 1.0));
    }

    #[test]
    fn interval_gen_three_pivots() {
        let b = [
            RingBounds { rid_min: 2, rid_max: 4 },
            RingBounds { rid_min: 6, rid_max: 8 },
            RingBounds { rid_min: 1, rid_max: 5 },
        ];
        let got = interval_gen(&b, 10);
        let mut want = Vec::new();
        for a in 2..=4u64 {
            for c in 6..=8u64 {
                want.push(KeyRange {
                    left: encode_lims(&[a, c, 1], 10).unwrap(),
                    right: encode_lims(&[a, c, 5], 10).unwrap(),
                });
            }
        }
        assert_eq!(got.len(), 9);
        assert_eq!(got, want);
        assert_eq!(got[0], KeyRange { left: 261, right: 265 });
        assert_eq!(got[8], KeyRange { left: 481, right: 485 });
    }

    #[test]
    fn interval_gen_single_point() {
        let b = [RingBounds { rid_min: 3, rid_max: 3 }; 3];
        assert_eq!(interval_gen(&b, 7), vec![KeyRange { left: 3 * 49 + 3 * 7 + 3, right: 3 * 49 + 3 * 7 + 3 }]);
    }

    #[test]
    fn interval_gen_covers_exactly_the_box() {
        for m in 1..=3usize {
            for rings in 2..=4u64 {
                let total = rings.pow(m as u32);
                // every box with corner digits in range
                for lo_key in 0..total {
                    for hi_key in 0..total {
                        let lo = decode_lims(lo_key, rings, m);
                        let hi = decode_lims(hi_key, rings, m);
                        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
                            continue;
                        }
                        let bounds: Vec<RingBounds> =
                            lo.iter().zip(&hi).map(|(&a, &b)| RingBounds { rid_min: a, rid_max: b }).collect();
                        let ranges = interval_gen(&bounds, rings);
                        let prod: usize = bounds[..m - 1].iter().map(|b| (b.rid_max - b.rid_min + 1) as usize).product();
                        assert_eq!(ranges.len(), prod);
                        for key in 0..total {
                            let t = decode_lims(key, rings, m);
                            let inside = t.iter().zip(&bounds).all(|(d, b)| *d >= b.rid_min && *d <= b.rid_max);
                            let covered = ranges.iter().any(|r| r.left <= key && key <= r.right);
                            assert_eq!(inside, covered, "m={m} N={rings} key={key}");
                        }
                    }
                }
            }
        }
    }

    fn synthetic_cluster(keys: Vec<u64>) -> ClusterIndex {
        let f: Vec<f64> = keys.iter().map(|&k| k as f64).collect();
        ClusterIndex {
            pivots: Vec::new(),
            lists: Vec::new(),
            ids: (0..keys.len() as u64).collect(),
            key_model: crate::rank_model::RankModel::train(&f, 1).unwrap(),
            keys,
            first_page: 0,
            page_count: 0,
            buffer: Default::default(),
            live: 0,
        }
    }

    #[test]
    fn pos_locate_cases() {
        let c = synthetic_cluster(vec![1, 1, 2, 2, 3, 3]);
        for loc in [Locator::Learned, Locator::BinarySearch] {
            assert_eq!(pos_locate(&c, &[KeyRange { left: 2, right: 2 }], 2, loc), vec![1]);
            assert!(pos_locate(&c, &[KeyRange { left: 7, right: 9 }], 2, loc).is_empty());
            assert!(pos_locate(&c, &[KeyRange { left: 0, right: 0 }], 2, loc).is_empty());
        }
        // right endpoint repeated across a page boundary
        let c = synthetic_cluster(vec![1, 2, 2, 2, 5]);
        assert_eq!(pos_locate(&c, &[KeyRange { left: 2, right: 2 }], 2, Locator::Learned), vec![0, 1]);
        assert_eq!(pos_locate(&c, &[KeyRange { left: 0, right: 3 }], 2, Locator::Learned), vec![0, 1]);
        assert_eq!(pos_locate(&c, &[KeyRange { left: 3, right: 5 }], 2, Locator::Learned), vec![2]);
    }

    #[test]
    fn point_query_hits_and_misses() {
        let idx = word_index();
        assert_eq!(idx.point(&Payload::text("aim")).unwrap().unwrap().id, 2);
        assert!(idx.point(&Payload::text("game")).unwrap().is_none());
        assert!(idx.point(&Payload::Vector(vec![1.0])).is_err());
    }

    #[test]
    fn knn_with_k_beyond_size_returns_everything() {
        let idx = word_index();
        let res = idx.knn(&Payload::text("game"), 10, 0.5).unwrap();
        let d: Vec<f64> = res.neighbors.iter().map(|h| h.distance).collect();
        assert_eq!(d, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(idx.knn(&Payload::text("game"), 0, 1.0).is_err());
        assert!(idx.knn(&Payload::text("game"), 1, 0.0).is_err());
    }

    #[test]
    fn range_rejects_negative_radius() {
        assert!(word_index().range(&Payload::text("x"), -1.0).is_err());
    }

    #[test]
    fn expected_calls_formula() {
        assert_eq!(expected_range_calls(1.0, 1.0), 2);
        assert_eq!(expected_range_calls(2.5, 1.0), 4);
        assert_eq!(expected_range_calls(0.0, 1.0), 2);
    }

    #[test]
    fn delta_r_estimates() {
        let mut pts = vec![Payload::Vector(vec![0.0, 0.0]); 100];
        pts.push(Payload::Vector(vec![1.0, 0.0]));
        assert_eq!(default_delta_r(&pts, Metric::L2, 3).unwrap(), 1.0);
        let same = vec![Payload::Vector(vec![0.5]); 5];
        assert_eq!(default_delta_r(&same, Metric::L2, 3).unwrap(), 1.0);
        assert!(default_delta_r(&same[..1], Metric::L2, 3).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Payload> = (0..500).map(|_| Payload::Vector(vec![rng.random(), rng.random()])).collect();
        let dr = default_delta_r(&pts, Metric::L2, 9).unwrap();
        let mut sum = 0.0;
        let mut cnt = 0.0;
        for a in &pts[..100] {
            for b in &pts[100..200] {
                sum += Metric::L2.distance(a, b);
                cnt += 1.0;
            }
        }
        assert!(dr > 0.0 && dr < sum / cnt);
        assert_eq!(dr, default_delta_r(&pts, Metric::L2, 9).unwrap());
    }
}
