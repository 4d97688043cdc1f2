//! The index core: ring partitioning, LIMS keys, per-cluster metadata and
//! the build pipeline.
//!
//! Each cluster keeps, for each of its pivots, the sorted multiset of
//! member-to-pivot distances together with a rank model over it. Ranks are
//! cut into `N` equal-count rings, and a record's LIMS key is the base-`N`
//! number whose digits are its ring IDs, most significant pivot first.
//! Records are laid out on pages in (cluster, key) order, and a second rank
//! model per cluster maps keys to positions.

use std::collections::BTreeMap;

use crate::dataset::{MetricDataset, Record};
use crate::error::{Error, Result};
use crate::metric::{Metric, Payload};
use crate::partitioner::{fft_pivots, k_center};
use crate::rank_model::{exact_rank, Locator, RankModel};
use crate::storage::{PageStore, RecordLayout, DEFAULT_PAGE_SIZE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexConfig {
    /// Number of clusters, K.
    pub clusters: usize,
    /// Pivots per cluster, m.
    pub pivots: usize,
    /// Rings per pivot, N.
    pub rings: usize,
    /// Degree of the per-pivot distance rank models.
    pub pivot_degree: usize,
    /// Degree of the per-cluster key-to-address model.
    pub address_degree: usize,
    pub page_size: usize,
    pub seed: u64,
}

impl Default for IndexConfig {
    fn default() -> Self {
        IndexConfig {
            clusters: 50,
            pivots: 3,
            rings: 20,
            pivot_degree: 20,
            address_degree: 1,
            page_size: DEFAULT_PAGE_SIZE,
            seed: 0,
        }
    }
}

impl IndexConfig {
    pub fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.pivots == 0 || self.rings == 0 {
            return Err(Error::param("K, m and N must all be positive"));
        }
        if self.pivot_degree == 0 || self.address_degree == 0 {
            return Err(Error::param("model degrees must be positive"));
        }
        let pivots = u32::try_from(self.pivots).map_err(|_| Error::param("m too large"))?;
        if (self.rings as u64).checked_pow(pivots).is_none() {
            return Err(Error::param(format!(
                "N^m = {}^{} does not fit in a 64-bit key",
                self.rings, self.pivots
            )));
        }
        Ok(())
    }
}

/// `⌊rank / width⌋`, clamped to the last ring.
#[inline]
pub fn ring_id(rank: usize, ring_width: usize, rings: usize) -> u64 {
    (rank / ring_width.max(1)).min(rings - 1) as u64
}

/// Base-`rings` positional encoding of ring IDs, first pivot most
/// significant. Integer order on the result is the lexicographic order on
/// the ring-ID tuples.
pub fn encode_lims(rids: &[u64], rings: u64) -> Result<u64> {
    let mut key: u64 = 0;
    for &rid in rids {
        if rid >= rings {
            return Err(Error::Encoding { rid, rings });
        }
        key = key
            .checked_mul(rings)
            .and_then(|k| k.checked_add(rid))
            .ok_or_else(|| Error::param("LIMS key overflows 64 bits"))?;
    }
    Ok(key)
}

/// Inverse of [`encode_lims`] for `m` digits.
pub fn decode_lims(mut key: u64, rings: u64, m: usize) -> Vec<u64> {
    let mut rids = vec![0; m];
    for slot in rids.iter_mut().rev() {
        *slot = key % rings;
        key /= rings;
    }
    rids
}

/// Distances from one pivot to every member of its cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct PivotList {
    /// Sorted member distances, including tombstoned members until rebuild.
    pub dists: Vec<f64>,
    pub dist_min: f64,
    pub dist_max: f64,
    /// `⌈|dists| / N⌉`.
    pub ring_width: usize,
    pub model: RankModel,
    /// Sorted distances of tombstoned members.
    pub(crate) removed: Vec<f64>,
}

/// Rank and ring bounds of a distance band `[r_min, r_max]` around a pivot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryRanks {
    pub rank_min: usize,
    pub rank_max: usize,
    pub rid_min: u64,
    pub rid_max: u64,
}

impl PivotList {
    /// Sorts `dists`, trains the rank model and sizes the rings.
    pub fn new(mut dists: Vec<f64>, rings: usize, degree: usize) -> Result<Self> {
        dists.sort_by(f64::total_cmp);
        let model = if dists.is_empty() {
            RankModel::empty(degree)
        } else {
            RankModel::train(&dists, degree)?
        };
        let (dist_min, dist_max) = match (dists.first(), dists.last()) {
            (Some(&lo), Some(&hi)) => (lo, hi),
            _ => (f64::INFINITY, f64::NEG_INFINITY),
        };
        Ok(PivotList {
            ring_width: dists.len().div_ceil(rings).max(1),
            dists,
            dist_min,
            dist_max,
            model,
            removed: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.dists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dists.is_empty()
    }

    /// Ring of a member at distance `d` from this pivot.
    pub fn ring_of_distance(&self, d: f64, rings: usize) -> u64 {
        ring_id(exact_rank(&self.dists, &d), self.ring_width, rings)
    }

    /// Locates `[r_min, r_max]` in the distance array. `None` when no
    /// stored distance falls inside the band.
    pub fn boundary_ranks(&self, r_min: f64, r_max: f64, rings: usize, locator: Locator) -> Option<BoundaryRanks> {
        let n = self.dists.len();
        let rank_min = locator.first_geq(&self.dists, &self.model, &r_min, r_min);
        if rank_min >= n || self.dists[rank_min] > r_max {
            return None;
        }
        let rank_max = locator.first_geq(&self.dists, &self.model, &r_max, r_max);
        let rid_max = if rank_max < n && self.dists[rank_max] == r_max {
            ring_id(rank_max, self.ring_width, rings)
        } else {
            ring_id(rank_max - 1, self.ring_width, rings)
        };
        Some(BoundaryRanks {
            rank_min,
            rank_max,
            rid_min: ring_id(rank_min, self.ring_width, rings),
            rid_max,
        })
    }

    /// Records a tombstoned member's distance and tightens min/max to the
    /// survivors.
    pub(crate) fn remove(&mut self, d: f64) {
        let at = self.removed.partition_point(|x| *x < d);
        self.removed.insert(at, d);
        self.refresh_extent();
    }

    pub(crate) fn refresh_extent(&mut self) {
        // match removed distances against the multiset from both ends
        let (mut i, mut r) = (0, 0);
        let mut lo = f64::INFINITY;
        while i < self.dists.len() {
            if r < self.removed.len() && self.removed[r] == self.dists[i] {
                r += 1;
                i += 1;
                continue;
            }
            lo = self.dists[i];
            break;
        }
        let (mut i, mut r) = (self.dists.len(), self.removed.len());
        let mut hi = f64::NEG_INFINITY;
        while i > 0 {
            if r > 0 && self.removed[r - 1] == self.dists[i - 1] {
                r -= 1;
                i -= 1;
                continue;
            }
            hi = self.dists[i - 1];
            break;
        }
        self.dist_min = lo;
        self.dist_max = hi;
    }
}

/// Records appended since the last (re)build of a cluster, sorted by
/// distance to the cluster centroid and paged separately.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct InsertBuffer {
    /// Ascending centroid distances.
    pub dists: Vec<f64>,
    /// Record ids parallel to `dists`.
    pub ids: Vec<u64>,
    /// Page holding entries `[k·Ω, (k+1)·Ω)` is `pages[k]`.
    pub pages: Vec<u64>,
}

impl InsertBuffer {
    pub fn len(&self) -> usize {
        self.dists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dists.is_empty()
    }
}

/// Per-cluster index.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterIndex {
    /// Pivot records; the first is the cluster centroid.
    pub pivots: Vec<Record>,
    pub lists: Vec<PivotList>,
    /// LIMS keys of the paged records, non-decreasing.
    pub keys: Vec<u64>,
    /// Record ids parallel to `keys`.
    pub ids: Vec<u64>,
    pub key_model: RankModel,
    pub first_page: u64,
    pub page_count: u64,
    pub buffer: InsertBuffer,
    /// Paged records not tombstoned.
    pub live: usize,
}

impl ClusterIndex {
    pub fn pivot_count(&self) -> usize {
        self.pivots.len()
    }

    /// Paged records, including tombstoned ones.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn centroid(&self) -> &Record {
        &self.pivots[0]
    }

    /// Page holding position `pos` of the key array.
    pub fn page_of(&self, pos: usize, per_page: usize) -> u64 {
        self.first_page + (pos / per_page) as u64
    }

    /// Ring IDs of a payload with respect to this cluster's pivots.
    pub fn ring_ids(&self, metric: Metric, p: &Payload, rings: usize) -> Vec<u64> {
        self.pivots
            .iter()
            .zip(&self.lists)
            .map(|(o, list)| list.ring_of_distance(metric.distance(p, &o.payload), rings))
            .collect()
    }

    /// Builds the cluster from its pivots and members, writing the member
    /// pages at `start` (or appending when `None`).
    pub(crate) fn assemble(
        pivots: Vec<Record>,
        members: Vec<Record>,
        metric: Metric,
        config: &IndexConfig,
        store: &mut PageStore,
        start: Option<u64>,
    ) -> Result<Self> {
        let m = pivots.len();
        let n = members.len();
        let pivot_dists: Vec<Vec<f64>> = pivots
            .iter()
            .map(|o| members.iter().map(|p| metric.distance(&p.payload, &o.payload)).collect())
            .collect();
        let lists = pivot_dists
            .iter()
            .map(|d| PivotList::new(d.clone(), config.rings, config.pivot_degree))
            .collect::<Result<Vec<_>>>()?;

        let rings = config.rings as u64;
        let mut keyed: Vec<(u64, usize)> = Vec::with_capacity(n);
        let mut rids = vec![0u64; m];
        for t in 0..n {
            for j in 0..m {
                let rank = exact_rank(&lists[j].dists, &pivot_dists[j][t]);
                rids[j] = ring_id(rank, lists[j].ring_width, config.rings);
            }
            keyed.push((encode_lims(&rids, rings)?, t));
        }
        keyed.sort_by_key(|&(k, t)| (k, t));

        let mut slots: Vec<Option<Record>> = members.into_iter().map(Some).collect();
        let ordered: Vec<Record> = keyed.iter().map(|&(_, t)| slots[t].take().unwrap()).collect();
        let keys: Vec<u64> = keyed.iter().map(|&(k, _)| k).collect();
        let ids: Vec<u64> = ordered.iter().map(|r| r.id).collect();
        let region = match start {
            Some(at) => store.write_region_at(at, &ordered)?,
            None => store.write_region(&ordered)?,
        };
        let key_model = if keys.is_empty() {
            RankModel::empty(config.address_degree)
        } else {
            let as_f64: Vec<f64> = keys.iter().map(|&k| k as f64).collect();
            RankModel::train(&as_f64, config.address_degree)?
        };
        Ok(ClusterIndex {
            pivots,
            lists,
            keys,
            ids,
            key_model,
            first_page: region.start,
            page_count: region.end - region.start,
            buffer: InsertBuffer::default(),
            live: n,
        })
    }
}

/// A deleted paged record and its distances to the pivots of its cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct Tombstone {
    pub cluster: usize,
    pub position: usize,
    pub pivot_dists: Vec<f64>,
}

/// A built index: cluster metadata in memory, records on pages.
#[derive(Debug)]
pub struct LimsIndex {
    pub(crate) config: IndexConfig,
    pub(crate) layout: RecordLayout,
    pub(crate) clusters: Vec<ClusterIndex>,
    pub(crate) store: PageStore,
    pub(crate) tombstones: BTreeMap<u64, Tombstone>,
    pub(crate) next_id: u64,
    pub(crate) locator: Locator,
}

impl LimsIndex {
    /// Builds an index over `dataset`: k-center clustering, farthest-first
    /// pivots, per-pivot rank models and rings, LIMS keys, paged layout and
    /// per-cluster address models.
    ///
    /// Clusters smaller than `m` use all their members as pivots.
    pub fn build(dataset: &MetricDataset, config: IndexConfig) -> Result<Self> {
        config.validate()?;
        if dataset.is_empty() {
            return Err(Error::param("cannot index an empty dataset"));
        }
        let metric = dataset.metric();
        let layout = RecordLayout::new(metric, dataset.dim(), config.page_size)?;
        let records = dataset.records();
        let dist = |a: &Record, b: &Record| metric.distance(&a.payload, &b.payload);
        let clustering = k_center(records, config.clusters, config.seed, dist)?;

        let mut store = PageStore::in_memory(layout);
        let mut clusters = Vec::with_capacity(config.clusters);
        for (c, members) in clustering.members().iter().enumerate() {
            let m = config.pivots.min(members.len());
            let pivot_idx = fft_pivots(records, members, clustering.centers[c], m, dist)?;
            let pivots: Vec<Record> = pivot_idx.iter().map(|&p| records[p].clone()).collect();
            let member_recs: Vec<Record> = members.iter().map(|&p| records[p].clone()).collect();
            clusters.push(ClusterIndex::assemble(pivots, member_recs, metric, &config, &mut store, None)?);
        }
        let next_id = records.iter().map(|r| r.id).max().map_or(0, |m| m + 1);
        Ok(LimsIndex {
            config,
            layout,
            clusters,
            store,
            tombstones: BTreeMap::new(),
            next_id,
            locator: Locator::Learned,
        })
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn metric(&self) -> Metric {
        self.layout.metric
    }

    pub fn dim(&self) -> usize {
        self.layout.dim
    }

    pub fn layout(&self) -> &RecordLayout {
        &self.layout
    }

    pub fn clusters(&self) -> &[ClusterIndex] {
        &self.clusters
    }

    pub fn store(&self) -> &PageStore {
        &self.store
    }

    /// Ω.
    pub fn records_per_page(&self) -> usize {
        self.layout.records_per_page()
    }

    pub fn rings(&self) -> usize {
        self.config.rings
    }

    pub fn locator(&self) -> Locator {
        self.locator
    }

    /// Switches between learned lookups and plain binary search. Query
    /// results and page accesses are identical either way.
    pub fn set_locator(&mut self, locator: Locator) {
        self.locator = locator;
    }

    pub fn is_deleted(&self, id: u64) -> bool {
        self.tombstones.contains_key(&id)
    }

    pub fn tombstones(&self) -> &BTreeMap<u64, Tombstone> {
        &self.tombstones
    }

    /// Live records: paged records minus tombstones plus buffered inserts.
    pub fn len(&self) -> usize {
        self.clusters.iter().map(|c| c.live + c.buffer.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of pages a full scan of the paged records would read.
    pub fn full_scan_pages(&self) -> u64 {
        let n: usize = self.clusters.iter().map(|c| c.len()).sum();
        n.div_ceil(self.records_per_page()) as u64
    }

    /// Validates a query payload against the index metric.
    pub fn check_payload(&self, p: &Payload) -> Result<()> {
        self.metric().validate(p, self.dim())
    }

    /// `(cluster, position)` of every paged record, by id.
    pub fn record_positions(&self) -> BTreeMap<u64, (usize, usize)> {
        let mut out = BTreeMap::new();
        for (c, cl) in self.clusters.iter().enumerate() {
            for (pos, &id) in cl.ids.iter().enumerate() {
                out.insert(id, (c, pos));
            }
        }
        out
    }

    /// Reads every live record without charging any counter.
    pub fn scan_live(&self) -> Result<Vec<Record>> {
        let mut counter = crate::storage::AccessCounter::default();
        let mut out = Vec::with_capacity(self.len());
        for cl in &self.clusters {
            for page in cl.first_page..cl.first_page + cl.page_count {
                out.extend(self.store.read_page(page, &mut counter)?.into_iter().filter(|r| !self.is_deleted(r.id)));
            }
            for &page in &cl.buffer.pages {
                out.extend(self.store.read_page(page, &mut counter)?);
            }
        }
        Ok(out)
    }
}
