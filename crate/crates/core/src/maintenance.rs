//! Inserts, deletes and per-cluster rebuilds.
//!
//! Inserts go to the insert buffer of the cluster with the nearest
//! centroid. Deletes of paged records leave a tombstone and tighten the
//! owning cluster's per-pivot distance extents; ring boundaries and models
//! stay as they are until [`LimsIndex::rebuild_cluster`].

use crate::dataset::Record;
use crate::error::{Error, Result};
use crate::index::{ClusterIndex, LimsIndex, Tombstone};
use crate::metric::Payload;
use crate::storage::{AccessCounter, PAGE_BUFFER};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertOutcome {
    Inserted(u64),
    Duplicate(u64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeleteOutcome {
    Deleted(u64),
    Absent,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RebuildPolicy {
    /// Rebuild once the buffer exceeds this fraction of the paged records.
    pub max_buffer_fraction: f64,
}

impl Default for RebuildPolicy {
    fn default() -> Self {
        RebuildPolicy { max_buffer_fraction: 0.1 }
    }
}

impl LimsIndex {
    /// Adds `p` unless an equal live record exists.
    pub fn insert(&mut self, p: Payload) -> Result<InsertOutcome> {
        self.check_payload(&p)?;
        if let Some(existing) = self.point(&p)? {
            return Ok(InsertOutcome::Duplicate(existing.id));
        }
        let metric = self.metric();
        let (cluster, dist) = self
            .clusters
            .iter()
            .map(|c| metric.distance(&p, &c.centroid().payload))
            .enumerate()
            .fold((0, f64::INFINITY), |best, (i, d)| if d < best.1 { (i, d) } else { best });
        let id = self.next_id;
        self.next_id += 1;

        let mut records = self.buffer_records(cluster)?;
        let buf = &mut self.clusters[cluster].buffer;
        let at = buf.dists.partition_point(|&d| d <= dist);
        buf.dists.insert(at, dist);
        buf.ids.insert(at, id);
        records.insert(at, Record { id, payload: p });
        self.write_buffer(cluster, &records)?;
        Ok(InsertOutcome::Inserted(id))
    }

    /// Removes the live record equal to `p`, if any.
    pub fn delete(&mut self, p: &Payload) -> Result<DeleteOutcome> {
        let Some(rec) = self.point(p)? else {
            return Ok(DeleteOutcome::Absent);
        };
        self.delete_record(&rec)?;
        Ok(DeleteOutcome::Deleted(rec.id))
    }

    fn delete_record(&mut self, rec: &Record) -> Result<()> {
        for c in 0..self.clusters.len() {
            if let Some(at) = self.clusters[c].buffer.ids.iter().position(|&id| id == rec.id) {
                let mut records = self.buffer_records(c)?;
                records.remove(at);
                let buf = &mut self.clusters[c].buffer;
                buf.dists.remove(at);
                buf.ids.remove(at);
                return self.write_buffer(c, &records);
            }
        }
        let metric = self.metric();
        for (c, cluster) in self.clusters.iter_mut().enumerate() {
            let Some(position) = cluster.ids.iter().position(|&id| id == rec.id) else {
                continue;
            };
            // same argument order as at build so the removed values match bitwise
            let pivot_dists: Vec<f64> =
                cluster.pivots.iter().map(|o| metric.distance(&rec.payload, &o.payload)).collect();
            for (list, &d) in cluster.lists.iter_mut().zip(&pivot_dists) {
                list.remove(d);
            }
            cluster.live -= 1;
            self.tombstones.insert(rec.id, Tombstone { cluster: c, position, pivot_dists });
            return Ok(());
        }
        Err(Error::param(format!("record {} is not stored in any cluster", rec.id)))
    }

    pub fn should_rebuild(&self, cluster: usize, policy: RebuildPolicy) -> bool {
        let c = &self.clusters[cluster];
        c.buffer.len() as f64 > policy.max_buffer_fraction * c.live as f64
    }

    /// Merges the buffer and surviving records of `cluster`, recomputes its
    /// distance arrays, rings, keys and models, and rewrites its pages.
    /// Pivots are kept. No other cluster's metadata or pages change.
    pub fn rebuild_cluster(&mut self, cluster: usize) -> Result<()> {
        if cluster >= self.clusters.len() {
            return Err(Error::param(format!("no cluster {cluster}")));
        }
        let old = &self.clusters[cluster];
        let mut counter = AccessCounter::default();
        let mut members = Vec::with_capacity(old.live + old.buffer.len());
        for page in old.first_page..old.first_page + old.page_count {
            members.extend(self.store.read_page(page, &mut counter)?.into_iter().filter(|r| !self.is_deleted(r.id)));
        }
        members.extend(self.buffer_records(cluster)?);
        let pivots = old.pivots.clone();
        let (first_page, page_count) = (old.first_page, old.page_count);
        for page in std::mem::take(&mut self.clusters[cluster].buffer.pages) {
            self.store.release(page)?;
        }
        self.tombstones.retain(|_, t| t.cluster != cluster);

        let needed = members.len().div_ceil(self.records_per_page()) as u64;
        let start = if needed <= page_count {
            for page in first_page + needed..first_page + page_count {
                self.store.release(page)?;
            }
            Some(first_page)
        } else {
            for page in first_page..first_page + page_count {
                self.store.release(page)?;
            }
            None
        };
        let rebuilt = ClusterIndex::assemble(pivots, members, self.metric(), &self.config, &mut self.store, start)?;
        self.clusters[cluster] = rebuilt;
        Ok(())
    }

    /// Rebuilds every cluster the policy flags; returns their indices.
    pub fn rebuild_where_needed(&mut self, policy: RebuildPolicy) -> Result<Vec<usize>> {
        let due: Vec<usize> = (0..self.clusters.len()).filter(|&c| self.should_rebuild(c, policy)).collect();
        for &c in &due {
            self.rebuild_cluster(c)?;
        }
        Ok(due)
    }

    /// Buffered records of `cluster` in buffer order, read without charge.
    pub fn buffer_records(&self, cluster: usize) -> Result<Vec<Record>> {
        let mut counter = AccessCounter::default();
        let mut out = Vec::with_capacity(self.clusters[cluster].buffer.len());
        for &page in &self.clusters[cluster].buffer.pages {
            out.extend(self.store.read_page(page, &mut counter)?);
        }
        Ok(out)
    }

    fn write_buffer(&mut self, cluster: usize, records: &[Record]) -> Result<()> {
        let omega = self.records_per_page();
        let needed = records.len().div_ceil(omega);
        while self.clusters[cluster].buffer.pages.len() < needed {
            let page = self.store.allocate()?;
            self.clusters[cluster].buffer.pages.push(page);
        }
        while self.clusters[cluster].buffer.pages.len() > needed {
            let page = self.clusters[cluster].buffer.pages.pop().unwrap();
            self.store.release(page)?;
        }
        let pages = self.clusters[cluster].buffer.pages.clone();
        for (page, chunk) in pages.into_iter().zip(records.chunks(omega)) {
            self.store.write_page(page, chunk, PAGE_BUFFER)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::MetricDataset;
    use crate::index::IndexConfig;
    use crate::metric::Metric;

    fn line_index() -> LimsIndex {
        let pts: Vec<Payload> = [0.0, 0.1, 0.2, 0.3, 0.9, 5.0, 5.1, 5.2].iter().map(|&x| Payload::Vector(vec![x])).collect();
        let ds = MetricDataset::from_payloads(Metric::L2, 1, pts).unwrap();
        let cfg = IndexConfig { clusters: 2, pivots: 2, rings: 2, pivot_degree: 2, ..Default::default() };
        LimsIndex::build(&ds, cfg).unwrap()
    }

    fn ids_within(idx: &LimsIndex, x: f64, r: f64) -> Vec<u64> {
        let mut ids: Vec<u64> = idx.range(&Payload::Vector(vec![x]), r).unwrap().hits.iter().map(|h| h.id).collect();
        ids.sort();
        ids
    }

    #[test]
    fn duplicate_insert_is_rejected() {
        let mut idx = line_index();
        let before = idx.len();
        assert_eq!(idx.insert(Payload::Vector(vec![0.2])).unwrap(), InsertOutcome::Duplicate(2));
        assert_eq!(idx.len(), before);
        assert_eq!(idx.insert(Payload::Vector(vec![0.25])).unwrap(), InsertOutcome::Inserted(8));
        assert_eq!(idx.insert(Payload::Vector(vec![0.25])).unwrap(), InsertOutcome::Duplicate(8));
        assert_eq!(ids_within(&idx, 0.25, 0.0), vec![8]);
    }

    #[test]
    fn buffer_stays_sorted() {
        let mut idx = line_index();
        for x in [0.05, 5.05, 0.15, 0.32, 4.0, 0.01] {
            idx.insert(Payload::Vector(vec![x])).unwrap();
            for c in idx.clusters() {
                assert!(c.buffer.dists.windows(2).all(|w| w[0] <= w[1]));
            }
        }
        assert_eq!(ids_within(&idx, 0.0, 0.06), vec![0, 8, 13]);
    }

    #[test]
    fn delete_hides_record_and_tightens_extent() {
        let mut idx = line_index();
        assert_eq!(idx.delete(&Payload::Vector(vec![0.55])).unwrap(), DeleteOutcome::Absent);
        let c = idx.clusters().iter().position(|c| c.ids.contains(&4)).unwrap();
        // 0.9 is the unique farthest member from the centroid of its cluster
        let before = idx.clusters()[c].lists[0].dist_max;
        assert_eq!(idx.delete(&Payload::Vector(vec![0.9])).unwrap(), DeleteOutcome::Deleted(4));
        assert!(idx.clusters()[c].lists[0].dist_max < before);
        assert!(ids_within(&idx, 0.9, 0.5).iter().all(|&id| id != 4));
        assert_eq!(idx.delete(&Payload::Vector(vec![0.9])).unwrap(), DeleteOutcome::Absent);
    }

    #[test]
    fn delete_from_buffer() {
        let mut idx = line_index();
        idx.insert(Payload::Vector(vec![0.4])).unwrap();
        assert_eq!(idx.delete(&Payload::Vector(vec![0.4])).unwrap(), DeleteOutcome::Deleted(8));
        assert!(idx.clusters().iter().all(|c| c.buffer.is_empty()));
        assert!(idx.tombstones().is_empty());
    }

    #[test]
    fn rebuild_policy_threshold() {
        let mut idx = line_index();
        let p = RebuildPolicy::default();
        assert!(!idx.should_rebuild(0, p));
        let c = idx.clusters().iter().position(|c| c.ids.contains(&5)).unwrap();
        idx.insert(Payload::Vector(vec![5.3])).unwrap();
        assert!(idx.should_rebuild(c, p));
        let loose = RebuildPolicy { max_buffer_fraction: 1.0 };
        assert!(!idx.should_rebuild(c, loose));
    }

    #[test]
    fn rebuild_merges_buffer_and_drops_tombstones() {
        let mut idx = line_index();
        let before = ids_within(&idx, 0.0, 10.0);
        idx.rebuild_cluster(0).unwrap();
        assert_eq!(ids_within(&idx, 0.0, 10.0), before);

        for x in [0.4, 0.45, 5.4] {
            idx.insert(Payload::Vector(vec![x])).unwrap();
        }
        idx.delete(&Payload::Vector(vec![0.1])).unwrap();
        let expected = ids_within(&idx, 0.0, 10.0);
        for c in 0..idx.clusters().len() {
            idx.rebuild_cluster(c).unwrap();
        }
        assert!(idx.clusters().iter().all(|c| c.buffer.is_empty()));
        assert!(idx.tombstones().is_empty());
        assert_eq!(ids_within(&idx, 0.0, 10.0), expected);
        assert_eq!(ids_within(&idx, 0.42, 0.035), vec![8, 9]);
        assert!(idx.rebuild_cluster(9).is_err());
    }
}
