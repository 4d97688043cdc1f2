//! The index file.
//!
//! ```text
//! "LIMS" version:u32 metric:u32, then u64s d n K m N Ω deg_rp deg_addr page_size seed next_id
//! "CLUS" len  per-cluster metadata            (one section per cluster)
//! "BUFF" len  insert buffer of each cluster   (one section per cluster)
//! "TOMB" len  tombstones
//! "FREE" len  free page ids
//! "PAGE" len  page_size:u64 count:u64, then the raw pages
//! ```
//!
//! All fields are little-endian. Sections are length-prefixed so a reader
//! can locate any cluster's bytes without decoding the rest.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::ops::Range;
use std::path::Path;

use crate::codec::{Reader, Writer};
use crate::dataset::Record;
use crate::error::{Error, Result};
use crate::index::{ClusterIndex, IndexConfig, InsertBuffer, LimsIndex, PivotList, Tombstone};
use crate::metric::Metric;
use crate::rank_model::{Locator, RankModel};
use crate::storage::{FileDevice, MemDevice, PageStore, RecordLayout};

pub const INDEX_MAGIC: &[u8; 4] = b"LIMS";
pub const INDEX_VERSION: u32 = 1;
const HEADER_U64S: usize = 11;

/// Byte ranges of the sections of an index file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FileRegions {
    pub header: Range<usize>,
    /// Whole `CLUS` sections, tag included.
    pub clusters: Vec<Range<usize>>,
    pub buffers: Vec<Range<usize>>,
    pub tombstones: Range<usize>,
    pub free: Range<usize>,
    /// Start of page 0.
    pub page_base: usize,
    pub page_size: usize,
    pub page_count: u64,
}

impl FileRegions {
    pub fn page(&self, id: u64) -> Range<usize> {
        let start = self.page_base + id as usize * self.page_size;
        start..start + self.page_size
    }

    /// Metadata section followed by every page of `cluster`'s main region.
    pub fn cluster_bytes<'a>(&self, bytes: &'a [u8], index: &LimsIndex, cluster: usize) -> Vec<&'a [u8]> {
        let c = &index.clusters()[cluster];
        let mut out = vec![&bytes[self.clusters[cluster].clone()]];
        out.extend((c.first_page..c.first_page + c.page_count).map(|p| &bytes[self.page(p)]));
        out
    }
}

fn write_record(w: &mut Writer, layout: &RecordLayout, rec: &Record) {
    layout.encode_record(rec, &mut w.buf).expect("stored records fit the layout");
}

fn read_record(r: &mut Reader<'_>, layout: &RecordLayout) -> Result<Record> {
    layout.decode_record(r.take(layout.record_size())?)
}

fn write_cluster(w: &mut Writer, layout: &RecordLayout, c: &ClusterIndex) {
    w.u64(c.pivots.len() as u64);
    for o in &c.pivots {
        write_record(w, layout, o);
    }
    for list in &c.lists {
        w.f64(list.dist_min);
        w.f64(list.dist_max);
        w.u64(list.ring_width as u64);
        list.model.write(w);
        w.f64s(&list.dists);
        w.f64s(&list.removed);
    }
    w.u64s(&c.keys);
    w.u64s(&c.ids);
    c.key_model.write(w);
    w.u64(c.first_page);
    w.u64(c.page_count);
    w.u64(c.live as u64);
}

fn read_cluster(body: &[u8], layout: &RecordLayout) -> Result<ClusterIndex> {
    let mut r = Reader::new(body);
    let m = r.len()?;
    let pivots = (0..m).map(|_| read_record(&mut r, layout)).collect::<Result<Vec<_>>>()?;
    let mut lists = Vec::with_capacity(m);
    for _ in 0..m {
        let dist_min = r.f64()?;
        let dist_max = r.f64()?;
        let ring_width = r.u64()? as usize;
        let model = RankModel::read(&mut r)?;
        let dists = r.f64s()?;
        let removed = r.f64s()?;
        lists.push(PivotList { dists, dist_min, dist_max, ring_width, model, removed });
    }
    let keys = r.u64s()?;
    let ids = r.u64s()?;
    if keys.len() != ids.len() {
        return Err(Error::format("key and id arrays differ in length"));
    }
    Ok(ClusterIndex {
        pivots,
        lists,
        keys,
        ids,
        key_model: RankModel::read(&mut r)?,
        first_page: r.u64()?,
        page_count: r.u64()?,
        buffer: InsertBuffer::default(),
        live: r.u64()? as usize,
    })
}

struct Parsed<'a> {
    /// Index with an empty placeholder store.
    index: LimsIndex,
    regions: FileRegions,
    pages: &'a [u8],
    free: Vec<u64>,
}

fn parse(bytes: &[u8]) -> Result<Parsed<'_>> {
    let mut r = Reader::new(bytes);
    r.expect_tag(INDEX_MAGIC)?;
    let version = r.u32()?;
    if version != INDEX_VERSION {
        return Err(Error::format(format!("unsupported index version {version}")));
    }
    let metric = Metric::from_tag(r.u32()?)?;
    let mut h = [0u64; HEADER_U64S];
    for slot in &mut h {
        *slot = r.u64()?;
    }
    let [dim, _n, k, m, rings, omega, pivot_degree, address_degree, page_size, seed, next_id] = h;
    let config = IndexConfig {
        clusters: k as usize,
        pivots: m as usize,
        rings: rings as usize,
        pivot_degree: pivot_degree as usize,
        address_degree: address_degree as usize,
        page_size: page_size as usize,
        seed,
    };
    config.validate()?;
    let layout = RecordLayout::new(metric, dim as usize, config.page_size)?;
    if layout.records_per_page() as u64 != omega {
        return Err(Error::format(format!("header Ω {omega} disagrees with layout")));
    }
    let header = 0..r.pos();

    let mut clusters = Vec::with_capacity(config.clusters);
    let mut cluster_regions = Vec::with_capacity(config.clusters);
    for _ in 0..config.clusters {
        let start = r.pos();
        clusters.push(read_cluster(r.section(b"CLUS")?, &layout)?);
        cluster_regions.push(start..r.pos());
    }
    let mut buffer_regions = Vec::with_capacity(config.clusters);
    for cluster in &mut clusters {
        let start = r.pos();
        let mut b = Reader::new(r.section(b"BUFF")?);
        cluster.buffer = InsertBuffer { dists: b.f64s()?, ids: b.u64s()?, pages: b.u64s()? };
        buffer_regions.push(start..r.pos());
    }
    let start = r.pos();
    let mut t = Reader::new(r.section(b"TOMB")?);
    let mut tombstones = BTreeMap::new();
    for _ in 0..t.len()? {
        let id = t.u64()?;
        let cluster = t.u64()? as usize;
        let position = t.u64()? as usize;
        let pivot_dists = t.f64s()?;
        tombstones.insert(id, Tombstone { cluster, position, pivot_dists });
    }
    let tomb_region = start..r.pos();
    let start = r.pos();
    let free = Reader::new(r.section(b"FREE")?).u64s()?;
    let free_region = start..r.pos();

    // tag, section length, page size, page count
    let page_base = r.pos() + 4 + 8 + 16;
    let mut p = Reader::new(r.section(b"PAGE")?);
    if p.u64()? != page_size {
        return Err(Error::format("page region size disagrees with header"));
    }
    let page_count = p.u64()?;
    let pages = &bytes[page_base..r.pos()];
    if pages.len() as u64 != page_count * page_size {
        return Err(Error::format("page region is truncated"));
    }
    if r.pos() != bytes.len() {
        return Err(Error::format("trailing bytes after page region"));
    }

    let index = LimsIndex {
        config,
        layout,
        clusters,
        store: PageStore::in_memory(layout),
        tombstones,
        next_id,
        locator: Locator::Learned,
    };
    let regions = FileRegions {
        header,
        clusters: cluster_regions,
        buffers: buffer_regions,
        tombstones: tomb_region,
        free: free_region,
        page_base,
        page_size: page_size as usize,
        page_count,
    };
    Ok(Parsed { index, regions, pages, free })
}

impl LimsIndex {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let layout = self.layout;
        let mut w = Writer::new();
        w.bytes(INDEX_MAGIC);
        w.u32(INDEX_VERSION);
        w.u32(self.metric().tag());
        let c = &self.config;
        for v in [
            self.dim() as u64,
            self.len() as u64,
            c.clusters as u64,
            c.pivots as u64,
            c.rings as u64,
            self.records_per_page() as u64,
            c.pivot_degree as u64,
            c.address_degree as u64,
            c.page_size as u64,
            c.seed,
            self.next_id,
        ] {
            w.u64(v);
        }
        for cluster in &self.clusters {
            w.section(b"CLUS", |w| write_cluster(w, &layout, cluster));
        }
        for cluster in &self.clusters {
            w.section(b"BUFF", |w| {
                w.f64s(&cluster.buffer.dists);
                w.u64s(&cluster.buffer.ids);
                w.u64s(&cluster.buffer.pages);
            });
        }
        w.section(b"TOMB", |w| {
            w.u64(self.tombstones.len() as u64);
            for (&id, t) in &self.tombstones {
                w.u64(id);
                w.u64(t.cluster as u64);
                w.u64(t.position as u64);
                w.f64s(&t.pivot_dists);
            }
        });
        w.section(b"FREE", |w| w.u64s(self.store.free_pages()));
        let mut pages = Vec::with_capacity(self.store.page_count() as usize * c.page_size);
        for id in 0..self.store.page_count() {
            pages.extend(self.store.page_bytes(id)?);
        }
        w.section(b"PAGE", |w| {
            w.u64(c.page_size as u64);
            w.u64(self.store.page_count());
            w.bytes(&pages);
        });
        Ok(w.buf)
    }

    /// Decodes an index file held in memory.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let Parsed { mut index, pages, free, .. } = parse(bytes)?;
        let device = MemDevice::from_bytes(index.layout.page_size, pages.to_vec())?;
        index.store = PageStore::with_device(index.layout, Box::new(device), free);
        Ok(index)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    /// Loads an index file entirely into memory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        LimsIndex::from_bytes(&fs::read(path)?)
    }

    /// Opens an index file, reading metadata into memory and leaving pages
    /// on disk so that every page access is a file read. The file is opened
    /// read-only; use [`LimsIndex::load`] for maintenance.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(&path)?;
        let Parsed { mut index, regions, free, .. } = parse(&bytes)?;
        let file = File::open(&path)?;
        let device = FileDevice::new(file, regions.page_base as u64, regions.page_size, regions.page_count);
        index.store = PageStore::with_device(index.layout, Box::new(device), free);
        Ok(index)
    }
}

/// Section layout of an index file.
pub fn file_regions(bytes: &[u8]) -> Result<FileRegions> {
    Ok(parse(bytes)?.regions)
}
