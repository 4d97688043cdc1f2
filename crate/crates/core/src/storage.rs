//! Fixed-size pages, record serialization, and page-access accounting.
//!
//! A page is `page_size` bytes: an 8-byte header `{record_count: u32,
//! flags: u32}` followed by up to Ω fixed-width records. A record is an
//! 8-byte identifier followed by its payload: `d` little-endian `f64`s for
//! vectors, or a 72-byte slot (length byte + up to 71 bytes, zero padded)
//! for strings.

use std::fs::File;
use std::io::{Read, Seek, SeekFrom, Write};
use std::ops::Range;
use std::sync::Mutex;

use crate::dataset::Record;
use crate::error::{Error, Result};
use crate::metric::{Metric, Payload};

pub const DEFAULT_PAGE_SIZE: usize = 4096;
pub const PAGE_HEADER_BYTES: usize = 8;
pub const ID_BYTES: usize = 8;
pub const TEXT_SLOT_BYTES: usize = 72;
pub const MAX_TEXT_BYTES: usize = TEXT_SLOT_BYTES - 1;

/// Page header flag values.
pub const PAGE_FREE: u32 = 0;
pub const PAGE_MAIN: u32 = 1;
pub const PAGE_BUFFER: u32 = 2;

/// Bytes per serialized record.
pub fn record_size(metric: Metric, dim: usize) -> usize {
    match metric {
        Metric::L2 | Metric::L1 => ID_BYTES + dim * 8,
        Metric::Edit => ID_BYTES + TEXT_SLOT_BYTES,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecordLayout {
    pub metric: Metric,
    pub dim: usize,
    pub page_size: usize,
}

impl RecordLayout {
    pub fn new(metric: Metric, dim: usize, page_size: usize) -> Result<Self> {
        let layout = RecordLayout { metric, dim, page_size };
        if metric.is_vector() && dim == 0 {
            return Err(Error::param("vector dimensionality must be positive"));
        }
        if page_size < PAGE_HEADER_BYTES || layout.records_per_page() == 0 {
            return Err(Error::param(format!(
                "page size {page_size} cannot hold a {}-byte record",
                layout.record_size()
            )));
        }
        Ok(layout)
    }

    pub fn record_size(&self) -> usize {
        record_size(self.metric, self.dim)
    }

    /// Ω, the maximum number of records per page.
    pub fn records_per_page(&self) -> usize {
        self.page_size.saturating_sub(PAGE_HEADER_BYTES) / self.record_size()
    }

    pub fn encode_record(&self, rec: &Record, out: &mut Vec<u8>) -> Result<()> {
        out.extend_from_slice(&rec.id.to_le_bytes());
        self.encode_payload(&rec.payload, out)
    }

    pub fn encode_payload(&self, payload: &Payload, out: &mut Vec<u8>) -> Result<()> {
        match payload {
            Payload::Vector(v) => {
                if v.len() != self.dim {
                    return Err(Error::Dimension { expected: self.dim, got: v.len() });
                }
                for x in v {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
            Payload::Text(t) => {
                if t.len() > MAX_TEXT_BYTES {
                    return Err(Error::param(format!(
                        "string of {} bytes exceeds the {MAX_TEXT_BYTES}-byte slot",
                        t.len()
                    )));
                }
                out.push(t.len() as u8);
                out.extend_from_slice(t);
                out.resize(out.len() + MAX_TEXT_BYTES - t.len(), 0);
            }
        }
        Ok(())
    }

    pub fn decode_record(&self, bytes: &[u8]) -> Result<Record> {
        if bytes.len() < self.record_size() {
            return Err(Error::format("truncated record"));
        }
        let id = u64::from_le_bytes(bytes[..ID_BYTES].try_into().unwrap());
        let payload = self.decode_payload(&bytes[ID_BYTES..self.record_size()])?;
        Ok(Record { id, payload })
    }

    pub fn decode_payload(&self, bytes: &[u8]) -> Result<Payload> {
        match self.metric {
            Metric::L2 | Metric::L1 => Ok(Payload::Vector(
                bytes[..self.dim * 8]
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            )),
            Metric::Edit => {
                let len = bytes[0] as usize;
                if len > MAX_TEXT_BYTES {
                    return Err(Error::format("string slot length overflow"));
                }
                Ok(Payload::Text(bytes[1..1 + len].to_vec()))
            }
        }
    }

    pub fn payload_size(&self) -> usize {
        self.record_size() - ID_BYTES
    }
}

/// Page reads charged to one query (or one maintenance operation).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AccessCounter {
    pub pages_read: u64,
}

impl AccessCounter {
    pub fn reset(&mut self) {
        self.pages_read = 0;
    }
}

/// Raw block storage underneath a [`PageStore`].
pub trait BlockDevice: Send + Sync {
    fn block_count(&self) -> u64;
    fn read_block(&self, id: u64, buf: &mut [u8]) -> Result<()>;
    /// Writes block `id`; writing at `block_count()` grows the device by one.
    fn write_block(&mut self, id: u64, buf: &[u8]) -> Result<()>;
}

/// In-memory block device.
#[derive(Clone, Debug)]
pub struct MemDevice {
    page_size: usize,
    bytes: Vec<u8>,
}

impl MemDevice {
    pub fn new(page_size: usize) -> Self {
        MemDevice { page_size, bytes: Vec::new() }
    }

    pub fn from_bytes(page_size: usize, bytes: Vec<u8>) -> Result<Self> {
        if !bytes.len().is_multiple_of(page_size) {
            return Err(Error::format("page region is not a whole number of pages"));
        }
        Ok(MemDevice { page_size, bytes })
    }
}

impl BlockDevice for MemDevice {
    fn block_count(&self) -> u64 {
        (self.bytes.len() / self.page_size) as u64
    }

    fn read_block(&self, id: u64, buf: &mut [u8]) -> Result<()> {
        let count = self.block_count();
        if id >= count {
            return Err(Error::PageOutOfRange { page: id, count });
        }
        let start = id as usize * self.page_size;
        buf.copy_from_slice(&self.bytes[start..start + self.page_size]);
        Ok(())
    }

    fn write_block(&mut self, id: u64, buf: &[u8]) -> Result<()> {
        let count = self.block_count();
        if id > count {
            return Err(Error::PageOutOfRange { page: id, count });
        }
        let start = id as usize * self.page_size;
        if id == count {
            self.bytes.extend_from_slice(buf);
        } else {
            self.bytes[start..start + self.page_size].copy_from_slice(buf);
        }
        Ok(())
    }
}

/// Block device over a region of a file starting at byte `base`.
#[derive(Debug)]
pub struct FileDevice {
    file: Mutex<File>,
    base: u64,
    page_size: usize,
    count: u64,
}

impl FileDevice {
    pub fn new(file: File, base: u64, page_size: usize, count: u64) -> Self {
        FileDevice { file: Mutex::new(file), base, page_size, count }
    }
}

impl BlockDevice for FileDevice {
    fn block_count(&self) -> u64 {
        self.count
    }

    fn read_block(&self, id: u64, buf: &mut [u8]) -> Result<()> {
        if id >= self.count {
            return Err(Error::PageOutOfRange { page: id, count: self.count });
        }
        let mut file = self.file.lock().expect("file lock poisoned");
        file.seek(SeekFrom::Start(self.base + id * self.page_size as u64))?;
        file.read_exact(buf)?;
        Ok(())
    }

    fn write_block(&mut self, id: u64, buf: &[u8]) -> Result<()> {
        if id > self.count {
            return Err(Error::PageOutOfRange { page: id, count: self.count });
        }
        let file = self.file.get_mut().expect("file lock poisoned");
        file.seek(SeekFrom::Start(self.base + id * self.page_size as u64))?;
        file.write_all(buf)?;
        if id == self.count {
            self.count += 1;
        }
        Ok(())
    }
}

/// Pages of fixed-width records with a free list for single-page
/// allocations.
pub struct PageStore {
    layout: RecordLayout,
    device: Box<dyn BlockDevice>,
    free: Vec<u64>,
}

impl std::fmt::Debug for PageStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PageStore")
            .field("layout", &self.layout)
            .field("pages", &self.page_count())
            .field("free", &self.free.len())
            .finish()
    }
}

impl PageStore {
    pub fn in_memory(layout: RecordLayout) -> Self {
        PageStore::with_device(layout, Box::new(MemDevice::new(layout.page_size)), Vec::new())
    }

    pub fn with_device(layout: RecordLayout, device: Box<dyn BlockDevice>, free: Vec<u64>) -> Self {
        PageStore { layout, device, free }
    }

    pub fn layout(&self) -> &RecordLayout {
        &self.layout
    }

    pub fn records_per_page(&self) -> usize {
        self.layout.records_per_page()
    }

    pub fn page_count(&self) -> u64 {
        self.device.block_count()
    }

    pub fn free_pages(&self) -> &[u64] {
        &self.free
    }

    /// Reads and decodes one page, charging it to `counter`.
    pub fn read_page(&self, id: u64, counter: &mut AccessCounter) -> Result<Vec<Record>> {
        let bytes = self.page_bytes(id)?;
        counter.pages_read += 1;
        self.decode_page(&bytes)
    }

    pub fn page_bytes(&self, id: u64) -> Result<Vec<u8>> {
        let mut buf = vec![0u8; self.layout.page_size];
        self.device.read_block(id, &mut buf)?;
        Ok(buf)
    }

    fn decode_page(&self, bytes: &[u8]) -> Result<Vec<Record>> {
        let count = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        if count > self.records_per_page() {
            return Err(Error::format(format!("page claims {count} records")));
        }
        let size = self.layout.record_size();
        (0..count)
            .map(|slot| {
                let start = PAGE_HEADER_BYTES + slot * size;
                self.layout.decode_record(&bytes[start..start + size])
            })
            .collect()
    }

    pub fn encode_page(&self, records: &[Record], flags: u32) -> Result<Vec<u8>> {
        if records.len() > self.records_per_page() {
            return Err(Error::param(format!(
                "{} records exceed page capacity {}",
                records.len(),
                self.records_per_page()
            )));
        }
        let mut buf = Vec::with_capacity(self.layout.page_size);
        buf.extend_from_slice(&(records.len() as u32).to_le_bytes());
        buf.extend_from_slice(&flags.to_le_bytes());
        for rec in records {
            self.layout.encode_record(rec, &mut buf)?;
        }
        buf.resize(self.layout.page_size, 0);
        Ok(buf)
    }

    pub fn write_page(&mut self, id: u64, records: &[Record], flags: u32) -> Result<()> {
        let buf = self.encode_page(records, flags)?;
        self.device.write_block(id, &buf)
    }

    /// Allocates one page, reusing freed pages first.
    pub fn allocate(&mut self) -> Result<u64> {
        if let Some(id) = self.free.pop() {
            return Ok(id);
        }
        let id = self.page_count();
        self.device.write_block(id, &vec![0u8; self.layout.page_size])?;
        Ok(id)
    }

    /// Zeroes a page and returns it to the free list.
    pub fn release(&mut self, id: u64) -> Result<()> {
        self.write_page(id, &[], PAGE_FREE)?;
        if !self.free.contains(&id) {
            self.free.push(id);
        }
        Ok(())
    }

    /// Appends `records` as contiguous pages, all full except the last.
    pub fn write_region(&mut self, records: &[Record]) -> Result<Range<u64>> {
        let start = self.page_count();
        self.write_region_at(start, records)
    }

    /// Writes `records` as contiguous pages starting at `start`, which may
    /// overlap existing pages or extend the device.
    pub fn write_region_at(&mut self, start: u64, records: &[Record]) -> Result<Range<u64>> {
        let omega = self.records_per_page();
        let mut id = start;
        for chunk in records.chunks(omega) {
            self.write_page(id, chunk, PAGE_MAIN)?;
            id += 1;
        }
        Ok(start..id)
    }
}
