//! Datasets of identified records under one metric, and the `LMSD` file
//! format: `{magic "LMSD", metric tag: u32, n: u64, d: u64}` followed by `n`
//! records encoded as in [`crate::storage`].

use std::fs;
use std::path::Path;

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::metric::{Metric, Payload};
use crate::storage::{RecordLayout, DEFAULT_PAGE_SIZE, MAX_TEXT_BYTES};

pub const DATASET_MAGIC: &[u8; 4] = b"LMSD";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub id: u64,
    pub payload: Payload,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricDataset {
    metric: Metric,
    dim: usize,
    records: Vec<Record>,
}

impl MetricDataset {
    /// Validates every payload against `metric`. For strings `dim` is
    /// informational (the longest string) and is recomputed here.
    pub fn new(metric: Metric, dim: usize, records: Vec<Record>) -> Result<Self> {
        let dim = if metric.is_vector() {
            dim
        } else {
            records.iter().map(|r| r.payload.len()).max().unwrap_or(0)
        };
        for rec in &records {
            metric.validate(&rec.payload, dim)?;
            if rec.payload.len() > MAX_TEXT_BYTES && !metric.is_vector() {
                return Err(Error::param(format!(
                    "record {} exceeds {MAX_TEXT_BYTES} bytes",
                    rec.id
                )));
            }
        }
        Ok(MetricDataset { metric, dim, records })
    }

    /// Numbers `payloads` 0, 1, 2, ...
    pub fn from_payloads(metric: Metric, dim: usize, payloads: Vec<Payload>) -> Result<Self> {
        let records = payloads
            .into_iter()
            .enumerate()
            .map(|(i, payload)| Record { id: i as u64, payload })
            .collect();
        MetricDataset::new(metric, dim, records)
    }

    pub fn words(words: &[&str]) -> Result<Self> {
        MetricDataset::from_payloads(
            Metric::Edit,
            0,
            words.iter().map(|w| Payload::text(w)).collect(),
        )
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn into_records(self) -> Vec<Record> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn distance(&self, a: &Payload, b: &Payload) -> f64 {
        self.metric.distance(a, b)
    }

    /// Splits off the last `count` records, e.g. as held-out queries.
    pub fn split_tail(mut self, count: usize) -> (MetricDataset, Vec<Record>) {
        let at = self.records.len().saturating_sub(count);
        let tail = self.records.split_off(at);
        (self, tail)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let layout = self.layout()?;
        let mut w = Writer::new();
        w.bytes(DATASET_MAGIC);
        w.u32(self.metric.tag());
        w.u64(self.records.len() as u64);
        w.u64(self.dim as u64);
        for rec in &self.records {
            layout.encode_record(rec, &mut w.buf)?;
        }
        Ok(w.buf)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.expect_tag(DATASET_MAGIC)?;
        let metric = Metric::from_tag(r.u32()?)?;
        let n = r.u64()? as usize;
        let dim = r.u64()? as usize;
        let layout = RecordLayout::new(metric, dim, DEFAULT_PAGE_SIZE)?;
        let size = layout.record_size();
        let body = r.take(n.checked_mul(size).ok_or_else(|| Error::format("record count overflow"))?)?;
        let records = body
            .chunks_exact(size)
            .map(|chunk| layout.decode_record(chunk))
            .collect::<Result<Vec<_>>>()?;
        MetricDataset::new(metric, dim, records)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        MetricDataset::from_bytes(&fs::read(path)?)
    }

    fn layout(&self) -> Result<RecordLayout> {
        RecordLayout::new(self.metric, self.dim, DEFAULT_PAGE_SIZE)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_round_trip() {
        let ds = MetricDataset::from_payloads(
            Metric::L1,
            2,
            vec![Payload::Vector(vec![0.1, 0.2]), Payload::Vector(vec![0.3, 0.4])],
        )
        .unwrap();
        let bytes = ds.to_bytes().unwrap();
        assert_eq!(&bytes[..4], b"LMSD");
        assert_eq!(bytes.len(), 4 + 4 + 8 + 8 + 2 * 24);
        assert_eq!(MetricDataset::from_bytes(&bytes).unwrap(), ds);

        let words = MetricDataset::words(&["fame", "gain", "aim", "ACM"]).unwrap();
        assert_eq!(words.dim(), 4);
        assert_eq!(MetricDataset::from_bytes(&words.to_bytes().unwrap()).unwrap(), words);
    }

    #[test]
    fn rejects_bad_records() {
        assert!(MetricDataset::from_payloads(Metric::L2, 2, vec![Payload::Vector(vec![1.0])]).is_err());
        assert!(MetricDataset::from_payloads(Metric::L2, 1, vec![Payload::text("a")]).is_err());
        assert!(MetricDataset::from_bytes(b"LMSX").is_err());
        assert!(MetricDataset::from_bytes(b"LMSD\x00\x00\x00\x00").is_err());
    }

    #[test]
    fn split_tail_holds_out_queries() {
        let ds = MetricDataset::words(&["a", "b", "c"]).unwrap();
        let (base, tail) = ds.split_tail(1);
        assert_eq!(base.len(), 2);
        assert_eq!(tail[0].payload, Payload::text("c"));
    }
}
