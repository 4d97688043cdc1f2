//! LIMS: a disk-backed learned index for exact point, range and kNN search
//! in metric spaces.
//!
//! Data is split into clusters by greedy k-center; each cluster picks a few
//! pivots, cuts every pivot's distance distribution into equal-count rings
//! and orders its records by the concatenated ring IDs. Learned rank models
//! locate both ring boundaries and page positions, with exponential search
//! making every lookup exact.
//!
//! ```
//! use lims::{IndexConfig, LimsIndex, MetricDataset, Payload};
//!
//! let words = MetricDataset::words(&["fame", "gain", "aim", "ACM"]).unwrap();
//! let cfg = IndexConfig { clusters: 1, pivots: 1, rings: 2, ..Default::default() };
//! let index = LimsIndex::build(&words, cfg).unwrap();
//! let hits = index.range(&Payload::text("game"), 2.0).unwrap().hits;
//! assert_eq!(hits.len(), 2);
//! ```

pub mod bench;
mod codec;
pub mod dataset;
pub mod error;
pub mod index;
pub mod maintenance;
pub mod metric;
pub mod partitioner;
pub mod persist;
pub mod query;
pub mod rank_model;
pub mod storage;

pub use dataset::{MetricDataset, Record};
pub use error::{Error, Result};
pub use index::{IndexConfig, LimsIndex};
pub use maintenance::{DeleteOutcome, InsertOutcome, RebuildPolicy};
pub use metric::{Metric, Payload};
pub use query::{Hit, KnnResult, QueryStats, RangeResult};
pub use rank_model::{Locator, RankModel};
