//! Dataset generators, brute-force oracles and the benchmark harness.

pub mod generators;
pub mod harness;
pub mod oracle;

pub use generators::{downsample, gaussmix, signature, skewed};
pub use harness::{run_bench, write_csv, BenchRow, DatasetKind, SweepParam, WorkloadSpec};
pub use oracle::{nlims_locate, oracle_knn, oracle_range};
