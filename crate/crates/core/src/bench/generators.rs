//! Synthetic datasets: Gaussian mixtures, power-skewed uniform data and
//! mutated string signatures.

use std::collections::HashSet;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{MetricDataset, Record};
use crate::metric::{Metric, Payload};

pub const GAUSS_COMPONENTS: usize = 150;
pub const GAUSS_SIGMA: f64 = 0.05;
pub const SIGNATURE_ANCHORS: usize = 25;
pub const SIGNATURE_PER_ANCHOR: usize = 4000;
pub const SIGNATURE_LEN: usize = 65;
pub const SIGNATURE_MAX_CHANGES: usize = 30;

/// Raw mixture sample before normalization, with component labels.
pub struct GaussSample {
    pub points: Vec<Vec<f64>>,
    pub component: Vec<usize>,
    pub means: Vec<Vec<f64>>,
}

/// `n` points from an equal-weight mixture of 150 spherical Gaussians with
/// σ = 0.05 and means uniform in the unit cube.
pub fn gaussmix_raw(n: usize, d: usize, seed: u64) -> GaussSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<Vec<f64>> = (0..GAUSS_COMPONENTS).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
    let noise = Normal::new(0.0, GAUSS_SIGMA).expect("valid σ");
    let mut points = Vec::with_capacity(n);
    let mut component = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.random_range(0..GAUSS_COMPONENTS);
        points.push(means[c].iter().map(|&mu| mu + noise.sample(&mut rng)).collect());
        component.push(c);
    }
    GaussSample { points, component, means }
}

/// Min-max scales every coordinate to `[0, 1]`. Constant coordinates
/// become 0.
pub fn normalize(points: &mut [Vec<f64>]) {
    let Some(d) = points.first().map(Vec::len) else {
        return;
    };
    for j in 0..d {
        let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[j]), hi.max(p[j])));
        let span = hi - lo;
        for p in points.iter_mut() {
            p[j] = if span > 0.0 { ((p[j] - lo) / span).clamp(0.0, 1.0) } else { 0.0 };
        }
    }
}

/// GaussMix under L2, normalized to the unit cube.
pub fn gaussmix(n: usize, d: usize, seed: u64) -> MetricDataset {
    let mut points = gaussmix_raw(n, d, seed).points;
    normalize(&mut points);
    vectors(Metric::L2, d, points)
}

/// Uniform points with coordinate `j` (1-based) raised to the power `j`,
/// under L1.
pub fn skewed(n: usize, d: usize, seed: u64) -> MetricDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = (0..n)
        .map(|_| (0..d).map(|j| rng.random::<f64>().powi(j as i32 + 1)).collect())
        .collect();
    vectors(Metric::L1, d, points)
}

/// 25 random 65-letter anchors, each mutated into 4000 distinct objects by
/// changing 1 to 30 random positions to other random letters.
pub fn signature(seed: u64) -> MetricDataset {
    signature_with(SIGNATURE_ANCHORS, SIGNATURE_PER_ANCHOR, seed).0
}

/// Signature dataset of a given shape, with its anchors.
pub fn signature_with(anchors: usize, per_anchor: usize, seed: u64) -> (MetricDataset, Vec<Vec<u8>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let letter = |rng: &mut ChaCha8Rng| b'a' + rng.random_range(0..26u8);
    let anchor_strings: Vec<Vec<u8>> =
        (0..anchors).map(|_| (0..SIGNATURE_LEN).map(|_| letter(&mut rng)).collect()).collect();
    let mut seen = HashSet::new();
    let mut payloads = Vec::with_capacity(anchors * per_anchor);
    for anchor in &anchor_strings {
        let mut made = 0;
        while made < per_anchor {
            let changes = rng.random_range(1..=SIGNATURE_MAX_CHANGES);
            let mut s = anchor.clone();
            for pos in sample(&mut rng, SIGNATURE_LEN, changes) {
                let mut c = letter(&mut rng);
                while c == anchor[pos] {
                    c = letter(&mut rng);
                }
                s[pos] = c;
            }
            if seen.insert(s.clone()) {
                payloads.push(Payload::Text(s));
                made += 1;
            }
        }
    }
    let ds = MetricDataset::from_payloads(Metric::Edit, SIGNATURE_LEN, payloads).expect("signatures are valid");
    (ds, anchor_strings)
}

/// A seeded random subset of `n` records, renumbered 0.. in original
/// order. The unchosen records are returned second, e.g. as queries.
pub fn downsample(ds: &MetricDataset, n: usize, seed: u64) -> (MetricDataset, Vec<Record>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n.min(ds.len());
    let mut chosen = vec![false; ds.len()];
    for i in sample(&mut rng, ds.len(), n) {
        chosen[i] = true;
    }
    let mut kept = Vec::with_capacity(n);
    let mut rest = Vec::with_capacity(ds.len() - n);
    for (rec, keep) in ds.records().iter().zip(chosen) {
        if keep {
            kept.push(Record { id: kept.len() as u64, payload: rec.payload.clone() });
        } else {
            rest.push(rec.clone());
        }
    }
    let kept = MetricDataset::new(ds.metric(), ds.dim(), kept).expect("subset of a valid dataset");
    (kept, rest)
}

fn vectors(metric: Metric, d: usize, points: Vec<Vec<f64>>) -> MetricDataset {
    MetricDataset::from_payloads(metric, d, points.into_iter().map(Payload::Vector).collect())
        .expect("generated vectors match d")
}
