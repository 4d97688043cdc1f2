//! Learned rank prediction over sorted key arrays.
//!
//! A [`RankModel`] is a polynomial fitted by least squares to the pairs
//! `(key, rank(key))`, where `rank(x)` is the number of keys strictly
//! smaller than `x`. Predictions are only hints: [`search_first_geq`]
//! gallops outward from the predicted position, so every lookup returns
//! the exact rank whatever the model error, in `O(log err)` probes.

use nalgebra::{DMatrix, DVector};

use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};

const RIDGE: f64 = 1e-9;

/// Polynomial rank model in a Chebyshev basis over the normalized key.
#[derive(Clone, Debug, PartialEq)]
pub struct RankModel {
    degree: usize,
    key_min: f64,
    key_max: f64,
    /// Number of training keys; predictions are clamped to `[0, len-1]`.
    len: usize,
    coeffs: Vec<f64>,
}

impl RankModel {
    /// Fits a degree-`degree` polynomial to `(keys[t], rank(keys[t]))`.
    ///
    /// `keys` must be sorted ascending. When all keys are equal the model is
    /// the constant 0.
    pub fn train(keys: &[f64], degree: usize) -> Result<Self> {
        if keys.is_empty() {
            return Err(Error::param("cannot train a rank model on an empty array"));
        }
        if degree == 0 {
            return Err(Error::param("model degree must be positive"));
        }
        if keys.iter().any(|k| !k.is_finite()) {
            return Err(Error::param("keys must be finite"));
        }
        let (key_min, key_max) = (keys[0], keys[keys.len() - 1]);
        let mut model = RankModel {
            degree,
            key_min,
            key_max,
            len: keys.len(),
            coeffs: vec![0.0; degree + 1],
        };
        if key_max <= key_min {
            return Ok(model);
        }

        let n = keys.len();
        let p = degree + 1;
        let mut a = DMatrix::<f64>::zeros(n + p, p);
        let mut b = DVector::<f64>::zeros(n + p);
        let mut rank = 0usize;
        let mut basis = vec![0.0; p];
        for (t, &k) in keys.iter().enumerate() {
            if t > 0 && keys[t - 1] < k {
                rank = t;
            }
            chebyshev_basis(model.normalize(k), &mut basis);
            for (c, v) in basis.iter().enumerate() {
                a[(t, c)] = *v;
            }
            b[t] = rank as f64;
        }
        // ridge rows
        let lambda = RIDGE.sqrt();
        for c in 0..p {
            a[(n + c, c)] = lambda;
        }

        let qr = a.qr();
        let qtb = qr.q().transpose() * b;
        let coeffs = qr
            .r()
            .solve_upper_triangular(&qtb)
            .ok_or_else(|| Error::param("singular least-squares system"))?;
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("rank model fit produced non-finite coefficients"));
        }
        model.coeffs = coeffs.iter().copied().collect();
        Ok(model)
    }

    /// Model over an empty array; predicts 0.
    pub(crate) fn empty(degree: usize) -> Self {
        RankModel { degree, key_min: 0.0, key_max: 0.0, len: 0, coeffs: vec![0.0; degree + 1] }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn key_range(&self) -> (f64, f64) {
        (self.key_min, self.key_max)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    fn normalize(&self, x: f64) -> f64 {
        if self.key_max <= self.key_min {
            return -1.0;
        }
        let u = ((x - self.key_min) / (self.key_max - self.key_min)).clamp(0.0, 1.0);
        2.0 * u - 1.0
    }

    /// Predicted rank of `x`, clamped to `[0, len-1]`.
    pub fn predict(&self, x: f64) -> f64 {
        let hi = self.len.saturating_sub(1) as f64;
        // outside the trained range the rank is known; never extrapolate
        if x > self.key_max {
            return hi;
        }
        if x < self.key_min || x.is_nan() {
            return 0.0;
        }
        let t = self.normalize(x);
        // Clenshaw recurrence
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        let y = self.coeffs[0] + t * b1 - b2;
        if y.is_nan() {
            return 0.0;
        }
        y.clamp(0.0, hi)
    }

    /// Predicted position rounded to an index.
    pub fn predict_index(&self, x: f64) -> usize {
        self.predict(x).round() as usize
    }

    pub(crate) fn write(&self, w: &mut Writer) {
        w.u64(self.degree as u64);
        w.f64(self.key_min);
        w.f64(self.key_max);
        w.u64(self.len as u64);
        for &c in &self.coeffs {
            w.f64(c);
        }
    }

    pub(crate) fn read(r: &mut Reader<'_>) -> Result<Self> {
        let degree = r.u64()? as usize;
        if degree == 0 || degree > 4096 {
            return Err(Error::format(format!("bad model degree {degree}")));
        }
        let key_min = r.f64()?;
        let key_max = r.f64()?;
        let len = r.u64()? as usize;
        let coeffs = (0..=degree).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
        Ok(RankModel { degree, key_min, key_max, len, coeffs })
    }
}

fn chebyshev_basis(t: f64, out: &mut [f64]) {
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = t;
    }
    for c in 2..out.len() {
        out[c] = 2.0 * t * out[c - 1] - out[c - 2];
    }
}

/// Number of keys strictly smaller than `x` (plain binary search).
pub fn exact_rank<T: PartialOrd>(keys: &[T], x: &T) -> usize {
    keys.partition_point(|k| k < x)
}

/// Exact rank of `x` found by exponential search around `start`.
pub fn search_first_geq<T: PartialOrd>(keys: &[T], start: usize, x: &T) -> usize {
    gallop(keys, start, |k| k < x).0
}

/// As [`search_first_geq`], also returning the number of key probes.
pub fn search_first_geq_counted<T: PartialOrd>(keys: &[T], start: usize, x: &T) -> (usize, usize) {
    gallop(keys, start, |k| k < x)
}

/// Index of the last key equal to `x`, searching outward from `start`.
pub fn search_last_occurrence<T: PartialOrd>(keys: &[T], start: usize, x: &T) -> Option<usize> {
    let (past, _) = gallop(keys, start, |k| k <= x);
    (past > 0 && keys[past - 1] == *x).then(|| past - 1)
}

/// First index at which `before` turns false, assuming `before` holds on a
/// prefix of `keys`. Gallops from `start` in doubling steps, then binary
/// searches the bracketed gap.
fn gallop<T>(keys: &[T], start: usize, before: impl Fn(&T) -> bool) -> (usize, usize) {
    let n = keys.len();
    let s = start.min(n);
    let mut probes = 0;
    let mut probe = |i: usize| {
        probes += 1;
        before(&keys[i])
    };

    let (lo, hi) = if s < n && probe(s) {
        // answer in (s, n]
        let mut lo = s;
        let mut step = 1;
        loop {
            let i = s + step;
            if i >= n {
                break (lo + 1, n);
            }
            if !probe(i) {
                break (lo + 1, i);
            }
            lo = i;
            step *= 2;
        }
    } else {
        // answer in [0, s]
        let mut hi = s;
        let mut step = 1;
        loop {
            if step > s {
                break (0, hi);
            }
            let i = s - step;
            if probe(i) {
                break (i + 1, hi);
            }
            hi = i;
            step *= 2;
        }
    };

    // answer in [lo, hi]; keys[hi], if any, is known to fail `before`
    let (mut lo, mut hi) = (lo, hi);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if probe(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    (lo, probes)
}

/// How positions in a sorted key array are located: learned model plus
/// exponential search, or plain binary search (the non-learned ablation).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Locator {
    #[default]
    Learned,
    BinarySearch,
}

impl Locator {
    pub fn name(self) -> &'static str {
        match self {
            Locator::Learned => "lims",
            Locator::BinarySearch => "nlims",
        }
    }

    /// Exact rank of `x` in `keys`. `key_as_f64` is the model input for `x`.
    #[inline]
    pub fn first_geq<T: PartialOrd>(self, keys: &[T], model: &RankModel, x: &T, key_as_f64: f64) -> usize {
        match self {
            Locator::Learned => search_first_geq(keys, model.predict_index(key_as_f64), x),
            Locator::BinarySearch => exact_rank(keys, x),
        }
    }

    /// Last index holding `x`, starting from a known position `from`.
    #[inline]
    pub fn last_occurrence<T: PartialOrd>(self, keys: &[T], from: usize, x: &T) -> Option<usize> {
        match self {
            Locator::Learned => search_last_occurrence(keys, from, x),
            Locator::BinarySearch => {
                let past = keys.partition_point(|k| k <= x);
                (past > 0 && keys[past - 1] == *x).then(|| past - 1)
            }
        }
    }
}

impl std::str::FromStr for Locator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lims" | "learned" => Ok(Locator::Learned),
            "nlims" | "n-lims" | "binary" => Ok(Locator::BinarySearch),
            other => Err(Error::param(format!("unknown locator {other:?}"))),
        }
    }
}
