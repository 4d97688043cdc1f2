//! Clustering and pivot selection.
//!
//! Clusters come from greedy farthest-point k-center (a 2-approximation of
//! the optimal max radius); pivots inside each cluster come from
//! farthest-first traversal starting at the cluster center. The number of
//! clusters can be chosen with [`select_k`], which finds the elbow of
//! `OR(K) + λ·MAE(K)` over a candidate sweep.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Assignment of points to `K` centers. Centers are indices of points.
#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub centers: Vec<usize>,
    /// Cluster index for every point.
    pub assignment: Vec<usize>,
    /// Distance from every point to its assigned center.
    pub center_dist: Vec<f64>,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Member indices per cluster, in ascending point order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k()];
        for (p, &c) in self.assignment.iter().enumerate() {
            out[c].push(p);
        }
        out
    }

    /// Largest distance from any point to its center.
    pub fn max_radius(&self) -> f64 {
        self.center_dist.iter().copied().fold(0.0, f64::max)
    }
}

/// Greedy farthest-point k-center. The first center is drawn with `seed`;
/// every following center is the point farthest from the chosen ones
/// (lowest index on ties). Points go to their nearest center, earliest
/// center on ties.
pub fn k_center<T>(points: &[T], k: usize, seed: u64, dist: impl Fn(&T, &T) -> f64) -> Result<Clustering> {
    let n = points.len();
    if k == 0 {
        return Err(Error::param("K must be positive"));
    }
    if k > n {
        return Err(Error::param(format!("K = {k} exceeds the {n} points")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = rng.random_range(0..n);
    let mut centers = vec![first];
    let mut assignment = vec![0usize; n];
    let mut center_dist: Vec<f64> = points.iter().map(|p| dist(p, &points[first])).collect();

    while centers.len() < k {
        let (far, _) = center_dist
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        let c = centers.len();
        centers.push(far);
        for (i, p) in points.iter().enumerate() {
            let d = dist(p, &points[far]);
            if d < center_dist[i] {
                center_dist[i] = d;
                assignment[i] = c;
            }
        }
        // the center itself may tie with an earlier center at distance 0
        assignment[far] = c;
        center_dist[far] = 0.0;
    }
    Ok(Clustering { centers, assignment, center_dist })
}

/// Farthest-first traversal inside one cluster. `members` are point
/// indices, `center` must be one of them and becomes the first pivot.
/// Returns `m` distinct member indices.
pub fn fft_pivots<T>(
    points: &[T],
    members: &[usize],
    center: usize,
    m: usize,
    dist: impl Fn(&T, &T) -> f64,
) -> Result<Vec<usize>> {
    if m == 0 {
        return Err(Error::param("m must be positive"));
    }
    if m > members.len() {
        return Err(Error::param(format!(
            "m = {m} exceeds cluster size {}",
            members.len()
        )));
    }
    if !members.contains(&center) {
        return Err(Error::param("center is not a member of its cluster"));
    }
    let mut pivots = vec![center];
    let mut chosen = vec![false; members.len()];
    chosen[members.iter().position(|&p| p == center).unwrap()] = true;
    let mut min_dist: Vec<f64> = members.iter().map(|&p| dist(&points[p], &points[center])).collect();
    while pivots.len() < m {
        let mut best: Option<usize> = None;
        for (slot, &d) in min_dist.iter().enumerate() {
            if chosen[slot] {
                continue;
            }
            if best.is_none_or(|b| d > min_dist[b]) {
                best = Some(slot);
            }
        }
        let slot = best.expect("m <= members guarantees an unchosen member");
        chosen[slot] = true;
        let pivot = members[slot];
        pivots.push(pivot);
        for (s, &p) in members.iter().enumerate() {
            let d = dist(&points[p], &points[pivot]);
            if d < min_dist[s] {
                min_dist[s] = d;
            }
        }
    }
    Ok(pivots)
}

/// Centroid distance range of one cluster.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterExtent {
    pub dist_min: f64,
    pub dist_max: f64,
}

/// Overlap rate over clusters with the given centroid extents.
/// `center_dist(i, j)` is the distance between centroids `i` and `j`.
///
/// Each overlap length is clamped at 0 (disjoint clusters contribute
/// nothing) and clusters with zero radius contribute 0.
pub fn overlap_rate_from_extents(
    extents: &[ClusterExtent],
    center_dist: impl Fn(usize, usize) -> f64,
) -> Result<f64> {
    let k = extents.len();
    if k < 2 {
        return Err(Error::param("overlap rate needs at least two clusters"));
    }
    let mut sum = 0.0;
    for i in 0..k {
        if extents[i].dist_max <= 0.0 {
            continue;
        }
        for j in 0..k {
            if i == j {
                continue;
            }
            let d = center_dist(i, j);
            let hi = (d + extents[j].dist_max).min(extents[i].dist_max);
            let lo = (d - extents[j].dist_max).max(extents[i].dist_min);
            sum += (hi - lo).max(0.0) / extents[i].dist_max;
        }
    }
    Ok(sum / (k * (k - 1)) as f64)
}

/// Overlap rate of a clustering, using the centers as first pivots.
pub fn overlap_rate<T>(points: &[T], clustering: &Clustering, dist: impl Fn(&T, &T) -> f64) -> Result<f64> {
    let mut extents = vec![ClusterExtent { dist_min: f64::INFINITY, dist_max: 0.0 }; clustering.k()];
    for (p, &c) in clustering.assignment.iter().enumerate() {
        let d = clustering.center_dist[p];
        extents[c].dist_min = extents[c].dist_min.min(d);
        extents[c].dist_max = extents[c].dist_max.max(d);
    }
    let centers = &clustering.centers;
    overlap_rate_from_extents(&extents, |i, j| dist(&points[centers[i]], &points[centers[j]]))
}

/// Closed-form least-squares line `rank ≈ a·x + b` over a sorted array.
pub fn linear_fit(sorted: &[f64]) -> (f64, f64) {
    let n = sorted.len() as f64;
    if sorted.is_empty() {
        return (0.0, 0.0);
    }
    let ranks = ranks_of(sorted);
    let mx = sorted.iter().sum::<f64>() / n;
    let my = ranks.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in sorted.iter().zip(&ranks) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    let a = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (a, my - a * mx)
}

fn ranks_of(sorted: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(sorted.len());
    let mut rank = 0;
    for (t, x) in sorted.iter().enumerate() {
        if t > 0 && sorted[t - 1] < *x {
            rank = t;
        }
        out.push(rank as f64);
    }
    out
}

/// Mean absolute error of per-pivot linear rank fits.
///
/// `clusters[i][j]` is the sorted distance array of pivot `j` in cluster
/// `i`; `m` is the pivot count and `total` the dataset size. Empty arrays
/// contribute nothing.
pub fn mae(clusters: &[Vec<Vec<f64>>], m: usize, total: usize) -> Result<f64> {
    if m == 0 || total == 0 {
        return Err(Error::param("MAE needs m > 0 and a non-empty dataset"));
    }
    let mut sum = 0.0;
    for lists in clusters {
        for sorted in lists {
            if sorted.is_empty() {
                continue;
            }
            let (a, b) = linear_fit(sorted);
            let ranks = ranks_of(sorted);
            sum += sorted.iter().zip(&ranks).map(|(x, r)| (a * x + b - r).abs()).sum::<f64>();
        }
    }
    Ok(sum / (m * total) as f64)
}

/// Index of the elbow of `curve`: the interior point farthest from the
/// chord joining the first and last points, after scaling both axes to
/// `[0, 1]`. Ties go to the smallest index.
pub fn elbow(curve: &[(f64, f64)]) -> Result<usize> {
    if curve.len() < 3 {
        return Err(Error::param("elbow detection needs at least three points"));
    }
    let scale = |vals: &mut dyn Iterator<Item = f64>| {
        let v: Vec<f64> = vals.collect();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        v.into_iter()
            .map(|x| if span > 0.0 { (x - lo) / span } else { 0.0 })
            .collect::<Vec<_>>()
    };
    let xs = scale(&mut curve.iter().map(|p| p.0));
    let ys = scale(&mut curve.iter().map(|p| p.1));
    let last = curve.len() - 1;
    let (x0, y0, x1, y1) = (xs[0], ys[0], xs[last], ys[last]);
    let norm = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
    let mut best = 1;
    let mut best_d = f64::NEG_INFINITY;
    for i in 1..last {
        let cross = ((x1 - x0) * (y0 - ys[i]) - (x0 - xs[i]) * (y1 - y0)).abs();
        let d = if norm > 0.0 { cross / norm } else { 0.0 };
        // tolerate rounding so exactly collinear points tie
        if d > best_d + 1e-12 {
            best = i;
            best_d = d;
        }
    }
    Ok(best)
}

/// Score of one candidate cluster count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KScore {
    pub k: usize,
    pub overlap_rate: f64,
    pub mae: f64,
    /// `OR + λ·MAE`, filled in once λ is known.
    pub score: f64,
}

/// Sweeps `candidates` (ascending) and returns the elbow of
/// `OR(K) + λ·MAE(K)` with `λ = 1 / max_K MAE(K)`, plus the full sweep.
pub fn select_k<T>(
    points: &[T],
    candidates: &[usize],
    m: usize,
    seed: u64,
    dist: impl Fn(&T, &T) -> f64 + Copy,
) -> Result<(usize, Vec<KScore>)> {
    if candidates.len() < 3 {
        return Err(Error::param("select_k needs at least three candidate values"));
    }
    if candidates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("candidate K values must be strictly ascending"));
    }
    let mut scores = Vec::with_capacity(candidates.len());
    for &k in candidates {
        let clustering = k_center(points, k, seed, dist)?;
        let or = overlap_rate(points, &clustering, dist)?;
        let mut lists = Vec::with_capacity(k);
        for (c, members) in clustering.members().iter().enumerate() {
            let mi = m.min(members.len());
            let pivots = fft_pivots(points, members, clustering.centers[c], mi, dist)?;
            lists.push(
                pivots
                    .iter()
                    .map(|&o| {
                        let mut d: Vec<f64> = members.iter().map(|&p| dist(&points[p], &points[o])).collect();
                        d.sort_by(f64::total_cmp);
                        d
                    })
                    .collect::<Vec<_>>(),
            );
        }
        let e = mae(&lists, m, points.len())?;
        scores.push(KScore { k, overlap_rate: or, mae: e, score: 0.0 });
    }
    let max_mae = scores.iter().map(|s| s.mae).fold(0.0, f64::max);
    let lambda = if max_mae > 0.0 { 1.0 / max_mae } else { 0.0 };
    for s in &mut scores {
        s.score = s.overlap_rate + lambda * s.mae;
    }
    let curve: Vec<(f64, f64)> = scores.iter().map(|s| (s.k as f64, s.score)).collect();
    let at = elbow(&curve)?;
    Ok((scores[at].k, scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn line(a: &f64, b: &f64) -> f64 {
        (a - b).abs()
    }

    fn euclid(a: &Vec<f64>, b: &Vec<f64>) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    // Optimal K-center radius by trying every K-subset of candidate centers.
    fn brute_force_radius<T>(points: &[T], k: usize, dist: impl Fn(&T, &T) -> f64) -> f64 {
        fn rec<T>(
            points: &[T],
            k: usize,
            from: usize,
            chosen: &mut Vec<usize>,
            best: &mut f64,
            dist: &impl Fn(&T, &T) -> f64,
        ) {
            if chosen.len() == k {
                let r = points
                    .iter()
                    .map(|p| chosen.iter().map(|&c| dist(p, &points[c])).fold(f64::INFINITY, f64::min))
                    .fold(0.0, f64::max);
                *best = best.min(r);
                return;
            }
            for c in from..points.len() {
                chosen.push(c);
                rec(points, k, c + 1, chosen, best, dist);
                chosen.pop();
            }
        }
        let mut best = f64::INFINITY;
        rec(points, k, 0, &mut Vec::new(), &mut best, &dist);
        best
    }

    #[test]
    fn k_center_splits_two_groups_for_every_seed() {
        let pts = [0.0, 1.0, 10.0, 11.0];
        let opt = brute_force_radius(&pts, 2, line);
        assert_eq!(opt, 1.0);
        for seed in 0..16 {
            let c = k_center(&pts, 2, seed, line).unwrap();
            let mut centers: Vec<f64> = c.centers.iter().map(|&i| pts[i]).collect();
            centers.sort_by(f64::total_cmp);
            assert!(centers[0] <= 1.0 && centers[1] >= 10.0, "seed {seed}: {centers:?}");
            assert_eq!(c.assignment[0], c.assignment[1]);
            assert_eq!(c.assignment[2], c.assignment[3]);
            assert_ne!(c.assignment[0], c.assignment[2]);
            assert!(c.max_radius() <= 2.0 * opt);
        }
    }

    #[test]
    fn k_equal_n_makes_singletons() {
        let pts = [3.0, 1.0, 4.0, 1.5, 9.0];
        let c = k_center(&pts, pts.len(), 3, line).unwrap();
        let mut centers = c.centers.clone();
        centers.sort();
        assert_eq!(centers, vec![0, 1, 2, 3, 4]);
        for (p, &cl) in c.assignment.iter().enumerate() {
            assert_eq!(c.centers[cl], p);
        }
        assert_eq!(c.max_radius(), 0.0);
    }

    #[test]
    fn k_center_parameter_errors() {
        assert!(k_center(&[1.0, 2.0], 3, 0, line).is_err());
        assert!(k_center(&[1.0, 2.0], 0, 0, line).is_err());
    }

    #[test]
    fn k_center_two_approximation_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..30 {
            let n = rng.random_range(4..=12);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random(), rng.random()]).collect();
            for k in 1..=3 {
                let opt = brute_force_radius(&pts, k, euclid);
                let c = k_center(&pts, k, trial, euclid).unwrap();
                assert!(c.max_radius() <= 2.0 * opt + 1e-12);
                // centers are members of their own clusters
                for (ci, &p) in c.centers.iter().enumerate() {
                    assert_eq!(c.assignment[p], ci);
                }
            }
        }
    }

    #[test]
    fn k_center_gaussmix_against_subsample_optimum() {
        use crate::bench::generators::gaussmix;
        let ds = gaussmix(10_000, 8, 3);
        let pts: Vec<Vec<f64>> = ds.records().iter().map(|r| r.payload.as_vector().unwrap().to_vec()).collect();
        let c = k_center(&pts, 100, 1, euclid).unwrap();
        // the optimal radius on the full set is at least the optimal radius
        // of any subset; compare on a 200-point subsample with K=2, where
        // exhaustive search is cheap, to pin the bound direction
        let sub: Vec<Vec<f64>> = pts.iter().step_by(50).take(200).cloned().collect();
        let sub_c = k_center(&sub, 2, 1, euclid).unwrap();
        let sub_opt = brute_force_radius(&sub, 2, euclid);
        assert!(sub_c.max_radius() <= 2.0 * sub_opt + 1e-12);
        // Gonzalez's radius is also a lower bound witness: K+1 points at
        // pairwise distance >= r, so opt >= r/2 everywhere
        let r = c.max_radius();
        assert!(r > 0.0);
        let far = c.center_dist.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        let mut witness = c.centers.clone();
        witness.push(far);
        for (i, &a) in witness.iter().enumerate() {
            for &b in &witness[i + 1..] {
                assert!(euclid(&pts[a], &pts[b]) >= r - 1e-12);
            }
        }
    }

    #[test]
    fn fft_on_a_line() {
        let pts = [0.0, 5.0, 10.0];
        assert_eq!(fft_pivots(&pts, &[0, 1, 2], 0, 2, line).unwrap(), vec![0, 2]);
        assert_eq!(fft_pivots(&pts, &[0, 1, 2], 0, 1, line).unwrap(), vec![0]);
        assert!(fft_pivots(&pts, &[0, 1, 2], 0, 4, line).is_err());
    }

    #[test]
    fn fft_each_step_is_maximal() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.random(), rng.random(), rng.random()]).collect();
        let members: Vec<usize> = (0..50).collect();
        let pivots = fft_pivots(&pts, &members, 17, 3, euclid).unwrap();
        assert_eq!(pivots[0], 17);
        for step in 1..pivots.len() {
            let min_to = |p: usize| pivots[..step].iter().map(|&o| euclid(&pts[p], &pts[o])).fold(f64::INFINITY, f64::min);
            let best = members.iter().map(|&p| min_to(p)).fold(0.0, f64::max);
            assert_eq!(min_to(pivots[step]), best);
        }
        let mut uniq = pivots.clone();
        uniq.dedup();
        assert_eq!(uniq.len(), 3);
    }

    #[test]
    fn overlap_of_identical_clusters_is_one() {
        let r = 2.5;
        let ext = [ClusterExtent { dist_min: 0.0, dist_max: r }; 2];
        // min{0 + R, R} - max{0 - R, 0} = R, so each ordered pair adds R/R
        assert!((overlap_rate_from_extents(&ext, |_, _| 0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn disjoint_clusters_do_not_overlap() {
        let ext = [ClusterExtent { dist_min: 0.0, dist_max: 1.0 }, ClusterExtent { dist_min: 0.0, dist_max: 2.0 }];
        assert_eq!(overlap_rate_from_extents(&ext, |_, _| 10.0).unwrap(), 0.0);
        assert!(overlap_rate_from_extents(&ext[..1], |_, _| 0.0).is_err());
    }

    // Straight transcription of the OR formula, no clamping shortcuts beyond
    // the documented ones.
    fn or_oracle(centers: &[Vec<f64>], radii: &[f64], mins: &[f64]) -> f64 {
        let k = centers.len();
        let mut total = 0.0;
        for i in 0..k {
            for j in 0..k {
                if i == j || radii[i] == 0.0 {
                    continue;
                }
                let d = euclid(&centers[i], &centers[j]);
                let a = f64::min(d + radii[j], radii[i]);
                let b = f64::max(d - radii[j], mins[i]);
                let r = if a - b > 0.0 { a - b } else { 0.0 };
                total += r / radii[i];
            }
        }
        total / (k as f64 * (k as f64 - 1.0))
    }

    #[test]
    fn overlap_rate_matches_scalar_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pts: Vec<Vec<f64>> = (0..90)
            .map(|i| {
                let off = (i % 3) as f64 * 0.4;
                vec![off + rng.random::<f64>() * 0.5, rng.random::<f64>() * 0.5]
            })
            .collect();
        let c = k_center(&pts, 3, 2, euclid).unwrap();
        let centers: Vec<Vec<f64>> = c.centers.iter().map(|&i| pts[i].clone()).collect();
        let mut radii = vec![0.0; 3];
        let mut mins = vec![f64::INFINITY; 3];
        for (p, &cl) in c.assignment.iter().enumerate() {
            let d = euclid(&pts[p], &centers[cl]);
            radii[cl] = f64::max(radii[cl], d);
            mins[cl] = f64::min(mins[cl], d);
        }
        let got = overlap_rate(&pts, &c, euclid).unwrap();
        assert!((got - or_oracle(&centers, &radii, &mins)).abs() < 1e-12);
        assert!(got > 0.0);
    }

    #[test]
    fn overlap_rate_is_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts: Vec<Vec<f64>> = (0..60).map(|_| vec![rng.random(), rng.random()]).collect();
        let c = k_center(&pts, 4, 0, euclid).unwrap();
        let base = overlap_rate(&pts, &c, euclid).unwrap();
        for scale in [0.5, 3.0, 1000.0] {
            let scaled = |a: &Vec<f64>, b: &Vec<f64>| scale * euclid(a, b);
            let c2 = k_center(&pts, 4, 0, scaled).unwrap();
            assert_eq!(c2.centers, c.centers);
            let or = overlap_rate(&pts, &c2, scaled).unwrap();
            assert!((or - base).abs() < 1e-12, "{or} vs {base}");
        }
    }

    #[test]
    fn mae_examples() {
        let uniform: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        assert!(mae(&[vec![uniform]], 1, 100).unwrap() <= 0.5);

        // ranks {0,0,0,3}; by hand x̄=0.25, ȳ=0.75, Sxy=2.25, Sxx=0.75 → a=3, b=0
        let (a, b) = linear_fit(&[0.0, 0.0, 0.0, 1.0]);
        assert!((a - 3.0).abs() < 1e-12 && b.abs() < 1e-12);
        assert!(mae(&[vec![vec![0.0, 0.0, 0.0, 1.0]]], 1, 4).unwrap() < 1e-12);

        // {0,1,1}: ranks {0,1,1}; x̄=2/3, ȳ=2/3, Sxy=2/3, Sxx=2/3 → a=1, b=0 → residuals 0
        assert!(mae(&[vec![vec![0.0, 1.0, 1.0]]], 1, 3).unwrap() < 1e-12);
        // {0,1,3}: ranks {0,1,2}; x̄=4/3, Sxx=14/3, Sxy=3 → a=9/14, b=1-12/14=1/7
        let a = 9.0 / 14.0;
        let b = 1.0 / 7.0;
        let expected = ((b - 0.0f64).abs() + (a + b - 1.0).abs() + (3.0 * a + b - 2.0).abs()) / 3.0;
        assert!((mae(&[vec![vec![0.0, 1.0, 3.0]]], 1, 3).unwrap() - expected).abs() < 1e-12);
    }

    // Independent O(n) accumulation using raw sums.
    fn mae_oracle(lists: &[Vec<Vec<f64>>], m: usize, total: usize) -> f64 {
        let mut acc = 0.0;
        for cl in lists {
            for l in cl {
                let n = l.len() as f64;
                let r: Vec<f64> = (0..l.len()).map(|t| l.iter().filter(|&&v| v < l[t]).count() as f64).collect();
                let sx: f64 = l.iter().sum();
                let sy: f64 = r.iter().sum();
                let sxx: f64 = l.iter().map(|v| v * v).sum();
                let sxy: f64 = l.iter().zip(&r).map(|(x, y)| x * y).sum();
                let den = n * sxx - sx * sx;
                let a = if den.abs() > 0.0 { (n * sxy - sx * sy) / den } else { 0.0 };
                let b = (sy - a * sx) / n;
                acc += l.iter().zip(&r).map(|(x, y)| (a * x + b - y).abs()).sum::<f64>();
            }
        }
        acc / (m * total) as f64
    }

    #[test]
    fn mae_matches_independent_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let lists: Vec<Vec<Vec<f64>>> = (0..4)
            .map(|_| {
                (0..3)
                    .map(|_| {
                        let mut v: Vec<f64> = (0..40).map(|_| rng.random::<f64>().powi(2)).collect();
                        v.sort_by(f64::total_cmp);
                        v
                    })
                    .collect()
            })
            .collect();
        let got = mae(&lists, 3, 160).unwrap();
        assert!((got - mae_oracle(&lists, 3, 160)).abs() < 1e-9);
    }

    #[test]
    fn elbow_examples() {
        let curve = [(20.0, 1.0), (60.0, 0.3), (100.0, 0.25), (140.0, 0.24)];
        assert_eq!(curve[elbow(&curve).unwrap()].0, 60.0);
        let linear = [(20.0, 1.0), (30.0, 0.9), (40.0, 0.8), (50.0, 0.7)];
        assert_eq!(elbow(&linear).unwrap(), 1);
        assert!(elbow(&curve[..2]).is_err());
    }

    #[test]
    fn select_k_on_separated_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        // six tight, well separated blobs
        let pts: Vec<Vec<f64>> = (0..600)
            .map(|i| {
                let b = (i % 6) as f64;
                vec![b * 10.0 + rng.random::<f64>() * 0.1, rng.random::<f64>() * 0.1]
            })
            .collect();
        let (k, sweep) = select_k(&pts, &[2, 4, 6, 8, 10, 12], 2, 0, euclid).unwrap();
        assert_eq!(sweep.len(), 6);
        assert!(sweep.iter().all(|s| s.score.is_finite()));
        assert!((4..=8).contains(&k), "picked {k}");
        assert!(select_k(&pts, &[2, 4], 2, 0, euclid).is_err());
        assert!(select_k(&pts, &[4, 2, 6], 2, 0, euclid).is_err());
    }
}
