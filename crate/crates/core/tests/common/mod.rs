//! Independent reference implementations used by the integration tests.
//!
//! Each oracle is written from first principles and shares no code with the
//! library beyond plain data types.

#![allow(dead_code)]

use binaural_sim::geometry::Point3;
use binaural_sim::io::DepthMap;
use binaural_sim::CameraIntrinsics;
use rand::Rng;

/// Textbook O(n·m) linear convolution.
pub fn direct_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Largest absolute difference divided by the largest reference magnitude.
pub fn relative_error(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    let scale = want.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let diff = got.iter().zip(want).fold(0.0f64, |m, (g, w)| m.max((g - w).abs()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Brute-force DBSCAN from the definitions.
///
/// Core points are those with at least `min_pts` points (itself included)
/// within `eps`. Clusters are the connected components of core points under
/// the `eps` relation, numbered by their lowest-index core point. A
/// non-core point within `eps` of some core point takes the lowest numbered
/// such cluster; anything else is noise (`-1`).
pub fn reference_dbscan(points: &[Point3], eps: f64, min_pts: usize) -> Vec<i32> {
    let n = points.len();
    let eps2 = eps * eps;
    let near = |i: usize, j: usize| {
        let d = points[i] - points[j];
        d.x * d.x + d.y * d.y + d.z * d.z <= eps2
    };
    let core: Vec<bool> = (0..n).map(|i| (0..n).filter(|&j| near(i, j)).count() >= min_pts).collect();

    let mut uf = UnionFind::new(n);
    for i in 0..n {
        for j in (i + 1)..n {
            if core[i] && core[j] && near(i, j) {
                uf.union(i, j);
            }
        }
    }
    // the union keeps the lowest index as root, so roots sorted ascending
    // are the clusters in order of their first core point
    let mut roots: Vec<usize> = (0..n).filter(|&i| core[i]).map(|i| uf.find(i)).collect();
    roots.sort_unstable();
    roots.dedup();
    let id_of = |root: usize| roots.binary_search(&root).unwrap() as i32;

    let mut labels = vec![-1; n];
    for i in 0..n {
        if core[i] {
            labels[i] = id_of(uf.find(i));
        }
    }
    for i in 0..n {
        if !core[i] {
            labels[i] = (0..n)
                .filter(|&j| core[j] && near(i, j))
                .map(|j| id_of(uf.find(j)))
                .min()
                .unwrap_or(-1);
        }
    }
    labels
}

/// Renames clusters by order of first appearance so two labelings can be
/// compared up to a permutation of ids. Noise stays `-1`.
pub fn canonical_labels(labels: &[i32]) -> Vec<i32> {
    let mut map = std::collections::HashMap::new();
    labels
        .iter()
        .map(|&l| {
            if l < 0 {
                -1
            } else {
                let next = map.len() as i32;
                *map.entry(l).or_insert(next)
            }
        })
        .collect()
}

/// Image source found by explicit wall mirroring.
#[derive(Debug, Clone, Copy)]
pub struct MirrorImage {
    pub position: Point3,
    pub coefficient: f64,
}

/// Enumerates images by recursively reflecting the source across walls.
///
/// Reflections are applied axis by axis (x, then y, then z); along one axis
/// consecutive reflections alternate between the two walls, starting from
/// either one, with at most `max_order` reflections. Walls are given in
/// absolute coordinates as `lo[k]`, `hi[k]` with coefficients
/// `beta[2k]`, `beta[2k + 1]`.
pub fn mirror_images(src: Point3, lo: Point3, hi: Point3, beta: [f64; 6], max_order: usize) -> Vec<MirrorImage> {
    let mut out = Vec::new();
    recurse(src, 1.0, 0, None, 0, lo, hi, beta, max_order, &mut out);
    out
}

#[allow(clippy::too_many_arguments)]
fn recurse(
    p: Point3,
    coef: f64,
    axis: usize,
    last_wall: Option<usize>,
    count: usize,
    lo: Point3,
    hi: Point3,
    beta: [f64; 6],
    max_order: usize,
    out: &mut Vec<MirrorImage>,
) {
    if axis == 3 {
        out.push(MirrorImage {
            position: p,
            coefficient: coef,
        });
        return;
    }
    // stop reflecting along this axis and move on
    recurse(p, coef, axis + 1, None, 0, lo, hi, beta, max_order, out);
    if count == max_order {
        return;
    }
    for wall in 0..2 {
        if last_wall == Some(wall) {
            continue;
        }
        let plane = if wall == 0 { lo[axis] } else { hi[axis] };
        let mut q = p;
        q[axis] = 2.0 * plane - p[axis];
        let c = coef * beta[2 * axis + wall];
        recurse(q, c, axis, Some(wall), count + 1, lo, hi, beta, max_order, out);
    }
}

/// Schroeder backward-integrated energy decay in dB relative to the total.
pub fn schroeder_db(rir: &[f64]) -> Vec<f64> {
    let mut edc = vec![0.0; rir.len()];
    let mut acc = 0.0;
    for i in (0..rir.len()).rev() {
        acc += rir[i] * rir[i];
        edc[i] = acc;
    }
    let total = edc[0];
    edc.iter().map(|e| 10.0 * (e / total).log10()).collect()
}

/// First sample index at which the decay curve falls to `level_db` or below.
pub fn first_crossing(edc_db: &[f64], level_db: f64) -> Option<usize> {
    edc_db.iter().position(|&e| e <= level_db)
}

/// Mean of the pinhole back-projection `((u − cx)/fx·d, (v − cy)/fy·d, d)`
/// over the clipped `r × r` window around `(u, v)`, skipping invalid depths.
pub fn brute_patch_mean(u: usize, v: usize, depth: &DepthMap, k: &CameraIntrinsics, r: usize) -> Option<Point3> {
    let half = (r / 2) as i64;
    let mut sum = [0.0f64; 3];
    let mut count = 0.0;
    for dv in -half..=half {
        for du in -half..=half {
            let (x, y) = (u as i64 + du, v as i64 + dv);
            if x < 0 || y < 0 || x >= depth.width as i64 || y >= depth.height as i64 {
                continue;
            }
            let d = f64::from(depth.get(x as usize, y as usize));
            if !(d > 0.0 && d.is_finite()) {
                continue;
            }
            sum[0] += (x as f64 - k.cx) / k.fx * d;
            sum[1] += (y as f64 - k.cy) / k.fy * d;
            sum[2] += d;
            count += 1.0;
        }
    }
    (count > 0.0).then(|| Point3::new(sum[0] / count, sum[1] / count, sum[2] / count))
}

/// Lag `k` maximizing `Σ a[n] · b[n + k]` over `|k| ≤ max_lag`. A positive
/// lag means `b` trails `a`.
pub fn xcorr_peak_lag(a: &[f64], b: &[f64], max_lag: i64) -> i64 {
    let n = a.len() as i64;
    let mut best = (0i64, f64::NEG_INFINITY);
    for k in -max_lag..=max_lag {
        let mut s = 0.0;
        for i in 0..n {
            let j = i + k;
            if j >= 0 && j < n {
                s += a[i as usize] * b[j as usize];
            }
        }
        if s > best.1 {
            best = (k, s);
        }
    }
    best.0
}

pub fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn white_noise(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
