//! Density-based clustering with deterministic labeling.

use crate::geometry::Point3;

/// Label assigned to points that belong to no cluster.
pub const NOISE: i32 = -1;

const UNVISITED: i32 = i32::MIN;

/// Points with their cluster labels (`0..k` or [`NOISE`]).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoints {
    pub points: Vec<Point3>,
    pub labels: Vec<i32>,
}

impl LabeledPoints {
    pub fn cluster_count(&self) -> usize {
        self.labels
            .iter()
            .copied()
            .max()
            .map_or(0, |m| (m + 1).max(0) as usize)
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.cluster_count()];
        for &l in &self.labels {
            if l >= 0 {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    /// Largest cluster id; ties go to the lower id.
    pub fn largest_cluster(&self) -> Option<i32> {
        let sizes = self.cluster_sizes();
        let mut best: Option<(usize, usize)> = None;
        for (id, &n) in sizes.iter().enumerate() {
            if best.map_or(true, |(_, bn)| n > bn) {
                best = Some((id, n));
            }
        }
        best.map(|(id, _)| id as i32)
    }
}

/// Clustering parameters. `eps` is in meters; neighborhoods include the point itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_pts: usize,
}

impl DbscanParams {
    /// Scale-adaptive defaults: `eps = 5 × median nearest-neighbor distance`
    /// and `min_pts = max(3, ⌈0.05 n⌉)`, capped at `n`.
    pub fn auto(points: &[Point3]) -> Self {
        Self {
            eps: default_eps(points),
            min_pts: default_min_pts(points.len()),
        }
    }

    /// Fills whichever of `eps` / `min_pts` is `None` with the defaults.
    pub fn resolve(points: &[Point3], eps: Option<f64>, min_pts: Option<usize>) -> Self {
        Self {
            eps: eps.unwrap_or_else(|| default_eps(points)),
            min_pts: min_pts.unwrap_or_else(|| default_min_pts(points.len())),
        }
    }
}

/// Smallest radius used when every point coincides.
const MIN_EPS: f64 = 1e-9;

fn default_min_pts(n: usize) -> usize {
    let want = 3.max((0.05 * n as f64).ceil() as usize);
    want.min(n.max(1))
}

fn default_eps(points: &[Point3]) -> f64 {
    let n = points.len();
    if n < 2 {
        return MIN_EPS;
    }
    let mut nn: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| (points[i] - points[j]).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    nn.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        nn[n / 2]
    } else {
        0.5 * (nn[n / 2 - 1] + nn[n / 2])
    };
    (5.0 * median).max(MIN_EPS)
}

fn region_query(points: &[Point3], i: usize, eps2: f64) -> Vec<usize> {
    let p = points[i];
    points
        .iter()
        .enumerate()
        .filter(|(_, q)| (p - **q).norm_squared() <= eps2)
        .map(|(j, _)| j)
        .collect()
}

/// Euclidean DBSCAN.
///
/// Points are scanned in input order, so cluster ids follow the first core
/// point of each cluster and a border point joins the first cluster that
/// reaches it.
pub fn dbscan(points: &[Point3], eps: f64, min_pts: usize) -> LabeledPoints {
    let n = points.len();
    let eps2 = eps * eps;
    let mut labels = vec![UNVISITED; n];
    let mut next_cluster = 0i32;
    let mut queue = std::collections::VecDeque::new();

    for i in 0..n {
        if labels[i] != UNVISITED {
            continue;
        }
        let seeds = region_query(points, i, eps2);
        if seeds.len() < min_pts {
            labels[i] = NOISE;
            continue;
        }
        let cluster = next_cluster;
        next_cluster += 1;
        labels[i] = cluster;
        queue.extend(seeds);
        while let Some(j) = queue.pop_front() {
            match labels[j] {
                NOISE => labels[j] = cluster,
                UNVISITED => {
                    labels[j] = cluster;
                    let nb = region_query(points, j, eps2);
                    if nb.len() >= min_pts {
                        queue.extend(nb);
                    }
                }
                _ => {}
            }
        }
    }

    LabeledPoints {
        points: points.to_vec(),
        labels,
    }
}
