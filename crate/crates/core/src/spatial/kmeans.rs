use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SpatialError;
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub centroids: Vec<Point>,
    /// Cluster index of each input point.
    pub assignments: Vec<usize>,
    /// Sum of squared point-to-centroid distances, px².
    pub inertia: f64,
    pub iterations: usize,
    /// Restart that produced this result.
    pub restart: usize,
}

/// Index of the nearest centroid; ties go to the lowest index.
pub(crate) fn nearest(p: Point, centroids: &[Point]) -> (usize, f64) {
    let mut best = (0, p.distance_sq(centroids[0]));
    for (j, c) in centroids.iter().enumerate().skip(1) {
        let d = p.distance_sq(*c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn distinct_count(points: &[Point]) -> usize {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    sorted.dedup();
    sorted.len()
}

/// Lloyd's algorithm from k-means++ seeding, best of several seeded restarts.
pub fn kmeans(points: &[Point], k: usize, seed: u64) -> Result<Clustering, SpatialError> {
    kmeans_with(points, k, seed, &KMeansConfig::default())
}

pub fn kmeans_with(
    points: &[Point],
    k: usize,
    seed: u64,
    config: &KMeansConfig,
) -> Result<Clustering, SpatialError> {
    if points.is_empty() {
        return Err(SpatialError::Empty);
    }
    if k == 0 {
        return Err(SpatialError::ZeroK);
    }
    if let Some(index) = points.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(SpatialError::NonFinite { index });
    }
    let distinct = distinct_count(points);
    if k > distinct {
        return Err(SpatialError::Infeasible { k, distinct });
    }
    let runs: Vec<Clustering> = (0..config.restarts.max(1))
        .into_par_iter()
        .map(|restart| {
            // One independent stream per restart keeps the result
            // independent of scheduling.
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(restart as u64);
            lloyd(points, k, config.max_iter, restart, &mut rng)
        })
        .collect();
    Ok(runs
        .into_iter()
        .reduce(|best, run| if run.inertia < best.inertia { run } else { best })
        .expect("at least one restart"))
}

fn seed_centroids(points: &[Point], k: usize, rng: &mut impl Rng) -> Vec<Point> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())]);
    let mut dist: Vec<f64> = points.iter().map(|p| p.distance_sq(centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, d) in dist.iter().enumerate() {
            if *d > 0.0 {
                if target < *d {
                    pick = Some(i);
                    break;
                }
                target -= d;
            }
        }
        // Rounding can walk off the end of the cumulative sum.
        let pick = pick.unwrap_or_else(|| farthest(&dist));
        let c = points[pick];
        centroids.push(c);
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(p.distance_sq(c));
        }
    }
    centroids
}

fn farthest(dist: &[f64]) -> usize {
    dist.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best })
        .0
}

fn assign(points: &[Point], centroids: &[Point]) -> (Vec<usize>, Vec<f64>) {
    points.iter().map(|p| nearest(*p, centroids)).unzip()
}

fn update(points: &[Point], assignments: &[usize], dist: &[f64], k: usize) -> Vec<Point> {
    let mut sums = vec![(0.0, 0.0, 0usize); k];
    for (p, &a) in points.iter().zip(assignments) {
        sums[a].0 += p.x;
        sums[a].1 += p.y;
        sums[a].2 += 1;
    }
    let mut centroids: Vec<Point> = sums
        .iter()
        .map(|&(sx, sy, n)| {
            if n > 0 {
                Point::new(sx / n as f64, sy / n as f64)
            } else {
                Point::new(f64::NAN, f64::NAN)
            }
        })
        .collect();
    // Reseed empty clusters at the points worst served by their centroid.
    let mut dist = dist.to_vec();
    for j in 0..k {
        if sums[j].2 == 0 {
            let i = farthest(&dist);
            centroids[j] = points[i];
            dist[i] = 0.0;
        }
    }
    centroids
}

fn lloyd(
    points: &[Point],
    k: usize,
    max_iter: usize,
    restart: usize,
    rng: &mut impl Rng,
) -> Clustering {
    let mut centroids = seed_centroids(points, k, rng);
    let (mut assignments, mut dist) = assign(points, &centroids);
    let mut inertia: f64 = dist.iter().sum();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        centroids = update(points, &assignments, &dist, k);
        let (next, next_dist) = assign(points, &centroids);
        let next_inertia: f64 = next_dist.iter().sum();
        debug_assert!(
            next_inertia <= inertia * (1.0 + 1e-12) + 1e-9,
            "inertia rose from {inertia} to {next_inertia}"
        );
        let changed = next != assignments;
        assignments = next;
        dist = next_dist;
        inertia = next_inertia;
        if !changed {
            break;
        }
    }
    Clustering {
        centroids,
        assignments,
        inertia,
        iterations,
        restart,
    }
}
