use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans, nearest, Clustering};
use super::SpatialError;
use crate::geometry::Point;
use crate::model::ScreenSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Target,
    Fixation,
    Click,
    Error,
}

impl PointKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PointKind::Target => "target",
            PointKind::Fixation => "fixation",
            PointKind::Click => "click",
            PointKind::Error => "error",
        }
    }
}

/// Locations grouped by kind; the input to both region analyses.
#[derive(Debug, Clone, Copy, Default)]
pub struct RegionInputs<'a> {
    pub targets: &'a [Point],
    pub fixations: &'a [Point],
    pub clicks: &'a [Point],
    pub errors: &'a [Point],
}

impl<'a> RegionInputs<'a> {
    fn by_kind(&self) -> [(PointKind, &'a [Point]); 4] {
        [
            (PointKind::Target, self.targets),
            (PointKind::Fixation, self.fixations),
            (PointKind::Click, self.clicks),
            (PointKind::Error, self.errors),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub label: String,
    /// Reference point distances are measured from.
    pub center: Point,
    pub targets: usize,
    pub fixations: usize,
    pub clicks: usize,
    pub errors: usize,
    /// `None` when the region holds no point of that kind.
    pub mean_fixation_distance: Option<f64>,
    pub mean_click_distance: Option<f64>,
    pub mean_error_distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub x: f64,
    pub y: f64,
    pub kind: PointKind,
    pub region: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSummary {
    pub regions: Vec<Region>,
    pub scatter: Vec<ScatterPoint>,
    /// Present for cluster-based summaries, relabeled to match `regions`.
    pub clustering: Option<Clustering>,
}

impl RegionSummary {
    pub fn total_errors(&self) -> usize {
        self.regions.iter().map(|r| r.errors).sum()
    }
}

#[derive(Default)]
struct Acc {
    count: usize,
    sum: f64,
}

impl Acc {
    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

fn summarize(
    labels: Vec<String>,
    centers: Vec<Point>,
    inputs: &RegionInputs,
    region_of: impl Fn(Point) -> usize,
) -> (Vec<Region>, Vec<ScatterPoint>) {
    let k = centers.len();
    let mut acc: Vec<[Acc; 4]> = (0..k).map(|_| Default::default()).collect();
    let mut scatter = Vec::new();
    for (kind, points) in inputs.by_kind() {
        for &p in points {
            let r = region_of(p);
            let slot = &mut acc[r][kind as usize];
            slot.count += 1;
            slot.sum += p.distance(centers[r]);
            scatter.push(ScatterPoint {
                x: p.x,
                y: p.y,
                kind,
                region: labels[r].clone(),
            });
        }
    }
    let regions = labels
        .into_iter()
        .zip(centers)
        .zip(acc)
        .map(|((label, center), a)| Region {
            label,
            center,
            targets: a[PointKind::Target as usize].count,
            fixations: a[PointKind::Fixation as usize].count,
            clicks: a[PointKind::Click as usize].count,
            errors: a[PointKind::Error as usize].count,
            mean_fixation_distance: a[PointKind::Fixation as usize].mean(),
            mean_click_distance: a[PointKind::Click as usize].mean(),
            mean_error_distance: a[PointKind::Error as usize].mean(),
        })
        .collect();
    (regions, scatter)
}

fn check_finite(inputs: &RegionInputs) -> Result<(), SpatialError> {
    for (_, points) in inputs.by_kind() {
        if let Some(index) = points.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(SpatialError::NonFinite { index });
        }
    }
    Ok(())
}

/// Clusters target centers and measures every other location against the
/// centroid of its nearest cluster. Regions are labelled `C1..Ck` in
/// (y, x) order of their centroids.
pub fn region_analysis(
    inputs: &RegionInputs,
    k: usize,
    seed: u64,
) -> Result<RegionSummary, SpatialError> {
    check_finite(inputs)?;
    let raw = kmeans(inputs.targets, k, seed)?;

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let (ca, cb) = (raw.centroids[a], raw.centroids[b]);
        ca.y.total_cmp(&cb.y).then(ca.x.total_cmp(&cb.x))
    });
    let mut rank = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let clustering = Clustering {
        centroids: order.iter().map(|&i| raw.centroids[i]).collect(),
        assignments: raw.assignments.iter().map(|&a| rank[a]).collect(),
        ..raw
    };

    let labels = (1..=k).map(|i| format!("C{i}")).collect();
    let centroids = clustering.centroids.clone();
    let (regions, scatter) = summarize(labels, centroids.clone(), inputs, |p| {
        nearest(p, &centroids).0
    });
    Ok(RegionSummary {
        regions,
        scatter,
        clustering: Some(clustering),
    })
}

/// Splits the screen into four equal quadrants: Q1 upper-left, Q2
/// upper-right, Q3 lower-left, Q4 lower-right. Distances are measured from
/// the mean target position in each quadrant, or from the quadrant center
/// when it holds no target.
pub fn quadrant_analysis(
    screen: &ScreenSpec,
    inputs: &RegionInputs,
) -> Result<RegionSummary, SpatialError> {
    check_finite(inputs)?;
    let (hx, hy) = (screen.width / 2.0, screen.height / 2.0);
    let quadrant = |p: Point| usize::from(p.x >= hx) + 2 * usize::from(p.y >= hy);

    let mut sums = [(0.0, 0.0, 0usize); 4];
    for &t in inputs.targets {
        let q = quadrant(t);
        sums[q].0 += t.x;
        sums[q].1 += t.y;
        sums[q].2 += 1;
    }
    let centers = sums
        .iter()
        .enumerate()
        .map(|(q, &(sx, sy, n))| {
            if n > 0 {
                Point::new(sx / n as f64, sy / n as f64)
            } else {
                let col = (q % 2) as f64;
                let row = (q / 2) as f64;
                Point::new(hx * (col + 0.5), hy * (row + 0.5))
            }
        })
        .collect();
    let labels = (1..=4).map(|i| format!("Q{i}")).collect();
    let (regions, scatter) = summarize(labels, centers, inputs, quadrant);
    Ok(RegionSummary {
        regions,
        scatter,
        clustering: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub distances: Vec<f64>,
    pub mean: f64,
}

/// Straight-line distance from each point to its paired center.
pub fn euclidean_drift(points: &[Point], centers: &[Point]) -> Result<Drift, SpatialError> {
    if points.len() != centers.len() {
        return Err(SpatialError::LengthMismatch {
            left: points.len(),
            right: centers.len(),
        });
    }
    if points.is_empty() {
        return Err(SpatialError::Empty);
    }
    let distances: Vec<f64> = points
        .iter()
        .zip(centers)
        .map(|(p, c)| p.distance(*c))
        .collect();
    let mean = distances.iter().sum::<f64>() / distances.len() as f64;
    Ok(Drift { distances, mean })
}
