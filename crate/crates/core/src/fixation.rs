//! Dispersion-threshold (I-DT) fixation detection over raw gaze streams.

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::model::{ScreenSpec, TimeRange};

/// A timestamped screen position. `t` is milliseconds since session start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

/// Pointer samples share the gaze sample layout.
pub type MouseSample = GazeSample;

impl GazeSample {
    pub const fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, x, y }
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixationParams {
    /// Maximum bounding-box dispersion (width + height) in pixels.
    pub dispersion_px: f64,
    /// Minimum fixation duration in milliseconds.
    pub min_duration_ms: f64,
}

impl Default for FixationParams {
    fn default() -> Self {
        Self {
            dispersion_px: 60.0,
            min_duration_ms: 200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FixationError {
    #[error("fixation parameters must be finite and positive (dispersion {dispersion_px} px, minimum {min_duration_ms} ms)")]
    InvalidParams {
        dispersion_px: f64,
        min_duration_ms: f64,
    },
    #[error("gaze samples are not time-ordered at index {index}")]
    Unordered { index: usize },
}

/// A detected interval of stable gaze.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub onset_ms: f64,
    pub duration_ms: f64,
    pub centroid: Point,
    pub sample_count: usize,
}

impl Fixation {
    pub fn end_ms(&self) -> f64 {
        self.onset_ms + self.duration_ms
    }

    fn from_window(window: &[GazeSample]) -> Self {
        let n = window.len() as f64;
        let (sx, sy) = window
            .iter()
            .fold((0.0, 0.0), |(sx, sy), s| (sx + s.x, sy + s.y));
        let first = window[0].t;
        let last = window[window.len() - 1].t;
        Self {
            onset_ms: first,
            duration_ms: last - first,
            centroid: Point::new(sx / n, sy / n),
            sample_count: window.len(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Extent {
    min_x: f64,
    max_x: f64,
    min_y: f64,
    max_y: f64,
}

impl Extent {
    fn of(window: &[GazeSample]) -> Self {
        let first = Self::point(&window[0]);
        window[1..].iter().fold(first, |e, s| e.with(s))
    }

    fn point(s: &GazeSample) -> Self {
        Self {
            min_x: s.x,
            max_x: s.x,
            min_y: s.y,
            max_y: s.y,
        }
    }

    fn with(self, s: &GazeSample) -> Self {
        Self {
            min_x: self.min_x.min(s.x),
            max_x: self.max_x.max(s.x),
            min_y: self.min_y.min(s.y),
            max_y: self.max_y.max(s.y),
        }
    }

    fn dispersion(&self) -> f64 {
        (self.max_x - self.min_x) + (self.max_y - self.min_y)
    }
}

/// Detects fixations with the dispersion-threshold algorithm.
///
/// A window is opened at the earliest unconsumed sample and sized to the
/// minimum duration. If its dispersion is within the threshold it is grown
/// sample by sample while it stays within the threshold, emitted, and
/// consumed; otherwise the window start advances by one sample. Fixations
/// are reported with their natural duration (`last.t - first.t`), so the
/// output is time-ordered and non-overlapping.
pub fn detect_fixations(
    samples: &[GazeSample],
    params: &FixationParams,
) -> Result<Vec<Fixation>, FixationError> {
    let valid = |v: f64| v.is_finite() && v > 0.0;
    if !valid(params.dispersion_px) || !valid(params.min_duration_ms) {
        return Err(FixationError::InvalidParams {
            dispersion_px: params.dispersion_px,
            min_duration_ms: params.min_duration_ms,
        });
    }
    if let Some(index) = samples.windows(2).position(|w| w[1].t < w[0].t) {
        return Err(FixationError::Unordered { index: index + 1 });
    }

    let n = samples.len();
    let mut fixations = Vec::new();
    let mut start = 0;
    // First index whose timestamp covers the minimum duration from `start`;
    // monotone in `start`, so it only ever moves forward.
    let mut cover = 0;
    while start < n {
        cover = cover.max(start);
        while cover < n && samples[cover].t - samples[start].t < params.min_duration_ms {
            cover += 1;
        }
        if cover == n {
            break;
        }
        let mut end = cover;
        let mut extent = Extent::of(&samples[start..=end]);
        if extent.dispersion() > params.dispersion_px {
            start += 1;
            continue;
        }
        while end + 1 < n {
            let grown = extent.with(&samples[end + 1]);
            if grown.dispersion() > params.dispersion_px {
                break;
            }
            extent = grown;
            end += 1;
        }
        fixations.push(Fixation::from_window(&samples[start..=end]));
        start = end + 1;
    }
    Ok(fixations)
}

/// Number of fixations whose onset lies inside `task` (both ends inclusive).
pub fn anf(fixations: &[Fixation], task: TimeRange) -> f64 {
    fixations
        .iter()
        .filter(|f| task.contains(f.onset_ms))
        .count() as f64
}

/// Clamps samples into the screen rectangle; returns the clamped stream and
/// how many samples were moved.
pub fn clamp_to_screen(samples: &[GazeSample], screen: &ScreenSpec) -> (Vec<GazeSample>, usize) {
    let mut clamped = 0;
    let out = samples
        .iter()
        .map(|s| {
            let x = s.x.clamp(0.0, screen.width);
            let y = s.y.clamp(0.0, screen.height);
            if x != s.x || y != s.y {
                clamped += 1;
            }
            GazeSample::new(s.t, x, y)
        })
        .collect();
    (out, clamped)
}
