//! Closed-form eye-strain model and the Fitts' Law quantities it builds on.
//!
//! The score combines the screen-to-target area ratio, the Shannon index of
//! difficulty, the fixation count of a task and the task duration:
//!
//! ```text
//! espim = sqrt(((aos / aot) * log2(1 + d / w) * anf + 1) / (td + 1))
//! ```
//!
//! The unit is nominal ("bits"); scores are only meaningful relative to each
//! other.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::fixation::Fixation;
use crate::geometry::Point;

/// Shortest fixation duration of the typical range, in seconds.
pub const FIXATION_MIN_S: f64 = 0.2;
/// Longest fixation duration of the typical range, in seconds.
pub const FIXATION_MAX_S: f64 = 0.6;
/// Point estimate used for the middle of the fixation-duration range.
pub const FIXATION_MID_S: f64 = 0.4;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("`{field}` is out of domain: {reason}")]
    Domain { field: &'static str, reason: String },
    #[error("degenerate regression: at least two distinct index-of-difficulty values are required")]
    DegenerateRegression,
    #[error("no fixation overlaps an active stimulus")]
    EmptyInput,
}

fn domain(field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::Domain {
        field,
        reason: reason.into(),
    }
}

fn require_positive(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(domain(field, format!("must be finite and > 0, got {value}")))
    }
}

/// Display area in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreenSpec {
    pub width: f64,
    pub height: f64,
}

impl ScreenSpec {
    pub fn new(width: f64, height: f64) -> Result<Self, ModelError> {
        require_positive("screen.width", width)?;
        require_positive("screen.height", height)?;
        Ok(Self { width, height })
    }

    /// Diagonal length in pixels.
    pub fn diagonal(&self) -> f64 {
        self.width.hypot(self.height)
    }

    /// Surface area in square pixels.
    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetShape {
    Circle,
    Rectangle,
}

/// A selectable element. `w` is the width (diameter for circles); `h` is only
/// meaningful for rectangles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub shape: TargetShape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

impl TargetSpec {
    pub fn circle(cx: f64, cy: f64, diameter: f64) -> Self {
        Self {
            cx,
            cy,
            w: diameter,
            shape: TargetShape::Circle,
            h: None,
        }
    }

    pub fn rectangle(cx: f64, cy: f64, w: f64, h: f64) -> Self {
        Self {
            cx,
            cy,
            w,
            shape: TargetShape::Rectangle,
            h: Some(h),
        }
    }

    pub fn center(&self) -> Point {
        Point::new(self.cx, self.cy)
    }

    /// Height used for area and hit testing. Circles report their diameter.
    pub fn height(&self) -> f64 {
        match self.shape {
            TargetShape::Circle => self.w,
            TargetShape::Rectangle => self.h.unwrap_or(f64::NAN),
        }
    }

    /// Surface area in square pixels.
    pub fn area(&self) -> f64 {
        match self.shape {
            TargetShape::Circle => PI * (self.w / 2.0).powi(2),
            TargetShape::Rectangle => self.w * self.height(),
        }
    }

    /// Whether `p` lies inside the target (boundary inclusive).
    pub fn contains(&self, p: Point) -> bool {
        let dx = p.x - self.cx;
        let dy = p.y - self.cy;
        match self.shape {
            TargetShape::Circle => dx.hypot(dy) <= self.w / 2.0,
            TargetShape::Rectangle => {
                dx.abs() <= self.w / 2.0 && dy.abs() <= self.height() / 2.0
            }
        }
    }

    /// Checks the geometric invariants against the owning screen.
    pub fn validate(&self, screen: &ScreenSpec) -> Result<(), ModelError> {
        require_positive("target.w", self.w)?;
        if self.w > screen.width {
            return Err(domain("target.w", "wider than the screen"));
        }
        match (self.shape, self.h) {
            (TargetShape::Rectangle, Some(h)) => require_positive("target.h", h)?,
            (TargetShape::Rectangle, None) => {
                return Err(domain("target.h", "rectangles need a height"))
            }
            (TargetShape::Circle, Some(_)) => {
                return Err(domain("target.h", "circles are sized by `w` only"))
            }
            (TargetShape::Circle, None) => {}
        }
        if self.area() > screen.area() {
            return Err(domain("target.aot", "target area exceeds screen area"));
        }
        Ok(())
    }
}

/// The parameters of the eye-strain score.
///
/// `aot`, `d` and `w` are averages when a task mixes target sizes or
/// distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EspimInputs {
    pub screen: ScreenSpec,
    /// Mean target area in square pixels.
    pub aot: f64,
    /// Center-to-center target distance in pixels.
    pub d: f64,
    /// Target width in pixels.
    pub w: f64,
    /// Fixation count over the task.
    pub anf: f64,
    /// Task duration in seconds.
    pub td: f64,
}

impl EspimInputs {
    pub fn aos(&self) -> f64 {
        self.screen.area()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        require_positive("x", self.screen.width)?;
        require_positive("y", self.screen.height)?;
        require_positive("aot", self.aot)?;
        require_positive("d", self.d)?;
        require_positive("w", self.w)?;
        require_positive("anf", self.anf)?;
        require_positive("td", self.td)?;
        if self.aot > self.aos() {
            return Err(domain("aot", format!("{} exceeds screen area {}", self.aot, self.aos())));
        }
        if self.d > self.screen.diagonal() {
            return Err(domain(
                "d",
                format!("{} exceeds screen diagonal {}", self.d, self.screen.diagonal()),
            ));
        }
        if self.w > self.screen.width {
            return Err(domain(
                "w",
                format!("{} exceeds screen width {}", self.w, self.screen.width),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EspimScore(f64);

impl EspimScore {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Shannon formulation of the index of difficulty, `log2(1 + d/w)`, in bits.
pub fn shannon_id(d: f64, w: f64) -> Result<f64, ModelError> {
    require_positive("d", d)?;
    require_positive("w", w)?;
    Ok(shannon_id_unchecked(d, w))
}

#[inline]
fn shannon_id_unchecked(d: f64, w: f64) -> f64 {
    // ln_1p keeps full relative precision when d is small next to w.
    (d / w).ln_1p() / LN_2
}

/// Linear Fitts' Law model `mt = a + b * id`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittsFit {
    /// Intercept in milliseconds.
    pub a: f64,
    /// Slope in milliseconds per bit.
    pub b: f64,
    pub r_squared: f64,
}

/// Predicted movement time in milliseconds.
pub fn fitts_mt(fit: &FittsFit, id: f64) -> f64 {
    fit.a + fit.b * id
}

/// Ordinary least-squares fit of movement time against index of difficulty.
pub fn fit_fitts(trials: &[(f64, f64)]) -> Result<FittsFit, ModelError> {
    if trials.len() < 2 {
        return Err(ModelError::DegenerateRegression);
    }
    let n = trials.len() as f64;
    let mean_id = trials.iter().map(|t| t.0).sum::<f64>() / n;
    let mean_mt = trials.iter().map(|t| t.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(id, mt) in trials {
        let dx = id - mean_id;
        let dy = mt - mean_mt;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 || !sxx.is_finite() {
        return Err(ModelError::DegenerateRegression);
    }
    let b = sxy / sxx;
    let a = mean_mt - b * mean_id;
    let ss_res: f64 = trials
        .iter()
        .map(|&(id, mt)| (mt - (a + b * id)).powi(2))
        .sum();
    // A flat response is fit perfectly by a flat line.
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(FittsFit { a, b, r_squared })
}

/// Eye-strain score for a task.
pub fn espim(inputs: &EspimInputs) -> Result<EspimScore, ModelError> {
    inputs.validate()?;
    let spatial = (inputs.aos() / inputs.aot) * shannon_id_unchecked(inputs.d, inputs.w);
    let value = ((spatial * inputs.anf + 1.0) / (inputs.td + 1.0)).sqrt();
    Ok(EspimScore(value))
}

/// Fixation-count range implied by the typical 200-600 ms fixation duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnfInterval {
    pub low: f64,
    pub mid: f64,
    pub high: f64,
}

/// Estimates the fixation count of a task of `td` seconds without a tracker.
pub fn estimate_anf(td: f64) -> Result<AnfInterval, ModelError> {
    require_positive("td", td)?;
    Ok(AnfInterval {
        low: td / FIXATION_MAX_S,
        mid: td / FIXATION_MID_S,
        high: td / FIXATION_MIN_S,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EspimEstimate {
    pub anf: AnfInterval,
    pub low: EspimScore,
    pub mid: EspimScore,
    pub high: EspimScore,
}

/// Scores a design with the fixation count estimated from `td`. The `anf`
/// and `td` fields of `inputs` are ignored.
pub fn espim_estimated(inputs: &EspimInputs, td: f64) -> Result<EspimEstimate, ModelError> {
    let anf = estimate_anf(td)?;
    let at = |count: f64| {
        espim(&EspimInputs {
            anf: count,
            td,
            ..*inputs
        })
    };
    Ok(EspimEstimate {
        anf,
        low: at(anf.low)?,
        mid: at(anf.mid)?,
        high: at(anf.high)?,
    })
}

/// Closed time span in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeRange {
    pub start_ms: f64,
    pub end_ms: f64,
}

impl TimeRange {
    pub fn new(start_ms: f64, end_ms: f64) -> Self {
        Self { start_ms, end_ms }
    }

    pub fn contains(&self, t: f64) -> bool {
        self.start_ms <= t && t <= self.end_ms
    }

    pub fn overlaps(&self, start: f64, end: f64) -> bool {
        self.start_ms <= end && start <= self.end_ms
    }
}

/// A target together with the interval during which it was on screen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stimulus {
    pub target: TargetSpec,
    pub active: TimeRange,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FqlsResult {
    /// Mean fixation drift in pixels.
    pub mean_px: f64,
    pub qualifying: usize,
    /// Fixations that overlapped no stimulus.
    pub skipped: usize,
}

/// Fixation qualitative score: mean distance between each fixation centroid
/// and the center of the stimulus it was directed at.
///
/// A fixation is matched to the stimulus active at its onset, or failing
/// that to the first stimulus whose active interval it overlaps.
pub fn fqls(fixations: &[Fixation], stimuli: &[Stimulus]) -> Result<FqlsResult, ModelError> {
    let mut total = 0.0;
    let mut qualifying = 0usize;
    let mut skipped = 0usize;
    for fixation in fixations {
        let end = fixation.onset_ms + fixation.duration_ms;
        let matched = stimuli
            .iter()
            .find(|s| s.active.contains(fixation.onset_ms))
            .or_else(|| {
                stimuli
                    .iter()
                    .find(|s| s.active.overlaps(fixation.onset_ms, end))
            });
        match matched {
            Some(stimulus) => {
                total += fixation.centroid.distance(stimulus.target.center());
                qualifying += 1;
            }
            None => skipped += 1,
        }
    }
    if qualifying == 0 {
        return Err(ModelError::EmptyInput);
    }
    Ok(FqlsResult {
        mean_px: total / qualifying as f64,
        qualifying,
        skipped,
    })
}
