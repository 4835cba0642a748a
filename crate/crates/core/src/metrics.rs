//! Per-session behavioral metrics and the eye-strain inputs derived from them.

use serde::{Deserialize, Serialize};

use crate::fixation::{self, clamp_to_screen, detect_fixations, FixationError, FixationParams, MouseSample};
use crate::model::{self, espim, fqls, EspimInputs, EspimScore, ModelError, Stimulus, TimeRange};
use crate::session::SessionLog;

/// Pointer displacements at or below this length are jitter, not movement.
pub const DEFAULT_MOUSE_EPSILON_PX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("at least two trials are needed to measure target distance")]
    SingleTrial,
    #[error(transparent)]
    Fixation(#[from] FixationError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub session_id: String,
    pub espim: EspimScore,
    /// Fixations with onset inside the task interval.
    pub anf: f64,
    /// Task duration in seconds.
    pub td: f64,
    pub errors: u64,
    pub mouse_moves: u64,
    /// Mean fixation drift from the active target center, in pixels.
    pub fqls: f64,
    /// Mean Shannon index of difficulty over target transitions, in bits.
    pub mean_id: f64,
    /// Mean movement time (appearance to selection) in milliseconds.
    pub mean_mt_ms: f64,
    pub d: f64,
    pub w: f64,
    pub aot: f64,
    pub aos: f64,
    /// Fixations detected over the whole gaze stream.
    pub fixations: usize,
    /// Fixations that overlapped no target presentation.
    pub fqls_skipped: usize,
    /// Gaze samples that fell outside the screen and were clamped.
    pub clamped_gaze: usize,
}

/// Counts consecutive-sample displacements longer than `epsilon_px`.
pub fn mouse_movement_count(trail: &[MouseSample], epsilon_px: f64) -> u64 {
    trail
        .windows(2)
        .filter(|w| w[0].point().distance(w[1].point()) > epsilon_px)
        .count() as u64
}

/// Total stray clicks over all trials.
pub fn extract_errors(session: &SessionLog) -> u64 {
    session.trials.iter().map(|t| u64::from(t.error_clicks)).sum()
}

/// Task interval from the first target appearance to the last selection.
pub fn task_interval(session: &SessionLog) -> Option<TimeRange> {
    let first = session.trials.first()?;
    let last = session.trials.last()?;
    Some(TimeRange::new(first.appear_t, last.select_t))
}

/// `(index of difficulty, movement time)` for every transition between
/// consecutive targets with a non-zero distance.
pub fn fitts_points(session: &SessionLog) -> Vec<(f64, f64)> {
    session
        .trials
        .windows(2)
        .filter_map(|pair| {
            let d = pair[0].target.center().distance(pair[1].target.center());
            let id = model::shannon_id(d, pair[1].target.w).ok()?;
            Some((id, pair[1].select_t - pair[1].appear_t))
        })
        .collect()
}

pub fn session_metrics(
    session: &SessionLog,
    params: &FixationParams,
) -> Result<SessionMetrics, MetricsError> {
    let trials = &session.trials;
    if trials.len() < 2 {
        return Err(MetricsError::SingleTrial);
    }
    let n = trials.len() as f64;
    let transitions = (trials.len() - 1) as f64;

    let distances: Vec<f64> = trials
        .windows(2)
        .map(|p| p[0].target.center().distance(p[1].target.center()))
        .collect();
    let d = distances.iter().sum::<f64>() / transitions;
    let w = trials.iter().map(|t| t.target.w).sum::<f64>() / n;
    let aot = trials.iter().map(|t| t.target.area()).sum::<f64>() / n;
    let mean_id = distances
        .iter()
        .zip(&trials[1..])
        .map(|(&dist, t)| if dist > 0.0 { model::shannon_id(dist, t.target.w) } else { Ok(0.0) })
        .sum::<Result<f64, _>>()?
        / transitions;
    let mean_mt_ms = trials.iter().map(|t| t.select_t - t.appear_t).sum::<f64>() / n;

    let task = task_interval(session).expect("trials checked non-empty");
    let td = (task.end_ms - task.start_ms) / 1000.0;

    let (gaze, clamped_gaze) = clamp_to_screen(&session.gaze, &session.screen);
    let fixations = detect_fixations(&gaze, params)?;
    let anf = fixation::anf(&fixations, task);

    let stimuli: Vec<Stimulus> = trials
        .iter()
        .map(|t| Stimulus {
            target: t.target,
            active: TimeRange::new(t.appear_t, t.select_t),
        })
        .collect();
    let drift = fqls(&fixations, &stimuli)?;

    let inputs = EspimInputs {
        screen: session.screen,
        aot,
        d,
        w,
        anf,
        td,
    };
    let score = espim(&inputs)?;

    Ok(SessionMetrics {
        session_id: session.session_id.clone(),
        espim: score,
        anf,
        td,
        errors: extract_errors(session),
        mouse_moves: mouse_movement_count(&session.mouse, DEFAULT_MOUSE_EPSILON_PX),
        fqls: drift.mean_px,
        mean_id,
        mean_mt_ms,
        d,
        w,
        aot,
        aos: session.screen.area(),
        fixations: fixations.len(),
        fqls_skipped: drift.skipped,
        clamped_gaze,
    })
}
