//! Multi-session analysis: per-session metrics, group comparisons,
//! correlations, resolution tables, symptom tallies and region summaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, FixedOffset};
use espim_core::fixation::{clamp_to_screen, detect_fixations, FixationParams};
use espim_core::geometry::Point;
use espim_core::metrics::{fitts_points, session_metrics, SessionMetrics, DEFAULT_MOUSE_EPSILON_PX};
use espim_core::model::{fit_fitts, FittsFit};
use espim_core::session::{parse_session, read_gaze_csv, SessionLog, Symptom, Violation};
use espim_core::spatial::{euclidean_drift, quadrant_analysis, region_analysis, RegionInputs, RegionSummary};
use espim_core::stats::{
    descriptives, paired_by_key, paired_t_test, pearson, resolution_diff, split_by_schedule,
    split_by_threshold, symptom_tally, CorrelationResult, Descriptives, PairedTTestResult,
    Resolution, ResolutionDiffTable, Schedule, SymptomTally,
};
use espim_core::model::ScreenSpec;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{csv_bytes, expand_inputs, sha256_hex, write_atomic};
use crate::{Failure, TOOL_NAME, TOOL_VERSION};

/// Gameplay ratings at or above this are "high".
pub const GAMEPLAY_THRESHOLD: f64 = 2.5;

#[derive(Debug, Clone)]
pub struct AnalyzeOptions {
    pub fixation: FixationParams,
    pub seed: u64,
    pub k: usize,
    pub skip_invalid: bool,
    /// Gaze CSV replacing the embedded gaze stream, by session id.
    pub gaze_csv: BTreeMap<String, PathBuf>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        Self {
            fixation: FixationParams::default(),
            seed: crate::DEFAULT_SEED,
            k: 4,
            skip_invalid: false,
            gaze_csv: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportParams {
    pub dispersion_px: f64,
    pub min_fixation_ms: f64,
    pub mouse_epsilon_px: f64,
    pub k: usize,
    pub gameplay_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputStatus {
    Ok,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub path: String,
    pub sha256: String,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub status: InputStatus,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub problems: Vec<Violation>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionRow {
    pub session_id: String,
    pub participant_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_key: Option<String>,
    pub started_at: DateTime<FixedOffset>,
    pub schedule: Schedule,
    pub resolution: String,
    pub gameplay_rating: Option<u8>,
    pub gameplay_group: Option<&'static str>,
    pub display_hours: f64,
    pub strain_rating: u8,
    pub symptoms: Vec<Symptom>,
    /// Mean distance from selection clicks to target centers.
    pub click_drift_px: f64,
    pub metrics: SessionMetrics,
}

#[derive(Debug, Clone, Serialize)]
pub struct DescriptiveRow {
    pub measure: &'static str,
    pub group: &'static str,
    pub stats: Descriptives,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub grouping: &'static str,
    pub measure: &'static str,
    pub left: &'static str,
    pub right: &'static str,
    pub paired_on: &'static str,
    pub pairs: usize,
    pub left_mean: Option<f64>,
    pub right_mean: Option<f64>,
    pub result: Option<PairedTTestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Correlation {
    pub x: &'static str,
    pub y: &'static str,
    pub n: usize,
    pub result: Option<CorrelationResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolutionSeries {
    pub group: &'static str,
    pub table: Option<ResolutionDiffTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Regions {
    pub seed: u64,
    /// k-means regions over target centers.
    pub clusters: Option<RegionSummary>,
    /// Screen quadrants over the largest screen in the input.
    pub quadrants: RegionSummary,
    pub quadrant_screen: ScreenSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub tool: ToolInfo,
    pub seed: u64,
    pub params: ReportParams,
    pub inputs: Vec<InputRecord>,
    pub sessions: Vec<SessionRow>,
    pub fitts: Option<FittsFit>,
    pub descriptives: Vec<DescriptiveRow>,
    pub comparisons: Vec<Comparison>,
    pub correlations: Vec<Correlation>,
    pub symptoms: Option<SymptomTally>,
    pub resolution_diff: Vec<ResolutionSeries>,
    pub regions: Option<Regions>,
    pub warnings: Vec<String>,
}

type Measure = (&'static str, fn(&SessionRow) -> f64);

const MEASURES: [Measure; 8] = [
    ("espim", |r| r.metrics.espim.value()),
    ("errors", |r| r.metrics.errors as f64),
    ("mouse_moves", |r| r.metrics.mouse_moves as f64),
    ("anf", |r| r.metrics.anf),
    ("fqls", |r| r.metrics.fqls),
    ("td", |r| r.metrics.td),
    ("strain_rating", |r| f64::from(r.strain_rating)),
    ("display_hours", |r| r.display_hours),
];

const DESCRIBED: [&str; 4] = ["mouse_moves", "strain_rating", "espim", "errors"];

fn measure(name: &str) -> fn(&SessionRow) -> f64 {
    MEASURES.iter().find(|m| m.0 == name).expect("known measure").1
}

/// Sessions that passed validation, with their input records.
pub struct Loaded {
    pub sessions: Vec<SessionLog>,
    pub inputs: Vec<InputRecord>,
    pub warnings: Vec<String>,
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn describe(violations: &[Violation]) -> String {
    violations.iter().map(|v| format!("\n  {v}")).collect()
}

/// Reads, parses and validates every input, applying gaze CSV overrides.
pub fn load_sessions(paths: &[PathBuf], opts: &AnalyzeOptions) -> Result<Loaded, Failure> {
    let files = expand_inputs(paths).map_err(|e| Failure::io(format!("cannot list inputs: {e}")))?;
    if files.is_empty() {
        return Err(Failure::usage("no session files given"));
    }
    let mut sessions = Vec::new();
    let mut inputs = Vec::new();
    let mut warnings = Vec::new();
    let mut used_csv = BTreeSet::new();
    let mut ids = BTreeSet::new();

    for path in &files {
        let bytes = fs::read(path).map_err(|e| Failure::io(format!("{}: {e}", display(path))))?;
        let mut record = InputRecord {
            path: display(path),
            sha256: sha256_hex(&bytes),
            kind: "session",
            session_id: None,
            status: InputStatus::Ok,
            problems: Vec::new(),
        };
        let parsed = parse_session(&bytes);
        let mut session = match parsed {
            Ok(s) => s,
            Err(err) => {
                if !opts.skip_invalid {
                    let msg = format!("{}: invalid session{}", display(path), describe(&err.violations()));
                    return Err(if err.is_truncated() { Failure::io(msg) } else { Failure::invalid(msg) });
                }
                record.status = InputStatus::Skipped;
                record.problems = err.violations();
                warnings.push(format!("skipped {}: {}", record.path, err));
                inputs.push(record);
                continue;
            }
        };
        record.session_id = Some(session.session_id.clone());

        if let Some(csv_path) = opts.gaze_csv.get(&session.session_id) {
            used_csv.insert(session.session_id.clone());
            let csv = fs::read(csv_path).map_err(|e| Failure::io(format!("{}: {e}", display(csv_path))))?;
            let gaze = read_gaze_csv(csv.as_slice())
                .map_err(|e| Failure::invalid(format!("{}: {e}", display(csv_path))))?;
            inputs.push(InputRecord {
                path: display(csv_path),
                sha256: sha256_hex(&csv),
                kind: "gaze_csv",
                session_id: Some(session.session_id.clone()),
                status: InputStatus::Ok,
                problems: Vec::new(),
            });
            session.gaze = gaze;
            let violations = session.validate();
            if !violations.is_empty() {
                if !opts.skip_invalid {
                    return Err(Failure::invalid(format!(
                        "{}: gaze from {} is inconsistent with the session{}",
                        record.path,
                        display(csv_path),
                        describe(&violations)
                    )));
                }
                record.status = InputStatus::Skipped;
                record.problems = violations;
                warnings.push(format!("skipped {}: gaze CSV violates the session bounds", record.path));
                inputs.push(record);
                continue;
            }
        }

        if !ids.insert(session.session_id.clone()) {
            return Err(Failure::invalid(format!(
                "{}: duplicate session id `{}`",
                record.path, session.session_id
            )));
        }
        inputs.push(record);
        sessions.push(session);
    }
    if let Some(unused) = opts.gaze_csv.keys().find(|k| !used_csv.contains(*k)) {
        return Err(Failure::usage(format!("--gaze-csv names unknown session `{unused}`")));
    }
    sessions.sort_by(|a, b| a.session_id.cmp(&b.session_id));
    Ok(Loaded { sessions, inputs, warnings })
}

fn resolution_of(screen: &ScreenSpec) -> Resolution {
    Resolution::new(screen.width.round() as u32, screen.height.round() as u32)
}

fn row(session: &SessionLog, metrics: SessionMetrics) -> SessionRow {
    let centers: Vec<Point> = session.trials.iter().map(|t| t.target.center()).collect();
    let clicks: Vec<Point> = session.trials.iter().map(|t| t.select_pos).collect();
    let click_drift_px = euclidean_drift(&clicks, &centers).map_or(0.0, |d| d.mean);
    let gameplay_group = session.participant.gameplay_rating.map(|r| {
        if f64::from(r) < GAMEPLAY_THRESHOLD {
            "low"
        } else {
            "high"
        }
    });
    SessionRow {
        session_id: session.session_id.clone(),
        participant_id: session.participant.id.clone(),
        pair_key: session.participant.pair_key.clone(),
        started_at: session.started_at,
        schedule: Schedule::of(&session.started_at),
        resolution: resolution_of(&session.screen).to_string(),
        gameplay_rating: session.participant.gameplay_rating,
        gameplay_group,
        display_hours: session.pre.display_hours,
        strain_rating: session.post.strain_rating,
        symptoms: session.post.symptoms.clone(),
        click_drift_px,
        metrics,
    }
}

fn compare(
    grouping: &'static str,
    labels: (&'static str, &'static str),
    paired_on: &'static str,
    left: &[&SessionRow],
    right: &[&SessionRow],
    key: impl Fn(&SessionRow) -> Option<String> + Copy,
) -> Vec<Comparison> {
    MEASURES
        .iter()
        .map(|&(name, value)| {
            let (keys, xs, ys) = paired_by_key(left, right, key, value);
            let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
            let (result, note) = if keys.len() < 2 {
                (None, Some(format!("needs at least 2 pairs on {paired_on}, found {}", keys.len())))
            } else {
                match paired_t_test(&xs, &ys) {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            };
            Comparison {
                grouping,
                measure: name,
                left: labels.0,
                right: labels.1,
                paired_on,
                pairs: keys.len(),
                left_mean: mean(&xs),
                right_mean: mean(&ys),
                result,
                note,
            }
        })
        .collect()
}

fn correlate(x: &'static str, y: &'static str, rows: &[&SessionRow]) -> Correlation {
    let xs: Vec<f64> = rows.iter().map(|r| measure_or_rating(x, r)).collect();
    let ys: Vec<f64> = rows.iter().map(|r| measure_or_rating(y, r)).collect();
    let (result, note) = match pearson(&xs, &ys) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Correlation { x, y, n: rows.len(), result, note }
}

fn measure_or_rating(name: &str, r: &SessionRow) -> f64 {
    match name {
        "gameplay_rating" => r.gameplay_rating.map_or(f64::NAN, f64::from),
        other => measure(other)(r),
    }
}

fn resolution_series(group: &'static str, rows: &[&SessionRow], sessions: &BTreeMap<&str, &SessionLog>) -> ResolutionSeries {
    let mut by_res: BTreeMap<(u64, Resolution), Vec<f64>> = BTreeMap::new();
    for r in rows {
        let res = resolution_of(&sessions[r.session_id.as_str()].screen);
        by_res.entry((res.pixels(), res)).or_default().push(r.metrics.espim.value());
    }
    let points: Vec<(Resolution, f64)> = by_res
        .into_iter()
        .map(|((_, res), v)| (res, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    match resolution_diff(&points) {
        Ok(table) => ResolutionSeries { group, table: Some(table), note: None },
        Err(e) => ResolutionSeries { group, table: None, note: Some(e.to_string()) },
    }
}

pub fn region_report(sessions: &[SessionLog], opts: &AnalyzeOptions, warnings: &mut Vec<String>) -> Result<Regions, Failure> {
    let mut targets = Vec::new();
    let mut fixations = Vec::new();
    let mut clicks = Vec::new();
    let mut errors = Vec::new();
    let (mut width, mut height) = (0.0f64, 0.0f64);
    for s in sessions {
        width = width.max(s.screen.width);
        height = height.max(s.screen.height);
        for t in &s.trials {
            targets.push(t.target.center());
            clicks.push(t.select_pos);
            errors.extend(t.stray_clicks.iter().map(|c| c.point()));
        }
        let (gaze, _) = clamp_to_screen(&s.gaze, &s.screen);
        let found = detect_fixations(&gaze, &opts.fixation)
            .map_err(|e| Failure::invalid(format!("{}: {e}", s.session_id)))?;
        fixations.extend(found.iter().map(|f| f.centroid));
    }
    let inputs = RegionInputs { targets: &targets, fixations: &fixations, clicks: &clicks, errors: &errors };
    let clusters = match region_analysis(&inputs, opts.k, opts.seed) {
        Ok(s) => Some(s),
        Err(e) => {
            warnings.push(format!("cluster regions omitted: {e}"));
            None
        }
    };
    let screen = ScreenSpec::new(width, height).map_err(|e| Failure::invalid(e.to_string()))?;
    let quadrants = quadrant_analysis(&screen, &inputs).map_err(|e| Failure::invalid(e.to_string()))?;
    Ok(Regions { seed: opts.seed, clusters, quadrants, quadrant_screen: screen })
}

/// Runs the full analysis over already-loaded sessions.
pub fn build_report(loaded: Loaded, opts: &AnalyzeOptions) -> Result<AnalysisReport, Failure> {
    let Loaded { sessions, mut inputs, mut warnings } = loaded;
    if opts.k == 0 {
        return Err(Failure::usage("--k must be at least 1"));
    }

    let computed: Vec<_> = sessions
        .par_iter()
        .map(|s| session_metrics(s, &opts.fixation))
        .collect();
    let mut kept = Vec::new();
    let mut rows = Vec::new();
    for (session, result) in sessions.into_iter().zip(computed) {
        match result {
            Ok(m) => {
                rows.push(row(&session, m));
                kept.push(session);
            }
            Err(e) => {
                if !opts.skip_invalid {
                    return Err(Failure::invalid(format!("{}: metrics unavailable: {e}", session.session_id)));
                }
                warnings.push(format!("skipped {}: metrics unavailable: {e}", session.session_id));
                for input in inputs.iter_mut().filter(|i| i.session_id.as_deref() == Some(&session.session_id)) {
                    input.status = InputStatus::Skipped;
                    input.problems.push(Violation { path: "$".into(), message: e.to_string() });
                }
            }
        }
    }
    if rows.is_empty() {
        return Err(Failure::invalid("no valid sessions to analyze"));
    }

    let all_points: Vec<(f64, f64)> = kept.iter().flat_map(fitts_points).collect();
    let fitts = match fit_fitts(&all_points) {
        Ok(f) => Some(f),
        Err(e) => {
            warnings.push(format!("Fitts fit omitted: {e}"));
            None
        }
    };

    let by_id: BTreeMap<&str, &SessionLog> = kept.iter().map(|s| (s.session_id.as_str(), s)).collect();
    let mut descriptive_rows = Vec::new();
    let mut comparisons = Vec::new();
    let mut correlations = Vec::new();
    let mut symptoms = None;
    let mut resolution = Vec::new();

    if rows.len() < 2 {
        warnings.push("group analyses omitted: they need at least two sessions".into());
        for name in DESCRIBED {
            let xs: Vec<f64> = rows.iter().map(measure(name)).collect();
            if let Ok(stats) = descriptives(&xs) {
                descriptive_rows.push(DescriptiveRow { measure: name, group: "all", stats });
            }
        }
    } else {
        let (office, flexible) =
            split_by_schedule(&rows, |r| Some(r.started_at)).expect("every row has a start time");
        let groups: [(&'static str, &[&SessionRow]); 3] = [
            ("all", &rows.iter().collect::<Vec<_>>()),
            ("nine_to_five", &office.members),
            ("flexible", &flexible.members),
        ];
        for name in DESCRIBED {
            for (group, members) in &groups {
                let xs: Vec<f64> = members.iter().map(|r| measure(name)(r)).collect();
                if let Ok(stats) = descriptives(&xs) {
                    descriptive_rows.push(DescriptiveRow { measure: name, group, stats });
                }
            }
        }

        comparisons.extend(compare(
            "schedule",
            ("nine_to_five", "flexible"),
            "participant.id",
            &office.members,
            &flexible.members,
            |r| Some(r.participant_id.clone()),
        ));
        let rated: Vec<&SessionRow> = rows.iter().filter(|r| r.gameplay_rating.is_some()).collect();
        if rated.len() < rows.len() {
            warnings.push(format!(
                "{} session(s) without a gameplay rating are left out of the gameplay split",
                rows.len() - rated.len()
            ));
        }
        let (low, high) = split_by_threshold(&rated, |r| r.gameplay_rating.map(f64::from), GAMEPLAY_THRESHOLD)
            .expect("filtered to rated sessions");
        let low: Vec<&SessionRow> = low.into_iter().copied().collect();
        let high: Vec<&SessionRow> = high.into_iter().copied().collect();
        comparisons.extend(compare(
            "gameplay",
            ("low", "high"),
            "participant.pair_key",
            &low,
            &high,
            |r| r.pair_key.clone(),
        ));

        let everyone: Vec<&SessionRow> = rows.iter().collect();
        correlations.push(correlate("espim", "errors", &everyone));
        correlations.push(correlate("espim", "mouse_moves", &everyone));
        correlations.push(correlate("gameplay_rating", "espim", &rated));

        let tally_input = |members: &[&SessionRow]| -> Vec<Vec<Symptom>> {
            members.iter().map(|r| r.symptoms.clone()).collect()
        };
        let office_symptoms = tally_input(&office.members);
        let flexible_symptoms = tally_input(&flexible.members);
        symptoms = Some(symptom_tally(&[
            ("nine_to_five", office_symptoms.iter().map(Vec::as_slice).collect()),
            ("flexible", flexible_symptoms.iter().map(Vec::as_slice).collect()),
        ]));

        resolution.push(resolution_series("nine_to_five", &office.members, &by_id));
        resolution.push(resolution_series("flexible", &flexible.members, &by_id));
    }

    let mut omitted: BTreeMap<(&str, &str), Vec<&str>> = BTreeMap::new();
    for c in &comparisons {
        if let Some(note) = &c.note {
            omitted.entry((c.grouping, note)).or_default().push(c.measure);
        }
    }
    for ((grouping, note), measures) in omitted {
        warnings.push(format!("{grouping} comparisons omitted for {}: {note}", measures.join(", ")));
    }
    for c in &correlations {
        if let Some(note) = &c.note {
            warnings.push(format!("correlation {}~{} omitted: {note}", c.x, c.y));
        }
    }
    for r in &resolution {
        if let Some(note) = &r.note {
            warnings.push(format!("{} resolution table omitted: {note}", r.group));
        }
    }

    let regions = Some(region_report(&kept, opts, &mut warnings)?);

    Ok(AnalysisReport {
        tool: ToolInfo { name: TOOL_NAME, version: TOOL_VERSION },
        seed: opts.seed,
        params: ReportParams {
            dispersion_px: opts.fixation.dispersion_px,
            min_fixation_ms: opts.fixation.min_duration_ms,
            mouse_epsilon_px: DEFAULT_MOUSE_EPSILON_PX,
            k: opts.k,
            gameplay_threshold: GAMEPLAY_THRESHOLD,
        },
        inputs,
        sessions: rows,
        fitts,
        descriptives: descriptive_rows,
        comparisons,
        correlations,
        symptoms,
        resolution_diff: resolution,
        regions,
        warnings,
    })
}

pub fn analyze(paths: &[PathBuf], opts: &AnalyzeOptions) -> Result<AnalysisReport, Failure> {
    build_report(load_sessions(paths, opts)?, opts)
}

#[derive(Serialize)]
struct MetricsCsvRow<'a> {
    session_id: &'a str,
    participant_id: &'a str,
    started_at: String,
    schedule: Schedule,
    resolution: &'a str,
    gameplay_rating: Option<u8>,
    display_hours: f64,
    strain_rating: u8,
    espim: f64,
    anf: f64,
    td_s: f64,
    errors: u64,
    mouse_moves: u64,
    fqls_px: f64,
    mean_id_bits: f64,
    mean_mt_ms: f64,
    d_px: f64,
    w_px: f64,
    aot_px2: f64,
    aos_px2: f64,
    fixations: usize,
    fqls_skipped: usize,
    clamped_gaze: usize,
    click_drift_px: f64,
}

pub const SESSION_METRICS_COLUMNS: [&str; 24] = [
    "session_id", "participant_id", "started_at", "schedule", "resolution", "gameplay_rating",
    "display_hours", "strain_rating", "espim", "anf", "td_s", "errors", "mouse_moves", "fqls_px",
    "mean_id_bits", "mean_mt_ms", "d_px", "w_px", "aot_px2", "aos_px2", "fixations",
    "fqls_skipped", "clamped_gaze", "click_drift_px",
];
pub const COMPARISON_COLUMNS: [&str; 11] =
    ["grouping", "measure", "left", "right", "pairs", "left_mean", "right_mean", "t", "df", "p", "note"];
pub const CORRELATION_COLUMNS: [&str; 6] = ["x", "y", "n", "r", "p", "note"];
pub const DESCRIPTIVE_COLUMNS: [&str; 12] =
    ["measure", "group", "n", "mean", "median", "sd", "q1", "q3", "iqr", "range", "min", "max"];
pub const RESOLUTION_COLUMNS: [&str; 4] = ["group", "resolution", "espim", "diff"];
pub const SYMPTOM_COLUMNS: [&str; 4] = ["group", "sessions", "symptom", "count"];
pub const REGION_COLUMNS: [&str; 11] = [
    "scheme", "region", "center_x", "center_y", "targets", "fixations", "clicks", "errors",
    "mean_fixation_distance_px", "mean_click_distance_px", "mean_error_distance_px",
];
pub const SCATTER_COLUMNS: [&str; 5] = ["scheme", "x", "y", "kind", "region"];

fn csv_failure(e: csv::Error) -> Failure {
    Failure::io(format!("cannot render CSV: {e}"))
}

/// One row of `clusters.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct RegionCsvRow<'a> {
    pub scheme: &'a str,
    pub region: &'a str,
    pub center_x: f64,
    pub center_y: f64,
    pub targets: usize,
    pub fixations: usize,
    pub clicks: usize,
    pub errors: usize,
    pub mean_fixation_distance_px: Option<f64>,
    pub mean_click_distance_px: Option<f64>,
    pub mean_error_distance_px: Option<f64>,
}

pub fn region_rows<'a>(scheme: &'a str, s: &'a RegionSummary) -> Vec<RegionCsvRow<'a>> {
    s.regions
        .iter()
        .map(|r| RegionCsvRow {
            scheme,
            region: &r.label,
            center_x: r.center.x,
            center_y: r.center.y,
            targets: r.targets,
            fixations: r.fixations,
            clicks: r.clicks,
            errors: r.errors,
            mean_fixation_distance_px: r.mean_fixation_distance,
            mean_click_distance_px: r.mean_click_distance,
            mean_error_distance_px: r.mean_error_distance,
        })
        .collect()
}

/// Every output file as (name, bytes), in a fixed order.
pub fn render(report: &AnalysisReport) -> Result<Vec<(&'static str, Vec<u8>)>, Failure> {
    let mut json = serde_json::to_vec_pretty(report).map_err(|e| Failure::io(e.to_string()))?;
    json.push(b'\n');

    let metrics: Vec<MetricsCsvRow> = report
        .sessions
        .iter()
        .map(|r| MetricsCsvRow {
            session_id: &r.session_id,
            participant_id: &r.participant_id,
            started_at: r.started_at.to_rfc3339(),
            schedule: r.schedule,
            resolution: &r.resolution,
            gameplay_rating: r.gameplay_rating,
            display_hours: r.display_hours,
            strain_rating: r.strain_rating,
            espim: r.metrics.espim.value(),
            anf: r.metrics.anf,
            td_s: r.metrics.td,
            errors: r.metrics.errors,
            mouse_moves: r.metrics.mouse_moves,
            fqls_px: r.metrics.fqls,
            mean_id_bits: r.metrics.mean_id,
            mean_mt_ms: r.metrics.mean_mt_ms,
            d_px: r.metrics.d,
            w_px: r.metrics.w,
            aot_px2: r.metrics.aot,
            aos_px2: r.metrics.aos,
            fixations: r.metrics.fixations,
            fqls_skipped: r.metrics.fqls_skipped,
            clamped_gaze: r.metrics.clamped_gaze,
            click_drift_px: r.click_drift_px,
        })
        .collect();

    let comparisons: Vec<_> = report
        .comparisons
        .iter()
        .map(|c| {
            (
                c.grouping,
                c.measure,
                c.left,
                c.right,
                c.pairs,
                c.left_mean,
                c.right_mean,
                c.result.map(|r| r.t),
                c.result.map(|r| r.df),
                c.result.map(|r| r.p),
                c.note.clone().unwrap_or_default(),
            )
        })
        .collect();
    let correlations: Vec<_> = report
        .correlations
        .iter()
        .map(|c| (c.x, c.y, c.n, c.result.map(|r| r.r), c.result.map(|r| r.p), c.note.clone().unwrap_or_default()))
        .collect();
    let descriptive: Vec<_> = report
        .descriptives
        .iter()
        .map(|d| {
            let s = &d.stats;
            (d.measure, d.group, s.n, s.mean, s.median, s.sd, s.q1, s.q3, s.iqr, s.range, s.min, s.max)
        })
        .collect();
    let mut resolution = Vec::new();
    for series in &report.resolution_diff {
        if let Some(table) = &series.table {
            for r in &table.rows {
                resolution.push((series.group, r.resolution.to_string(), Some(r.value), r.diff));
            }
            resolution.push((series.group, "total".to_string(), None, table.total));
        }
    }
    let mut symptoms = Vec::new();
    if let Some(tally) = &report.symptoms {
        for g in &tally.groups {
            for (s, n) in &g.counts {
                symptoms.push((g.label.clone(), g.sessions, s.as_str(), *n));
            }
            symptoms.push((g.label.clone(), g.sessions, "total", g.total));
        }
    }
    let mut region = Vec::new();
    let mut scatter = Vec::new();
    if let Some(r) = &report.regions {
        let schemes = r.clusters.iter().map(|c| ("cluster", c)).chain([("quadrant", &r.quadrants)]);
        for (scheme, summary) in schemes {
            region.extend(region_rows(scheme, summary));
            scatter.extend(summary.scatter.iter().map(|p| (scheme, p.x, p.y, p.kind.as_str(), p.region.clone())));
        }
    }

    Ok(vec![
        ("report.json", json),
        ("session_metrics.csv", csv_bytes(&SESSION_METRICS_COLUMNS, &metrics).map_err(csv_failure)?),
        ("group_comparisons.csv", csv_bytes(&COMPARISON_COLUMNS, &comparisons).map_err(csv_failure)?),
        ("correlations.csv", csv_bytes(&CORRELATION_COLUMNS, &correlations).map_err(csv_failure)?),
        ("descriptives.csv", csv_bytes(&DESCRIPTIVE_COLUMNS, &descriptive).map_err(csv_failure)?),
        ("resolution_diff.csv", csv_bytes(&RESOLUTION_COLUMNS, &resolution).map_err(csv_failure)?),
        ("symptoms.csv", csv_bytes(&SYMPTOM_COLUMNS, &symptoms).map_err(csv_failure)?),
        ("clusters.csv", csv_bytes(&REGION_COLUMNS, &region).map_err(csv_failure)?),
        ("scatter.csv", csv_bytes(&SCATTER_COLUMNS, &scatter).map_err(csv_failure)?),
    ])
}

/// Writes the report and its CSV tables into `out_dir`.
pub fn write_report(report: &AnalysisReport, out_dir: &Path) -> Result<Vec<PathBuf>, Failure> {
    fs::create_dir_all(out_dir).map_err(|e| Failure::io(format!("{}: {e}", display(out_dir))))?;
    let mut written = Vec::new();
    for (name, bytes) in render(report)? {
        let path = out_dir.join(name);
        write_atomic(&path, &bytes).map_err(|e| Failure::io(format!("{}: {e}", display(&path))))?;
        written.push(path);
    }
    Ok(written)
}
