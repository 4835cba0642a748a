//! Session-log format (JSON, schema version 1): parsing, validation, and
//! canonical serialization, plus the `t_ms,x,y` gaze CSV import.
//!
//! Parsing is staged so callers can tell failures apart: malformed JSON,
//! structural problems (missing fields, wrong types, unknown keys), and
//! invariant violations. Structural problems stop at the first error;
//! invariant checks collect every violation with its path.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Read;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use crate::fixation::{GazeSample, MouseSample};
use crate::geometry::Point;
use crate::model::{ModelError, ScreenSpec, TargetSpec};

pub const SCHEMA_VERSION: u32 = 1;

const MAX_SESSION_ID_LEN: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symptom {
    TiredEyes,
    DryEyes,
    BlurredVision,
    Headache,
    EyeBurn,
    DoubleVision,
}

impl Symptom {
    pub const ALL: [Symptom; 6] = [
        Symptom::TiredEyes,
        Symptom::DryEyes,
        Symptom::BlurredVision,
        Symptom::Headache,
        Symptom::EyeBurn,
        Symptom::DoubleVision,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Symptom::TiredEyes => "tired_eyes",
            Symptom::DryEyes => "dry_eyes",
            Symptom::BlurredVision => "blurred_vision",
            Symptom::Headache => "headache",
            Symptom::EyeBurn => "eye_burn",
            Symptom::DoubleVision => "double_vision",
        }
    }
}

impl fmt::Display for Symptom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Participant {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub age: Option<u32>,
    /// Self-reported video gameplay frequency, 1 (never) to 5 (every day).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gameplay_rating: Option<u8>,
    /// Explicit key for pairing this participant with one in another group.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreTest {
    /// Hours spent in front of a display before the session.
    pub display_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PostTest {
    /// Perceived eye strain, 1 (none) to 5.
    pub strain_rating: u8,
    #[serde(default)]
    pub symptoms: Vec<Symptom>,
}

/// One target presentation, from appearance to the correct click.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub target: TargetSpec,
    pub appear_t: f64,
    pub select_t: f64,
    pub select_pos: Point,
    /// Clicks that missed the active target before it was selected.
    pub error_clicks: u32,
    /// Locations of the missed clicks, when recorded. If present there is
    /// one entry per error click.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stray_clicks: Vec<MouseSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionLog {
    pub version: u32,
    pub session_id: String,
    pub participant: Participant,
    pub screen: ScreenSpec,
    pub started_at: DateTime<FixedOffset>,
    /// Length of the recording in milliseconds; every timestamp lies in
    /// `[0, duration_ms]`.
    pub duration_ms: f64,
    pub pre: PreTest,
    pub trials: Vec<TrialRecord>,
    #[serde(default)]
    pub gaze: Vec<GazeSample>,
    #[serde(default)]
    pub mouse: Vec<MouseSample>,
    pub post: PostTest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
        /// The document ended early.
        truncated: bool,
    },
    #[error("missing required field `{field}` in `{path}`")]
    MissingField { path: String, field: String },
    #[error("schema mismatch at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("{} invariant violation(s), first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),
}

impl SessionError {
    pub fn is_truncated(&self) -> bool {
        matches!(self, SessionError::Syntax { truncated: true, .. })
    }

    /// All problems as path-tagged violations.
    pub fn violations(&self) -> Vec<Violation> {
        match self {
            SessionError::Syntax {
                line,
                column,
                message,
                ..
            } => vec![Violation::new(
                "$",
                format!("malformed JSON at line {line}, column {column}: {message}"),
            )],
            SessionError::MissingField { path, field } => {
                let full = if path == "." || path.is_empty() {
                    field.clone()
                } else {
                    format!("{path}.{field}")
                };
                vec![Violation::new(full, "required field is missing")]
            }
            SessionError::Schema { path, message } => {
                vec![Violation::new(path.clone(), message.clone())]
            }
            SessionError::Invalid(v) => v.clone(),
        }
    }
}

/// Parses and fully validates a session log.
pub fn parse_session(bytes: &[u8]) -> Result<SessionLog, SessionError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let log: SessionLog = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        classify(err.into_inner(), path)
    })?;
    de.end().map_err(|err| classify(err, String::new()))?;
    let violations = log.validate();
    if violations.is_empty() {
        Ok(log)
    } else {
        Err(SessionError::Invalid(violations))
    }
}

fn classify(err: serde_json::Error, path: String) -> SessionError {
    use serde_json::error::Category;
    match err.classify() {
        Category::Syntax | Category::Eof | Category::Io => SessionError::Syntax {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
            truncated: err.classify() == Category::Eof,
        },
        Category::Data => {
            let message = err.to_string();
            match missing_field_name(&message) {
                Some(field) => SessionError::MissingField { path, field },
                None => SessionError::Schema { path, message },
            }
        }
    }
}

fn missing_field_name(message: &str) -> Option<String> {
    let rest = message.strip_prefix("missing field `")?;
    let end = rest.find('`')?;
    Some(rest[..end].to_string())
}

fn is_valid_session_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= MAX_SESSION_ID_LEN
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
}

impl SessionLog {
    /// Canonical pretty-printed form with a trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("session logs always serialize");
        s.push('\n');
        s
    }

    /// Checks every invariant, returning all violations found.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut bad = |path: String, message: String| out.push(Violation::new(path, message));

        if self.version != SCHEMA_VERSION {
            bad(
                "version".into(),
                format!("unsupported version {}, expected {SCHEMA_VERSION}", self.version),
            );
        }
        if !is_valid_session_id(&self.session_id) {
            bad(
                "session_id".into(),
                format!(
                    "must be 1-{MAX_SESSION_ID_LEN} characters of [A-Za-z0-9._-] not starting with '.'"
                ),
            );
        }
        if self.participant.id.trim().is_empty() {
            bad("participant.id".into(), "must not be empty".into());
        }
        if let Some(r) = self.participant.gameplay_rating {
            if !(1..=5).contains(&r) {
                bad(
                    "participant.gameplay_rating".into(),
                    format!("must be in 1..=5, got {r}"),
                );
            }
        }
        let screen_ok = [("screen.width", self.screen.width), ("screen.height", self.screen.height)]
            .into_iter()
            .fold(true, |ok, (path, v)| {
                if v.is_finite() && v > 0.0 {
                    ok
                } else {
                    bad(path.into(), format!("must be finite and > 0, got {v}"));
                    false
                }
            });
        let duration = self.duration_ms;
        if !(duration.is_finite() && duration >= 0.0) {
            bad("duration_ms".into(), format!("must be finite and >= 0, got {duration}"));
        }
        let hours = self.pre.display_hours;
        if !(hours.is_finite() && (0.0..=24.0).contains(&hours)) {
            bad(
                "pre.display_hours".into(),
                format!("must be within 0..=24, got {hours}"),
            );
        }

        let in_session = |t: f64| t.is_finite() && t >= 0.0 && t <= duration;

        if self.trials.is_empty() {
            bad("trials".into(), "at least one trial is required".into());
        }
        let mut previous_select: Option<f64> = None;
        for (i, trial) in self.trials.iter().enumerate() {
            let p = format!("trials[{i}]");
            let mut target_ok = screen_ok;
            if screen_ok {
                if let Err(ModelError::Domain { field, reason }) = trial.target.validate(&self.screen)
                {
                    target_ok = false;
                    let field = field.strip_prefix("target.").unwrap_or(field);
                    bad(format!("{p}.target.{field}"), reason);
                }
                let t = &trial.target;
                if !(t.cx.is_finite() && (0.0..=self.screen.width).contains(&t.cx)) {
                    bad(format!("{p}.target.cx"), "center outside the screen".into());
                }
                if !(t.cy.is_finite() && (0.0..=self.screen.height).contains(&t.cy)) {
                    bad(format!("{p}.target.cy"), "center outside the screen".into());
                }
            }
            if !in_session(trial.appear_t) {
                bad(
                    format!("{p}.appear_t"),
                    format!("{} is outside [0, duration_ms]", trial.appear_t),
                );
            }
            if !in_session(trial.select_t) {
                bad(
                    format!("{p}.select_t"),
                    format!("{} is outside [0, duration_ms]", trial.select_t),
                );
            }
            if !(trial.select_t > trial.appear_t) {
                bad(
                    format!("{p}.select_t"),
                    "must be later than appear_t".into(),
                );
            }
            if let Some(prev) = previous_select {
                if trial.appear_t < prev {
                    bad(
                        format!("{p}.appear_t"),
                        "trials must not overlap: appears before the previous selection".into(),
                    );
                }
            }
            previous_select = Some(trial.select_t);
            // A malformed target has no meaningful extent to hit.
            if target_ok && !trial.target.contains(trial.select_pos) {
                bad(
                    format!("{p}.select_pos"),
                    "selection lies outside the target".into(),
                );
            }
            if !trial.stray_clicks.is_empty() {
                if trial.stray_clicks.len() != trial.error_clicks as usize {
                    bad(
                        format!("{p}.stray_clicks"),
                        format!(
                            "{} locations recorded for {} error clicks",
                            trial.stray_clicks.len(),
                            trial.error_clicks
                        ),
                    );
                }
                for (j, c) in trial.stray_clicks.iter().enumerate() {
                    if !(c.t >= trial.appear_t && c.t <= trial.select_t) {
                        bad(
                            format!("{p}.stray_clicks[{j}].t"),
                            "outside the trial interval".into(),
                        );
                    }
                    if !(c.x.is_finite() && c.y.is_finite()) {
                        bad(format!("{p}.stray_clicks[{j}]"), "non-finite position".into());
                    }
                }
            }
        }

        for (name, stream) in [("gaze", &self.gaze), ("mouse", &self.mouse)] {
            let mut last = f64::NEG_INFINITY;
            for (i, s) in stream.iter().enumerate() {
                if !in_session(s.t) {
                    bad(
                        format!("{name}[{i}].t"),
                        format!("{} is outside [0, duration_ms]", s.t),
                    );
                } else if s.t < last {
                    bad(format!("{name}[{i}].t"), "timestamps must not decrease".into());
                }
                last = last.max(s.t);
                if !(s.x.is_finite() && s.y.is_finite()) {
                    bad(format!("{name}[{i}]"), "non-finite position".into());
                }
            }
        }

        let r = self.post.strain_rating;
        if !(1..=5).contains(&r) {
            bad(
                "post.strain_rating".into(),
                format!("must be in 1..=5, got {r}"),
            );
        }
        let mut seen = BTreeSet::new();
        for (i, s) in self.post.symptoms.iter().enumerate() {
            if !seen.insert(*s) {
                bad(format!("post.symptoms[{i}]"), format!("duplicate symptom `{s}`"));
            }
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GazeCsvError {
    #[error("expected header `t_ms,x,y`, found `{found}`")]
    Header { found: String },
    #[error("line {line}: {message}")]
    Row { line: u64, message: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Reads a sensor export with a `t_ms,x,y` header, one sample per line.
pub fn read_gaze_csv<R: Read>(reader: R) -> Result<Vec<GazeSample>, GazeCsvError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["t_ms", "x", "y"] {
        return Err(GazeCsvError::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut samples = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64, GazeCsvError> {
            let raw = record.get(i).unwrap_or("");
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| GazeCsvError::Row {
                    line,
                    message: format!("`{raw}` is not a finite number"),
                })
        };
        samples.push(GazeSample::new(field(0)?, field(1)?, field(2)?));
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "version": 1,
        "session_id": "s-001",
        "participant": {"id": "p01", "gameplay_rating": 3},
        "screen": {"width": 1280, "height": 720},
        "started_at": "2021-03-04T10:15:00+01:00",
        "duration_ms": 2000,
        "pre": {"display_hours": 2.5},
        "trials": [
            {"target": {"cx": 200, "cy": 300, "w": 80, "shape": "circle"},
             "appear_t": 100, "select_t": 900, "select_pos": {"x": 205, "y": 298},
             "error_clicks": 0}
        ],
        "gaze": [{"t": 0, "x": 10, "y": 10}, {"t": 11.1, "x": 12, "y": 11}],
        "mouse": [{"t": 0, "x": 600, "y": 400}],
        "post": {"strain_rating": 2, "symptoms": ["tired_eyes"]}
    }"#;

    fn with(edit: impl FnOnce(&mut serde_json::Value)) -> Vec<u8> {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        edit(&mut v);
        serde_json::to_vec(&v).unwrap()
    }

    fn paths(err: SessionError) -> Vec<String> {
        err.violations().into_iter().map(|v| v.path).collect()
    }

    #[test]
    fn minimal_document_round_trips() {
        let log = parse_session(MINIMAL.as_bytes()).unwrap();
        assert_eq!(log.trials.len(), 1);
        let canonical = log.to_canonical_json();
        let again = parse_session(canonical.as_bytes()).unwrap();
        assert_eq!(again, log);
        assert_eq!(again.to_canonical_json(), canonical);
    }

    #[test]
    fn out_of_range_rating_names_field() {
        let err = parse_session(&with(|v| v["post"]["strain_rating"] = 6.into())).unwrap_err();
        assert!(matches!(err, SessionError::Invalid(_)));
        assert_eq!(paths(err), ["post.strain_rating"]);
    }

    #[test]
    fn error_kinds_are_distinguishable() {
        let syntax = parse_session(b"{\"version\": 1,, }").unwrap_err();
        assert!(matches!(syntax, SessionError::Syntax { truncated: false, .. }));

        let truncated = parse_session(&MINIMAL.as_bytes()[..MINIMAL.len() / 2]).unwrap_err();
        assert!(truncated.is_truncated());

        let missing = parse_session(&with(|v| {
            v["post"].as_object_mut().unwrap().remove("strain_rating");
        }))
        .unwrap_err();
        match &missing {
            SessionError::MissingField { path, field } => {
                assert_eq!(path, "post");
                assert_eq!(field, "strain_rating");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(paths(missing), ["post.strain_rating"]);

        let top_missing = parse_session(&with(|v| {
            v.as_object_mut().unwrap().remove("trials");
        }))
        .unwrap_err();
        assert_eq!(paths(top_missing), ["trials"]);

        let wrong_type = parse_session(&with(|v| v["screen"]["width"] = "wide".into())).unwrap_err();
        match wrong_type {
            SessionError::Schema { path, .. } => assert_eq!(path, "screen.width"),
            other => panic!("unexpected {other:?}"),
        }

        let unknown = parse_session(&with(|v| v["extra"] = 1.into())).unwrap_err();
        assert!(matches!(unknown, SessionError::Schema { .. }));

        let trailing = parse_session(format!("{MINIMAL} []").as_bytes()).unwrap_err();
        assert!(matches!(trailing, SessionError::Syntax { .. }));
    }

    #[test]
    fn collects_every_violation() {
        let err = parse_session(&with(|v| {
            v["version"] = 2.into();
            v["session_id"] = "../etc/passwd".into();
            v["participant"]["gameplay_rating"] = 0.into();
            v["trials"][0]["select_t"] = 50.into();
            v["trials"][0]["select_pos"] = serde_json::json!({"x": 500, "y": 500});
            v["gaze"][1]["t"] = 5000.into();
            v["post"]["symptoms"] = serde_json::json!(["dry_eyes", "dry_eyes"]);
        }))
        .unwrap_err();
        let p = paths(err);
        for want in [
            "version",
            "session_id",
            "participant.gameplay_rating",
            "trials[0].select_t",
            "trials[0].select_pos",
            "gaze[1].t",
            "post.symptoms[1]",
        ] {
            assert!(p.iter().any(|x| x == want), "missing {want} in {p:?}");
        }
    }

    #[test]
    fn trial_geometry_is_checked() {
        let err = parse_session(&with(|v| {
            v["trials"][0]["target"] = serde_json::json!({"cx": 200, "cy": 300, "w": 80, "shape": "rectangle"});
        }))
        .unwrap_err();
        assert_eq!(paths(err), ["trials[0].target.h"]);

        let err = parse_session(&with(|v| {
            v["trials"][0]["target"]["cx"] = 5000.into();
        }))
        .unwrap_err();
        assert!(paths(err).contains(&"trials[0].target.cx".to_string()));

        let err = parse_session(&with(|v| v["trials"] = serde_json::json!([]))).unwrap_err();
        assert_eq!(paths(err), ["trials"]);
    }

    #[test]
    fn stray_click_locations_must_match_count() {
        let err = parse_session(&with(|v| {
            v["trials"][0]["error_clicks"] = 2.into();
            v["trials"][0]["stray_clicks"] = serde_json::json!([{"t": 300, "x": 1, "y": 1}]);
        }))
        .unwrap_err();
        assert_eq!(paths(err), ["trials[0].stray_clicks"]);
    }

    #[test]
    fn out_of_screen_gaze_is_accepted() {
        // Clamping happens during metric extraction, not at parse time.
        let log = parse_session(&with(|v| v["gaze"][0]["x"] = (-40).into())).unwrap();
        assert_eq!(log.gaze[0].x, -40.0);
    }

    #[test]
    fn gaze_csv_import() {
        let csv = "t_ms,x,y\n0,10.5,20\n11.1, 12, 21\n";
        let samples = read_gaze_csv(csv.as_bytes()).unwrap();
        assert_eq!(
            samples,
            vec![GazeSample::new(0.0, 10.5, 20.0), GazeSample::new(11.1, 12.0, 21.0)]
        );
        assert!(matches!(
            read_gaze_csv("time,x,y\n0,1,2\n".as_bytes()),
            Err(GazeCsvError::Header { .. })
        ));
        match read_gaze_csv("t_ms,x,y\n0,1,2\n5,abc,3\n".as_bytes()) {
            Err(GazeCsvError::Row { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }
}
