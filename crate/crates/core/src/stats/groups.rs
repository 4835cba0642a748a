use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, FixedOffset, Timelike};
use serde::{Deserialize, Serialize};

use super::{mean, StatsError};
use crate::session::Symptom;

/// Working-time group of a session, by local wall-clock start time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Started within [09:00, 17:00).
    NineToFive,
    Flexible,
}

impl Schedule {
    pub fn of(started_at: &DateTime<FixedOffset>) -> Self {
        let minutes = started_at.hour() * 60 + started_at.minute();
        if (9 * 60..17 * 60).contains(&minutes) {
            Schedule::NineToFive
        } else {
            Schedule::Flexible
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Schedule::NineToFive => "nine_to_five",
            Schedule::Flexible => "flexible",
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleGroup<'a, T> {
    pub label: Schedule,
    pub members: Vec<&'a T>,
}

/// Partitions items into (9-to-5, flexible) by their local start time.
pub fn split_by_schedule<'a, T>(
    items: &'a [T],
    started_at: impl Fn(&T) -> Option<DateTime<FixedOffset>>,
) -> Result<(ScheduleGroup<'a, T>, ScheduleGroup<'a, T>), StatsError> {
    let mut office = ScheduleGroup {
        label: Schedule::NineToFive,
        members: Vec::new(),
    };
    let mut flexible = ScheduleGroup {
        label: Schedule::Flexible,
        members: Vec::new(),
    };
    for (index, item) in items.iter().enumerate() {
        let ts = started_at(item).ok_or(StatsError::MissingTimestamp { index })?;
        match Schedule::of(&ts) {
            Schedule::NineToFive => office.members.push(item),
            Schedule::Flexible => flexible.members.push(item),
        }
    }
    Ok((office, flexible))
}

/// Splits items into (low, high): `value < threshold` is low, everything
/// else high.
pub fn split_by_threshold<'a, T>(
    items: &'a [T],
    key: impl Fn(&T) -> Option<f64>,
    threshold: f64,
) -> Result<(Vec<&'a T>, Vec<&'a T>), StatsError> {
    let mut low = Vec::new();
    let mut high = Vec::new();
    for (index, item) in items.iter().enumerate() {
        let v = key(item).ok_or(StatsError::MissingKey { index })?;
        if v < threshold {
            low.push(item);
        } else {
            high.push(item);
        }
    }
    Ok((low, high))
}

/// Aligns two groups on an explicit pairing key.
///
/// Each key's observations are averaged within a group; only keys present
/// in both groups are kept, in key order. Items without a key are ignored.
pub fn paired_by_key<T, K: Ord + Clone>(
    left: &[&T],
    right: &[&T],
    key: impl Fn(&T) -> Option<K>,
    value: impl Fn(&T) -> f64,
) -> (Vec<K>, Vec<f64>, Vec<f64>) {
    let collect = |items: &[&T]| {
        let mut by_key: BTreeMap<K, Vec<f64>> = BTreeMap::new();
        for item in items {
            if let Some(k) = key(item) {
                by_key.entry(k).or_default().push(value(item));
            }
        }
        by_key
    };
    let l = collect(left);
    let r = collect(right);
    let mut keys = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (k, lv) in &l {
        if let Some(rv) = r.get(k) {
            keys.push(k.clone());
            xs.push(mean(lv));
            ys.push(mean(rv));
        }
    }
    (keys, xs, ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl Resolution {
    pub const fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn pixels(&self) -> u64 {
        u64::from(self.width) * u64::from(self.height)
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionDiffRow {
    pub resolution: Resolution,
    pub value: f64,
    /// `P_n - P_(n-1)`, with `P_0 = 0`.
    pub diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolutionDiffTable {
    pub rows: Vec<ResolutionDiffRow>,
    pub total: f64,
}

/// Successive differences of a score series ordered by screen size.
pub fn resolution_diff(points: &[(Resolution, f64)]) -> Result<ResolutionDiffTable, StatsError> {
    if points.is_empty() {
        return Err(StatsError::Empty);
    }
    if let Some(index) = points.iter().position(|p| !p.1.is_finite()) {
        return Err(StatsError::NonFinite { index });
    }
    if let Some(i) = points
        .windows(2)
        .position(|w| w[1].0.pixels() <= w[0].0.pixels())
    {
        return Err(StatsError::UnsortedResolutions { index: i + 1 });
    }
    let mut previous = 0.0;
    let rows: Vec<ResolutionDiffRow> = points
        .iter()
        .map(|&(resolution, value)| {
            let diff = value - previous;
            previous = value;
            ResolutionDiffRow {
                resolution,
                value,
                diff,
            }
        })
        .collect();
    let total = rows.iter().map(|r| r.diff).sum();
    Ok(ResolutionDiffTable { rows, total })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTally {
    pub label: String,
    pub sessions: usize,
    /// Sessions reporting each symptom; every known symptom is present.
    pub counts: BTreeMap<Symptom, usize>,
    /// Sum of `counts`.
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymptomTally {
    pub groups: Vec<GroupTally>,
}

/// Counts, per group, how many sessions reported each symptom.
pub fn symptom_tally(groups: &[(&str, Vec<&[Symptom]>)]) -> SymptomTally {
    let groups = groups
        .iter()
        .map(|(label, sessions)| {
            let mut counts: BTreeMap<Symptom, usize> =
                Symptom::ALL.iter().map(|s| (*s, 0)).collect();
            for reported in sessions {
                let mut seen = reported.to_vec();
                seen.sort();
                seen.dedup();
                for s in seen {
                    *counts.entry(s).or_default() += 1;
                }
            }
            let total = counts.values().sum();
            GroupTally {
                label: label.to_string(),
                sessions: sessions.len(),
                counts,
                total,
            }
        })
        .collect();
    SymptomTally { groups }
}
