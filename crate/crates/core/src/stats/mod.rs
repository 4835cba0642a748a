//! Statistical battery: descriptive summaries, paired t-tests, Pearson
//! correlation, group construction, resolution differences and symptom
//! tallies.

mod descriptive;
mod groups;
mod hypothesis;
pub mod special;

pub use descriptive::{descriptives, quantile, Descriptives};
pub use groups::{
    paired_by_key, resolution_diff, split_by_schedule, split_by_threshold, symptom_tally,
    GroupTally, Resolution, ResolutionDiffRow, ResolutionDiffTable, Schedule, ScheduleGroup,
    SymptomTally,
};
pub use hypothesis::{paired_t_test, pearson, CorrelationResult, PairedTTestResult};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("input is empty")]
    Empty,
    #[error("input contains a non-finite value at index {index}")]
    NonFinite { index: usize },
    #[error("inputs differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least {required} observations, got {got}")]
    TooFew { required: usize, got: usize },
    #[error("paired differences have zero variance")]
    ZeroVariance,
    #[error("correlation is undefined for constant input")]
    ConstantInput,
    #[error("item {index} has no timestamp")]
    MissingTimestamp { index: usize },
    #[error("item {index} has no value for the grouping key")]
    MissingKey { index: usize },
    #[error("resolutions must be strictly increasing by pixel count (offending index {index})")]
    UnsortedResolutions { index: usize },
}

pub(crate) fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    match xs.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(StatsError::NonFinite { index }),
        None => Ok(()),
    }
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
