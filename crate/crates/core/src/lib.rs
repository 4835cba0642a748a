//! Eye-strain modeling and analysis for target-selection sessions: the ESPiM
//! score, fixation detection, session logs, statistics and spatial
//! clustering.

pub mod fixation;
pub mod geometry;
pub mod metrics;
pub mod model;
pub mod session;
pub mod spatial;
pub mod stats;

pub use geometry::Point;
