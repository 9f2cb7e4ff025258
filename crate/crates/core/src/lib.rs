//! Video copy detection: scene-adaptive frame selection from smoothed
//! interframe-difference curves, temporal attacks, descriptor matching and
//! micro-average-precision evaluation.
//!
//! The pipeline for one video is
//! [`media`] -> [`curve`] -> [`selection`] -> [`descriptor`], and a set of
//! videos is scored with [`matching`] and evaluated with [`metrics`].
//! [`harness`] runs whole experiment grids on synthetic or on-disk corpora.

pub mod attacks;
pub mod curve;
pub mod descriptor;
pub mod error;
pub mod harness;
pub mod matching;
pub mod media;
pub mod metrics;
pub mod selection;

pub use attacks::AttackSpec;
pub use curve::{compute_curve, smooth, DiffCurve};
pub use descriptor::{describe_video, DctDescriptor, DescriptorSet, FeatureVector, FrameDescriber};
pub use error::{Error, ErrorClass, Result};
pub use matching::{match_all, BackgroundPool, MatchConfig, Prediction, PredictionList};
pub use media::{Fps, Frame, FrameSequence, Manifest};
pub use metrics::{micro_average_precision, EvalReport, GroundTruth};
pub use selection::{select, PolicyKind, SelectionPolicy, SelectionResult};
