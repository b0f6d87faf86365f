//! Rewatch-driven highlight curation.
//!
//! Viewer sessions are reduced to a per-bin rewatch timeline, peaks are found
//! with a one-sided IQR fence (or externally supplied events are ranked), and
//! the resulting segments are refined into a reel and exported as a cut list.
//! [`compare`] scores reels against other summaries and [`synth`] generates
//! populations with known ground truth.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compare;
pub mod curation;
pub mod detect;
pub mod events;
pub mod exec;
pub mod interval;
pub mod metadata;
pub mod pipeline;
pub mod reel;
pub mod refine;
pub mod segment;
pub mod session;
pub mod synth;
pub mod tagexpr;
pub mod timeline;

pub use detect::{IqrConfig, PeakDetector};
pub use exec::Parallelism;
pub use interval::Span;
pub use pipeline::{AssetInputs, PipelineConfig, PipelineError, PipelineRun};
pub use reel::{CutlistFormat, HighlightReel};
pub use segment::{Segment, SegmentSource};
pub use session::{AssetInfo, PlayMode, ViewSession};
pub use timeline::RewatchTimeline;
