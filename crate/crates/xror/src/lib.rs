//! XROR: a motion-recording container and toolkit for 6DoF XR telemetry.
//!
//! A recording is session metadata plus dense float32 streams: one frame
//! stream of tracked-device poses and zero or more event streams describing
//! what happened in the virtual world. This crate provides:
//!
//! - [`model`] — the shared domain types and stream schemas
//! - [`codec`] — FPCX, a lossless predictive compressor for float32 matrices
//! - [`container`] — the `.xror` on-disk format (one BSON document, streams
//!   stored as FPCX blobs) with schema validation
//! - [`formats`] — parsers and writers for the reference source replay
//!   layouts (`.bsor`, `.dat`, `.tilt`) with format sniffing
//! - [`export`] — converters to `.bvh`, `.mvnx`, and `.json`
//! - [`pipeline`] — dataset production: validation, anonymization, metadata
//!   enrichment, synthetic corpora, user sharding, and corpus statistics

pub mod checks;
pub mod codec;
pub mod container;
pub mod export;
pub mod formats;
pub mod model;
pub mod pipeline;
pub mod report;

pub use model::{
    median_sample_rate, recording_duration, EventKind, EventStream, FrameStream, Recording,
    RecordingInfo, SourceFormat,
};
