//! Core domain types: recordings, frame/event streams, and their schemas.
//!
//! Everything here is immutable after construction and safe to share across
//! threads. Streams are dense row-major `f32` matrices with a named column
//! schema; column 0 is always `t`, seconds since recording start.

use std::collections::BTreeMap;

use thiserror::Error;

/// Canonical application identifier for Beat Saber recordings.
pub const APP_BEAT_SABER: &str = "beatsaber";
/// Canonical application identifier for Tilt Brush recordings.
pub const APP_TILT_BRUSH: &str = "tiltbrush";

/// Beat Saber frame schema: time plus a 6DoF pose per tracked device.
pub const BEAT_SABER_COLUMNS: [&str; 22] = [
    "t", "head_px", "head_py", "head_pz", "head_qx", "head_qy", "head_qz", "head_qw", "left_px",
    "left_py", "left_pz", "left_qx", "left_qy", "left_qz", "left_qw", "right_px", "right_py",
    "right_pz", "right_qx", "right_qy", "right_qz", "right_qw",
];

/// Tilt Brush frame schema: time, brush pose, and brush pressure.
pub const TILT_BRUSH_COLUMNS: [&str; 9] = [
    "t", "brush_px", "brush_py", "brush_pz", "brush_qx", "brush_qy", "brush_qz", "brush_qw",
    "pressure",
];

/// Column offset of the head pose within the Beat Saber schema.
pub const BS_HEAD_BASE: usize = 1;
/// Column offset of the left-controller pose within the Beat Saber schema.
pub const BS_LEFT_BASE: usize = 8;
/// Column offset of the right-controller pose within the Beat Saber schema.
pub const BS_RIGHT_BASE: usize = 15;
/// Column offset of the brush pose within the Tilt Brush schema.
pub const TILT_BRUSH_BASE: usize = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("recording has no frames")]
    EmptyRecording,
    #[error("need at least 3 frames for a sample rate, have {have}")]
    TooFewFrames { have: usize },
    #[error("no positive time deltas between frames")]
    AllZeroDeltas,
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("data length {data_len} is not a multiple of {cols} columns")]
    ShapeMismatch { data_len: usize, cols: usize },
    #[error("unknown application {0:?}")]
    UnknownApp(String),
    #[error("unknown event kind {0:?}")]
    UnknownKind(String),
    #[error("unknown source format {0:?}")]
    UnknownFormat(String),
}

/// Frame schema for a known application.
pub fn frame_columns(app: &str) -> Result<&'static [&'static str], ModelError> {
    match app {
        APP_BEAT_SABER => Ok(&BEAT_SABER_COLUMNS),
        APP_TILT_BRUSH => Ok(&TILT_BRUSH_COLUMNS),
        other => Err(ModelError::UnknownApp(other.to_string())),
    }
}

/// One 6DoF sample: position in meters (right-handed, y-up) and an
/// (x, y, z, w) orientation quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose6Dof {
    pub position: [f32; 3],
    pub orientation: [f32; 4],
}

impl Pose6Dof {
    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|v| v.is_finite())
            && self.orientation.iter().all(|v| v.is_finite())
    }

    pub fn orientation_norm(&self) -> f32 {
        let [x, y, z, w] = self.orientation;
        (x * x + y * y + z * z + w * w).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceRole {
    Hmd,
    ControllerL,
    ControllerR,
}

impl DeviceRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            DeviceRole::Hmd => "HMD",
            DeviceRole::ControllerL => "CONTROLLER_L",
            DeviceRole::ControllerR => "CONTROLLER_R",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ModelError> {
        match s {
            "HMD" => Ok(DeviceRole::Hmd),
            "CONTROLLER_L" => Ok(DeviceRole::ControllerL),
            "CONTROLLER_R" => Ok(DeviceRole::ControllerR),
            other => Err(ModelError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceInfo {
    pub name: String,
    pub role: DeviceRole,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceFormat {
    Bsor,
    Ssdat,
    Tilt,
    Xror,
}

impl SourceFormat {
    pub fn as_str(&self) -> &'static str {
        match self {
            SourceFormat::Bsor => "BSOR",
            SourceFormat::Ssdat => "SSDAT",
            SourceFormat::Tilt => "TILT",
            SourceFormat::Xror => "XROR",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ModelError> {
        match s {
            "BSOR" => Ok(SourceFormat::Bsor),
            "SSDAT" => Ok(SourceFormat::Ssdat),
            "TILT" => Ok(SourceFormat::Tilt),
            "XROR" => Ok(SourceFormat::Xror),
            other => Err(ModelError::UnknownFormat(other.to_string())),
        }
    }
}

/// Where a recording came from and how large the source bytes were.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub source_format: SourceFormat,
    pub original_bytes: u64,
}

/// Session metadata attached to every recording.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingInfo {
    /// Opaque user identifier; 32 lowercase hex chars once anonymized.
    pub user_id: String,
    /// Display name; present only before anonymization.
    pub user_name: Option<String>,
    /// Set by the anonymization pass so re-runs are no-ops.
    pub anonymized: bool,
    pub app: String,
    pub app_version: String,
    /// Activity descriptors: song/map name, difficulty, artwork title, ...
    pub activity: BTreeMap<String, String>,
    pub devices: Vec<DeviceInfo>,
    /// Unix milliseconds; 0 when the source format carries no timestamp.
    pub timestamp_ms: i64,
    /// Numeric user settings: height in meters, leftHanded as 0/1, ...
    pub settings: BTreeMap<String, f64>,
}

impl Default for RecordingInfo {
    fn default() -> Self {
        RecordingInfo {
            user_id: String::new(),
            user_name: None,
            anonymized: false,
            app: String::new(),
            app_version: String::new(),
            activity: BTreeMap::new(),
            devices: Vec::new(),
            timestamp_ms: 0,
            settings: BTreeMap::new(),
        }
    }
}

/// Dense N x C matrix of f32 motion samples with a named column schema.
#[derive(Debug, Clone)]
pub struct FrameStream {
    columns: Vec<String>,
    data: Vec<f32>,
}

impl FrameStream {
    pub fn new(columns: Vec<String>, data: Vec<f32>) -> Result<Self, ModelError> {
        if columns.is_empty() || data.len() % columns.len() != 0 {
            return Err(ModelError::ShapeMismatch {
                data_len: data.len(),
                cols: columns.len(),
            });
        }
        Ok(FrameStream { columns, data })
    }

    pub fn from_schema(columns: &[&str], data: Vec<f32>) -> Result<Self, ModelError> {
        Self::new(columns.iter().map(|c| c.to_string()).collect(), data)
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.columns.len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, row: usize) -> &[f32] {
        let c = self.cols();
        &self.data[row * c..(row + 1) * c]
    }

    pub fn value(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.cols() + col]
    }

    /// Time of a frame, from column 0.
    pub fn time(&self, row: usize) -> f32 {
        self.value(row, 0)
    }

    /// Index of a named column; unknown names are an error, never a default.
    pub fn column_index(&self, name: &str) -> Result<usize, ModelError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ModelError::UnknownColumn(name.to_string()))
    }

    /// Reads the 7 consecutive columns starting at `base` as a pose.
    pub fn pose(&self, row: usize, base: usize) -> Pose6Dof {
        let r = self.row(row);
        Pose6Dof {
            position: [r[base], r[base + 1], r[base + 2]],
            orientation: [r[base + 3], r[base + 4], r[base + 5], r[base + 6]],
        }
    }

    /// Bit-exact equality, including NaN payloads and signed zeros.
    pub fn bits_eq(&self, other: &FrameStream) -> bool {
        self.columns == other.columns
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Note,
    Wall,
    Height,
    Pause,
    Stroke,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Note => "NOTE",
            EventKind::Wall => "WALL",
            EventKind::Height => "HEIGHT",
            EventKind::Pause => "PAUSE",
            EventKind::Stroke => "STROKE",
        }
    }

    pub fn parse(s: &str) -> Result<Self, ModelError> {
        match s {
            "NOTE" => Ok(EventKind::Note),
            "WALL" => Ok(EventKind::Wall),
            "HEIGHT" => Ok(EventKind::Height),
            "PAUSE" => Ok(EventKind::Pause),
            "STROKE" => Ok(EventKind::Stroke),
            other => Err(ModelError::UnknownKind(other.to_string())),
        }
    }

    /// Declared column schema for this kind.
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            EventKind::Note => &[
                "t",
                "noteId",
                "eventType",
                "cutDeviation",
                "cutDirDeviation",
                "beforeCutRating",
                "afterCutRating",
            ],
            EventKind::Wall => &["t", "wallId", "energyPenalty"],
            EventKind::Height => &["t", "height"],
            EventKind::Pause => &["t", "durationMs"],
            EventKind::Stroke => &["t", "brushId", "r", "g", "b", "a", "size"],
        }
    }
}

/// Sparse in-world occurrences (notes, walls, strokes, ...) as an N x C matrix.
#[derive(Debug, Clone)]
pub struct EventStream {
    pub kind: EventKind,
    columns: Vec<String>,
    data: Vec<f32>,
}

impl EventStream {
    /// Builds a stream with the kind's declared schema.
    pub fn new(kind: EventKind, data: Vec<f32>) -> Result<Self, ModelError> {
        let columns: Vec<String> = kind.columns().iter().map(|c| c.to_string()).collect();
        if data.len() % columns.len() != 0 {
            return Err(ModelError::ShapeMismatch {
                data_len: data.len(),
                cols: columns.len(),
            });
        }
        Ok(EventStream {
            kind,
            columns,
            data,
        })
    }

    /// Builds a stream with explicit columns, as read from a container.
    pub fn with_columns(
        kind: EventKind,
        columns: Vec<String>,
        data: Vec<f32>,
    ) -> Result<Self, ModelError> {
        if columns.is_empty() || data.len() % columns.len() != 0 {
            return Err(ModelError::ShapeMismatch {
                data_len: data.len(),
                cols: columns.len(),
            });
        }
        Ok(EventStream {
            kind,
            columns,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.columns.len()
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, row: usize) -> &[f32] {
        let c = self.cols();
        &self.data[row * c..(row + 1) * c]
    }

    pub fn value(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.cols() + col]
    }

    pub fn time(&self, row: usize) -> f32 {
        self.value(row, 0)
    }

    pub fn column_index(&self, name: &str) -> Result<usize, ModelError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ModelError::UnknownColumn(name.to_string()))
    }

    pub fn bits_eq(&self, other: &EventStream) -> bool {
        self.kind == other.kind
            && self.columns == other.columns
            && self.data.len() == other.data.len()
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

/// One XR session: metadata, a frame stream, and zero or more event streams.
#[derive(Debug, Clone)]
pub struct Recording {
    pub info: RecordingInfo,
    pub frames: FrameStream,
    pub events: Vec<EventStream>,
    pub provenance: Provenance,
}

impl Recording {
    /// Value equality of metadata plus bit equality of all streams.
    /// Provenance is deliberately excluded: it describes the source bytes,
    /// not the recording.
    pub fn content_eq(&self, other: &Recording) -> bool {
        self.info == other.info
            && self.frames.bits_eq(&other.frames)
            && self.events.len() == other.events.len()
            && self
                .events
                .iter()
                .zip(&other.events)
                .all(|(a, b)| a.bits_eq(b))
    }
}

/// Seconds between the first and last frame; 0 for a single frame.
pub fn recording_duration(rec: &Recording) -> Result<f64, ModelError> {
    let n = rec.frames.rows();
    if n == 0 {
        return Err(ModelError::EmptyRecording);
    }
    Ok(rec.frames.time(n - 1) as f64 - rec.frames.time(0) as f64)
}

/// Median of 1/dt over consecutive frame pairs with dt > 0, in Hz.
pub fn median_sample_rate(rec: &Recording) -> Result<f64, ModelError> {
    let n = rec.frames.rows();
    if n < 3 {
        return Err(ModelError::TooFewFrames { have: n });
    }
    let mut rates: Vec<f64> = Vec::with_capacity(n - 1);
    for i in 1..n {
        let dt = rec.frames.time(i) as f64 - rec.frames.time(i - 1) as f64;
        if dt > 0.0 {
            rates.push(1.0 / dt);
        }
    }
    if rates.is_empty() {
        return Err(ModelError::AllZeroDeltas);
    }
    rates.sort_by(|a, b| a.total_cmp(b));
    let mid = rates.len() / 2;
    Ok(if rates.len() % 2 == 1 {
        rates[mid]
    } else {
        0.5 * (rates[mid - 1] + rates[mid])
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec_with_times(times: &[f32]) -> Recording {
        let mut data = Vec::new();
        for &t in times {
            data.push(t);
            data.extend_from_slice(&[0.0; 21]);
        }
        Recording {
            info: RecordingInfo::default(),
            frames: FrameStream::from_schema(&BEAT_SABER_COLUMNS, data).unwrap(),
            events: Vec::new(),
            provenance: Provenance {
                source_format: SourceFormat::Xror,
                original_bytes: 0,
            },
        }
    }

    #[test]
    fn duration_single_frame_is_zero() {
        assert_eq!(recording_duration(&rec_with_times(&[5.0])).unwrap(), 0.0);
    }

    #[test]
    fn duration_simple() {
        assert_eq!(
            recording_duration(&rec_with_times(&[0.0, 0.5, 1.0])).unwrap(),
            1.0
        );
    }

    #[test]
    fn duration_empty_is_error() {
        assert_eq!(
            recording_duration(&rec_with_times(&[])),
            Err(ModelError::EmptyRecording)
        );
    }

    #[test]
    fn duration_ignores_events() {
        let mut rec = rec_with_times(&[0.0, 1.0]);
        let before = recording_duration(&rec).unwrap();
        rec.events
            .push(EventStream::new(EventKind::Height, vec![0.5, 1.7]).unwrap());
        assert_eq!(recording_duration(&rec).unwrap(), before);
    }

    #[test]
    fn median_rate_uniform_90hz() {
        let times: Vec<f32> = (0..300).map(|i| (i as f64 / 90.0) as f32).collect();
        let rate = median_sample_rate(&rec_with_times(&times)).unwrap();
        assert!((rate - 90.0).abs() < 1e-3, "rate = {rate}");
    }

    #[test]
    fn median_rate_hand_case() {
        // deltas 0.01, 0.01, 1.0 -> rates {100, 100, 1} -> median 100
        // (f32 time stamps leave ~1e-5 of quantization on the rate)
        let rate = median_sample_rate(&rec_with_times(&[0.0, 0.01, 0.02, 1.02])).unwrap();
        assert!((rate - 100.0).abs() < 1e-3, "rate = {rate}");
    }

    #[test]
    fn median_rate_excludes_duplicate_timestamps() {
        // 100 frames at 60 Hz with one duplicated timestamp; the zero delta
        // is excluded and the median stays at 60.
        let mut times: Vec<f32> = (0..99).map(|i| (i as f64 / 60.0) as f32).collect();
        times.insert(50, times[50]);
        assert_eq!(times.len(), 100);
        let rate = median_sample_rate(&rec_with_times(&times)).unwrap();
        assert!((rate - 60.0).abs() < 1e-3, "rate = {rate}");
    }

    #[test]
    fn median_rate_errors() {
        assert_eq!(
            median_sample_rate(&rec_with_times(&[0.0, 1.0])),
            Err(ModelError::TooFewFrames { have: 2 })
        );
        assert_eq!(
            median_sample_rate(&rec_with_times(&[1.0, 1.0, 1.0])),
            Err(ModelError::AllZeroDeltas)
        );
    }

    #[test]
    fn stream_shape_is_exact() {
        assert!(FrameStream::from_schema(&BEAT_SABER_COLUMNS, vec![0.0; 44]).is_ok());
        assert!(FrameStream::from_schema(&BEAT_SABER_COLUMNS, vec![0.0; 45]).is_err());
        let s = FrameStream::from_schema(&BEAT_SABER_COLUMNS, vec![0.0; 44]).unwrap();
        assert_eq!(s.rows() * s.cols(), s.data().len());
    }

    #[test]
    fn column_lookup_is_total_over_schema() {
        let s = FrameStream::from_schema(&BEAT_SABER_COLUMNS, vec![]).unwrap();
        for (i, name) in BEAT_SABER_COLUMNS.iter().enumerate() {
            assert_eq!(s.column_index(name).unwrap(), i);
        }
        assert_eq!(
            s.column_index("nope"),
            Err(ModelError::UnknownColumn("nope".into()))
        );
    }

    #[test]
    fn event_schemas_have_declared_widths() {
        assert_eq!(EventKind::Note.columns().len(), 7);
        assert_eq!(EventKind::Wall.columns().len(), 3);
        assert_eq!(EventKind::Height.columns().len(), 2);
        assert_eq!(EventKind::Pause.columns().len(), 2);
        assert_eq!(EventKind::Stroke.columns().len(), 7);
    }
}
