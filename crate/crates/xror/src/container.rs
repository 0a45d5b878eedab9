//! The `.xror` container: one BSON document per file.
//!
//! Metadata lives as plain key-value fields; every stream is an FPCX blob in
//! a generic binary field next to its column list. Field order is canonical
//! (alphabetical within each document level) so identical recordings always
//! serialize to identical bytes. Reads tolerate unknown extra fields; writes
//! never emit them.
//!
//! ```text
//! {
//!   "$schema": "xror-ref-1",
//!   "crc32":   <int64: CRC-32 of all blob bytes, frames first>,
//!   "events":  [ { "blob": <binary>, "columns": [...], "kind": "NOTE" }, ... ],
//!   "frames":  { "blob": <binary>, "columns": ["t", ...] },
//!   "info":    { "activity": {...}, "anonymized": false, "app": "...",
//!                "appVersion": "...", "devices": [{"name","role"}, ...],
//!                "settings": {...}, "timestamp": <int64 unix ms>,
//!                "userId": "...", "userName": "..."? }
//! }
//! ```

use std::collections::BTreeMap;
use std::io::Cursor;

use bson::{doc, Binary, Bson, Document};
use thiserror::Error;

use crate::checks::{structural_report, ValidationPolicy};
use crate::codec::{self, CodecError};
use crate::model::{
    DeviceInfo, DeviceRole, EventKind, EventStream, FrameStream, ModelError, Provenance,
    Recording, RecordingInfo, SourceFormat,
};
use crate::report::{ValidationReport, ViolationCode};

pub const SCHEMA_ID: &str = "xror-ref-1";

#[derive(Debug, Error)]
pub enum ContainerError {
    #[error("not a BSON document: {0}")]
    NotBson(String),
    #[error("missing required field {0:?}")]
    MissingField(&'static str),
    #[error("field {field:?} is not a {expected}")]
    WrongFieldType {
        field: &'static str,
        expected: &'static str,
    },
    #[error("unsupported container schema {0:?}")]
    UnsupportedSchema(String),
    #[error("blob integrity check failed: {0}")]
    BlobCorrupt(&'static str),
    #[error("stream declares {declared} columns but its blob holds {actual}")]
    StreamShapeMismatch { declared: usize, actual: usize },
    #[error("invalid recording: {0}")]
    InvalidRecording(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn info_to_doc(info: &RecordingInfo) -> Document {
    let mut activity = Document::new();
    for (k, v) in &info.activity {
        activity.insert(k, v.as_str());
    }
    let mut settings = Document::new();
    for (k, v) in &info.settings {
        settings.insert(k, *v);
    }
    let devices: Vec<Bson> = info
        .devices
        .iter()
        .map(|d| Bson::Document(doc! { "name": d.name.as_str(), "role": d.role.as_str() }))
        .collect();

    // Alphabetical field order.
    let mut out = Document::new();
    out.insert("activity", activity);
    out.insert("anonymized", info.anonymized);
    out.insert("app", info.app.as_str());
    out.insert("appVersion", info.app_version.as_str());
    out.insert("devices", devices);
    out.insert("settings", settings);
    out.insert("timestamp", info.timestamp_ms);
    out.insert("userId", info.user_id.as_str());
    if let Some(name) = &info.user_name {
        out.insert("userName", name.as_str());
    }
    out
}

fn blob(bytes: Vec<u8>) -> Bson {
    Bson::Binary(Binary {
        subtype: bson::spec::BinarySubtype::Generic,
        bytes,
    })
}

fn columns_array(columns: &[String]) -> Bson {
    Bson::Array(columns.iter().map(|c| Bson::String(c.clone())).collect())
}

/// Serializes a recording to `.xror` bytes. Deterministic: the same
/// recording always yields the same bytes.
pub fn write_xror(rec: &Recording) -> Result<Vec<u8>, ContainerError> {
    let structural = structural_report(rec, &ValidationPolicy::default());
    if let Some(v) = structural
        .violations
        .iter()
        .find(|v| v.code == ViolationCode::MonotoneTime || v.code == ViolationCode::ShapeMismatch)
    {
        return Err(ContainerError::InvalidRecording(v.message.clone()));
    }

    let frames_blob = codec::encode_best(rec.frames.data(), rec.frames.rows(), rec.frames.cols())?;
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(&frames_blob);

    let mut events = Vec::with_capacity(rec.events.len());
    for ev in &rec.events {
        let ev_blob = codec::encode_best(ev.data(), ev.rows(), ev.cols())?;
        hasher.update(&ev_blob);
        let mut d = Document::new();
        d.insert("blob", blob(ev_blob));
        d.insert("columns", columns_array(ev.columns()));
        d.insert("kind", ev.kind.as_str());
        events.push(Bson::Document(d));
    }

    let mut frames = Document::new();
    frames.insert("blob", blob(frames_blob));
    frames.insert("columns", columns_array(rec.frames.columns()));

    let mut root = Document::new();
    root.insert("$schema", SCHEMA_ID);
    root.insert("crc32", hasher.finalize() as i64);
    root.insert("events", Bson::Array(events));
    root.insert("frames", frames);
    root.insert("info", info_to_doc(&rec.info));

    let mut out = Vec::new();
    root.to_writer(&mut out)
        .map_err(|e| ContainerError::NotBson(e.to_string()))?;
    Ok(out)
}

fn parse_document(bytes: &[u8]) -> Result<Document, ContainerError> {
    let mut cursor = Cursor::new(bytes);
    let doc = Document::from_reader(&mut cursor).map_err(|e| ContainerError::NotBson(e.to_string()))?;
    if cursor.position() as usize != bytes.len() {
        return Err(ContainerError::NotBson("trailing bytes after document".into()));
    }
    Ok(doc)
}

fn doc_info(info: &Document) -> Result<RecordingInfo, ContainerError> {
    let user_id = info
        .get_str("userId")
        .map_err(|_| ContainerError::MissingField("info.userId"))?
        .to_string();
    let app = info
        .get_str("app")
        .map_err(|_| ContainerError::MissingField("info.app"))?
        .to_string();

    let mut activity = BTreeMap::new();
    if let Some(Bson::Document(d)) = info.get("activity") {
        for (k, v) in d {
            if let Bson::String(s) = v {
                activity.insert(k.clone(), s.clone());
            }
        }
    }
    let mut settings = BTreeMap::new();
    if let Some(Bson::Document(d)) = info.get("settings") {
        for (k, v) in d {
            if let Some(x) = v.as_f64() {
                settings.insert(k.clone(), x);
            }
        }
    }
    let mut devices = Vec::new();
    if let Some(Bson::Array(arr)) = info.get("devices") {
        for item in arr {
            if let Bson::Document(d) = item {
                let name = d.get_str("name").unwrap_or_default().to_string();
                let role = DeviceRole::parse(d.get_str("role").unwrap_or_default())?;
                devices.push(DeviceInfo { name, role });
            }
        }
    }

    Ok(RecordingInfo {
        user_id,
        user_name: info.get_str("userName").ok().map(str::to_string),
        anonymized: info.get_bool("anonymized").unwrap_or(false),
        app,
        app_version: info.get_str("appVersion").unwrap_or_default().to_string(),
        activity,
        devices,
        timestamp_ms: info.get_i64("timestamp").unwrap_or(0),
        settings,
    })
}

fn doc_columns(d: &Document, field: &'static str) -> Result<Vec<String>, ContainerError> {
    let arr = d
        .get_array("columns")
        .map_err(|_| ContainerError::MissingField(field))?;
    arr.iter()
        .map(|v| {
            v.as_str()
                .map(str::to_string)
                .ok_or(ContainerError::WrongFieldType {
                    field,
                    expected: "array of strings",
                })
        })
        .collect()
}

fn decode_stream(d: &Document, field: &'static str) -> Result<(Vec<String>, Vec<f32>), ContainerError> {
    let columns = doc_columns(d, field)?;
    let bytes = d
        .get_binary_generic("blob")
        .map_err(|_| ContainerError::MissingField(field))?;
    let decoded = codec::decode(bytes)?;
    if decoded.consumed != bytes.len() {
        return Err(ContainerError::BlobCorrupt("trailing bytes in blob"));
    }
    if decoded.cols != columns.len() {
        return Err(ContainerError::StreamShapeMismatch {
            declared: columns.len(),
            actual: decoded.cols,
        });
    }
    Ok((columns, decoded.data))
}

fn crc_of_blobs(root: &Document) -> Result<u32, ContainerError> {
    let mut hasher = crc32fast::Hasher::new();
    let frames = root
        .get_document("frames")
        .map_err(|_| ContainerError::MissingField("frames"))?;
    let fb = frames
        .get_binary_generic("blob")
        .map_err(|_| ContainerError::MissingField("frames.blob"))?;
    hasher.update(fb);
    if let Ok(events) = root.get_array("events") {
        for ev in events {
            if let Bson::Document(d) = ev {
                let eb = d
                    .get_binary_generic("blob")
                    .map_err(|_| ContainerError::MissingField("events[].blob"))?;
                hasher.update(eb);
            }
        }
    }
    Ok(hasher.finalize())
}

/// Parses `.xror` bytes back into a recording. Inverse of [`write_xror`] up
/// to bit equality of streams and value equality of metadata.
pub fn read_xror(bytes: &[u8]) -> Result<Recording, ContainerError> {
    let root = parse_document(bytes)?;

    let schema = root
        .get_str("$schema")
        .map_err(|_| ContainerError::MissingField("$schema"))?;
    if schema != SCHEMA_ID {
        return Err(ContainerError::UnsupportedSchema(schema.to_string()));
    }

    let declared_crc = root
        .get_i64("crc32")
        .map_err(|_| ContainerError::MissingField("crc32"))?;
    if declared_crc < 0 || declared_crc > u32::MAX as i64 {
        return Err(ContainerError::WrongFieldType {
            field: "crc32",
            expected: "uint32",
        });
    }
    if crc_of_blobs(&root)? != declared_crc as u32 {
        return Err(ContainerError::BlobCorrupt("crc32 mismatch"));
    }

    let frames_doc = root
        .get_document("frames")
        .map_err(|_| ContainerError::MissingField("frames"))?;
    let (columns, data) = decode_stream(frames_doc, "frames")?;
    let frames = FrameStream::new(columns, data)?;

    let mut events = Vec::new();
    if let Ok(arr) = root.get_array("events") {
        for item in arr {
            let d = item.as_document().ok_or(ContainerError::WrongFieldType {
                field: "events",
                expected: "array of documents",
            })?;
            let kind = EventKind::parse(
                d.get_str("kind")
                    .map_err(|_| ContainerError::MissingField("events[].kind"))?,
            )?;
            let (columns, data) = decode_stream(d, "events[]")?;
            events.push(EventStream::with_columns(kind, columns, data)?);
        }
    }

    let info_doc = root
        .get_document("info")
        .map_err(|_| ContainerError::MissingField("info"))?;
    let info = doc_info(info_doc)?;

    Ok(Recording {
        info,
        frames,
        events,
        provenance: Provenance {
            source_format: SourceFormat::Xror,
            original_bytes: bytes.len() as u64,
        },
    })
}

/// Checks container bytes against the format rules, collecting every
/// violation instead of stopping at the first. Never panics, whatever the
/// input.
pub fn validate_schema(bytes: &[u8]) -> ValidationReport {
    let mut report = ValidationReport::new();
    let root = match parse_document(bytes) {
        Ok(doc) => doc,
        Err(e) => {
            report.error(ViolationCode::NotBson, e.to_string());
            return report;
        }
    };

    match root.get_str("$schema") {
        Ok(SCHEMA_ID) => {}
        Ok(other) => report.error(
            ViolationCode::WrongFieldType,
            format!("unsupported $schema {other:?}"),
        ),
        Err(_) => report.error(ViolationCode::MissingField, "$schema missing"),
    }

    match root.get_i64("crc32") {
        Ok(declared) if (0..=u32::MAX as i64).contains(&declared) => match crc_of_blobs(&root) {
            Ok(actual) if actual as i64 == declared => {}
            Ok(actual) => report.error(
                ViolationCode::BlobCorrupt,
                format!("crc32 mismatch: stored {declared}, computed {actual}"),
            ),
            Err(e) => report.error(ViolationCode::MissingField, e.to_string()),
        },
        Ok(declared) => report.error(
            ViolationCode::WrongFieldType,
            format!("crc32 {declared} out of uint32 range"),
        ),
        Err(_) => report.error(ViolationCode::MissingField, "crc32 missing"),
    }

    let frames = match root
        .get_document("frames")
        .map_err(|_| ContainerError::MissingField("frames"))
        .and_then(|d| decode_stream(d, "frames"))
        .and_then(|(c, d)| FrameStream::new(c, d).map_err(ContainerError::from))
    {
        Ok(frames) => Some(frames),
        Err(e) => {
            let code = match &e {
                ContainerError::MissingField(_) => ViolationCode::MissingField,
                ContainerError::StreamShapeMismatch { .. } => ViolationCode::ShapeMismatch,
                _ => ViolationCode::BlobCorrupt,
            };
            report.error(code, format!("frames: {e}"));
            None
        }
    };

    let mut events = Vec::new();
    if let Ok(arr) = root.get_array("events") {
        for (i, item) in arr.iter().enumerate() {
            let parsed = item
                .as_document()
                .ok_or(ContainerError::WrongFieldType {
                    field: "events",
                    expected: "array of documents",
                })
                .and_then(|d| {
                    let kind = EventKind::parse(
                        d.get_str("kind")
                            .map_err(|_| ContainerError::MissingField("events[].kind"))?,
                    )?;
                    let (columns, data) = decode_stream(d, "events[]")?;
                    Ok(EventStream::with_columns(kind, columns, data)?)
                });
            match parsed {
                Ok(ev) => events.push(ev),
                Err(e) => {
                    let code = match &e {
                        ContainerError::MissingField(_) => ViolationCode::MissingField,
                        ContainerError::StreamShapeMismatch { .. } => ViolationCode::ShapeMismatch,
                        ContainerError::Model(_) => ViolationCode::ShapeMismatch,
                        _ => ViolationCode::BlobCorrupt,
                    };
                    report.error(code, format!("events[{i}]: {e}"));
                }
            }
        }
    }

    let info = match root
        .get_document("info")
        .map_err(|_| ContainerError::MissingField("info"))
        .and_then(doc_info)
    {
        Ok(info) => Some(info),
        Err(e) => {
            report.error(ViolationCode::MissingField, format!("info: {e}"));
            None
        }
    };

    if let (Some(frames), Some(info)) = (frames, info) {
        let rec = Recording {
            info,
            frames,
            events,
            provenance: Provenance {
                source_format: SourceFormat::Xror,
                original_bytes: bytes.len() as u64,
            },
        };
        report.merge(structural_report(&rec, &ValidationPolicy::default()));
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{APP_BEAT_SABER, BEAT_SABER_COLUMNS};

    fn small_rec() -> Recording {
        let mut data = Vec::new();
        for i in 0..40 {
            data.push(i as f32 / 90.0);
            for _ in 0..3 {
                data.extend_from_slice(&[0.1, 1.6, -0.2, 0.0, 0.0, 0.0, 1.0]);
            }
        }
        let mut info = RecordingInfo {
            user_id: "player1".into(),
            user_name: Some("Player One".into()),
            app: APP_BEAT_SABER.into(),
            app_version: "1.29.1".into(),
            timestamp_ms: 1_672_531_200_000,
            ..RecordingInfo::default()
        };
        info.activity.insert("songName".into(), "Test Song".into());
        info.settings.insert("height".into(), 1.7);
        Recording {
            info,
            frames: FrameStream::from_schema(&BEAT_SABER_COLUMNS, data).unwrap(),
            events: vec![
                EventStream::new(EventKind::Note, vec![0.1, 1.0, 0.0, 0.01, 2.0, 0.5, 0.9]).unwrap(),
            ],
            provenance: Provenance {
                source_format: SourceFormat::Bsor,
                original_bytes: 123,
            },
        }
    }

    #[test]
    fn roundtrip_preserves_content() {
        let rec = small_rec();
        let bytes = write_xror(&rec).unwrap();
        let back = read_xror(&bytes).unwrap();
        assert!(rec.content_eq(&back));
        assert_eq!(back.provenance.source_format, SourceFormat::Xror);
        assert_eq!(back.provenance.original_bytes, bytes.len() as u64);
    }

    #[test]
    fn writes_are_deterministic() {
        let rec = small_rec();
        assert_eq!(write_xror(&rec).unwrap(), write_xror(&rec).unwrap());
    }

    #[test]
    fn minimal_recording_is_small() {
        let mut data = vec![0.0f32];
        data.extend_from_slice(&[0.0; 21]);
        let rec = Recording {
            info: RecordingInfo {
                user_id: "u".into(),
                app: APP_BEAT_SABER.into(),
                ..RecordingInfo::default()
            },
            frames: FrameStream::from_schema(&BEAT_SABER_COLUMNS, data).unwrap(),
            events: Vec::new(),
            provenance: Provenance {
                source_format: SourceFormat::Bsor,
                original_bytes: 0,
            },
        };
        let bytes = write_xror(&rec).unwrap();
        assert!(bytes.len() <= 1024, "file is {} bytes", bytes.len());
        assert!(read_xror(&bytes).unwrap().content_eq(&rec));
    }

    #[test]
    fn crc_tamper_detected() {
        let bytes = write_xror(&small_rec()).unwrap();
        let doc = parse_document(&bytes).unwrap();
        let old = doc.get_i64("crc32").unwrap();
        let mut doc = doc;
        doc.insert("crc32", (old ^ 1) as i64);
        let mut tampered = Vec::new();
        doc.to_writer(&mut tampered).unwrap();
        assert!(matches!(
            read_xror(&tampered),
            Err(ContainerError::BlobCorrupt(_))
        ));
        let report = validate_schema(&tampered);
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::BlobCorrupt));
    }

    #[test]
    fn non_monotone_recording_refused_on_write() {
        let mut rec = small_rec();
        let mut data = rec.frames.data().to_vec();
        data[22] = -5.0;
        rec.frames = FrameStream::from_schema(&BEAT_SABER_COLUMNS, data).unwrap();
        assert!(matches!(
            write_xror(&rec),
            Err(ContainerError::InvalidRecording(_))
        ));
    }

    #[test]
    fn unknown_extra_fields_tolerated() {
        let bytes = write_xror(&small_rec()).unwrap();
        let mut doc = parse_document(&bytes).unwrap();
        doc.insert("futureField", "whatever");
        let mut extended = Vec::new();
        doc.to_writer(&mut extended).unwrap();
        let back = read_xror(&extended).unwrap();
        assert!(back.content_eq(&small_rec()));
        // ... and never re-emitted on write.
        let rewritten = write_xror(&back).unwrap();
        assert!(read_xror(&rewritten).is_ok());
        assert_eq!(rewritten, bytes);
    }

    #[test]
    fn validate_clean_file_is_clean() {
        let bytes = write_xror(&small_rec()).unwrap();
        let report = validate_schema(&bytes);
        assert!(report.is_clean(), "{report}");
    }

    #[test]
    fn validate_garbage_reports_not_bson() {
        let report = validate_schema(b"not a bson file at all");
        assert!(!report.accepted());
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::NotBson));
    }
}
