//! Validation reporting shared by the container and pipeline checks.
//!
//! Checks never abort on the first problem; they accumulate violations and
//! let the caller decide. A report with no error-severity violations is an
//! accept.

use serde_json::json;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Severity {
    Warning,
    Error,
}

impl Severity {
    pub fn as_str(&self) -> &'static str {
        match self {
            Severity::Warning => "WARNING",
            Severity::Error => "ERROR",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ViolationCode {
    NotBson,
    MissingField,
    WrongFieldType,
    BlobCorrupt,
    ShapeMismatch,
    UnknownSchema,
    MonotoneTime,
    QuatNorm,
    SampleRate,
    NonFinite,
    EventTimeRange,
    TooShort,
    TooFewFrames,
    TimestampRange,
    UserIdFormat,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::NotBson => "NOT_BSON",
            ViolationCode::MissingField => "MISSING_FIELD",
            ViolationCode::WrongFieldType => "WRONG_FIELD_TYPE",
            ViolationCode::BlobCorrupt => "BLOB_CORRUPT",
            ViolationCode::ShapeMismatch => "SHAPE_MISMATCH",
            ViolationCode::UnknownSchema => "UNKNOWN_SCHEMA",
            ViolationCode::MonotoneTime => "MONOTONE_TIME",
            ViolationCode::QuatNorm => "QUAT_NORM",
            ViolationCode::SampleRate => "SAMPLE_RATE",
            ViolationCode::NonFinite => "NON_FINITE",
            ViolationCode::EventTimeRange => "EVENT_TIME_RANGE",
            ViolationCode::TooShort => "TOO_SHORT",
            ViolationCode::TooFewFrames => "TOO_FEW_FRAMES",
            ViolationCode::TimestampRange => "TIMESTAMP_RANGE",
            ViolationCode::UserIdFormat => "USER_ID_FORMAT",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub code: ViolationCode,
    pub severity: Severity,
    pub message: String,
    /// Row index within the offending stream, when row-addressable.
    pub row: Option<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn error(&mut self, code: ViolationCode, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            severity: Severity::Error,
            message: message.into(),
            row: None,
        });
    }

    pub fn error_at(&mut self, code: ViolationCode, row: usize, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            severity: Severity::Error,
            message: message.into(),
            row: Some(row),
        });
    }

    pub fn warning(&mut self, code: ViolationCode, message: impl Into<String>) {
        self.violations.push(Violation {
            code,
            severity: Severity::Warning,
            message: message.into(),
            row: None,
        });
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.violations.extend(other.violations);
    }

    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    /// Accept iff no error-severity violation is present.
    pub fn accepted(&self) -> bool {
        !self
            .violations
            .iter()
            .any(|v| v.severity == Severity::Error)
    }

    /// Deduplicated, sorted error codes; the REJECT reasons.
    pub fn reject_reasons(&self) -> Vec<&'static str> {
        let mut reasons: Vec<&'static str> = self
            .violations
            .iter()
            .filter(|v| v.severity == Severity::Error)
            .map(|v| v.code.as_str())
            .collect();
        reasons.sort_unstable();
        reasons.dedup();
        reasons
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "accepted": self.accepted(),
            "violations": self.violations.iter().map(|v| json!({
                "code": v.code.as_str(),
                "severity": v.severity.as_str(),
                "message": v.message,
                "row": v.row,
            })).collect::<Vec<_>>(),
        })
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "ok: no violations");
        }
        for v in &self.violations {
            match v.row {
                Some(row) => writeln!(
                    f,
                    "{} {} (row {}): {}",
                    v.severity.as_str(),
                    v.code.as_str(),
                    row,
                    v.message
                )?,
                None => writeln!(f, "{} {}: {}", v.severity.as_str(), v.code.as_str(), v.message)?,
            }
        }
        Ok(())
    }
}
