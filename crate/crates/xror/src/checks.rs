//! Invariant checks over in-memory recordings.
//!
//! `structural_report` covers the stream-level rules a container file must
//! satisfy; `acceptance_report` layers the dataset admission thresholds on
//! top. Both collect every violation instead of stopping at the first.

use crate::model::{
    median_sample_rate, recording_duration, EventStream, FrameStream, Recording,
    BEAT_SABER_COLUMNS, BS_HEAD_BASE, BS_LEFT_BASE, BS_RIGHT_BASE, TILT_BRUSH_BASE,
    TILT_BRUSH_COLUMNS,
};
use crate::report::{ValidationReport, ViolationCode};

/// Thresholds for dataset admission. The defaults mirror the collection
/// window and device envelope the corpus was built around; all of them are
/// adjustable.
#[derive(Debug, Clone)]
pub struct ValidationPolicy {
    pub min_duration_s: f64,
    pub min_frames: usize,
    /// Acceptable median sample rate band in Hz (2x guard band around the
    /// 60-144 Hz devices produce).
    pub min_sample_rate_hz: f64,
    pub max_sample_rate_hz: f64,
    pub quat_norm_tol: f32,
    /// Events may precede/follow the frame span by this many seconds.
    pub event_time_slack_s: f32,
    /// 2017-11-01T00:00:00Z.
    pub min_timestamp_ms: i64,
    /// 2023-04-16T00:00:00Z (exclusive).
    pub max_timestamp_ms: i64,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        ValidationPolicy {
            min_duration_s: 1.0,
            min_frames: 30,
            min_sample_rate_hz: 30.0,
            max_sample_rate_hz: 288.0,
            quat_norm_tol: 1e-3,
            event_time_slack_s: 1.0,
            min_timestamp_ms: 1_509_494_400_000,
            max_timestamp_ms: 1_681_603_200_000,
        }
    }
}

fn quat_bases(frames: &FrameStream) -> Option<&'static [usize]> {
    let names: Vec<&str> = frames.columns().iter().map(|s| s.as_str()).collect();
    if names == BEAT_SABER_COLUMNS {
        Some(&[BS_HEAD_BASE, BS_LEFT_BASE, BS_RIGHT_BASE])
    } else if names == TILT_BRUSH_COLUMNS {
        Some(&[TILT_BRUSH_BASE])
    } else {
        None
    }
}

fn check_monotone_time(
    times: impl Iterator<Item = f32>,
    what: &str,
    report: &mut ValidationReport,
) {
    let mut prev: Option<f32> = None;
    let mut first_bad: Option<(usize, f32, f32)> = None;
    let mut bad = 0usize;
    for (i, t) in times.enumerate() {
        if let Some(p) = prev {
            if !(t >= p) {
                bad += 1;
                if first_bad.is_none() {
                    first_bad = Some((i, p, t));
                }
            }
        }
        prev = Some(t);
    }
    if let Some((row, p, t)) = first_bad {
        let more = if bad > 1 {
            format!(" (+{} more)", bad - 1)
        } else {
            String::new()
        };
        report.error_at(
            ViolationCode::MonotoneTime,
            row,
            format!("{what} time goes from {p} to {t}{more}"),
        );
    }
}

fn check_quat_norms(frames: &FrameStream, tol: f32, report: &mut ValidationReport) {
    let Some(bases) = quat_bases(frames) else {
        if frames.cols() > 0 {
            report.warning(
                ViolationCode::UnknownSchema,
                "frame columns match no declared schema; pose checks skipped",
            );
        }
        return;
    };
    for &base in bases {
        let mut first_bad: Option<(usize, f32)> = None;
        let mut bad = 0usize;
        for row in 0..frames.rows() {
            let norm = frames.pose(row, base).orientation_norm();
            if !((norm - 1.0).abs() <= tol) {
                bad += 1;
                if first_bad.is_none() {
                    first_bad = Some((row, norm));
                }
            }
        }
        if let Some((row, norm)) = first_bad {
            let col = &frames.columns()[base + 3];
            let more = if bad > 1 {
                format!(" (+{} more rows)", bad - 1)
            } else {
                String::new()
            };
            report.error_at(
                ViolationCode::QuatNorm,
                row,
                format!("quaternion at {col}.. has norm {norm}{more}"),
            );
        }
    }
}

fn check_finite(data: &[f32], cols: usize, what: &str, report: &mut ValidationReport) {
    let mut first_bad: Option<usize> = None;
    let mut bad = 0usize;
    for (i, v) in data.iter().enumerate() {
        if !v.is_finite() {
            bad += 1;
            if first_bad.is_none() {
                first_bad = Some(i);
            }
        }
    }
    if let Some(i) = first_bad {
        let more = if bad > 1 {
            format!(" (+{} more values)", bad - 1)
        } else {
            String::new()
        };
        report.error_at(
            ViolationCode::NonFinite,
            i / cols.max(1),
            format!("{what} contains a non-finite value{more}"),
        );
    }
}

fn check_event_stream_shape(ev: &EventStream, report: &mut ValidationReport) {
    let declared = ev.kind.columns();
    if ev.columns().len() != declared.len()
        || ev.columns().iter().zip(declared).any(|(a, b)| a != b)
    {
        report.error(
            ViolationCode::ShapeMismatch,
            format!(
                "{} stream has columns {:?}, declared schema is {:?}",
                ev.kind.as_str(),
                ev.columns(),
                declared
            ),
        );
    }
}

/// Stream-level rules: schema shapes, monotone time, quaternion norms, and
/// the sample-rate band.
pub fn structural_report(rec: &Recording, policy: &ValidationPolicy) -> ValidationReport {
    let mut report = ValidationReport::new();
    let frames = &rec.frames;

    if !frames.columns().is_empty() && frames.columns()[0] != "t" {
        report.error(
            ViolationCode::ShapeMismatch,
            format!("frame column 0 is {:?}, expected \"t\"", frames.columns()[0]),
        );
    }
    check_monotone_time((0..frames.rows()).map(|i| frames.time(i)), "frame", &mut report);
    check_quat_norms(frames, policy.quat_norm_tol, &mut report);
    if frames.rows() >= 3 {
        match median_sample_rate(rec) {
            Ok(rate) => {
                if rate < policy.min_sample_rate_hz || rate > policy.max_sample_rate_hz {
                    report.error(
                        ViolationCode::SampleRate,
                        format!(
                            "median sample rate {rate:.2} Hz outside [{}, {}]",
                            policy.min_sample_rate_hz, policy.max_sample_rate_hz
                        ),
                    );
                }
            }
            Err(_) => report.error(
                ViolationCode::SampleRate,
                "no positive frame deltas; sample rate undefined",
            ),
        }
    }
    for ev in &rec.events {
        check_event_stream_shape(ev, &mut report);
        check_monotone_time(
            (0..ev.rows()).map(|i| ev.time(i)),
            ev.kind.as_str(),
            &mut report,
        );
    }
    report
}

/// Full admission check: structural rules plus finiteness, duration, frame
/// count, event time range, and the metadata windows.
pub fn acceptance_report(rec: &Recording, policy: &ValidationPolicy) -> ValidationReport {
    let mut report = structural_report(rec, policy);
    let frames = &rec.frames;

    check_finite(frames.data(), frames.cols(), "frame stream", &mut report);
    for ev in &rec.events {
        check_finite(
            ev.data(),
            ev.cols(),
            &format!("{} stream", ev.kind.as_str()),
            &mut report,
        );
    }

    if frames.rows() < policy.min_frames {
        report.error(
            ViolationCode::TooFewFrames,
            format!(
                "{} frames, need at least {}",
                frames.rows(),
                policy.min_frames
            ),
        );
    }
    match recording_duration(rec) {
        Ok(d) if d <= policy.min_duration_s => {
            report.error(
                ViolationCode::TooShort,
                format!("duration {d:.3} s, need more than {} s", policy.min_duration_s),
            );
        }
        Ok(_) => {}
        Err(_) => {} // empty recording already rejected via TooFewFrames
    }

    if frames.rows() > 0 {
        let t0 = frames.time(0) - policy.event_time_slack_s;
        let t1 = frames.time(frames.rows() - 1) + policy.event_time_slack_s;
        for ev in &rec.events {
            let mut first_bad: Option<(usize, f32)> = None;
            let mut bad = 0usize;
            for row in 0..ev.rows() {
                let t = ev.time(row);
                if !(t >= t0 && t <= t1) {
                    bad += 1;
                    if first_bad.is_none() {
                        first_bad = Some((row, t));
                    }
                }
            }
            if let Some((row, t)) = first_bad {
                let more = if bad > 1 {
                    format!(" (+{} more)", bad - 1)
                } else {
                    String::new()
                };
                report.error_at(
                    ViolationCode::EventTimeRange,
                    row,
                    format!(
                        "{} event at t={t} outside frame span [{t0}, {t1}]{more}",
                        ev.kind.as_str()
                    ),
                );
            }
        }
    }

    // Timestamp 0 means the source format carried none; warn instead of reject.
    if rec.info.timestamp_ms == 0 {
        report.warning(
            ViolationCode::TimestampRange,
            "recording carries no timestamp",
        );
    } else if rec.info.timestamp_ms < policy.min_timestamp_ms
        || rec.info.timestamp_ms >= policy.max_timestamp_ms
    {
        report.error(
            ViolationCode::TimestampRange,
            format!(
                "timestamp {} ms outside [{}, {})",
                rec.info.timestamp_ms, policy.min_timestamp_ms, policy.max_timestamp_ms
            ),
        );
    }

    if rec.info.anonymized {
        let id_ok = rec.info.user_id.len() == 32
            && rec
                .info
                .user_id
                .bytes()
                .all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'));
        if !id_ok {
            report.error(
                ViolationCode::UserIdFormat,
                "anonymized user id is not 32 lowercase hex chars",
            );
        }
        if rec.info.user_name.is_some() {
            report.error(
                ViolationCode::UserIdFormat,
                "anonymized recording still carries a user name",
            );
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    fn clean_rec(n: usize, fps: f64) -> Recording {
        let mut data = Vec::new();
        for i in 0..n {
            data.push((i as f64 / fps) as f32);
            for _ in 0..3 {
                data.extend_from_slice(&[0.0, 1.6, 0.0, 0.0, 0.0, 0.0, 1.0]);
            }
        }
        Recording {
            info: RecordingInfo {
                timestamp_ms: 1_672_531_200_000,
                ..RecordingInfo::default()
            },
            frames: FrameStream::from_schema(&BEAT_SABER_COLUMNS, data).unwrap(),
            events: Vec::new(),
            provenance: Provenance {
                source_format: SourceFormat::Xror,
                original_bytes: 0,
            },
        }
    }

    #[test]
    fn clean_recording_accepted() {
        let rec = clean_rec(120, 90.0);
        let report = acceptance_report(&rec, &ValidationPolicy::default());
        assert!(report.accepted(), "{report}");
        assert!(report.is_clean(), "{report}");
    }

    #[test]
    fn nan_position_rejected() {
        let mut rec = clean_rec(120, 90.0);
        let mut data = rec.frames.data().to_vec();
        data[45] = f32::NAN;
        rec.frames = FrameStream::from_schema(&BEAT_SABER_COLUMNS, data).unwrap();
        let report = acceptance_report(&rec, &ValidationPolicy::default());
        assert!(!report.accepted());
        assert!(report.reject_reasons().contains(&"NON_FINITE"), "{report}");
    }

    #[test]
    fn short_recording_rejected() {
        let rec = clean_rec(45, 90.0); // 0.5 s
        let report = acceptance_report(&rec, &ValidationPolicy::default());
        assert!(report.reject_reasons().contains(&"TOO_SHORT"), "{report}");
    }

    #[test]
    fn non_monotone_time_flagged_with_row() {
        let mut rec = clean_rec(120, 90.0);
        let mut data = rec.frames.data().to_vec();
        data[60 * 22] = 0.0; // row 60 jumps back to t=0
        rec.frames = FrameStream::from_schema(&BEAT_SABER_COLUMNS, data).unwrap();
        let report = structural_report(&rec, &ValidationPolicy::default());
        let v: Vec<_> = report
            .violations
            .iter()
            .filter(|v| v.code == ViolationCode::MonotoneTime)
            .collect();
        assert_eq!(v.len(), 1, "{report}");
        assert_eq!(v[0].row, Some(60));
    }

    #[test]
    fn bad_quaternion_flagged() {
        let mut rec = clean_rec(120, 90.0);
        let mut data = rec.frames.data().to_vec();
        data[10 * 22 + BS_HEAD_BASE + 6] = 0.5; // head qw shrunk: norm 0.5
        rec.frames = FrameStream::from_schema(&BEAT_SABER_COLUMNS, data).unwrap();
        let report = structural_report(&rec, &ValidationPolicy::default());
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::QuatNorm && v.row == Some(10)));
    }

    #[test]
    fn out_of_band_sample_rate_flagged() {
        let rec = clean_rec(120, 10.0); // 10 Hz
        let report = structural_report(&rec, &ValidationPolicy::default());
        assert!(report
            .violations
            .iter()
            .any(|v| v.code == ViolationCode::SampleRate));
    }

    #[test]
    fn event_outside_span_rejected() {
        let mut rec = clean_rec(120, 90.0);
        rec.events
            .push(EventStream::new(EventKind::Height, vec![99.0, 1.7]).unwrap());
        let report = acceptance_report(&rec, &ValidationPolicy::default());
        assert!(report.reject_reasons().contains(&"EVENT_TIME_RANGE"));
    }

    #[test]
    fn timestamp_window_enforced() {
        let mut rec = clean_rec(120, 90.0);
        rec.info.timestamp_ms = 1_000_000_000_000; // 2001
        let report = acceptance_report(&rec, &ValidationPolicy::default());
        assert!(report.reject_reasons().contains(&"TIMESTAMP_RANGE"));
    }
}
