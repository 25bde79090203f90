//! Wire-level event types: what detectors submit, what the hub acknowledges,
//! and the record enum persisted to the append-only log.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::alarm::WeaponClass;
use crate::geo::{GeoPoint, Station};
use crate::suspect::SuspectRecord;

/// A detector site known to the deployment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub site_id: String,
    pub label: String,
}

/// Payload variants a detector can submit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    /// A face embedding captured from CCTV. Raw values; the hub normalizes.
    FaceSighting { embedding: Vec<f64> },
    /// A fingerprint probe embedding. Raw values; the hub normalizes.
    FingerprintQuery { embedding: Vec<f64> },
    /// A weapon spotted with detector confidence in [0, 1].
    WeaponDetection {
        weapon_class: WeaponClass,
        confidence: f64,
    },
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::FaceSighting { .. } => "face_sighting",
            EventKind::FingerprintQuery { .. } => "fingerprint_query",
            EventKind::WeaponDetection { .. } => "weapon_detection",
        }
    }
}

/// Timestamped, geolocated message from a detector site.
///
/// `event_id` is client-supplied and deduplicates retries: a repeated id at
/// the same site is acknowledged but not re-processed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub event_id: String,
    pub site_id: String,
    pub kind: EventKind,
    pub observed_at: DateTime<Utc>,
    pub position: GeoPoint,
}

/// Hub response to a submitted event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ack {
    pub accepted: bool,
    pub dedup: bool,
    pub outcome: String,
}

/// Everything the hub persists. State is a pure function of the record
/// sequence, so recovery is replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum LogRecord {
    Detection(DetectionEvent),
    RegisterStation(Station),
    RegisterSuspect(SuspectRecord),
    AlarmAcknowledged {
        alarm_id: String,
        officer_id: String,
        at: DateTime<Utc>,
    },
    AlarmResolved {
        alarm_id: String,
        actor: String,
        at: DateTime<Utc>,
    },
    IncidentReport {
        incident_id: String,
        text: String,
    },
    /// Station push outcome; operational telemetry, excluded from the
    /// deterministic state digest.
    DeliveryAttempt {
        notice_id: String,
        attempt: u32,
        delivered: bool,
        detail: String,
        at: DateTime<Utc>,
    },
}
