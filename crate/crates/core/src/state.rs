//! The hub's event-sourced aggregate.
//!
//! Every mutation is decided against the current state, appended to the log
//! as a [`LogRecord`], and then applied here. State is therefore a pure
//! function of the record sequence: recovery replays the log and lands on
//! the same galleries, alarms, incidents, and notices, byte for byte.
//!
//! Two flavors of data live side by side. Dispatch-deterministic state
//! (identities, alarms, incidents, notices, dedup sets) is covered by
//! [`HubState::digest`]; delivery tracking (notice status, attempt history)
//! depends on wall-clock network outcomes and is excluded from it.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::alarm::{Alarm, AlarmAction, AlarmEngine, AlarmError, AlarmPolicy, WeaponDetection};
use crate::embedding::Embedding;
use crate::event::{DetectionEvent, EventKind, LogRecord, Site};
use crate::geo::{compose_notice, nearest_station, GeoError, Notice, NoticeStatus, Station};
use crate::identity::{Decision, IdentityIndex, MatchResult, Modality};
use crate::suspect::SuspectRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("malformed event: {0}")]
    MalformedEvent(String),
    #[error("unknown site {0:?}")]
    UnknownSite(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error(transparent)]
    Alarm(#[from] AlarmError),
    #[error("internal inconsistency: {0}")]
    Inconsistent(String),
}

/// Deployment-wide knobs the state machine needs while applying records.
/// These come from the config file and are identical across a replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HubPolicies {
    pub dims: usize,
    pub face_threshold: f64,
    pub fingerprint_threshold: f64,
    pub alarm: AlarmPolicy,
    /// Detector sites allowed to submit events.
    pub sites: BTreeMap<String, Site>,
    /// Delivery attempts before a notice is marked Failed.
    pub max_delivery_attempts: u32,
}

/// Result of one face or fingerprint identification, kept for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SightingRecord {
    pub event_id: String,
    pub site_id: String,
    pub modality: Modality,
    pub observed_at: DateTime<Utc>,
    pub suspect_id: Option<String>,
    pub best_score: f64,
}

/// One station delivery attempt, appended in wall-clock order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeliveryRecord {
    pub attempt: u32,
    pub delivered: bool,
    pub detail: String,
    pub at: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncidentRecord {
    pub incident_id: String,
    pub alarm_id: String,
    pub triggering_event: DetectionEvent,
    pub delivery_history: Vec<DeliveryRecord>,
    pub report_text: Option<String>,
}

/// What applying a record produced; the hub turns this into responses.
#[derive(Debug, Clone, PartialEq)]
pub enum ApplyOutcome {
    Detection {
        outcome: String,
        /// Set when the detection dispatched a fresh notice.
        notice: Option<Notice>,
    },
    StationRegistered {
        /// Triggered alarms that were waiting for a station and have now
        /// been dispatched to it.
        backfilled_notices: Vec<Notice>,
    },
    SuspectRegistered,
    AlarmAcknowledged(Alarm),
    AlarmResolved(Alarm),
    ReportAttached,
    DeliveryRecorded,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HubState {
    pub suspects: BTreeMap<String, SuspectRecord>,
    pub identity: IdentityIndex,
    pub stations: BTreeMap<String, Station>,
    pub alarms: AlarmEngine,
    pub incidents: BTreeMap<String, IncidentRecord>,
    pub notices: BTreeMap<String, Notice>,
    pub sightings: Vec<SightingRecord>,
    /// event_ids already processed, per site; duplicates are acknowledged
    /// but never re-processed.
    pub seen_events: BTreeMap<String, BTreeSet<String>>,
    next_notice: u64,
    pub last_seq: u64,
}

impl HubState {
    pub fn new(dims: usize) -> Self {
        HubState {
            suspects: BTreeMap::new(),
            identity: IdentityIndex::new(dims),
            stations: BTreeMap::new(),
            alarms: AlarmEngine::new(),
            incidents: BTreeMap::new(),
            notices: BTreeMap::new(),
            sightings: Vec::new(),
            seen_events: BTreeMap::new(),
            next_notice: 1,
            last_seq: 0,
        }
    }

    // ---- decide phase -------------------------------------------------

    pub fn is_duplicate(&self, event: &DetectionEvent) -> bool {
        self.seen_events
            .get(&event.site_id)
            .is_some_and(|s| s.contains(&event.event_id))
    }

    /// Reject anything that must not reach the log. Runs before append, so
    /// apply never sees an invalid detection.
    pub fn validate_detection(
        &self,
        event: &DetectionEvent,
        policies: &HubPolicies,
    ) -> Result<(), StateError> {
        if event.event_id.trim().is_empty() {
            return Err(StateError::MalformedEvent("empty event_id".into()));
        }
        if !policies.sites.contains_key(&event.site_id) {
            return Err(StateError::UnknownSite(event.site_id.clone()));
        }
        match &event.kind {
            EventKind::FaceSighting { embedding } | EventKind::FingerprintQuery { embedding } => {
                Embedding::normalize(embedding, policies.dims)
                    .map_err(|e| StateError::MalformedEvent(e.to_string()))?;
            }
            EventKind::WeaponDetection { confidence, .. } => {
                if !(0.0..=1.0).contains(confidence) {
                    return Err(StateError::MalformedEvent(format!(
                        "confidence {confidence} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn validate_station(&self, station: &Station) -> Result<(), StateError> {
        if station.station_id.trim().is_empty() || station.delivery_endpoint.trim().is_empty() {
            return Err(StateError::MalformedEvent(
                "station_id and delivery_endpoint are required".into(),
            ));
        }
        if self.stations.contains_key(&station.station_id) {
            return Err(StateError::DuplicateId(station.station_id.clone()));
        }
        Ok(())
    }

    pub fn validate_suspect(&self, suspect: &SuspectRecord) -> Result<(), StateError> {
        if suspect.suspect_id.trim().is_empty() {
            return Err(StateError::MalformedEvent("empty suspect_id".into()));
        }
        if self.suspects.contains_key(&suspect.suspect_id) {
            return Err(StateError::DuplicateId(suspect.suspect_id.clone()));
        }
        Ok(())
    }

    pub fn validate_acknowledge(&self, alarm_id: &str) -> Result<(), StateError> {
        let alarm = self
            .alarms
            .get(alarm_id)
            .ok_or_else(|| StateError::NotFound(format!("alarm {alarm_id}")))?;
        let mut probe = alarm.clone();
        probe.acknowledge("probe", alarm.last_detection_at)?;
        Ok(())
    }

    pub fn validate_resolve(&self, alarm_id: &str) -> Result<(), StateError> {
        let alarm = self
            .alarms
            .get(alarm_id)
            .ok_or_else(|| StateError::NotFound(format!("alarm {alarm_id}")))?;
        let mut probe = alarm.clone();
        probe.resolve("probe", alarm.last_detection_at)?;
        Ok(())
    }

    pub fn validate_report(&self, incident_id: &str) -> Result<(), StateError> {
        if !self.incidents.contains_key(incident_id) {
            return Err(StateError::NotFound(format!("incident {incident_id}")));
        }
        Ok(())
    }

    // ---- apply phase ---------------------------------------------------

    /// Apply a logged record. Records are validated before they are
    /// appended, so failures here mean the log and the policies disagree
    /// (e.g. a config change mid-deployment) and are surfaced, not masked.
    pub fn apply(
        &mut self,
        seq: u64,
        record: &LogRecord,
        policies: &HubPolicies,
    ) -> Result<ApplyOutcome, StateError> {
        let outcome = match record {
            LogRecord::Detection(event) => self.apply_detection(event, policies)?,
            LogRecord::RegisterStation(station) => {
                if self.stations.contains_key(&station.station_id) {
                    return Err(StateError::DuplicateId(station.station_id.clone()));
                }
                self.stations
                    .insert(station.station_id.clone(), station.clone());
                let backfilled = self.dispatch_waiting_alarms(policies)?;
                ApplyOutcome::StationRegistered {
                    backfilled_notices: backfilled,
                }
            }
            LogRecord::RegisterSuspect(suspect) => {
                if self.suspects.contains_key(&suspect.suspect_id) {
                    return Err(StateError::DuplicateId(suspect.suspect_id.clone()));
                }
                self.suspects
                    .insert(suspect.suspect_id.clone(), suspect.clone());
                ApplyOutcome::SuspectRegistered
            }
            LogRecord::AlarmAcknowledged {
                alarm_id,
                officer_id,
                at,
            } => {
                let alarm = self.alarms.acknowledge(alarm_id, officer_id, *at)?;
                ApplyOutcome::AlarmAcknowledged(alarm.clone())
            }
            LogRecord::AlarmResolved {
                alarm_id,
                actor,
                at,
            } => {
                let alarm = self.alarms.resolve(alarm_id, actor, *at)?;
                ApplyOutcome::AlarmResolved(alarm.clone())
            }
            LogRecord::IncidentReport { incident_id, text } => {
                let incident = self
                    .incidents
                    .get_mut(incident_id)
                    .ok_or_else(|| StateError::NotFound(format!("incident {incident_id}")))?;
                incident.report_text = Some(text.clone());
                ApplyOutcome::ReportAttached
            }
            LogRecord::DeliveryAttempt {
                notice_id,
                attempt,
                delivered,
                detail,
                at,
            } => {
                self.record_delivery(notice_id, *attempt, *delivered, detail, *at, policies)?;
                ApplyOutcome::DeliveryRecorded
            }
        };
        self.last_seq = seq;
        Ok(outcome)
    }

    fn apply_detection(
        &mut self,
        event: &DetectionEvent,
        policies: &HubPolicies,
    ) -> Result<ApplyOutcome, StateError> {
        self.seen_events
            .entry(event.site_id.clone())
            .or_default()
            .insert(event.event_id.clone());

        match &event.kind {
            EventKind::FaceSighting { embedding } => {
                let probe = Embedding::normalize(embedding, policies.dims)
                    .map_err(|e| StateError::MalformedEvent(e.to_string()))?;
                let result = self
                    .identity
                    .identify_face(&probe, policies.face_threshold)
                    .map_err(|e| StateError::Inconsistent(e.to_string()))?;
                let outcome = self.record_sighting(event, Modality::Face, &result);
                Ok(ApplyOutcome::Detection {
                    outcome,
                    notice: None,
                })
            }
            EventKind::FingerprintQuery { embedding } => {
                let probe = Embedding::normalize(embedding, policies.dims)
                    .map_err(|e| StateError::MalformedEvent(e.to_string()))?;
                let (result, enrollment) = self
                    .identity
                    .identify_fingerprint(
                        &probe,
                        policies.fingerprint_threshold,
                        None,
                        event.observed_at,
                    )
                    .map_err(|e| StateError::Inconsistent(e.to_string()))?;
                let outcome = match &enrollment {
                    Some(enrollment) => {
                        if enrollment.suspect_is_new {
                            self.suspects.insert(
                                enrollment.suspect.suspect_id.clone(),
                                enrollment.suspect.clone(),
                            );
                        }
                        self.sightings.push(SightingRecord {
                            event_id: event.event_id.clone(),
                            site_id: event.site_id.clone(),
                            modality: Modality::Fingerprint,
                            observed_at: event.observed_at,
                            suspect_id: Some(enrollment.suspect.suspect_id.clone()),
                            best_score: result.best_score,
                        });
                        format!("enrolled as {}", enrollment.suspect.name)
                    }
                    None => self.record_sighting(event, Modality::Fingerprint, &result),
                };
                Ok(ApplyOutcome::Detection {
                    outcome,
                    notice: None,
                })
            }
            EventKind::WeaponDetection {
                weapon_class,
                confidence,
            } => {
                let detection = WeaponDetection {
                    site_id: event.site_id.clone(),
                    weapon_class: *weapon_class,
                    confidence: *confidence,
                    observed_at: event.observed_at,
                    position: event.position,
                };
                let action = self.alarms.ingest_weapon_event(detection, &policies.alarm);
                match action {
                    AlarmAction::IgnoredLowConfidence => Ok(ApplyOutcome::Detection {
                        outcome: format!("ignored: confidence {confidence} at or below gate"),
                        notice: None,
                    }),
                    AlarmAction::AttachedToActive { alarm_id } => Ok(ApplyOutcome::Detection {
                        outcome: format!("attached to active alarm {alarm_id}"),
                        notice: None,
                    }),
                    AlarmAction::TriggeredNew { alarm_id } => {
                        let incident_id = alarm_id.replacen("alm-", "inc-", 1);
                        self.incidents.insert(
                            incident_id.clone(),
                            IncidentRecord {
                                incident_id,
                                alarm_id: alarm_id.clone(),
                                triggering_event: event.clone(),
                                delivery_history: Vec::new(),
                                report_text: None,
                            },
                        );
                        match self.dispatch_alarm(&alarm_id, policies)? {
                            Some(notice) => Ok(ApplyOutcome::Detection {
                                outcome: format!(
                                    "alarm triggered, notice queued for station {}",
                                    notice.station_id
                                ),
                                notice: Some(notice),
                            }),
                            None => Ok(ApplyOutcome::Detection {
                                outcome: "alarm triggered, no stations registered".to_string(),
                                notice: None,
                            }),
                        }
                    }
                }
            }
        }
    }

    fn record_sighting(
        &mut self,
        event: &DetectionEvent,
        modality: Modality,
        result: &MatchResult,
    ) -> String {
        let (suspect_id, outcome) = match &result.decision {
            Decision::Match { suspect_id, .. } => (
                Some(suspect_id.clone()),
                format!(
                    "{modality} matched suspect {suspect_id} (score={:.4})",
                    result.best_score
                ),
            ),
            Decision::Unknown => (
                None,
                format!(
                    "{modality} unidentified (best_score={:.4})",
                    result.best_score
                ),
            ),
        };
        self.sightings.push(SightingRecord {
            event_id: event.event_id.clone(),
            site_id: event.site_id.clone(),
            modality,
            observed_at: event.observed_at,
            suspect_id,
            best_score: result.best_score,
        });
        outcome
    }

    /// Dispatch a Triggered alarm to the nearest station, if any station is
    /// registered. Returns the composed notice, or None to leave the alarm
    /// waiting for a station.
    fn dispatch_alarm(
        &mut self,
        alarm_id: &str,
        policies: &HubPolicies,
    ) -> Result<Option<Notice>, StateError> {
        let alarm = self
            .alarms
            .get(alarm_id)
            .ok_or_else(|| StateError::NotFound(format!("alarm {alarm_id}")))?;
        let station = match nearest_station(alarm.detection.position, self.stations.values()) {
            Ok(s) => s.clone(),
            Err(GeoError::NoStations) => return Ok(None),
            Err(e) => return Err(StateError::Inconsistent(e.to_string())),
        };
        let site_label = policies
            .sites
            .get(&alarm.detection.site_id)
            .map(|s| s.label.clone())
            .unwrap_or_else(|| alarm.detection.site_id.clone());
        let notice_id = format!("ntc-{:06}", self.next_notice);
        let at = alarm.detection.observed_at;
        let alarm = self
            .alarms
            .get_mut(alarm_id)
            .ok_or_else(|| StateError::NotFound(format!("alarm {alarm_id}")))?;
        let notice = compose_notice(notice_id.clone(), alarm, &station, site_label, at)
            .map_err(StateError::Alarm)?;
        self.next_notice += 1;
        self.notices.insert(notice_id, notice.clone());
        Ok(Some(notice))
    }

    /// Alarms that triggered while no station was registered dispatch as
    /// soon as one appears.
    fn dispatch_waiting_alarms(
        &mut self,
        policies: &HubPolicies,
    ) -> Result<Vec<Notice>, StateError> {
        let waiting: Vec<String> = self
            .alarms
            .alarms()
            .filter(|a| a.state == crate::alarm::AlarmState::Triggered)
            .map(|a| a.alarm_id.clone())
            .collect();
        let mut notices = Vec::new();
        for alarm_id in waiting {
            if let Some(notice) = self.dispatch_alarm(&alarm_id, policies)? {
                notices.push(notice);
            }
        }
        Ok(notices)
    }

    fn record_delivery(
        &mut self,
        notice_id: &str,
        attempt: u32,
        delivered: bool,
        detail: &str,
        at: DateTime<Utc>,
        policies: &HubPolicies,
    ) -> Result<(), StateError> {
        let notice = self
            .notices
            .get_mut(notice_id)
            .ok_or_else(|| StateError::NotFound(format!("notice {notice_id}")))?;
        notice.status = if delivered {
            NoticeStatus::Delivered
        } else if attempt >= policies.max_delivery_attempts {
            NoticeStatus::Failed
        } else {
            NoticeStatus::Pending
        };
        let incident_id = notice.alarm_id.replacen("alm-", "inc-", 1);
        let incident = self
            .incidents
            .get_mut(&incident_id)
            .ok_or_else(|| StateError::NotFound(format!("incident {incident_id}")))?;
        incident.delivery_history.push(DeliveryRecord {
            attempt,
            delivered,
            detail: detail.to_string(),
            at,
        });
        Ok(())
    }

    // ---- queries -------------------------------------------------------

    pub fn get_suspect(&self, suspect_id: &str) -> Result<&SuspectRecord, StateError> {
        self.suspects
            .get(suspect_id)
            .ok_or_else(|| StateError::NotFound(format!("suspect {suspect_id}")))
    }

    pub fn get_incident(&self, incident_id: &str) -> Result<&IncidentRecord, StateError> {
        self.incidents
            .get(incident_id)
            .ok_or_else(|| StateError::NotFound(format!("incident {incident_id}")))
    }

    /// Incidents in id order, optionally filtered by site.
    pub fn list_incidents(&self, site_id: Option<&str>) -> Vec<&IncidentRecord> {
        self.incidents
            .values()
            .filter(|i| site_id.is_none_or(|s| i.triggering_event.site_id == s))
            .collect()
    }

    pub fn list_stations(&self) -> Vec<&Station> {
        self.stations.values().collect()
    }

    pub fn list_suspects(&self) -> Vec<&SuspectRecord> {
        self.suspects.values().collect()
    }

    pub fn get_notice(&self, notice_id: &str) -> Option<&Notice> {
        self.notices.get(notice_id)
    }

    /// Notices in dispatch order (ids are zero-padded sequence numbers).
    pub fn notices_after(&self, last_seen: Option<&str>) -> Vec<&Notice> {
        self.notices
            .values()
            .filter(|n| last_seen.is_none_or(|seen| n.notice_id.as_str() > seen))
            .collect()
    }

    /// Digest over the dispatch-deterministic portion of the state.
    /// Identical detection/admin sequences produce identical digests;
    /// delivery outcomes (status, attempt history, and the log positions
    /// their records consume) are operational telemetry and do not
    /// participate.
    pub fn digest(&self) -> String {
        let mut value = serde_json::to_value(self).expect("state serializes");
        if let Some(obj) = value.as_object_mut() {
            obj.remove("last_seq");
        }
        if let Some(notices) = value.get_mut("notices").and_then(|v| v.as_object_mut()) {
            for (_, n) in notices.iter_mut() {
                if let Some(obj) = n.as_object_mut() {
                    obj.remove("status");
                }
            }
        }
        if let Some(incidents) = value.get_mut("incidents").and_then(|v| v.as_object_mut()) {
            for (_, i) in incidents.iter_mut() {
                if let Some(obj) = i.as_object_mut() {
                    obj.remove("delivery_history");
                }
            }
        }
        let canonical = serde_json::to_vec(&value).expect("canonical state bytes");
        let mut hasher = Sha256::new();
        hasher.update(&canonical);
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alarm::WeaponClass;
    use crate::geo::GeoPoint;

    fn policies() -> HubPolicies {
        let mut sites = BTreeMap::new();
        for (id, label) in [("site-1", "Bank"), ("site-2", "Mall"), ("site-3", "Plaza")] {
            sites.insert(
                id.to_string(),
                Site {
                    site_id: id.to_string(),
                    label: label.to_string(),
                },
            );
        }
        HubPolicies {
            dims: 8,
            face_threshold: 0.8,
            fingerprint_threshold: 0.8,
            alarm: AlarmPolicy::default(),
            sites,
            max_delivery_attempts: 5,
        }
    }

    fn ts(secs: i64) -> DateTime<Utc> {
        DateTime::from_timestamp(1_705_310_000 + secs, 0).unwrap()
    }

    fn station(id: &str, lat: f64) -> Station {
        Station {
            station_id: id.to_string(),
            label: format!("Station {id}"),
            position: GeoPoint::new(lat, 79.9).unwrap(),
            delivery_endpoint: "noop:".to_string(),
        }
    }

    fn weapon_event(event_id: &str, site: &str, confidence: f64, at: i64) -> DetectionEvent {
        DetectionEvent {
            event_id: event_id.to_string(),
            site_id: site.to_string(),
            kind: EventKind::WeaponDetection {
                weapon_class: WeaponClass::Gun,
                confidence,
            },
            observed_at: ts(at),
            position: GeoPoint::new(6.9271, 79.8612).unwrap(),
        }
    }

    fn face_event(event_id: &str, site: &str, embedding: Vec<f64>, at: i64) -> DetectionEvent {
        DetectionEvent {
            event_id: event_id.to_string(),
            site_id: site.to_string(),
            kind: EventKind::FaceSighting { embedding },
            observed_at: ts(at),
            position: GeoPoint::new(6.9271, 79.8612).unwrap(),
        }
    }

    fn fp_event(event_id: &str, site: &str, embedding: Vec<f64>, at: i64) -> DetectionEvent {
        DetectionEvent {
            event_id: event_id.to_string(),
            site_id: site.to_string(),
            kind: EventKind::FingerprintQuery { embedding },
            observed_at: ts(at),
            position: GeoPoint::new(6.9271, 79.8612).unwrap(),
        }
    }

    fn basis(axis: usize) -> Vec<f64> {
        let mut v = vec![0.0; 8];
        v[axis] = 1.0;
        v
    }

    struct Harness {
        state: HubState,
        policies: HubPolicies,
        seq: u64,
    }

    impl Harness {
        fn new() -> Self {
            let policies = policies();
            Harness {
                state: HubState::new(policies.dims),
                policies,
                seq: 0,
            }
        }

        fn apply(&mut self, record: LogRecord) -> ApplyOutcome {
            self.seq += 1;
            self.state
                .apply(self.seq, &record, &self.policies)
                .expect("apply")
        }
    }

    #[test]
    fn weapon_event_triggers_and_dispatches_to_nearest_station() {
        let mut h = Harness::new();
        h.apply(LogRecord::RegisterStation(station("st-far", 9.0)));
        h.apply(LogRecord::RegisterStation(station("st-near", 6.93)));
        let outcome = h.apply(LogRecord::Detection(weapon_event("e1", "site-1", 0.9, 0)));
        match outcome {
            ApplyOutcome::Detection { outcome, notice } => {
                assert_eq!(outcome, "alarm triggered, notice queued for station st-near");
                let notice = notice.unwrap();
                assert_eq!(notice.station_id, "st-near");
                assert_eq!(notice.site_label, "Bank");
                assert_eq!(notice.alarm_id, "alm-000001");
            }
            other => panic!("unexpected outcome {other:?}"),
        }
        assert_eq!(h.state.incidents.len(), 1);
        assert_eq!(h.state.notices.len(), 1);
        let incident = h.state.get_incident("inc-000001").unwrap();
        assert_eq!(incident.alarm_id, "alm-000001");
    }

    #[test]
    fn low_confidence_weapon_event_is_ignored() {
        let mut h = Harness::new();
        h.apply(LogRecord::RegisterStation(station("st-1", 6.93)));
        let outcome = h.apply(LogRecord::Detection(weapon_event("e1", "site-1", 0.3, 0)));
        match outcome {
            ApplyOutcome::Detection { outcome, notice } => {
                assert!(outcome.starts_with("ignored"));
                assert!(notice.is_none());
            }
            other => panic!("unexpected outcome {other:?}"),
        }
        assert!(h.state.incidents.is_empty());
    }

    #[test]
    fn alarm_without_station_waits_then_dispatches_on_registration() {
        let mut h = Harness::new();
        let outcome = h.apply(LogRecord::Detection(weapon_event("e1", "site-1", 0.9, 0)));
        match outcome {
            ApplyOutcome::Detection { outcome, notice } => {
                assert_eq!(outcome, "alarm triggered, no stations registered");
                assert!(notice.is_none());
            }
            other => panic!("unexpected outcome {other:?}"),
        }
        let outcome = h.apply(LogRecord::RegisterStation(station("st-1", 6.93)));
        match outcome {
            ApplyOutcome::StationRegistered { backfilled_notices } => {
                assert_eq!(backfilled_notices.len(), 1);
                assert_eq!(backfilled_notices[0].alarm_id, "alm-000001");
            }
            other => panic!("unexpected outcome {other:?}"),
        }
        assert_eq!(h.state.notices.len(), 1);
    }

    #[test]
    fn fingerprint_auto_enrolls_then_matches() {
        let mut h = Harness::new();
        let outcome = h.apply(LogRecord::Detection(fp_event("e1", "site-1", basis(0), 0)));
        match outcome {
            ApplyOutcome::Detection { outcome, .. } => {
                assert_eq!(outcome, "enrolled as UNIDENTIFIED-1");
            }
            other => panic!("unexpected outcome {other:?}"),
        }
        assert_eq!(h.state.identity.fingerprint.len(), 1);
        assert!(h.state.suspects.contains_key("auto-000001"));

        let outcome = h.apply(LogRecord::Detection(fp_event("e2", "site-1", basis(0), 1)));
        match outcome {
            ApplyOutcome::Detection { outcome, .. } => {
                assert!(outcome.starts_with("fingerprint matched suspect auto-000001"));
            }
            other => panic!("unexpected outcome {other:?}"),
        }
        assert_eq!(h.state.identity.fingerprint.len(), 1);
    }

    #[test]
    fn face_sightings_never_enroll() {
        let mut h = Harness::new();
        let outcome = h.apply(LogRecord::Detection(face_event("e1", "site-1", basis(0), 0)));
        match outcome {
            ApplyOutcome::Detection { outcome, .. } => {
                assert!(outcome.starts_with("face unidentified"));
            }
            other => panic!("unexpected outcome {other:?}"),
        }
        assert_eq!(h.state.identity.face.len(), 0);
        assert_eq!(h.state.sightings.len(), 1);
        assert!(h.state.sightings[0].suspect_id.is_none());
    }

    #[test]
    fn every_gallery_entry_references_an_existing_suspect() {
        let mut h = Harness::new();
        for i in 0..5 {
            h.apply(LogRecord::Detection(fp_event(
                &format!("e{i}"),
                "site-1",
                basis(i),
                i as i64,
            )));
        }
        for entry in h.state.identity.fingerprint.entries() {
            assert!(h.state.suspects.contains_key(&entry.suspect_id));
        }
    }

    #[test]
    fn duplicate_event_ids_are_detected_per_site() {
        let mut h = Harness::new();
        let e = weapon_event("e1", "site-1", 0.9, 0);
        assert!(!h.state.is_duplicate(&e));
        h.apply(LogRecord::Detection(e.clone()));
        assert!(h.state.is_duplicate(&e));
        // same event_id at a different site is a different event
        let other_site = weapon_event("e1", "site-2", 0.9, 0);
        assert!(!h.state.is_duplicate(&other_site));
    }

    #[test]
    fn validation_rejects_unknown_site_and_bad_payloads() {
        let h = Harness::new();
        let p = &h.policies;
        assert!(matches!(
            h.state
                .validate_detection(&weapon_event("e", "nowhere", 0.9, 0), p),
            Err(StateError::UnknownSite(_))
        ));
        assert!(matches!(
            h.state
                .validate_detection(&weapon_event("e", "site-1", 1.5, 0), p),
            Err(StateError::MalformedEvent(_))
        ));
        assert!(matches!(
            h.state
                .validate_detection(&face_event("e", "site-1", vec![1.0; 3], 0), p),
            Err(StateError::MalformedEvent(_))
        ));
        assert!(matches!(
            h.state
                .validate_detection(&face_event("e", "site-1", vec![0.0; 8], 0), p),
            Err(StateError::MalformedEvent(_))
        ));
        assert!(h
            .state
            .validate_detection(&weapon_event("e", "site-1", 0.9, 0), p)
            .is_ok());
    }

    #[test]
    fn ack_resolve_lifecycle_via_records() {
        let mut h = Harness::new();
        h.apply(LogRecord::RegisterStation(station("st-1", 6.93)));
        h.apply(LogRecord::Detection(weapon_event("e1", "site-1", 0.9, 0)));
        assert!(h.state.validate_acknowledge("alm-000001").is_ok());
        h.apply(LogRecord::AlarmAcknowledged {
            alarm_id: "alm-000001".into(),
            officer_id: "officer-9".into(),
            at: ts(10),
        });
        // second ack is illegal now
        assert!(matches!(
            h.state.validate_acknowledge("alm-000001"),
            Err(StateError::Alarm(AlarmError::IllegalTransition { .. }))
        ));
        h.apply(LogRecord::AlarmResolved {
            alarm_id: "alm-000001".into(),
            actor: "officer-9".into(),
            at: ts(20),
        });
        let alarm = h.state.alarms.get("alm-000001").unwrap();
        assert_eq!(alarm.state, crate::alarm::AlarmState::Resolved);
        assert_eq!(alarm.history.len(), 4);
    }

    #[test]
    fn delivery_attempts_update_status_and_history() {
        let mut h = Harness::new();
        h.apply(LogRecord::RegisterStation(station("st-1", 6.93)));
        h.apply(LogRecord::Detection(weapon_event("e1", "site-1", 0.9, 0)));
        h.apply(LogRecord::DeliveryAttempt {
            notice_id: "ntc-000001".into(),
            attempt: 1,
            delivered: false,
            detail: "connection refused".into(),
            at: ts(1),
        });
        assert_eq!(
            h.state.get_notice("ntc-000001").unwrap().status,
            NoticeStatus::Pending
        );
        h.apply(LogRecord::DeliveryAttempt {
            notice_id: "ntc-000001".into(),
            attempt: 2,
            delivered: true,
            detail: "ok".into(),
            at: ts(3),
        });
        assert_eq!(
            h.state.get_notice("ntc-000001").unwrap().status,
            NoticeStatus::Delivered
        );
        let incident = h.state.get_incident("inc-000001").unwrap();
        assert_eq!(incident.delivery_history.len(), 2);
        assert!(incident.delivery_history[0].at <= incident.delivery_history[1].at);
    }

    #[test]
    fn delivery_exhaustion_marks_failed() {
        let mut h = Harness::new();
        h.apply(LogRecord::RegisterStation(station("st-1", 6.93)));
        h.apply(LogRecord::Detection(weapon_event("e1", "site-1", 0.9, 0)));
        for attempt in 1..=5 {
            h.apply(LogRecord::DeliveryAttempt {
                notice_id: "ntc-000001".into(),
                attempt,
                delivered: false,
                detail: "down".into(),
                at: ts(attempt as i64),
            });
        }
        assert_eq!(
            h.state.get_notice("ntc-000001").unwrap().status,
            NoticeStatus::Failed
        );
    }

    #[test]
    fn replaying_identical_records_gives_identical_digests() {
        let records = vec![
            LogRecord::RegisterStation(station("st-1", 6.93)),
            LogRecord::RegisterStation(station("st-2", 7.2)),
            LogRecord::Detection(fp_event("e1", "site-1", basis(0), 0)),
            LogRecord::Detection(weapon_event("e2", "site-1", 0.9, 5)),
            LogRecord::Detection(weapon_event("e3", "site-1", 0.9, 30)),
            LogRecord::Detection(face_event("e4", "site-2", basis(1), 40)),
            LogRecord::AlarmAcknowledged {
                alarm_id: "alm-000001".into(),
                officer_id: "o1".into(),
                at: ts(60),
            },
        ];
        let run = |records: &[LogRecord]| {
            let mut h = Harness::new();
            for r in records {
                h.apply(r.clone());
            }
            h.state.digest()
        };
        assert_eq!(run(&records), run(&records));
    }

    #[test]
    fn digest_ignores_delivery_outcomes_but_not_dispatch_state() {
        let build = |deliver: bool| {
            let mut h = Harness::new();
            h.apply(LogRecord::RegisterStation(station("st-1", 6.93)));
            h.apply(LogRecord::Detection(weapon_event("e1", "site-1", 0.9, 0)));
            if deliver {
                h.apply(LogRecord::DeliveryAttempt {
                    notice_id: "ntc-000001".into(),
                    attempt: 1,
                    delivered: true,
                    detail: "ok".into(),
                    at: ts(1),
                });
            }
            h.state
        };
        // same digest with or without delivery outcomes...
        assert_eq!(build(true).digest(), build(false).digest());
        // ...but a different dispatch history changes it
        let mut h = Harness::new();
        h.apply(LogRecord::RegisterStation(station("st-1", 6.93)));
        assert_ne!(h.state.digest(), build(false).digest());
    }

    #[test]
    fn notice_count_equals_dispatched_alarm_count() {
        let mut h = Harness::new();
        h.apply(LogRecord::RegisterStation(station("st-1", 6.93)));
        h.apply(LogRecord::Detection(weapon_event("e1", "site-1", 0.9, 0)));
        h.apply(LogRecord::Detection(weapon_event("e2", "site-1", 0.9, 10))); // attaches
        h.apply(LogRecord::Detection(weapon_event("e3", "site-2", 0.9, 20)));
        h.apply(LogRecord::Detection(weapon_event("e4", "site-3", 0.2, 30))); // ignored
        let dispatched = h
            .state
            .alarms
            .alarms()
            .filter(|a| a.assigned_station.is_some())
            .count();
        assert_eq!(h.state.notices.len(), dispatched);
        assert_eq!(h.state.notices.len(), 2);
    }

    #[test]
    fn incident_listing_filters_by_site() {
        let mut h = Harness::new();
        h.apply(LogRecord::RegisterStation(station("st-1", 6.93)));
        h.apply(LogRecord::Detection(weapon_event("e1", "site-1", 0.9, 0)));
        h.apply(LogRecord::Detection(weapon_event("e2", "site-2", 0.9, 10)));
        assert_eq!(h.state.list_incidents(None).len(), 2);
        assert_eq!(h.state.list_incidents(Some("site-1")).len(), 1);
        assert_eq!(h.state.list_incidents(Some("site-3")).len(), 0);
    }

    #[test]
    fn report_attach_requires_existing_incident() {
        let mut h = Harness::new();
        assert!(matches!(
            h.state.validate_report("inc-000001"),
            Err(StateError::NotFound(_))
        ));
        h.apply(LogRecord::RegisterStation(station("st-1", 6.93)));
        h.apply(LogRecord::Detection(weapon_event("e1", "site-1", 0.9, 0)));
        h.apply(LogRecord::IncidentReport {
            incident_id: "inc-000001".into(),
            text: "A gun was seen. Officers responded.".into(),
        });
        assert!(h
            .state
            .get_incident("inc-000001")
            .unwrap()
            .report_text
            .is_some());
    }

    #[test]
    fn notices_after_filters_by_id_order() {
        let mut h = Harness::new();
        h.apply(LogRecord::RegisterStation(station("st-1", 6.93)));
        h.apply(LogRecord::Detection(weapon_event("e1", "site-1", 0.9, 0)));
        h.apply(LogRecord::Detection(weapon_event("e2", "site-2", 0.9, 0)));
        h.apply(LogRecord::Detection(weapon_event("e3", "site-3", 0.9, 0)));
        assert_eq!(h.state.notices_after(None).len(), 3);
        let after = h.state.notices_after(Some("ntc-000001"));
        assert_eq!(after.len(), 2);
        assert_eq!(after[0].notice_id, "ntc-000002");
    }
}
