//! Silent-alarm lifecycle: confidence gating, per-site debouncing, and the
//! Triggered -> Dispatched -> Acknowledged -> Resolved state machine.
//!
//! Time comes from event timestamps, never the wall clock, so replaying a
//! detection sequence reproduces the same alarms.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geo::GeoPoint;

/// Detections at or below this confidence are ignored by default.
pub const DEFAULT_CONFIDENCE_GATE: f64 = 0.5;
/// Detections within this window of an alarm's last attached detection
/// join that alarm instead of opening a new one.
pub const DEFAULT_DEBOUNCE_SECONDS: i64 = 120;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlarmError {
    #[error("alarm {0} not found")]
    NotFound(String),
    #[error("illegal transition: {from} -> {attempted}")]
    IllegalTransition { from: AlarmState, attempted: AlarmState },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeaponClass {
    Gun,
    Knife,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeaponDetection {
    pub site_id: String,
    pub weapon_class: WeaponClass,
    /// Detector confidence in [0, 1].
    pub confidence: f64,
    pub observed_at: DateTime<Utc>,
    pub position: GeoPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlarmState {
    Triggered,
    Dispatched,
    Acknowledged,
    Resolved,
}

impl fmt::Display for AlarmState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AlarmState::Triggered => "triggered",
            AlarmState::Dispatched => "dispatched",
            AlarmState::Acknowledged => "acknowledged",
            AlarmState::Resolved => "resolved",
        };
        write!(f, "{s}")
    }
}

/// One entry per state transition, append-only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlarmTransition {
    pub to: AlarmState,
    pub at: DateTime<Utc>,
    pub actor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alarm {
    pub alarm_id: String,
    pub site_id: String,
    pub state: AlarmState,
    /// The detection that opened this alarm.
    pub detection: WeaponDetection,
    /// Set exactly once, when the alarm is dispatched.
    pub assigned_station: Option<String>,
    pub history: Vec<AlarmTransition>,
    /// Timestamp of the most recently attached detection; anchors the
    /// debounce window.
    pub last_detection_at: DateTime<Utc>,
    /// Detections absorbed into this alarm after the first.
    pub attached_count: u32,
}

impl Alarm {
    pub fn trigger(alarm_id: String, detection: WeaponDetection, at: DateTime<Utc>) -> Self {
        let site_id = detection.site_id.clone();
        let observed_at = detection.observed_at;
        Alarm {
            alarm_id,
            site_id,
            state: AlarmState::Triggered,
            detection,
            assigned_station: None,
            history: vec![AlarmTransition {
                to: AlarmState::Triggered,
                at,
                actor: "system".to_string(),
            }],
            last_detection_at: observed_at,
            attached_count: 0,
        }
    }

    fn transition(
        &mut self,
        allowed_from: &[AlarmState],
        to: AlarmState,
        at: DateTime<Utc>,
        actor: String,
    ) -> Result<(), AlarmError> {
        if !allowed_from.contains(&self.state) {
            return Err(AlarmError::IllegalTransition {
                from: self.state,
                attempted: to,
            });
        }
        self.state = to;
        self.history.push(AlarmTransition { to, at, actor });
        Ok(())
    }

    pub fn dispatch(&mut self, station_id: String, at: DateTime<Utc>) -> Result<(), AlarmError> {
        self.transition(
            &[AlarmState::Triggered],
            AlarmState::Dispatched,
            at,
            "system".to_string(),
        )?;
        self.assigned_station = Some(station_id);
        Ok(())
    }

    pub fn acknowledge(&mut self, officer_id: &str, at: DateTime<Utc>) -> Result<(), AlarmError> {
        self.transition(
            &[AlarmState::Dispatched],
            AlarmState::Acknowledged,
            at,
            officer_id.to_string(),
        )
    }

    /// Normal closure from `Acknowledged`; `Triggered` is allowed as an
    /// administrative cancel (an alarm that never dispatched).
    pub fn resolve(&mut self, actor: &str, at: DateTime<Utc>) -> Result<(), AlarmError> {
        self.transition(
            &[AlarmState::Acknowledged, AlarmState::Triggered],
            AlarmState::Resolved,
            at,
            actor.to_string(),
        )
    }

    pub fn is_active(&self) -> bool {
        self.state != AlarmState::Resolved
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum AlarmAction {
    TriggeredNew { alarm_id: String },
    AttachedToActive { alarm_id: String },
    IgnoredLowConfidence,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlarmPolicy {
    pub confidence_gate: f64,
    pub debounce_seconds: i64,
}

impl Default for AlarmPolicy {
    fn default() -> Self {
        AlarmPolicy {
            confidence_gate: DEFAULT_CONFIDENCE_GATE,
            debounce_seconds: DEFAULT_DEBOUNCE_SECONDS,
        }
    }
}

/// All alarms ever raised, plus the counter that names the next one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlarmEngine {
    alarms: BTreeMap<String, Alarm>,
    next_alarm: u64,
}

impl Default for AlarmEngine {
    fn default() -> Self {
        Self::new()
    }
}

impl AlarmEngine {
    pub fn new() -> Self {
        AlarmEngine {
            alarms: BTreeMap::new(),
            next_alarm: 1,
        }
    }

    pub fn get(&self, alarm_id: &str) -> Option<&Alarm> {
        self.alarms.get(alarm_id)
    }

    pub(crate) fn get_mut(&mut self, alarm_id: &str) -> Option<&mut Alarm> {
        self.alarms.get_mut(alarm_id)
    }

    pub fn alarms(&self) -> impl Iterator<Item = &Alarm> {
        self.alarms.values()
    }

    pub fn len(&self) -> usize {
        self.alarms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alarms.is_empty()
    }

    /// The newest non-resolved alarm for a site, the only one that can
    /// still absorb detections.
    fn newest_active_for_site(&self, site_id: &str) -> Option<&Alarm> {
        self.alarms
            .values()
            .filter(|a| a.site_id == site_id && a.is_active())
            .last()
    }

    /// Gate on confidence, then either attach the detection to the site's
    /// active alarm (when inside the debounce window of its last attached
    /// detection) or open a new alarm.
    pub fn ingest_weapon_event(
        &mut self,
        detection: WeaponDetection,
        policy: &AlarmPolicy,
    ) -> AlarmAction {
        if detection.confidence <= policy.confidence_gate {
            return AlarmAction::IgnoredLowConfidence;
        }
        if let Some(active) = self.newest_active_for_site(&detection.site_id) {
            let delta = (detection.observed_at - active.last_detection_at).num_seconds();
            if delta <= policy.debounce_seconds {
                let alarm_id = active.alarm_id.clone();
                let alarm = self.alarms.get_mut(&alarm_id).expect("alarm exists");
                alarm.last_detection_at = detection.observed_at;
                alarm.attached_count += 1;
                return AlarmAction::AttachedToActive { alarm_id };
            }
        }
        let alarm_id = format!("alm-{:06}", self.next_alarm);
        self.next_alarm += 1;
        let at = detection.observed_at;
        self.alarms
            .insert(alarm_id.clone(), Alarm::trigger(alarm_id.clone(), detection, at));
        AlarmAction::TriggeredNew { alarm_id }
    }

    pub fn acknowledge(
        &mut self,
        alarm_id: &str,
        officer_id: &str,
        now: DateTime<Utc>,
    ) -> Result<&Alarm, AlarmError> {
        let alarm = self
            .alarms
            .get_mut(alarm_id)
            .ok_or_else(|| AlarmError::NotFound(alarm_id.to_string()))?;
        alarm.acknowledge(officer_id, now)?;
        Ok(alarm)
    }

    pub fn resolve(
        &mut self,
        alarm_id: &str,
        actor: &str,
        now: DateTime<Utc>,
    ) -> Result<&Alarm, AlarmError> {
        let alarm = self
            .alarms
            .get_mut(alarm_id)
            .ok_or_else(|| AlarmError::NotFound(alarm_id.to_string()))?;
        alarm.resolve(actor, now)?;
        Ok(alarm)
    }

    pub fn dispatch(
        &mut self,
        alarm_id: &str,
        station_id: String,
        at: DateTime<Utc>,
    ) -> Result<&mut Alarm, AlarmError> {
        let alarm = self
            .alarms
            .get_mut(alarm_id)
            .ok_or_else(|| AlarmError::NotFound(alarm_id.to_string()))?;
        alarm.dispatch(station_id, at)?;
        Ok(alarm)
    }
}
