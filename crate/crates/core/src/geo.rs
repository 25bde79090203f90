//! Great-circle distance, nearest-station selection, and notice composition.

use chrono::{DateTime, NaiveDate, NaiveTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alarm::{Alarm, AlarmError, WeaponClass};

/// Mean Earth radius. Spherical model; station-selection error at city
/// scale is negligible.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("latitude {0} outside [-90, 90]")]
    InvalidLatitude(f64),
    #[error("coordinate is not finite")]
    NonFiniteCoordinate,
    #[error("no stations registered")]
    NoStations,
}

/// A validated WGS-style coordinate pair. Longitude is normalized into
/// (-180, 180] on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeoPoint")]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Deserialize)]
struct RawGeoPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawGeoPoint> for GeoPoint {
    type Error = GeoError;
    fn try_from(raw: RawGeoPoint) -> Result<Self, GeoError> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self, GeoError> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(GeoError::NonFiniteCoordinate);
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(GeoError::InvalidLatitude(lat));
        }
        let mut lon = lon % 360.0;
        if lon <= -180.0 {
            lon += 360.0;
        } else if lon > 180.0 {
            lon -= 360.0;
        }
        Ok(GeoPoint { lat, lon })
    }
}

/// Great-circle distance in kilometers between two points.
pub fn haversine_km(p: GeoPoint, q: GeoPoint) -> f64 {
    let lat1 = p.lat.to_radians();
    let lat2 = q.lat.to_radians();
    let dlat = (q.lat - p.lat).to_radians();
    let dlon = (q.lon - p.lon).to_radians();
    let a = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// A police station that can receive notices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Station {
    pub station_id: String,
    pub label: String,
    pub position: GeoPoint,
    /// Push endpoint, scheme-prefixed (`http://...`, `file://...`, `noop:`).
    pub delivery_endpoint: String,
}

/// Straight-line nearest station; ties go to the smallest station id.
pub fn nearest_station<'a>(
    pos: GeoPoint,
    stations: impl IntoIterator<Item = &'a Station>,
) -> Result<&'a Station, GeoError> {
    let mut best: Option<(f64, &Station)> = None;
    for s in stations {
        let d = haversine_km(pos, s.position);
        let better = match best {
            None => true,
            Some((bd, bs)) => d < bd || (d == bd && s.station_id < bs.station_id),
        };
        if better {
            best = Some((d, s));
        }
    }
    best.map(|(_, s)| s).ok_or(GeoError::NoStations)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoticeStatus {
    Pending,
    Delivered,
    Failed,
}

/// The dispatch payload delivered to a station. Date and time are the
/// triggering detection's UTC timestamp split into calendar fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Notice {
    pub notice_id: String,
    pub alarm_id: String,
    pub station_id: String,
    pub date: NaiveDate,
    pub time: NaiveTime,
    pub position: GeoPoint,
    pub site_label: String,
    pub weapon_class: WeaponClass,
    pub status: NoticeStatus,
}

/// Compose the notice for a freshly triggered alarm and move the alarm to
/// `Dispatched` with the station assigned. One notice per alarm: a second
/// attempt fails the transition.
pub fn compose_notice(
    notice_id: String,
    alarm: &mut Alarm,
    station: &Station,
    site_label: String,
    at: DateTime<Utc>,
) -> Result<Notice, AlarmError> {
    alarm.dispatch(station.station_id.clone(), at)?;
    let observed = alarm.detection.observed_at;
    Ok(Notice {
        notice_id,
        alarm_id: alarm.alarm_id.clone(),
        station_id: station.station_id.clone(),
        date: observed.date_naive(),
        time: observed.time(),
        position: alarm.detection.position,
        site_label,
        weapon_class: alarm.detection.weapon_class,
        status: NoticeStatus::Pending,
    })
}
