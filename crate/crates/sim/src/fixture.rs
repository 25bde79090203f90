//! Deterministic fixture construction and parsing.
//!
//! The canonical fixture is built so its expected effects are fixed by
//! construction, not by running the hub: weapon events arrive in bursts
//! whose internal gaps sit inside the debounce window and whose spacing
//! exceeds it, so the alarm count equals the burst count; fingerprint
//! probes reuse a known identity pool, so enrollments equal the number of
//! distinct identities probed.

use std::collections::BTreeSet;

use chrono::{DateTime, Duration, Utc};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use vigil_core::alarm::WeaponClass;
use vigil_core::event::{DetectionEvent, EventKind, Site};
use vigil_core::geo::{GeoPoint, Station};

use crate::ident::{gen_identity, gen_probe};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("fixture line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("fixture io failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Counts fixed by the generator's construction; the acceptance suite
/// checks the hub against them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureMeta {
    pub seed: u64,
    pub dims: usize,
    pub total_lines: usize,
    pub unique_events: usize,
    pub duplicate_lines: usize,
    pub weapon_events: usize,
    pub face_events: usize,
    pub fingerprint_events: usize,
    /// Bursts with a leading confidence above the gate: one alarm each.
    pub expected_alarms: usize,
    /// Distinct fingerprint identities probed: one auto-enrollment each.
    pub expected_enrollments: usize,
    /// Fingerprint probes beyond the first per identity.
    pub expected_fingerprint_matches: usize,
    pub confidence_gate: f64,
    pub debounce_seconds: i64,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub events: Vec<DetectionEvent>,
    pub stations: Vec<Station>,
    pub sites: Vec<Site>,
    pub site_positions: Vec<GeoPoint>,
    pub meta: FixtureMeta,
}

pub struct FixtureParams {
    pub seed: u64,
    pub dims: usize,
    pub total_lines: usize,
    pub sites: usize,
    pub stations: usize,
    pub bursts_per_site: usize,
    pub confidence_gate: f64,
    pub debounce_seconds: i64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        FixtureParams {
            seed: 20240301,
            dims: 128,
            total_lines: 500,
            sites: 3,
            stations: 10,
            bursts_per_site: 8,
            confidence_gate: 0.5,
            debounce_seconds: 120,
        }
    }
}

pub fn generate(params: &FixtureParams) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let start: DateTime<Utc> = "2024-03-01T08:00:00Z".parse().unwrap();

    let sites: Vec<Site> = (0..params.sites)
        .map(|i| Site {
            site_id: format!("site-{:02}", i + 1),
            label: ["Central Bank", "Rail Terminus", "Harbor Market"]
                .get(i)
                .map(|s| s.to_string())
                .unwrap_or_else(|| format!("Site {}", i + 1)),
        })
        .collect();
    let site_positions: Vec<GeoPoint> = (0..params.sites)
        .map(|_| {
            GeoPoint::new(
                rng.random_range(6.80..7.10),
                rng.random_range(79.80..80.05),
            )
            .unwrap()
        })
        .collect();

    let stations: Vec<Station> = (0..params.stations)
        .map(|i| Station {
            station_id: format!("st-{:02}", i + 1),
            label: format!("Police Station {:02}", i + 1),
            position: GeoPoint::new(
                rng.random_range(6.80..7.10),
                rng.random_range(79.80..80.05),
            )
            .unwrap(),
            delivery_endpoint: "noop:".to_string(),
        })
        .collect();

    // Weapon bursts. Inside a burst every attach lands well inside the
    // window of the previous attached detection; bursts are spaced far
    // outside it. Low-confidence extras never anchor the window.
    let mut events: Vec<(DateTime<Utc>, usize, DetectionEvent)> = Vec::new();
    let mut weapon_events = 0usize;
    let mut expected_alarms = 0usize;
    for (site_idx, site) in sites.iter().enumerate() {
        let position = site_positions[site_idx];
        for burst in 0..params.bursts_per_site {
            let lead_at = start
                + Duration::seconds(site_idx as i64 * 390)
                + Duration::seconds(burst as i64 * 1800);
            let lead_conf = rng.random_range(0.65..0.98);
            events.push((
                lead_at,
                site_idx,
                weapon_event(site, position, lead_conf, lead_at, &mut rng),
            ));
            weapon_events += 1;
            expected_alarms += 1;

            // two attaches at +40 s and +90 s (gaps 40 and 50, both <= 120)
            for offset in [40, 90] {
                let at = lead_at + Duration::seconds(offset);
                let conf = rng.random_range(0.55..0.95);
                events.push((at, site_idx, weapon_event(site, position, conf, at, &mut rng)));
                weapon_events += 1;
            }
            // one ignored low-confidence extra at +100 s
            let at = lead_at + Duration::seconds(100);
            let conf = rng.random_range(0.05..0.45);
            events.push((at, site_idx, weapon_event(site, position, conf, at, &mut rng)));
            weapon_events += 1;
        }
    }

    // Fill the remaining quota with biometric traffic. Fingerprints rotate
    // through a pool, first probe per identity enrolls; faces never enroll.
    let unique_target = params.total_lines - 1; // one line is a duplicate
    let biometric_quota = unique_target - weapon_events;
    let fingerprint_quota = biometric_quota / 2;
    let face_quota = biometric_quota - fingerprint_quota;

    let fp_pool = 30usize.min(fingerprint_quota.max(1));
    let mut enrolled: BTreeSet<usize> = BTreeSet::new();
    let mut expected_fingerprint_matches = 0usize;
    for i in 0..fingerprint_quota {
        let identity_idx = rng.random_range(0..fp_pool);
        if !enrolled.insert(identity_idx) {
            expected_fingerprint_matches += 1;
        }
        let identity = gen_identity(1000 + identity_idx as u64, params.dims);
        let probe = gen_probe(&identity, 0.04, params.seed ^ (i as u64 * 31 + 7));
        let site_idx = rng.random_range(0..sites.len());
        let at = start + Duration::seconds(i as i64 * 47 + 13);
        events.push((
            at,
            site_idx,
            DetectionEvent {
                event_id: String::new(),
                site_id: sites[site_idx].site_id.clone(),
                kind: EventKind::FingerprintQuery {
                    embedding: probe.values().to_vec(),
                },
                observed_at: at,
                position: site_positions[site_idx],
            },
        ));
    }
    let expected_enrollments = enrolled.len();

    for i in 0..face_quota {
        let identity = gen_identity(2000 + (i % 25) as u64, params.dims);
        let probe = gen_probe(&identity, 0.04, params.seed ^ (i as u64 * 17 + 3));
        let site_idx = rng.random_range(0..sites.len());
        let at = start + Duration::seconds(i as i64 * 53 + 29);
        events.push((
            at,
            site_idx,
            DetectionEvent {
                event_id: String::new(),
                site_id: sites[site_idx].site_id.clone(),
                kind: EventKind::FaceSighting {
                    embedding: probe.values().to_vec(),
                },
                observed_at: at,
                position: site_positions[site_idx],
            },
        ));
    }

    // Global order: by timestamp, site, then insertion. Event ids follow
    // final file order.
    let mut indexed: Vec<(usize, (DateTime<Utc>, usize, DetectionEvent))> =
        events.into_iter().enumerate().map(|(i, e)| (i, e)).collect();
    indexed.sort_by(|a, b| {
        (a.1 .0, a.1 .1, a.0).cmp(&(b.1 .0, b.1 .1, b.0))
    });
    let mut events: Vec<DetectionEvent> = indexed.into_iter().map(|(_, e)| e.2).collect();
    for (i, e) in events.iter_mut().enumerate() {
        e.event_id = format!("evt-{:06}", i + 1);
    }
    assert_eq!(events.len(), unique_target);

    // one duplicated line: the same event resubmitted right away, as a
    // detector retry would
    let dup_idx = events.len() / 2;
    let dup = events[dup_idx].clone();
    events.insert(dup_idx + 1, dup);

    let meta = FixtureMeta {
        seed: params.seed,
        dims: params.dims,
        total_lines: events.len(),
        unique_events: unique_target,
        duplicate_lines: 1,
        weapon_events,
        face_events: face_quota,
        fingerprint_events: fingerprint_quota,
        expected_alarms,
        expected_enrollments,
        expected_fingerprint_matches,
        confidence_gate: params.confidence_gate,
        debounce_seconds: params.debounce_seconds,
    };

    Fixture {
        events,
        stations,
        sites,
        site_positions,
        meta,
    }
}

fn weapon_event(
    site: &Site,
    position: GeoPoint,
    confidence: f64,
    at: DateTime<Utc>,
    rng: &mut ChaCha8Rng,
) -> DetectionEvent {
    let weapon_class = match rng.random_range(0..10) {
        0..=6 => WeaponClass::Gun,
        7..=8 => WeaponClass::Knife,
        _ => WeaponClass::Other,
    };
    DetectionEvent {
        event_id: String::new(),
        site_id: site.site_id.clone(),
        kind: EventKind::WeaponDetection {
            weapon_class,
            confidence,
        },
        observed_at: at,
        position,
    }
}

/// One event per line, the same JSON schema the hub's submit endpoint takes.
pub fn format_events(events: &[DetectionEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("event serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_events(text: &str) -> Result<Vec<DetectionEvent>, FixtureError> {
    let mut events = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let event =
            serde_json::from_str::<DetectionEvent>(trimmed).map_err(|e| FixtureError::Parse {
                line,
                message: e.to_string(),
            })?;
        events.push(event);
    }
    Ok(events)
}
