//! Deployment configuration: one TOML file shared by the hub and the CLI.
//!
//! Documented keys:
//!
//! ```toml
//! [identity]
//! dims = 128                   # embedding width
//! face_threshold = 0.8         # match requires score strictly above
//! fingerprint_threshold = 0.8
//!
//! [alarm]
//! confidence_gate = 0.5        # detections at or below are ignored
//! debounce_seconds = 120       # window for attaching repeat detections
//!
//! [delivery]
//! base_delay_ms = 2000         # first retry delay
//! backoff_factor = 2.0         # delay multiplier per attempt
//! max_attempts = 5             # then the notice is marked failed
//!
//! [hub]
//! bind = "127.0.0.1:8080"
//! data_dir = "data"
//! station_registry = "stations.txt"   # optional, imported at startup
//! stopwords = "stopwords.txt"         # optional, default list otherwise
//!
//! [summarizer]
//! default_ratio = 0.3
//!
//! [[sites]]
//! site_id = "site-1"
//! label = "Bank"
//!
//! [auth]
//! ingest_token = "detector-secret"    # optional; absent disables
//! [auth.console_tokens]               # token -> station scope ("*" = all)
//! "console-secret" = "*"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alarm::{AlarmPolicy, DEFAULT_CONFIDENCE_GATE, DEFAULT_DEBOUNCE_SECONDS};
use crate::event::Site;
use crate::geo::{GeoPoint, Station};
use crate::identity::{DEFAULT_EMBEDDING_DIMS, DEFAULT_MATCH_THRESHOLD};
use crate::state::HubPolicies;
use crate::summarize::DEFAULT_SUMMARY_RATIO;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("config parse failure: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("station registry line {line}: {message}")]
    StationRegistry { line: usize, message: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentityConfig {
    pub dims: usize,
    pub face_threshold: f64,
    pub fingerprint_threshold: f64,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        IdentityConfig {
            dims: DEFAULT_EMBEDDING_DIMS,
            face_threshold: DEFAULT_MATCH_THRESHOLD,
            fingerprint_threshold: DEFAULT_MATCH_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlarmConfig {
    pub confidence_gate: f64,
    pub debounce_seconds: i64,
}

impl Default for AlarmConfig {
    fn default() -> Self {
        AlarmConfig {
            confidence_gate: DEFAULT_CONFIDENCE_GATE,
            debounce_seconds: DEFAULT_DEBOUNCE_SECONDS,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeliveryConfig {
    pub base_delay_ms: u64,
    pub backoff_factor: f64,
    pub max_attempts: u32,
}

impl Default for DeliveryConfig {
    fn default() -> Self {
        DeliveryConfig {
            base_delay_ms: 2000,
            backoff_factor: 2.0,
            max_attempts: 5,
        }
    }
}

impl DeliveryConfig {
    /// Delay before retrying after the `attempt`-th failure (1-based):
    /// base * factor^(attempt-1).
    pub fn retry_delay_ms(&self, attempt: u32) -> u64 {
        let factor = self.backoff_factor.powi(attempt.saturating_sub(1) as i32);
        (self.base_delay_ms as f64 * factor) as u64
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HubConfig {
    pub bind: String,
    pub data_dir: PathBuf,
    pub station_registry: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
}

impl Default for HubConfig {
    fn default() -> Self {
        HubConfig {
            bind: "127.0.0.1:8080".to_string(),
            data_dir: PathBuf::from("data"),
            station_registry: None,
            stopwords: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SummarizerConfig {
    pub default_ratio: f64,
}

impl Default for SummarizerConfig {
    fn default() -> Self {
        SummarizerConfig {
            default_ratio: DEFAULT_SUMMARY_RATIO,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuthConfig {
    /// When set, detectors must present this bearer token to submit events.
    pub ingest_token: Option<String>,
    /// Console/subscriber tokens mapped to their station scope; "*" grants
    /// the all-stations supervisor scope. Empty map disables console auth.
    pub console_tokens: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub identity: IdentityConfig,
    pub alarm: AlarmConfig,
    pub delivery: DeliveryConfig,
    pub hub: HubConfig,
    pub summarizer: SummarizerConfig,
    pub sites: Vec<Site>,
    pub auth: AuthConfig,
}

impl AppConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)?;
        Ok(toml::from_str(&text)?)
    }

    pub fn policies(&self) -> HubPolicies {
        HubPolicies {
            dims: self.identity.dims,
            face_threshold: self.identity.face_threshold,
            fingerprint_threshold: self.identity.fingerprint_threshold,
            alarm: AlarmPolicy {
                confidence_gate: self.alarm.confidence_gate,
                debounce_seconds: self.alarm.debounce_seconds,
            },
            sites: self
                .sites
                .iter()
                .map(|s| (s.site_id.clone(), s.clone()))
                .collect(),
            max_delivery_attempts: self.delivery.max_attempts,
        }
    }
}

/// Parse the station registry import file: one station per line,
/// `station_id, label, lat, lon, delivery endpoint`. Blank lines and
/// `#` comments are skipped.
pub fn parse_station_registry(text: &str) -> Result<Vec<Station>, ConfigError> {
    let mut stations = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(ConfigError::StationRegistry {
                line,
                message: format!("expected 5 fields, got {}", fields.len()),
            });
        }
        let lat: f64 = fields[2].parse().map_err(|_| ConfigError::StationRegistry {
            line,
            message: format!("bad latitude {:?}", fields[2]),
        })?;
        let lon: f64 = fields[3].parse().map_err(|_| ConfigError::StationRegistry {
            line,
            message: format!("bad longitude {:?}", fields[3]),
        })?;
        let position = GeoPoint::new(lat, lon).map_err(|e| ConfigError::StationRegistry {
            line,
            message: e.to_string(),
        })?;
        stations.push(Station {
            station_id: fields[0].to_string(),
            label: fields[1].to_string(),
            position,
            delivery_endpoint: fields[4].to_string(),
        });
    }
    Ok(stations)
}

/// Render stations in the registry file format.
pub fn format_station_registry(stations: &[Station]) -> String {
    let mut out = String::new();
    for s in stations {
        out.push_str(&format!(
            "{}, {}, {}, {}, {}\n",
            s.station_id, s.label, s.position.lat, s.position.lon, s.delivery_endpoint
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let cfg = AppConfig::default();
        assert_eq!(cfg.identity.dims, 128);
        assert_eq!(cfg.identity.face_threshold, 0.8);
        assert_eq!(cfg.alarm.confidence_gate, 0.5);
        assert_eq!(cfg.alarm.debounce_seconds, 120);
        assert_eq!(cfg.delivery.base_delay_ms, 2000);
        assert_eq!(cfg.delivery.max_attempts, 5);
        assert_eq!(cfg.summarizer.default_ratio, 0.3);
    }

    #[test]
    fn retry_delays_follow_the_documented_schedule() {
        let d = DeliveryConfig::default();
        assert_eq!(d.retry_delay_ms(1), 2000);
        assert_eq!(d.retry_delay_ms(2), 4000);
        assert_eq!(d.retry_delay_ms(3), 8000);
        assert_eq!(d.retry_delay_ms(4), 16000);
    }

    #[test]
    fn parses_a_full_config() {
        let text = r#"
            [identity]
            dims = 16
            face_threshold = 0.85
            fingerprint_threshold = 0.8

            [alarm]
            confidence_gate = 0.6
            debounce_seconds = 60

            [hub]
            bind = "127.0.0.1:0"
            data_dir = "/tmp/vigil"

            [[sites]]
            site_id = "site-1"
            label = "Bank"

            [auth]
            ingest_token = "det-secret"
            [auth.console_tokens]
            "console-secret" = "*"
        "#;
        let cfg: AppConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.identity.dims, 16);
        assert_eq!(cfg.alarm.confidence_gate, 0.6);
        assert_eq!(cfg.sites.len(), 1);
        assert_eq!(cfg.auth.console_tokens["console-secret"], "*");
        let policies = cfg.policies();
        assert_eq!(policies.dims, 16);
        assert!(policies.sites.contains_key("site-1"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[identity]\ndimz = 128\n";
        assert!(toml::from_str::<AppConfig>(text).is_err());
    }

    #[test]
    fn station_registry_round_trips() {
        let text = "st-1, Central Police, 6.93, 79.86, http://localhost:9000/notices\n\
                    # comment line\n\
                    st-2, Harbor Post, 6.95, 79.84, noop:\n";
        let stations = parse_station_registry(text).unwrap();
        assert_eq!(stations.len(), 2);
        assert_eq!(stations[0].station_id, "st-1");
        assert_eq!(stations[0].label, "Central Police");
        assert_eq!(stations[1].delivery_endpoint, "noop:");
        let rendered = format_station_registry(&stations);
        let reparsed = parse_station_registry(&rendered).unwrap();
        assert_eq!(stations, reparsed);
    }

    #[test]
    fn station_registry_errors_carry_line_numbers() {
        let err = parse_station_registry("st-1, Central, not-a-number, 79.0, noop:").unwrap_err();
        match err {
            ConfigError::StationRegistry { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
