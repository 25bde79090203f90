//! Core of the incident-detection and dispatch hub: embedding identity
//! matching with open-set enrollment, the silent-alarm state machine,
//! nearest-station dispatch, extractive report summarization, and the
//! event-sourced store everything replays from.

pub mod alarm;
pub mod config;
pub mod embedding;
pub mod event;
pub mod gallery_io;
pub mod geo;
pub mod identity;
pub mod log;
pub mod state;
pub mod store;
pub mod summarize;
pub mod suspect;

pub use alarm::{Alarm, AlarmAction, AlarmEngine, AlarmPolicy, AlarmState, WeaponClass, WeaponDetection};
pub use config::AppConfig;
pub use embedding::{cosine_similarity, Embedding, EmbeddingError};
pub use event::{Ack, DetectionEvent, EventKind, LogRecord, Site};
pub use geo::{haversine_km, nearest_station, GeoPoint, Notice, NoticeStatus, Station};
pub use identity::{Decision, Gallery, GalleryEntry, IdentityIndex, MatchResult, Modality};
pub use state::{ApplyOutcome, HubPolicies, HubState, IncidentRecord, StateError};
pub use store::{RecoveryReport, Store, StoreError};
pub use summarize::{summarize, Stopwords, Summary, SummaryTarget};
pub use suspect::SuspectRecord;
