//! Suspect dossiers.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

/// Identity dossier. Auto-enrolled fingerprints get a placeholder name
/// (`UNIDENTIFIED-<n>`) until an operator fills in the details.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuspectRecord {
    pub suspect_id: String,
    pub name: String,
    /// Unknown for auto-enrolled records.
    pub age: Option<u32>,
    /// National ID card number, if known.
    pub national_id: Option<String>,
    pub created_at: DateTime<Utc>,
}

impl SuspectRecord {
    /// Placeholder record for a fingerprint that matched nothing.
    /// `n` comes from a monotonically increasing counter so replays
    /// produce identical names.
    pub fn unidentified(n: u64, created_at: DateTime<Utc>) -> Self {
        SuspectRecord {
            suspect_id: format!("auto-{n:06}"),
            name: format!("UNIDENTIFIED-{n}"),
            age: None,
            national_id: None,
            created_at,
        }
    }
}
