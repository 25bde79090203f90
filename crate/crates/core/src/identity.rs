//! Gallery matching: threshold-gated open-set identification with
//! auto-enrollment for fingerprints.
//!
//! A gallery is the enrolled embedding set for one modality. Matching is a
//! linear scan for the best cosine score; the decision is `Match` only when
//! that score strictly exceeds the threshold, otherwise `Unknown`. Unknown
//! fingerprint probes are enrolled on the spot; unknown faces are not.

use std::collections::BTreeMap;
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embedding::{cosine_similarity, Embedding, EmbeddingError};
use crate::suspect::SuspectRecord;

/// Similarity threshold shared by both modalities unless configured apart.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.8;
/// Conventional compact embedding width; a deployment config in practice.
pub const DEFAULT_EMBEDDING_DIMS: usize = 128;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IdentityError {
    #[error(transparent)]
    Embedding(#[from] EmbeddingError),
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("gallery key {0:?} already enrolled")]
    DuplicateKey(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modality {
    Face,
    Fingerprint,
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modality::Face => write!(f, "face"),
            Modality::Fingerprint => write!(f, "fingerprint"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GalleryEntry {
    pub key: String,
    pub suspect_id: String,
    pub modality: Modality,
    pub embedding: Embedding,
    pub enrolled_at: DateTime<Utc>,
}

/// Outcome of probing a gallery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "decision", rename_all = "snake_case")]
pub enum Decision {
    Match { suspect_id: String, key: String },
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    #[serde(flatten)]
    pub decision: Decision,
    /// Best cosine score over the gallery; -1 when the gallery is empty.
    pub best_score: f64,
    pub threshold_used: f64,
}

impl MatchResult {
    pub fn is_match(&self) -> bool {
        matches!(self.decision, Decision::Match { .. })
    }
}

/// Enrolled embeddings for one modality, keyed by entry key.
///
/// Keys are ordered, which makes the equal-score tie rule (smallest key
/// wins) fall out of plain iteration order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Gallery {
    modality: Modality,
    dims: usize,
    entries: BTreeMap<String, GalleryEntry>,
}

impl Gallery {
    pub fn new(modality: Modality, dims: usize) -> Self {
        Gallery {
            modality,
            dims,
            entries: BTreeMap::new(),
        }
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &GalleryEntry> {
        self.entries.values()
    }

    pub fn get(&self, key: &str) -> Option<&GalleryEntry> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, entry: GalleryEntry) -> Result<(), IdentityError> {
        if entry.embedding.dims() != self.dims {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dims,
                got: entry.embedding.dims(),
            }
            .into());
        }
        if self.entries.contains_key(&entry.key) {
            return Err(IdentityError::DuplicateKey(entry.key));
        }
        self.entries.insert(entry.key.clone(), entry);
        Ok(())
    }

    /// Linear scan for the best-scoring entry. `Match` requires the best
    /// score to strictly exceed `threshold`; ties on the score go to the
    /// lexicographically smallest key. An empty gallery reports -1.
    pub fn match_probe(
        &self,
        probe: &Embedding,
        threshold: f64,
    ) -> Result<MatchResult, IdentityError> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(IdentityError::InvalidThreshold(threshold));
        }
        if probe.dims() != self.dims {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dims,
                got: probe.dims(),
            }
            .into());
        }
        let mut best_score = -1.0f64;
        let mut best: Option<&GalleryEntry> = None;
        for entry in self.entries.values() {
            let score = cosine_similarity(probe, &entry.embedding)?;
            // Strict > keeps the first (smallest) key on equal scores.
            if score > best_score || best.is_none() {
                best_score = score;
                best = Some(entry);
            }
        }
        let decision = match best {
            Some(entry) if best_score > threshold => Decision::Match {
                suspect_id: entry.suspect_id.clone(),
                key: entry.key.clone(),
            },
            _ => Decision::Unknown,
        };
        Ok(MatchResult {
            decision,
            best_score,
            threshold_used: threshold,
        })
    }
}

/// A fingerprint probe that matched nothing and was enrolled on the spot.
#[derive(Debug, Clone, PartialEq)]
pub struct Enrollment {
    pub key: String,
    pub suspect: SuspectRecord,
    /// True when the suspect record was freshly created rather than hinted.
    pub suspect_is_new: bool,
}

/// Both modality galleries plus the counters that make key and placeholder
/// allocation deterministic under replay.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityIndex {
    pub face: Gallery,
    pub fingerprint: Gallery,
    next_fingerprint_key: u64,
    next_unidentified: u64,
}

impl IdentityIndex {
    pub fn new(dims: usize) -> Self {
        IdentityIndex {
            face: Gallery::new(Modality::Face, dims),
            fingerprint: Gallery::new(Modality::Fingerprint, dims),
            next_fingerprint_key: 1,
            next_unidentified: 1,
        }
    }

    pub fn gallery(&self, modality: Modality) -> &Gallery {
        match modality {
            Modality::Face => &self.face,
            Modality::Fingerprint => &self.fingerprint,
        }
    }

    pub fn gallery_mut(&mut self, modality: Modality) -> &mut Gallery {
        match modality {
            Modality::Face => &mut self.face,
            Modality::Fingerprint => &mut self.fingerprint,
        }
    }

    /// Face identification never enrolls; the caller records an
    /// unidentified sighting on `Unknown`.
    pub fn identify_face(
        &self,
        probe: &Embedding,
        threshold: f64,
    ) -> Result<MatchResult, IdentityError> {
        self.face.match_probe(probe, threshold)
    }

    /// Fingerprint identification with open-set auto-enrollment: an
    /// `Unknown` probe is added to the gallery, bound to `suspect_hint`
    /// when given, otherwise to a fresh placeholder suspect. The caller
    /// persists any new suspect record returned in the [`Enrollment`].
    pub fn identify_fingerprint(
        &mut self,
        probe: &Embedding,
        threshold: f64,
        suspect_hint: Option<&SuspectRecord>,
        now: DateTime<Utc>,
    ) -> Result<(MatchResult, Option<Enrollment>), IdentityError> {
        let result = self.fingerprint.match_probe(probe, threshold)?;
        if result.is_match() {
            return Ok((result, None));
        }
        let key = format!("fpr-{:06}", self.next_fingerprint_key);
        self.next_fingerprint_key += 1;
        let (suspect, suspect_is_new) = match suspect_hint {
            Some(s) => (s.clone(), false),
            None => {
                let s = SuspectRecord::unidentified(self.next_unidentified, now);
                self.next_unidentified += 1;
                (s, true)
            }
        };
        self.fingerprint.insert(GalleryEntry {
            key: key.clone(),
            suspect_id: suspect.suspect_id.clone(),
            modality: Modality::Fingerprint,
            embedding: probe.clone(),
            enrolled_at: now,
        })?;
        Ok((
            result,
            Some(Enrollment {
                key,
                suspect,
                suspect_is_new,
            }),
        ))
    }
}
