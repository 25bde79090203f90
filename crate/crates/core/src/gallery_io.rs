//! Gallery import/export in the line format:
//! `key, suspect_id, modality, v1, v2, ..., v<dims>`.

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::embedding::Embedding;
use crate::identity::{Gallery, GalleryEntry, IdentityError, Modality};

#[derive(Debug, Error)]
pub enum GalleryIoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Entry {
        line: usize,
        #[source]
        source: IdentityError,
    },
}

pub fn export_gallery(gallery: &Gallery) -> String {
    let mut out = String::new();
    for entry in gallery.entries() {
        out.push_str(&entry.key);
        out.push_str(", ");
        out.push_str(&entry.suspect_id);
        out.push_str(", ");
        out.push_str(&entry.modality.to_string());
        for v in entry.embedding.values() {
            out.push_str(", ");
            out.push_str(&format!("{v}"));
        }
        out.push('\n');
    }
    out
}

/// Parse entries into a fresh gallery. Vectors are re-normalized on the way
/// in, so hand-edited files cannot smuggle in non-unit entries.
pub fn import_gallery(
    text: &str,
    modality: Modality,
    dims: usize,
    enrolled_at: DateTime<Utc>,
) -> Result<Gallery, GalleryIoError> {
    let mut gallery = Gallery::new(modality, dims);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 3 + dims {
            return Err(GalleryIoError::Parse {
                line,
                message: format!("expected {} fields, got {}", 3 + dims, fields.len()),
            });
        }
        let entry_modality = match fields[2] {
            "face" => Modality::Face,
            "fingerprint" => Modality::Fingerprint,
            other => {
                return Err(GalleryIoError::Parse {
                    line,
                    message: format!("unknown modality {other:?}"),
                })
            }
        };
        if entry_modality != modality {
            return Err(GalleryIoError::Parse {
                line,
                message: format!("modality {entry_modality} in a {modality} gallery"),
            });
        }
        let mut values = Vec::with_capacity(dims);
        for f in &fields[3..] {
            values.push(f.parse::<f64>().map_err(|_| GalleryIoError::Parse {
                line,
                message: format!("bad value {f:?}"),
            })?);
        }
        let embedding =
            Embedding::normalize(&values, dims).map_err(|e| GalleryIoError::Parse {
                line,
                message: e.to_string(),
            })?;
        gallery
            .insert(GalleryEntry {
                key: fields[0].to_string(),
                suspect_id: fields[1].to_string(),
                modality,
                embedding,
                enrolled_at,
            })
            .map_err(|source| GalleryIoError::Entry { line, source })?;
    }
    Ok(gallery)
}
