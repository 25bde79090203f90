//! Append-only, crash-safe record log.
//!
//! Layout: an 8-byte header (4-byte magic + u32 LE version), then one frame
//! per record: u32 LE payload length, u32 LE FNV-1a checksum, JSON payload.
//! Appends are fsynced before the caller acknowledges anything. On open, a
//! torn or corrupt tail is truncated back to the last intact frame and
//! reported, never silently kept.

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

pub const LOG_MAGIC: [u8; 4] = *b"VGEL";
pub const LOG_VERSION: u32 = 1;

/// Frames longer than this are rejected as corrupt rather than allocated.
const MAX_FRAME_LEN: u32 = 16 * 1024 * 1024;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("log io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a log file (bad magic)")]
    BadMagic,
    #[error("unsupported log version {0}")]
    UnsupportedVersion(u32),
    #[error("record encode failure: {0}")]
    Encode(#[from] serde_json::Error),
}

/// What recovery found when scanning an existing log.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TailReport {
    /// Intact records read.
    pub records: u64,
    /// Bytes of torn/corrupt tail discarded, if any.
    pub truncated_bytes: u64,
}

fn fnv1a(bytes: &[u8]) -> u32 {
    let mut hash: u32 = 0x811c9dc5;
    for &b in bytes {
        hash ^= b as u32;
        hash = hash.wrapping_mul(0x0100_0193);
    }
    hash
}

/// Single-writer append handle. Sequence numbers are dense from 1.
pub struct LogWriter {
    file: File,
    path: PathBuf,
    next_seq: u64,
}

impl std::fmt::Debug for LogWriter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LogWriter")
            .field("path", &self.path)
            .field("next_seq", &self.next_seq)
            .finish()
    }
}

impl LogWriter {
    /// Open for append, creating the file (with header) when missing.
    /// Scans existing content, truncating any torn tail, and returns the
    /// scan report alongside the intact records.
    pub fn open<T: DeserializeOwned>(
        path: &Path,
    ) -> Result<(Self, Vec<T>, TailReport), LogError> {
        let mut file = OpenOptions::new()
            .create(true)
            .read(true)
            .write(true)
            .open(path)?;
        let len = file.metadata()?.len();
        if len == 0 {
            file.write_all(&LOG_MAGIC)?;
            file.write_all(&LOG_VERSION.to_le_bytes())?;
            file.sync_all()?;
            return Ok((
                LogWriter {
                    file,
                    path: path.to_path_buf(),
                    next_seq: 1,
                },
                Vec::new(),
                TailReport::default(),
            ));
        }

        let mut buf = Vec::with_capacity(len as usize);
        file.read_to_end(&mut buf)?;
        let (records, valid_end, report) = scan::<T>(&buf)?;
        if (valid_end as u64) < len {
            file.set_len(valid_end as u64)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;
        let next_seq = records.len() as u64 + 1;
        Ok((
            LogWriter {
                file,
                path: path.to_path_buf(),
                next_seq,
            },
            records,
            report,
        ))
    }

    /// Append one record and fsync. Only after this returns may the caller
    /// acknowledge the event that produced it.
    pub fn append<T: Serialize>(&mut self, record: &T) -> Result<u64, LogError> {
        let payload = serde_json::to_vec(record)?;
        let mut frame = Vec::with_capacity(payload.len() + 8);
        frame.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        frame.extend_from_slice(&fnv1a(&payload).to_le_bytes());
        frame.extend_from_slice(&payload);
        self.file.write_all(&frame)?;
        self.file.sync_data()?;
        let seq = self.next_seq;
        self.next_seq += 1;
        Ok(seq)
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

/// Read every intact record without taking the writer handle.
pub fn read_all<T: DeserializeOwned>(path: &Path) -> Result<(Vec<T>, TailReport), LogError> {
    let mut file = File::open(path)?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf)?;
    let (records, _, report) = scan::<T>(&buf)?;
    Ok((records, report))
}

/// Walk frames from the start; stop at the first torn or corrupt one.
/// Returns the records, the byte offset of the valid prefix, and a report.
fn scan<T: DeserializeOwned>(buf: &[u8]) -> Result<(Vec<T>, usize, TailReport), LogError> {
    if buf.len() < 8 {
        return Err(LogError::BadMagic);
    }
    if buf[0..4] != LOG_MAGIC {
        return Err(LogError::BadMagic);
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != LOG_VERSION {
        return Err(LogError::UnsupportedVersion(version));
    }
    let mut records = Vec::new();
    let mut pos = 8usize;
    loop {
        if pos == buf.len() {
            break;
        }
        if pos + 8 > buf.len() {
            break; // torn length/checksum prefix
        }
        let len = u32::from_le_bytes(buf[pos..pos + 4].try_into().unwrap());
        let checksum = u32::from_le_bytes(buf[pos + 4..pos + 8].try_into().unwrap());
        if len > MAX_FRAME_LEN {
            break; // garbage length
        }
        let start = pos + 8;
        let end = start + len as usize;
        if end > buf.len() {
            break; // torn payload
        }
        let payload = &buf[start..end];
        if fnv1a(payload) != checksum {
            break; // bit rot or partial overwrite
        }
        match serde_json::from_slice::<T>(payload) {
            Ok(r) => records.push(r),
            Err(_) => break,
        }
        pos = end;
    }
    let report = TailReport {
        records: records.len() as u64,
        truncated_bytes: (buf.len() - pos) as u64,
    };
    Ok((records, pos, report))
}
