//! Durable store: append-only log plus optional snapshot.
//!
//! The log is the source of truth; the snapshot only shortens recovery.
//! A snapshot carries a digest footer over its serialized state and is
//! ignored (with a full replay instead) when the footer does not verify.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::event::LogRecord;
use crate::log::{LogError, LogWriter, TailReport};
use crate::state::{ApplyOutcome, HubPolicies, HubState, StateError};

pub const SNAPSHOT_VERSION: u32 = 1;
const LOG_FILE: &str = "events.log";
const SNAPSHOT_FILE: &str = "snapshot.json";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error("store io failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot encode failure: {0}")]
    Encode(#[from] serde_json::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct SnapshotFile {
    version: u32,
    last_seq: u64,
    state: serde_json::Value,
    /// sha256 over the serialized `state` value, hex.
    digest: String,
}

/// What recovery did, for the operator's startup summary.
#[derive(Debug, Clone, Default)]
pub struct RecoveryReport {
    pub snapshot_used: bool,
    pub snapshot_rejected: bool,
    pub replayed_records: u64,
    pub truncated_bytes: u64,
    pub last_seq: u64,
}

/// Single-writer handle over one data directory.
pub struct Store {
    dir: PathBuf,
    log: LogWriter,
    state: HubState,
    policies: HubPolicies,
}

fn value_digest(value: &serde_json::Value) -> Result<String, serde_json::Error> {
    let bytes = serde_json::to_vec(value)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

impl Store {
    /// Open (creating if needed) and recover: load a verified snapshot when
    /// present, then replay the log tail. State afterwards equals a full
    /// replay from empty.
    pub fn open(dir: &Path, policies: HubPolicies) -> Result<(Self, RecoveryReport), StoreError> {
        fs::create_dir_all(dir)?;
        let mut report = RecoveryReport::default();

        let mut state = HubState::new(policies.dims);
        let snapshot_path = dir.join(SNAPSHOT_FILE);
        if snapshot_path.exists() {
            match Self::load_snapshot(&snapshot_path) {
                Ok((snap_state, last_seq)) => {
                    state = snap_state;
                    report.snapshot_used = true;
                    report.last_seq = last_seq;
                }
                Err(_) => {
                    report.snapshot_rejected = true;
                }
            }
        }

        let (log, records, tail): (LogWriter, Vec<LogRecord>, TailReport) =
            LogWriter::open(&dir.join(LOG_FILE))?;
        report.truncated_bytes = tail.truncated_bytes;

        let skip = state.last_seq;
        for (idx, record) in records.iter().enumerate() {
            let seq = idx as u64 + 1;
            if seq <= skip {
                continue;
            }
            state.apply(seq, record, &policies)?;
            report.replayed_records += 1;
        }
        report.last_seq = state.last_seq;

        Ok((
            Store {
                dir: dir.to_path_buf(),
                log,
                state,
                policies,
            },
            report,
        ))
    }

    fn load_snapshot(path: &Path) -> Result<(HubState, u64), StoreError> {
        let bytes = fs::read(path)?;
        let snap: SnapshotFile = serde_json::from_slice(&bytes)?;
        if snap.version != SNAPSHOT_VERSION {
            return Err(StoreError::State(StateError::Inconsistent(format!(
                "snapshot version {}",
                snap.version
            ))));
        }
        let digest = value_digest(&snap.state)?;
        if digest != snap.digest {
            return Err(StoreError::State(StateError::Inconsistent(
                "snapshot digest mismatch".into(),
            )));
        }
        let state: HubState = serde_json::from_value(snap.state)?;
        Ok((state, snap.last_seq))
    }

    /// Write the current state as a snapshot with a digest footer.
    pub fn write_snapshot(&self) -> Result<PathBuf, StoreError> {
        let state = serde_json::to_value(&self.state)?;
        let digest = value_digest(&state)?;
        let snap = SnapshotFile {
            version: SNAPSHOT_VERSION,
            last_seq: self.state.last_seq,
            state,
            digest,
        };
        let path = self.dir.join(SNAPSHOT_FILE);
        let tmp = self.dir.join(format!("{SNAPSHOT_FILE}.tmp"));
        fs::write(&tmp, serde_json::to_vec_pretty(&snap)?)?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Append a record durably, then apply it. The caller acknowledges only
    /// after this returns.
    pub fn commit(&mut self, record: &LogRecord) -> Result<(u64, ApplyOutcome), StoreError> {
        let seq = self.log.append(record)?;
        let outcome = self.state.apply(seq, record, &self.policies)?;
        Ok((seq, outcome))
    }

    pub fn state(&self) -> &HubState {
        &self.state
    }

    pub fn policies(&self) -> &HubPolicies {
        &self.policies
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}
