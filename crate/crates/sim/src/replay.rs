//! Replay client: submits fixture events to a running hub and reports the
//! acknowledgments.
//!
//! Default mode submits in global file order over one connection, which
//! keeps hub-assigned ids reproducible run to run. Per-site mode opens one
//! task per site and preserves only per-site order.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use vigil_core::event::{Ack, DetectionEvent};

use crate::fixture::FixtureError;

#[derive(Debug, Error)]
pub enum ReplayError {
    #[error(transparent)]
    Fixture(#[from] FixtureError),
    #[error("hub rejected event {event_id} at line {line}: {status} {body}")]
    Rejected {
        line: usize,
        event_id: String,
        status: u16,
        body: String,
    },
    #[error("connection lost and retries exhausted: {0}")]
    ConnectionLost(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayEntry {
    pub line: usize,
    pub event_id: String,
    pub accepted: bool,
    pub dedup: bool,
    pub outcome: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ReplayReport {
    pub entries: Vec<ReplayEntry>,
    pub submitted: usize,
    pub dedup_acks: usize,
    pub alarms_triggered: usize,
}

impl ReplayReport {
    fn push(&mut self, entry: ReplayEntry) {
        self.submitted += 1;
        if entry.dedup {
            self.dedup_acks += 1;
        }
        if entry.outcome.starts_with("alarm triggered") {
            self.alarms_triggered += 1;
        }
        self.entries.push(entry);
    }

    /// Line-oriented rendering, free of volatile values so runs against the
    /// same fixture and hub state compare byte for byte.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let flag = if e.dedup {
                "dedup"
            } else if e.accepted {
                "ok"
            } else {
                "rejected"
            };
            out.push_str(&format!(
                "{:>5} {} {} {}\n",
                e.line, e.event_id, flag, e.outcome
            ));
        }
        out.push_str(&format!(
            "events={} dedup={} alarms={}\n",
            self.submitted, self.dedup_acks, self.alarms_triggered
        ));
        out
    }
}

#[derive(Debug, Clone)]
pub struct ReplayOptions {
    pub hub_url: String,
    /// Scales inter-event gaps: 0 disables pacing entirely; 2.0 runs the
    /// timeline at double speed.
    pub speed: f64,
    pub token: Option<String>,
    /// One concurrent stream per site instead of global order.
    pub per_site: bool,
}

pub struct ReplayClient {
    client: reqwest::Client,
    options: ReplayOptions,
}

impl ReplayClient {
    pub fn new(options: ReplayOptions) -> Self {
        ReplayClient {
            client: reqwest::Client::new(),
            options,
        }
    }

    pub async fn replay(&self, events: &[DetectionEvent]) -> Result<ReplayReport, ReplayError> {
        if self.options.per_site {
            self.replay_per_site(events).await
        } else {
            self.replay_ordered(events).await
        }
    }

    async fn replay_ordered(
        &self,
        events: &[DetectionEvent],
    ) -> Result<ReplayReport, ReplayError> {
        let mut report = ReplayReport::default();
        let mut prev_at = None;
        for (idx, event) in events.iter().enumerate() {
            self.pace(prev_at, event).await;
            prev_at = Some(event.observed_at);
            let ack = self.submit_with_resume(idx + 1, event).await?;
            report.push(ReplayEntry {
                line: idx + 1,
                event_id: event.event_id.clone(),
                accepted: ack.accepted,
                dedup: ack.dedup,
                outcome: ack.outcome,
            });
        }
        Ok(report)
    }

    async fn replay_per_site(
        &self,
        events: &[DetectionEvent],
    ) -> Result<ReplayReport, ReplayError> {
        let mut per_site: BTreeMap<String, Vec<(usize, DetectionEvent)>> = BTreeMap::new();
        for (idx, e) in events.iter().enumerate() {
            per_site
                .entry(e.site_id.clone())
                .or_default()
                .push((idx + 1, e.clone()));
        }
        let mut handles = Vec::new();
        for (_, site_events) in per_site {
            let client = self.clone_for_task();
            handles.push(tokio::spawn(async move {
                let mut entries = Vec::new();
                let mut prev_at = None;
                for (line, event) in &site_events {
                    client.pace(prev_at, event).await;
                    prev_at = Some(event.observed_at);
                    let ack = client.submit_with_resume(*line, event).await?;
                    entries.push(ReplayEntry {
                        line: *line,
                        event_id: event.event_id.clone(),
                        accepted: ack.accepted,
                        dedup: ack.dedup,
                        outcome: ack.outcome,
                    });
                }
                Ok::<_, ReplayError>(entries)
            }));
        }
        let mut all = Vec::new();
        for h in handles {
            all.extend(h.await.expect("replay task")?)
        }
        all.sort_by_key(|e| e.line);
        let mut report = ReplayReport::default();
        for entry in all {
            report.push(entry);
        }
        Ok(report)
    }

    fn clone_for_task(&self) -> ReplayClient {
        ReplayClient {
            client: self.client.clone(),
            options: self.options.clone(),
        }
    }

    async fn pace(&self, prev: Option<chrono::DateTime<chrono::Utc>>, e: &DetectionEvent) {
        if self.options.speed <= 0.0 {
            return;
        }
        if let Some(prev) = prev {
            let gap_ms = (e.observed_at - prev).num_milliseconds().max(0) as f64;
            let scaled = gap_ms / self.options.speed;
            if scaled >= 1.0 {
                tokio::time::sleep(Duration::from_millis(scaled as u64)).await;
            }
        }
    }

    /// Submit one event, retrying through connection loss. Resubmission is
    /// safe: the hub deduplicates on event_id.
    async fn submit_with_resume(
        &self,
        line: usize,
        event: &DetectionEvent,
    ) -> Result<Ack, ReplayError> {
        let url = format!("{}/api/events", self.options.hub_url.trim_end_matches('/'));
        let mut last_error = String::new();
        for attempt in 0..5 {
            if attempt > 0 {
                tokio::time::sleep(Duration::from_millis(100 * (1 << attempt))).await;
            }
            let mut request = self.client.post(&url).json(event);
            if let Some(token) = &self.options.token {
                request = request.bearer_auth(token);
            }
            match request.send().await {
                Ok(response) => {
                    let status = response.status();
                    if status.is_success() {
                        let ack: Ack = response.json().await.map_err(|e| {
                            ReplayError::ConnectionLost(format!("bad ack body: {e}"))
                        })?;
                        return Ok(ack);
                    }
                    let body = response.text().await.unwrap_or_default();
                    return Err(ReplayError::Rejected {
                        line,
                        event_id: event.event_id.clone(),
                        status: status.as_u16(),
                        body,
                    });
                }
                Err(e) => {
                    last_error = e.to_string();
                }
            }
        }
        Err(ReplayError::ConnectionLost(last_error))
    }
}
