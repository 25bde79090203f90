//! Static bearer-token authentication.
//!
//! Console tokens map to a station scope (`"*"` for the supervisor scope);
//! detectors share one ingest token. An empty token table disables the
//! corresponding check, which keeps local development friction-free.

use axum::http::HeaderMap;

use vigil_core::config::AuthConfig;

use crate::error::ApiError;

/// What a console session is allowed to see.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Scope {
    All,
    Station(String),
}

impl Scope {
    pub fn covers(&self, station_id: &str) -> bool {
        match self {
            Scope::All => true,
            Scope::Station(s) => s == station_id,
        }
    }
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(axum::http::header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
}

pub fn check_ingest(auth: &AuthConfig, headers: &HeaderMap) -> Result<(), ApiError> {
    match &auth.ingest_token {
        None => Ok(()),
        Some(expected) => match bearer(headers) {
            Some(token) if token == expected => Ok(()),
            Some(_) => Err(ApiError::auth_failure("ingest token not recognized")),
            None => Err(ApiError::auth_failure("missing bearer token")),
        },
    }
}

pub fn console_scope(auth: &AuthConfig, headers: &HeaderMap) -> Result<Scope, ApiError> {
    if auth.console_tokens.is_empty() {
        return Ok(Scope::All);
    }
    let token = bearer(headers).ok_or_else(|| ApiError::auth_failure("missing bearer token"))?;
    match auth.console_tokens.get(token) {
        Some(scope) if scope == "*" => Ok(Scope::All),
        Some(scope) => Ok(Scope::Station(scope.clone())),
        None => Err(ApiError::auth_failure("console token not recognized")),
    }
}
