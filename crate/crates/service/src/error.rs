use serde::{Deserialize, Serialize};
use serde_json::Value;
use soundstage_core::assets::AssetError;
use soundstage_core::mapper::MapError;
use soundstage_core::model::ModelError;
use soundstage_engine::EngineError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServiceError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{kind} not found: {id}")]
    NotFound { kind: &'static str, id: String },
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("the map needs at least {needed} tracks, the project has {got}")]
    InsufficientTracks { needed: usize, got: usize },
    #[error("map projection failed: {0}")]
    Map(String),
    #[error("storage: {0}")]
    Storage(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("job queue closed")]
    Shutdown,
}

/// Wire form of every error: `{code, message, details}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
    #[serde(default)]
    pub details: Value,
}

impl ServiceError {
    pub fn code(&self) -> &'static str {
        match self {
            ServiceError::Engine(e) => e.code(),
            ServiceError::NotFound { .. } => "not_found",
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::InsufficientTracks { .. } => "insufficient_tracks",
            ServiceError::Map(_) => "map_failed",
            ServiceError::Storage(_) => "storage_error",
            ServiceError::Config(_) => "invalid_config",
            ServiceError::Shutdown => "shutting_down",
        }
    }

    /// HTTP status for the error.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::NotFound { .. } => 404,
            ServiceError::BadRequest(_) | ServiceError::Config(_) => 400,
            ServiceError::InsufficientTracks { .. } => 409,
            ServiceError::Map(_) => 422,
            ServiceError::Storage(_) => 500,
            ServiceError::Shutdown => 503,
            ServiceError::Engine(e) => match e.code() {
                "not_found" => 404,
                "duration_mismatch" | "lineage_cycle" | "precondition_failed" => 409,
                "invalid_config" | "arity" | "unsupported" | "unsupported_capability" | "invalid_request" => 400,
                "analysis_failed" | "refine_failed" | "expansion_failed" | "anchor_extraction_failed"
                | "thumbnail_failed" | "provider_decode" | "provider_transport" | "provider_auth"
                | "provider_quota" | "content_policy" => 502,
                "provider_timeout" => 504,
                _ => 500,
            },
        }
    }

    pub fn details(&self) -> Value {
        match self {
            ServiceError::Engine(e) => match e.violation() {
                Some(v) => serde_json::json!({
                    "rule": v.rule.as_str(),
                    "violation": v.message,
                }),
                None => Value::Null,
            },
            ServiceError::NotFound { kind, id } => serde_json::json!({ "kind": kind, "id": id }),
            ServiceError::InsufficientTracks { needed, got } => serde_json::json!({ "needed": needed, "got": got }),
            _ => Value::Null,
        }
    }

    pub fn body(&self) -> ErrorBody {
        ErrorBody { code: self.code().to_string(), message: self.to_string(), details: self.details() }
    }

    pub fn not_found(kind: &'static str, id: impl ToString) -> Self {
        ServiceError::NotFound { kind, id: id.to_string() }
    }
}

impl From<ModelError> for ServiceError {
    fn from(e: ModelError) -> Self {
        ServiceError::Engine(e.into())
    }
}

impl From<AssetError> for ServiceError {
    fn from(e: AssetError) -> Self {
        match e {
            AssetError::NotFound(id) => ServiceError::not_found("asset", id),
            other => ServiceError::Storage(other.to_string()),
        }
    }
}

impl From<MapError> for ServiceError {
    fn from(e: MapError) -> Self {
        match e {
            MapError::NotFound(id) => ServiceError::not_found("track", id),
            other => ServiceError::Map(other.to_string()),
        }
    }
}

impl From<std::io::Error> for ServiceError {
    fn from(e: std::io::Error) -> Self {
        ServiceError::Storage(e.to_string())
    }
}

pub type Result<T, E = ServiceError> = std::result::Result<T, E>;
