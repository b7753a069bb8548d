use std::time::Duration;

use soundstage_core::templates::TemplateError;
use thiserror::Error;

use crate::capabilities::Capability;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("provider lacks capability `{0}`")]
    Unsupported(Capability),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("request timed out after {0:?}")]
    Timeout(Duration),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("quota exceeded: {0}")]
    Quota(String),
    #[error("transient transport failure: {0}")]
    Transient(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("rejected by content policy: {0}")]
    ContentPolicy(String),
    #[error("malformed provider response: {0}")]
    Decode(String),
    #[error("asset storage: {0}")]
    Asset(String),
}

impl ProviderError {
    /// Worth retrying with backoff.
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::Transient(_))
    }

    pub fn code(&self) -> &'static str {
        match self {
            ProviderError::Unsupported(_) => "unsupported_capability",
            ProviderError::Template(_) => "template_error",
            ProviderError::InvalidRequest(_) => "invalid_request",
            ProviderError::Timeout(_) => "provider_timeout",
            ProviderError::Auth(_) => "provider_auth",
            ProviderError::Quota(_) => "provider_quota",
            ProviderError::Transient(_) | ProviderError::Transport(_) => "provider_transport",
            ProviderError::ContentPolicy(_) => "content_policy",
            ProviderError::Decode(_) => "provider_decode",
            ProviderError::Asset(_) => "asset_error",
        }
    }
}

pub type Result<T, E = ProviderError> = std::result::Result<T, E>;
