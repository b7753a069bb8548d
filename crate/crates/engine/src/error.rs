use soundstage_core::assets::AssetError;
use soundstage_core::audiokit::AudioError;
use soundstage_core::model::ModelError;
use soundstage_core::templates::TemplateError;
use soundstage_core::vecmath::VecMathError;
use soundstage_providers::ProviderError;
use thiserror::Error;

use crate::schema::Violation;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("vector math: {0}")]
    VecMath(#[from] VecMathError),
    #[error("audio: {0}")]
    Audio(String),
    #[error("asset storage: {0}")]
    Asset(String),
    #[error("analysis failed after {attempts} attempts: {violation}")]
    AnalysisFailed { violation: Violation, attempts: u32 },
    #[error("refinement failed after {attempts} attempts: {violation}")]
    RefineFailed { violation: Violation, attempts: u32 },
    #[error("prompt expansion failed: {0}")]
    ExpansionFailed(String),
    #[error("visual anchor extraction failed: {0}")]
    AnchorExtractionFailed(String),
    #[error("thumbnail failed: {0}")]
    ThumbnailFailed(String),
    #[error("{what} needs at least {needed} inputs, got {got}")]
    Arity { what: &'static str, needed: usize, got: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported request: {0}")]
    Unsupported(String),
}

impl EngineError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::Provider(e) => e.code(),
            EngineError::Model(ModelError::NotFound { .. }) => "not_found",
            EngineError::Model(ModelError::DurationMismatch { .. }) => "duration_mismatch",
            EngineError::Model(ModelError::LineageCycle(_)) => "lineage_cycle",
            EngineError::Model(_) => "invalid_model",
            EngineError::Template(_) => "template_error",
            EngineError::VecMath(VecMathError::InsufficientData { .. }) => "insufficient_data",
            EngineError::VecMath(_) => "degenerate_input",
            EngineError::Audio(_) => "audio_error",
            EngineError::Asset(_) => "asset_error",
            EngineError::AnalysisFailed { .. } => "analysis_failed",
            EngineError::RefineFailed { .. } => "refine_failed",
            EngineError::ExpansionFailed(_) => "expansion_failed",
            EngineError::AnchorExtractionFailed(_) => "anchor_extraction_failed",
            EngineError::ThumbnailFailed(_) => "thumbnail_failed",
            EngineError::Arity { .. } => "arity",
            EngineError::Precondition(_) => "precondition_failed",
            EngineError::Config(_) => "invalid_config",
            EngineError::Unsupported(_) => "unsupported",
        }
    }

    /// The schema rule behind an analysis or refinement failure.
    pub fn violation(&self) -> Option<&Violation> {
        match self {
            EngineError::AnalysisFailed { violation, .. } | EngineError::RefineFailed { violation, .. } => {
                Some(violation)
            }
            _ => None,
        }
    }
}

impl From<AudioError> for EngineError {
    fn from(e: AudioError) -> Self {
        EngineError::Audio(e.to_string())
    }
}

impl From<AssetError> for EngineError {
    fn from(e: AssetError) -> Self {
        EngineError::Asset(e.to_string())
    }
}

pub type Result<T, E = EngineError> = std::result::Result<T, E>;
