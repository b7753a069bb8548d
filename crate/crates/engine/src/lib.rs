//! Generation, analysis, thumbnail and refinement pipelines over pluggable providers.

pub mod analysis;
mod ask;
pub mod error;
pub mod expander;
pub mod refiner;
pub mod schema;
pub mod thumbnailer;

pub use ask::{seconds_text, DEFAULT_RETRIES};
pub use error::{EngineError, Result};
pub use expander::{run_expansion, ExpansionConfig, ExpansionOutcome, GenerationRequest};
pub use refiner::{blend, edit, vary, RefineConfig, RefineOutcome, RefinePlan};
pub use thumbnailer::{MusicAttributes, ThumbnailSpec};
