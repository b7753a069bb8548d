//! Project, track and timeline model.

mod project;
mod types;

pub use project::{Fades, ModelError, Project, TrackFilter, DURATION_TOLERANCE_S, SCHEMA_VERSION};
pub use types::*;
