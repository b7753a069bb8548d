//! Project storage, background jobs, the HTTP API and the `soundstage`
//! command line.

pub mod api;
pub mod app;
pub mod cli;
pub mod config;
pub mod error;
pub mod eval;
pub mod jobs;
pub mod storage;

pub use app::App;
pub use config::Config;
pub use error::{ErrorBody, ServiceError};
