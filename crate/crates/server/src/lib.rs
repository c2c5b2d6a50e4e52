//! HTTP service and command-line front end for the question answering
//! pipeline in `kgqa-core`.

pub mod api;
pub mod commands;
pub mod config;

pub use api::{router, AppState};
pub use config::{BackendConfig, Config, ConfigError};
