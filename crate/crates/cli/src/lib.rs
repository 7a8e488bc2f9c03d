//! Command-line and HTTP front ends for [`kgqa`].

pub mod config;
pub mod service;

pub use config::{load_config, parse_config, ConfigError};
pub use service::{router, AppState, RequestLog};
