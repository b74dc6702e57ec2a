//! Command-line front end for `henon-lab-core`: scene files, deterministic
//! row-parallel rendering, graymap/CSV/JSON output and the invariant suite.

pub mod app;
pub mod config;
pub mod output;
pub mod render;
pub mod verify;

pub use app::run;
pub use config::{ConfigError, SceneConfig};
