//! Command-line front end of tilebench: `run` trials, `analyze` them and
//! render a `report`.

pub mod analysis;
pub mod commands;
pub mod render;

pub use analysis::{analyze, AnalysisReport, AnalyzeOptions};
pub use commands::main_with;
