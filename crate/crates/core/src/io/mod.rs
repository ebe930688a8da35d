//! Configuration, file formats and plot output.

mod config;
pub mod events;
pub mod grid;
mod manifest;
pub mod report;
pub mod tables;

pub use config::{
    AnalysisConfig, CalibrationMode, CharacterizeConfig, EventFormat, RunConfig, SimulateConfig, SpectrumConfig,
    StateConfig,
};
pub use events::{read_events, write_events};
pub use grid::{read_spectrum, write_spectrum, GridFile};
pub use manifest::{now_utc, FileDigest, RunManifest, MANIFEST_FILE};
