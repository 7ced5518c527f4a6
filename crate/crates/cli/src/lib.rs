//! Batch harness around the phase-space simulation crate: experiment
//! presets for the diffraction/apodisation benchmark figures, sampler
//! moment suites, CSV time series and metadata sidecars.

pub mod config;
pub mod experiments;
pub mod moments;
pub mod observables;

pub use config::{preset, RunConfig};
pub use experiments::{compare_against_oracle, run_experiment, ExperimentOutput};
pub use observables::ObservableRecord;
