//! Experiment configuration, pipelines, sweeps and CSV output.

mod config;
mod distance;
mod eye;
mod pipeline;
mod sampling;
mod sweep;

pub use config::{
    DirectPhase, DistanceSearch, ExperimentConfig, EyeOptions, PipelineMode, Seeds, SweepAxis, DIRECT_PHASES, PRESETS,
};
pub use distance::{distance_to_fec, relative_gain, write_distance_csv, DistanceResult};
pub use eye::{eye_diagram, write_eye_csv, write_histogram_csv, EyeDiagram};
pub use pipeline::{
    link_output, run_pipeline, run_pipeline_with, sampled_inputs, score_readout, LinkCache, LinkOutput, Score, Stream,
};
pub use sampling::sample_bits;
pub use sweep::{benchmark, sweep, RowOutcome, SweepResult, SweepRow, SCHEMA_VERSION};

use crate::fiber::FiberError;
use crate::readout::ReadoutError;
use crate::reservoir::ReservoirError;
use crate::signal::SignalError;

/// Failure of one experiment, labelled with the stage that raised it.
#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("link ({stream} stream): {source}")]
    Link {
        stream: Stream,
        #[source]
        source: FiberError,
    },
    #[error("sampling ({stream} stream): {source}")]
    Sampling {
        stream: Stream,
        #[source]
        source: SignalError,
    },
    #[error("reservoir ({stream} stream): {source}")]
    Reservoir {
        stream: Stream,
        #[source]
        source: ReservoirError,
    },
    #[error("readout ({stage}): {source}")]
    Readout {
        stage: &'static str,
        #[source]
        source: ReadoutError,
    },
    #[error("distance search: {0}")]
    Distance(String),
    #[error("output {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("output {path}: {message}")]
    Csv { path: String, message: String },
}

impl HarnessError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn csv(path: &std::path::Path, message: impl std::fmt::Display) -> Self {
        Self::Csv {
            path: path.display().to_string(),
            message: message.to_string(),
        }
    }
}
