//! File formats, the denoising pipeline driver and evaluation metrics on
//! top of [`pcdenoise_core`].

pub mod eval;
pub mod io;
pub mod pipeline;

pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, PipelineOutput, RunReport};
