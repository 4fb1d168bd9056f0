//! Pipeline driver, the Nash reproduction and the randomized differential
//! suites behind the `atlscpref` binary.

pub mod nash;
pub mod pipeline;
pub mod suite;

pub use nash::{repro_nash, NashReport};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, Stage, StageOutput, Target};
