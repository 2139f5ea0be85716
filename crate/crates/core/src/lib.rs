//! Dense frame representations for event-camera streams: signed histograms,
//! leaky integration surfaces and locally adaptive decay surfaces, along with
//! annotation cleaning, evaluation metrics and timing utilities.

pub mod config;
pub mod events;
pub mod grid;
pub mod spectral;
pub mod surfaces;
pub mod metrics;
pub mod annotations;
pub mod tensor;
pub mod render;
pub mod manifest;
pub mod bench;
