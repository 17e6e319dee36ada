//! Spatio-temporal context (STC) visual tracking.
//!
//! The tracker learns a spatial context kernel each frame by deconvolving a
//! designed confidence map by the Gaussian-weighted context window, blends it
//! into a spatio-temporal model, and detects the target at the peak of the
//! model convolved with the next frame's context.

pub mod context_model;
pub mod error;
pub mod metrics;
pub mod sequence_io;
pub mod spectral;
pub mod synth;
pub mod tracker;

pub use context_model::{ConfidenceMap, Pixel};
pub use error::{Result, StcError};
pub use sequence_io::Frame;
pub use spectral::{ComplexGrid, RealGrid};
pub use tracker::{BoundingBox, Tracker, TrackerParams};
