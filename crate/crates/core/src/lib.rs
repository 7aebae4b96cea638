//! Instruction-driven virtual try-on: segmentation rasters, mask inference,
//! planning and execution against pluggable model backends.

mod names;

pub mod backends;
pub mod executor;
pub mod fixtures;
pub mod harness;
pub mod image_ref;
pub mod instruction;
pub mod masking;
pub mod metrics;
pub mod planner;
pub mod raster;
pub mod rules;

pub use image_ref::ImageRef;
