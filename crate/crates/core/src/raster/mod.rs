//! Label rasters, binary masks and the set/shape operations on them.
//!
//! All rasters are row-major with a top-left origin. Values are immutable once
//! built; every operation returns a new value.

mod label;
mod mask;
mod morph;
pub mod io;
pub mod taxonomy;

pub use label::{base_clothing_legend, body_legend, verify_partition, LabelRaster, Legend, LegendEntry, MapKind};
pub use mask::{BBox, BinaryMask};
pub use morph::{convex_fill, dilate, remove_center_stripe, DEFAULT_STRIPE_FRACTION};
pub use taxonomy::{BodyPart, ClothingCategory};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RasterError {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch { expected: (u32, u32), found: (u32, u32) },
    #[error("raster must have non-zero width and height")]
    ZeroSize,
    #[error("pixel buffer has {found} entries, expected {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("label {0} is not in the raster legend")]
    UnknownLabel(u8),
    #[error("pixel ({x}, {y}) has label {label} which is not in the legend")]
    LabelNotInLegend { label: u8, x: u32, y: u32 },
    #[error("invalid legend: {0}")]
    InvalidLegend(String),
    #[error("stripe anchor region is empty")]
    EmptyAnchor,
    #[error("stripe width fraction {0} must be in (0, 1)")]
    InvalidFraction(f64),
}
