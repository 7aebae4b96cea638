//! PNG persistence for label rasters and masks.
//!
//! Label rasters are 8-bit single-channel PNGs where the pixel value is the label
//! id, with the legend in a sidecar JSON document. Masks are 8-bit single-channel
//! PNGs with 0 = keep and 255 = masked.

use std::fs;
use std::path::{Path, PathBuf};

use image::{GrayImage, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{BinaryMask, LabelRaster, Legend, MapKind, RasterError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Raster {
        path: PathBuf,
        #[source]
        source: RasterError,
    },
    #[error("{path}: mask pixel value {value} is neither 0 nor 255")]
    NonBinaryMask { path: PathBuf, value: u8 },
}

impl IoError {
    pub fn path(&self) -> &Path {
        match self {
            IoError::Io { path, .. }
            | IoError::Image { path, .. }
            | IoError::Json { path, .. }
            | IoError::Raster { path, .. }
            | IoError::NonBinaryMask { path, .. } => path,
        }
    }
}

/// Sidecar legend document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LegendFile {
    pub kind: MapKind,
    pub labels: Legend,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn image_err(path: &Path) -> impl FnOnce(image::ImageError) -> IoError + '_ {
    move |source| IoError::Image {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes pretty JSON with a trailing newline, creating parent directories.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|source| IoError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

fn ensure_parent(path: &Path) -> Result<(), IoError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    Ok(())
}

pub fn read_gray(path: &Path) -> Result<GrayImage, IoError> {
    Ok(image::open(path).map_err(image_err(path))?.into_luma8())
}

pub fn read_rgb(path: &Path) -> Result<RgbImage, IoError> {
    Ok(image::open(path).map_err(image_err(path))?.into_rgb8())
}

pub fn write_rgb(path: &Path, img: &RgbImage) -> Result<(), IoError> {
    ensure_parent(path)?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(image_err(path))
}

pub fn write_gray(path: &Path, img: &GrayImage) -> Result<(), IoError> {
    ensure_parent(path)?;
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(image_err(path))
}

pub fn mask_to_gray(mask: &BinaryMask) -> GrayImage {
    let data = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    GrayImage::from_raw(mask.width(), mask.height(), data).expect("buffer sized from mask")
}

pub fn write_mask(path: &Path, mask: &BinaryMask) -> Result<(), IoError> {
    write_gray(path, &mask_to_gray(mask))
}

pub fn read_mask(path: &Path) -> Result<BinaryMask, IoError> {
    let img = read_gray(path)?;
    let (w, h) = img.dimensions();
    let mut bits = Vec::with_capacity(img.as_raw().len());
    for &v in img.as_raw() {
        match v {
            0 => bits.push(false),
            255 => bits.push(true),
            value => {
                return Err(IoError::NonBinaryMask {
                    path: path.to_path_buf(),
                    value,
                })
            }
        }
    }
    BinaryMask::from_bits(w, h, bits).map_err(|source| IoError::Raster {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the label PNG and its legend sidecar.
pub fn write_label_raster(png: &Path, legend: &Path, raster: &LabelRaster) -> Result<(), IoError> {
    let img = GrayImage::from_raw(raster.width(), raster.height(), raster.labels().to_vec())
        .expect("buffer sized from raster");
    write_gray(png, &img)?;
    write_json(
        legend,
        &LegendFile {
            kind: raster.kind(),
            labels: raster.legend().clone(),
        },
    )
}

pub fn read_label_raster(png: &Path, legend: &Path) -> Result<LabelRaster, IoError> {
    let img = read_gray(png)?;
    let doc: LegendFile = read_json(legend)?;
    let (w, h) = img.dimensions();
    LabelRaster::new(w, h, doc.kind, img.into_raw(), doc.labels).map_err(|source| IoError::Raster {
        path: png.to_path_buf(),
        source,
    })
}

/// Legend sidecar path for a label PNG: `x.parts.png` -> `x.parts.json`.
pub fn legend_path_for(png: &Path) -> PathBuf {
    png.with_extension("json")
}
