//! Contracts for the external model roles (segmentation, try-on, VLM planning,
//! dummy garments) plus deterministic file-backed stubs and JSON-over-HTTP clients.

mod config;
mod remote;
mod stub;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{BackendConfig, Backends, RemoteConfig, SegmentationConfig, VlmConfig, VtoConfig};
pub use remote::{decode_png, encode_png, HttpClient, RemoteDummyGenerator, RemoteSegmenter, RemoteVlm, RemoteVto};
pub use stub::{DummyLibrary, DummyManifest, PasteThroughVto, ScriptedVlm, SidecarSegmenter};

use crate::image_ref::ImageRef;
use crate::raster::io::IoError;
use crate::raster::{verify_partition, BinaryMask, BodyPart, ClothingCategory, LabelRaster, MapKind};
use crate::rules::{Classification, GarmentSpec, RuleTable, StyleInstruction};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("{backend}: {message}")]
    Failed { backend: String, message: String },
    /// The backend answered, but with something that breaks its contract.
    #[error("{backend}: invalid response: {message}")]
    InvalidResponse { backend: String, message: String },
    #[error("{backend}: {source}")]
    Io {
        backend: String,
        #[source]
        source: IoError,
    },
}

impl BackendError {
    pub fn failed(backend: &str, message: impl Into<String>) -> Self {
        BackendError::Failed {
            backend: backend.into(),
            message: message.into(),
        }
    }

    pub fn invalid(backend: &str, message: impl Into<String>) -> Self {
        BackendError::InvalidResponse {
            backend: backend.into(),
            message: message.into(),
        }
    }

    pub fn io(backend: &str, source: IoError) -> Self {
        BackendError::Io {
            backend: backend.into(),
            source,
        }
    }

    pub fn backend(&self) -> &str {
        match self {
            BackendError::Failed { backend, .. }
            | BackendError::InvalidResponse { backend, .. }
            | BackendError::Io { backend, .. } => backend,
        }
    }
}

/// Body-parts and clothing maps of one image, both partitioning the figure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegmentationResult {
    pub body: LabelRaster,
    pub clothing: LabelRaster,
    pub figure: BinaryMask,
}

impl SegmentationResult {
    /// Checks map kinds, dimensions and the partition invariant.
    pub fn new(body: LabelRaster, clothing: LabelRaster) -> Result<Self, String> {
        if body.kind() != MapKind::BodyParts || clothing.kind() != MapKind::Clothing {
            return Err("expected a body-parts map and a clothing map".into());
        }
        if body.dims() != clothing.dims() {
            return Err(format!(
                "body map is {:?} but clothing map is {:?}",
                body.dims(),
                clothing.dims()
            ));
        }
        let figure = body.figure();
        if !verify_partition(&clothing, &figure) {
            return Err("clothing map does not partition the figure".into());
        }
        Ok(Self { body, clothing, figure })
    }

    pub fn dims(&self) -> (u32, u32) {
        self.body.dims()
    }
}

pub trait SegmentationProvider: Send + Sync {
    fn name(&self) -> &str;
    fn segment(&self, image: &ImageRef) -> Result<SegmentationResult, BackendError>;
}

/// One single-garment inpainting call.
#[derive(Clone, Debug)]
pub struct TryOnRequest {
    pub person: ImageRef,
    pub garment: ImageRef,
    pub mask: BinaryMask,
    /// Clothing-map category and name of the garment being put on.
    pub category: ClothingCategory,
    pub garment_name: String,
}

pub trait VtoBackend: Send + Sync {
    fn name(&self) -> &str;
    /// Writes the try-on result to `out` (a PNG path) and returns its reference.
    fn try_on(&self, req: &TryOnRequest, out: &Path) -> Result<ImageRef, BackendError>;
}

/// Ordering plus per-garment style fields proposed by a VLM. Validated before use.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VlmProposal {
    pub order: Vec<String>,
    #[serde(default)]
    pub instructions: BTreeMap<String, StyleInstruction>,
}

pub trait VlmPlanner: Send + Sync {
    fn name(&self) -> &str;
    fn propose(
        &self,
        garments: &[GarmentSpec],
        instruction: &str,
        person: &ImageRef,
    ) -> Result<VlmProposal, BackendError>;
}

pub trait DummyGarmentProvider: Send + Sync {
    /// A garment of `classification` whose default rule trace leaves every part
    /// in `required_exposure` out of the mask.
    fn fetch(
        &self,
        classification: Classification,
        required_exposure: &BTreeSet<BodyPart>,
        rules: &RuleTable,
    ) -> Result<GarmentSpec, BackendError>;
}

pub trait DummyGenerator: Send + Sync {
    fn generate(
        &self,
        classification: Classification,
        required_exposure: &BTreeSet<BodyPart>,
        out_dir: &Path,
    ) -> Result<GarmentSpec, BackendError>;
}

/// True iff `g` is of `classification` and its default-instruction parts avoid `exposure`.
pub fn dummy_fits(
    g: &GarmentSpec,
    classification: Classification,
    exposure: &BTreeSet<BodyPart>,
    rules: &RuleTable,
) -> bool {
    g.classification == classification
        && rules
            .evaluate(g, &StyleInstruction::default())
            .is_ok_and(|o| o.parts.is_disjoint(exposure))
}
