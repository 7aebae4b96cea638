//! JSON-over-HTTP clients.
//!
//! Every call POSTs `{"request_id", "model_id", "payload"}` and expects
//! `{"request_id", "ok", "payload" | "error"}` back. Images travel as
//! base64-encoded PNG. Responses are validated with the same checks the stubs
//! are held to.

use std::collections::BTreeSet;
use std::io::Cursor;
use std::path::Path;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use image::{DynamicImage, GrayImage, ImageFormat};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::RemoteConfig;
use super::{
    BackendError, DummyGenerator, SegmentationProvider, SegmentationResult, TryOnRequest,
    VlmPlanner, VlmProposal, VtoBackend,
};
use crate::image_ref::ImageRef;
use crate::raster::io::{self, mask_to_gray};
use crate::raster::{BodyPart, LabelRaster, Legend, MapKind};
use crate::rules::{Classification, GarmentSpec};

pub struct HttpClient {
    name: String,
    config: RemoteConfig,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct Envelope {
    request_id: String,
    ok: bool,
    #[serde(default)]
    payload: Value,
    #[serde(default)]
    error: Option<String>,
}

impl HttpClient {
    pub fn new(name: &str, config: RemoteConfig) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| BackendError::failed(name, e.to_string()))?;
        Ok(Self {
            name: name.into(),
            config,
            client,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn request_id(&self, payload: &Value) -> String {
        let mut h = Sha256::new();
        h.update(self.name.as_bytes());
        h.update(payload.to_string().as_bytes());
        hex::encode(&h.finalize()[..8])
    }

    /// Sends one request and returns the response payload.
    pub fn call(&self, payload: Value) -> Result<Value, BackendError> {
        let request_id = self.request_id(&payload);
        let body = json!({
            "request_id": request_id,
            "model_id": self.config.model_id,
            "payload": payload,
        });
        let mut req = self.client.post(&self.config.endpoint).json(&body);
        if let Some(var) = &self.config.auth_token_env {
            let token = std::env::var(var).map_err(|_| {
                BackendError::failed(&self.name, format!("auth token variable `{var}` is not set"))
            })?;
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| BackendError::failed(&self.name, e.to_string()))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(BackendError::failed(&self.name, format!("HTTP {status}")));
        }
        let text = resp.text().map_err(|e| BackendError::failed(&self.name, e.to_string()))?;
        let env: Envelope = serde_json::from_str(&text)
            .map_err(|e| BackendError::invalid(&self.name, format!("malformed envelope: {e}")))?;
        if env.request_id != request_id {
            return Err(BackendError::invalid(
                &self.name,
                format!("response is for request `{}`, expected `{request_id}`", env.request_id),
            ));
        }
        if !env.ok {
            let msg = env.error.unwrap_or_else(|| "request failed".into());
            return Err(BackendError::failed(&self.name, msg));
        }
        Ok(env.payload)
    }

    fn field<T: serde::de::DeserializeOwned>(&self, payload: &Value, key: &str) -> Result<T, BackendError> {
        let v = payload
            .get(key)
            .ok_or_else(|| BackendError::invalid(&self.name, format!("missing `{key}`")))?;
        serde_json::from_value(v.clone()).map_err(|e| BackendError::invalid(&self.name, format!("`{key}`: {e}")))
    }
}

pub fn encode_png(img: &DynamicImage) -> String {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png).expect("in-memory PNG encoding");
    B64.encode(buf.into_inner())
}

pub fn decode_png(b64: &str) -> Result<DynamicImage, String> {
    let bytes = B64.decode(b64).map_err(|e| e.to_string())?;
    image::load_from_memory_with_format(&bytes, ImageFormat::Png).map_err(|e| e.to_string())
}

fn file_b64(backend: &str, image: &ImageRef) -> Result<String, BackendError> {
    let bytes = std::fs::read(image.path()).map_err(|source| {
        BackendError::io(
            backend,
            io::IoError::Io {
                path: image.path().to_path_buf(),
                source,
            },
        )
    })?;
    Ok(B64.encode(bytes))
}

#[derive(Serialize, Deserialize)]
struct WireRaster {
    png_b64: String,
    legend: Legend,
}

fn decode_raster(backend: &str, w: WireRaster, kind: MapKind) -> Result<LabelRaster, BackendError> {
    let img = decode_png(&w.png_b64).map_err(|e| BackendError::invalid(backend, e))?;
    let DynamicImage::ImageLuma8(gray) = img else {
        return Err(BackendError::invalid(backend, "label maps must be 8-bit grayscale PNG"));
    };
    let (width, height) = gray.dimensions();
    LabelRaster::new(width, height, kind, gray.into_raw(), w.legend)
        .map_err(|e| BackendError::invalid(backend, e.to_string()))
}

pub struct RemoteSegmenter(pub HttpClient);

impl SegmentationProvider for RemoteSegmenter {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn segment(&self, image: &ImageRef) -> Result<SegmentationResult, BackendError> {
        let name = self.0.name();
        let payload = self.0.call(json!({ "image_png_b64": file_b64(name, image)? }))?;
        let body = decode_raster(name, self.0.field(&payload, "body")?, MapKind::BodyParts)?;
        let clothing = decode_raster(name, self.0.field(&payload, "clothing")?, MapKind::Clothing)?;
        let result = SegmentationResult::new(body, clothing).map_err(|m| BackendError::invalid(name, m))?;
        let dims = image::image_dimensions(image.path()).map_err(|source| {
            BackendError::io(
                name,
                io::IoError::Image {
                    path: image.path().to_path_buf(),
                    source,
                },
            )
        })?;
        if result.dims() != dims {
            return Err(BackendError::invalid(
                name,
                format!("maps are {:?} but the image is {dims:?}", result.dims()),
            ));
        }
        Ok(result)
    }
}

pub struct RemoteVto(pub HttpClient);

impl VtoBackend for RemoteVto {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn try_on(&self, req: &TryOnRequest, out: &Path) -> Result<ImageRef, BackendError> {
        let name = self.0.name();
        let mask: GrayImage = mask_to_gray(&req.mask);
        let payload = self.0.call(json!({
            "person_png_b64": file_b64(name, &req.person)?,
            "garment_png_b64": file_b64(name, &req.garment)?,
            "mask_png_b64": encode_png(&DynamicImage::ImageLuma8(mask)),
            "category": req.category,
            "garment_name": req.garment_name,
        }))?;
        let b64: String = self.0.field(&payload, "image_png_b64")?;
        let img = decode_png(&b64).map_err(|e| BackendError::invalid(name, e))?.to_rgb8();
        if img.dimensions() != req.mask.dims() {
            return Err(BackendError::invalid(
                name,
                format!("output is {:?}, expected {:?}", img.dimensions(), req.mask.dims()),
            ));
        }
        io::write_rgb(out, &img).map_err(|e| BackendError::io(name, e))?;
        Ok(ImageRef::new(out))
    }
}

pub struct RemoteVlm(pub HttpClient);

impl VlmPlanner for RemoteVlm {
    fn name(&self) -> &str {
        self.0.name()
    }

    fn propose(
        &self,
        garments: &[GarmentSpec],
        instruction: &str,
        person: &ImageRef,
    ) -> Result<VlmProposal, BackendError> {
        let payload = self.0.call(json!({
            "garments": garments,
            "instruction": instruction,
            "person_png_b64": file_b64(self.0.name(), person)?,
        }))?;
        serde_json::from_value(payload).map_err(|e| BackendError::invalid(self.0.name(), e.to_string()))
    }
}

pub struct RemoteDummyGenerator(pub HttpClient);

impl DummyGenerator for RemoteDummyGenerator {
    fn generate(
        &self,
        classification: Classification,
        required_exposure: &BTreeSet<BodyPart>,
        out_dir: &Path,
    ) -> Result<GarmentSpec, BackendError> {
        let name = self.0.name();
        let payload = self.0.call(json!({
            "classification": classification,
            "required_exposure": required_exposure,
        }))?;
        let spec: GarmentSpec = self.0.field(&payload, "garment")?;
        spec.validate().map_err(|m| BackendError::invalid(name, m))?;
        let b64: String = self.0.field(&payload, "image_png_b64")?;
        let img = decode_png(&b64).map_err(|e| BackendError::invalid(name, e))?.to_rgb8();
        let path = out_dir.join(format!("{}.png", spec.id));
        io::write_rgb(&path, &img).map_err(|e| BackendError::io(name, e))?;
        Ok(GarmentSpec {
            image_ref: ImageRef::new(path),
            ..spec
        })
    }
}
