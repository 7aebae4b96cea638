use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::remote::{HttpClient, RemoteDummyGenerator, RemoteSegmenter, RemoteVlm, RemoteVto};
use super::stub::{DummyLibrary, PasteThroughVto, ScriptedVlm, SidecarSegmenter};
use super::{BackendError, DummyGarmentProvider, SegmentationProvider, VlmPlanner, VtoBackend};
use crate::raster::io::{self, IoError};

fn default_timeout() -> u64 {
    60
}

/// Endpoint of one remote backend. The auth token is read from the named
/// environment variable at call time and never stored.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub endpoint: String,
    #[serde(default = "default_timeout")]
    pub timeout_secs: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub auth_token_env: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SegmentationConfig {
    #[default]
    Sidecar,
    Remote(RemoteConfig),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VtoConfig {
    PasteThrough {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fail_on_garment: Option<String>,
    },
    Remote(RemoteConfig),
}

impl Default for VtoConfig {
    fn default() -> Self {
        VtoConfig::PasteThrough { fail_on_garment: None }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VlmConfig {
    Scripted { path: PathBuf },
    Remote(RemoteConfig),
}

/// Backend selection, loaded from a JSON file. Relative paths resolve against
/// the file's directory.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendConfig {
    pub segmentation: SegmentationConfig,
    pub vto: VtoConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vlm: Option<VlmConfig>,
    /// Dummy-garment manifest; the built-in tank top and shorts when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dummy_library: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dummy_generator: Option<RemoteConfig>,
}

impl BackendConfig {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let mut cfg: BackendConfig = io::read_json(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(VlmConfig::Scripted { path }) = &mut cfg.vlm {
            *path = base.join(&*path);
        }
        if let Some(lib) = &mut cfg.dummy_library {
            *lib = base.join(&*lib);
        }
        Ok(cfg)
    }
}

/// Instantiated backends.
pub struct Backends {
    pub segmenter: Box<dyn SegmentationProvider>,
    pub vto: Box<dyn VtoBackend>,
    pub vlm: Option<Box<dyn VlmPlanner>>,
    pub dummies: Box<dyn DummyGarmentProvider>,
}

impl Backends {
    /// Builds the configured backends. `scratch` receives the built-in dummy
    /// garments and any generated ones.
    pub fn from_config(cfg: &BackendConfig, scratch: &Path) -> Result<Self, BackendError> {
        let segmenter: Box<dyn SegmentationProvider> = match &cfg.segmentation {
            SegmentationConfig::Sidecar => Box::new(SidecarSegmenter),
            SegmentationConfig::Remote(r) => Box::new(RemoteSegmenter(HttpClient::new("segmentation", r.clone())?)),
        };
        let vto: Box<dyn VtoBackend> = match &cfg.vto {
            VtoConfig::PasteThrough { fail_on_garment } => Box::new(PasteThroughVto {
                fail_on_garment: fail_on_garment.clone(),
            }),
            VtoConfig::Remote(r) => Box::new(RemoteVto(HttpClient::new("vto", r.clone())?)),
        };
        let vlm: Option<Box<dyn VlmPlanner>> = match &cfg.vlm {
            None => None,
            Some(VlmConfig::Scripted { path }) => Some(Box::new(ScriptedVlm { path: path.clone() })),
            Some(VlmConfig::Remote(r)) => Some(Box::new(RemoteVlm(HttpClient::new("vlm", r.clone())?))),
        };
        let dummy_dir = scratch.join("dummies");
        let mut library = match &cfg.dummy_library {
            Some(manifest) => DummyLibrary::load(manifest)?,
            None => DummyLibrary::write_builtin(&dummy_dir)?,
        };
        if let Some(r) = &cfg.dummy_generator {
            let generator = RemoteDummyGenerator(HttpClient::new("dummy-generator", r.clone())?);
            library = library.with_generator(Box::new(generator), dummy_dir);
        }
        Ok(Self {
            segmenter,
            vto,
            vlm,
            dummies: Box::new(library),
        })
    }

    /// Sidecar segmentation, paste-through try-on, built-in dummies, no VLM.
    pub fn stubs(scratch: &Path) -> Result<Self, BackendError> {
        Self::from_config(&BackendConfig::default(), scratch)
    }
}
