use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Opaque handle to an image asset. Backends in this crate resolve it as a
/// filesystem path to a PNG.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ImageRef(PathBuf);

impl ImageRef {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self(path.into())
    }

    pub fn path(&self) -> &Path {
        &self.0
    }

    /// Resolves a relative reference against `base`; absolute refs are unchanged.
    pub fn resolved_against(&self, base: &Path) -> ImageRef {
        if self.0.is_absolute() {
            self.clone()
        } else {
            ImageRef(base.join(&self.0))
        }
    }

    /// Path of a sidecar file formed by appending `suffix` to the file name,
    /// e.g. `person.png` + `.parts.png` -> `person.png.parts.png`.
    pub fn sidecar(&self, suffix: &str) -> PathBuf {
        let mut s = self.0.clone().into_os_string();
        s.push(suffix);
        PathBuf::from(s)
    }
}

impl fmt::Display for ImageRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.display())
    }
}

impl From<PathBuf> for ImageRef {
    fn from(p: PathBuf) -> Self {
        Self(p)
    }
}

impl From<&Path> for ImageRef {
    fn from(p: &Path) -> Self {
        Self(p.to_path_buf())
    }
}
