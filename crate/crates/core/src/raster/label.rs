use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::taxonomy::{BodyPart, ClothingCategory, BACKGROUND, BACKGROUND_NAME, UNCLOTHED, UNCLOTHED_NAME};
use super::{BinaryMask, RasterError};

/// Which partition of the figure a raster encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    BodyParts,
    Clothing,
}

/// Symbolic meaning of one label id.
///
/// Serialized as a bare name string when there is no category, otherwise as
/// `{"name": ..., "category": ...}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LegendEntry {
    Name(String),
    Tagged {
        name: String,
        category: ClothingCategory,
    },
}

impl LegendEntry {
    pub fn name(&self) -> &str {
        match self {
            LegendEntry::Name(n) => n,
            LegendEntry::Tagged { name, .. } => name,
        }
    }

    pub fn category(&self) -> Option<ClothingCategory> {
        match self {
            LegendEntry::Name(_) => None,
            LegendEntry::Tagged { category, .. } => Some(*category),
        }
    }
}

pub type Legend = BTreeMap<u8, LegendEntry>;

/// Legend of a body-parts map: the full fixed taxonomy.
pub fn body_legend() -> Legend {
    BodyPart::ALL
        .iter()
        .map(|p| (p.id(), LegendEntry::Name(p.name().to_string())))
        .collect()
}

/// Legend of a clothing map with only background and the unclothed area.
pub fn base_clothing_legend() -> Legend {
    let mut legend = Legend::new();
    legend.insert(BACKGROUND, LegendEntry::Name(BACKGROUND_NAME.into()));
    legend.insert(UNCLOTHED, LegendEntry::Name(UNCLOTHED_NAME.into()));
    legend
}

/// Integer label image. Every pixel label is present in the legend and label 0
/// is background.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelRaster {
    width: u32,
    height: u32,
    kind: MapKind,
    labels: Vec<u8>,
    legend: Legend,
}

impl LabelRaster {
    pub fn new(
        width: u32,
        height: u32,
        kind: MapKind,
        labels: Vec<u8>,
        legend: Legend,
    ) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::ZeroSize);
        }
        let expected = width as usize * height as usize;
        if labels.len() != expected {
            return Err(RasterError::LengthMismatch {
                expected,
                found: labels.len(),
            });
        }
        validate_legend(kind, &legend)?;
        if let Some((i, &label)) = labels
            .iter()
            .enumerate()
            .find(|(_, l)| !legend.contains_key(l))
        {
            return Err(RasterError::LabelNotInLegend {
                label,
                x: (i % width as usize) as u32,
                y: (i / width as usize) as u32,
            });
        }
        Ok(Self {
            width,
            height,
            kind,
            labels,
            legend,
        })
    }

    /// Body-parts raster using the fixed taxonomy legend.
    pub fn body(width: u32, height: u32, labels: Vec<u8>) -> Result<Self, RasterError> {
        Self::new(width, height, MapKind::BodyParts, labels, body_legend())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn kind(&self) -> MapKind {
        self.kind
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn legend(&self) -> &Legend {
        &self.legend
    }

    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.labels[y as usize * self.width as usize + x as usize]
    }

    pub fn category_of(&self, label: u8) -> Option<ClothingCategory> {
        self.legend.get(&label).and_then(LegendEntry::category)
    }

    /// Mask of pixels whose label is in `label_set`. Every id must be in the legend.
    pub fn region_of<I>(&self, label_set: I) -> Result<BinaryMask, RasterError>
    where
        I: IntoIterator<Item = u8>,
    {
        let mut wanted = [false; 256];
        for id in label_set {
            if !self.legend.contains_key(&id) {
                return Err(RasterError::UnknownLabel(id));
            }
            wanted[id as usize] = true;
        }
        let bits = self.labels.iter().map(|&l| wanted[l as usize]).collect();
        BinaryMask::from_bits(self.width, self.height, bits)
    }

    /// Region of body parts; the parts must be legend entries of a body-parts raster.
    pub fn parts_region<'a, I>(&self, parts: I) -> Result<BinaryMask, RasterError>
    where
        I: IntoIterator<Item = &'a BodyPart>,
    {
        self.region_of(parts.into_iter().map(|p| p.id()))
    }

    /// Non-background pixels.
    pub fn figure(&self) -> BinaryMask {
        let bits = self.labels.iter().map(|&l| l != BACKGROUND).collect();
        BinaryMask::from_bits(self.width, self.height, bits).expect("dims are consistent")
    }

    /// Distinct labels occurring in the image.
    pub fn labels_present(&self) -> BTreeSet<u8> {
        let mut seen = [false; 256];
        for &l in &self.labels {
            seen[l as usize] = true;
        }
        (0..=255u8).filter(|&l| seen[l as usize]).collect()
    }

    /// Pixel count per label occurring in the image.
    pub fn histogram(&self) -> BTreeMap<u8, u64> {
        let mut counts = [0u64; 256];
        for &l in &self.labels {
            counts[l as usize] += 1;
        }
        (0..=255u8)
            .filter(|&l| counts[l as usize] > 0)
            .map(|l| (l, counts[l as usize]))
            .collect()
    }

    pub fn ensure_same_dims(&self, dims: (u32, u32)) -> Result<(), RasterError> {
        if self.dims() != dims {
            return Err(RasterError::DimensionMismatch {
                expected: self.dims(),
                found: dims,
            });
        }
        Ok(())
    }
}

fn validate_legend(kind: MapKind, legend: &Legend) -> Result<(), RasterError> {
    match legend.get(&BACKGROUND) {
        Some(e) if e.name() == BACKGROUND_NAME => {}
        _ => return Err(RasterError::InvalidLegend("label 0 must be `background`".into())),
    }
    match kind {
        MapKind::BodyParts => {
            for (&id, entry) in legend {
                match BodyPart::from_id(id) {
                    Some(part) if part.name() == entry.name() => {}
                    _ => {
                        return Err(RasterError::InvalidLegend(format!(
                            "body-parts label {id} `{}` is not in the fixed taxonomy",
                            entry.name()
                        )))
                    }
                }
            }
            if legend.len() != BodyPart::ALL.len() {
                return Err(RasterError::InvalidLegend(
                    "body-parts legend must list the full taxonomy".into(),
                ));
            }
        }
        MapKind::Clothing => {
            if !legend.contains_key(&UNCLOTHED) {
                return Err(RasterError::InvalidLegend(
                    "clothing legend must contain label 1 (unclothed area)".into(),
                ));
            }
            if let Some((id, _)) = legend
                .iter()
                .find(|(&id, e)| id > UNCLOTHED && e.category().is_none())
            {
                return Err(RasterError::InvalidLegend(format!(
                    "clothing segment {id} has no category tag"
                )));
            }
        }
    }
    Ok(())
}

/// True iff the non-background labels of `raster` exactly cover `figure`.
///
/// Disjointness is structural for single-label rasters, so only coverage is checked.
pub fn verify_partition(raster: &LabelRaster, figure: &BinaryMask) -> bool {
    raster.dims() == figure.dims()
        && raster
            .labels
            .iter()
            .zip(figure.bits())
            .all(|(&l, &f)| (l != BACKGROUND) == f)
}
