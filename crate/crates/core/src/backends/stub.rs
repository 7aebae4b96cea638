use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use serde::{Deserialize, Serialize};

use super::{
    dummy_fits, BackendError, DummyGarmentProvider, DummyGenerator, SegmentationProvider,
    SegmentationResult, TryOnRequest, VlmPlanner, VlmProposal, VtoBackend,
};
use crate::fixtures::{self, Preset, BACKGROUND_RGB};
use crate::image_ref::ImageRef;
use crate::raster::io::{self, legend_path_for};
use crate::raster::taxonomy::{BACKGROUND, UNCLOTHED};
use crate::raster::{BodyPart, LabelRaster, LegendEntry, MapKind};
use crate::rules::{Classification, GarmentSpec, RuleTable};

/// Reads `<image>.parts.png` / `<image>.cloth.png` and their legend JSONs.
#[derive(Clone, Debug, Default)]
pub struct SidecarSegmenter;

const SIDECAR: &str = "sidecar-segmenter";

impl SidecarSegmenter {
    fn read(image: &ImageRef, suffix: &str) -> Result<LabelRaster, BackendError> {
        let png = image.sidecar(suffix);
        io::read_label_raster(&png, &legend_path_for(&png)).map_err(|e| BackendError::io(SIDECAR, e))
    }
}

impl SegmentationProvider for SidecarSegmenter {
    fn name(&self) -> &str {
        SIDECAR
    }

    fn segment(&self, image: &ImageRef) -> Result<SegmentationResult, BackendError> {
        let body = Self::read(image, ".parts.png")?;
        let clothing = Self::read(image, ".cloth.png")?;
        let result =
            SegmentationResult::new(body, clothing).map_err(|m| BackendError::invalid(SIDECAR, m))?;
        let (w, h) = image::image_dimensions(image.path()).map_err(|source| {
            BackendError::io(
                SIDECAR,
                io::IoError::Image {
                    path: image.path().to_path_buf(),
                    source,
                },
            )
        })?;
        if result.dims() != (w, h) {
            return Err(BackendError::invalid(
                SIDECAR,
                format!("maps are {:?} but the image is {:?}", result.dims(), (w, h)),
            ));
        }
        Ok(result)
    }
}

/// Deterministic try-on stand-in.
///
/// Outside the mask the person image is copied. Inside the mask the garment
/// image is resampled nearest-neighbour onto the mask's bounding box. When the
/// person image has segmentation sidecars, sidecars for the output are written
/// as well: garment-coloured pixels become a new clothing segment and pure
/// white garment pixels become unclothed area (or background off the figure).
#[derive(Clone, Debug, Default)]
pub struct PasteThroughVto {
    /// Fail any request whose garment image file name equals this.
    pub fail_on_garment: Option<String>,
}

const PASTE: &str = "paste-through-vto";

fn read_rgb(path: &Path) -> Result<RgbImage, BackendError> {
    io::read_rgb(path).map_err(|e| BackendError::io(PASTE, e))
}

impl VtoBackend for PasteThroughVto {
    fn name(&self) -> &str {
        PASTE
    }

    fn try_on(&self, req: &TryOnRequest, out: &Path) -> Result<ImageRef, BackendError> {
        if let Some(name) = &self.fail_on_garment {
            if req.garment.path().file_name().is_some_and(|f| f == name.as_str()) {
                return Err(BackendError::failed(PASTE, format!("injected failure for `{name}`")));
            }
        }
        let person = read_rgb(req.person.path())?;
        let garment = read_rgb(req.garment.path())?;
        if person.dimensions() != req.mask.dims() {
            return Err(BackendError::invalid(
                PASTE,
                format!("mask is {:?} but the person image is {:?}", req.mask.dims(), person.dimensions()),
            ));
        }
        let (output, fabric) = paste(&person, &garment, req);
        let out_ref = ImageRef::new(out);
        io::write_rgb(out, &output).map_err(|e| BackendError::io(PASTE, e))?;
        if req.person.sidecar(".parts.png").exists() {
            let seg = SidecarSegmenter.segment(&req.person)?;
            let (body, clothing) = resegment(&seg, req, &fabric)?;
            fixtures::write_sidecars(&out_ref, &body, &clothing).map_err(|e| BackendError::io(PASTE, e))?;
        }
        Ok(out_ref)
    }
}

/// Composited image plus, per pixel, `Some(is_fabric)` inside the mask.
fn paste(person: &RgbImage, garment: &RgbImage, req: &TryOnRequest) -> (RgbImage, Vec<Option<bool>>) {
    let mut output = person.clone();
    let (w, h) = person.dimensions();
    let mut fabric = vec![None; (w * h) as usize];
    let Some(bb) = req.mask.bbox() else {
        return (output, fabric);
    };
    let (gw, gh) = garment.dimensions();
    let (bw, bh) = (bb.width() as u64, bb.height() as u64);
    for (x, y) in req.mask.iter_set() {
        let gx = ((x - bb.x0) as u64 * gw as u64 / bw) as u32;
        let gy = ((y - bb.y0) as u64 * gh as u64 / bh) as u32;
        let px = *garment.get_pixel(gx, gy);
        output.put_pixel(x, y, px);
        fabric[(y * w + x) as usize] = Some(px != Rgb(BACKGROUND_RGB));
    }
    (output, fabric)
}

fn resegment(
    seg: &SegmentationResult,
    req: &TryOnRequest,
    fabric: &[Option<bool>],
) -> Result<(LabelRaster, LabelRaster), BackendError> {
    let (w, h) = seg.dims();
    let mut legend = seg.clothing.legend().clone();
    let new_label = legend
        .keys()
        .next_back()
        .and_then(|&k| k.checked_add(1))
        .ok_or_else(|| BackendError::failed(PASTE, "clothing legend is full"))?;
    legend.insert(
        new_label,
        LegendEntry::Tagged {
            name: req.garment_name.clone(),
            category: req.category,
        },
    );
    let mut body = seg.body.labels().to_vec();
    let mut cloth = seg.clothing.labels().to_vec();
    for y in 0..h {
        let row = (y * w) as usize..((y + 1) * w) as usize;
        let original: Vec<u8> = seg.body.labels()[row.clone()].to_vec();
        for x in 0..w {
            let i = (y * w + x) as usize;
            match fabric[i] {
                None => {}
                Some(true) => {
                    if body[i] == BACKGROUND {
                        body[i] = nearest_in_row(&original, x as usize);
                    }
                    cloth[i] = if body[i] == BACKGROUND { BACKGROUND } else { new_label };
                }
                Some(false) => cloth[i] = if body[i] == BACKGROUND { BACKGROUND } else { UNCLOTHED },
            }
        }
    }
    let body = LabelRaster::body(w, h, body).map_err(|e| BackendError::failed(PASTE, e.to_string()))?;
    let clothing = LabelRaster::new(w, h, MapKind::Clothing, cloth, legend)
        .map_err(|e| BackendError::failed(PASTE, e.to_string()))?;
    Ok((body, clothing))
}

/// Body label of the closest figure pixel in the same row; ties go left.
fn nearest_in_row(row: &[u8], x: usize) -> u8 {
    (1..row.len())
        .flat_map(|d| [x.checked_sub(d), Some(x + d)])
        .flatten()
        .filter(|&i| i < row.len())
        .map(|i| row[i])
        .find(|&l| l != BACKGROUND)
        .unwrap_or(BACKGROUND)
}

/// VLM stand-in that returns a proposal stored in a JSON file.
#[derive(Clone, Debug)]
pub struct ScriptedVlm {
    pub path: PathBuf,
}

const SCRIPTED: &str = "scripted-vlm";

impl VlmPlanner for ScriptedVlm {
    fn name(&self) -> &str {
        SCRIPTED
    }

    fn propose(&self, _: &[GarmentSpec], _: &str, _: &ImageRef) -> Result<VlmProposal, BackendError> {
        let text = std::fs::read_to_string(&self.path).map_err(|source| {
            BackendError::io(
                SCRIPTED,
                io::IoError::Io {
                    path: self.path.clone(),
                    source,
                },
            )
        })?;
        serde_json::from_str(&text).map_err(|e| BackendError::invalid(SCRIPTED, e.to_string()))
    }
}

/// `{"entries": [GarmentSpec, ...]}` with image refs relative to the manifest.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DummyManifest {
    pub entries: Vec<GarmentSpec>,
}

/// Dummy garments from a manifest, with an optional generator as fallback.
#[derive(Default)]
pub struct DummyLibrary {
    pub entries: Vec<GarmentSpec>,
    pub generator: Option<(Box<dyn DummyGenerator>, PathBuf)>,
}

const LIBRARY: &str = "dummy-library";

impl DummyLibrary {
    pub fn load(manifest: &Path) -> Result<Self, BackendError> {
        let doc: DummyManifest = io::read_json(manifest).map_err(|e| BackendError::io(LIBRARY, e))?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let entries = doc
            .entries
            .into_iter()
            .map(|g| GarmentSpec {
                image_ref: g.image_ref.resolved_against(base),
                ..g
            })
            .collect();
        Ok(Self { entries, generator: None })
    }

    /// Renders the built-in tank top and shorts into `dir` with a manifest.
    pub fn write_builtin(dir: &Path) -> Result<Self, BackendError> {
        let mut manifest = DummyManifest::default();
        for (preset, id) in [(Preset::TankTop, "dummy_tank_top"), (Preset::Shorts, "dummy_shorts")] {
            let spec = preset.write(dir, id).map_err(|e| BackendError::io(LIBRARY, e))?;
            manifest.entries.push(GarmentSpec {
                image_ref: ImageRef::new(format!("{id}.png")),
                ..spec
            });
        }
        let path = dir.join("manifest.json");
        io::write_json(&path, &manifest).map_err(|e| BackendError::io(LIBRARY, e))?;
        Self::load(&path)
    }

    pub fn with_generator(mut self, generator: Box<dyn DummyGenerator>, out_dir: PathBuf) -> Self {
        self.generator = Some((generator, out_dir));
        self
    }
}

impl DummyGarmentProvider for DummyLibrary {
    fn fetch(
        &self,
        classification: Classification,
        required_exposure: &BTreeSet<BodyPart>,
        rules: &RuleTable,
    ) -> Result<GarmentSpec, BackendError> {
        if let Some(g) = self
            .entries
            .iter()
            .find(|g| dummy_fits(g, classification, required_exposure, rules))
        {
            return Ok(g.clone());
        }
        let Some((generator, dir)) = &self.generator else {
            return Err(BackendError::failed(
                LIBRARY,
                format!("no {classification} dummy leaves {required_exposure:?} uncovered and no generator is configured"),
            ));
        };
        let g = generator.generate(classification, required_exposure, dir)?;
        if !dummy_fits(&g, classification, required_exposure, rules) {
            return Err(BackendError::invalid(
                LIBRARY,
                format!("generated dummy `{}` does not leave {required_exposure:?} uncovered", g.id),
            ));
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{render_person, FigureParams, Outfit};
    use crate::raster::{BinaryMask, ClothingCategory};

    fn request(dir: &Path, mask: BinaryMask) -> TryOnRequest {
        let person = render_person(&FigureParams::default(), &Outfit::long_sleeves());
        let person_ref = person.write(&dir.join("person.png")).unwrap();
        let g = Preset::TShirt.write(dir, "tee").unwrap();
        TryOnRequest {
            person: person_ref,
            garment: g.image_ref,
            mask,
            category: ClothingCategory::UpperGarment,
            garment_name: "t-shirt".into(),
        }
    }

    #[test]
    fn empty_mask_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let req = request(dir.path(), BinaryMask::empty(48, 72));
        let out = PasteThroughVto::default().try_on(&req, &dir.path().join("out.png")).unwrap();
        assert_eq!(io::read_rgb(out.path()).unwrap(), io::read_rgb(req.person.path()).unwrap());
        let a = SidecarSegmenter.segment(&req.person).unwrap();
        let b = SidecarSegmenter.segment(&out).unwrap();
        assert_eq!(a.body, b.body);
        assert_eq!(a.clothing.labels(), b.clothing.labels());
    }

    #[test]
    fn full_mask_with_solid_garment() {
        let dir = tempfile::tempdir().unwrap();
        let mut req = request(dir.path(), BinaryMask::full(48, 72));
        let solid = dir.path().join("solid.png");
        io::write_rgb(&solid, &RgbImage::from_pixel(5, 7, Rgb([10, 20, 30]))).unwrap();
        req.garment = ImageRef::new(&solid);
        let out = PasteThroughVto::default().try_on(&req, &dir.path().join("out.png")).unwrap();
        let img = io::read_rgb(out.path()).unwrap();
        assert!(img.pixels().all(|p| p.0 == [10, 20, 30]));
        // the whole canvas is fabric; rows with figure pixels join the figure
        let seg = SidecarSegmenter.segment(&out).unwrap();
        assert!(seg.figure.area() > 0);
    }

    #[test]
    fn fabric_and_white_relabel() {
        let dir = tempfile::tempdir().unwrap();
        let body = FigureParams::default().body_raster();
        let torso = body.parts_region(&BodyPart::TORSO).unwrap();
        let req = request(dir.path(), torso.clone());
        let out = PasteThroughVto::default().try_on(&req, &dir.path().join("out.png")).unwrap();
        let seg = SidecarSegmenter.segment(&out).unwrap();
        let new_label = *seg.clothing.legend().keys().next_back().unwrap();
        assert_eq!(seg.clothing.category_of(new_label), Some(ClothingCategory::UpperGarment));
        for (x, y) in torso.iter_set() {
            let l = seg.clothing.get(x, y);
            assert!(l == new_label || l == UNCLOTHED);
        }
    }

    #[test]
    fn injected_failure() {
        let dir = tempfile::tempdir().unwrap();
        let req = request(dir.path(), BinaryMask::empty(48, 72));
        let vto = PasteThroughVto {
            fail_on_garment: Some("tee.png".into()),
        };
        let err = vto.try_on(&req, &dir.path().join("out.png")).unwrap_err();
        assert!(err.to_string().contains("injected"));
    }

    #[test]
    fn missing_sidecar_names_the_provider() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lonely.png");
        io::write_rgb(&p, &RgbImage::new(4, 4)).unwrap();
        let err = SidecarSegmenter.segment(&ImageRef::new(&p)).unwrap_err();
        assert_eq!(err.backend(), SIDECAR);
    }

    #[test]
    fn builtin_library_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let lib = DummyLibrary::write_builtin(dir.path()).unwrap();
        let rules = RuleTable::builtin();
        let tank = lib
            .fetch(Classification::Upper, &[BodyPart::LowerArms].into(), &rules)
            .unwrap();
        assert_eq!(tank.category_noun, "tank top");
        assert!(tank.image_ref.path().exists());
        let shorts = lib
            .fetch(Classification::Lower, &[BodyPart::LowerLegs].into(), &rules)
            .unwrap();
        assert_eq!(shorts.category_noun, "shorts");
        assert!(lib.fetch(Classification::Overall, &BTreeSet::new(), &rules).is_err());
        assert!(DummyLibrary::default()
            .fetch(Classification::Upper, &BTreeSet::new(), &rules)
            .is_err());
    }

    #[test]
    fn nearest_row_label() {
        assert_eq!(nearest_in_row(&[0, 3, 0, 0, 7], 2), 3);
        assert_eq!(nearest_in_row(&[0, 0, 0, 0, 7], 2), 7);
        assert_eq!(nearest_in_row(&[0, 0, 0], 1), 0);
    }
}
