//! End-to-end scenes on the default figure with stub backends.

use std::path::Path;

use image::RgbImage;
use ivton_core::backends::{Backends, SegmentationProvider, SegmentationResult, SidecarSegmenter};
use ivton_core::executor::{Executor, RunOutcome};
use ivton_core::fixtures::{render_person, FigureParams, Outfit, Preset};
use ivton_core::instruction::{Lexicon, Synonyms};
use ivton_core::planner::{ExecutionPlan, Planner};
use ivton_core::raster::{io, BinaryMask, BodyPart};
use ivton_core::rules::{GarmentSpec, RuleTable};
use ivton_core::ImageRef;
use tempfile::TempDir;

pub struct Scene {
    pub dir: TempDir,
    pub person: ImageRef,
    pub garments: Vec<GarmentSpec>,
    pub backends: Backends,
    pub rules: RuleTable,
}

pub fn scene(outfit: &Outfit, garments: &[(Preset, &str)]) -> Scene {
    let dir = tempfile::tempdir().unwrap();
    let person = render_person(&FigureParams::default(), outfit)
        .write(&dir.path().join("person.png"))
        .unwrap();
    let garments = garments.iter().map(|(p, id)| p.write(dir.path(), id).unwrap()).collect();
    let backends = Backends::stubs(&dir.path().join("scratch")).unwrap();
    Scene {
        dir,
        person,
        garments,
        backends,
        rules: RuleTable::builtin(),
    }
}

impl Scene {
    pub fn plan(&self, text: &str) -> ExecutionPlan {
        let (lex, syn) = (Lexicon::builtin(), Synonyms::default());
        let planner = Planner::new(&self.rules, &lex, &syn, self.backends.dummies.as_ref());
        let seg = self.backends.segmenter.segment(&self.person).unwrap();
        planner.build_plan(&self.garments, text, &seg, &self.person).unwrap()
    }

    pub fn run(&self, plan: &ExecutionPlan, root: &Path) -> RunOutcome {
        Executor::new(&self.backends, &self.rules)
            .execute_plan(plan, root)
            .map_err(|f| f.error)
            .unwrap()
    }
}

pub fn segmentation(image: &ImageRef) -> SegmentationResult {
    SidecarSegmenter.segment(image).unwrap()
}

pub fn rgb(image: &ImageRef) -> RgbImage {
    io::read_rgb(image.path()).unwrap()
}

pub fn parts(seg: &SegmentationResult, parts: &[BodyPart]) -> BinaryMask {
    seg.body.parts_region(parts).unwrap()
}

/// Pixels that differ between two equally sized images.
pub fn changed(a: &RgbImage, b: &RgbImage) -> BinaryMask {
    BinaryMask::from_fn(a.width(), a.height(), |x, y| a.get_pixel(x, y) != b.get_pixel(x, y))
}
