//! Procedural stick-figure persons, clothing maps and garment images.
//!
//! Figures are axis-aligned rectangles per body part (arms hang beside the
//! torso, legs are separated by a gap), so both segmentation maps are exact
//! partitions of the figure by construction.

use std::path::Path;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::image_ref::ImageRef;
use crate::raster::io::{self, legend_path_for, IoError};
use crate::raster::taxonomy::{BACKGROUND, UNCLOTHED};
use crate::raster::{
    base_clothing_legend, BinaryMask, BodyPart, ClothingCategory, LabelRaster, LegendEntry, MapKind,
};
use crate::rules::{Classification, Closure, GarmentSpec, LegLength, SleeveLength};

pub const BACKGROUND_RGB: [u8; 3] = [255, 255, 255];
const SKIN_RGB: [u8; 3] = [206, 160, 128];
const FACE_RGB: [u8; 3] = [224, 178, 146];

/// Body geometry in pixels. Left and right limbs are mirror images.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FigureParams {
    pub width: u32,
    pub height: u32,
    pub center_x: u32,
    pub top: u32,
    pub face_w: u32,
    pub face_h: u32,
    pub torso_w: u32,
    pub upper_torso_h: u32,
    pub lower_torso_h: u32,
    pub arm_w: u32,
    pub arm_gap: u32,
    pub upper_arm_h: u32,
    pub lower_arm_h: u32,
    pub hand_h: u32,
    pub leg_w: u32,
    pub leg_inset: u32,
    pub upper_leg_h: u32,
    pub lower_leg_h: u32,
    pub foot_h: u32,
}

impl Default for FigureParams {
    fn default() -> Self {
        Self {
            width: 48,
            height: 72,
            center_x: 24,
            top: 2,
            face_w: 8,
            face_h: 8,
            torso_w: 16,
            upper_torso_h: 12,
            lower_torso_h: 8,
            arm_w: 4,
            arm_gap: 1,
            upper_arm_h: 11,
            lower_arm_h: 10,
            hand_h: 3,
            leg_w: 6,
            leg_inset: 1,
            upper_leg_h: 14,
            lower_leg_h: 13,
            foot_h: 3,
        }
    }
}

/// Half-open pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Rect {
    x0: u32,
    y0: u32,
    x1: u32,
    y1: u32,
}

impl Rect {
    fn new(x0: u32, y0: u32, w: u32, h: u32) -> Self {
        Self { x0, y0, x1: x0 + w, y1: y0 + h }
    }

    fn contains(&self, x: u32, y: u32) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }

    /// Top `num/den` fraction of the rows.
    fn top_fraction(&self, num: u32, den: u32) -> Rect {
        let h = (self.y1 - self.y0) * num / den;
        Rect { y1: self.y0 + h, ..*self }
    }
}

impl FigureParams {
    /// Random but valid geometry.
    pub fn random(rng: &mut impl Rng) -> Self {
        let torso_w = *[14u32, 16, 18].get(rng.random_range(0..3)).unwrap();
        let leg_inset = 1;
        let max_leg = (torso_w - 2 * leg_inset - 2) / 2;
        Self {
            center_x: rng.random_range(22..=26),
            top: rng.random_range(1..=3),
            face_w: rng.random_range(6..=8),
            face_h: rng.random_range(7..=8),
            torso_w,
            upper_torso_h: rng.random_range(10..=13),
            lower_torso_h: rng.random_range(7..=9),
            arm_w: rng.random_range(3..=5),
            arm_gap: rng.random_range(1..=2),
            upper_arm_h: rng.random_range(10..=12),
            lower_arm_h: rng.random_range(9..=11),
            hand_h: rng.random_range(2..=3),
            leg_w: rng.random_range(4..=max_leg),
            leg_inset,
            upper_leg_h: rng.random_range(12..=15),
            lower_leg_h: rng.random_range(11..=14),
            foot_h: rng.random_range(2..=3),
            ..Self::default()
        }
    }

    fn torso_x0(&self) -> u32 {
        self.center_x - self.torso_w / 2
    }

    fn rects(&self) -> Vec<(BodyPart, Rect)> {
        let tx0 = self.torso_x0();
        let tx1 = tx0 + self.torso_w;
        let ut_y = self.top + self.face_h;
        let lt_y = ut_y + self.upper_torso_h;
        let legs_y = lt_y + self.lower_torso_h;
        let la_y = ut_y + self.upper_arm_h;
        let hand_y = la_y + self.lower_arm_h;
        let ll_y = legs_y + self.upper_leg_h;
        let foot_y = ll_y + self.lower_leg_h;
        let arm_xs = [tx0 - self.arm_gap - self.arm_w, tx1 + self.arm_gap];
        let leg_xs = [tx0 + self.leg_inset, tx1 - self.leg_inset - self.leg_w];
        let mut out = vec![
            (
                BodyPart::Face,
                Rect::new(self.center_x - self.face_w / 2, self.top, self.face_w, self.face_h),
            ),
            (BodyPart::UpperTorso, Rect::new(tx0, ut_y, self.torso_w, self.upper_torso_h)),
            (BodyPart::LowerTorso, Rect::new(tx0, lt_y, self.torso_w, self.lower_torso_h)),
        ];
        for x in arm_xs {
            out.push((BodyPart::UpperArms, Rect::new(x, ut_y, self.arm_w, self.upper_arm_h)));
            out.push((BodyPart::LowerArms, Rect::new(x, la_y, self.arm_w, self.lower_arm_h)));
            out.push((BodyPart::Hands, Rect::new(x, hand_y, self.arm_w, self.hand_h)));
        }
        for (i, x) in leg_xs.into_iter().enumerate() {
            out.push((BodyPart::UpperLegs, Rect::new(x, legs_y, self.leg_w, self.upper_leg_h)));
            out.push((BodyPart::LowerLegs, Rect::new(x, ll_y, self.leg_w, self.lower_leg_h)));
            // feet point outward by one pixel
            let fx = if i == 0 { x - 1 } else { x };
            out.push((BodyPart::Feet, Rect::new(fx, foot_y, self.leg_w + 1, self.foot_h)));
        }
        out
    }

    pub fn body_raster(&self) -> LabelRaster {
        let rects = self.rects();
        let mut labels = vec![BACKGROUND; self.width as usize * self.height as usize];
        for (part, r) in &rects {
            assert!(r.x1 <= self.width && r.y1 <= self.height, "figure exceeds canvas");
            for y in r.y0..r.y1 {
                for x in r.x0..r.x1 {
                    labels[(y * self.width + x) as usize] = part.id();
                }
            }
        }
        LabelRaster::body(self.width, self.height, labels).expect("taxonomy labels only")
    }

    fn part_rects(&self, part: BodyPart) -> Vec<Rect> {
        self.rects().into_iter().filter(|(p, _)| *p == part).map(|(_, r)| r).collect()
    }

    fn region(&self, pred: impl Fn(u32, u32) -> bool) -> BinaryMask {
        BinaryMask::from_fn(self.width, self.height, pred)
    }

    /// Pixels covered by an upper garment with the given sleeves.
    pub fn top_coverage(&self, sleeves: SleeveLength) -> BinaryMask {
        let mut rects = self.part_rects(BodyPart::UpperTorso);
        let ua = self.part_rects(BodyPart::UpperArms);
        let la = self.part_rects(BodyPart::LowerArms);
        match sleeves {
            SleeveLength::Sleeveless | SleeveLength::NotApplicable => {}
            SleeveLength::Short => rects.extend(ua.iter().map(|r| r.top_fraction(3, 5))),
            SleeveLength::ThreeQuarter => {
                rects.extend(ua);
                rects.extend(la.iter().map(|r| r.top_fraction(1, 2)));
            }
            SleeveLength::Long => {
                rects.extend(ua);
                rects.extend(la);
            }
        }
        self.region(|x, y| rects.iter().any(|r| r.contains(x, y)))
    }

    /// Pixels covered by a lower garment with the given legs.
    pub fn bottom_coverage(&self, legs: LegLength) -> BinaryMask {
        let mut rects = self.part_rects(BodyPart::LowerTorso);
        rects.extend(self.part_rects(BodyPart::UpperLegs));
        if legs == LegLength::Long {
            rects.extend(self.part_rects(BodyPart::LowerLegs));
        }
        self.region(|x, y| rects.iter().any(|r| r.contains(x, y)))
    }

    pub fn feet_coverage(&self) -> BinaryMask {
        let rects = self.part_rects(BodyPart::Feet);
        self.region(|x, y| rects.iter().any(|r| r.contains(x, y)))
    }
}

/// One worn clothing piece.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WornPiece {
    pub name: String,
    pub category: ClothingCategory,
    pub color: [u8; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sleeves: Option<SleeveLength>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub legs: Option<LegLength>,
}

/// What a fixture person wears. Later pieces are painted over earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outfit {
    pub pieces: Vec<WornPiece>,
}

impl Outfit {
    pub fn top(name: &str, sleeves: SleeveLength, color: [u8; 3]) -> WornPiece {
        WornPiece {
            name: name.into(),
            category: ClothingCategory::UpperGarment,
            color,
            sleeves: Some(sleeves),
            legs: None,
        }
    }

    pub fn bottom(name: &str, legs: LegLength, color: [u8; 3]) -> WornPiece {
        WornPiece {
            name: name.into(),
            category: ClothingCategory::LowerGarment,
            color,
            sleeves: None,
            legs: Some(legs),
        }
    }

    pub fn dress(name: &str, sleeves: SleeveLength, legs: LegLength, color: [u8; 3]) -> WornPiece {
        WornPiece {
            name: name.into(),
            category: ClothingCategory::OverallGarment,
            color,
            sleeves: Some(sleeves),
            legs: Some(legs),
        }
    }

    pub fn shoes(color: [u8; 3]) -> WornPiece {
        WornPiece {
            name: "shoes".into(),
            category: ClothingCategory::Footwear,
            color,
            sleeves: None,
            legs: None,
        }
    }

    /// Long-sleeve shirt, long pants, shoes.
    pub fn long_sleeves() -> Self {
        Outfit {
            pieces: vec![
                Outfit::top("shirt", SleeveLength::Long, [70, 110, 170]),
                Outfit::bottom("pants", LegLength::Long, [60, 60, 80]),
                Outfit::shoes([40, 30, 30]),
            ],
        }
    }

    /// T-shirt, long pants, shoes.
    pub fn t_shirt() -> Self {
        Outfit {
            pieces: vec![
                Outfit::top("t-shirt", SleeveLength::Short, [190, 60, 60]),
                Outfit::bottom("pants", LegLength::Long, [60, 60, 80]),
                Outfit::shoes([40, 30, 30]),
            ],
        }
    }
}

/// A rendered person with both segmentation maps.
#[derive(Clone, Debug)]
pub struct PersonFixture {
    pub image: RgbImage,
    pub body: LabelRaster,
    pub clothing: LabelRaster,
}

fn piece_coverage(params: &FigureParams, piece: &WornPiece) -> BinaryMask {
    let mut cov = BinaryMask::empty(params.width, params.height);
    if piece.category == ClothingCategory::Footwear {
        return params.feet_coverage();
    }
    if let Some(s) = piece.sleeves {
        cov = cov.union(&params.top_coverage(s)).unwrap();
    }
    if let Some(l) = piece.legs {
        cov = cov.union(&params.bottom_coverage(l)).unwrap();
    }
    cov
}

/// Garment texture: a darker row every fourth line.
fn textured(color: [u8; 3], y: u32) -> Rgb<u8> {
    if y % 4 == 3 {
        Rgb(color.map(|c| c - c / 5))
    } else {
        Rgb(color)
    }
}

pub fn render_person(params: &FigureParams, outfit: &Outfit) -> PersonFixture {
    let body = params.body_raster();
    let figure = body.figure();
    let (w, h) = (params.width, params.height);
    let mut labels: Vec<u8> = figure.bits().iter().map(|&f| if f { UNCLOTHED } else { BACKGROUND }).collect();
    let mut legend = base_clothing_legend();
    let mut colors = vec![[0u8; 3]; 256];
    for (i, piece) in outfit.pieces.iter().enumerate() {
        let id = 2 + i as u8;
        legend.insert(
            id,
            LegendEntry::Tagged {
                name: piece.name.clone(),
                category: piece.category,
            },
        );
        colors[id as usize] = piece.color;
        let cov = piece_coverage(params, piece).intersect(&figure).unwrap();
        for (idx, &b) in cov.bits().iter().enumerate() {
            if b {
                labels[idx] = id;
            }
        }
    }
    let mut image = RgbImage::from_pixel(w, h, Rgb(BACKGROUND_RGB));
    for y in 0..h {
        for x in 0..w {
            let c = labels[(y * w + x) as usize];
            let px = match c {
                BACKGROUND => continue,
                UNCLOTHED if body.get(x, y) == BodyPart::Face.id() => Rgb(FACE_RGB),
                UNCLOTHED => Rgb(SKIN_RGB),
                seg => textured(colors[seg as usize], y),
            };
            image.put_pixel(x, y, px);
        }
    }
    let clothing = LabelRaster::new(w, h, MapKind::Clothing, labels, legend).expect("valid clothing map");
    PersonFixture { image, body, clothing }
}

impl PersonFixture {
    /// Writes `path` plus the `.parts` / `.cloth` sidecars read by the sidecar segmenter.
    pub fn write(&self, path: &Path) -> Result<ImageRef, IoError> {
        let r = ImageRef::new(path);
        io::write_rgb(path, &self.image)?;
        write_sidecars(&r, &self.body, &self.clothing)?;
        Ok(r)
    }
}

/// Writes `<image>.parts.png|json` and `<image>.cloth.png|json`.
pub fn write_sidecars(image: &ImageRef, body: &LabelRaster, clothing: &LabelRaster) -> Result<(), IoError> {
    let parts = image.sidecar(".parts.png");
    let cloth = image.sidecar(".cloth.png");
    io::write_label_raster(&parts, &legend_path_for(&parts), body)?;
    io::write_label_raster(&cloth, &legend_path_for(&cloth), clothing)
}

pub const GARMENT_W: u32 = 32;
pub const GARMENT_H: u32 = 40;

/// Whether normalized garment-image coordinates (u, v) in [0, 1)^2 are fabric.
fn silhouette(spec: &GarmentSpec, u: f64, v: f64) -> bool {
    let sleeve_extent = |s: SleeveLength| match s {
        SleeveLength::Sleeveless | SleeveLength::NotApplicable => 0.0,
        SleeveLength::Short => 0.45,
        SleeveLength::ThreeQuarter => 0.8,
        SleeveLength::Long => 1.0,
    };
    let leg_extent = |l: LegLength| match l {
        LegLength::Short => 0.6,
        _ => 1.0,
    };
    let center = (0.25..0.75).contains(&u);
    match spec.classification {
        Classification::Upper => center || v < sleeve_extent(spec.sleeve_length),
        Classification::Lower => {
            let legs = !(0.45..0.55).contains(&u);
            v < 0.3 || (legs && v < leg_extent(spec.leg_length))
        }
        Classification::Overall => {
            let upper = v < 0.45 && (center || v / 0.45 < sleeve_extent(spec.sleeve_length));
            upper || (v >= 0.45 && v < leg_extent(spec.leg_length))
        }
    }
}

/// Solid-colour garment silhouette on a white canvas.
pub fn render_garment(spec: &GarmentSpec, color: [u8; 3]) -> RgbImage {
    RgbImage::from_fn(GARMENT_W, GARMENT_H, |x, y| {
        let u = (x as f64 + 0.5) / GARMENT_W as f64;
        let v = (y as f64 + 0.5) / GARMENT_H as f64;
        if silhouette(spec, u, v) {
            textured(color, y)
        } else {
            Rgb(BACKGROUND_RGB)
        }
    })
}

/// Named garment presets used by fixtures, the dummy library and tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    LongSleeveShirt,
    TShirt,
    TankTop,
    Jacket,
    Pants,
    Shorts,
    Dress,
    Coat,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::LongSleeveShirt,
        Preset::TShirt,
        Preset::TankTop,
        Preset::Jacket,
        Preset::Pants,
        Preset::Shorts,
        Preset::Dress,
        Preset::Coat,
    ];

    pub fn spec(self, id: &str, image_ref: ImageRef) -> GarmentSpec {
        use Classification::*;
        let (classification, sleeve_length, leg_length, closure, outerwear, noun) = match self {
            Preset::LongSleeveShirt => (Upper, SleeveLength::Long, LegLength::NotApplicable, Closure::Buttons, false, "shirt"),
            Preset::TShirt => (Upper, SleeveLength::Short, LegLength::NotApplicable, Closure::None, false, "t-shirt"),
            Preset::TankTop => (Upper, SleeveLength::Sleeveless, LegLength::NotApplicable, Closure::None, false, "tank top"),
            Preset::Jacket => (Upper, SleeveLength::Long, LegLength::NotApplicable, Closure::Buttons, true, "jacket"),
            Preset::Pants => (Lower, SleeveLength::NotApplicable, LegLength::Long, Closure::Zipper, false, "pants"),
            Preset::Shorts => (Lower, SleeveLength::NotApplicable, LegLength::Short, Closure::None, false, "shorts"),
            Preset::Dress => (Overall, SleeveLength::Sleeveless, LegLength::Short, Closure::None, false, "dress"),
            Preset::Coat => (Overall, SleeveLength::Long, LegLength::Long, Closure::Buttons, true, "coat"),
        };
        GarmentSpec {
            id: id.into(),
            classification,
            sleeve_length,
            leg_length,
            closure,
            outerwear,
            category_noun: noun.into(),
            image_ref,
        }
    }

    pub fn color(self) -> [u8; 3] {
        match self {
            Preset::LongSleeveShirt => [236, 236, 200],
            Preset::TShirt => [40, 150, 90],
            Preset::TankTop => [150, 150, 150],
            Preset::Jacket => [120, 70, 40],
            Preset::Pants => [30, 50, 110],
            Preset::Shorts => [200, 170, 90],
            Preset::Dress => [170, 40, 120],
            Preset::Coat => [90, 90, 60],
        }
    }

    /// Writes `<dir>/<id>.png` and `<dir>/<id>.json`; returns the spec with an absolute image ref.
    pub fn write(self, dir: &Path, id: &str) -> Result<GarmentSpec, IoError> {
        let png = dir.join(format!("{id}.png"));
        let spec = self.spec(id, ImageRef::new(format!("{id}.png")));
        io::write_rgb(&png, &render_garment(&spec, self.color()))?;
        io::write_json(&dir.join(format!("{id}.json")), &spec)?;
        Ok(GarmentSpec {
            image_ref: ImageRef::new(png),
            ..spec
        })
    }
}

/// Dataset category of a generated pair.
fn category_for(spec: &GarmentSpec) -> &'static str {
    match spec.classification {
        Classification::Upper => "upper_body",
        Classification::Lower => "lower_body",
        Classification::Overall => "dresses",
    }
}

/// Per-pair metadata stored as `pair.json`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairMeta {
    pub category: String,
    #[serde(default)]
    pub instruction: String,
}

fn random_color(rng: &mut impl Rng) -> [u8; 3] {
    // stay away from pure white, which garment images use as background
    [rng.random_range(20..=230), rng.random_range(20..=230), rng.random_range(20..=230)]
}

fn random_outfit(rng: &mut impl Rng) -> Outfit {
    let mut pieces = Vec::new();
    if rng.random_bool(0.25) {
        let legs = if rng.random_bool(0.5) { LegLength::Long } else { LegLength::Short };
        let sleeves = SleeveLength::ALL[rng.random_range(0..4)];
        pieces.push(Outfit::dress("dress", sleeves, legs, random_color(rng)));
    } else {
        let sleeves = SleeveLength::ALL[rng.random_range(0..4)];
        let noun = match sleeves {
            SleeveLength::Sleeveless => "tank top",
            SleeveLength::Short => "t-shirt",
            _ => "shirt",
        };
        pieces.push(Outfit::top(noun, sleeves, random_color(rng)));
        let legs = if rng.random_bool(0.5) { LegLength::Long } else { LegLength::Short };
        let noun = if legs == LegLength::Long { "pants" } else { "shorts" };
        pieces.push(Outfit::bottom(noun, legs, random_color(rng)));
    }
    if rng.random_bool(0.6) {
        pieces.push(Outfit::shoes(random_color(rng)));
    }
    Outfit { pieces }
}

/// The person's outfit after putting on `target`: pieces occupying the same
/// body zone are replaced.
fn dressed_outfit(outfit: &Outfit, target: &GarmentSpec, color: [u8; 3]) -> Outfit {
    let replaces = |p: &WornPiece| match target.classification {
        Classification::Upper => p.sleeves.is_some(),
        Classification::Lower => p.legs.is_some(),
        Classification::Overall => p.sleeves.is_some() || p.legs.is_some(),
    };
    let mut pieces: Vec<WornPiece> = outfit.pieces.iter().filter(|p| !replaces(p)).cloned().collect();
    let worn = WornPiece {
        name: target.category_noun.clone(),
        category: target.clothing_category(),
        color,
        sleeves: (target.classification != Classification::Lower).then_some(target.sleeve_length),
        legs: (target.classification != Classification::Upper).then_some(target.leg_length),
    };
    // keep the target under footwear
    pieces.insert(0, worn);
    Outfit { pieces }
}

fn random_target(rng: &mut impl Rng, index: usize, id: &str) -> GarmentSpec {
    use Classification::*;
    let classification = [Upper, Lower, Overall][index % 3];
    let sleeve_length = match classification {
        Lower => SleeveLength::NotApplicable,
        _ => SleeveLength::ALL[rng.random_range(0..4)],
    };
    let leg_length = match classification {
        Upper => LegLength::NotApplicable,
        _ => [LegLength::Short, LegLength::Long][rng.random_range(0..2)],
    };
    let noun = match (classification, sleeve_length, leg_length) {
        (Upper, SleeveLength::Sleeveless, _) => "tank top",
        (Upper, SleeveLength::Short, _) => "t-shirt",
        (Upper, _, _) => "shirt",
        (Lower, _, LegLength::Long) => "pants",
        (Lower, _, _) => "shorts",
        _ => "dress",
    };
    GarmentSpec {
        id: id.into(),
        classification,
        sleeve_length,
        leg_length,
        closure: Closure::None,
        outerwear: false,
        category_noun: noun.into(),
        image_ref: ImageRef::new("garment.png"),
    }
}

/// Generates `count` pairs under `out`, seeded and byte-reproducible.
///
/// Each `pair_NNN/` holds `person.png` with segmentation sidecars, `garment.png`,
/// `garment_spec.json`, `pair.json` and `reference.png` (the person rendered
/// wearing the garment).
pub fn generate_dataset(out: &Path, seed: u64, count: usize) -> Result<Vec<String>, IoError> {
    std::fs::create_dir_all(out).map_err(|source| IoError::Io {
        path: out.to_path_buf(),
        source,
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids = Vec::with_capacity(count);
    for i in 0..count {
        let pair_id = format!("pair_{i:03}");
        let dir = out.join(&pair_id);
        let params = FigureParams::random(&mut rng);
        let outfit = random_outfit(&mut rng);
        let person = render_person(&params, &outfit);
        person.write(&dir.join("person.png"))?;
        let target = random_target(&mut rng, i, &format!("garment_{i:03}"));
        let color = random_color(&mut rng);
        io::write_rgb(&dir.join("garment.png"), &render_garment(&target, color))?;
        io::write_json(&dir.join("garment_spec.json"), &target)?;
        io::write_json(
            &dir.join("pair.json"),
            &PairMeta {
                category: category_for(&target).into(),
                instruction: String::new(),
            },
        )?;
        let reference = render_person(&params, &dressed_outfit(&outfit, &target, color));
        io::write_rgb(&dir.join("reference.png"), &reference.image)?;
        ids.push(pair_id);
    }
    Ok(ids)
}
