//! Random partitions and brute-force reference implementations shared by the
//! integration tests and the acceptance runner. Nothing here calls the library's
//! set or shape operations; masks are built pixel by pixel.
#![allow(dead_code)]

use std::collections::BTreeSet;

use ivton_core::raster::{
    base_clothing_legend, BinaryMask, BodyPart, ClothingCategory, LabelRaster, LegendEntry, MapKind,
};
use ivton_core::rules::{Classification, Closure, GarmentSpec, LegLength, PostOp, SleeveLength};
use ivton_core::ImageRef;
use rand::Rng;

const CATEGORIES: [ClothingCategory; 6] = [
    ClothingCategory::UpperGarment,
    ClothingCategory::LowerGarment,
    ClothingCategory::OverallGarment,
    ClothingCategory::Outerwear,
    ClothingCategory::Footwear,
    ClothingCategory::Accessory,
];

/// A body map and a clothing map partitioning the same figure.
pub struct Partition {
    pub body: LabelRaster,
    pub clothing: LabelRaster,
}

/// Blocky random partition: rectangles of random body parts on a background,
/// clothing drawn from its own rectangles but restricted to the figure.
pub fn random_partition(rng: &mut impl Rng, max_side: u32) -> Partition {
    let w = rng.random_range(1..=max_side);
    let h = rng.random_range(1..=max_side);
    let n = (w * h) as usize;
    let paint = |rng: &mut dyn rand::RngCore, labels: &mut Vec<u8>, pick: &dyn Fn(&mut dyn rand::RngCore) -> u8| {
        for _ in 0..rng.random_range(1..=12) {
            let x0 = rng.random_range(0..w);
            let y0 = rng.random_range(0..h);
            let x1 = rng.random_range(x0..w);
            let y1 = rng.random_range(y0..h);
            let l = pick(rng);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    labels[(y * w + x) as usize] = l;
                }
            }
        }
    };
    let mut body = vec![0u8; n];
    paint(rng, &mut body, &|r| r.random_range(0..=9));
    // sprinkle single pixels so thin features occur too
    for _ in 0..rng.random_range(0..=n / 8 + 1) {
        body[rng.random_range(0..n)] = rng.random_range(0..=9);
    }
    let segments = rng.random_range(0..=5u8);
    let mut legend = base_clothing_legend();
    for s in 0..segments {
        let category = CATEGORIES[rng.random_range(0..CATEGORIES.len())];
        legend.insert(
            s + 2,
            LegendEntry::Tagged {
                name: format!("seg{s}"),
                category,
            },
        );
    }
    let mut clothing = vec![1u8; n];
    paint(rng, &mut clothing, &|r| r.random_range(1..=segments + 1));
    for (c, &b) in clothing.iter_mut().zip(&body) {
        if b == 0 {
            *c = 0;
        }
    }
    Partition {
        body: LabelRaster::body(w, h, body).unwrap(),
        clothing: LabelRaster::new(w, h, MapKind::Clothing, clothing, legend).unwrap(),
    }
}

pub fn random_mask(rng: &mut impl Rng, w: u32, h: u32) -> BinaryMask {
    let density: f64 = rng.random_range(0.0..=1.0);
    let bits = (0..w * h).map(|_| rng.random_bool(density)).collect();
    BinaryMask::from_bits(w, h, bits).unwrap()
}

/// Every garment spec that passes validation, one per attribute combination.
pub fn all_garments() -> Vec<GarmentSpec> {
    let mut out = Vec::new();
    for &classification in Classification::ALL {
        for &sleeve_length in SleeveLength::ALL {
            for &leg_length in LegLength::ALL {
                for &closure in Closure::ALL {
                    for outerwear in [false, true] {
                        let g = GarmentSpec {
                            id: format!("g{}", out.len()),
                            classification,
                            sleeve_length,
                            leg_length,
                            closure,
                            outerwear,
                            category_noun: "garment".into(),
                            image_ref: ImageRef::new("garment.png"),
                        };
                        if g.validate().is_ok() {
                            out.push(g);
                        }
                    }
                }
            }
        }
    }
    out
}

fn bits(w: u32, h: u32, f: impl Fn(u32, u32) -> bool) -> Vec<bool> {
    (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect()
}

/// Labels (other than 0) present under at least one set pixel of `v`.
pub fn trace(raster: &LabelRaster, v: &BinaryMask) -> BTreeSet<u8> {
    let mut out = BTreeSet::new();
    for y in 0..raster.height() {
        for x in 0..raster.width() {
            let l = raster.get(x, y);
            if l != 0 && v.get(x, y) {
                out.insert(l);
            }
        }
    }
    out
}

pub fn optimal(clothing: &LabelRaster, v: &BinaryMask) -> Vec<bool> {
    let t = trace(clothing, v);
    bits(clothing.width(), clothing.height(), |x, y| {
        let c = clothing.get(x, y);
        v.get(x, y) || (c >= 2 && t.contains(&c))
    })
}

pub fn estimated(body: &LabelRaster, clothing: &LabelRaster, b: &BTreeSet<u8>, c: &BTreeSet<u8>) -> Vec<bool> {
    bits(body.width(), body.height(), |x, y| {
        (body.get(x, y) != 0 && b.contains(&body.get(x, y))) || (clothing.get(x, y) != 0 && c.contains(&clothing.get(x, y)))
    })
}

/// Maskable clothing segments lying on any of `parts`.
pub fn c_hat(body: &LabelRaster, clothing: &LabelRaster, parts: &BTreeSet<BodyPart>) -> BTreeSet<u8> {
    let mut out = BTreeSet::new();
    for y in 0..body.height() {
        for x in 0..body.width() {
            let c = clothing.get(x, y);
            let on_part = BodyPart::from_id(body.get(x, y)).is_some_and(|p| parts.contains(&p));
            let maskable = clothing.category_of(c).is_some_and(|k| {
                !matches!(k, ClothingCategory::Footwear | ClothingCategory::Accessory)
            });
            if c >= 2 && on_part && maskable {
                out.insert(c);
            }
        }
    }
    out
}

/// Pixel-by-pixel mask realization. `None` when a stripe has no torso to anchor on.
pub fn realize(
    body: &LabelRaster,
    clothing: &LabelRaster,
    b: &BTreeSet<u8>,
    c: &BTreeSet<u8>,
    post_ops: &[PostOp],
    exposed: &BTreeSet<BodyPart>,
    stripe_fraction: f64,
) -> Option<Vec<bool>> {
    let (w, h) = body.dims();
    let mut m = estimated(body, clothing, b, c);
    let part = |x: u32, y: u32| BodyPart::from_id(body.get(x, y)).unwrap();
    for op in post_ops {
        match op {
            PostOp::ConvexifyLegs => {
                let legs = bits(w, h, |x, y| {
                    m[(y * w + x) as usize]
                        && matches!(part(x, y), BodyPart::LowerTorso | BodyPart::UpperLegs | BodyPart::LowerLegs)
                });
                let filled = convex_fill(w, h, &legs);
                for (a, f) in m.iter_mut().zip(filled) {
                    *a |= f;
                }
            }
            PostOp::OpenChestStripe => {
                let torso: Vec<(u32, u32)> = (0..h)
                    .flat_map(|y| (0..w).map(move |x| (x, y)))
                    .filter(|&(x, y)| {
                        let p = part(x, y);
                        matches!(p, BodyPart::UpperTorso | BodyPart::LowerTorso) && b.contains(&p.id())
                    })
                    .collect();
                let x0 = torso.iter().map(|p| p.0).min()?;
                let x1 = torso.iter().map(|p| p.0).max().unwrap();
                let y0 = torso.iter().map(|p| p.1).min().unwrap();
                let y1 = torso.iter().map(|p| p.1).max().unwrap();
                let bw = x1 - x0 + 1;
                let stripe = ((stripe_fraction * bw as f64).round() as u32).clamp(1, bw);
                let start = x0 + (bw - stripe) / 2;
                for y in y0..=y1 {
                    for x in start..start + stripe {
                        m[(y * w + x) as usize] = false;
                    }
                }
            }
        }
    }
    for y in 0..h {
        for x in 0..w {
            let p = part(x, y);
            if exposed.contains(&p) || matches!(p, BodyPart::Face | BodyPart::Hands | BodyPart::Feet) {
                m[(y * w + x) as usize] = false;
            }
        }
    }
    Some(m)
}

type Pt = (i64, i64);

fn cross(o: Pt, a: Pt, b: Pt) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

fn dist2(a: Pt, b: Pt) -> i64 {
    (a.0 - b.0).pow(2) + (a.1 - b.1).pow(2)
}

/// Gift wrapping over pixel centers. Counter-clockwise in a y-down frame
/// with collinear points dropped.
pub fn jarvis(points: &[Pt]) -> Vec<Pt> {
    let mut pts: Vec<Pt> = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 1 {
        return pts;
    }
    let start = pts[0];
    let mut hull = vec![start];
    let mut p = start;
    loop {
        let mut q = if pts[0] == p { pts[1] } else { pts[0] };
        for &r in &pts {
            if r == p {
                continue;
            }
            let c = cross(p, q, r);
            if c < 0 || (c == 0 && dist2(p, r) > dist2(p, q)) {
                q = r;
            }
        }
        if q == start {
            break;
        }
        hull.push(q);
        p = q;
        assert!(hull.len() <= pts.len(), "gift wrapping did not close");
    }
    hull
}

/// Convex fill by point-in-polygon tests against the gift-wrapped hull.
pub fn convex_fill(w: u32, h: u32, m: &[bool]) -> Vec<bool> {
    let pts: Vec<Pt> = (0..h as i64)
        .flat_map(|y| (0..w as i64).map(move |x| (x, y)))
        .filter(|&(x, y)| m[(y * w as i64 + x) as usize])
        .collect();
    let hull = jarvis(&pts);
    bits(w, h, |x, y| {
        let p = (x as i64, y as i64);
        match hull.len() {
            0 => false,
            1 => p == hull[0],
            2 => {
                let (a, b) = (hull[0], hull[1]);
                cross(a, b, p) == 0
                    && (a.0.min(b.0)..=a.0.max(b.0)).contains(&p.0)
                    && (a.1.min(b.1)..=a.1.max(b.1)).contains(&p.1)
            }
            n => (0..n).all(|i| cross(hull[i], hull[(i + 1) % n], p) >= 0),
        }
    })
}

/// SSIM evaluated window by window with a directly built 2-D Gaussian and
/// two-pass moments.
pub fn ssim_direct(a: &[f64], b: &[f64], w: usize, h: usize) -> f64 {
    let (win, sigma) = (11usize, 1.5f64);
    let c = (win / 2) as f64;
    let mut g = vec![0.0; win * win];
    for i in 0..win {
        for j in 0..win {
            let d2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
            g[i * win + j] = (-d2 / (2.0 * sigma * sigma)).exp();
        }
    }
    let s: f64 = g.iter().sum();
    g.iter_mut().for_each(|v| *v /= s);
    let c1 = (0.01f64 * 255.0).powi(2);
    let c2 = (0.03f64 * 255.0).powi(2);
    let mut total = 0.0;
    let mut count = 0;
    for y0 in 0..=h - win {
        for x0 in 0..=w - win {
            let at = |img: &[f64], i: usize, j: usize| img[(y0 + i) * w + x0 + j];
            let (mut ma, mut mb) = (0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    ma += g[i * win + j] * at(a, i, j);
                    mb += g[i * win + j] * at(b, i, j);
                }
            }
            let (mut va, mut vb, mut cov) = (0.0, 0.0, 0.0);
            for i in 0..win {
                for j in 0..win {
                    let (da, db) = (at(a, i, j) - ma, at(b, i, j) - mb);
                    va += g[i * win + j] * da * da;
                    vb += g[i * win + j] * db * db;
                    cov += g[i * win + j] * da * db;
                }
            }
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

/// The 16x16 SSIM fixture: a diagonal ramp against a perturbed copy.
pub fn ssim_fixture() -> (Vec<f64>, Vec<f64>) {
    let mut a = Vec::with_capacity(256);
    let mut b = Vec::with_capacity(256);
    for y in 0..16i64 {
        for x in 0..16i64 {
            let v = (x * 13 + y * 7) % 256;
            a.push(v as f64);
            b.push(((v + (x * y) % 17 - 8).clamp(0, 255)) as f64);
        }
    }
    (a, b)
}

pub mod scenario;
