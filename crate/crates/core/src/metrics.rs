//! SSIM and per-category aggregation of evaluation records.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::names::named_enum;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum MetricError {
    #[error("images differ in size: {0:?} vs {1:?}")]
    DimensionMismatch((u32, u32), (u32, u32)),
    #[error("window {window} must be odd and fit in a {width}x{height} image")]
    BadWindow { window: usize, width: u32, height: u32 },
}

/// Single-channel floating-point image.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayF {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f64>,
}

impl GrayF {
    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> f64) -> Self {
        let data = (0..height).flat_map(|y| (0..width).map(move |x| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self { width, height, data }
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.data[(y * self.width + x) as usize]
    }
}

/// ITU-R BT.601 luma, unrounded.
pub fn luma(img: &RgbImage) -> GrayF {
    GrayF::from_fn(img.width(), img.height(), |x, y| {
        let [r, g, b] = img.get_pixel(x, y).0;
        0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 255.0,
        }
    }
}

/// Normalized 1-D Gaussian; the 2-D window is its outer product.
pub fn gaussian_kernel(window: usize, sigma: f64) -> Vec<f64> {
    let c = (window / 2) as f64;
    let raw: Vec<f64> = (0..window)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / sum).collect()
}

/// Valid-mode separable filtering: output is (w - k + 1) x (h - k + 1).
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64]) -> Vec<f64> {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k.iter().enumerate().map(|(i, kv)| kv * horiz[(y + i) * ow + x]).sum();
        }
    }
    out
}

/// Mean local SSIM over every window position fully inside the image.
pub fn ssim(a: &GrayF, b: &GrayF, p: &SsimParams) -> Result<f64, MetricError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(MetricError::DimensionMismatch((a.width, a.height), (b.width, b.height)));
    }
    let (w, h) = (a.width as usize, a.height as usize);
    if p.window.is_multiple_of(2) || p.window > w.min(h) {
        return Err(MetricError::BadWindow {
            window: p.window,
            width: a.width,
            height: a.height,
        });
    }
    let k = gaussian_kernel(p.window, p.sigma);
    let c1 = (p.k1 * p.dynamic_range).powi(2);
    let c2 = (p.k2 * p.dynamic_range).powi(2);
    let prod = |f: fn(f64, f64) -> f64| -> Vec<f64> { a.data.iter().zip(&b.data).map(|(&x, &y)| f(x, y)).collect() };
    let mu_a = filter_valid(&a.data, w, h, &k);
    let mu_b = filter_valid(&b.data, w, h, &k);
    let e_aa = filter_valid(&prod(|x, _| x * x), w, h, &k);
    let e_bb = filter_valid(&prod(|_, y| y * y), w, h, &k);
    let e_ab = filter_valid(&prod(|x, y| x * y), w, h, &k);
    let mut total = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let va = e_aa[i] - ma * ma;
        let vb = e_bb[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / mu_a.len() as f64)
}

/// SSIM on the luma of two RGB images.
pub fn ssim_rgb(a: &RgbImage, b: &RgbImage, p: &SsimParams) -> Result<f64, MetricError> {
    ssim(&luma(a), &luma(b), p)
}

named_enum! {
    pub enum Category {
        Dresses => "dresses",
        UpperBody => "upper_body",
        LowerBody => "lower_body",
        VitonHd => "viton_hd",
        Synthetic => "synthetic",
    }
}

named_enum! {
    /// Mask construction method being evaluated.
    pub enum Masker {
        Trace => "trace",
        BboxBaseline => "bbox_baseline",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub pair_id: String,
    pub category: Category,
    pub masker: Masker,
    pub efficiency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssim: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub masker: Masker,
    pub category: Category,
    pub count: usize,
    pub efficiency: f64,
    /// Mean over the records that have an SSIM value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ssim: Option<f64>,
}

/// Per (masker, category) arithmetic means. Categories without records are omitted.
pub fn aggregate(records: &[EvalRecord]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(Masker, Category), Vec<&EvalRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.masker, r.category)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((masker, category), rs)| {
            let ssims: Vec<f64> = rs.iter().filter_map(|r| r.ssim).collect();
            AggregateRow {
                masker,
                category,
                count: rs.len(),
                efficiency: rs.iter().map(|r| r.efficiency).sum::<f64>() / rs.len() as f64,
                ssim: (!ssims.is_empty()).then(|| ssims.iter().sum::<f64>() / ssims.len() as f64),
            }
        })
        .collect()
}

fn render_table(title: &str, rows: &[AggregateRow], cell: impl Fn(&AggregateRow) -> Option<f64>) -> String {
    let cats: Vec<Category> = {
        let mut c: Vec<Category> = rows.iter().map(|r| r.category).collect();
        c.sort();
        c.dedup();
        c
    };
    let maskers: Vec<Masker> = {
        let mut m: Vec<Masker> = rows.iter().map(|r| r.masker).collect();
        m.dedup();
        m
    };
    let mut grid: Vec<Vec<String>> = vec![std::iter::once(title.to_string())
        .chain(cats.iter().map(|c| c.to_string()))
        .collect()];
    for m in &maskers {
        let mut line = vec![m.to_string()];
        for c in &cats {
            let v = rows
                .iter()
                .find(|r| r.masker == *m && r.category == *c)
                .and_then(&cell);
            line.push(v.map_or("-".into(), |v| format!("{v:.4}")));
        }
        grid.push(line);
    }
    let widths: Vec<usize> = (0..grid[0].len())
        .map(|i| grid.iter().map(|l| l[i].len()).max().unwrap_or(0).max(3))
        .collect();
    let fmt_line = |l: &[String]| {
        let cells: Vec<String> = l.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
        format!("| {} |\n", cells.join(" | "))
    };
    let mut out = fmt_line(&grid[0]);
    let dashes: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&format!("|-{}-|\n", dashes.join("-|-")));
    for l in &grid[1..] {
        out.push_str(&fmt_line(l));
    }
    out
}

/// Markdown tables, maskers as rows and categories as columns: efficiency, then SSIM
/// when any record has one.
pub fn to_markdown(rows: &[AggregateRow]) -> String {
    if rows.is_empty() {
        return "No records.\n".into();
    }
    let mut out = String::new();
    let _ = writeln!(out, "Mask efficiency\n");
    out.push_str(&render_table("masker", rows, |r| Some(r.efficiency)));
    if rows.iter().any(|r| r.ssim.is_some()) {
        let _ = writeln!(out, "\nSSIM\n");
        out.push_str(&render_table("masker", rows, |r| r.ssim));
    }
    out
}
