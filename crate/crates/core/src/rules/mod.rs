//! Parts-inclusion rules: from a garment, its attributes and a structured style
//! instruction to estimated traces, post-ops and the final inpainting mask.

mod garment;
mod table;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use garment::{
    Classification, Closure, ClosureState, GarmentSpec, LegLength, SleeveLength, Sleeves,
    StyleInstruction, Tuck,
};
pub use table::{rule_key, OneOrMany, PostOp, RuleMatch, RuleOutcome, RuleRow, RuleTable};

use crate::masking::{estimated_mask, MaskingError, Trace};
use crate::raster::io::IoError;
use crate::raster::taxonomy::UNCLOTHED;
use crate::raster::{
    convex_fill, dilate, remove_center_stripe, BinaryMask, BodyPart, LabelRaster, MapKind,
    RasterError, DEFAULT_STRIPE_FRACTION,
};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("invalid garment: {0}")]
    InvalidGarment(String),
    #[error("no parts-inclusion rule for {key}")]
    Unmatched { key: String },
    #[error("invalid rule table: {0}")]
    InvalidTable(String),
    #[error(transparent)]
    Masking(#[from] MaskingError),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Io(#[from] IoError),
}

/// Tunables for mask realization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MaskOptions {
    /// Open-chest stripe width as a fraction of the torso bounding-box width.
    pub stripe_fraction: f64,
    /// Square dilation radius applied before exposure subtraction. 0 disables.
    pub dilation_radius: u32,
    /// A clothing segment joins the C-trace only if it overlaps the body-part
    /// region in more than this many pixels.
    pub trace_noise_threshold: u64,
}

impl Default for MaskOptions {
    fn default() -> Self {
        Self {
            stripe_fraction: DEFAULT_STRIPE_FRACTION,
            dilation_radius: 0,
            trace_noise_threshold: 0,
        }
    }
}

/// Estimated traces plus what realization must do with them.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEstimate {
    pub b_hat: Trace,
    pub c_hat: Trace,
    pub post_ops: Vec<PostOp>,
    pub exposed_parts: BTreeSet<BodyPart>,
    /// Ids of the rule rows that produced this estimate.
    pub rule_trace: Vec<String>,
}

impl TraceEstimate {
    pub fn body_parts(&self) -> BTreeSet<BodyPart> {
        self.b_hat
            .labels
            .iter()
            .filter_map(|&l| BodyPart::from_id(l))
            .collect()
    }
}

/// Evaluates the rule table for one garment against the person's segmentation.
///
/// The C-trace is every maskable clothing segment touching the included or
/// exposed body parts.
pub fn infer_traces(
    rules: &RuleTable,
    garment: &GarmentSpec,
    instruction: &StyleInstruction,
    body: &LabelRaster,
    clothing: &LabelRaster,
    options: &MaskOptions,
) -> Result<TraceEstimate, RuleError> {
    check_maps(body, clothing)?;
    let outcome = rules.evaluate(garment, instruction)?;
    let touched = body.parts_region(outcome.parts.iter().chain(&outcome.exposed))?;
    let mut overlap = [0u64; 256];
    for (&label, &bit) in clothing.labels().iter().zip(touched.bits()) {
        if bit {
            overlap[label as usize] += 1;
        }
    }
    let segments = clothing.legend().iter().filter_map(|(&id, entry)| {
        let maskable = entry.category().is_some_and(|c| c.is_maskable());
        (id > UNCLOTHED && maskable && overlap[id as usize] > options.trace_noise_threshold)
            .then_some(id)
    });
    Ok(TraceEstimate {
        b_hat: Trace::new(MapKind::BodyParts, outcome.parts.iter().map(|p| p.id())),
        c_hat: Trace::new(MapKind::Clothing, segments),
        post_ops: outcome.post_ops,
        exposed_parts: outcome.exposed,
        rule_trace: vec![outcome.row_id],
    })
}

fn check_maps(body: &LabelRaster, clothing: &LabelRaster) -> Result<(), RuleError> {
    for (raster, kind) in [(body, MapKind::BodyParts), (clothing, MapKind::Clothing)] {
        if raster.kind() != kind {
            return Err(MaskingError::KindMismatch {
                expected: kind,
                found: raster.kind(),
            }
            .into());
        }
    }
    clothing.ensure_same_dims(body.dims())?;
    Ok(())
}

/// Trace union, then post-ops in order, then removal of exposed and identity parts.
pub fn realize_mask(
    est: &TraceEstimate,
    body: &LabelRaster,
    clothing: &LabelRaster,
    options: &MaskOptions,
) -> Result<BinaryMask, RuleError> {
    let mut m = estimated_mask(body, clothing, &est.b_hat, &est.c_hat)?;
    for op in &est.post_ops {
        m = match op {
            PostOp::ConvexifyLegs => {
                let legs = m.intersect(&body.parts_region(&BodyPart::LEGS_AREA)?)?;
                m.union(&convex_fill(&legs))?
            }
            PostOp::OpenChestStripe => {
                let parts = est.body_parts();
                let torso = BodyPart::TORSO.iter().filter(|p| parts.contains(p));
                let anchor = body.parts_region(torso)?;
                remove_center_stripe(&m, &anchor, options.stripe_fraction)?
            }
        };
    }
    if options.dilation_radius > 0 {
        m = dilate(&m, options.dilation_radius);
    }
    let keep = body.parts_region(est.exposed_parts.iter().chain(&BodyPart::IDENTITY))?;
    Ok(m.subtract(&keep)?)
}

/// Baseline masker: the filled bounding box of the same trace union.
pub fn bbox_baseline_mask(
    est: &TraceEstimate,
    body: &LabelRaster,
    clothing: &LabelRaster,
) -> Result<BinaryMask, RuleError> {
    Ok(estimated_mask(body, clothing, &est.b_hat, &est.c_hat)?.bbox_fill())
}
