//! Trace calculus over the body-parts and clothing partitions of the figure.
//!
//! A trace is the set of segments of one partition touched by a region. The
//! optimal mask is the touched clothing plus the region itself; the estimated
//! mask is the union of the segments named by a pair of (estimated) traces.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::taxonomy::{BACKGROUND, UNCLOTHED};
use crate::raster::{BinaryMask, LabelRaster, MapKind, RasterError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaskingError {
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error("trace built on a {found:?} map where a {expected:?} map is required")]
    KindMismatch { expected: MapKind, found: MapKind },
    #[error("cannot compute efficiency of a zero-size mask")]
    ZeroSize,
}

/// Set of segment labels of one partition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub map_kind: MapKind,
    pub labels: BTreeSet<u8>,
}

impl Trace {
    pub fn new(map_kind: MapKind, labels: impl IntoIterator<Item = u8>) -> Self {
        let labels = labels.into_iter().filter(|&l| l != BACKGROUND).collect();
        Self { map_kind, labels }
    }

    pub fn empty(map_kind: MapKind) -> Self {
        Self {
            map_kind,
            labels: BTreeSet::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Drops the unclothed label from a clothing trace.
    pub fn without_unclothed(mut self) -> Self {
        if self.map_kind == MapKind::Clothing {
            self.labels.remove(&UNCLOTHED);
        }
        self
    }
}

/// Non-background labels whose region meets `v` in at least one pixel.
pub fn compute_trace(raster: &LabelRaster, v: &BinaryMask) -> Result<Trace, MaskingError> {
    compute_trace_with_threshold(raster, v, 0)
}

/// As [`compute_trace`], but a label is only kept when its overlap with `v`
/// exceeds `noise_threshold` pixels.
pub fn compute_trace_with_threshold(
    raster: &LabelRaster,
    v: &BinaryMask,
    noise_threshold: u64,
) -> Result<Trace, MaskingError> {
    raster.ensure_same_dims(v.dims())?;
    let mut overlap = [0u64; 256];
    for (&label, &bit) in raster.labels().iter().zip(v.bits()) {
        if bit {
            overlap[label as usize] += 1;
        }
    }
    let labels = (1..=255u8).filter(|&l| overlap[l as usize] > noise_threshold);
    Ok(Trace::new(raster.kind(), labels))
}

/// Touched clothing (excluding the unclothed area) united with `v`.
pub fn optimal_mask(clothing: &LabelRaster, v: &BinaryMask) -> Result<BinaryMask, MaskingError> {
    let trace = compute_trace(clothing, v)?.without_unclothed();
    let worn = clothing.region_of(trace.labels.iter().copied())?;
    Ok(worn.union(v)?)
}

/// Union of the clothing segments in `c_hat` and the body parts in `b_hat`.
pub fn estimated_mask(
    body: &LabelRaster,
    clothing: &LabelRaster,
    b_hat: &Trace,
    c_hat: &Trace,
) -> Result<BinaryMask, MaskingError> {
    expect_kind(body.kind(), MapKind::BodyParts)?;
    expect_kind(clothing.kind(), MapKind::Clothing)?;
    expect_kind(b_hat.map_kind, MapKind::BodyParts)?;
    expect_kind(c_hat.map_kind, MapKind::Clothing)?;
    clothing.ensure_same_dims(body.dims())?;
    let parts = body.region_of(b_hat.labels.iter().copied())?;
    let worn = clothing.region_of(c_hat.labels.iter().copied())?;
    Ok(parts.union(&worn)?)
}

fn expect_kind(found: MapKind, expected: MapKind) -> Result<(), MaskingError> {
    if found != expected {
        return Err(MaskingError::KindMismatch { expected, found });
    }
    Ok(())
}

/// Masked-area accounting: `efficiency = 1 - mask_area / total_area`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskReport {
    pub mask_area: u64,
    pub total_area: u64,
    pub efficiency: f64,
}

/// Counts are exact integers; the ratio is a single f64 division.
pub fn mask_efficiency(m: &BinaryMask) -> Result<MaskReport, MaskingError> {
    let total_area = m.total_area();
    if total_area == 0 {
        return Err(MaskingError::ZeroSize);
    }
    let mask_area = m.area();
    Ok(MaskReport {
        mask_area,
        total_area,
        efficiency: 1.0 - mask_area as f64 / total_area as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{base_clothing_legend, ClothingCategory, LegendEntry};

    fn clothing(labels: Vec<u8>, w: u32, h: u32) -> LabelRaster {
        let mut legend = base_clothing_legend();
        for id in 2..=5 {
            legend.insert(
                id,
                LegendEntry::Tagged {
                    name: format!("seg{id}"),
                    category: ClothingCategory::UpperGarment,
                },
            );
        }
        LabelRaster::new(w, h, MapKind::Clothing, labels, legend).unwrap()
    }

    #[rustfmt::skip]
    fn fixture() -> LabelRaster {
        clothing(vec![
            0, 1, 2, 2,
            0, 1, 2, 2,
            3, 3, 5, 5,
            4, 4, 5, 0,
        ], 4, 4)
    }

    #[test]
    fn trace_examples() {
        let r = fixture();
        assert!(compute_trace(&r, &BinaryMask::empty(4, 4)).unwrap().is_empty());
        let all = compute_trace(&r, &BinaryMask::full(4, 4)).unwrap();
        assert_eq!(all.labels, BTreeSet::from([1, 2, 3, 4, 5]));
        // v touches one pixel of label 2 and two of label 5
        let v = BinaryMask::from_fn(4, 4, |x, y| (x, y) == (3, 1) || (x >= 2 && y == 2));
        assert_eq!(compute_trace(&r, &v).unwrap().labels, BTreeSet::from([2, 5]));
        assert_eq!(
            compute_trace_with_threshold(&r, &v, 1).unwrap().labels,
            BTreeSet::from([5])
        );
        assert!(compute_trace(&r, &BinaryMask::empty(3, 4)).is_err());
    }

    #[test]
    fn optimal_mask_examples() {
        let r = fixture();
        assert!(optimal_mask(&r, &BinaryMask::empty(4, 4)).unwrap().is_empty());
        let skin_only = BinaryMask::from_fn(4, 4, |x, y| x == 1 && y < 2);
        assert_eq!(optimal_mask(&r, &skin_only).unwrap(), skin_only);
        let partial = BinaryMask::from_fn(4, 4, |x, y| (x, y) == (2, 0) || (x, y) == (1, 0));
        let expected = BinaryMask::from_fn(4, 4, |x, y| r.get(x, y) == 2 || partial.get(x, y));
        assert_eq!(optimal_mask(&r, &partial).unwrap(), expected);
    }

    #[test]
    fn estimated_mask_checks_kinds() {
        let r = fixture();
        let body = LabelRaster::body(4, 4, vec![2; 16]).unwrap();
        let b = Trace::new(MapKind::BodyParts, [2]);
        let c = Trace::new(MapKind::Clothing, [3]);
        assert_eq!(estimated_mask(&body, &r, &b, &c).unwrap().area(), 16);
        assert!(matches!(
            estimated_mask(&body, &r, &c, &b),
            Err(MaskingError::KindMismatch { .. })
        ));
        assert!(estimated_mask(&r, &r, &b, &c).is_err());
        let none = estimated_mask(
            &body,
            &r,
            &Trace::empty(MapKind::BodyParts),
            &Trace::empty(MapKind::Clothing),
        )
        .unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn efficiency_examples() {
        assert_eq!(mask_efficiency(&BinaryMask::full(8, 8)).unwrap().efficiency, 0.0);
        assert_eq!(mask_efficiency(&BinaryMask::empty(8, 8)).unwrap().efficiency, 1.0);
        let half = BinaryMask::from_fn(10, 10, |x, _| x < 5);
        let rep = mask_efficiency(&half).unwrap();
        assert_eq!((rep.mask_area, rep.total_area, rep.efficiency), (50, 100, 0.5));
        assert_eq!(
            mask_efficiency(&BinaryMask::empty(0, 3)).unwrap_err(),
            MaskingError::ZeroSize
        );
        assert_eq!(
            serde_json::to_string(&rep).unwrap(),
            r#"{"mask_area":50,"total_area":100,"efficiency":0.5}"#
        );
    }
}
