//! Shape post-operations on binary masks.

use super::{BinaryMask, RasterError};

type Point = (i64, i64);

fn cross(o: Point, a: Point, b: Point) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull of pixel centers (monotone chain). Collinear points are dropped;
/// degenerate inputs yield one or two vertices.
pub(crate) fn convex_hull(mask: &BinaryMask) -> Vec<Point> {
    // iter_set is row-major; the chain wants (x, y) lexicographic order.
    let mut pts: Vec<Point> = mask.iter_set().map(|(x, y)| (x as i64, y as i64)).collect();
    pts.sort_unstable();
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let mut lower: Vec<Point> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<Point> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Filled convex hull: a pixel is set iff its center lies inside or on the hull
/// of the set pixel centers. Exact integer arithmetic.
pub fn convex_fill(m: &BinaryMask) -> BinaryMask {
    let hull = convex_hull(m);
    let mut out = BinaryMask::empty(m.width(), m.height());
    if hull.is_empty() {
        return out;
    }
    let n = hull.len();
    let ymin = hull.iter().map(|p| p.1).min().unwrap();
    let ymax = hull.iter().map(|p| p.1).max().unwrap();
    for y in ymin..=ymax {
        let mut lo = i64::MAX;
        let mut hi = i64::MIN;
        for i in 0..n {
            let p = hull[i];
            let q = hull[(i + 1) % n];
            if y < p.1.min(q.1) || y > p.1.max(q.1) {
                continue;
            }
            if p.1 == q.1 {
                lo = lo.min(p.0.min(q.0));
                hi = hi.max(p.0.max(q.0));
                continue;
            }
            // x = p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y), kept as num/den with den > 0
            let (mut num, mut den) = ((y - p.1) * (q.0 - p.0), q.1 - p.1);
            if den < 0 {
                num = -num;
                den = -den;
            }
            num += p.0 * den;
            lo = lo.min(-(-num).div_euclid(den));
            hi = hi.max(num.div_euclid(den));
        }
        for x in lo.max(0)..=hi.min(m.width() as i64 - 1) {
            out.set(x as u32, y as u32, true);
        }
    }
    out
}

/// Default stripe width as a fraction of the anchor's bounding-box width.
pub const DEFAULT_STRIPE_FRACTION: f64 = 0.18;

/// Clears a vertical stripe centred on the anchor's bounding box.
///
/// The stripe is `round(width_fraction * bbox_width)` pixels wide (at least 1) and
/// spans the anchor's vertical extent. Pixels outside the stripe are untouched.
pub fn remove_center_stripe(
    m: &BinaryMask,
    anchor: &BinaryMask,
    width_fraction: f64,
) -> Result<BinaryMask, RasterError> {
    m.ensure_same_dims(anchor)?;
    if !(width_fraction > 0.0 && width_fraction < 1.0) {
        return Err(RasterError::InvalidFraction(width_fraction));
    }
    let bb = anchor.bbox().ok_or(RasterError::EmptyAnchor)?;
    let bw = bb.width();
    let stripe = ((width_fraction * bw as f64).round() as u32).clamp(1, bw);
    let x_start = bb.x0 + (bw - stripe) / 2;
    let x_end = x_start + stripe;
    let mut out = m.clone();
    for y in bb.y0..=bb.y1 {
        for x in x_start..x_end {
            out.set(x, y, false);
        }
    }
    Ok(out)
}

/// Dilation with a square structuring element of the given radius (Chebyshev ball).
pub fn dilate(m: &BinaryMask, radius: u32) -> BinaryMask {
    if radius == 0 {
        return m.clone();
    }
    let (w, h) = m.dims();
    let r = radius as i64;
    // separable: horizontal pass then vertical pass
    let horizontal = BinaryMask::from_fn(w, h, |x, y| {
        let lo = (x as i64 - r).max(0) as u32;
        let hi = (x as i64 + r).min(w as i64 - 1) as u32;
        (lo..=hi).any(|xx| m.get(xx, y))
    });
    BinaryMask::from_fn(w, h, |x, y| {
        let lo = (y as i64 - r).max(0) as u32;
        let hi = (y as i64 + r).min(h as i64 - 1) as u32;
        (lo..=hi).any(|yy| horizontal.get(x, yy))
    })
}
