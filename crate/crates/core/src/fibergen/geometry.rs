//! Planar segment kernels.

pub type Point2 = [f64; 2];

/// Outcome of intersecting two closed segments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SegmentIntersection {
    None,
    /// A single common point, with its parameters along both segments.
    Point { at: Point2, s: f64, t: f64 },
    /// The segments are collinear and share more than one point.
    Overlap,
}

fn cross(a: Point2, b: Point2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn sub(a: Point2, b: Point2) -> Point2 {
    [a[0] - b[0], a[1] - b[1]]
}

/// Intersection of the closed segments `p1 p2` and `q1 q2`.
pub fn segment_intersection(p1: Point2, p2: Point2, q1: Point2, q2: Point2) -> SegmentIntersection {
    let r = sub(p2, p1);
    let d = sub(q2, q1);
    let w = sub(q1, p1);
    let denom = cross(r, d);
    let rr = r[0] * r[0] + r[1] * r[1];
    let dd = d[0] * d[0] + d[1] * d[1];
    if denom.abs() <= 1e-14 * (rr * dd).sqrt() {
        // parallel
        if cross(w, r).abs() > 1e-14 * (rr * (w[0] * w[0] + w[1] * w[1])).sqrt() {
            return SegmentIntersection::None;
        }
        let t0 = (w[0] * r[0] + w[1] * r[1]) / rr;
        let t1 = t0 + (d[0] * r[0] + d[1] * r[1]) / rr;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        let lo = lo.max(0.0);
        let hi = hi.min(1.0);
        return if lo > hi {
            SegmentIntersection::None
        } else if lo == hi {
            // touching end to end
            let at = [p1[0] + lo * r[0], p1[1] + lo * r[1]];
            let t = if sub(at, q1) == [0.0, 0.0] { 0.0 } else { 1.0 };
            SegmentIntersection::Point { at, s: lo, t }
        } else {
            SegmentIntersection::Overlap
        };
    }
    let s = cross(w, d) / denom;
    let t = cross(w, r) / denom;
    if !(0.0..=1.0).contains(&s) || !(0.0..=1.0).contains(&t) {
        return SegmentIntersection::None;
    }
    let at = if s == 0.0 {
        p1
    } else if s == 1.0 {
        p2
    } else if t == 0.0 {
        q1
    } else if t == 1.0 {
        q2
    } else {
        [p1[0] + s * r[0], p1[1] + s * r[1]]
    };
    SegmentIntersection::Point { at, s, t }
}

/// Liang-Barsky clipping of `a b` to the unit square. Coordinates cut by a
/// side are set exactly to 0 or 1. `None` when nothing of positive length
/// remains.
pub fn clip_to_unit_square(a: Point2, b: Point2) -> Option<(Point2, Point2)> {
    let d = sub(b, a);
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    // which side (axis, value) fixes each end, if any
    let mut fix0: Option<(usize, f64)> = None;
    let mut fix1: Option<(usize, f64)> = None;
    for axis in 0..2 {
        for (p, q, side) in [(-d[axis], a[axis], 0.0), (d[axis], 1.0 - a[axis], 1.0)] {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
                continue;
            }
            let r = q / p;
            if p < 0.0 {
                if r > t0 {
                    t0 = r;
                    fix0 = Some((axis, side));
                }
            } else if r < t1 {
                t1 = r;
                fix1 = Some((axis, side));
            }
        }
    }
    if t0 >= t1 {
        return None;
    }
    let point = |t: f64, fix: Option<(usize, f64)>| {
        let mut p = [a[0] + t * d[0], a[1] + t * d[1]];
        if let Some((axis, v)) = fix {
            p[axis] = v;
        }
        p[0] = p[0].clamp(0.0, 1.0);
        p[1] = p[1].clamp(0.0, 1.0);
        p
    };
    let (c0, c1) = (point(t0, fix0), point(t1, fix1));
    (c0 != c1).then_some((c0, c1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_diagonals() {
        match segment_intersection([0.0, 0.0], [1.0, 1.0], [0.0, 1.0], [1.0, 0.0]) {
            SegmentIntersection::Point { at, s, t } => {
                assert_eq!(at, [0.5, 0.5]);
                assert_eq!((s, t), (0.5, 0.5));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parallel_and_collinear() {
        assert_eq!(
            segment_intersection([0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]),
            SegmentIntersection::None
        );
        assert_eq!(
            segment_intersection([0.0, 0.0], [1.0, 0.0], [0.5, 0.0], [2.0, 0.0]),
            SegmentIntersection::Overlap
        );
        assert_eq!(
            segment_intersection([0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]),
            SegmentIntersection::None
        );
        match segment_intersection([0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [2.0, 0.0]) {
            SegmentIntersection::Point { at, s, t } => {
                assert_eq!(at, [1.0, 0.0]);
                assert_eq!((s, t), (1.0, 0.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn endpoint_touching() {
        match segment_intersection([0.0, 0.0], [1.0, 0.0], [0.5, 0.0], [0.5, 1.0]) {
            SegmentIntersection::Point { at, t, .. } => {
                assert_eq!(at, [0.5, 0.0]);
                assert_eq!(t, 0.0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            segment_intersection([0.0, 0.0], [1.0, 0.0], [0.5, 0.1], [0.5, 1.0]),
            SegmentIntersection::None
        );
    }

    #[test]
    fn clipping() {
        let (a, b) = clip_to_unit_square([-0.5, 0.5], [0.5, 0.5]).unwrap();
        assert_eq!(a, [0.0, 0.5]);
        assert_eq!(b, [0.5, 0.5]);
        let (a, b) = clip_to_unit_square([0.9, 0.2], [1.3, 0.6]).unwrap();
        assert_eq!(a, [0.9, 0.2]);
        assert_eq!(b[0], 1.0);
        assert!((b[1] - 0.3).abs() < 1e-15);
        assert!(clip_to_unit_square([1.1, 0.0], [1.5, 1.0]).is_none());
        assert!(clip_to_unit_square([-0.1, -0.1], [0.0, 0.0]).is_none());
        let (a, b) = clip_to_unit_square([-1.0, -1.0], [2.0, 2.0]).unwrap();
        assert_eq!((a, b), ([0.0, 0.0], [1.0, 1.0]));
    }
}
