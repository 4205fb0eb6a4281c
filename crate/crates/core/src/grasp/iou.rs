use super::rect::GraspRectangle;

/// Intersection over union of the two rectangles' pixel footprints on an
/// `h x w` canvas. Pixel centers sit at integer coordinates; anything outside
/// the canvas is ignored for both rectangles.
pub fn rect_iou(a: &GraspRectangle, b: &GraspRectangle, canvas: (usize, usize)) -> f64 {
    let (h, w) = canvas;
    let (alo, ahi) = a.bounds();
    let (blo, bhi) = b.bounds();
    let lo = [alo[0].min(blo[0]), alo[1].min(blo[1])];
    let hi = [ahi[0].max(bhi[0]), ahi[1].max(bhi[1])];
    let range = |lo: f64, hi: f64, n: usize| -> Option<(usize, usize)> {
        let a = lo.floor().max(0.0);
        let b = hi.ceil().min(n as f64 - 1.0);
        (a <= b && b >= 0.0).then(|| (a as usize, b as usize))
    };
    let (Some((u0, u1)), Some((v0, v1))) = (range(lo[0], hi[0], w), range(lo[1], hi[1], h)) else {
        return 0.0;
    };
    let (mut inter, mut union) = (0usize, 0usize);
    for v in v0..=v1 {
        for u in u0..=u1 {
            let p = [u as f64, v as f64];
            let (ia, ib) = (a.contains(p), b.contains(p));
            inter += (ia && ib) as usize;
            union += (ia || ib) as usize;
        }
    }
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_disjoint() {
        let a = GraspRectangle::new([50.0, 50.0], 0.4, 30.0, 12.0);
        assert_eq!(rect_iou(&a, &a, (100, 100)), 1.0);
        let b = a.translated(40.0, 0.0);
        assert_eq!(rect_iou(&a, &b, (100, 100)), 0.0);
    }

    #[test]
    fn half_overlap_of_squares_is_one_third() {
        let a = GraspRectangle::new([50.0, 50.0], 0.0, 10.0, 10.0);
        let b = a.translated(5.0, 0.0);
        assert!((rect_iou(&a, &b, (100, 100)) - 1.0 / 3.0).abs() < 0.05);
    }

    #[test]
    fn outside_canvas_counts_as_empty() {
        let a = GraspRectangle::new([-50.0, -50.0], 0.0, 10.0, 10.0);
        assert_eq!(rect_iou(&a, &a, (100, 100)), 0.0);
    }
}
