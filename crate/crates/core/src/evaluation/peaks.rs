use super::decode::DecodedMaps;
use crate::grasp::GraspImage;

/// Up to `k` local maxima of the quality plane, best first.
///
/// Pixels are ranked by quality, then by row-major index, which makes the
/// order total: a pixel is a peak when it outranks every other pixel within
/// Chebyshev distance `min_distance` and its quality is positive. Returned
/// peaks are therefore more than `min_distance` apart.
pub fn extract_grasps(maps: &DecodedMaps, k: usize, min_distance: usize) -> Vec<GraspImage> {
    let (h, w) = maps.dim();
    if h == 0 || w == 0 || k == 0 {
        return Vec::new();
    }
    let q = maps.quality.as_slice().map(|s| s.to_vec()).unwrap_or_else(|| maps.quality.iter().copied().collect());
    let better = |a: usize, b: usize| q[a] > q[b] || (q[a] == q[b] && a < b);
    let r = min_distance.max(1);
    // Separable arg-max over the (2r+1)^2 window under the total order.
    let mut row_best = vec![0usize; h * w];
    for y in 0..h {
        for x in 0..w {
            let mut best = y * w + x.saturating_sub(r);
            for cx in x.saturating_sub(r) + 1..=(x + r).min(w - 1) {
                if better(y * w + cx, best) {
                    best = y * w + cx;
                }
            }
            row_best[y * w + x] = best;
        }
    }
    let mut peaks = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let mut best = row_best[y.saturating_sub(r) * w + x];
            for cy in y.saturating_sub(r) + 1..=(y + r).min(h - 1) {
                let c = row_best[cy * w + x];
                if better(c, best) {
                    best = c;
                }
            }
            let i = y * w + x;
            if best == i && q[i] > 0.0 {
                peaks.push(i);
            }
        }
    }
    peaks.sort_by(|&a, &b| if better(a, b) { std::cmp::Ordering::Less } else { std::cmp::Ordering::Greater });
    peaks
        .into_iter()
        .take(k)
        .map(|i| {
            let (row, col) = (i / w, i % w);
            GraspImage {
                u: col as f64,
                v: row as f64,
                angle: maps.angle[[row, col]] as f64,
                width: maps.width[[row, col]] as f64,
                quality: q[i] as f64,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn maps(q: Array2<f32>) -> DecodedMaps {
        let d = q.dim();
        DecodedMaps { quality: q, angle: Array2::zeros(d), width: Array2::zeros(d) }
    }

    fn bump(h: usize, w: usize, peaks: &[(f64, f64, f64)]) -> Array2<f32> {
        Array2::from_shape_fn((h, w), |(r, c)| {
            peaks
                .iter()
                .map(|&(pr, pc, a)| a * (-((r as f64 - pr).powi(2) + (c as f64 - pc).powi(2)) / (2.0 * 64.0)).exp())
                .sum::<f64>() as f32
        })
    }

    #[test]
    fn single_bump_gives_one_peak() {
        let g = extract_grasps(&maps(bump(60, 70, &[(30.0, 41.0, 1.0)])), 5, 10);
        assert_eq!(g.len(), 1);
        assert_eq!((g[0].v, g[0].u), (30.0, 41.0));
    }

    #[test]
    fn two_bumps_ordered_by_height() {
        let g = extract_grasps(&maps(bump(80, 120, &[(40.0, 30.0, 0.6), (40.0, 80.0, 0.9)])), 5, 20);
        assert_eq!(g.len(), 2);
        assert_eq!((g[0].u, g[1].u), (80.0, 30.0));
    }

    #[test]
    fn zero_map_has_no_peaks_and_flat_map_one() {
        assert!(extract_grasps(&maps(Array2::zeros((10, 10))), 5, 2).is_empty());
        let g = extract_grasps(&maps(Array2::from_elem((10, 10), 0.5)), 5, 2);
        assert_eq!(g.len(), 1);
        assert_eq!((g[0].u, g[0].v), (0.0, 0.0));
    }
}
