//! Corner-based quad quality metrics.

use crate::geom::{cross, Point};

/// Signed inverse condition number of one corner, from its two edge vectors.
#[inline]
pub fn sicn_corner(prev: &Point, here: &Point, next: &Point) -> f64 {
    let a = here - prev;
    let b = next - here;
    let den = a.norm_squared() + b.norm_squared();
    if den == 0.0 {
        return 0.0;
    }
    2.0 * cross(&a, &b) / den
}

#[inline]
pub fn sj_corner(prev: &Point, here: &Point, next: &Point) -> f64 {
    let a = here - prev;
    let b = next - here;
    let den = a.norm() * b.norm();
    if den == 0.0 {
        return 0.0;
    }
    cross(&a, &b) / den
}

fn min_over_corners(q: &[Point; 4], f: fn(&Point, &Point, &Point) -> f64) -> f64 {
    (0..4)
        .map(|i| f(&q[(i + 3) % 4], &q[i], &q[(i + 1) % 4]))
        .fold(f64::INFINITY, f64::min)
}

/// Minimum corner SICN of a quad, in `[-1, 1]`. Degenerate quads give 0.
pub fn sicn_quality(q: &[Point; 4]) -> f64 {
    min_over_corners(q, sicn_corner)
}

/// Minimum corner scaled Jacobian of a quad.
pub fn scaled_jacobian(q: &[Point; 4]) -> f64 {
    min_over_corners(q, sj_corner)
}

/// Minimum and mean SICN over a set of quads.
pub fn sicn_stats<'a>(quads: impl IntoIterator<Item = [Point; 4]>) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut sum = 0.0;
    let mut n = 0usize;
    for q in quads {
        let s = sicn_quality(&q);
        min = min.min(s);
        sum += s;
        n += 1;
    }
    if n == 0 {
        (1.0, 1.0)
    } else {
        (min, sum / n as f64)
    }
}
