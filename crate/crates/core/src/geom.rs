//! Small planar geometry toolbox shared by every stage.

use nalgebra::{Point2, Vector2};

pub type Point = Point2<f64>;
pub type Vector = Vector2<f64>;

#[inline]
pub fn pt(x: f64, y: f64) -> Point {
    Point::new(x, y)
}

/// z-component of the 2D cross product.
#[inline]
pub fn cross(a: &Vector, b: &Vector) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Twice the signed area of triangle (a, b, c); positive when counterclockwise.
#[inline]
pub fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    cross(&(b - a), &(c - a))
}

pub fn triangle_area(a: &Point, b: &Point, c: &Point) -> f64 {
    0.5 * orient(a, b, c)
}

/// Signed area of a closed polygon (shoelace).
pub fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

pub fn centroid(pts: &[Point]) -> Point {
    let mut c = Vector::zeros();
    for p in pts {
        c += p.coords;
    }
    Point::from(c / pts.len() as f64)
}

/// Closest point to `p` on segment `[a, b]` and its parameter in `[0, 1]`.
pub fn project_on_segment(p: &Point, a: &Point, b: &Point) -> (Point, f64) {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (*a, 0.0);
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (a + ab * t, t)
}

pub fn segment_distance(p: &Point, a: &Point, b: &Point) -> f64 {
    let (q, _) = project_on_segment(p, a, b);
    (p - q).norm()
}

/// Winding number of a closed polygon around `p` (non-zero means inside).
pub fn winding_number(p: &Point, poly: &[Point]) -> i32 {
    let n = poly.len();
    let mut wn = 0;
    for i in 0..n {
        let a = &poly[i];
        let b = &poly[(i + 1) % n];
        if a.y <= p.y {
            if b.y > p.y && orient(a, b, p) > 0.0 {
                wn += 1;
            }
        } else if b.y <= p.y && orient(a, b, p) < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Proper or touching intersection test between segments `[a, b]` and `[c, d]`.
pub fn segments_intersect(a: &Point, b: &Point, c: &Point, d: &Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |p: &Point, q: &Point, r: &Point, o: f64| {
        o == 0.0
            && r.x >= p.x.min(q.x)
            && r.x <= p.x.max(q.x)
            && r.y >= p.y.min(q.y)
            && r.y <= p.y.max(q.y)
    };
    on(c, d, a, d1) || on(c, d, b, d2) || on(a, b, c, d3) || on(a, b, d, d4)
}

/// Angle of a vector in `(-pi, pi]`.
#[inline]
pub fn angle_of(v: &Vector) -> f64 {
    v.y.atan2(v.x)
}

/// Wraps an angle into `[-period/2, period/2)`.
pub fn wrap_angle(a: f64, period: f64) -> f64 {
    let mut r = a.rem_euclid(period);
    if r >= 0.5 * period {
        r -= period;
    }
    r
}

/// Interior angle at `b` of the polyline `a -> b -> c`, measured on the left
/// side (the interior of a counterclockwise loop). Result in `(0, 2pi)`.
pub fn interior_angle(a: &Point, b: &Point, c: &Point) -> f64 {
    let u = a - b;
    let v = c - b;
    let ang = cross(&v, &u).atan2(v.dot(&u));
    if ang <= 0.0 {
        ang + 2.0 * std::f64::consts::PI
    } else {
        ang
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min: Point,
    pub max: Point,
}

impl BBox {
    pub fn empty() -> Self {
        BBox {
            min: pt(f64::INFINITY, f64::INFINITY),
            max: pt(f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn of<'a>(pts: impl IntoIterator<Item = &'a Point>) -> Self {
        let mut b = BBox::empty();
        for p in pts {
            b.add(p);
        }
        b
    }

    pub fn add(&mut self, p: &Point) {
        self.min.x = self.min.x.min(p.x);
        self.min.y = self.min.y.min(p.y);
        self.max.x = self.max.x.max(p.x);
        self.max.y = self.max.y.max(p.y);
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }
}
