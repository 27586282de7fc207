//! Planar B-Rep input: corners, polyline curves and faces bounded by loops of
//! oriented curves.
//!
//! JSON layout:
//!
//! ```json
//! {
//!   "corners": [[0,0], [1,0], ...],
//!   "curves":  [{"c0": 0, "c1": 1, "pts": [[0,0], [1,0]]}, ...],
//!   "faces":   [[1, 2, 3, 4], [-3, 5, 6, 7]],
//!   "sizes":   {"curves": {"0": 0.05}, "corners": {"2": 0.1}, "face_quads": {"1": 200}}
//! }
//! ```
//!
//! A face is a flat list of signed, one-based curve references: `k` walks
//! curve `k - 1` from `c0` to `c1`, `-k` walks it backwards. The list is
//! split into loops wherever a chain closes; the single counterclockwise loop
//! is the outer boundary, clockwise loops are holes. `sizes` is optional:
//! curve and corner hints are target edge lengths of the final mesh,
//! `face_quads` overrides the per-face quad budget.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, interior_angle, polygon_area, pt, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub c0: usize,
    pub c1: usize,
    pub pts: Vec<Point>,
}

impl Curve {
    pub fn length(&self) -> f64 {
        self.pts.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn is_closed(&self) -> bool {
        self.c0 == self.c1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CurveRef {
    pub curve: usize,
    pub reversed: bool,
}

impl CurveRef {
    fn from_signed(r: i64) -> Result<Self> {
        if r == 0 {
            return Err(Error::input("curve reference 0 is invalid (references are one-based)"));
        }
        Ok(CurveRef {
            curve: (r.unsigned_abs() - 1) as usize,
            reversed: r < 0,
        })
    }

    fn to_signed(self) -> i64 {
        let k = self.curve as i64 + 1;
        if self.reversed {
            -k
        } else {
            k
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// `loops[0]` is the outer counterclockwise loop, the rest are holes.
    pub loops: Vec<Vec<CurveRef>>,
}

impl Face {
    pub fn hole_count(&self) -> usize {
        self.loops.len().saturating_sub(1)
    }

    pub fn euler_characteristic(&self) -> i64 {
        1 - self.hole_count() as i64
    }

    pub fn curve_refs(&self) -> impl Iterator<Item = &CurveRef> {
        self.loops.iter().flatten()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SizeHints {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub curves: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub corners: BTreeMap<usize, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub face_quads: BTreeMap<usize, usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarModel {
    pub corners: Vec<Point>,
    pub curves: Vec<Curve>,
    pub faces: Vec<Face>,
    pub sizes: SizeHints,
}

/// A corner as seen from one face loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceCorner {
    pub corner: usize,
    /// Interior angle on the face side, radians.
    pub angle: f64,
    pub incoming: CurveRef,
    pub outgoing: CurveRef,
}

impl FaceCorner {
    pub fn ideal_valence(&self) -> usize {
        ideal_corner_valence(self.angle)
    }
}

/// Quad valence a boundary corner should get: `round(angle / 90deg)` in `[1, 4]`.
pub fn ideal_corner_valence(angle: f64) -> usize {
    ((angle / FRAC_PI_2).round() as i64).clamp(1, 4) as usize
}

#[derive(Serialize, Deserialize)]
struct CurveJson {
    c0: usize,
    c1: usize,
    pts: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct ModelJson {
    corners: Vec<[f64; 2]>,
    curves: Vec<CurveJson>,
    faces: Vec<Vec<i64>>,
    #[serde(default)]
    sizes: SizeHints,
}

impl PlanarModel {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: ModelJson = serde_json::from_str(s)?;
        let corners: Vec<Point> = raw.corners.iter().map(|p| pt(p[0], p[1])).collect();
        let curves: Vec<Curve> = raw
            .curves
            .iter()
            .map(|c| Curve {
                c0: c.c0,
                c1: c.c1,
                pts: c.pts.iter().map(|p| pt(p[0], p[1])).collect(),
            })
            .collect();
        for (i, c) in curves.iter().enumerate() {
            if c.c0 >= corners.len() || c.c1 >= corners.len() {
                return Err(Error::input(format!("curve {i} references a missing corner")));
            }
            if c.pts.len() < 2 {
                return Err(Error::input(format!("curve {i} has fewer than two points")));
            }
        }
        let mut faces = Vec::with_capacity(raw.faces.len());
        for (fi, refs) in raw.faces.iter().enumerate() {
            let refs = refs
                .iter()
                .map(|&r| CurveRef::from_signed(r))
                .collect::<Result<Vec<_>>>()?;
            for r in &refs {
                if r.curve >= curves.len() {
                    return Err(Error::input(format!("face {fi} references missing curve {}", r.curve)));
                }
            }
            let loops = split_loops(&curves, &refs)
                .ok_or_else(|| Error::input(format!("face {fi}: curve chain does not close")))?;
            faces.push(Face { loops });
        }
        let mut model = PlanarModel {
            corners,
            curves,
            faces,
            sizes: raw.sizes,
        };
        model.orient_loops()?;
        model.validate()?;
        Ok(model)
    }

    pub fn from_json_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let s = std::fs::read_to_string(path)?;
        Self::from_json_str(&s)
    }

    pub fn to_json_string(&self) -> String {
        let raw = ModelJson {
            corners: self.corners.iter().map(|p| [p.x, p.y]).collect(),
            curves: self
                .curves
                .iter()
                .map(|c| CurveJson {
                    c0: c.c0,
                    c1: c.c1,
                    pts: c.pts.iter().map(|p| [p.x, p.y]).collect(),
                })
                .collect(),
            faces: self
                .faces
                .iter()
                .map(|f| f.curve_refs().map(|r| r.to_signed()).collect())
                .collect(),
            sizes: self.sizes.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("model serializes")
    }

    /// Moves the counterclockwise loop of every face to position 0.
    fn orient_loops(&mut self) -> Result<()> {
        for fi in 0..self.faces.len() {
            let areas: Vec<f64> = self.faces[fi]
                .loops
                .iter()
                .map(|l| polygon_area(&self.loop_polygon(l)))
                .collect();
            let outer: Vec<usize> = (0..areas.len()).filter(|&i| areas[i] > 0.0).collect();
            if outer.len() != 1 {
                return Err(Error::input(format!(
                    "face {fi} must have exactly one counterclockwise loop, found {}",
                    outer.len()
                )));
            }
            self.faces[fi].loops.swap(0, outer[0]);
        }
        Ok(())
    }

    pub fn oriented_points(&self, r: CurveRef) -> Vec<Point> {
        let mut p = self.curves[r.curve].pts.clone();
        if r.reversed {
            p.reverse();
        }
        p
    }

    pub fn start_corner(&self, r: CurveRef) -> usize {
        let c = &self.curves[r.curve];
        if r.reversed {
            c.c1
        } else {
            c.c0
        }
    }

    pub fn end_corner(&self, r: CurveRef) -> usize {
        let c = &self.curves[r.curve];
        if r.reversed {
            c.c0
        } else {
            c.c1
        }
    }

    /// Closed polygon of a loop (no repeated closing point).
    pub fn loop_polygon(&self, lp: &[CurveRef]) -> Vec<Point> {
        let mut poly = Vec::new();
        for r in lp {
            let pts = self.oriented_points(*r);
            poly.extend_from_slice(&pts[..pts.len() - 1]);
        }
        poly
    }

    pub fn face_area(&self, face: usize) -> f64 {
        self.faces[face]
            .loops
            .iter()
            .map(|l| polygon_area(&self.loop_polygon(l)))
            .sum()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn contains_point(&self, face: usize, p: &Point) -> bool {
        let wn: i32 = self.faces[face]
            .loops
            .iter()
            .map(|l| geom::winding_number(p, &self.loop_polygon(l)))
            .sum();
        wn != 0
    }

    /// Corners of a face with their interior angles, in loop order.
    pub fn face_corners(&self, face: usize) -> Vec<FaceCorner> {
        let mut out = Vec::new();
        for lp in &self.faces[face].loops {
            let n = lp.len();
            for k in 0..n {
                let incoming = lp[(k + n - 1) % n];
                let outgoing = lp[k];
                let a = self.oriented_points(incoming);
                let b = self.oriented_points(outgoing);
                let prev = a[a.len() - 2];
                let here = b[0];
                let next = b[1];
                out.push(FaceCorner {
                    corner: self.start_corner(outgoing),
                    angle: interior_angle(&prev, &here, &next),
                    incoming,
                    outgoing,
                });
            }
        }
        out
    }

    /// Faces using each curve.
    pub fn curve_faces(&self) -> Vec<Vec<usize>> {
        let mut cf = vec![Vec::new(); self.curves.len()];
        for (fi, f) in self.faces.iter().enumerate() {
            for r in f.curve_refs() {
                if !cf[r.curve].contains(&fi) {
                    cf[r.curve].push(fi);
                }
            }
        }
        cf
    }

    /// Curves sharing at least one corner (a curve is adjacent to itself).
    pub fn curves_adjacent(&self, a: usize, b: usize) -> bool {
        let ca = &self.curves[a];
        let cb = &self.curves[b];
        a == b || ca.c0 == cb.c0 || ca.c0 == cb.c1 || ca.c1 == cb.c0 || ca.c1 == cb.c1
    }

    pub fn validate(&self) -> Result<()> {
        for (i, c) in self.curves.iter().enumerate() {
            if c.pts[0] != self.corners[c.c0] || *c.pts.last().unwrap() != self.corners[c.c1] {
                return Err(Error::input(format!("curve {i} endpoints do not coincide with its corners")));
            }
            if c.length() <= 0.0 {
                return Err(Error::input(format!("curve {i} has zero length")));
            }
        }
        for (fi, f) in self.faces.iter().enumerate() {
            for (li, lp) in f.loops.iter().enumerate() {
                let n = lp.len();
                for k in 0..n {
                    if self.end_corner(lp[k]) != self.start_corner(lp[(k + 1) % n]) {
                        return Err(Error::input(format!("face {fi} loop {li} is not closed")));
                    }
                }
                let area = polygon_area(&self.loop_polygon(lp));
                if (li == 0) != (area > 0.0) {
                    return Err(Error::input(format!("face {fi} loop {li} has wrong orientation")));
                }
            }
        }
        self.check_intersections()
    }

    fn check_intersections(&self) -> Result<()> {
        struct Seg {
            curve: usize,
            idx: usize,
            a: Point,
            b: Point,
        }
        let mut segs = Vec::new();
        for (ci, c) in self.curves.iter().enumerate() {
            for (k, w) in c.pts.windows(2).enumerate() {
                segs.push(Seg { curve: ci, idx: k, a: w[0], b: w[1] });
            }
        }
        segs.sort_by(|s, t| s.a.x.min(s.b.x).total_cmp(&t.a.x.min(t.b.x)));
        for i in 0..segs.len() {
            let si = &segs[i];
            let xmax = si.a.x.max(si.b.x);
            for sj in &segs[i + 1..] {
                if sj.a.x.min(sj.b.x) > xmax {
                    break;
                }
                if !geom::segments_intersect(&si.a, &si.b, &sj.a, &sj.b) {
                    continue;
                }
                let shared = |p: &Point| [si.a, si.b].contains(p) && [sj.a, sj.b].contains(p);
                if si.curve == sj.curve {
                    let nseg = self.curves[si.curve].pts.len() - 1;
                    let consecutive = si.idx.abs_diff(sj.idx) == 1
                        || (self.curves[si.curve].is_closed() && si.idx.abs_diff(sj.idx) == nseg - 1);
                    if consecutive && (shared(&si.a) || shared(&si.b)) {
                        continue;
                    }
                } else {
                    let is_corner = |p: &Point| self.corners.contains(p);
                    if (shared(&si.a) && is_corner(&si.a)) || (shared(&si.b) && is_corner(&si.b)) {
                        continue;
                    }
                }
                return Err(Error::input(format!(
                    "curves {} and {} intersect away from a shared corner",
                    si.curve, sj.curve
                )));
            }
        }
        Ok(())
    }
}

fn split_loops(curves: &[Curve], refs: &[CurveRef]) -> Option<Vec<Vec<CurveRef>>> {
    let start = |r: &CurveRef| if r.reversed { curves[r.curve].c1 } else { curves[r.curve].c0 };
    let end = |r: &CurveRef| if r.reversed { curves[r.curve].c0 } else { curves[r.curve].c1 };
    let mut loops = Vec::new();
    let mut cur: Vec<CurveRef> = Vec::new();
    for r in refs {
        if let Some(last) = cur.last() {
            if end(last) != start(r) {
                return None;
            }
        }
        cur.push(*r);
        if end(r) == start(&cur[0]) {
            loops.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() || loops.is_empty() {
        return None;
    }
    Some(loops)
}

/// Convenience builders for tests, benchmarks and examples.
pub mod shapes {
    use super::*;
    use std::f64::consts::PI;

    fn seg(c0: usize, c1: usize, corners: &[Point]) -> Curve {
        Curve { c0, c1, pts: vec![corners[c0], corners[c1]] }
    }

    /// Polygon face with one straight curve per edge.
    pub fn polygon(pts: &[Point]) -> PlanarModel {
        let n = pts.len();
        let corners = pts.to_vec();
        let curves = (0..n).map(|i| seg(i, (i + 1) % n, &corners)).collect();
        let faces = vec![Face {
            loops: vec![(0..n).map(|i| CurveRef { curve: i, reversed: false }).collect()],
        }];
        PlanarModel { corners, curves, faces, sizes: SizeHints::default() }
    }

    pub fn rectangle(w: f64, h: f64) -> PlanarModel {
        polygon(&[pt(0.0, 0.0), pt(w, 0.0), pt(w, h), pt(0.0, h)])
    }

    pub fn unit_square() -> PlanarModel {
        rectangle(1.0, 1.0)
    }

    pub fn l_shape() -> PlanarModel {
        polygon(&[
            pt(0.0, 0.0),
            pt(2.0, 0.0),
            pt(2.0, 1.0),
            pt(1.0, 1.0),
            pt(1.0, 2.0),
            pt(0.0, 2.0),
        ])
    }

    /// Disk bounded by a single closed polyline curve with one corner.
    pub fn disk(radius: f64, samples: usize) -> PlanarModel {
        let pts: Vec<Point> = (0..=samples)
            .map(|k| {
                let t = 2.0 * PI * (k % samples) as f64 / samples as f64;
                pt(radius * t.cos(), radius * t.sin())
            })
            .collect();
        let corners = vec![pts[0]];
        let curves = vec![Curve { c0: 0, c1: 0, pts }];
        let faces = vec![Face { loops: vec![vec![CurveRef { curve: 0, reversed: false }]] }];
        PlanarModel { corners, curves, faces, sizes: SizeHints::default() }
    }

    /// Axis-aligned outer box with an axis-aligned rectangular hole.
    pub fn box_with_hole(outer: (Point, Point), hole: (Point, Point)) -> PlanarModel {
        let (a, b) = outer;
        let (c, d) = hole;
        let corners = vec![
            pt(a.x, a.y),
            pt(b.x, a.y),
            pt(b.x, b.y),
            pt(a.x, b.y),
            pt(c.x, c.y),
            pt(d.x, c.y),
            pt(d.x, d.y),
            pt(c.x, d.y),
        ];
        let mut curves: Vec<Curve> = (0..4).map(|i| seg(i, (i + 1) % 4, &corners)).collect();
        curves.extend((0..4).map(|i| seg(4 + i, 4 + (i + 1) % 4, &corners)));
        let outer_loop = (0..4).map(|i| CurveRef { curve: i, reversed: false }).collect();
        let hole_loop = (0..4).rev().map(|i| CurveRef { curve: 4 + i, reversed: true }).collect();
        let faces = vec![Face { loops: vec![outer_loop, hole_loop] }];
        PlanarModel { corners, curves, faces, sizes: SizeHints::default() }
    }

    /// Two `w x h` rectangles side by side sharing the curve `x = w`.
    pub fn rectangle_pair(w: f64, h: f64) -> PlanarModel {
        let corners = vec![
            pt(0.0, 0.0),
            pt(w, 0.0),
            pt(2.0 * w, 0.0),
            pt(2.0 * w, h),
            pt(w, h),
            pt(0.0, h),
        ];
        let pairs = [(0, 1), (1, 4), (4, 5), (5, 0), (1, 2), (2, 3), (3, 4)];
        let curves = pairs.iter().map(|&(i, j)| seg(i, j, &corners)).collect();
        let r = |c: usize, rev: bool| CurveRef { curve: c, reversed: rev };
        let faces = vec![
            Face { loops: vec![vec![r(0, false), r(1, false), r(2, false), r(3, false)]] },
            Face { loops: vec![vec![r(4, false), r(5, false), r(6, false), r(1, true)]] },
        ];
        PlanarModel { corners, curves, faces, sizes: SizeHints::default() }
    }
}
