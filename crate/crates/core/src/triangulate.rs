//! Curve sampling, constrained Delaunay triangulation of faces, and the
//! incremental insertion kernel used by the frontal mesher.

use std::collections::{HashMap, VecDeque};

use spade::handles::FixedVertexHandle;
use spade::{ConstrainedDelaunayTriangulation, PositionInTriangulation, Triangulation};

use crate::error::{Error, Result};
use crate::geom::{self, BBox, Point};
use crate::mesh::{TriMesh, VertexKind};
use crate::model::PlanarModel;

type Cdt = ConstrainedDelaunayTriangulation<spade::Point2<f64>>;

/// Largest allowed direction change between consecutive sample edges.
pub const MAX_TURN: f64 = std::f64::consts::PI / 6.0;

pub fn cumulative_length(pts: &[Point]) -> Vec<f64> {
    let mut acc = vec![0.0; pts.len()];
    for i in 1..pts.len() {
        acc[i] = acc[i - 1] + (pts[i] - pts[i - 1]).norm();
    }
    acc
}

/// Point at arclength `s` along a polyline with cumulative lengths `acc`.
pub fn point_at_length(pts: &[Point], acc: &[f64], s: f64) -> Point {
    let k = match acc.binary_search_by(|a| a.total_cmp(&s)) {
        Ok(k) => return pts[k],
        Err(k) => k.clamp(1, pts.len() - 1),
    };
    let t = (s - acc[k - 1]) / (acc[k] - acc[k - 1]).max(f64::MIN_POSITIVE);
    pts[k - 1] + (pts[k] - pts[k - 1]) * t.clamp(0.0, 1.0)
}

fn turn_at(a: Point, b: Point, c: Point) -> f64 {
    let u = b - a;
    let v = c - b;
    geom::cross(&u, &v).atan2(u.dot(&v)).abs()
}

/// Resamples a polyline at uniform arclength with spacing at most `size`,
/// refining until the polyline turns by at most 30 degrees within each
/// sample edge. Polyline kinks sharper than that cannot be spread over
/// several edges, so in that case the polyline vertices are kept and each
/// segment is subdivided instead.
pub fn sample_polyline(pts: &[Point], size: f64) -> Vec<Point> {
    sample_polyline_with_arclength(pts, size).0
}

/// Like `sample_polyline`, also returning the arclength of every sample.
pub fn sample_polyline_with_arclength(pts: &[Point], size: f64) -> (Vec<Point>, Vec<f64>) {
    let acc = cumulative_length(pts);
    let total = *acc.last().unwrap();
    let turns: Vec<(f64, f64)> = (1..pts.len().saturating_sub(1))
        .map(|j| (acc[j], turn_at(pts[j - 1], pts[j], pts[j + 1])))
        .filter(|t| t.1 > 0.0)
        .collect();
    let kinked = turns.iter().any(|t| t.1 > MAX_TURN);
    let mut n = ((total / size).ceil() as usize).max(1);
    while !kinked {
        // turning of the polyline inside each sample interval
        let mut worst: f64 = 0.0;
        let mut j = 0;
        for i in 0..n {
            let hi = total * (i + 1) as f64 / n as f64;
            let mut sum = 0.0;
            while j < turns.len() && turns[j].0 < hi {
                sum += turns[j].1;
                j += 1;
            }
            worst = worst.max(sum);
        }
        if worst <= MAX_TURN + 1e-12 {
            let lens: Vec<f64> = (0..=n).map(|i| total * i as f64 / n as f64).collect();
            let out = lens
                .iter()
                .enumerate()
                .map(|(i, &l)| if i == n { *pts.last().unwrap() } else { point_at_length(pts, &acc, l) })
                .collect();
            return (out, lens);
        }
        n *= 2;
    }
    let mut out = vec![pts[0]];
    let mut lens = vec![0.0];
    for (i, w) in pts.windows(2).enumerate() {
        let len = (w[1] - w[0]).norm();
        let k = ((len / size).ceil() as usize).max(1);
        for j in 1..=k {
            let t = j as f64 / k as f64;
            out.push(w[0] + (w[1] - w[0]) * t);
            lens.push(acc[i] + len * t);
        }
    }
    (out, lens)
}

/// One sample chain per curve, in curve direction. Curve size hints take
/// precedence over `size`.
pub fn sample_curves(model: &PlanarModel, size: f64) -> Result<Vec<Vec<Point>>> {
    Ok(sample_curves_with_arclength(model, size)?.into_iter().map(|(p, _)| p).collect())
}

/// As [`sample_curves`], also returning the arclength of every sample.
pub fn sample_curves_with_arclength(model: &PlanarModel, size: f64) -> Result<Vec<(Vec<Point>, Vec<f64>)>> {
    model
        .curves
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if c.length() <= 0.0 {
                return Err(Error::input(format!("curve {i} has zero length")));
            }
            let s = model.sizes.curves.get(&i).copied().unwrap_or(size);
            Ok(sample_polyline_with_arclength(&c.pts, s))
        })
        .collect()
}

/// Closed boundary loops of a face built from per-curve chains, with the
/// classification of every loop vertex.
pub fn face_boundary(
    model: &PlanarModel,
    face: usize,
    chains: &[Vec<Point>],
) -> Vec<Vec<(Point, VertexKind)>> {
    let corners = model.face_corners(face);
    let mut ci = 0;
    let mut loops = Vec::new();
    for lp in &model.faces[face].loops {
        let mut out = Vec::new();
        for r in lp {
            let fc = corners[ci];
            ci += 1;
            let mut c = chains[r.curve].clone();
            if r.reversed {
                c.reverse();
            }
            out.push((
                c[0],
                VertexKind::Corner { corner: fc.corner, ideal: fc.ideal_valence() as u8 },
            ));
            for p in &c[1..c.len() - 1] {
                out.push((*p, VertexKind::Curve { curve: r.curve }));
            }
        }
        loops.push(out);
    }
    loops
}

/// Incremental constrained Delaunay kernel over one face.
pub struct Kernel {
    cdt: Cdt,
    kinds: Vec<VertexKind>,
    loops: Vec<Vec<Point>>,
    tol: f64,
    /// Constrained segment -> owning curve, for splits.
    seg_kind: HashMap<[usize; 2], VertexKind>,
}

impl Kernel {
    pub fn new(loops: &[Vec<(Point, VertexKind)>]) -> Result<Self> {
        let bb = BBox::of(loops.iter().flatten().map(|(p, _)| p));
        let tol = 1e-9 * bb.diagonal();
        let mut k = Kernel {
            cdt: Cdt::new(),
            kinds: Vec::new(),
            loops: loops.iter().map(|l| l.iter().map(|(p, _)| *p).collect()).collect(),
            tol,
            seg_kind: HashMap::new(),
        };
        for lp in loops {
            let mut ids = Vec::with_capacity(lp.len());
            for &(p, kind) in lp {
                let before = k.cdt.num_vertices();
                let h = k
                    .cdt
                    .insert(spade::Point2::new(p.x, p.y))
                    .map_err(|e| Error::input(format!("bad boundary point: {e:?}")))?;
                if h.index() < before {
                    return Err(Error::input("boundary loops touch or repeat a point"));
                }
                k.kinds.push(kind);
                ids.push(h);
            }
            let n = ids.len();
            for i in 0..n {
                let (a, b) = (ids[i], ids[(i + 1) % n]);
                if !k.cdt.can_add_constraint(a, b) {
                    return Err(Error::input("self-intersecting boundary"));
                }
                k.cdt.add_constraint(a, b);
                let seg_kind = match (lp[i].1, lp[(i + 1) % n].1) {
                    (c @ VertexKind::Curve { .. }, _) | (_, c @ VertexKind::Curve { .. }) => c,
                    _ => VertexKind::Interior,
                };
                k.seg_kind.insert(sorted(a.index(), b.index()), seg_kind);
            }
        }
        Ok(k)
    }

    pub fn num_vertices(&self) -> usize {
        self.cdt.num_vertices()
    }

    pub fn position(&self, i: usize) -> Point {
        let p = self.cdt.vertex(FixedVertexHandle::from_index(i)).position();
        geom::pt(p.x, p.y)
    }

    pub fn inside(&self, p: &Point) -> bool {
        self.loops.iter().map(|l| geom::winding_number(p, l)).sum::<i32>() != 0
    }

    /// Inserts an interior point. Returns `None` when the point lies outside
    /// the face or duplicates an existing vertex within tolerance.
    pub fn insert(&mut self, p: Point) -> Option<usize> {
        if !self.inside(&p) {
            return None;
        }
        self.insert_unchecked(p)
    }

    fn insert_unchecked(&mut self, p: Point) -> Option<usize> {
        let sp = spade::Point2::new(p.x, p.y);
        match self.cdt.locate(sp) {
            PositionInTriangulation::OnVertex(_) => return None,
            PositionInTriangulation::OnFace(f) => {
                let face = self.cdt.face(f);
                for v in face.vertices() {
                    let q = v.position();
                    if (q.x - p.x).hypot(q.y - p.y) <= self.tol {
                        return None;
                    }
                }
            }
            PositionInTriangulation::OnEdge(e) => {
                if self.cdt.is_constraint_edge(e.as_undirected()) {
                    return None;
                }
            }
            _ => return None,
        }
        let before = self.cdt.num_vertices();
        let h = self.cdt.insert(sp).ok()?;
        if h.index() < before {
            return None;
        }
        self.kinds.push(VertexKind::Interior);
        Some(h.index())
    }

    /// Splits a constrained boundary segment at its midpoint.
    fn split_constraint(&mut self, a: usize, b: usize) -> Option<usize> {
        let (ha, hb) = (FixedVertexHandle::from_index(a), FixedVertexHandle::from_index(b));
        let e = self.cdt.get_edge_from_neighbors(ha, hb)?.as_undirected().fix();
        let kind = self.seg_kind.remove(&sorted(a, b))?;
        self.cdt.remove_constraint_edge(e);
        let m = nalgebra::center(&self.position(a), &self.position(b));
        let before = self.cdt.num_vertices();
        let h = self.cdt.insert(spade::Point2::new(m.x, m.y)).ok()?;
        if h.index() < before {
            return None;
        }
        self.kinds.push(kind);
        self.cdt.add_constraint(ha, h);
        self.cdt.add_constraint(h, hb);
        self.seg_kind.insert(sorted(a, h.index()), kind);
        self.seg_kind.insert(sorted(h.index(), b), kind);
        Some(h.index())
    }

    fn is_constraint(&self, a: usize, b: usize) -> bool {
        self.seg_kind.contains_key(&sorted(a, b))
    }

    /// Triangles of the face, found by flood fill with parity across
    /// constrained edges starting from the convex hull.
    pub fn inside_triangles(&self) -> Vec<[usize; 3]> {
        let tris: Vec<[usize; 3]> = self
            .cdt
            .inner_faces()
            .map(|f| f.vertices().map(|v| v.fix().index()))
            .collect();
        let mut edge_tris: HashMap<[usize; 2], Vec<usize>> = HashMap::with_capacity(tris.len() * 2);
        for (ti, t) in tris.iter().enumerate() {
            for k in 0..3 {
                edge_tris.entry(sorted(t[k], t[(k + 1) % 3])).or_default().push(ti);
            }
        }
        let mut depth = vec![usize::MAX; tris.len()];
        let mut queue = VecDeque::new();
        for (e, ts) in &edge_tris {
            if ts.len() == 1 {
                let d = usize::from(self.is_constraint(e[0], e[1]));
                if d < depth[ts[0]] {
                    depth[ts[0]] = d;
                    if d == 0 {
                        queue.push_front(ts[0]);
                    } else {
                        queue.push_back(ts[0]);
                    }
                }
            }
        }
        while let Some(t) = queue.pop_front() {
            for k in 0..3 {
                let e = sorted(tris[t][k], tris[t][(k + 1) % 3]);
                let w = usize::from(self.is_constraint(e[0], e[1]));
                for &o in &edge_tris[&e] {
                    if o != t && depth[t] + w < depth[o] {
                        depth[o] = depth[t] + w;
                        if w == 0 {
                            queue.push_front(o);
                        } else {
                            queue.push_back(o);
                        }
                    }
                }
            }
        }
        tris.into_iter()
            .zip(depth)
            .filter(|(_, d)| d % 2 == 1)
            .map(|(t, _)| t)
            .collect()
    }

    /// Splits edges longer than `1.4 * size(midpoint)` at their midpoints
    /// until none remain, longest first.
    pub fn refine(&mut self, size: &dyn Fn(&Point) -> f64) {
        for _ in 0..64 {
            let tris = self.inside_triangles();
            let mut long = Vec::new();
            let mut seen = std::collections::HashSet::new();
            for t in &tris {
                for k in 0..3 {
                    let e = sorted(t[k], t[(k + 1) % 3]);
                    if !seen.insert(e) {
                        continue;
                    }
                    let (a, b) = (self.position(e[0]), self.position(e[1]));
                    let len = (b - a).norm();
                    let s = size(&nalgebra::center(&a, &b));
                    if len > 1.4 * s {
                        long.push((len / s, e));
                    }
                }
            }
            if long.is_empty() {
                return;
            }
            long.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
            let mut inserted = 0;
            for (_, [a, b]) in long {
                // the edge may have been flipped away by earlier insertions
                let (ha, hb) = (FixedVertexHandle::from_index(a), FixedVertexHandle::from_index(b));
                if self.cdt.get_edge_from_neighbors(ha, hb).is_none() {
                    continue;
                }
                let ok = if self.is_constraint(a, b) {
                    self.split_constraint(a, b).is_some()
                } else {
                    let m = nalgebra::center(&self.position(a), &self.position(b));
                    self.insert_unchecked(m).is_some()
                };
                inserted += usize::from(ok);
            }
            if inserted == 0 {
                return;
            }
        }
    }

    pub fn to_trimesh(&self) -> Result<TriMesh> {
        let tris = self.inside_triangles();
        let points = (0..self.num_vertices()).map(|i| self.position(i)).collect();
        TriMesh::new(points, self.kinds.clone(), tris)
    }
}

fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Constrained Delaunay triangulation of a face, refined to `size`.
pub fn triangulate_face(
    model: &PlanarModel,
    face: usize,
    chains: &[Vec<Point>],
    size: &dyn Fn(&Point) -> f64,
) -> Result<TriMesh> {
    let loops = face_boundary(model, face, chains);
    triangulate_loops(&loops, size)
}

pub fn triangulate_loops(loops: &[Vec<(Point, VertexKind)>], size: &dyn Fn(&Point) -> f64) -> Result<TriMesh> {
    let mut k = Kernel::new(loops)?;
    k.refine(size);
    k.to_trimesh()
}
