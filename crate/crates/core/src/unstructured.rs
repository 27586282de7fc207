//! Initial all-quad mesh of a face: frontal point insertion guided by the
//! scaled cross field, greedy triangle merging and midpoint subdivision.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use rstar::RTree;

use crate::crossfield::CrossField;
use crate::error::{Error, Result};
use crate::geom::{self, pt, Point};
use crate::mesh::quality::sicn_quality;
use crate::mesh::{QuadMesh, TriLocator, TriMesh, VertexKind};
use crate::triangulate::Kernel;

/// Candidates closer than this fraction of the local size to an existing
/// vertex are rejected.
pub const PROXIMITY: f64 = 0.7;

/// Pairs whose quad has SICN at or below this are never merged.
pub const MERGE_FLOOR: f64 = 0.1;

/// Weight of cross misalignment in the merge score.
pub const ALIGNMENT_WEIGHT: f64 = 0.5;

/// Cross direction and target size sampled from a background triangulation.
pub struct Background<'a> {
    pub mesh: &'a TriMesh,
    pub field: &'a CrossField,
    locator: TriLocator,
}

impl<'a> Background<'a> {
    pub fn new(mesh: &'a TriMesh, field: &'a CrossField) -> Self {
        Background { mesh, field, locator: TriLocator::new(mesh) }
    }

    /// Cross angle and size at a point inside the domain.
    pub fn sample(&self, p: &Point) -> Option<(f64, f64)> {
        let t = self.locator.locate(self.mesh, p)?;
        Some(self.sample_in(t, p))
    }

    /// Like `sample`, clamped to the nearest triangle for points on or just
    /// outside the boundary.
    pub fn sample_nearest(&self, p: &Point) -> (f64, f64) {
        let t = self.locator.locate_nearest(self.mesh, p);
        self.sample_in(t, p)
    }

    fn sample_in(&self, t: usize, p: &Point) -> (f64, f64) {
        let angle = self.field.angle_at(self.mesh, t, p);
        let size = self.mesh.interpolate(t, p, &self.mesh.size);
        (angle, size)
    }
}

/// Frontal insertion from the kernel's boundary vertices. Each dequeued
/// vertex proposes four points along its cross at the local size. Returns
/// the number of inserted points.
pub fn frontal_insert(
    kernel: &mut Kernel,
    sample: &dyn Fn(&Point) -> Option<(f64, f64)>,
    sample_nearest: &dyn Fn(&Point) -> (f64, f64),
    max_points: usize,
) -> usize {
    let seeds: Vec<Point> = (0..kernel.num_vertices()).map(|i| kernel.position(i)).collect();
    let mut tree: RTree<[f64; 2]> = RTree::bulk_load(seeds.iter().map(|p| [p.x, p.y]).collect());
    let mut queue: VecDeque<Point> = seeds.into_iter().collect();
    let mut inserted = 0;
    while let Some(x) = queue.pop_front() {
        if inserted >= max_points {
            break;
        }
        let (angle, s) = sample_nearest(&x);
        if !(s > 0.0 && s.is_finite()) {
            continue;
        }
        for k in 0..4 {
            let a = angle + k as f64 * FRAC_PI_2;
            let c = pt(x.x + s * a.cos(), x.y + s * a.sin());
            let Some((_, sc)) = sample(&c) else { continue };
            let r = PROXIMITY * sc.min(s);
            if let Some(n) = tree.nearest_neighbor(&[c.x, c.y]) {
                if (n[0] - c.x).hypot(n[1] - c.y) < r {
                    continue;
                }
            }
            if kernel.insert(c).is_some() {
                tree.insert([c.x, c.y]);
                queue.push_back(c);
                inserted += 1;
            }
        }
    }
    inserted
}

/// Quad-dominant mesh: merged quads plus leftover triangles, all CCW.
#[derive(Debug, Clone)]
pub struct MixedMesh {
    pub points: Vec<Point>,
    pub kinds: Vec<VertexKind>,
    pub quads: Vec<[usize; 4]>,
    pub tris: Vec<[usize; 3]>,
}

/// Mean deviation of the quad edges from the cross at `angle`, in `[0, 1]`.
pub fn misalignment(q: &[Point; 4], angle: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..4 {
        let e = q[(i + 1) % 4] - q[i];
        sum += geom::wrap_angle(e.y.atan2(e.x) - angle, FRAC_PI_2).abs() / FRAC_PI_4;
    }
    sum / 4.0
}

/// Greedy merging of triangle pairs by SICN weighted with cross alignment.
/// `cross` gives the cross angle at a point.
pub fn combine_quads(tri: &TriMesh, cross: &dyn Fn(&Point) -> f64) -> MixedMesh {
    let mut cands: Vec<(f64, usize, [usize; 4])> = Vec::new();
    for e in 0..tri.edges.len() {
        let [t0, t1] = tri.edge_tris[e];
        if t1 == crate::mesh::tri::NONE || t0 == crate::mesh::tri::NONE {
            continue;
        }
        let [a, b] = tri.edges[e];
        let opp = |t: usize| tri.tris[t].iter().copied().find(|&v| v != a && v != b).unwrap();
        let (c0, c1) = (opp(t0), opp(t1));
        // CCW order a, c, b, d where c lies right of a->b
        let (r, l) = if geom::orient(&tri.points[a], &tri.points[b], &tri.points[c0]) < 0.0 {
            (c0, c1)
        } else {
            (c1, c0)
        };
        let q = [a, r, b, l];
        let qp = q.map(|v| tri.points[v]);
        let sicn = sicn_quality(&qp);
        if sicn <= MERGE_FLOOR {
            continue;
        }
        let score = sicn * (1.0 - ALIGNMENT_WEIGHT * misalignment(&qp, cross(&geom::centroid(&qp))));
        cands.push((score, e, q));
    }
    cands.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
    let mut used = vec![false; tri.tris.len()];
    let mut quads = Vec::new();
    for (_, e, q) in cands {
        let [t0, t1] = tri.edge_tris[e];
        if used[t0] || used[t1] {
            continue;
        }
        used[t0] = true;
        used[t1] = true;
        quads.push(q);
    }
    let tris = (0..tri.tris.len()).filter(|&t| !used[t]).map(|t| tri.tris[t]).collect();
    MixedMesh { points: tri.points.clone(), kinds: tri.kinds.clone(), quads, tris }
}

/// Output of midpoint subdivision: the quad mesh and the boundary edges
/// (as mixed-mesh vertex pairs) whose snapped midpoints were reverted.
pub struct Subdivision {
    pub mesh: QuadMesh,
    pub reverted: Vec<[usize; 2]>,
}

/// Splits every quad into four and every triangle into three quads.
/// `boundary_midpoint(a, b)` returns the curve point and curve id that
/// replace the midpoint of boundary edge `a b`; a snap that inverts an
/// adjacent quad is reverted to the straight midpoint.
pub fn midpoint_subdivide(
    mixed: &MixedMesh,
    boundary_midpoint: &dyn Fn(usize, usize) -> Option<(Point, usize)>,
) -> Result<Subdivision> {
    let mut points = mixed.points.clone();
    let mut kinds = mixed.kinds.clone();
    let mut edge_count: HashMap<[usize; 2], usize> = HashMap::new();
    let cells: Vec<Vec<usize>> = mixed
        .quads
        .iter()
        .map(|q| q.to_vec())
        .chain(mixed.tris.iter().map(|t| t.to_vec()))
        .collect();
    for c in &cells {
        for i in 0..c.len() {
            *edge_count.entry(sorted(c[i], c[(i + 1) % c.len()])).or_default() += 1;
        }
    }
    let mut mid: HashMap<[usize; 2], usize> = HashMap::new();
    let mut snapped: Vec<([usize; 2], usize)> = Vec::new();
    let mut quads = Vec::with_capacity(cells.iter().map(|c| c.len()).sum());
    for c in &cells {
        let n = c.len();
        let center = points.len();
        points.push(geom::centroid(&c.iter().map(|&v| mixed.points[v]).collect::<Vec<_>>()));
        kinds.push(VertexKind::Interior);
        let mut m = Vec::with_capacity(n);
        for i in 0..n {
            let key = sorted(c[i], c[(i + 1) % n]);
            let id = match mid.get(&key) {
                Some(&id) => id,
                None => {
                    let id = points.len();
                    let straight = nalgebra::center(&mixed.points[key[0]], &mixed.points[key[1]]);
                    if edge_count[&key] == 1 {
                        let (p, curve) = boundary_midpoint(key[0], key[1]).ok_or_else(|| {
                            Error::topology(format!("no curve point for boundary edge {key:?}"))
                        })?;
                        points.push(p);
                        kinds.push(VertexKind::Curve { curve });
                        if p != straight {
                            snapped.push((key, id));
                        }
                    } else {
                        points.push(straight);
                        kinds.push(VertexKind::Interior);
                    }
                    mid.insert(key, id);
                    id
                }
            };
            m.push(id);
        }
        for i in 0..n {
            quads.push([c[i], m[i], center, m[(i + n - 1) % n]]);
        }
    }
    let mut mesh = QuadMesh::new(points, kinds, quads);
    let mut reverted = Vec::new();
    for (key, v) in snapped {
        if mesh.vertex_quads(v).iter().any(|&q| sicn_quality(&mesh.quad_points(q)) <= 0.0) {
            mesh.points[v] = nalgebra::center(&mixed.points[key[0]], &mixed.points[key[1]]);
            reverted.push(key);
        }
    }
    Ok(Subdivision { mesh, reverted })
}

fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::tri::NONE;

    fn kinds(n: usize) -> Vec<VertexKind> {
        vec![VertexKind::Curve { curve: 0 }; n]
    }

    fn straight(m: &MixedMesh) -> impl Fn(usize, usize) -> Option<(Point, usize)> + '_ {
        move |a, b| Some((nalgebra::center(&m.points[a], &m.points[b]), 0))
    }

    #[test]
    fn two_right_triangles_merge() {
        let p = vec![pt(0., 0.), pt(1., 0.), pt(1., 1.), pt(0., 1.)];
        let t = TriMesh::new(p, kinds(4), vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let m = combine_quads(&t, &|_| 0.0);
        assert_eq!(m.quads.len(), 1);
        assert!(m.tris.is_empty());
        let q = m.quads[0].map(|v| m.points[v]);
        assert!((sicn_quality(&q) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn poor_pair_is_not_merged() {
        // a thin kite whose merged quad has SICN near 0.05
        let p = vec![pt(0., 0.), pt(1., -0.025), pt(2., 0.), pt(1., 0.025)];
        let t = TriMesh::new(p.clone(), kinds(4), vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let q = [p[0], p[1], p[2], p[3]];
        assert!(sicn_quality(&q) < MERGE_FLOOR);
        let m = combine_quads(&t, &|_| 0.0);
        assert!(m.quads.is_empty());
        assert_eq!(m.tris.len(), 2);
    }

    #[test]
    fn sixty_degree_rhombus() {
        let h = 3f64.sqrt() / 2.0;
        let p = vec![pt(0., 0.), pt(1., 0.), pt(1.5, h), pt(0.5, h)];
        let t = TriMesh::new(p.clone(), kinds(4), vec![[0, 1, 3], [1, 2, 3]]).unwrap();
        // rhombus with 60 degree angles: SICN = sin(60)
        let s = sicn_quality(&[p[0], p[1], p[2], p[3]]);
        assert!((s - h).abs() < 1e-12);
        let m = combine_quads(&t, &|_| 0.0);
        assert_eq!(m.quads.len(), 1);
        // the other diagonal gives the same rhombus, so only one merge
        assert_eq!(t.edge_tris.iter().filter(|e| e[1] != NONE).count(), 1);
    }

    #[test]
    fn subdivision_counts() {
        let quad = MixedMesh {
            points: vec![pt(0., 0.), pt(1., 0.), pt(1., 1.), pt(0., 1.)],
            kinds: kinds(4),
            quads: vec![[0, 1, 2, 3]],
            tris: vec![],
        };
        let s = midpoint_subdivide(&quad, &straight(&quad)).unwrap();
        assert_eq!(s.mesh.n_quads(), 4);
        assert_eq!(s.mesh.n_used_vertices(), 9);
        let tri = MixedMesh {
            points: vec![pt(0., 0.), pt(1., 0.), pt(0., 1.)],
            kinds: kinds(3),
            quads: vec![],
            tris: vec![[0, 1, 2]],
        };
        let s = midpoint_subdivide(&tri, &straight(&tri)).unwrap();
        assert_eq!(s.mesh.n_quads(), 3);
        assert_eq!(s.mesh.n_used_vertices(), 7);
        assert!(s.mesh.min_sicn() > 0.0);
        let mixed = MixedMesh {
            points: vec![pt(0., 0.), pt(1., 0.), pt(2., 0.), pt(0., 1.), pt(1., 1.), pt(2., 1.), pt(1., 2.)],
            kinds: kinds(7),
            quads: vec![[0, 1, 4, 3], [1, 2, 5, 4]],
            tris: vec![[3, 4, 6]],
        };
        let s = midpoint_subdivide(&mixed, &straight(&mixed)).unwrap();
        assert_eq!(s.mesh.n_quads(), 11);
        s.mesh.validate().unwrap();
    }

    #[test]
    fn inverting_snap_is_reverted() {
        let m = MixedMesh {
            points: vec![pt(0., 0.), pt(1., 0.), pt(1., 1.), pt(0., 1.)],
            kinds: kinds(4),
            quads: vec![[0, 1, 2, 3]],
            tris: vec![],
        };
        // pushes the bottom midpoint past the centre
        let snap = |a: usize, b: usize| {
            let c = nalgebra::center(&m.points[a], &m.points[b]);
            if sorted(a, b) == [0, 1] {
                Some((pt(0.5, 0.8), 0))
            } else {
                Some((c, 0))
            }
        };
        let s = midpoint_subdivide(&m, &snap).unwrap();
        assert_eq!(s.reverted, vec![[0, 1]]);
        assert!(s.mesh.min_sicn() > 0.0);
    }

    #[test]
    fn frontal_lattice_on_unit_square() {
        let n = 10;
        let mut boundary = Vec::new();
        let corners = [pt(0., 0.), pt(1., 0.), pt(1., 1.), pt(0., 1.)];
        for k in 0..4 {
            let (a, b) = (corners[k], corners[(k + 1) % 4]);
            for i in 0..n {
                let kind = if i == 0 {
                    VertexKind::Corner { corner: k, ideal: 1 }
                } else {
                    VertexKind::Curve { curve: k }
                };
                boundary.push((a + (b - a) * (i as f64 / n as f64), kind));
            }
        }
        let mut kernel = Kernel::new(&[boundary]).unwrap();
        let inside = |p: &Point| (p.x > 0.0 && p.x < 1.0 && p.y > 0.0 && p.y < 1.0).then_some((0.0, 0.1));
        let added = frontal_insert(&mut kernel, &inside, &|_| (0.0, 0.1), usize::MAX);
        let total = kernel.num_vertices();
        assert_eq!(total, 40 + added);
        assert!((total as f64 - 121.0).abs() <= 0.15 * 121.0, "{total}");
        // proximity rule: no two points closer than 0.7 * 0.1
        let pts: Vec<Point> = (0..total).map(|i| kernel.position(i)).collect();
        for i in 0..total {
            for j in 0..i {
                assert!((pts[i] - pts[j]).norm() >= 0.07 - 1e-12);
            }
        }
    }
}
