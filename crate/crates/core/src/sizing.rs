//! Size map: small-feature bounds, one-way gradation, blending with the
//! conformal scaling, and the per-face quad budget.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use rstar::primitives::{GeomWithData, Line};
use rstar::RTree;

use crate::geom::Point;
use crate::mesh::{TriMesh, VertexKind};
use crate::model::PlanarModel;

type Segment = GeomWithData<Line<[f64; 2]>, usize>;

/// Spatial index over the polylines of all model curves.
pub struct CurveIndex {
    tree: RTree<Segment>,
}

impl CurveIndex {
    pub fn new(model: &PlanarModel) -> Self {
        let mut segs = Vec::new();
        for (ci, c) in model.curves.iter().enumerate() {
            for w in c.pts.windows(2) {
                segs.push(Segment::new(Line::new([w[0].x, w[0].y], [w[1].x, w[1].y]), ci));
            }
        }
        CurveIndex { tree: RTree::bulk_load(segs) }
    }

    /// Distance from `p` to the nearest curve accepted by `keep`.
    pub fn distance_filtered(&self, p: &Point, keep: impl Fn(usize) -> bool) -> f64 {
        for s in self.tree.nearest_neighbor_iter_with_distance_2(&[p.x, p.y]) {
            if keep(s.0.data) {
                return s.1.sqrt();
            }
        }
        f64::INFINITY
    }
}

/// Curves a boundary vertex of a face mesh lies on.
fn vertex_curves(model: &PlanarModel, kind: VertexKind) -> Vec<usize> {
    match kind {
        VertexKind::Interior => Vec::new(),
        VertexKind::Curve { curve } => vec![curve],
        VertexKind::Corner { corner, .. } => (0..model.curves.len())
            .filter(|&c| model.curves[c].c0 == corner || model.curves[c].c1 == corner)
            .collect(),
    }
}

/// Small-feature size on curve vertices: at most the curve length and at
/// most the distance to the nearest curve not sharing a corner. Interior
/// vertices get infinity.
pub fn feature_size(model: &PlanarModel, index: &CurveIndex, mesh: &TriMesh) -> Vec<f64> {
    let lengths: Vec<f64> = model.curves.iter().map(|c| c.length()).collect();
    (0..mesh.n_vertices())
        .map(|v| {
            let own = vertex_curves(model, mesh.kinds[v]);
            if own.is_empty() {
                return f64::INFINITY;
            }
            let len = own.iter().map(|&c| lengths[c]).fold(f64::INFINITY, f64::min);
            let d = index.distance_filtered(&mesh.points[v], |c| {
                !own.iter().any(|&o| model.curves_adjacent(o, c))
            });
            len.min(d)
        })
        .collect()
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `s(x2) <- min(s(x2), s(x1) + g_max |x1 x2|)` to fixpoint, smallest
/// values first.
pub fn one_way_smooth(mesh: &TriMesh, field: &mut [f64], g_max: f64) {
    let vedges = mesh.vertex_edges();
    let mut heap: BinaryHeap<Item> = (0..field.len())
        .filter(|&v| field[v].is_finite())
        .map(|v| Item(field[v], v))
        .collect();
    while let Some(Item(s, v)) = heap.pop() {
        if s > field[v] {
            continue;
        }
        for &e in &vedges[v] {
            let [a, b] = mesh.edges[e];
            let w = if a == v { b } else { a };
            let cand = s + g_max * mesh.edge_length(e);
            if cand < field[w] {
                field[w] = cand;
                heap.push(Item(cand, w));
            }
        }
    }
}

/// Fraction of edges violating `|s1 - s2| <= g_max |e|` (with a relative
/// round-off allowance).
pub fn gradation_violations(mesh: &TriMesh, field: &[f64], g_max: f64) -> usize {
    (0..mesh.edges.len())
        .filter(|&e| {
            let [a, b] = mesh.edges[e];
            let bound = g_max * mesh.edge_length(e);
            (field[a] - field[b]).abs() > bound + 1e-12 * field[a].abs().max(field[b].abs())
        })
        .count()
}

/// Per-face quad counts proportional to area, with hinted faces fixed and
/// largest-remainder rounding so the total is exact.
pub fn face_quad_budget(model: &PlanarModel, total: usize) -> Vec<usize> {
    let nf = model.faces.len();
    let mut out = vec![0usize; nf];
    let mut remaining = total as i64;
    let mut free = Vec::new();
    for f in 0..nf {
        if let Some(&h) = model.sizes.face_quads.get(&f) {
            out[f] = h;
            remaining -= h as i64;
        } else {
            free.push(f);
        }
    }
    let remaining = remaining.max(free.len() as i64) as usize;
    let areas: Vec<f64> = free.iter().map(|&f| model.face_area(f)).collect();
    let sum: f64 = areas.iter().sum();
    if free.is_empty() || sum <= 0.0 {
        return out;
    }
    let exact: Vec<f64> = areas.iter().map(|a| a / sum * remaining as f64).collect();
    let mut assigned: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut left = remaining - assigned.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..free.len()).collect();
    order.sort_by(|&i, &j| {
        (exact[j] - exact[j].floor())
            .total_cmp(&(exact[i] - exact[i].floor()))
            .then(i.cmp(&j))
    });
    for &i in &order {
        if left == 0 {
            break;
        }
        assigned[i] += 1;
        left -= 1;
    }
    for (k, &f) in free.iter().enumerate() {
        out[f] = assigned[k].max(1);
    }
    out
}

fn key(p: &Point) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

/// Blends per-face fields in place: `s = min(s_cf, s_min)`, equalised by
/// minimum on vertices shared between faces and gradation-limited. On
/// entry `meshes[f].size` holds `s_cf`; `s_min[f]` is the feature bound.
pub fn blend_global(meshes: &mut [TriMesh], s_min: &[Vec<f64>], g_max: f64) {
    for (m, smin) in meshes.iter_mut().zip(s_min) {
        for v in 0..m.n_vertices() {
            m.size[v] = m.size[v].min(smin[v]);
        }
    }
    for _ in 0..32 {
        let mut shared: HashMap<(u64, u64), f64> = HashMap::new();
        for m in meshes.iter() {
            for v in 0..m.n_vertices() {
                if !m.kinds[v].is_interior() {
                    let e = shared.entry(key(&m.points[v])).or_insert(f64::INFINITY);
                    *e = e.min(m.size[v]);
                }
            }
        }
        let mut changed = false;
        for m in meshes.iter_mut() {
            for v in 0..m.n_vertices() {
                if !m.kinds[v].is_interior() {
                    let s = shared[&key(&m.points[v])];
                    if s < m.size[v] {
                        m.size[v] = s;
                        changed = true;
                    }
                }
            }
            let mut f = std::mem::take(&mut m.size);
            let before = f.clone();
            one_way_smooth(m, &mut f, g_max);
            changed |= f != before;
            m.size = f;
        }
        if !changed {
            break;
        }
    }
}

/// Applies user hints (final edge lengths) as upper bounds on the coarse
/// size, which is twice the final length.
pub fn apply_hints(model: &PlanarModel, mesh: &mut TriMesh) {
    for v in 0..mesh.n_vertices() {
        let hint = match mesh.kinds[v] {
            VertexKind::Interior => None,
            VertexKind::Curve { curve } => model.sizes.curves.get(&curve).copied(),
            VertexKind::Corner { corner, .. } => {
                let c = model.sizes.corners.get(&corner).copied();
                let curves = vertex_curves(model, mesh.kinds[v])
                    .into_iter()
                    .filter_map(|k| model.sizes.curves.get(&k).copied())
                    .fold(f64::INFINITY, f64::min);
                Some(c.unwrap_or(f64::INFINITY).min(curves)).filter(|x| x.is_finite())
            }
        };
        if let Some(h) = hint {
            mesh.size[v] = mesh.size[v].min(2.0 * h);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::pt;
    use crate::model::shapes;
    use crate::triangulate::{sample_curves, triangulate_face};

    fn tri(model: &PlanarModel, face: usize, h: f64) -> TriMesh {
        let chains = sample_curves(model, h).unwrap();
        triangulate_face(model, face, &chains, &|_| h).unwrap()
    }

    #[test]
    fn one_edge_gradation() {
        let p = vec![pt(0., 0.), pt(5., 0.), pt(0., 1.)];
        let mut m = TriMesh::new(p, vec![VertexKind::Interior; 3], vec![[0, 1, 2]]).unwrap();
        let mut f = vec![1.0, 10.0, 1.0];
        one_way_smooth(&m, &mut f, 0.2);
        assert!((f[1] - 2.0).abs() < 1e-12);
        let g = f.clone();
        one_way_smooth(&m, &mut f, 0.2);
        assert_eq!(f, g);
        m.size = f;
        assert_eq!(gradation_violations(&m, &m.size, 0.2), 0);
    }

    #[test]
    fn parallel_segments_bound() {
        // thin rectangle 2 x 0.2: the long sides are 0.2 apart
        let m = shapes::rectangle(2.0, 0.2);
        let t = tri(&m, 0, 0.05);
        let idx = CurveIndex::new(&m);
        let s = feature_size(&m, &idx, &t);
        for v in 0..t.n_vertices() {
            if let VertexKind::Curve { curve } = t.kinds[v] {
                if curve == 0 || curve == 2 {
                    assert!(s[v] <= 0.2 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn isolated_square_bounded_by_curve_length() {
        let m = shapes::unit_square();
        let t = tri(&m, 0, 0.1);
        let s = feature_size(&m, &CurveIndex::new(&m), &t);
        for v in 0..t.n_vertices() {
            if t.kinds[v].is_interior() {
                assert!(s[v].is_infinite());
            } else {
                assert!(s[v] <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn budgets() {
        let mut m = shapes::rectangle_pair(1.0, 1.0);
        // make face areas 1 and 3 by widening the second rectangle
        for c in m.corners.iter_mut() {
            if c.x > 1.5 {
                c.x = 4.0;
            }
        }
        for cur in m.curves.iter_mut() {
            for p in cur.pts.iter_mut() {
                if p.x > 1.5 {
                    p.x = 4.0;
                }
            }
        }
        assert_eq!(face_quad_budget(&m, 400), vec![100, 300]);
        m.sizes.face_quads.insert(0, 50);
        assert_eq!(face_quad_budget(&m, 400), vec![50, 350]);
        assert_eq!(face_quad_budget(&shapes::unit_square(), 123), vec![123]);
    }

    #[test]
    fn blend_takes_minimum_on_shared_curve() {
        let m = shapes::rectangle_pair(1.0, 1.0);
        let chains = sample_curves(&m, 0.25).unwrap();
        let mut meshes: Vec<TriMesh> =
            (0..2).map(|f| triangulate_face(&m, f, &chains, &|_| 0.25).unwrap()).collect();
        meshes[0].size = vec![2.0; meshes[0].n_vertices()];
        meshes[1].size = vec![3.0; meshes[1].n_vertices()];
        let inf: Vec<Vec<f64>> = meshes.iter().map(|t| vec![f64::INFINITY; t.n_vertices()]).collect();
        blend_global(&mut meshes, &inf, 10.0);
        for v in 0..meshes[1].n_vertices() {
            if meshes[1].points[v].x == 1.0 {
                assert_eq!(meshes[1].size[v], 2.0);
            }
        }
        for t in &meshes {
            assert_eq!(gradation_violations(t, &t.size, 10.0), 0);
        }
    }
}
