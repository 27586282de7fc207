//! Editable quad mesh: quads with alive flags and vertex-to-quad incidence.
//! Half-edge connectivity is derived on demand.

use std::collections::HashMap;

use smallvec::SmallVec;

use super::quality::sicn_quality;
use super::VertexKind;
use crate::error::{Error, Result};
use crate::geom::Point;

pub type QuadList = SmallVec<[usize; 6]>;

#[derive(Debug, Clone, Default)]
pub struct QuadMesh {
    pub points: Vec<Point>,
    pub kinds: Vec<VertexKind>,
    quads: Vec<[usize; 4]>,
    alive: Vec<bool>,
    vquads: Vec<QuadList>,
    n_alive: usize,
}

/// Undo record for a topological replacement.
#[derive(Debug, Clone)]
pub struct Edit {
    n_points: usize,
    n_quads: usize,
    removed: Vec<usize>,
}

impl QuadMesh {
    pub fn new(points: Vec<Point>, kinds: Vec<VertexKind>, quads: Vec<[usize; 4]>) -> Self {
        assert_eq!(points.len(), kinds.len());
        let mut m = QuadMesh {
            vquads: vec![QuadList::new(); points.len()],
            points,
            kinds,
            ..Default::default()
        };
        for q in quads {
            m.add_quad(q);
        }
        m
    }

    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_quads(&self) -> usize {
        self.n_alive
    }

    /// Upper bound of quad ids (dead slots included).
    pub fn quad_capacity(&self) -> usize {
        self.quads.len()
    }

    pub fn add_vertex(&mut self, p: Point, kind: VertexKind) -> usize {
        self.points.push(p);
        self.kinds.push(kind);
        self.vquads.push(QuadList::new());
        self.points.len() - 1
    }

    pub fn add_quad(&mut self, q: [usize; 4]) -> usize {
        let id = self.quads.len();
        self.quads.push(q);
        self.alive.push(true);
        for &v in &q {
            self.vquads[v].push(id);
        }
        self.n_alive += 1;
        id
    }

    pub fn remove_quad(&mut self, id: usize) {
        if !self.alive[id] {
            return;
        }
        self.alive[id] = false;
        for &v in &self.quads[id] {
            self.vquads[v].retain(|x| *x != id);
        }
        self.n_alive -= 1;
    }

    fn revive_quad(&mut self, id: usize) {
        if self.alive[id] {
            return;
        }
        self.alive[id] = true;
        for &v in &self.quads[id] {
            self.vquads[v].push(id);
        }
        self.n_alive += 1;
    }

    /// Removes `remove`, then appends new vertices and quads. New quad
    /// indices refer to existing vertices, or to `n_points() + k` for the
    /// k-th entry of `new_points`.
    pub fn replace(
        &mut self,
        remove: &[usize],
        new_points: &[(Point, VertexKind)],
        new_quads: &[[usize; 4]],
    ) -> Edit {
        let edit = Edit {
            n_points: self.points.len(),
            n_quads: self.quads.len(),
            removed: remove.to_vec(),
        };
        for &q in remove {
            self.remove_quad(q);
        }
        for &(p, k) in new_points {
            self.add_vertex(p, k);
        }
        for &q in new_quads {
            self.add_quad(q);
        }
        edit
    }

    pub fn undo(&mut self, edit: Edit) {
        for q in (edit.n_quads..self.quads.len()).rev() {
            self.remove_quad(q);
        }
        self.quads.truncate(edit.n_quads);
        self.alive.truncate(edit.n_quads);
        self.points.truncate(edit.n_points);
        self.kinds.truncate(edit.n_points);
        self.vquads.truncate(edit.n_points);
        for &q in &edit.removed {
            self.revive_quad(q);
        }
    }

    pub fn is_alive(&self, q: usize) -> bool {
        self.alive[q]
    }

    pub fn quad(&self, q: usize) -> [usize; 4] {
        self.quads[q]
    }

    pub fn quad_ids(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.quads.len()).filter(move |&q| self.alive[q])
    }

    pub fn quads(&self) -> impl Iterator<Item = [usize; 4]> + '_ {
        self.quad_ids().map(move |q| self.quads[q])
    }

    pub fn quad_points(&self, q: usize) -> [Point; 4] {
        self.quads[q].map(|v| self.points[v])
    }

    pub fn quad_sicn(&self, q: usize) -> f64 {
        sicn_quality(&self.quad_points(q))
    }

    pub fn vertex_quads(&self, v: usize) -> &[usize] {
        &self.vquads[v]
    }

    /// Number of quads incident to `v`.
    pub fn valence(&self, v: usize) -> usize {
        self.vquads[v].len()
    }

    pub fn is_used(&self, v: usize) -> bool {
        !self.vquads[v].is_empty()
    }

    /// Index `k = ideal - valence`; interior 4 - valence, curve 2 - valence.
    pub fn vertex_index(&self, v: usize) -> i32 {
        let base = match self.kinds[v] {
            VertexKind::Interior => 4,
            _ => 2,
        };
        base - self.valence(v) as i32
    }

    pub fn is_irregular(&self, v: usize) -> bool {
        self.is_used(v) && self.valence(v) != self.kinds[v].ideal_valence()
    }

    pub fn irregular_count(&self) -> usize {
        (0..self.points.len()).filter(|&v| self.is_irregular(v)).count()
    }

    pub fn interior_irregular_count(&self) -> usize {
        (0..self.points.len())
            .filter(|&v| self.kinds[v].is_interior() && self.is_irregular(v))
            .count()
    }

    /// Quad on the other side of edge `(a, b)` of quad `q`, if any.
    pub fn across(&self, q: usize, a: usize, b: usize) -> Option<usize> {
        self.vquads[a]
            .iter()
            .copied()
            .find(|&o| o != q && self.vquads[b].contains(&o))
    }

    /// Position of `v` in quad `q`.
    pub fn corner_of(&self, q: usize, v: usize) -> usize {
        self.quads[q].iter().position(|&x| x == v).expect("vertex in quad")
    }

    /// Quads around `v` in counterclockwise order. For boundary vertices the
    /// fan starts at the quad owning the outgoing boundary edge; the flag is
    /// `true` for a closed fan.
    pub fn fan(&self, v: usize) -> (Vec<usize>, bool) {
        let qs = &self.vquads[v];
        if qs.is_empty() {
            return (Vec::new(), false);
        }
        // The quad whose edge (v, next) has no neighbour starts an open fan.
        let mut start = qs[0];
        let mut closed = true;
        for &q in qs.iter() {
            let i = self.corner_of(q, v);
            let next = self.quads[q][(i + 1) % 4];
            if self.across(q, v, next).is_none() {
                start = q;
                closed = false;
                break;
            }
        }
        let mut out = Vec::with_capacity(qs.len());
        let mut q = start;
        loop {
            out.push(q);
            let i = self.corner_of(q, v);
            let prev = self.quads[q][(i + 3) % 4];
            match self.across(q, v, prev) {
                Some(n) if n != start && out.len() < qs.len() => q = n,
                _ => break,
            }
        }
        (out, closed)
    }

    /// Ordered stencil of an interior vertex: edge neighbour, diagonal
    /// neighbour, edge neighbour, ... counterclockwise.
    pub fn ring(&self, v: usize) -> Option<Vec<usize>> {
        let (fan, closed) = self.fan(v);
        if !closed || fan.len() != self.valence(v) {
            return None;
        }
        let mut ring = Vec::with_capacity(2 * fan.len());
        for &q in &fan {
            let i = self.corner_of(q, v);
            ring.push(self.quads[q][(i + 1) % 4]);
            ring.push(self.quads[q][(i + 2) % 4]);
        }
        Some(ring)
    }

    /// Edge-connected neighbours of `v`.
    pub fn edge_neighbors(&self, v: usize) -> SmallVec<[usize; 8]> {
        let mut out = SmallVec::new();
        for &q in &self.vquads[v] {
            let i = self.corner_of(q, v);
            for n in [self.quads[q][(i + 1) % 4], self.quads[q][(i + 3) % 4]] {
                if !out.contains(&n) {
                    out.push(n);
                }
            }
        }
        out
    }

    pub fn n_edges(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        for q in self.quads() {
            for k in 0..4 {
                let (a, b) = (q[k], q[(k + 1) % 4]);
                seen.insert((a.min(b), a.max(b)));
            }
        }
        seen.len()
    }

    pub fn n_used_vertices(&self) -> usize {
        (0..self.points.len()).filter(|&v| self.is_used(v)).count()
    }

    /// Directed boundary edges (interior on the left).
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for q in self.quad_ids() {
            let qq = self.quads[q];
            for k in 0..4 {
                let (a, b) = (qq[k], qq[(k + 1) % 4]);
                if self.across(q, a, b).is_none() {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Boundary of a set of alive quads as one counterclockwise vertex loop,
    /// or `None` when the region is not bounded by a single simple loop.
    pub fn region_boundary(&self, quads: &[usize]) -> Option<Vec<usize>> {
        let set: std::collections::HashSet<usize> = quads.iter().copied().collect();
        let mut next: HashMap<usize, usize> = HashMap::new();
        for &q in quads {
            let qq = self.quads[q];
            for k in 0..4 {
                let (a, b) = (qq[k], qq[(k + 1) % 4]);
                let inner = self.across(q, a, b).is_some_and(|o| set.contains(&o));
                if !inner && next.insert(a, b).is_some() {
                    return None;
                }
            }
        }
        let &start = next.keys().min()?;
        let mut out = vec![start];
        let mut v = next[&start];
        while v != start {
            if out.len() >= next.len() {
                return None;
            }
            out.push(v);
            v = *next.get(&v)?;
        }
        (out.len() == next.len()).then_some(out)
    }

    pub fn min_sicn(&self) -> f64 {
        self.quad_ids().map(|q| self.quad_sicn(q)).fold(f64::INFINITY, f64::min)
    }

    pub fn sicn_stats(&self) -> (f64, f64) {
        super::quality::sicn_stats(self.quad_ids().map(|q| self.quad_points(q)))
    }

    /// Drops dead quads and unused vertices; returns the old-to-new vertex map.
    pub fn compact(&mut self) -> Vec<Option<usize>> {
        let mut map = vec![None; self.points.len()];
        let mut points = Vec::new();
        let mut kinds = Vec::new();
        for v in 0..self.points.len() {
            if self.is_used(v) {
                map[v] = Some(points.len());
                points.push(self.points[v]);
                kinds.push(self.kinds[v]);
            }
        }
        let quads: Vec<[usize; 4]> = self.quads().map(|q| q.map(|v| map[v].unwrap())).collect();
        *self = QuadMesh::new(points, kinds, quads);
        map
    }

    /// Half-edge consistency, manifoldness, vertex classification and
    /// incidence cache checks.
    pub fn validate(&self) -> Result<()> {
        let mut half: HashMap<(usize, usize), usize> = HashMap::with_capacity(4 * self.n_alive);
        for q in self.quad_ids() {
            let qq = self.quads[q];
            for i in 0..4 {
                for j in i + 1..4 {
                    if qq[i] == qq[j] {
                        return Err(Error::topology(format!("quad {q} repeats a vertex")));
                    }
                }
            }
            for k in 0..4 {
                if half.insert((qq[k], qq[(k + 1) % 4]), q).is_some() {
                    return Err(Error::topology(format!(
                        "directed edge ({}, {}) used twice",
                        qq[k],
                        qq[(k + 1) % 4]
                    )));
                }
            }
        }
        // twin(twin(h)) == h holds by construction of the key; check boundary manifoldness
        let mut out_boundary = vec![0usize; self.points.len()];
        let mut in_boundary = vec![0usize; self.points.len()];
        for &(a, b) in half.keys() {
            if !half.contains_key(&(b, a)) {
                out_boundary[a] += 1;
                in_boundary[b] += 1;
            }
        }
        for v in 0..self.points.len() {
            if !self.is_used(v) {
                continue;
            }
            if out_boundary[v] > 1 || in_boundary[v] != out_boundary[v] {
                return Err(Error::topology(format!("vertex {v} is non-manifold")));
            }
            let on_boundary = out_boundary[v] == 1;
            if on_boundary == self.kinds[v].is_interior() {
                return Err(Error::topology(format!(
                    "vertex {v} classified {:?} but boundary={on_boundary}",
                    self.kinds[v]
                )));
            }
            let (fan, _) = self.fan(v);
            if fan.len() != self.valence(v) {
                return Err(Error::topology(format!("vertex {v} fan is not a single disk")));
            }
        }
        let mut count = vec![0usize; self.points.len()];
        for q in self.quads() {
            for v in q {
                count[v] += 1;
            }
        }
        for v in 0..self.points.len() {
            if count[v] != self.vquads[v].len() {
                return Err(Error::Invariant(format!("valence cache mismatch at vertex {v}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::geom::pt;

    pub(crate) fn grid(nx: usize, ny: usize) -> QuadMesh {
        let mut points = Vec::new();
        let mut kinds = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                points.push(pt(i as f64, j as f64));
                let bx = i == 0 || i == nx;
                let by = j == 0 || j == ny;
                kinds.push(if bx && by {
                    VertexKind::Corner { corner: 0, ideal: 1 }
                } else if bx || by {
                    VertexKind::Curve { curve: 0 }
                } else {
                    VertexKind::Interior
                });
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut quads = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                quads.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        QuadMesh::new(points, kinds, quads)
    }

    #[test]
    fn grid_is_valid_and_regular() {
        let m = grid(4, 4);
        m.validate().unwrap();
        assert_eq!(m.irregular_count(), 0);
        assert_eq!(m.ring(6).unwrap().len(), 8);
        assert_eq!(m.fan(0).0.len(), 1);
        assert_eq!(m.boundary_edges().len(), 16);
    }

    #[test]
    fn ring_is_ordered_edge_corner() {
        let m = grid(2, 2);
        let ring = m.ring(4).unwrap();
        // center (1,1); alternate edge/corner neighbours
        for (k, &v) in ring.iter().enumerate() {
            let d = m.points[v] - m.points[4];
            let manhattan = d.x.abs() + d.y.abs();
            assert_eq!(manhattan, if k % 2 == 0 { 1.0 } else { 2.0 });
        }
    }

    #[test]
    fn replace_and_undo_restore_topology() {
        let mut m = grid(2, 2);
        let before: Vec<_> = m.quads().collect();
        let edit = m.replace(&[0, 1], &[(pt(1.0, 0.5), VertexKind::Interior)], &[[0, 1, 9, 3], [1, 2, 5, 9]]);
        assert_eq!(m.n_quads(), 4);
        m.undo(edit);
        let after: Vec<_> = m.quads().collect();
        let mut b = before.clone();
        let mut a = after.clone();
        b.sort();
        a.sort();
        assert_eq!(a, b);
        assert_eq!(m.n_points(), 9);
        m.validate().unwrap();
    }

    #[test]
    fn compact_drops_dead() {
        let mut m = grid(2, 1);
        m.remove_quad(1);
        let map = m.compact();
        assert_eq!(m.n_quads(), 1);
        assert_eq!(m.n_points(), 4);
        assert!(map[2].is_none());
    }
}
