//! Conforming triangle mesh with edge-based storage.

use std::collections::HashMap;

use super::VertexKind;
use crate::error::{Error, Result};
use crate::geom::{orient, Point};

pub const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub points: Vec<Point>,
    pub kinds: Vec<VertexKind>,
    pub tris: Vec<[usize; 3]>,
    /// Sorted vertex pairs.
    pub edges: Vec<[usize; 2]>,
    /// Adjacent triangles per edge; the second slot is `NONE` on the boundary.
    pub edge_tris: Vec<[usize; 2]>,
    /// `tri_edges[t][k]` is the edge opposite to `tris[t][k]`.
    pub tri_edges: Vec<[usize; 3]>,
    /// Per-vertex size slot.
    pub size: Vec<f64>,
    /// Per-vertex conformal scaling slot.
    pub h: Vec<f64>,
    /// Per-edge cross angle relative to the global x axis.
    pub theta: Vec<f64>,
    vert_tris_start: Vec<usize>,
    vert_tris: Vec<usize>,
}

impl TriMesh {
    /// Builds connectivity. Triangles are reoriented to be counterclockwise.
    pub fn new(points: Vec<Point>, kinds: Vec<VertexKind>, mut tris: Vec<[usize; 3]>) -> Result<Self> {
        assert_eq!(points.len(), kinds.len());
        for t in tris.iter_mut() {
            let o = orient(&points[t[0]], &points[t[1]], &points[t[2]]);
            if o == 0.0 {
                return Err(Error::input("degenerate triangle"));
            }
            if o < 0.0 {
                t.swap(1, 2);
            }
        }
        let mut index: HashMap<[usize; 2], usize> = HashMap::with_capacity(tris.len() * 2);
        let mut edges = Vec::new();
        let mut edge_tris: Vec<[usize; 2]> = Vec::new();
        let mut tri_edges = vec![[0usize; 3]; tris.len()];
        for (ti, t) in tris.iter().enumerate() {
            for k in 0..3 {
                let a = t[(k + 1) % 3];
                let b = t[(k + 2) % 3];
                let key = if a < b { [a, b] } else { [b, a] };
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_tris.push([NONE, NONE]);
                    edges.len() - 1
                });
                let slot = &mut edge_tris[e];
                if slot[0] == NONE {
                    slot[0] = ti;
                } else if slot[1] == NONE {
                    slot[1] = ti;
                } else {
                    return Err(Error::topology(format!("edge {key:?} has more than two triangles")));
                }
                tri_edges[ti][k] = e;
            }
        }
        let n = points.len();
        let mut count = vec![0usize; n + 1];
        for t in &tris {
            for &v in t {
                count[v + 1] += 1;
            }
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let mut fill = count.clone();
        let mut vert_tris = vec![0; count[n]];
        for (ti, t) in tris.iter().enumerate() {
            for &v in t {
                vert_tris[fill[v]] = ti;
                fill[v] += 1;
            }
        }
        let ne = edges.len();
        Ok(TriMesh {
            size: vec![0.0; n],
            h: vec![0.0; n],
            theta: vec![0.0; ne],
            points,
            kinds,
            tris,
            edges,
            edge_tris,
            tri_edges,
            vert_tris_start: count,
            vert_tris,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.points.len()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_tris[e][1] == NONE
    }

    pub fn vertex_tris(&self, v: usize) -> &[usize] {
        &self.vert_tris[self.vert_tris_start[v]..self.vert_tris_start[v + 1]]
    }

    pub fn tri_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.tris[t];
        [self.points[a], self.points[b], self.points[c]]
    }

    pub fn tri_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.tri_points(t);
        0.5 * orient(&a, &b, &c)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        (self.points[a] - self.points[b]).norm()
    }

    pub fn edge_midpoint(&self, e: usize) -> Point {
        let [a, b] = self.edges[e];
        nalgebra::center(&self.points[a], &self.points[b])
    }

    /// Angle of an edge direction in `(-pi, pi]`, from lower to higher index.
    pub fn edge_angle(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        let d = self.points[b] - self.points[a];
        d.y.atan2(d.x)
    }

    /// Edges incident to each vertex.
    pub fn vertex_edges(&self) -> Vec<Vec<usize>> {
        let mut ve = vec![Vec::new(); self.points.len()];
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            ve[a].push(e);
            ve[b].push(e);
        }
        ve
    }

    pub fn boundary_vertex_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.points.len()];
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if self.is_boundary_edge(e) {
                m[a] = true;
                m[b] = true;
            }
        }
        m
    }

    pub fn euler_characteristic(&self) -> i64 {
        let used = self.vert_tris_start.windows(2).filter(|w| w[1] > w[0]).count();
        used as i64 - self.edges.len() as i64 + self.tris.len() as i64
    }

    pub fn area(&self) -> f64 {
        (0..self.tris.len()).map(|t| self.tri_area(t)).sum()
    }

    /// Barycentric interpolation of a per-vertex field inside triangle `t`.
    pub fn interpolate(&self, t: usize, p: &Point, field: &[f64]) -> f64 {
        let [a, b, c] = self.tri_points(t);
        let area = orient(&a, &b, &c);
        let la = orient(p, &b, &c) / area;
        let lb = orient(&a, p, &c) / area;
        let lc = 1.0 - la - lb;
        let [ia, ib, ic] = self.tris[t];
        la * field[ia] + lb * field[ib] + lc * field[ic]
    }

    pub fn check_conforming(&self) -> Result<()> {
        for t in 0..self.tris.len() {
            if self.tri_area(t) <= 0.0 {
                return Err(Error::topology(format!("triangle {t} is not positively oriented")));
            }
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (ti, t) in self.tris.iter().enumerate() {
            for k in 0..3 {
                if directed.insert((t[k], t[(k + 1) % 3]), ti).is_some() {
                    return Err(Error::topology("duplicate directed edge"));
                }
            }
        }
        Ok(())
    }
}

/// Point location over a triangle mesh through a uniform bucket grid.
pub struct TriLocator {
    min: Point,
    cell: f64,
    nx: usize,
    ny: usize,
    buckets: Vec<Vec<u32>>,
}

impl TriLocator {
    pub fn new(mesh: &TriMesh) -> Self {
        let bb = crate::geom::BBox::of(&mesh.points);
        let n = mesh.tris.len().max(1);
        let w = (bb.max.x - bb.min.x).max(1e-300);
        let h = (bb.max.y - bb.min.y).max(1e-300);
        let cell = ((w * h) / n as f64).sqrt().max(w.max(h) / 2048.0);
        let nx = ((w / cell).ceil() as usize).max(1);
        let ny = ((h / cell).ceil() as usize).max(1);
        let mut buckets = vec![Vec::new(); nx * ny];
        for (ti, _) in mesh.tris.iter().enumerate() {
            let tb = crate::geom::BBox::of(&mesh.tri_points(ti));
            let (x0, y0) = Self::cell_of(bb.min, cell, nx, ny, &tb.min);
            let (x1, y1) = Self::cell_of(bb.min, cell, nx, ny, &tb.max);
            for iy in y0..=y1 {
                for ix in x0..=x1 {
                    buckets[iy * nx + ix].push(ti as u32);
                }
            }
        }
        TriLocator { min: bb.min, cell, nx, ny, buckets }
    }

    fn cell_of(min: Point, cell: f64, nx: usize, ny: usize, p: &Point) -> (usize, usize) {
        let ix = (((p.x - min.x) / cell).floor().max(0.0) as usize).min(nx - 1);
        let iy = (((p.y - min.y) / cell).floor().max(0.0) as usize).min(ny - 1);
        (ix, iy)
    }

    /// Triangle containing `p` (with a small tolerance), if any.
    pub fn locate(&self, mesh: &TriMesh, p: &Point) -> Option<usize> {
        let (ix, iy) = Self::cell_of(self.min, self.cell, self.nx, self.ny, p);
        let mut best = None;
        let mut best_score = f64::NEG_INFINITY;
        for &ti in &self.buckets[iy * self.nx + ix] {
            let t = ti as usize;
            let [a, b, c] = mesh.tri_points(t);
            let area = orient(&a, &b, &c);
            let m = (orient(p, &b, &c) / area)
                .min(orient(&a, p, &c) / area)
                .min(orient(&a, &b, p) / area);
            if m >= 0.0 {
                return Some(t);
            }
            if m > best_score {
                best_score = m;
                best = Some(t);
            }
        }
        if best_score > -1e-9 {
            best
        } else {
            None
        }
    }

    /// Like `locate`, but falls back to the nearest triangle in the bucket
    /// neighbourhood so that points on or slightly outside the boundary
    /// still get a field value.
    pub fn locate_nearest(&self, mesh: &TriMesh, p: &Point) -> usize {
        if let Some(t) = self.locate(mesh, p) {
            return t;
        }
        let (ix, iy) = Self::cell_of(self.min, self.cell, self.nx, self.ny, p);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for r in 0..self.nx.max(self.ny) {
            let x0 = ix.saturating_sub(r);
            let y0 = iy.saturating_sub(r);
            let x1 = (ix + r).min(self.nx - 1);
            let y1 = (iy + r).min(self.ny - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    for &ti in &self.buckets[y * self.nx + x] {
                        let c = crate::geom::centroid(&mesh.tri_points(ti as usize));
                        let d = (c - p).norm_squared();
                        if d < best_d {
                            best_d = d;
                            best = ti as usize;
                        }
                    }
                }
            }
            if best_d.is_finite() {
                break;
            }
        }
        best
    }
}
