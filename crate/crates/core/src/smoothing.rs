//! Geometry optimization of quad mesh regions: direct Laplacian solve,
//! Winslow and angle-based kernels, a quality-gated smoothing loop and a
//! pattern-search untangler.

use std::collections::{HashMap, HashSet};
use std::f64::consts::TAU;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::geom::{pt, Point};
use crate::linalg::{dense_solve, pcg, AutoPrecond, Csr};
use crate::mesh::QuadMesh;

/// When a smoothing result is kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// The minimum SICN of the region must not decrease.
    Strict,
    /// Also accept when the minimum stays above `floor` and the mean drops
    /// by at most `mean_drop` (relative).
    Relaxed { floor: f64, mean_drop: f64 },
}

#[derive(Debug, Clone, Copy)]
pub struct SmoothParams {
    pub max_iter: usize,
    /// Stop when every move is below this fraction of the local edge length.
    pub tol: f64,
    pub gate: Gate,
}

impl Default for SmoothParams {
    fn default() -> Self {
        SmoothParams { max_iter: 30, tol: 1e-3, gate: Gate::Strict }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SmoothReport {
    pub accepted: bool,
    pub iterations: usize,
    pub min_before: f64,
    pub min_after: f64,
    pub mean_before: f64,
    pub mean_after: f64,
}

/// Vertices of `quads` that may move: interior vertices whose incident
/// quads all belong to the region. Sorted.
pub fn free_vertices(mesh: &QuadMesh, quads: &[usize]) -> Vec<usize> {
    let set: HashSet<usize> = quads.iter().copied().collect();
    let mut out: Vec<usize> = quads
        .iter()
        .flat_map(|&q| mesh.quad(q))
        .filter(|&v| mesh.kinds[v].is_interior() && mesh.vertex_quads(v).iter().all(|q| set.contains(q)))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Quads whose shape depends on at least one of `free`. Sorted.
pub fn affected_quads(mesh: &QuadMesh, free: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = free.iter().flat_map(|&v| mesh.vertex_quads(v).iter().copied()).collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Minimum and mean SICN over `quads`.
pub fn region_quality(mesh: &QuadMesh, quads: &[usize]) -> (f64, f64) {
    if quads.is_empty() {
        return (1.0, 1.0);
    }
    let mut min = f64::INFINITY;
    let mut sum = 0.0;
    for &q in quads {
        let s = mesh.quad_sicn(q);
        min = min.min(s);
        sum += s;
    }
    (min, sum / quads.len() as f64)
}

/// Places every free vertex at the arithmetic mean of its edge neighbours,
/// solving the coupled system directly.
pub fn laplacian_solve(mesh: &mut QuadMesh, free: &[usize]) -> Result<()> {
    let n = free.len();
    if n == 0 {
        return Ok(());
    }
    let index: HashMap<usize, usize> = free.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut t = Vec::new();
    let mut bx = vec![0.0; n];
    let mut by = vec![0.0; n];
    for (i, &v) in free.iter().enumerate() {
        let nb = mesh.edge_neighbors(v);
        if nb.is_empty() {
            return Err(Error::Numeric(format!("vertex {v} has no neighbours")));
        }
        t.push((i, i, nb.len() as f64));
        for &w in &nb {
            match index.get(&w) {
                Some(&j) => t.push((i, j, -1.0)),
                None => {
                    bx[i] += mesh.points[w].x;
                    by[i] += mesh.points[w].y;
                }
            }
        }
    }
    let a = Csr::from_triplets(n, t);
    let (x, y) = if n <= 300 {
        let d = a.to_dense();
        (dense_solve(&d, &bx)?, dense_solve(&d, &by)?)
    } else {
        let pre = AutoPrecond::new(&a);
        let mut x: Vec<f64> = free.iter().map(|&v| mesh.points[v].x).collect();
        let mut y: Vec<f64> = free.iter().map(|&v| mesh.points[v].y).collect();
        pcg(&a, &bx, &mut x, &pre, 1e-12, 10 * n + 100)?;
        pcg(&a, &by, &mut y, &pre, 1e-12, 10 * n + 100)?;
        (x, y)
    };
    if x.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(Error::Numeric("singular Laplacian system".into()));
    }
    for (i, &v) in free.iter().enumerate() {
        mesh.points[v] = pt(x[i], y[i]);
    }
    Ok(())
}

/// Finite-difference Winslow update for a regular vertex. The stencil is
/// ordered edge, diagonal, edge, ... so that `s[0], s[4]` and `s[2], s[6]`
/// are the opposite edge neighbours. `None` for a degenerate stencil.
pub fn winslow_kernel(s: &[Point; 8]) -> Option<Point> {
    let d15 = s[0] - s[4];
    let d37 = s[2] - s[6];
    let a0 = d37.dot(&d37);
    let a1 = d15.dot(&d15);
    let beta = d15.dot(&d37);
    let den = 2.0 * (a0 + a1);
    if !(den > 1e-300) {
        return None;
    }
    let cross = s[1].coords + s[5].coords - s[3].coords - s[7].coords;
    let num = (s[0].coords + s[4].coords) * a0 + (s[2].coords + s[6].coords) * a1 - cross * (0.5 * beta);
    Some(Point::from(num / den))
}

/// Angle-based update: each edge neighbour proposes the point on the
/// bisector of its ring angle at the current distance; the proposals are
/// averaged. `ring` alternates edge and diagonal neighbours
/// counterclockwise.
pub fn angle_kernel(x: &Point, ring: &[Point]) -> Point {
    let m = ring.len();
    let mut acc = nalgebra::Vector2::zeros();
    let mut k = 0;
    for i in (0..m).step_by(2) {
        let n = ring[i];
        let prev = ring[(i + m - 1) % m];
        let next = ring[(i + 1) % m];
        let aq = (next - n).y.atan2((next - n).x);
        let ap = (prev - n).y.atan2((prev - n).x);
        let sweep = (ap - aq).rem_euclid(TAU);
        let b = aq + 0.5 * sweep;
        let r = (x - n).norm();
        acc += n.coords + nalgebra::Vector2::new(b.cos(), b.sin()) * r;
        k += 1;
    }
    Point::from(acc / k as f64)
}

fn local_length(mesh: &QuadMesh, v: usize) -> f64 {
    let nb = mesh.edge_neighbors(v);
    nb.iter().map(|&w| (mesh.points[w] - mesh.points[v]).norm()).sum::<f64>() / nb.len().max(1) as f64
}

fn min_around(mesh: &QuadMesh, v: usize) -> f64 {
    mesh.vertex_quads(v).iter().map(|&q| mesh.quad_sicn(q)).fold(f64::INFINITY, f64::min)
}

/// Kernel target for one free vertex.
pub fn kernel_target(mesh: &QuadMesh, v: usize) -> Option<Point> {
    let ring = mesh.ring(v)?;
    let pts: Vec<Point> = ring.iter().map(|&w| mesh.points[w]).collect();
    if pts.len() == 8 {
        if let Some(p) = winslow_kernel(&[pts[0], pts[1], pts[2], pts[3], pts[4], pts[5], pts[6], pts[7]]) {
            return Some(p);
        }
    }
    Some(angle_kernel(&mesh.points[v], &pts))
}

/// Gauss-Seidel sweeps of the kernels over the free vertices of `quads`,
/// then the quality gate. Rejected results restore the original positions
/// exactly.
pub fn smooth_loop(mesh: &mut QuadMesh, quads: &[usize], params: &SmoothParams) -> SmoothReport {
    let free = free_vertices(mesh, quads);
    smooth_vertices(mesh, &free, params)
}

/// As [`smooth_loop`] on an explicit free vertex set.
pub fn smooth_vertices(mesh: &mut QuadMesh, free: &[usize], params: &SmoothParams) -> SmoothReport {
    let region = affected_quads(mesh, free);
    let (min_before, mean_before) = region_quality(mesh, &region);
    let saved: Vec<Point> = free.iter().map(|&v| mesh.points[v]).collect();
    let mut iterations = 0;
    for _ in 0..params.max_iter {
        iterations += 1;
        let mut worst = 0.0f64;
        for &v in free {
            let Some(target) = kernel_target(mesh, v) else { continue };
            if !(target.x.is_finite() && target.y.is_finite()) {
                continue;
            }
            let old = mesh.points[v];
            let before = min_around(mesh, v);
            mesh.points[v] = target;
            // never create an inverted element out of a valid one
            if before > 0.0 && min_around(mesh, v) <= 0.0 {
                mesh.points[v] = old;
                continue;
            }
            let h = local_length(mesh, v);
            if h > 0.0 {
                worst = worst.max((target - old).norm() / h);
            }
        }
        if worst < params.tol {
            break;
        }
    }
    let (min_after, mean_after) = region_quality(mesh, &region);
    let accepted = match params.gate {
        Gate::Strict => min_after >= min_before,
        Gate::Relaxed { floor, mean_drop } => {
            min_after >= min_before || (min_after >= floor && mean_after >= mean_before * (1.0 - mean_drop))
        }
    };
    if !accepted {
        for (&v, &p) in free.iter().zip(&saved) {
            mesh.points[v] = p;
        }
    }
    SmoothReport {
        accepted,
        iterations,
        min_before,
        min_after: if accepted { min_after } else { min_before },
        mean_before,
        mean_after: if accepted { mean_after } else { mean_before },
    }
}

/// Pattern search maximizing the minimum corner SICN around each free
/// vertex, with shrinking steps, until `budget` elapses or steps vanish.
/// Returns whether all affected quads end up valid. Never lowers the
/// region minimum.
pub fn untangle_local(mesh: &mut QuadMesh, free: &[usize], budget: Duration) -> bool {
    let region = affected_quads(mesh, free);
    let start = Instant::now();
    let mut step: Vec<f64> = free.iter().map(|&v| 0.25 * local_length(mesh, v)).collect();
    let floor: Vec<f64> = step.iter().map(|s| s * 1e-6).collect();
    let dirs = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (0.7071, 0.7071), (-0.7071, 0.7071), (0.7071, -0.7071), (-0.7071, -0.7071)];
    loop {
        let mut active = false;
        for (i, &v) in free.iter().enumerate() {
            if step[i] < floor[i] {
                continue;
            }
            active = true;
            let mut best = min_around(mesh, v);
            let mut best_p = mesh.points[v];
            let base = mesh.points[v];
            for (dx, dy) in dirs {
                mesh.points[v] = pt(base.x + dx * step[i], base.y + dy * step[i]);
                let q = min_around(mesh, v);
                if q > best {
                    best = q;
                    best_p = mesh.points[v];
                }
            }
            mesh.points[v] = best_p;
            if best_p == base {
                step[i] *= 0.5;
            }
            if start.elapsed() > budget {
                return region_quality(mesh, &region).0 > 0.0;
            }
        }
        if !active {
            break;
        }
        if region_quality(mesh, &region).0 > 0.3 && free.len() > 0 {
            // valid with margin: further search only polishes
            let all_small = step.iter().zip(&floor).all(|(s, f)| *s < f * 1e4);
            if all_small {
                break;
            }
        }
    }
    region_quality(mesh, &region).0 > 0.0
}

/// Geometry of a freshly replaced region, with what is needed to roll it
/// back.
#[derive(Debug, Clone)]
pub struct Relaxation {
    /// The new quads and every quad sharing a vertex with them.
    pub ring: Vec<usize>,
    pub saved: Vec<(usize, Point)>,
    pub min: f64,
    pub mean: f64,
}

impl Relaxation {
    pub fn restore(&self, mesh: &mut QuadMesh) {
        for &(v, p) in &self.saved {
            mesh.points[v] = p;
        }
    }
}

/// Quads sharing a vertex with `quads`, `quads` included. Sorted.
pub fn vertex_ring(mesh: &QuadMesh, quads: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = quads
        .iter()
        .flat_map(|&q| mesh.quad(q))
        .flat_map(|v| mesh.vertex_quads(v).iter().copied())
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Places the vertices of a remeshed region: a Laplacian solve on the
/// region enlarged by one ring of quads, local untangling if needed, then
/// the smoothing loop. The ring boundary stays fixed.
pub fn relax_around(mesh: &mut QuadMesh, new_quads: &[usize], budget: Duration) -> Relaxation {
    let ring = vertex_ring(mesh, new_quads);
    let free = free_vertices(mesh, &ring);
    let saved: Vec<(usize, Point)> = free.iter().map(|&v| (v, mesh.points[v])).collect();
    if laplacian_solve(mesh, &free).is_err() {
        let (min, mean) = region_quality(mesh, &ring);
        return Relaxation { ring, saved, min, mean };
    }
    if region_quality(mesh, &ring).0 <= 0.0 {
        untangle_local(mesh, &free, budget);
    }
    smooth_vertices(mesh, &free, &SmoothParams::default());
    let (min, mean) = region_quality(mesh, &ring);
    Relaxation { ring, saved, min, mean }
}
