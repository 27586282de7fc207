//! Boundary-aligned cross fields by multilevel MBO diffusion on
//! Crouzeix-Raviart edge unknowns, singularity extraction and conformal
//! scaling.
//!
//! Crosses are stored in the global frame: edge `e` carries
//! `u = (cos 4 phi, sin 4 phi)` with `phi` the angle of one cross branch
//! against the x axis. The angle relative to the edge tangent is
//! `phi - tau_e` and is defined modulo `pi / 2`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use log::{debug, warn};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{self, Point};
use crate::linalg::{self, AutoPrecond, Csr};
use crate::mesh::tri::NONE;
use crate::mesh::TriMesh;
use crate::model::PlanarModel;

#[derive(Debug, Clone)]
pub struct CrossField {
    /// Unit representation vector per edge.
    pub u: Vec<[f64; 2]>,
    /// Branch angle per edge in the global frame, in `[-pi/4, pi/4)`.
    pub phi: Vec<f64>,
}

impl CrossField {
    pub fn from_u(u: Vec<[f64; 2]>) -> Self {
        let phi = u.iter().map(|v| v[1].atan2(v[0]) / 4.0).collect();
        CrossField { u, phi }
    }

    /// Cross angle relative to the tangent of edge `e`, in `[-pi/4, pi/4)`.
    pub fn theta(&self, mesh: &TriMesh, e: usize) -> f64 {
        geom::wrap_angle(self.phi[e] - mesh.edge_angle(e), FRAC_PI_2)
    }

    /// Branch angle at `p` inside triangle `t` from the CR interpolant.
    pub fn angle_at(&self, mesh: &TriMesh, t: usize, p: &Point) -> f64 {
        let [a, b, c] = mesh.tri_points(t);
        let area = geom::orient(&a, &b, &c);
        let lam = [
            geom::orient(p, &b, &c) / area,
            geom::orient(&a, p, &c) / area,
            geom::orient(&a, &b, p) / area,
        ];
        let (mut x, mut y) = (0.0, 0.0);
        for k in 0..3 {
            let w = 1.0 - 2.0 * lam[k];
            let u = self.u[mesh.tri_edges[t][k]];
            x += w * u[0];
            y += w * u[1];
        }
        y.atan2(x) / 4.0
    }
}

#[inline]
fn boundary_cross(mesh: &TriMesh, e: usize) -> [f64; 2] {
    let tau = mesh.edge_angle(e);
    [(4.0 * tau).cos(), (4.0 * tau).sin()]
}

#[inline]
pub fn project(u: [f64; 2]) -> [f64; 2] {
    let n = u[0].hypot(u[1]);
    if n < 1e-300 {
        [1.0, 0.0]
    } else {
        [u[0] / n, u[1] / n]
    }
}

/// CR stiffness matrix over the edges of `tris` and the lumped diagonal mass.
pub fn assemble_cr_subset(mesh: &TriMesh, tris: impl Iterator<Item = usize>) -> Result<(Csr, Vec<f64>)> {
    let ne = mesh.edges.len();
    let mut t = Vec::new();
    let mut mass = vec![0.0; ne];
    for ti in tris {
        let [a, b, c] = mesh.tri_points(ti);
        let area = 0.5 * geom::orient(&a, &b, &c);
        if area <= 0.0 {
            return Err(Error::input(format!("degenerate triangle {ti}")));
        }
        // edge vectors opposite each vertex
        let ev = [c - b, a - c, b - a];
        let te = mesh.tri_edges[ti];
        for i in 0..3 {
            mass[te[i]] += area / 3.0;
            for j in 0..3 {
                // 4 * P1 stiffness = 4 * e_i . e_j / (4 A)
                t.push((te[i], te[j], ev[i].dot(&ev[j]) / area));
            }
        }
    }
    Ok((Csr::from_triplets(ne, t), mass))
}

pub fn assemble_cr_matrices(mesh: &TriMesh) -> Result<(Csr, Vec<f64>)> {
    assemble_cr_subset(mesh, 0..mesh.tris.len())
}

/// Solves `A u = 0` on the free edges with `fixed` values, for both
/// components, where `A = k + diag(shift)`.
fn solve_dirichlet(
    k: &Csr,
    fixed: &[Option<[f64; 2]>],
    active: &[bool],
    guess: &[[f64; 2]],
) -> Result<Vec<[f64; 2]>> {
    let n = k.n;
    let mut index = vec![None; n];
    let mut nf = 0;
    for e in 0..n {
        if active[e] && fixed[e].is_none() {
            index[e] = Some(nf);
            nf += 1;
        }
    }
    let mut out: Vec<[f64; 2]> = (0..n).map(|e| fixed[e].unwrap_or(guess[e])).collect();
    if nf == 0 {
        return Ok(out);
    }
    // inactive unknowns are treated as fixed zero columns
    let a = k.restrict(&index, nf);
    let pre = AutoPrecond::new(&a);
    for c in 0..2 {
        let xfull: Vec<f64> = (0..n).map(|e| fixed[e].map_or(0.0, |v| v[c])).collect();
        let b: Vec<f64> = k.fixed_part(&index, nf, &xfull).into_iter().map(|v| -v).collect();
        let mut x: Vec<f64> = (0..n).filter(|&e| index[e].is_some()).map(|e| guess[e][c]).collect();
        linalg::pcg(&a, &b, &mut x, &pre, 1e-10, 4 * nf + 100)?;
        for e in 0..n {
            if let Some(i) = index[e] {
                out[e][c] = x[i];
            }
        }
    }
    Ok(out)
}

/// Dirichlet values on boundary edges: crosses tangent to the boundary.
pub fn boundary_conditions(mesh: &TriMesh) -> Vec<Option<[f64; 2]>> {
    (0..mesh.edges.len())
        .map(|e| mesh.is_boundary_edge(e).then(|| boundary_cross(mesh, e)))
        .collect()
}

/// Fixes every edge of the triangles touching the boundary by solving the
/// Laplace problem on that layer alone, then projecting.
pub fn extend_boundary_conditions(mesh: &TriMesh, fixed: &[Option<[f64; 2]>]) -> Result<Vec<Option<[f64; 2]>>> {
    let on_boundary = mesh.boundary_vertex_mask();
    let layer: Vec<usize> = (0..mesh.tris.len())
        .filter(|&t| mesh.tris[t].iter().any(|&v| on_boundary[v]))
        .collect();
    let (k, _) = assemble_cr_subset(mesh, layer.iter().copied())?;
    let mut active = vec![false; mesh.edges.len()];
    for &t in &layer {
        for &e in &mesh.tri_edges[t] {
            active[e] = true;
        }
    }
    let guess = vec![[0.0, 0.0]; mesh.edges.len()];
    let sol = solve_dirichlet(&k, fixed, &active, &guess)?;
    Ok((0..mesh.edges.len())
        .map(|e| {
            if fixed[e].is_some() {
                fixed[e]
            } else if active[e] {
                Some(project(sol[e]))
            } else {
                None
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy)]
pub struct MboParams {
    pub levels: usize,
    pub tol: f64,
    pub max_iter_per_level: usize,
    pub extend_boundary: bool,
}

impl Default for MboParams {
    fn default() -> Self {
        MboParams { levels: 5, tol: 1e-3, max_iter_per_level: 30, extend_boundary: true }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct MboReport {
    pub alphas: Vec<f64>,
    pub iterations: Vec<usize>,
    pub energy_increases: usize,
    pub total_iterations: usize,
    pub last_change: f64,
}

/// Diffusion coefficients of the levels: linear from `(0.1 d)^2` down to
/// `(3 h_min)^2`, both ends included.
pub fn level_alphas(mesh: &TriMesh, levels: usize) -> Vec<f64> {
    let d = geom::BBox::of(&mesh.points).diagonal();
    let h_min = (0..mesh.edges.len()).map(|e| mesh.edge_length(e)).fold(f64::INFINITY, f64::min);
    let a0 = (0.1 * d).powi(2);
    let a1 = (3.0 * h_min).powi(2);
    if levels <= 1 {
        return vec![a0];
    }
    (0..levels).map(|l| a0 + (a1 - a0) * l as f64 / (levels - 1) as f64).collect()
}

pub fn mbo_solve(mesh: &TriMesh, params: &MboParams) -> Result<(CrossField, MboReport)> {
    let ne = mesh.edges.len();
    let (k, mass) = assemble_cr_matrices(mesh)?;
    let mut fixed = boundary_conditions(mesh);
    if !fixed.iter().any(|f| f.is_some()) {
        return Err(Error::input("cross field needs boundary edges"));
    }
    if params.extend_boundary {
        fixed = extend_boundary_conditions(mesh, &fixed)?;
    }
    let mut index = vec![None; ne];
    let mut free = Vec::new();
    for e in 0..ne {
        if fixed[e].is_none() {
            index[e] = Some(free.len());
            free.push(e);
        }
    }
    let mut u: Vec<[f64; 2]> = (0..ne).map(|e| fixed[e].unwrap_or([0.0, 0.0])).collect();
    let mut report = MboReport { alphas: level_alphas(mesh, params.levels), ..Default::default() };
    let nf = free.len();
    if nf == 0 {
        return Ok((CrossField::from_u(u), report));
    }
    let kf = k.restrict(&index, nf);
    let fixed_rhs: [Vec<f64>; 2] = [0, 1].map(|c| {
        let x: Vec<f64> = (0..ne).map(|e| fixed[e].map_or(0.0, |v| v[c])).collect();
        k.fixed_part(&index, nf, &x)
    });
    let mf: Vec<f64> = free.iter().map(|&e| mass[e]).collect();
    let mut first = true;
    for alpha in report.alphas.clone() {
        let shift: Vec<f64> = mf.iter().map(|m| m / alpha).collect();
        let a = kf.plus_diagonal(&shift);
        let pre = AutoPrecond::new(&a);
        let mut it = 0;
        let mut prev_energy = f64::INFINITY;
        loop {
            let mut change: f64 = 0.0;
            let mut next = u.clone();
            for c in 0..2 {
                let b: Vec<f64> = (0..nf)
                    .map(|i| shift[i] * u[free[i]][c] - fixed_rhs[c][i])
                    .collect();
                let mut x: Vec<f64> = free.iter().map(|&e| u[e][c]).collect();
                linalg::pcg(&a, &b, &mut x, &pre, 1e-8, 2 * nf + 200)?;
                for i in 0..nf {
                    next[free[i]][c] = x[i];
                }
            }
            for &e in &free {
                let p = project(next[e]);
                if !first {
                    change = change.max((p[0] - u[e][0]).abs()).max((p[1] - u[e][1]).abs());
                } else {
                    change = f64::INFINITY;
                }
                next[e] = p;
            }
            first = false;
            u = next;
            it += 1;
            let energy = dirichlet_energy(&k, &u);
            if energy > prev_energy * (1.0 + 1e-8) {
                report.energy_increases += 1;
                debug!("MBO energy increased at alpha {alpha:.3e}: {prev_energy:.6e} -> {energy:.6e}");
            }
            prev_energy = energy;
            report.last_change = change;
            if change <= params.tol || it >= params.max_iter_per_level {
                break;
            }
        }
        report.iterations.push(it);
        report.total_iterations += it;
    }
    if report.energy_increases * 100 > report.total_iterations.max(1) {
        debug!(
            "MBO energy rose in {} of {} iterations",
            report.energy_increases, report.total_iterations
        );
    }
    Ok((CrossField::from_u(u), report))
}

pub fn dirichlet_energy(k: &Csr, u: &[[f64; 2]]) -> f64 {
    let x: Vec<f64> = u.iter().map(|v| v[0]).collect();
    let y: Vec<f64> = u.iter().map(|v| v[1]).collect();
    k.quad_form(&x) + k.quad_form(&y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SingularityOrigin {
    Field,
    AcuteCorner,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Singularity {
    #[serde(serialize_with = "ser_point")]
    pub position: Point,
    pub index: i32,
    pub origin: SingularityOrigin,
}

fn ser_point<S: serde::Serializer>(p: &Point, s: S) -> std::result::Result<S::Ok, S::Error> {
    [p.x, p.y].serialize(s)
}

/// Raw index of every vertex: wrapped angle increments of the cross along
/// the rotationally ordered incident edges, divided by `pi / 2`. Boundary
/// vertices get 0.
pub fn vertex_indices(mesh: &TriMesh, field: &CrossField) -> Vec<i32> {
    let on_boundary = mesh.boundary_vertex_mask();
    let vedges = mesh.vertex_edges();
    let mut out = vec![0; mesh.n_vertices()];
    for v in 0..mesh.n_vertices() {
        if on_boundary[v] || vedges[v].is_empty() {
            continue;
        }
        let mut es: Vec<(f64, usize)> = vedges[v]
            .iter()
            .map(|&e| {
                let [a, b] = mesh.edges[e];
                let o = if a == v { b } else { a };
                (geom::angle_of(&(mesh.points[o] - mesh.points[v])), e)
            })
            .collect();
        es.sort_by(|x, y| x.0.total_cmp(&y.0));
        let n = es.len();
        let mut sum = 0.0;
        for i in 0..n {
            let a = field.phi[es[i].1];
            let b = field.phi[es[(i + 1) % n].1];
            sum += wrap_quarter(b - a);
        }
        out[v] = (sum / FRAC_PI_2).round() as i32;
    }
    out
}

/// Wraps into `[-pi/4, pi/4]`.
fn wrap_quarter(a: f64) -> f64 {
    geom::wrap_angle(a, FRAC_PI_2)
}

/// Singularities of a converged field. Adjacent vertices with non-zero
/// index are merged: two into an edge midpoint, three into a triangle
/// barycentre. Larger clusters and indices of magnitude two or more are
/// reported as diagnostics.
pub fn detect_singularities(mesh: &TriMesh, field: &CrossField) -> (Vec<Singularity>, Vec<String>) {
    let idx = vertex_indices(mesh, field);
    let n = mesh.n_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &[a, b] in &mesh.edges {
        if idx[a] != 0 && idx[b] != 0 {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra] = rb;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for v in 0..n {
        if idx[v] != 0 {
            let r = find(&mut parent, v);
            groups.entry(r).or_default().push(v);
        }
    }
    let mut out = Vec::new();
    let mut diag = Vec::new();
    for (_, g) in groups {
        let pts: Vec<Point> = g.iter().map(|&v| mesh.points[v]).collect();
        let pos = geom::centroid(&pts);
        let pos_sum: i32 = g.iter().filter(|&&v| idx[v] > 0).count() as i32;
        let neg_sum: i32 = g.iter().filter(|&&v| idx[v] < 0).count() as i32;
        if g.iter().any(|&v| idx[v].abs() >= 2) {
            diag.push(format!("vertex index of magnitude >= 2 near ({:.4}, {:.4})", pos.x, pos.y));
        }
        if g.len() > 3 {
            diag.push(format!("singular cluster of {} vertices near ({:.4}, {:.4})", g.len(), pos.x, pos.y));
        }
        let index = (pos_sum - neg_sum).signum();
        if index == 0 {
            diag.push(format!("cancelling cluster near ({:.4}, {:.4}) dropped", pos.x, pos.y));
            continue;
        }
        out.push(Singularity { position: pos, index, origin: SingularityOrigin::Field });
    }
    (out, diag)
}

/// Adds an index +1 singularity at every face corner sharper than 45 degrees.
pub fn augment_acute_corners(model: &PlanarModel, face: usize, list: &mut Vec<Singularity>) {
    for c in model.face_corners(face) {
        if c.angle < FRAC_PI_4 {
            list.push(Singularity {
                position: model.corners[c.corner],
                index: 1,
                origin: SingularityOrigin::AcuteCorner,
            });
        }
    }
}

/// Difference of two cross angles measured against the tangents of edges
/// `(j, k)` and `(i, j)`, where `alpha_j` is the angle between the two
/// tangents. Both angles are brought into `[0, pi/2]` first; the result
/// lies in `[-pi/4, pi/4]`.
pub fn angle_diff(theta_jk: f64, theta_ij: f64, alpha_j: f64) -> f64 {
    let a = (theta_ij).rem_euclid(FRAC_PI_2);
    let b = (theta_jk - alpha_j).rem_euclid(FRAC_PI_2);
    let d = b - a;
    if d.abs() <= FRAC_PI_4 {
        d
    } else if d < -FRAC_PI_4 {
        d + FRAC_PI_2
    } else {
        d - FRAC_PI_2
    }
}

#[derive(Debug, Clone)]
pub struct ConformalScaling {
    /// Per-vertex `H`, zero area-weighted mean.
    pub h: Vec<f64>,
    pub c: f64,
}

impl ConformalScaling {
    /// `h(x) = exp(H(x) + C)` at vertex `v`.
    pub fn size_at_vertex(&self, v: usize) -> f64 {
        (self.h[v] + self.c).exp()
    }
}

/// Per-triangle gradient of the cross angle, from the linear function
/// taking values `0, d_jk, d_ki` at the midpoints of edges `ij, jk, ki`.
pub fn theta_gradients(mesh: &TriMesh, field: &CrossField) -> Vec<nalgebra::Vector2<f64>> {
    (0..mesh.tris.len())
        .map(|t| {
            let te = mesh.tri_edges[t];
            // tri_edges[k] is opposite vertex k: ij = te[2], jk = te[0], ki = te[1]
            let (eij, ejk, eki) = (te[2], te[0], te[1]);
            let tij = field.theta(mesh, eij);
            let alpha = |e: usize| mesh.edge_angle(eij) - mesh.edge_angle(e);
            let djk = angle_diff(field.theta(mesh, ejk), tij, alpha(ejk));
            let dki = angle_diff(field.theta(mesh, eki), tij, alpha(eki));
            let m0 = mesh.edge_midpoint(eij);
            let a = mesh.edge_midpoint(ejk) - m0;
            let b = mesh.edge_midpoint(eki) - m0;
            let det = geom::cross(&a, &b);
            // solve [a^T; b^T] g = (djk, dki)
            nalgebra::Vector2::new((djk * b.y - dki * a.y) / det, (a.x * dki - b.x * djk) / det)
        })
        .collect()
}

/// Least-squares `H` with `grad H = (theta_y, -theta_x)` in P1, and the
/// constant `C` making `int h^-2 = target`.
pub fn conformal_scaling(mesh: &TriMesh, field: &CrossField, target: f64) -> Result<ConformalScaling> {
    let n = mesh.n_vertices();
    let grads = theta_gradients(mesh, field);
    let mut trip = Vec::new();
    let mut rhs = vec![0.0; n];
    let mut varea = vec![0.0; n];
    for (t, tri) in mesh.tris.iter().enumerate() {
        let [a, b, c] = mesh.tri_points(t);
        let area = 0.5 * geom::orient(&a, &b, &c);
        let ev = [c - b, a - c, b - a];
        let g = grads[t];
        let target_grad = nalgebra::Vector2::new(g.y, -g.x);
        for i in 0..3 {
            varea[tri[i]] += area / 3.0;
            // grad lambda_i = rot90(e_i) / (2A)
            let gl = nalgebra::Vector2::new(-ev[i].y, ev[i].x) / (2.0 * area);
            rhs[tri[i]] += area * gl.dot(&target_grad);
            for j in 0..3 {
                trip.push((tri[i], tri[j], ev[i].dot(&ev[j]) / (4.0 * area)));
            }
        }
    }
    let k = Csr::from_triplets(n, trip);
    // pin vertex 0
    let index: Vec<Option<usize>> = (0..n).map(|v| (v > 0).then(|| v - 1)).collect();
    let kr = k.restrict(&index, n - 1);
    let br: Vec<f64> = rhs[1..].to_vec();
    let mut x = vec![0.0; n - 1];
    let pre = AutoPrecond::new(&kr);
    linalg::pcg(&kr, &br, &mut x, &pre, 1e-10, 4 * n + 100)?;
    let mut h = vec![0.0];
    h.extend(x);
    let total: f64 = varea.iter().sum();
    let mean: f64 = h.iter().zip(&varea).map(|(a, w)| a * w).sum::<f64>() / total;
    h.iter_mut().for_each(|v| *v -= mean);
    let integral = integrate_inv_sq(mesh, &h, 0.0);
    if !(integral.is_finite() && integral > 0.0) {
        return Err(Error::Numeric("conformal scaling integral is not positive".into()));
    }
    let c = -0.5 * (target / integral).ln();
    Ok(ConformalScaling { h, c })
}

/// `int exp(-2 (H + c))` with the vertex-average rule per triangle.
pub fn integrate_inv_sq(mesh: &TriMesh, h: &[f64], c: f64) -> f64 {
    (0..mesh.tris.len())
        .map(|t| {
            let avg: f64 = mesh.tris[t].iter().map(|&v| (-2.0 * (h[v] + c)).exp()).sum::<f64>() / 3.0;
            avg * mesh.tri_area(t)
        })
        .sum()
}

/// Edge opposite neighbours of an edge, for quick adjacency walks.
pub fn edge_neighbors(mesh: &TriMesh, e: usize) -> impl Iterator<Item = usize> + '_ {
    mesh.edge_tris[e]
        .into_iter()
        .filter(|&t| t != NONE)
        .flat_map(move |t| mesh.tri_edges[t].into_iter().filter(move |&o| o != e))
}

/// Sum of the field singularity indices and the sum the Euler identity
/// requires for the face.
pub fn index_balance(model: &PlanarModel, face: usize, list: &[Singularity]) -> (i64, i64) {
    let corners: i64 = model
        .face_corners(face)
        .iter()
        .map(|c| 2 - c.ideal_valence() as i64)
        .sum();
    let expected = 4 * model.faces[face].euler_characteristic() - corners;
    let found: i64 = list
        .iter()
        .filter(|s| s.origin == SingularityOrigin::Field)
        .map(|s| s.index as i64)
        .sum();
    (found, expected)
}

/// Logs the singularity balance against the Euler identity.
pub fn check_index_balance(model: &PlanarModel, face: usize, list: &[Singularity]) -> bool {
    let (found, expected) = index_balance(model, face, list);
    if found != expected {
        warn!("face {face}: singularity indices sum to {found}, topology expects {expected}");
    }
    found == expected
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::pt;
    use crate::mesh::VertexKind;
    use crate::model::shapes;
    use crate::triangulate::{sample_curves, triangulate_face};

    fn mesh_of(model: &PlanarModel, h: f64) -> TriMesh {
        let chains = sample_curves(model, h).unwrap();
        triangulate_face(model, 0, &chains, &|_| h).unwrap()
    }

    #[test]
    fn mass_of_shared_hypotenuse() {
        let p = vec![pt(0., 0.), pt(1., 0.), pt(1., 1.), pt(0., 1.)];
        let m = TriMesh::new(p, vec![VertexKind::Interior; 4], vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let (k, mass) = assemble_cr_matrices(&m).unwrap();
        let diag = m.edges.iter().position(|e| *e == [0, 2]).unwrap();
        assert!((mass[diag] - 1.0 / 3.0).abs() < 1e-15);
        for i in 0..k.n {
            let s: f64 = k.row(i).map(|(_, v)| v).sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn stiffness_positive_on_nonconstant() {
        // three-triangle fan
        let p = vec![pt(0., 0.), pt(1., 0.), pt(0.3, 1.), pt(-1., 0.2)];
        let m = TriMesh::new(p, vec![VertexKind::Interior; 4], vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let (k, _) = assemble_cr_matrices(&m).unwrap();
        let x: Vec<f64> = (0..k.n).map(|i| (i as f64 * 0.7).sin()).collect();
        assert!(k.quad_form(&x) > 0.0);
        assert!(k.quad_form(&vec![1.0; k.n]).abs() < 1e-12);
    }

    #[test]
    fn angle_diff_cases() {
        use std::f64::consts::PI;
        assert!(angle_diff(0.3, 0.3, 0.0).abs() < 1e-15);
        assert!(angle_diff(0.3 + FRAC_PI_2, 0.3, 0.0).abs() < 1e-12);
        let d = angle_diff(0.35 * PI, 0.05 * PI, 0.0);
        assert!((d + 0.2 * PI).abs() < 1e-12);
        assert!(angle_diff(0.2, 0.1, 0.1).abs() < 1e-12);
    }

    #[test]
    fn square_field_is_axis_aligned() {
        let m = mesh_of(&shapes::unit_square(), 0.1);
        let (f, _) = mbo_solve(&m, &MboParams::default()).unwrap();
        for e in 0..m.edges.len() {
            assert!(geom::wrap_angle(f.phi[e], FRAC_PI_2).abs() < 1e-6);
        }
        let (s, _) = detect_singularities(&m, &f);
        assert!(s.is_empty());
    }

    #[test]
    fn constant_theta_gives_flat_scaling() {
        let m = mesh_of(&shapes::unit_square(), 0.1);
        let f = CrossField::from_u(vec![[1.0, 0.0]; m.edges.len()]);
        let s = conformal_scaling(&m, &f, 100.0).unwrap();
        for v in 0..m.n_vertices() {
            assert!(s.h[v].abs() < 1e-9);
            assert!((s.size_at_vertex(v) - 0.1).abs() < 1e-9);
        }
    }

    #[test]
    fn polar_field_scaling_is_radius() {
        // crosses aligned with circles on an annulus sector: h ~ r
        let model = shapes::polygon(&[pt(1., 0.), pt(2., 0.), pt(2., 2.), pt(0., 2.), pt(0., 1.)]);
        let m = mesh_of(&model, 0.08);
        let phi: Vec<f64> = (0..m.edges.len())
            .map(|e| {
                let c = m.edge_midpoint(e);
                c.y.atan2(c.x)
            })
            .collect();
        let u = phi.iter().map(|p| [(4.0 * p).cos(), (4.0 * p).sin()]).collect();
        let f = CrossField::from_u(u);
        let s = conformal_scaling(&m, &f, 10.0).unwrap();
        let offs: Vec<f64> = (0..m.n_vertices()).map(|v| s.h[v] - m.points[v].coords.norm().ln()).collect();
        let mean = offs.iter().sum::<f64>() / offs.len() as f64;
        for o in offs {
            assert!((o - mean).abs() < 0.05, "deviation {}", o - mean);
        }
    }

    #[test]
    fn acute_corner_augmentation() {
        let wedge = shapes::polygon(&[pt(0., 0.), pt(1., 0.), pt(0.866, 0.5)]);
        let mut l = Vec::new();
        augment_acute_corners(&wedge, 0, &mut l);
        assert_eq!(l.len(), 1);
        assert_eq!(l[0].position, pt(0., 0.));
        let mut l2 = Vec::new();
        augment_acute_corners(&shapes::unit_square(), 0, &mut l2);
        assert!(l2.is_empty());
    }

    #[test]
    fn extension_averages_third_edge() {
        let p = vec![pt(0., 0.), pt(1., 0.), pt(1., 1.), pt(0., 1.)];
        let m = TriMesh::new(p, vec![VertexKind::Interior; 4], vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let fixed = extend_boundary_conditions(&m, &boundary_conditions(&m)).unwrap();
        let diag = m.edges.iter().position(|e| *e == [0, 2]).unwrap();
        let u = fixed[diag].unwrap();
        assert!((u[0] - 1.0).abs() < 1e-12 && u[1].abs() < 1e-12);
    }

    #[test]
    fn disk_has_four_positive_singularities() {
        let m = mesh_of(&shapes::disk(1.0, 256), 0.07);
        let (f, _) = mbo_solve(&m, &MboParams::default()).unwrap();
        let (s, _) = detect_singularities(&m, &f);
        assert_eq!(s.len(), 4);
        for x in &s {
            assert_eq!(x.index, 1);
            let r = x.position.coords.norm();
            assert!((0.6..=0.95).contains(&r), "radius {r}");
        }
    }
}
