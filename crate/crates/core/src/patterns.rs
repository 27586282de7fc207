//! Coarse quad patterns, the integer side-matching problem, pattern
//! subdivision, and direct meshing of faces with simple topology.

use std::collections::HashMap;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::geom::{pt, Point};
use crate::mesh::{index_census, QuadMesh, VertexKind};
use crate::model::PlanarModel;
use crate::smoothing::{laplacian_solve, smooth_loop, SmoothParams};
use crate::triangulate::face_boundary;

/// Search nodes spent per alignment before giving up.
pub const SEARCH_BUDGET: usize = 500;

const BUILTIN: &str = include_str!("../data/patterns.json");

#[derive(Debug, Clone, Deserialize)]
pub struct PatternSpec {
    pub name: String,
    pub points: Vec<[f64; 2]>,
    pub quads: Vec<[usize; 4]>,
}

/// A coarse quad mesh of a disk whose convex boundary vertices (valence 1)
/// split the boundary into sides. Chords are the classes of opposite quad
/// edges; `weights[i][j]` counts the edges of chord `j` on side `i`.
#[derive(Debug, Clone)]
pub struct Pattern {
    pub name: String,
    pub points: Vec<Point>,
    pub quads: Vec<[usize; 4]>,
    /// Counterclockwise boundary loop starting at the first corner.
    pub boundary: Vec<usize>,
    /// Positions in `boundary` where each side starts.
    pub side_starts: Vec<usize>,
    pub edge_chord: HashMap<[usize; 2], usize>,
    pub n_chords: usize,
    pub weights: Vec<Vec<i64>>,
}

fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn find(parent: &mut [usize], mut a: usize) -> usize {
    while parent[a] != a {
        parent[a] = parent[parent[a]];
        a = parent[a];
    }
    a
}

impl Pattern {
    pub fn from_spec(spec: &PatternSpec) -> Result<Self> {
        let points: Vec<Point> = spec.points.iter().map(|p| pt(p[0], p[1])).collect();
        Self::new(&spec.name, points, spec.quads.clone())
    }

    pub fn new(name: &str, points: Vec<Point>, quads: Vec<[usize; 4]>) -> Result<Self> {
        let bad = |msg: &str| Error::input(format!("pattern {name}: {msg}"));
        if quads.iter().flatten().any(|&v| v >= points.len()) {
            return Err(bad("vertex index out of range"));
        }
        // edges and chords
        let mut edge_id: HashMap<[usize; 2], usize> = HashMap::new();
        for q in &quads {
            for k in 0..4 {
                let n = edge_id.len();
                edge_id.entry(sorted(q[k], q[(k + 1) % 4])).or_insert(n);
            }
        }
        let mut parent: Vec<usize> = (0..edge_id.len()).collect();
        for q in &quads {
            for k in 0..2 {
                let a = edge_id[&sorted(q[k], q[k + 1])];
                let b = edge_id[&sorted(q[k + 2], q[(k + 3) % 4])];
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
        let mut chord_of_root = HashMap::new();
        let mut edges: Vec<([usize; 2], usize)> = edge_id.iter().map(|(&e, &i)| (e, i)).collect();
        edges.sort();
        let mut edge_chord = HashMap::new();
        for (e, i) in edges {
            let r = find(&mut parent, i);
            let n = chord_of_root.len();
            let c = *chord_of_root.entry(r).or_insert(n);
            edge_chord.insert(e, c);
        }
        let n_chords = chord_of_root.len();
        // boundary loop
        let mut count: HashMap<[usize; 2], usize> = HashMap::new();
        for q in &quads {
            for k in 0..4 {
                *count.entry(sorted(q[k], q[(k + 1) % 4])).or_default() += 1;
            }
        }
        if count.values().any(|&c| c > 2) {
            return Err(bad("non-manifold edge"));
        }
        let mut next: HashMap<usize, usize> = HashMap::new();
        for q in &quads {
            for k in 0..4 {
                let (a, b) = (q[k], q[(k + 1) % 4]);
                if count[&sorted(a, b)] == 1 && next.insert(a, b).is_some() {
                    return Err(bad("pinched boundary"));
                }
            }
        }
        let mut valence = vec![0usize; points.len()];
        for q in &quads {
            for &v in q {
                valence[v] += 1;
            }
        }
        let first = next
            .keys()
            .copied()
            .filter(|&v| valence[v] == 1)
            .min()
            .ok_or_else(|| bad("no convex corner"))?;
        let mut boundary = vec![first];
        let mut v = next[&first];
        while v != first {
            boundary.push(v);
            v = *next.get(&v).ok_or_else(|| bad("open boundary"))?;
            if boundary.len() > next.len() {
                return Err(bad("boundary is not a single loop"));
            }
        }
        if boundary.len() != next.len() {
            return Err(bad("boundary is not a single loop"));
        }
        let side_starts: Vec<usize> = (0..boundary.len()).filter(|&i| valence[boundary[i]] == 1).collect();
        if boundary.iter().any(|&v| valence[v] > 2) {
            return Err(bad("boundary vertex with more than two quads"));
        }
        let m = side_starts.len();
        let nb = boundary.len();
        let mut weights = vec![vec![0i64; n_chords]; m];
        for i in 0..m {
            let (s, e) = (side_starts[i], side_starts[(i + 1) % m]);
            let len = (e + nb - s - 1) % nb + 1;
            for k in 0..len {
                let a = boundary[(s + k) % nb];
                let b = boundary[(s + k + 1) % nb];
                weights[i][edge_chord[&sorted(a, b)]] += 1;
            }
        }
        let p = Pattern { name: name.to_string(), points, quads, boundary, side_starts, edge_chord, n_chords, weights };
        p.self_check()?;
        Ok(p)
    }

    pub fn n_sides(&self) -> usize {
        self.side_starts.len()
    }

    /// The coarse mesh with corners, side vertices and interior vertices
    /// classified.
    pub fn coarse_mesh(&self) -> QuadMesh {
        let mut kinds = vec![VertexKind::Interior; self.points.len()];
        for (i, &v) in self.boundary.iter().enumerate() {
            kinds[v] = if self.side_starts.contains(&i) {
                VertexKind::Corner { corner: v, ideal: 1 }
            } else {
                VertexKind::Curve { curve: 0 }
            };
        }
        QuadMesh::new(self.points.clone(), kinds, self.quads.clone())
    }

    fn self_check(&self) -> Result<()> {
        let m = self.coarse_mesh();
        m.validate()?;
        index_census(&m, 1)?.check()?;
        if self.weights.iter().any(|row| row.iter().sum::<i64>() < 1) {
            return Err(Error::input(format!("pattern {}: empty side", self.name)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Catalogue {
    pub patterns: Vec<Pattern>,
}

impl Catalogue {
    /// The built-in patterns: grid, three rectangular transition patterns,
    /// triangle, pentagon and the two-sided lens.
    pub fn builtin() -> Self {
        Self::from_json_str(BUILTIN).expect("built-in patterns are valid")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let specs: Vec<PatternSpec> = serde_json::from_str(s)?;
        let patterns = specs.iter().map(Pattern::from_spec).collect::<Result<_>>()?;
        Ok(Catalogue { patterns })
    }

    pub fn extend_from_file(&mut self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let extra = Self::from_json_str(&std::fs::read_to_string(path)?)?;
        self.patterns.extend(extra.patterns);
        Ok(())
    }

    pub fn by_name(&self, name: &str) -> Option<&Pattern> {
        self.patterns.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub s: Vec<i64>,
    pub cost: f64,
}

/// Balanced chord subdivisions: each side spreads its edges evenly over
/// its chord slots and each chord averages the values of its sides.
pub fn ideal_subdivisions(weights: &[Vec<i64>], sides: &[i64]) -> Vec<f64> {
    let c = weights.first().map_or(0, |r| r.len());
    let mut sum = vec![0.0; c];
    let mut cnt = vec![0.0; c];
    for (row, &n) in weights.iter().zip(sides) {
        let slots: i64 = row.iter().sum();
        let v = n as f64 / slots as f64;
        for j in 0..c {
            sum[j] += row[j] as f64 * v;
            cnt[j] += row[j] as f64;
        }
    }
    (0..c).map(|j| if cnt[j] > 0.0 { sum[j] / cnt[j] } else { 1.0 }).collect()
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Fraction-free reduced row echelon form of `[w | n]`. Returns the pivot
/// rows as (pivot column, row) or `None` when inconsistent.
fn echelon(weights: &[Vec<i64>], sides: &[i64]) -> Option<Vec<(usize, Vec<i128>)>> {
    let c = weights.first().map_or(0, |r| r.len());
    let mut rows: Vec<Vec<i128>> = weights
        .iter()
        .zip(sides)
        .map(|(r, &n)| r.iter().map(|&x| x as i128).chain(std::iter::once(n as i128)).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..c {
        let Some(p) = (rank..rows.len()).find(|&r| rows[r][col] != 0) else { continue };
        rows.swap(rank, p);
        for k in 0..rows.len() {
            if k == rank || rows[k][col] == 0 {
                continue;
            }
            let (a, b) = (rows[rank][col], rows[k][col]);
            for j in 0..=c {
                rows[k][j] = rows[k][j] * a - rows[rank][j] * b;
            }
            let g = rows[k].iter().fold(0, |g, &x| gcd(g, x));
            if g > 1 {
                rows[k].iter_mut().for_each(|x| *x /= g);
            }
        }
        pivots.push((col, rank));
        rank += 1;
    }
    if rows[rank..].iter().any(|r| r[c] != 0) {
        return None;
    }
    Some(pivots.into_iter().map(|(col, r)| (col, rows[r].clone())).collect())
}

/// Integer vectors of dimension `k` with L1 norm exactly `d`.
fn shell(k: usize, d: i64, out: &mut Vec<Vec<i64>>) {
    fn rec(k: usize, d: i64, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if cur.len() + 1 == k {
            for v in if d == 0 { vec![0] } else { vec![d, -d] } {
                cur.push(v);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        for a in 0..=d {
            for v in if a == 0 { vec![0] } else { vec![a, -a] } {
                cur.push(v);
                rec(k, d - a, cur, out);
                cur.pop();
            }
        }
    }
    if k == 0 {
        if d == 0 {
            out.push(Vec::new());
        }
        return;
    }
    rec(k, d, &mut Vec::new(), out);
}

/// Strictly positive integer solution of `sum_j w_ij s_j = N_i` closest to
/// the balanced subdivisions, by search over the free variables of the
/// echelon form in order of increasing distance from the balanced guess.
pub fn solve_sides(weights: &[Vec<i64>], sides: &[i64], budget: usize) -> Option<Solution> {
    if sides.iter().any(|&n| n < 1) {
        return None;
    }
    let c = weights.first().map_or(0, |r| r.len());
    let rows = echelon(weights, sides)?;
    let pivot_cols: Vec<usize> = rows.iter().map(|r| r.0).collect();
    let free: Vec<usize> = (0..c).filter(|j| !pivot_cols.contains(j)).collect();
    let ideal = ideal_subdivisions(weights, sides);
    let max_n = *sides.iter().max().unwrap();
    let base: Vec<i64> = free.iter().map(|&f| (ideal[f].round() as i64).clamp(1, max_n)).collect();
    let mut best: Option<Solution> = None;
    let mut spent = 0;
    let mut found_at = None;
    let max_d = free.len() as i64 * max_n;
    let mut d = 0;
    while d <= max_d && spent < budget {
        if let Some(f) = found_at {
            if d > f + 1 {
                break;
            }
        }
        let mut cands = Vec::new();
        shell(free.len(), d, &mut cands);
        for dev in cands {
            let vals: Vec<i64> = base.iter().zip(&dev).map(|(b, x)| b + x).collect();
            if vals.iter().any(|&v| v < 1 || v > max_n) {
                continue;
            }
            spent += 1;
            let mut s = vec![0i64; c];
            for (k, &f) in free.iter().enumerate() {
                s[f] = vals[k];
            }
            let mut ok = true;
            for (col, row) in &rows {
                let mut rhs = row[c];
                for &f in &free {
                    rhs -= row[f] * s[f] as i128;
                }
                let p = row[*col];
                if rhs % p != 0 || rhs / p < 1 {
                    ok = false;
                    break;
                }
                s[*col] = (rhs / p) as i64;
            }
            if ok && satisfies(weights, sides, &s) {
                let cost = s.iter().zip(&ideal).map(|(&v, &x)| (v as f64 - x).powi(2)).sum();
                if best.as_ref().map_or(true, |b| cost < b.cost) {
                    best = Some(Solution { s, cost });
                    found_at.get_or_insert(d);
                }
            }
            if spent >= budget {
                break;
            }
        }
        d += 1;
    }
    best
}

/// Exact check of the side equations in integer arithmetic.
pub fn satisfies(weights: &[Vec<i64>], sides: &[i64], s: &[i64]) -> bool {
    s.iter().all(|&v| v >= 1)
        && weights.iter().zip(sides).all(|(row, &n)| row.iter().zip(s).map(|(w, v)| w * v).sum::<i64>() == n)
}

/// How pattern sides are laid onto cavity sides: pattern side `i` goes to
/// cavity side `rotation + i` (or `rotation - i` traversed backwards when
/// reflected).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alignment {
    pub rotation: usize,
    pub reflected: bool,
}

impl Alignment {
    pub fn all(m: usize) -> impl Iterator<Item = Alignment> {
        (0..m).flat_map(|rotation| [false, true].map(|reflected| Alignment { rotation, reflected }))
    }

    /// Cavity side matched with pattern side `i`.
    pub fn cavity_side(&self, i: usize, m: usize) -> usize {
        if self.reflected {
            (self.rotation + m - i % m) % m
        } else {
            (self.rotation + i) % m
        }
    }
}

#[derive(Debug, Clone)]
pub struct Match {
    pub alignment: Alignment,
    pub solution: Solution,
}

/// Best solution over all `2m` alignments of the cavity sides.
pub fn match_pattern(pattern: &Pattern, sides: &[usize]) -> Option<Match> {
    let m = pattern.n_sides();
    if sides.len() != m {
        return None;
    }
    let mut best: Option<Match> = None;
    for a in Alignment::all(m) {
        let n: Vec<i64> = (0..m).map(|i| sides[a.cavity_side(i, m)] as i64).collect();
        if let Some(sol) = solve_sides(&pattern.weights, &n, SEARCH_BUDGET) {
            if best.as_ref().map_or(true, |b| sol.cost < b.solution.cost) {
                best = Some(Match { alignment: a, solution: sol });
            }
        }
    }
    best
}

/// Exhaustive reference search over `1..=max` per chord.
pub fn brute_force(weights: &[Vec<i64>], sides: &[i64], max: i64) -> Option<Vec<i64>> {
    let c = weights.first().map_or(0, |r| r.len());
    // last chord index touching each side, to close sides early
    let last: Vec<usize> = weights.iter().map(|r| (0..c).rev().find(|&j| r[j] != 0).unwrap_or(0)).collect();
    fn rec(j: usize, s: &mut Vec<i64>, w: &[Vec<i64>], n: &[i64], last: &[usize], max: i64) -> bool {
        let c = s.len();
        if j == c {
            return true;
        }
        for v in 1..=max {
            s[j] = v;
            let mut ok = true;
            for i in 0..w.len() {
                let partial: i64 = (0..=j).map(|k| w[i][k] * s[k]).sum();
                if partial > n[i] || (last[i] == j && partial != n[i]) {
                    ok = false;
                    break;
                }
            }
            if ok && rec(j + 1, s, w, n, last, max) {
                return true;
            }
        }
        false
    }
    let mut s = vec![0i64; c];
    rec(0, &mut s, weights, sides, &last, max).then_some(s)
}

/// Subdivided pattern in pattern coordinates.
#[derive(Debug, Clone)]
pub struct Patch {
    pub points: Vec<Point>,
    pub quads: Vec<[usize; 4]>,
    /// Counterclockwise boundary starting at the first pattern corner.
    pub boundary: Vec<usize>,
}

/// Subdivides every coarse quad by the counts of its two chords.
pub fn instantiate(pattern: &Pattern, s: &[i64]) -> Patch {
    let mut points = pattern.points.clone();
    // interior vertices of each coarse edge, from the smaller endpoint
    let mut edge_verts: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
    let mut edge_points = |a: usize, b: usize, n: usize, points: &mut Vec<Point>| -> Vec<usize> {
        let key = sorted(a, b);
        let ids = edge_verts.entry(key).or_insert_with(|| {
            let (p, q) = (points[key[0]], points[key[1]]);
            (1..n)
                .map(|k| {
                    points.push(p + (q - p) * (k as f64 / n as f64));
                    points.len() - 1
                })
                .collect()
        });
        let mut out = vec![a];
        if a == key[0] {
            out.extend(ids.iter().copied());
        } else {
            out.extend(ids.iter().rev().copied());
        }
        out.push(b);
        out
    };
    let mut quads = Vec::new();
    for q in &pattern.quads {
        let su = s[pattern.edge_chord[&sorted(q[0], q[1])]] as usize;
        let sv = s[pattern.edge_chord[&sorted(q[1], q[2])]] as usize;
        let bottom = edge_points(q[0], q[1], su, &mut points);
        let right = edge_points(q[1], q[2], sv, &mut points);
        let top = edge_points(q[3], q[2], su, &mut points);
        let left = edge_points(q[0], q[3], sv, &mut points);
        let c = q.map(|v| points[v]);
        let mut grid = vec![vec![0usize; sv + 1]; su + 1];
        for i in 0..=su {
            for j in 0..=sv {
                grid[i][j] = if j == 0 {
                    bottom[i]
                } else if j == sv {
                    top[i]
                } else if i == 0 {
                    left[j]
                } else if i == su {
                    right[j]
                } else {
                    let (u, v) = (i as f64 / su as f64, j as f64 / sv as f64);
                    let p = c[0].coords * ((1.0 - u) * (1.0 - v))
                        + c[1].coords * (u * (1.0 - v))
                        + c[2].coords * (u * v)
                        + c[3].coords * ((1.0 - u) * v);
                    points.push(Point::from(p));
                    points.len() - 1
                };
            }
        }
        for i in 0..su {
            for j in 0..sv {
                quads.push([grid[i][j], grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]]);
            }
        }
    }
    let nb = pattern.boundary.len();
    let mut boundary = Vec::new();
    for k in 0..nb {
        let (a, b) = (pattern.boundary[k], pattern.boundary[(k + 1) % nb]);
        let n = s[pattern.edge_chord[&sorted(a, b)]] as usize;
        let e = edge_points(a, b, n, &mut points);
        boundary.extend_from_slice(&e[..e.len() - 1]);
    }
    Patch { points, quads, boundary }
}

/// Side lengths of a boundary chain split at `side_starts` (positions in a
/// closed chain of `len` vertices).
pub fn side_lengths(side_starts: &[usize], len: usize) -> Vec<usize> {
    let m = side_starts.len();
    (0..m)
        .map(|i| {
            let (s, e) = (side_starts[i], side_starts[(i + 1) % m]);
            (e + len - s - 1) % len + 1
        })
        .collect()
}

/// Topology of a pattern fill of a cavity: patch vertices that are not on
/// the boundary become new vertices (`n_existing + k`); boundary patch
/// vertices map onto `chain`. Quads are counterclockwise in the cavity.
pub fn fill_topology(
    patch: &Patch,
    chain: &[usize],
    side_starts: &[usize],
    alignment: Alignment,
    n_existing: usize,
) -> (usize, Vec<[usize; 4]>) {
    let l = chain.len();
    let m = side_starts.len();
    debug_assert_eq!(patch.boundary.len(), l);
    let start = if alignment.reflected {
        side_starts[(alignment.rotation + 1) % m]
    } else {
        side_starts[alignment.rotation]
    };
    let mut map = vec![usize::MAX; patch.points.len()];
    for (j, &v) in patch.boundary.iter().enumerate() {
        map[v] = if alignment.reflected { chain[(start + l - j % l) % l] } else { chain[(start + j) % l] };
    }
    let mut next = n_existing;
    for slot in map.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }
    let quads = patch
        .quads
        .iter()
        .map(|q| {
            let mut r = q.map(|v| map[v]);
            if alignment.reflected {
                r.reverse();
            }
            r
        })
        .collect();
    (next - n_existing, quads)
}

/// Minimum SICN a pattern premesh must reach to be kept.
pub const PREMESH_MIN_SICN: f64 = 0.3;
/// Mean SICN a pattern premesh must reach to be kept.
pub const PREMESH_MEAN_SICN: f64 = 0.7;

/// Quad mesh of a single-loop face whose corners all want one or two quads,
/// built from the best matching pattern. `chains` holds the fine points of
/// every model curve. `None` when no pattern fits or the result is poor.
pub fn premesh_simple_face(
    model: &PlanarModel,
    face: usize,
    chains: &[Vec<Point>],
    catalogue: &Catalogue,
) -> Option<QuadMesh> {
    if model.faces[face].loops.len() != 1 {
        return None;
    }
    let lp = face_boundary(model, face, chains).remove(0);
    if lp.iter().any(|(_, k)| k.is_corner() && k.ideal_valence() > 2) {
        return None;
    }
    let starts: Vec<usize> = (0..lp.len()).filter(|&i| lp[i].1.ideal_valence() == 1).collect();
    if starts.len() < 2 {
        return None;
    }
    let sides = side_lengths(&starts, lp.len());
    let mut candidates: Vec<(f64, usize, Match)> = catalogue
        .patterns
        .iter()
        .enumerate()
        .filter(|(_, p)| p.n_sides() == starts.len())
        .filter_map(|(i, p)| match_pattern(p, &sides).map(|m| (m.solution.cost, i, m)))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let chain: Vec<usize> = (0..lp.len()).collect();
    for (_, i, m) in candidates {
        let pattern = &catalogue.patterns[i];
        let patch = instantiate(pattern, &m.solution.s);
        let (n_new, quads) = fill_topology(&patch, &chain, &starts, m.alignment, lp.len());
        let center = crate::geom::centroid(&lp.iter().map(|(p, _)| *p).collect::<Vec<_>>());
        let mut points: Vec<Point> = lp.iter().map(|(p, _)| *p).collect();
        let mut kinds: Vec<VertexKind> = lp.iter().map(|(_, k)| *k).collect();
        points.extend(std::iter::repeat(center).take(n_new));
        kinds.extend(std::iter::repeat(VertexKind::Interior).take(n_new));
        let mut mesh = QuadMesh::new(points, kinds, quads);
        let free: Vec<usize> = (lp.len()..lp.len() + n_new).collect();
        if laplacian_solve(&mut mesh, &free).is_err() {
            continue;
        }
        let all: Vec<usize> = mesh.quad_ids().collect();
        smooth_loop(&mut mesh, &all, &SmoothParams::default());
        let (min, mean) = mesh.sicn_stats();
        if mesh.validate().is_ok() && min >= PREMESH_MIN_SICN && mean >= PREMESH_MEAN_SICN {
            log::debug!("face {face}: premeshed with pattern {} ({} quads)", pattern.name, mesh.n_quads());
            return Some(mesh);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> Catalogue {
        Catalogue::builtin()
    }

    #[test]
    fn catalogue_shapes() {
        let c = cat();
        let sides: Vec<(String, usize, usize)> =
            c.patterns.iter().map(|p| (p.name.clone(), p.n_sides(), p.n_chords)).collect();
        assert_eq!(sides[0], ("grid".into(), 4, 2));
        assert_eq!(c.by_name("dipole-corner").unwrap().n_chords, 5);
        assert_eq!(c.by_name("triangle").unwrap().n_sides(), 3);
        assert_eq!(c.by_name("triangle").unwrap().n_chords, 3);
        assert_eq!(c.by_name("pentagon").unwrap().n_sides(), 5);
        assert_eq!(c.by_name("pentagon").unwrap().n_chords, 5);
        assert_eq!(c.by_name("lens").unwrap().n_sides(), 2);
        for p in &c.patterns {
            assert!(p.weights.iter().flatten().all(|&w| (0..=2).contains(&w)));
        }
    }

    #[test]
    fn dipole_corner_system_is_the_printed_one() {
        let p = cat().by_name("dipole-corner").unwrap().clone();
        // the unique chord shared by the 3-edge sides is the turning one
        let rows = &p.weights;
        let three: Vec<usize> = (0..4).filter(|&i| rows[i].iter().sum::<i64>() == 3).collect();
        assert_eq!(three.len(), 2);
        let shared: Vec<usize> = (0..5).filter(|&j| rows[three[0]][j] == 1 && rows[three[1]][j] == 1).collect();
        assert_eq!(shared.len(), 1);
        assert!(match_pattern(&p, &[9, 4, 11, 4]).is_none());
        let m = match_pattern(&p, &[7, 3, 5, 5]).unwrap();
        let b = m.solution.s[shared[0]];
        assert_eq!(b, 2);
    }

    #[test]
    fn grid_match() {
        let p = cat().patterns[0].clone();
        let m = match_pattern(&p, &[5, 3, 5, 3]).unwrap();
        let mut s = m.solution.s.clone();
        s.sort();
        assert_eq!(s, vec![3, 5]);
        assert!(match_pattern(&p, &[5, 3, 6, 3]).is_none());
    }

    #[test]
    fn instantiation_counts_and_census() {
        let c = cat();
        let grid = &c.patterns[0];
        let patch = instantiate(grid, &[2, 2]);
        assert_eq!(patch.quads.len(), 4);
        assert_eq!(patch.boundary.len(), 8);
        for p in &c.patterns {
            for s in [1i64, 2, 3] {
                let sv = vec![s; p.n_chords];
                let patch = instantiate(p, &sv);
                let mut kinds = vec![VertexKind::Interior; patch.points.len()];
                let corners: Vec<usize> = p.side_starts.iter().map(|&i| p.boundary[i]).collect();
                for &v in &patch.boundary {
                    kinds[v] = if corners.contains(&v) {
                        VertexKind::Corner { corner: v, ideal: 1 }
                    } else {
                        VertexKind::Curve { curve: 0 }
                    };
                }
                let m = QuadMesh::new(patch.points.clone(), kinds, patch.quads.clone());
                m.validate().unwrap();
                index_census(&m, 1).unwrap().check().unwrap();
                assert!(m.min_sicn() > 0.0, "{} {s}", p.name);
            }
        }
        let tri = instantiate(c.by_name("triangle").unwrap(), &[1, 1, 1]);
        assert_eq!(tri.quads.len(), 3);
        let pent = c.by_name("pentagon").unwrap().coarse_mesh();
        let census = index_census(&pent, 1).unwrap();
        assert_eq!(census.interior_index_sum(), -1);
    }

    #[test]
    fn echelon_solver_agrees_with_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for p in &cat().patterns {
            for k in 0..30 {
                let n: Vec<i64> = if k % 2 == 0 {
                    let s: Vec<i64> = (0..p.n_chords).map(|_| rng.gen_range(1..=6)).collect();
                    p.weights.iter().map(|r| r.iter().zip(&s).map(|(w, v)| w * v).sum()).collect()
                } else {
                    (0..p.n_sides()).map(|_| rng.gen_range(1..=12)).collect()
                };
                let fast = solve_sides(&p.weights, &n, SEARCH_BUDGET);
                let slow = brute_force(&p.weights, &n, 20);
                assert_eq!(fast.is_some(), slow.is_some(), "{} {n:?}", p.name);
                if let Some(f) = fast {
                    assert!(satisfies(&p.weights, &n, &f.s));
                }
            }
        }
    }

    #[test]
    fn reflected_fill_is_counterclockwise() {
        let c = cat();
        let p = c.by_name("dipole-corner").unwrap();
        let m = match_pattern(p, &[5, 7, 3, 5]).unwrap();
        let patch = instantiate(p, &m.solution.s);
        let l = patch.boundary.len();
        assert_eq!(l, 20);
        let chain: Vec<usize> = (0..l).collect();
        let starts = vec![0, 5, 12, 15];
        let (n_new, quads) = fill_topology(&patch, &chain, &starts, m.alignment, l);
        assert_eq!(n_new, patch.points.len() - l);
        // boundary edges of the fill run along the chain in its direction
        let mut count: HashMap<[usize; 2], usize> = HashMap::new();
        for q in &quads {
            for k in 0..4 {
                *count.entry(sorted(q[k], q[(k + 1) % 4])).or_default() += 1;
            }
        }
        for q in &quads {
            for k in 0..4 {
                let (a, b) = (q[k], q[(k + 1) % 4]);
                if count[&sorted(a, b)] == 1 {
                    assert!(a < l && b < l);
                    assert_eq!(b, (a + 1) % l, "edge {a}->{b}");
                }
            }
        }
    }

    fn chains(model: &PlanarModel, size: f64) -> Vec<Vec<Point>> {
        crate::quantize::quantize(model, &|_, _| size).into_iter().map(|q| q.points).collect()
    }

    #[test]
    fn rectangle_premesh_is_a_grid() {
        let m = crate::model::shapes::rectangle(4.0, 2.4);
        let q = premesh_simple_face(&m, 0, &chains(&m, 1.0), &cat()).unwrap();
        assert_eq!(q.n_quads(), 32);
        assert_eq!(q.interior_irregular_count(), 0);
        // 0.5 x 0.6 cells
        assert!(q.min_sicn() > 0.98, "{}", q.min_sicn());
    }

    #[test]
    fn premesh_rejects_reflex_corners_and_disks() {
        let l = crate::model::shapes::l_shape();
        assert!(premesh_simple_face(&l, 0, &chains(&l, 0.5), &cat()).is_none());
        let d = crate::model::shapes::disk(1.0, 64);
        assert!(premesh_simple_face(&d, 0, &chains(&d, 0.3), &cat()).is_none());
    }

    #[test]
    fn triangle_and_pentagon_premesh() {
        let t = crate::model::shapes::polygon(&[pt(0., 0.), pt(2., 0.), pt(1., 1.7)]);
        let q = premesh_simple_face(&t, 0, &chains(&t, 0.5), &cat()).unwrap();
        q.validate().unwrap();
        assert_eq!(q.interior_irregular_count(), 1);
        let p = crate::model::shapes::polygon(&[pt(0., 0.), pt(2., 0.), pt(2.6, 1.6), pt(1., 2.6), pt(-0.6, 1.6)]);
        let q = premesh_simple_face(&p, 0, &chains(&p, 0.5), &cat()).unwrap();
        assert_eq!(q.interior_irregular_count(), 1);
        index_census(&q, 1).unwrap().check().unwrap();
    }

    #[test]
    fn trapezoid_uses_a_transition_pattern() {
        let m = crate::model::shapes::polygon(&[pt(0., 0.), pt(3., 0.), pt(3., 2.), pt(0., 2.)]);
        let mut ch = chains(&m, 0.5);
        // refine the bottom side so opposite sides disagree
        ch[0] = (0..=18).map(|k| pt(3.0 * k as f64 / 18.0, 0.0)).collect();
        let q = premesh_simple_face(&m, 0, &ch, &cat()).unwrap();
        q.validate().unwrap();
        assert_eq!(q.interior_irregular_count(), 4);
    }
}
