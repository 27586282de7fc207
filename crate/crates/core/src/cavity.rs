//! Convex cavity growth, pattern remeshing of cavities, and the iterative
//! quasi-structuring strategy of a face mesh.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::crossfield::Singularity;
use crate::geom::{centroid, Point};
use crate::mesh::{QuadMesh, VertexKind};
use crate::patterns::{fill_topology, instantiate, match_pattern, Catalogue, Match, Pattern};
use crate::smoothing::{region_quality, relax_around, vertex_ring};

/// A simply connected set of quads with its boundary decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Cavity {
    /// Sorted quad ids.
    pub quads: Vec<usize>,
    /// Counterclockwise boundary loop.
    pub chain: Vec<usize>,
    pub n_in: Vec<usize>,
    pub n_out: Vec<usize>,
    /// Interior vertices (all their quads inside). Sorted.
    pub inside: Vec<usize>,
}

impl Cavity {
    pub fn new(mesh: &QuadMesh, quads: &[usize]) -> Option<Cavity> {
        let mut quads = quads.to_vec();
        quads.sort_unstable();
        quads.dedup();
        let chain = mesh.region_boundary(&quads)?;
        let set: HashSet<usize> = quads.iter().copied().collect();
        let n_in: Vec<usize> =
            chain.iter().map(|&v| mesh.vertex_quads(v).iter().filter(|q| set.contains(q)).count()).collect();
        let n_out = chain.iter().zip(&n_in).map(|(&v, &n)| mesh.valence(v) - n).collect();
        let on_chain: HashSet<usize> = chain.iter().copied().collect();
        let mut inside: Vec<usize> =
            quads.iter().flat_map(|&q| mesh.quad(q)).filter(|v| !on_chain.contains(v)).collect();
        inside.sort_unstable();
        inside.dedup();
        Some(Cavity { quads, chain, n_in, n_out, inside })
    }

    /// Positions in `chain` of the convex corners (one quad inside).
    pub fn corners(&self) -> Vec<usize> {
        (0..self.chain.len()).filter(|&i| self.n_in[i] == 1).collect()
    }

    /// Boundary vertices where the cavity turns inwards: face-interior
    /// vertices with a single quad outside.
    pub fn concave(&self, mesh: &QuadMesh) -> Vec<usize> {
        (0..self.chain.len())
            .filter(|&i| mesh.kinds[self.chain[i]].is_interior() && self.n_out[i] == 1)
            .map(|i| self.chain[i])
            .collect()
    }

    pub fn is_convex(&self, mesh: &QuadMesh) -> bool {
        self.concave(mesh).is_empty()
    }

    pub fn sides(&self) -> Vec<usize> {
        crate::patterns::side_lengths(&self.corners(), self.chain.len())
    }
}

/// Whether a vertex counts as irregular for the strategy.
pub fn is_irregular(mesh: &QuadMesh, v: usize) -> bool {
    mesh.is_irregular(v)
}

/// Constraints applied while growing.
#[derive(Debug, Clone)]
pub struct GrowRules<'a> {
    /// Vertices that must never end up inside a cavity.
    pub preserved: &'a HashSet<usize>,
    /// A preserved vertex that may be inside (the seed singularity).
    pub allow: Option<usize>,
    pub max_quads: usize,
}

fn may_add(mesh: &QuadMesh, set: &HashSet<usize>, q: usize, rules: &GrowRules) -> bool {
    mesh.quad(q).iter().all(|&v| {
        let surrounded = mesh.vertex_quads(v).iter().all(|&o| o == q || set.contains(&o));
        if !surrounded {
            return true;
        }
        let keep_out = (rules.preserved.contains(&v) && rules.allow != Some(v))
            || matches!(mesh.kinds[v], VertexKind::Corner { ideal, .. } if ideal >= 3);
        !keep_out
    })
}

/// Adds quads around concave or pinched boundary vertices until the
/// cavity is a convex disk. `false` when a needed quad is forbidden.
fn convexify(mesh: &QuadMesh, set: &mut HashSet<usize>, rules: &GrowRules) -> bool {
    for _ in 0..4 * rules.max_quads.max(16) {
        let quads: Vec<usize> = set.iter().copied().collect();
        let needed: Vec<usize> = match Cavity::new(mesh, &quads) {
            Some(c) => c
                .concave(mesh)
                .iter()
                .flat_map(|&v| mesh.vertex_quads(v).iter().copied())
                .filter(|q| !set.contains(q))
                .collect(),
            None => {
                // pinched or holed: surround the vertices touched twice
                let mut out_count = std::collections::HashMap::new();
                for &q in &quads {
                    let qq = mesh.quad(q);
                    for k in 0..4 {
                        let (a, b) = (qq[k], qq[(k + 1) % 4]);
                        if !mesh.across(q, a, b).is_some_and(|o| set.contains(&o)) {
                            *out_count.entry(a).or_insert(0) += 1;
                        }
                    }
                }
                let mut bad: Vec<usize> = out_count.into_iter().filter(|&(_, c)| c > 1).map(|(v, _)| v).collect();
                bad.sort_unstable();
                let mut add: Vec<usize> = if bad.is_empty() {
                    // a hole: fill quads enclosed by the cavity
                    enclosed(mesh, set)
                } else {
                    bad.iter()
                        .flat_map(|&v| mesh.vertex_quads(v).iter().copied())
                        .filter(|q| !set.contains(q))
                        .collect()
                };
                if add.is_empty() {
                    return false;
                }
                add.sort_unstable();
                add.dedup();
                add
            }
        };
        if needed.is_empty() {
            return true;
        }
        for q in needed {
            if !may_add(mesh, set, q, rules) {
                return false;
            }
            set.insert(q);
        }
        if set.len() > rules.max_quads {
            return false;
        }
    }
    false
}

/// Quads outside `set` that cannot reach the mesh boundary without
/// crossing it.
fn enclosed(mesh: &QuadMesh, set: &HashSet<usize>) -> Vec<usize> {
    let mut seen: HashSet<usize> = HashSet::new();
    let mut out = Vec::new();
    let mut candidates: Vec<usize> = set
        .iter()
        .flat_map(|&q| mesh.quad(q))
        .flat_map(|v| mesh.vertex_quads(v).iter().copied())
        .filter(|q| !set.contains(q))
        .collect();
    candidates.sort_unstable();
    candidates.dedup();
    for start in candidates {
        if seen.contains(&start) {
            continue;
        }
        let mut comp = vec![start];
        let mut stack = vec![start];
        seen.insert(start);
        let mut open = false;
        while let Some(q) = stack.pop() {
            let qq = mesh.quad(q);
            for k in 0..4 {
                match mesh.across(q, qq[k], qq[(k + 1) % 4]) {
                    None => open = true,
                    Some(o) if !set.contains(&o) && seen.insert(o) => {
                        comp.push(o);
                        stack.push(o);
                    }
                    _ => {}
                }
            }
            if comp.len() > 4 * set.len() + 64 {
                open = true;
            }
        }
        if !open {
            out.extend(comp);
        }
    }
    out
}

/// Convex cavities of increasing size grown from `seed`. Each step repairs
/// concavities first, then adds the layer of quads sharing an edge with
/// the cavity. Growth stops at the face boundary, at a forbidden quad that
/// is needed for convexity, or at the size cap.
pub fn grow_cavity(mesh: &QuadMesh, seed: &[usize], rules: &GrowRules) -> Vec<Cavity> {
    let mut set: HashSet<usize> = seed.iter().copied().collect();
    let mut out: Vec<Cavity> = Vec::new();
    loop {
        if !convexify(mesh, &mut set, rules) {
            break;
        }
        let quads: Vec<usize> = set.iter().copied().collect();
        let Some(c) = Cavity::new(mesh, &quads) else { break };
        if out.last().map_or(true, |l| l.quads.len() != c.quads.len()) {
            out.push(c.clone());
        }
        let layer: Vec<usize> = c
            .quads
            .iter()
            .flat_map(|&q| {
                let qq = mesh.quad(q);
                (0..4).filter_map(move |k| mesh.across(q, qq[k], qq[(k + 1) % 4]))
            })
            .filter(|q| !set.contains(q))
            .collect();
        let before = set.len();
        for q in layer {
            if may_add(mesh, &set, q, rules) {
                set.insert(q);
            }
        }
        if set.len() == before || set.len() > rules.max_quads {
            break;
        }
    }
    out
}

/// Best pattern of `allowed` for the cavity sides, lowest cost first.
pub fn remeshable<'a>(cavity: &Cavity, allowed: &[&'a Pattern]) -> Option<(&'a Pattern, Match)> {
    let sides = cavity.sides();
    let mut best: Option<(&Pattern, Match)> = None;
    for &p in allowed {
        if p.n_sides() != sides.len() {
            continue;
        }
        if let Some(m) = match_pattern(p, &sides) {
            if best.as_ref().map_or(true, |(_, b)| m.solution.cost < b.solution.cost) {
                best = Some((p, m));
            }
        }
    }
    best
}

/// Time allowed for untangling one remeshed cavity.
const UNTANGLE_BUDGET: Duration = Duration::from_millis(100);

/// Outcome of one remeshing attempt.
#[derive(Debug, Clone, PartialEq)]
pub enum Remesh {
    Accepted {
        new_quads: Vec<usize>,
        new_vertices: std::ops::Range<usize>,
        /// Minimum SICN of the quads around the cavity before and after.
        min_before: f64,
        min_after: f64,
    },
    Rejected(&'static str),
}

/// Replaces the cavity by the instantiated pattern, places vertices on the
/// cavity enlarged by one ring, and keeps the result only if all quads are
/// valid, the region minimum SICN does not drop, the irregular count of the
/// touched vertices strictly drops and no preserved vertex changes valence.
/// A rejected attempt leaves the mesh exactly as it was.
pub fn remesh_cavity(
    mesh: &mut QuadMesh,
    cavity: &Cavity,
    pattern: &Pattern,
    m: &Match,
    preserved: &HashSet<usize>,
) -> Remesh {
    let corners = cavity.corners();
    let patch = instantiate(pattern, &m.solution.s);
    if patch.boundary.len() != cavity.chain.len() {
        return Remesh::Rejected("boundary size mismatch");
    }
    // valences after: corners keep one quad inside, side vertices get two
    let mut irregular_before = cavity.inside.iter().filter(|&&v| is_irregular(mesh, v)).count();
    let mut irregular_after = 0;
    for (i, &v) in cavity.chain.iter().enumerate() {
        let after = cavity.n_out[i] + if cavity.n_in[i] == 1 { 1 } else { 2 };
        if preserved.contains(&v) && after != mesh.valence(v) {
            return Remesh::Rejected("preserved vertex on the boundary");
        }
        irregular_before += usize::from(is_irregular(mesh, v));
        irregular_after += usize::from(after != mesh.kinds[v].ideal_valence());
    }
    let ring_before = vertex_ring(mesh, &cavity.quads);
    let (min_before, _) = region_quality(mesh, &ring_before);
    let base = mesh.n_points();
    let (n_new, quads) = fill_topology(&patch, &cavity.chain, &corners, m.alignment, base);
    // interior irregulars of the instantiated pattern
    let mut val = vec![0usize; n_new];
    for q in &quads {
        for &v in q {
            if v >= base {
                val[v - base] += 1;
            }
        }
    }
    irregular_after += val.iter().filter(|&&n| n != 4).count();
    if irregular_after >= irregular_before {
        return Remesh::Rejected("no irregularity gain");
    }
    let center = centroid(&cavity.chain.iter().map(|&v| mesh.points[v]).collect::<Vec<Point>>());
    let first_quad = mesh.quad_capacity();
    let edit = mesh.replace(&cavity.quads, &vec![(center, VertexKind::Interior); n_new], &quads);
    let new_quads: Vec<usize> = (first_quad..mesh.quad_capacity()).collect();
    let relax = relax_around(mesh, &new_quads, UNTANGLE_BUDGET);
    if relax.min > 0.0 && relax.min >= min_before {
        crate::mesh::check_after_edit(mesh);
        return Remesh::Accepted { new_quads, new_vertices: base..base + n_new, min_before, min_after: relax.min };
    }
    relax.restore(mesh);
    mesh.undo(edit);
    Remesh::Rejected("quality gate")
}

/// Each singularity claims the nearest unclaimed irregular vertex of the
/// same index within `3 * size(position)`. Returns the claimed vertices.
pub fn match_singularities(
    mesh: &QuadMesh,
    singularities: &[Singularity],
    size: &dyn Fn(&Point) -> f64,
) -> Vec<usize> {
    let mut claimed = Vec::new();
    for s in singularities {
        let radius = 3.0 * size(&s.position);
        let best = (0..mesh.n_points())
            .filter(|&v| mesh.is_used(v) && mesh.kinds[v].is_interior() && !claimed.contains(&v))
            .filter(|&v| mesh.vertex_index(v) == s.index)
            .map(|v| (v, (mesh.points[v] - s.position).norm()))
            .filter(|&(_, d)| d <= radius)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((v, _)) => claimed.push(v),
            None => log::debug!("singularity at {:?} (index {}) has no matching vertex", s.position, s.index),
        }
    }
    claimed
}

#[derive(Debug, Clone, Copy)]
pub struct StrategyParams {
    pub max_attempts: usize,
    pub max_time: Duration,
    /// Largest cavity considered, in quads.
    pub max_cavity: usize,
}

impl Default for StrategyParams {
    fn default() -> Self {
        StrategyParams { max_attempts: 10_000, max_time: Duration::from_secs(300), max_cavity: 4000 }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct StrategyStats {
    pub iterations: usize,
    pub attempts: usize,
    pub accepted: usize,
    pub accepted_per_step: [usize; 4],
    pub irregular_before: usize,
    pub irregular_after: usize,
    /// Accepted remeshings whose surrounding minimum SICN went down.
    pub quality_drops: usize,
}

impl StrategyStats {
    fn record(&mut self, mesh: &QuadMesh, outcome: &Remesh, step: usize) -> bool {
        let Remesh::Accepted { new_quads, min_before, .. } = outcome else { return false };
        let (after, _) = region_quality(mesh, &vertex_ring(mesh, new_quads));
        self.quality_drops += usize::from(after < *min_before);
        self.accepted += 1;
        self.accepted_per_step[step] += 1;
        true
    }
}

struct Budget {
    start: Instant,
    params: StrategyParams,
    attempts: usize,
}

impl Budget {
    fn spent(&self) -> bool {
        self.attempts >= self.params.max_attempts || self.start.elapsed() >= self.params.max_time
    }
}

fn irregular_vertices(mesh: &QuadMesh, preserved: &HashSet<usize>) -> Vec<usize> {
    (0..mesh.n_points()).filter(|&v| mesh.is_used(v) && is_irregular(mesh, v) && !preserved.contains(&v)).collect()
}

/// Runs the four-step strategy until an iteration changes nothing or the
/// budget is spent. `preserved` holds the vertices matched to cross-field
/// singularities; it is updated when a singular vertex is recreated.
pub fn quasi_structure_face(
    mesh: &mut QuadMesh,
    preserved: &mut HashSet<usize>,
    catalogue: &Catalogue,
    params: StrategyParams,
) -> StrategyStats {
    let mut stats = StrategyStats {
        irregular_before: mesh.irregular_count(),
        ..Default::default()
    };
    let mut budget = Budget { start: Instant::now(), params, attempts: 0 };
    let grid: Vec<&Pattern> = catalogue.patterns.iter().filter(|p| p.name == "grid").collect();
    let rect: Vec<&Pattern> = catalogue.patterns.iter().filter(|p| p.n_sides() == 4).collect();
    let tri: Vec<&Pattern> = catalogue.patterns.iter().filter(|p| p.n_sides() == 3).collect();
    let pent: Vec<&Pattern> = catalogue.patterns.iter().filter(|p| p.n_sides() == 5).collect();
    loop {
        stats.iterations += 1;
        let mut changed = false;
        changed |= maximal_step(mesh, preserved, &grid, &mut budget, &mut stats, 0);
        changed |= singular_step(mesh, preserved, &tri, &pent, &mut budget, &mut stats);
        changed |= maximal_step(mesh, preserved, &grid, &mut budget, &mut stats, 2);
        changed |= minimal_step(mesh, preserved, &rect, &mut budget, &mut stats);
        if !changed || budget.spent() {
            break;
        }
    }
    stats.attempts = budget.attempts;
    stats.irregular_after = mesh.irregular_count();
    stats
}

/// Steps 1 and 3: for each unnecessary irregular vertex, the largest
/// remeshable cavity free of preserved vertices.
fn maximal_step(
    mesh: &mut QuadMesh,
    preserved: &mut HashSet<usize>,
    allowed: &[&Pattern],
    budget: &mut Budget,
    stats: &mut StrategyStats,
    step: usize,
) -> bool {
    let mut changed = false;
    for v in irregular_vertices(mesh, preserved) {
        if budget.spent() {
            break;
        }
        if !mesh.is_used(v) || !is_irregular(mesh, v) {
            continue;
        }
        let rules = GrowRules { preserved, allow: None, max_quads: budget.params.max_cavity };
        let seed = mesh.vertex_quads(v).to_vec();
        let candidates = grow_cavity(mesh, &seed, &rules);
        for c in candidates.iter().rev() {
            if budget.spent() {
                break;
            }
            let Some((p, m)) = remeshable(c, allowed) else { continue };
            budget.attempts += 1;
            let outcome = remesh_cavity(mesh, c, p, &m, preserved);
            if stats.record(mesh, &outcome, step) {
                changed = true;
                break;
            }
        }
    }
    changed
}

/// Step 2: minimal triangular or pentagonal cavities around each preserved
/// singular vertex that also absorb unnecessary irregular vertices.
fn singular_step(
    mesh: &mut QuadMesh,
    preserved: &mut HashSet<usize>,
    tri: &[&Pattern],
    pent: &[&Pattern],
    budget: &mut Budget,
    stats: &mut StrategyStats,
) -> bool {
    let mut changed = false;
    let mut order: Vec<usize> = preserved.iter().copied().collect();
    order.sort_unstable();
    for s in order {
        if budget.spent() {
            break;
        }
        if !preserved.contains(&s) || !mesh.is_used(s) {
            continue;
        }
        let index = mesh.vertex_index(s);
        let allowed = match index {
            1 => tri,
            -1 => pent,
            _ => continue,
        };
        let rules = GrowRules { preserved, allow: Some(s), max_quads: budget.params.max_cavity };
        let seed = mesh.vertex_quads(s).to_vec();
        let candidates = grow_cavity(mesh, &seed, &rules);
        for c in &candidates {
            if budget.spent() {
                break;
            }
            let unnecessary = c
                .inside
                .iter()
                .chain(&c.chain)
                .any(|&v| v != s && is_irregular(mesh, v) && !preserved.contains(&v));
            if !unnecessary {
                continue;
            }
            let Some((p, m)) = remeshable(c, allowed) else { continue };
            budget.attempts += 1;
            let old = mesh.points[s];
            let mut others = preserved.clone();
            others.remove(&s);
            let outcome = remesh_cavity(mesh, c, p, &m, &others);
            if stats.record(mesh, &outcome, 1) {
                let Remesh::Accepted { new_vertices, .. } = outcome else { unreachable!() };
                // the pattern's singular vertex takes over the seed's role
                let replacement = new_vertices
                    .filter(|&v| mesh.vertex_index(v) == index)
                    .min_by(|&a, &b| (mesh.points[a] - old).norm().total_cmp(&(mesh.points[b] - old).norm()));
                preserved.remove(&s);
                if let Some(r) = replacement {
                    preserved.insert(r);
                }
                changed = true;
                break;
            }
        }
    }
    changed
}

/// Step 4: the smallest cavity around each unnecessary irregular vertex
/// that one of the rectangular patterns remeshes.
fn minimal_step(
    mesh: &mut QuadMesh,
    preserved: &mut HashSet<usize>,
    allowed: &[&Pattern],
    budget: &mut Budget,
    stats: &mut StrategyStats,
) -> bool {
    let mut changed = false;
    for v in irregular_vertices(mesh, preserved) {
        if budget.spent() {
            break;
        }
        if !mesh.is_used(v) || !is_irregular(mesh, v) {
            continue;
        }
        let rules = GrowRules { preserved, allow: None, max_quads: budget.params.max_cavity };
        let seed = mesh.vertex_quads(v).to_vec();
        for c in grow_cavity(mesh, &seed, &rules) {
            if budget.spent() {
                break;
            }
            let Some((p, m)) = remeshable(&c, allowed) else { continue };
            budget.attempts += 1;
            let outcome = remesh_cavity(mesh, &c, p, &m, preserved);
            if stats.record(mesh, &outcome, 3) {
                changed = true;
                break;
            }
        }
    }
    changed
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::index_census;
    use crate::mesh::quad::tests::grid;
    use crate::smoothing::laplacian_solve;

    /// Rotates the 2 x 2 block of quads around grid vertex `(i, j)` by one
    /// ring step: the centre keeps valence 4 while its edge neighbours drop
    /// to 3 and its diagonal neighbours rise to 5.
    fn rotate_block(m: &mut QuadMesh, nx: usize, i: usize, j: usize) {
        let c = j * (nx + 1) + i;
        let ring = m.ring(c).unwrap();
        let old: Vec<usize> = m.vertex_quads(c).to_vec();
        let quads: Vec<[usize; 4]> = (0..4).map(|k| [c, ring[2 * k + 1], ring[(2 * k + 2) % 8], ring[(2 * k + 3) % 8]]).collect();
        m.replace(&old, &[], &quads);
    }

    fn relax_all(m: &mut QuadMesh) {
        let free: Vec<usize> = (0..m.n_points()).filter(|&v| m.is_used(v) && m.kinds[v].is_interior()).collect();
        laplacian_solve(m, &free).unwrap();
    }

    fn dipole_grid() -> QuadMesh {
        let mut m = grid(10, 10);
        for (i, j) in [(2, 2), (7, 3), (4, 7)] {
            rotate_block(&mut m, 10, i, j);
        }
        relax_all(&mut m);
        m
    }

    #[test]
    fn pentagonal_seed_is_already_convex() {
        let cat = Catalogue::builtin();
        let p = cat.by_name("pentagon").unwrap();
        let patch = instantiate(p, &[3; 5]);
        let mut kinds = vec![VertexKind::Interior; patch.points.len()];
        for &v in &patch.boundary {
            kinds[v] = VertexKind::Curve { curve: 0 };
        }
        let m = QuadMesh::new(patch.points.clone(), kinds, patch.quads.clone());
        let centre = (0..m.n_points()).find(|&v| m.kinds[v].is_interior() && m.valence(v) == 5).unwrap();
        let none = HashSet::new();
        let rules = GrowRules { preserved: &none, allow: None, max_quads: 1000 };
        let grown = grow_cavity(&m, m.vertex_quads(centre), &rules);
        assert_eq!(grown[0].quads.len(), 5);
        assert_eq!(grown[0].corners().len(), 5);
        assert_eq!(grown[0].sides(), vec![2; 5]);
        assert!(grown.windows(2).all(|w| w[0].quads.len() < w[1].quads.len()));
        assert!(grown.iter().all(|c| c.is_convex(&m)));
        let (pat, _) = remeshable(&grown[0], &[p]).unwrap();
        assert_eq!(pat.name, "pentagon");
    }

    #[test]
    fn preserved_vertex_stays_out_of_cavities() {
        let m = grid(8, 8);
        let keep: HashSet<usize> = [3 * 9 + 5].into_iter().collect();
        let rules = GrowRules { preserved: &keep, allow: None, max_quads: 1000 };
        for c in grow_cavity(&m, m.vertex_quads(3 * 9 + 3), &rules) {
            assert!(!c.inside.contains(&(3 * 9 + 5)));
        }
    }

    #[test]
    fn rotated_blocks_are_straightened() {
        let mut m = dipole_grid();
        m.validate().unwrap();
        assert_eq!(m.interior_irregular_count(), 24);
        let mut keep = HashSet::new();
        let stats = quasi_structure_face(&mut m, &mut keep, &Catalogue::builtin(), StrategyParams::default());
        m.validate().unwrap();
        index_census(&m, 1).unwrap().check().unwrap();
        assert_eq!(m.irregular_count(), 0, "{stats:?}");
        assert!(m.min_sicn() > 0.0);
    }

    #[test]
    fn regular_grid_is_a_fixpoint() {
        let mut m = grid(6, 6);
        let before: Vec<[usize; 4]> = m.quads().collect();
        let stats = quasi_structure_face(&mut m, &mut HashSet::new(), &Catalogue::builtin(), StrategyParams::default());
        assert_eq!(stats.accepted, 0);
        assert_eq!(stats.iterations, 1);
        assert_eq!(before, m.quads().collect::<Vec<_>>());
    }

    #[test]
    fn rejected_remesh_restores_the_mesh() {
        use rand::{Rng, SeedableRng};
        let cat = Catalogue::builtin();
        let grid_pattern = cat.by_name("grid").unwrap();
        let mut rejected = 0;
        for seed in 0..30 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut m = grid(4, 4);
            rotate_block(&mut m, 4, 2, 2);
            relax_all(&mut m);
            // squeeze the fixed ring so the straightened block has little room
            for v in 0..m.n_points() {
                if !m.kinds[v].is_interior() {
                    continue;
                }
                let d = rng.gen_range(-0.35..0.35);
                let e = rng.gen_range(-0.35..0.35);
                m.points[v].x += d;
                m.points[v].y += e;
            }
            if m.min_sicn() <= 0.0 {
                continue;
            }
            let snapshot_points = m.points.clone();
            let snapshot_quads: Vec<[usize; 4]> = m.quads().collect();
            let c = Cavity::new(&m, m.vertex_quads(2 * 5 + 2)).unwrap();
            let (p, mm) = remeshable(&c, &[grid_pattern]).unwrap();
            let ring_before = vertex_ring(&m, &c.quads);
            let (min_before, _) = region_quality(&m, &ring_before);
            match remesh_cavity(&mut m, &c, p, &mm, &HashSet::new()) {
                Remesh::Accepted { new_quads, .. } => {
                    let ring = vertex_ring(&m, &new_quads);
                    assert!(region_quality(&m, &ring).0 >= min_before);
                    assert_eq!(m.interior_irregular_count(), 0);
                }
                Remesh::Rejected(_) => {
                    rejected += 1;
                    assert_eq!(m.points.len(), snapshot_points.len());
                    for (a, b) in m.points.iter().zip(&snapshot_points) {
                        assert_eq!(a.x.to_bits(), b.x.to_bits());
                        assert_eq!(a.y.to_bits(), b.y.to_bits());
                    }
                    let mut now: Vec<[usize; 4]> = m.quads().collect();
                    let mut was = snapshot_quads.clone();
                    now.sort();
                    was.sort();
                    assert_eq!(now, was);
                }
            }
        }
        let _ = rejected;
    }
}
