//! Small disk quadrangulations: enumeration by quad-adding flips, canonical
//! labeling, the embedded table, and local repair of valence defects.

use std::collections::{BTreeMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use std::time::Duration;

use crate::geom::{centroid, Point};
use crate::mesh::{QuadMesh, VertexKind};
use crate::smoothing::{region_quality, relax_around, vertex_ring};

pub const B_MAX: usize = 12;
pub const I_MAX: usize = 4;
const TABLE_VERSION: u32 = 1;

/// A quadrangulated disk: vertices `0..b` are the boundary in
/// counterclockwise order, `b..b + i` are interior.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Disk {
    pub b: usize,
    pub i: usize,
    pub quads: Vec<[usize; 4]>,
}

impl Disk {
    pub fn single_quad() -> Self {
        Disk { b: 4, i: 0, quads: vec![[0, 1, 2, 3]] }
    }

    pub fn valences(&self) -> Vec<usize> {
        let mut v = vec![0; self.b + self.i];
        for q in &self.quads {
            for &x in q {
                v[x] += 1;
            }
        }
        v
    }

    /// Quads incident to each boundary vertex.
    pub fn boundary_valences(&self) -> Vec<usize> {
        self.valences()[..self.b].to_vec()
    }

    /// Interior valences in `{3, 4, 5}` and boundary valences in `{1, 2, 3}`.
    pub fn is_useful(&self) -> bool {
        let v = self.valences();
        v[..self.b].iter().all(|&n| (1..=3).contains(&n)) && v[self.b..].iter().all(|&n| (3..=5).contains(&n))
    }

    pub fn canonical(&self) -> Vec<u8> {
        canonical_labeling(self.b, self.i, &self.quads).0
    }
}

/// Minimal encoding over all boundary rotations and reflections, with
/// interior vertices labeled breadth first in rotational order.
pub fn canonical_form(b: usize, i: usize, quads: &[[usize; 4]]) -> Vec<u8> {
    canonical_labeling(b, i, quads).0
}

fn canonical_labeling(b: usize, i: usize, quads: &[[usize; 4]]) -> (Vec<u8>, Vec<[usize; 4]>) {
    let n = b + i;
    let mut best: Option<(Vec<u8>, Vec<[usize; 4]>)> = None;
    for rot in 0..b {
        for refl in [false, true] {
            let bmap = |v: usize| if refl { (rot + b - v) % b } else { (v + b - rot) % b };
            let aligned: Vec<[usize; 4]> = quads
                .iter()
                .map(|q| {
                    let mut r = q.map(|v| if v < b { bmap(v) } else { v });
                    if refl {
                        r.reverse();
                    }
                    r
                })
                .collect();
            // directed edge -> previous vertex in the same quad
            let mut left = vec![usize::MAX; n * n];
            for q in &aligned {
                for k in 0..4 {
                    left[q[k] * n + q[(k + 1) % 4]] = q[(k + 3) % 4];
                }
            }
            let mut label = vec![usize::MAX; n];
            let mut parent = vec![usize::MAX; n];
            let mut queue: std::collections::VecDeque<usize> = (0..b).collect();
            for v in 0..b {
                label[v] = v;
            }
            let mut next = b;
            while let Some(v) = queue.pop_front() {
                let start = if v < b { (v + 1) % b } else { parent[v] };
                let mut w = start;
                for _ in 0..=n {
                    if label[w] == usize::MAX {
                        label[w] = next;
                        parent[w] = v;
                        next += 1;
                        queue.push_back(w);
                    }
                    match left[v * n + w] {
                        p if p != usize::MAX && p != start => w = p,
                        _ => break,
                    }
                }
            }
            let mut relabeled: Vec<[usize; 4]> = aligned
                .iter()
                .map(|q| {
                    let r = q.map(|v| label[v]);
                    let k = (0..4).min_by_key(|&k| r[k]).unwrap();
                    [r[k], r[(k + 1) % 4], r[(k + 2) % 4], r[(k + 3) % 4]]
                })
                .collect();
            relabeled.sort_unstable();
            let mut code = Vec::with_capacity(2 + 4 * relabeled.len());
            code.push(b as u8);
            code.push(i as u8);
            code.extend(relabeled.iter().flatten().map(|&v| v as u8));
            if best.as_ref().map_or(true, |(c, _)| code < *c) {
                best = Some((code, relabeled));
            }
        }
    }
    best.expect("disk has a boundary")
}

/// Relabels a quad set so that `boundary` becomes `0..b` and the remaining
/// vertices follow, then canonicalizes.
fn normalized(boundary: &[usize], n_vertices: usize, quads: &[[usize; 4]]) -> Disk {
    let mut map = vec![usize::MAX; n_vertices];
    for (k, &v) in boundary.iter().enumerate() {
        map[v] = k;
    }
    let mut next = boundary.len();
    for slot in map.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }
    let q: Vec<[usize; 4]> = quads.iter().map(|q| q.map(|v| map[v])).collect();
    let (b, i) = (boundary.len(), n_vertices - boundary.len());
    Disk { b, i, quads: canonical_labeling(b, i, &q).1 }
}

/// The three ways of gluing a quad onto one, two or three consecutive
/// boundary edges.
pub fn children(d: &Disk) -> Vec<Disk> {
    let (b, n) = (d.b, d.b + d.i);
    let mut out = Vec::new();
    let cyc = |k: usize| k % b;
    for j in 0..b {
        // one edge: two new boundary vertices
        let (x, y) = (n, n + 1);
        let mut quads = d.quads.clone();
        quads.push([cyc(j + 1), j, x, y]);
        let mut bd: Vec<usize> = (0..=j).collect();
        bd.extend([x, y]);
        bd.extend(j + 1..b);
        out.push(normalized(&bd, n + 2, &quads));
        // two edges: the middle vertex becomes interior
        let x = n;
        let mut quads = d.quads.clone();
        quads.push([cyc(j + 2), cyc(j + 1), j, x]);
        let bd: Vec<usize> = (0..b)
            .map(|k| cyc(j + 2 + k))
            .take_while(|&v| v != cyc(j + 1))
            .flat_map(|v| if v == j { vec![j, x] } else { vec![v] })
            .collect();
        out.push(normalized(&bd, n + 1, &quads));
        // three edges: closes a notch, two boundary vertices become interior
        if b >= 6 {
            let (a, e) = (j, cyc(j + 3));
            let exists = d.quads.iter().any(|q| (0..4).any(|k| {
                let (u, v) = (q[k], q[(k + 1) % 4]);
                (u == a && v == e) || (u == e && v == a)
            }));
            if !exists {
                let mut quads = d.quads.clone();
                quads.push([e, cyc(j + 2), cyc(j + 1), a]);
                let bd: Vec<usize> = (0..b - 2).map(|k| cyc(j + 3 + k)).collect();
                out.push(normalized(&bd, n, &quads));
            }
        }
    }
    out
}

/// All disk quadrangulations with at most `b_max` boundary and `i_max`
/// interior vertices, up to boundary rotation and reflection. With `useful`
/// set, only entries passing [`Disk::is_useful`] are kept (and branches that
/// can no longer produce one are pruned).
pub fn enumerate(b_max: usize, i_max: usize, useful: bool) -> BTreeMap<(usize, usize), Vec<Disk>> {
    let bound = b_max + i_max;
    let viable = |d: &Disk| {
        if d.i > i_max || d.b + d.i > bound || d.b < 4 {
            return false;
        }
        if !useful {
            return true;
        }
        let v = d.valences();
        v[..d.b].iter().all(|&n| n <= 5) && v[d.b..].iter().all(|&n| (3..=5).contains(&n))
    };
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let start = Disk::single_quad();
    seen.insert(start.canonical());
    let mut level = vec![start];
    let mut all = level.clone();
    while !level.is_empty() {
        let mut next = Vec::new();
        for d in &level {
            for c in children(d) {
                if viable(&c) && seen.insert(c.canonical()) {
                    next.push(c);
                }
            }
        }
        all.extend(next.iter().cloned());
        level = next;
    }
    let mut table: BTreeMap<(usize, usize), Vec<Disk>> = BTreeMap::new();
    for d in all {
        if d.b <= b_max && (!useful || d.is_useful()) {
            table.entry((d.b, d.i)).or_default().push(d);
        }
    }
    for list in table.values_mut() {
        list.sort_by_cached_key(|d| d.canonical());
    }
    table
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    version: u32,
    b_max: usize,
    i_max: usize,
    entries: Vec<Disk>,
}

/// The filtered disk quadrangulation table, indexed by boundary size.
#[derive(Debug, Clone)]
pub struct DiskTable {
    pub b_max: usize,
    pub i_max: usize,
    pub by_boundary: BTreeMap<usize, Vec<Disk>>,
}

impl DiskTable {
    pub fn generate(b_max: usize, i_max: usize) -> Self {
        let mut by_boundary: BTreeMap<usize, Vec<Disk>> = BTreeMap::new();
        for ((b, _), list) in enumerate(b_max, i_max, true) {
            by_boundary.entry(b).or_default().extend(list);
        }
        DiskTable { b_max, i_max, by_boundary }
    }

    /// The table shipped with the crate.
    pub fn builtin() -> &'static DiskTable {
        static TABLE: OnceLock<DiskTable> = OnceLock::new();
        TABLE.get_or_init(|| {
            DiskTable::from_json_str(include_str!("../data/disk_table.json")).expect("embedded disk table is valid")
        })
    }

    pub fn counts(&self) -> BTreeMap<(usize, usize), usize> {
        let mut out = BTreeMap::new();
        for d in self.by_boundary.values().flatten() {
            *out.entry((d.b, d.i)).or_default() += 1;
        }
        out
    }

    pub fn entries(&self, b: usize) -> &[Disk] {
        self.by_boundary.get(&b).map_or(&[], |v| v.as_slice())
    }

    pub fn to_json_string(&self) -> String {
        let file = TableFile {
            version: TABLE_VERSION,
            b_max: self.b_max,
            i_max: self.i_max,
            entries: self.by_boundary.values().flatten().cloned().collect(),
        };
        serde_json::to_string(&file).expect("table serializes")
    }

    pub fn from_json_str(s: &str) -> crate::Result<Self> {
        let file: TableFile = serde_json::from_str(s)?;
        if file.version != TABLE_VERSION {
            return Err(crate::Error::input(format!("unsupported disk table version {}", file.version)));
        }
        let mut by_boundary: BTreeMap<usize, Vec<Disk>> = BTreeMap::new();
        for d in file.entries {
            by_boundary.entry(d.b).or_default().push(d);
        }
        Ok(DiskTable { b_max: file.b_max, i_max: file.i_max, by_boundary })
    }
}

/// Defect categories in repair priority order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Defect {
    Corner,
    Curve,
    Interior,
}

/// Allowed valence range of a vertex kind.
fn allowed(kind: VertexKind) -> (usize, usize) {
    match kind {
        VertexKind::Interior => (3, 5),
        _ => (kind.ideal_valence(), kind.ideal_valence()),
    }
}

pub fn defect_of(kind: VertexKind, valence: usize) -> Option<Defect> {
    let (lo, hi) = allowed(kind);
    if (lo..=hi).contains(&valence) {
        return None;
    }
    Some(match kind {
        VertexKind::Interior => Defect::Interior,
        VertexKind::Curve { .. } => Defect::Curve,
        VertexKind::Corner { .. } => Defect::Corner,
    })
}

pub fn vertex_defect(mesh: &QuadMesh, v: usize) -> Option<Defect> {
    if !mesh.is_used(v) {
        return None;
    }
    defect_of(mesh.kinds[v], mesh.valence(v))
}

/// Squared valence deviation summed over defect vertices.
fn defect_energy(kinds: &[VertexKind], valences: &[usize]) -> usize {
    kinds
        .iter()
        .zip(valences)
        .filter(|(k, &n)| defect_of(**k, n).is_some())
        .map(|(k, &n)| {
            let d = n as i64 - k.ideal_valence() as i64;
            (d * d) as usize
        })
        .sum()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RepairStats {
    pub attempts: usize,
    pub accepted: usize,
    pub unrepaired: usize,
    /// Accepted replacements whose surrounding minimum SICN went down.
    pub quality_drops: usize,
}

/// Time allowed for untangling one replacement.
const UNTANGLE_BUDGET: Duration = Duration::from_millis(50);
/// Replacement candidates tried geometrically per defect.
const GEOMETRY_TRIES: usize = 4;

struct Candidate<'a> {
    disk: &'a Disk,
    rotation: usize,
    reflected: bool,
    irregularity: i64,
    tier: usize,
}

/// Replaces the quads around `seed` by the disk quadrangulation of the same
/// boundary that minimizes the cavity irregularity, subject to the valence
/// ranges (relaxed in priority order for curve and corner defects). Keeps
/// the mesh unchanged and returns `false` when nothing admissible improves
/// the defects or the geometry cannot be made at least as good as before.
pub fn repair_defect(mesh: &mut QuadMesh, seed: usize, table: &DiskTable) -> bool {
    try_repair(mesh, seed, table).is_some()
}

/// As [`repair_defect`]; on success returns the new quads and the minimum
/// SICN around the cavity before the replacement.
fn try_repair(mesh: &mut QuadMesh, seed: usize, table: &DiskTable) -> Option<(Vec<usize>, f64)> {
    let Some(class) = vertex_defect(mesh, seed) else { return None };
    let cavity: Vec<usize> = mesh.vertex_quads(seed).to_vec();
    let Some(chain) = mesh.region_boundary(&cavity) else {
        log::debug!("defect {seed}: cavity is not a disk");
        return None;
    };
    let b = chain.len();
    if b % 2 == 1 || table.entries(b).is_empty() {
        log::debug!("defect {seed}: no table entries with {b} boundary vertices");
        return None;
    }
    let inside: Vec<usize> = {
        let mut v: Vec<usize> = cavity.iter().flat_map(|&q| mesh.quad(q)).filter(|v| !chain.contains(v)).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let n_cav = |v: usize| cavity.iter().filter(|&&q| mesh.quad(q).contains(&v)).count();
    let n_out: Vec<usize> = chain.iter().map(|&v| mesh.valence(v) - n_cav(v)).collect();
    let kinds: Vec<VertexKind> = chain.iter().map(|&v| mesh.kinds[v]).collect();
    let before = {
        let mut k = kinds.clone();
        let mut n: Vec<usize> = chain.iter().map(|&v| mesh.valence(v)).collect();
        k.extend(inside.iter().map(|&v| mesh.kinds[v]));
        n.extend(inside.iter().map(|&v| mesh.valence(v)));
        defect_energy(&k, &n)
    };
    // the highest tier whose relaxations the seed class allows
    let max_tier = match class {
        Defect::Corner => 2,
        Defect::Curve => 1,
        Defect::Interior => 0,
    };
    let mut candidates = Vec::new();
    for disk in table.entries(b) {
        let n_in = disk.boundary_valences();
        for rotation in 0..b {
            for reflected in [false, true] {
                let mut irregularity = 0i64;
                let mut tier = 0;
                let mut ok = true;
                for k in 0..b {
                    let j = if reflected { (rotation + b - k) % b } else { (rotation + k) % b };
                    let n = n_out[j] + n_in[k];
                    let d = kinds[j].ideal_valence() as i64 - n as i64;
                    irregularity += d * d;
                    let (lo, hi) = allowed(kinds[j]);
                    if !(lo..=hi).contains(&n) {
                        let need = match kinds[j] {
                            VertexKind::Corner { .. } => 3,
                            VertexKind::Curve { .. } => 2,
                            VertexKind::Interior => 1,
                        };
                        if need > max_tier || n < 1 {
                            ok = false;
                            break;
                        }
                        tier = tier.max(need);
                    }
                }
                if !ok {
                    continue;
                }
                irregularity += disk.valences()[b..].iter().map(|&n| (4 - n as i64).pow(2)).sum::<i64>();
                candidates.push(Candidate { disk, rotation, reflected, irregularity, tier });
            }
        }
    }
    candidates.sort_by_key(|c| (c.tier, c.irregularity, c.disk.i));
    let region_before = vertex_ring(mesh, &cavity);
    let (min_before, _) = region_quality(mesh, &region_before);
    let center = centroid(&chain.iter().map(|&v| mesh.points[v]).collect::<Vec<Point>>());
    let mut tried = 0;
    for c in &candidates {
        // defect energy of the replacement on the cavity vertices
        let n_in = c.disk.valences();
        let map = |k: usize| if c.reflected { (c.rotation + b - k) % b } else { (c.rotation + k) % b };
        let mut k_after: Vec<VertexKind> = Vec::new();
        let mut n_after: Vec<usize> = Vec::new();
        for k in 0..b {
            let j = map(k);
            k_after.push(kinds[j]);
            n_after.push(n_out[j] + n_in[k]);
        }
        k_after.extend(std::iter::repeat(VertexKind::Interior).take(c.disk.i));
        n_after.extend(n_in[b..].iter().copied());
        if defect_energy(&k_after, &n_after) >= before {
            continue;
        }
        if tried == GEOMETRY_TRIES {
            break;
        }
        tried += 1;
        let base = mesh.n_points();
        let quads: Vec<[usize; 4]> = c
            .disk
            .quads
            .iter()
            .map(|q| {
                let mut r = q.map(|v| if v < b { chain[map(v)] } else { base + v - b });
                if c.reflected {
                    r.reverse();
                }
                r
            })
            .collect();
        let new_points: Vec<(Point, VertexKind)> = vec![(center, VertexKind::Interior); c.disk.i];
        let first_new = mesh.quad_capacity();
        let edit = mesh.replace(&cavity, &new_points, &quads);
        let new_ids: Vec<usize> = (first_new..mesh.quad_capacity()).collect();
        let relax = relax_around(mesh, &new_ids, UNTANGLE_BUDGET);
        if relax.min > 0.0 && relax.min >= min_before {
            log::trace!("defect {seed}: replaced {} quads by {} (irregularity {})", cavity.len(), quads.len(), c.irregularity);
            crate::mesh::check_after_edit(mesh);
            return Some((new_ids, min_before));
        }
        relax.restore(mesh);
        mesh.undo(edit);
    }
    None
}

/// Repairs defects in priority order (corners, curves, interior) until a
/// pass changes nothing or `max_passes` is reached.
pub fn repair_defects(mesh: &mut QuadMesh, table: &DiskTable, max_passes: usize) -> RepairStats {
    let mut stats = RepairStats::default();
    for _ in 0..max_passes {
        let mut defects: Vec<(Defect, usize)> =
            (0..mesh.n_points()).filter_map(|v| vertex_defect(mesh, v).map(|d| (d, v))).collect();
        defects.sort();
        let mut changed = false;
        for (_, v) in defects {
            if vertex_defect(mesh, v).is_none() {
                continue;
            }
            stats.attempts += 1;
            if let Some((new_ids, min_before)) = try_repair(mesh, v, table) {
                let (after, _) = region_quality(mesh, &vertex_ring(mesh, &new_ids));
                stats.quality_drops += usize::from(after < min_before);
                stats.accepted += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    stats.unrepaired = (0..mesh.n_points()).filter(|&v| vertex_defect(mesh, v).is_some()).count();
    stats
}
