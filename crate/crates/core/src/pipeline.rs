//! End-to-end meshing of a planar model: background fields, curve
//! quantization, per-face meshing and topological improvement.

use std::collections::{HashMap, HashSet};
use std::time::{Duration, Instant};

use log::{debug, info, warn};
use serde::Serialize;

use crate::crossfield::{
    augment_acute_corners, check_index_balance, conformal_scaling, detect_singularities, index_balance, mbo_solve, CrossField,
    MboParams, Singularity,
};
use crate::diskquad::{repair_defects, DiskTable, RepairStats};
use crate::error::{Error, Result};
use crate::geom::{BBox, Point};
use crate::mesh::{index_census, QuadMesh, TriMesh, VertexKind};
use crate::model::PlanarModel;
use crate::par;
use crate::patterns::{premesh_simple_face, Catalogue};
use crate::cavity::{match_singularities, quasi_structure_face, StrategyParams, StrategyStats};
use crate::quantize::{quantize, CurveQuantization};
use crate::sizing::{apply_hints, blend_global, face_quad_budget, feature_size, CurveIndex};
use crate::smoothing::{smooth_loop, untangle_local, SmoothParams};
use crate::triangulate::{face_boundary, sample_curves_with_arclength, triangulate_face, Kernel};
use crate::unstructured::{combine_quads, frontal_insert, midpoint_subdivide, Background};

/// Background edge length as a fraction of the model's bounding box diagonal.
pub const BACKGROUND_DIVISIONS: f64 = 40.0;

/// Passes of disk-quadrangulation repair before quasi-structuring.
const REPAIR_PASSES: usize = 4;

/// Time allowed to untangle a freshly subdivided mesh.
const UNTANGLE_BUDGET: Duration = Duration::from_secs(1);

#[derive(Debug, Clone)]
pub struct Config {
    pub target_quads: usize,
    pub g_max: f64,
    pub levels: usize,
    /// Recorded in the statistics; every step of the pipeline is
    /// deterministic, so the seed does not change the output.
    pub seed: u64,
    pub max_time_per_face: Duration,
    /// Worker threads for the per-face stages (`None`: all cores).
    pub jobs: Option<usize>,
    /// Try the catalogue patterns on simple faces first.
    pub premesh: bool,
    /// Run defect repair and quasi-structuring on unstructured meshes.
    pub improve: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            target_quads: 1000,
            g_max: 0.3,
            levels: 5,
            seed: 0,
            max_time_per_face: Duration::from_secs(300),
            jobs: None,
            premesh: true,
            improve: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Premesh,
    QuasiStructured,
    Unstructured,
}

#[derive(Debug, Clone, Serialize)]
pub struct FaceStats {
    pub id: usize,
    pub method: Method,
    pub n_vert: usize,
    pub n_quad: usize,
    pub sicn_min: f64,
    pub sicn_avg: f64,
    /// Irregular vertices of the unstructured mesh.
    pub irregular_init: usize,
    pub irregular_final: usize,
    pub singularities: usize,
    pub repair: RepairStats,
    pub strategy: StrategyStats,
    /// Accepted smoothing passes whose minimum SICN went down.
    pub smoothing_drops: usize,
    pub time_init_ms: f64,
    pub time_improve_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Totals {
    pub n_vert: usize,
    pub n_quad: usize,
    pub sicn_min: f64,
    pub sicn_avg: f64,
    pub irregular_init: usize,
    pub irregular_final: usize,
    pub quality_drops: usize,
    pub seed: u64,
    pub time_fields_ms: f64,
    pub time_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunStats {
    pub faces: Vec<FaceStats>,
    pub totals: Totals,
}

impl RunStats {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }

    /// Copy with every timing zeroed, for reproducibility checks.
    pub fn without_timings(&self) -> RunStats {
        let mut s = self.clone();
        for f in &mut s.faces {
            f.time_init_ms = 0.0;
            f.time_improve_ms = 0.0;
        }
        s.totals.time_fields_ms = 0.0;
        s.totals.time_ms = 0.0;
        s
    }
}

/// Background triangulation of one face with its fields.
#[derive(Debug, Clone)]
pub struct FaceFields {
    /// `size` holds the blended coarse size, `h` the conformal scaling
    /// exponent and `theta` the cross angle per edge.
    pub background: TriMesh,
    pub field: CrossField,
    pub singularities: Vec<Singularity>,
}

#[derive(Debug, Clone)]
pub struct FaceResult {
    pub mesh: QuadMesh,
    /// The initial unstructured mesh, also the fallback.
    pub unstructured: QuadMesh,
    pub fields: FaceFields,
    pub stats: FaceStats,
}

#[derive(Debug, Clone)]
pub struct Output {
    pub faces: Vec<FaceResult>,
    /// All face meshes with shared boundary vertices merged.
    pub mesh: QuadMesh,
    pub curves: Vec<CurveQuantization>,
    pub stats: RunStats,
}

impl Output {
    /// Whether every face mesh is valid with positive minimum SICN.
    pub fn success(&self) -> bool {
        self.faces.iter().all(|f| f.stats.sicn_min > 0.0 && f.mesh.validate().is_ok())
    }

    pub fn singularities(&self) -> Vec<Singularity> {
        self.faces.iter().flat_map(|f| f.fields.singularities.iter().copied()).collect()
    }
}

fn key(p: &Point) -> (u64, u64) {
    (p.x.to_bits(), p.y.to_bits())
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

/// Runs the whole pipeline on `model`.
pub fn run(model: &PlanarModel, config: &Config, catalogue: &Catalogue, table: &DiskTable) -> Result<Output> {
    let start = Instant::now();
    model.validate()?;
    let nf = model.faces.len();
    if nf == 0 {
        return Err(Error::Input("model has no faces".into()));
    }
    let bb = BBox::of(model.curves.iter().flat_map(|c| c.pts.iter()));
    let h0 = bb.diagonal() / BACKGROUND_DIVISIONS;
    let samples = sample_curves_with_arclength(model, h0)?;
    let chains: Vec<Vec<Point>> = samples.iter().map(|(p, _)| p.clone()).collect();
    let budgets = face_quad_budget(model, config.target_quads.max(nf));

    let fields: Vec<Result<FaceFields>> =
        par::map((0..nf).collect(), config.jobs, |f| face_fields(model, f, &chains, h0, budgets[f], config));
    let mut fields: Vec<FaceFields> = fields.into_iter().collect::<Result<_>>()?;
    let index = CurveIndex::new(model);
    let s_min: Vec<Vec<f64>> = fields.iter().map(|ff| feature_size(model, &index, &ff.background)).collect();
    let mut backgrounds: Vec<TriMesh> = fields.iter_mut().map(|ff| std::mem::replace(&mut ff.background, empty_trimesh())).collect();
    blend_global(&mut backgrounds, &s_min, config.g_max);
    for (ff, bg) in fields.iter_mut().zip(backgrounds) {
        ff.background = bg;
    }

    let curve_sizes = curve_size_samples(model, &samples, &fields);
    let curves = quantize(model, &|c, t| interpolate(&curve_sizes[c], t));
    let fine: Vec<Vec<Point>> = curves.iter().map(|q| q.points.clone()).collect();
    let coarse: Vec<Vec<Point>> = curves.iter().map(|q| q.coarse_points()).collect();
    let mut midpoints: HashMap<((u64, u64), (u64, u64)), (Point, usize)> = HashMap::new();
    for (c, q) in curves.iter().enumerate() {
        for k in 0..q.count {
            let (a, b) = (key(&q.points[2 * k]), key(&q.points[2 * k + 2]));
            let pair = if a < b { (a, b) } else { (b, a) };
            midpoints.insert(pair, (q.points[2 * k + 1], c));
        }
    }
    let time_fields = start.elapsed();
    info!("fields and quantization: {:.1} ms", ms(time_fields));

    let ctx = FaceContext { model, config, catalogue, table, fine: &fine, coarse: &coarse, midpoints: &midpoints };
    let results: Vec<Result<FaceResult>> =
        par::map(fields.into_iter().enumerate().collect(), config.jobs, |(f, ff)| mesh_face(&ctx, f, ff, budgets[f]));
    let faces: Vec<FaceResult> = results.into_iter().collect::<Result<_>>()?;
    let mesh = merge(&faces);
    let (sicn_min, sicn_avg) = if mesh.n_quads() > 0 { mesh.sicn_stats() } else { (0.0, 0.0) };
    let totals = Totals {
        n_vert: mesh.n_used_vertices(),
        n_quad: mesh.n_quads(),
        sicn_min,
        sicn_avg,
        irregular_init: faces.iter().map(|f| f.stats.irregular_init).sum(),
        irregular_final: faces.iter().map(|f| f.stats.irregular_final).sum(),
        quality_drops: faces
            .iter()
            .map(|f| f.stats.smoothing_drops + f.stats.repair.quality_drops + f.stats.strategy.quality_drops)
            .sum(),
        seed: config.seed,
        time_fields_ms: ms(time_fields),
        time_ms: ms(start.elapsed()),
    };
    let stats = RunStats { faces: faces.iter().map(|f| f.stats.clone()).collect(), totals };
    Ok(Output { faces, mesh, curves, stats })
}

fn empty_trimesh() -> TriMesh {
    TriMesh::new(Vec::new(), Vec::new(), Vec::new()).expect("empty mesh")
}

/// Background triangulation, cross field, singularities and the conformal
/// size of one face. The coarse size is twice the final edge length.
fn face_fields(
    model: &PlanarModel,
    face: usize,
    chains: &[Vec<Point>],
    h0: f64,
    budget: usize,
    config: &Config,
) -> Result<FaceFields> {
    let mut tri = triangulate_face(model, face, chains, &|_| h0)?;
    let mut params = MboParams { levels: config.levels.max(1), ..MboParams::default() };
    let (mut field, mut singularities) = solve_field(&tri, &params, face)?;
    let (found, expected) = index_balance(model, face, &singularities);
    if found != expected {
        // singularities can settle inside the fixed boundary layer
        params.extend_boundary = false;
        let (f2, s2) = solve_field(&tri, &params, face)?;
        if index_balance(model, face, &s2).0 == expected {
            debug!("face {face}: singularities recovered without boundary extension");
            field = f2;
            singularities = s2;
        }
    }
    check_index_balance(model, face, &singularities);
    augment_acute_corners(model, face, &mut singularities);
    let scaling = conformal_scaling(&tri, &field, budget as f64)?;
    tri.theta = field.phi.clone();
    tri.size = (0..tri.n_vertices()).map(|v| 2.0 * scaling.size_at_vertex(v)).collect();
    tri.h = scaling.h;
    apply_hints(model, &mut tri);
    Ok(FaceFields { background: tri, field, singularities })
}

fn solve_field(tri: &TriMesh, params: &MboParams, face: usize) -> Result<(CrossField, Vec<Singularity>)> {
    let (field, report) = mbo_solve(tri, params)?;
    debug!("face {face}: MBO {} iterations", report.total_iterations);
    let (singularities, diagnostics) = detect_singularities(tri, &field);
    for d in diagnostics {
        debug!("face {face}: {d}");
    }
    Ok((field, singularities))
}

/// Blended size at every background chain sample, per curve, as
/// `(arclength, size)` pairs.
fn curve_size_samples(
    model: &PlanarModel,
    samples: &[(Vec<Point>, Vec<f64>)],
    fields: &[FaceFields],
) -> Vec<Vec<(f64, f64)>> {
    let mut at: HashMap<(u64, u64), f64> = HashMap::new();
    for ff in fields {
        let bg = &ff.background;
        for v in 0..bg.n_vertices() {
            if !bg.kinds[v].is_interior() {
                let e = at.entry(key(&bg.points[v])).or_insert(f64::INFINITY);
                *e = e.min(bg.size[v]);
            }
        }
    }
    let faces_of = model.curve_faces();
    samples
        .iter()
        .enumerate()
        .map(|(c, (pts, arc))| {
            pts.iter()
                .zip(arc)
                .map(|(p, &t)| {
                    let s = at.get(&key(p)).copied().unwrap_or_else(|| {
                        // not a background vertex: sample the first adjacent face
                        let bg = &fields[faces_of[c][0]];
                        let back = Background::new(&bg.background, &bg.field);
                        back.sample_nearest(p).1
                    });
                    (t, s)
                })
                .collect()
        })
        .collect()
}

/// Piecewise linear interpolation of `(t, value)` samples sorted by `t`.
fn interpolate(samples: &[(f64, f64)], t: f64) -> f64 {
    let k = samples.partition_point(|s| s.0 < t);
    if k == 0 {
        return samples[0].1;
    }
    if k == samples.len() {
        return samples[k - 1].1;
    }
    let (a, b) = (samples[k - 1], samples[k]);
    let w = if b.0 > a.0 { (t - a.0) / (b.0 - a.0) } else { 0.0 };
    a.1 + (b.1 - a.1) * w
}

struct FaceContext<'a> {
    model: &'a PlanarModel,
    config: &'a Config,
    catalogue: &'a Catalogue,
    table: &'a DiskTable,
    fine: &'a [Vec<Point>],
    coarse: &'a [Vec<Point>],
    midpoints: &'a HashMap<((u64, u64), (u64, u64)), (Point, usize)>,
}

/// Frontal points, triangle merging and midpoint subdivision, then one
/// smoothing pass (with untangling if the subdivision inverted quads).
pub fn unstructured_face(
    model: &PlanarModel,
    face: usize,
    coarse: &[Vec<Point>],
    midpoint: &dyn Fn(&Point, &Point) -> Option<(Point, usize)>,
    background: &Background,
    max_points: usize,
) -> Result<QuadMesh> {
    let loops = face_boundary(model, face, coarse);
    let mut kernel = Kernel::new(&loops)?;
    frontal_insert(&mut kernel, &|p| background.sample(p), &|p| background.sample_nearest(p), max_points);
    let tri = kernel.to_trimesh()?;
    let mixed = combine_quads(&tri, &|p| background.sample_nearest(p).0);
    debug!("face {face}: {} quads and {} triangles merged", mixed.quads.len(), mixed.tris.len());
    let sub = midpoint_subdivide(&mixed, &|a, b| midpoint(&mixed.points[a], &mixed.points[b]))?;
    if !sub.reverted.is_empty() {
        warn!("face {face}: {} boundary midpoints left off their curve", sub.reverted.len());
    }
    let mut mesh = sub.mesh;
    let all: Vec<usize> = mesh.quad_ids().collect();
    if mesh.min_sicn() <= 0.0 {
        let free: Vec<usize> = (0..mesh.n_points()).filter(|&v| mesh.kinds[v].is_interior()).collect();
        untangle_local(&mut mesh, &free, UNTANGLE_BUDGET);
    }
    smooth_loop(&mut mesh, &all, &SmoothParams::default());
    Ok(mesh)
}

fn mesh_face(ctx: &FaceContext, face: usize, fields: FaceFields, budget: usize) -> Result<FaceResult> {
    let t0 = Instant::now();
    let model = ctx.model;
    let chi = model.faces[face].euler_characteristic();
    let back = Background::new(&fields.background, &fields.field);
    let midpoint = |a: &Point, b: &Point| {
        let (ka, kb) = (key(a), key(b));
        ctx.midpoints.get(&if ka < kb { (ka, kb) } else { (kb, ka) }).copied()
    };
    let max_points = 20 * budget + 1000;
    let unstructured = unstructured_face(model, face, ctx.coarse, &midpoint, &back, max_points)?;
    let irregular_init = unstructured.irregular_count();
    let time_init = t0.elapsed();

    let t1 = Instant::now();
    let mut repair = RepairStats::default();
    let mut strategy = StrategyStats::default();
    let mut smoothing_drops = 0;
    let mut method = Method::Unstructured;
    let mut mesh = unstructured.clone();
    let premeshed = if ctx.config.premesh { premesh_simple_face(model, face, ctx.fine, ctx.catalogue) } else { None };
    if let Some(p) = premeshed {
        mesh = p;
        method = Method::Premesh;
    } else if ctx.config.improve {
        let mut m = unstructured.clone();
        repair = repair_defects(&mut m, ctx.table, REPAIR_PASSES);
        let size = |p: &Point| 0.5 * back.sample_nearest(p).1;
        let mut preserved: HashSet<usize> = match_singularities(&m, &fields.singularities, &size).into_iter().collect();
        let params = StrategyParams { max_time: ctx.config.max_time_per_face, ..StrategyParams::default() };
        strategy = quasi_structure_face(&mut m, &mut preserved, ctx.catalogue, params);
        let all: Vec<usize> = m.quad_ids().collect();
        let report = smooth_loop(&mut m, &all, &SmoothParams::default());
        smoothing_drops += usize::from(report.accepted && report.min_after < report.min_before);
        m.compact();
        let census_ok = index_census(&m, chi).and_then(|c| c.check()).is_ok();
        if m.validate().is_ok() && census_ok && m.min_sicn() > 0.0 {
            mesh = m;
            method = Method::QuasiStructured;
        } else {
            warn!("face {face}: improved mesh rejected, keeping the unstructured mesh");
        }
    }
    let time_improve = t1.elapsed();
    let (sicn_min, sicn_avg) = if mesh.n_quads() > 0 { mesh.sicn_stats() } else { (0.0, 0.0) };
    let stats = FaceStats {
        id: face,
        method,
        n_vert: mesh.n_used_vertices(),
        n_quad: mesh.n_quads(),
        sicn_min,
        sicn_avg,
        irregular_init,
        irregular_final: mesh.irregular_count(),
        singularities: fields.singularities.len(),
        repair,
        strategy,
        smoothing_drops,
        time_init_ms: ms(time_init),
        time_improve_ms: ms(time_improve),
    };
    info!(
        "face {face}: {:?}, {} quads, irregular {} -> {}, SICN min {:.3} avg {:.3}",
        method, stats.n_quad, irregular_init, stats.irregular_final, sicn_min, sicn_avg
    );
    Ok(FaceResult { mesh, unstructured, fields, stats })
}

/// Concatenates the face meshes, identifying boundary vertices with equal
/// coordinates.
pub fn merge(faces: &[FaceResult]) -> QuadMesh {
    let mut points = Vec::new();
    let mut kinds = Vec::new();
    let mut quads = Vec::new();
    let mut shared: HashMap<(u64, u64), usize> = HashMap::new();
    for f in faces {
        let m = &f.mesh;
        let mut map = vec![usize::MAX; m.n_points()];
        for v in 0..m.n_points() {
            if !m.is_used(v) {
                continue;
            }
            let p = m.points[v];
            let id = if m.kinds[v].is_interior() {
                None
            } else {
                shared.get(&key(&p)).copied()
            };
            map[v] = id.unwrap_or_else(|| {
                points.push(p);
                kinds.push(m.kinds[v]);
                if !m.kinds[v].is_interior() {
                    shared.insert(key(&p), points.len() - 1);
                }
                points.len() - 1
            });
        }
        quads.extend(m.quads().map(|q| q.map(|v| map[v])));
    }
    // vertices on shared curves are interior to the merged mesh
    let mut merged = QuadMesh::new(points, kinds, quads);
    let boundary: HashSet<usize> = merged.boundary_edges().into_iter().flat_map(|(a, b)| [a, b]).collect();
    for v in 0..merged.n_points() {
        if matches!(merged.kinds[v], VertexKind::Curve { .. }) && !boundary.contains(&v) {
            merged.kinds[v] = VertexKind::Interior;
        }
    }
    merged
}
