//! Integer edge counts per curve and placement of curve mesh vertices.

use serde::Serialize;

use crate::geom::Point;
use crate::model::PlanarModel;
use crate::triangulate::{cumulative_length, point_at_length};

/// Quadrature samples per polyline segment.
const SAMPLES_PER_SEGMENT: usize = 32;

/// Ideal counts further apart than this ratio are not equalised.
pub const CHORD_RATIO: f64 = 2.0;

#[derive(Debug, Clone, Serialize)]
pub struct CurveQuantization {
    pub ideal: f64,
    pub count: usize,
    pub chord: Option<usize>,
    /// Arclength of the `2 * count + 1` fine vertices, endpoints included.
    pub params: Vec<f64>,
    #[serde(skip)]
    pub points: Vec<Point>,
}

impl CurveQuantization {
    /// Vertices of the coarse discretization (every other fine vertex).
    pub fn coarse_points(&self) -> Vec<Point> {
        self.points.iter().step_by(2).copied().collect()
    }
}

/// Arclength samples along a polyline and the running integral of `1/s`.
pub fn inverse_size_integral(pts: &[Point], size: &dyn Fn(f64) -> f64) -> (Vec<f64>, Vec<f64>) {
    let acc = cumulative_length(pts);
    let mut arc = vec![0.0];
    let mut integral = vec![0.0];
    let mut prev = 1.0 / size(0.0);
    for w in acc.windows(2) {
        let h = (w[1] - w[0]) / SAMPLES_PER_SEGMENT as f64;
        for k in 1..=SAMPLES_PER_SEGMENT {
            let t = w[0] + h * k as f64;
            let cur = 1.0 / size(t);
            integral.push(integral.last().unwrap() + 0.5 * h * (prev + cur));
            arc.push(t);
            prev = cur;
        }
    }
    (arc, integral)
}

/// `int dl / s` along the polyline; `size` takes an arclength.
pub fn ideal_edge_count(pts: &[Point], size: &dyn Fn(f64) -> f64) -> f64 {
    *inverse_size_integral(pts, size).1.last().unwrap()
}

/// Arclengths `t_0 = 0 < t_1 < ... < t_n = L` with equal `1/s` integral
/// between consecutive values.
pub fn place_params(pts: &[Point], n: usize, size: &dyn Fn(f64) -> f64) -> Vec<f64> {
    let (arc, integral) = inverse_size_integral(pts, size);
    let total = *integral.last().unwrap();
    let length = *arc.last().unwrap();
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut k = 1;
    for i in 1..n {
        let target = total * i as f64 / n as f64;
        while k < integral.len() - 1 && integral[k] < target {
            k += 1;
        }
        let (i0, i1) = (integral[k - 1], integral[k]);
        let f = if i1 > i0 { (target - i0) / (i1 - i0) } else { 0.0 };
        out.push(arc[k - 1] + f * (arc[k] - arc[k - 1]));
    }
    out.push(length);
    out
}

/// Interior curve vertices `x_1 .. x_{n-1}` for `n` edges.
pub fn place_curve_vertices(pts: &[Point], n: usize, size: &dyn Fn(f64) -> f64) -> Vec<Point> {
    let acc = cumulative_length(pts);
    let params = place_params(pts, n, size);
    params[1..n].iter().map(|&t| point_at_length(pts, &acc, t)).collect()
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Pairs of opposite curves in faces bounded by a single loop of exactly
/// four curves.
pub fn opposite_pairs(model: &PlanarModel) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for f in &model.faces {
        if f.loops.len() == 1 && f.loops[0].len() == 4 {
            let lp = &f.loops[0];
            for k in 0..2 {
                let (a, b) = (lp[k].curve, lp[k + 2].curve);
                if a != b {
                    out.push((a, b));
                }
            }
        }
    }
    out
}

/// Chord id per curve; curves outside any multi-curve chord get `None`.
/// Opposite pairs whose ideal counts differ by more than `CHORD_RATIO` are
/// not joined.
pub fn build_chords(model: &PlanarModel, ideal: &[f64]) -> Vec<Option<usize>> {
    let n = model.curves.len();
    let mut uf = UnionFind((0..n).collect());
    for (a, b) in opposite_pairs(model) {
        let (lo, hi) = (ideal[a].min(ideal[b]), ideal[a].max(ideal[b]));
        if hi <= CHORD_RATIO * lo {
            uf.union(a, b);
        }
    }
    let roots: Vec<usize> = (0..n).map(|c| uf.find(c)).collect();
    let mut ids = std::collections::BTreeMap::new();
    for c in 0..n {
        if roots.iter().filter(|&&r| r == roots[c]).count() > 1 {
            let next = ids.len();
            ids.entry(roots[c]).or_insert(next);
        }
    }
    roots.iter().map(|r| ids.get(r).copied()).collect()
}

/// Rounds ideal counts, averaging within chords, with at least one edge
/// per curve, three per closed curve and three per face loop.
pub fn integer_counts(model: &PlanarModel, ideal: &[f64], chords: &[Option<usize>]) -> Vec<usize> {
    let n = model.curves.len();
    let mut counts = vec![0usize; n];
    let mut done = vec![false; n];
    for c in 0..n {
        if done[c] {
            continue;
        }
        let members: Vec<usize> = match chords[c] {
            Some(id) => (0..n).filter(|&k| chords[k] == Some(id)).collect(),
            None => vec![c],
        };
        let mean = members.iter().map(|&k| ideal[k]).sum::<f64>() / members.len() as f64;
        let mut v = (mean.round() as usize).max(1);
        if members.iter().any(|&k| model.curves[k].is_closed()) {
            v = v.max(3);
        }
        for &k in &members {
            counts[k] = v;
            done[k] = true;
        }
    }
    for f in &model.faces {
        for lp in &f.loops {
            let total: usize = lp.iter().map(|r| counts[r.curve]).sum();
            if total < 3 {
                let mut longest = lp[0].curve;
                for r in lp {
                    if model.curves[r.curve].length() > model.curves[longest].length() {
                        longest = r.curve;
                    }
                }
                counts[longest] += 3 - total;
            }
        }
    }
    counts
}

/// Full quantization: ideal counts, chords, integer counts and the fine
/// vertex placement with `2 * count` edges per curve. `size(curve, t)` is
/// the coarse target size at arclength `t`.
pub fn quantize(model: &PlanarModel, size: &dyn Fn(usize, f64) -> f64) -> Vec<CurveQuantization> {
    let ideal: Vec<f64> = model
        .curves
        .iter()
        .enumerate()
        .map(|(i, c)| ideal_edge_count(&c.pts, &|t| size(i, t)))
        .collect();
    let chords = build_chords(model, &ideal);
    let counts = integer_counts(model, &ideal, &chords);
    model
        .curves
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let params = place_params(&c.pts, 2 * counts[i], &|t| size(i, t));
            let acc = cumulative_length(&c.pts);
            let mut points: Vec<Point> = params.iter().map(|&t| point_at_length(&c.pts, &acc, t)).collect();
            points[0] = c.pts[0];
            *points.last_mut().unwrap() = *c.pts.last().unwrap();
            CurveQuantization { ideal: ideal[i], count: counts[i], chord: chords[i], params, points }
        })
        .collect()
}
