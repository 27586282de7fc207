//! Independent enumeration of disk quadrangulations used as a test oracle.
//! It shares no code with the library enumerator.

use std::collections::HashSet;

/// Independent enumeration: exact cover of directed half-edges by quads,
/// starting from the boundary cycle, deduplicated by brute-force
/// isomorphism over boundary alignments and interior permutations.
pub fn oracle(b: usize, i: usize) -> Vec<Vec<[usize; 4]>> {
    let n = b + i;
    let f = b / 2 + i - 1;
    let mut found: Vec<Vec<[usize; 4]>> = Vec::new();
    let mut used = vec![false; n * n];
    let boundary = |u: usize, v: usize| u < b && v == (u + 1) % b;
    let outside = |u: usize, v: usize| v < b && u == (v + 1) % b;
    fn manifold(b: usize, n: usize, quads: &[[usize; 4]]) -> bool {
        let mut left = vec![usize::MAX; n * n];
        let mut val = vec![0; n];
        for q in quads {
            for k in 0..4 {
                left[q[k] * n + q[(k + 1) % 4]] = q[(k + 3) % 4];
                val[q[k]] += 1;
            }
        }
        (0..n).all(|v| {
            if val[v] == 0 {
                return false;
            }
            let start = if v < b {
                (v + 1) % b
            } else {
                (0..n).find(|&w| left[v * n + w] != usize::MAX).unwrap()
            };
            let (mut w, mut steps) = (start, 0);
            while left[v * n + w] != usize::MAX {
                steps += 1;
                w = left[v * n + w];
                if w == start {
                    break;
                }
            }
            steps == val[v]
        })
    }
    // A corner cycle that closes must hold every quad at an interior vertex.
    fn fan_ok(b: usize, x: usize, quads: &[[usize; 4]]) -> bool {
        let corner = |q: &[usize; 4]| (0..4).find(|&k| q[k] == x).map(|k| (q[(k + 3) % 4], q[(k + 1) % 4]));
        let corners: Vec<(usize, usize)> = quads.iter().filter_map(corner).collect();
        let (_, start) = corners[corners.len() - 1];
        let mut out = start;
        for steps in 1..=corners.len() {
            let Some(&(p, _)) = corners.iter().find(|c| c.1 == out) else { return true };
            if p == start {
                return x >= b && steps == corners.len();
            }
            out = p;
        }
        true
    }
    #[allow(clippy::too_many_arguments)]
    fn rec(
        b: usize,
        n: usize,
        f: usize,
        introduced: usize,
        quads: &mut Vec<[usize; 4]>,
        used: &mut Vec<bool>,
        found: &mut Vec<Vec<[usize; 4]>>,
        boundary: &dyn Fn(usize, usize) -> bool,
        outside: &dyn Fn(usize, usize) -> bool,
    ) {
        // pending half-edges: unused boundary edges and twins of used interior ones
        let mut need = None;
        let mut pending = 0;
        let mut frontier = vec![false; n];
        let mut deg = vec![0usize; n];
        for q in quads.iter() {
            for &x in q {
                deg[x] += 1;
            }
        }
        for u in 0..n {
            for v in 0..n {
                if u == v || used[u * n + v] || outside(u, v) {
                    continue;
                }
                if boundary(u, v) || used[v * n + u] {
                    pending += 1;
                    frontier[u] = true;
                    frontier[v] = true;
                    // most constrained first: endpoints with the most quads
                    let score = deg[u] + deg[v];
                    if need.map_or(true, |(_, _, s)| score > s) {
                        need = Some((u, v, score));
                    }
                }
            }
        }
        let Some((u, v, _)) = need else {
            if quads.len() == f && introduced == n && manifold(b, n, quads) {
                found.push(quads.clone());
            }
            return;
        };
        // each new quad covering k pending edges changes the count by 4 - 2k,
        // and a quad bringing in fresh vertices covers at most 2 (1 with two)
        let r = f - quads.len();
        let fresh = n - introduced;
        let cover = pending + 4 * r;
        if r == 0 || cover % 2 == 1 || cover / 2 + 3 * (fresh / 2) + 2 * (fresh % 2) > 4 * r {
            return;
        }
        for w in 0..n {
            if w > introduced {
                break;
            }
            let after_w = introduced + usize::from(w == introduced);
            for z in 0..n {
                if z > after_w {
                    break;
                }
                if w == z || w == u || w == v || z == u || z == v {
                    continue;
                }
                // a vertex with a complete fan cannot take another quad
                if (w < introduced && !frontier[w]) || (z < introduced && !frontier[z]) {
                    continue;
                }
                let hs = [(v, w), (w, z), (z, u)];
                if hs.iter().any(|&(x, y)| used[x * n + y] || outside(x, y)) {
                    continue;
                }
                let intro = after_w + usize::from(z == after_w);
                for (x, y) in [(u, v), (v, w), (w, z), (z, u)] {
                    used[x * n + y] = true;
                }
                quads.push([u, v, w, z]);
                if [u, v, w, z].iter().all(|&x| fan_ok(b, x, quads)) {
                    rec(b, n, f, intro, quads, used, found, boundary, outside);
                }
                quads.pop();
                for (x, y) in [(u, v), (v, w), (w, z), (z, u)] {
                    used[x * n + y] = false;
                }
            }
        }
    }
    let mut quads = Vec::new();
    rec(b, n, f, b, &mut quads, &mut used, &mut found, &boundary, &outside);
    // isomorphism classes
    fn key(quads: &[[usize; 4]]) -> Vec<[usize; 4]> {
        let mut r: Vec<[usize; 4]> = quads
            .iter()
            .map(|q| {
                let k = (0..4).min_by_key(|&k| q[k]).unwrap();
                [q[k], q[(k + 1) % 4], q[(k + 2) % 4], q[(k + 3) % 4]]
            })
            .collect();
        r.sort_unstable();
        r
    }
    fn perms(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(k - 1) {
            for pos in 0..=p.len() {
                let mut q = p.clone();
                q.insert(pos, k - 1);
                out.push(q);
            }
        }
        out
    }
    let ps = perms(i);
    let mut classes: Vec<Vec<[usize; 4]>> = Vec::new();
    for cand in found {
        let mut images = HashSet::new();
        for rot in 0..b {
            for refl in [false, true] {
                for p in &ps {
                    let img: Vec<[usize; 4]> = cand
                        .iter()
                        .map(|q| {
                            let mut r = q.map(|v| {
                                if v < b {
                                    if refl { (rot + b - v) % b } else { (v + rot) % b }
                                } else {
                                    b + p[v - b]
                                }
                            });
                            if refl {
                                r.reverse();
                            }
                            r
                        })
                        .collect();
                    images.insert(key(&img));
                }
            }
        }
        if !classes.iter().any(|c| images.contains(&key(c))) {
            classes.push(cand);
        }
    }
    classes
}
