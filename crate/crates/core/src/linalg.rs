//! Sparse symmetric systems: CSR storage, preconditioned conjugate gradient,
//! and a dense fallback for small problems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Csr {
    pub n: usize,
    pub start: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Csr {
    /// Builds from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Self {
        t.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut start = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = (usize::MAX, usize::MAX);
        for (r, c, v) in t {
            if (r, c) == last {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                vals.push(v);
                start[r + 1] += 1;
                last = (r, c);
            }
        }
        for i in 0..n {
            start[i + 1] += start[i];
        }
        Csr { n, start, cols, vals }
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.start[i]..self.start[i + 1]).map(move |k| (self.cols[k], self.vals[k]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|&(c, _)| c == j).map_or(0.0, |(_, v)| v)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.start[i]..self.start[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            y[i] = s;
        }
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mut y = vec![0.0; self.n];
        self.mul(x, &mut y);
        dot(x, &y)
    }

    /// `self + diag(d)`; the diagonal must be present in the pattern.
    pub fn plus_diagonal(&self, d: &[f64]) -> Csr {
        let mut out = self.clone();
        for i in 0..self.n {
            for k in out.start[i]..out.start[i + 1] {
                if out.cols[k] == i {
                    out.vals[k] += d[i];
                }
            }
        }
        out
    }

    /// Rows and columns of the free unknowns. `index[i]` is the reduced
    /// index of unknown `i`, or `None` when it is fixed.
    pub fn restrict(&self, index: &[Option<usize>], n_free: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..self.n {
            if let Some(ri) = index[i] {
                for (c, v) in self.row(i) {
                    if let Some(rc) = index[c] {
                        t.push((ri, rc, v));
                    }
                }
            }
        }
        Csr::from_triplets(n_free, t)
    }

    /// For each free row, the product of the fixed columns with `x`.
    pub fn fixed_part(&self, index: &[Option<usize>], n_free: usize, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; n_free];
        for i in 0..self.n {
            if let Some(ri) = index[i] {
                for (c, v) in self.row(i) {
                    if index[c].is_none() {
                        out[ri] += v * x[c];
                    }
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (c, v) in self.row(i) {
                m[(i, c)] += v;
            }
        }
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct Jacobi {
    inv: Vec<f64>,
}

impl Jacobi {
    pub fn new(a: &Csr) -> Self {
        Jacobi {
            inv: a
                .diagonal()
                .into_iter()
                .map(|d| if d != 0.0 { 1.0 / d } else { 1.0 })
                .collect(),
        }
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for i in 0..r.len() {
            z[i] = r[i] * self.inv[i];
        }
    }
}

/// Zero fill-in incomplete Cholesky factor, stored by rows of `L`.
pub struct Ic0 {
    l: Csr,
    diag: Vec<f64>,
}

impl Ic0 {
    /// Returns `None` when a pivot breaks down.
    pub fn new(a: &Csr) -> Option<Self> {
        let n = a.n;
        let mut t = Vec::new();
        for i in 0..n {
            for (c, v) in a.row(i) {
                if c < i {
                    t.push((i, c, v));
                }
            }
        }
        let mut l = Csr::from_triplets(n, t);
        let mut diag = vec![0.0; n];
        for i in 0..n {
            for k in l.start[i]..l.start[i + 1] {
                let j = l.cols[k];
                // sparse dot of rows i and j over columns < j
                let mut s = 0.0;
                let (mut p, mut q) = (l.start[i], l.start[j]);
                while p < k && q < l.start[j + 1] {
                    let (cp, cq) = (l.cols[p], l.cols[q]);
                    if cp == cq {
                        s += l.vals[p] * l.vals[q];
                        p += 1;
                        q += 1;
                    } else if cp < cq {
                        p += 1;
                    } else {
                        q += 1;
                    }
                }
                l.vals[k] = (l.vals[k] - s) / diag[j];
            }
            let sq: f64 = (l.start[i]..l.start[i + 1]).map(|k| l.vals[k] * l.vals[k]).sum();
            let d = a.get(i, i) - sq;
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            diag[i] = d.sqrt();
        }
        Some(Ic0 { l, diag })
    }
}

impl Preconditioner for Ic0 {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        let l = &self.l;
        for i in 0..l.n {
            let mut s = r[i];
            for (c, v) in l.row(i) {
                s -= v * z[c];
            }
            z[i] = s / self.diag[i];
        }
        for i in (0..l.n).rev() {
            z[i] /= self.diag[i];
            let zi = z[i];
            for (c, v) in l.row(i) {
                z[c] -= v * zi;
            }
        }
    }
}

/// IC0 when it exists, Jacobi otherwise.
pub enum AutoPrecond {
    Ic0(Ic0),
    Jacobi(Jacobi),
}

impl AutoPrecond {
    pub fn new(a: &Csr) -> Self {
        match Ic0::new(a) {
            Some(p) => AutoPrecond::Ic0(p),
            None => AutoPrecond::Jacobi(Jacobi::new(a)),
        }
    }
}

impl Preconditioner for AutoPrecond {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            AutoPrecond::Ic0(p) => p.apply(r, z),
            AutoPrecond::Jacobi(p) => p.apply(r, z),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CgStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Preconditioned CG on `a x = b`, starting from `x`. Converged when the
/// residual norm drops below `tol * |b|`.
pub fn pcg(
    a: &Csr,
    b: &[f64],
    x: &mut [f64],
    pre: &dyn Preconditioner,
    tol: f64,
    max_iter: usize,
) -> Result<CgStats> {
    let n = a.n;
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(CgStats { iterations: 0, residual: 0.0 });
    }
    let mut r = vec![0.0; n];
    a.mul(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = dot(&r, &r).sqrt();
    let mut it = 0;
    while res > tol * bnorm && it < max_iter {
        a.mul(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = dot(&r, &r).sqrt();
        it += 1;
        if res <= tol * bnorm {
            break;
        }
        pre.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = res / bnorm;
    if rel > tol.max(1e-6) * 10.0 {
        return Err(Error::Numeric(format!(
            "conjugate gradient stalled after {it} iterations, relative residual {rel:.3e}"
        )));
    }
    Ok(CgStats { iterations: it, residual: rel })
}

/// Dense LU solve for small systems.
pub fn dense_solve(a: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let lu = a.clone().lu();
    lu.solve(&DVector::from_column_slice(b))
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| Error::Numeric("singular dense system".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplace_1d(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i > 0 {
                t.push((i, i - 1, -1.0));
            }
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
            }
        }
        Csr::from_triplets(n, t)
    }

    #[test]
    fn duplicates_are_summed() {
        let a = Csr::from_triplets(2, vec![(0, 0, 1.0), (0, 0, 2.0), (1, 1, 1.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.cols.len(), 2);
    }

    #[test]
    fn ic0_is_exact_for_tridiagonal() {
        let a = laplace_1d(20);
        let p = Ic0::new(&a).unwrap();
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let mut z = vec![0.0; 20];
        p.apply(&b, &mut z);
        let mut az = vec![0.0; 20];
        a.mul(&z, &mut az);
        for i in 0..20 {
            assert!((az[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn pcg_matches_dense() {
        let a = laplace_1d(50).plus_diagonal(&vec![0.1; 50]);
        let b: Vec<f64> = (0..50).map(|i| 1.0 + (i % 3) as f64).collect();
        let mut x = vec![0.0; 50];
        pcg(&a, &b, &mut x, &Jacobi::new(&a), 1e-12, 500).unwrap();
        let xd = dense_solve(&a.to_dense(), &b).unwrap();
        for i in 0..50 {
            assert!((x[i] - xd[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn restrict_and_fixed_part() {
        let a = laplace_1d(3);
        let index = vec![None, Some(0), None];
        let r = a.restrict(&index, 1);
        assert_eq!(r.get(0, 0), 2.0);
        let f = a.fixed_part(&index, 1, &[1.0, 0.0, 3.0]);
        assert_eq!(f, vec![-4.0]);
    }
}
