//! Euler characteristic and vertex index census of quad meshes.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;

use super::QuadMesh;
use crate::error::{Error, Result};

/// Counts of interior (`n_k`) and boundary (`m_k`) vertices per index `k`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VertexIndexCensus {
    pub interior: BTreeMap<i32, usize>,
    pub boundary: BTreeMap<i32, usize>,
    pub chi: i64,
}

impl VertexIndexCensus {
    pub fn n(&self, k: i32) -> usize {
        self.interior.get(&k).copied().unwrap_or(0)
    }

    pub fn m(&self, k: i32) -> usize {
        self.boundary.get(&k).copied().unwrap_or(0)
    }

    /// `sum_k k (n_k + m_k)`, which must equal `4 chi`.
    pub fn weighted_sum(&self) -> i64 {
        self.interior
            .iter()
            .chain(self.boundary.iter())
            .map(|(&k, &c)| k as i64 * c as i64)
            .sum()
    }

    /// Sum of interior indices.
    pub fn interior_index_sum(&self) -> i64 {
        self.interior.iter().map(|(&k, &c)| k as i64 * c as i64).sum()
    }

    pub fn interior_irregular(&self) -> usize {
        self.interior.iter().filter(|(&k, _)| k != 0).map(|(_, &c)| c).sum()
    }

    pub fn check(&self) -> Result<()> {
        if self.weighted_sum() == 4 * self.chi {
            return Ok(());
        }
        Err(Error::Invariant(format!(
            "index census violated: n1={} n-1={} m1={} m-1={} m-2={} chi={} (sum k(n_k+m_k)={} != {})",
            self.n(1),
            self.n(-1),
            self.m(1),
            self.m(-1),
            self.m(-2),
            self.chi,
            self.weighted_sum(),
            4 * self.chi
        )))
    }
}

/// `n - n_e + n_f` over used vertices and alive quads.
pub fn euler_characteristic(mesh: &QuadMesh) -> Result<i64> {
    mesh.validate()?;
    Ok(mesh.n_used_vertices() as i64 - mesh.n_edges() as i64 + mesh.n_quads() as i64)
}

/// Census of a mesh covering one face. `chi` is the face's Euler
/// characteristic; the identity is checked and a violation is an error.
pub fn index_census(mesh: &QuadMesh, chi: i64) -> Result<VertexIndexCensus> {
    let mut c = VertexIndexCensus { chi, ..Default::default() };
    for v in 0..mesh.n_points() {
        if !mesh.is_used(v) {
            continue;
        }
        let k = mesh.vertex_index(v);
        let slot = if mesh.kinds[v].is_interior() { &mut c.interior } else { &mut c.boundary };
        *slot.entry(k).or_insert(0) += 1;
    }
    c.check()?;
    Ok(c)
}

/// Census checks run by [`check_after_edit`] so far in this process.
pub static EDIT_CHECKS: AtomicUsize = AtomicUsize::new(0);

/// In debug builds, verifies the index identity of the whole mesh after an
/// accepted local edit and panics if it fails. No-op in release builds.
pub fn check_after_edit(mesh: &QuadMesh) {
    if cfg!(debug_assertions) {
        let chi = euler_characteristic(mesh).expect("edited mesh is valid");
        index_census(mesh, chi).and_then(|c| c.check()).expect("index identity after edit");
        EDIT_CHECKS.fetch_add(1, Ordering::Relaxed);
    }
}
