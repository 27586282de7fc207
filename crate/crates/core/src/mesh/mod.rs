pub mod census;
pub mod io;
pub mod quad;
pub mod quality;
pub mod tri;

pub use census::{check_after_edit, euler_characteristic, index_census, VertexIndexCensus};
pub use quad::QuadMesh;
pub use quality::{scaled_jacobian, sicn_quality};
pub use tri::{TriLocator, TriMesh};

/// Where a mesh vertex lives on the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexKind {
    Interior,
    Curve { curve: usize },
    /// `ideal` is the quad valence the corner should have on this face.
    Corner { corner: usize, ideal: u8 },
}

impl VertexKind {
    pub fn is_interior(&self) -> bool {
        matches!(self, VertexKind::Interior)
    }

    pub fn is_corner(&self) -> bool {
        matches!(self, VertexKind::Corner { .. })
    }

    /// Valence a vertex of this kind should have in a regular quad mesh.
    pub fn ideal_valence(&self) -> usize {
        match *self {
            VertexKind::Interior => 4,
            VertexKind::Curve { .. } => 2,
            VertexKind::Corner { ideal, .. } => ideal as usize,
        }
    }
}
