//! Quasi-structured quadrilateral meshing of planar multi-face models.
//!
//! The pipeline builds a boundary-aligned cross field on a triangulation of
//! each face, derives a size map from its conformal scaling, quantizes the
//! model curves, produces a valid unstructured quad mesh and then improves
//! its topology by remeshing cavities with coarse patterns and small disk
//! quadrangulations.

pub mod cavity;
pub mod crossfield;
pub mod diskquad;
pub mod error;
pub mod geom;
pub mod linalg;
pub mod mesh;
pub mod model;
pub mod par;
pub mod patterns;
pub mod pipeline;
pub mod quantize;
pub mod sizing;
pub mod smoothing;
pub mod svg;
pub mod triangulate;
pub mod unstructured;

pub use error::{Error, Result};
pub use model::PlanarModel;
