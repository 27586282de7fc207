//! OBJ and legacy ASCII VTK writers.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use super::{QuadMesh, TriMesh};
use crate::error::Result;

pub fn obj_string(mesh: &QuadMesh) -> String {
    let mut s = String::new();
    let mut map = vec![0usize; mesh.n_points()];
    let mut n = 0;
    for v in 0..mesh.n_points() {
        if mesh.is_used(v) {
            n += 1;
            map[v] = n;
            let p = mesh.points[v];
            writeln!(s, "v {} {} 0", p.x, p.y).unwrap();
        }
    }
    for q in mesh.quads() {
        writeln!(s, "f {} {} {} {}", map[q[0]], map[q[1]], map[q[2]], map[q[3]]).unwrap();
    }
    s
}

pub fn write_obj(mesh: &QuadMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::File::create(path)?.write_all(obj_string(mesh).as_bytes())?;
    Ok(())
}

/// Legacy VTK unstructured grid with quads (cell type 9) and per-vertex
/// valence as point data.
pub fn vtk_string(mesh: &QuadMesh) -> String {
    let mut s = String::new();
    let used: Vec<usize> = (0..mesh.n_points()).filter(|&v| mesh.is_used(v)).collect();
    let mut map = vec![0usize; mesh.n_points()];
    for (i, &v) in used.iter().enumerate() {
        map[v] = i;
    }
    s.push_str("# vtk DataFile Version 3.0\nquasiquad mesh\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", used.len()).unwrap();
    for &v in &used {
        let p = mesh.points[v];
        writeln!(s, "{} {} 0", p.x, p.y).unwrap();
    }
    let nq = mesh.n_quads();
    writeln!(s, "CELLS {} {}", nq, nq * 5).unwrap();
    for q in mesh.quads() {
        writeln!(s, "4 {} {} {} {}", map[q[0]], map[q[1]], map[q[2]], map[q[3]]).unwrap();
    }
    writeln!(s, "CELL_TYPES {nq}").unwrap();
    for _ in 0..nq {
        s.push_str("9\n");
    }
    writeln!(s, "POINT_DATA {}\nSCALARS valence int 1\nLOOKUP_TABLE default", used.len()).unwrap();
    for &v in &used {
        writeln!(s, "{}", mesh.valence(v)).unwrap();
    }
    s
}

pub fn write_vtk(mesh: &QuadMesh, path: impl AsRef<Path>) -> Result<()> {
    std::fs::File::create(path)?.write_all(vtk_string(mesh).as_bytes())?;
    Ok(())
}

/// Triangle mesh dump with the size and scaling fields as point data and the
/// cross direction as a cell vector.
pub fn trimesh_vtk_string(mesh: &TriMesh) -> String {
    let mut s = String::new();
    s.push_str("# vtk DataFile Version 3.0\nquasiquad fields\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    writeln!(s, "POINTS {} double", mesh.n_vertices()).unwrap();
    for p in &mesh.points {
        writeln!(s, "{} {} 0", p.x, p.y).unwrap();
    }
    let nt = mesh.tris.len();
    writeln!(s, "CELLS {} {}", nt, nt * 4).unwrap();
    for t in &mesh.tris {
        writeln!(s, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    writeln!(s, "CELL_TYPES {nt}").unwrap();
    for _ in 0..nt {
        s.push_str("5\n");
    }
    writeln!(s, "POINT_DATA {}", mesh.n_vertices()).unwrap();
    for (name, f) in [("size", &mesh.size), ("H", &mesh.h)] {
        writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default").unwrap();
        for x in f.iter() {
            writeln!(s, "{x}").unwrap();
        }
    }
    writeln!(s, "CELL_DATA {nt}\nVECTORS cross double").unwrap();
    for te in &mesh.tri_edges {
        // average the 4-theta representation of the three edges
        let (mut c, mut d) = (0.0, 0.0);
        for &e in te {
            c += (4.0 * mesh.theta[e]).cos();
            d += (4.0 * mesh.theta[e]).sin();
        }
        let th = d.atan2(c) / 4.0;
        writeln!(s, "{} {} 0", th.cos(), th.sin()).unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::pt;
    use crate::mesh::VertexKind;

    #[test]
    fn obj_is_one_based() {
        let m = QuadMesh::new(
            vec![pt(0., 0.), pt(1., 0.), pt(1., 1.), pt(0., 1.)],
            vec![VertexKind::Interior; 4],
            vec![[0, 1, 2, 3]],
        );
        let s = obj_string(&m);
        assert!(s.contains("f 1 2 3 4"));
        let v = vtk_string(&m);
        assert!(v.contains("CELL_TYPES 1\n9\n"));
    }
}
