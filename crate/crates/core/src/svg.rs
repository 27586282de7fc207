//! SVG rendering of quad meshes with irregular vertices and singularities.

use std::fmt::Write;

use crate::crossfield::Singularity;
use crate::geom::BBox;
use crate::mesh::QuadMesh;

/// Marker colours by vertex index.
pub const INDEX_PLUS_ONE: &str = "#d62728";
pub const INDEX_MINUS_ONE: &str = "#1f77b4";
pub const INDEX_MINUS_TWO_OR_LESS: &str = "#9467bd";
pub const INDEX_OTHER: &str = "#ff7f0e";

#[derive(Debug, Clone, Copy)]
pub struct SvgOptions {
    /// Width of the drawing in pixels; the height follows the aspect ratio.
    pub width: f64,
    pub show_irregular: bool,
}

impl Default for SvgOptions {
    fn default() -> Self {
        SvgOptions { width: 800.0, show_irregular: true }
    }
}

fn index_colour(k: i32) -> &'static str {
    match k {
        1 => INDEX_PLUS_ONE,
        -1 => INDEX_MINUS_ONE,
        k if k <= -2 => INDEX_MINUS_TWO_OR_LESS,
        _ => INDEX_OTHER,
    }
}

pub fn render_svg(mesh: &QuadMesh, singularities: &[Singularity], opts: &SvgOptions) -> String {
    let used: Vec<usize> = (0..mesh.n_points()).filter(|&v| mesh.is_used(v)).collect();
    let mut bb = BBox::of(used.iter().map(|&v| &mesh.points[v]));
    for s in singularities {
        bb.add(&s.position);
    }
    let mut out = String::new();
    if used.is_empty() && singularities.is_empty() {
        writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0}" height="{0}" viewBox="0 0 1 1"/>"#, opts.width).unwrap();
        return out;
    }
    let span = (bb.max.x - bb.min.x).max(bb.max.y - bb.min.y).max(f64::MIN_POSITIVE);
    let scale = opts.width / span;
    let height = ((bb.max.y - bb.min.y) * scale).max(1.0);
    let pad = 10.0;
    let tx = |x: f64| pad + (x - bb.min.x) * scale;
    let ty = |y: f64| pad + (bb.max.y - y) * scale;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}">"#,
        opts.width + 2.0 * pad,
        height + 2.0 * pad
    )
    .unwrap();
    out.push_str("<g fill=\"#eef3f8\" stroke=\"#333\" stroke-width=\"0.6\">\n");
    for q in mesh.quads() {
        let pts: Vec<String> = q.iter().map(|&v| format!("{:.3},{:.3}", tx(mesh.points[v].x), ty(mesh.points[v].y))).collect();
        writeln!(out, r#"<polygon points="{}"/>"#, pts.join(" ")).unwrap();
    }
    out.push_str("</g>\n");
    if opts.show_irregular {
        out.push_str("<g class=\"irregular\">\n");
        for &v in &used {
            if !mesh.is_irregular(v) {
                continue;
            }
            let k = mesh.vertex_index(v);
            let p = mesh.points[v];
            writeln!(out, r#"<circle cx="{:.3}" cy="{:.3}" r="3" fill="{}" data-index="{k}"/>"#, tx(p.x), ty(p.y), index_colour(k)).unwrap();
        }
        out.push_str("</g>\n");
    }
    out.push_str("<g class=\"singularities\" fill=\"none\" stroke-width=\"1.5\">\n");
    for s in singularities {
        let (x, y) = (tx(s.position.x), ty(s.position.y));
        writeln!(
            out,
            r#"<rect x="{:.3}" y="{:.3}" width="8" height="8" stroke="{}" data-index="{}"/>"#,
            x - 4.0,
            y - 4.0,
            index_colour(s.index),
            s.index
        )
        .unwrap();
    }
    out.push_str("</g>\n</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::quad::tests::grid;
    use crate::mesh::VertexKind;

    #[test]
    fn empty_mesh() {
        let m = QuadMesh::new(Vec::new(), Vec::new(), Vec::new());
        let s = render_svg(&m, &[], &SvgOptions::default());
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("/>"));
        assert!(!s.contains("<polygon"));
    }

    #[test]
    fn four_quads() {
        let m = grid(2, 2);
        let s = render_svg(&m, &[], &SvgOptions::default());
        assert_eq!(s.matches("<polygon").count(), 4);
        assert_eq!(s.matches("<circle").count(), 0);
    }

    #[test]
    fn valence_five_marker() {
        // five quads around a centre
        use crate::geom::pt;
        use std::f64::consts::TAU;
        let mut pts = vec![pt(0.0, 0.0)];
        for k in 0..10 {
            let a = TAU * k as f64 / 10.0;
            let r = if k % 2 == 0 { 1.0 } else { 1.3 };
            pts.push(pt(r * a.cos(), r * a.sin()));
        }
        let mut kinds = vec![VertexKind::Curve { curve: 0 }; 11];
        kinds[0] = VertexKind::Interior;
        for k in (2..11).step_by(2) {
            kinds[k] = VertexKind::Corner { corner: k, ideal: 1 };
        }
        let quads = (0..5).map(|k| [0, 2 * k + 1, 2 * k + 2, (2 * k + 2) % 10 + 1]).collect();
        let m = QuadMesh::new(pts, kinds, quads);
        m.validate().unwrap();
        let s = render_svg(&m, &[], &SvgOptions::default());
        assert_eq!(s.matches(INDEX_MINUS_ONE).count(), 1);
        assert_eq!(s.matches("<circle").count(), 1);
    }
}
