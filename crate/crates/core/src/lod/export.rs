//! ASCII OBJ export for contours and meshes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::lod::{Mesh, Polyline};

/// Polylines as OBJ `l` elements in the `z = 0` plane. Closed polylines
/// repeat their first vertex index at the end.
pub fn polylines_to_obj(lines: &[Polyline]) -> String {
    let mut out = String::new();
    for line in lines {
        for p in &line.points {
            let _ = writeln!(out, "v {} {} 0", p[0], p[1]);
        }
    }
    let mut base = 1;
    for line in lines {
        let mut idx: Vec<String> = (0..line.points.len())
            .map(|i| (base + i).to_string())
            .collect();
        if line.closed && !idx.is_empty() {
            idx.push(base.to_string());
        }
        if idx.len() >= 2 {
            let _ = writeln!(out, "l {}", idx.join(" "));
        }
        base += line.points.len();
    }
    out
}

/// Mesh as OBJ vertices, area-weighted vertex normals and faces.
pub fn mesh_to_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v[0], v[1], v[2]);
    }
    for n in mesh.vertex_normals() {
        let _ = writeln!(out, "vn {} {} {}", n[0], n[1], n[2]);
    }
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| i + 1);
        let _ = writeln!(out, "f {a}//{a} {b}//{b} {c}//{c}");
    }
    out
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}
