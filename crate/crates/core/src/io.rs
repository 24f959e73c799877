//! Plain-text serialization: CSV for meshes, fields, gradients and point
//! sets, JSON for reports. All floating-point output uses shortest
//! round-trip formatting so files are byte-stable across runs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::energy::{GradientField, ScalarField};
use crate::mesh::{Mesh, VertexTag};
use crate::nodal::PointSet;
use crate::scalar::{cst, to_f64, Scalar};
use crate::{Error, Result};

/// Mesh as two CSV sections:
/// `#vertices` with `x,y,tag` rows, then `#triangles` with `i,j,k` rows.
pub fn mesh_to_csv<S: Scalar>(m: &Mesh<S>) -> String {
    let mut out = String::from("#vertices\n");
    for i in 0..m.num_vertices() {
        let [x, y] = m.vertex(i);
        let _ = writeln!(out, "{},{},{}", to_f64(x), to_f64(y), m.tag(i).as_str());
    }
    out.push_str("#triangles\n");
    for t in 0..m.num_triangles() {
        let [a, b, c] = m.triangle(t);
        let _ = writeln!(out, "{a},{b},{c}");
    }
    out
}

/// Parse the format written by [`mesh_to_csv`]. The mesh is re-validated on
/// construction; `h_target` and `radius` are estimated from the geometry.
pub fn mesh_from_csv<S: Scalar>(text: &str) -> Result<Mesh<S>> {
    let mut vertices: Vec<[S; 2]> = Vec::new();
    let mut tags: Vec<VertexTag> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut section = "";
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            section = line;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        match section {
            "#vertices" => {
                if fields.len() != 3 {
                    return Err(Error::Input(format!(
                        "line {}: expected x,y,tag",
                        lineno + 1
                    )));
                }
                let x: f64 = fields[0]
                    .parse()
                    .map_err(|_| Error::Input(format!("line {}: bad x", lineno + 1)))?;
                let y: f64 = fields[1]
                    .parse()
                    .map_err(|_| Error::Input(format!("line {}: bad y", lineno + 1)))?;
                vertices.push([cst(x), cst(y)]);
                tags.push(VertexTag::parse(fields[2]).map_err(|_| {
                    Error::Input(format!("line {}: unknown tag {}", lineno + 1, fields[2]))
                })?);
            }
            "#triangles" => {
                if fields.len() != 3 {
                    return Err(Error::Input(format!(
                        "line {}: expected i,j,k",
                        lineno + 1
                    )));
                }
                let mut tri = [0usize; 3];
                for (s, slot) in fields.iter().zip(tri.iter_mut()) {
                    *slot = s
                        .parse()
                        .map_err(|_| Error::Input(format!("line {}: bad index", lineno + 1)))?;
                }
                triangles.push(tri);
            }
            _ => {
                return Err(Error::Input(format!(
                    "line {}: data before a section header",
                    lineno + 1
                )))
            }
        }
    }
    if vertices.is_empty() || triangles.is_empty() {
        return Err(Error::Input("mesh file has no vertices or triangles".into()));
    }
    // radius from the farthest vertex; h from the shortest edge
    let radius = vertices
        .iter()
        .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt())
        .fold(S::zero(), S::max);
    let mut h = S::infinity();
    for t in &triangles {
        for e in 0..3 {
            let (a, b) = (t[e], t[(e + 1) % 3]);
            if a >= vertices.len() || b >= vertices.len() {
                return Err(Error::Input("triangle index out of range".into()));
            }
            let (dx, dy) = (
                vertices[a][0] - vertices[b][0],
                vertices[a][1] - vertices[b][1],
            );
            h = h.min((dx * dx + dy * dy).sqrt());
        }
    }
    Mesh::from_raw(vertices, triangles, tags, h, radius, None)
}

/// Vertex field as `vertex_id,value` rows under a `#field` header.
pub fn field_to_csv<S: Scalar>(u: &ScalarField<S>) -> String {
    let mut out = String::from("#field\n");
    for (i, v) in u.values().iter().enumerate() {
        let _ = writeln!(out, "{i},{}", to_f64(*v));
    }
    out
}

/// Parse the format written by [`field_to_csv`] against a mesh.
pub fn field_from_csv<S: Scalar>(m: &Mesh<S>, text: &str) -> Result<ScalarField<S>> {
    let mut values = vec![S::zero(); m.num_vertices()];
    let mut seen = vec![false; m.num_vertices()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 2 {
            return Err(Error::Input(format!(
                "line {}: expected vertex_id,value",
                lineno + 1
            )));
        }
        let id: usize = fields[0]
            .parse()
            .map_err(|_| Error::Input(format!("line {}: bad vertex id", lineno + 1)))?;
        let v: f64 = fields[1]
            .parse()
            .map_err(|_| Error::Input(format!("line {}: bad value", lineno + 1)))?;
        if id >= values.len() {
            return Err(Error::Input(format!(
                "line {}: vertex id {} out of range",
                lineno + 1,
                id
            )));
        }
        values[id] = cst(v);
        seen[id] = true;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Input(format!("vertex {missing} has no value")));
    }
    ScalarField::new(m, values)
}

/// Per-triangle gradients as `triangle_id,gx,gy` rows.
pub fn gradient_to_csv<S: Scalar>(g: &GradientField<S>) -> String {
    let mut out = String::from("#gradient\n");
    for t in 0..g.grads().len() {
        let [gx, gy] = g.grad(t);
        let _ = writeln!(out, "{t},{},{}", to_f64(gx), to_f64(gy));
    }
    out
}

/// Labeled points as `x,y,label` rows.
pub fn point_set_to_csv<S: Scalar>(set: &PointSet<S>) -> String {
    let mut out = String::from("#points\n");
    let label = set.label.as_str();
    for (_, p) in &set.points {
        let _ = writeln!(out, "{},{},{label}", to_f64(p[0]), to_f64(p[1]));
    }
    out
}

/// Serialize any report to pretty JSON with a trailing newline.
pub fn report_to_json<T: serde::Serialize>(report: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)
        .map_err(|e| Error::Io(format!("json encoding failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Write text to a file, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|e| Error::Io(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, text).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))
}

/// Read a file into a string.
pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_half_disc;
    use approx::assert_relative_eq;

    #[test]
    fn mesh_roundtrip() {
        let m = build_half_disc(1.0, 0.1).unwrap();
        let text = mesh_to_csv(&m);
        let m2: Mesh<f64> = mesh_from_csv(&text).unwrap();
        assert_eq!(m.num_vertices(), m2.num_vertices());
        assert_eq!(m.num_triangles(), m2.num_triangles());
        for i in 0..m.num_vertices() {
            assert_eq!(m.tag(i), m2.tag(i));
            let (a, b) = (m.vertex(i), m2.vertex(i));
            assert_relative_eq!(a[0], b[0], epsilon = 1e-15);
            assert_relative_eq!(a[1], b[1], epsilon = 1e-15);
        }
        assert_relative_eq!(m.total_area(), m2.total_area(), max_relative = 1e-14);
    }

    #[test]
    fn mesh_csv_is_deterministic() {
        let a = mesh_to_csv(&build_half_disc(1.0, 0.1).unwrap());
        let b = mesh_to_csv(&build_half_disc(1.0, 0.1).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn field_roundtrip() {
        let m = build_half_disc(1.0, 0.2).unwrap();
        let u = ScalarField::from_fn(&m, |p| p[0] * p[1] + 0.25);
        let text = field_to_csv(&u);
        let u2 = field_from_csv(&m, &text).unwrap();
        assert_eq!(u.values(), u2.values());
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(mesh_from_csv::<f64>("").is_err());
        assert!(mesh_from_csv::<f64>("#vertices\n0.0,0.0\n").is_err());
        assert!(mesh_from_csv::<f64>("#vertices\n0,0,BOGUS_TAG\n#triangles\n0,0,0\n").is_err());
        assert!(mesh_from_csv::<f64>("1,2,3\n").is_err());

        let m = build_half_disc(1.0, 0.2).unwrap();
        assert!(field_from_csv(&m, "#field\n0,1.0\n").is_err()); // missing vertices
        assert!(field_from_csv(&m, "#field\n999999,1.0\n").is_err());
        assert!(field_from_csv(&m, "#field\nnot,a,row\n").is_err());
    }

    #[test]
    fn gradient_and_points_export() {
        let m = build_half_disc(1.0, 0.2).unwrap();
        let u = ScalarField::from_fn(&m, |p| -p[1]);
        let g = GradientField::compute(&m, &u).unwrap();
        let text = gradient_to_csv(&g);
        assert!(text.starts_with("#gradient\n"));
        assert_eq!(text.lines().count(), m.num_triangles() + 1);

        let (c, _) = crate::nodal::contact_sets(&m, &u, 1e-8).unwrap();
        let pts = point_set_to_csv(&c);
        assert!(pts.lines().skip(1).all(|l| l.ends_with("CONTACT")));
    }

    #[test]
    fn file_io_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested").join("mesh.csv");
        let m = build_half_disc(1.0, 0.2).unwrap();
        write_text(&path, &mesh_to_csv(&m)).unwrap();
        let back = read_text(&path).unwrap();
        let m2: Mesh<f64> = mesh_from_csv(&back).unwrap();
        assert_eq!(m.num_vertices(), m2.num_vertices());
    }
}
