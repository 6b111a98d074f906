//! OFF and ASCII STL readers.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::Vector3;

use super::mesh::{MeshError, SurfaceMesh};

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64, MeshError> {
    tok.parse::<f64>()
        .map_err(|_| parse_err(line, format!("expected a number, found `{tok}`")))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize, MeshError> {
    tok.parse::<usize>()
        .map_err(|_| parse_err(line, format!("expected a non-negative integer, found `{tok}`")))
}

/// Load `.off` or `.stl` by extension.
pub fn load_mesh(path: &Path) -> Result<SurfaceMesh, MeshError> {
    let text = std::fs::read_to_string(path).map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))?;
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("stl") => parse_stl(&text),
        _ => parse_off(&text),
    }
}

/// Object File Format. Polygons with more than three corners are fanned
/// into triangles from their first corner.
pub fn parse_off(text: &str) -> Result<SurfaceMesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let mut tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.first() != Some(&"OFF") {
        return Err(parse_err(hline, "missing OFF header"));
    }
    tokens.remove(0);
    let (cline, counts) = if tokens.is_empty() {
        let (n, l) = lines.next().ok_or_else(|| parse_err(hline, "missing element counts"))?;
        (n, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (hline, tokens)
    };
    if counts.len() < 2 {
        return Err(parse_err(cline, "expected `vertices faces [edges]`"));
    }
    let nv = parse_usize(counts[0], cline)?;
    let nf = parse_usize(counts[1], cline)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "file ends inside vertex list"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() < 3 {
            return Err(parse_err(n, "vertex needs three coordinates"));
        }
        vertices.push(Vector3::new(
            parse_f64(t[0], n)?,
            parse_f64(t[1], n)?,
            parse_f64(t[2], n)?,
        ));
    }

    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (n, l) = lines
            .next()
            .ok_or_else(|| parse_err(cline, "file ends inside face list"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        let k = parse_usize(t.first().copied().unwrap_or(""), n)?;
        if k < 3 || t.len() < k + 1 {
            return Err(parse_err(n, "face needs at least three vertex indices"));
        }
        let idx = t[1..=k]
            .iter()
            .map(|s| parse_usize(s, n))
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(&bad) = idx.iter().find(|&&i| i >= nv) {
            return Err(parse_err(n, format!("vertex index {bad} out of range")));
        }
        for j in 1..k - 1 {
            triangles.push([idx[0], idx[j], idx[j + 1]]);
        }
    }
    SurfaceMesh::new(vertices, triangles)
}

/// Minimal ASCII STL. Stored facet normals are ignored; normals come from
/// the vertex winding. Bit-identical vertices are welded so that closed
/// solids can be winding-checked.
pub fn parse_stl(text: &str) -> Result<SurfaceMesh, MeshError> {
    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    let mut welded: HashMap<[u64; 3], usize> = HashMap::new();
    let mut triangles = Vec::new();
    let mut pending: Vec<usize> = Vec::with_capacity(3);
    let mut in_facet = false;
    let mut saw_solid = false;
    let mut last_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        last_line = n;
        let t: Vec<&str> = raw.split_whitespace().collect();
        let Some(&kw) = t.first() else { continue };
        match kw {
            "solid" => saw_solid = true,
            "facet" => {
                if in_facet {
                    return Err(parse_err(n, "nested facet"));
                }
                in_facet = true;
                pending.clear();
            }
            "outer" | "endloop" => {}
            "vertex" => {
                if !in_facet {
                    return Err(parse_err(n, "vertex outside facet"));
                }
                if t.len() != 4 {
                    return Err(parse_err(n, "vertex needs three coordinates"));
                }
                let v = Vector3::new(parse_f64(t[1], n)?, parse_f64(t[2], n)?, parse_f64(t[3], n)?);
                let key = [v.x.to_bits(), v.y.to_bits(), v.z.to_bits()];
                let id = *welded.entry(key).or_insert_with(|| {
                    vertices.push(v);
                    vertices.len() - 1
                });
                pending.push(id);
            }
            "endfacet" => {
                if !in_facet || pending.len() != 3 {
                    return Err(parse_err(n, "facet must have exactly three vertices"));
                }
                triangles.push([pending[0], pending[1], pending[2]]);
                in_facet = false;
            }
            "endsolid" => {
                if in_facet {
                    return Err(parse_err(n, "endsolid inside facet"));
                }
            }
            other => return Err(parse_err(n, format!("unexpected keyword `{other}`"))),
        }
    }
    if !saw_solid {
        return Err(parse_err(1, "missing `solid` header"));
    }
    if in_facet {
        return Err(parse_err(last_line, "file ends inside facet"));
    }
    SurfaceMesh::new(vertices, triangles)
}
