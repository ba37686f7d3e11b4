//! ASCII PLY and Wavefront OBJ reading/writing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
#[cfg(test)]
use std::path::PathBuf;

use super::{Point3, TriangleMesh};
use crate::error::MeshError;

/// Loads a triangle mesh, dispatching on the file extension.
///
/// Polygons with more than three vertices are fan-triangulated and
/// zero-area triangles are dropped.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, MeshError> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    match ext.as_str() {
        "ply" => parse_ply(&fs::read_to_string(path)?, path),
        "obj" => parse_obj(&fs::read_to_string(path)?, path),
        _ => Err(MeshError::UnknownExtension(ext)),
    }
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn fan(poly: &[usize], out: &mut Vec<[usize; 3]>) {
    for k in 1..poly.len().saturating_sub(1) {
        out.push([poly[0], poly[k], poly[k + 1]]);
    }
}

enum Property {
    Scalar(String),
    List(String),
}

struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

pub fn parse_ply(text: &str, path: &Path) -> Result<TriangleMesh, MeshError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(path, 1, "missing 'ply' magic")),
    }

    let mut elements: Vec<Element> = Vec::new();
    let mut last_line = 1;
    loop {
        let Some((n, line)) = lines.next() else {
            return Err(parse_err(path, last_line + 1, "unexpected end of header"));
        };
        last_line = n;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", "ascii", _] => {}
            ["format", other, ..] => {
                return Err(parse_err(path, n, format!("unsupported PLY format '{other}' (ascii only)")))
            }
            ["element", name, count] => {
                let count = count
                    .parse()
                    .map_err(|_| parse_err(path, n, format!("bad element count '{count}'")))?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            ["property", "list", _, _, name] => elements
                .last_mut()
                .ok_or_else(|| parse_err(path, n, "property before element"))?
                .properties
                .push(Property::List(name.to_string())),
            ["property", _, name] => elements
                .last_mut()
                .ok_or_else(|| parse_err(path, n, "property before element"))?
                .properties
                .push(Property::Scalar(name.to_string())),
            ["end_header"] => break,
            _ => return Err(parse_err(path, n, format!("unrecognized header line '{line}'"))),
        }
    }

    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for element in &elements {
        let xyz = ["x", "y", "z"].map(|axis| {
            element
                .properties
                .iter()
                .position(|p| matches!(p, Property::Scalar(s) if s == axis))
        });
        for _ in 0..element.count {
            let Some((n, line)) = lines.next() else {
                return Err(parse_err(
                    path,
                    last_line + 1,
                    format!("file truncated inside element '{}'", element.name),
                ));
            };
            last_line = n;
            let mut tokens = line.split_whitespace();
            let mut scalars = Vec::with_capacity(element.properties.len());
            let mut list: Option<Vec<usize>> = None;
            for prop in &element.properties {
                match prop {
                    Property::Scalar(_) => {
                        let tok = tokens
                            .next()
                            .ok_or_else(|| parse_err(path, n, "too few values"))?;
                        scalars.push(
                            tok.parse::<f64>()
                                .map_err(|_| parse_err(path, n, format!("bad number '{tok}'")))?,
                        );
                    }
                    Property::List(name) => {
                        let len: usize = tokens
                            .next()
                            .and_then(|t| t.parse().ok())
                            .ok_or_else(|| parse_err(path, n, "bad list length"))?;
                        let mut items = Vec::with_capacity(len);
                        for _ in 0..len {
                            let tok = tokens
                                .next()
                                .ok_or_else(|| parse_err(path, n, "list shorter than its length"))?;
                            items.push(
                                tok.parse::<usize>()
                                    .map_err(|_| parse_err(path, n, format!("bad index '{tok}'")))?,
                            );
                        }
                        if name == "vertex_indices" || name == "vertex_index" {
                            list = Some(items);
                        }
                    }
                }
            }
            if element.name == "vertex" {
                let [Some(x), Some(y), Some(z)] = xyz else {
                    return Err(parse_err(path, n, "vertex element lacks x/y/z"));
                };
                vertices.push(Point3::new(scalars[x], scalars[y], scalars[z]));
            } else if element.name == "face" {
                let poly = list.ok_or_else(|| parse_err(path, n, "face without vertex_indices"))?;
                if poly.len() < 3 {
                    return Err(parse_err(path, n, "face with fewer than 3 vertices"));
                }
                fan(&poly, &mut triangles);
            }
        }
    }
    TriangleMesh::new_dropping_degenerate(vertices, triangles)
}

pub fn parse_obj(text: &str, path: &Path) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| parse_err(path, n, "bad vertex coordinate"))?;
                if coords.len() != 3 {
                    return Err(parse_err(path, n, "vertex needs 3 coordinates"));
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let mut poly = Vec::new();
                for tok in tokens {
                    let head = tok.split('/').next().unwrap_or_default();
                    let idx: i64 = head
                        .parse()
                        .map_err(|_| parse_err(path, n, format!("bad face index '{tok}'")))?;
                    // 1-based; negative indices count back from the latest vertex
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        return Err(parse_err(path, n, "face index 0 is invalid"));
                    };
                    if resolved < 0 {
                        return Err(parse_err(path, n, format!("face index '{tok}' out of range")));
                    }
                    poly.push(resolved as usize);
                }
                if poly.len() < 3 {
                    return Err(parse_err(path, n, "face with fewer than 3 vertices"));
                }
                fan(&poly, &mut triangles);
            }
            _ => {}
        }
    }
    TriangleMesh::new_dropping_degenerate(vertices, triangles)
}

pub fn write_ply(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    let _ = write!(
        out,
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\n\
         element face {}\nproperty list uchar int vertex_indices\nend_header\n",
        mesh.vertices().len(),
        mesh.triangles().len()
    );
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
    }
    for [a, b, c] in mesh.triangles() {
        let _ = writeln!(out, "3 {a} {b} {c}");
    }
    out
}

pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for [a, b, c] in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1);
    }
    out
}
