//! Minimal Wavefront OBJ: `v` and `f` statements. Polygons are
//! fan-triangulated around their first vertex; texture/normal references
//! (`f 1/2/3`) and negative (relative) indices are accepted.

use std::fmt::Write as _;

use crate::geom::{TriMesh, Vec3};
use crate::{Error, Result};

const IGNORED: &[&str] = &["vt", "vn", "vp", "g", "o", "s", "usemtl", "mtllib"];
const FREE_FORM: &[&str] = &[
    "cstype", "deg", "bmat", "step", "curv", "curv2", "surf", "parm", "trim", "hole", "scrv", "sp", "end", "con", "l",
    "p",
];

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(format!("line {line}"), format!("invalid number `{tok}`")))
}

fn parse_index(tok: &str, n_vertices: usize, line: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let raw: i64 = head
        .parse()
        .map_err(|_| Error::parse(format!("line {line}"), format!("invalid face index `{tok}`")))?;
    let idx = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        n_vertices as i64 + raw
    } else {
        -1
    };
    if idx < 0 || idx as usize >= n_vertices {
        return Err(Error::parse(
            format!("line {line}"),
            format!("face index {raw} out of range ({n_vertices} vertices so far)"),
        ));
    }
    Ok(idx as usize)
}

/// Parses OBJ text into raw vertices and triangles (not yet validated).
pub fn parse_obj_raw(text: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        let mut toks = content.split_whitespace();
        let Some(kw) = toks.next() else { continue };
        match kw {
            "v" => {
                let coords: Vec<&str> = toks.collect();
                if coords.len() < 3 {
                    return Err(Error::parse(format!("line {line}"), "vertex needs 3 coordinates"));
                }
                vertices.push(Vec3::new(
                    parse_f64(coords[0], line)?,
                    parse_f64(coords[1], line)?,
                    parse_f64(coords[2], line)?,
                ));
            }
            "f" => {
                let idx = toks
                    .map(|t| parse_index(t, vertices.len(), line))
                    .collect::<Result<Vec<_>>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse(format!("line {line}"), "face needs at least 3 vertices"));
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            kw if IGNORED.contains(&kw) => {}
            kw if FREE_FORM.contains(&kw) => {
                return Err(Error::UnsupportedFeature(format!(
                    "OBJ statement `{kw}` at line {line}"
                )));
            }
            other => {
                return Err(Error::parse(
                    format!("line {line}"),
                    format!("unknown statement `{other}`"),
                ));
            }
        }
    }
    Ok((vertices, faces))
}

pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let (v, f) = parse_obj_raw(text)?;
    TriMesh::new(v, f)?.validated()
}

/// Shortest round-trip formatting, so parse(write(m)) == m exactly.
pub fn write_obj(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        writeln!(out, "v {} {} {}", v.x, v.y, v.z).unwrap();
    }
    for f in mesh.faces() {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    out
}
