//! Plain-text mesh format.
//!
//! ```text
//! tetmesh 1
//! nodes N
//! x y z            (N lines)
//! cells M
//! a b c d          (M lines, zero-based node indices)
//! patch <tag> <kind>
//! a b c            (boundary faces of the patch)
//! normal i nx ny nz  (optional analytic unit normal at node i)
//! ```
//!
//! Tokens are whitespace delimited and lines end in LF. Blank lines and lines
//! starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::{BoundaryPatch, FaceSide, MeshError, RawMesh, RawPatch, TetMesh};

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn syntax(line: usize, msg: impl Into<String>) -> MeshIoError {
    MeshIoError::Syntax {
        line,
        msg: msg.into(),
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.inner.by_ref() {
            let line = raw.trim();
            self.last = i + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Some((i + 1, line.split_whitespace().collect()));
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), MeshIoError> {
        let last = self.last;
        self.next_tokens()
            .ok_or_else(|| syntax(last + 1, format!("unexpected end of input, expected {what}")))
    }
}

fn parse_f64(line: usize, tok: &str) -> Result<f64, MeshIoError> {
    let v: f64 = tok
        .parse()
        .map_err(|_| syntax(line, format!("invalid number `{tok}`")))?;
    if !v.is_finite() {
        return Err(syntax(line, format!("non-finite number `{tok}`")));
    }
    Ok(v)
}

fn parse_index(line: usize, tok: &str) -> Result<usize, MeshIoError> {
    tok.parse()
        .map_err(|_| syntax(line, format!("invalid index `{tok}`")))
}

fn parse_count(line: usize, toks: &[&str], keyword: &str) -> Result<usize, MeshIoError> {
    match toks {
        [k, n] if *k == keyword => parse_index(line, n),
        _ => Err(syntax(line, format!("expected `{keyword} <count>`"))),
    }
}

/// Parses the text format into unvalidated raw mesh data.
pub fn parse_mesh_text(text: &str) -> Result<RawMesh, MeshIoError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (ln, header) = lines.expect("header")?;
    if header != ["tetmesh", "1"] {
        return Err(syntax(ln, "expected header `tetmesh 1`"));
    }

    let (ln, toks) = lines.expect("`nodes`")?;
    let n_nodes = parse_count(ln, &toks, "nodes")?;
    let mut nodes = Vec::new();
    for _ in 0..n_nodes {
        let (ln, toks) = lines.expect("node coordinates")?;
        if toks.len() != 3 {
            return Err(syntax(ln, "expected three coordinates"));
        }
        nodes.push([
            parse_f64(ln, toks[0])?,
            parse_f64(ln, toks[1])?,
            parse_f64(ln, toks[2])?,
        ]);
    }

    let (ln, toks) = lines.expect("`cells`")?;
    let n_cells = parse_count(ln, &toks, "cells")?;
    let mut cells = Vec::new();
    for _ in 0..n_cells {
        let (ln, toks) = lines.expect("cell node indices")?;
        if toks.len() != 4 {
            return Err(syntax(ln, "expected four node indices"));
        }
        cells.push([
            parse_index(ln, toks[0])?,
            parse_index(ln, toks[1])?,
            parse_index(ln, toks[2])?,
            parse_index(ln, toks[3])?,
        ]);
    }

    let mut patches: Vec<RawPatch> = Vec::new();
    while let Some((ln, toks)) = lines.next_tokens() {
        match toks.as_slice() {
            ["patch", tag, kind] => {
                let kind = kind.parse().map_err(|e: String| syntax(ln, e))?;
                if patches.iter().any(|p| p.patch.tag == *tag) {
                    return Err(syntax(ln, format!("duplicate patch tag `{tag}`")));
                }
                patches.push(RawPatch {
                    patch: BoundaryPatch::new(*tag, kind),
                    faces: Vec::new(),
                });
            }
            ["normal", i, x, y, z] => {
                let patch = patches
                    .last_mut()
                    .ok_or_else(|| syntax(ln, "`normal` before any `patch`"))?;
                let n = [parse_f64(ln, x)?, parse_f64(ln, y)?, parse_f64(ln, z)?];
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                if !(len > 0.0) {
                    return Err(syntax(ln, "zero-length normal"));
                }
                let node = parse_index(ln, i)?;
                if node >= nodes.len() {
                    return Err(syntax(ln, format!("normal refers to missing node {node}")));
                }
                patch
                    .patch
                    .node_normals
                    .insert(node, [n[0] / len, n[1] / len, n[2] / len]);
            }
            [a, b, c] => {
                let patch = patches
                    .last_mut()
                    .ok_or_else(|| syntax(ln, "face listed before any `patch`"))?;
                patch
                    .faces
                    .push([parse_index(ln, a)?, parse_index(ln, b)?, parse_index(ln, c)?]);
            }
            _ => return Err(syntax(ln, "expected `patch`, `normal` or a face")),
        }
    }

    Ok(RawMesh {
        nodes,
        cells,
        patches,
    })
}

/// Parses and builds a mesh.
pub fn mesh_from_text(text: &str) -> Result<TetMesh, MeshIoError> {
    Ok(TetMesh::build(parse_mesh_text(text)?)?)
}

pub fn read_mesh(path: &Path) -> Result<TetMesh, MeshIoError> {
    let text = std::fs::read_to_string(path).map_err(|source| MeshIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    mesh_from_text(&text)
}

/// Serializes a mesh; floats use the shortest round-trip representation.
pub fn write_mesh_text(mesh: &TetMesh) -> String {
    let mut out = String::new();
    out.push_str("tetmesh 1\n");
    let _ = writeln!(out, "nodes {}", mesh.n_nodes());
    for p in &mesh.nodes {
        let _ = writeln!(out, "{} {} {}", p[0], p[1], p[2]);
    }
    let _ = writeln!(out, "cells {}", mesh.n_cells());
    for c in &mesh.cells {
        let _ = writeln!(out, "{} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    for (pi, patch) in mesh.patches.iter().enumerate() {
        let _ = writeln!(out, "patch {} {}", patch.tag, patch.kind);
        for face in &mesh.faces[mesh.n_interior_faces..] {
            if face.right == FaceSide::Boundary(pi) {
                let _ = writeln!(out, "{} {} {}", face.nodes[0], face.nodes[1], face.nodes[2]);
            }
        }
        for (node, n) in &patch.node_normals {
            let _ = writeln!(out, "normal {} {} {} {}", node, n[0], n[1], n[2]);
        }
    }
    out
}

pub fn write_mesh(mesh: &TetMesh, path: &Path) -> Result<(), MeshIoError> {
    std::fs::write(path, write_mesh_text(mesh)).map_err(|source| MeshIoError::Io {
        path: path.display().to_string(),
        source,
    })
}
