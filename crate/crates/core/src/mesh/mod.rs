//! Tetrahedral mesh: connectivity, derived geometry and boundary patches.
//!
//! A [`TetMesh`] is built once from a [`RawMesh`] (node coordinates, cell
//! node lists and tagged boundary faces) and is immutable afterwards.
//! Interior faces are stored first, followed by boundary faces; every face
//! normal points out of its left cell and has magnitude equal to the face area.

mod build;
pub mod generate;
pub mod io;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::vec3::Vec3;

pub use build::boundary_faces;
pub use generate::{
    generate_box_grid, generate_bump_grid, generate_cube_grid, generate_cylinder_grid, bump_height, bump_slope,
    CylinderParams,
};

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("mesh has no cells")]
    Empty,
    #[error("cell {cell} references node {node}, but the mesh has {n_nodes} nodes")]
    NodeOutOfRange { cell: usize, node: usize, n_nodes: usize },
    #[error("cell {cell} is degenerate (volume {volume:e})")]
    DegenerateCell { cell: usize, volume: f64 },
    #[error("face {nodes:?} is shared by more than two cells (non-manifold)")]
    NonManifoldFace { nodes: [usize; 3] },
    #[error("boundary face {nodes:?} is not assigned to any patch")]
    UntaggedBoundaryFace { nodes: [usize; 3] },
    #[error("patch `{tag}` lists face {nodes:?}, which is not a boundary face")]
    NotABoundaryFace { tag: String, nodes: [usize; 3] },
    #[error("boundary face {nodes:?} is assigned to more than one patch")]
    DuplicatePatchFace { nodes: [usize; 3] },
    #[error("invalid grid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid generation produced inverted cells even after reducing the perturbation")]
    InvertedCells,
}

/// Boundary condition family attached to a patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchKind {
    Dirichlet,
    Freestream,
    BackPressure,
    SlipWall,
}

impl PatchKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PatchKind::Dirichlet => "dirichlet",
            PatchKind::Freestream => "freestream",
            PatchKind::BackPressure => "back_pressure",
            PatchKind::SlipWall => "slip_wall",
        }
    }
}

impl fmt::Display for PatchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PatchKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dirichlet" => Ok(PatchKind::Dirichlet),
            "freestream" => Ok(PatchKind::Freestream),
            "back_pressure" => Ok(PatchKind::BackPressure),
            "slip_wall" => Ok(PatchKind::SlipWall),
            other => Err(format!("unknown patch kind `{other}`")),
        }
    }
}

/// Which normal enters the slip-wall right state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalMode {
    #[default]
    FaceNormal,
    AveragedNodalNormal,
}

/// A tagged group of boundary faces.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPatch {
    pub tag: String,
    pub kind: PatchKind,
    pub normal_mode: NormalMode,
    /// Unit surface normals at the patch nodes, when the true surface is known.
    pub node_normals: BTreeMap<usize, Vec3>,
}

impl BoundaryPatch {
    pub fn new(tag: impl Into<String>, kind: PatchKind) -> Self {
        Self {
            tag: tag.into(),
            kind,
            normal_mode: NormalMode::FaceNormal,
            node_normals: BTreeMap::new(),
        }
    }
}

/// Patch description inside a [`RawMesh`].
#[derive(Debug, Clone, PartialEq)]
pub struct RawPatch {
    pub patch: BoundaryPatch,
    pub faces: Vec<[usize; 3]>,
}

/// Unprocessed mesh input: what a file or a generator provides.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawMesh {
    pub nodes: Vec<Vec3>,
    pub cells: Vec<[usize; 4]>,
    pub patches: Vec<RawPatch>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceSide {
    Cell(usize),
    Boundary(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    /// Ordered so that the right-hand normal points out of `left`.
    pub nodes: [usize; 3],
    pub left: usize,
    pub right: FaceSide,
}

#[derive(Debug, Clone)]
pub struct TetMesh {
    pub nodes: Vec<Vec3>,
    pub cells: Vec<[usize; 4]>,
    pub faces: Vec<Face>,
    pub n_interior_faces: usize,
    pub patches: Vec<BoundaryPatch>,
    /// Faces of each cell, with `true` when the cell is the face's left cell.
    pub cell_faces: Vec<[(usize, bool); 4]>,
    pub cell_volume: Vec<f64>,
    pub cell_centroid: Vec<Vec3>,
    pub face_normal: Vec<Vec3>,
    pub face_centroid: Vec<Vec3>,
    /// Cells whose node order was swapped to make their volume positive.
    pub reoriented_cells: Vec<usize>,
}

impl TetMesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.faces.len() - self.n_interior_faces
    }

    pub fn interior_faces(&self) -> std::ops::Range<usize> {
        0..self.n_interior_faces
    }

    pub fn boundary_face_range(&self) -> std::ops::Range<usize> {
        self.n_interior_faces..self.faces.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.cell_volume.iter().sum()
    }

    /// Characteristic spacing `(total volume / cells)^(1/3)`.
    pub fn mean_spacing(&self) -> f64 {
        (self.total_volume() / self.n_cells() as f64).cbrt()
    }

    pub fn patch_index(&self, tag: &str) -> Option<usize> {
        self.patches.iter().position(|p| p.tag == tag)
    }

    pub fn cell_nodes_xyz(&self, cell: usize) -> [Vec3; 4] {
        let c = self.cells[cell];
        [self.nodes[c[0]], self.nodes[c[1]], self.nodes[c[2]], self.nodes[c[3]]]
    }

    /// Cells sharing each node, sorted by cell id.
    pub fn node_cells(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_nodes()];
        for (c, cell) in self.cells.iter().enumerate() {
            for &n in cell {
                out[n].push(c);
            }
        }
        out
    }

    /// Face-adjacent cells of each cell.
    pub fn cell_neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::with_capacity(4); self.n_cells()];
        for f in self.interior_faces() {
            let face = &self.faces[f];
            if let FaceSide::Cell(k) = face.right {
                out[face.left].push(k);
                out[k].push(face.left);
            }
        }
        out
    }

    /// SHA-256 of node coordinates and cell connectivity, as lowercase hex.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.nodes.len() as u64).to_le_bytes());
        for p in &self.nodes {
            for x in p {
                h.update(x.to_bits().to_le_bytes());
            }
        }
        h.update((self.cells.len() as u64).to_le_bytes());
        for c in &self.cells {
            for n in c {
                h.update((*n as u64).to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests;
