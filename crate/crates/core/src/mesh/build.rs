use std::collections::HashMap;

use super::{BoundaryPatch, Face, FaceSide, MeshError, RawMesh, TetMesh};
use crate::vec3::{self, Vec3};

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

/// The three nodes of the face of `cell` opposite local node `i`.
fn local_face(cell: &[usize; 4], i: usize) -> [usize; 3] {
    match i {
        0 => [cell[1], cell[2], cell[3]],
        1 => [cell[0], cell[2], cell[3]],
        2 => [cell[0], cell[1], cell[3]],
        _ => [cell[0], cell[1], cell[2]],
    }
}

/// Faces of a cell list that belong to exactly one cell, in encounter order.
pub fn boundary_faces(cells: &[[usize; 4]]) -> Vec<[usize; 3]> {
    let mut count: HashMap<[usize; 3], (usize, [usize; 3])> = HashMap::new();
    let mut order = Vec::new();
    for cell in cells {
        for i in 0..4 {
            let f = local_face(cell, i);
            let key = sorted3(f);
            let e = count.entry(key).or_insert_with(|| {
                order.push(key);
                (0, f)
            });
            e.0 += 1;
        }
    }
    order
        .into_iter()
        .filter_map(|k| {
            let (n, f) = count[&k];
            (n == 1).then_some(f)
        })
        .collect()
}

struct FaceRecord {
    nodes: [usize; 3],
    left: usize,
    right: Option<usize>,
}

impl TetMesh {
    /// Builds connectivity and geometry from raw input.
    ///
    /// Cells with negative volume are reoriented by swapping their last two
    /// nodes; the affected ids are kept in `reoriented_cells`.
    pub fn build(raw: RawMesh) -> Result<TetMesh, MeshError> {
        let RawMesh {
            nodes,
            mut cells,
            patches,
        } = raw;
        if cells.is_empty() {
            return Err(MeshError::Empty);
        }
        for (c, cell) in cells.iter().enumerate() {
            for &n in cell {
                if n >= nodes.len() {
                    return Err(MeshError::NodeOutOfRange {
                        cell: c,
                        node: n,
                        n_nodes: nodes.len(),
                    });
                }
            }
        }

        let mut reoriented = Vec::new();
        for (c, cell) in cells.iter_mut().enumerate() {
            let p = [nodes[cell[0]], nodes[cell[1]], nodes[cell[2]], nodes[cell[3]]];
            let vol = vec3::tet_volume(p[0], p[1], p[2], p[3]);
            let mut longest: f64 = 0.0;
            for a in 0..4 {
                for b in a + 1..4 {
                    longest = longest.max(vec3::norm(vec3::sub(p[a], p[b])));
                }
            }
            let has_repeat = (0..4).any(|a| (a + 1..4).any(|b| cell[a] == cell[b]));
            if has_repeat || !vol.is_finite() || vol.abs() <= 1e-12 * longest.powi(3) / 6.0 {
                return Err(MeshError::DegenerateCell { cell: c, volume: vol });
            }
            if vol < 0.0 {
                cell.swap(2, 3);
                reoriented.push(c);
            }
        }

        let mut index: HashMap<[usize; 3], usize> = HashMap::with_capacity(cells.len() * 3);
        let mut records: Vec<FaceRecord> = Vec::with_capacity(cells.len() * 3);
        for (c, cell) in cells.iter().enumerate() {
            for i in 0..4 {
                let f = local_face(cell, i);
                let key = sorted3(f);
                match index.get(&key) {
                    Some(&r) => {
                        let rec = &mut records[r];
                        if rec.right.is_some() {
                            return Err(MeshError::NonManifoldFace { nodes: key });
                        }
                        rec.right = Some(c);
                    }
                    None => {
                        index.insert(key, records.len());
                        records.push(FaceRecord {
                            nodes: f,
                            left: c,
                            right: None,
                        });
                    }
                }
            }
        }

        let mut patch_of: HashMap<[usize; 3], usize> = HashMap::new();
        let mut mesh_patches: Vec<BoundaryPatch> = Vec::with_capacity(patches.len());
        for (pi, rp) in patches.into_iter().enumerate() {
            for f in &rp.faces {
                let key = sorted3(*f);
                let is_boundary = index
                    .get(&key)
                    .map(|&r| records[r].right.is_none())
                    .unwrap_or(false);
                if !is_boundary {
                    return Err(MeshError::NotABoundaryFace {
                        tag: rp.patch.tag.clone(),
                        nodes: *f,
                    });
                }
                if patch_of.insert(key, pi).is_some() {
                    return Err(MeshError::DuplicatePatchFace { nodes: *f });
                }
            }
            mesh_patches.push(rp.patch);
        }

        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for rec in &records {
            match rec.right {
                Some(k) => interior.push(Face {
                    nodes: rec.nodes,
                    left: rec.left,
                    right: FaceSide::Cell(k),
                }),
                None => {
                    let key = sorted3(rec.nodes);
                    let pi = *patch_of
                        .get(&key)
                        .ok_or(MeshError::UntaggedBoundaryFace { nodes: rec.nodes })?;
                    boundary.push(Face {
                        nodes: rec.nodes,
                        left: rec.left,
                        right: FaceSide::Boundary(pi),
                    });
                }
            }
        }
        boundary.sort_by_key(|f| match f.right {
            FaceSide::Boundary(p) => p,
            FaceSide::Cell(_) => unreachable!(),
        });
        let n_interior_faces = interior.len();
        let mut faces = interior;
        faces.extend(boundary);

        // orient each face outward from its left cell
        for face in faces.iter_mut() {
            let cell = &cells[face.left];
            let opposite = *cell
                .iter()
                .find(|n| !face.nodes.contains(n))
                .expect("tet face leaves one node out");
            let [a, b, c] = face.nodes.map(|n| nodes[n]);
            let normal = vec3::cross(vec3::sub(b, a), vec3::sub(c, a));
            let out = vec3::sub(vec3::mean(&[a, b, c]), nodes[opposite]);
            if vec3::dot(normal, out) < 0.0 {
                face.nodes.swap(1, 2);
            }
        }

        let mut cell_faces = vec![[(usize::MAX, false); 4]; cells.len()];
        let mut filled = vec![0usize; cells.len()];
        for (f, face) in faces.iter().enumerate() {
            cell_faces[face.left][filled[face.left]] = (f, true);
            filled[face.left] += 1;
            if let FaceSide::Cell(k) = face.right {
                cell_faces[k][filled[k]] = (f, false);
                filled[k] += 1;
            }
        }

        let mut mesh = TetMesh {
            nodes,
            cells,
            faces,
            n_interior_faces,
            patches: mesh_patches,
            cell_faces,
            cell_volume: Vec::new(),
            cell_centroid: Vec::new(),
            face_normal: Vec::new(),
            face_centroid: Vec::new(),
            reoriented_cells: reoriented,
        };
        mesh.compute_geometry();
        Ok(mesh)
    }

    /// Fills volumes, centroids and area-weighted face normals.
    pub fn compute_geometry(&mut self) {
        self.cell_volume = self
            .cells
            .iter()
            .map(|c| {
                vec3::tet_volume(
                    self.nodes[c[0]],
                    self.nodes[c[1]],
                    self.nodes[c[2]],
                    self.nodes[c[3]],
                )
            })
            .collect();
        self.cell_centroid = self
            .cells
            .iter()
            .map(|c| vec3::mean(&c.map(|n| self.nodes[n])))
            .collect();
        self.face_centroid = self
            .faces
            .iter()
            .map(|f| vec3::mean(&f.nodes.map(|n| self.nodes[n])))
            .collect();
        self.face_normal = self
            .faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.nodes.map(|n| self.nodes[n]);
                vec3::scale(vec3::cross(vec3::sub(b, a), vec3::sub(c, a)), 0.5)
            })
            .collect();
    }

    /// Outward normal of face `f` as seen from `cell` (area weighted).
    pub fn outward_normal(&self, f: usize, cell: usize) -> Vec3 {
        let n = self.face_normal[f];
        if self.faces[f].left == cell {
            n
        } else {
            vec3::scale(n, -1.0)
        }
    }
}
