//! Weak boundary conditions applied through the right state at boundary-face
//! centroids.

use thiserror::Error;

use crate::euler::{Prim, State};
use crate::mesh::{FaceSide, NormalMode, PatchKind, TetMesh};
use crate::mms::Solution;
use crate::vec3::{self, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BcError {
    #[error("patch `{tag}` is dirichlet but no exact solution is configured")]
    MissingExact { tag: String },
    #[error("averaged nodal normal vanishes on boundary face {face}")]
    DegenerateNormal { face: usize },
    #[error("expected {expected} normal modes (one per patch), got {found}")]
    ModeCount { expected: usize, found: usize },
}

/// Reflects the velocity of `w` about the unit normal `n`.
#[inline]
pub fn slip_reflect(w: &State, n: Vec3) -> State {
    let v = [w[1], w[2], w[3]];
    let vn = vec3::dot(v, n);
    let r = vec3::sub(v, vec3::scale(n, 2.0 * vn));
    [w[0], r[0], r[1], r[2], w[4]]
}

/// Unit normal used by the slip condition on boundary face `f`.
///
/// In averaged mode the mean of the three nodal unit normals is used when
/// the patch provides all three; otherwise the face normal is exact. The
/// result points out of the fluid like the face normal.
pub fn face_slip_normal(mesh: &TetMesh, f: usize, mode: NormalMode) -> Result<Vec3, BcError> {
    let face_unit = vec3::normalize(mesh.face_normal[f]);
    let patch = match mesh.faces[f].right {
        FaceSide::Boundary(p) => &mesh.patches[p],
        FaceSide::Cell(_) => return Ok(face_unit),
    };
    if mode == NormalMode::FaceNormal {
        return Ok(face_unit);
    }
    let nodal: Option<Vec<Vec3>> = mesh.faces[f]
        .nodes
        .iter()
        .map(|n| patch.node_normals.get(n).copied())
        .collect();
    let Some(nodal) = nodal else {
        return Ok(face_unit);
    };
    let mean = vec3::mean(&nodal);
    let len = vec3::norm(mean);
    if !(len > 1e-12) {
        return Err(BcError::DegenerateNormal { face: f });
    }
    // nodal normals may point either way; keep the face orientation
    let sign = if vec3::dot(mean, face_unit) < 0.0 { -1.0 } else { 1.0 };
    Ok(vec3::scale(mean, sign / len))
}

/// Boundary data resolved per boundary face.
#[derive(Debug, Clone)]
pub struct BoundaryConditions {
    pub freestream: Prim,
    pub back_pressure: f64,
    pub exact: Option<Solution>,
    /// Slip normals indexed by boundary face offset (face − n_interior_faces).
    slip_normals: Vec<Vec3>,
    kinds: Vec<PatchKind>,
}

impl BoundaryConditions {
    /// Resolves slip normals with one `NormalMode` per patch.
    pub fn new(
        mesh: &TetMesh,
        modes: &[NormalMode],
        freestream: Prim,
        back_pressure: f64,
        exact: Option<Solution>,
    ) -> Result<Self, BcError> {
        if modes.len() != mesh.patches.len() {
            return Err(BcError::ModeCount {
                expected: mesh.patches.len(),
                found: modes.len(),
            });
        }
        if exact.is_none() {
            if let Some(p) = mesh.patches.iter().find(|p| p.kind == PatchKind::Dirichlet) {
                return Err(BcError::MissingExact { tag: p.tag.clone() });
            }
        }
        let mut slip_normals = Vec::with_capacity(mesh.n_boundary_faces());
        for f in mesh.boundary_face_range() {
            let p = match mesh.faces[f].right {
                FaceSide::Boundary(p) => p,
                FaceSide::Cell(_) => unreachable!("boundary range holds boundary faces"),
            };
            let n = if mesh.patches[p].kind == PatchKind::SlipWall {
                face_slip_normal(mesh, f, modes[p])?
            } else {
                vec3::normalize(mesh.face_normal[f])
            };
            slip_normals.push(n);
        }
        Ok(BoundaryConditions {
            freestream,
            back_pressure,
            exact,
            slip_normals,
            kinds: mesh.patches.iter().map(|p| p.kind).collect(),
        })
    }

    /// Patch modes taken from the mesh.
    pub fn from_mesh(
        mesh: &TetMesh,
        freestream: Prim,
        back_pressure: f64,
        exact: Option<Solution>,
    ) -> Result<Self, BcError> {
        let modes: Vec<NormalMode> = mesh.patches.iter().map(|p| p.normal_mode).collect();
        Self::new(mesh, &modes, freestream, back_pressure, exact)
    }

    pub fn slip_normal(&self, mesh: &TetMesh, f: usize) -> Vec3 {
        self.slip_normals[f - mesh.n_interior_faces]
    }

    /// Right state for boundary face `f` given the interpolated left state.
    #[inline]
    pub fn right_state(&self, mesh: &TetMesh, f: usize, left: &State, t: f64) -> State {
        let patch = match mesh.faces[f].right {
            FaceSide::Boundary(p) => p,
            FaceSide::Cell(_) => unreachable!("right_state on an interior face"),
        };
        match self.kinds[patch] {
            PatchKind::Dirichlet => {
                // presence checked at construction
                let sol = self.exact.as_ref().expect("dirichlet patch without exact solution");
                sol.prim(mesh.face_centroid[f], t).0
            }
            PatchKind::Freestream => self.freestream.0,
            PatchKind::BackPressure => [left[0], left[1], left[2], left[3], self.back_pressure],
            PatchKind::SlipWall => slip_reflect(left, self.slip_normal(mesh, f)),
        }
    }

    /// Whether the right state ignores the left state.
    pub fn is_fixed(&self, mesh: &TetMesh, f: usize) -> bool {
        match mesh.faces[f].right {
            FaceSide::Boundary(p) => matches!(self.kinds[p], PatchKind::Dirichlet | PatchKind::Freestream),
            FaceSide::Cell(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_bump_grid, generate_cube_grid, generate_cylinder_grid, CylinderParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn slip_reflection_cases() {
        let n = vec3::normalize([1.0, 2.0, -1.0]);
        let tangent = vec3::normalize(vec3::cross(n, [0.0, 0.0, 1.0]));
        let w = [1.0, tangent[0], tangent[1], tangent[2], 0.7];
        let r = slip_reflect(&w, n);
        for k in 0..5 {
            assert!((r[k] - w[k]).abs() < 1e-15);
        }
        let w = [1.0, n[0], n[1], n[2], 0.7];
        let r = slip_reflect(&w, n);
        for d in 0..3 {
            assert!((r[1 + d] + n[d]).abs() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let w = [1.0, rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 1.0];
            let r = slip_reflect(&w, n);
            let avg = [0.5 * (w[1] + r[1]), 0.5 * (w[2] + r[2]), 0.5 * (w[3] + r[3])];
            assert!(vec3::dot(avg, n).abs() < 1e-15);
        }
    }

    #[test]
    fn planar_walls_agree_in_both_modes() {
        let mesh = generate_cube_grid(4, 0.2, 3).unwrap();
        for f in mesh.boundary_face_range() {
            let a = face_slip_normal(&mesh, f, NormalMode::FaceNormal).unwrap();
            let b = face_slip_normal(&mesh, f, NormalMode::AveragedNodalNormal).unwrap();
            assert!(vec3::norm(vec3::sub(a, b)) < 1e-14);
        }
    }

    #[test]
    fn flat_bump_faces_agree_in_both_modes() {
        let mesh = generate_bump_grid(9, 4, 4, 0.0, 0).unwrap();
        let bottom = mesh.patch_index("bottom").unwrap();
        for f in mesh.boundary_face_range() {
            if mesh.faces[f].right != FaceSide::Boundary(bottom) {
                continue;
            }
            let xs: Vec<f64> = mesh.faces[f].nodes.iter().map(|&n| mesh.nodes[n][0]).collect();
            if xs.iter().all(|&x| x <= 0.3 || x >= 1.2) {
                let a = face_slip_normal(&mesh, f, NormalMode::FaceNormal).unwrap();
                let b = face_slip_normal(&mesh, f, NormalMode::AveragedNodalNormal).unwrap();
                assert!(vec3::norm(vec3::sub(a, b)) < 1e-14);
            }
        }
    }

    #[test]
    fn cylinder_averaged_normals_beat_chord_normals() {
        // angle error to the exact normal at the face centroid's radial direction
        let worst = |n: usize, mode: NormalMode| -> f64 {
            let mesh = generate_cylinder_grid(n, CylinderParams::default()).unwrap();
            let bottom = mesh.patch_index("bottom").unwrap();
            let mut e: f64 = 0.0;
            for f in mesh.boundary_face_range() {
                if mesh.faces[f].right != FaceSide::Boundary(bottom) {
                    continue;
                }
                let c = mesh.face_centroid[f];
                // the wall bounds the fluid from below, so outward is -r
                let exact = vec3::normalize([-c[0], 0.0, -c[2]]);
                let got = face_slip_normal(&mesh, f, mode).unwrap();
                assert!(vec3::dot(got, exact) > 0.9);
                e = e.max(vec3::norm(vec3::cross(got, exact)));
            }
            e
        };
        let (a5, a9) = (worst(5, NormalMode::AveragedNodalNormal), worst(9, NormalMode::AveragedNodalNormal));
        let (f5, f9) = (worst(5, NormalMode::FaceNormal), worst(9, NormalMode::FaceNormal));
        // on a circle the mean of nodal radials is the centroid's radial
        // direction, so averaged normals are exact; chord normals are O(h)
        assert!(a5 < 1e-14 && a9 < 1e-14, "{a5} {a9}");
        assert!(f5 / f9 > 1.6 && f5 / f9 < 2.5, "{f5} {f9}");
    }

    #[test]
    fn dirichlet_requires_exact_solution() {
        let mesh = generate_cube_grid(3, 0.0, 0).unwrap();
        let fs = Prim([1.0, 0.1, 0.0, 0.0, 1.0 / 1.4]);
        assert!(matches!(
            BoundaryConditions::from_mesh(&mesh, fs, 1.0 / 1.4, None),
            Err(BcError::MissingExact { .. })
        ));
        assert!(BoundaryConditions::from_mesh(&mesh, fs, 1.0 / 1.4, Some(Solution::SteadyExp)).is_ok());
    }
}
