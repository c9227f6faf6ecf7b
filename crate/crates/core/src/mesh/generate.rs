//! Grid generators for the verification domains.
//!
//! All generators start from a structured block of `nx × ny × nz` nodes in
//! computational space, jitter interior nodes deterministically, map the block
//! to physical space and split every hex into six tetrahedra sharing the hex
//! main diagonal. The split is identical in every hex, so neighboring hexes
//! always share face diagonals.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{build::boundary_faces, BoundaryPatch, MeshError, PatchKind, RawMesh, RawPatch, TetMesh};
use crate::vec3::{self, Vec3};

/// The six axis permutations; each yields one tet of the hex split.
const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

struct Block {
    dims: [usize; 3],
}

impl Block {
    fn id(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    fn ijk(&self, id: usize) -> [usize; 3] {
        let i = id % self.dims[0];
        let j = (id / self.dims[0]) % self.dims[1];
        let k = id / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    fn n_nodes(&self) -> usize {
        self.dims.iter().product()
    }

    fn tets(&self) -> Vec<[usize; 4]> {
        let [nx, ny, nz] = self.dims;
        let mut cells = Vec::with_capacity(6 * (nx - 1) * (ny - 1) * (nz - 1));
        for k in 0..nz - 1 {
            for j in 0..ny - 1 {
                for i in 0..nx - 1 {
                    for perm in PERMUTATIONS {
                        let mut corner = [0usize; 3];
                        let mut tet = [0usize; 4];
                        tet[0] = self.id(i, j, k);
                        for (s, &axis) in perm.iter().enumerate() {
                            corner[axis] = 1;
                            tet[s + 1] = self.id(i + corner[0], j + corner[1], k + corner[2]);
                        }
                        cells.push(tet);
                    }
                }
            }
        }
        cells
    }

    /// Computational coordinates in [0,1]^3 with seeded jitter of `amount` local spacings.
    ///
    /// With `slide_boundary`, boundary nodes move within their boundary plane;
    /// otherwise they stay fixed.
    fn jittered(&self, amount: f64, seed: u64, slide_boundary: bool) -> Vec<Vec3> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spacing = self.dims.map(|n| 1.0 / (n - 1) as f64);
        (0..self.n_nodes())
            .map(|id| {
                let ijk = self.ijk(id);
                let draw: [f64; 3] = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ];
                let on_boundary = (0..3).any(|d| ijk[d] == 0 || ijk[d] == self.dims[d] - 1);
                let mut p = [0.0; 3];
                for d in 0..3 {
                    p[d] = ijk[d] as f64 * spacing[d];
                    let fixed = ijk[d] == 0 || ijk[d] == self.dims[d] - 1;
                    let movable = !fixed && (slide_boundary || !on_boundary);
                    if movable && amount > 0.0 {
                        p[d] += amount * spacing[d] * draw[d];
                    }
                }
                p
            })
            .collect()
    }

    /// Index-space classification of a boundary face: (axis, side) with side 0 = min.
    fn classify(&self, face: &[usize; 3]) -> Option<(usize, usize)> {
        let ijk = face.map(|n| self.ijk(n));
        for d in 0..3 {
            if ijk.iter().all(|c| c[d] == 0) {
                return Some((d, 0));
            }
            if ijk.iter().all(|c| c[d] == self.dims[d] - 1) {
                return Some((d, 1));
            }
        }
        None
    }
}

fn signed_volumes(nodes: &[Vec3], cells: &[[usize; 4]]) -> Vec<f64> {
    cells
        .iter()
        .map(|c| vec3::tet_volume(nodes[c[0]], nodes[c[1]], nodes[c[2]], nodes[c[3]]))
        .collect()
}

/// Maps jittered computational coordinates through `map`, halving the jitter
/// once if any cell inverts relative to the unjittered grid.
fn mapped_nodes(
    block: &Block,
    cells: &[[usize; 4]],
    perturbation: f64,
    seed: u64,
    slide_boundary: bool,
    map: &dyn Fn(Vec3) -> Vec3,
) -> Result<Vec<Vec3>, MeshError> {
    let reference: Vec<Vec3> = block
        .jittered(0.0, seed, slide_boundary)
        .into_iter()
        .map(map)
        .collect();
    let ref_vol = signed_volumes(&reference, cells);
    if ref_vol.iter().any(|v| !(v.abs() > 0.0)) {
        return Err(MeshError::InvertedCells);
    }
    if perturbation == 0.0 {
        return Ok(reference);
    }
    for amount in [perturbation, 0.5 * perturbation] {
        let nodes: Vec<Vec3> = block
            .jittered(amount, seed, slide_boundary)
            .into_iter()
            .map(map)
            .collect();
        let vol = signed_volumes(&nodes, cells);
        let ok = vol
            .iter()
            .zip(&ref_vol)
            .all(|(v, r)| v * r > 0.0 && v.abs() > 1e-3 * r.abs());
        if ok {
            return Ok(nodes);
        }
        log::warn!("grid jitter {amount} inverted cells, retrying with half");
    }
    Err(MeshError::InvertedCells)
}

/// Swaps the last two nodes of cells with negative volume.
fn oriented(mut cells: Vec<[usize; 4]>, nodes: &[Vec3]) -> Vec<[usize; 4]> {
    for c in cells.iter_mut() {
        if vec3::tet_volume(nodes[c[0]], nodes[c[1]], nodes[c[2]], nodes[c[3]]) < 0.0 {
            c.swap(2, 3);
        }
    }
    cells
}

fn check_jitter(perturbation: f64) -> Result<(), MeshError> {
    if !(0.0..0.5).contains(&perturbation) {
        return Err(MeshError::InvalidParameter(format!(
            "perturbation must lie in [0, 0.5), got {perturbation}"
        )));
    }
    Ok(())
}

const SIDE_TAGS: [[&str; 2]; 3] = [["xmin", "xmax"], ["ymin", "ymax"], ["zmin", "zmax"]];

/// Groups boundary faces into six patches named by the block side they lie on.
fn side_patches(
    block: &Block,
    cells: &[[usize; 4]],
    kinds: [[PatchKind; 2]; 3],
    tags: [[&str; 2]; 3],
) -> Vec<RawPatch> {
    let mut patches: Vec<RawPatch> = (0..6)
        .map(|s| RawPatch {
            patch: BoundaryPatch::new(tags[s / 2][s % 2], kinds[s / 2][s % 2]),
            faces: Vec::new(),
        })
        .collect();
    for f in boundary_faces(cells) {
        let (d, side) = block
            .classify(&f)
            .expect("structured boundary face lies on a block side");
        patches[2 * d + side].faces.push(f);
    }
    patches
}

fn patch_nodes(p: &RawPatch) -> Vec<usize> {
    let mut nodes: Vec<usize> = p.faces.iter().flatten().copied().collect();
    nodes.sort_unstable();
    nodes.dedup();
    nodes
}

fn set_plane_normals(patches: &mut [RawPatch]) {
    const PLANE: [[Vec3; 2]; 3] = [
        [[-1.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
        [[0.0, -1.0, 0.0], [0.0, 1.0, 0.0]],
        [[0.0, 0.0, -1.0], [0.0, 0.0, 1.0]],
    ];
    for (s, p) in patches.iter_mut().enumerate() {
        let n = PLANE[s / 2][s % 2];
        p.patch.node_normals = patch_nodes(p).into_iter().map(|i| (i, n)).collect();
    }
}

/// Box `[lo, hi]` with `n` nodes per edge; patches `xmin` .. `zmax` are Dirichlet.
pub fn generate_box_grid(
    n: usize,
    lo: Vec3,
    hi: Vec3,
    perturbation: f64,
    seed: u64,
) -> Result<TetMesh, MeshError> {
    if n < 3 {
        return Err(MeshError::InvalidParameter(format!(
            "need at least 3 nodes per edge, got {n}"
        )));
    }
    check_jitter(perturbation)?;
    let block = Block { dims: [n, n, n] };
    let cells = block.tets();
    let map = |p: Vec3| {
        [
            lo[0] + p[0] * (hi[0] - lo[0]),
            lo[1] + p[1] * (hi[1] - lo[1]),
            lo[2] + p[2] * (hi[2] - lo[2]),
        ]
    };
    let nodes = mapped_nodes(&block, &cells, perturbation, seed, true, &map)?;
    let mut patches = side_patches(&block, &cells, [[PatchKind::Dirichlet; 2]; 3], SIDE_TAGS);
    set_plane_normals(&mut patches);
    let cells = oriented(cells, &nodes);
    TetMesh::build(RawMesh {
        nodes,
        cells,
        patches,
    })
}

/// Unit cube with `n` nodes per edge and `6 (n-1)^3` tetrahedra.
pub fn generate_cube_grid(n: usize, perturbation: f64, seed: u64) -> Result<TetMesh, MeshError> {
    generate_box_grid(n, [0.0; 3], [1.0; 3], perturbation, seed)
}

pub const BUMP_X: [f64; 2] = [-0.25, 1.75];
pub const BUMP_Y: [f64; 2] = [-0.5, 0.5];

/// Bottom-wall height `0.05 sin^4(pi (10x - 3) / 9)` on `[0.3, 1.2]`, zero elsewhere.
pub fn bump_height(x: f64) -> f64 {
    if (0.3..=1.2).contains(&x) {
        0.05 * (PI * (10.0 * x - 3.0) / 9.0).sin().powi(4)
    } else {
        0.0
    }
}

pub fn bump_slope(x: f64) -> f64 {
    if (0.3..=1.2).contains(&x) {
        let a = PI * (10.0 * x - 3.0) / 9.0;
        0.05 * 4.0 * a.sin().powi(3) * a.cos() * 10.0 * PI / 9.0
    } else {
        0.0
    }
}

/// Channel `[-0.25,1.75] x [-0.5,0.5] x [0,1]` with the smooth bump on its floor.
///
/// Node counts are per direction. Patches: `inflow` (freestream), `outflow`
/// (back pressure), `bottom`, `top`, `ymin`, `ymax` (slip walls). The bottom
/// patch carries the analytic surface normals.
pub fn generate_bump_grid(
    nx: usize,
    ny: usize,
    nz: usize,
    perturbation: f64,
    seed: u64,
) -> Result<TetMesh, MeshError> {
    if nx < 2 || ny < 2 || nz < 2 {
        return Err(MeshError::InvalidParameter(format!(
            "bump grid needs at least 2 nodes per direction, got {nx}x{ny}x{nz}"
        )));
    }
    check_jitter(perturbation)?;
    let block = Block { dims: [nx, ny, nz] };
    let cells = block.tets();
    let map = |p: Vec3| {
        let x = BUMP_X[0] + p[0] * (BUMP_X[1] - BUMP_X[0]);
        let y = BUMP_Y[0] + p[1] * (BUMP_Y[1] - BUMP_Y[0]);
        let zb = bump_height(x);
        [x, y, zb + p[2] * (1.0 - zb)]
    };
    let nodes = mapped_nodes(&block, &cells, perturbation, seed, false, &map)?;
    let kinds = [
        [PatchKind::Freestream, PatchKind::BackPressure],
        [PatchKind::SlipWall, PatchKind::SlipWall],
        [PatchKind::SlipWall, PatchKind::SlipWall],
    ];
    let tags = [["inflow", "outflow"], ["ymin", "ymax"], ["bottom", "top"]];
    let mut patches = side_patches(&block, &cells, kinds, tags);
    set_plane_normals(&mut patches);
    let bottom = &mut patches[4];
    bottom.patch.node_normals = patch_nodes(bottom)
        .into_iter()
        .map(|i| {
            let x = nodes[i][0];
            (i, vec3::normalize([-bump_slope(x), 0.0, 1.0]))
        })
        .collect();
    let cells = oriented(cells, &nodes);
    TetMesh::build(RawMesh {
        nodes,
        cells,
        patches,
    })
}

/// Geometry of the curved-wall domain: an annular sector around the y axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylinderParams {
    /// Radius of the curved bottom wall.
    pub radius: f64,
    /// Radial thickness of the domain.
    pub thickness: f64,
    /// Angular extent of the sector, measured from the +x axis toward +z.
    pub arc: f64,
    /// Extent in y.
    pub span: f64,
    pub perturbation: f64,
    pub seed: u64,
}

impl Default for CylinderParams {
    fn default() -> Self {
        Self {
            radius: 0.5,
            thickness: 1.0,
            arc: PI / 3.0,
            span: 1.0,
            perturbation: 0.0,
            seed: 0,
        }
    }
}

/// Annular-sector grid whose `bottom` patch (r = radius) is a circular
/// cylinder about the y axis; the bottom carries nodal normals `(x,0,z)/|(x,0,z)|`.
///
/// The bottom patch is a slip wall; all other sides are Dirichlet.
pub fn generate_cylinder_grid(n: usize, params: CylinderParams) -> Result<TetMesh, MeshError> {
    if n < 3 {
        return Err(MeshError::InvalidParameter(format!(
            "need at least 3 nodes per edge, got {n}"
        )));
    }
    check_jitter(params.perturbation)?;
    if !(params.radius > 0.0 && params.thickness > 0.0 && params.span > 0.0)
        || !(params.arc > 0.0 && params.arc < PI)
    {
        return Err(MeshError::InvalidParameter(format!(
            "invalid cylinder geometry {params:?}"
        )));
    }
    let block = Block { dims: [n, n, n] };
    let cells = block.tets();
    let map = |p: Vec3| {
        let theta = p[0] * params.arc;
        let r = params.radius + p[2] * params.thickness;
        [r * theta.cos(), p[1] * params.span, r * theta.sin()]
    };
    let nodes = mapped_nodes(&block, &cells, params.perturbation, params.seed, false, &map)?;
    let kinds = [
        [PatchKind::Dirichlet, PatchKind::Dirichlet],
        [PatchKind::Dirichlet, PatchKind::Dirichlet],
        [PatchKind::SlipWall, PatchKind::Dirichlet],
    ];
    let tags = [["theta_min", "theta_max"], ["ymin", "ymax"], ["bottom", "top"]];
    let mut patches = side_patches(&block, &cells, kinds, tags);
    let bottom = &mut patches[4];
    bottom.patch.node_normals = patch_nodes(bottom)
        .into_iter()
        .map(|i| {
            let p = nodes[i];
            (i, vec3::normalize([p[0], 0.0, p[2]]))
        })
        .collect::<BTreeMap<_, _>>();
    let cells = oriented(cells, &nodes);
    TetMesh::build(RawMesh {
        nodes,
        cells,
        patches,
    })
}
