//! Steady implicit defect correction and explicit SSP-RK3 time stepping.

mod explicit;
mod implicit;

use thiserror::Error;

use crate::euler::{roe_spectral_radius, EulerError, Prim, State};
use crate::mesh::FaceSide;
use crate::residual::{Discretization, ResidualError};

pub use explicit::{
    advance, mass_matrix_apply, mass_matrix_solve, ssprk3_step, MassSolve, TimeStepPolicy, UnsteadyOptions,
    UnsteadyReport,
};
pub use implicit::{
    build_first_order_jacobian, greedy_coloring, relax, sequential_coloring, solve_steady, Block, Coloring,
    IterationRecord, JacobianBlocks, SteadyOptions, SteadyReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("iteration {iter}: {source}")]
    Residual { iter: usize, source: ResidualError },
    #[error("iteration {iter}: update left cell {cell} unrealizable: {source}")]
    Unrealizable { iter: usize, cell: usize, source: EulerError },
    #[error("iteration {iter}: residual is not finite")]
    NotFinite { iter: usize },
    #[error("jacobian: face {face}: {source}")]
    Jacobian { face: usize, source: EulerError },
    #[error("singular diagonal block at cell {cell}")]
    SingularBlock { cell: usize },
    #[error("mass-matrix iteration diverged at sweep {iter} ({from:e} -> {to:e})")]
    MassMatrixDiverged { iter: usize, from: f64, to: f64 },
    #[error("time {time}, stage {stage}: {reason}")]
    Stage { time: f64, stage: usize, reason: String },
    #[error("invalid solver setting: {0}")]
    Invalid(String),
}

/// Per-cell `Σ_T (|u_n| + a)|n_T| / 2`, with Roe averages across each face and
/// the boundary-condition state outside boundary faces.
pub fn spectral_sums(disc: &Discretization<'_>, prims: &[Prim], t: f64) -> Vec<f64> {
    use rayon::prelude::*;
    let mesh = disc.mesh;
    let per_face: Vec<f64> = (0..mesh.n_faces())
        .into_par_iter()
        .map(|f| {
            let face = &mesh.faces[f];
            let l = &prims[face.left];
            let r = match face.right {
                FaceSide::Cell(k) => prims[k],
                FaceSide::Boundary(_) => disc.boundary_right_state(f, l, t),
            };
            0.5 * roe_spectral_radius(l, &r, disc.unit_normal(f)) * disc.area(f)
        })
        .collect();
    (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| mesh.cell_faces[c].iter().map(|&(f, _)| per_face[f]).sum())
        .collect()
}

/// Converts conservative states to primitives, reporting the first failure.
pub(crate) fn to_prims(cons: &[State]) -> Result<Vec<Prim>, (usize, EulerError)> {
    cons.iter()
        .enumerate()
        .map(|(i, u)| crate::euler::Cons(*u).to_prim().map_err(|e| (i, e)))
        .collect()
}

pub(crate) fn to_cons(prims: &[Prim]) -> Vec<State> {
    prims.iter().map(|w| w.to_cons().0).collect()
}
