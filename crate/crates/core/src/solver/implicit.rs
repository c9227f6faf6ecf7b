//! Defect correction with a first-order Jacobian and block multicolor
//! Gauss-Seidel relaxation.

use std::time::Instant;

use nalgebra::{SMatrix, SVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{spectral_sums, to_cons, to_prims, SolverError};
use crate::euler::{Cons, Prim, State};
use crate::mesh::{FaceSide, TetMesh};
use crate::residual::{residual_l1, Discretization};

pub type Block = [[f64; 5]; 5];

const ZERO_BLOCK: Block = [[0.0; 5]; 5];

/// Cells grouped so that no two face neighbours share a group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub color: Vec<u32>,
    pub groups: Vec<Vec<usize>>,
}

impl Coloring {
    fn from_colors(color: Vec<u32>) -> Self {
        let n = color.iter().map(|&c| c as usize + 1).max().unwrap_or(0);
        let mut groups = vec![Vec::new(); n];
        for (i, &c) in color.iter().enumerate() {
            groups[c as usize].push(i);
        }
        Coloring { color, groups }
    }

    pub fn n_colors(&self) -> usize {
        self.groups.len()
    }

    pub fn is_proper(&self, mesh: &TetMesh) -> bool {
        mesh.interior_faces().all(|f| match mesh.faces[f].right {
            FaceSide::Cell(k) => self.color[mesh.faces[f].left] != self.color[k],
            FaceSide::Boundary(_) => true,
        })
    }
}

/// Greedy colouring visiting cells by decreasing face degree (ties by index).
pub fn greedy_coloring(mesh: &TetMesh) -> Coloring {
    let nb = mesh.cell_neighbors();
    let mut order: Vec<usize> = (0..mesh.n_cells()).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(nb[c].len()), c));
    let mut color = vec![u32::MAX; mesh.n_cells()];
    let mut used = Vec::new();
    for c in order {
        used.clear();
        used.extend(nb[c].iter().map(|&k| color[k]).filter(|&k| k != u32::MAX));
        let mut pick = 0u32;
        while used.contains(&pick) {
            pick += 1;
        }
        color[c] = pick;
    }
    Coloring::from_colors(color)
}

/// One colour per cell: plain sequential Gauss-Seidel.
pub fn sequential_coloring(n_cells: usize) -> Coloring {
    Coloring::from_colors((0..n_cells as u32).collect())
}

/// Diagonal and off-diagonal blocks of the first-order residual Jacobian with
/// respect to conservative variables.
#[derive(Debug, Clone)]
pub struct JacobianBlocks {
    /// Per cell, including the pseudo-time term.
    pub diag: Vec<Block>,
    /// Per interior face: `[∂R_left/∂U_right, ∂R_right/∂U_left]`.
    pub off: Vec<[Block; 2]>,
}

fn block_add(a: &mut Block, b: &Block, sign: f64) {
    for r in 0..5 {
        for c in 0..5 {
            a[r][c] += sign * b[r][c];
        }
    }
}

fn block_scale(b: &Block, s: f64) -> Block {
    b.map(|row| row.map(|v| v * s))
}

/// Forward differences of `flux(u)` in each conservative component.
fn fd_columns<F>(u: &State, base: &State, mut flux: F) -> Result<Block, crate::euler::EulerError>
where
    F: FnMut(&State) -> Result<State, crate::euler::EulerError>,
{
    let mut b = ZERO_BLOCK;
    for c in 0..5 {
        let h = 1e-8 * (1.0 + u[c].abs());
        let mut up = *u;
        up[c] += h;
        let fp = flux(&up)?;
        for r in 0..5 {
            b[r][c] = (fp[r] - base[r]) / h;
        }
    }
    Ok(b)
}

/// Face derivatives `(∂F/∂U_L, ∂F/∂U_R)` of the first-order flux. Boundary
/// faces differentiate through the boundary state and have no right block.
fn face_derivatives(
    disc: &Discretization<'_>,
    f: usize,
    prims: &[Prim],
    cons: &[State],
) -> Result<(Block, Option<Block>), SolverError> {
    let face = &disc.mesh.faces[f];
    let err = |source| SolverError::Jacobian { face: f, source };
    let l = face.left;
    let to_prim = |u: &State| Cons(*u).to_prim();
    match face.right {
        FaceSide::Cell(k) => {
            let base = disc.first_order_flux(f, &prims[l], Some(&prims[k]), 0.0).map_err(err)?;
            let dl = fd_columns(&cons[l], &base, |u| {
                disc.first_order_flux(f, &to_prim(u)?, Some(&prims[k]), 0.0)
            })
            .map_err(err)?;
            let dr = fd_columns(&cons[k], &base, |u| {
                disc.first_order_flux(f, &prims[l], Some(&to_prim(u)?), 0.0)
            })
            .map_err(err)?;
            Ok((dl, Some(dr)))
        }
        FaceSide::Boundary(_) => {
            // time-dependent boundary data only shifts the residual, not its derivative
            let base = disc.first_order_flux(f, &prims[l], None, 0.0).map_err(err)?;
            let dl = fd_columns(&cons[l], &base, |u| disc.first_order_flux(f, &to_prim(u)?, None, 0.0))
                .map_err(err)?;
            Ok((dl, None))
        }
    }
}

/// Jacobian of the first-order Roe residual, with `Σ(|u_n|+a)|n|/(2·CFL)` added
/// to each diagonal block. `cfl = ∞` drops the pseudo-time term.
pub fn build_first_order_jacobian(
    disc: &Discretization<'_>,
    prims: &[Prim],
    cfl: f64,
) -> Result<JacobianBlocks, SolverError> {
    let mesh = disc.mesh;
    let cons = to_cons(prims);
    let derivs: Vec<(Block, Option<Block>)> = (0..mesh.n_faces())
        .into_par_iter()
        .map(|f| face_derivatives(disc, f, prims, &cons))
        .collect::<Result<_, _>>()?;
    let sums = if cfl.is_finite() {
        spectral_sums(disc, prims, 0.0)
    } else {
        vec![0.0; mesh.n_cells()]
    };
    let diag: Vec<Block> = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let mut d = ZERO_BLOCK;
            for &(f, is_left) in &mesh.cell_faces[c] {
                let (dl, dr) = &derivs[f];
                if is_left {
                    block_add(&mut d, dl, 1.0);
                } else if let Some(dr) = dr {
                    block_add(&mut d, dr, -1.0);
                }
            }
            if cfl.is_finite() {
                let aug = sums[c] / cfl;
                for (k, row) in d.iter_mut().enumerate() {
                    row[k] += aug;
                }
            }
            d
        })
        .collect();
    let off = derivs[..mesh.n_interior_faces]
        .iter()
        .map(|(dl, dr)| {
            let dr = dr.as_ref().expect("interior face has a right block");
            [*dr, block_scale(dl, -1.0)]
        })
        .collect();
    Ok(JacobianBlocks { diag, off })
}

fn invert_blocks(diag: &[Block]) -> Result<Vec<SMatrix<f64, 5, 5>>, SolverError> {
    diag.par_iter()
        .enumerate()
        .map(|(c, b)| {
            let m = SMatrix::<f64, 5, 5>::from_fn(|r, k| b[r][k]);
            m.try_inverse().ok_or(SolverError::SingularBlock { cell: c })
        })
        .collect()
}

/// `sweeps` multicolour block Gauss-Seidel passes on `J x = rhs`, from `x = 0`.
pub fn relax(
    mesh: &TetMesh,
    jac: &JacobianBlocks,
    coloring: &Coloring,
    rhs: &[State],
    sweeps: usize,
) -> Result<Vec<State>, SolverError> {
    let inv = invert_blocks(&jac.diag)?;
    let mut x = vec![[0.0; 5]; mesh.n_cells()];
    for _ in 0..sweeps {
        for group in &coloring.groups {
            let updates: Vec<State> = group
                .par_iter()
                .map(|&c| {
                    let mut b = SVector::<f64, 5>::from_column_slice(&rhs[c]);
                    for &(f, is_left) in &mesh.cell_faces[c] {
                        if f >= mesh.n_interior_faces {
                            continue;
                        }
                        let face = &mesh.faces[f];
                        let (nb, blk) = if is_left {
                            let FaceSide::Cell(k) = face.right else { unreachable!() };
                            (k, &jac.off[f][0])
                        } else {
                            (face.left, &jac.off[f][1])
                        };
                        for r in 0..5 {
                            let mut s = 0.0;
                            for k in 0..5 {
                                s += blk[r][k] * x[nb][k];
                            }
                            b[r] -= s;
                        }
                    }
                    let y = inv[c] * b;
                    [y[0], y[1], y[2], y[3], y[4]]
                })
                .collect();
            for (&c, u) in group.iter().zip(updates) {
                x[c] = u;
            }
        }
    }
    Ok(x)
}

/// Steady-solver settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteadyOptions {
    pub max_iterations: usize,
    /// Required drop of the summed L1 residual relative to the first iterate.
    pub orders: f64,
    /// Stop once the mean per-cell L1 residual is below this.
    pub absolute_tolerance: f64,
    pub sweeps: usize,
    pub cfl_start: f64,
    pub cfl_end: f64,
    /// Iterations over which the CFL grows linearly from start to end.
    pub cfl_ramp: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions {
            max_iterations: 200,
            orders: 10.0,
            absolute_tolerance: 1e-15,
            sweeps: 5,
            cfl_start: 1000.0,
            cfl_end: 1000.0,
            cfl_ramp: 0,
        }
    }
}

impl SteadyOptions {
    pub fn cfl(&self, iter: usize) -> f64 {
        if self.cfl_ramp == 0 || iter >= self.cfl_ramp {
            return self.cfl_end;
        }
        let s = iter as f64 / self.cfl_ramp as f64;
        self.cfl_start + s * (self.cfl_end - self.cfl_start)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.sweeps == 0 || !(self.cfl_start > 0.0) || !(self.cfl_end > 0.0) || !(self.orders > 0.0) {
            return Err(SolverError::Invalid(format!("{self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub l1: State,
    pub cfl: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct SteadyReport {
    pub prims: Vec<Prim>,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
    /// Orders of magnitude the summed L1 residual dropped.
    pub orders_dropped: f64,
}

/// Defect-correction iteration `U ← U + ΔU` with
/// `(V/Δτ + ∂R₁/∂U) ΔU = −R(U)` relaxed by multicolour Gauss-Seidel.
///
/// Updates that leave a cell or face state unrealizable are halved up to ten
/// times before failing.
pub fn solve_steady(
    disc: &Discretization<'_>,
    initial: Vec<Prim>,
    opts: &SteadyOptions,
) -> Result<SteadyReport, SolverError> {
    opts.validate()?;
    let mesh = disc.mesh;
    let coloring = greedy_coloring(mesh);
    let start = Instant::now();
    let mut prims = initial;
    let mut history = Vec::new();
    let mut first = None;
    let mut converged = false;
    let mut dropped = 0.0;
    let mut res = disc
        .residual(&prims, 0.0)
        .map_err(|source| SolverError::Residual { iter: 0, source })?;
    for iter in 0..=opts.max_iterations {
        let l1 = residual_l1(&res);
        let total: f64 = l1.iter().sum();
        if !total.is_finite() {
            return Err(SolverError::NotFinite { iter });
        }
        let cfl = opts.cfl(iter);
        history.push(IterationRecord {
            iteration: iter,
            l1,
            cfl,
            seconds: start.elapsed().as_secs_f64(),
        });
        let reference = *first.get_or_insert(total);
        dropped = if total > 0.0 { (reference / total).log10() } else { f64::INFINITY };
        log::debug!("iter {iter} res {total:e} drop {dropped:.2}");
        if dropped >= opts.orders || total <= opts.absolute_tolerance {
            converged = true;
            break;
        }
        if iter == opts.max_iterations {
            break;
        }
        let jac = build_first_order_jacobian(disc, &prims, cfl)?;
        let rhs: Vec<State> = res.iter().map(|r| r.map(|v| -v)).collect();
        let du = relax(mesh, &jac, &coloring, &rhs, opts.sweeps)?;
        let cons = to_cons(&prims);
        // backtrack until cells, face states and the residual are all valid
        let mut scale = 1.0;
        loop {
            let trial: Vec<State> = cons
                .iter()
                .zip(&du)
                .map(|(u, d)| std::array::from_fn(|k| u[k] + scale * d[k]))
                .collect();
            let failure = match to_prims(&trial) {
                Ok(p) => match disc.residual(&p, 0.0) {
                    Ok(r) if r.iter().flatten().all(|v| v.is_finite()) => {
                        prims = p;
                        res = r;
                        break;
                    }
                    Ok(_) => SolverError::NotFinite { iter: iter + 1 },
                    Err(source) => SolverError::Residual { iter: iter + 1, source },
                },
                Err((cell, source)) => SolverError::Unrealizable { iter: iter + 1, cell, source },
            };
            scale *= 0.5;
            if scale < 1e-3 {
                return Err(failure);
            }
            log::debug!("iter {iter}: backtracking to {scale} ({failure})");
        }
    }
    Ok(SteadyReport {
        prims,
        history,
        converged,
        orders_dropped: dropped,
    })
}
