//! Spatial residual: one-point flux quadrature with the curvature
//! correction, and the source quadrature.
//!
//! For cell `j` the residual is `Σ_T Ψ_T − V_j s̄_j`, where each face flux is
//! `Ψ_T = [Φ_T + (1/24) Σ_i (∂f/∂w)_i ∇w_i·(x_i − x_T)] |n_T|` and
//! `s̄_j = s_j + (1/40) Σ_i ∇s_i·(x_i − x_j)`. Both corrections are switched
//! by the scheme's `flux_correction` flag.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bc::BoundaryConditions;
use crate::euler::{flux_jacobian_apply, roe_flux, EulerError, Prim, State};
use crate::interp::{self, Grad5};
use crate::lsq::LsqOperator;
use crate::mesh::{FaceSide, TetMesh};
use crate::mms::Solution;
use crate::scheme::{Interpolation, Scheme};
use crate::vec3::{self, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ResidualError {
    #[error("face {face}: {source}")]
    Face { face: usize, source: EulerError },
}

/// How nodal source gradients are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceGradients {
    /// Exact derivatives of the manufactured source.
    #[default]
    Analytic,
    /// The solution's least-squares operator applied to centroid source samples.
    Lsq,
}

/// `s_j + (1/40) Σ ∇s_i·(x_i − x_j)` over the four nodes of a cell.
pub fn source_average(s_j: &State, node_grads: [&[Vec3; 5]; 4], dx: [Vec3; 4]) -> State {
    let mut out = *s_j;
    for (g, d) in node_grads.iter().zip(dx) {
        for k in 0..5 {
            out[k] += vec3::dot(g[k], d) / 40.0;
        }
    }
    out
}

/// `[Φ + (1/24) Σ_i d_i] |n|`, where `d_i = J_i ∇w_i·(x_i − x_T)` is the
/// flux derivative projected onto node `i`.
pub fn corrected_face_flux(phi: &State, projected: &[State; 3], area: f64) -> State {
    let mut out = *phi;
    for d in projected {
        for r in 0..5 {
            out[r] += d[r] / 24.0;
        }
    }
    out.map(|v| v * area)
}

/// Gradient data shared by all faces during one residual evaluation.
pub struct FaceData {
    pub nodal: Vec<Grad5>,
    /// `ḡ_j` per cell.
    pub cell_mean: Vec<Grad5>,
}

/// A mesh, scheme and boundary setup ready to evaluate residuals.
pub struct Discretization<'m> {
    pub mesh: &'m TetMesh,
    pub scheme: Scheme,
    pub lsq: LsqOperator,
    pub bc: BoundaryConditions,
    pub source: Option<Solution>,
    pub source_gradients: SourceGradients,
    unit_normal: Vec<Vec3>,
    area: Vec<f64>,
    steady_source: Option<Vec<State>>,
}

impl<'m> Discretization<'m> {
    pub fn new(
        mesh: &'m TetMesh,
        scheme: Scheme,
        lsq: LsqOperator,
        bc: BoundaryConditions,
        source: Option<Solution>,
        source_gradients: SourceGradients,
    ) -> Self {
        let area: Vec<f64> = mesh.face_normal.iter().map(|n| vec3::norm(*n)).collect();
        let unit_normal = mesh
            .face_normal
            .iter()
            .zip(&area)
            .map(|(n, a)| vec3::scale(*n, 1.0 / a))
            .collect();
        let mut d = Discretization {
            mesh,
            scheme,
            lsq,
            bc,
            source,
            source_gradients,
            unit_normal,
            area,
            steady_source: None,
        };
        if let Some(sol) = d.source {
            if sol.is_steady() {
                d.steady_source = Some(d.compute_source_integral(0.0));
            }
        }
        d
    }

    pub fn unit_normal(&self, f: usize) -> Vec3 {
        self.unit_normal[f]
    }

    pub fn area(&self, f: usize) -> f64 {
        self.area[f]
    }

    /// Nodal gradients of the primitive variables.
    pub fn nodal_gradients(&self, prims: &[Prim]) -> Vec<Grad5> {
        // Prim is a transparent wrapper over [f64; 5]
        let raw: Vec<State> = prims.iter().map(|w| w.0).collect();
        self.lsq.gradients(&raw)
    }

    /// Per-cell `ḡ_j`.
    pub fn cell_mean_gradients(&self, grads: &[Grad5]) -> Vec<Grad5> {
        self.mesh
            .cells
            .par_iter()
            .map(|c| interp::cell_mean_gradient(c, grads))
            .collect()
    }

    /// Derived gradient data for a field with nodal gradients `grads`.
    pub fn face_data(&self, _prims: &[Prim], grads: Vec<Grad5>) -> FaceData {
        let cell_mean = self.cell_mean_gradients(&grads);
        FaceData { nodal: grads, cell_mean }
    }

    /// Interpolated left state of face `f` from `cell`, given the other cell
    /// (for the UMUSCL blend) when the face is interior.
    #[inline]
    fn face_state(
        &self,
        f: usize,
        cell: usize,
        other: Option<usize>,
        prims: &[Prim],
        gbar_t: &Grad5,
        gbar: &[Grad5],
    ) -> State {
        let mesh = self.mesh;
        let xt = mesh.face_centroid[f];
        let xj = mesh.cell_centroid[cell];
        let dx = vec3::sub(xt, xj);
        let wj = &prims[cell].0;
        match self.scheme.interpolation {
            Interpolation::Ngqi => interp::ngqi_state(wj, gbar_t, &gbar[cell], dx),
            Interpolation::Fang => interp::fang_state(wj, gbar_t, dx),
            Interpolation::Cang => interp::cang_state(wj, &gbar[cell], dx),
            Interpolation::LpUmuscl { kappa } => match other {
                Some(k) => interp::lp_umuscl_state(
                    wj,
                    &prims[k].0,
                    gbar_t,
                    xj,
                    mesh.cell_centroid[k],
                    xt,
                    kappa,
                ),
                None => interp::fang_state(wj, gbar_t, dx),
            },
        }
    }

    /// Integrated flux through face `f`, oriented along its stored normal.
    pub fn face_flux(&self, f: usize, prims: &[Prim], data: &FaceData, t: f64) -> Result<State, ResidualError> {
        let mesh = self.mesh;
        let face = &mesh.faces[f];
        let n = self.unit_normal[f];
        let grads = &data.nodal;
        let gbar = &data.cell_mean;
        let gbar_t = interp::mean_gradient(&face.nodes, grads);
        let j = face.left;
        let right_cell = match face.right {
            FaceSide::Cell(k) => Some(k),
            FaceSide::Boundary(_) => None,
        };
        let wl = self.face_state(f, j, right_cell, prims, &gbar_t, gbar);
        let wr = match right_cell {
            Some(k) => self.face_state(f, k, Some(j), prims, &gbar_t, gbar),
            None => self.bc.right_state(mesh, f, &wl, t),
        };
        let phi = roe_flux(&Prim(wl), &Prim(wr), n, self.scheme.roe)
            .map_err(|source| ResidualError::Face { face: f, source })?;
        if !self.scheme.flux_correction {
            return Ok(phi.map(|v| v * self.area[f]));
        }

        let xt = mesh.face_centroid[f];
        let mut projected = [[0.0; 5]; 3];
        for (m, &i) in face.nodes.iter().enumerate() {
            let xi = mesh.nodes[i];
            let gi = &grads[i];
            let left = interp::ngqi_state(&prims[j].0, gi, &gbar[j], vec3::sub(xi, mesh.cell_centroid[j]));
            let node_state = match right_cell {
                Some(k) => {
                    let right = interp::ngqi_state(&prims[k].0, gi, &gbar[k], vec3::sub(xi, mesh.cell_centroid[k]));
                    std::array::from_fn(|c| 0.5 * (left[c] + right[c]))
                }
                None => left,
            };
            let d = vec3::sub(xi, xt);
            let delta: State = std::array::from_fn(|c| vec3::dot(gi[c], d));
            projected[m] = flux_jacobian_apply(&Prim(node_state), n, &delta);
        }
        Ok(corrected_face_flux(&phi, &projected, self.area[f]))
    }

    /// `V_j s̄_j` for every cell at time `t` (zero without a source).
    pub fn source_integral(&self, t: f64) -> Vec<State> {
        match (&self.steady_source, &self.source) {
            (Some(s), _) => s.clone(),
            (None, Some(_)) => self.compute_source_integral(t),
            (None, None) => vec![[0.0; 5]; self.mesh.n_cells()],
        }
    }

    fn compute_source_integral(&self, t: f64) -> Vec<State> {
        let mesh = self.mesh;
        let Some(sol) = self.source else {
            return vec![[0.0; 5]; mesh.n_cells()];
        };
        let centroid: Vec<(State, [Vec3; 5])> = mesh
            .cell_centroid
            .par_iter()
            .map(|&x| sol.source(x, t))
            .collect();
        if !self.scheme.flux_correction {
            return centroid
                .iter()
                .zip(&mesh.cell_volume)
                .map(|((s, _), v)| s.map(|x| x * v))
                .collect();
        }
        let node_grad: Vec<[Vec3; 5]> = match self.source_gradients {
            SourceGradients::Analytic => mesh.nodes.par_iter().map(|&x| sol.source(x, t).1).collect(),
            SourceGradients::Lsq => {
                let samples: Vec<State> = centroid.iter().map(|(s, _)| *s).collect();
                self.lsq.gradients(&samples)
            }
        };
        (0..mesh.n_cells())
            .into_par_iter()
            .map(|c| {
                let cell = mesh.cells[c];
                let xj = mesh.cell_centroid[c];
                let grads = cell.map(|i| &node_grad[i]);
                let dx = cell.map(|i| vec3::sub(mesh.nodes[i], xj));
                let avg = source_average(&centroid[c].0, grads, dx);
                avg.map(|x| x * mesh.cell_volume[c])
            })
            .collect()
    }

    /// Residual `Σ Ψ_T − V s̄` for all cells, with face data prepared.
    pub fn residual_with_data(&self, prims: &[Prim], data: &FaceData, t: f64) -> Result<Vec<State>, ResidualError> {
        let mesh = self.mesh;
        let fluxes: Vec<State> = (0..mesh.n_faces())
            .into_par_iter()
            .map(|f| self.face_flux(f, prims, data, t))
            .collect::<Result<_, _>>()?;
        let source = self.source_integral(t);
        Ok(gather(mesh, &fluxes, &source))
    }

    /// Residual `Σ Ψ_T − V s̄` for all cells.
    pub fn residual(&self, prims: &[Prim], t: f64) -> Result<Vec<State>, ResidualError> {
        let data = self.face_data(prims, self.nodal_gradients(prims));
        self.residual_with_data(prims, &data, t)
    }

    /// First-order Roe flux through face `f` with piecewise-constant states.
    #[inline]
    pub fn first_order_flux(&self, f: usize, wl: &Prim, wr_cell: Option<&Prim>, t: f64) -> Result<State, EulerError> {
        let wr = match wr_cell {
            Some(w) => *w,
            None => Prim(self.bc.right_state(self.mesh, f, &wl.0, t)),
        };
        let phi = roe_flux(wl, &wr, self.unit_normal[f], self.scheme.roe)?;
        Ok(phi.map(|v| v * self.area[f]))
    }

    /// Right state a boundary face would see for left state `wl`.
    pub fn boundary_right_state(&self, f: usize, wl: &Prim, t: f64) -> Prim {
        Prim(self.bc.right_state(self.mesh, f, &wl.0, t))
    }
}

/// Sums face fluxes into cells (out of the left cell, into the right) and
/// subtracts the source integral.
pub fn gather(mesh: &TetMesh, fluxes: &[State], source: &[State]) -> Vec<State> {
    (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let mut r = [0.0; 5];
            for &(f, is_left) in &mesh.cell_faces[c] {
                let sign = if is_left { 1.0 } else { -1.0 };
                for k in 0..5 {
                    r[k] += sign * fluxes[f][k];
                }
            }
            for k in 0..5 {
                r[k] -= source[c][k];
            }
            r
        })
        .collect()
}

/// Volume-free L1 norm per equation: `(1/N) Σ_j |R_j|`.
pub fn residual_l1(res: &[State]) -> State {
    let mut n = [0.0; 5];
    for r in res {
        for k in 0..5 {
            n[k] += r[k].abs();
        }
    }
    n.map(|v| v / res.len().max(1) as f64)
}
