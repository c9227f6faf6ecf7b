//! Three-stage SSP Runge-Kutta with optional mass-matrix inversion.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{spectral_sums, to_cons, to_prims, SolverError};
use crate::euler::{Prim, State};
use crate::lsq::LsqOperator;
use crate::mesh::TetMesh;
use crate::residual::Discretization;
use crate::vec3;

/// `(Mz)_j = V_j z_j + (V_j/40) Σ_i ∇z_i·(x_i − x_j)`, with `∇z_i` from `lsq`.
pub fn mass_matrix_apply(mesh: &TetMesh, lsq: &LsqOperator, z: &[State]) -> Vec<State> {
    let grads = lsq.gradients(z);
    (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let xj = mesh.cell_centroid[c];
            let v = mesh.cell_volume[c];
            let mut out = z[c];
            for &i in &mesh.cells[c] {
                let dx = vec3::sub(mesh.nodes[i], xj);
                for k in 0..5 {
                    out[k] += vec3::dot(grads[i][k], dx) / 40.0;
                }
            }
            out.map(|x| x * v)
        })
        .collect()
}

/// Result of the fixed-point mass-matrix solve.
#[derive(Debug, Clone)]
pub struct MassSolve {
    pub z: Vec<State>,
    /// Summed L1 norm of `Mz − b` before each update, ending with the final one.
    pub residuals: Vec<f64>,
}

impl MassSolve {
    pub fn iterations(&self) -> usize {
        self.residuals.len() - 1
    }
}

fn l1(r: &[State]) -> f64 {
    r.iter().flatten().map(|v| v.abs()).sum()
}

/// Solves `Mz = b` by `z ← z − V⁻¹(Mz − b)` from `z = V⁻¹b`, until the
/// residual drops `orders` decades or `max_iterations` updates are done.
pub fn mass_matrix_solve(
    mesh: &TetMesh,
    lsq: &LsqOperator,
    b: &[State],
    orders: f64,
    max_iterations: usize,
) -> Result<MassSolve, SolverError> {
    let inv_v: Vec<f64> = mesh.cell_volume.iter().map(|v| 1.0 / v).collect();
    let mut z: Vec<State> = b.iter().zip(&inv_v).map(|(x, iv)| x.map(|v| v * iv)).collect();
    // round-off floor relative to the right-hand side
    let floor = 1e-14 * l1(b);
    let mut residuals = Vec::new();
    for iter in 0..=max_iterations {
        let mz = mass_matrix_apply(mesh, lsq, &z);
        let r: Vec<State> = mz.iter().zip(b).map(|(m, x)| std::array::from_fn(|k| m[k] - x[k])).collect();
        let norm = l1(&r);
        if let Some(&prev) = residuals.last() {
            if norm > prev {
                return Err(SolverError::MassMatrixDiverged { iter, from: prev, to: norm });
            }
        }
        residuals.push(norm);
        let first = residuals[0];
        if norm <= first * 10f64.powf(-orders) || norm <= floor || iter == max_iterations {
            break;
        }
        for ((zj, rj), iv) in z.iter_mut().zip(&r).zip(&inv_v) {
            for k in 0..5 {
                zj[k] -= rj[k] * iv;
            }
        }
    }
    Ok(MassSolve { z, residuals })
}

/// One SSP-RK3 step of `du/dt = rhs(u, t)`, with stage times `t`, `t+Δt`, `t+Δt/2`.
pub fn ssprk3_step<E, F>(u: &[State], t: f64, dt: f64, mut rhs: F) -> Result<Vec<State>, (usize, E)>
where
    F: FnMut(&[State], f64) -> Result<Vec<State>, E>,
{
    let combine = |a: f64, x: &[State], b: f64, y: &[State], c: f64, l: &[State]| -> Vec<State> {
        x.iter()
            .zip(y)
            .zip(l)
            .map(|((x, y), l)| std::array::from_fn(|k| a * x[k] + b * y[k] + c * l[k]))
            .collect()
    };
    let l0 = rhs(u, t).map_err(|e| (1, e))?;
    let u1 = combine(1.0, u, 0.0, u, dt, &l0);
    let l1 = rhs(&u1, t + dt).map_err(|e| (2, e))?;
    let u2 = combine(0.75, u, 0.25, &u1, 0.25 * dt, &l1);
    let l2 = rhs(&u2, t + 0.5 * dt).map_err(|e| (3, e))?;
    Ok(combine(1.0 / 3.0, u, 2.0 / 3.0, &u2, 2.0 / 3.0 * dt, &l2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeStepPolicy {
    /// `Δt = CFL · min_j V_j / Σ_T (|u_n|+a)|n_T|/2`, recomputed every step.
    Cfl(f64),
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnsteadyOptions {
    pub t_final: f64,
    pub time_step: TimeStepPolicy,
    pub mass_orders: f64,
    pub mass_max_iterations: usize,
}

impl Default for UnsteadyOptions {
    fn default() -> Self {
        UnsteadyOptions {
            t_final: 0.5,
            time_step: TimeStepPolicy::Cfl(0.95),
            mass_orders: 3.0,
            mass_max_iterations: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UnsteadyReport {
    pub prims: Vec<Prim>,
    pub steps: usize,
    pub time: f64,
    /// `(step, time, Δt, seconds)` per completed step.
    pub history: Vec<(usize, f64, f64, f64)>,
    /// Largest number of mass-matrix sweeps used in any stage.
    pub max_mass_iterations: usize,
}

fn stable_dt(disc: &Discretization<'_>, prims: &[Prim], t: f64, cfl: f64) -> f64 {
    let sums = spectral_sums(disc, prims, t);
    let m = disc
        .mesh
        .cell_volume
        .iter()
        .zip(&sums)
        .map(|(v, s)| v / s)
        .fold(f64::INFINITY, f64::min);
    cfl * m
}

/// Advances from `t0` to `opts.t_final`; the last step is shortened to land
/// on `t_final` exactly.
pub fn advance(
    disc: &Discretization<'_>,
    initial: Vec<Prim>,
    t0: f64,
    opts: &UnsteadyOptions,
) -> Result<UnsteadyReport, SolverError> {
    if !(opts.t_final > t0) {
        return Err(SolverError::Invalid(format!("t_final {} must exceed start time {t0}", opts.t_final)));
    }
    let mesh = disc.mesh;
    let start = Instant::now();
    let mut u = to_cons(&initial);
    let mut prims = initial;
    let mut t = t0;
    let mut steps = 0;
    let mut history = Vec::new();
    let mut max_mass = 0;
    let use_mass = disc.scheme.mass_matrix;
    while t < opts.t_final {
        let mut dt = match opts.time_step {
            TimeStepPolicy::Cfl(cfl) => stable_dt(disc, &prims, t, cfl),
            TimeStepPolicy::Fixed(dt) => dt,
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(SolverError::Stage { time: t, stage: 0, reason: format!("bad time step {dt}") });
        }
        if t + dt >= opts.t_final * (1.0 - 1e-12) {
            dt = opts.t_final - t;
        }
        let rhs = |state: &[State], time: f64| -> Result<Vec<State>, String> {
            let w = to_prims(state).map_err(|(c, e)| format!("cell {c}: {e}"))?;
            let res = disc.residual(&w, time).map_err(|e| e.to_string())?;
            if res.iter().flatten().any(|v| !v.is_finite()) {
                return Err("residual is not finite".into());
            }
            let b: Vec<State> = res.iter().map(|r| r.map(|v| -v)).collect();
            if use_mass {
                let sol = mass_matrix_solve(mesh, &disc.lsq, &b, opts.mass_orders, opts.mass_max_iterations)
                    .map_err(|e| e.to_string())?;
                max_mass = max_mass.max(sol.iterations());
                Ok(sol.z)
            } else {
                Ok(b.iter()
                    .zip(&mesh.cell_volume)
                    .map(|(x, v)| x.map(|y| y / v))
                    .collect())
            }
        };
        u = ssprk3_step(&u, t, dt, rhs).map_err(|(stage, reason)| SolverError::Stage { time: t, stage, reason })?;
        prims = to_prims(&u).map_err(|(c, e)| SolverError::Stage {
            time: t + dt,
            stage: 3,
            reason: format!("cell {c}: {e}"),
        })?;
        steps += 1;
        t = if dt == opts.t_final - t { opts.t_final } else { t + dt };
        history.push((steps, t, dt, start.elapsed().as_secs_f64()));
    }
    Ok(UnsteadyReport {
        prims,
        steps,
        time: t,
        history,
        max_mass_iterations: max_mass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lsq::{FitOrder, StencilMode};
    use crate::mesh::generate_cube_grid;

    #[test]
    fn ssprk3_is_third_order_on_linear_decay() {
        // du/dt = -u + sin t, exact solution known in closed form
        let exact = |t: f64| 1.5 * (-t).exp() + 0.5 * (t.sin() - t.cos());
        let err = |n: usize| {
            let dt = 1.0 / n as f64;
            let mut u = vec![[exact(0.0), 0.0, 0.0, 0.0, 0.0]];
            for s in 0..n {
                u = ssprk3_step(&u, s as f64 * dt, dt, |u: &[State], t| {
                    Ok::<_, ()>(vec![[-u[0][0] + t.sin(), 0.0, 0.0, 0.0, 0.0]])
                })
                .unwrap();
            }
            (u[0][0] - exact(1.0)).abs()
        };
        let order = (err(20) / err(40)).log2();
        assert!((order - 3.0).abs() < 0.1, "{order}");
    }

    #[test]
    fn mass_matrix_of_ones_is_the_volume() {
        let mesh = generate_cube_grid(4, 0.3, 3).unwrap();
        let lsq = LsqOperator::build(&mesh, StencilMode::NodeNeighbor, FitOrder::Quadratic).unwrap();
        let m = mass_matrix_apply(&mesh, &lsq, &vec![[1.0; 5]; mesh.n_cells()]);
        for (c, v) in m.iter().zip(&mesh.cell_volume) {
            for k in 0..5 {
                assert!((c[k] - v).abs() < 1e-13 * v.max(1e-3));
            }
        }
        // constant b/V is already solved
        let b: Vec<State> = mesh.cell_volume.iter().map(|v| [*v; 5]).collect();
        let s = mass_matrix_solve(&mesh, &lsq, &b, 3.0, 5).unwrap();
        assert_eq!(s.iterations(), 0);
    }

    #[test]
    fn mass_matrix_solve_inverts_apply() {
        let mesh = generate_cube_grid(6, 0.3, 3).unwrap();
        let lsq = LsqOperator::build(&mesh, StencilMode::NodeNeighbor, FitOrder::Quadratic).unwrap();
        let z: Vec<State> = mesh
            .cell_centroid
            .iter()
            .map(|x| std::array::from_fn(|k| (x[0] * (k + 1) as f64 + 2.0 * x[1] * x[2]).sin() + (x[1] - x[0]).exp()))
            .collect();
        let b = mass_matrix_apply(&mesh, &lsq, &z);
        let s = mass_matrix_solve(&mesh, &lsq, &b, 9.0, 30).unwrap();
        let err = z.iter().zip(&s.z).flat_map(|(a, b)| (0..5).map(move |k| (a[k] - b[k]).abs())).fold(0.0, f64::max);
        assert!(err < 1e-9, "{err} {:?}", s.residuals);
    }

    #[test]
    fn mass_matrix_integrates_quadratics_exactly() {
        use crate::quadrature::integrate_tet;
        let mesh = generate_cube_grid(5, 0.3, 7).unwrap();
        let lsq = LsqOperator::build(&mesh, StencilMode::NodeNeighbor, FitOrder::Quadratic).unwrap();
        let q = |x: crate::vec3::Vec3| 1.0 + x[0] * x[0] - 2.0 * x[1] * x[2] + 0.5 * x[2] * x[2] + x[1];
        let z: Vec<State> = mesh.cell_centroid.iter().map(|&x| [q(x); 5]).collect();
        let m = mass_matrix_apply(&mesh, &lsq, &z);
        for c in 0..mesh.n_cells() {
            let exact = integrate_tet(&mesh.cell_nodes_xyz(c), 4, q);
            assert!((m[c][0] - exact).abs() < 1e-12 * mesh.cell_volume[c].max(1e-3), "{c}");
        }
    }
}
