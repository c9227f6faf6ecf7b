//! Manufactured and exact solutions, their source terms, error norms and
//! nodal solution recovery.
//!
//! Solutions are written once in terms of second-order Taylor jets in
//! `(x, y, z, t)`. Propagating the jets through the flux gives the source
//! `s = ∂u/∂t + div F` and its spatial gradient by the chain rule, without
//! hand-derived derivative formulas.

use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::euler::{Prim, State, GAMMA};
use crate::interp::Grad5;
use crate::mesh::TetMesh;
use crate::vec3::{self, Vec3};

/// Value, gradient and Hessian with respect to `(x, y, z, t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 4],
    pub h: [[f64; 4]; 4],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet {
            v,
            g: [0.0; 4],
            h: [[0.0; 4]; 4],
        }
    }

    /// The independent variable with index `k` (0..4) at `value`.
    pub fn var(k: usize, value: f64) -> Self {
        let mut j = Jet::constant(value);
        j.g[k] = 1.0;
        j
    }

    /// Applies a scalar function given its value and first two derivatives.
    pub fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Jet::constant(f);
        for a in 0..4 {
            out.g[a] = df * self.g[a];
            for b in 0..4 {
                out.h[a][b] = df * self.h[a][b] + d2f * self.g[a] * self.g[b];
            }
        }
        out
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }

    pub fn powf(self, k: f64) -> Self {
        let x = self.v;
        self.chain(x.powf(k), k * x.powf(k - 1.0), k * (k - 1.0) * x.powf(k - 2.0))
    }

    pub fn recip(self) -> Self {
        let x = self.v;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    /// First derivative along variable `k`, as a jet that is exact to first order.
    pub fn d(self, k: usize) -> Self {
        Jet {
            v: self.g[k],
            g: self.h[k],
            h: [[0.0; 4]; 4],
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut r = self;
        r.v += o.v;
        for a in 0..4 {
            r.g[a] += o.g[a];
            for b in 0..4 {
                r.h[a][b] += o.h[a][b];
            }
        }
        r
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut r = Jet::constant(self.v * o.v);
        for a in 0..4 {
            r.g[a] = self.v * o.g[a] + o.v * self.g[a];
            for b in 0..4 {
                r.h[a][b] = self.v * o.h[a][b]
                    + o.v * self.h[a][b]
                    + self.g[a] * o.g[b]
                    + o.g[a] * self.g[b];
            }
        }
        r
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        let mut r = self;
        r.v += c;
        r
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, c: f64) -> Jet {
        self + (-c)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        let mut r = self;
        r.v *= c;
        for a in 0..4 {
            r.g[a] *= c;
            for b in 0..4 {
                r.h[a][b] *= c;
            }
        }
        r
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, j: Jet) -> Jet {
        j * self
    }
}

impl Add<Jet> for f64 {
    type Output = Jet;
    fn add(self, j: Jet) -> Jet {
        j + self
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, j: Jet) -> Jet {
        -j + self
    }
}

/// Parameters of the isentropic vortex moving in the x-z plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexParams {
    pub alpha: f64,
    pub strength: f64,
    pub u_inf: f64,
    pub w_inf: f64,
}

impl Default for VortexParams {
    fn default() -> Self {
        VortexParams {
            alpha: 0.8,
            strength: 6.0,
            u_inf: 0.1,
            w_inf: 0.0,
        }
    }
}

/// Registered exact solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solution {
    /// Steady exponential field with `ρ = p = 1+e^s`, `u = v = w = 0.2+e^s`, `s = (x+y+z)/2`.
    SteadyExp,
    /// Potential vortex about the y-axis, tangent to cylinders `x²+z² = const`.
    CylinderVortex,
    /// Unsteady exponential field in `s = 0.75x + 0.35y + 0.65z + 0.65t`.
    UnsteadyExp,
    /// Isentropic vortex transport; an exact Euler solution with zero source.
    VortexTransport(VortexParams),
    /// Uniform state.
    Uniform(Prim),
}

/// Names accepted by [`Solution::from_name`].
pub const SOLUTION_NAMES: &[&str] = &["steady-exp", "cylinder-vortex", "unsteady-exp", "vortex-transport"];

impl Solution {
    pub fn from_name(name: &str) -> Result<Self, String> {
        match name {
            "steady-exp" => Ok(Solution::SteadyExp),
            "cylinder-vortex" => Ok(Solution::CylinderVortex),
            "unsteady-exp" => Ok(Solution::UnsteadyExp),
            "vortex-transport" => Ok(Solution::VortexTransport(VortexParams::default())),
            _ => Err(format!(
                "unknown solution `{name}`; available: {}",
                SOLUTION_NAMES.join(", ")
            )),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Solution::SteadyExp => "steady-exp",
            Solution::CylinderVortex => "cylinder-vortex",
            Solution::UnsteadyExp => "unsteady-exp",
            Solution::VortexTransport(_) => "vortex-transport",
            Solution::Uniform(_) => "uniform",
        }
    }

    pub fn is_steady(&self) -> bool {
        matches!(
            self,
            Solution::SteadyExp | Solution::CylinderVortex | Solution::Uniform(_)
        )
    }

    /// Primitive variables as jets at `(x, t)`.
    pub fn jets(&self, x: Vec3, t: f64) -> [Jet; 5] {
        let [px, py, pz] = [Jet::var(0, x[0]), Jet::var(1, x[1]), Jet::var(2, x[2])];
        let pt = Jet::var(3, t);
        match *self {
            Solution::SteadyExp => {
                let e = ((px + py + pz) * 0.5).exp();
                let a = 1.0 + e;
                let b = 0.2 + e;
                [a, b, b, b, a]
            }
            Solution::CylinderVortex => {
                let k = 1.0 / (2.0 * PI);
                let r2 = px * px + pz * pz;
                let u = k * pz / r2;
                let w = -k * px / r2;
                let p = (u * u + w * w) * 0.5 + 1.0 / GAMMA;
                let r = (r2 + py * py).sqrt();
                let rho = 1.0 + 0.1 * (1.0 - (-1.5 * (r - 0.5)).exp()) * (1.0 / (1.0 - (-1.5f64).exp()));
                [rho, u, Jet::constant(0.0), w, p]
            }
            Solution::UnsteadyExp => {
                let e = (0.75 * px + 0.35 * py + 0.65 * pz + 0.65 * pt).exp();
                [
                    1.0 + 0.1 * e,
                    0.2 + 0.1 * e,
                    0.1 + 0.2 * e,
                    0.3 + 0.3 * e,
                    1.3 + 1.2 * e,
                ]
            }
            Solution::VortexTransport(v) => {
                let xb = px - v.u_inf * pt;
                let zb = pz - v.w_inf * pt;
                let r2 = xb * xb + zb * zb;
                let bump = ((1.0 - r2) * (0.5 * v.alpha)).exp();
                let c = v.strength / (2.0 * PI);
                let u = v.u_inf - c * zb * bump;
                let w = v.w_inf + c * xb * bump;
                let temp = 1.0
                    - v.strength * v.strength * (GAMMA - 1.0) / (8.0 * v.alpha * PI * PI)
                        * ((1.0 - r2) * v.alpha).exp();
                let rho = temp.powf(1.0 / (GAMMA - 1.0));
                let p = rho.powf(GAMMA) * (1.0 / GAMMA);
                [rho, u, Jet::constant(0.0), w, p]
            }
            Solution::Uniform(w) => w.0.map(Jet::constant),
        }
    }

    pub fn prim(&self, x: Vec3, t: f64) -> Prim {
        Prim(self.jets(x, t).map(|j| j.v))
    }

    /// Exact spatial gradient of the primitives.
    pub fn prim_gradient(&self, x: Vec3, t: f64) -> Grad5 {
        self.jets(x, t).map(|j| [j.g[0], j.g[1], j.g[2]])
    }

    /// Source `s = ∂u/∂t + div F(w)` and its spatial gradient.
    pub fn source(&self, x: Vec3, t: f64) -> (State, [Vec3; 5]) {
        if let Solution::Uniform(_) = self {
            return ([0.0; 5], [[0.0; 3]; 5]);
        }
        let [rho, u, v, w, p] = self.jets(x, t);
        let vel = [u, v, w];
        let ke = (u * u + v * v + w * w) * 0.5;
        let rho_e = p * (1.0 / (GAMMA - 1.0)) + rho * ke;
        let cons = [rho, rho * u, rho * v, rho * w, rho_e];
        let mut s = [Jet::constant(0.0); 5];
        for k in 0..5 {
            s[k] = cons[k].d(3);
        }
        for d in 0..3 {
            let q = vel[d];
            let flux = [
                rho * q,
                rho * u * q,
                rho * v * q,
                rho * w * q,
                (rho_e + p) * q,
            ];
            for k in 0..5 {
                let mut f = flux[k];
                if k == d + 1 {
                    f = f + p;
                }
                s[k] = s[k] + f.d(d);
            }
        }
        (s.map(|j| j.v), s.map(|j| [j.g[0], j.g[1], j.g[2]]))
    }
}

/// Per-variable error norms against an exact solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l1: [f64; 5],
    pub l2: [f64; 5],
    pub linf: [f64; 5],
}

/// Pointwise errors at centroids, volume-weighted L1 and L2 plus max.
pub fn error_norms(mesh: &TetMesh, prims: &[Prim], solution: &Solution, t: f64) -> ErrorNorms {
    let mut l1 = [0.0; 5];
    let mut l2 = [0.0; 5];
    let mut linf = [0.0f64; 5];
    let total = mesh.total_volume();
    for (c, w) in prims.iter().enumerate() {
        let exact = solution.prim(mesh.cell_centroid[c], t);
        let v = mesh.cell_volume[c];
        for k in 0..5 {
            let e = (w.0[k] - exact.0[k]).abs();
            l1[k] += e * v;
            l2[k] += e * e * v;
            linf[k] = linf[k].max(e);
        }
    }
    for k in 0..5 {
        l1[k] /= total;
        l2[k] = (l2[k] / total).sqrt();
    }
    ErrorNorms { l1, l2, linf }
}

/// Entropy error `|γp/ρ^γ − 1|`: volume-weighted L1 and max over cells.
pub fn entropy_error(mesh: &TetMesh, prims: &[Prim]) -> (f64, f64) {
    let mut l1 = 0.0;
    let mut linf = 0.0f64;
    for (c, w) in prims.iter().enumerate() {
        let e = (GAMMA * w.p() / w.rho().powf(GAMMA) - 1.0).abs();
        l1 += e * mesh.cell_volume[c];
        linf = linf.max(e);
    }
    (l1 / mesh.total_volume(), linf)
}

/// Nodal values averaged from the cells sharing each node.
///
/// With `quadratic`, each cell contributes `w_k + ½(g_i + ḡ_k)·(x_i − x_k)`;
/// otherwise `w_k + ḡ_k·(x_i − x_k)`.
pub fn recover_nodal_solution(
    mesh: &TetMesh,
    prims: &[Prim],
    grads: &[Grad5],
    quadratic: bool,
) -> Vec<Prim> {
    let mut sum = vec![[0.0; 5]; mesh.n_nodes()];
    let mut count = vec![0usize; mesh.n_nodes()];
    for (c, cell) in mesh.cells.iter().enumerate() {
        let gbar = crate::interp::cell_mean_gradient(cell, grads);
        for &i in cell {
            let dx = vec3::sub(mesh.nodes[i], mesh.cell_centroid[c]);
            for k in 0..5 {
                let slope = if quadratic {
                    0.5 * (vec3::dot(grads[i][k], dx) + vec3::dot(gbar[k], dx))
                } else {
                    vec3::dot(gbar[k], dx)
                };
                sum[i][k] += prims[c].0[k] + slope;
            }
            count[i] += 1;
        }
    }
    sum.iter()
        .zip(count)
        .map(|(s, n)| Prim(s.map(|v| v / n.max(1) as f64)))
        .collect()
}
