//! Simplex Green-Gauss gradients, the projected-derivative identities and
//! analytic second-moment integrals.
//!
//! With values `g_i` at the vertices of a tetrahedron, the Green-Gauss gradient
//! projected onto any displacement from the centroid collapses to a difference
//! of nodal means: `∇g·(x − x_j) = g(x) − ḡ_j`, where `g(x)` is a linearly exact
//! value at `x`. The discretization uses these forms in place of second
//! derivatives; the explicit gradients and moment tensors here serve as
//! verification oracles.

use crate::vec3::{self, Vec3};

/// Inward area-weighted normal of the face opposite vertex `i`.
pub fn inward_face_normal(p: &[Vec3; 4], i: usize) -> Vec3 {
    let others: Vec<Vec3> = (0..4).filter(|&k| k != i).map(|k| p[k]).collect();
    let n = vec3::scale(
        vec3::cross(vec3::sub(others[1], others[0]), vec3::sub(others[2], others[0])),
        0.5,
    );
    let toward = vec3::sub(p[i], others[0]);
    if vec3::dot(n, toward) < 0.0 {
        vec3::scale(n, -1.0)
    } else {
        n
    }
}

/// Green-Gauss gradient `(1/3V) Σ g_i n_i` over a tetrahedron (inward normals).
pub fn green_gauss_gradient_tet(values: [f64; 4], p: &[Vec3; 4]) -> Vec3 {
    let volume = vec3::tet_volume(p[0], p[1], p[2], p[3]).abs();
    let mut g = [0.0; 3];
    for (i, &value) in values.iter().enumerate() {
        g = vec3::add(g, vec3::scale(inward_face_normal(p, i), value));
    }
    vec3::scale(g, 1.0 / (3.0 * volume))
}

/// In-plane Green-Gauss gradient over a triangle from its edge midpoint values.
pub fn green_gauss_gradient_tri(values: [f64; 3], p: &[Vec3; 3]) -> Vec3 {
    let normal = vec3::cross(vec3::sub(p[1], p[0]), vec3::sub(p[2], p[0]));
    let area = 0.5 * vec3::norm(normal);
    let unit = vec3::normalize(normal);
    let mut g = [0.0; 3];
    for e in 0..3 {
        let a = e;
        let b = (e + 1) % 3;
        // outward in-plane edge normal with length equal to the edge length
        let edge_normal = vec3::cross(vec3::sub(p[b], p[a]), unit);
        g = vec3::add(g, vec3::scale(edge_normal, 0.5 * (values[a] + values[b])));
    }
    vec3::scale(g, 1.0 / area)
}

/// Where a projected derivative from the tetrahedron centroid is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionTarget {
    /// Centroid of the face opposite the given vertex.
    FaceCentroid(usize),
    /// One of the tetrahedron's vertices.
    Node(usize),
    /// An arbitrary point, given by a linearly exact value there.
    Point(f64),
}

/// `∇g^GG·(x − x_j)` from nodal values alone.
pub fn projected_derivative_tet(values: [f64; 4], target: ProjectionTarget) -> f64 {
    let mean = 0.25 * (values[0] + values[1] + values[2] + values[3]);
    match target {
        ProjectionTarget::FaceCentroid(opposite) => {
            let others: f64 = (0..4).filter(|&k| k != opposite).map(|k| values[k]).sum();
            0.25 * (others / 3.0 - values[opposite])
        }
        ProjectionTarget::Node(i) => values[i] - mean,
        ProjectionTarget::Point(g) => g - mean,
    }
}

/// `∇g_T^GG·(x_i − x_T)` on a triangle.
pub fn projected_derivative_tri(values: [f64; 3], vertex: usize) -> f64 {
    values[vertex] - (values[0] + values[1] + values[2]) / 3.0
}

/// Symmetric second moments about a reference point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MomentTensor {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
    pub yz: f64,
    pub zz: f64,
    pub zx: f64,
}

impl MomentTensor {
    fn accumulate(points: &[Vec3], center: Vec3, factor: f64) -> Self {
        let mut m = MomentTensor::default();
        for p in points {
            let d = vec3::sub(*p, center);
            m.xx += d[0] * d[0];
            m.xy += d[0] * d[1];
            m.yy += d[1] * d[1];
            m.yz += d[1] * d[2];
            m.zz += d[2] * d[2];
            m.zx += d[2] * d[0];
        }
        m.scaled(factor)
    }

    fn scaled(self, s: f64) -> Self {
        MomentTensor {
            xx: self.xx * s,
            xy: self.xy * s,
            yy: self.yy * s,
            yz: self.yz * s,
            zz: self.zz * s,
            zx: self.zx * s,
        }
    }

    pub fn as_matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.xx, self.xy, self.zx],
            [self.xy, self.yy, self.yz],
            [self.zx, self.yz, self.zz],
        ]
    }

    /// `Σ_ab H_ab M_ab` for a symmetric `H`.
    pub fn contract(&self, h: &[[f64; 3]; 3]) -> f64 {
        let m = self.as_matrix();
        let mut s = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                s += h[a][b] * m[a][b];
            }
        }
        s
    }
}

/// `∫_T (x − x_T)⊗(x − x_T) ds = (1/12) Σ Δx_i⊗Δx_i |n_T|` about the centroid.
pub fn triangle_second_moments(p: &[Vec3; 3]) -> MomentTensor {
    let area = 0.5 * vec3::norm(vec3::cross(vec3::sub(p[1], p[0]), vec3::sub(p[2], p[0])));
    MomentTensor::accumulate(p, vec3::mean(p), area / 12.0)
}

/// `∫_V (x − x_j)⊗(x − x_j) dV = (1/20) Σ Δx_i⊗Δx_i V_j` about the centroid.
pub fn tet_second_moments(p: &[Vec3; 4]) -> MomentTensor {
    let volume = vec3::tet_volume(p[0], p[1], p[2], p[3]).abs();
    MomentTensor::accumulate(p, vec3::mean(p), volume / 20.0)
}
