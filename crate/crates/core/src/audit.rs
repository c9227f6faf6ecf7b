//! Per-element geometry audit.
//!
//! Every cell and face is checked against independent oracles: the closed
//! surface identity, centroids and second moments from quadrature, and the
//! projected-derivative forms against explicit Green-Gauss gradients. All of
//! these are exact algebra, so violations above round-off point to broken
//! connectivity or orientation rather than poor element shape.

use std::fmt;

use rayon::prelude::*;

use crate::geometry::{
    green_gauss_gradient_tet, green_gauss_gradient_tri, projected_derivative_tet, projected_derivative_tri,
    tet_second_moments, triangle_second_moments, MomentTensor, ProjectionTarget,
};
use crate::mesh::TetMesh;
use crate::quadrature::{integrate_tet, integrate_triangle};
use crate::vec3::{self, Vec3};

/// Largest scaled violation of one identity, and where it occurred.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Check {
    pub max: f64,
    pub at: usize,
}

impl Check {
    fn merge(self, other: Check) -> Check {
        if other.max > self.max || other.max.is_nan() {
            other
        } else {
            self
        }
    }

    fn of(value: f64, at: usize) -> Check {
        Check { max: value, at }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AuditReport {
    pub n_cells: usize,
    pub n_faces: usize,
    /// `|Σ n_T| / max |n_T|` per cell.
    pub closed_surface: Check,
    /// Centroid offset from the quadrature centroid, over `V^(1/3)`.
    pub cell_centroid: Check,
    /// Face centroid offset, over `sqrt(area)`.
    pub face_centroid: Check,
    /// Volume against `|det| / 6` from the nodes, relative.
    pub cell_volume: Check,
    pub tet_moments: Check,
    pub tri_moments: Check,
    pub tet_projected: Check,
    pub tri_projected: Check,
    /// Faces whose normal does not point from the left cell toward the face.
    pub misoriented_faces: Vec<usize>,
    /// Cells that were listed with negative orientation in the input.
    pub flipped_cells: Vec<usize>,
}

impl AuditReport {
    pub fn checks(&self) -> [(&'static str, Check); 8] {
        [
            ("closed_surface", self.closed_surface),
            ("cell_centroid", self.cell_centroid),
            ("face_centroid", self.face_centroid),
            ("cell_volume", self.cell_volume),
            ("tet_moments", self.tet_moments),
            ("tri_moments", self.tri_moments),
            ("tet_projected_derivative", self.tet_projected),
            ("tri_projected_derivative", self.tri_projected),
        ]
    }

    /// True when every identity holds to `tol` and no element is flipped.
    pub fn passes(&self, tol: f64) -> bool {
        self.checks().iter().all(|(_, c)| c.max <= tol)
            && self.misoriented_faces.is_empty()
            && self.flipped_cells.is_empty()
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cells {}  faces {}", self.n_cells, self.n_faces)?;
        for (name, c) in self.checks() {
            writeln!(f, "{name:<26} max {:.3e}  (element {})", c.max, c.at)?;
        }
        writeln!(f, "{:<26} {}", "misoriented_faces", self.misoriented_faces.len())?;
        write!(f, "{:<26} {}", "flipped_cells", self.flipped_cells.len())?;
        if !self.flipped_cells.is_empty() {
            let shown: Vec<String> = self.flipped_cells.iter().take(10).map(|c| c.to_string()).collect();
            write!(f, "  (cells {})", shown.join(", "))?;
        }
        Ok(())
    }
}

fn moment_gap(a: &MomentTensor, b: &MomentTensor) -> f64 {
    let (a, b) = (a.as_matrix(), b.as_matrix());
    let mut m = 0.0f64;
    for r in 0..3 {
        for c in 0..3 {
            m = m.max((a[r][c] - b[r][c]).abs());
        }
    }
    m
}

fn moments_by_quadrature(center: Vec3, integrate: impl Fn(&dyn Fn(Vec3) -> f64) -> f64) -> MomentTensor {
    let d = |x: Vec3, a: usize, b: usize| (x[a] - center[a]) * (x[b] - center[b]);
    MomentTensor {
        xx: integrate(&|x| d(x, 0, 0)),
        xy: integrate(&|x| d(x, 0, 1)),
        yy: integrate(&|x| d(x, 1, 1)),
        yz: integrate(&|x| d(x, 1, 2)),
        zz: integrate(&|x| d(x, 2, 2)),
        zx: integrate(&|x| d(x, 2, 0)),
    }
}

/// Smooth nodal test values; any values work since the identities are algebraic.
fn probe(x: Vec3, k: usize) -> f64 {
    (1.3 * x[0] - 0.7 * x[1] + 0.4 * x[2] + k as f64).sin() + 0.5 * x[0] * x[2]
}

#[derive(Default, Clone, Copy)]
struct CellChecks {
    closed: Check,
    centroid: Check,
    volume: Check,
    moments: Check,
    projected: Check,
}

impl CellChecks {
    fn merge(self, o: CellChecks) -> CellChecks {
        CellChecks {
            closed: self.closed.merge(o.closed),
            centroid: self.centroid.merge(o.centroid),
            volume: self.volume.merge(o.volume),
            moments: self.moments.merge(o.moments),
            projected: self.projected.merge(o.projected),
        }
    }
}

fn audit_cell(mesh: &TetMesh, c: usize) -> CellChecks {
    let p = mesh.cell_nodes_xyz(c);
    let vol = mesh.cell_volume[c];
    let h = vol.abs().cbrt();

    let mut sum = [0.0; 3];
    let mut largest = 0.0f64;
    for &(f, is_left) in &mesh.cell_faces[c] {
        let n = mesh.face_normal[f];
        largest = largest.max(vec3::norm(n));
        sum = vec3::add(sum, if is_left { n } else { vec3::scale(n, -1.0) });
    }

    let det = vec3::tet_volume(p[0], p[1], p[2], p[3]).abs();
    let xq: Vec3 = std::array::from_fn(|k| integrate_tet(&p, 1, |x| x[k]) / det);
    let centroid = vec3::norm(vec3::sub(xq, mesh.cell_centroid[c])) / h;

    let quad = moments_by_quadrature(mesh.cell_centroid[c], |g| integrate_tet(&p, 2, g));
    let moments = moment_gap(&tet_second_moments(&p), &quad) / (det * h * h);

    let values: [f64; 4] = std::array::from_fn(|i| probe(p[i], c));
    let scale = values.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
    let grad = green_gauss_gradient_tet(values, &p);
    let xc = vec3::mean(&p);
    let mut projected = 0.0f64;
    for i in 0..4 {
        let at_node = vec3::dot(grad, vec3::sub(p[i], xc));
        projected = projected.max((at_node - projected_derivative_tet(values, ProjectionTarget::Node(i))).abs());
        let others: Vec<Vec3> = (0..4).filter(|&k| k != i).map(|k| p[k]).collect();
        let at_face = vec3::dot(grad, vec3::sub(vec3::mean(&others), xc));
        projected = projected
            .max((at_face - projected_derivative_tet(values, ProjectionTarget::FaceCentroid(i))).abs());
    }

    CellChecks {
        closed: Check::of(vec3::norm(sum) / largest, c),
        centroid: Check::of(centroid, c),
        volume: Check::of((vol - det).abs() / det, c),
        moments: Check::of(moments, c),
        projected: Check::of(projected / scale, c),
    }
}

fn audit_face(mesh: &TetMesh, f: usize) -> (Check, Check, Check, bool) {
    let nodes = mesh.faces[f].nodes;
    let p = nodes.map(|i| mesh.nodes[i]);
    let area = vec3::norm(mesh.face_normal[f]);
    let xq: Vec3 = std::array::from_fn(|k| integrate_triangle(&p, 1, |x| x[k]) / area);
    let centroid = vec3::norm(vec3::sub(xq, mesh.face_centroid[f])) / area.sqrt();

    let quad = moments_by_quadrature(vec3::mean(&p), |g| integrate_triangle(&p, 2, g));
    let moments = moment_gap(&triangle_second_moments(&p), &quad) / (area * area);

    let values: [f64; 3] = std::array::from_fn(|i| probe(p[i], f));
    let scale = values.iter().fold(1e-300f64, |m, v| m.max(v.abs()));
    let grad = green_gauss_gradient_tri(values, &p);
    let xt = vec3::mean(&p);
    let projected = (0..3)
        .map(|i| (vec3::dot(grad, vec3::sub(p[i], xt)) - projected_derivative_tri(values, i)).abs())
        .fold(0.0f64, f64::max);

    let outward = vec3::dot(
        mesh.face_normal[f],
        vec3::sub(mesh.face_centroid[f], mesh.cell_centroid[mesh.faces[f].left]),
    ) > 0.0;
    (
        Check::of(centroid, f),
        Check::of(moments, f),
        Check::of(projected / scale, f),
        outward,
    )
}

/// Runs every check on every element.
pub fn audit_mesh(mesh: &TetMesh) -> AuditReport {
    let cells = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| audit_cell(mesh, c))
        .reduce(CellChecks::default, CellChecks::merge);
    let faces: Vec<_> = (0..mesh.n_faces()).into_par_iter().map(|f| audit_face(mesh, f)).collect();
    let mut report = AuditReport {
        n_cells: mesh.n_cells(),
        n_faces: mesh.n_faces(),
        closed_surface: cells.closed,
        cell_centroid: cells.centroid,
        cell_volume: cells.volume,
        tet_moments: cells.moments,
        tet_projected: cells.projected,
        flipped_cells: mesh.reoriented_cells.clone(),
        ..Default::default()
    };
    for (f, (centroid, moments, projected, outward)) in faces.into_iter().enumerate() {
        report.face_centroid = report.face_centroid.merge(centroid);
        report.tri_moments = report.tri_moments.merge(moments);
        report.tri_projected = report.tri_projected.merge(projected);
        if !outward {
            report.misoriented_faces.push(f);
        }
    }
    report
}
