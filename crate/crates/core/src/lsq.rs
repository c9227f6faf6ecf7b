//! Least-squares gradients at mesh nodes from point values at cell centroids.
//!
//! Each node fits an unweighted polynomial (linear or quadratic) through the
//! centroid values of its stencil cells. Only the gradient rows of the
//! pseudo-inverse are kept, so evaluating all nodal gradients is a single
//! sparse pass over the stencils.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mesh::TetMesh;
use crate::vec3::{self, Vec3};

#[derive(Debug, Error, PartialEq)]
pub enum LsqError {
    #[error("node {node} has {found} stencil cells, a {order} fit needs at least {needed}")]
    TooFewCells {
        node: usize,
        found: usize,
        needed: usize,
        order: FitOrder,
    },
    #[error("least-squares system at node {node} is rank deficient (min/max R diagonal {ratio:e})")]
    RankDeficient { node: usize, ratio: f64 },
    #[error("malformed coefficient cache: {0}")]
    Cache(String),
    #[error("coefficient cache was built for mesh {found}, expected {expected}")]
    HashMismatch { expected: String, found: String },
}

/// Cells gathered around each node before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StencilMode {
    /// Cells sharing the node.
    Base,
    /// Base cells plus their face neighbors.
    FaceNeighbor,
    /// Base cells plus every cell sharing a node with them.
    #[default]
    NodeNeighbor,
}

impl StencilMode {
    fn escalate(self) -> Option<StencilMode> {
        match self {
            StencilMode::Base => Some(StencilMode::FaceNeighbor),
            StencilMode::FaceNeighbor => Some(StencilMode::NodeNeighbor),
            StencilMode::NodeNeighbor => None,
        }
    }

    fn code(self) -> u8 {
        match self {
            StencilMode::Base => 0,
            StencilMode::FaceNeighbor => 1,
            StencilMode::NodeNeighbor => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(StencilMode::Base),
            1 => Some(StencilMode::FaceNeighbor),
            2 => Some(StencilMode::NodeNeighbor),
            _ => None,
        }
    }
}

/// Polynomial degree of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitOrder {
    Linear,
    Quadratic,
}

impl FitOrder {
    /// Number of polynomial coefficients.
    pub fn columns(self) -> usize {
        match self {
            FitOrder::Linear => 4,
            FitOrder::Quadratic => 10,
        }
    }

    /// Smallest accepted stencil. A linear fit through exactly four cells is an
    /// interpolation and amplifies noise badly at boundary corners.
    pub fn min_cells(self) -> usize {
        match self {
            FitOrder::Linear => 8,
            FitOrder::Quadratic => 10,
        }
    }
}

impl std::fmt::Display for FitOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitOrder::Linear => "linear",
            FitOrder::Quadratic => "quadratic",
        })
    }
}

/// Stencil of a single node in the given mode, sorted by cell id.
fn node_stencil(
    mesh: &TetMesh,
    node_cells: &[Vec<usize>],
    neighbors: &[Vec<usize>],
    node: usize,
    mode: StencilMode,
) -> Vec<usize> {
    let base = &node_cells[node];
    let mut out = base.clone();
    match mode {
        StencilMode::Base => {}
        StencilMode::FaceNeighbor => {
            for &c in base {
                out.extend_from_slice(&neighbors[c]);
            }
        }
        StencilMode::NodeNeighbor => {
            for &c in base {
                for &n in &mesh.cells[c] {
                    out.extend_from_slice(&node_cells[n]);
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Per-node stencils without any size check.
pub fn build_stencils(mesh: &TetMesh, mode: StencilMode) -> Vec<Vec<usize>> {
    let node_cells = mesh.node_cells();
    let neighbors = mesh.cell_neighbors();
    (0..mesh.n_nodes())
        .map(|i| node_stencil(mesh, &node_cells, &neighbors, i, mode))
        .collect()
}

/// Gradient coefficients for every node, stored in compressed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LsqOperator {
    pub order: FitOrder,
    pub mode: StencilMode,
    /// Content hash of the mesh the operator was built on.
    pub mesh_hash: String,
    offsets: Vec<usize>,
    cells: Vec<u32>,
    coeffs: Vec<Vec3>,
    /// Nodes whose stencil had to be widened beyond `mode`.
    pub escalated: Vec<usize>,
}

/// Solves the scaled least-squares system at one node and returns the
/// gradient coefficient triplet for each stencil member.
fn fit_node(
    node: usize,
    xi: Vec3,
    centroids: impl Iterator<Item = Vec3> + Clone,
    order: FitOrder,
) -> Result<Vec<Vec3>, LsqError> {
    let disp: Vec<Vec3> = centroids.map(|c| vec3::sub(c, xi)).collect();
    let n = disp.len();
    let m = order.columns();
    if n < order.min_cells() {
        return Err(LsqError::TooFewCells {
            node,
            found: n,
            needed: order.min_cells(),
            order,
        });
    }
    let scale = disp.iter().map(|d| vec3::norm(*d)).sum::<f64>() / n as f64;
    let inv = 1.0 / scale;

    // column-major N x m
    let mut a = vec![0.0; n * m];
    for (r, d) in disp.iter().enumerate() {
        let [x, y, z] = vec3::scale(*d, inv);
        let row = [1.0, x, y, z, 0.5 * x * x, 0.5 * y * y, 0.5 * z * z, x * y, y * z, z * x];
        for (col, v) in row.iter().take(m).enumerate() {
            a[col * n + r] = *v;
        }
    }

    // Householder QR, reflectors stored below the diagonal with separate betas
    let mut betas = vec![0.0; m];
    let mut diag = vec![0.0; m];
    for k in 0..m {
        let col = &mut a[k * n..(k + 1) * n];
        let norm_x = col[k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        let alpha = if col[k] > 0.0 { -norm_x } else { norm_x };
        diag[k] = alpha;
        if norm_x == 0.0 {
            betas[k] = 0.0;
            continue;
        }
        col[k] -= alpha;
        let vnorm2 = col[k..].iter().map(|v| v * v).sum::<f64>();
        betas[k] = if vnorm2 > 0.0 { 2.0 / vnorm2 } else { 0.0 };
        for j in k + 1..m {
            let (head, tail) = a.split_at_mut(j * n);
            let v = &head[k * n + k..k * n + n];
            let cj = &mut tail[k..n];
            let s: f64 = v.iter().zip(cj.iter()).map(|(a, b)| a * b).sum::<f64>() * betas[k];
            for (c, vv) in cj.iter_mut().zip(v) {
                *c -= s * vv;
            }
        }
    }
    let dmax = diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    let dmin = diag.iter().fold(f64::INFINITY, |acc, d| acc.min(d.abs()));
    if !(dmin > 1e-12 * dmax) {
        return Err(LsqError::RankDeficient {
            node,
            ratio: dmin / dmax,
        });
    }
    let r = |i: usize, j: usize| if i == j { diag[i] } else { a[j * n + i] };

    // Only gradient rows 1..=3 of R^{-1} Q^T are needed. Solve R^T y = e_g for
    // each gradient unknown g; the coefficients are then Q y.
    let mut out = vec![[0.0; 3]; n];
    for g in 1..=3 {
        let mut y = vec![0.0; m];
        for i in 0..m {
            let mut s = if i == g { 1.0 } else { 0.0 };
            for k in 0..i {
                s -= r(k, i) * y[k];
            }
            y[i] = s / diag[i];
        }
        // q = H_0 H_1 ... H_{m-1} [y; 0]
        let mut q = vec![0.0; n];
        q[..m].copy_from_slice(&y);
        for k in (0..m).rev() {
            if betas[k] == 0.0 {
                continue;
            }
            let v = &a[k * n + k..k * n + n];
            let s: f64 = v.iter().zip(&q[k..]).map(|(a, b)| a * b).sum::<f64>() * betas[k];
            for (qq, vv) in q[k..].iter_mut().zip(v) {
                *qq -= s * vv;
            }
        }
        for (o, qv) in out.iter_mut().zip(q) {
            o[g - 1] = qv * inv;
        }
    }
    Ok(out)
}

impl LsqOperator {
    /// Fits every node over the given stencils; fails on the first node whose
    /// system is too small or rank deficient.
    pub fn assemble(
        mesh: &TetMesh,
        stencils: &[Vec<usize>],
        order: FitOrder,
        mode: StencilMode,
    ) -> Result<Self, LsqError> {
        let coeffs: Vec<Vec<Vec3>> = stencils
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                fit_node(
                    i,
                    mesh.nodes[i],
                    s.iter().map(|&c| mesh.cell_centroid[c]),
                    order,
                )
            })
            .collect::<Result<_, _>>()?;
        Ok(Self::from_parts(mesh.content_hash(), order, mode, stencils, coeffs, Vec::new()))
    }

    /// Builds stencils in `mode` and widens them per node (base, face
    /// neighbors, node neighbors) where the fit is under-determined or
    /// singular. Widened nodes are listed in `escalated`.
    pub fn build(mesh: &TetMesh, mode: StencilMode, order: FitOrder) -> Result<Self, LsqError> {
        let node_cells = mesh.node_cells();
        let neighbors = mesh.cell_neighbors();
        let results: Vec<Result<(Vec<usize>, Vec<Vec3>, bool), LsqError>> = (0..mesh.n_nodes())
            .into_par_iter()
            .map(|i| {
                let mut m = mode;
                loop {
                    let s = node_stencil(mesh, &node_cells, &neighbors, i, m);
                    match fit_node(i, mesh.nodes[i], s.iter().map(|&c| mesh.cell_centroid[c]), order) {
                        Ok(c) => return Ok((s, c, m != mode)),
                        Err(e) => match m.escalate() {
                            Some(next) => m = next,
                            None => return Err(e),
                        },
                    }
                }
            })
            .collect();
        let mut stencils = Vec::with_capacity(results.len());
        let mut coeffs = Vec::with_capacity(results.len());
        let mut escalated = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            let (s, c, widened) = r?;
            if widened {
                escalated.push(i);
            }
            stencils.push(s);
            coeffs.push(c);
        }
        if !escalated.is_empty() {
            log::info!(
                "{} of {} nodes needed a wider {} stencil than {:?}",
                escalated.len(),
                mesh.n_nodes(),
                order,
                mode
            );
        }
        Ok(Self::from_parts(mesh.content_hash(), order, mode, &stencils, coeffs, escalated))
    }

    fn from_parts(
        mesh_hash: String,
        order: FitOrder,
        mode: StencilMode,
        stencils: &[Vec<usize>],
        coeffs: Vec<Vec<Vec3>>,
        escalated: Vec<usize>,
    ) -> Self {
        let mut offsets = Vec::with_capacity(stencils.len() + 1);
        offsets.push(0);
        let mut cells = Vec::new();
        let mut flat = Vec::new();
        for (s, c) in stencils.iter().zip(coeffs) {
            cells.extend(s.iter().map(|&c| c as u32));
            flat.extend(c);
            offsets.push(cells.len());
        }
        LsqOperator {
            order,
            mode,
            mesh_hash,
            offsets,
            cells,
            coeffs: flat,
            escalated,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Stencil cells and coefficient triplets of one node.
    pub fn node(&self, i: usize) -> (&[u32], &[Vec3]) {
        let r = self.offsets[i]..self.offsets[i + 1];
        (&self.cells[r.clone()], &self.coeffs[r])
    }

    /// Gradients of a `K`-component cell field at every node.
    pub fn gradients<const K: usize>(&self, values: &[[f64; K]]) -> Vec<[Vec3; K]> {
        (0..self.n_nodes())
            .into_par_iter()
            .map(|i| self.node_gradient(i, values))
            .collect()
    }

    /// Gradient of a `K`-component cell field at node `i`.
    #[inline]
    pub fn node_gradient<const K: usize>(&self, i: usize, values: &[[f64; K]]) -> [Vec3; K] {
        let (cells, coeffs) = self.node(i);
        let mut g = [[0.0; 3]; K];
        for (&c, w) in cells.iter().zip(coeffs) {
            let v = &values[c as usize];
            for k in 0..K {
                g[k][0] += w[0] * v[k];
                g[k][1] += w[1] * v[k];
                g[k][2] += w[2] * v[k];
            }
        }
        g
    }

    /// Gradients of a scalar cell field.
    pub fn scalar_gradients(&self, values: &[f64]) -> Vec<Vec3> {
        (0..self.n_nodes())
            .into_par_iter()
            .map(|i| {
                let (cells, coeffs) = self.node(i);
                let mut g = [0.0; 3];
                for (&c, w) in cells.iter().zip(coeffs) {
                    g = vec3::add(g, vec3::scale(*w, values[c as usize]));
                }
                g
            })
            .collect()
    }

    /// Serializes the operator for reuse across runs on the same mesh.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.cells.len() * 28);
        out.extend_from_slice(CACHE_MAGIC);
        let hash = self.mesh_hash.as_bytes();
        out.extend_from_slice(&(hash.len() as u32).to_le_bytes());
        out.extend_from_slice(hash);
        out.push(match self.order {
            FitOrder::Linear => 1,
            FitOrder::Quadratic => 2,
        });
        out.push(self.mode.code());
        out.extend_from_slice(&(self.n_nodes() as u64).to_le_bytes());
        for i in 0..self.n_nodes() {
            let (cells, coeffs) = self.node(i);
            out.extend_from_slice(&(cells.len() as u32).to_le_bytes());
            for (&c, w) in cells.iter().zip(coeffs) {
                out.extend_from_slice(&c.to_le_bytes());
                for x in w {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        out.extend_from_slice(&(self.escalated.len() as u64).to_le_bytes());
        for &e in &self.escalated {
            out.extend_from_slice(&(e as u64).to_le_bytes());
        }
        out
    }

    /// Decodes a serialized operator. Structural checks only; use
    /// [`LsqOperator::load_for`] to also match the mesh.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LsqError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(CACHE_MAGIC.len())? != CACHE_MAGIC {
            return Err(LsqError::Cache("bad magic".into()));
        }
        let hash_len = r.u32()? as usize;
        let mesh_hash = std::str::from_utf8(r.take(hash_len)?)
            .map_err(|_| LsqError::Cache("mesh hash is not UTF-8".into()))?
            .to_string();
        let order = match r.u8()? {
            1 => FitOrder::Linear,
            2 => FitOrder::Quadratic,
            o => return Err(LsqError::Cache(format!("unknown fit order {o}"))),
        };
        let mode = StencilMode::from_code(r.u8()?)
            .ok_or_else(|| LsqError::Cache("unknown stencil mode".into()))?;
        let n_nodes = r.u64()? as usize;
        // every node needs at least its 4-byte count
        if n_nodes > r.remaining() / 4 {
            return Err(LsqError::Cache("node count exceeds payload".into()));
        }
        let mut offsets = Vec::with_capacity(n_nodes + 1);
        offsets.push(0);
        let mut cells = Vec::new();
        let mut coeffs = Vec::new();
        for _ in 0..n_nodes {
            let len = r.u32()? as usize;
            if len > r.remaining() / 28 {
                return Err(LsqError::Cache("stencil length exceeds payload".into()));
            }
            for _ in 0..len {
                cells.push(r.u32()?);
                let w = [r.f64()?, r.f64()?, r.f64()?];
                if w.iter().any(|x| !x.is_finite()) {
                    return Err(LsqError::Cache("non-finite coefficient".into()));
                }
                coeffs.push(w);
            }
            offsets.push(cells.len());
        }
        let n_esc = r.u64()? as usize;
        if n_esc > r.remaining() / 8 {
            return Err(LsqError::Cache("escalation list exceeds payload".into()));
        }
        let mut escalated = Vec::with_capacity(n_esc);
        for _ in 0..n_esc {
            let e = r.u64()? as usize;
            if e >= n_nodes {
                return Err(LsqError::Cache(format!("escalated node {e} out of range")));
            }
            escalated.push(e);
        }
        if r.remaining() != 0 {
            return Err(LsqError::Cache("trailing bytes".into()));
        }
        Ok(LsqOperator {
            order,
            mode,
            mesh_hash,
            offsets,
            cells,
            coeffs,
            escalated,
        })
    }

    /// Decodes a cached operator and checks it against `mesh`.
    pub fn load_for(bytes: &[u8], mesh: &TetMesh) -> Result<Self, LsqError> {
        let op = Self::from_bytes(bytes)?;
        let expected = mesh.content_hash();
        if op.mesh_hash != expected {
            return Err(LsqError::HashMismatch {
                expected,
                found: op.mesh_hash,
            });
        }
        if op.n_nodes() != mesh.n_nodes() || op.cells.iter().any(|&c| c as usize >= mesh.n_cells()) {
            return Err(LsqError::Cache("operator does not fit the mesh".into()));
        }
        Ok(op)
    }
}

const CACHE_MAGIC: &[u8] = b"TFVLSQ1\0";

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], LsqError> {
        if n > self.remaining() {
            return Err(LsqError::Cache("unexpected end of data".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, LsqError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, LsqError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, LsqError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, LsqError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
