//! Run configuration read from TOML.
//!
//! ```toml
//! [mesh]
//! generator = "cube"        # cube | box | bump | cylinder, or `file = "grid.mesh"`
//! n = 13
//! perturbation = 0.2
//!
//! [scheme]
//! name = "ngqi2+fc"
//! stencil = "node_neighbor"
//!
//! [case]
//! solution = "steady-exp"
//! initial = "exact"
//!
//! [bc.bottom]
//! normal_mode = "averaged_nodal_normal"
//!
//! [steady]
//! orders = 10
//!
//! [study]
//! grids = [9, 13, 17]
//! schemes = ["fang1", "ngqi2+fc"]
//! ```
//!
//! Unknown keys are rejected. Every error names the offending key path.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::euler::{Prim, GAMMA};
use crate::lsq::StencilMode;
use crate::mesh::{
    generate_box_grid, generate_bump_grid, generate_cube_grid, generate_cylinder_grid, CylinderParams, MeshError,
    NormalMode, PatchKind, TetMesh,
};
use crate::mms::Solution;
use crate::residual::SourceGradients;
use crate::scheme::Scheme;
use crate::solver::{SteadyOptions, TimeStepPolicy, UnsteadyOptions};
use crate::vec3::Vec3;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Cube,
    Box,
    Bump,
    Cylinder,
}

impl fmt::Display for GridKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GridKind::Cube => "cube",
            GridKind::Box => "box",
            GridKind::Bump => "bump",
            GridKind::Cylinder => "cylinder",
        })
    }
}

/// Grid resolution: nodes per edge, or per direction for the bump channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSize {
    N(usize),
    Dims([usize; 3]),
}

impl fmt::Display for GridSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridSize::N(n) => write!(f, "{n}"),
            GridSize::Dims([a, b, c]) => write!(f, "{a}x{b}x{c}"),
        }
    }
}

/// `[mesh]`: a mesh file or a generated grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub file: Option<PathBuf>,
    pub generator: Option<GridKind>,
    pub n: Option<usize>,
    pub dims: Option<[usize; 3]>,
    /// Interior node jitter as a fraction of the local spacing.
    #[serde(default = "default_perturbation")]
    pub perturbation: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Box corners.
    pub lo: Option<Vec3>,
    pub hi: Option<Vec3>,
    /// Cylinder geometry.
    pub radius: Option<f64>,
    pub thickness: Option<f64>,
    pub arc: Option<f64>,
    pub span: Option<f64>,
}

fn default_seed() -> u64 {
    1
}

fn default_perturbation() -> f64 {
    0.15
}

impl Default for MeshSection {
    fn default() -> Self {
        MeshSection {
            file: None,
            generator: Some(GridKind::Cube),
            n: Some(9),
            dims: None,
            perturbation: default_perturbation(),
            seed: default_seed(),
            lo: None,
            hi: None,
            radius: None,
            thickness: None,
            arc: None,
            span: None,
        }
    }
}

impl MeshSection {
    pub fn size(&self) -> Option<GridSize> {
        match (self.dims, self.n) {
            (Some(d), _) => Some(GridSize::Dims(d)),
            (None, Some(n)) => Some(GridSize::N(n)),
            (None, None) => None,
        }
    }

    pub fn with_size(&self, size: GridSize) -> MeshSection {
        let mut m = self.clone();
        match size {
            GridSize::N(n) => {
                m.n = Some(n);
                m.dims = None;
            }
            GridSize::Dims(d) => {
                m.dims = Some(d);
                m.n = None;
            }
        }
        m
    }

    fn validate(&self) -> Result<(), ConfigError> {
        match (&self.file, self.generator) {
            (Some(_), Some(_)) => return Err(invalid("mesh", "set either `file` or `generator`, not both")),
            (None, None) => return Err(invalid("mesh", "one of `file` or `generator` is required")),
            (Some(_), None) => return Ok(()),
            (None, Some(kind)) => {
                let size = self.size().ok_or_else(|| invalid("mesh.n", "grid size is required"))?;
                match (kind, size) {
                    (GridKind::Bump, GridSize::N(n)) if n < 2 => return Err(invalid("mesh.n", "must be at least 2")),
                    (GridKind::Bump, GridSize::Dims(d)) if d.iter().any(|&k| k < 2) => {
                        return Err(invalid("mesh.dims", "each entry must be at least 2"))
                    }
                    (GridKind::Bump, _) => {}
                    (_, GridSize::Dims(_)) => {
                        return Err(invalid("mesh.dims", format!("`dims` applies to bump grids only, not {kind}")))
                    }
                    (_, GridSize::N(n)) if n < 3 => return Err(invalid("mesh.n", "must be at least 3")),
                    _ => {}
                }
            }
        }
        if !(0.0..0.5).contains(&self.perturbation) {
            return Err(invalid("mesh.perturbation", "must lie in [0, 0.5)"));
        }
        if (self.lo.is_some() || self.hi.is_some()) && self.generator != Some(GridKind::Box) {
            return Err(invalid("mesh.lo", "`lo`/`hi` apply to box grids only"));
        }
        if let (Some(lo), Some(hi)) = (self.lo, self.hi) {
            if (0..3).any(|k| !(hi[k] > lo[k])) {
                return Err(invalid("mesh.hi", "must exceed `lo` in every direction"));
            }
        }
        for (key, v) in [
            ("mesh.radius", self.radius),
            ("mesh.thickness", self.thickness),
            ("mesh.arc", self.arc),
            ("mesh.span", self.span),
        ] {
            if let Some(v) = v {
                if self.generator != Some(GridKind::Cylinder) {
                    return Err(invalid(key, "applies to cylinder grids only"));
                }
                if !(v > 0.0) || !v.is_finite() {
                    return Err(invalid(key, "must be positive"));
                }
            }
        }
        Ok(())
    }

    /// Generates the grid, or reads it relative to `base`.
    pub fn build(&self, base: &Path) -> Result<TetMesh, crate::mesh::io::MeshIoError> {
        if let Some(file) = &self.file {
            return crate::mesh::io::read_mesh(&base.join(file));
        }
        Ok(self.generate()?)
    }

    fn generate(&self) -> Result<TetMesh, MeshError> {
        let kind = self
            .generator
            .ok_or_else(|| MeshError::InvalidParameter("no generator".into()))?;
        let size = self
            .size()
            .ok_or_else(|| MeshError::InvalidParameter("no grid size".into()))?;
        let n = match size {
            GridSize::N(n) => n,
            GridSize::Dims(_) if kind != GridKind::Bump => {
                return Err(MeshError::InvalidParameter(format!("`dims` is not valid for {kind} grids")))
            }
            GridSize::Dims(_) => 0,
        };
        match kind {
            GridKind::Cube => generate_cube_grid(n, self.perturbation, self.seed),
            GridKind::Box => generate_box_grid(
                n,
                self.lo.unwrap_or([0.0; 3]),
                self.hi.unwrap_or([1.0; 3]),
                self.perturbation,
                self.seed,
            ),
            GridKind::Bump => {
                let [nx, ny, nz] = match size {
                    GridSize::Dims(d) => d,
                    GridSize::N(n) => bump_dims(n),
                };
                generate_bump_grid(nx, ny, nz, self.perturbation, self.seed)
            }
            GridKind::Cylinder => {
                let d = CylinderParams::default();
                generate_cylinder_grid(
                    n,
                    CylinderParams {
                        radius: self.radius.unwrap_or(d.radius),
                        thickness: self.thickness.unwrap_or(d.thickness),
                        arc: self.arc.unwrap_or(d.arc),
                        span: self.span.unwrap_or(d.span),
                        perturbation: self.perturbation,
                        seed: self.seed,
                    },
                )
            }
        }
    }
}

/// Bump channel node counts for a single size parameter: the channel is
/// twice as long as it is wide or tall.
pub fn bump_dims(n: usize) -> [usize; 3] {
    [2 * (n - 1) + 1, n, n]
}

/// `[scheme]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    #[serde(default = "default_scheme")]
    pub name: String,
    #[serde(default)]
    pub mass_matrix: bool,
    #[serde(default)]
    pub stencil: StencilMode,
    #[serde(default)]
    pub source_gradients: SourceGradients,
}

fn default_scheme() -> String {
    "ngqi2+fc".into()
}

impl Default for SchemeSection {
    fn default() -> Self {
        SchemeSection {
            name: default_scheme(),
            mass_matrix: false,
            stencil: StencilMode::default(),
            source_gradients: SourceGradients::default(),
        }
    }
}

/// `[flux]`: Roe flux settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxSection {
    #[serde(default = "one")]
    pub dissipation: f64,
    /// Defaults to on without an exact solution and off with one.
    pub entropy_fix: Option<bool>,
}

fn one() -> f64 {
    1.0
}

impl Default for FluxSection {
    fn default() -> Self {
        FluxSection {
            dissipation: 1.0,
            entropy_fix: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialField {
    #[default]
    Freestream,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseMode {
    Steady,
    Unsteady,
}

/// `[case]`: which exact solution (if any) drives sources, Dirichlet data and errors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSection {
    pub solution: Option<String>,
    /// Defaults to the solution's own steadiness, or steady without one.
    pub mode: Option<CaseMode>,
    #[serde(default)]
    pub initial: InitialField,
    /// Vortex parameters, for `vortex-transport` only.
    pub vortex_alpha: Option<f64>,
    pub vortex_strength: Option<f64>,
    pub vortex_u_inf: Option<f64>,
    pub vortex_w_inf: Option<f64>,
}

/// `[freestream]`: the far-field state and back pressure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreestreamSection {
    #[serde(default = "one")]
    pub density: f64,
    #[serde(default)]
    pub velocity: Vec3,
    #[serde(default = "inv_gamma")]
    pub pressure: f64,
    /// Defaults to `pressure`.
    pub back_pressure: Option<f64>,
}

fn inv_gamma() -> f64 {
    1.0 / GAMMA
}

impl Default for FreestreamSection {
    fn default() -> Self {
        FreestreamSection {
            density: 1.0,
            velocity: [0.0; 3],
            pressure: inv_gamma(),
            back_pressure: None,
        }
    }
}

impl FreestreamSection {
    pub fn prim(&self) -> Prim {
        Prim::new(self.density, self.velocity, self.pressure)
    }

    pub fn back_pressure(&self) -> f64 {
        self.back_pressure.unwrap_or(self.pressure)
    }
}

/// `[bc.<tag>]`: overrides for one boundary patch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcSection {
    pub kind: Option<PatchKind>,
    pub normal_mode: Option<NormalMode>,
}

/// `[output]`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "yes")]
    pub vtk: bool,
    /// Directory for least-squares coefficient dumps keyed by mesh hash.
    pub lsq_cache: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            vtk: true,
            lsq_cache: None,
        }
    }
}

/// `[study]`: a grid list crossed with a scheme list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub grids: Vec<GridSize>,
    pub schemes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub flux: FluxSection,
    #[serde(default)]
    pub case: CaseSection,
    #[serde(default)]
    pub freestream: FreestreamSection,
    #[serde(default)]
    pub bc: BTreeMap<String, BcSection>,
    #[serde(default)]
    pub steady: SteadyOptions,
    #[serde(default)]
    pub unsteady: UnsteadyOptions,
    #[serde(default)]
    pub output: OutputSection,
    pub study: Option<StudySection>,
}

impl Config {
    /// Parses and validates.
    pub fn from_toml(text: &str) -> Result<Config, ConfigError> {
        let de = toml::Deserializer::new(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ConfigError::Parse {
                path: if path == "." { "config".into() } else { path },
                message: inner.message().trim().to_string(),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Config, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Config::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.mesh.validate()?;
        self.scheme()?;
        let solution = self.solution()?;
        if self.case.initial == InitialField::Exact && solution.is_none() {
            return Err(invalid("case.initial", "`exact` needs `case.solution`"));
        }
        if self.case.mode == Some(CaseMode::Steady) && solution.map_or(false, |s| !s.is_steady()) {
            return Err(invalid("case.mode", "a time-dependent solution needs `unsteady`"));
        }
        if !(self.flux.dissipation > 0.0 && self.flux.dissipation <= 1.0) {
            return Err(invalid("flux.dissipation", "must lie in (0, 1]"));
        }
        if self.freestream.prim().check().is_err() {
            return Err(invalid("freestream", "density and pressure must be positive"));
        }
        if !(self.freestream.back_pressure() > 0.0) {
            return Err(invalid("freestream.back_pressure", "must be positive"));
        }
        for (tag, bc) in &self.bc {
            if bc.kind == Some(PatchKind::Dirichlet) && solution.is_none() {
                return Err(invalid(format!("bc.{tag}.kind"), "dirichlet needs `case.solution`"));
            }
        }
        self.steady
            .validate()
            .map_err(|e| invalid("steady", e.to_string()))?;
        let u = &self.unsteady;
        if !(u.t_final > 0.0) {
            return Err(invalid("unsteady.t_final", "must be positive"));
        }
        match u.time_step {
            TimeStepPolicy::Cfl(c) | TimeStepPolicy::Fixed(c) if !(c > 0.0) => {
                return Err(invalid("unsteady.time_step", "must be positive"))
            }
            _ => {}
        }
        if !(u.mass_orders > 0.0) {
            return Err(invalid("unsteady.mass_orders", "must be positive"));
        }
        if let Some(study) = &self.study {
            if study.grids.is_empty() {
                return Err(invalid("study.grids", "must not be empty"));
            }
            if study.schemes.is_empty() {
                return Err(invalid("study.schemes", "must not be empty"));
            }
            if self.mesh.file.is_some() {
                return Err(invalid("study", "studies need a generated mesh, not `mesh.file`"));
            }
            for (i, g) in study.grids.iter().enumerate() {
                self.mesh
                    .with_size(*g)
                    .validate()
                    .map_err(|e| invalid(format!("study.grids[{i}]"), e.to_string()))?;
            }
            for (i, s) in study.schemes.iter().enumerate() {
                self.parse_scheme(s)
                    .map_err(|m| invalid(format!("study.schemes[{i}]"), m))?;
            }
        }
        Ok(())
    }

    fn parse_scheme(&self, name: &str) -> Result<Scheme, String> {
        let mut s: Scheme = name.parse()?;
        s.mass_matrix |= self.scheme.mass_matrix;
        s.roe.dissipation = self.flux.dissipation;
        s.roe.entropy_fix = self.entropy_fix();
        Ok(s)
    }

    /// The `[scheme]` selection with flux settings applied.
    pub fn scheme(&self) -> Result<Scheme, ConfigError> {
        self.parse_scheme(&self.scheme.name)
            .map_err(|m| invalid("scheme.name", m))
    }

    pub fn scheme_named(&self, name: &str) -> Result<Scheme, ConfigError> {
        self.parse_scheme(name).map_err(|m| invalid("study.schemes", m))
    }

    pub fn entropy_fix(&self) -> bool {
        self.flux.entropy_fix.unwrap_or(self.case.solution.is_none())
    }

    pub fn solution(&self) -> Result<Option<Solution>, ConfigError> {
        let Some(name) = &self.case.solution else {
            return Ok(None);
        };
        let mut sol = Solution::from_name(name).map_err(|m| invalid("case.solution", m))?;
        let c = &self.case;
        let vortex = [c.vortex_alpha, c.vortex_strength, c.vortex_u_inf, c.vortex_w_inf];
        match &mut sol {
            Solution::VortexTransport(p) => {
                p.alpha = c.vortex_alpha.unwrap_or(p.alpha);
                p.strength = c.vortex_strength.unwrap_or(p.strength);
                p.u_inf = c.vortex_u_inf.unwrap_or(p.u_inf);
                p.w_inf = c.vortex_w_inf.unwrap_or(p.w_inf);
                if !(p.alpha > 0.0) {
                    return Err(invalid("case.vortex_alpha", "must be positive"));
                }
            }
            _ if vortex.iter().any(Option::is_some) => {
                return Err(invalid("case", "vortex parameters apply to `vortex-transport` only"))
            }
            _ => {}
        }
        Ok(Some(sol))
    }

    pub fn mode(&self) -> Result<CaseMode, ConfigError> {
        Ok(self.case.mode.unwrap_or(match self.solution()? {
            Some(s) if !s.is_steady() => CaseMode::Unsteady,
            _ => CaseMode::Steady,
        }))
    }

    /// Applies `[bc.*]` overrides to the mesh patches.
    pub fn apply_bc(&self, mesh: &mut TetMesh) -> Result<(), ConfigError> {
        for (tag, bc) in &self.bc {
            let p = mesh.patch_index(tag).ok_or_else(|| {
                let known: Vec<&str> = mesh.patches.iter().map(|p| p.tag.as_str()).collect();
                invalid(format!("bc.{tag}"), format!("no such patch; mesh has {}", known.join(", ")))
            })?;
            if let Some(kind) = bc.kind {
                mesh.patches[p].kind = kind;
            }
            if let Some(mode) = bc.normal_mode {
                mesh.patches[p].normal_mode = mode;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn key_of(err: ConfigError) -> String {
        match err {
            ConfigError::Parse { path, .. } => path,
            ConfigError::Invalid { key, .. } => key,
            ConfigError::Io { path, .. } => path,
        }
    }

    #[test]
    fn empty_config_is_valid() {
        let cfg = Config::from_toml("").unwrap();
        assert_eq!(cfg.scheme().unwrap().to_string(), "NGQI(2)+FC");
        assert_eq!(cfg.mode().unwrap(), CaseMode::Steady);
        assert!(cfg.entropy_fix());
    }

    #[test]
    fn full_config_round_trips() {
        let text = r#"
            [mesh]
            generator = "cylinder"
            n = 9
            radius = 0.75

            [scheme]
            name = "fang1"
            stencil = "base"

            [flux]
            dissipation = 0.5

            [case]
            solution = "cylinder-vortex"
            initial = "exact"

            [bc.bottom]
            normal_mode = "averaged_nodal_normal"

            [steady]
            sweeps = 10
            cfl_start = 10.0
            cfl_ramp = 20

            [unsteady]
            time_step = { fixed = 0.01 }

            [study]
            grids = [9, 13]
            schemes = ["fang1", "ngqi2+fc"]
        "#;
        let cfg = Config::from_toml(text).unwrap();
        assert_eq!(cfg.steady.sweeps, 10);
        assert_eq!(cfg.unsteady.time_step, TimeStepPolicy::Fixed(0.01));
        assert_eq!(cfg.scheme.stencil, StencilMode::Base);
        assert!(!cfg.entropy_fix());
        assert_eq!(cfg.scheme().unwrap().roe.dissipation, 0.5);
        let back = Config::from_toml(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
        let mut mesh = cfg.mesh.build(Path::new(".")).unwrap();
        cfg.apply_bc(&mut mesh).unwrap();
        let p = mesh.patch_index("bottom").unwrap();
        assert_eq!(mesh.patches[p].normal_mode, NormalMode::AveragedNodalNormal);
    }

    #[test]
    fn unknown_key_reports_its_path() {
        let err = Config::from_toml("[steady]\nsweep = 3\n").unwrap_err();
        assert_eq!(key_of(err), "steady.sweep");
        let err = Config::from_toml("[bc.top]\nnormal = 'face_normal'\n").unwrap_err();
        assert_eq!(key_of(err), "bc.top.normal");
    }

    #[test]
    fn wrong_type_reports_its_path() {
        let err = Config::from_toml("[mesh]\nn = 'nine'\n").unwrap_err();
        assert_eq!(key_of(err), "mesh.n");
    }

    #[test]
    fn semantic_errors_name_keys() {
        let cases = [
            ("[scheme]\nname = 'weno5'\n", "scheme.name"),
            ("[case]\nsolution = 'taylor-green'\n", "case.solution"),
            ("[case]\ninitial = 'exact'\n", "case.initial"),
            ("[mesh]\ngenerator = 'cube'\nn = 2\n", "mesh.n"),
            ("[mesh]\nfile = 'a.mesh'\ngenerator = 'cube'\n", "mesh"),
            ("[flux]\ndissipation = 0.0\n", "flux.dissipation"),
            ("[study]\ngrids = [9, 2]\nschemes = ['fang1']\n", "study.grids[1]"),
            ("[study]\ngrids = [9]\nschemes = ['fang1', 'x']\n", "study.schemes[1]"),
            ("[bc.xmin]\nkind = 'dirichlet'\n", "bc.xmin.kind"),
        ];
        for (text, key) in cases {
            let err = Config::from_toml(text).unwrap_err();
            assert_eq!(key_of(err), key, "{text}");
        }
    }

    #[test]
    fn unknown_patch_is_rejected() {
        let cfg = Config::from_toml("[case]\nsolution='steady-exp'\n[bc.nowhere]\nkind = 'slip_wall'\n").unwrap();
        let mut mesh = cfg.mesh.build(Path::new(".")).unwrap();
        assert_eq!(key_of(cfg.apply_bc(&mut mesh).unwrap_err()), "bc.nowhere");
    }

    #[test]
    fn vortex_parameters_are_applied() {
        let cfg = Config::from_toml("[case]\nsolution = 'vortex-transport'\nvortex_strength = 2.0\n").unwrap();
        match cfg.solution().unwrap() {
            Some(Solution::VortexTransport(p)) => assert_eq!(p.strength, 2.0),
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.mode().unwrap(), CaseMode::Unsteady);
        assert!(Config::from_toml("[case]\nsolution = 'steady-exp'\nvortex_alpha = 1.0\n").is_err());
    }
}
