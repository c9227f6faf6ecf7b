//! Single runs and convergence studies driven by a [`Config`], plus their
//! CSV, VTK and manifest outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bc::{BcError, BoundaryConditions};
use crate::config::{CaseMode, Config, ConfigError, GridSize, InitialField};
use crate::euler::Prim;
use crate::lsq::{LsqError, LsqOperator};
use crate::mesh::io::MeshIoError;
use crate::mesh::TetMesh;
use crate::mms::{entropy_error, error_norms, recover_nodal_solution, ErrorNorms};
use crate::residual::Discretization;
use crate::scheme::Scheme;
use crate::solver::{advance, solve_steady, IterationRecord, SolverError};
use crate::vtk::{self, Field};

pub const VARIABLES: [&str; 5] = ["rho", "u", "v", "w", "p"];

#[derive(Debug, Error)]
pub enum DriverError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("mesh: {0}")]
    Mesh(#[from] MeshIoError),
    #[error("boundary conditions: {0}")]
    Bc(#[from] BcError),
    #[error("least squares: {0}")]
    Lsq(#[from] LsqError),
    #[error("solver: {0}")]
    Solver(#[from] SolverError),
    #[error("steady solver stopped after {iterations} iterations with {orders:.2} orders of residual drop")]
    NotConverged { iterations: usize, orders: f64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl DriverError {
    /// 1 for failures during the computation, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            DriverError::Config(_) | DriverError::Mesh(_) | DriverError::Bc(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DriverError + '_ {
    move |source| DriverError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Version plus the revision baked in at build time, when one was provided.
pub fn build_id() -> String {
    format!(
        "tetfv {} ({})",
        env!("CARGO_PKG_VERSION"),
        option_env!("TETFV_BUILD_REV").unwrap_or("unversioned")
    )
}

/// Reads or generates the mesh and applies `[bc.*]` overrides.
pub fn load_mesh(cfg: &Config, base: &Path) -> Result<TetMesh, DriverError> {
    let mut mesh = cfg.mesh.build(base)?;
    if !mesh.reoriented_cells.is_empty() {
        log::warn!("{} cells were listed with negative orientation and have been flipped", mesh.reoriented_cells.len());
    }
    cfg.apply_bc(&mut mesh)?;
    Ok(mesh)
}

/// Builds the least-squares operator, going through the cache directory when given.
pub fn build_lsq(mesh: &TetMesh, cfg: &Config, scheme: &Scheme, cache: Option<&Path>) -> Result<LsqOperator, DriverError> {
    let mode = cfg.scheme.stencil;
    let Some(dir) = cache else {
        return Ok(LsqOperator::build(mesh, mode, scheme.gradient)?);
    };
    let hash = mesh.content_hash();
    let path = dir.join(format!("{}-{:?}-{:?}.lsq", &hash[..16], scheme.gradient, mode).to_lowercase());
    if let Ok(bytes) = std::fs::read(&path) {
        match LsqOperator::load_for(&bytes, mesh) {
            Ok(op) if op.order == scheme.gradient && op.mode == mode => {
                log::info!("loaded least-squares coefficients from {}", path.display());
                return Ok(op);
            }
            Ok(_) => log::warn!("{}: cached operator has different settings; rebuilding", path.display()),
            Err(e) => log::warn!("{}: {e}; rebuilding", path.display()),
        }
    }
    let op = LsqOperator::build(mesh, mode, scheme.gradient)?;
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    std::fs::write(&path, op.to_bytes()).map_err(io_err(&path))?;
    Ok(op)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timings {
    pub mesh: f64,
    pub lsq: f64,
    pub solve: f64,
    pub output: f64,
}

#[derive(Debug, Clone)]
pub enum History {
    Steady(Vec<IterationRecord>),
    /// `(step, time, Δt, seconds)`
    Unsteady(Vec<(usize, f64, f64, f64)>),
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub scheme: Scheme,
    pub mode: CaseMode,
    pub n_cells: usize,
    pub h: f64,
    pub time: f64,
    pub prims: Vec<Prim>,
    pub norms: Option<ErrorNorms>,
    /// Entropy error: L1 and max.
    pub entropy: (f64, f64),
    pub history: History,
    pub converged: bool,
    pub orders_dropped: Option<f64>,
    pub max_mass_iterations: Option<usize>,
    pub timings: Timings,
}

impl RunResult {
    pub fn iterations(&self) -> usize {
        match &self.history {
            History::Steady(h) => h.len(),
            History::Unsteady(h) => h.len(),
        }
    }
}

/// Solves one case on a prepared mesh.
pub fn run_case(
    cfg: &Config,
    mesh: &TetMesh,
    scheme: Scheme,
    lsq_cache: Option<&Path>,
) -> Result<RunResult, DriverError> {
    let mode = cfg.mode()?;
    let solution = cfg.solution()?;
    if mode == CaseMode::Steady && scheme.mass_matrix {
        log::warn!("mass matrix has no effect on a steady solve");
    }
    if scheme.roe.entropy_fix {
        log::info!("Roe entropy fix is on");
    }
    let t0 = Instant::now();
    let lsq = build_lsq(mesh, cfg, &scheme, lsq_cache)?;
    if !lsq.escalated.is_empty() {
        log::info!("{} nodes needed a wider least-squares stencil", lsq.escalated.len());
    }
    let lsq_time = t0.elapsed().as_secs_f64();

    let bc = BoundaryConditions::from_mesh(mesh, cfg.freestream.prim(), cfg.freestream.back_pressure(), solution)?;
    let disc = Discretization::new(mesh, scheme, lsq, bc, solution, cfg.scheme.source_gradients);
    let initial: Vec<Prim> = match (cfg.case.initial, solution) {
        (InitialField::Exact, Some(s)) => mesh.cell_centroid.iter().map(|&x| s.prim(x, 0.0)).collect(),
        _ => vec![cfg.freestream.prim(); mesh.n_cells()],
    };

    let t1 = Instant::now();
    let (prims, time, history, converged, orders, mass) = match mode {
        CaseMode::Steady => {
            let r = solve_steady(&disc, initial, &cfg.steady)?;
            (r.prims, 0.0, History::Steady(r.history), r.converged, Some(r.orders_dropped), None)
        }
        CaseMode::Unsteady => {
            let r = advance(&disc, initial, 0.0, &cfg.unsteady)?;
            let mass = scheme.mass_matrix.then_some(r.max_mass_iterations);
            (r.prims, r.time, History::Unsteady(r.history), true, None, mass)
        }
    };
    let solve = t1.elapsed().as_secs_f64();
    let fixes = crate::euler::take_entropy_fix_count();
    if fixes > 0 {
        log::info!("entropy fix activated {fixes} times");
    }

    Ok(RunResult {
        scheme,
        mode,
        n_cells: mesh.n_cells(),
        h: mesh.mean_spacing(),
        time,
        norms: solution.map(|s| error_norms(mesh, &prims, &s, time)),
        entropy: entropy_error(mesh, &prims),
        prims,
        history,
        converged,
        orders_dropped: orders,
        max_mass_iterations: mass,
        timings: Timings {
            lsq: lsq_time,
            solve,
            ..Timings::default()
        },
    })
}

pub const ERRORS_HEADER: &str = "# tetfv error-norms v1";
pub const HISTORY_HEADER: &str = "# tetfv history v1";
pub const STUDY_HEADER: &str = "# tetfv study v1";
pub const ORDERS_HEADER: &str = "# tetfv orders v1";

pub fn errors_csv(res: &RunResult) -> String {
    let mut s = format!("{ERRORS_HEADER}\nvariable,l1,l2,linf\n");
    if let Some(n) = &res.norms {
        for (k, name) in VARIABLES.iter().enumerate() {
            let _ = writeln!(s, "{name},{:e},{:e},{:e}", n.l1[k], n.l2[k], n.linf[k]);
        }
    }
    let _ = writeln!(s, "entropy,{:e},,{:e}", res.entropy.0, res.entropy.1);
    s
}

pub fn history_csv(res: &RunResult) -> String {
    match &res.history {
        History::Steady(h) => {
            let mut s = format!(
                "{HISTORY_HEADER} steady\niteration,cfl,seconds,l1_mass,l1_xmom,l1_ymom,l1_zmom,l1_energy\n"
            );
            for r in h {
                let _ = write!(s, "{},{},{:.6}", r.iteration, r.cfl, r.seconds);
                for v in r.l1 {
                    let _ = write!(s, ",{v:e}");
                }
                s.push('\n');
            }
            s
        }
        History::Unsteady(h) => {
            let mut s = format!("{HISTORY_HEADER} unsteady\nstep,time,dt,seconds\n");
            for (step, t, dt, sec) in h {
                let _ = writeln!(s, "{step},{t:e},{dt:e},{sec:.6}");
            }
            s
        }
    }
}

/// Cell values, pointwise errors when an exact solution exists, and nodal
/// values recovered with the scheme's own gradients.
pub fn write_fields_vtk(path: &Path, cfg: &Config, mesh: &TetMesh, res: &RunResult) -> Result<(), DriverError> {
    let cells: Vec<Vec<f64>> = (0..5).map(|k| res.prims.iter().map(|w| w.0[k]).collect()).collect();
    let entropy: Vec<f64> = res
        .prims
        .iter()
        .map(|w| (crate::euler::GAMMA * w.p() / w.rho().powf(crate::euler::GAMMA) - 1.0).abs())
        .collect();
    let errors: Option<Vec<Vec<f64>>> = cfg.solution()?.map(|s| {
        (0..5)
            .map(|k| {
                mesh.cell_centroid
                    .iter()
                    .zip(&res.prims)
                    .map(|(&x, w)| w.0[k] - s.prim(x, res.time).0[k])
                    .collect()
            })
            .collect()
    });
    let lsq = LsqOperator::build(mesh, cfg.scheme.stencil, res.scheme.gradient)?;
    let grads = lsq.gradients(&res.prims.iter().map(|w| w.0).collect::<Vec<_>>());
    let nodal = recover_nodal_solution(mesh, &res.prims, &grads, res.scheme.is_quadratic_interpolation());
    let points: Vec<Vec<f64>> = (0..5).map(|k| nodal.iter().map(|w| w.0[k]).collect()).collect();

    let names_err = ["error_rho", "error_u", "error_v", "error_w", "error_p"];
    let names_pt = ["nodal_rho", "nodal_u", "nodal_v", "nodal_w", "nodal_p"];
    let mut cell_fields: Vec<Field<'_>> = (0..5).map(|k| Field { name: VARIABLES[k], values: &cells[k] }).collect();
    cell_fields.push(Field { name: "entropy_error", values: &entropy });
    if let Some(e) = &errors {
        cell_fields.extend((0..5).map(|k| Field { name: names_err[k], values: &e[k] }));
    }
    let point_fields: Vec<Field<'_>> = (0..5).map(|k| Field { name: names_pt[k], values: &points[k] }).collect();
    vtk::write_vtk(path, mesh, &format!("{} t={}", res.scheme, res.time), &cell_fields, &point_fields)
        .map_err(io_err(path))
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub build: String,
    pub config_sha256: String,
    pub mesh_sha256: String,
    pub scheme: String,
    pub mode: String,
    pub n_cells: usize,
    pub n_nodes: usize,
    pub threads: usize,
    pub deterministic: bool,
    pub converged: bool,
    pub iterations: usize,
    pub final_time: f64,
    pub timings: Timings,
    pub outputs: Vec<String>,
}

/// Settings that do not live in the config file but shape a run.
#[derive(Debug, Clone, Default)]
pub struct RunContext {
    pub config_text: String,
    /// Directory that relative paths in the config resolve against.
    pub base: PathBuf,
    pub out_dir: PathBuf,
    pub threads: usize,
    pub deterministic: bool,
}

/// What `run` wrote.
#[derive(Debug)]
pub struct RunOutput {
    pub result: RunResult,
    pub manifest: Manifest,
}

/// Full single run: mesh, solve, and every output file.
///
/// Outputs are written before a steady non-convergence is reported as an error.
pub fn run(cfg: &Config, ctx: &RunContext) -> Result<RunOutput, DriverError> {
    let t0 = Instant::now();
    let mesh = load_mesh(cfg, &ctx.base)?;
    let mesh_time = t0.elapsed().as_secs_f64();
    let scheme = cfg.scheme()?;
    let cache = cfg.output.lsq_cache.as_ref().map(|p| ctx.base.join(p));
    let mut result = run_case(cfg, &mesh, scheme, cache.as_deref())?;
    result.timings.mesh = mesh_time;

    let t2 = Instant::now();
    let out = &ctx.out_dir;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let mut outputs = vec!["errors.csv".to_string(), "history.csv".to_string()];
    let p = out.join("errors.csv");
    std::fs::write(&p, errors_csv(&result)).map_err(io_err(&p))?;
    let p = out.join("history.csv");
    std::fs::write(&p, history_csv(&result)).map_err(io_err(&p))?;
    if cfg.output.vtk {
        write_fields_vtk(&out.join("solution.vtk"), cfg, &mesh, &result)?;
        outputs.push("solution.vtk".into());
    }
    result.timings.output = t2.elapsed().as_secs_f64();
    outputs.push("manifest.toml".into());

    let manifest = Manifest {
        build: build_id(),
        config_sha256: sha256_hex(ctx.config_text.as_bytes()),
        mesh_sha256: mesh.content_hash(),
        scheme: result.scheme.to_string(),
        mode: format!("{:?}", result.mode).to_lowercase(),
        n_cells: mesh.n_cells(),
        n_nodes: mesh.n_nodes(),
        threads: ctx.threads,
        deterministic: ctx.deterministic,
        converged: result.converged,
        iterations: result.iterations(),
        final_time: result.time,
        timings: result.timings,
        outputs,
    };
    let p = out.join("manifest.toml");
    let text = toml::to_string(&manifest).expect("manifest serializes");
    std::fs::write(&p, text).map_err(io_err(&p))?;
    if !result.converged {
        return Err(DriverError::NotConverged {
            iterations: result.iterations(),
            orders: result.orders_dropped.unwrap_or(0.0),
        });
    }
    Ok(RunOutput { result, manifest })
}

/// Least-squares slope of `log e` against `log h`; `None` with fewer than two
/// usable points.
pub fn fit_order(h: &[f64], e: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = h
        .iter()
        .zip(e)
        .filter(|(h, e)| **h > 0.0 && **e > 0.0 && e.is_finite())
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / sxx)
}

#[derive(Debug, Clone)]
pub struct StudyRow {
    pub scheme: Scheme,
    pub grid: GridSize,
    pub n_cells: usize,
    pub h: f64,
    /// L1 error per primitive variable, when an exact solution exists.
    pub l1: Option<[f64; 5]>,
    pub entropy_l1: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct StudyResult {
    pub rows: Vec<StudyRow>,
    /// `(scheme, variable, order)` in scheme order.
    pub orders: Vec<(String, &'static str, Option<f64>)>,
}

impl StudyResult {
    pub fn order(&self, scheme: &str, variable: &str) -> Option<f64> {
        self.orders
            .iter()
            .find(|(s, v, _)| s == scheme && *v == variable)
            .and_then(|o| o.2)
    }

    pub fn table_csv(&self) -> String {
        let mut s = format!(
            "{STUDY_HEADER}\nscheme,grid,cells,h,l1_rho,l1_u,l1_v,l1_w,l1_p,l1_entropy,iterations,converged,seconds\n"
        );
        for r in &self.rows {
            let _ = write!(s, "{},{},{},{:e}", r.scheme, r.grid, r.n_cells, r.h);
            for k in 0..5 {
                match r.l1 {
                    Some(l) => {
                        let _ = write!(s, ",{:e}", l[k]);
                    }
                    None => s.push(','),
                }
            }
            let _ = writeln!(s, ",{:e},{},{},{:.3}", r.entropy_l1, r.iterations, r.converged, r.seconds);
        }
        s
    }

    pub fn orders_csv(&self) -> String {
        let mut s = format!("{ORDERS_HEADER}\nscheme,variable,order\n");
        for (scheme, var, o) in &self.orders {
            let _ = writeln!(s, "{scheme},{var},{}", fmt_order(*o));
        }
        s
    }

    /// One line per scheme with the observed order of each variable.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let mut schemes: Vec<&str> = Vec::new();
        for (sch, _, _) in &self.orders {
            if !schemes.contains(&sch.as_str()) {
                schemes.push(sch);
            }
        }
        let width = schemes.iter().map(|s| s.len()).max().unwrap_or(6).max(6);
        let _ = write!(s, "{:<width$}", "scheme");
        let vars: Vec<&str> = self.orders.iter().filter(|o| o.0 == schemes[0]).map(|o| o.1).collect();
        for v in &vars {
            let _ = write!(s, " {v:>8}");
        }
        s.push('\n');
        for sch in schemes {
            let _ = write!(s, "{sch:<width$}");
            for v in &vars {
                let _ = write!(s, " {:>8}", fmt_order(self.order(sch, v)));
            }
            s.push('\n');
        }
        s
    }
}

fn fmt_order(o: Option<f64>) -> String {
    o.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"))
}

/// Runs every scheme on every grid of `[study]`.
///
/// A steady run that stops short of its residual target is kept and marked
/// unconverged; solver failures abort the study.
pub fn run_study(cfg: &Config, base: &Path) -> Result<StudyResult, DriverError> {
    let study = cfg
        .study
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid {
            key: "study".into(),
            message: "missing `[study]` section".into(),
        })?;
    let cache = cfg.output.lsq_cache.as_ref().map(|p| base.join(p));
    let has_solution = cfg.solution()?.is_some();
    let mut rows = Vec::new();
    let mut orders = Vec::new();
    for name in &study.schemes {
        let scheme = cfg.scheme_named(name)?;
        let first = rows.len();
        for &grid in &study.grids {
            let mut sub = cfg.clone();
            sub.mesh = cfg.mesh.with_size(grid);
            let mesh = load_mesh(&sub, base)?;
            let t = Instant::now();
            let r = run_case(&sub, &mesh, scheme, cache.as_deref())?;
            log::info!("{scheme} grid {grid}: {} cells, {:.1}s", r.n_cells, t.elapsed().as_secs_f64());
            if !r.converged {
                log::warn!("{scheme} grid {grid} did not reach the residual target");
            }
            rows.push(StudyRow {
                scheme,
                grid,
                n_cells: r.n_cells,
                h: r.h,
                l1: r.norms.map(|n| n.l1),
                entropy_l1: r.entropy.0,
                iterations: r.iterations(),
                converged: r.converged,
                seconds: t.elapsed().as_secs_f64(),
            });
        }
        let mine = &rows[first..];
        let h: Vec<f64> = mine.iter().map(|r| r.h).collect();
        if has_solution {
            for (k, var) in VARIABLES.iter().enumerate() {
                let e: Vec<f64> = mine.iter().map(|r| r.l1.map_or(f64::NAN, |l| l[k])).collect();
                orders.push((scheme.to_string(), *var, fit_order(&h, &e)));
            }
        }
        let e: Vec<f64> = mine.iter().map(|r| r.entropy_l1).collect();
        orders.push((scheme.to_string(), "entropy", fit_order(&h, &e)));
    }
    Ok(StudyResult { rows, orders })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_order_recovers_power_laws() {
        let h = [0.2, 0.1, 0.05];
        let e: Vec<f64> = h.iter().map(|h| 3.0 * h * h * h).collect();
        assert!((fit_order(&h, &e).unwrap() - 3.0).abs() < 1e-12);
        assert_eq!(fit_order(&[0.1], &[1.0]), None);
        assert_eq!(fit_order(&[0.1, 0.1], &[1.0, 2.0]), None);
        assert_eq!(fit_order(&[0.2, 0.1], &[1.0, 0.0]), None);
    }

    #[test]
    fn exit_codes_separate_input_from_solver_errors() {
        let cfg_err = DriverError::Config(ConfigError::Invalid {
            key: "k".into(),
            message: "m".into(),
        });
        assert_eq!(cfg_err.exit_code(), 2);
        assert_eq!(DriverError::Solver(SolverError::NotFinite { iter: 1 }).exit_code(), 1);
    }

    fn small_config(extra: &str) -> Config {
        Config::from_toml(&format!(
            "[mesh]\ngenerator='cube'\nn=4\n[case]\nsolution='steady-exp'\ninitial='exact'\n[steady]\norders=6\n{extra}"
        ))
        .unwrap()
    }

    #[test]
    fn steady_run_writes_every_output() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config("");
        let ctx = RunContext {
            config_text: "x".into(),
            base: dir.path().into(),
            out_dir: dir.path().join("out"),
            threads: 1,
            deterministic: true,
        };
        let out = run(&cfg, &ctx).unwrap();
        assert!(out.result.converged);
        assert_eq!(out.manifest.n_cells, 162);
        for f in ["errors.csv", "history.csv", "solution.vtk", "manifest.toml"] {
            assert!(ctx.out_dir.join(f).exists(), "{f}");
        }
        let errors = std::fs::read_to_string(ctx.out_dir.join("errors.csv")).unwrap();
        assert!(errors.starts_with(ERRORS_HEADER));
        assert_eq!(errors.lines().count(), 8);
        let manifest = std::fs::read_to_string(ctx.out_dir.join("manifest.toml")).unwrap();
        assert!(manifest.contains(&sha256_hex(b"x")));
    }

    #[test]
    fn lsq_cache_is_reused() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config("");
        let mesh = load_mesh(&cfg, dir.path()).unwrap();
        let scheme = cfg.scheme().unwrap();
        let a = build_lsq(&mesh, &cfg, &scheme, Some(dir.path())).unwrap();
        let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(files.len(), 1);
        let b = build_lsq(&mesh, &cfg, &scheme, Some(dir.path())).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_grid_study_reports_na() {
        let cfg = small_config("[study]\ngrids=[4]\nschemes=['fang1']\n");
        let s = run_study(&cfg, Path::new(".")).unwrap();
        assert_eq!(s.rows.len(), 1);
        assert_eq!(s.order("FANG(1)", "u"), None);
        assert!(s.orders_csv().contains("FANG(1),u,n/a"));
        assert!(s.summary().contains("n/a"));
    }
}
