//! `tetfv`: grid generation, runs, convergence studies and mesh audits.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tetfv::audit::audit_mesh;
use tetfv::config::{Config, GridKind, MeshSection};
use tetfv::driver::{self, DriverError, RunContext};
use tetfv::mesh::io::{read_mesh, write_mesh};

#[derive(Parser, Debug)]
#[command(name = "tetfv", version, about = "Finite-volume Euler solver on tetrahedral grids")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run on a single thread.
    #[arg(long, global = true)]
    deterministic: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated grid in the text mesh format.
    Generate(GenerateArgs),
    /// Solve one case and write errors, history, fields and a manifest.
    Run(RunArgs),
    /// Run a grid list against a scheme list and fit convergence orders.
    Study(RunArgs),
    /// Check the geometric identities on every element of a mesh.
    Audit(AuditArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Grid family; ignored with --config.
    #[arg(value_enum)]
    kind: Option<Kind>,
    /// Take the grid from the `[mesh]` section of a config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Nodes per edge.
    #[arg(long)]
    n: Option<usize>,
    /// Nodes per direction (bump only), e.g. 33,17,17.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    dims: Option<Vec<usize>>,
    /// Interior node jitter as a fraction of the local spacing.
    #[arg(long, default_value_t = 0.15)]
    perturbation: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output file (default: <out-dir>/<kind>-<n>.mesh).
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug)]
enum Kind {
    Cube,
    Box,
    Bump,
    Cylinder,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Mesh file replacing the config's `[mesh]` section.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long, required_unless_present = "config")]
    mesh: Option<PathBuf>,
    /// Audit the grid a config describes.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
}

struct Failure {
    code: u8,
    message: String,
}

impl From<DriverError> for Failure {
    fn from(e: DriverError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load_config(path: &Path, mesh: Option<&PathBuf>) -> Result<(Config, String, PathBuf), Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut cfg = Config::from_toml(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if let Some(m) = mesh {
        let cwd = std::env::current_dir().unwrap_or_default();
        cfg.mesh = MeshSection {
            file: Some(cwd.join(m)),
            generator: None,
            n: None,
            ..MeshSection::default()
        };
        cfg.validate().map_err(|e| usage(e.to_string()))?;
    }
    Ok((cfg, text, base))
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let section = match (&args.config, args.kind) {
        (Some(path), _) => load_config(path, None)?.0.mesh,
        (None, Some(kind)) => MeshSection {
            generator: Some(match kind {
                Kind::Cube => GridKind::Cube,
                Kind::Box => GridKind::Box,
                Kind::Bump => GridKind::Bump,
                Kind::Cylinder => GridKind::Cylinder,
            }),
            n: if args.dims.is_some() { None } else { args.n },
            dims: args.dims.map(|d| [d[0], d[1], d[2]]),
            perturbation: args.perturbation,
            seed: args.seed,
            ..MeshSection::default()
        },
        (None, None) => return Err(usage("give a grid kind or --config")),
    };
    let probe = Config {
        mesh: section.clone(),
        ..Config::default()
    };
    probe.validate().map_err(|e| usage(e.to_string()))?;
    let mesh = section
        .build(Path::new("."))
        .map_err(|e| usage(e.to_string()))?;
    let path = args.mesh.unwrap_or_else(|| {
        let kind = section.generator.map_or("grid".to_string(), |k| k.to_string());
        let size = section.size().map_or(String::new(), |s| format!("-{s}"));
        args.out_dir.join(format!("{kind}{size}.mesh"))
    });
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
    }
    write_mesh(&mesh, &path).map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })?;
    println!(
        "{}: {} nodes, {} cells, {} boundary faces",
        path.display(),
        mesh.n_nodes(),
        mesh.n_cells(),
        mesh.n_boundary_faces()
    );
    Ok(())
}

fn run(args: RunArgs, threads: usize, deterministic: bool) -> Result<(), Failure> {
    let (cfg, text, base) = load_config(&args.config, args.mesh.as_ref())?;
    let ctx = RunContext {
        config_text: text,
        base,
        out_dir: args.out_dir.clone(),
        threads,
        deterministic,
    };
    let out = driver::run(&cfg, &ctx)?;
    let r = &out.result;
    println!("{}  cells {}  h {:.4e}", r.scheme, r.n_cells, r.h);
    if let Some(n) = &r.norms {
        println!("{:<8} {:>12} {:>12} {:>12}", "var", "L1", "L2", "Linf");
        for (k, v) in driver::VARIABLES.iter().enumerate() {
            println!("{v:<8} {:>12.4e} {:>12.4e} {:>12.4e}", n.l1[k], n.l2[k], n.linf[k]);
        }
    }
    println!("{:<8} {:>12.4e} {:>12} {:>12.4e}", "entropy", r.entropy.0, "", r.entropy.1);
    println!(
        "{} {}  solve {:.2}s  outputs in {}",
        r.iterations(),
        if r.orders_dropped.is_some() { "iterations" } else { "steps" },
        r.timings.solve,
        args.out_dir.display()
    );
    Ok(())
}

fn study(args: RunArgs) -> Result<(), Failure> {
    let (cfg, _, base) = load_config(&args.config, args.mesh.as_ref())?;
    if cfg.study.is_none() {
        return Err(usage(format!("{}: missing [study] section", args.config.display())));
    }
    let s = driver::run_study(&cfg, &base)?;
    let write = |name: &str, text: String| -> Result<(), Failure> {
        std::fs::create_dir_all(&args.out_dir).map_err(|e| usage(format!("{}: {e}", args.out_dir.display())))?;
        let p = args.out_dir.join(name);
        std::fs::write(&p, text).map_err(|e| Failure {
            code: 1,
            message: format!("{}: {e}", p.display()),
        })
    };
    write("study.csv", s.table_csv())?;
    write("orders.csv", s.orders_csv())?;
    print!("{}", s.summary());
    Ok(())
}

fn audit(args: AuditArgs) -> Result<(), Failure> {
    let mesh = match (&args.mesh, &args.config) {
        (Some(path), _) => read_mesh(path).map_err(|e| usage(e.to_string()))?,
        (None, Some(cfg)) => {
            let (cfg, _, base) = load_config(cfg, None)?;
            driver::load_mesh(&cfg, &base)?
        }
        (None, None) => return Err(usage("give --mesh or --config")),
    };
    let report = audit_mesh(&mesh);
    println!("{report}");
    if report.passes(args.tolerance) {
        println!("all checks within {:e}", args.tolerance);
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: format!("audit found violations above {:e}", args.tolerance),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let threads = if cli.deterministic { 1 } else { cli.threads.unwrap_or(0) };
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be positive");
        return ExitCode::from(2);
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
        eprintln!("error: thread pool: {e}");
        return ExitCode::from(2);
    }
    let threads = rayon::current_num_threads();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a, threads, cli.deterministic),
        Command::Study(a) => study(a),
        Command::Audit(a) => audit(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
