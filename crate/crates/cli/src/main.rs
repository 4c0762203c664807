//! `hyperbary`: batch driver for the barycenter, coarse-geometry and growth
//! diagnostics.

mod commands;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use hyperbary::Error as CoreError;

#[derive(Debug, Parser)]
#[command(name = "hyperbary", version, about = "Barycenter maps and coarse-geometry diagnostics on hyperbolic space")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: Global,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Global {
    /// Input file.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Solver gradient tolerance override.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Worker threads for parallel scans; all available cores when absent.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Dimension of ℍⁿ.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Largest radius for growth series and volume grids.
    #[arg(long, global = true)]
    pub rmax: Option<f64>,
    /// Sample count for scans.
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    /// Finite-difference step.
    #[arg(long, global = true)]
    pub step: Option<f64>,
    /// Quadrature size for visual families.
    #[arg(long, global = true)]
    pub m: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Barycenter of a boundary measure (problem JSON).
    Barycenter,
    /// Natural-map evaluation, Jacobian and bound check (scenario JSON).
    NaturalMap,
    /// Scan random trace-one forms for brain-in-a-jar violations.
    JarScan,
    /// δ-hyperbolicity of a distance-matrix CSV or edge list.
    Delta {
        /// Read the input as `u,v[,weight]` edges.
        #[arg(long)]
        edges: bool,
        /// Hold the basepoint fixed at this index.
        #[arg(long)]
        basepoint: Option<usize>,
    },
    /// Tree approximation of a 4-point metric (4×4 CSV).
    Tree4,
    /// Curvature ≥ −1 comparison test for w on a geodesic xy.
    Alexandrov {
        /// dxy,dyz,dxz,dxw,dwy,dzw
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, required = true)]
        distances: Vec<f64>,
    },
    /// Volume-growth entropy of a graph.
    Entropy {
        /// Built-in graph instead of --input: `tree:<degree>` or `grid`.
        #[arg(long)]
        builtin: Option<String>,
        /// Label of the base vertex for --input graphs.
        #[arg(long)]
        base: Option<String>,
    },
    /// Hyperbolic ball volumes on a radius grid.
    BallVolume {
        /// Radius spacing of the grid from 0 to --rmax.
        #[arg(long, default_value_t = 0.25)]
        dr: f64,
        /// Explicit comma-separated radii instead of a grid.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
    },
    /// Patterson–Sullivan atoms of a group given by generator matrices.
    Ps {
        /// Orbit truncation radius.
        #[arg(long, default_value_t = 20.0)]
        radius: f64,
        /// Minimum number of non-trivial orbit points.
        #[arg(long, default_value_t = 100)]
        min_points: usize,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Input(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(CoreError::Guard(_) | CoreError::InsufficientOrbit(_) | CoreError::Domain(_)) => 3,
            CliError::Core(CoreError::NonConvergence { .. }) => 4,
            _ => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                CoreError::Domain(_) => "domain",
                CoreError::Argument(_) => "argument",
                CoreError::Contract(_) => "contract",
                CoreError::Guard(_) => "guard",
                CoreError::NonConvergence { .. } => "non_convergence",
                CoreError::InsufficientOrbit(_) => "insufficient_orbit",
                CoreError::Parse(_) | CoreError::Json(_) => "parse",
                CoreError::Io(_) => "io",
            },
            CliError::Input(_) => "input",
            CliError::Io { .. } => "io",
        }
    }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    last_iterate: Option<&'a [f64]>,
}

fn report_error(err: &CliError) -> u8 {
    let code = err.exit_code();
    let last_iterate = match err {
        CliError::Core(CoreError::NonConvergence { last_iterate, .. }) => Some(last_iterate.as_slice()),
        _ => None,
    };
    let record = ErrorRecord {
        error: ErrorBody {
            kind: err.kind(),
            message: err.to_string(),
            exit_code: code,
            last_iterate,
        },
    };
    if let Ok(bytes) = output::to_json(&record) {
        let _ = std::io::stderr().write_all(&bytes);
    }
    code
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return ExitCode::from(report_error(&CliError::Input(e.to_string().trim_end().to_string())));
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => ExitCode::from(report_error(&e)),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = g.workers {
        if w == 0 {
            return Err(CliError::Input("--workers must be at least 1".into()));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| CliError::Input(format!("cannot start worker pool: {e}")))?;
    let bytes = pool.install(|| commands::dispatch(&cli.command, g))?;
    match &g.output {
        Some(path) => std::fs::write(path, &bytes).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => std::io::stdout().write_all(&bytes).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}
