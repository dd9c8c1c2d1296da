//! Command-line front end: approximate fixed points on the simplex, search
//! labeled grids, run the reverse piecewise-linear construction, and render
//! labelings as SVG. Every subcommand prints one canonical-JSON report to
//! stdout; `--json <path>` additionally writes the same bytes to a file.
//!
//! Exit codes: 0 success, 1 invalid input, 2 refinement budget exhausted.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sperner_fixpoint::cli_io::{
    cmd_render, cmd_reverse, cmd_solve, cmd_sperner, to_canonical_json, MapSourceArgs, RunReport,
};
use sperner_fixpoint::Error;

#[derive(Parser)]
#[command(
    name = "sperner-fixpoint",
    version,
    about = "Fixed points of simplex self-maps via combinatorial labelings"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each interprets the subset it needs.
#[derive(Args, Default)]
struct SourceFlags {
    /// Simplex dimension (the map acts on n+1 barycentric coordinates)
    #[arg(long)]
    n: Option<usize>,
    /// Mesh parameter: the grid subdivides each edge into m parts
    #[arg(long)]
    m: Option<u32>,
    /// Built-in map: rotation | constant | affine_stochastic | poly1d |
    /// pl_from_labels
    #[arg(long = "fn")]
    function: Option<String>,
    /// Barycentric target for --fn constant, e.g. "0.2,0.3,0.5"
    #[arg(long)]
    point: Option<String>,
    /// Polynomial coefficients for --fn poly1d, lowest degree first
    #[arg(long)]
    coeffs: Option<String>,
    /// Column-stochastic matrix for --fn affine_stochastic,
    /// rows separated by ';', e.g. "0.5,0.25;0.5,0.75"
    #[arg(long)]
    matrix: Option<String>,
    /// Label file: one "k_0 ... k_n : label" line per lattice vertex
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Generate a conforming labeling from this seed (needs --n and --m)
    #[arg(long)]
    random: Option<u64>,
    /// Vertex-image offset of the piecewise-linear construction
    #[arg(long)]
    tau: Option<f64>,
    /// Also write the JSON report to this file
    #[arg(long)]
    json: Option<PathBuf>,
}

impl SourceFlags {
    fn to_args(&self) -> MapSourceArgs {
        MapSourceArgs {
            n: self.n,
            m: self.m,
            function: self.function.clone(),
            point: self.point.clone(),
            coeffs: self.coeffs.clone(),
            matrix: self.matrix.clone(),
            labels: self.labels.clone(),
            random: self.random,
            tau: self.tau,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Approximate a fixed point of --fn by refining the mesh
    Solve {
        #[command(flatten)]
        source: SourceFlags,
        /// Accept once the max-norm residual drops to this value
        #[arg(long)]
        tol: Option<f64>,
        /// Stop refining once doubling the mesh would pass this value
        #[arg(long = "m-max")]
        m_max: Option<u32>,
    },
    /// Enumerate fully labeled cells, check parity, follow the door path
    Sperner {
        #[command(flatten)]
        source: SourceFlags,
    },
    /// Recover a fully labeled cell from the fixed point of the
    /// piecewise-linear map built on a labeling
    Reverse {
        #[command(flatten)]
        source: SourceFlags,
        /// Residual tolerance of the inner solve
        #[arg(long)]
        tol: Option<f64>,
        /// Mesh budget of the inner solve
        #[arg(long = "m-max")]
        m_max: Option<u32>,
    },
    /// Draw a 2-dimensional labeling as SVG
    Render {
        #[command(flatten)]
        source: SourceFlags,
        /// Output SVG path
        #[arg(long)]
        svg: PathBuf,
    },
}

fn emit(report: &RunReport, json_path: Option<&PathBuf>) -> Result<(), Error> {
    let text = to_canonical_json(report)?;
    print!("{text}");
    if let Some(path) = json_path {
        std::fs::write(path, &text)
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, Error> {
    let (report, code, json_path) = match &cli.command {
        Command::Solve { source, tol, m_max } => {
            let (report, code) = cmd_solve(&source.to_args(), *tol, *m_max)?;
            (report, code, source.json.clone())
        }
        Command::Sperner { source } => {
            let (report, code) = cmd_sperner(&source.to_args())?;
            (report, code, source.json.clone())
        }
        Command::Reverse { source, tol, m_max } => {
            let (report, code) = cmd_reverse(&source.to_args(), *tol, *m_max)?;
            (report, code, source.json.clone())
        }
        Command::Render { source, svg } => {
            let (report, code) = cmd_render(&source.to_args(), svg)?;
            (report, code, source.json.clone())
        }
    };
    emit(&report, json_path.as_ref())?;
    Ok(u8::try_from(code).unwrap_or(1))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(Error::NonconformingLabeling(violations)) => {
            eprintln!("error: labeling violates the boundary rules:");
            for v in &violations {
                eprintln!("  {v}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
