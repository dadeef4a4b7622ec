//! `meltsim`: melt-pool thermal simulation for laser powder bed fusion.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use meltsim_core::meltpool::Plane;

use crate::error::AppError;

#[derive(Parser)]
#[command(
    name = "meltsim",
    about = "Analytical melt-pool thermal model for laser powder bed fusion",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PlaneArg {
    Top,
    Side,
}

impl From<PlaneArg> for Plane {
    fn from(p: PlaneArg) -> Plane {
        match p {
            PlaneArg::Top => Plane::Top,
            PlaneArg::Side => Plane::Side,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and print the melt-pool summary as JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Also export a temperature contour grid for this plane.
        #[arg(long, value_enum)]
        contour: Option<PlaneArg>,
        /// Output directory for summary and contour files.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-product parameter sweep; CSV table on standard output.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Sweep specification file (powers, speeds, geometries).
        #[arg(long)]
        spec: PathBuf,
    },
    /// Sample a temperature contour grid and write CSV + JSON exports.
    Contour {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        plane: PlaneArg,
        /// Grid resolution as NxM (first axis x second axis).
        #[arg(long)]
        res: String,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Score model predictions against an experimental dataset.
    Validate {
        #[arg(long)]
        config: PathBuf,
        /// Dataset CSV file.
        #[arg(long)]
        data: PathBuf,
        /// Output directory for the JSON report.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit heat-source semi-axes to an experimental dataset.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        /// Dataset CSV file.
        #[arg(long)]
        data: PathBuf,
        /// Bounds file with lower_mm and upper_mm triples.
        #[arg(long)]
        bounds: PathBuf,
        /// Output directory for the JSON report.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn parse_resolution(res: &str) -> Result<(usize, usize), AppError> {
    let parts: Vec<&str> = res.split('x').collect();
    if parts.len() != 2 {
        return Err(AppError::config(format!(
            "resolution must look like 64x48, got {res:?}"
        )));
    }
    let n1 = parts[0]
        .parse::<usize>()
        .map_err(|_| AppError::config(format!("bad resolution component {:?}", parts[0])))?;
    let n2 = parts[1]
        .parse::<usize>()
        .map_err(|_| AppError::config(format!("bad resolution component {:?}", parts[1])))?;
    Ok((n1, n2))
}

fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Simulate {
            config,
            contour,
            out,
        } => commands::run_simulate(&config, contour.map(Plane::from), out.as_deref()),
        Command::Sweep { config, spec } => commands::run_sweep(&config, &spec),
        Command::Contour {
            config,
            plane,
            res,
            out,
        } => {
            let res = parse_resolution(&res)?;
            commands::run_contour(&config, plane.into(), res, &out)
        }
        Command::Validate { config, data, out } => commands::run_validate(&config, &data, &out),
        Command::Calibrate {
            config,
            data,
            bounds,
            out,
        } => commands::run_calibrate(&config, &data, &bounds, &out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
