//! `motrims`: command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data or I/O error,
//! 4 numerical or domain error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use motrims::io::RunConfig;
use motrims::pipeline::run::{
    run_characterize, run_constants, run_reconstruct, run_simulate, run_spectrum, CharacterizeInput, RunOptions,
    RunOutput,
};
use motrims::strongfield::Component;
use motrims::{Error, Exec};

#[derive(Parser, Debug)]
#[command(
    name = "motrims",
    version,
    about = "Recoil-ion momentum spectroscopy of cold Rb in strong laser fields"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration; built-in 3D MOT defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Random seed (same as --set seed=N).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory (default: output_dir from the configuration).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override one configuration key, e.g. --set pulse.intensity_w_per_cm2=1e11.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Event file format written by `simulate`.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    svg: bool,
    /// Print the fully resolved configuration (every default) and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    /// Run on the calling thread only.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Bin,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Photon energy, U_p, Keldysh parameters, channel energetics and
    /// spectrometer constants.
    Constants,
    /// SFA momentum spectra on the (p_z, p_x) plane and the sliced p_z curve.
    Spectrum,
    /// Monte Carlo events through target, focus, spectrometer and detector.
    Simulate {
        /// Number of ionizations (same as --set simulate.events=N).
        #[arg(long)]
        events: Option<usize>,
    },
    /// Momenta, histograms and fits from an event file.
    Reconstruct {
        /// Event file (CSV or binary).
        events: PathBuf,
        /// Theory p_z curve (CSV) for the resolution fit.
        #[arg(long)]
        theory: Option<PathBuf>,
        /// t0 and detector-centre source (same as --set analysis.calibration=...).
        #[arg(long, value_enum)]
        calibration: Option<CalibrationArg>,
    },
    /// Target characterization analyses.
    #[command(subcommand)]
    Characterize(Characterize),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CalibrationArg {
    Truth,
    Data,
    Fixed,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum AxisArg {
    X,
    Z,
}

#[derive(Subcommand, Debug)]
enum Characterize {
    /// Temperature from cloud sizes after free expansion.
    Expansion {
        /// CSV with t_ms,sigma_mm[,sigma_err_mm]; synthetic series when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Cloud FWHM from ionization-rate position scans.
    Scan {
        /// CSV with position_mm,counts; synthetic x and z scans when omitted.
        #[arg(long, requires = "axis")]
        input: Option<PathBuf>,
        /// Scan axis of --input.
        #[arg(long, value_enum)]
        axis: Option<AxisArg>,
    },
    /// Atom number and widths from absorption images.
    Absorption {
        /// Frames as CSV pixel rows; synthetic frames when omitted.
        #[arg(long, requires_all = ["reference", "dark"])]
        atoms: Option<PathBuf>,
        #[arg(long, requires = "atoms")]
        reference: Option<PathBuf>,
        #[arg(long, requires = "atoms")]
        dark: Option<PathBuf>,
    },
}

fn overrides(cli: &Cli) -> Vec<String> {
    let c = &cli.common;
    let mut sets = c.set.clone();
    if let Some(s) = c.seed {
        sets.push(format!("seed={s}"));
    }
    if let Some(f) = c.format {
        let f = match f {
            Format::Csv => "csv",
            Format::Bin => "bin",
        };
        sets.push(format!("simulate.format=\"{f}\""));
    }
    match &cli.command {
        Some(Command::Simulate { events: Some(n) }) => sets.push(format!("simulate.events={n}")),
        Some(Command::Reconstruct {
            calibration: Some(c), ..
        }) => {
            let c = match c {
                CalibrationArg::Truth => "truth",
                CalibrationArg::Data => "data",
                CalibrationArg::Fixed => "fixed",
            };
            sets.push(format!("analysis.calibration=\"{c}\""));
        }
        _ => {}
    }
    sets
}

fn execute(cli: Cli) -> Result<String, Error> {
    let cfg = RunConfig::load(cli.common.config.as_deref(), &overrides(&cli))?;
    if cli.common.dump_config {
        return cfg.to_toml();
    }
    let Some(command) = &cli.command else {
        return Err(Error::Config(
            "no command given (constants, spectrum, simulate, reconstruct, characterize); see --help".into(),
        ));
    };
    let out_dir = cli.common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let opts = RunOptions {
        svg: cli.common.svg,
        exec: if cli.common.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        },
    };
    let dir = out_dir.as_path();
    let result: RunOutput = match command {
        Command::Constants => run_constants(&cfg, dir, &opts)?,
        Command::Spectrum => run_spectrum(&cfg, dir, &opts)?,
        Command::Simulate { .. } => run_simulate(&cfg, dir, &opts)?,
        Command::Reconstruct { events, theory, .. } => run_reconstruct(&cfg, events, theory.as_deref(), dir, &opts)?,
        Command::Characterize(c) => {
            let input = match c {
                Characterize::Expansion { input } => CharacterizeInput::Expansion(input.clone()),
                Characterize::Scan { input, axis } => CharacterizeInput::Scan(input.clone().map(|p| {
                    let axis = match axis.expect("clap enforces --axis with --input") {
                        AxisArg::X => Component::X,
                        AxisArg::Z => Component::Z,
                    };
                    (axis, p)
                })),
                Characterize::Absorption { atoms, reference, dark } => {
                    CharacterizeInput::Absorption(match (atoms, reference, dark) {
                        (Some(a), Some(r), Some(d)) => Some([a.clone(), r.clone(), d.clone()]),
                        _ => None,
                    })
                }
            };
            run_characterize(&cfg, &input, dir, &opts)?
        }
    };
    Ok(format!(
        "{}wrote {} files and {}\n",
        result.text,
        result.outputs.len(),
        show(&result.manifest)
    ))
}

fn show(p: &Path) -> String {
    p.display().to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("motrims: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
