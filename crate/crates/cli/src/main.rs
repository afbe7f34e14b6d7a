use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, ValueEnum};
use fp_constraint::experiment::{
    self, exit_code, run_custom, run_preset, Command, CustomOptions, PresetName, RunOptions,
    EXIT_USAGE,
};
use fp_constraint::{assemble_with, AssemblyOptions, DriftStyle, FpError, LoadStyle, RunConfig};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CommandArg {
    Solve,
    Scan,
    Invert,
    Moments,
    Asymptote,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Solve => Command::Solve,
            CommandArg::Scan => Command::Scan,
            CommandArg::Invert => Command::Invert,
            CommandArg::Moments => Command::Moments,
            CommandArg::Asymptote => Command::Asymptote,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PresetArg {
    #[value(name = "fig_ok1")]
    FigOk1,
    #[value(name = "fig_ok2")]
    FigOk2,
    #[value(name = "fig_delta4")]
    FigDelta4,
    #[value(name = "fig_bad")]
    FigBad,
    #[value(name = "fig_bad2")]
    FigBad2,
}

impl From<PresetArg> for PresetName {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::FigOk1 => PresetName::FigOk1,
            PresetArg::FigOk2 => PresetName::FigOk2,
            PresetArg::FigDelta4 => PresetName::FigDelta4,
            PresetArg::FigBad => PresetName::FigBad,
            PresetArg::FigBad2 => PresetName::FigBad2,
        }
    }
}

/// Constrained stationary Fokker-Planck solver on a radial P1 mesh.
///
/// With `--preset` alone, runs the preset experiment. With a command, runs it
/// on the preset model or on the model read from `--config`.
#[derive(Debug, Parser)]
#[command(name = "fpc", version, about, long_about = None)]
struct Cli {
    /// Command to run on the selected model.
    #[arg(value_enum)]
    command: Option<CommandArg>,

    #[arg(long, value_enum, conflicts_with = "config")]
    preset: Option<PresetArg>,

    /// `key=value` model file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Number of mesh intervals (overrides the config value).
    #[arg(long)]
    n: Option<usize>,

    #[arg(long)]
    mu: Option<f64>,

    /// Target value of the constraint for `invert`.
    #[arg(long)]
    ell: Option<f64>,

    #[arg(long)]
    mu_lo: Option<f64>,

    #[arg(long)]
    mu_hi: Option<f64>,

    #[arg(long)]
    samples: Option<usize>,

    /// Upper limit of the bracket search for `invert`.
    #[arg(long)]
    mu_max: Option<f64>,

    #[arg(long, default_value = "hat")]
    load_style: LoadStyle,

    #[arg(long, default_value = "conservative")]
    drift_style: DriftStyle,

    /// Write the system matrix diagonals and load at `--mu` (default 1).
    #[arg(long)]
    dump_system: Option<PathBuf>,

    /// Write `r, u, psi, uprime` for `solve` (default `<out>/solution.csv`).
    #[arg(long, num_args = 0..=1)]
    dump_solution: Option<Option<PathBuf>>,

    #[arg(long, default_value = "fpc-out")]
    out: PathBuf,
}

fn dump_system(config: &RunConfig, options: AssemblyOptions, mu: f64, path: &Path) -> anyhow::Result<()> {
    let sys = assemble_with(&config.model, &config.mesh()?, options)?;
    let mut w = BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    );
    sys.write_csv(mu, &mut w)?;
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    let assembly = AssemblyOptions {
        load_style: cli.load_style,
        drift_style: cli.drift_style,
    };

    let config = match (&cli.config, cli.preset) {
        (Some(path), _) => {
            let mut cfg = RunConfig::from_file(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            if let Some(n) = cli.n {
                cfg.n_intervals = n;
                cfg.mesh()?;
            }
            cfg
        }
        (None, Some(p)) => RunConfig {
            model: experiment::preset(p.into()).model,
            n_intervals: cli.n.unwrap_or(fp_constraint::config::DEFAULT_INTERVALS),
            radius: 1.0,
        },
        (None, None) => bail!(FpError::InvalidParameter(
            "one of --preset or --config is required".into()
        )),
    };

    if let Some(path) = &cli.dump_system {
        dump_system(&config, assembly, cli.mu.unwrap_or(1.0), path)?;
    }

    match (cli.command, cli.preset) {
        (Some(command), _) => {
            let options = CustomOptions {
                mu: cli.mu,
                ell: cli.ell,
                mu_lo: cli.mu_lo,
                mu_hi: cli.mu_hi,
                samples: cli.samples,
                mu_max: cli.mu_max,
                assembly,
                dump_solution: cli
                    .dump_solution
                    .map(|p| p.unwrap_or_else(|| cli.out.join("solution.csv"))),
            };
            let outcome = run_custom(&config, command.into(), &options, &cli.out)?;
            print!("{}", outcome.summary);
            Ok(outcome.exit_code)
        }
        (None, Some(p)) => {
            let options = RunOptions {
                n_intervals: config.n_intervals,
                radius: config.radius,
                assembly,
            };
            let outcome = run_preset(p.into(), &options, &cli.out)?;
            print!("{}", outcome.summary);
            Ok(experiment::EXIT_OK)
        }
        (None, None) => bail!(FpError::InvalidParameter(
            "--config needs a command (solve, scan, invert, moments, asymptote)".into()
        )),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.chain().find_map(|e| e.downcast_ref::<FpError>()).map_or(EXIT_USAGE, exit_code);
            ExitCode::from(code as u8)
        }
    }
}
