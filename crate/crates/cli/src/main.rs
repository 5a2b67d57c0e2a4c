use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nisebath::parallel::with_workers;
use nisebath_cli::commands;
use nisebath_cli::manifest::Manifest;
use nisebath_cli::{CliResult, LoadedConfig};

#[derive(Parser)]
#[command(name = "nisebath", version, about = "Structured bath noise, spectral densities and NISE dynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides `workers` from the config.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate noise trajectories for a spectral density.
    GenNoise(Common),
    /// Estimate a spectral density from noise trajectories.
    EstimateSd {
        #[command(flatten)]
        common: Common,
        /// step, exponential, gaussian or general.
        #[arg(long)]
        damping: Option<String>,
        #[arg(long)]
        cutoff_fs: Option<f64>,
    },
    /// Fit damped cosine modes to a correlation function.
    SuperresFit(Common),
    /// Upsample a noise trajectory by spectral zero-padding.
    Resample(Common),
    /// Ensemble population dynamics.
    Propagate(Common),
    /// Linear absorption spectrum.
    Absorption {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        normalize: bool,
        /// Reference spectrum CSV to align to.
        #[arg(long)]
        align_to: Option<String>,
    },
    /// Boltzmann populations of the configured Hamiltonian.
    Equilibrium(Common),
}

fn load(common: &Common) -> CliResult<LoadedConfig> {
    let mut cfg = LoadedConfig::load(&common.config)?;
    if let Some(w) = common.workers {
        cfg.config.workers = Some(w);
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<Manifest> {
    let (cfg, action): (LoadedConfig, fn(&LoadedConfig) -> CliResult<Manifest>) = match cli.command {
        Command::GenNoise(c) => (load(&c)?, commands::gen_noise),
        Command::EstimateSd {
            common,
            damping,
            cutoff_fs,
        } => {
            let mut cfg = load(&common)?;
            if let Some(est) = cfg.config.estimate.as_mut() {
                if let Some(d) = damping {
                    est.damping = d;
                }
                if cutoff_fs.is_some() {
                    est.cutoff_fs = cutoff_fs;
                }
            }
            cfg.config.validate()?;
            (cfg, commands::estimate_sd)
        }
        Command::SuperresFit(c) => (load(&c)?, commands::superres_fit),
        Command::Resample(c) => (load(&c)?, commands::resample_cmd),
        Command::Propagate(c) => (load(&c)?, commands::propagate),
        Command::Absorption {
            common,
            normalize,
            align_to,
        } => {
            let mut cfg = load(&common)?;
            let a = cfg.config.absorption.get_or_insert_with(Default::default);
            a.normalize |= normalize;
            if align_to.is_some() {
                a.align_to = align_to;
            }
            (cfg, commands::absorption)
        }
        Command::Equilibrium(c) => (load(&c)?, commands::equilibrium),
    };
    let manifest = with_workers(cfg.config.workers(), || action(&cfg))??;
    manifest.write(&cfg.output_dir()?)?;
    Ok(manifest)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(m) => {
            for o in &m.outputs {
                println!("{}", o.file);
            }
            for n in &m.notes {
                log::warn!("{n}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("nisebath: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
