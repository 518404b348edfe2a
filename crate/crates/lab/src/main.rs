use anyhow::Result;
use blowup_lab::config::{ExperimentConfig, Kind, PdeScanConfig};
use blowup_lab::output::{Manifest, OutDir, RunInfo};
use blowup_lab::presets::{self, PresetSpec};
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

/// Numerical experiments on blow-up of the 1D semilinear wave equation.
#[derive(Debug, Parser)]
#[command(name = "blowup", version)]
struct Cli {
    /// Flat key-value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default: out/<experiment>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0: one per core).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Seed of randomised sweeps.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Direct solver, blow-up curve and point classification.
    PdeScan,
    /// Random self-similar evolutions with the energy law.
    WEvolve,
    /// Recovery of planted multi-soliton states.
    ModulateTrack,
    /// Toda system sweep with the log-spacing fit.
    TodaSweep,
    /// Soliton interaction integrals.
    Tables,
    /// Lists the initial-data presets.
    Presets,
    /// Re-runs the experiment recorded in a manifest.
    Replay {
        manifest: PathBuf,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

fn kind_of(c: &Command) -> Option<Kind> {
    Some(match c {
        Command::PdeScan => Kind::PdeScan,
        Command::WEvolve => Kind::WEvolve,
        Command::ModulateTrack => Kind::ModulateTrack,
        Command::TodaSweep => Kind::TodaSweep,
        Command::Tables => Kind::Tables,
        _ => return None,
    })
}

fn list_presets() -> Result<()> {
    let c = PdeScanConfig::default();
    for name in presets::ALL {
        let spec = PresetSpec::from_config(&PdeScanConfig { preset: name, ..c.clone() });
        let pr = blowup_lab::config::params(c.p, c.variant)?;
        let data = spec.build(&pr)?;
        println!(
            "{:<18} amplitude={} width={} domain=[{}, {}] levine_integral(p={})={:.6}",
            presets::name(name),
            spec.amplitude,
            spec.width,
            data.x_min,
            data.x_max(),
            c.p,
            data.levine_integral(&pr)
        );
    }
    Ok(())
}

fn real_main(cli: Cli) -> Result<(), Failure> {
    let (cfg, seed) = match &cli.command {
        Command::Presets => return list_presets().map_err(Failure::Run),
        Command::Replay { manifest } => {
            let m = Manifest::load(manifest).map_err(Failure::Usage)?;
            (m.experiment_config().map_err(Failure::Usage)?, m.seed)
        }
        c => {
            let kind = kind_of(c).expect("experiment subcommand");
            (ExperimentConfig::load(kind, cli.config.as_deref()).map_err(Failure::Usage)?, cli.seed)
        }
    };
    let out_path = cli.out.unwrap_or_else(|| PathBuf::from("out").join(cfg.kind().name()));
    let mut out = OutDir::create(&out_path).map_err(Failure::Run)?;
    let info = RunInfo { seed, threads: cli.threads };
    let summary = blowup_lab::run(&cfg, &info, &mut out).map_err(Failure::Run)?;
    println!("{summary}");
    println!("wrote {} files to {}", out.written().len(), out.root().display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("usage error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
