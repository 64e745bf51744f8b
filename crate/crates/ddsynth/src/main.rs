use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ddsynth::commands;
use ddsynth::config::RunConfig;
use ddsynth::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "ddsynth", version, about = "Synthesize and evaluate dynamical-decoupling waveforms")]
#[command(
    after_help = "Exit codes: 0 success, 1 I/O error, 2 config error, 3 numerical failure or infeasible synthesis."
)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `out` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Worker threads for population evaluation and sweeps.
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize a Fourier waveform for the configured problem.
    #[command(after_help = "Writes waveform.toml, cost.txt and trace.csv.\n\
trace.csv columns: iteration, restart, phase (ga|sd), phi0, phi1, penalty, peak, energy, best_so_far, feasible.\n\
Artifacts are written even when no feasible waveform is found; the exit code is then 3.")]
    Synth,

    /// Simulate a waveform against the configured reference sequences.
    #[command(
        after_help = "Dephasing writes fidelity.csv: axis (delta_beta|delta_phi), value, then one gate-fidelity \
column per sequence (generated, the references such as udd12 and qdd3, free).\n\
Dipolar writes chain.csv: n_qubits, sequence, CSS, GHZ, MES, Dicke, trace, then the same five as normalized \
fidelities with a _norm suffix."
    )]
    Eval {
        /// Waveform file produced by `synth` or written by hand.
        #[arg(long, value_name = "FILE")]
        waveform: PathBuf,
    },

    /// Optimize over a grid of peak limits and harmonic counts.
    #[command(after_help = "Writes sweep.csv: peak_limit, p_harmonics, rms, phi0, phi1, penalty, region \
(I over driving, II over modulation, I+II, III balanced), error. Failed cells leave rms empty and fill error.")]
    Sweep,

    /// Export the system-modulation matrix over one period.
    #[command(after_help = "Writes trajectory.csv: t, c_xx, c_yx, c_zx, c_xy, c_yy, c_zy, c_xz, c_yz, c_zz. \
--config is optional and only supplies the frame settings.")]
    Traj {
        #[arg(long, value_name = "FILE")]
        waveform: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli.config.as_deref().ok_or_else(|| CliError::config("--config is required"))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&RunConfig>) -> PathBuf {
    cli.out.clone().or_else(|| cfg.map(|c| c.out.clone())).unwrap_or_else(|| PathBuf::from("out"))
}

fn init_threads(n: Option<usize>) -> Result<()> {
    match n {
        Some(0) => Err(CliError::config("--threads must be at least 1")),
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::config(e.to_string()))
        }
        None => Ok(()),
    }
}

fn report(path: &Path) {
    println!("{}", path.display());
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = match (&cli.command, &cli.config) {
        (Command::Traj { .. }, None) => None,
        _ => Some(load_config(cli)?),
    };
    init_threads(cli.threads.or(cfg.as_ref().and_then(|c| c.threads)))?;
    let out = out_dir(cli, cfg.as_ref());
    match (&cli.command, cfg) {
        (Command::Synth, Some(cfg)) => {
            let arts = commands::synth(&cfg, &out)?;
            for p in [&arts.waveform, &arts.trace, &arts.cost] {
                report(p);
            }
        }
        (Command::Eval { waveform }, Some(cfg)) => report(&commands::eval(&cfg, waveform, &out)?),
        (Command::Sweep, Some(cfg)) => report(&commands::sweep(&cfg, &out)?),
        (Command::Traj { waveform }, cfg) => report(&commands::traj(cfg.as_ref(), waveform, &out)?),
        (_, None) => unreachable!("config loaded for every command but traj"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
