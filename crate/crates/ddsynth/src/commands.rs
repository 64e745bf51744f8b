use std::fs;
use std::path::{Path, PathBuf};

use ddsynth_core::evaluator::{chain_sweep, error_sweep, ErrorAxis, ErrorModel, SimulatedSystem, StateLabel};
use ddsynth_core::modulation::{ModulationMatrix, TRAJECTORY_HEADER};
use ddsynth_core::optimizer::{
    optimize_report, resource_sweep, scaled_energy, DephasingObjective, DipolarObjective, Objective, OptimizationTrace,
    Phase,
};
use ddsynth_core::waveform::{Drive, FourierWaveform, PulseTrain};
use ddsynth_core::Error;

use crate::config::{Problem, RunConfig};
use crate::error::{CliError, Result};
use crate::waveform_file::{self, LoadedWaveform, WaveformFile};

pub const TRACE_HEADER: [&str; 10] =
    ["iteration", "restart", "phase", "phi0", "phi1", "penalty", "peak", "energy", "best_so_far", "feasible"];
pub const SWEEP_HEADER: [&str; 8] = ["peak_limit", "p_harmonics", "rms", "phi0", "phi1", "penalty", "region", "error"];

fn objective(cfg: &RunConfig) -> Box<dyn Objective> {
    match cfg.problem {
        Problem::Dephasing => Box::new(DephasingObjective { spec: cfg.dephasing_spec(), frame: cfg.frame() }),
        Problem::Dipolar => Box::new(DipolarObjective { spec: cfg.dipolar_spec(), frame: cfg.frame() }),
    }
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let wrap = |source| CliError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(wrap)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn num(x: f64) -> String {
    if x != 0.0 && !(1e-4..1e6).contains(&x.abs()) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Paths written by `synth`.
#[derive(Debug, Clone)]
pub struct SynthArtifacts {
    pub waveform: PathBuf,
    pub trace: PathBuf,
    pub cost: PathBuf,
    pub feasible: bool,
    pub rms: f64,
}

/// Writes `waveform.toml`, `trace.csv` and `cost.txt`. Artifacts are written
/// even when no feasible waveform was found; the error is returned after.
pub fn synth(cfg: &RunConfig, out: &Path) -> Result<SynthArtifacts> {
    prepare(out)?;
    let opt = cfg.optimizer_config()?;
    log::info!(
        "synth {}: p = {}, peak <= {}, {} restarts, seed {}",
        cfg.problem.name(),
        opt.p_harmonics,
        opt.peak_limit,
        opt.restarts,
        opt.seed
    );
    let trace = optimize_report(objective(cfg).as_ref(), &opt)?;
    let w = trace.waveform(cfg.period);
    let report = match cfg.problem {
        Problem::Dephasing => DephasingObjective { spec: cfg.dephasing_spec(), frame: cfg.frame() }
            .report(&trace.best, opt.penalty_lambda0),
        Problem::Dipolar => {
            DipolarObjective { spec: cfg.dipolar_spec(), frame: cfg.frame() }.report(&trace.best, opt.penalty_lambda0)
        }
    }?;

    let arts = SynthArtifacts {
        waveform: out.join("waveform.toml"),
        trace: out.join("trace.csv"),
        cost: out.join("cost.txt"),
        feasible: trace.feasible,
        rms: report.rms(),
    };
    write_text(&arts.waveform, &WaveformFile::from_fourier(&w, Some(cfg.problem)).to_toml())?;
    write_trace(&arts.trace, &trace)?;
    let mut cost = report.to_text();
    cost.push_str(&format!("feasible = {}\n", trace.feasible));
    cost.push_str(&format!("feasible_restarts = {}\n", trace.feasible_restarts));
    cost.push_str(&format!("peak = {}\n", w.peak_amplitude()));
    cost.push_str(&format!("energy = {}\n", scaled_energy(&w)));
    write_text(&arts.cost, &cost)?;
    log::info!("rms cost {:.6e}, peak {:.4}, feasible {}", arts.rms, w.peak_amplitude(), trace.feasible);

    if !trace.feasible {
        return Err(
            Error::NoFeasiblePoint { restarts: opt.restarts, best_penalty: trace.best_evaluation.penalty }.into()
        );
    }
    Ok(arts)
}

fn write_trace(path: &Path, trace: &OptimizationTrace) -> Result<()> {
    let rows = trace.entries.iter().enumerate().map(|(i, e)| {
        vec![
            i.to_string(),
            e.restart.to_string(),
            match e.phase {
                Phase::Genetic => "ga".into(),
                Phase::Descent => "sd".into(),
            },
            num(e.phi0),
            num(e.phi1),
            num(e.penalty),
            num(e.peak),
            num(e.energy),
            num(e.best_so_far),
            e.feasible.to_string(),
        ]
    });
    write_csv(path, &TRACE_HEADER, rows)
}

fn load_for(cfg: &RunConfig, path: &Path) -> Result<LoadedWaveform> {
    let w = waveform_file::load(path)?;
    if let Some(p) = w.problem() {
        if p != cfg.problem {
            return Err(CliError::config(format!(
                "{} was synthesized for the {} problem, config is {}",
                path.display(),
                p.name(),
                cfg.problem.name()
            )));
        }
    }
    if (w.period() - cfg.period).abs() > 1e-12 * cfg.period {
        return Err(CliError::config(format!(
            "waveform period {} differs from config period {}",
            w.period(),
            cfg.period
        )));
    }
    Ok(w)
}

struct Sequences {
    labels: Vec<String>,
    trains: Vec<PulseTrain>,
    free: FourierWaveform,
}

impl Sequences {
    fn new(cfg: &RunConfig) -> Result<Self> {
        let refs = cfg.references();
        let trains = refs.iter().map(|r| r.build(cfg.period)).collect::<Result<Vec<_>>>()?;
        let mut labels: Vec<String> = vec!["generated".into()];
        labels.extend(refs.iter().map(|r| r.label()));
        if cfg.include_free() {
            labels.push("free".into());
        }
        Ok(Self { labels, trains, free: FourierWaveform::zero(cfg.period, 1) })
    }

    fn drives<'a>(&'a self, generated: &'a dyn Drive) -> Vec<(&'a str, &'a dyn Drive)> {
        let mut v: Vec<&dyn Drive> = vec![generated];
        v.extend(self.trains.iter().map(|t| t as &dyn Drive));
        v.push(&self.free);
        self.labels.iter().map(String::as_str).zip(v).collect()
    }
}

/// Dephasing: `fidelity.csv` with one row per error value.
/// Dipolar: `chain.csv` with one row per qubit count and sequence.
pub fn eval(cfg: &RunConfig, waveform: &Path, out: &Path) -> Result<PathBuf> {
    let w = load_for(cfg, waveform)?;
    prepare(out)?;
    let seqs = Sequences::new(cfg)?;
    let drives = seqs.drives(w.drive());
    match cfg.problem {
        Problem::Dephasing => {
            let sys =
                SimulatedSystem::build_dephasing(&cfg.dephasing.couplings, cfg.period)?.with_steps(cfg.evolve_steps());
            warn_magnus(&sys, cfg.period, "dephasing system");
            let mut rows = Vec::new();
            for (axis, grid) in [(ErrorAxis::FlipAngle, cfg.delta_beta()), (ErrorAxis::Phase, cfg.delta_phi())] {
                log::info!("eval {}: {} values x {} sequences", axis.name(), grid.len(), drives.len());
                let sweep = error_sweep(&sys, &drives, axis, &grid, cfg.cycles())?;
                for (chunk, value) in sweep.chunks(drives.len()).zip(&grid) {
                    let mut row = vec![axis.name().to_string(), num(*value)];
                    row.extend(chunk.iter().map(|r| num(r.fidelity)));
                    rows.push(row);
                }
            }
            let mut header = vec!["axis", "value"];
            header.extend(seqs.labels.iter().map(String::as_str));
            let path = out.join("fidelity.csv");
            write_csv(&path, &header, rows)?;
            Ok(path)
        }
        Problem::Dipolar => {
            for &n in &cfg.qubits() {
                warn_magnus(
                    &SimulatedSystem::build_dipolar_chain(n, cfg.period)?,
                    cfg.period,
                    &format!("{n}-qubit chain"),
                );
            }
            let sizes = cfg.qubits();
            log::info!("eval chain: sizes {:?} x {} sequences", sizes, drives.len());
            let sweep = chain_sweep(&drives, &sizes, ErrorModel::none(), cfg.evolve_steps())?;
            // five metrics per (n, sequence), in chain_sweep order
            let rows = sweep.chunks(5).map(|c| {
                let mut row = vec![c[0].n_qubits.to_string(), c[0].label.clone()];
                row.extend(c.iter().map(|r| num(r.fidelity)));
                row.extend(c.iter().map(|r| num(r.normalized)));
                row
            });
            let path = out.join("chain.csv");
            write_csv(&path, &chain_header(), rows)?;
            Ok(path)
        }
    }
}

pub fn chain_header() -> Vec<&'static str> {
    let mut h = vec!["n_qubits", "sequence"];
    let metrics: Vec<&str> = StateLabel::ALL.iter().map(|s| s.name()).chain(["trace"]).collect();
    h.extend(&metrics);
    h.extend(["CSS_norm", "GHZ_norm", "MES_norm", "Dicke_norm", "trace_norm"]);
    h
}

fn warn_magnus(sys: &SimulatedSystem, period: f64, what: &str) {
    if sys.exceeds_magnus_premise(period) {
        log::warn!(
            "{what}: ||H0|| T = {:.3} >= 1, low-order average Hamiltonians are not a reliable guide here",
            sys.magnus_parameter(period)
        );
    }
}

/// Optimizes every `(peak, p)` cell and writes `sweep.csv`, peak-major.
pub fn sweep(cfg: &RunConfig, out: &Path) -> Result<PathBuf> {
    prepare(out)?;
    let base = cfg.optimizer_config()?;
    log::info!("sweep {}: peaks {:?} x harmonics {:?}", cfg.problem.name(), cfg.sweep.peaks, cfg.sweep.harmonics);
    let cells = resource_sweep(objective(cfg).as_ref(), &base, &cfg.sweep.peaks, &cfg.sweep.harmonics);
    let rows = cells.iter().map(|c| {
        let mut row = vec![num(c.peak_limit), c.p_harmonics.to_string()];
        match &c.result {
            Ok(e) => row.extend([
                num(e.rms()),
                num(e.phi0),
                num(e.phi1),
                num(e.penalty),
                c.region.label().into(),
                String::new(),
            ]),
            Err(err) => {
                log::warn!("cell peak {} p {}: {err}", c.peak_limit, c.p_harmonics);
                row.extend([
                    String::new(),
                    String::new(),
                    String::new(),
                    String::new(),
                    c.region.label().into(),
                    err.to_string(),
                ]);
            }
        }
        row
    });
    let path = out.join("sweep.csv");
    write_csv(&path, &SWEEP_HEADER, rows)?;
    Ok(path)
}

/// Writes `trajectory.csv`: `t` and the nine `c_βα(t)` over one period.
pub fn traj(cfg: Option<&RunConfig>, waveform: &Path, out: &Path) -> Result<PathBuf> {
    let w = waveform_file::load(waveform)?;
    prepare(out)?;
    let frame = cfg.map(RunConfig::frame).unwrap_or_default();
    let m = ModulationMatrix::from_drive(w.drive(), frame.steps, frame.ordering)?;
    let rows = m.trajectory_rows().into_iter().map(|r| r.iter().map(|x| num(*x)).collect());
    let path = out.join("trajectory.csv");
    write_csv(&path, &TRAJECTORY_HEADER, rows)?;
    Ok(path)
}
