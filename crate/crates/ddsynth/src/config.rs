//! Run configuration, one TOML document per run.
//!
//! ```toml
//! problem = "dephasing"      # or "dipolar"
//! seed = 7                   # mandatory
//! period = 1.0
//! out = "runs/dephasing"
//!
//! [frame]
//! steps = 4096
//! ordering = "interaction"   # or "literal"
//!
//! [dephasing]
//! n_tls = 4
//! couplings = [0.0338264, -0.0906347, 0.0014495, 0.0740895]
//! weight_by_couplings = false
//! error_weight = 0.01
//!
//! [optimizer]
//! p_harmonics = 9
//! peak_limit = 10.0
//! energy_limit = 11.5
//!
//! [evaluation]
//! cycles = 1
//! delta_phi = { start = -0.05, stop = 0.05, count = 11 }
//!
//! [[evaluation.references]]
//! kind = "udd"
//! n = 12
//! energy = 12.0
//! peak = 20.0
//!
//! [sweep]
//! peaks = [1.0, 10.0, 100.0]
//! harmonics = [1, 9, 81]
//! ```
//!
//! Couplings and energies are in π/T units, peaks in 2π/T units.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use ddsynth_core::cost_functions::{DephasingSpec, DipolarSpec, DEFAULT_ERROR_WEIGHT};
use ddsynth_core::evaluator::{chain_couplings, DEFAULT_EVOLVE_STEPS, REFERENCE_COUPLINGS};
use ddsynth_core::modulation::{FrameOrdering, DEFAULT_STEPS};
use ddsynth_core::optimizer::{FrameSettings, OptimizerConfig};
use ddsynth_core::reference::{make_cpmg, make_mrev16, make_qdd, make_udd, SequenceBudget};
use ddsynth_core::waveform::{FourierWaveform, PulseTrain};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::waveform_file::{self, LoadedWaveform};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Dephasing,
    Dipolar,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Dephasing => "dephasing",
            Problem::Dipolar => "dipolar",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ordering {
    #[default]
    Interaction,
    Literal,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    pub seed: u64,
    #[serde(default = "one")]
    pub period: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub frame: FrameConfig,
    #[serde(default)]
    pub dephasing: DephasingConfig,
    #[serde(default)]
    pub dipolar: DipolarConfig,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameConfig {
    pub steps: usize,
    pub ordering: Ordering,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { steps: DEFAULT_STEPS, ordering: Ordering::Interaction }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DephasingConfig {
    pub n_tls: usize,
    /// Bath couplings of the simulated system.
    pub couplings: Vec<f64>,
    /// Feed `couplings` into the cost instead of a coupling-free cost.
    pub weight_by_couplings: bool,
    pub error_weight: f64,
    pub epsilon: Option<[f64; 4]>,
}

impl Default for DephasingConfig {
    fn default() -> Self {
        Self {
            n_tls: REFERENCE_COUPLINGS.len(),
            couplings: REFERENCE_COUPLINGS.to_vec(),
            weight_by_couplings: false,
            error_weight: DEFAULT_ERROR_WEIGHT,
            epsilon: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DipolarConfig {
    pub n_qubits: usize,
    /// Weight the cost by nearest and next-nearest chain couplings.
    pub weight_by_couplings: bool,
}

impl Default for DipolarConfig {
    fn default() -> Self {
        Self { n_qubits: 4, weight_by_couplings: false }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub p_harmonics: usize,
    pub peak_limit: Option<f64>,
    pub energy_limit: Option<f64>,
    pub population: usize,
    pub generations: usize,
    pub sd_iterations: usize,
    pub restarts: usize,
    pub fd_step: f64,
    pub penalty_lambda0: f64,
    pub mutation_sigma: f64,
    pub mutation_decay: f64,
    pub tournament: usize,
    /// Waveform file seeding the first generation.
    pub initial: Option<PathBuf>,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let d = OptimizerConfig::default();
        Self {
            p_harmonics: d.p_harmonics,
            peak_limit: None,
            energy_limit: None,
            population: d.population,
            generations: d.generations,
            sd_iterations: d.sd_iterations,
            restarts: d.restarts,
            fd_step: d.fd_step,
            penalty_lambda0: d.penalty_lambda0,
            mutation_sigma: d.mutation_sigma,
            mutation_decay: d.mutation_decay,
            tournament: d.tournament,
            initial: None,
        }
    }
}

/// Explicit values or an inclusive linear range.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range { start: f64, stop: f64, count: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Range { start, count: 1, .. } => vec![start],
            Grid::Range { start, stop, count } => {
                (0..count).map(|k| start + (stop - start) * k as f64 / (count - 1) as f64).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    Udd,
    Qdd,
    Cpmg,
    Mrev16,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpec {
    pub kind: ReferenceKind,
    #[serde(default)]
    pub n: usize,
    /// Energy target in π/√T units.
    pub energy: f64,
    /// Peak amplitude in 2π/T units.
    pub peak: f64,
}

impl ReferenceSpec {
    pub fn label(&self) -> String {
        match self.kind {
            ReferenceKind::Udd => format!("udd{}", self.n),
            ReferenceKind::Qdd => format!("qdd{}", self.n),
            ReferenceKind::Cpmg => format!("cpmg{}", self.n),
            ReferenceKind::Mrev16 => "mrev16".into(),
        }
    }

    pub fn build(&self, period: f64) -> Result<PulseTrain> {
        let budget = SequenceBudget::new(self.energy * PI / period.sqrt(), self.peak)
            .map_err(|e| CliError::config(format!("reference {}: {e}", self.label())))?;
        let train = match self.kind {
            ReferenceKind::Udd => make_udd(self.n, period, &budget),
            ReferenceKind::Qdd => make_qdd(self.n, period, &budget),
            ReferenceKind::Cpmg => make_cpmg(self.n, period, &budget),
            ReferenceKind::Mrev16 => make_mrev16(period, &budget),
        };
        train.map_err(|e| CliError::config(format!("reference {}: {e}", self.label())))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationConfig {
    pub cycles: Option<usize>,
    pub steps: Option<usize>,
    pub delta_beta: Option<Grid>,
    pub delta_phi: Option<Grid>,
    pub qubits: Option<Vec<usize>>,
    pub references: Option<Vec<ReferenceSpec>>,
    /// Add the zero-drive baseline as a sequence.
    pub include_free: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub peaks: Vec<f64>,
    pub harmonics: Vec<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { peaks: vec![1.0, 10.0, 100.0], harmonics: vec![1, 9, 81] }
    }
}

fn one() -> f64 {
    1.0
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn default_references(problem: Problem) -> Vec<ReferenceSpec> {
    match problem {
        Problem::Dephasing => vec![
            ReferenceSpec { kind: ReferenceKind::Udd, n: 12, energy: 12.0, peak: 20.0 },
            ReferenceSpec { kind: ReferenceKind::Qdd, n: 3, energy: 16.0, peak: 22.0 },
        ],
        Problem::Dipolar => vec![ReferenceSpec { kind: ReferenceKind::Mrev16, n: 0, energy: 16.0, peak: 10.0 }],
    }
}

fn default_grid() -> Grid {
    Grid::Range { start: -0.05, stop: 0.05, count: 11 }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads and validates; relative paths inside resolve against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(dir) = path.parent() {
            if let Some(init) = &mut cfg.optimizer.initial {
                if init.is_relative() {
                    *init = dir.join(&*init);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::config(m));
        if !(self.period > 0.0) || !self.period.is_finite() {
            return bad(format!("period must be positive, got {}", self.period));
        }
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        match self.problem {
            Problem::Dephasing => {
                let d = &self.dephasing;
                if d.n_tls == 0 || d.couplings.len() != d.n_tls {
                    return bad(format!("dephasing: {} couplings for n_tls = {}", d.couplings.len(), d.n_tls));
                }
                self.dephasing_spec().validate()?;
            }
            Problem::Dipolar => {
                if !(2..=8).contains(&self.dipolar.n_qubits) {
                    return bad(format!("dipolar: n_qubits must lie in 2..=8, got {}", self.dipolar.n_qubits));
                }
            }
        }
        self.optimizer_config()?.validate().map_err(|e| CliError::config(e.to_string()))?;
        if let Some(init) = &self.optimizer.initial {
            if !init.is_file() {
                return bad(format!("optimizer.initial: {} does not exist", init.display()));
            }
        }
        if self.cycles() == 0 {
            return bad("evaluation.cycles must be at least 1".into());
        }
        for (name, grid) in [("delta_beta", &self.evaluation.delta_beta), ("delta_phi", &self.evaluation.delta_phi)] {
            match grid {
                Some(Grid::Values(v)) if v.is_empty() => return bad(format!("evaluation.{name} is empty")),
                Some(Grid::Range { count: 0, .. }) => return bad(format!("evaluation.{name} has count 0")),
                Some(g) if g.values().iter().any(|x| !x.is_finite()) => {
                    return bad(format!("evaluation.{name} has non-finite values"))
                }
                _ => {}
            }
        }
        let qubits = self.qubits();
        if qubits.is_empty() || qubits.iter().any(|n| !(2..=8).contains(n)) {
            return bad(format!("evaluation.qubits must be non-empty within 2..=8, got {qubits:?}"));
        }
        for r in self.references() {
            r.build(self.period)?;
        }
        if self.sweep.peaks.is_empty() || self.sweep.harmonics.is_empty() {
            return bad("sweep.peaks and sweep.harmonics must be non-empty".into());
        }
        if self.sweep.peaks.iter().any(|p| !(*p > 0.0)) || self.sweep.harmonics.contains(&0) {
            return bad("sweep values must be positive".into());
        }
        Ok(())
    }

    pub fn frame(&self) -> FrameSettings {
        let ordering = match self.frame.ordering {
            Ordering::Interaction => FrameOrdering::Interaction,
            Ordering::Literal => FrameOrdering::Literal,
        };
        FrameSettings { period: self.period, steps: self.frame.steps, ordering }
    }

    pub fn dephasing_spec(&self) -> DephasingSpec {
        let d = &self.dephasing;
        DephasingSpec {
            n_tls: d.n_tls,
            g: d.weight_by_couplings.then(|| d.couplings.clone()),
            error_weight: d.error_weight,
            epsilon: d.epsilon,
        }
    }

    pub fn dipolar_spec(&self) -> DipolarSpec {
        let n = self.dipolar.n_qubits;
        DipolarSpec { n_qubits: n, d: self.dipolar.weight_by_couplings.then(|| chain_couplings(n)) }
    }

    fn default_peak(&self) -> f64 {
        match self.problem {
            Problem::Dephasing => 10.0,
            Problem::Dipolar => 20.0,
        }
    }

    pub fn optimizer_config(&self) -> Result<OptimizerConfig> {
        let o = &self.optimizer;
        let mut cfg = OptimizerConfig {
            p_harmonics: o.p_harmonics,
            peak_limit: o.peak_limit.unwrap_or_else(|| self.default_peak()),
            population: o.population,
            generations: o.generations,
            sd_iterations: o.sd_iterations,
            fd_step: o.fd_step,
            seed: self.seed,
            penalty_lambda0: o.penalty_lambda0,
            restarts: o.restarts,
            period: self.period,
            mutation_sigma: o.mutation_sigma,
            mutation_decay: o.mutation_decay,
            tournament: o.tournament,
            energy_limit: o.energy_limit,
            initial: Vec::new(),
        };
        if let Some(path) = &o.initial {
            if path.is_file() {
                let LoadedWaveform::Fourier { waveform, .. } = waveform_file::load(path)? else {
                    return Err(CliError::config("optimizer.initial must be a fourier waveform"));
                };
                cfg.initial.push(resize(&waveform, cfg.p_harmonics).params());
            }
        }
        Ok(cfg)
    }

    pub fn cycles(&self) -> usize {
        self.evaluation.cycles.unwrap_or(1)
    }

    pub fn evolve_steps(&self) -> usize {
        self.evaluation.steps.unwrap_or(DEFAULT_EVOLVE_STEPS)
    }

    pub fn delta_beta(&self) -> Vec<f64> {
        self.evaluation.delta_beta.clone().unwrap_or_else(default_grid).values()
    }

    pub fn delta_phi(&self) -> Vec<f64> {
        self.evaluation.delta_phi.clone().unwrap_or_else(default_grid).values()
    }

    pub fn qubits(&self) -> Vec<usize> {
        self.evaluation.qubits.clone().unwrap_or_else(|| (2..=6).collect())
    }

    pub fn include_free(&self) -> bool {
        self.evaluation.include_free.unwrap_or(true)
    }

    pub fn references(&self) -> Vec<ReferenceSpec> {
        self.evaluation.references.clone().unwrap_or_else(|| default_references(self.problem))
    }
}

/// Truncates or zero-pads to `p` harmonics.
fn resize(w: &FourierWaveform, p: usize) -> FourierWaveform {
    let fit = |v: &[f64]| (0..p).map(|k| v.get(k).copied().unwrap_or(0.0)).collect();
    FourierWaveform { period: w.period, x: fit(&w.x), y: fit(&w.y) }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(problem: &str) -> String {
        format!("problem = \"{problem}\"\nseed = 3\n")
    }

    #[test]
    fn defaults_follow_the_problem() {
        let cfg = RunConfig::parse(&minimal("dipolar")).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.optimizer_config().unwrap().peak_limit, 20.0);
        assert_eq!(cfg.references()[0].label(), "mrev16");
        let cfg = RunConfig::parse(&minimal("dephasing")).unwrap();
        let labels: Vec<String> = cfg.references().iter().map(ReferenceSpec::label).collect();
        assert_eq!(labels, ["udd12", "qdd3"]);
        assert_eq!(cfg.dephasing_spec().g, None);
    }

    #[test]
    fn seed_is_mandatory() {
        assert!(matches!(RunConfig::parse("problem = \"dipolar\"\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = minimal("dipolar") + "[optimizer]\npopulaton = 8\n";
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn invalid_values_are_config_errors() {
        for extra in [
            "[optimizer]\np_harmonics = 0\n",
            "[evaluation]\ndelta_phi = []\n",
            "[evaluation]\nqubits = [1]\n",
            "[sweep]\nharmonics = []\n",
            "[optimizer]\ninitial = \"missing.toml\"\n",
            "[optimizer]\nenergy_limit = -1.0\n",
        ] {
            let cfg = RunConfig::parse(&(minimal("dephasing") + extra)).unwrap();
            assert!(matches!(cfg.validate(), Err(CliError::Config(_))), "{extra}");
        }
    }

    #[test]
    fn range_grid_is_inclusive() {
        let g = Grid::Range { start: -0.05, stop: 0.05, count: 5 };
        let v = g.values();
        assert_eq!(v.len(), 5);
        assert_eq!(v[0], -0.05);
        assert!((v[4] - 0.05).abs() < 1e-15 && v[2].abs() < 1e-15);
    }

    #[test]
    fn resize_pads_and_truncates() {
        let w = FourierWaveform::new(1.0, vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        assert_eq!(resize(&w, 3).params(), vec![1.0, 2.0, 0.0, 3.0, 4.0, 0.0]);
        assert_eq!(resize(&w, 1).params(), vec![1.0, 3.0]);
    }
}
