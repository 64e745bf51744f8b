//! Genetic search followed by steepest-descent polishing over the sine
//! coefficients `ζ = {v_{α,n}}` (π/T units, layout `[x₁..x_p, y₁..y_p]`).
//!
//! Every candidate is projected onto the peak constraint by radial
//! rescaling. The continuity constraint enters through the penalty term,
//! with the multiplier raised on each restart.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::cost_functions::{cost_dephasing, cost_dipolar, CostReport, DephasingSpec, DipolarSpec, PenaltySchedule};
use crate::error::{Error, Result};
use crate::modulation::{FrameOrdering, ModulationMatrix, DEFAULT_STEPS};
use crate::waveform::FourierWaveform;

/// Cost components of one candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub phi0: f64,
    pub phi1: f64,
    pub penalty: f64,
}

impl Evaluation {
    pub fn total(&self, lambda: f64) -> f64 {
        self.phi0 + self.phi1 + lambda * self.penalty
    }

    pub fn rms(&self) -> f64 {
        libm::sqrt(self.phi0 + self.phi1)
    }
}

impl From<&CostReport> for Evaluation {
    fn from(r: &CostReport) -> Self {
        Self { phi0: r.phi0, phi1: r.phi1, penalty: r.penalty }
    }
}

/// A deterministic cost over coefficient vectors.
pub trait Objective: Sync {
    fn evaluate(&self, zeta: &[f64]) -> Result<Evaluation>;
}

/// Wraps a plain function as an objective with no constraint term.
pub struct FnObjective<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn evaluate(&self, zeta: &[f64]) -> Result<Evaluation> {
        Ok(Evaluation { phi0: (self.0)(zeta), phi1: 0.0, penalty: 0.0 })
    }
}

/// Settings shared by the waveform objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSettings {
    pub period: f64,
    pub steps: usize,
    pub ordering: FrameOrdering,
}

impl Default for FrameSettings {
    fn default() -> Self {
        Self { period: 1.0, steps: DEFAULT_STEPS, ordering: FrameOrdering::Interaction }
    }
}

impl FrameSettings {
    fn modulation(&self, w: &FourierWaveform) -> Result<ModulationMatrix> {
        ModulationMatrix::from_drive(w, self.steps, self.ordering)
    }
}

pub struct DephasingObjective {
    pub spec: DephasingSpec,
    pub frame: FrameSettings,
}

impl DephasingObjective {
    pub fn report(&self, zeta: &[f64], lambda: f64) -> Result<CostReport> {
        let w = FourierWaveform::from_params(self.frame.period, zeta);
        cost_dephasing(&self.frame.modulation(&w)?, &w, &self.spec, lambda)
    }
}

impl Objective for DephasingObjective {
    fn evaluate(&self, zeta: &[f64]) -> Result<Evaluation> {
        Ok((&self.report(zeta, 0.0)?).into())
    }
}

pub struct DipolarObjective {
    pub spec: DipolarSpec,
    pub frame: FrameSettings,
}

impl DipolarObjective {
    pub fn report(&self, zeta: &[f64], lambda: f64) -> Result<CostReport> {
        let w = FourierWaveform::from_params(self.frame.period, zeta);
        cost_dipolar(&self.frame.modulation(&w)?, &self.spec, lambda)
    }
}

impl Objective for DipolarObjective {
    fn evaluate(&self, zeta: &[f64]) -> Result<Evaluation> {
        Ok((&self.report(zeta, 0.0)?).into())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub p_harmonics: usize,
    /// Peak amplitude limit in units of 2π/T.
    pub peak_limit: f64,
    pub population: usize,
    pub generations: usize,
    pub sd_iterations: usize,
    pub fd_step: f64,
    pub seed: u64,
    pub penalty_lambda0: f64,
    pub restarts: usize,
    pub period: f64,
    /// Initial GA mutation width in π/T units.
    pub mutation_sigma: f64,
    pub mutation_decay: f64,
    pub tournament: usize,
    /// Upper bound on `E √T / π`, with `E = √(∫ v² dt)`.
    pub energy_limit: Option<f64>,
    /// Starting points for the first generation instead of random draws.
    pub initial: Vec<Vec<f64>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            p_harmonics: 9,
            peak_limit: 10.0,
            population: 24,
            generations: 60,
            sd_iterations: 60,
            fd_step: 1e-4,
            seed: 0,
            penalty_lambda0: PenaltySchedule::default().lambda0,
            restarts: 8,
            period: 1.0,
            mutation_sigma: 0.5,
            mutation_decay: 0.95,
            tournament: 3,
            energy_limit: None,
            initial: Vec::new(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.p_harmonics == 0 {
            return bad("p_harmonics must be at least 1");
        }
        if self.population < 4 || !self.population.is_multiple_of(2) {
            return bad("population must be even and at least 4");
        }
        if !(self.fd_step > 0.0) {
            return bad("fd_step must be positive");
        }
        if !(self.peak_limit > 0.0) {
            return bad("peak_limit must be positive");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.period > 0.0) {
            return bad("period must be positive");
        }
        if !(self.penalty_lambda0 >= 0.0) || !(self.mutation_sigma >= 0.0) {
            return bad("penalty and mutation scales must be non-negative");
        }
        if self.energy_limit.is_some_and(|e| !(e > 0.0)) {
            return bad("energy_limit must be positive");
        }
        if self.tournament == 0 {
            return bad("tournament size must be at least 1");
        }
        if self.initial.iter().any(|z| z.len() != 2 * self.p_harmonics) {
            return bad("initial points must have 2·p_harmonics coefficients");
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        2 * self.p_harmonics
    }

    /// Radial projection onto the peak and energy limits.
    pub fn project(&self, zeta: &mut [f64]) {
        if let Some(limit) = self.energy_limit {
            let e = scaled_energy(&FourierWaveform::from_params(self.period, zeta));
            if e > limit {
                let s = limit / e;
                zeta.iter_mut().for_each(|z| *z *= s);
            }
        }
        project_peak(zeta, self.period, self.peak_limit);
    }

    fn schedule(&self) -> PenaltySchedule {
        PenaltySchedule { lambda0: self.penalty_lambda0, ..PenaltySchedule::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Genetic,
    Descent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub restart: usize,
    pub phase: Phase,
    /// Current elite of this restart, measured with this restart's λ.
    pub current_total: f64,
    /// Best score seen so far over all restarts, `Φ⁰ + Φ¹ + λ₀ Φ_P`.
    pub best_so_far: f64,
    pub phi0: f64,
    pub phi1: f64,
    pub penalty: f64,
    pub peak: f64,
    /// `E √T / π`.
    pub energy: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrace {
    pub entries: Vec<TraceEntry>,
    pub best: Vec<f64>,
    pub best_evaluation: Evaluation,
    /// Whether `best` meets the continuity target.
    pub feasible: bool,
    /// Restarts whose final elite met the continuity target.
    pub feasible_restarts: usize,
}

impl OptimizationTrace {
    pub fn waveform(&self, period: f64) -> FourierWaveform {
        FourierWaveform::from_params(period, &self.best)
    }
}

/// Energy in π/√T units, the scale of [`OptimizerConfig::energy_limit`].
pub fn scaled_energy(w: &FourierWaveform) -> f64 {
    w.energy() * libm::sqrt(w.period) / core::f64::consts::PI
}

/// Central-difference gradient.
pub fn gradient_fd(f: &(dyn Fn(&[f64]) -> Result<f64> + Sync), zeta: &[f64], fd_step: f64) -> Result<Vec<f64>> {
    if !(fd_step > 0.0) {
        return Err(Error::InvalidArgument("fd_step must be positive".into()));
    }
    let component = |i: usize| -> Result<f64> {
        let mut z = zeta.to_vec();
        z[i] = zeta[i] + fd_step;
        let fp = f(&z)?;
        z[i] = zeta[i] - fd_step;
        let fm = f(&z)?;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite("objective"));
        }
        Ok((fp - fm) / (2.0 * fd_step))
    };
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        (0..zeta.len()).into_par_iter().map(component).collect()
    }
    #[cfg(not(feature = "std"))]
    {
        (0..zeta.len()).map(component).collect()
    }
}

/// Scales `zeta` radially so its waveform's peak is at most `limit`.
pub fn project_peak(zeta: &mut [f64], period: f64, limit: f64) {
    for _ in 0..4 {
        let peak = FourierWaveform::from_params(period, zeta).peak_amplitude();
        if peak <= limit {
            return;
        }
        let s = limit / peak * (1.0 - 1e-12);
        zeta.iter_mut().for_each(|z| *z *= s);
    }
}

fn evaluate_all<O: Objective + ?Sized>(objective: &O, pop: &[Vec<f64>]) -> Result<Vec<Evaluation>> {
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        pop.par_iter().map(|z| objective.evaluate(z)).collect()
    }
    #[cfg(not(feature = "std"))]
    {
        pop.iter().map(|z| objective.evaluate(z)).collect()
    }
}

struct Search<'a, O: Objective + ?Sized> {
    objective: &'a O,
    cfg: &'a OptimizerConfig,
    target: f64,
    best_score: f64,
    best: Option<(Vec<f64>, Evaluation)>,
    best_any: Option<(Vec<f64>, Evaluation)>,
    entries: Vec<TraceEntry>,
}

impl<O: Objective + ?Sized> Search<'_, O> {
    fn score(&self, e: &Evaluation) -> f64 {
        e.total(self.cfg.penalty_lambda0)
    }

    /// Folds evaluated candidates into the global bests.
    fn observe(&mut self, zeta: &[f64], e: &Evaluation) {
        let s = self.score(e);
        if !s.is_finite() {
            return;
        }
        if self.best_any.as_ref().is_none_or(|(_, b)| s < self.score(b)) {
            self.best_any = Some((zeta.to_vec(), *e));
        }
        if e.penalty < self.target && s < self.best_score {
            self.best_score = s;
            self.best = Some((zeta.to_vec(), *e));
        }
    }

    fn record(&mut self, restart: usize, phase: Phase, zeta: &[f64], e: &Evaluation, lambda: f64) {
        let w = FourierWaveform::from_params(self.cfg.period, zeta);
        let best_so_far = match self.entries.last() {
            Some(prev) => prev.best_so_far.min(self.score(e)),
            None => self.score(e),
        };
        self.entries.push(TraceEntry {
            iteration: self.entries.len(),
            restart,
            phase,
            current_total: e.total(lambda),
            best_so_far: best_so_far.min(self.best_score),
            phi0: e.phi0,
            phi1: e.phi1,
            penalty: e.penalty,
            peak: w.peak_amplitude(),
            energy: scaled_energy(&w),
            feasible: e.penalty < self.target,
        });
    }

    fn run_restart(&mut self, restart: usize, lambda: f64) -> Result<(Vec<f64>, Evaluation)> {
        let cfg = self.cfg;
        let dim = cfg.dimension();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let init = Normal::new(0.0, cfg.peak_limit / libm::sqrt(cfg.p_harmonics as f64))
            .map_err(|_| Error::InvalidArgument("bad initial spread".into()))?;

        let mut pop: Vec<Vec<f64>> = Vec::with_capacity(cfg.population);
        if restart == 0 {
            pop.extend(cfg.initial.iter().take(cfg.population).cloned());
        }
        while pop.len() < cfg.population {
            pop.push((0..dim).map(|_| init.sample(&mut rng)).collect());
        }
        for z in pop.iter_mut() {
            cfg.project(z);
        }
        let mut evals = evaluate_all(self.objective, &pop)?;
        for (z, e) in pop.iter().zip(&evals) {
            self.observe(z, e);
        }

        let elite_of = |evals: &[Evaluation]| {
            (0..evals.len()).min_by(|&a, &b| evals[a].total(lambda).total_cmp(&evals[b].total(lambda))).unwrap()
        };
        let mut sigma = cfg.mutation_sigma;
        for _ in 0..cfg.generations {
            let e = elite_of(&evals);
            self.record(restart, Phase::Genetic, &pop[e].clone(), &evals[e].clone(), lambda);
            let mut next = Vec::with_capacity(cfg.population);
            next.push(pop[e].clone());
            let mutation = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE))
                .map_err(|_| Error::InvalidArgument("bad mutation width".into()))?;
            while next.len() < cfg.population {
                let pa = tournament(&mut rng, &evals, cfg.tournament, lambda);
                let pb = tournament(&mut rng, &evals, cfg.tournament, lambda);
                let mut child: Vec<f64> =
                    (0..dim).map(|i| if rng.random::<bool>() { pop[pa][i] } else { pop[pb][i] }).collect();
                for c in child.iter_mut() {
                    *c += mutation.sample(&mut rng);
                }
                cfg.project(&mut child);
                next.push(child);
            }
            let mut next_evals = alloc::vec![evals[e]];
            next_evals.extend(evaluate_all(self.objective, &next[1..])?);
            for (z, ev) in next.iter().zip(&next_evals).skip(1) {
                self.observe(z, ev);
            }
            pop = next;
            evals = next_evals;
            sigma *= cfg.mutation_decay;
        }

        let e = elite_of(&evals);
        let mut x = pop[e].clone();
        let mut fx = evals[e];
        self.record(restart, Phase::Genetic, &x.clone(), &fx, lambda);
        let mut step = 1.0;
        for _ in 0..cfg.sd_iterations {
            let objective = self.objective;
            let f = move |z: &[f64]| objective.evaluate(z).map(|e| e.total(lambda));
            let g = gradient_fd(&f, &x, cfg.fd_step)?;
            let g2: f64 = g.iter().map(|v| v * v).sum();
            if g2 == 0.0 {
                break;
            }
            let mut accepted = false;
            for _ in 0..40 {
                let mut trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
                cfg.project(&mut trial);
                let ft = self.objective.evaluate(&trial)?;
                self.observe(&trial, &ft);
                if ft.total(lambda) <= fx.total(lambda) - 1e-4 * step * g2 {
                    x = trial;
                    fx = ft;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            self.record(restart, Phase::Descent, &x.clone(), &fx, lambda);
            if !accepted {
                break;
            }
            step *= 2.0;
        }
        Ok((x, fx))
    }
}

fn tournament(rng: &mut ChaCha8Rng, evals: &[Evaluation], size: usize, lambda: f64) -> usize {
    let mut best = rng.random_range(0..evals.len());
    for _ in 1..size {
        let c = rng.random_range(0..evals.len());
        if evals[c].total(lambda) < evals[best].total(lambda) {
            best = c;
        }
    }
    best
}

/// Runs `cfg.restarts` GA + SD rounds with escalating penalty. The trace
/// carries the best feasible candidate, or the best infeasible one when no
/// candidate met the continuity target.
pub fn optimize_report<O: Objective + ?Sized>(objective: &O, cfg: &OptimizerConfig) -> Result<OptimizationTrace> {
    cfg.validate()?;
    let schedule = cfg.schedule();
    let mut search = Search {
        objective,
        cfg,
        target: schedule.target,
        best_score: f64::INFINITY,
        best: None,
        best_any: None,
        entries: Vec::new(),
    };
    let mut feasible_restarts = 0;
    for r in 0..cfg.restarts {
        let (_, e) = search.run_restart(r, schedule.lambda(r))?;
        if e.penalty < schedule.target {
            feasible_restarts += 1;
        }
    }
    let (feasible, (best, best_evaluation)) = match (search.best.take(), search.best_any.take()) {
        (Some(b), _) => (true, b),
        (None, Some(b)) => (false, b),
        (None, None) => return Err(Error::NonFinite("objective")),
    };
    Ok(OptimizationTrace { entries: search.entries, best, best_evaluation, feasible, feasible_restarts })
}

/// Like [`optimize_report`] but fails unless a feasible waveform was found.
pub fn optimize<O: Objective + ?Sized>(
    objective: &O,
    cfg: &OptimizerConfig,
) -> Result<(FourierWaveform, OptimizationTrace)> {
    let trace = optimize_report(objective, cfg)?;
    if !trace.feasible {
        return Err(Error::NoFeasiblePoint { restarts: cfg.restarts, best_penalty: trace.best_evaluation.penalty });
    }
    Ok((trace.waveform(cfg.period), trace))
}

/// Where a cell of the resource grid sits relative to the balanced region.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Region {
    /// More amplitude makes the cost worse.
    OverDriving,
    /// More bandwidth makes the cost worse.
    OverModulation,
    Both,
    Balanced,
    Unknown,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::OverDriving => "I",
            Region::OverModulation => "II",
            Region::Both => "I+II",
            Region::Balanced => "III",
            Region::Unknown => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub peak_limit: f64,
    pub p_harmonics: usize,
    pub result: core::result::Result<Evaluation, Error>,
    pub region: Region,
}

impl SweepCell {
    pub fn rms(&self) -> Option<f64> {
        self.result.as_ref().ok().map(Evaluation::rms)
    }
}

/// Optimizes every `(peak, p)` cell of the grid, peak-major. Failed cells
/// keep their error and the sweep continues.
pub fn resource_sweep<O: Objective + ?Sized>(
    objective: &O,
    base: &OptimizerConfig,
    peaks: &[f64],
    harmonics: &[usize],
) -> Vec<SweepCell> {
    let jobs: Vec<(f64, usize)> = peaks.iter().flat_map(|&a| harmonics.iter().map(move |&p| (a, p))).collect();
    let run = |&(peak_limit, p_harmonics): &(f64, usize)| {
        let cfg = OptimizerConfig { peak_limit, p_harmonics, initial: Vec::new(), ..base.clone() };
        let result = optimize(objective, &cfg).map(|(_, trace)| trace.best_evaluation);
        SweepCell { peak_limit, p_harmonics, result, region: Region::Unknown }
    };
    #[cfg(feature = "std")]
    let mut cells: Vec<SweepCell> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "std"))]
    let mut cells: Vec<SweepCell> = jobs.iter().map(run).collect();
    classify_regions(&mut cells, peaks.len(), harmonics.len());
    cells
}

/// Labels each cell from the sign of the cost change towards the next
/// larger amplitude and the next larger bandwidth.
pub fn classify_regions(cells: &mut [SweepCell], n_peaks: usize, n_harmonics: usize) {
    let rms: Vec<Option<f64>> = cells.iter().map(SweepCell::rms).collect();
    let at = |i: usize, j: usize| rms[i * n_harmonics + j];
    let slope = |here: Option<f64>, lower: Option<f64>, higher: Option<f64>| -> Option<bool> {
        match (lower, here, higher) {
            (_, Some(h), Some(u)) => Some(u > h),
            (Some(l), Some(h), None) => Some(h > l),
            _ => None,
        }
    };
    for i in 0..n_peaks {
        for j in 0..n_harmonics {
            let here = at(i, j);
            let amp =
                slope(here, i.checked_sub(1).and_then(|k| at(k, j)), (i + 1 < n_peaks).then(|| at(i + 1, j)).flatten());
            let bw = slope(
                here,
                j.checked_sub(1).and_then(|k| at(i, k)),
                (j + 1 < n_harmonics).then(|| at(i, j + 1)).flatten(),
            );
            cells[i * n_harmonics + j].region = match (amp, bw) {
                (Some(true), Some(true)) => Region::Both,
                (Some(true), Some(false)) => Region::OverDriving,
                (Some(false), Some(true)) => Region::OverModulation,
                (Some(false), Some(false)) => Region::Balanced,
                _ => Region::Unknown,
            };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn small_cfg() -> OptimizerConfig {
        OptimizerConfig {
            p_harmonics: 2,
            peak_limit: 100.0,
            population: 8,
            generations: 10,
            sd_iterations: 200,
            restarts: 1,
            seed: 7,
            ..Default::default()
        }
    }

    #[test]
    fn gradient_of_square() {
        let f = |z: &[f64]| -> Result<f64> { Ok(z.iter().map(|v| v * v).sum()) };
        let g = gradient_fd(&f, &[1.0, 2.0], 1e-4).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-6 && (g[1] - 4.0).abs() < 1e-6);
        let c = |_: &[f64]| -> Result<f64> { Ok(3.0) };
        assert!(gradient_fd(&c, &[1.0, 2.0], 1e-4).unwrap().iter().all(|v| *v == 0.0));
        assert!(gradient_fd(&f, &[1.0], 0.0).is_err());
        let nan = |_: &[f64]| -> Result<f64> { Ok(f64::NAN) };
        assert!(matches!(gradient_fd(&nan, &[1.0], 1e-3), Err(Error::NonFinite(_))));
    }

    #[test]
    fn quadratic_bowl_converges() {
        let target = [0.3, -0.2, 0.5, 0.1];
        let obj = FnObjective(move |z: &[f64]| z.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum());
        let (w, trace) = optimize(&obj, &small_cfg()).unwrap();
        for (a, b) in w.params().iter().zip(&target) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        for pair in trace.entries.windows(2) {
            assert!(pair[1].best_so_far <= pair[0].best_so_far);
        }
    }

    #[test]
    fn deterministic_from_seed() {
        let obj = FnObjective(|z: &[f64]| z.iter().map(|v| (v - 1.0) * (v - 1.0) + libm::sin(3.0 * v)).sum());
        let a = optimize(&obj, &small_cfg()).unwrap().1;
        let b = optimize(&obj, &small_cfg()).unwrap().1;
        assert_eq!(a, b);
    }

    #[test]
    fn peak_projection_is_exact() {
        let mut z = alloc::vec![30.0, 0.0, 0.0, 10.0];
        project_peak(&mut z, 1.0, 10.0);
        let p = FourierWaveform::from_params(1.0, &z).peak_amplitude();
        assert!(p <= 10.0 && p > 10.0 - 1e-6);
    }

    #[test]
    fn returned_waveform_respects_peak() {
        // optimum lies outside the peak ball, so the constraint binds
        let obj = FnObjective(|z: &[f64]| z.iter().map(|v| (v - 40.0) * (v - 40.0)).sum());
        let cfg = OptimizerConfig { peak_limit: 5.0, sd_iterations: 30, ..small_cfg() };
        let (w, _) = optimize(&obj, &cfg).unwrap();
        assert!(w.peak_amplitude() <= 5.0);
    }

    #[test]
    fn energy_limit_is_enforced() {
        let obj = FnObjective(|z: &[f64]| z.iter().map(|v| (v - 40.0) * (v - 40.0)).sum());
        let cfg = OptimizerConfig { energy_limit: Some(3.0), sd_iterations: 30, ..small_cfg() };
        let (w, _) = optimize(&obj, &cfg).unwrap();
        let e = w.energy() / PI;
        assert!(e <= 3.0 + 1e-12 && e > 2.9, "{e}");
        assert!(OptimizerConfig { energy_limit: Some(0.0), ..small_cfg() }.validate().is_err());
    }

    #[test]
    fn infeasible_constraint_is_reported() {
        struct Broken;
        impl Objective for Broken {
            fn evaluate(&self, _: &[f64]) -> Result<Evaluation> {
                Ok(Evaluation { phi0: 0.0, phi1: 0.0, penalty: 1.0 })
            }
        }
        let cfg = OptimizerConfig { generations: 2, sd_iterations: 2, restarts: 2, ..small_cfg() };
        assert!(matches!(optimize(&Broken, &cfg), Err(Error::NoFeasiblePoint { restarts: 2, .. })));
        let trace = optimize_report(&Broken, &cfg).unwrap();
        assert!(!trace.feasible && trace.best.len() == 4);
    }

    #[test]
    fn regions_follow_slopes() {
        let cell = |rms: f64| SweepCell {
            peak_limit: 0.0,
            p_harmonics: 0,
            result: Ok(Evaluation { phi0: rms * rms, phi1: 0.0, penalty: 0.0 }),
            region: Region::Unknown,
        };
        // rows: amplitude, columns: bandwidth
        let mut cells: Vec<SweepCell> = [3.0, 2.0, 4.0, 2.0, 1.0, 0.5, 5.0, 0.8, 0.1].into_iter().map(cell).collect();
        classify_regions(&mut cells, 3, 3);
        let labels: Vec<&str> = cells.iter().map(|c| c.region.label()).collect();
        assert_eq!(labels, ["III", "II", "II", "I", "III", "III", "I", "III", "III"]);
    }

    #[test]
    fn config_validation() {
        let ok = OptimizerConfig::default();
        assert!(ok.validate().is_ok());
        assert!(OptimizerConfig { population: 5, ..ok.clone() }.validate().is_err());
        assert!(OptimizerConfig { population: 2, ..ok.clone() }.validate().is_err());
        assert!(OptimizerConfig { p_harmonics: 0, ..ok.clone() }.validate().is_err());
        assert!(OptimizerConfig { fd_step: 0.0, ..ok }.validate().is_err());
    }
}
