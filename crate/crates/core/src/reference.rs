//! Pulse-train baselines: CPMG, UDD, QDD and MREV-16.
//!
//! Pulses are rectangular at the budget's peak amplitude, so a rotation by θ
//! lasts θ/A. UDD centers follow `t_j = T sin²(jπ/(2n+2))`. QDD nests an inner
//! UDD on x inside each free interval left between the outer y pulses.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::waveform::{Pulse, PulseTrain};

/// Resource budget a baseline is sized against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceBudget {
    /// Energy `√(∫ v² dt)` the comparison is meant to match.
    pub energy_target: f64,
    /// Peak amplitude in units of 2π/T.
    pub peak_limit: f64,
}

/// How closely a generated train meets its budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BudgetReport {
    pub energy: f64,
    pub energy_target: f64,
    pub peak: f64,
    pub peak_limit: f64,
}

impl BudgetReport {
    pub fn energy_ratio(&self) -> f64 {
        self.energy / self.energy_target
    }
}

impl SequenceBudget {
    pub fn new(energy_target: f64, peak_limit: f64) -> Result<Self> {
        if !(energy_target > 0.0) || !(peak_limit > 0.0) {
            return Err(Error::InvalidArgument("budget values must be positive".into()));
        }
        Ok(Self { energy_target, peak_limit })
    }

    /// Physical pulse amplitude for period `T`.
    pub fn amplitude(&self, period: f64) -> f64 {
        2.0 * PI * self.peak_limit / period
    }

    pub fn report(&self, train: &PulseTrain) -> BudgetReport {
        BudgetReport {
            energy: train.energy(),
            energy_target: self.energy_target,
            peak: train.peak_amplitude(),
            peak_limit: self.peak_limit,
        }
    }
}

pub const PHASE_X: f64 = 0.0;
pub const PHASE_Y: f64 = FRAC_PI_2;
pub const PHASE_MINUS_X: f64 = PI;
pub const PHASE_MINUS_Y: f64 = -FRAC_PI_2;

/// Normalized UDD_n pulse positions in (0, 1).
pub fn udd_fractions(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|j| {
            let s = libm::sin(j as f64 * PI / (2 * n + 2) as f64);
            s * s
        })
        .collect()
}

fn pulse_at(center: f64, angle: f64, phase: f64, amplitude: f64) -> Pulse {
    let duration = angle / amplitude;
    Pulse { start: center - 0.5 * duration, duration, phase, amplitude }
}

fn check_order(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidArgument("sequence order must be at least 1".into()));
    }
    Ok(())
}

/// `n` x-phase π pulses centered at the UDD times.
pub fn make_udd(n: usize, period: f64, budget: &SequenceBudget) -> Result<PulseTrain> {
    check_order(n)?;
    let a = budget.amplitude(period);
    let pulses = udd_fractions(n).into_iter().map(|f| pulse_at(f * period, PI, PHASE_X, a)).collect();
    PulseTrain::new(period, pulses)
}

/// `n` equally spaced x-phase π pulses, centers at `(j − ½)T/n`.
pub fn make_cpmg(n: usize, period: f64, budget: &SequenceBudget) -> Result<PulseTrain> {
    check_order(n)?;
    let a = budget.amplitude(period);
    let pulses = (1..=n).map(|j| pulse_at((j as f64 - 0.5) * period / n as f64, PI, PHASE_X, a)).collect();
    PulseTrain::new(period, pulses)
}

/// Outer UDD_n of y-phase π pulses with an inner x-phase UDD_n filling each
/// of the `n + 1` free intervals between outer pulse edges.
pub fn make_qdd(n: usize, period: f64, budget: &SequenceBudget) -> Result<PulseTrain> {
    check_order(n)?;
    let a = budget.amplitude(period);
    let outer: Vec<Pulse> = udd_fractions(n).into_iter().map(|f| pulse_at(f * period, PI, PHASE_Y, a)).collect();
    let mut edges = Vec::with_capacity(n + 2);
    edges.push((0.0, 0.0));
    for p in &outer {
        edges.push((p.start, p.end()));
    }
    edges.push((period, period));
    let mut pulses = outer.clone();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0].1, w[1].0);
        if hi <= lo {
            return Err(Error::InfeasibleBudget("outer QDD pulses leave no free interval".into()));
        }
        for f in udd_fractions(n) {
            pulses.push(pulse_at(lo + f * (hi - lo), PI, PHASE_X, a));
        }
    }
    PulseTrain::new(period, pulses)
}

/// One MREV-8 subcycle: nine delays (in units of τ, summing to 12) around
/// eight π/2 pulses with the given phases.
#[derive(Debug, Clone, PartialEq)]
pub struct Mrev8Cycle {
    pub delays: [f64; 9],
    pub phases: [f64; 8],
}

impl Default for Mrev8Cycle {
    /// τ X τ (−Y) 2τ Y τ (−X) 2τ (−X) τ Y 2τ (−Y) τ X τ
    fn default() -> Self {
        Self {
            delays: [1.0, 1.0, 2.0, 1.0, 2.0, 1.0, 2.0, 1.0, 1.0],
            phases: [PHASE_X, PHASE_MINUS_Y, PHASE_Y, PHASE_MINUS_X, PHASE_MINUS_X, PHASE_Y, PHASE_MINUS_Y, PHASE_X],
        }
    }
}

/// MREV-16 with the default subcycle.
pub fn make_mrev16(period: f64, budget: &SequenceBudget) -> Result<PulseTrain> {
    make_mrev16_with(period, budget, &Mrev8Cycle::default())
}

/// Two MREV-8 subcycles, the second with every phase inverted. Pulse
/// centers sit at the cumulative delays.
pub fn make_mrev16_with(period: f64, budget: &SequenceBudget, cycle: &Mrev8Cycle) -> Result<PulseTrain> {
    let total: f64 = cycle.delays.iter().sum();
    if !(total > 0.0) || cycle.delays.iter().any(|d| *d < 0.0) {
        return Err(Error::InvalidArgument("MREV delays must be non-negative with positive sum".into()));
    }
    let a = budget.amplitude(period);
    let half = 0.5 * period;
    let tau = half / total;
    let mut pulses = Vec::with_capacity(16);
    for (sub, sign) in [(0usize, 0.0), (1, PI)] {
        let mut t = sub as f64 * half;
        for (k, &phase) in cycle.phases.iter().enumerate() {
            t += cycle.delays[k] * tau;
            pulses.push(pulse_at(t, FRAC_PI_2, phase + sign, a));
        }
    }
    PulseTrain::new(period, pulses)
}
