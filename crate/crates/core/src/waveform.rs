//! Control waveforms `v_α(t)`, α ∈ {x, y}.
//!
//! The drive couples as `V(t) = ½ (v_x σ_x + v_y σ_y)`, so `v` is the Rabi
//! angular frequency and a π rotation has area `∫v dt = π`. Fourier
//! coefficients are stored in units of π/T, matching how the tabulated
//! waveforms are published. Energies are `√(∫ Σ_α v_α² dt)` and peaks are
//! reported in units of 2π/T.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};

/// Anything that can be played as a two-quadrature drive over one period.
pub trait Drive: Sync {
    fn period(&self) -> f64;

    /// `(v_x, v_y)` at `t`, which must lie in `[0, T]`. No range check.
    fn amplitude(&self, t: f64) -> [f64; 2];

    /// Interior times where the drive is not smooth. Integrators split steps
    /// there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }

    fn evaluate(&self, t: f64) -> Result<[f64; 2]> {
        let period = self.period();
        if !(0.0..=period).contains(&t) {
            return Err(Error::TimeOutOfRange { t, period });
        }
        Ok(self.amplitude(t))
    }

    /// Evaluation on the periodic extension.
    fn amplitude_periodic(&self, t: f64) -> [f64; 2] {
        let period = self.period();
        let r = t - period * libm::floor(t / period);
        self.amplitude(r)
    }
}

/// `v_α(t) = (π/T) Σ_{n=1}^{p} a_{α,n} sin(2nπt/T)` with `a` in π/T units.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierWaveform {
    pub period: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FourierWaveform {
    pub fn new(period: f64, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!("period must be positive, got {period}")));
        }
        if x.iter().chain(y.iter()).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("waveform coefficients"));
        }
        Ok(Self { period, x, y })
    }

    pub fn zero(period: f64, harmonics: usize) -> Self {
        Self { period, x: alloc::vec![0.0; harmonics], y: alloc::vec![0.0; harmonics] }
    }

    /// Builds from a flat parameter vector `[x_1..x_p, y_1..y_p]`.
    pub fn from_params(period: f64, params: &[f64]) -> Self {
        let p = params.len() / 2;
        Self { period, x: params[..p].to_vec(), y: params[p..2 * p].to_vec() }
    }

    pub fn params(&self) -> Vec<f64> {
        let p = self.harmonics();
        let mut out = alloc::vec![0.0; 2 * p];
        out[..self.x.len()].copy_from_slice(&self.x);
        out[p..p + self.y.len()].copy_from_slice(&self.y);
        out
    }

    pub fn harmonics(&self) -> usize {
        self.x.len().max(self.y.len())
    }

    /// Highest harmonic index with a nonzero coefficient.
    pub fn max_harmonic(&self) -> usize {
        let last = |c: &[f64]| c.iter().rposition(|&a| a != 0.0).map_or(0, |i| i + 1);
        last(&self.x).max(last(&self.y))
    }

    /// `f_BW = 2p/T`
    pub fn bandwidth(&self) -> f64 {
        2.0 * self.max_harmonic() as f64 / self.period
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            period: self.period,
            x: self.x.iter().map(|a| a * s).collect(),
            y: self.y.iter().map(|a| a * s).collect(),
        }
    }

    /// Physical amplitude per coefficient unit.
    #[inline]
    pub fn unit(&self) -> f64 {
        PI / self.period
    }

    /// Parseval: `∫_0^T v² dt = (T/2) Σ v_n²`.
    pub fn energy(&self) -> f64 {
        let u = self.unit();
        let sum: f64 = self.x.iter().chain(self.y.iter()).map(|a| (a * u) * (a * u)).sum();
        libm::sqrt(0.5 * self.period * sum)
    }

    /// Energy by trapezoid quadrature of the defining integral.
    pub fn energy_quadrature(&self, points: usize) -> f64 {
        let h = self.period / points as f64;
        let sq = |t: f64| {
            let [vx, vy] = self.amplitude(t);
            vx * vx + vy * vy
        };
        let mut acc = 0.5 * (sq(0.0) + sq(self.period));
        for k in 1..points {
            acc += sq(k as f64 * h);
        }
        libm::sqrt(acc * h)
    }

    /// `max_t |v(t)| · T/2π`, via a 4096-point scan refined by golden-section
    /// search around the best sample.
    pub fn peak_amplitude(&self) -> f64 {
        const GRID: usize = 4096;
        let mag2 = |t: f64| {
            let [vx, vy] = self.amplitude(t);
            vx * vx + vy * vy
        };
        let samples = self.sample_grid(GRID);
        let (best_k, _) = samples
            .iter()
            .enumerate()
            .map(|(k, v)| (k, v[0] * v[0] + v[1] * v[1]))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        let h = self.period / GRID as f64;
        let t_best = golden_max(&mag2, (best_k as f64 - 1.0) * h, (best_k as f64 + 1.0) * h, 1e-13 * self.period);
        let peak2 = mag2(t_best).max(samples[best_k][0] * samples[best_k][0] + samples[best_k][1] * samples[best_k][1]);
        libm::sqrt(peak2) * self.period / (2.0 * PI)
    }

    /// Samples at `t_k = kT/N`, `k = 0..N`, using angle-addition recurrences.
    pub fn sample_grid(&self, n: usize) -> Vec<[f64; 2]> {
        self.sample_shifted(n, 0.0)
    }

    /// Samples at step midpoints `t_k = (k + ½)T/N`, `k = 0..N-1`.
    pub fn sample_midpoints(&self, n: usize) -> Vec<[f64; 2]> {
        let mut out = self.sample_shifted(n, 0.5);
        out.pop();
        out
    }

    fn sample_shifted(&self, n: usize, shift: f64) -> Vec<[f64; 2]> {
        let u = self.unit();
        let p = self.harmonics();
        let mut out = Vec::with_capacity(n + 1);
        for k in 0..=n {
            let theta = 2.0 * PI * (k as f64 + shift) / n as f64;
            let (s1, c1) = libm::sincos(theta);
            let (mut s, mut c) = (0.0, 1.0);
            let (mut vx, mut vy) = (0.0, 0.0);
            for h in 0..p {
                // sin((h+1)θ), cos((h+1)θ)
                let s_next = s * c1 + c * s1;
                c = c * c1 - s * s1;
                s = s_next;
                if h % 16 == 15 {
                    let (se, ce) = libm::sincos((h + 1) as f64 * theta);
                    s = se;
                    c = ce;
                }
                vx += self.x.get(h).copied().unwrap_or(0.0) * s;
                vy += self.y.get(h).copied().unwrap_or(0.0) * s;
            }
            out.push([vx * u, vy * u]);
        }
        out
    }
}

impl Drive for FourierWaveform {
    fn period(&self) -> f64 {
        self.period
    }

    fn amplitude(&self, t: f64) -> [f64; 2] {
        let w = 2.0 * PI * t / self.period;
        let mut vx = 0.0;
        let mut vy = 0.0;
        for n in 0..self.harmonics() {
            let s = libm::sin((n + 1) as f64 * w);
            vx += self.x.get(n).copied().unwrap_or(0.0) * s;
            vy += self.y.get(n).copied().unwrap_or(0.0) * s;
        }
        let u = self.unit();
        [vx * u, vy * u]
    }
}

/// A constant-amplitude pulse with phase `φ`: `v_x = A cos φ`, `v_y = A sin φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub start: f64,
    pub duration: f64,
    pub phase: f64,
    pub amplitude: f64,
}

impl Pulse {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }

    pub fn center(&self) -> f64 {
        self.start + 0.5 * self.duration
    }

    /// Rotation angle `∫ v dt` of the rectangular profile.
    pub fn area(&self) -> f64 {
        self.amplitude * self.duration
    }
}

/// Piecewise-constant pulse list over one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseTrain {
    pub period: f64,
    pub pulses: Vec<Pulse>,
    /// Raised-cosine rise time applied inside each pulse edge; `None` keeps
    /// the rectangular profile.
    pub edge_rise: Option<f64>,
}

impl PulseTrain {
    /// Validates ordering, positivity, containment and non-overlap.
    pub fn new(period: f64, mut pulses: Vec<Pulse>) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidArgument(alloc::format!("period must be positive, got {period}")));
        }
        pulses.sort_by(|a, b| a.start.total_cmp(&b.start));
        let tol = 1e-12 * period;
        for (i, p) in pulses.iter().enumerate() {
            if !(p.duration > 0.0) || !p.amplitude.is_finite() || !p.phase.is_finite() {
                return Err(Error::InvalidArgument(alloc::format!(
                    "pulse {i} has non-positive width or non-finite value"
                )));
            }
            if p.start < -tol || p.end() > period + tol {
                return Err(Error::InfeasibleBudget(alloc::format!(
                    "pulse {i} [{}, {}] leaves the cycle [0, {period}]",
                    p.start,
                    p.end()
                )));
            }
            if i > 0 && pulses[i - 1].end() > p.start + tol {
                return Err(Error::InfeasibleBudget(alloc::format!(
                    "pulses {} and {i} overlap ({} > {})",
                    i - 1,
                    pulses[i - 1].end(),
                    p.start
                )));
            }
        }
        Ok(Self { period, pulses, edge_rise: None })
    }

    pub fn with_edge_rise(mut self, rise: f64) -> Result<Self> {
        if !(rise > 0.0) {
            return Err(Error::InvalidArgument("edge rise time must be positive".into()));
        }
        if self.pulses.iter().any(|p| 2.0 * rise > p.duration) {
            return Err(Error::InvalidArgument("edge rise longer than half a pulse".into()));
        }
        self.edge_rise = Some(rise);
        Ok(self)
    }

    fn envelope(&self, p: &Pulse, t: f64) -> f64 {
        match self.edge_rise {
            None => 1.0,
            Some(r) => {
                let from_edge = (t - p.start).min(p.end() - t);
                if from_edge >= r {
                    1.0
                } else {
                    0.5 * (1.0 - libm::cos(PI * from_edge.max(0.0) / r))
                }
            }
        }
    }

    /// Energy `√(∫ v² dt)`; exact for rectangular pulses, Simpson quadrature
    /// over each pulse otherwise.
    pub fn energy(&self) -> f64 {
        let total: f64 = self
            .pulses
            .iter()
            .map(|p| match self.edge_rise {
                None => p.amplitude * p.amplitude * p.duration,
                Some(_) => {
                    let m = 512;
                    let h = p.duration / m as f64;
                    let f = |t: f64| {
                        let v = p.amplitude * self.envelope(p, t);
                        v * v
                    };
                    let mut acc = f(p.start) + f(p.end());
                    for k in 1..m {
                        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                        acc += w * f(p.start + k as f64 * h);
                    }
                    acc * h / 3.0
                }
            })
            .sum();
        libm::sqrt(total)
    }

    /// Largest pulse amplitude in units of 2π/T.
    pub fn peak_amplitude(&self) -> f64 {
        let a = self.pulses.iter().fold(0.0f64, |m, p| m.max(p.amplitude.abs()));
        a * self.period / (2.0 * PI)
    }
}

impl Drive for PulseTrain {
    fn period(&self) -> f64 {
        self.period
    }

    fn amplitude(&self, t: f64) -> [f64; 2] {
        // pulses are sorted; last one starting at or before t
        let idx = self.pulses.partition_point(|p| p.start <= t);
        if idx == 0 {
            return [0.0, 0.0];
        }
        let p = &self.pulses[idx - 1];
        if t >= p.end() {
            return [0.0, 0.0];
        }
        let a = p.amplitude * self.envelope(p, t);
        let (s, c) = libm::sincos(p.phase);
        [a * c, a * s]
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.pulses.len());
        for p in &self.pulses {
            out.push(p.start);
            out.push(p.end());
        }
        out
    }
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Published synthesized waveforms, coefficients in π/T units.
pub mod tables {
    /// Single qubit dephasing against a TLS bath with instrument errors.
    pub const DEPHASING_X: [f64; 9] =
        [-0.7030256, 3.3281747, 11.390077, 2.9375301, -1.8758792, 1.7478474, 5.6966577, -0.5452435, 4.0826786];
    pub const DEPHASING_Y: [f64; 9] =
        [-3.6201768, 3.8753985, -1.2311919, -0.2998110, 3.1170274, 0.3956137, -0.3593987, -3.5266063, 2.4900307];

    /// Collectively driven dipolar chain.
    pub const DIPOLAR_X: [f64; 9] =
        [-4.8892576, -3.1490576, -14.317448, -0.0929321, 6.8394959, -0.6645375, 0.3344480, -1.5042059, 2.3863574];
    pub const DIPOLAR_Y: [f64; 9] =
        [-2.6291726, -3.4112889, -1.7326439, 4.2805093, -3.7925374, -2.3678092, -2.5797746, -1.9232075, -4.2795712];

    pub fn dephasing(period: f64) -> super::FourierWaveform {
        super::FourierWaveform { period, x: DEPHASING_X.to_vec(), y: DEPHASING_Y.to_vec() }
    }

    pub fn dipolar(period: f64) -> super::FourierWaveform {
        super::FourierWaveform { period, x: DIPOLAR_X.to_vec(), y: DIPOLAR_Y.to_vec() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_series_vanishes_at_endpoints_and_midpoint() {
        let w = tables::dephasing(1.0);
        for t in [0.0, 0.5, 1.0] {
            let [vx, vy] = w.evaluate(t).unwrap();
            assert!(vx.abs() < 1e-12 && vy.abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn dipolar_quarter_period_matches_direct_sum() {
        let w = tables::dipolar(1.0);
        // sin(nπ/2) = 1, 0, -1, 0, ... for n = 1, 2, 3, ...
        let direct = |c: &[f64; 9]| PI * (c[0] - c[2] + c[4] - c[6] + c[8]);
        let [vx, vy] = w.evaluate(0.25).unwrap();
        assert!((vx - direct(&tables::DIPOLAR_X)).abs() < 1e-12);
        assert!((vy - direct(&tables::DIPOLAR_Y)).abs() < 1e-12);
    }

    #[test]
    fn evaluate_rejects_outside_cycle() {
        let w = tables::dephasing(2.0);
        assert!(matches!(w.evaluate(-0.1), Err(Error::TimeOutOfRange { .. })));
        assert!(matches!(w.evaluate(2.5), Err(Error::TimeOutOfRange { .. })));
    }

    #[test]
    fn zero_waveform_has_no_energy() {
        let w = FourierWaveform::zero(1.0, 9);
        assert_eq!(w.energy(), 0.0);
        assert_eq!(w.peak_amplitude(), 0.0);
        assert_eq!(w.bandwidth(), 0.0);
    }

    #[test]
    fn single_harmonic_peak() {
        // v_x = A sin(2πt/T) with A = 3π/T ⇒ peak A·T/2π = 1.5
        let w = FourierWaveform::new(1.0, alloc::vec![3.0], alloc::vec![0.0]).unwrap();
        assert!((w.peak_amplitude() - 1.5).abs() < 1e-12);
        let w = FourierWaveform::new(2.0, alloc::vec![3.0], alloc::vec![0.0]).unwrap();
        assert!((w.peak_amplitude() - 1.5).abs() < 1e-12);
    }

    #[test]
    fn bandwidth_uses_highest_nonzero_harmonic() {
        let w = FourierWaveform::new(2.0, alloc::vec![1.0, 0.0, 0.5, 0.0], alloc::vec![0.0; 4]).unwrap();
        assert_eq!(w.max_harmonic(), 3);
        assert!((w.bandwidth() - 3.0).abs() < 1e-15);
    }

    #[test]
    fn grid_samples_agree_with_direct_evaluation() {
        let w = tables::dipolar(1.3);
        let n = 64;
        let grid = w.sample_grid(n);
        let mids = w.sample_midpoints(n);
        assert_eq!(mids.len(), n);
        for k in 0..n {
            let a = w.amplitude(k as f64 * 1.3 / n as f64);
            let b = w.amplitude((k as f64 + 0.5) * 1.3 / n as f64);
            assert!((a[0] - grid[k][0]).abs() < 1e-10 && (a[1] - grid[k][1]).abs() < 1e-10);
            assert!((b[0] - mids[k][0]).abs() < 1e-10 && (b[1] - mids[k][1]).abs() < 1e-10);
        }
    }

    #[test]
    fn train_rejects_overlap_and_zero_width() {
        let p = |s, d| Pulse { start: s, duration: d, phase: 0.0, amplitude: 1.0 };
        assert!(matches!(
            PulseTrain::new(1.0, alloc::vec![p(0.1, 0.2), p(0.25, 0.1)]),
            Err(Error::InfeasibleBudget(_))
        ));
        assert!(PulseTrain::new(1.0, alloc::vec![p(0.1, 0.0)]).is_err());
        assert!(matches!(PulseTrain::new(1.0, alloc::vec![p(0.95, 0.1)]), Err(Error::InfeasibleBudget(_))));
    }

    #[test]
    fn train_lookup_and_energy() {
        let train = PulseTrain::new(
            1.0,
            alloc::vec![
                Pulse { start: 0.1, duration: 0.1, phase: 0.0, amplitude: 10.0 },
                Pulse { start: 0.5, duration: 0.2, phase: PI / 2.0, amplitude: 5.0 },
            ],
        )
        .unwrap();
        assert_eq!(train.amplitude(0.05), [0.0, 0.0]);
        assert_eq!(train.amplitude(0.15), [10.0, 0.0]);
        let [vx, vy] = train.amplitude(0.6);
        assert!(vx.abs() < 1e-12 && (vy - 5.0).abs() < 1e-12);
        assert_eq!(train.amplitude(0.75), [0.0, 0.0]);
        let e2: f64 = 100.0 * 0.1 + 25.0 * 0.2;
        assert!((train.energy() - e2.sqrt()).abs() < 1e-12);
        assert!((train.peak_amplitude() - 10.0 / (2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn smoothed_edges_reduce_energy() {
        let p = Pulse { start: 0.2, duration: 0.2, phase: 0.0, amplitude: 10.0 };
        let rect = PulseTrain::new(1.0, alloc::vec![p]).unwrap();
        let smooth = rect.clone().with_edge_rise(0.05).unwrap();
        assert!(smooth.energy() < rect.energy());
        assert_eq!(smooth.amplitude(0.2)[0], 0.0);
        assert!((smooth.amplitude(0.3)[0] - 10.0).abs() < 1e-12);
        // raised cosine over 0.05 at each edge removes 2·(1 − 3/8)·0.05 of A² time
        let want = (100.0f64 * (0.2 - 2.0 * 0.05 * (1.0 - 0.375))).sqrt();
        assert!((smooth.energy() - want).abs() < 1e-9);
    }
}
