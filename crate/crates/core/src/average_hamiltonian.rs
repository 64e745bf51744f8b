//! Average Hamiltonians of a periodic modulated Hamiltonian `H̃(t)`, by
//! Floquet harmonic sums and by direct time quadrature.
//!
//! Conventions: `Ũ(T) = exp(−iT (H̄⁽⁰⁾ + H̄⁽¹⁾ + H̄⁽²⁾ + …))` and
//! `H̃(t) = Σ_n H_n e^{2πint/T}`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fft;
use crate::lie_basis::PauliSum;
use crate::linalg::{DenseOperator, C64, ZERO};
use crate::modulation::{propagate_frame, FrameOrdering};
use crate::waveform::Drive;

fn commutator(a: &DenseOperator, b: &DenseOperator) -> DenseOperator {
    &(a * b) - &(b * a)
}

/// Harmonics `H_n`, `|n| ≤ n_max`, of a `T`-periodic Hermitian operator.
#[derive(Debug, Clone)]
pub struct FourierHamiltonian {
    period: f64,
    n_max: usize,
    terms: Vec<DenseOperator>,
}

impl FourierHamiltonian {
    /// `terms[n + n_max] = H_n`. Requires `H_{−n} = H_n†` within 1e-10.
    pub fn from_terms(period: f64, terms: Vec<DenseOperator>) -> Result<Self> {
        if terms.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument("harmonic list must have odd length 2·n_max + 1".into()));
        }
        let n_max = terms.len() / 2;
        let dim = terms[0].dim();
        for t in &terms {
            if t.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: t.dim() });
            }
        }
        for n in 0..=n_max {
            let defect = terms[n_max + n].adjoint().max_abs_diff(&terms[n_max - n]);
            if defect > 1e-10 {
                return Err(Error::InvalidArgument(alloc::format!(
                    "harmonics {n} and -{n} are not adjoint (defect {defect:e})"
                )));
            }
        }
        Ok(Self { period, n_max, terms })
    }

    /// Harmonics of `N` samples on the periodic grid `t_k = kT/N` (no
    /// duplicated endpoint).
    pub fn from_samples(samples: &[DenseOperator], period: f64, n_max: usize) -> Result<Self> {
        let n = samples.len();
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::NotPowerOfTwo(n));
        }
        let n_max = n_max.min(n / 2 - 1);
        let dim = samples[0].dim();
        let mut terms = alloc::vec![DenseOperator::zeros(dim); 2 * n_max + 1];
        let mut buf = alloc::vec![ZERO; n];
        let inv = 1.0 / n as f64;
        for i in 0..dim {
            for j in 0..dim {
                for (b, s) in buf.iter_mut().zip(samples) {
                    *b = s.get(i, j);
                }
                fft::fft_in_place(&mut buf);
                for m in -(n_max as i64)..=n_max as i64 {
                    terms[(m + n_max as i64) as usize].set(i, j, fft::harmonic(&buf, m) * inv);
                }
            }
        }
        Self::from_terms(period, terms)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.terms[0].dim()
    }

    /// `H_n`, or `None` beyond the stored range.
    pub fn term(&self, n: i64) -> Option<&DenseOperator> {
        if n.unsigned_abs() as usize > self.n_max {
            return None;
        }
        Some(&self.terms[(n + self.n_max as i64) as usize])
    }

    /// Harmonics of `t ↦ H̃(T − t)`.
    pub fn time_reversed(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.reverse();
        Self { period: self.period, n_max: self.n_max, terms }
    }
}

/// `H̄⁽⁰⁾ = H_0`
pub fn avg_order0(fh: &FourierHamiltonian) -> DenseOperator {
    fh.term(0).cloned().unwrap_or_else(|| DenseOperator::zeros(fh.dim()))
}

/// Per-harmonic first-order contribution
/// `(T/4πn) ([H_n, H_{−n}] + 2[H_0, H_n])`.
fn order1_term(fh: &FourierHamiltonian, n: i64) -> DenseOperator {
    let h0 = fh.term(0).expect("zero harmonic");
    let hp = fh.term(n).expect("harmonic in range");
    let hm = fh.term(-n).expect("harmonic in range");
    let mut acc = commutator(hp, hm);
    acc.add_scaled(C64::new(2.0, 0.0), &commutator(h0, hp));
    acc.scale_real(fh.period / (4.0 * PI * n as f64))
}

/// First-order average Hamiltonian
/// `H̄⁽¹⁾ = (T/4π) Σ_{n≠0} (1/n) ([H_n, H_{−n}] + 2[H_0, H_n])`.
///
/// The `[H_0, H_n]` part vanishes whenever `H_0` commutes with the rest,
/// including the common `H_0 = 0` case.
pub fn avg_order1(fh: &FourierHamiltonian) -> DenseOperator {
    avg_order1_monitored(fh).0
}

/// `H̄⁽¹⁾` together with the relative size of the last octave of the sum,
/// `‖Σ_{n_max/2 < |n| ≤ n_max}‖_F / ‖H̄⁽¹⁾‖_F`.
pub fn avg_order1_monitored(fh: &FourierHamiltonian) -> (DenseOperator, f64) {
    let dim = fh.dim();
    let mut total = DenseOperator::zeros(dim);
    let mut tail = DenseOperator::zeros(dim);
    let cut = (fh.n_max / 2) as i64;
    for n in 1..=fh.n_max as i64 {
        for m in [n, -n] {
            let t = order1_term(fh, m);
            total.add_scaled(C64::new(1.0, 0.0), &t);
            if n > cut {
                tail.add_scaled(C64::new(1.0, 0.0), &t);
            }
        }
    }
    let norm = total.frobenius_norm();
    let ratio = if norm == 0.0 { 0.0 } else { tail.frobenius_norm() / norm };
    (total, ratio)
}

/// Second-order term
/// `(T²/12π²) Σ_{n≠0} Σ_{n′+n≠0} (1 + δ_{n′,0}/2) / (n(n+n′)) [[H_n, H_{n′}], H_{−n−n′}]`
/// restricted to harmonics inside `±n_max`.
pub fn avg_order2(fh: &FourierHamiltonian) -> DenseOperator {
    let n_max = fh.n_max as i64;
    let mut acc = DenseOperator::zeros(fh.dim());
    for n in -n_max..=n_max {
        if n == 0 {
            continue;
        }
        let hn = fh.term(n).unwrap();
        for np in -n_max..=n_max {
            let s = n + np;
            if s == 0 || s.abs() > n_max {
                continue;
            }
            let inner = commutator(hn, fh.term(np).unwrap());
            let w = if np == 0 { 1.5 } else { 1.0 } / (n * s) as f64;
            acc.add_scaled(C64::new(w, 0.0), &commutator(&inner, fh.term(-s).unwrap()));
        }
    }
    acc.scale_real(fh.period * fh.period / (12.0 * PI * PI))
}

/// Average Hamiltonian orders `0..=max_order` (at most 2).
#[derive(Debug, Clone)]
pub struct AvgHamiltonian {
    pub orders: Vec<DenseOperator>,
}

impl AvgHamiltonian {
    pub fn compute(fh: &FourierHamiltonian, max_order: usize) -> Self {
        let mut orders = alloc::vec![avg_order0(fh)];
        if max_order >= 1 {
            orders.push(avg_order1(fh));
        }
        if max_order >= 2 {
            orders.push(avg_order2(fh));
        }
        Self { orders }
    }

    /// `Σ_{k ≤ upto} H̄⁽ᵏ⁾`
    pub fn sum(&self, upto: usize) -> DenseOperator {
        let mut acc = DenseOperator::zeros(self.orders[0].dim());
        for h in self.orders.iter().take(upto + 1) {
            acc.add_scaled(C64::new(1.0, 0.0), h);
        }
        acc
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.orders.iter().map(|h| h.hermiticity_defect()).fold(0.0, f64::max)
    }
}

/// `(1/T) ∫_0^T H̃ dt` by the trapezoid rule on `N + 1` grid samples.
pub fn direct_order0(samples: &[DenseOperator]) -> DenseOperator {
    let n = samples.len() - 1;
    let mut acc = DenseOperator::zeros(samples[0].dim());
    for (k, s) in samples.iter().enumerate() {
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc.add_scaled(C64::new(w / n as f64, 0.0), s);
    }
    acc
}

/// `(−i/2T) ∫_0^T dt₂ ∫_0^{t₂} dt₁ [H̃(t₂), H̃(t₁)]` with a cumulative
/// trapezoid inner integral and a trapezoid outer integral.
pub fn direct_order1(samples: &[DenseOperator], period: f64) -> DenseOperator {
    let n = samples.len() - 1;
    let h = period / n as f64;
    let dim = samples[0].dim();
    let mut inner = DenseOperator::zeros(dim);
    let mut acc = DenseOperator::zeros(dim);
    for k in 0..=n {
        if k > 0 {
            inner.add_scaled(C64::new(0.5 * h, 0.0), &samples[k - 1]);
            inner.add_scaled(C64::new(0.5 * h, 0.0), &samples[k]);
        }
        let w = if k == 0 || k == n { 0.5 } else { 1.0 };
        acc.add_scaled(C64::new(w * h, 0.0), &commutator(&samples[k], &inner));
    }
    acc.scale(C64::new(0.0, -0.5 / period))
}

/// `H̃(t) = U_V H₀ U_V†` sampled on a uniform grid and at step midpoints,
/// for a static `H₀` whose driven qubits all share the frame of `drive`.
#[derive(Debug, Clone)]
pub struct ModulatedHamiltonian {
    period: f64,
    grid: Vec<DenseOperator>,
    mids: Vec<DenseOperator>,
}

impl ModulatedHamiltonian {
    pub fn build<D: Drive + ?Sized>(
        h0: &PauliSum,
        n_qubits: usize,
        driven: &[usize],
        drive: &D,
        steps: usize,
        ordering: FrameOrdering,
    ) -> Result<Self> {
        if let Some(&bad) = driven.iter().find(|&&k| k >= n_qubits) {
            return Err(Error::InvalidArgument(alloc::format!("driven site {bad} outside {n_qubits} qubits")));
        }
        let frames = propagate_frame(drive, 2 * steps, ordering)?;
        let dim = 1usize << n_qubits;
        let toggled = |k: usize| {
            let mut op = DenseOperator::zeros(dim);
            h0.add_rotated_to(&mut op, driven, &frames[k].rotation());
            op
        };
        let grid = (0..=steps).map(|k| toggled(2 * k)).collect();
        let mids = (0..steps).map(|k| toggled(2 * k + 1)).collect();
        Ok(Self { period: drive.period(), grid, mids })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Samples at `t_k = kT/N`, `k = 0..=N`.
    pub fn grid(&self) -> &[DenseOperator] {
        &self.grid
    }

    pub fn fourier(&self, n_max: usize) -> Result<FourierHamiltonian> {
        let n = self.grid.len() - 1;
        FourierHamiltonian::from_samples(&self.grid[..n], self.period, n_max)
    }

    pub fn direct_order0(&self) -> DenseOperator {
        direct_order0(&self.grid)
    }

    pub fn direct_order1(&self) -> DenseOperator {
        direct_order1(&self.grid, self.period)
    }

    /// Toggling-frame propagator `Ũ(T)` by exponential midpoint steps.
    pub fn propagator(&self) -> DenseOperator {
        let h = self.period / self.mids.len() as f64;
        let mut u = DenseOperator::identity(self.grid[0].dim());
        for m in &self.mids {
            u = &m.propagator(h) * &u;
        }
        u
    }
}

/// `‖Ũ(T) − exp(−iT(H̄⁽⁰⁾ + H̄⁽¹⁾))‖_F`
pub fn propagator_check(modulated: &ModulatedHamiltonian, avg: &AvgHamiltonian) -> f64 {
    let exact = modulated.propagator();
    let upto = avg.orders.len().min(2) - 1;
    let approx = avg.sum(upto).propagator(modulated.period);
    (&exact - &approx).frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_basis::{realize, Pauli, PauliString};

    fn pauli(label: &str) -> DenseOperator {
        let p: PauliString = label.parse().unwrap();
        realize(&p, p.n_qubits()).unwrap()
    }

    fn sampled(f: impl Fn(f64) -> DenseOperator, n: usize) -> Vec<DenseOperator> {
        (0..=n).map(|k| f(k as f64 / n as f64)).collect()
    }

    fn rotating(t: f64) -> DenseOperator {
        let w = 2.0 * PI * t;
        let mut h = pauli("X").scale_real(w.cos());
        h.add_scaled(C64::new(w.sin(), 0.0), &pauli("Y"));
        h
    }

    #[test]
    fn rotating_field_orders() {
        let s = sampled(rotating, 256);
        let fh = FourierHamiltonian::from_samples(&s[..256], 1.0, 8).unwrap();
        assert!(avg_order0(&fh).max_abs() < 1e-14);
        // H_{±1} = (σx ∓ iσy)/2, [H_1, H_{-1}] = −σz, both n = ±1 give −σz ⇒ −σz T/(2π)
        let h1 = avg_order1(&fh);
        let want = pauli("Z").scale_real(-1.0 / (2.0 * PI));
        assert!(h1.max_abs_diff(&want) < 1e-12);
        // nested quadrature oracle
        let fine = sampled(rotating, 1 << 14);
        assert!(direct_order1(&fine, 1.0).max_abs_diff(&want) < 1e-7);
    }

    #[test]
    fn constant_hamiltonian() {
        let h = pauli("ZX").scale_real(0.3);
        let s = alloc::vec![h.clone(); 64];
        let fh = FourierHamiltonian::from_samples(&s, 1.0, 16).unwrap();
        assert!(avg_order0(&fh).max_abs_diff(&h) < 1e-15);
        assert!(avg_order1(&fh).max_abs() < 1e-15);
        assert!(avg_order2(&fh).max_abs() < 1e-15);
    }

    #[test]
    fn commuting_family_has_no_corrections() {
        let f = |t: f64| {
            let mut h = pauli("ZI").scale_real((2.0 * PI * t).cos() + 0.4);
            h.add_scaled(C64::new((6.0 * PI * t).sin(), 0.0), &pauli("IZ"));
            h
        };
        let s = sampled(f, 128);
        let fh = FourierHamiltonian::from_samples(&s[..128], 1.0, 16).unwrap();
        assert!(avg_order1(&fh).max_abs() < 1e-14);
        assert!(avg_order2(&fh).max_abs() < 1e-14);
    }

    #[test]
    fn cosine_single_direction_vanishes() {
        let f = |t: f64| pauli("X").scale_real((2.0 * PI * t).cos() + 0.5 * (4.0 * PI * t).cos());
        let s = sampled(f, 128);
        let fh = FourierHamiltonian::from_samples(&s[..128], 1.0, 16).unwrap();
        assert!(avg_order1(&fh).max_abs() < 1e-14);
    }

    #[test]
    fn zero_harmonic_cross_term_matches_quadrature() {
        // H_0 ≠ 0 exercises the [H_0, H_n] contribution
        let f = |t: f64| {
            let mut h = pauli("Z").scale_real(0.7);
            h.add_scaled(C64::new((2.0 * PI * t).cos(), 0.0), &pauli("X"));
            h.add_scaled(C64::new((4.0 * PI * t).sin(), 0.0), &pauli("Y"));
            h
        };
        let s = sampled(f, 64);
        let fh = FourierHamiltonian::from_samples(&s[..64], 1.0, 16).unwrap();
        let fine = sampled(f, 1 << 14);
        let d = direct_order1(&fine, 1.0);
        let rel = avg_order1(&fh).max_abs_diff(&d) / d.max_abs();
        assert!(rel < 1e-6, "{rel:e}");
        assert!(avg_order1(&fh).hermiticity_defect() < 1e-14);
    }

    #[test]
    fn order1_flips_under_time_reversal() {
        let f = |t: f64| {
            let mut h = pauli("Z").scale_real(0.2 + (2.0 * PI * t).sin());
            h.add_scaled(C64::new((2.0 * PI * t).cos() + (6.0 * PI * t).sin(), 0.0), &pauli("X"));
            h
        };
        let s = sampled(f, 64);
        let fh = FourierHamiltonian::from_samples(&s[..64], 1.0, 16).unwrap();
        let a = avg_order1(&fh);
        let b = avg_order1(&fh.time_reversed());
        assert!((&a + &b).max_abs() < 1e-14);
        assert!(a.max_abs() > 1e-3);
    }

    #[test]
    fn rejects_non_hermitian_pairing() {
        let terms = alloc::vec![pauli("X"), pauli("Z"), pauli("Y")];
        assert!(FourierHamiltonian::from_terms(1.0, terms).is_err());
    }

    #[test]
    fn order2_matches_third_magnus_term() {
        // H̃ = λ(σx cos ωt + σz cos 2ωt): residual after orders 0..2 falls as λ⁴ or faster
        let residual = |lam: f64, with2: bool| {
            let f = |t: f64| {
                let mut h = pauli("X").scale_real(lam * (2.0 * PI * t).cos());
                h.add_scaled(C64::new(lam * (4.0 * PI * t).cos(), 0.0), &pauli("Z"));
                h
            };
            let n = 4096;
            let mut u = DenseOperator::identity(2);
            let dt = 1.0 / n as f64;
            for k in 0..n {
                u = &f((k as f64 + 0.5) * dt).propagator(dt) * &u;
            }
            let s = sampled(f, 64);
            let fh = FourierHamiltonian::from_samples(&s[..64], 1.0, 16).unwrap();
            let avg = AvgHamiltonian::compute(&fh, 2);
            let approx = avg.sum(if with2 { 2 } else { 1 }).propagator(1.0);
            (&u - &approx).frobenius_norm()
        };
        let r1 = residual(1.0, false) / residual(0.5, false);
        assert!(r1 > 6.0 && r1 < 10.0, "order-1 ratio {r1}");
        let r2 = residual(1.0, true) / residual(0.5, true);
        assert!(r2 > 14.0, "order-2 ratio {r2}");
    }

    #[test]
    fn modulated_dephasing_without_drive() {
        // frame is the identity, so H̄⁽⁰⁾ = H₀ and Ũ(T) = exp(−iH₀T)
        let mut h0 = PauliSum::new();
        h0.push(0.3, PauliString::pair(2, 0, Pauli::Z, 1, Pauli::Z));
        let w = crate::waveform::FourierWaveform::zero(1.0, 3);
        let m = ModulatedHamiltonian::build(&h0, 2, &[0], &w, 256, FrameOrdering::Interaction).unwrap();
        let dense = h0.to_dense(2);
        assert!(m.direct_order0().max_abs_diff(&dense) < 1e-14);
        let fh = m.fourier(32).unwrap();
        let avg = AvgHamiltonian::compute(&fh, 1);
        assert!(avg.orders[0].max_abs_diff(&dense) < 1e-14);
        assert!(propagator_check(&m, &avg) < 1e-12);
    }
}
