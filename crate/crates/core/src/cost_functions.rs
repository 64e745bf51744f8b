//! Optimization objectives built from the modulation matrix.
//!
//! Dephasing costs use dimensionless Fourier coefficients: `c_{βα,n}` and
//! `d⁽ⁱ⁾_{α,n}`, the harmonics of `(v T/2) c`, where `v T/2` is the drive's
//! Pauli coefficient in units of 1/T. Generic costs keep the
//! `T⁻¹ |∫ c dt|²` normalization.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::average_hamiltonian::{avg_order0, avg_order1, FourierHamiltonian};
use crate::error::{Error, Result};
use crate::fft;
use crate::lie_basis::{Pauli, PauliString, PauliSum};
use crate::linalg::{DenseOperator, C64, ZERO};
use crate::modulation::{continuity_penalty, ModulationMatrix};
use crate::waveform::FourierWaveform;

const X: usize = 0;
const Y: usize = 1;
const Z: usize = 2;
const PAIRS: [(usize, usize); 3] = [(X, Y), (X, Z), (Y, Z)];

pub const DEFAULT_ERROR_WEIGHT: f64 = 0.01;

/// Qubit coupled to `n_tls` two-level systems through `σ_z σ_{z,k}`, with
/// the four instrument-error channels.
#[derive(Debug, Clone, PartialEq)]
pub struct DephasingSpec {
    pub n_tls: usize,
    /// Couplings `g⁽ᵏ⁾` in π/T units. `None` keeps the cost independent of
    /// the bath.
    pub g: Option<Vec<f64>>,
    pub error_weight: f64,
    /// Known error amplitudes `ε₁..ε₄`; replace `w` channel by channel.
    pub epsilon: Option<[f64; 4]>,
}

impl Default for DephasingSpec {
    fn default() -> Self {
        Self { n_tls: 4, g: None, error_weight: DEFAULT_ERROR_WEIGHT, epsilon: None }
    }
}

impl DephasingSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.error_weight >= 0.0) {
            return Err(Error::InvalidArgument("error weight must be non-negative".into()));
        }
        if let Some(g) = &self.g {
            if g.len() != self.n_tls {
                return Err(Error::DimensionMismatch { expected: self.n_tls, found: g.len() });
            }
        }
        Ok(())
    }

    /// Amplitude multiplying bath terms: 1, or `√Σ (g⁽ᵏ⁾T)²`.
    fn bath_amplitude(&self) -> f64 {
        match &self.g {
            None => 1.0,
            Some(g) => libm::sqrt(g.iter().map(|x| (x * PI) * (x * PI)).sum::<f64>()),
        }
    }

    fn channel_weights(&self) -> [f64; 4] {
        match self.epsilon {
            None => [self.error_weight; 4],
            Some(e) => e.map(f64::abs),
        }
    }
}

/// Collectively driven chain with two-body couplings of the
/// `σzσz − σxσx/2 − σyσy/2` form.
#[derive(Debug, Clone, PartialEq)]
pub struct DipolarSpec {
    pub n_qubits: usize,
    /// Upper-triangular couplings `d[k′][k]`, `k′ < k`, in π/T units. `None`
    /// keeps the cost independent of coupling strengths.
    pub d: Option<Vec<Vec<f64>>>,
}

impl DipolarSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::InvalidArgument("dipolar problem needs at least two qubits".into()));
        }
        if let Some(d) = &self.d {
            if d.len() != self.n_qubits || d.iter().any(|row| row.len() != self.n_qubits) {
                return Err(Error::DimensionMismatch { expected: self.n_qubits, found: d.len() });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub phi0: f64,
    pub phi1: f64,
    pub penalty: f64,
    pub lambda: f64,
    pub total: f64,
    pub terms: Vec<(String, f64)>,
}

impl CostReport {
    fn assemble(phi0: f64, phi1: f64, penalty: f64, lambda: f64, terms: Vec<(String, f64)>) -> Self {
        Self { phi0, phi1, penalty, lambda, total: phi0 + phi1 + lambda * penalty, terms }
    }

    /// `√(Φ⁰ + Φ¹)`, the figure of merit without the constraint term.
    pub fn rms(&self) -> f64 {
        libm::sqrt(self.phi0 + self.phi1)
    }

    /// `key = value` lines, one per component and per labelled term.
    pub fn to_text(&self) -> String {
        use core::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "phi0 = {:.12e}", self.phi0);
        let _ = writeln!(s, "phi1 = {:.12e}", self.phi1);
        let _ = writeln!(s, "penalty = {:.12e}", self.penalty);
        let _ = writeln!(s, "lambda = {:.6e}", self.lambda);
        let _ = writeln!(s, "total = {:.12e}", self.total);
        let _ = writeln!(s, "rms = {:.12e}", self.rms());
        for (k, v) in &self.terms {
            let _ = writeln!(s, "term.{k} = {v:.12e}");
        }
        s
    }
}

/// Penalty multiplier continuation: `λ_r = λ₀ · factor^r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltySchedule {
    pub lambda0: f64,
    pub factor: f64,
    pub target: f64,
}

impl Default for PenaltySchedule {
    fn default() -> Self {
        Self { lambda0: 1e3, factor: 10.0, target: 1e-8 }
    }
}

impl PenaltySchedule {
    pub fn lambda(&self, restart: usize) -> f64 {
        self.lambda0 * libm::pow(self.factor, restart as f64)
    }
}

/// `Σ_{αβ} T⁻¹|∫ c_{βα} dt|²`, or with known coefficients
/// `Σ_β T⁻¹|∫ Σ_α h_α c_{βα} dt|²`.
pub fn cost_generic_order0(m: &ModulationMatrix, include_h: Option<&[f64]>) -> Result<f64> {
    let t = m.period();
    let mut acc = 0.0;
    match include_h {
        None => {
            for b in 0..3 {
                for a in 0..3 {
                    acc += m.coeff(b, a, 0).norm_sqr();
                }
            }
        }
        Some(h) => {
            if h.len() != 3 {
                return Err(Error::DimensionMismatch { expected: 3, found: h.len() });
            }
            for b in 0..3 {
                let s: C64 = (0..3).map(|a| m.coeff(b, a, 0) * h[a]).sum();
                acc += s.norm_sqr();
            }
        }
    }
    Ok(acc * t)
}

/// `Σ_{n=1}^{n_max} (1/n) Im[f(n)]`
fn weighted_im(n_max: usize, f: impl Fn(i64) -> C64) -> f64 {
    (1..=n_max as i64).map(|n| f(n).im / n as f64).sum()
}

/// Harmonics `d⁽ⁱ⁾_{α,n}` for `i = 1..4`: `v_x c_{αx}`, `v_y c_{αx}`,
/// `v_y c_{αy}`, `v_x c_{αy}`, with `v` expressed as `vT/2`.
pub fn error_channel_spectra(m: &ModulationMatrix, w: &FourierWaveform) -> Result<[[Vec<C64>; 3]; 4]> {
    let n = m.steps();
    if (w.period - m.period()).abs() > 1e-12 * m.period() {
        return Err(Error::InvalidArgument("waveform and modulation periods differ".into()));
    }
    let v = w.sample_grid(n);
    let scale = 0.5 * w.period;
    let channels = [(0usize, X), (1, X), (1, Y), (0, Y)];
    let mut out: [[Vec<C64>; 3]; 4] = Default::default();
    let mut buf = alloc::vec![0.0; n];
    for (i, &(q, lab)) in channels.iter().enumerate() {
        for beta in 0..3 {
            for k in 0..n {
                buf[k] = scale * v[k][q] * m.sample(beta, lab, k);
            }
            out[i][beta] = fft::fourier_coefficients(&buf);
        }
    }
    Ok(out)
}

trait Harmonics {
    fn at(&self, n: i64, n_max: usize) -> C64;
}

impl Harmonics for Vec<C64> {
    fn at(&self, n: i64, n_max: usize) -> C64 {
        if n.unsigned_abs() as usize > n_max {
            ZERO
        } else {
            fft::harmonic(self, n)
        }
    }
}

/// Dephasing objective: zeroth- and first-order bath and error-channel
/// terms plus the continuity penalty weighted by `lambda`.
pub fn cost_dephasing(
    m: &ModulationMatrix,
    w: &FourierWaveform,
    spec: &DephasingSpec,
    lambda: f64,
) -> Result<CostReport> {
    spec.validate()?;
    let n_max = m.n_max();
    let d = error_channel_spectra(m, w)?;
    let q = spec.bath_amplitude();
    let e = spec.channel_weights();
    let cz = |a: usize, n: i64| m.coeff(a, Z, n);
    let dd = |i: usize, a: usize, n: i64| d[i][a].at(n, n_max);

    let mut terms = Vec::new();
    let phi0_qb: f64 = q * q * (0..3).map(|a| cz(a, 0).norm_sqr()).sum::<f64>();
    terms.push(("phi0.bath".into(), phi0_qb));
    let mut phi0 = phi0_qb;
    for i in 0..4 {
        let v = e[i] * e[i] * (0..3).map(|a| dd(i, a, 0).norm_sqr()).sum::<f64>();
        terms.push((alloc::format!("phi0.err{}", i + 1), v));
        phi0 += v;
    }

    let (mut qb, mut ee_same, mut ee_cross, mut qb_e) = (0.0, 0.0, 0.0, 0.0);
    for &(ap, a) in &PAIRS {
        let s = weighted_im(n_max, |n| cz(a, n) * cz(ap, n).conj());
        qb += q * q * q * q * s * s;
        for i in 0..4 {
            let s = weighted_im(n_max, |n| dd(i, ap, n) * dd(i, a, n).conj());
            ee_same += e[i] * e[i] * e[i] * e[i] * s * s;
            for ip in 0..i {
                let s = weighted_im(n_max, |n| dd(i, ap, n) * dd(ip, a, n).conj() + dd(i, ap, n).conj() * dd(ip, a, n));
                ee_cross += e[i] * e[i] * e[ip] * e[ip] * s * s;
            }
            let s = weighted_im(n_max, |n| cz(ap, n).conj() * dd(i, a, n) + cz(a, n) * dd(i, ap, n).conj());
            qb_e += q * q * e[i] * e[i] * s * s;
        }
    }
    terms.push(("phi1.bath".into(), qb));
    terms.push(("phi1.err_same".into(), ee_same));
    terms.push(("phi1.err_cross".into(), ee_cross));
    terms.push(("phi1.bath_err".into(), qb_e));
    let phi1 = qb + ee_same + ee_cross + qb_e;
    let penalty = continuity_penalty(m);
    Ok(CostReport::assemble(phi0, phi1, penalty, lambda, terms))
}

/// `η_{βγ}(t) = c_{βz}c_{γz} − c_{βx}c_{γx}/2 − c_{βy}c_{γy}/2` on the grid
/// (periodic part, `N` samples).
fn eta_samples(m: &ModulationMatrix) -> [[Vec<f64>; 3]; 3] {
    let n = m.steps();
    let mut out: [[Vec<f64>; 3]; 3] = Default::default();
    for b in 0..3 {
        for g in 0..3 {
            out[b][g] = (0..n)
                .map(|k| {
                    m.sample(b, Z, k) * m.sample(g, Z, k)
                        - 0.5 * m.sample(b, X, k) * m.sample(g, X, k)
                        - 0.5 * m.sample(b, Y, k) * m.sample(g, Y, k)
                })
                .collect();
        }
    }
    out
}

/// Harmonics of the two-body toggled coupling on the given sites of an
/// `n_qubits` register, `H_n = Σ d_{jk} Σ_{βγ} η_{βγ,n} σ_{β,j} σ_{γ,k}`.
fn dipolar_harmonics(
    eta_hat: &[[Vec<C64>; 3]; 3],
    n_qubits: usize,
    bonds: &[(usize, usize, f64)],
    n_max: usize,
    period: f64,
) -> Result<FourierHamiltonian> {
    let dim = 1usize << n_qubits;
    let mut strings = Vec::new();
    for &(j, k, dj) in bonds {
        for b in 0..3 {
            for g in 0..3 {
                strings.push((dj, b, g, PauliString::pair(n_qubits, j, Pauli::ALL[b + 1], k, Pauli::ALL[g + 1])));
            }
        }
    }
    let mut terms = Vec::with_capacity(2 * n_max + 1);
    for n in -(n_max as i64)..=n_max as i64 {
        let mut op = DenseOperator::zeros(dim);
        for (dj, b, g, p) in &strings {
            let c = fft::harmonic(&eta_hat[*b][*g], n) * *dj;
            if c != ZERO {
                p.add_to(&mut op, c);
            }
        }
        terms.push(op);
    }
    FourierHamiltonian::from_terms(period, terms)
}

fn squared_pauli_weight(op: &DenseOperator, scale: f64) -> Result<f64> {
    let sum = PauliSum::decompose(op, 0.0)?;
    Ok(sum.terms.iter().map(|(h, _)| (h * scale) * (h * scale)).sum())
}

/// Dipolar objective.
///
/// Without couplings, `Φ⁰ = Σ_{βγ} |η̄_{βγ}|²` and `Φ¹` is the squared Pauli
/// weight of the first-order term for unit couplings, scaled by π/T: one
/// isolated bond on two qubits plus the cross term of two bonds sharing a
/// site on three qubits. With couplings, both orders are evaluated on the
/// full chain and reported as squared Pauli weights of `T·H̄`.
pub fn cost_dipolar(m: &ModulationMatrix, spec: &DipolarSpec, lambda: f64) -> Result<CostReport> {
    spec.validate()?;
    let period = m.period();
    let n_max = m.n_max();
    let eta = eta_samples(m);
    let mut eta_hat: [[Vec<C64>; 3]; 3] = Default::default();
    for b in 0..3 {
        for g in 0..3 {
            eta_hat[b][g] = fft::fourier_coefficients(&eta[b][g]);
        }
    }
    let mut terms = Vec::new();
    let penalty = continuity_penalty(m);
    match &spec.d {
        None => {
            let mut phi0 = 0.0;
            for b in 0..3 {
                for g in 0..3 {
                    phi0 += eta_hat[b][g][0].norm_sqr();
                }
            }
            terms.push(("phi0.eta".into(), phi0));
            let scale = PI / period;
            let pair = dipolar_harmonics(&eta_hat, 2, &[(0, 1, 1.0)], n_max, period)?;
            let phi1_pair = squared_pauli_weight(&avg_order1(&pair), scale)?;
            let a = dipolar_harmonics(&eta_hat, 3, &[(0, 1, 1.0)], n_max, period)?;
            let b = dipolar_harmonics(&eta_hat, 3, &[(1, 2, 1.0)], n_max, period)?;
            let ab = dipolar_harmonics(&eta_hat, 3, &[(0, 1, 1.0), (1, 2, 1.0)], n_max, period)?;
            let mut cross = avg_order1(&ab);
            cross.add_scaled(C64::new(-1.0, 0.0), &avg_order1(&a));
            cross.add_scaled(C64::new(-1.0, 0.0), &avg_order1(&b));
            let phi1_cross = squared_pauli_weight(&cross, scale)?;
            terms.push(("phi1.bond".into(), phi1_pair));
            terms.push(("phi1.shared_site".into(), phi1_cross));
            Ok(CostReport::assemble(phi0, phi1_pair + phi1_cross, penalty, lambda, terms))
        }
        Some(d) => {
            let mut bonds = Vec::new();
            for j in 0..spec.n_qubits {
                for k in j + 1..spec.n_qubits {
                    if d[j][k] != 0.0 {
                        bonds.push((j, k, d[j][k] * PI / period));
                    }
                }
            }
            let fh = dipolar_harmonics(&eta_hat, spec.n_qubits, &bonds, n_max, period)?;
            let phi0 = squared_pauli_weight(&avg_order0(&fh), period)?;
            let phi1 = squared_pauli_weight(&avg_order1(&fh), period)?;
            terms.push(("phi0.chain".into(), phi0));
            terms.push(("phi1.chain".into(), phi1));
            Ok(CostReport::assemble(phi0, phi1, penalty, lambda, terms))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modulation::FrameOrdering;
    use crate::waveform::tables;

    fn modulation(w: &FourierWaveform, ordering: FrameOrdering) -> ModulationMatrix {
        ModulationMatrix::from_drive(w, 4096, ordering).unwrap()
    }

    #[test]
    fn generic_order0_zero_drive() {
        let w = FourierWaveform::zero(2.0, 3);
        let m = modulation(&w, FrameOrdering::Interaction);
        assert!((cost_generic_order0(&m, None).unwrap() - 6.0).abs() < 1e-12);
        let g = 0.3;
        let hybrid = cost_generic_order0(&m, Some(&[0.0, 0.0, g])).unwrap();
        assert!((hybrid - g * g * 2.0).abs() < 1e-12);
        assert!(cost_generic_order0(&m, Some(&[1.0])).is_err());
    }

    #[test]
    fn hybrid_z_only_is_z_column() {
        let w = tables::dephasing(1.0);
        let m = modulation(&w, FrameOrdering::Interaction);
        let g = 0.7;
        let hybrid = cost_generic_order0(&m, Some(&[0.0, 0.0, g])).unwrap();
        let col: f64 = (0..3).map(|b| m.coeff(b, Z, 0).norm_sqr()).sum();
        assert!((hybrid - g * g * col).abs() < 1e-14);
    }

    #[test]
    fn reference_dephasing_z_column_under_literal_ordering() {
        let m = modulation(&tables::dephasing(1.0), FrameOrdering::Literal);
        let col: f64 = (0..3).map(|b| m.coeff(b, Z, 0).norm_sqr()).sum();
        assert!(col < 1e-4, "{col:e}");
    }

    #[test]
    fn dephasing_zero_drive() {
        let w = FourierWaveform::zero(1.0, 9);
        let m = modulation(&w, FrameOrdering::Interaction);
        let r = cost_dephasing(&m, &w, &DephasingSpec::default(), 1e3).unwrap();
        assert!((r.phi0 - 1.0).abs() < 1e-14);
        assert!(r.phi1.abs() < 1e-14);
        assert_eq!(r.penalty, 0.0);
        assert!((r.total - 1.0).abs() < 1e-14);
    }

    #[test]
    fn x_only_drive_kills_y_channels() {
        let w = FourierWaveform::new(1.0, alloc::vec![3.0, 0.0, 1.5], alloc::vec![0.0; 3]).unwrap();
        let m = modulation(&w, FrameOrdering::Interaction);
        let d = error_channel_spectra(&m, &w).unwrap();
        for a in 0..3 {
            for z in d[1][a].iter().chain(d[2][a].iter()) {
                assert!(z.norm() < 1e-15);
            }
        }
        assert!(d[0][0][1].norm() > 1e-3);
    }

    #[test]
    fn bath_only_cost_depends_on_z_column() {
        // with w = 0 the report equals the quantities built from c_{αz} alone
        let w = tables::dephasing(1.0);
        let m = modulation(&w, FrameOrdering::Interaction);
        let spec = DephasingSpec { error_weight: 0.0, ..Default::default() };
        let r = cost_dephasing(&m, &w, &spec, 0.0).unwrap();
        let phi0: f64 = (0..3).map(|a| m.coeff(a, Z, 0).norm_sqr()).sum();
        assert!((r.phi0 - phi0).abs() < 1e-14);
        let mut phi1 = 0.0;
        for &(ap, a) in &PAIRS {
            let mut s = 0.0;
            for n in 1..=m.n_max() as i64 {
                let z = m.coeff(a, Z, n) * m.coeff(ap, Z, n).conj();
                s += z.im / n as f64;
            }
            phi1 += s * s;
        }
        assert!((r.phi1 - phi1).abs() < 1e-14);
    }

    #[test]
    fn dephasing_first_order_matches_floquet_engine() {
        // for H̃ = Σ_α c_{αz}(t) σ_α the σ_γ coefficient of H̄⁽¹⁾ is ±(T/π) S_{α′α}
        use crate::average_hamiltonian::ModulatedHamiltonian;
        let w = tables::dephasing(1.0);
        let m = modulation(&w, FrameOrdering::Interaction);
        let spec = DephasingSpec { error_weight: 0.0, ..Default::default() };
        let r = cost_dephasing(&m, &w, &spec, 0.0).unwrap();
        let mut h0 = PauliSum::new();
        h0.push(1.0, "Z".parse().unwrap());
        let mh = ModulatedHamiltonian::build(&h0, 1, &[0], &w, 4096, FrameOrdering::Interaction).unwrap();
        let fh = mh.fourier(m.n_max()).unwrap();
        let h1 = avg_order1(&fh);
        let weight = squared_pauli_weight(&h1, PI).unwrap();
        assert!((weight - r.phi1).abs() < 1e-10 * (1.0 + r.phi1), "{weight} vs {}", r.phi1);
    }

    #[test]
    fn dipolar_zero_drive() {
        let w = FourierWaveform::zero(1.0, 9);
        let m = modulation(&w, FrameOrdering::Interaction);
        let r = cost_dipolar(&m, &DipolarSpec { n_qubits: 4, d: None }, 1e3).unwrap();
        assert!((r.phi0 - 1.5).abs() < 1e-14);
        assert!(r.phi1.abs() < 1e-20);
    }

    #[test]
    fn dipolar_isotropic_orbit_cancels() {
        // frames holding x→y→z→x cyclic rotations for equal thirds of the cycle
        use crate::linalg::Mat2;
        let cyc = Mat2::exp_i_pauli(PI / 3.0 / 3f64.sqrt(), PI / 3.0 / 3f64.sqrt(), PI / 3.0 / 3f64.sqrt());
        let frames: Vec<Mat2> = (0..=1024)
            .map(|k| match k * 3 / 1024 {
                0 => Mat2::IDENTITY,
                1 => cyc,
                _ => cyc.mul(&cyc),
            })
            .collect();
        let m = ModulationMatrix::from_frames(&frames, 1.0, 96).unwrap();
        let r = cost_dipolar(&m, &DipolarSpec { n_qubits: 2, d: None }, 0.0).unwrap();
        // thirds of a 1024 grid are uneven by one sample
        assert!(r.phi0 < 1e-5, "{}", r.phi0);
    }

    #[test]
    fn dipolar_reference_dipolar_is_small() {
        let w = tables::dipolar(1.0);
        let m = modulation(&w, FrameOrdering::Interaction);
        let r = cost_dipolar(&m, &DipolarSpec { n_qubits: 4, d: None }, 0.0).unwrap();
        assert!(r.phi0 < 1e-3, "{}", r.phi0);
        let zero = FourierWaveform::zero(1.0, 9);
        let mz = modulation(&zero, FrameOrdering::Interaction);
        assert!(r.rms() < cost_dipolar(&mz, &DipolarSpec { n_qubits: 4, d: None }, 0.0).unwrap().rms());
    }

    #[test]
    fn dipolar_hybrid_matches_full_floquet() {
        let w = tables::dipolar(1.0);
        let m = modulation(&w, FrameOrdering::Interaction);
        let d = alloc::vec![alloc::vec![0.0, 1.0, 0.125], alloc::vec![0.0, 0.0, 1.0], alloc::vec![0.0; 3]];
        let r = cost_dipolar(&m, &DipolarSpec { n_qubits: 3, d: Some(d) }, 0.0).unwrap();
        assert!(r.phi0 >= 0.0 && r.phi1 >= 0.0);
        let free = cost_dipolar(
            &modulation(&FourierWaveform::zero(1.0, 9), FrameOrdering::Interaction),
            &DipolarSpec {
                n_qubits: 3,
                d: Some(alloc::vec![alloc::vec![0.0, 1.0, 0.125], alloc::vec![0.0, 0.0, 1.0], alloc::vec![0.0; 3]]),
            },
            0.0,
        )
        .unwrap();
        assert!(r.phi0 < 1e-2 * free.phi0);
    }

    #[test]
    fn penalty_schedule() {
        let s = PenaltySchedule::default();
        assert_eq!(s.lambda(0), 1e3);
        assert!((s.lambda(2) - 1e5).abs() < 1e-6);
    }

    #[test]
    fn report_text_has_labels() {
        let w = FourierWaveform::zero(1.0, 2);
        let m = modulation(&w, FrameOrdering::Interaction);
        let r = cost_dephasing(&m, &w, &DephasingSpec::default(), 1.0).unwrap();
        let t = r.to_text();
        assert!(t.contains("term.phi1.bath_err"));
        assert!(t.contains("total = "));
    }
}
