//! Direct simulation of driven qubit registers and the fidelity metrics used
//! to score decoupling sequences.
//!
//! Site 0 is the most significant tensor factor. System qubits come first,
//! bath two-level systems after them.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::lie_basis::{Pauli, PauliString, PauliSum, MAX_QUBITS};
use crate::linalg::{DenseOperator, Mat2, C64, ONE, ZERO};
use crate::waveform::Drive;

/// Bath couplings `g⁽ᵏ⁾T/π` of the single-qubit dephasing benchmark.
pub const REFERENCE_COUPLINGS: [f64; 4] = [0.0338264, -0.0906347, 0.0014495, 0.0740895];

pub const DEFAULT_EVOLVE_STEPS: usize = 4096;
pub const MIN_EVOLVE_STEPS: usize = 1024;
pub const RICHARDSON_TOL: f64 = 1e-6;

pub const GRID_THETA: usize = 32;
pub const GRID_PHI: usize = 64;

/// Systematic instrument errors `ε₁..ε₄`. The drive seen by every driven
/// qubit becomes `(v_x(1+ε₁) + ε₂v_y, v_y(1+ε₃) + ε₄v_x)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ErrorModel {
    pub epsilon: [f64; 4],
}

impl ErrorModel {
    pub fn none() -> Self {
        Self::default()
    }

    /// Flip-angle error `Δβ = ε₁ = ε₃`.
    pub fn flip_angle(delta_beta: f64) -> Self {
        Self { epsilon: [delta_beta, 0.0, delta_beta, 0.0] }
    }

    /// Phase-orthogonality error: each quadrature leaks `tan Δφ` into the other.
    pub fn phase(delta_phi: f64) -> Self {
        let t = libm::tan(delta_phi);
        Self { epsilon: [0.0, t, 0.0, t] }
    }

    pub fn combined(delta_beta: f64, delta_phi: f64) -> Self {
        let t = libm::tan(delta_phi);
        Self { epsilon: [delta_beta, t, delta_beta, t] }
    }

    pub fn is_ideal(&self) -> bool {
        self.epsilon.iter().all(|e| *e == 0.0)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let [e1, e2, e3, e4] = self.epsilon;
        [v[0] * (1.0 + e1) + e2 * v[1], v[1] * (1.0 + e3) + e4 * v[0]]
    }
}

/// A static Hamiltonian `H₀` on `n_system + n_bath` qubits plus the set of
/// qubits the drive couples to.
#[derive(Debug, Clone)]
pub struct SimulatedSystem {
    n_system: usize,
    n_bath: usize,
    h0_terms: PauliSum,
    h0: DenseOperator,
    driven: Vec<usize>,
    pub errors: ErrorModel,
    pub steps: usize,
}

impl SimulatedSystem {
    pub fn new(n_system: usize, n_bath: usize, h0_terms: PauliSum, driven: Vec<usize>) -> Result<Self> {
        let n = n_system + n_bath;
        if n_system == 0 {
            return Err(Error::InvalidArgument("need at least one system qubit".into()));
        }
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n));
        }
        if let Some(m) = h0_terms.n_qubits() {
            if m != n {
                return Err(Error::DimensionMismatch { expected: n, found: m });
            }
        }
        if driven.iter().any(|&k| k >= n) {
            return Err(Error::InvalidArgument("driven qubit index out of range".into()));
        }
        let h0 = h0_terms.to_dense(n);
        Ok(Self { n_system, n_bath, h0_terms, h0, driven, errors: ErrorModel::none(), steps: DEFAULT_EVOLVE_STEPS })
    }

    /// One qubit coupled to TLS `k` through `g⁽ᵏ⁾ σ_z σ_{z,k}`, `g` in π/T units.
    pub fn build_dephasing(g: &[f64], period: f64) -> Result<Self> {
        let n = 1 + g.len();
        let mut h = PauliSum::new();
        for (k, gk) in g.iter().enumerate() {
            h.push(gk * PI / period, PauliString::pair(n, 0, Pauli::Z, k + 1, Pauli::Z));
        }
        Self::new(1, g.len(), h, vec![0])
    }

    pub fn build_reference_dephasing(period: f64) -> Result<Self> {
        Self::build_dephasing(&REFERENCE_COUPLINGS, period)
    }

    /// Collectively driven chain with nearest (π/T) and next-nearest (π/8T)
    /// dipolar couplings.
    pub fn build_dipolar_chain(n: usize, period: f64) -> Result<Self> {
        if !(2..=8).contains(&n) {
            return Err(Error::InvalidArgument(alloc::format!("chain length {n} outside 2..=8")));
        }
        let d = chain_couplings(n);
        let mut h = PauliSum::new();
        for j in 0..n {
            for k in j + 1..n {
                if d[j][k] == 0.0 {
                    continue;
                }
                let s = d[j][k] * PI / period;
                h.push(s, PauliString::pair(n, j, Pauli::Z, k, Pauli::Z));
                h.push(-0.5 * s, PauliString::pair(n, j, Pauli::X, k, Pauli::X));
                h.push(-0.5 * s, PauliString::pair(n, j, Pauli::Y, k, Pauli::Y));
            }
        }
        Self::new(n, 0, h, (0..n).collect())
    }

    pub fn with_errors(mut self, errors: ErrorModel) -> Self {
        self.errors = errors;
        self
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn n_system(&self) -> usize {
        self.n_system
    }

    pub fn n_bath(&self) -> usize {
        self.n_bath
    }

    pub fn n_qubits(&self) -> usize {
        self.n_system + self.n_bath
    }

    pub fn driven(&self) -> &[usize] {
        &self.driven
    }

    pub fn h0(&self) -> &DenseOperator {
        &self.h0
    }

    pub fn h0_terms(&self) -> &PauliSum {
        &self.h0_terms
    }

    /// `‖H₀‖ T`, spectral norm.
    pub fn magnus_parameter(&self, period: f64) -> f64 {
        self.h0.spectral_norm_hermitian() * period
    }

    /// Whether `‖H₀‖T ≥ 1`, where the low-order averages stop being reliable.
    pub fn exceeds_magnus_premise(&self, period: f64) -> bool {
        self.magnus_parameter(period) >= 1.0
    }
}

/// `d[k′][k]` in π/T units for the benchmark chain.
pub fn chain_couplings(n: usize) -> Vec<Vec<f64>> {
    let mut d = vec![vec![0.0; n]; n];
    for k in 0..n {
        if k + 1 < n {
            d[k][k + 1] = 1.0;
        }
        if k + 2 < n {
            d[k][k + 2] = 0.125;
        }
    }
    d
}

struct Block {
    idx: Vec<usize>,
    vectors: DMatrix<C64>,
    values: Vec<f64>,
}

/// Exact `exp(−iH₀τ)` restricted to the connected blocks of `H₀`.
struct StaticPropagator {
    blocks: Vec<Block>,
    cache: Vec<(f64, Vec<DMatrix<C64>>)>,
}

impl StaticPropagator {
    fn new(h: &DenseOperator) -> Self {
        let dim = h.dim();
        let mut parent: Vec<usize> = (0..dim).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        for r in 0..dim {
            for c in r + 1..dim {
                if h.get(r, c) != ZERO {
                    let (a, b) = (find(&mut parent, r), find(&mut parent, c));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; dim];
        for i in 0..dim {
            let root = find(&mut parent, i);
            if slot[root] == usize::MAX {
                slot[root] = groups.len();
                groups.push(Vec::new());
            }
            groups[slot[root]].push(i);
        }
        let blocks = groups
            .into_iter()
            .map(|idx| {
                let m = idx.len();
                let sub = DMatrix::from_fn(m, m, |r, c| h.get(idx[r], idx[c]));
                let eig = sub.symmetric_eigen();
                Block { idx, vectors: eig.eigenvectors, values: eig.eigenvalues.iter().copied().collect() }
            })
            .collect();
        Self { blocks, cache: Vec::new() }
    }

    fn factors(&mut self, tau: f64) -> usize {
        let tol = 1e-13 * (1.0 + tau.abs());
        if let Some(i) = self.cache.iter().position(|(t, _)| (t - tau).abs() <= tol) {
            return i;
        }
        let mats = self
            .blocks
            .iter()
            .map(|b| {
                let phases: Vec<C64> = b.values.iter().map(|l| C64::from_polar(1.0, -l * tau)).collect();
                let m = b.idx.len();
                let mut scaled = b.vectors.clone();
                for c in 0..m {
                    for r in 0..m {
                        scaled[(r, c)] *= phases[c];
                    }
                }
                &scaled * b.vectors.adjoint()
            })
            .collect();
        self.cache.push((tau, mats));
        self.cache.len() - 1
    }

    fn apply(&mut self, tau: f64, u: &mut DMatrix<C64>) {
        if tau == 0.0 {
            return;
        }
        let slot = self.factors(tau);
        let dim = u.nrows();
        let mats = &self.cache[slot].1;
        let data = u.as_mut_slice();
        let mut buf = Vec::new();
        for col in data.chunks_mut(dim) {
            for (b, e) in self.blocks.iter().zip(mats) {
                if b.idx.len() == 1 {
                    col[b.idx[0]] *= e[(0, 0)];
                    continue;
                }
                buf.clear();
                buf.extend(b.idx.iter().map(|&i| col[i]));
                for (r, &i) in b.idx.iter().enumerate() {
                    let mut acc = ZERO;
                    for (c, x) in buf.iter().enumerate() {
                        acc += e[(r, c)] * x;
                    }
                    col[i] = acc;
                }
            }
        }
    }
}

/// Left-multiplies `u` by `g` acting on qubit `k` of `n`.
fn apply_local(u: &mut DMatrix<C64>, g: &Mat2, k: usize, n: usize) {
    let dim = u.nrows();
    let bit = 1usize << (n - 1 - k);
    let [a, b, c, d] = g.0;
    for col in u.as_mut_slice().chunks_mut(dim) {
        for r in 0..dim {
            if r & bit == 0 {
                let (x, y) = (col[r], col[r | bit]);
                col[r] = a * x + b * y;
                col[r | bit] = c * x + d * y;
            }
        }
    }
}

fn drive_gate(v: [f64; 2], s: f64) -> Mat2 {
    Mat2::exp_i_pauli(-0.5 * s * v[0], -0.5 * s * v[1], 0.0)
}

fn step_grid<D: Drive + ?Sized>(drive: &D, steps: usize) -> Vec<f64> {
    let period = drive.period();
    let mut t: Vec<f64> = (0..=steps).map(|k| period * k as f64 / steps as f64).collect();
    t.extend(drive.breakpoints().into_iter().filter(|b| *b > 0.0 && *b < period));
    t.sort_by(f64::total_cmp);
    t.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * period);
    t
}

/// One cycle: `(U_lab(T), U_c(T))`, where `U_c` is the error-free control
/// propagator on a single driven qubit.
fn cycle_propagators<D: Drive + ?Sized>(sys: &SimulatedSystem, drive: &D, steps: usize) -> (DMatrix<C64>, Mat2) {
    let n = sys.n_qubits();
    let dim = 1usize << n;
    let w1 = 1.0 / (2.0 - libm::cbrt(2.0));
    let w0 = 1.0 - 2.0 * w1;
    let mut stat = StaticPropagator::new(&sys.h0);
    let mut u = DMatrix::<C64>::identity(dim, dim);
    let mut uc = Mat2::IDENTITY;
    let mut pending = 0.0;
    let grid = step_grid(drive, steps);
    for win in grid.windows(2) {
        let (a, b) = (win[0], win[1]);
        let h = b - a;
        let subs = [(w1 * h, a + 0.5 * w1 * h), (w0 * h, a + 0.5 * h), (w1 * h, b - 0.5 * w1 * h)];
        for (s, mid) in subs {
            stat.apply(pending + 0.5 * s, &mut u);
            let v = drive.amplitude(mid);
            let g = drive_gate(sys.errors.apply(v), s);
            for &k in &sys.driven {
                apply_local(&mut u, &g, k, n);
            }
            uc = drive_gate(v, s).mul(&uc);
            pending = 0.5 * s;
        }
    }
    stat.apply(pending, &mut u);
    (u, uc)
}

fn toggling<D: Drive + ?Sized>(sys: &SimulatedSystem, drive: &D, cycles: usize, steps: usize) -> DMatrix<C64> {
    let n = sys.n_qubits();
    let (lab, uc) = cycle_propagators(sys, drive, steps);
    let mut u = DMatrix::<C64>::identity(lab.nrows(), lab.ncols());
    for _ in 0..cycles {
        u = &lab * &u;
    }
    let back = uc.adjoint();
    for _ in 0..cycles {
        for &k in &sys.driven {
            apply_local(&mut u, &back, k, n);
        }
    }
    u
}

/// Toggling-frame propagator `Ũ(cT) = U_c(T)^{†c} U_lab(T)^c` and the
/// Richardson estimate of its integration error.
///
/// The lab-frame step is a fourth-order composition of symmetric splittings
/// into exact static and single-qubit drive exponentials.
pub fn evolve_with_residual<D: Drive + ?Sized>(
    sys: &SimulatedSystem,
    drive: &D,
    cycles: usize,
) -> Result<(DenseOperator, f64)> {
    if sys.steps < MIN_EVOLVE_STEPS {
        return Err(Error::InvalidArgument(alloc::format!(
            "{} steps per cycle is below the minimum {MIN_EVOLVE_STEPS}",
            sys.steps
        )));
    }
    if cycles == 0 {
        return Err(Error::InvalidArgument("cycles must be at least 1".into()));
    }
    let fine = toggling(sys, drive, cycles, sys.steps);
    let coarse = toggling(sys, drive, cycles, sys.steps / 2);
    let residual = fine.iter().zip(coarse.iter()).fold(0.0f64, |m, (a, b)| m.max((a - b).norm())) / 15.0;
    if fine.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("propagator"));
    }
    Ok((DenseOperator::from_matrix(fine)?, residual))
}

pub fn evolve<D: Drive + ?Sized>(sys: &SimulatedSystem, drive: &D, cycles: usize) -> Result<DenseOperator> {
    let (u, residual) = evolve_with_residual(sys, drive, cycles)?;
    if residual > RICHARDSON_TOL {
        return Err(Error::StepCountTooSmall(residual));
    }
    Ok(u)
}

/// `⟨φ|C(|φ⟩⟨φ|)|φ⟩ = ‖Σ_ij φ_i* φ_j U_ij‖²_F / d_B` for the qubit channel of
/// `u` with a maximally mixed bath, through the Gram matrix of the blocks `U_ij`.
struct QubitChannel {
    gram: [[C64; 4]; 4],
    d_bath: usize,
}

impl QubitChannel {
    fn new(u: &DenseOperator, n_bath: usize) -> Result<Self> {
        let d_bath = 1usize << n_bath;
        if u.dim() != 2 * d_bath {
            return Err(Error::DimensionMismatch { expected: 2 * d_bath, found: u.dim() });
        }
        let m = u.matrix();
        let blocks: Vec<DMatrix<C64>> =
            (0..4).map(|ij| m.view(((ij >> 1) * d_bath, (ij & 1) * d_bath), (d_bath, d_bath)).clone_owned()).collect();
        let mut gram = [[ZERO; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                gram[a][b] = blocks[a].iter().zip(blocks[b].iter()).map(|(x, y)| x.conj() * y).sum();
            }
        }
        Ok(Self { gram, d_bath })
    }

    fn overlap(&self, theta: f64, phi: f64) -> f64 {
        let (s, c) = libm::sincos(0.5 * theta);
        let v = [C64::new(c, 0.0), C64::from_polar(s, phi)];
        let a: [C64; 4] = core::array::from_fn(|ij| v[ij >> 1].conj() * v[ij & 1]);
        let mut acc = ZERO;
        for p in 0..4 {
            for q in 0..4 {
                acc += a[p].conj() * a[q] * self.gram[p][q];
            }
        }
        acc.re / self.d_bath as f64
    }
}

/// Worst-case pure-state fidelity `min_φ √⟨φ|C(φ)|φ⟩` of the qubit channel
/// `ρ ↦ Tr_B[U(ρ ⊗ 1/d_B)U†]`. Site 0 is the qubit.
pub fn gate_fidelity(u: &DenseOperator, n_bath: usize) -> Result<f64> {
    let ch = QubitChannel::new(u, n_bath)?;
    let dt = PI / (GRID_THETA - 1) as f64;
    let dp = 2.0 * PI / GRID_PHI as f64;
    let mut grid = Vec::with_capacity(GRID_THETA * GRID_PHI);
    for i in 0..GRID_THETA {
        for j in 0..GRID_PHI {
            let (t, p) = (i as f64 * dt, j as f64 * dp);
            grid.push((ch.overlap(t, p), t, p));
        }
    }
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = grid[0].0;
    for &(f0, t0, p0) in grid.iter().take(4) {
        let (mut f, mut t, mut p) = (f0, t0, p0);
        let (mut st, mut sp) = (dt, dp);
        while st > 1e-10 {
            let mut moved = false;
            for (a, b) in [(st, 0.0), (-st, 0.0), (0.0, sp), (0.0, -sp)] {
                let (tn, pn) = (t + a, p + b);
                let fn_ = ch.overlap(tn, pn);
                if fn_ < f {
                    (f, t, p) = (fn_, tn, pn);
                    moved = true;
                }
            }
            if !moved {
                st *= 0.5;
                sp *= 0.5;
            }
        }
        best = best.min(f);
    }
    Ok(libm::sqrt(best.clamp(0.0, 1.0)))
}

/// `|Tr[U_ideal† U]| / d`. The literal `Tr√(C†C)` equals `d` for every
/// unitary, so the normalized overlap is used instead.
pub fn trace_fidelity(actual: &DenseOperator, ideal: &DenseOperator) -> Result<f64> {
    if actual.dim() != ideal.dim() {
        return Err(Error::DimensionMismatch { expected: ideal.dim(), found: actual.dim() });
    }
    Ok((ideal.adjoint().trace_product(actual).norm() / actual.dim() as f64).min(1.0))
}

/// `|⟨ψ|U|ψ⟩|²`
pub fn state_fidelity(state: &BenchmarkState, u: &DenseOperator) -> Result<f64> {
    if state.vector.len() != u.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: state.vector.len() });
    }
    Ok(u.expectation(&state.vector).norm_sqr().min(1.0))
}

/// `F̄ = 1 − (1 − F)/‖H T‖`
pub fn normalized_fidelity(f: f64, h_norm_t: f64) -> Result<f64> {
    if !(h_norm_t > 0.0) {
        return Err(Error::InvalidArgument("normalization must be positive".into()));
    }
    Ok(1.0 - (1.0 - f) / h_norm_t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateLabel {
    CssX,
    Ghz,
    Mes,
    Dicke,
}

impl StateLabel {
    pub const ALL: [StateLabel; 4] = [StateLabel::CssX, StateLabel::Ghz, StateLabel::Mes, StateLabel::Dicke];

    pub fn name(self) -> &'static str {
        match self {
            StateLabel::CssX => "CSS",
            StateLabel::Ghz => "GHZ",
            StateLabel::Mes => "MES",
            StateLabel::Dicke => "Dicke",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkState {
    pub label: StateLabel,
    pub vector: Vec<C64>,
}

impl BenchmarkState {
    pub fn new(label: StateLabel, n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n));
        }
        let dim = 1usize << n;
        let mut v = vec![ZERO; dim];
        match label {
            // |+⟩^⊗n; MES as defined is the same uniform superposition
            StateLabel::CssX | StateLabel::Mes => v.iter_mut().for_each(|z| *z = ONE),
            StateLabel::Ghz => {
                v[0] = ONE;
                v[dim - 1] = ONE;
            }
            StateLabel::Dicke => {
                let k = n / 2;
                for (i, z) in v.iter_mut().enumerate() {
                    if i.count_ones() as usize == k {
                        *z = ONE;
                    }
                }
            }
        }
        let norm = libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum::<f64>());
        v.iter_mut().for_each(|z| *z /= norm);
        Ok(Self { label, vector: v })
    }
}

/// Which instrument error an error sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorAxis {
    FlipAngle,
    Phase,
}

impl ErrorAxis {
    pub fn name(self) -> &'static str {
        match self {
            ErrorAxis::FlipAngle => "delta_beta",
            ErrorAxis::Phase => "delta_phi",
        }
    }

    pub fn model(self, value: f64) -> ErrorModel {
        match self {
            ErrorAxis::FlipAngle => ErrorModel::flip_angle(value),
            ErrorAxis::Phase => ErrorModel::phase(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSweepRow {
    pub axis: ErrorAxis,
    pub value: f64,
    pub label: String,
    pub fidelity: f64,
}

/// Gate fidelity after `cycles` periods for every sequence and error value.
/// Rows are ordered by value, then by sequence.
pub fn error_sweep(
    sys: &SimulatedSystem,
    sequences: &[(&str, &dyn Drive)],
    axis: ErrorAxis,
    values: &[f64],
    cycles: usize,
) -> Result<Vec<ErrorSweepRow>> {
    let jobs: Vec<(f64, usize)> = values.iter().flat_map(|&v| (0..sequences.len()).map(move |i| (v, i))).collect();
    let run = |&(value, i): &(f64, usize)| -> Result<ErrorSweepRow> {
        let s = sys.clone().with_errors(axis.model(value));
        let u = evolve(&s, sequences[i].1, cycles)?;
        Ok(ErrorSweepRow { axis, value, label: sequences[i].0.into(), fidelity: gate_fidelity(&u, sys.n_bath)? })
    };
    #[cfg(feature = "std")]
    {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    }
    #[cfg(not(feature = "std"))]
    {
        jobs.iter().map(run).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainRow {
    pub n_qubits: usize,
    pub label: String,
    /// State label, or `"trace"`.
    pub metric: String,
    pub fidelity: f64,
    pub normalized: f64,
}

/// Per-cycle state and trace fidelities on benchmark chains of each length.
pub fn chain_sweep(
    sequences: &[(&str, &dyn Drive)],
    sizes: &[usize],
    errors: ErrorModel,
    steps: usize,
) -> Result<Vec<ChainRow>> {
    let jobs: Vec<(usize, usize)> = sizes.iter().flat_map(|&n| (0..sequences.len()).map(move |i| (n, i))).collect();
    let run = |&(n, i): &(usize, usize)| -> Result<Vec<ChainRow>> {
        let (label, drive) = sequences[i];
        let sys = SimulatedSystem::build_dipolar_chain(n, drive.period())?.with_errors(errors).with_steps(steps);
        let u = evolve(&sys, drive, 1)?;
        let norm = sys.magnus_parameter(drive.period());
        let mut rows = Vec::with_capacity(5);
        let mut push = |metric: &str, f: f64| -> Result<()> {
            rows.push(ChainRow {
                n_qubits: n,
                label: label.into(),
                metric: metric.into(),
                fidelity: f,
                normalized: normalized_fidelity(f, norm)?,
            });
            Ok(())
        };
        for s in StateLabel::ALL {
            push(s.name(), state_fidelity(&BenchmarkState::new(s, n)?, &u)?)?;
        }
        push("trace", trace_fidelity(&u, &DenseOperator::identity(u.dim()))?)?;
        Ok(rows)
    };
    #[cfg(feature = "std")]
    let nested: Result<Vec<Vec<ChainRow>>> = {
        use rayon::prelude::*;
        jobs.par_iter().map(run).collect()
    };
    #[cfg(not(feature = "std"))]
    let nested: Result<Vec<Vec<ChainRow>>> = jobs.iter().map(run).collect();
    Ok(nested?.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_basis::realize;
    use crate::waveform::{tables, FourierWaveform, Pulse, PulseTrain};

    fn pauli(label: &str) -> DenseOperator {
        let p: PauliString = label.parse().unwrap();
        realize(&p, p.n_qubits()).unwrap()
    }

    #[test]
    fn no_static_term_gives_identity() {
        let sys = SimulatedSystem::new(2, 1, PauliSum::new(), vec![0, 1]).unwrap().with_steps(1024);
        let u = evolve(&sys, &tables::dipolar(1.0), 1).unwrap();
        assert!(u.max_abs_diff(&DenseOperator::identity(8)) < 1e-9);
    }

    #[test]
    fn zero_drive_is_static_evolution() {
        let sys = SimulatedSystem::build_reference_dephasing(1.0).unwrap().with_steps(1024);
        let u = evolve(&sys, &FourierWaveform::zero(1.0, 3), 1).unwrap();
        assert!(u.max_abs_diff(&sys.h0().propagator(1.0)) < 1e-12);
        let u2 = evolve(&sys, &FourierWaveform::zero(1.0, 3), 2).unwrap();
        assert!(u2.max_abs_diff(&sys.h0().propagator(2.0)) < 1e-12);
    }

    #[test]
    fn matches_dense_integration() {
        // single qubit + TLS, compared with many small dense exponentials
        let mut h = PauliSum::new();
        h.push(0.7, PauliString::pair(2, 0, Pauli::Z, 1, Pauli::Z));
        h.push(0.3, PauliString::pair(2, 0, Pauli::X, 1, Pauli::X));
        let sys = SimulatedSystem::new(1, 1, h, vec![0]).unwrap().with_steps(2048);
        let w = FourierWaveform::new(1.0, vec![3.0, 0.5], vec![-1.0, 2.0]).unwrap();
        let u = evolve(&sys, &w, 1).unwrap();
        let (x, y) = (pauli("XI"), pauli("YI"));
        let n = 1 << 15;
        let dt = 1.0 / n as f64;
        let mut lab = DenseOperator::identity(4);
        let mut ctl = DenseOperator::identity(4);
        for k in 0..n {
            let [vx, vy] = w.amplitude((k as f64 + 0.5) * dt);
            let mut v = x.scale_real(0.5 * vx);
            v.add_scaled(C64::new(0.5 * vy, 0.0), &y);
            lab = &(&v + sys.h0()).propagator(dt) * &lab;
            ctl = &v.propagator(dt) * &ctl;
        }
        let want = &ctl.adjoint() * &lab;
        assert!(u.max_abs_diff(&want) < 1e-7, "{}", u.max_abs_diff(&want));
    }

    #[test]
    fn breakpoints_keep_pulse_trains_exact() {
        // π pulse about x refocuses a z coupling
        let train =
            PulseTrain::new(1.0, vec![Pulse { start: 0.45, duration: 0.1, amplitude: 10.0 * PI, phase: 0.0 }]).unwrap();
        let sys = SimulatedSystem::build_dephasing(&[0.2], 1.0).unwrap().with_steps(1024);
        let (u, res) = evolve_with_residual(&sys, &train, 1).unwrap();
        assert!(res < 1e-9);
        assert!(u.is_unitary(1e-9));
        assert!(gate_fidelity(&u, 1).unwrap() > 0.99);
    }

    #[test]
    fn richardson_rejects_coarse_grids() {
        let sys = SimulatedSystem::build_dipolar_chain(3, 1.0).unwrap();
        let strong = tables::dipolar(1.0).scaled(40.0);
        assert!(matches!(evolve(&sys.with_steps(1024), &strong, 1), Err(Error::StepCountTooSmall(_))));
    }

    #[test]
    fn error_model_is_linear_in_drive() {
        let e = ErrorModel::combined(0.1, 0.2);
        let t = libm::tan(0.2);
        let v = e.apply([2.0, 3.0]);
        assert!((v[0] - (2.2 + 3.0 * t)).abs() < 1e-15 && (v[1] - (3.3 + 2.0 * t)).abs() < 1e-15);
        assert!(ErrorModel::none().is_ideal());
    }

    #[test]
    fn gate_fidelity_extremes() {
        assert!((gate_fidelity(&DenseOperator::identity(4), 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(gate_fidelity(&pauli("XI"), 1).unwrap() < 1e-6);
        // z rotation by θ: worst case on the equator, F = cos(θ/2)
        let u = pauli("Z").scale_real(0.15).propagator(1.0);
        assert!((gate_fidelity(&u, 0).unwrap() - libm::cos(0.15)).abs() < 1e-9);
        assert!(gate_fidelity(&DenseOperator::identity(8), 1).is_err());
    }

    #[test]
    fn trace_and_state_fidelity() {
        let id = DenseOperator::identity(4);
        assert!((trace_fidelity(&id, &id).unwrap() - 1.0).abs() < 1e-15);
        assert!(trace_fidelity(&pauli("XI"), &id).unwrap() < 1e-15);
        let ghz = BenchmarkState::new(StateLabel::Ghz, 3).unwrap();
        let phase = DenseOperator::identity(8).scale(C64::from_polar(1.0, 0.7));
        assert!((state_fidelity(&ghz, &phase).unwrap() - 1.0).abs() < 1e-14);
        assert!((normalized_fidelity(1.0, 3.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((normalized_fidelity(0.7, 3.0).unwrap() - 0.9).abs() < 1e-15);
        assert!(normalized_fidelity(0.7, 0.0).is_err());
    }

    #[test]
    fn dicke_state_is_symmetric_zero_magnetization() {
        let n = 4;
        let s = BenchmarkState::new(StateLabel::Dicke, n).unwrap();
        let mut jz = DenseOperator::zeros(16);
        let mut total = DenseOperator::zeros(16);
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let mut j = DenseOperator::zeros(16);
            for k in 0..n {
                j = &j + &realize(&PauliString::single(n, k, p), n).unwrap();
            }
            if p == Pauli::Z {
                jz = j.clone();
            }
            total = &total + &(&j * &j);
        }
        let apply = |op: &DenseOperator| -> Vec<C64> {
            (0..16).map(|r| (0..16).map(|c| op.get(r, c) * s.vector[c]).sum()).collect()
        };
        assert!(apply(&jz).iter().all(|z| z.norm() < 1e-12));
        // maximal total spin: (Σσ)² = n(n+2)
        let want = (n * (n + 2)) as f64;
        assert!(apply(&total).iter().zip(&s.vector).all(|(a, b)| (a - b * want).norm() < 1e-12));
        let eig = total.hermitian_eigenvalues();
        assert!((eig[15] - want).abs() < 1e-9);
    }

    #[test]
    fn chain_couplings_table() {
        let d = chain_couplings(3);
        assert_eq!(d[0][1], 1.0);
        assert_eq!(d[1][2], 1.0);
        assert_eq!(d[0][2], 0.125);
        let two = SimulatedSystem::build_dipolar_chain(2, 1.0).unwrap();
        assert_eq!(two.h0_terms().terms.len(), 3);
        assert!(SimulatedSystem::build_dipolar_chain(9, 1.0).is_err());
        assert!(SimulatedSystem::build_dipolar_chain(1, 1.0).is_err());
        let sz = &pauli("ZI") + &pauli("IZ");
        let c = &(two.h0() * &sz) - &(&sz * two.h0());
        assert!(c.max_abs() < 1e-14);
    }

    #[test]
    fn reference_dephasing_beats_free_evolution() {
        let sys = SimulatedSystem::build_reference_dephasing(1.0).unwrap();
        let driven = gate_fidelity(&evolve(&sys, &tables::dephasing(1.0), 1).unwrap(), 4).unwrap();
        let free = gate_fidelity(&evolve(&sys, &FourierWaveform::zero(1.0, 1), 1).unwrap(), 4).unwrap();
        assert!(driven > free, "{driven} vs {free}");
    }
}
