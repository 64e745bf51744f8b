//! Toggling-frame propagator and the system-modulation matrix
//! `c_{βα}(t) = ½ Tr[U_V σ_α U_V† σ_β]`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fft;
use crate::lie_basis::{self, PauliString};
use crate::linalg::{DenseOperator, Mat2, C64, ZERO};
use crate::waveform::Drive;

pub const DEFAULT_STEPS: usize = 4096;
/// Harmonic cutoff. At 64 the tabulated waveforms leave a 3e-9 relative
/// tail; 96 brings it to the rounding floor.
pub const DEFAULT_N_MAX: usize = 96;
pub const MIN_STEPS: usize = 256;

/// Which side the drive generator acts on when stepping `U_V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FrameOrdering {
    /// `U_V = U_c†` with `dU_c/dt = -iV U_c`, i.e. `dU_V/dt = U_V · iV`.
    /// The toggling-frame Hamiltonian is then `U_V H U_V†` exactly.
    #[default]
    Interaction,
    /// `dU_V/dt = iV · U_V`.
    Literal,
}

/// Frames `U_V(t_k)` at `t_k = kT/N`, `k = 0..=N`.
pub fn propagate_frame<D: Drive + ?Sized>(drive: &D, n: usize, ordering: FrameOrdering) -> Result<Vec<Mat2>> {
    if n < MIN_STEPS || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(alloc::format!("frame grid needs a power of two ≥ {MIN_STEPS}, got {n}")));
    }
    let period = drive.period();
    let h = period / n as f64;
    let mut breaks = drive.breakpoints();
    breaks.retain(|b| *b > 0.0 && *b < period);
    breaks.sort_by(f64::total_cmp);
    let mut next_break = 0;

    let mut frames = Vec::with_capacity(n + 1);
    let mut u = Mat2::IDENTITY;
    frames.push(u);
    for k in 0..n {
        let t0 = k as f64 * h;
        let t1 = if k + 1 == n { period } else { (k + 1) as f64 * h };
        let mut a = t0;
        while next_break < breaks.len() && breaks[next_break] <= a {
            next_break += 1;
        }
        loop {
            let b = if next_break < breaks.len() && breaks[next_break] < t1 {
                let b = breaks[next_break];
                next_break += 1;
                b
            } else {
                t1
            };
            let v = drive.amplitude(0.5 * (a + b));
            if !v[0].is_finite() || !v[1].is_finite() {
                return Err(Error::NonFinite("drive amplitude"));
            }
            let dt = b - a;
            let step = Mat2::exp_i_pauli(0.5 * v[0] * dt, 0.5 * v[1] * dt, 0.0);
            u = match ordering {
                FrameOrdering::Interaction => u.mul(&step),
                FrameOrdering::Literal => step.mul(&u),
            };
            a = b;
            if b >= t1 {
                break;
            }
        }
        frames.push(u);
    }
    Ok(frames)
}

/// Single-qubit modulation matrix on the `{σx, σy, σz}` basis.
#[derive(Debug, Clone)]
pub struct ModulationMatrix {
    period: f64,
    /// `samples[β][α][k]` for `k = 0..=N`.
    samples: [[Vec<f64>; 3]; 3],
    /// FFT-ordered Fourier coefficients from the first `N` samples.
    spectrum: [[Vec<C64>; 3]; 3],
    n_max: usize,
}

impl ModulationMatrix {
    pub fn from_frames(frames: &[Mat2], period: f64, n_max: usize) -> Result<Self> {
        let n = frames.len().saturating_sub(1);
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::InvalidArgument("frames must cover a power-of-two grid plus endpoint".into()));
        }
        let mut samples: [[Vec<f64>; 3]; 3] = Default::default();
        for row in samples.iter_mut() {
            for col in row.iter_mut() {
                *col = Vec::with_capacity(n + 1);
            }
        }
        for (k, u) in frames.iter().enumerate() {
            let defect = u.unitarity_defect();
            if defect > 1e-10 {
                return Err(Error::NotUnitary(defect));
            }
            let r = u.rotation();
            for b in 0..3 {
                for a in 0..3 {
                    samples[b][a].push(r[b][a]);
                }
            }
            debug_assert_eq!(samples[0][0].len(), k + 1);
        }
        let mut spectrum: [[Vec<C64>; 3]; 3] = Default::default();
        for b in 0..3 {
            for a in 0..3 {
                spectrum[b][a] = fft::fourier_coefficients(&samples[b][a][..n]);
            }
        }
        Ok(Self { period, samples, spectrum, n_max: n_max.min(n / 2 - 1) })
    }

    /// Propagates the frame and builds the matrix in one call.
    pub fn from_drive<D: Drive + ?Sized>(drive: &D, n: usize, ordering: FrameOrdering) -> Result<Self> {
        let frames = propagate_frame(drive, n, ordering)?;
        Self::from_frames(&frames, drive.period(), DEFAULT_N_MAX)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Number of grid intervals `N`.
    pub fn steps(&self) -> usize {
        self.samples[0][0].len() - 1
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max.min(self.steps() / 2 - 1);
        self
    }

    pub fn time(&self, k: usize) -> f64 {
        self.period * k as f64 / self.steps() as f64
    }

    #[inline]
    pub fn sample(&self, beta: usize, alpha: usize, k: usize) -> f64 {
        self.samples[beta][alpha][k]
    }

    pub fn series(&self, beta: usize, alpha: usize) -> &[f64] {
        &self.samples[beta][alpha]
    }

    pub fn slice(&self, k: usize) -> [[f64; 3]; 3] {
        let mut r = [[0.0; 3]; 3];
        for b in 0..3 {
            for a in 0..3 {
                r[b][a] = self.samples[b][a][k];
            }
        }
        r
    }

    /// `c_{βα,n}`; zero beyond the truncation `n_max`.
    pub fn coeff(&self, beta: usize, alpha: usize, n: i64) -> C64 {
        if n.unsigned_abs() as usize > self.n_max {
            return ZERO;
        }
        fft::harmonic(&self.spectrum[beta][alpha], n)
    }

    /// Full FFT-ordered spectrum for one entry.
    pub fn spectrum(&self, beta: usize, alpha: usize) -> &[C64] {
        &self.spectrum[beta][alpha]
    }

    /// Largest coefficient magnitude above `n_max` relative to the largest
    /// overall.
    pub fn tail_ratio(&self) -> f64 {
        let n = self.steps() as i64;
        let mut lead = 0.0f64;
        let mut tail = 0.0f64;
        for row in &self.spectrum {
            for s in row {
                for m in -(n / 2 - 1)..n / 2 {
                    let z = fft::harmonic(s, m).norm();
                    if m.unsigned_abs() as usize > self.n_max {
                        tail = tail.max(z);
                    } else {
                        lead = lead.max(z);
                    }
                }
            }
        }
        if lead == 0.0 {
            0.0
        } else {
            tail / lead
        }
    }

    /// Truncated Fourier resynthesis of `c_{βα}(t)`.
    pub fn resynthesize(&self, beta: usize, alpha: usize, t: f64) -> f64 {
        let w = 2.0 * core::f64::consts::PI * t / self.period;
        let mut acc = self.coeff(beta, alpha, 0).re;
        for m in 1..=self.n_max as i64 {
            let z = self.coeff(beta, alpha, m);
            let (s, c) = libm::sincos(m as f64 * w);
            acc += 2.0 * (z.re * c - z.im * s);
        }
        acc
    }

    /// Worst `|RᵀR − I|` entry over all slices.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for k in 0..=self.steps() {
            let r = self.slice(k);
            for a in 0..3 {
                for a2 in 0..3 {
                    let dot: f64 = (0..3).map(|b| r[b][a] * r[b][a2]).sum();
                    let target = if a == a2 { 1.0 } else { 0.0 };
                    worst = worst.max((dot - target).abs());
                }
            }
        }
        worst
    }

    /// Worst `|det R − 1|` over all slices.
    pub fn determinant_defect(&self) -> f64 {
        (0..=self.steps()).map(|k| (det3(&self.slice(k)) - 1.0).abs()).fold(0.0, f64::max)
    }

    /// Rows `(t, c_xx, c_yx, c_zx, c_xy, c_yy, c_zy, c_xz, c_yz, c_zz)`.
    pub fn trajectory_rows(&self) -> Vec<[f64; 10]> {
        (0..=self.steps())
            .map(|k| {
                let mut row = [0.0; 10];
                row[0] = self.time(k);
                for a in 0..3 {
                    for b in 0..3 {
                        row[1 + 3 * a + b] = self.samples[b][a][k];
                    }
                }
                row
            })
            .collect()
    }
}

pub const TRAJECTORY_HEADER: [&str; 10] = ["t", "c_xx", "c_yx", "c_zx", "c_xy", "c_yy", "c_zy", "c_xz", "c_yz", "c_zz"];

pub fn det3(r: &[[f64; 3]; 3]) -> f64 {
    r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
}

/// `Φ_P = Σ_{αβ} |c_{βα}(T) − c_{βα}(0)|²`
pub fn continuity_penalty(m: &ModulationMatrix) -> f64 {
    let last = m.steps();
    let mut acc = 0.0;
    for b in 0..3 {
        for a in 0..3 {
            let d = m.sample(b, a, last) - m.sample(b, a, 0);
            acc += d * d;
        }
    }
    acc
}

/// Modulation matrix of an arbitrary frame path on an arbitrary Pauli basis:
/// `c[β][α][k] = Tr[U σ_α U† σ_β] / Tr[σ_β²]`.
#[derive(Debug, Clone)]
pub struct GeneralModulation {
    pub samples: Vec<Vec<Vec<f64>>>,
    /// Largest relative norm of `U σ_α U†` outside the basis span.
    pub closure_residual: f64,
}

/// Errors with `BasisNotClosed` when some rotated element leaks out of the
/// basis span by more than `1e-8`.
pub fn modulation_matrix_general(frames: &[DenseOperator], basis: &[PauliString]) -> Result<GeneralModulation> {
    let Some(first) = frames.first() else {
        return Err(Error::InvalidArgument("empty frame list".into()));
    };
    let n_qubits = first.n_qubits();
    let ops: Vec<DenseOperator> = basis.iter().map(|p| lie_basis::realize(p, n_qubits)).collect::<Result<_>>()?;
    let dim = basis.len();
    let mut samples = alloc::vec![alloc::vec![Vec::with_capacity(frames.len()); dim]; dim];
    let mut residual = 0.0f64;
    for u in frames {
        for (a, op) in ops.iter().enumerate() {
            let rotated = lie_basis::adjoint_action(u, op)?;
            let mut rest = rotated.clone();
            for (b, p) in basis.iter().enumerate() {
                let c = lie_basis::coefficient(p, &rotated)?;
                samples[b][a].push(c.re);
                rest.add_scaled(-c, &ops[b]);
            }
            let scale = rotated.frobenius_norm().max(f64::MIN_POSITIVE);
            residual = residual.max(rest.frobenius_norm() / scale);
        }
    }
    if residual > 1e-8 {
        return Err(Error::BasisNotClosed(residual));
    }
    Ok(GeneralModulation { samples, closure_residual: residual })
}
