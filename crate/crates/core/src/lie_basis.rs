//! Pauli-string operator algebra over dense matrices.
//!
//! Site 0 is the leftmost Kronecker factor. Strings carry a real weight so
//! that the orthonormal convention `Tr[P_a P_b] = δ_ab` (weight `2^{-n/2}`)
//! and the bare Pauli convention (weight 1) share one type.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{DenseOperator, C64, I, ONE, ZERO};

/// Resource guard on dense realizations.
pub const MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    /// `Some(0 | 1 | 2)` for X, Y, Z.
    pub fn axis(self) -> Option<usize> {
        match self {
            Pauli::I => None,
            Pauli::X => Some(0),
            Pauli::Y => Some(1),
            Pauli::Z => Some(2),
        }
    }

    /// Row-major 2×2 matrix.
    pub fn matrix(self) -> [C64; 4] {
        match self {
            Pauli::I => [ONE, ZERO, ZERO, ONE],
            Pauli::X => [ZERO, ONE, ONE, ZERO],
            Pauli::Y => [ZERO, -I, I, ZERO],
            Pauli::Z => [ONE, ZERO, ZERO, -ONE],
        }
    }

    pub fn label(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_label(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub sites: Vec<Pauli>,
    pub weight: f64,
}

impl PauliString {
    pub fn new(sites: Vec<Pauli>, weight: f64) -> Self {
        Self { sites, weight }
    }

    /// Bare string with unit weight.
    pub fn bare(sites: Vec<Pauli>) -> Self {
        Self { sites, weight: 1.0 }
    }

    /// String normalized so that `Tr[P²] = 1`.
    pub fn orthonormal(sites: Vec<Pauli>) -> Self {
        let w = libm::pow(2.0, -(sites.len() as f64) / 2.0);
        Self { sites, weight: w }
    }

    /// Single-site operator `p` on site `k` of an `n`-qubit register.
    pub fn single(n: usize, k: usize, p: Pauli) -> Self {
        let mut sites = alloc::vec![Pauli::I; n];
        sites[k] = p;
        Self::bare(sites)
    }

    /// Two-site operator `p ⊗ q` on sites `j`, `k`.
    pub fn pair(n: usize, j: usize, p: Pauli, k: usize, q: Pauli) -> Self {
        let mut sites = alloc::vec![Pauli::I; n];
        sites[j] = p;
        sites[k] = q;
        Self::bare(sites)
    }

    pub fn n_qubits(&self) -> usize {
        self.sites.len()
    }

    pub fn is_identity(&self) -> bool {
        self.sites.iter().all(|&p| p == Pauli::I)
    }

    pub fn label(&self) -> String {
        self.sites.iter().map(|p| p.label()).collect()
    }

    /// `Tr[P²]` of the realized matrix.
    pub fn trace_square(&self) -> f64 {
        self.weight * self.weight * libm::pow(2.0, self.sites.len() as f64)
    }

    /// Entry `(row, col)` of the realized matrix, computed site by site.
    pub fn entry(&self, row: usize, col: usize) -> C64 {
        let n = self.sites.len();
        let mut acc = C64::new(self.weight, 0.0);
        for (k, p) in self.sites.iter().enumerate() {
            let shift = n - 1 - k;
            let r = (row >> shift) & 1;
            let c = (col >> shift) & 1;
            acc *= p.matrix()[2 * r + c];
            if acc == ZERO {
                break;
            }
        }
        acc
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weight != 1.0 {
            write!(f, "{}·", self.weight)?;
        }
        for p in &self.sites {
            write!(f, "{}", p.label())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let sites = s
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| {
                Pauli::from_label(c).ok_or_else(|| Error::InvalidArgument(alloc::format!("bad Pauli label {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if sites.is_empty() {
            return Err(Error::InvalidArgument("empty Pauli string".into()));
        }
        Ok(PauliString::bare(sites))
    }
}

impl PauliString {
    /// Bit mask of sites carrying X or Y, in row-index bit order.
    pub fn flip_mask(&self) -> usize {
        let n = self.sites.len();
        self.sites
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Pauli::X | Pauli::Y))
            .fold(0, |m, (k, _)| m | 1 << (n - 1 - k))
    }

    /// `op += coeff · P` without realizing `P`.
    pub fn add_to(&self, op: &mut DenseOperator, coeff: C64) {
        let mask = self.flip_mask();
        for row in 0..op.dim() {
            let col = row ^ mask;
            let v = op.get(row, col) + coeff * self.entry(row, col);
            op.set(row, col, v);
        }
    }
}

/// Real linear combination of Pauli strings on a fixed register.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PauliSum {
    pub terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, coeff: f64, p: PauliString) {
        self.terms.push((coeff, p));
    }

    pub fn n_qubits(&self) -> Option<usize> {
        self.terms.first().map(|(_, p)| p.n_qubits())
    }

    /// Expands a Hermitian operator on bare strings, dropping `|h| ≤ tol`.
    pub fn decompose(op: &DenseOperator, tol: f64) -> Result<Self> {
        let n = op.n_qubits();
        let mut out = Self::new();
        for p in orthonormal_basis(n)? {
            let bare = PauliString::bare(p.sites);
            let h = coefficient(&bare, op)?;
            if h.norm() > tol {
                out.push(h.re, bare);
            }
        }
        Ok(out)
    }

    pub fn to_dense(&self, n_qubits: usize) -> DenseOperator {
        let mut op = DenseOperator::zeros(1 << n_qubits);
        for (h, p) in &self.terms {
            p.add_to(&mut op, C64::new(*h, 0.0));
        }
        op
    }

    /// Accumulates `Σ h · U P U†` into `op`, where `U` applies the same
    /// single-qubit frame on every site in `driven` and
    /// `U σ_α U† = Σ_β r[β][α] σ_β`.
    pub fn add_rotated_to(&self, op: &mut DenseOperator, driven: &[usize], r: &[[f64; 3]; 3]) {
        let mut scratch = Vec::new();
        for (h, p) in &self.terms {
            scratch.clear();
            scratch.push((*h, p.clone()));
            for &k in driven {
                let Some(alpha) = p.sites[k].axis() else { continue };
                let mut next = Vec::with_capacity(scratch.len() * 3);
                for (c, q) in scratch.drain(..) {
                    for beta in 0..3 {
                        let w = c * r[beta][alpha];
                        if w != 0.0 {
                            let mut q2 = q.clone();
                            q2.sites[k] = Pauli::ALL[beta + 1];
                            next.push((w, q2));
                        }
                    }
                }
                scratch = next;
            }
            for (c, q) in &scratch {
                q.add_to(op, C64::new(*c, 0.0));
            }
        }
    }
}

/// Dense matrix of `p` on an `n_qubits` register.
pub fn realize(p: &PauliString, n_qubits: usize) -> Result<DenseOperator> {
    if n_qubits == 0 || p.sites.len() != n_qubits {
        return Err(Error::DimensionMismatch { expected: n_qubits, found: p.sites.len() });
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits(n_qubits));
    }
    let dim = 1usize << n_qubits;
    let mut out = DenseOperator::zeros(dim);
    // Each Pauli string is a weighted permutation matrix: one nonzero per row.
    for row in 0..dim {
        let mut col = row;
        for (k, p) in p.sites.iter().enumerate() {
            if matches!(p, Pauli::X | Pauli::Y) {
                col ^= 1 << (n_qubits - 1 - k);
            }
        }
        out.set(row, col, p.entry(row, col));
    }
    Ok(out)
}

/// All `4^n` strings in lexicographic order (I < X < Y < Z, site 0 most
/// significant), orthonormally weighted. Includes the identity string.
pub fn orthonormal_basis(n_qubits: usize) -> Result<Vec<PauliString>> {
    if n_qubits == 0 {
        return Err(Error::InvalidArgument("basis needs at least one qubit".into()));
    }
    if n_qubits > MAX_QUBITS {
        return Err(Error::TooManyQubits(n_qubits));
    }
    let count = 1usize << (2 * n_qubits);
    Ok((0..count)
        .map(|idx| {
            let sites = (0..n_qubits).map(|k| Pauli::ALL[(idx >> (2 * (n_qubits - 1 - k))) & 3]).collect();
            PauliString::orthonormal(sites)
        })
        .collect())
}

/// `AB − BA`
pub fn commutator(a: &DenseOperator, b: &DenseOperator) -> Result<DenseOperator> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(&(a * b) - &(b * a))
}

/// `U A U†`, rejecting non-unitary `U`.
pub fn adjoint_action(u: &DenseOperator, a: &DenseOperator) -> Result<DenseOperator> {
    if u.dim() != a.dim() {
        return Err(Error::DimensionMismatch { expected: u.dim(), found: a.dim() });
    }
    let defect = u.unitarity_defect();
    if defect > 1e-10 {
        return Err(Error::NotUnitary(defect));
    }
    Ok(&(u * a) * &u.adjoint())
}

/// Expansion coefficient of `op` along `p`: `Tr[P op] / Tr[P²]`.
pub fn coefficient(p: &PauliString, op: &DenseOperator) -> Result<C64> {
    let n = op.n_qubits();
    if p.sites.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: p.sites.len() });
    }
    let dim = op.dim();
    let mut acc = ZERO;
    for row in 0..dim {
        let mut col = row;
        for (k, s) in p.sites.iter().enumerate() {
            if matches!(s, Pauli::X | Pauli::Y) {
                col ^= 1 << (n - 1 - k);
            }
        }
        acc += p.entry(row, col) * op.get(col, row);
    }
    Ok(acc / p.trace_square())
}
