//! Exact dense linear algebra for registers of at most five qubits.
//!
//! Index convention: qubit 0 is the most significant bit of an amplitude
//! index. For a register labelled `(2, 4, a)` the amplitude of `|q2 q4 qa>`
//! lives at `4*q2 + 2*q4 + qa`.

use num_complex::Complex64;
use thiserror::Error;

/// Complex amplitude used throughout the simulator.
pub type Amplitude = Complex64;

/// Largest register the simulator accepts.
pub const MAX_QUBITS: usize = 5;

/// Tolerance used when tagging a state as normalized.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("register of {0} qubits exceeds the supported maximum of {MAX_QUBITS}")]
    Capacity(usize),
    #[error("amplitude count {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("qubit list {0:?} is not a set of distinct in-range qubits")]
    InvalidTargets(Vec<usize>),
    #[error("permutation {0:?} is not a bijection")]
    InvalidPermutation(Vec<usize>),
    #[error("cannot normalize a zero vector")]
    ZeroNorm,
    #[error("non-finite amplitude")]
    NonFinite,
}

/// A dense amplitude vector over `n_qubits` qubits.
///
/// The `normalized` tag is set when the vector was built with unit norm.
/// Projection residuals are carried untagged so branch weights remain
/// readable from their squared norm.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Amplitude>,
    normalized: bool,
}

impl StateVector {
    /// Builds a state and tags it normalized iff its norm is within
    /// [`NORM_TOLERANCE`] of one.
    pub fn new(amps: Vec<Amplitude>) -> Result<Self, StateError> {
        let n_qubits = qubits_for_len(amps.len())?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(StateError::NonFinite);
        }
        let normalized = (norm_sqr(&amps) - 1.0).abs() <= NORM_TOLERANCE;
        Ok(Self {
            n_qubits,
            amps,
            normalized,
        })
    }

    /// Builds a state explicitly tagged as unnormalized.
    pub fn unnormalized(amps: Vec<Amplitude>) -> Result<Self, StateError> {
        let mut s = Self::new(amps)?;
        s.normalized = false;
        Ok(s)
    }

    pub fn from_real(amps: &[f64]) -> Result<Self, StateError> {
        Self::new(amps.iter().map(|&x| Amplitude::new(x, 0.0)).collect())
    }

    /// Computational basis state `|index>` on `n_qubits` qubits.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self, StateError> {
        if n_qubits > MAX_QUBITS {
            return Err(StateError::Capacity(n_qubits));
        }
        let dim = 1 << n_qubits;
        if index >= dim {
            return Err(StateError::DimensionMismatch {
                expected: dim,
                found: index,
            });
        }
        let mut amps = vec![Amplitude::new(0.0, 0.0); dim];
        amps[index] = Amplitude::new(1.0, 0.0);
        Ok(Self {
            n_qubits,
            amps,
            normalized: true,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    /// Returns the unit vector along `self`.
    pub fn normalize(&self) -> Result<Self, StateError> {
        let n = self.norm_sqr().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(StateError::ZeroNorm);
        }
        Ok(Self {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().map(|a| a / n).collect(),
            normalized: true,
        })
    }

    /// Multiplies every amplitude by `factor`; the normalized tag survives
    /// only for unit-modulus factors.
    pub fn scale(&self, factor: Amplitude) -> Self {
        let amps: Vec<_> = self.amps.iter().map(|a| a * factor).collect();
        let normalized = self.normalized && (factor.norm() - 1.0).abs() <= NORM_TOLERANCE;
        Self {
            n_qubits: self.n_qubits,
            amps,
            normalized,
        }
    }

    /// Entrywise sum. The result is untagged.
    pub fn add(&self, other: &Self) -> Result<Self, StateError> {
        same_dim(self.dim(), other.dim())?;
        Ok(Self {
            n_qubits: self.n_qubits,
            amps: self.amps.iter().zip(&other.amps).map(|(x, y)| x + y).collect(),
            normalized: false,
        })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64, StateError> {
        same_dim(self.dim(), other.dim())?;
        Ok(max_abs_diff(&self.amps, &other.amps))
    }
}

fn qubits_for_len(len: usize) -> Result<usize, StateError> {
    if len == 0 || !len.is_power_of_two() {
        return Err(StateError::NotPowerOfTwo(len));
    }
    let n = len.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(StateError::Capacity(n));
    }
    Ok(n)
}

fn same_dim(expected: usize, found: usize) -> Result<(), StateError> {
    if expected != found {
        return Err(StateError::DimensionMismatch { expected, found });
    }
    Ok(())
}

fn norm_sqr(amps: &[Amplitude]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

pub fn max_abs_diff(x: &[Amplitude], y: &[Amplitude]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
}

/// Bit of `index` holding qubit `q` in an `n`-qubit register.
#[inline]
fn bit_of(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

fn check_targets(n: usize, targets: &[usize]) -> Result<(), StateError> {
    let mut seen = 0usize;
    for &t in targets {
        if t >= n || seen & (1 << t) != 0 {
            return Err(StateError::InvalidTargets(targets.to_vec()));
        }
        seen |= 1 << t;
    }
    Ok(())
}

/// Scatters the bits of `local` (MSB = `targets[0]`) into a full index.
fn scatter(n: usize, targets: &[usize], local: usize) -> usize {
    let k = targets.len();
    targets
        .iter()
        .enumerate()
        .filter(|(j, _)| local & (1 << (k - 1 - j)) != 0)
        .fold(0, |acc, (_, &q)| acc | bit_of(n, q))
}

/// `left ⊗ right`; `left` occupies the most significant qubits.
pub fn tensor(left: &StateVector, right: &StateVector) -> Result<StateVector, StateError> {
    let n = left.n_qubits + right.n_qubits;
    if n > MAX_QUBITS {
        return Err(StateError::Capacity(n));
    }
    let amps = left
        .amps
        .iter()
        .flat_map(|l| right.amps.iter().map(move |r| l * r))
        .collect();
    Ok(StateVector {
        n_qubits: n,
        amps,
        normalized: left.normalized && right.normalized,
    })
}

/// Relabels qubits: qubit `q` of the input becomes qubit `perm[q]` of the
/// output. Pure bit shuffling, so amplitudes are moved bit-exactly.
pub fn permute_qubits(state: &StateVector, perm: &[usize]) -> Result<StateVector, StateError> {
    let n = state.n_qubits;
    if perm.len() != n {
        return Err(StateError::InvalidPermutation(perm.to_vec()));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(StateError::InvalidPermutation(perm.to_vec()));
        }
        seen[p] = true;
    }
    let mut amps = vec![Amplitude::new(0.0, 0.0); state.dim()];
    for (i, a) in state.amps.iter().enumerate() {
        let j = (0..n)
            .filter(|&q| i & bit_of(n, q) != 0)
            .fold(0, |acc, q| acc | bit_of(n, perm[q]));
        amps[j] = *a;
    }
    Ok(StateVector {
        n_qubits: n,
        amps,
        normalized: state.normalized,
    })
}

/// Inverse of a qubit permutation in the convention of [`permute_qubits`].
pub fn invert_permutation(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (q, &p) in perm.iter().enumerate() {
        inv[p] = q;
    }
    inv
}

/// Applies `u` to the listed qubits. `targets[0]` maps to the most
/// significant bit of `u`'s row/column index.
pub fn apply_unitary(
    state: &StateVector,
    u: &UnitaryMatrix,
    targets: &[usize],
) -> Result<StateVector, StateError> {
    let n = state.n_qubits;
    check_targets(n, targets)?;
    same_dim(1 << targets.len(), u.dim)?;

    let mask = scatter(n, targets, u.dim - 1);
    let offsets: Vec<usize> = (0..u.dim).map(|c| scatter(n, targets, c)).collect();
    let mut amps = vec![Amplitude::new(0.0, 0.0); state.dim()];
    for base in (0..state.dim()).filter(|i| i & mask == 0) {
        for (r, &row_off) in offsets.iter().enumerate() {
            amps[base | row_off] = offsets
                .iter()
                .enumerate()
                .map(|(c, &col_off)| u.get(r, c) * state.amps[base | col_off])
                .sum();
        }
    }
    Ok(StateVector {
        n_qubits: n,
        amps,
        normalized: state.normalized,
    })
}

/// Partial inner product `<bra|_targets |state>`.
///
/// The residual lives on the remaining qubits in their original order and
/// is left unnormalized; its squared norm is the outcome probability.
pub fn project_subsystem(
    state: &StateVector,
    bra: &StateVector,
    targets: &[usize],
) -> Result<(StateVector, f64), StateError> {
    let n = state.n_qubits;
    check_targets(n, targets)?;
    same_dim(1 << targets.len(), bra.dim())?;

    let rest: Vec<usize> = (0..n).filter(|q| !targets.contains(q)).collect();
    let offsets: Vec<usize> = (0..bra.dim()).map(|c| scatter(n, targets, c)).collect();
    let amps: Vec<Amplitude> = (0..1usize << rest.len())
        .map(|j| {
            let base = scatter(n, &rest, j);
            bra.amps
                .iter()
                .zip(&offsets)
                .map(|(b, &off)| b.conj() * state.amps[base | off])
                .sum()
        })
        .collect();
    let probability = norm_sqr(&amps);
    Ok((
        StateVector {
            n_qubits: rest.len(),
            amps,
            normalized: false,
        },
        probability,
    ))
}

/// `<x|y>`.
pub fn inner(x: &StateVector, y: &StateVector) -> Result<Amplitude, StateError> {
    same_dim(x.dim(), y.dim())?;
    Ok(x.amps.iter().zip(&y.amps).map(|(a, b)| a.conj() * b).sum())
}

/// `|<x|y>|^2`, blind to global phase on either side.
pub fn fidelity_up_to_phase(x: &StateVector, y: &StateVector) -> Result<f64, StateError> {
    Ok(inner(x, y)?.norm_sqr())
}

/// Square complex matrix of power-of-two dimension, row-major.
///
/// Construction does not enforce unitarity; use [`check_unitary`].
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    dim: usize,
    entries: Vec<Amplitude>,
}

impl UnitaryMatrix {
    pub fn new(dim: usize, entries: Vec<Amplitude>) -> Result<Self, StateError> {
        qubits_for_len(dim)?;
        same_dim(dim * dim, entries.len())?;
        Ok(Self { dim, entries })
    }

    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self, StateError> {
        Self::new(dim, entries.iter().map(|&x| Amplitude::new(x, 0.0)).collect())
    }

    pub fn identity(dim: usize) -> Result<Self, StateError> {
        let mut entries = vec![Amplitude::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            entries[i * dim + i] = Amplitude::new(1.0, 0.0);
        }
        Self::new(dim, entries)
    }

    /// Block-diagonal real matrix built from 2x2 blocks, first block at
    /// the top left.
    pub fn block_diagonal(blocks: &[[[f64; 2]; 2]]) -> Result<Self, StateError> {
        let dim = 2 * blocks.len();
        let mut entries = vec![0.0; dim * dim];
        for (k, block) in blocks.iter().enumerate() {
            for r in 0..2 {
                for c in 0..2 {
                    entries[(2 * k + r) * dim + 2 * k + c] = block[r][c];
                }
            }
        }
        Self::from_real(dim, &entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Amplitude {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Amplitude] {
        &self.entries
    }

    /// Kronecker product; `self` acts on the more significant qubits.
    pub fn kron(&self, other: &Self) -> Self {
        let dim = self.dim * other.dim;
        let mut entries = vec![Amplitude::new(0.0, 0.0); dim * dim];
        for r1 in 0..self.dim {
            for c1 in 0..self.dim {
                let s = self.get(r1, c1);
                for r2 in 0..other.dim {
                    for c2 in 0..other.dim {
                        entries[(r1 * other.dim + r2) * dim + c1 * other.dim + c2] =
                            s * other.get(r2, c2);
                    }
                }
            }
        }
        Self { dim, entries }
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let entries = (0..d * d).map(|i| self.get(i % d, i / d).conj()).collect();
        Self { dim: d, entries }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self, StateError> {
        same_dim(self.dim, other.dim)?;
        let d = self.dim;
        let entries = (0..d * d)
            .map(|i| {
                let (r, c) = (i / d, i % d);
                (0..d).map(|k| self.get(r, k) * other.get(k, c)).sum()
            })
            .collect();
        Ok(Self { dim: d, entries })
    }

    pub fn scale(&self, factor: Amplitude) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }
}

/// True iff `max |(U†U − I)_{ij}| <= tol`.
pub fn check_unitary(u: &UnitaryMatrix, tol: f64) -> bool {
    let d = u.dim;
    (0..d).all(|r| {
        (0..d).all(|c| {
            let dot: Amplitude = (0..d).map(|k| u.get(k, r).conj() * u.get(k, c)).sum();
            let expect = if r == c { 1.0 } else { 0.0 };
            (dot - expect).norm() <= tol
        })
    })
}
