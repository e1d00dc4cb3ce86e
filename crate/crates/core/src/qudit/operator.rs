use std::fmt;

use serde::{Deserialize, Serialize};

use super::state::{root_of_unity, Amplitude, PairState, QuditState, TOLERANCE};
use crate::error::{QsdcError, Result};

/// Index `(n, m)` of the operator `U_nm`.
///
/// The same pair names a Bell outcome, a message symbol and an encryption
/// key symbol. The index group is `Z_d × Z_d` under componentwise addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawIndex", into = "RawIndex")]
pub struct PauliIndex {
    n: usize,
    m: usize,
    dim: usize,
}

#[derive(Serialize, Deserialize)]
struct RawIndex {
    n: usize,
    m: usize,
    d: usize,
}

impl TryFrom<RawIndex> for PauliIndex {
    type Error = QsdcError;

    fn try_from(raw: RawIndex) -> Result<Self> {
        PauliIndex::new(raw.n, raw.m, raw.d)
    }
}

impl From<PauliIndex> for RawIndex {
    fn from(p: PauliIndex) -> Self {
        RawIndex {
            n: p.n,
            m: p.m,
            d: p.dim,
        }
    }
}

impl PauliIndex {
    pub fn new(n: usize, m: usize, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(QsdcError::domain(format!(
                "index dimension must be >= 2, got {dim}"
            )));
        }
        if n >= dim || m >= dim {
            return Err(QsdcError::domain(format!(
                "index ({n},{m}) out of range for d={dim}"
            )));
        }
        Ok(PauliIndex { n, m, dim })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        PauliIndex::new(0, 0, dim)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Position of this index among all `d²` indices (`n·d + m`).
    pub fn ordinal(&self) -> usize {
        self.n * self.dim + self.m
    }

    pub fn from_ordinal(k: usize, dim: usize) -> Result<Self> {
        if dim < 2 || k >= dim * dim {
            return Err(QsdcError::domain(format!(
                "ordinal {k} out of range for d={dim}"
            )));
        }
        PauliIndex::new(k / dim, k % dim, dim)
    }

    /// All `d²` indices in ordinal order.
    pub fn all(dim: usize) -> impl Iterator<Item = PauliIndex> {
        (0..dim * dim).map(move |k| PauliIndex {
            n: k / dim,
            m: k % dim,
            dim,
        })
    }

    fn same_dim(&self, other: &PauliIndex) -> Result<()> {
        if self.dim != other.dim {
            return Err(QsdcError::domain(format!(
                "index dimension mismatch: {} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }

    /// Componentwise sum mod d.
    pub fn add(&self, other: &PauliIndex) -> Result<PauliIndex> {
        self.same_dim(other)?;
        Ok(PauliIndex {
            n: (self.n + other.n) % self.dim,
            m: (self.m + other.m) % self.dim,
            dim: self.dim,
        })
    }

    /// Componentwise difference `self − other` mod d.
    pub fn sub(&self, other: &PauliIndex) -> Result<PauliIndex> {
        self.same_dim(other)?;
        let d = self.dim;
        Ok(PauliIndex {
            n: (self.n + d - other.n) % d,
            m: (self.m + d - other.m) % d,
            dim: d,
        })
    }

    /// Number of bits one symbol carries: `2·log₂ d`.
    pub fn bits_per_symbol(dim: usize) -> f64 {
        2.0 * (dim as f64).log2()
    }
}

impl fmt::Display for PauliIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U({},{})", self.n, self.m)
    }
}

/// Dense `d×d` unitary, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Unitary {
    dim: usize,
    entries: Vec<Amplitude>,
}

impl Unitary {
    /// Builds a unitary, checking `U·U† = I` entrywise.
    pub fn new(dim: usize, entries: Vec<Amplitude>) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(QsdcError::domain(format!(
                "a {dim}x{dim} matrix needs {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        if entries
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(QsdcError::domain("matrix has a non-finite entry"));
        }
        let u = Unitary { dim, entries };
        let err = u.unitarity_error();
        if err > TOLERANCE {
            return Err(QsdcError::domain(format!(
                "matrix is not unitary (max |UU†−I| = {err})"
            )));
        }
        Ok(u)
    }

    pub fn identity(dim: usize) -> Self {
        let mut entries = vec![Amplitude::new(0.0, 0.0); dim * dim];
        for j in 0..dim {
            entries[j * dim + j] = Amplitude::new(1.0, 0.0);
        }
        Unitary { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Amplitude {
        self.entries[row * self.dim + col]
    }

    pub fn entries(&self) -> &[Amplitude] {
        &self.entries
    }

    pub fn adjoint(&self) -> Unitary {
        let d = self.dim;
        let mut entries = vec![Amplitude::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                entries[c * d + r] = self.entries[r * d + c].conj();
            }
        }
        Unitary { dim: d, entries }
    }

    /// Matrix product `self · rhs` (apply `rhs` first).
    pub fn mul(&self, rhs: &Unitary) -> Result<Unitary> {
        if self.dim != rhs.dim {
            return Err(QsdcError::domain("matrix dimension mismatch"));
        }
        let d = self.dim;
        let mut entries = vec![Amplitude::new(0.0, 0.0); d * d];
        for r in 0..d {
            for c in 0..d {
                entries[r * d + c] = (0..d).map(|k| self.entry(r, k) * rhs.entry(k, c)).sum();
            }
        }
        Ok(Unitary { dim: d, entries })
    }

    /// Largest entry of `|U·U† − I|`.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..d {
            for c in 0..d {
                let v: Amplitude = (0..d)
                    .map(|k| self.entry(r, k) * self.entry(c, k).conj())
                    .sum();
                let want = if r == c { 1.0 } else { 0.0 };
                worst = worst.max((v - want).norm());
            }
        }
        worst
    }

    pub fn apply(&self, state: &QuditState) -> Result<QuditState> {
        if state.dim() != self.dim {
            return Err(QsdcError::domain(format!(
                "cannot apply a d={} operator to a d={} photon",
                self.dim,
                state.dim()
            )));
        }
        let d = self.dim;
        let amps = (0..d)
            .map(|r| (0..d).map(|c| self.entry(r, c) * state.amps()[c]).sum())
            .collect();
        Ok(QuditState::from_unnormalized(amps))
    }

    /// `Some(phase)` when `self = phase · other`.
    pub fn phase_relative_to(&self, other: &Unitary, tol: f64) -> Option<Amplitude> {
        if self.dim != other.dim {
            return None;
        }
        let (k, pivot) = other
            .entries
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
        if pivot.norm() < tol {
            return None;
        }
        let phase = self.entries[k] / pivot;
        let ok = self
            .entries
            .iter()
            .zip(&other.entries)
            .all(|(a, b)| (a - phase * b).norm() <= tol);
        ok.then_some(phase)
    }
}

/// `U_nm = Σ_j e^{2πijn/d} |j+m mod d⟩⟨j|`.
pub fn pauli_unitary(n: usize, m: usize, d: usize) -> Result<Unitary> {
    let idx = PauliIndex::new(n, m, d)?;
    Ok(pauli_unitary_of(&idx))
}

pub fn pauli_unitary_of(idx: &PauliIndex) -> Unitary {
    let d = idx.dim;
    let mut entries = vec![Amplitude::new(0.0, 0.0); d * d];
    for j in 0..d {
        entries[((j + idx.m) % d) * d + j] = root_of_unity(j * idx.n, d);
    }
    Unitary { dim: d, entries }
}

/// Generalized Hadamard, `H[k][j] = e^{2πijk/d}/√d`; column j is `|j⟩_x`.
pub fn hadamard_matrix(d: usize) -> Result<Unitary> {
    if d < 2 {
        return Err(QsdcError::domain(format!("Hadamard needs d >= 2, got {d}")));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut entries = Vec::with_capacity(d * d);
    for k in 0..d {
        for j in 0..d {
            entries.push(root_of_unity(j * k, d) * scale);
        }
    }
    Ok(Unitary { dim: d, entries })
}

/// Index and global phase of `U_second · U_first`.
///
/// `U_{n2 m2} U_{n1 m1} = e^{2πi·m1·n2/d} U_{n1+n2, m1+m2}`.
pub fn compose_indices(first: &PauliIndex, second: &PauliIndex) -> Result<(PauliIndex, Amplitude)> {
    let sum = first.add(second)?;
    Ok((sum, root_of_unity(first.m * second.n, first.dim)))
}

/// `(I ⊗ U)|pair⟩`.
pub fn apply_to_photon_b(pair: &PairState, u: &Unitary) -> Result<PairState> {
    let d = pair.dim();
    if u.dim() != d {
        return Err(QsdcError::domain(format!(
            "cannot apply a d={} operator to photon B of a d={d} pair",
            u.dim()
        )));
    }
    let mut amps = vec![Amplitude::new(0.0, 0.0); d * d];
    for ja in 0..d {
        for r in 0..d {
            amps[ja * d + r] = (0..d).map(|c| u.entry(r, c) * pair.amp(ja, c)).sum();
        }
    }
    Ok(PairState::from_unnormalized(d, amps))
}

/// `(U ⊗ I)|pair⟩`.
pub fn apply_to_photon_a(pair: &PairState, u: &Unitary) -> Result<PairState> {
    let d = pair.dim();
    if u.dim() != d {
        return Err(QsdcError::domain(format!(
            "cannot apply a d={} operator to photon A of a d={d} pair",
            u.dim()
        )));
    }
    let mut amps = vec![Amplitude::new(0.0, 0.0); d * d];
    for r in 0..d {
        for jb in 0..d {
            amps[r * d + jb] = (0..d).map(|c| u.entry(r, c) * pair.amp(c, jb)).sum();
        }
    }
    Ok(PairState::from_unnormalized(d, amps))
}
