use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{QsdcError, Result};

/// A complex amplitude (`re`, `im` in double precision).
pub type Amplitude = Complex64;

/// Tolerance for algebraic identities on amplitudes and matrices.
pub const TOLERANCE: f64 = 1e-10;

/// `e^{2πi·k/d}` with `k` reduced mod `d` first, so equal exponents give
/// bit-identical phases.
pub fn root_of_unity(k: usize, d: usize) -> Amplitude {
    let k = k % d;
    if k == 0 {
        return Amplitude::new(1.0, 0.0);
    }
    Amplitude::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
}

fn check_amps(amps: &[Amplitude], what: &str) -> Result<()> {
    if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(QsdcError::domain(format!(
            "{what} has a non-finite amplitude"
        )));
    }
    let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if (norm - 1.0).abs() > TOLERANCE {
        return Err(QsdcError::domain(format!(
            "{what} is not normalized (squared norm {norm})"
        )));
    }
    Ok(())
}

fn renormalized(mut amps: Vec<Amplitude>) -> Vec<Amplitude> {
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm > 0.0 {
        for a in amps.iter_mut() {
            *a /= norm;
        }
    }
    amps
}

/// Largest entrywise distance between `a` and `b` after removing the global
/// phase that best aligns them.
fn phase_aligned_distance(a: &[Amplitude], b: &[Amplitude]) -> f64 {
    let overlap: Amplitude = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 {
        overlap / overlap.norm()
    } else {
        Amplitude::new(1.0, 0.0)
    };
    a.iter()
        .zip(b)
        .map(|(x, y)| (x * phase - y).norm())
        .fold(0.0, f64::max)
}

fn entrywise_distance(a: &[Amplitude], b: &[Amplitude]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Pure state of one d-level photon.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditState {
    dim: usize,
    amps: Vec<Amplitude>,
}

impl QuditState {
    /// Builds a state from amplitudes, rejecting non-normalized input.
    pub fn new(amps: Vec<Amplitude>) -> Result<Self> {
        if amps.is_empty() {
            return Err(QsdcError::domain("a qudit needs at least one level"));
        }
        check_amps(&amps, "qudit state")?;
        Ok(QuditState {
            dim: amps.len(),
            amps,
        })
    }

    /// Computational basis ket `|j⟩`.
    pub fn ket(dim: usize, j: usize) -> Result<Self> {
        if dim == 0 || j >= dim {
            return Err(QsdcError::domain(format!(
                "ket |{j}> out of range for d={dim}"
            )));
        }
        let mut amps = vec![Amplitude::new(0.0, 0.0); dim];
        amps[j] = Amplitude::new(1.0, 0.0);
        Ok(QuditState { dim, amps })
    }

    /// Normalizes an unnormalized, nonzero vector.
    pub(crate) fn from_unnormalized(amps: Vec<Amplitude>) -> Self {
        QuditState {
            dim: amps.len(),
            amps: renormalized(amps),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amps(&self) -> &[Amplitude] {
        &self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &QuditState) -> Amplitude {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Elementwise complex conjugate.
    pub fn conj(&self) -> QuditState {
        QuditState {
            dim: self.dim,
            amps: self.amps.iter().map(|a| a.conj()).collect(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn approx_eq(&self, other: &QuditState, tol: f64) -> bool {
        self.dim == other.dim && entrywise_distance(&self.amps, &other.amps) <= tol
    }

    /// Equality up to a global phase.
    pub fn same_ray(&self, other: &QuditState, tol: f64) -> bool {
        self.dim == other.dim && phase_aligned_distance(&self.amps, &other.amps) <= tol
    }
}

/// Pure joint state of photons A and B, indexed `j_A·d + j_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairState {
    dim: usize,
    amps: Vec<Amplitude>,
}

impl PairState {
    pub fn new(dim: usize, amps: Vec<Amplitude>) -> Result<Self> {
        if dim == 0 || amps.len() != dim * dim {
            return Err(QsdcError::domain(format!(
                "pair state for d={dim} needs {} amplitudes, got {}",
                dim * dim,
                amps.len()
            )));
        }
        check_amps(&amps, "pair state")?;
        Ok(PairState { dim, amps })
    }

    pub(crate) fn from_unnormalized(dim: usize, amps: Vec<Amplitude>) -> Self {
        PairState {
            dim,
            amps: renormalized(amps),
        }
    }

    /// `|a⟩_A ⊗ |b⟩_B`.
    pub fn product(a: &QuditState, b: &QuditState) -> Result<Self> {
        if a.dim != b.dim {
            return Err(QsdcError::domain(format!(
                "product of d={} and d={} photons",
                a.dim, b.dim
            )));
        }
        let amps = a
            .amps
            .iter()
            .flat_map(|x| b.amps.iter().map(move |y| x * y))
            .collect();
        Ok(PairState { dim: a.dim, amps })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn amps(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn amp(&self, ja: usize, jb: usize) -> Amplitude {
        self.amps[ja * self.dim + jb]
    }

    pub fn inner(&self, other: &PairState) -> Amplitude {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn approx_eq(&self, other: &PairState, tol: f64) -> bool {
        self.dim == other.dim && entrywise_distance(&self.amps, &other.amps) <= tol
    }

    pub fn same_ray(&self, other: &PairState, tol: f64) -> bool {
        self.dim == other.dim && phase_aligned_distance(&self.amps, &other.amps) <= tol
    }
}

/// The Bell state `|Ψ_nm⟩ = Σ_j e^{2πijn/d}/√d |j⟩_A |j+m⟩_B`.
pub fn make_bell_state(n: usize, m: usize, d: usize) -> Result<PairState> {
    if d < 2 {
        return Err(QsdcError::domain(format!(
            "Bell states need d >= 2, got {d}"
        )));
    }
    if n >= d || m >= d {
        return Err(QsdcError::domain(format!(
            "Bell index ({n},{m}) out of range for d={d}"
        )));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut amps = vec![Amplitude::new(0.0, 0.0); d * d];
    for j in 0..d {
        amps[j * d + (j + m) % d] = root_of_unity(j * n, d) * scale;
    }
    Ok(PairState { dim: d, amps })
}
