use serde::{Deserialize, Serialize};

use super::basis::Basis;
use super::operator::PauliIndex;
use super::state::{make_bell_state, Amplitude, PairState, QuditState};
use crate::error::{QsdcError, Result};
use crate::rng::RandomStream;

/// Which photon of a pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairSide {
    A,
    B,
}

/// Draws an index from `probs` (assumed to sum to ~1).
pub(crate) fn sample_index(probs: &[f64], rng: &mut RandomStream) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.unit() * total;
    let mut acc = 0.0;
    let mut last_nonzero = 0;
    for (k, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            last_nonzero = k;
        }
        acc += p;
        if u < acc {
            return k;
        }
    }
    last_nonzero
}

fn check_dim(basis: &Basis, dim: usize) -> Result<()> {
    if basis.dim() != dim {
        return Err(QsdcError::domain(format!(
            "d={} basis used on a d={dim} photon",
            basis.dim()
        )));
    }
    Ok(())
}

/// Born probabilities `|⟨basis_k|state⟩|²`.
pub fn born_probabilities(state: &QuditState, basis: &Basis) -> Result<Vec<f64>> {
    check_dim(basis, state.dim())?;
    Ok(basis
        .vectors()
        .iter()
        .map(|v| v.inner(state).norm_sqr())
        .collect())
}

/// Projective measurement of one photon; the state collapses onto the
/// observed basis vector.
pub fn measure_single(
    state: &QuditState,
    basis: &Basis,
    rng: &mut RandomStream,
) -> Result<(usize, QuditState)> {
    let probs = born_probabilities(state, basis)?;
    let k = sample_index(&probs, rng);
    Ok((k, basis.vectors()[k].clone()))
}

/// Result of measuring one photon of a pair.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalOutcome {
    pub outcome: usize,
    /// Post-measurement state of the measured photon (the basis vector).
    pub measured: QuditState,
    /// Conditional state of the other photon.
    pub partner: QuditState,
}

/// Unnormalized conditional partner states, one per outcome.
fn partner_branches(pair: &PairState, side: PairSide, basis: &Basis) -> Vec<Vec<Amplitude>> {
    let d = pair.dim();
    basis
        .vectors()
        .iter()
        .map(|v| {
            (0..d)
                .map(|other| {
                    (0..d)
                        .map(|own| {
                            let amp = match side {
                                PairSide::A => pair.amp(own, other),
                                PairSide::B => pair.amp(other, own),
                            };
                            v.amps()[own].conj() * amp
                        })
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Measures one photon of `pair` in `basis`; the other photon is left in its
/// conditional state.
pub fn measure_pair_local(
    pair: &PairState,
    side: PairSide,
    basis: &Basis,
    rng: &mut RandomStream,
) -> Result<LocalOutcome> {
    check_dim(basis, pair.dim())?;
    let branches = partner_branches(pair, side, basis);
    let probs: Vec<f64> = branches
        .iter()
        .map(|b| b.iter().map(|a| a.norm_sqr()).sum())
        .collect();
    let k = sample_index(&probs, rng);
    let partner = QuditState::from_unnormalized(branches[k].clone());
    Ok(LocalOutcome {
        outcome: k,
        measured: basis.vectors()[k].clone(),
        partner,
    })
}

/// `(Ψ_nm, |⟨Ψ_nm|pair⟩|²)` for every Bell index, in ordinal order.
pub fn bell_distribution(pair: &PairState) -> Result<Vec<(PauliIndex, f64)>> {
    let d = pair.dim();
    PauliIndex::all(d)
        .map(|idx| {
            let bell = make_bell_state(idx.n(), idx.m(), d)?;
            Ok((idx, bell.inner(pair).norm_sqr()))
        })
        .collect()
}

/// Joint Bell-basis measurement.
pub fn bell_measure(pair: &PairState, rng: &mut RandomStream) -> Result<PauliIndex> {
    let dist = bell_distribution(pair)?;
    let probs: Vec<f64> = dist.iter().map(|(_, p)| *p).collect();
    Ok(dist[sample_index(&probs, rng)].0)
}

#[cfg(test)]
mod tests {
    use super::super::basis::builtin_basis_set;
    use super::super::state::TOLERANCE;
    use super::*;

    fn counts<F: FnMut(&mut RandomStream) -> usize>(
        k: usize,
        draws: usize,
        seed: u64,
        mut f: F,
    ) -> Vec<usize> {
        let mut rng = RandomStream::seeded(seed);
        let mut c = vec![0; k];
        for _ in 0..draws {
            c[f(&mut rng)] += 1;
        }
        c
    }

    fn within_3_sigma(count: usize, draws: usize, p: f64) -> bool {
        let mean = p * draws as f64;
        let sd = (draws as f64 * p * (1.0 - p)).sqrt();
        (count as f64 - mean).abs() <= 3.0 * sd + 1e-9
    }

    #[test]
    fn eigenstate_is_deterministic() {
        let set = builtin_basis_set(3, 2).unwrap();
        let mut rng = RandomStream::seeded(1);
        for _ in 0..100 {
            let (k, post) =
                measure_single(&QuditState::ket(3, 0).unwrap(), &set.bases()[0], &mut rng).unwrap();
            assert_eq!(k, 0);
            assert!(post.approx_eq(&QuditState::ket(3, 0).unwrap(), 0.0));
            let x1 = set.bases()[1].vectors()[1].clone();
            let (k, _) = measure_single(&x1, &set.bases()[1], &mut rng).unwrap();
            assert_eq!(k, 1);
        }
    }

    #[test]
    fn z_state_in_x_basis_is_uniform() {
        for d in [2, 3, 5] {
            let set = builtin_basis_set(d, 2).unwrap();
            let ket = QuditState::ket(d, 0).unwrap();
            let c = counts(d, 12_000, d as u64, |rng| {
                measure_single(&ket, &set.bases()[1], rng).unwrap().0
            });
            for &x in &c {
                assert!(within_3_sigma(x, 12_000, 1.0 / d as f64), "{c:?}");
            }
        }
    }

    #[test]
    fn local_measurement_on_bell_pair() {
        let set = builtin_basis_set(2, 2).unwrap();
        let psi = make_bell_state(0, 0, 2).unwrap();
        let mut zeros = 0;
        let mut rng = RandomStream::seeded(11);
        for _ in 0..10_000 {
            let out = measure_pair_local(&psi, PairSide::A, &set.bases()[0], &mut rng).unwrap();
            assert!(out
                .partner
                .approx_eq(&QuditState::ket(2, out.outcome).unwrap(), TOLERANCE));
            assert!((out.partner.norm_sqr() - 1.0).abs() < TOLERANCE);
            if out.outcome == 0 {
                zeros += 1;
            }
        }
        assert!(within_3_sigma(zeros, 10_000, 0.5));
    }

    #[test]
    fn x3_outcome_collapses_partner_to_negated_index() {
        let set = builtin_basis_set(3, 2).unwrap();
        let x = &set.bases()[1];
        let psi = make_bell_state(0, 0, 3).unwrap();
        let mut rng = RandomStream::seeded(5);
        let mut seen = [false; 3];
        for _ in 0..200 {
            let out = measure_pair_local(&psi, PairSide::A, x, &mut rng).unwrap();
            seen[out.outcome] = true;
            let want = &x.vectors()[(3 - out.outcome) % 3];
            assert!(out.partner.same_ray(want, TOLERANCE));
        }
        assert!(seen.iter().all(|s| *s));
    }

    #[test]
    fn z_outcomes_agree_on_both_halves() {
        let set = builtin_basis_set(4, 1).unwrap();
        let z = &set.bases()[0];
        let psi = make_bell_state(0, 0, 4).unwrap();
        let mut rng = RandomStream::seeded(8);
        for _ in 0..500 {
            let a = measure_pair_local(&psi, PairSide::A, z, &mut rng).unwrap();
            let (b, _) = measure_single(&a.partner, z, &mut rng).unwrap();
            assert_eq!(a.outcome, b);
        }
    }

    #[test]
    fn bell_state_measures_to_itself() {
        let mut rng = RandomStream::seeded(2);
        for d in 2..=5 {
            for idx in PauliIndex::all(d) {
                let psi = make_bell_state(idx.n(), idx.m(), d).unwrap();
                for _ in 0..5 {
                    assert_eq!(bell_measure(&psi, &mut rng).unwrap(), idx);
                }
            }
        }
    }

    // |00> = (1/√3) Σ_n Ψ_{n0}: ⟨Ψ_nm|00⟩ = δ_{m0}/√3.
    #[test]
    fn product_zero_zero_qutrit_bell_distribution() {
        let zz = PairState::product(
            &QuditState::ket(3, 0).unwrap(),
            &QuditState::ket(3, 0).unwrap(),
        )
        .unwrap();
        for (idx, p) in bell_distribution(&zz).unwrap() {
            let want = if idx.m() == 0 { 1.0 / 3.0 } else { 0.0 };
            assert!((p - want).abs() < TOLERANCE, "{idx}: {p}");
        }
    }

    // |+>|+> = (|00>+|01>+|10>+|11>)/2 = (Ψ_00 + Ψ_01)/√2.
    #[test]
    fn plus_plus_qubit_bell_distribution() {
        let set = builtin_basis_set(2, 2).unwrap();
        let plus = set.bases()[1].vectors()[0].clone();
        let pp = PairState::product(&plus, &plus).unwrap();
        let dist = bell_distribution(&pp).unwrap();
        let want = [0.5, 0.5, 0.0, 0.0];
        for ((_, p), w) in dist.iter().zip(want) {
            assert!((p - w).abs() < TOLERANCE);
        }
    }

    #[test]
    fn measuring_with_wrong_dimension_fails() {
        let set = builtin_basis_set(3, 1).unwrap();
        let mut rng = RandomStream::seeded(0);
        assert!(
            measure_single(&QuditState::ket(2, 0).unwrap(), &set.bases()[0], &mut rng).is_err()
        );
    }
}
