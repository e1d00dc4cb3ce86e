//! Built-in invariant suite.

use serde::Serialize;

use crate::protocol::{run_session, SessionConfig};
use crate::qudit::{
    apply_to_photon_b, builtin_basis_set, compose_indices, correlation_rules, hadamard_matrix,
    make_bell_state, max_builtin_bases, pauli_unitary_of, Amplitude, PauliIndex, QuditState,
};
use crate::stats::theoretical_eve_error_rate;

const TOL: f64 = 1e-10;

#[derive(Debug, Clone, Default)]
pub struct VerifyOptions {
    /// Test hook: added to `H_d[0][0]` before the Hadamard and
    /// unbiasedness checks.
    pub perturb_hadamard: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn result(name: &'static str, worst: f64, tol: f64, what: &str) -> PropertyResult {
    PropertyResult {
        name,
        passed: worst <= tol,
        detail: format!("{what}: worst deviation {worst:.3e} (tolerance {tol:.0e})"),
    }
}

/// Columns of `H_d`, possibly perturbed, as raw amplitude vectors.
fn hadamard_columns(d: usize, perturb: Option<f64>) -> Vec<Vec<Amplitude>> {
    let h = hadamard_matrix(d).expect("d >= 2");
    let mut entries = h.entries().to_vec();
    if let Some(eps) = perturb {
        entries[0] += Amplitude::new(eps, 0.0);
    }
    (0..d).map(|j| (0..d).map(|k| entries[k * d + j]).collect()).collect()
}

fn inner(a: &[Amplitude], b: &[Amplitude]) -> Amplitude {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn bell_identities() -> PropertyResult {
    let mut worst: f64 = 0.0;
    for d in 2..=5 {
        let psi = make_bell_state(0, 0, d).expect("d >= 2");
        for idx in PauliIndex::all(d) {
            let got = apply_to_photon_b(&psi, &pauli_unitary_of(&idx)).expect("same dim");
            let want = make_bell_state(idx.n(), idx.m(), d).expect("in range");
            for (g, w) in got.amps().iter().zip(want.amps()) {
                worst = worst.max((g - w).norm());
            }
        }
    }
    result("bell_identities", worst, TOL, "(I⊗U_nm)|Ψ_00⟩ = |Ψ_nm⟩, d ≤ 5")
}

fn hadamard_maps_to_fourier(perturb: Option<f64>) -> PropertyResult {
    let mut worst: f64 = 0.0;
    for d in 2..=7 {
        let cols = hadamard_columns(d, perturb);
        for (j, col) in cols.iter().enumerate() {
            // |j⟩_x = Σ_k ω^{jk}/√d |k⟩
            let want: Vec<Amplitude> = (0..d)
                .map(|k| crate::qudit::root_of_unity(j * k, d) / (d as f64).sqrt())
                .collect();
            for (g, w) in col.iter().zip(&want) {
                worst = worst.max((g - w).norm());
            }
        }
    }
    result("hadamard_fourier", worst, TOL, "H_d|j⟩ = |j⟩_x, d ≤ 7")
}

fn unbiasedness(perturb: Option<f64>) -> PropertyResult {
    let mut worst: f64 = 0.0;
    for d in 2..=7 {
        let set = builtin_basis_set(d, max_builtin_bases(d)).expect("built-in set");
        let mut bases: Vec<Vec<Vec<Amplitude>>> = set
            .bases()
            .iter()
            .map(|b| b.vectors().iter().map(|v| v.amps().to_vec()).collect())
            .collect();
        bases[1] = hadamard_columns(d, perturb);
        let target = 1.0 / d as f64;
        for (i, a) in bases.iter().enumerate() {
            for b in &bases[i + 1..] {
                for u in a {
                    for v in b {
                        worst = worst.max((inner(u, v).norm_sqr() - target).abs());
                    }
                }
            }
        }
    }
    result("mub_unbiasedness", worst, TOL, "|⟨a|b⟩|² = 1/d across built-in bases, d ≤ 7")
}

fn composition_oracle() -> PropertyResult {
    let mut worst: f64 = 0.0;
    for d in [2, 3, 5] {
        for first in PauliIndex::all(d) {
            for second in PauliIndex::all(d) {
                let (idx, phase) = compose_indices(&first, &second).expect("same dim");
                let product = pauli_unitary_of(&second)
                    .mul(&pauli_unitary_of(&first))
                    .expect("same dim");
                let predicted = pauli_unitary_of(&idx);
                for (p, q) in product.entries().iter().zip(predicted.entries()) {
                    worst = worst.max((p - phase * q).norm());
                }
            }
        }
    }
    result("composition_oracle", worst, TOL, "U_second·U_first = phase·U_(sum), d ∈ {2,3,5}")
}

fn partner_correlations() -> PropertyResult {
    let mut failures = Vec::new();
    for d in 2..=7 {
        let set = builtin_basis_set(d, max_builtin_bases(d)).expect("built-in set");
        if correlation_rules(&set, &set).is_err() {
            failures.push(d);
        }
    }
    PropertyResult {
        name: "partner_correlations",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "every built-in basis has a perfectly correlated partner on Ψ_00, d ≤ 7".into()
        } else {
            format!("no partner basis for d in {failures:?}")
        },
    }
}

fn formula_envelope() -> PropertyResult {
    let mut worst: f64 = 0.0;
    for d in 2..=9 {
        for m in 1..=d + 1 {
            let f = theoretical_eve_error_rate(d, m).expect("in range");
            let g = (m as f64 - 1.0) / m as f64 * (d as f64 - 1.0) / d as f64;
            worst = worst.max((f - g).abs());
        }
    }
    result("eve_formula", worst, 1e-12, "ε_e(d,M) = (M−1)/M·(d−1)/d, d ≤ 9")
}

fn honest_end_to_end() -> PropertyResult {
    let mut failures = Vec::new();
    for d in 2..=5 {
        for m in 1..=max_builtin_bases(d) {
            let c = SessionConfig::new(d, m, 96).with_seed((d * 10 + m) as u64);
            let ok = match run_session(&c) {
                Ok(r) => {
                    r.is_completed()
                        && r.decoded_message == r.sent_message()
                        && [r.error_rates.first_check, r.error_rates.decoy_check, r.error_rates.final_check]
                            .iter()
                            .all(|t| t.is_some_and(|t| t.errors == 0))
                }
                Err(_) => false,
            };
            if !ok {
                failures.push((d, m));
            }
        }
    }
    PropertyResult {
        name: "honest_end_to_end",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "honest sessions complete error-free with the message intact, d ≤ 5, every M".into()
        } else {
            format!("failed for (d, M) in {failures:?}")
        },
    }
}

fn states_normalised() -> PropertyResult {
    let mut worst: f64 = 0.0;
    for d in 2..=7 {
        for j in 0..d {
            let k = QuditState::ket(d, j).expect("j < d");
            worst = worst.max((k.norm_sqr() - 1.0).abs());
        }
        for n in 0..d {
            for m in 0..d {
                let b = make_bell_state(n, m, d).expect("in range");
                worst = worst.max((b.norm_sqr() - 1.0).abs());
            }
        }
    }
    result("normalisation", worst, TOL, "basis kets and Bell states have unit norm, d ≤ 7")
}

/// Runs every property and returns one result per property.
pub fn cmd_verify(opts: &VerifyOptions) -> Vec<PropertyResult> {
    vec![
        states_normalised(),
        bell_identities(),
        hadamard_maps_to_fourier(opts.perturb_hadamard),
        unbiasedness(opts.perturb_hadamard),
        composition_oracle(),
        partner_correlations(),
        formula_envelope(),
        honest_end_to_end(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pristine_build_passes() {
        for r in cmd_verify(&VerifyOptions::default()) {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn perturbed_hadamard_breaks_unbiasedness() {
        let out = cmd_verify(&VerifyOptions { perturb_hadamard: Some(1e-3) });
        let get = |n: &str| out.iter().find(|r| r.name == n).unwrap().passed;
        assert!(!get("mub_unbiasedness"));
        assert!(!get("hadamard_fourier"));
        assert!(get("bell_identities"));
    }
}
