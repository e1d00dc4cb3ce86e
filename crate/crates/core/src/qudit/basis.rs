use super::operator::{hadamard_matrix, Unitary};
use super::state::{make_bell_state, root_of_unity, Amplitude, PairState, QuditState, TOLERANCE};
use crate::error::{QsdcError, Result};

/// An orthonormal measuring basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    dim: usize,
    label: usize,
    vectors: Vec<QuditState>,
}

impl Basis {
    pub fn new(label: usize, vectors: Vec<QuditState>) -> Result<Self> {
        let dim = vectors.len();
        if dim == 0 {
            return Err(QsdcError::domain("a basis needs at least one vector"));
        }
        if let Some(v) = vectors.iter().find(|v| v.dim() != dim) {
            return Err(QsdcError::domain(format!(
                "basis of {dim} vectors contains a d={} vector",
                v.dim()
            )));
        }
        for (i, a) in vectors.iter().enumerate() {
            for b in &vectors[i + 1..] {
                let o = a.inner(b).norm();
                if o > TOLERANCE {
                    return Err(QsdcError::domain(format!(
                        "basis {label} is not orthogonal (overlap {o})"
                    )));
                }
            }
        }
        Ok(Basis {
            dim,
            label,
            vectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn vectors(&self) -> &[QuditState] {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> Option<&QuditState> {
        self.vectors.get(k)
    }
}

/// `M` pairwise mutually unbiased bases of one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    dim: usize,
    bases: Vec<Basis>,
}

impl BasisSet {
    pub fn new(bases: Vec<Basis>) -> Result<Self> {
        let dim = match bases.first() {
            Some(b) => b.dim(),
            None => return Err(QsdcError::domain("a basis set needs at least one basis")),
        };
        if bases.iter().any(|b| b.dim() != dim) {
            return Err(QsdcError::domain("bases of different dimensions"));
        }
        if bases.len() > dim + 1 {
            return Err(QsdcError::domain(format!(
                "at most {} unbiased bases exist for d={dim}, got {}",
                dim + 1,
                bases.len()
            )));
        }
        let set = BasisSet { dim, bases };
        let worst = set.max_unbiasedness_error();
        if worst > TOLERANCE {
            return Err(QsdcError::domain(format!(
                "bases are not mutually unbiased (max deviation {worst})"
            )));
        }
        Ok(set)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    pub fn get(&self, id: usize) -> Option<&Basis> {
        self.bases.get(id)
    }

    /// Largest `| |⟨a|b⟩|² − 1/d |` over vectors from distinct bases.
    pub fn max_unbiasedness_error(&self) -> f64 {
        let target = 1.0 / self.dim as f64;
        let mut worst: f64 = 0.0;
        for (i, a) in self.bases.iter().enumerate() {
            for b in &self.bases[i + 1..] {
                for u in a.vectors() {
                    for v in b.vectors() {
                        worst = worst.max((u.inner(v).norm_sqr() - target).abs());
                    }
                }
            }
        }
        worst
    }
}

fn computational_basis(d: usize) -> Basis {
    let vectors = (0..d)
        .map(|j| QuditState::ket(d, j).expect("j < d"))
        .collect();
    Basis {
        dim: d,
        label: 0,
        vectors,
    }
}

fn fourier_basis(d: usize) -> Result<Basis> {
    let h = hadamard_matrix(d)?;
    let vectors = (0..d)
        .map(|j| QuditState::from_unnormalized((0..d).map(|k| h.entry(k, j)).collect()))
        .collect();
    Basis::new(1, vectors)
}

/// `{(|0⟩+i|1⟩)/√2, (|0⟩−i|1⟩)/√2}`.
fn qubit_y_basis() -> Result<Basis> {
    let r = 1.0 / 2f64.sqrt();
    let plus = QuditState::new(vec![Amplitude::new(r, 0.0), Amplitude::new(0.0, r)])?;
    let minus = QuditState::new(vec![Amplitude::new(r, 0.0), Amplitude::new(0.0, -r)])?;
    Basis::new(2, vec![plus, minus])
}

/// Qutrit basis whose k-th vector is `(|0⟩+|1⟩+|2⟩)/√3` with the `|k⟩`
/// coefficient replaced by `phase`.
fn qutrit_phase_basis(label: usize, phase: Amplitude) -> Result<Basis> {
    let r = 1.0 / 3f64.sqrt();
    let vectors = (0..3)
        .map(|k| {
            let amps = (0..3)
                .map(|j| {
                    if j == k {
                        phase * r
                    } else {
                        Amplitude::new(r, 0.0)
                    }
                })
                .collect();
            QuditState::new(amps)
        })
        .collect::<Result<Vec<_>>>()?;
    Basis::new(label, vectors)
}

/// Largest number of bases `builtin_basis_set` provides for `d`.
pub fn max_builtin_bases(d: usize) -> usize {
    match d {
        2 => 3,
        3 => 4,
        _ => 2,
    }
}

/// The first `m` bases of the built-in list for dimension `d`.
///
/// Every `d` gets `[Z_d, X_d]`; `d=2` adds the Y basis and `d=3` adds the
/// two cyclic phase families with `e^{±2πi/3}` on one component.
pub fn builtin_basis_set(d: usize, m: usize) -> Result<BasisSet> {
    if d < 2 {
        return Err(QsdcError::domain(format!("d must be >= 2, got {d}")));
    }
    if m == 0 || m > max_builtin_bases(d) {
        return Err(QsdcError::Capability(format!(
            "no built-in set of {m} bases for d={d}; supported: M<=2 for any d>=2, M<=3 for d=2, M<=4 for d=3"
        )));
    }
    let mut bases = vec![computational_basis(d), fourier_basis(d)?];
    match d {
        2 => bases.push(qubit_y_basis()?),
        3 => {
            bases.push(qutrit_phase_basis(2, root_of_unity(1, 3))?);
            bases.push(qutrit_phase_basis(3, root_of_unity(2, 3))?);
        }
        _ => {}
    }
    bases.truncate(m);
    BasisSet::new(bases)
}

/// Joint outcome probabilities of measuring photon A of `Ψ_00` in `a` and
/// photon B in `b`, as `probs[ka][kb]`.
fn joint_outcome_probabilities(a: &Basis, b: &Basis) -> Result<Vec<Vec<f64>>> {
    let d = a.dim();
    if b.dim() != d {
        return Err(QsdcError::domain("basis dimension mismatch"));
    }
    let psi = make_bell_state(0, 0, d)?;
    let probs = a
        .vectors()
        .iter()
        .map(|u| {
            b.vectors()
                .iter()
                .map(|v| {
                    let prod = PairState::product(u, v).expect("same dim");
                    prod.inner(&psi).norm_sqr()
                })
                .collect()
        })
        .collect();
    Ok(probs)
}

/// Outcome bijection when A is measured in `a` and B in `b` on `Ψ_00`,
/// or `None` if the outcomes are not perfectly correlated.
pub fn cross_correlation_map(a: &Basis, b: &Basis) -> Result<Option<Vec<usize>>> {
    let probs = joint_outcome_probabilities(a, b)?;
    let d = a.dim();
    let target = 1.0 / d as f64;
    let mut map = Vec::with_capacity(d);
    let mut used = vec![false; d];
    for row in &probs {
        let mut hit = None;
        for (kb, &p) in row.iter().enumerate() {
            if (p - target).abs() <= TOLERANCE {
                if hit.is_some() {
                    return Ok(None);
                }
                hit = Some(kb);
            } else if p > TOLERANCE {
                return Ok(None);
            }
        }
        match hit {
            Some(kb) if !used[kb] => {
                used[kb] = true;
                map.push(kb);
            }
            _ => return Ok(None),
        }
    }
    Ok(Some(map))
}

/// Partner outcome expected when both photons of `Ψ_00` are measured in
/// `basis`, computed by expanding `Ψ_00` in the product basis.
pub fn correlation_map(basis: &Basis) -> Option<Vec<usize>> {
    cross_correlation_map(basis, basis).ok().flatten()
}

/// How the holder of photon B must measure to certify an announced result
/// on photon A.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrelationRule {
    /// Basis id in the same set to use on photon B.
    pub partner_basis: usize,
    /// `outcome_map[a]` is the B outcome certified by A outcome `a`.
    pub outcome_map: Vec<usize>,
}

/// One rule per basis of `set`, with partners drawn from `family` (a
/// superset whose first bases are `set`), preferring the basis itself.
/// Fails if some basis has no perfectly correlated partner in `family`.
pub fn correlation_rules(set: &BasisSet, family: &BasisSet) -> Result<Vec<CorrelationRule>> {
    let mut rules = Vec::with_capacity(set.len());
    for (i, a) in set.bases().iter().enumerate() {
        let order = std::iter::once(i).chain((0..family.len()).filter(|&j| j != i));
        let mut found = None;
        for j in order {
            let Some(b) = family.get(j) else { continue };
            if let Some(map) = cross_correlation_map(a, b)? {
                found = Some(CorrelationRule {
                    partner_basis: j,
                    outcome_map: map,
                });
                break;
            }
        }
        match found {
            Some(rule) => rules.push(rule),
            None => {
                return Err(QsdcError::config(
                    "m_bases",
                    format!("basis {i} has no correlated partner basis for Psi_00"),
                ))
            }
        }
    }
    Ok(rules)
}

/// The partner bases of `rules`, in rule order.
pub fn partner_set(family: &BasisSet, rules: &[CorrelationRule]) -> Result<BasisSet> {
    let bases = rules
        .iter()
        .map(|r| {
            family.get(r.partner_basis).cloned().ok_or_else(|| {
                QsdcError::domain(format!("partner basis {} not in family", r.partner_basis))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    BasisSet::new(bases)
}

/// `W = Σ_k |to_k⟩⟨from_k|`, taking vector k of `from` to vector k of `to`.
pub fn basis_change(from: &Basis, to: &Basis) -> Result<Unitary> {
    let d = from.dim();
    if to.dim() != d {
        return Err(QsdcError::domain("basis dimension mismatch"));
    }
    let mut entries = vec![Amplitude::new(0.0, 0.0); d * d];
    for (f, t) in from.vectors().iter().zip(to.vectors()) {
        for r in 0..d {
            for c in 0..d {
                entries[r * d + c] += t.amps()[r] * f.amps()[c].conj();
            }
        }
    }
    Unitary::new(d, entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qutrit_two_bases_match_explicit_vectors() {
        let set = builtin_basis_set(3, 2).unwrap();
        let r = 1.0 / 3f64.sqrt();
        let w = root_of_unity(1, 3);
        let x1 = QuditState::new(vec![Amplitude::new(r, 0.0), w * r, w.conj() * r]).unwrap();
        let x2 = QuditState::new(vec![Amplitude::new(r, 0.0), w.conj() * r, w * r]).unwrap();
        let x = &set.bases()[1];
        assert!(x.vectors()[1].approx_eq(&x1, TOLERANCE));
        assert!(x.vectors()[2].approx_eq(&x2, TOLERANCE));
        for j in 0..3 {
            assert!(set.bases()[0].vectors()[j].approx_eq(&QuditState::ket(3, j).unwrap(), 0.0));
        }
    }

    #[test]
    fn qutrit_four_bases_are_unbiased() {
        let set = builtin_basis_set(3, 4).unwrap();
        assert_eq!(set.len(), 4);
        assert!(set.max_unbiasedness_error() < TOLERANCE);
    }

    #[test]
    fn envelope() {
        assert!(builtin_basis_set(2, 3).is_ok());
        assert!(builtin_basis_set(7, 2).is_ok());
        assert!(matches!(
            builtin_basis_set(5, 3),
            Err(QsdcError::Capability(_))
        ));
        assert!(matches!(
            builtin_basis_set(2, 4),
            Err(QsdcError::Capability(_))
        ));
        assert!(matches!(
            builtin_basis_set(3, 0),
            Err(QsdcError::Capability(_))
        ));
        assert!(builtin_basis_set(1, 1).is_err());
    }

    #[test]
    fn correlation_maps() {
        let z = &builtin_basis_set(4, 1).unwrap().bases()[0].clone();
        assert_eq!(correlation_map(z), Some(vec![0, 1, 2, 3]));

        let x2 = builtin_basis_set(2, 2).unwrap().bases()[1].clone();
        assert_eq!(correlation_map(&x2), Some(vec![0, 1]));

        let x3 = builtin_basis_set(3, 2).unwrap().bases()[1].clone();
        assert_eq!(correlation_map(&x3), Some(vec![0, 2, 1]));

        let y = builtin_basis_set(2, 3).unwrap().bases()[2].clone();
        assert_eq!(correlation_map(&y), Some(vec![1, 0]));
    }

    #[test]
    fn qutrit_phase_bases_pair_with_each_other() {
        let set = builtin_basis_set(3, 4).unwrap();
        assert_eq!(correlation_map(&set.bases()[2]), None);
        assert_eq!(correlation_map(&set.bases()[3]), None);
        let rules = correlation_rules(&set, &set).unwrap();
        assert_eq!(rules[0].partner_basis, 0);
        assert_eq!(rules[1].partner_basis, 1);
        assert_eq!(rules[2].partner_basis, 3);
        assert_eq!(rules[3].partner_basis, 2);
        assert_eq!(rules[2].outcome_map, vec![0, 1, 2]);

        // With three bases the partner of basis 2 lies outside the set.
        let three = builtin_basis_set(3, 3).unwrap();
        let rules = correlation_rules(&three, &set).unwrap();
        assert_eq!(rules[2].partner_basis, 3);
        assert!(correlation_rules(&three, &three).is_err());
        let partners = partner_set(&set, &rules).unwrap();
        assert_eq!(partners.bases()[2].label(), set.bases()[3].label());
    }

    #[test]
    fn basis_change_maps_vectors() {
        let set = builtin_basis_set(3, 4).unwrap();
        let w = basis_change(&set.bases()[1], &set.bases()[3]).unwrap();
        for k in 0..3 {
            let out = w.apply(&set.bases()[1].vectors()[k]).unwrap();
            assert!(out.approx_eq(&set.bases()[3].vectors()[k], TOLERANCE));
        }
    }

    #[test]
    fn non_orthogonal_basis_rejected() {
        let a = QuditState::ket(2, 0).unwrap();
        assert!(Basis::new(0, vec![a.clone(), a]).is_err());
    }
}
