//! Exact coefficient calculus over a user-supplied stratification poset:
//! the triangular system tying vanishing-type invariants to local
//! trajectory-count multiplicities, the microlocal multiplicity transform,
//! the defect formula for the invariants themselves, the global Morse-count
//! formula, and the isolated-singularity substitution-chain identity.
//!
//! Everything here is integer arithmetic on user-supplied topological data;
//! no geometry is computed. All maps are keyed by stratum id.

use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use crate::polycore::Rat;

#[derive(Debug, Error)]
pub enum StratError {
    #[error("duplicate stratum id `{0}`")]
    DuplicateId(String),
    #[error("closure pair references unknown stratum `{0}`")]
    UnknownStratum(String),
    #[error(
        "closure relation must be strict: `{lower}` < `{upper}` needs dim {ldim} < dim {udim}"
    )]
    DimensionOrder {
        lower: String,
        upper: String,
        ldim: i64,
        udim: i64,
    },
    #[error("closure relation has a cycle through `{0}`")]
    Cycle(String),
    #[error("stratum dimension {dim} exceeds the ambient dimension {ambient}")]
    DimensionRange { dim: i64, ambient: i64 },
    #[error("missing value for stratum `{0}`")]
    MissingValue(String),
    #[error("missing link characteristic for pair `{lower}` < `{upper}`")]
    MissingLink { lower: String, upper: String },
    #[error("function domain is not a closed union of strata: `{missing}` lies below `{present}` but has no value")]
    NotClosedDomain { missing: String, present: String },
    #[error("closure pair `{lower}` < `{upper}` is inconsistent: a singular stratum's closure consists of singular strata with the same critical value")]
    InconsistentFiber { lower: String, upper: String },
}

/// One stratum: an id, its complex dimension, whether it is part of the
/// stratified singular set, and the critical value of the function on it
/// (singular strata sharing a critical value form one fiber group).
#[derive(Clone, Debug)]
pub struct Stratum {
    pub id: String,
    pub dim: i64,
    pub is_singular: bool,
    pub critical_value: Option<Rat>,
}

/// Finite poset of strata with strict closure relations `lower < upper`
/// meaning the lower stratum lies in the closure of the upper one.
#[derive(Clone, Debug)]
pub struct StratumPoset {
    strata: Vec<Stratum>,
    index: BTreeMap<String, usize>,
    /// Transitive closure of the declared relation, as index pairs.
    below: Vec<BTreeSet<usize>>,
    pub ambient_dim: i64,
}

impl StratumPoset {
    pub fn new(
        strata: Vec<Stratum>,
        closure_pairs: &[(String, String)],
        ambient_dim: i64,
    ) -> Result<StratumPoset, StratError> {
        let mut index = BTreeMap::new();
        for (i, s) in strata.iter().enumerate() {
            if index.insert(s.id.clone(), i).is_some() {
                return Err(StratError::DuplicateId(s.id.clone()));
            }
            if s.dim > ambient_dim || s.dim < 0 {
                return Err(StratError::DimensionRange {
                    dim: s.dim,
                    ambient: ambient_dim,
                });
            }
        }
        let n = strata.len();
        let mut up: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (lo, hi) in closure_pairs {
            let &li = index
                .get(lo)
                .ok_or_else(|| StratError::UnknownStratum(lo.clone()))?;
            let &hi_i = index
                .get(hi)
                .ok_or_else(|| StratError::UnknownStratum(hi.clone()))?;
            if strata[li].dim >= strata[hi_i].dim {
                return Err(StratError::DimensionOrder {
                    lower: lo.clone(),
                    upper: hi.clone(),
                    ldim: strata[li].dim,
                    udim: strata[hi_i].dim,
                });
            }
            // The function is constant on a singular stratum's closure, so
            // everything below it is singular with the same critical value.
            if strata[hi_i].is_singular
                && (!strata[li].is_singular
                    || strata[li].critical_value != strata[hi_i].critical_value)
            {
                return Err(StratError::InconsistentFiber {
                    lower: lo.clone(),
                    upper: hi.clone(),
                });
            }
            up[li].insert(hi_i);
        }
        // Transitive closure. Dimension strictness already rules out cycles;
        // the explicit check keeps garbage input loud.
        let mut below: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for v in 0..n {
            let mut seen = BTreeSet::new();
            let mut stack: Vec<usize> = up[v].iter().copied().collect();
            while let Some(s) = stack.pop() {
                if s == v {
                    return Err(StratError::Cycle(strata[v].id.clone()));
                }
                if seen.insert(s) {
                    stack.extend(up[s].iter().copied());
                }
            }
            below[v] = seen; // strata strictly above v (containing v in closure)
        }
        Ok(StratumPoset {
            strata,
            index,
            below,
            ambient_dim,
        })
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn get(&self, id: &str) -> Option<&Stratum> {
        self.index.get(id).map(|&i| &self.strata[i])
    }

    /// Ids of strata strictly above `id` (their closures contain it).
    pub fn above(&self, id: &str) -> Vec<&Stratum> {
        match self.index.get(id) {
            Some(&i) => self.below[i].iter().map(|&j| &self.strata[j]).collect(),
            None => Vec::new(),
        }
    }

    fn codim(&self, s: &Stratum) -> i64 {
        self.ambient_dim - s.dim
    }

    /// Singular strata grouped by critical value (ids, deterministic order).
    pub fn fiber_groups(&self) -> Vec<Vec<String>> {
        let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for s in &self.strata {
            if s.is_singular {
                let key = s
                    .critical_value
                    .as_ref()
                    .map(|c| c.to_string())
                    .unwrap_or_else(|| "0".to_string());
                groups.entry(key).or_default().push(s.id.clone());
            }
        }
        groups.into_values().collect()
    }
}

/// Per-stratum integer data feeding the coefficient calculus.
#[derive(Clone, Debug, Default)]
pub struct StratumData {
    /// Vanishing invariant per singular stratum.
    pub mu: BTreeMap<String, i64>,
    /// Compactly supported Euler characteristic of the link of `lower`
    /// inside the closure of `upper`, per closure pair.
    pub clk_chi: BTreeMap<(String, String), i64>,
    /// Euler characteristic of the stratum minus its slice by a generic
    /// hyperplane.
    pub chi_minus_hyperplane: BTreeMap<String, i64>,
    /// Local Euler obstruction values, for the defect formula.
    pub eu: BTreeMap<String, i64>,
}

fn sign_pow(e: i64) -> i64 {
    if e.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// Result of the triangular multiplicity solve: the multiplicities
/// themselves, the coefficient vector of the reassembled defining identity
/// (for audit), and any strata where the input forced a negative count.
#[derive(Clone, Debug)]
pub struct NvSolution {
    pub n: BTreeMap<String, i64>,
    /// Coefficient of each closure class in the reassembled identity:
    /// `(-1)^(codim V - 1) * n_V`.
    pub identity_coefficients: BTreeMap<String, i64>,
    /// Strata flagged as inconsistent input (negative multiplicity).
    pub negative: Vec<String>,
}

/// Multiplicities of the singular strata, fiber group by fiber group:
///
/// `n_V = (-1)^(codim V - 1) * ( mu_V - sum over upper singular strata S in
/// the same fiber of clk(V,S) * mu_S )`.
///
/// Computed through the microlocal transform, with which it agrees
/// identically.
pub fn solve_nv(poset: &StratumPoset, data: &StratumData) -> Result<NvSolution, StratError> {
    let dim_x = poset.ambient_dim;
    let mut n_out = BTreeMap::new();
    let mut coeffs = BTreeMap::new();
    let mut negative = Vec::new();
    for group in poset.fiber_groups() {
        // phi = (-1)^(dim X - 1) * (the invariant vector) on this fiber.
        let mut phi = BTreeMap::new();
        for id in &group {
            let mu = *data
                .mu
                .get(id)
                .ok_or_else(|| StratError::MissingValue(id.clone()))?;
            phi.insert(id.clone(), sign_pow(dim_x - 1) * mu);
        }
        let c = microlocal_multiplicities(poset, &phi, &data.clk_chi)?;
        for id in &group {
            let n_v = c[id];
            if n_v < 0 {
                negative.push(id.clone());
            }
            let codim = poset.codim(poset.get(id).expect("validated"));
            coeffs.insert(id.clone(), sign_pow(codim - 1) * n_v);
            n_out.insert(id.clone(), n_v);
        }
    }
    Ok(NvSolution {
        n: n_out,
        identity_coefficients: coeffs,
        negative,
    })
}

/// Microlocal multiplicity transform of a constructible-function value
/// vector `phi` supported on a closed union of strata:
///
/// `c_V(phi) = (-1)^(dim V) * ( phi(V) - sum over strata S above V in the
/// domain of clk(V,S) * phi(S) )`.
///
/// The diagonal coefficient is `(-1)^(dim V)`; each off-diagonal coefficient
/// carries the link characteristic of the pair. With this sign the transform
/// inverts consistently against the closure-class expansion, so the
/// triangular solve and the closed form agree on every input.
pub fn microlocal_multiplicities(
    poset: &StratumPoset,
    phi: &BTreeMap<String, i64>,
    clk_chi: &BTreeMap<(String, String), i64>,
) -> Result<BTreeMap<String, i64>, StratError> {
    // Domain must be closed: everything below a domain stratum has a value.
    for id in phi.keys() {
        if poset.get(id).is_none() {
            return Err(StratError::UnknownStratum(id.clone()));
        }
    }
    for s in poset.strata() {
        if phi.contains_key(&s.id) {
            continue;
        }
        for upper in poset.above(&s.id) {
            if phi.contains_key(&upper.id) {
                return Err(StratError::NotClosedDomain {
                    missing: s.id.clone(),
                    present: upper.id.clone(),
                });
            }
        }
    }
    let mut out = BTreeMap::new();
    for (id, &value) in phi {
        let stratum = poset.get(id).expect("checked");
        let mut acc = value;
        for upper in poset.above(id) {
            if let Some(&upper_phi) = phi.get(&upper.id) {
                let chi = *clk_chi
                    .get(&(id.clone(), upper.id.clone()))
                    .ok_or_else(|| StratError::MissingLink {
                        lower: id.clone(),
                        upper: upper.id.clone(),
                    })?;
                acc -= chi * upper_phi;
            }
        }
        out.insert(id.clone(), sign_pow(stratum.dim) * acc);
    }
    Ok(out)
}

/// Reassemble the invariant vector from solved multiplicities: the inverse
/// of [`solve_nv`], used as the exactness audit.
///
/// Writing `b_V = (-1)^(codim V - 1) n_V` for the closure-class coefficients
/// and `C` for the strictly upper-triangular matrix of link characteristics
/// over comparable pairs in a fiber, the solve computes `b = (I - C) mu`;
/// the audit expands `mu = (I + C + C^2 + ...) b` over chains and must
/// reproduce the input exactly.
pub fn audit_round_trip(
    poset: &StratumPoset,
    solution: &NvSolution,
    clk_chi: &BTreeMap<(String, String), i64>,
) -> Result<BTreeMap<String, i64>, StratError> {
    let mut mu_hat = BTreeMap::new();
    for group in poset.fiber_groups() {
        for id in &group {
            let b = |sid: &str| -> Result<i64, StratError> {
                solution
                    .identity_coefficients
                    .get(sid)
                    .copied()
                    .ok_or_else(|| StratError::MissingValue(sid.to_string()))
            };
            let mut total: i64 = b(id)?;
            // Depth-first over chains id < v1 < v2 < ... within the group,
            // each step being any comparable pair; dimensions strictly
            // increase, so chains are finite.
            let mut stack: Vec<(String, i64)> = vec![(id.clone(), 1)];
            while let Some((at, weight)) = stack.pop() {
                for upper in poset.above(&at) {
                    if !group.contains(&upper.id) {
                        continue;
                    }
                    let chi = *clk_chi
                        .get(&(at.clone(), upper.id.clone()))
                        .ok_or_else(|| StratError::MissingLink {
                            lower: at.clone(),
                            upper: upper.id.clone(),
                        })?;
                    let w = weight * chi;
                    total += w * b(&upper.id)?;
                    stack.push((upper.id.clone(), w));
                }
            }
            mu_hat.insert(id.clone(), total);
        }
    }
    Ok(mu_hat)
}

/// Defect formula: recover the invariant of each singular stratum from
/// nearby-fiber and nearby-slice Euler characteristics weighted by local
/// Euler obstructions:
///
/// `mu_V = sum over strata S above V of (chi_fiber(V,S) - chi_slice(V,S)) * eu(S)`.
#[derive(Clone, Debug, Default)]
pub struct NearbyChis {
    /// Pair (lower, upper) -> (chi of the nearby function fiber in S,
    /// chi of the nearby linear slice in S), both within a small ball.
    pub pairs: BTreeMap<(String, String), (i64, i64)>,
}

pub fn mu_from_defect(
    poset: &StratumPoset,
    data: &StratumData,
    nearby: &NearbyChis,
) -> Result<BTreeMap<String, i64>, StratError> {
    let mut out = BTreeMap::new();
    for v in poset.strata().iter().filter(|s| s.is_singular) {
        let mut acc = 0i64;
        for upper in poset.above(&v.id) {
            let &(chi_f, chi_l) = nearby
                .pairs
                .get(&(v.id.clone(), upper.id.clone()))
                .ok_or_else(|| StratError::MissingLink {
                    lower: v.id.clone(),
                    upper: upper.id.clone(),
                })?;
            let eu = *data
                .eu
                .get(&upper.id)
                .ok_or_else(|| StratError::MissingValue(upper.id.clone()))?;
            acc += (chi_f - chi_l) * eu;
        }
        out.insert(v.id.clone(), acc);
    }
    Ok(out)
}

/// Global Morse-count formula: with `m_infinity` trajectories escaping,
///
/// `count = m_infinity + (-1)^(dim X - 1) * sum over singular strata of
/// chi(V minus hyperplane slice) * mu_V`.
pub fn morse_count_formula(
    poset: &StratumPoset,
    data: &StratumData,
    m_infinity: i64,
) -> Result<i64, StratError> {
    let mut acc = 0i64;
    for group in poset.fiber_groups() {
        for id in &group {
            let mu = *data
                .mu
                .get(id)
                .ok_or_else(|| StratError::MissingValue(id.clone()))?;
            let chi = *data
                .chi_minus_hyperplane
                .get(id)
                .ok_or_else(|| StratError::MissingValue(id.clone()))?;
            acc += chi * mu;
        }
    }
    Ok(m_infinity + sign_pow(poset.ambient_dim - 1) * acc)
}

/// Audit trail of the isolated-singularity substitution chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SiersmaAudit {
    /// Value of the vanishing functor on the constant function at the point:
    /// reduced link characteristic plus the signed sphere count.
    pub phi_one: i64,
    /// Value of the correction term at the point: `chi(link) - 1`.
    pub alpha: i64,
    /// Vanishing functor applied to the correction: `-alpha`.
    pub phi_alpha: i64,
    /// The local multiplicity assembled from the chain.
    pub n_zero: i64,
}

/// Isolated-singularity identity: for ambient dimension `n`, reduced link
/// characteristic `clk_reduced_chi`, and sphere-summand count `k`, the
/// substitution chain
///
/// `phi_one = clk_reduced_chi + (-1)^(n-1) k`,
/// `alpha = clk_reduced_chi`,
/// `phi_alpha = -alpha`,
/// `n_zero = (-1)^(n-1) (phi_one + phi_alpha)`
///
/// collapses to `n_zero = k` identically; the audit carries every
/// intermediate value.
pub fn siersma_identity_check(n: i64, clk_reduced_chi: i64, k: i64) -> SiersmaAudit {
    let phi_one = clk_reduced_chi + sign_pow(n - 1) * k;
    let alpha = clk_reduced_chi;
    let phi_alpha = -alpha;
    let n_zero = sign_pow(n - 1) * (phi_one + phi_alpha);
    debug_assert_eq!(n_zero, k);
    SiersmaAudit {
        phi_one,
        alpha,
        phi_alpha,
        n_zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn point_poset(ambient_dim: i64) -> StratumPoset {
        StratumPoset::new(
            vec![Stratum {
                id: "P".into(),
                dim: 0,
                is_singular: true,
                critical_value: None,
            }],
            &[],
            ambient_dim,
        )
        .unwrap()
    }

    #[test]
    fn isolated_point_multiplicity() {
        // Single point stratum of full codimension: n_P = (-1)^(n-1) mu_P.
        for n in 1..=4i64 {
            let poset = point_poset(n);
            let mut data = StratumData::default();
            data.mu.insert("P".into(), 7);
            let sol = solve_nv(&poset, &data).unwrap();
            assert_eq!(sol.n["P"], sign_pow(n - 1) * 7);
        }
    }

    #[test]
    fn two_strata_direct_substitution() {
        // codim V = 2, mu_V = -3, chi = 2, mu_S = 1: n_V = (-1)(-3 - 2) = 5.
        let poset = StratumPoset::new(
            vec![
                Stratum {
                    id: "V".into(),
                    dim: 1,
                    is_singular: true,
                    critical_value: None,
                },
                Stratum {
                    id: "S".into(),
                    dim: 2,
                    is_singular: true,
                    critical_value: None,
                },
            ],
            &[("V".into(), "S".into())],
            3,
        )
        .unwrap();
        let mut data = StratumData::default();
        data.mu.insert("V".into(), -3);
        data.mu.insert("S".into(), 1);
        data.clk_chi.insert(("V".into(), "S".into()), 2);
        let sol = solve_nv(&poset, &data).unwrap();
        assert_eq!(sol.n["V"], 5);
    }

    #[test]
    fn smooth_isolated_parity_cancels() {
        // With the invariant carrying its parity sign, the multiplicity comes
        // out as the plain Milnor number for every ambient dimension.
        for n in [2i64, 3] {
            let poset = point_poset(n);
            let mut data = StratumData::default();
            data.mu.insert("P".into(), sign_pow(n - 1) * 4);
            let sol = solve_nv(&poset, &data).unwrap();
            assert_eq!(sol.n["P"], 4, "ambient dim {n}");
        }
    }

    #[test]
    fn microlocal_point_stratum() {
        let poset = point_poset(2);
        let mut phi = BTreeMap::new();
        phi.insert("P".to_string(), 9);
        let out = microlocal_multiplicities(&poset, &phi, &BTreeMap::new()).unwrap();
        assert_eq!(out["P"], 9);
    }

    #[test]
    fn microlocal_chain_cancellation() {
        // Chain of two strata with unit link characteristic and constant phi:
        // the bottom coefficient cancels, matching the transform that also
        // annihilates closure classes.
        let poset = StratumPoset::new(
            vec![
                Stratum {
                    id: "V".into(),
                    dim: 0,
                    is_singular: true,
                    critical_value: None,
                },
                Stratum {
                    id: "S".into(),
                    dim: 1,
                    is_singular: true,
                    critical_value: None,
                },
            ],
            &[("V".into(), "S".into())],
            2,
        )
        .unwrap();
        let mut clk = BTreeMap::new();
        clk.insert(("V".to_string(), "S".to_string()), 1i64);
        let mut phi = BTreeMap::new();
        phi.insert("V".to_string(), 1);
        phi.insert("S".to_string(), 1);
        let out = microlocal_multiplicities(&poset, &phi, &clk).unwrap();
        assert_eq!(out["V"], 0);
        assert_eq!(out["S"], -1);
    }

    #[test]
    fn microlocal_zero_function() {
        let poset = point_poset(3);
        let mut phi = BTreeMap::new();
        phi.insert("P".to_string(), 0);
        let out = microlocal_multiplicities(&poset, &phi, &BTreeMap::new()).unwrap();
        assert!(out.values().all(|&v| v == 0));
    }

    #[test]
    fn defect_formula_cases() {
        let poset = StratumPoset::new(
            vec![
                Stratum {
                    id: "O".into(),
                    dim: 0,
                    is_singular: true,
                    critical_value: None,
                },
                Stratum {
                    id: "R".into(),
                    dim: 2,
                    is_singular: false,
                    critical_value: None,
                },
            ],
            &[("O".into(), "R".into())],
            2,
        )
        .unwrap();
        let mut data = StratumData::default();
        data.eu.insert("R".into(), 1);

        // All differences zero.
        let mut nearby = NearbyChis::default();
        nearby.pairs.insert(("O".into(), "R".into()), (5, 5));
        assert_eq!(mu_from_defect(&poset, &data, &nearby).unwrap()["O"], 0);

        // Single upper stratum with difference d and unit obstruction.
        nearby.pairs.insert(("O".into(), "R".into()), (7, 4));
        assert_eq!(mu_from_defect(&poset, &data, &nearby).unwrap()["O"], 3);

        // Smooth-plane bookkeeping: for the cubic pair with Milnor number 4,
        // the nearby fiber has chi = 1 - 4 and the slice has chi = 1, so the
        // invariant is -4 and the solved multiplicity is +4.
        nearby.pairs.insert(("O".into(), "R".into()), (-3, 1));
        let mu = mu_from_defect(&poset, &data, &nearby).unwrap();
        assert_eq!(mu["O"], -4);
        let mut sdata = StratumData::default();
        sdata.mu.insert("O".into(), mu["O"]);
        let sol = solve_nv(&poset, &sdata).unwrap();
        assert_eq!(sol.n["O"], 4);
    }

    #[test]
    fn morse_count_examples() {
        // Two isolated critical points on a curve: counts add up to 3.
        let poset = StratumPoset::new(
            vec![
                Stratum {
                    id: "O".into(),
                    dim: 0,
                    is_singular: true,
                    critical_value: Some(crate::polycore::rat_int(0)),
                },
                Stratum {
                    id: "P".into(),
                    dim: 0,
                    is_singular: true,
                    critical_value: Some(crate::polycore::rat_int(4)),
                },
            ],
            &[],
            1,
        )
        .unwrap();
        let mut data = StratumData::default();
        data.mu.insert("O".into(), 2);
        data.mu.insert("P".into(), 1);
        data.chi_minus_hyperplane.insert("O".into(), 1);
        data.chi_minus_hyperplane.insert("P".into(), 1);
        assert_eq!(morse_count_formula(&poset, &data, 0).unwrap(), 3);

        // All invariants zero: the formula returns the escape count.
        let mut zero = StratumData::default();
        zero.mu.insert("O".into(), 0);
        zero.mu.insert("P".into(), 0);
        zero.chi_minus_hyperplane.insert("O".into(), 1);
        zero.chi_minus_hyperplane.insert("P".into(), 1);
        assert_eq!(morse_count_formula(&poset, &zero, 5).unwrap(), 5);

        // Smooth plane, single cusp-sum point with invariant -4 in even
        // ambient dimension: total count 4 with no escapes.
        let plane = point_poset(2);
        let mut pd = StratumData::default();
        pd.mu.insert("P".into(), -4);
        pd.chi_minus_hyperplane.insert("P".into(), 1);
        assert_eq!(morse_count_formula(&plane, &pd, 0).unwrap(), 4);
    }

    #[test]
    fn siersma_examples() {
        let a = siersma_identity_check(2, 0, 3);
        assert_eq!(a.n_zero, 3);
        assert_eq!(a.phi_one, -3);
        let b = siersma_identity_check(3, -2, 0);
        assert_eq!(b.n_zero, 0);
        assert_eq!(b.alpha, -2);
    }

    #[test]
    fn siersma_identity_holds_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.gen_range(1..8i64);
            let chi = rng.gen_range(-50..50i64);
            let k = rng.gen_range(-50..50i64);
            assert_eq!(siersma_identity_check(n, chi, k).n_zero, k);
        }
    }

    pub(super) fn random_poset(rng: &mut ChaCha8Rng) -> (StratumPoset, StratumData) {
        let count = rng.gen_range(1..=6usize);
        let ambient = rng.gen_range(1..=5i64);
        let mut strata = Vec::new();
        for i in 0..count {
            strata.push(Stratum {
                id: format!("s{i}"),
                dim: rng.gen_range(0..=ambient.min(3)),
                is_singular: true,
                critical_value: Some(crate::polycore::rat_int(rng.gen_range(0..2))),
            });
        }
        let mut pairs = Vec::new();
        let mut clk = BTreeMap::new();
        for i in 0..count {
            for j in 0..count {
                if i != j && strata[i].dim < strata[j].dim && rng.gen_bool(0.4) {
                    pairs.push((strata[i].id.clone(), strata[j].id.clone()));
                }
            }
        }
        // Critical values are constant along closures: give each connected
        // component of the comparability graph a single value.
        let mut comp: Vec<usize> = (0..count).collect();
        fn root(comp: &mut Vec<usize>, i: usize) -> usize {
            if comp[i] != i {
                let r = root(comp, comp[i]);
                comp[i] = r;
            }
            comp[i]
        }
        for (lo, hi) in &pairs {
            let li = strata.iter().position(|s| &s.id == lo).unwrap();
            let hi_i = strata.iter().position(|s| &s.id == hi).unwrap();
            let (a, b) = (root(&mut comp, li), root(&mut comp, hi_i));
            if a != b {
                comp[a] = b;
            }
        }
        for i in 0..count {
            let r = root(&mut comp, i);
            strata[i].critical_value = strata[r].critical_value.clone();
        }
        let poset = StratumPoset::new(strata.clone(), &pairs, ambient).unwrap();
        // Link data on every transitive pair.
        for s in poset.strata() {
            for upper in poset.above(&s.id) {
                clk.insert((s.id.clone(), upper.id.clone()), rng.gen_range(-5..=5i64));
            }
        }
        let mut data = StratumData::default();
        for s in poset.strata() {
            data.mu.insert(s.id.clone(), rng.gen_range(-9..=9i64));
            data.chi_minus_hyperplane
                .insert(s.id.clone(), rng.gen_range(-3..=3i64));
        }
        data.clk_chi = clk;
        (poset, data)
    }

    #[test]
    fn round_trip_on_random_posets() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..100 {
            let (poset, data) = random_poset(&mut rng);
            let sol = solve_nv(&poset, &data).unwrap();
            let mu_hat = audit_round_trip(&poset, &sol, &data.clk_chi).unwrap();
            for (id, &mu) in &data.mu {
                assert_eq!(mu_hat[id], mu, "round trip at {id}");
            }
        }
    }

    #[test]
    fn closed_form_matches_microlocal_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..100 {
            let (poset, data) = random_poset(&mut rng);
            let sol = solve_nv(&poset, &data).unwrap();
            // Closed form, written out directly.
            for group in poset.fiber_groups() {
                for id in &group {
                    let v = poset.get(id).unwrap();
                    let mut inner = data.mu[id];
                    for upper in poset.above(id) {
                        if group.contains(&upper.id) {
                            inner -=
                                data.clk_chi[&(id.clone(), upper.id.clone())] * data.mu[&upper.id];
                        }
                    }
                    let codim = poset.ambient_dim - v.dim;
                    let direct = sign_pow(codim - 1) * inner;
                    assert_eq!(sol.n[id], direct, "stratum {id}");
                }
            }
        }
    }

    #[test]
    fn solve_invariant_under_stratum_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (poset, data) = random_poset(&mut rng);
            // Rebuild the poset with strata listed in reverse.
            let mut rev: Vec<Stratum> = poset.strata().to_vec();
            rev.reverse();
            let mut pairs = Vec::new();
            for s in poset.strata() {
                for upper in poset.above(&s.id) {
                    pairs.push((s.id.clone(), upper.id.clone()));
                }
            }
            let poset2 = StratumPoset::new(rev, &pairs, poset.ambient_dim).unwrap();
            let a = solve_nv(&poset, &data).unwrap();
            let b = solve_nv(&poset2, &data).unwrap();
            assert_eq!(a.n, b.n);
        }
    }

    #[test]
    fn poset_validation_rejects_garbage() {
        let s = |id: &str, dim: i64| Stratum {
            id: id.into(),
            dim,
            is_singular: true,
            critical_value: None,
        };
        assert!(matches!(
            StratumPoset::new(vec![s("a", 0), s("a", 1)], &[], 2),
            Err(StratError::DuplicateId(_))
        ));
        assert!(matches!(
            StratumPoset::new(vec![s("a", 1), s("b", 1)], &[("a".into(), "b".into())], 2),
            Err(StratError::DimensionOrder { .. })
        ));
        assert!(matches!(
            StratumPoset::new(vec![s("a", 3)], &[], 2),
            Err(StratError::DimensionRange { .. })
        ));
        assert!(matches!(
            StratumPoset::new(vec![s("a", 0)], &[("a".into(), "z".into())], 2),
            Err(StratError::UnknownStratum(_))
        ));
    }

    #[test]
    fn missing_link_is_reported() {
        let poset = StratumPoset::new(
            vec![
                Stratum {
                    id: "V".into(),
                    dim: 0,
                    is_singular: true,
                    critical_value: None,
                },
                Stratum {
                    id: "S".into(),
                    dim: 1,
                    is_singular: true,
                    critical_value: None,
                },
            ],
            &[("V".into(), "S".into())],
            2,
        )
        .unwrap();
        let mut data = StratumData::default();
        data.mu.insert("V".into(), 1);
        data.mu.insert("S".into(), 1);
        assert!(matches!(
            solve_nv(&poset, &data),
            Err(StratError::MissingLink { .. })
        ));
    }
}
