//! Groebner-basis engine and ideal operations.
//!
//! Buchberger's algorithm with the normal pair-selection strategy and the
//! coprime/chain criteria, full reduction to the unique reduced basis, plus
//! the derived operations the geometric layer needs: normal forms, saturation
//! by an ideal, elimination of variables, Krull dimension, minor ideals, and
//! standard-monomial counting for zero-dimensional quotients.

use crate::polycore::{Monomial, PolyError, Polynomial, Rat, Ring};
use num::One;
use std::cmp::Ordering;
use std::collections::BTreeSet;
use thiserror::Error;

/// Limits for a single Buchberger run. Exceeding them is a reported error,
/// never a silent truncation.
#[derive(Clone, Debug)]
pub struct ResourceCaps {
    pub max_basis: usize,
    pub max_degree: u32,
}

impl Default for ResourceCaps {
    fn default() -> Self {
        ResourceCaps {
            max_basis: 5000,
            max_degree: 60,
        }
    }
}

#[derive(Debug, Error)]
pub enum IdealError {
    #[error("resource limit exceeded ({what}); partial basis of {partial} elements")]
    ResourceLimit { what: String, partial: usize },
    #[error("ideal has no Groebner basis attached")]
    MissingGroebner,
    #[error("minor size {r} out of range for a {rows}x{cols} matrix")]
    MinorsOutOfRange { r: usize, rows: usize, cols: usize },
    #[error("polynomials over different rings")]
    MixedRings,
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// Monomial order used for leading-term computations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MonomialOrder {
    GradedRevLex,
    Lexicographic,
    /// Elimination order: monomials are compared first by graded reverse lex
    /// restricted to the variables in `first_block`, then by graded reverse
    /// lex on the remaining variables. Any monomial involving a first-block
    /// variable sorts above every monomial that avoids the block.
    Block {
        first_block: BTreeSet<usize>,
    },
}

impl MonomialOrder {
    pub fn cmp(&self, a: &Monomial, b: &Monomial) -> Ordering {
        match self {
            MonomialOrder::GradedRevLex => a.cmp_grevlex(b),
            MonomialOrder::Lexicographic => {
                for i in 0..a.0.len() {
                    match a.0[i].cmp(&b.0[i]) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                }
                Ordering::Equal
            }
            MonomialOrder::Block { first_block } => {
                let proj = |m: &Monomial, inside: bool| -> Monomial {
                    Monomial(
                        m.0.iter()
                            .enumerate()
                            .map(|(i, &e)| {
                                if first_block.contains(&i) == inside {
                                    e
                                } else {
                                    0
                                }
                            })
                            .collect(),
                    )
                };
                match proj(a, true).cmp_grevlex(&proj(b, true)) {
                    Ordering::Equal => proj(a, false).cmp_grevlex(&proj(b, false)),
                    o => o,
                }
            }
        }
    }
}

/// A finite generating set, optionally carrying the reduced Groebner basis
/// that certifies it.
///
/// The empty generator list denotes the zero ideal (all of affine space);
/// this is how the full ambient space enters the geometric layer.
#[derive(Clone, Debug)]
pub struct IdealBasis {
    ring: Ring,
    generators: Vec<Polynomial>,
    groebner: Option<(Vec<Polynomial>, MonomialOrder)>,
}

impl IdealBasis {
    pub fn new(ring: &Ring, generators: Vec<Polynomial>) -> IdealBasis {
        let generators: Vec<_> = generators.into_iter().filter(|g| !g.is_zero()).collect();
        assert!(generators.iter().all(|g| g.ring() == ring), "mixed rings");
        IdealBasis {
            ring: ring.clone(),
            generators,
            groebner: None,
        }
    }

    /// The zero ideal: defines the whole ambient space.
    pub fn zero_ideal(ring: &Ring) -> IdealBasis {
        let mut i = IdealBasis::new(ring, Vec::new());
        i.groebner = Some((Vec::new(), MonomialOrder::GradedRevLex));
        i
    }

    pub fn unit_ideal(ring: &Ring) -> IdealBasis {
        let mut i = IdealBasis::new(ring, vec![Polynomial::one(ring)]);
        i.groebner = Some((vec![Polynomial::one(ring)], MonomialOrder::GradedRevLex));
        i
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn generators(&self) -> &[Polynomial] {
        &self.generators
    }

    pub fn groebner(&self) -> Option<(&[Polynomial], &MonomialOrder)> {
        self.groebner.as_ref().map(|(g, o)| (g.as_slice(), o))
    }

    pub fn is_unit(&self) -> bool {
        match &self.groebner {
            Some((g, _)) => g.len() == 1 && g[0].is_constant() && !g[0].is_zero(),
            None => false,
        }
    }

    pub fn is_zero_ideal(&self) -> bool {
        self.generators.is_empty()
    }

    /// Compute (and cache) a reduced Groebner basis in the given order.
    pub fn with_groebner(
        mut self,
        order: MonomialOrder,
        caps: &ResourceCaps,
    ) -> Result<IdealBasis, IdealError> {
        if let Some((_, o)) = &self.groebner {
            if *o == order {
                return Ok(self);
            }
        }
        let gb = buchberger(&self.ring, &self.generators, &order, caps)?;
        self.groebner = Some((gb, order));
        Ok(self)
    }
}

/// Convenience: reduced Groebner basis with default caps.
pub fn groebner_basis(
    ring: &Ring,
    gens: &[Polynomial],
    order: &MonomialOrder,
) -> Result<Vec<Polynomial>, IdealError> {
    buchberger(ring, gens, order, &ResourceCaps::default())
}

fn leading<'a>(p: &'a Polynomial, order: &MonomialOrder) -> (&'a Monomial, &'a Rat) {
    p.leading_term_by(|a, b| order.cmp(a, b))
        .expect("leading term of zero polynomial")
}

/// Remainder of `p` under full multivariate division by `basis`.
pub fn reduce(p: &Polynomial, basis: &[Polynomial], order: &MonomialOrder) -> Polynomial {
    let ring = p.ring().clone();
    let mut rem = Polynomial::zero(&ring);
    let mut work = p.clone();
    let lts: Vec<(Monomial, Rat)> = basis
        .iter()
        .map(|g| {
            let (m, c) = leading(g, order);
            (m.clone(), c.clone())
        })
        .collect();
    while !work.is_zero() {
        let (wm, wc) = {
            let (m, c) = leading(&work, order);
            (m.clone(), c.clone())
        };
        let mut reduced = false;
        for (i, (gm, gc)) in lts.iter().enumerate() {
            if let Some(q) = wm.try_div(gm) {
                let factor = &wc / gc;
                work = work.sub(&basis[i].mul_term(&q, &factor));
                reduced = true;
                break;
            }
        }
        if !reduced {
            // Move the irreducible leading term to the remainder.
            rem = rem.add(&Polynomial::from_terms(&ring, [(wm.clone(), wc.clone())]));
            work = work.sub(&Polynomial::from_terms(&ring, [(wm, wc)]));
        }
    }
    rem
}

fn s_polynomial(f: &Polynomial, g: &Polynomial, order: &MonomialOrder) -> Polynomial {
    let (fm, fc) = leading(f, order);
    let (gm, gc) = leading(g, order);
    let l = fm.lcm(gm);
    let uf = l.try_div(fm).unwrap();
    let ug = l.try_div(gm).unwrap();
    let a = f.mul_term(&uf, &(Rat::one() / fc));
    let b = g.mul_term(&ug, &(Rat::one() / gc));
    a.sub(&b)
}

/// Buchberger's algorithm with normal selection (smallest lcm degree first)
/// and the coprime-leading-term and chain criteria. Returns the reduced,
/// monic Groebner basis, deterministic for fixed inputs.
pub fn buchberger(
    ring: &Ring,
    gens: &[Polynomial],
    order: &MonomialOrder,
    caps: &ResourceCaps,
) -> Result<Vec<Polynomial>, IdealError> {
    let mut basis: Vec<Polynomial> = gens.iter().filter(|g| !g.is_zero()).cloned().collect();
    if basis.is_empty() {
        return Ok(Vec::new());
    }
    for g in &basis {
        if g.ring() != ring {
            return Err(IdealError::MixedRings);
        }
    }

    // Pair queue keyed by (lcm degree, lcm) for the normal strategy.
    let mut pairs: BTreeSet<(u32, Vec<u32>, usize, usize)> = BTreeSet::new();
    let lcm_key = |basis: &[Polynomial], i: usize, j: usize| -> (u32, Vec<u32>) {
        let l = leading(&basis[i], order).0.lcm(leading(&basis[j], order).0);
        (l.total_degree(), l.0)
    };
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            let (d, l) = lcm_key(&basis, i, j);
            pairs.insert((d, l, i, j));
        }
    }

    let mut in_queue: BTreeSet<(usize, usize)> = pairs.iter().map(|&(_, _, i, j)| (i, j)).collect();

    while let Some(entry) = pairs.iter().next().cloned() {
        pairs.remove(&entry);
        let (_, lcm_exp, i, j) = entry;
        in_queue.remove(&(i, j));
        let lcm_mono = Monomial(lcm_exp);

        let (lmi, _) = leading(&basis[i], order);
        let (lmj, _) = leading(&basis[j], order);
        // Buchberger's first criterion: coprime leading terms.
        if lmi.coprime(lmj) {
            continue;
        }
        // Chain criterion: some other leading term divides the lcm and both
        // companion pairs have already left the queue.
        let mut skip = false;
        for (k, g) in basis.iter().enumerate() {
            if k == i || k == j {
                continue;
            }
            if leading(g, order).0.divides(&lcm_mono) {
                let p1 = (i.min(k), i.max(k));
                let p2 = (j.min(k), j.max(k));
                if !in_queue.contains(&p1) && !in_queue.contains(&p2) {
                    skip = true;
                    break;
                }
            }
        }
        if skip {
            continue;
        }

        let s = s_polynomial(&basis[i], &basis[j], order);
        let r = reduce(&s, &basis, order);
        if r.is_zero() {
            continue;
        }
        if let Some(d) = r.degree() {
            if d > caps.max_degree {
                return Err(IdealError::ResourceLimit {
                    what: format!("degree {d} exceeds cap {}", caps.max_degree),
                    partial: basis.len(),
                });
            }
        }
        let new_idx = basis.len();
        basis.push(r);
        if basis.len() > caps.max_basis {
            return Err(IdealError::ResourceLimit {
                what: format!("basis size exceeds cap {}", caps.max_basis),
                partial: basis.len(),
            });
        }
        for k in 0..new_idx {
            let (d, l) = lcm_key(&basis, k, new_idx);
            pairs.insert((d, l, k, new_idx));
            in_queue.insert((k, new_idx));
        }
    }

    Ok(reduce_basis(basis, order))
}

/// Inter-reduce to the unique reduced monic basis.
fn reduce_basis(mut basis: Vec<Polynomial>, order: &MonomialOrder) -> Vec<Polynomial> {
    // Drop elements whose leading term is divisible by another's.
    loop {
        let mut removed = false;
        'outer: for i in 0..basis.len() {
            for j in 0..basis.len() {
                if i == j {
                    continue;
                }
                let (lmj, _) = leading(&basis[j], order);
                let (lmi, _) = leading(&basis[i], order);
                if lmj.divides(lmi) {
                    basis.remove(i);
                    removed = true;
                    break 'outer;
                }
            }
        }
        if !removed {
            break;
        }
    }
    // Fully reduce each element against the others, until stable.
    loop {
        let mut changed = false;
        for i in 0..basis.len() {
            let others: Vec<Polynomial> = basis
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, g)| g.clone())
                .collect();
            let r = reduce(&basis[i], &others, order);
            if r != basis[i] {
                changed = true;
                basis[i] = r;
            }
        }
        basis.retain(|g| !g.is_zero());
        if !changed {
            break;
        }
    }
    // Monic normalization and a deterministic ordering.
    for g in basis.iter_mut() {
        let lc = leading(g, order).1.clone();
        *g = g.scale(&(Rat::one() / lc));
    }
    basis.sort_by(|a, b| order.cmp(leading(a, order).0, leading(b, order).0));
    basis
}

/// Remainder of `p` modulo the attached Groebner basis; zero iff `p` lies in
/// the ideal.
pub fn normal_form(p: &Polynomial, ideal: &IdealBasis) -> Result<Polynomial, IdealError> {
    let (gb, order) = ideal.groebner().ok_or(IdealError::MissingGroebner)?;
    Ok(reduce(p, gb, order))
}

/// Groebner-backed ideal with default caps and grevlex order.
pub fn std_ideal(ring: &Ring, gens: Vec<Polynomial>) -> Result<IdealBasis, IdealError> {
    IdealBasis::new(ring, gens).with_groebner(MonomialOrder::GradedRevLex, &ResourceCaps::default())
}

/// Eliminate the complement of `keep` from `ideal`: returns generators (over
/// the same ring) of the intersection with the subring in the kept variables.
pub fn eliminate(ideal: &IdealBasis, keep: &BTreeSet<usize>) -> Result<IdealBasis, IdealError> {
    let ring = ideal.ring().clone();
    let n = ring.num_vars();
    let drop: BTreeSet<usize> = (0..n).filter(|i| !keep.contains(i)).collect();
    if drop.is_empty() {
        let caps = ResourceCaps::default();
        return IdealBasis::new(&ring, ideal.generators().to_vec())
            .with_groebner(MonomialOrder::GradedRevLex, &caps);
    }
    let order = MonomialOrder::Block {
        first_block: drop.clone(),
    };
    let gb = buchberger(&ring, ideal.generators(), &order, &ResourceCaps::default())?;
    let kept: Vec<Polynomial> = gb
        .into_iter()
        .filter(|g| g.terms().all(|(m, _)| drop.iter().all(|&i| m.0[i] == 0)))
        .collect();
    IdealBasis::new(&ring, kept)
        .with_groebner(MonomialOrder::GradedRevLex, &ResourceCaps::default())
}

/// Saturation `I : J^inf`, computed one `J`-generator at a time with an
/// auxiliary inverse variable and elimination, intersecting the results and
/// iterating until the basis stabilizes.
pub fn saturate(ideal: &IdealBasis, by: &IdealBasis) -> Result<IdealBasis, IdealError> {
    assert_eq!(ideal.ring(), by.ring(), "mixed rings");
    let ring = ideal.ring().clone();
    if by.generators().is_empty() {
        // Saturating by the zero ideal removes everything: V(0) is the whole
        // space, so the complement-closure is empty.
        return Ok(IdealBasis::unit_ideal(&ring));
    }
    let mut current = std_ideal(&ring, ideal.generators().to_vec())?;
    loop {
        let mut pieces: Vec<IdealBasis> = Vec::new();
        for g in by.generators() {
            pieces.push(saturate_single(&current, g)?);
        }
        let mut acc = pieces.pop().expect("at least one generator");
        for p in pieces {
            acc = intersect(&acc, &p)?;
        }
        if same_ideal(&acc, &current)? {
            return Ok(acc);
        }
        current = acc;
    }
}

fn saturate_single(ideal: &IdealBasis, g: &Polynomial) -> Result<IdealBasis, IdealError> {
    let ring = ideal.ring().clone();
    if g.is_constant() && !g.is_zero() {
        return std_ideal(&ring, ideal.generators().to_vec());
    }
    let n = ring.num_vars();
    let wname = ring.fresh_var("w_sat");
    let ext = ring.extend(&[&wname]);
    let id_map: Vec<usize> = (0..n).collect();
    let mut gens: Vec<Polynomial> = ideal
        .generators()
        .iter()
        .map(|p| p.embed(&ext, &id_map))
        .collect();
    let w = Polynomial::var(&ext, n);
    let ge = g.embed(&ext, &id_map);
    gens.push(Polynomial::one(&ext).sub(&w.mul(&ge)));
    let extended = IdealBasis::new(&ext, gens);
    let keep: BTreeSet<usize> = (0..n).collect();
    let eliminated = eliminate(&extended, &keep)?;
    let back: Vec<Polynomial> = eliminated
        .generators()
        .iter()
        .map(|p| p.restrict(&ring, &id_map))
        .collect();
    std_ideal(&ring, back)
}

/// Ideal intersection via the usual one-parameter trick.
pub fn intersect(a: &IdealBasis, b: &IdealBasis) -> Result<IdealBasis, IdealError> {
    assert_eq!(a.ring(), b.ring(), "mixed rings");
    let ring = a.ring().clone();
    if a.is_zero_ideal() {
        return std_ideal(&ring, b.generators().to_vec());
    }
    if b.is_zero_ideal() {
        return std_ideal(&ring, a.generators().to_vec());
    }
    let n = ring.num_vars();
    let tname = ring.fresh_var("t_int");
    let ext = ring.extend(&[&tname]);
    let id_map: Vec<usize> = (0..n).collect();
    let t = Polynomial::var(&ext, n);
    let one_minus_t = Polynomial::one(&ext).sub(&t);
    let mut gens = Vec::new();
    for p in a.generators() {
        gens.push(t.mul(&p.embed(&ext, &id_map)));
    }
    for p in b.generators() {
        gens.push(one_minus_t.mul(&p.embed(&ext, &id_map)));
    }
    let extended = IdealBasis::new(&ext, gens);
    let keep: BTreeSet<usize> = (0..n).collect();
    let eliminated = eliminate(&extended, &keep)?;
    let back: Vec<Polynomial> = eliminated
        .generators()
        .iter()
        .map(|p| p.restrict(&ring, &id_map))
        .collect();
    std_ideal(&ring, back)
}

/// Equality of ideals via mutual normal-form membership.
pub fn same_ideal(a: &IdealBasis, b: &IdealBasis) -> Result<bool, IdealError> {
    for g in a.generators() {
        if !normal_form(g, b)?.is_zero() {
            return Ok(false);
        }
    }
    for g in b.generators() {
        if !normal_form(g, a)?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Dimension of the affine vanishing set, via maximal variable sets
/// independent modulo the leading-term ideal. Returns -1 for the unit ideal.
pub fn krull_dimension(ideal: &IdealBasis) -> Result<i64, IdealError> {
    let (gb, order) = ideal.groebner().ok_or(IdealError::MissingGroebner)?;
    let n = ideal.ring().num_vars();
    if gb.is_empty() {
        return Ok(n as i64);
    }
    if ideal.is_unit() {
        return Ok(-1);
    }
    let lts: Vec<&Monomial> = gb.iter().map(|g| leading(g, order).0).collect();
    let mut best: i64 = -1;
    // Desk-scale rings: enumerate all variable subsets.
    for mask in 0u64..(1u64 << n) {
        let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let independent = lts.iter().all(|m| {
            // Some exponent outside the subset must be positive.
            m.0.iter()
                .enumerate()
                .any(|(i, &e)| e > 0 && !subset.contains(&i))
        });
        if independent {
            best = best.max(subset.len() as i64);
        }
    }
    Ok(best)
}

/// Number of standard monomials of a zero-dimensional ideal (the dimension of
/// the quotient algebra). `None` when the ideal is not zero-dimensional.
pub fn quotient_dimension(ideal: &IdealBasis) -> Result<Option<usize>, IdealError> {
    if krull_dimension(ideal)? != 0 {
        return Ok(None);
    }
    let (gb, order) = ideal.groebner().ok_or(IdealError::MissingGroebner)?;
    let n = ideal.ring().num_vars();
    let lts: Vec<&Monomial> = gb.iter().map(|g| leading(g, order).0).collect();
    // Zero-dimensional: each variable has a pure power among the leading terms.
    let mut bound = vec![0u32; n];
    for i in 0..n {
        let b = lts
            .iter()
            .filter(|m| m.0.iter().enumerate().all(|(j, &e)| j == i || e == 0))
            .map(|m| m.0[i])
            .min()
            .expect("pure power must exist for a zero-dimensional ideal");
        bound[i] = b;
    }
    let mut count = 0usize;
    let mut cursor = vec![0u32; n];
    'enumerate: loop {
        let m = Monomial(cursor.clone());
        if !lts.iter().any(|lt| lt.divides(&m)) {
            count += 1;
        }
        for i in 0..n {
            cursor[i] += 1;
            if cursor[i] < bound[i].max(1) {
                continue 'enumerate;
            }
            cursor[i] = 0;
        }
        break;
    }
    Ok(Some(count))
}

/// Ideal generated by all `r x r` minors of a polynomial matrix.
pub fn minors_ideal(matrix: &[Vec<Polynomial>], r: usize) -> Result<IdealBasis, IdealError> {
    let rows = matrix.len();
    let cols = matrix.first().map(|row| row.len()).unwrap_or(0);
    if r < 1 || r > rows.min(cols) {
        return Err(IdealError::MinorsOutOfRange { r, rows, cols });
    }
    let ring = matrix[0][0].ring().clone();
    let row_sets = combinations(rows, r);
    let col_sets = combinations(cols, r);
    let mut gens = Vec::new();
    for rs in &row_sets {
        for cs in &col_sets {
            let det = minor_det(matrix, rs, cs, &ring);
            if !det.is_zero() {
                gens.push(det);
            }
        }
    }
    std_ideal(&ring, gens)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn minor_det(matrix: &[Vec<Polynomial>], rs: &[usize], cs: &[usize], ring: &Ring) -> Polynomial {
    // Laplace expansion along the first selected row; minors stay tiny here.
    if rs.len() == 1 {
        return matrix[rs[0]][cs[0]].clone();
    }
    let mut acc = Polynomial::zero(ring);
    let sub_rows = &rs[1..];
    for (k, &c) in cs.iter().enumerate() {
        let sub_cols: Vec<usize> = cs
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, &cc)| cc)
            .collect();
        let sub = minor_det(matrix, sub_rows, &sub_cols, ring);
        let term = matrix[rs[0]][c].mul(&sub);
        if k % 2 == 0 {
            acc = acc.add(&term);
        } else {
            acc = acc.sub(&term);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polycore::{parse_polynomial, rat_int};
    use num::Zero;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ring_xy() -> Ring {
        Ring::new(vec!["x", "y"])
    }

    fn pp(ring: &Ring, s: &str) -> Polynomial {
        parse_polynomial(s, ring).unwrap()
    }

    #[test]
    fn principal_ideal_is_its_own_basis() {
        let r = ring_xy();
        let i = std_ideal(&r, vec![pp(&r, "x^2 - y^2")]).unwrap();
        let (gb, _) = i.groebner().unwrap();
        assert_eq!(gb.len(), 1);
        assert_eq!(gb[0], pp(&r, "x^2 - y^2"));
    }

    #[test]
    fn lex_elimination_of_parameter() {
        let r = Ring::new(vec!["t", "x", "y"]);
        let gens = vec![pp(&r, "x - t"), pp(&r, "y - t^2")];
        let gb = buchberger(
            &r,
            &gens,
            &MonomialOrder::Lexicographic,
            &ResourceCaps::default(),
        )
        .unwrap();
        let target = pp(&r, "y - x^2");
        let i = IdealBasis::new(&r, gens)
            .with_groebner(MonomialOrder::Lexicographic, &ResourceCaps::default())
            .unwrap();
        assert!(normal_form(&target, &i).unwrap().is_zero());
        // The t-free element of the lex basis is exactly the parabola.
        assert!(gb.iter().any(|g| g == &target || g == &target.neg()));
    }

    #[test]
    fn unit_rescaling_to_monic() {
        let r = ring_xy();
        let i = std_ideal(&r, vec![pp(&r, "2*x"), pp(&r, "3*y")]).unwrap();
        let (gb, _) = i.groebner().unwrap();
        let set: Vec<String> = gb.iter().map(|g| g.to_string()).collect();
        assert_eq!(set, vec!["y", "x"]);
    }

    #[test]
    fn normal_form_single_reduction() {
        let r = ring_xy();
        let i = std_ideal(&r, vec![pp(&r, "x^2 - y^2")]).unwrap();
        assert_eq!(normal_form(&pp(&r, "x^2"), &i).unwrap(), pp(&r, "y^2"));
        assert!(normal_form(&Polynomial::zero(&r), &i).unwrap().is_zero());
    }

    #[test]
    fn normal_form_of_generator_vanishes() {
        let r = ring_xy();
        let cardioid = pp(&r, "(x^2+y^2+x)^2 - (x^2+y^2)");
        let i = std_ideal(&r, vec![cardioid.clone()]).unwrap();
        assert!(normal_form(&cardioid, &i).unwrap().is_zero());
    }

    #[test]
    fn normal_form_requires_groebner() {
        let r = ring_xy();
        let i = IdealBasis::new(&r, vec![pp(&r, "x")]);
        assert!(matches!(
            normal_form(&pp(&r, "x"), &i),
            Err(IdealError::MissingGroebner)
        ));
    }

    #[test]
    fn textbook_saturation() {
        let r = Ring::new(vec!["x", "y", "z"]);
        let i = std_ideal(&r, vec![pp(&r, "x*y"), pp(&r, "x*z")]).unwrap();
        let j = std_ideal(&r, vec![pp(&r, "x")]).unwrap();
        let s = saturate(&i, &j).unwrap();
        let want = std_ideal(&r, vec![pp(&r, "y"), pp(&r, "z")]).unwrap();
        assert!(same_ideal(&s, &want).unwrap());
    }

    #[test]
    fn saturation_by_unit_is_identity() {
        let r = ring_xy();
        let i = std_ideal(&r, vec![pp(&r, "x^2 - y")]).unwrap();
        let one = std_ideal(&r, vec![Polynomial::one(&r)]).unwrap();
        let s = saturate(&i, &one).unwrap();
        assert!(same_ideal(&s, &i).unwrap());
    }

    #[test]
    fn saturation_is_stable() {
        let r = Ring::new(vec!["x", "y", "z"]);
        let i = std_ideal(&r, vec![pp(&r, "x*y"), pp(&r, "x*z")]).unwrap();
        let j = std_ideal(&r, vec![pp(&r, "x")]).unwrap();
        let s1 = saturate(&i, &j).unwrap();
        let s2 = saturate(&s1, &j).unwrap();
        assert!(same_ideal(&s1, &s2).unwrap());
        // saturate(I, J) contains I
        for g in i.generators() {
            assert!(normal_form(g, &s1).unwrap().is_zero());
        }
    }

    #[test]
    fn elimination_examples() {
        let r = Ring::new(vec!["t", "x", "y"]);
        let i = std_ideal(&r, vec![pp(&r, "x - t"), pp(&r, "y - t^2")]).unwrap();
        let keep: BTreeSet<usize> = [1, 2].into_iter().collect();
        let e = eliminate(&i, &keep).unwrap();
        let want = std_ideal(&r, vec![pp(&r, "y - x^2")]).unwrap();
        assert!(same_ideal(&e, &want).unwrap());

        // Eliminating nothing returns the same ideal.
        let all: BTreeSet<usize> = [0, 1, 2].into_iter().collect();
        let same = eliminate(&i, &all).unwrap();
        assert!(same_ideal(&same, &i).unwrap());

        // t*x - 1 forces x invertible; no constraint on x survives, y remains.
        let i2 = std_ideal(&r, vec![pp(&r, "t*x - 1"), pp(&r, "y")]).unwrap();
        let e2 = eliminate(&i2, &keep).unwrap();
        let want2 = std_ideal(&r, vec![pp(&r, "y")]).unwrap();
        assert!(same_ideal(&e2, &want2).unwrap());
    }

    #[test]
    fn krull_dimensions() {
        let r = ring_xy();
        let curve = std_ideal(&r, vec![pp(&r, "x^2 - y^2")]).unwrap();
        assert_eq!(krull_dimension(&curve).unwrap(), 1);
        let point = std_ideal(&r, vec![pp(&r, "x"), pp(&r, "y")]).unwrap();
        assert_eq!(krull_dimension(&point).unwrap(), 0);
        let unit = std_ideal(&r, vec![Polynomial::one(&r)]).unwrap();
        assert_eq!(krull_dimension(&unit).unwrap(), -1);
        let everything = IdealBasis::zero_ideal(&r);
        assert_eq!(krull_dimension(&everything).unwrap(), 2);
    }

    #[test]
    fn golden_variety_dimensions() {
        let r = ring_xy();
        let cardioid = std_ideal(&r, vec![pp(&r, "(x^2+y^2+x)^2 - (x^2+y^2)")]).unwrap();
        assert_eq!(krull_dimension(&cardioid).unwrap(), 1);
        let r3 = Ring::new(vec!["x", "y", "z"]);
        let planes = std_ideal(&r3, vec![parse_polynomial("x^2 - y^2", &r3).unwrap()]).unwrap();
        assert_eq!(krull_dimension(&planes).unwrap(), 2);
    }

    #[test]
    fn minors_examples() {
        let r = ring_xy();
        let m = vec![
            vec![pp(&r, "2*x"), pp(&r, "2*y")],
            vec![pp(&r, "3"), pp(&r, "5")],
        ];
        let i = minors_ideal(&m, 2).unwrap();
        let want = std_ideal(&r, vec![pp(&r, "10*x - 6*y")]).unwrap();
        assert!(same_ideal(&i, &want).unwrap());

        let single = minors_ideal(&[vec![pp(&r, "x^2 - y")]], 1).unwrap();
        let want1 = std_ideal(&r, vec![pp(&r, "x^2 - y")]).unwrap();
        assert!(same_ideal(&single, &want1).unwrap());

        let wide = vec![
            vec![pp(&r, "x"), pp(&r, "y"), pp(&r, "1")],
            vec![pp(&r, "1"), pp(&r, "x"), pp(&r, "y")],
        ];
        assert!(matches!(
            minors_ideal(&wide, 3),
            Err(IdealError::MinorsOutOfRange { .. })
        ));
    }

    #[test]
    fn reduced_basis_is_idempotent() {
        let r = ring_xy();
        let gens = vec![pp(&r, "x^2 + y"), pp(&r, "x*y - 1"), pp(&r, "y^2 + x")];
        let gb = groebner_basis(&r, &gens, &MonomialOrder::GradedRevLex).unwrap();
        let gb2 = groebner_basis(&r, &gb, &MonomialOrder::GradedRevLex).unwrap();
        assert_eq!(gb, gb2);
    }

    #[test]
    fn quotient_dimension_counts_standard_monomials() {
        let r = ring_xy();
        let i = std_ideal(&r, vec![pp(&r, "x^2"), pp(&r, "y^2")]).unwrap();
        assert_eq!(quotient_dimension(&i).unwrap(), Some(4));
        let curve = std_ideal(&r, vec![pp(&r, "x^2 - y^2")]).unwrap();
        assert_eq!(quotient_dimension(&curve).unwrap(), None);
        let unit = std_ideal(&r, vec![Polynomial::one(&r)]).unwrap();
        assert_eq!(quotient_dimension(&unit).unwrap(), None);
    }

    // Membership decided by normal form agrees with explicit degree-bounded
    // cofactor certificates on random small instances.
    #[test]
    fn membership_matches_cofactor_certificates() {
        let mut rng = ChaCha8Rng::seed_from_u64(20240811);
        let r = ring_xy();
        for trial in 0..50 {
            let gens = vec![random_poly(&r, &mut rng), random_poly(&r, &mut rng)];
            if gens.iter().any(|g| g.is_zero()) {
                continue;
            }
            let ideal = match std_ideal(&r, gens.clone()) {
                Ok(i) => i,
                Err(_) => continue,
            };
            let p = if trial % 2 == 0 {
                // An element built from random cofactors is a member.
                let c0 = random_poly(&r, &mut rng);
                let c1 = random_poly(&r, &mut rng);
                c0.mul(&gens[0]).add(&c1.mul(&gens[1]))
            } else {
                random_poly(&r, &mut rng)
            };
            let nf_zero = normal_form(&p, &ideal).unwrap().is_zero();
            let cert = cofactor_certificate(&p, &gens, 8);
            match cert {
                Some(true) => assert!(nf_zero, "certificate found but normal form nonzero"),
                _ => {
                    if trial % 2 == 0 {
                        // Members built explicitly must be certified at this bound.
                        assert!(nf_zero);
                    }
                }
            }
        }
    }

    fn random_poly(ring: &Ring, rng: &mut ChaCha8Rng) -> Polynomial {
        let mut p = Polynomial::zero(ring);
        for _ in 0..rng.gen_range(1..4) {
            let e0 = rng.gen_range(0..3u32);
            let e1 = rng.gen_range(0..3u32);
            let c = rng.gen_range(-4i64..=4);
            p = p.add(&Polynomial::from_terms(
                ring,
                [(Monomial(vec![e0, e1]), rat_int(c))],
            ));
        }
        p
    }

    /// Degree-bounded linear-algebra membership: search for cofactors c_i with
    /// deg(c_i g_i) <= bound such that p = sum c_i g_i. Independent of the
    /// Groebner machinery.
    fn cofactor_certificate(p: &Polynomial, gens: &[Polynomial], bound: u32) -> Option<bool> {
        let ring = p.ring().clone();
        let n = ring.num_vars();
        // Collect candidate cofactor monomials per generator.
        let mut columns: Vec<(usize, Monomial)> = Vec::new();
        for (gi, g) in gens.iter().enumerate() {
            let gdeg = g.degree()?;
            if gdeg > bound {
                continue;
            }
            let room = bound - gdeg;
            for m in monomials_up_to(n, room) {
                columns.push((gi, m));
            }
        }
        // Row space: all monomials up to the bound.
        let rows: Vec<Monomial> = monomials_up_to(n, bound);
        let row_index = |m: &Monomial| rows.iter().position(|r| r == m);
        let mut a: Vec<Vec<Rat>> = vec![vec![Rat::zero(); columns.len()]; rows.len()];
        for (cj, (gi, cm)) in columns.iter().enumerate() {
            for (gm, gc) in gens[*gi].terms() {
                let prod = cm.mul(gm);
                if let Some(ri) = row_index(&prod) {
                    a[ri][cj] = &a[ri][cj] + gc;
                }
            }
        }
        let mut b: Vec<Rat> = vec![Rat::zero(); rows.len()];
        for (m, c) in p.terms() {
            let ri = row_index(m)?;
            b[ri] = c.clone();
        }
        Some(solve_consistent(a, b))
    }

    fn monomials_up_to(n: usize, d: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
            if i == cur.len() {
                out.push(Monomial(cur.clone()));
                return;
            }
            for e in 0..=left {
                cur[i] = e;
                rec(i + 1, left - e, cur, out);
            }
            cur[i] = 0;
        }
        rec(0, d, &mut cur, &mut out);
        out
    }

    /// Exact Gaussian elimination: does Ax = b have a solution?
    fn solve_consistent(mut a: Vec<Vec<Rat>>, mut b: Vec<Rat>) -> bool {
        let rows = a.len();
        if rows == 0 {
            return b.iter().all(|x| x.is_zero());
        }
        let cols = a[0].len();
        let mut pivot_row = 0usize;
        for col in 0..cols {
            let Some(pr) = (pivot_row..rows).find(|&r| !a[r][col].is_zero()) else {
                continue;
            };
            a.swap(pivot_row, pr);
            b.swap(pivot_row, pr);
            let inv = Rat::one() / a[pivot_row][col].clone();
            for c in col..cols {
                a[pivot_row][c] = &a[pivot_row][c] * &inv;
            }
            b[pivot_row] = &b[pivot_row] * &inv;
            for r in 0..rows {
                if r != pivot_row && !a[r][col].is_zero() {
                    let f = a[r][col].clone();
                    for c in col..cols {
                        a[r][c] = &a[r][c] - &(&f * &a[pivot_row][c]);
                    }
                    b[r] = &b[r] - &(&f * &b[pivot_row]);
                }
            }
            pivot_row += 1;
            if pivot_row == rows {
                break;
            }
        }
        // Consistent iff no zero row maps to a nonzero rhs.
        for r in 0..rows {
            if a[r].iter().all(|x| x.is_zero()) && !b[r].is_zero() {
                return false;
            }
        }
        true
    }
}
