//! Exact multivariate polynomial arithmetic over the rationals.
//!
//! Polynomials are sparse term maps keyed by exponent vectors, with
//! arbitrary-precision rational coefficients. Floating point enters only at
//! evaluation time (complex double precision), never in the symbolic layer.

mod parse;

pub use parse::{parse_polynomial, ParseError};

use num::complex::Complex64;
use num::{BigInt, BigRational, One, Signed, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Exact coefficient type used throughout the symbolic layer.
pub type Rat = BigRational;

pub fn rat_int(n: i64) -> Rat {
    BigRational::from_integer(BigInt::from(n))
}

pub fn rat_frac(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let num = r.numer();
    let den = r.denom();
    // Exact for small values; falls back to a quotient of approximations for
    // values outside the f64 integer range.
    let nf = bigint_to_f64(num);
    let df = bigint_to_f64(den);
    nf / df
}

fn bigint_to_f64(n: &BigInt) -> f64 {
    use num::ToPrimitive;
    n.to_f64().unwrap_or(if n.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("variable index {index} out of range for ring with {nvars} variables")]
    VarIndexOutOfRange { index: usize, nvars: usize },
    #[error("point has {got} coordinates, ring has {want} variables")]
    DimensionMismatch { got: usize, want: usize },
    #[error("polynomials over different rings")]
    MixedRings,
    #[error("empty polynomial list")]
    EmptyList,
}

/// An ambient polynomial ring: an ordered list of variable names.
///
/// Rings are cheap to clone and compare by variable list, so independently
/// constructed rings with the same variables are interchangeable.
#[derive(Clone, Debug)]
pub struct Ring(Arc<Vec<String>>);

impl PartialEq for Ring {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}
impl Eq for Ring {}

impl Ring {
    pub fn new<S: Into<String>>(vars: Vec<S>) -> Ring {
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
        assert!(!vars.is_empty(), "ring needs at least one variable");
        Ring(Arc::new(vars))
    }

    pub fn num_vars(&self) -> usize {
        self.0.len()
    }

    pub fn var_names(&self) -> &[String] {
        &self.0
    }

    pub fn var_name(&self, i: usize) -> &str {
        &self.0[i]
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|v| v == name)
    }

    /// New ring with extra variables appended after the existing ones.
    pub fn extend(&self, extra: &[&str]) -> Ring {
        let mut vars = self.0.as_ref().clone();
        for e in extra {
            assert!(!vars.iter().any(|v| v == e), "variable {e} already present");
            vars.push((*e).to_string());
        }
        Ring(Arc::new(vars))
    }

    /// A variable name not colliding with any existing one.
    pub fn fresh_var(&self, base: &str) -> String {
        if self.var_index(base).is_none() {
            return base.to_string();
        }
        let mut k = 0usize;
        loop {
            let cand = format!("{base}{k}");
            if self.var_index(&cand).is_none() {
                return cand;
            }
            k += 1;
        }
    }
}

/// Exponent vector of a single monomial. Length always equals the number of
/// ambient variables of the ring it lives in.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Monomial {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Monomial {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise quotient, if `other` divides `self`.
    pub fn try_div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        for (a, b) in self.0.iter().zip(&other.0) {
            if a < b {
                return None;
            }
            out.push(a - b);
        }
        Some(Monomial(out))
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        Monomial(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| *a.max(b))
                .collect(),
        )
    }

    pub fn coprime(&self, other: &Monomial) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a == 0 || *b == 0)
    }

    /// Graded reverse lexicographic comparison (the canonical storage order).
    pub fn cmp_grevlex(&self, other: &Monomial) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match self.total_degree().cmp(&other.total_degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        // Rightmost differing exponent: smaller exponent there wins.
        for i in (0..self.0.len()).rev() {
            match self.0[i].cmp(&other.0[i]) {
                Ordering::Equal => {}
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.cmp_grevlex(other)
    }
}

/// A sparse multivariate polynomial with exact rational coefficients.
///
/// The term map never stores zero coefficients, so equality of term maps is
/// equality of polynomials. The zero polynomial has an empty term map and a
/// `None` degree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    ring: Ring,
    terms: BTreeMap<Monomial, Rat>,
}

impl Polynomial {
    pub fn zero(ring: &Ring) -> Polynomial {
        Polynomial {
            ring: ring.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ring: &Ring, c: Rat) -> Polynomial {
        let mut p = Polynomial::zero(ring);
        if !c.is_zero() {
            p.terms.insert(Monomial::one(ring.num_vars()), c);
        }
        p
    }

    pub fn one(ring: &Ring) -> Polynomial {
        Polynomial::constant(ring, Rat::one())
    }

    pub fn var(ring: &Ring, i: usize) -> Polynomial {
        assert!(i < ring.num_vars());
        let mut p = Polynomial::zero(ring);
        p.terms
            .insert(Monomial::var(ring.num_vars(), i), Rat::one());
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Monomial, Rat)>>(ring: &Ring, it: I) -> Polynomial {
        let mut p = Polynomial::zero(ring);
        for (m, c) in it {
            p.add_term(m, c);
        }
        p
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
            || (self.terms.len() == 1 && self.terms.keys().next().unwrap().is_one())
    }

    /// Total degree; `None` is the degree of the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.total_degree()).max()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn constant_term(&self) -> Rat {
        self.coefficient(&Monomial::one(self.ring.num_vars()))
    }

    fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get() + &c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.ring, other.ring, "mixed rings");
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.ring, other.ring, "mixed rings");
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Polynomial {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = -c.clone();
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(&self.ring);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v = &*v * c;
        }
        out
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        assert_eq!(self.ring, other.ring, "mixed rings");
        let mut out = Polynomial::zero(&self.ring);
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                out.add_term(m1.mul(m2), c1 * c2);
            }
        }
        out
    }

    pub fn mul_term(&self, m: &Monomial, c: &Rat) -> Polynomial {
        let mut out = Polynomial::zero(&self.ring);
        if c.is_zero() {
            return out;
        }
        for (m1, c1) in &self.terms {
            out.terms.insert(m1.mul(m), c1 * c);
        }
        out
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::one(&self.ring);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Exact partial derivative with respect to variable `var_index`.
    pub fn derivative(&self, var_index: usize) -> Result<Polynomial, PolyError> {
        let n = self.ring.num_vars();
        if var_index >= n {
            return Err(PolyError::VarIndexOutOfRange {
                index: var_index,
                nvars: n,
            });
        }
        let mut out = Polynomial::zero(&self.ring);
        for (m, c) in &self.terms {
            let e = m.0[var_index];
            if e == 0 {
                continue;
            }
            let mut me = m.clone();
            me.0[var_index] -= 1;
            out.add_term(me, c * rat_int(e as i64));
        }
        Ok(out)
    }

    /// Complex double-precision evaluation.
    pub fn eval_complex(&self, pt: &[Complex64]) -> Result<Complex64, PolyError> {
        let n = self.ring.num_vars();
        if pt.len() != n {
            return Err(PolyError::DimensionMismatch {
                got: pt.len(),
                want: n,
            });
        }
        // Per-variable power tables keep evaluation near Horner accuracy for
        // the degrees that occur here.
        let mut maxdeg = vec![0u32; n];
        for m in self.terms.keys() {
            for i in 0..n {
                maxdeg[i] = maxdeg[i].max(m.0[i]);
            }
        }
        let mut pows: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        for i in 0..n {
            let mut col = Vec::with_capacity(maxdeg[i] as usize + 1);
            col.push(Complex64::new(1.0, 0.0));
            for k in 1..=maxdeg[i] as usize {
                let prev = col[k - 1];
                col.push(prev * pt[i]);
            }
            pows.push(col);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut t = Complex64::new(rat_to_f64(c), 0.0);
            for i in 0..n {
                if m.0[i] > 0 {
                    t *= pows[i][m.0[i] as usize];
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Exact evaluation at a rational point.
    pub fn eval_rational(&self, pt: &[Rat]) -> Result<Rat, PolyError> {
        let n = self.ring.num_vars();
        if pt.len() != n {
            return Err(PolyError::DimensionMismatch {
                got: pt.len(),
                want: n,
            });
        }
        let mut acc = Rat::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for i in 0..n {
                for _ in 0..m.0[i] {
                    t *= &pt[i];
                }
            }
            acc += t;
        }
        Ok(acc)
    }

    /// Substitute each variable by the given polynomial (all over a common
    /// target ring) and expand.
    pub fn substitute(&self, images: &[Polynomial]) -> Result<Polynomial, PolyError> {
        let n = self.ring.num_vars();
        if images.len() != n {
            return Err(PolyError::DimensionMismatch {
                got: images.len(),
                want: n,
            });
        }
        let target = images
            .first()
            .map(|p| p.ring.clone())
            .ok_or(PolyError::EmptyList)?;
        if images.iter().any(|p| p.ring != target) {
            return Err(PolyError::MixedRings);
        }
        let mut acc = Polynomial::zero(&target);
        for (m, c) in &self.terms {
            let mut t = Polynomial::constant(&target, c.clone());
            for i in 0..n {
                if m.0[i] > 0 {
                    t = t.mul(&images[i].pow(m.0[i]));
                }
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    /// Re-express over a larger ring, mapping variable `i` of this ring to
    /// variable `map[i]` of `target`.
    pub fn embed(&self, target: &Ring, map: &[usize]) -> Polynomial {
        assert_eq!(map.len(), self.ring.num_vars());
        let tn = target.num_vars();
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut e = vec![0u32; tn];
            for (i, &exp) in m.0.iter().enumerate() {
                e[map[i]] += exp;
            }
            out.add_term(Monomial(e), c.clone());
        }
        out
    }

    /// Drop variables not in `map` (which sends target index -> source index).
    /// Panics if the polynomial actually involves a dropped variable.
    pub fn restrict(&self, target: &Ring, map: &[usize]) -> Polynomial {
        assert_eq!(map.len(), target.num_vars());
        let mut out = Polynomial::zero(target);
        for (m, c) in &self.terms {
            let mut e = vec![0u32; target.num_vars()];
            let mut seen: u32 = 0;
            for (ti, &si) in map.iter().enumerate() {
                e[ti] = m.0[si];
                seen += m.0[si];
            }
            assert_eq!(
                seen,
                m.total_degree(),
                "polynomial involves a variable outside the target ring"
            );
            out.add_term(Monomial(e), c.clone());
        }
        out
    }

    /// Leading term under an explicit comparator (largest monomial).
    pub fn leading_term_by<F>(&self, cmp: F) -> Option<(&Monomial, &Rat)>
    where
        F: Fn(&Monomial, &Monomial) -> std::cmp::Ordering,
    {
        self.terms.iter().max_by(|a, b| cmp(a.0, b.0))
    }

    /// Largest-degree coefficient magnitude, for numeric normalization.
    pub fn max_coeff_abs(&self) -> f64 {
        self.terms
            .values()
            .map(|c| rat_to_f64(c).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        // Descending canonical order.
        for (m, c) in self.terms.iter().rev() {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let mono = format_monomial(&self.ring, m);
            if mono.is_empty() {
                write!(f, "{mag}")?;
            } else if mag.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{mag}*{mono}")?;
            }
        }
        Ok(())
    }
}

fn format_monomial(ring: &Ring, m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (i, &e) in m.0.iter().enumerate() {
        match e {
            0 => {}
            1 => parts.push(ring.var_name(i).to_string()),
            _ => parts.push(format!("{}^{}", ring.var_name(i), e)),
        }
    }
    parts.join("*")
}

/// A point of complex affine space, in double precision.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexPoint(pub Vec<Complex64>);

impl ComplexPoint {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dist(&self, other: &ComplexPoint) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn from_rational(coords: &[Rat]) -> ComplexPoint {
        ComplexPoint(
            coords
                .iter()
                .map(|r| Complex64::new(rat_to_f64(r), 0.0))
                .collect(),
        )
    }
}

/// A homogeneous linear form with exact rational coefficients and zero
/// constant term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearForm {
    pub coefficients: Vec<Rat>,
}

impl LinearForm {
    pub fn new(coefficients: Vec<Rat>) -> LinearForm {
        assert!(
            coefficients.iter().any(|c| !c.is_zero()),
            "linear form must not be identically zero"
        );
        LinearForm { coefficients }
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    pub fn to_polynomial(&self, ring: &Ring) -> Polynomial {
        assert_eq!(ring.num_vars(), self.coefficients.len());
        Polynomial::from_terms(
            ring,
            self.coefficients
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(i, c)| (Monomial::var(ring.num_vars(), i), c.clone())),
        )
    }

    pub fn eval_complex(&self, pt: &[Complex64]) -> Complex64 {
        self.coefficients
            .iter()
            .zip(pt)
            .map(|(c, z)| z * rat_to_f64(c))
            .sum()
    }
}

/// Random integer linear form, uniform in a large box, componentwise nonzero,
/// deterministic in the seed.
pub fn sample_generic_linear(nvars: usize, seed: u64) -> LinearForm {
    assert!(nvars >= 1);
    const BOX: i64 = 1_000_000;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = Vec::with_capacity(nvars);
    for _ in 0..nvars {
        let mut c: i64 = 0;
        while c == 0 {
            c = rng.gen_range(-BOX..=BOX);
        }
        coeffs.push(rat_int(c));
    }
    LinearForm::new(coeffs)
}

/// Jacobian matrix of a polynomial list: row `i` holds the partials of
/// `polys[i]` with respect to every ring variable, in ring order.
pub fn jacobian_matrix(polys: &[Polynomial]) -> Result<Vec<Vec<Polynomial>>, PolyError> {
    let first = polys.first().ok_or(PolyError::EmptyList)?;
    let ring = first.ring().clone();
    if polys.iter().any(|p| *p.ring() != ring) {
        return Err(PolyError::MixedRings);
    }
    let n = ring.num_vars();
    polys
        .iter()
        .map(|p| (0..n).map(|i| p.derivative(i)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring_xy() -> Ring {
        Ring::new(vec!["x", "y"])
    }

    fn p(ring: &Ring, s: &str) -> Polynomial {
        parse_polynomial(s, ring).unwrap()
    }

    #[test]
    fn cardioid_parses_to_degree_four() {
        let r = ring_xy();
        let f = p(&r, "(x^2+y^2+x)^2 - (x^2+y^2)");
        assert_eq!(f.degree(), Some(4));
        // Same polynomial built from the arithmetic ops directly.
        let x = Polynomial::var(&r, 0);
        let y = Polynomial::var(&r, 1);
        let s = x.mul(&x).add(&y.mul(&y));
        let built = s.add(&x).pow(2).sub(&s);
        assert_eq!(f, built);
    }

    #[test]
    fn zero_and_cancellation() {
        let r = ring_xy();
        let z = p(&r, "0");
        assert!(z.is_zero());
        assert_eq!(z.degree(), None);
        let c = p(&r, "x - x");
        assert!(c.is_zero());
        assert_eq!(c, z);
    }

    #[test]
    fn derivative_power_rule() {
        let r = ring_xy();
        let f = p(&r, "x^2 + y^2");
        assert_eq!(f.derivative(0).unwrap(), p(&r, "2*x"));
    }

    #[test]
    fn derivative_three_vars() {
        let r = Ring::new(vec!["x", "y", "z"]);
        let f = parse_polynomial("x + 2*y + z^2", &r).unwrap();
        assert_eq!(
            f.derivative(2).unwrap(),
            parse_polynomial("2*z", &r).unwrap()
        );
    }

    #[test]
    fn derivative_chain_rule_expanded() {
        let r = ring_xy();
        let f = p(&r, "(x^2+y^2+x)^2 - (x^2+y^2)");
        let want = p(&r, "2*(x^2+y^2+x)*(2*x+1) - 2*x");
        assert_eq!(f.derivative(0).unwrap(), want);
    }

    #[test]
    fn derivative_index_out_of_range() {
        let r = ring_xy();
        let f = p(&r, "x");
        assert!(f.derivative(2).is_err());
    }

    #[test]
    fn evaluate_points() {
        let r = ring_xy();
        let f = p(&r, "x^2 + y^2");
        let v = f
            .eval_complex(&[Complex64::new(-2.0, 0.0), Complex64::new(0.0, 0.0)])
            .unwrap();
        assert!((v - Complex64::new(4.0, 0.0)).norm() < 1e-12);

        let g = p(&r, "3*x*y + 7/2");
        let at0 = g
            .eval_complex(&[Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)])
            .unwrap();
        assert!((at0 - Complex64::new(3.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cardioid_contains_minus_two_zero() {
        let r = ring_xy();
        let f = p(&r, "(x^2+y^2+x)^2 - (x^2+y^2)");
        // ((4 - 2)^2 - 4) = 0
        let v = f.eval_rational(&[rat_int(-2), rat_int(0)]).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn evaluate_dimension_mismatch() {
        let r = ring_xy();
        let f = p(&r, "x");
        assert!(f.eval_complex(&[Complex64::new(1.0, 0.0)]).is_err());
    }

    #[test]
    fn jacobian_shapes() {
        let r3 = Ring::new(vec!["x", "y", "z"]);
        let f = parse_polynomial("x^2 - y^2", &r3).unwrap();
        let jac = jacobian_matrix(&[f]).unwrap();
        assert_eq!(jac.len(), 1);
        assert_eq!(jac[0][0], parse_polynomial("2*x", &r3).unwrap());
        assert_eq!(jac[0][1], parse_polynomial("-2*y", &r3).unwrap());
        assert!(jac[0][2].is_zero());

        let r = ring_xy();
        let jac2 = jacobian_matrix(&[Polynomial::var(&r, 0), Polynomial::var(&r, 1)]).unwrap();
        assert_eq!(jac2[0][0], Polynomial::one(&r));
        assert!(jac2[0][1].is_zero());
        assert!(jac2[1][0].is_zero());
        assert_eq!(jac2[1][1], Polynomial::one(&r));

        let f = p(&r, "x^2 + y^2");
        let l = p(&r, "3*x + 5*y");
        let jac3 = jacobian_matrix(&[f, l]).unwrap();
        assert_eq!(jac3[0][0], p(&r, "2*x"));
        assert_eq!(jac3[0][1], p(&r, "2*y"));
        assert_eq!(jac3[1][0], p(&r, "3"));
        assert_eq!(jac3[1][1], p(&r, "5"));
    }

    #[test]
    fn jacobian_mixed_rings_rejected() {
        let r = ring_xy();
        let r2 = Ring::new(vec!["u", "v"]);
        let res = jacobian_matrix(&[Polynomial::var(&r, 0), Polynomial::var(&r2, 0)]);
        assert!(res.is_err());
    }

    #[test]
    fn generic_linear_deterministic_and_nonzero() {
        let a = sample_generic_linear(2, 7);
        let b = sample_generic_linear(2, 7);
        assert_eq!(a, b);
        assert!(a.coefficients.iter().all(|c| !c.is_zero()));
        let single = sample_generic_linear(1, 3);
        assert!(!single.coefficients[0].is_zero());
    }

    #[test]
    fn generic_linear_distinct_across_seeds() {
        let forms: Vec<_> = (0..100u64).map(|s| sample_generic_linear(3, s)).collect();
        for i in 0..forms.len() {
            for j in (i + 1)..forms.len() {
                assert_ne!(forms[i], forms[j], "seeds {i} and {j} collided");
            }
        }
    }

    #[test]
    fn substitute_translation() {
        let r = ring_xy();
        let f = p(&r, "x^2 + y");
        let images = vec![p(&r, "x - 2"), p(&r, "y + 1")];
        let g = f.substitute(&images).unwrap();
        assert_eq!(g, p(&r, "x^2 - 4*x + y + 5"));
    }
}
