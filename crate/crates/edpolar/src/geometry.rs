//! Geometric loci built from ideals: singular loci, stratified critical
//! loci, polar curves, and the finite candidate set where critical
//! trajectories can land.
//!
//! All ideals here are set-theoretic; no radicals are ever taken. Downstream
//! consumers are saturations and numeric solvers, which only see vanishing
//! sets.

use crate::ideals::{
    intersect, krull_dimension, minors_ideal, normal_form, saturate, std_ideal, IdealBasis,
    IdealError,
};
use crate::polycore::{
    jacobian_matrix, sample_generic_linear, ComplexPoint, LinearForm, PolyError, Polynomial, Rat,
    Ring,
};
use crate::tracker::numeric::{solve_affine_system_union, NumPoly, TrackOptions, RESIDUAL_TOL};
use num::{BigInt, BigRational, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeomError {
    #[error("defining ideal is the unit ideal (empty variety)")]
    EmptyVariety,
    #[error("function is constant on the variety")]
    ConstantFunction,
    #[error("non-generic configuration: polar locus has dimension {dim} after {attempts} linear-form draws")]
    NonGenericConfiguration { dim: i64, attempts: usize },
    #[error(
        "candidate system is not zero-dimensional (dimension {dim}); upstream data is non-generic"
    )]
    NotZeroDimensional { dim: i64 },
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("numeric solve failed: {0}")]
    Numeric(#[from] crate::tracker::numeric::NumericError),
}

/// An affine variety given by equations, with its codimension and an
/// optional declared filtration by closed subvarieties (largest first,
/// each containing the next). When absent, the filtration defaults to
/// iterated singular loci.
#[derive(Clone, Debug)]
pub struct VarietySpec {
    pub ideal: IdealBasis,
    pub codim: usize,
    pub strata_closures: Option<Vec<IdealBasis>>,
}

impl VarietySpec {
    pub fn new(ideal: IdealBasis) -> Result<VarietySpec, GeomError> {
        let dim = krull_dimension(&ideal)?;
        if dim < 0 {
            return Err(GeomError::EmptyVariety);
        }
        let n = ideal.ring().num_vars();
        Ok(VarietySpec {
            codim: n - dim as usize,
            ideal,
            strata_closures: None,
        })
    }

    /// The whole ambient space (zero ideal, codimension zero).
    pub fn ambient(ring: &Ring) -> VarietySpec {
        VarietySpec {
            ideal: IdealBasis::zero_ideal(ring),
            codim: 0,
            strata_closures: None,
        }
    }

    pub fn with_strata(mut self, closures: Vec<IdealBasis>) -> VarietySpec {
        self.strata_closures = Some(closures);
        self
    }

    pub fn ring(&self) -> &Ring {
        self.ideal.ring()
    }

    pub fn dim(&self) -> usize {
        self.ring().num_vars() - self.codim
    }

    /// Closed filtration by iterated singular loci, starting below the
    /// variety itself and stopping at the first empty level.
    pub fn default_filtration(&self) -> Result<Vec<IdealBasis>, GeomError> {
        let mut out = Vec::new();
        let mut level = self.clone();
        // The chain can stall at one dimension for non-reduced input, so the
        // ambient variable count bounds the iterations.
        for _ in 0..=self.ring().num_vars() {
            let sing = singular_locus_ideal(&level)?;
            if krull_dimension(&sing)? < 0 {
                return Ok(out);
            }
            if crate::ideals::same_ideal(&sing, &level.ideal)? {
                return Ok(out);
            }
            out.push(sing.clone());
            level = VarietySpec::new(sing)?;
            if level.dim() == 0 {
                return Ok(out);
            }
        }
        Ok(out)
    }

    fn filtration(&self) -> Result<Vec<IdealBasis>, GeomError> {
        match &self.strata_closures {
            Some(s) => Ok(s.clone()),
            None => self.default_filtration(),
        }
    }
}

/// Ideal of the singular locus: the variety's equations plus the
/// codim-by-codim minors of their Jacobian. Set-theoretic only.
pub fn singular_locus_ideal(x: &VarietySpec) -> Result<IdealBasis, GeomError> {
    let ring = x.ring().clone();
    if x.codim == 0 {
        // Affine space is smooth.
        return Ok(IdealBasis::unit_ideal(&ring));
    }
    let gens = x.ideal.generators().to_vec();
    let jac = jacobian_matrix(&gens)?;
    let minors = minors_ideal(&jac, x.codim)?;
    let mut all = gens;
    all.extend(minors.generators().iter().cloned());
    Ok(std_ideal(&ring, all)?)
}

fn check_nonconstant_on(x: &VarietySpec, f: &Polynomial) -> Result<(), GeomError> {
    // The normal form of f modulo the variety's basis is constant exactly
    // when f differs from a constant by an element of the computed ideal.
    let nf = normal_form(f, &x.ideal)?;
    if nf.is_constant() {
        return Err(GeomError::ConstantFunction);
    }
    Ok(())
}

/// Critical ideal of `f` on the regular part of the variety cut out by
/// `closure`: equations plus (codim+1)-minors of the stacked Jacobian with
/// the gradient row, with the singular locus saturated away.
fn critical_on_regular_part(closure: &IdealBasis, f: &Polynomial) -> Result<IdealBasis, GeomError> {
    let spec = VarietySpec::new(closure.clone())?;
    let ring = closure.ring().clone();
    let n = ring.num_vars();
    let c = spec.codim;
    if c + 1 > n {
        // Zero-dimensional stratum: every point is critical, and there is
        // nothing below it to saturate away.
        return Ok(std_ideal(&ring, closure.generators().to_vec())?);
    }
    let mut rows: Vec<Polynomial> = closure.generators().to_vec();
    rows.push(f.clone());
    let jac = jacobian_matrix(&rows)?;
    let minors = minors_ideal(&jac, c + 1)?;
    let mut all = closure.generators().to_vec();
    all.extend(minors.generators().iter().cloned());
    let raw = std_ideal(&ring, all)?;
    let sing = singular_locus_ideal(&spec)?;
    Ok(saturate(&raw, &sing)?)
}

/// Ideal whose vanishing set is the union of the critical set of `f` on the
/// open stratum with the critical sets on every declared lower stratum.
pub fn stratified_critical_ideal(x: &VarietySpec, f: &Polynomial) -> Result<IdealBasis, GeomError> {
    check_nonconstant_on(x, f)?;
    let mut acc = critical_on_regular_part(&x.ideal, f)?;
    for closure in x.filtration()? {
        if krull_dimension(&closure)? < 0 {
            continue;
        }
        let crit = critical_on_regular_part(&closure, f)?;
        acc = intersect(&acc, &crit)?;
    }
    Ok(acc)
}

/// The polar curve of `f` with respect to a linear form, as an ideal.
#[derive(Clone, Debug)]
pub struct PolarCurve {
    pub ideal: IdealBasis,
    pub linear_form: LinearForm,
    pub source_function: Polynomial,
}

impl PolarCurve {
    pub fn is_empty(&self) -> bool {
        krull_dimension(&self.ideal).map(|d| d < 0).unwrap_or(false)
    }
}

const MAX_LINEAR_REDRAWS: usize = 5;

/// Closure of the locus on the regular part where the differentials of the
/// linear form and of `f` become dependent, minus the critical locus:
/// equations plus (codim+2)-minors of [Jac; dl; df], saturated by the
/// stratified critical ideal and by the singular locus.
///
/// Genericity of the linear form is not decidable directly; the accepted
/// proxy is that the result has dimension at most one. Failing draws are
/// replaced by fresh generic forms, deterministically derived from the
/// rejected one, up to five attempts.
pub fn polar_curve_ideal(
    x: &VarietySpec,
    f: &Polynomial,
    l: &LinearForm,
) -> Result<PolarCurve, GeomError> {
    check_nonconstant_on(x, f)?;
    let mut current = l.clone();
    let mut last_dim = 2;
    for attempt in 0..MAX_LINEAR_REDRAWS {
        let ideal = polar_ideal_for(x, f, &current)?;
        let dim = krull_dimension(&ideal)?;
        if dim <= 1 {
            return Ok(PolarCurve {
                ideal,
                linear_form: current,
                source_function: f.clone(),
            });
        }
        last_dim = dim;
        current = sample_generic_linear(
            x.ring().num_vars(),
            linear_form_fingerprint(&current).wrapping_add(attempt as u64 + 1),
        );
    }
    Err(GeomError::NonGenericConfiguration {
        dim: last_dim,
        attempts: MAX_LINEAR_REDRAWS,
    })
}

fn polar_ideal_for(
    x: &VarietySpec,
    f: &Polynomial,
    l: &LinearForm,
) -> Result<IdealBasis, GeomError> {
    let ring = x.ring().clone();
    let n = ring.num_vars();
    let c = x.codim;
    let raw = if c + 2 > n {
        // On curves the dependency condition is vacuous: the polar locus is
        // the whole variety.
        std_ideal(&ring, x.ideal.generators().to_vec())?
    } else {
        let mut rows: Vec<Polynomial> = x.ideal.generators().to_vec();
        rows.push(l.to_polynomial(&ring));
        rows.push(f.clone());
        let jac = jacobian_matrix(&rows)?;
        let minors = minors_ideal(&jac, c + 2)?;
        let mut all = x.ideal.generators().to_vec();
        all.extend(minors.generators().iter().cloned());
        std_ideal(&ring, all)?
    };
    let crit = stratified_critical_ideal(x, f)?;
    let sing = singular_locus_ideal(x)?;
    let sat1 = saturate(&raw, &crit)?;
    Ok(saturate(&sat1, &sing)?)
}

fn linear_form_fingerprint(l: &LinearForm) -> u64 {
    // FNV-1a over the exact coefficient text; only used to derive redraw seeds.
    let mut h: u64 = 0xcbf29ce484222325;
    for c in &l.coefficients {
        for b in format!("{c};").bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

/// How a candidate point's coordinates are known.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exactness {
    /// Coordinates are rational and satisfy the defining ideal exactly.
    Exact,
    /// Coordinates are floating approximations with small residual.
    Numeric,
}

#[derive(Clone, Debug)]
pub struct CandidatePoint {
    pub point: ComplexPoint,
    pub exactness: Exactness,
    /// Exact coordinates when `exactness` is `Exact`.
    pub rational: Option<Vec<Rat>>,
}

/// The finite set of possible landing points of critical trajectories:
/// solutions of polar-curve equations joined with the stratified critical
/// equations.
#[derive(Clone, Debug)]
pub struct CandidatePointSet {
    pub points: Vec<CandidatePoint>,
    pub defining_ideal: IdealBasis,
}

pub fn candidate_limit_points(
    polar: &PolarCurve,
    x: &VarietySpec,
    f: &Polynomial,
    seed: u64,
) -> Result<CandidatePointSet, GeomError> {
    let ring = x.ring().clone();
    let crit = stratified_critical_ideal(x, f)?;
    let mut gens = polar.ideal.generators().to_vec();
    gens.extend(crit.generators().iter().cloned());
    let system = std_ideal(&ring, gens)?;
    let dim = krull_dimension(&system)?;
    if dim < 0 {
        return Ok(CandidatePointSet {
            points: Vec::new(),
            defining_ideal: system,
        });
    }
    if dim > 0 {
        return Err(GeomError::NotZeroDimensional { dim });
    }
    let (sols, _) = solve_affine_system_union(
        system.generators(),
        &ring,
        seed,
        3,
        &TrackOptions::default(),
    )?;
    let norm_gens: Vec<NumPoly> = system
        .generators()
        .iter()
        .map(|p| NumPoly::from_polynomial(p).normalized())
        .collect();
    let mut points = Vec::new();
    for s in sols {
        let residual = norm_gens
            .iter()
            .map(|p| p.eval(&s.x).norm())
            .fold(0.0, f64::max);
        if residual >= RESIDUAL_TOL {
            continue;
        }
        points.push(refine_candidate(&system, ComplexPoint(s.x)));
    }
    Ok(CandidatePointSet {
        points,
        defining_ideal: system,
    })
}

/// Try to recognize the point as exact rational coordinates; verified by
/// exact evaluation against every generator.
fn refine_candidate(ideal: &IdealBasis, point: ComplexPoint) -> CandidatePoint {
    let mut rational = Vec::with_capacity(point.dim());
    for z in &point.0 {
        match (snap_to_rational(z.re), z.im.abs() < 1e-9) {
            (Some(re), true) => rational.push(re),
            _ => {
                return CandidatePoint {
                    point,
                    exactness: Exactness::Numeric,
                    rational: None,
                }
            }
        }
    }
    let ok = ideal.generators().iter().all(|g| {
        g.eval_rational(&rational)
            .map(|v| v.is_zero())
            .unwrap_or(false)
    });
    if ok {
        let point = ComplexPoint::from_rational(&rational);
        CandidatePoint {
            point,
            exactness: Exactness::Exact,
            rational: Some(rational),
        }
    } else {
        CandidatePoint {
            point,
            exactness: Exactness::Numeric,
            rational: None,
        }
    }
}

/// Nearest rational with a small denominator, when the approximation error
/// is far below the recognition scale.
pub fn snap_to_rational(v: f64) -> Option<Rat> {
    const MAX_DEN: i64 = 1024;
    for den in 1..=MAX_DEN {
        let num = (v * den as f64).round();
        if num.abs() > 1e15 {
            return None;
        }
        if (v - num / den as f64).abs() < 1e-7 / den as f64 {
            return Some(BigRational::new(
                BigInt::from(num as i64),
                BigInt::from(den),
            ));
        }
    }
    None
}

/// Heuristic residual of a point against an ideal's generators (sup-norm
/// normalized).
pub fn point_residual(ideal: &IdealBasis, point: &ComplexPoint) -> f64 {
    ideal
        .generators()
        .iter()
        .map(|p| {
            let np = NumPoly::from_polynomial(p).normalized();
            np.eval(&point.0).norm()
        })
        .fold(0.0, f64::max)
}

/// Gradient of `f` numerically vanishes at the point (order of vanishing of
/// f - f(P) at P is at least two).
pub fn gradient_vanishes(f: &Polynomial, p: &ComplexPoint) -> bool {
    let n = f.ring().num_vars();
    let scale = f.max_coeff_abs().max(1.0);
    (0..n).all(|i| {
        f.derivative(i)
            .map(|d| {
                d.eval_complex(&p.0)
                    .map(|v| v.norm() < 1e-8 * scale)
                    .unwrap_or(false)
            })
            .unwrap_or(false)
    })
}
