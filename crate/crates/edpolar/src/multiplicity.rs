//! Local intersection multiplicities along the polar curve, the polar
//! difference formula for the local trajectory count, an exact bivariate
//! cross-check through resultants, and a Milnor-number oracle via standard
//! monomial counting.

use crate::geometry::{point_residual, snap_to_rational, PolarCurve};
use crate::ideals::{krull_dimension, quotient_dimension, saturate, std_ideal, IdealError};
use crate::polycore::{rat_int, ComplexPoint, LinearForm, PolyError, Polynomial, Rat, Ring};
use crate::tracker::numeric::{
    solve_numeric_system, vec_dist, NumPoly, NumericError, TrackOptions,
};
use num::complex::Complex64;
use num::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MultError {
    #[error("point does not lie on the curve (residual {residual:.3e})")]
    NotOnCurve { residual: f64 },
    #[error("inconclusive multiplicity: counts {level1} and {level2} disagree across deformation levels")]
    Inconclusive { level1: usize, level2: usize },
    #[error("curve ideal is not principal ({generators} generators)")]
    NotPrincipal { generators: usize },
    #[error("resultant vanishes identically: the hypersurface shares a component with the curve")]
    ZeroResultant,
    #[error("operation requires exactly two variables, ring has {nvars}")]
    NotBivariate { nvars: usize },
    #[error("point coordinates are not recognizably rational")]
    NotRational,
    #[error("point is not a critical point of the function")]
    NotCritical,
    #[error("critical locus is not isolated at the point (dimension {dim})")]
    NonIsolated { dim: i64 },
    #[error("localized Milnor numbers disagree: {first} vs {second}")]
    LocalizationMismatch { first: usize, second: usize },
    #[error("negative polar difference {mult_f} - {mult_l}: non-generic linear form or multiplicity failure")]
    NegativeDifference { mult_f: usize, mult_l: usize },
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MultMethod {
    NumericDeformation,
    ResultantOrder,
}

/// A local intersection count at a point, with the per-level diagnostics
/// that certify its stability.
#[derive(Clone, Debug)]
pub struct LocalMultiplicityResult {
    pub point: ComplexPoint,
    pub against: Polynomial,
    pub value: usize,
    pub method: MultMethod,
    /// (|delta|, count) per deformation level.
    pub diagnostics: Vec<(f64, usize)>,
}

const ON_CURVE_TOL: f64 = 1e-8;

/// Number of intersection points of the curve with the level set
/// `g = g(P) + delta` that are local to `P`, for a generic small complex
/// `delta`, verified stable across two deformation magnitudes.
///
/// Locality is decided inside an adaptive ball: the initial radius comes
/// from the undeformed intersection, and it tightens whenever a solution of
/// the deformed system is detected to be stationary under shrinking `delta`
/// (a foreign intersection that merely sits nearby, rather than a branch
/// collapsing into `P`). True local points move toward `P` like a fractional
/// power of `delta`; stationary ones do not move at all.
pub fn local_intersection_multiplicity(
    curve: &PolarCurve,
    g: &Polynomial,
    p: &ComplexPoint,
    seed: u64,
) -> Result<LocalMultiplicityResult, MultError> {
    let residual = point_residual(&curve.ideal, p);
    if residual >= ON_CURVE_TOL {
        return Err(MultError::NotOnCurve { residual });
    }
    let n = g.ring().num_vars();
    // Work with the sup-norm-normalized hypersurface so the deformation
    // magnitude is meaningful relative to the local geometry.
    let g_num = NumPoly::from_polynomial(g).normalized();
    let g_at_p = g_num.eval(&p.0);

    let curve_eqs: Vec<NumPoly> = curve
        .ideal
        .generators()
        .iter()
        .map(|q| NumPoly::from_polynomial(q).normalized())
        .collect();

    // Initial separation scale from the undeformed intersection.
    let mut undeformed = curve_eqs.clone();
    undeformed.push(g_num.minus_const(g_at_p));
    let (base_sols, _) = solve_union(&undeformed, n, seed ^ 0x756e646566, 3)?;
    let mut nearest_other = f64::INFINITY;
    for s in &base_sols {
        let d = vec_dist(&s.x, &p.0);
        if d > 1e-6 {
            nearest_other = nearest_other.min(d);
        }
    }
    let mut radius = (0.5 * nearest_other).clamp(1e-3, 1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x64656c7461);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);

    let mut last_counts = (usize::MAX, usize::MAX);
    let mut diagnostics = Vec::new();
    let mut delta_mag = radius * radius * 1e-2;
    for _attempt in 0..6 {
        let mut level_sols: Vec<Vec<crate::tracker::numeric::SolvedPoint>> = Vec::new();
        diagnostics.clear();
        for level in 0..2i32 {
            let mag = delta_mag / 10f64.powi(level);
            let delta = Complex64::from_polar(mag, phase);
            let mut eqs = curve_eqs.clone();
            eqs.push(g_num.minus_const(g_at_p + delta));
            let (sols, _) = solve_union(&eqs, n, seed ^ (0xb0ba + level as u64), 3)?;
            level_sols.push(sols);
        }

        // A solution of the finer level that barely moved relative to its
        // distance from P is a foreign intersection; shrink the ball below
        // it and recalibrate the deformation.
        let mut stationary_dist = f64::INFINITY;
        for q2 in &level_sols[1] {
            let d2 = vec_dist(&q2.x, &p.0);
            if d2 < 1e-9 || d2 > 2.0 * radius {
                continue;
            }
            let moved = level_sols[0]
                .iter()
                .map(|q1| vec_dist(&q1.x, &q2.x))
                .fold(f64::INFINITY, f64::min);
            if moved < 0.3 * d2 {
                stationary_dist = stationary_dist.min(d2);
            }
        }
        if stationary_dist < 2.0 * radius {
            let tightened = (0.45 * stationary_dist).clamp(1e-4, 1.0);
            if tightened < 0.9 * radius {
                radius = tightened;
                delta_mag = radius * radius * 1e-2;
                continue;
            }
        }

        // In-ball count. Split points whose mutual separation falls below
        // the solver's merge radius surface as one non-simple cluster; its
        // path count is exactly the number of merged simple roots, so the
        // count stays exact.
        let counts: Vec<usize> = level_sols
            .iter()
            .map(|sols| {
                sols.iter()
                    .filter(|q| vec_dist(&q.x, &p.0) < radius)
                    .map(|q| if q.simple { 1 } else { q.path_count })
                    .sum()
            })
            .collect();
        diagnostics.push((delta_mag, counts[0]));
        diagnostics.push((delta_mag / 10.0, counts[1]));
        if counts[0] == counts[1] {
            return Ok(LocalMultiplicityResult {
                point: p.clone(),
                against: g.clone(),
                value: counts[0],
                method: MultMethod::NumericDeformation,
                diagnostics: diagnostics.clone(),
            });
        }
        last_counts = (counts[0], counts[1]);
        // Disagreement without a detected foreign point: recalibrate tighter
        // and retry.
        radius *= 0.5;
        delta_mag = radius * radius * 1e-2;
        if radius < 1e-4 {
            break;
        }
    }
    Err(MultError::Inconclusive {
        level1: last_counts.0,
        level2: last_counts.1,
    })
}

fn solve_union(
    eqs: &[NumPoly],
    n: usize,
    seed: u64,
    rounds: usize,
) -> Result<
    (
        Vec<crate::tracker::numeric::SolvedPoint>,
        crate::tracker::numeric::SolveStats,
    ),
    NumericError,
> {
    use crate::tracker::numeric::{sort_points, vec_norm, SolveStats, CLUSTER_RADIUS};
    let mut all: Vec<crate::tracker::numeric::SolvedPoint> = Vec::new();
    let mut stats = SolveStats {
        paths_started: 0,
        paths_diverged: 0,
        paths_failed: 0,
    };
    let mut last_err = None;
    for round in 0..rounds.max(1) {
        let sub = seed
            .wrapping_mul(0x9e3779b97f4a7c15)
            .wrapping_add(round as u64);
        match solve_numeric_system(eqs, n, sub, &TrackOptions::default()) {
            Ok((sols, st)) => {
                stats.paths_started += st.paths_started;
                stats.paths_diverged += st.paths_diverged;
                stats.paths_failed += st.paths_failed;
                for s in sols {
                    let dup = all.iter().position(|t| {
                        vec_dist(&t.x, &s.x) <= CLUSTER_RADIUS * (1.0 + vec_norm(&t.x))
                    });
                    match dup {
                        Some(i) => {
                            // Keep the most-resolved coordinates but remember
                            // the largest path count any round observed.
                            let paths = all[i].path_count.max(s.path_count);
                            if s.residual < all[i].residual {
                                all[i] = s;
                            }
                            all[i].path_count = paths;
                        }
                        None => all.push(s),
                    }
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    if all.is_empty() {
        if let Some(e) = last_err {
            return Err(e);
        }
    }
    sort_points(&mut all);
    Ok((all, stats))
}

/// Exact order of vanishing at `P` of the resultant of the curve's single
/// generator with `g - g(P)`, after a generic linear change of coordinates
/// centering `P`. Cross-checks the numeric deformation count on plane
/// curves.
pub fn resultant_order_bivariate(
    curve: &PolarCurve,
    g: &Polynomial,
    p: &ComplexPoint,
) -> Result<usize, MultError> {
    let ring = curve.ideal.ring().clone();
    let n = ring.num_vars();
    if n != 2 {
        return Err(MultError::NotBivariate { nvars: n });
    }
    let gens = match curve.ideal.groebner() {
        Some((gb, _)) if !gb.is_empty() => gb.to_vec(),
        _ => curve.ideal.generators().to_vec(),
    };
    if gens.len() != 1 {
        return Err(MultError::NotPrincipal {
            generators: gens.len(),
        });
    }
    let f = &gens[0];

    // Exact rational center, verified on the curve.
    let center: Vec<Rat> =
        p.0.iter()
            .map(|z| {
                if z.im.abs() > 1e-9 {
                    None
                } else {
                    snap_to_rational(z.re)
                }
            })
            .collect::<Option<Vec<_>>>()
            .ok_or(MultError::NotRational)?;
    if !f.eval_rational(&center)?.is_zero() {
        return Err(MultError::NotOnCurve { residual: 1.0 });
    }

    let x = Polynomial::var(&ring, 0);
    let y = Polynomial::var(&ring, 1);
    // Fixed generic-enough shears; the true multiplicity is the minimum over
    // shears for which the construction stays proper.
    let shears: [[i64; 4]; 3] = [[1, 2, 1, 3], [2, -1, 3, 1], [1, 5, -2, 3]];
    let mut best: Option<usize> = None;
    let mut all_zero = true;
    for m in shears {
        let sub_x = x
            .scale(&rat_int(m[0]))
            .add(&y.scale(&rat_int(m[1])))
            .add(&Polynomial::constant(&ring, center[0].clone()));
        let sub_y = x
            .scale(&rat_int(m[2]))
            .add(&y.scale(&rat_int(m[3])))
            .add(&Polynomial::constant(&ring, center[1].clone()));
        let images = vec![sub_x, sub_y];
        let fh = f.substitute(&images)?;
        let gp = g.eval_rational(&center)?;
        let gh = g.substitute(&images)?.sub(&Polynomial::constant(&ring, gp));
        if gh.is_zero() {
            return Err(MultError::ZeroResultant);
        }
        // Properness: the shear must keep the full y-degree in both inputs.
        let (fy, fd) = as_univariate_in_y(&fh);
        let (gy, gd) = as_univariate_in_y(&gh);
        if fd < f.degree().unwrap_or(0) || gd < gh.degree().unwrap_or(0) {
            continue;
        }
        if let Some(ord) = resultant_order_at_zero(&fy, &gy, &ring)? {
            all_zero = false;
            best = Some(best.map_or(ord, |b: usize| b.min(ord)));
        }
    }
    if all_zero {
        return Err(MultError::ZeroResultant);
    }
    Ok(best.expect("some shear produced a nonzero resultant"))
}

/// Coefficients in y, each a univariate polynomial in x (exponent-indexed),
/// plus the y-degree.
fn as_univariate_in_y(p: &Polynomial) -> (Vec<Vec<Rat>>, u32) {
    let mut ydeg = 0u32;
    let mut xdeg = 0u32;
    for (m, _) in p.terms() {
        ydeg = ydeg.max(m.0[1]);
        xdeg = xdeg.max(m.0[0]);
    }
    let mut coeffs = vec![vec![Rat::zero(); xdeg as usize + 1]; ydeg as usize + 1];
    for (m, c) in p.terms() {
        coeffs[m.0[1] as usize][m.0[0] as usize] = c.clone();
    }
    (coeffs, ydeg)
}

fn eval_x(poly: &[Rat], at: &Rat) -> Rat {
    let mut acc = Rat::zero();
    for c in poly.iter().rev() {
        acc = acc * at + c;
    }
    acc
}

/// Order of vanishing at x = 0 of Res_y(F, G), computed by exact sampling of
/// the Sylvester determinant and Lagrange interpolation. `None` when the
/// resultant is identically zero.
fn resultant_order_at_zero(
    fy: &[Vec<Rat>],
    gy: &[Vec<Rat>],
    _ring: &Ring,
) -> Result<Option<usize>, MultError> {
    let df = fy.len() - 1;
    let dg = gy.len() - 1;
    if df == 0 || dg == 0 {
        // A constant in y has an empty Sylvester block; treat the resultant
        // as a power of the constant, whose order is read off directly.
        let flat = if df == 0 { &fy[0] } else { &gy[0] };
        let ord = flat.iter().position(|c| !c.is_zero());
        return Ok(ord.map(|o| o * if df == 0 { dg } else { df }));
    }
    let degree_bound = fy.iter().flat_map(|c| c.iter()).count().max(1);
    // Safe coarse bound on deg_x of the resultant.
    let bx_f = fy.iter().map(|c| c.len()).max().unwrap_or(1) - 1;
    let bx_g = gy.iter().map(|c| c.len()).max().unwrap_or(1) - 1;
    let bound = dg * bx_f + df * bx_g;
    let _ = degree_bound;

    // Sample nodes 0, 1, -1, 2, -2, ...
    let mut nodes = Vec::with_capacity(bound + 1);
    let mut k = 0i64;
    while nodes.len() < bound + 1 {
        nodes.push(rat_int(k));
        if k > 0 {
            nodes.push(rat_int(-k));
        }
        k += 1;
    }
    nodes.truncate(bound + 1);

    let mut values = Vec::with_capacity(nodes.len());
    for node in &nodes {
        let frow: Vec<Rat> = fy.iter().map(|c| eval_x(c, node)).collect();
        let grow: Vec<Rat> = gy.iter().map(|c| eval_x(c, node)).collect();
        values.push(sylvester_det(&frow, &grow));
    }
    if values.iter().all(|v| v.is_zero()) {
        return Ok(None);
    }
    let coeffs = lagrange_interpolate(&nodes, &values);
    Ok(coeffs.iter().position(|c| !c.is_zero()))
}

/// Determinant of the Sylvester matrix of two univariate polynomials given
/// by coefficient lists (ascending degree).
fn sylvester_det(f: &[Rat], g: &[Rat]) -> Rat {
    let df = f.len() - 1;
    let dg = g.len() - 1;
    let n = df + dg;
    let mut m = vec![vec![Rat::zero(); n]; n];
    for r in 0..dg {
        for (i, c) in f.iter().enumerate() {
            m[r][r + df - i] = c.clone();
        }
    }
    for r in 0..df {
        for (i, c) in g.iter().enumerate() {
            m[dg + r][r + dg - i] = c.clone();
        }
    }
    rational_det(m)
}

fn rational_det(mut m: Vec<Vec<Rat>>) -> Rat {
    let n = m.len();
    let mut det = Rat::one();
    for col in 0..n {
        let Some(piv) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rat::zero();
        };
        if piv != col {
            m.swap(col, piv);
            det = -det;
        }
        det *= m[col][col].clone();
        let inv = Rat::one() / m[col][col].clone();
        for r in (col + 1)..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone() * &inv;
            for c in col..n {
                let sub = &factor * &m[col][c];
                m[r][c] = &m[r][c] - &sub;
            }
        }
    }
    det
}

/// Exact coefficients of the interpolating polynomial through the given
/// nodes and values, ascending degree.
fn lagrange_interpolate(nodes: &[Rat], values: &[Rat]) -> Vec<Rat> {
    let n = nodes.len();
    let mut acc = vec![Rat::zero(); n];
    for i in 0..n {
        if values[i].is_zero() {
            continue;
        }
        // Basis polynomial prod_{j != i} (x - x_j) / (x_i - x_j)
        let mut basis = vec![Rat::zero(); n];
        basis[0] = Rat::one();
        let mut deg = 0usize;
        let mut denom = Rat::one();
        for j in 0..n {
            if j == i {
                continue;
            }
            // Multiply basis by (x - x_j).
            let mut next = vec![Rat::zero(); n];
            for (k, b) in basis.iter().enumerate().take(deg + 1) {
                next[k + 1] = &next[k + 1] + b;
                next[k] = &next[k] - &(b * &nodes[j]);
            }
            basis = next;
            deg += 1;
            denom *= &nodes[i] - &nodes[j];
        }
        let w = &values[i] / denom;
        for k in 0..n {
            acc[k] = &acc[k] + &(&basis[k] * &w);
        }
    }
    acc
}

/// Local trajectory count at `P` as the difference of the polar curve's
/// intersection numbers with the level sets of `f` and of the linear form.
/// Returns zero when the polar curve is empty or misses `P`.
pub fn n_p_polar(
    curve: &PolarCurve,
    f: &Polynomial,
    l: &LinearForm,
    p: &ComplexPoint,
    seed: u64,
) -> Result<usize, MultError> {
    if curve.is_empty() {
        return Ok(0);
    }
    if point_residual(&curve.ideal, p) >= ON_CURVE_TOL {
        return Ok(0);
    }
    let ring = curve.ideal.ring().clone();
    let mult_f = local_intersection_multiplicity(curve, f, p, seed)?;
    let l_poly = l.to_polynomial(&ring);
    let mult_l = local_intersection_multiplicity(curve, &l_poly, p, seed.wrapping_add(1))?;
    if mult_f.value < mult_l.value {
        return Err(MultError::NegativeDifference {
            mult_f: mult_f.value,
            mult_l: mult_l.value,
        });
    }
    Ok(mult_f.value - mult_l.value)
}

/// Both polar intersection numbers at `P`, for reporting.
pub fn polar_multiplicities(
    curve: &PolarCurve,
    f: &Polynomial,
    l: &LinearForm,
    p: &ComplexPoint,
    seed: u64,
) -> Result<(usize, usize), MultError> {
    let ring = curve.ideal.ring().clone();
    let mult_f = local_intersection_multiplicity(curve, f, p, seed)?;
    let l_poly = l.to_polynomial(&ring);
    let mult_l = local_intersection_multiplicity(curve, &l_poly, p, seed.wrapping_add(1))?;
    Ok((mult_f.value, mult_l.value))
}

/// Milnor number of an isolated critical point on affine space: the
/// dimension of the local algebra by the Jacobian ideal, counted as standard
/// monomials after translating the point to the origin. Contributions of
/// other critical points are removed by saturating with linear forms through
/// the origin, twice, with agreement required.
pub fn milnor_number_oracle(f: &Polynomial, p: &ComplexPoint) -> Result<usize, MultError> {
    let ring = f.ring().clone();
    let n = ring.num_vars();
    let center: Vec<Rat> =
        p.0.iter()
            .map(|z| {
                if z.im.abs() > 1e-9 {
                    None
                } else {
                    snap_to_rational(z.re)
                }
            })
            .collect::<Option<Vec<_>>>()
            .ok_or(MultError::NotRational)?;

    // Verify the critical point exactly.
    for i in 0..n {
        if !f.derivative(i)?.eval_rational(&center)?.is_zero() {
            return Err(MultError::NotCritical);
        }
    }
    // Translate to the origin.
    let images: Vec<Polynomial> = (0..n)
        .map(|i| Polynomial::var(&ring, i).add(&Polynomial::constant(&ring, center[i].clone())))
        .collect();
    let shifted = f.substitute(&images)?;
    let jac: Vec<Polynomial> = (0..n)
        .map(|i| shifted.derivative(i))
        .collect::<Result<_, _>>()?;
    let jac_ideal = std_ideal(&ring, jac)?;
    let dim = krull_dimension(&jac_ideal)?;
    if dim != 0 {
        return Err(MultError::NonIsolated { dim });
    }
    let total = quotient_dimension(&jac_ideal)?.expect("zero-dimensional");

    // Localize at the origin by removing everything off a generic hyperplane
    // through it.
    let mut values = Vec::new();
    for probe in 0..2u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(0x6d696c6e6f72 ^ probe);
        let h = Polynomial::from_terms(
            &ring,
            (0..n).map(|i| {
                (
                    crate::polycore::Monomial::var(n, i),
                    rat_int(rng.gen_range(1..100)),
                )
            }),
        );
        let h_ideal = std_ideal(&ring, vec![h])?;
        let away = saturate(&jac_ideal, &h_ideal)?;
        let other = quotient_dimension(&away)?.unwrap_or(0);
        values.push(total - other);
    }
    if values[0] != values[1] {
        return Err(MultError::LocalizationMismatch {
            first: values[0],
            second: values[1],
        });
    }
    Ok(values[0])
}
