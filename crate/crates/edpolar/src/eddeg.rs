//! End-to-end distance-degree pipelines: the polar-multiplicity route for an
//! arbitrary data point, the trajectory-counting route, their agreement
//! check, and the generic-data degree.

use crate::geometry::{
    candidate_limit_points, gradient_vanishes, polar_curve_ideal, stratified_critical_ideal,
    CandidatePointSet, GeomError, PolarCurve, VarietySpec,
};
use crate::ideals::krull_dimension;
use crate::multiplicity::{polar_multiplicities, MultError};
use crate::polycore::{
    rat_int, sample_generic_linear, ComplexPoint, LinearForm, PolyError, Polynomial, Rat,
};
use crate::tracker::{
    build_critical_family, classify_limits, filter_on_variety, solve_total_degree, LimitReport,
    TrackError,
};
use num::complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EdError {
    #[error("stratified critical locus is not isolated (dimension {dim}); the polar pipeline requires isolated singularities - use the stratum calculus with supplied invariants instead")]
    OutOfIsolatedScope { dim: i64 },
    #[error(
        "escape detected ({m_infinity} trajectories) while the no-escape hypothesis was asserted"
    )]
    AssertedNoEscapeViolated { m_infinity: usize },
    #[error(
        "generic-data degree unstable: draws gave {first} and {second} after {attempts} attempts"
    )]
    GenericUnstable {
        first: usize,
        second: usize,
        attempts: usize,
    },
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Tracking(#[from] TrackError),
    #[error(transparent)]
    Multiplicity(#[from] MultError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// A nearest-point problem: a variety, a data point with exact rational
/// coordinates, and the squared-distance function they induce.
#[derive(Clone, Debug)]
pub struct EDProblem {
    pub variety: VarietySpec,
    pub data_point: Vec<Rat>,
    pub distance_function: Polynomial,
    pub seed: u64,
    pub tracking: TrackingSettings,
}

/// Knobs of the trajectory tracker used by the pipelines.
#[derive(Clone, Copy, Debug)]
pub struct TrackingSettings {
    pub t0_magnitude: f64,
    pub schedule_steps: usize,
    pub escape_radius: f64,
}

impl Default for TrackingSettings {
    fn default() -> Self {
        TrackingSettings {
            t0_magnitude: 0.1,
            schedule_steps: 40,
            escape_radius: crate::tracker::numeric::DEFAULT_ESCAPE_RADIUS,
        }
    }
}

impl EDProblem {
    pub fn new(variety: VarietySpec, data_point: Vec<Rat>, seed: u64) -> EDProblem {
        let ring = variety.ring().clone();
        assert_eq!(ring.num_vars(), data_point.len());
        let mut f = Polynomial::zero(&ring);
        for (i, u) in data_point.iter().enumerate() {
            let diff = Polynomial::var(&ring, i).sub(&Polynomial::constant(&ring, u.clone()));
            f = f.add(&diff.mul(&diff));
        }
        EDProblem {
            variety,
            data_point,
            distance_function: f,
            seed,
            tracking: TrackingSettings::default(),
        }
    }

    pub fn with_tracking(mut self, tracking: TrackingSettings) -> EDProblem {
        self.tracking = tracking;
        self
    }
}

/// Per-limit-point breakdown of the degree computation.
#[derive(Clone, Debug)]
pub struct PointBreakdown {
    pub location: ComplexPoint,
    pub rational: Option<Vec<Rat>>,
    pub n_p: usize,
    pub mult_f: usize,
    pub mult_l: usize,
    /// Order of vanishing of the function minus its value is at least two
    /// here (the gradient vanishes), which forces a positive count.
    pub gradient_vanishes: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EscapeCheck {
    /// Tracker ran and saw no escapes.
    VerifiedNone,
    /// Tracker ran and counted escapes.
    Escapes(usize),
    /// Caller asserted no escape; the tracker was not consulted.
    Asserted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Polar,
    Tracking,
    Both,
}

/// Outcome of a degree computation. The degree is unconditional only when
/// no trajectory escapes.
#[derive(Clone, Debug)]
pub struct EDReport {
    pub method: Method,
    pub ed_degree: Option<usize>,
    pub per_point: Vec<PointBreakdown>,
    pub m_infinity: usize,
    pub total_morse: Option<usize>,
    pub escape_check: EscapeCheck,
    /// Set by the combined pipeline: both methods produced the same degree
    /// and per-point counts.
    pub methods_agree: Option<bool>,
    pub failed: bool,
    /// Multiplicities from clustering alone, without the polar anchor
    /// (tracking pipeline outside the isolated-singularity scope).
    pub empirical: bool,
    pub warnings: Vec<String>,
}

fn candidate_context(
    prob: &EDProblem,
) -> Result<(LinearForm, PolarCurve, CandidatePointSet), EdError> {
    let n = prob.variety.ring().num_vars();
    let l = sample_generic_linear(n, prob.seed);
    let polar = polar_curve_ideal(&prob.variety, &prob.distance_function, &l)?;
    let candidates =
        candidate_limit_points(&polar, &prob.variety, &prob.distance_function, prob.seed)?;
    Ok((l, polar, candidates))
}

/// Distance degree via polar intersection numbers at each candidate point,
/// summed. Requires the stratified critical locus to be isolated; the
/// no-escape hypothesis is verified by the tracker unless explicitly
/// asserted by the caller.
pub fn ed_degree_polar(prob: &EDProblem, assert_no_escape: bool) -> Result<EDReport, EdError> {
    let crit = stratified_critical_ideal(&prob.variety, &prob.distance_function)?;
    let dim = krull_dimension(&crit).map_err(GeomError::from)?;
    if dim > 0 {
        return Err(EdError::OutOfIsolatedScope { dim });
    }
    let (l, polar, candidates) = candidate_context(prob)?;

    let mut per_point = Vec::new();
    let mut total = 0usize;
    for cand in &candidates.points {
        let grad0 = gradient_vanishes(&prob.distance_function, &cand.point);
        let (mult_f, mult_l) = if polar.is_empty()
            || crate::geometry::point_residual(&polar.ideal, &cand.point) >= 1e-8
        {
            (0, 0)
        } else {
            polar_multiplicities(
                &polar,
                &prob.distance_function,
                &l,
                &cand.point,
                prob.seed ^ 0x706f6c6172,
            )?
        };
        if mult_f < mult_l {
            return Err(EdError::Multiplicity(MultError::NegativeDifference {
                mult_f,
                mult_l,
            }));
        }
        let n_p = mult_f - mult_l;
        total += n_p;
        per_point.push(PointBreakdown {
            location: cand.point.clone(),
            rational: cand.rational.clone(),
            n_p,
            mult_f,
            mult_l,
            gradient_vanishes: grad0,
        });
    }

    let mut warnings = Vec::new();
    let escape_check = if assert_no_escape {
        warnings.push("no-escape hypothesis asserted, not verified".to_string());
        EscapeCheck::Asserted
    } else {
        let limits = run_tracker(prob, &l, &candidates)?;
        if limits.m_infinity > 0 {
            EscapeCheck::Escapes(limits.m_infinity)
        } else {
            EscapeCheck::VerifiedNone
        }
    };
    let (m_infinity, failed) = match escape_check {
        EscapeCheck::Escapes(m) => (m, true),
        _ => (0, false),
    };
    Ok(EDReport {
        method: Method::Polar,
        ed_degree: if failed { None } else { Some(total) },
        per_point,
        m_infinity,
        total_morse: None,
        escape_check,
        methods_agree: None,
        failed,
        empirical: false,
        warnings,
    })
}

fn run_tracker(
    prob: &EDProblem,
    l: &LinearForm,
    candidates: &CandidatePointSet,
) -> Result<LimitReport, EdError> {
    let bundle = track_bundle(prob, l)?;
    Ok(classify_limits(&bundle, candidates)?)
}

fn track_bundle(
    prob: &EDProblem,
    l: &LinearForm,
) -> Result<crate::tracker::TrajectoryBundle, EdError> {
    let schedule = crate::tracker::schedule_with(
        prob.seed,
        prob.tracking.t0_magnitude,
        0.5,
        prob.tracking.schedule_steps,
    );
    Ok(crate::tracker::track_family_with(
        &prob.variety,
        &prob.distance_function,
        l,
        &schedule,
        prob.seed,
        prob.tracking.escape_radius,
    )?)
}

/// Distance degree by direct Morse counting: track the critical trajectories
/// of the perturbed distance function and count survivors. Works without the
/// isolated-singularity restriction, in which case the multiplicities are
/// labeled empirical.
pub fn ed_degree_tracking(prob: &EDProblem) -> Result<EDReport, EdError> {
    let n = prob.variety.ring().num_vars();
    let l = sample_generic_linear(n, prob.seed);
    let crit = stratified_critical_ideal(&prob.variety, &prob.distance_function)?;
    let crit_dim = krull_dimension(&crit).map_err(GeomError::from)?;
    let empirical = crit_dim > 0;

    let polar = polar_curve_ideal(&prob.variety, &prob.distance_function, &l)?;
    let candidates = if empirical {
        CandidatePointSet {
            points: Vec::new(),
            defining_ideal: crit,
        }
    } else {
        candidate_limit_points(&polar, &prob.variety, &prob.distance_function, prob.seed)?
    };

    let bundle = track_bundle(prob, &l)?;
    let report = if empirical {
        empirical_limits(&bundle, prob.seed)?
    } else {
        classify_limits(&bundle, &candidates)?
    };

    let mut warnings = Vec::new();
    if empirical {
        warnings.push("critical locus not isolated: multiplicities are empirical".to_string());
    }
    let per_point = report
        .limit_points
        .iter()
        .map(|p| PointBreakdown {
            location: p.location.clone(),
            rational: p.rational.clone(),
            n_p: p.multiplicity,
            mult_f: 0,
            mult_l: 0,
            gradient_vanishes: gradient_vanishes(&prob.distance_function, &p.location),
        })
        .collect();
    let m_infinity = report.m_infinity;
    Ok(EDReport {
        method: Method::Tracking,
        ed_degree: if m_infinity == 0 {
            Some(report.total_morse)
        } else {
            None
        },
        per_point,
        m_infinity,
        total_morse: Some(report.total_morse),
        escape_check: if m_infinity == 0 {
            EscapeCheck::VerifiedNone
        } else {
            EscapeCheck::Escapes(m_infinity)
        },
        methods_agree: None,
        failed: false,
        empirical,
        warnings,
    })
}

/// Cluster trajectory limits without a candidate anchor.
fn empirical_limits(
    bundle: &crate::tracker::TrajectoryBundle,
    _seed: u64,
) -> Result<LimitReport, EdError> {
    use crate::tracker::numeric::cluster_points_rel;
    use crate::tracker::{LimitPoint, PathStatus};
    let mut m_infinity = 0usize;
    let mut limits: Vec<Vec<Complex64>> = Vec::new();
    for p in &bundle.paths {
        match p.status {
            PathStatus::Escaped => m_infinity += 1,
            PathStatus::Converged => limits.push(p.limit.as_ref().unwrap().0.clone()),
            _ => return Err(EdError::Tracking(TrackError::PathsNotFinal)),
        }
    }
    let clusters = cluster_points_rel(&limits, 1e-5);
    let mut limit_points = Vec::new();
    for members in &clusters {
        let mut c = vec![Complex64::new(0.0, 0.0); limits[members[0]].len()];
        for &i in members {
            for (cj, v) in c.iter_mut().zip(&limits[i]) {
                *cj += v;
            }
        }
        for cj in c.iter_mut() {
            *cj /= members.len() as f64;
        }
        limit_points.push(LimitPoint {
            location: ComplexPoint(c),
            rational: None,
            multiplicity: members.len(),
        });
    }
    Ok(LimitReport {
        limit_points,
        m_infinity,
        total_morse: bundle.total_morse(),
        seed: bundle.seed,
        t_zero: bundle.t_schedule[0],
    })
}

/// Run both pipelines and cross-check: degrees and per-point counts must
/// match; a mismatch marks the report failed.
pub fn ed_degree_both(prob: &EDProblem, assert_no_escape: bool) -> Result<EDReport, EdError> {
    let polar = ed_degree_polar(prob, assert_no_escape)?;
    let tracking = ed_degree_tracking(prob)?;
    if assert_no_escape && tracking.m_infinity > 0 {
        return Err(EdError::AssertedNoEscapeViolated {
            m_infinity: tracking.m_infinity,
        });
    }
    let agree = polar.ed_degree == tracking.ed_degree
        && per_point_counts_match(&polar.per_point, &tracking.per_point);
    let mut merged = polar;
    merged.method = Method::Both;
    merged.total_morse = tracking.total_morse;
    merged.m_infinity = merged.m_infinity.max(tracking.m_infinity);
    merged.methods_agree = Some(agree);
    merged.failed = merged.failed || !agree;
    if !agree {
        merged
            .warnings
            .push("polar and tracking methods disagree".to_string());
    }
    // Keep the tracking multiplicities visible next to the polar ones.
    for tp in &tracking.per_point {
        if !merged
            .per_point
            .iter()
            .any(|pp| pp.location.dist(&tp.location) < 1e-6)
        {
            merged.per_point.push(tp.clone());
        }
    }
    Ok(merged)
}

fn per_point_counts_match(a: &[PointBreakdown], b: &[PointBreakdown]) -> bool {
    // Compare nonzero counts as location-multiplicity multisets.
    let significant = |list: &[PointBreakdown]| -> Vec<(Vec<i64>, usize)> {
        let mut v: Vec<(Vec<i64>, usize)> = list
            .iter()
            .filter(|p| p.n_p > 0)
            .map(|p| {
                (
                    p.location
                        .0
                        .iter()
                        .flat_map(|z| [(z.re * 1e6).round() as i64, (z.im * 1e6).round() as i64])
                        .collect(),
                    p.n_p,
                )
            })
            .collect();
        v.sort();
        v
    };
    significant(a) == significant(b)
}

/// Number of critical points of the squared distance function for random
/// rational data, validated by a second independent draw.
pub fn ed_degree_generic(variety: &VarietySpec, seed: u64) -> Result<usize, EdError> {
    let mut attempts = 0usize;
    let mut last = (0usize, 0usize);
    while attempts < 3 {
        let a = generic_count(variety, seed.wrapping_add(2 * attempts as u64))?;
        let b = generic_count(variety, seed.wrapping_add(2 * attempts as u64 + 1))?;
        if a == b {
            return Ok(a);
        }
        last = (a, b);
        attempts += 1;
    }
    Err(EdError::GenericUnstable {
        first: last.0,
        second: last.1,
        attempts,
    })
}

fn generic_count(variety: &VarietySpec, seed: u64) -> Result<usize, EdError> {
    let ring = variety.ring().clone();
    let n = ring.num_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x67656e65726963);
    let u: Vec<Rat> = (0..n)
        .map(|_| {
            let num = rng.gen_range(-100i64..=100);
            let den = rng.gen_range(1i64..=20);
            rat_int(num) / rat_int(den)
        })
        .collect();
    let prob = EDProblem::new(variety.clone(), u, seed);
    let l = sample_generic_linear(n, seed ^ 0x6c);
    let family = build_critical_family(&prob.variety, &prob.distance_function, &l, seed)?;
    // The unperturbed critical system is the family at parameter zero.
    let system = family.at(Complex64::new(0.0, 0.0));
    let solved = solve_total_degree(&system, seed)?;
    let on_variety = filter_on_variety(&system, &solved.solutions);
    Ok(on_variety.len())
}


#[cfg(test)]
mod escape_demo_tests {
    use super::*;
    use crate::polycore::{parse_polynomial, Ring};
    use num::Zero;

    #[test]
    fn tracking_withholds_degree_when_trajectories_escape() {
        // The escape instance wired through the tracking pipeline: the
        // report carries the escape count and no unconditional degree.
        let r = Ring::new(vec!["x", "y"]);
        let prob = EDProblem {
            variety: VarietySpec::ambient(&r),
            data_point: vec![Rat::zero(), Rat::zero()],
            distance_function: parse_polynomial("x + x^2*y", &r).unwrap(),
            seed: 11,
            tracking: TrackingSettings::default(),
        };
        let report = ed_degree_tracking(&prob).unwrap();
        assert_eq!(report.m_infinity, 2);
        assert_eq!(report.ed_degree, None);
        assert_eq!(report.total_morse, Some(2));
        assert!(report.per_point.is_empty());
        assert_eq!(report.escape_check, EscapeCheck::Escapes(2));
    }
}

#[cfg(test)]
mod asserted_escape_tests {
    use super::*;
    use crate::polycore::{parse_polynomial, Ring};
    use num::Zero;

    #[test]
    fn asserted_no_escape_is_checked_by_the_combined_pipeline() {
        let r = Ring::new(vec!["x", "y"]);
        let prob = EDProblem {
            variety: VarietySpec::ambient(&r),
            data_point: vec![Rat::zero(), Rat::zero()],
            distance_function: parse_polynomial("x + x^2*y", &r).unwrap(),
            seed: 11,
            tracking: TrackingSettings::default(),
        };
        match ed_degree_both(&prob, true) {
            Err(EdError::AssertedNoEscapeViolated { m_infinity }) => assert_eq!(m_infinity, 2),
            other => panic!("expected the asserted-escape violation, got {other:?}"),
        }
    }
}
