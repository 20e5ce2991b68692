//! Numeric heart of the pipeline: square critical systems (Lagrange
//! multipliers in general, a determinantal equation on curves), total-degree
//! solving, continuation of critical points along a shrinking perturbation
//! schedule, and classification of their limits.

pub mod numeric;

use crate::geometry::{CandidatePointSet, GeomError, VarietySpec};
use crate::polycore::{ComplexPoint, LinearForm, PolyError, Polynomial, Rat, Ring};
use num::complex::Complex64;
use num::{One, Signed};
use numeric::{
    newton_polish, numeric_rank, solve_square, track_path, vec_dist, NumPoly, NumericError,
    ParamSystem, PathOutcome, SegmentHomotopy, SolvedPoint, TrackOptions,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Residual under which a tracked point counts as lying on the variety.
const ON_VARIETY_TOL: f64 = 1e-8;
/// Declared convergence when consecutive extrapolated limits agree this well.
const LIMIT_STABLE_TOL: f64 = 1e-7;
/// Restart budget when a degenerate perturbation is detected.
const MAX_RESTARTS: usize = 3;

#[derive(Debug, Error)]
pub enum TrackError {
    #[error("recombination of variety generators stayed degenerate after redraws")]
    DegenerateRecombination,
    #[error("family tracking failed after {restarts} restarts: {reason}")]
    FamilyFailed { restarts: usize, reason: String },
    #[error("trajectory paths are not all final")]
    PathsNotFinal,
    #[error("limit at {point:?} is not near any candidate point (distance {dist:.3e}, snap radius {radius:.3e})")]
    UnanchoredLimit {
        point: Vec<f64>,
        dist: f64,
        radius: f64,
    },
    #[error("conservation violated: {converged} converged + {escaped} escaped != {total} tracked")]
    ConservationMismatch {
        converged: usize,
        escaped: usize,
        total: usize,
    },
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

/// A square polynomial system prepared for the numeric solver. The equations
/// live in an extended ring `(x_1..x_N, lam_1..lam_c, t)` whose final
/// variable is the perturbation parameter.
#[derive(Clone, Debug)]
pub struct SquareSystem {
    pub equations: Vec<Polynomial>,
    pub ring: Ring,
    pub ambient_vars: usize,
    pub multipliers: usize,
    pub codim: usize,
    pub t_value: Complex64,
    pub provenance: String,
    /// Original variety generators, for on-variety filtering.
    originals: Vec<Polynomial>,
}

impl SquareSystem {
    pub fn unknowns(&self) -> usize {
        self.ambient_vars + self.multipliers
    }

    fn param_system(&self) -> Result<ParamSystem, NumericError> {
        ParamSystem::new(&self.equations)
    }
}

/// The t-parametric Lagrange family for the critical points of `f - t l` on
/// the regular part of the variety.
#[derive(Clone, Debug)]
pub struct CriticalFamily {
    pub ring: Ring,
    pub equations: Vec<Polynomial>,
    pub ambient_vars: usize,
    pub multipliers: usize,
    pub codim: usize,
    originals: Vec<Polynomial>,
    provenance: String,
}

impl CriticalFamily {
    /// Fix the perturbation parameter, yielding a square system.
    pub fn at(&self, t: Complex64) -> SquareSystem {
        SquareSystem {
            equations: self.equations.clone(),
            ring: self.ring.clone(),
            ambient_vars: self.ambient_vars,
            multipliers: self.multipliers,
            codim: self.codim,
            t_value: t,
            provenance: self.provenance.clone(),
            originals: self.originals.clone(),
        }
    }
}

/// Build the critical family of `f - t l` on the regular part: the Lagrange
/// system `{h_j = 0, grad f_t = sum lam_j grad h_j}` where the `h_j` are
/// `codim` random rational recombinations of the variety's generators, or,
/// when the variety is a curve, the better-conditioned determinantal system
/// `{h_j = 0, det[Jac h; d f_t] = 0}` without multipliers. Points on the
/// singular locus or on extraneous components of the recombination are
/// filtered downstream by membership residuals and a Jacobian rank test.
pub fn build_critical_family(
    x: &VarietySpec,
    f: &Polynomial,
    l: &LinearForm,
    seed: u64,
) -> Result<CriticalFamily, TrackError> {
    let ring = x.ring().clone();
    let n = ring.num_vars();
    let c = x.codim;
    let gens = x.ideal.generators().to_vec();

    let mut lam_names: Vec<String> = Vec::new();
    let mut taken = ring.clone();
    for j in 0..c {
        let name = taken.fresh_var(&format!("lam{j}"));
        taken = taken.extend(&[&name]);
        lam_names.push(name);
    }
    let t_name = taken.fresh_var("tp");
    let ext_names: Vec<&str> = lam_names
        .iter()
        .map(String::as_str)
        .chain([t_name.as_str()])
        .collect();
    let ext = ring.extend(&ext_names);
    let id_map: Vec<usize> = (0..n).collect();

    // Scale the linear form to unit sup-norm (exactly, over the rationals);
    // this only reparametrizes t and keeps the multipliers well conditioned.
    let lmax = l
        .coefficients
        .iter()
        .map(|c| c.abs())
        .max()
        .expect("nonzero form");
    let l_poly = l.to_polynomial(&ring).scale(&(Rat::one() / lmax));

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c616772616e6765);
    for _attempt in 0..4 {
        // Recombine k generators into c (skipped when already square).
        let recombined: Vec<Polynomial> = if gens.len() == c {
            gens.clone()
        } else {
            (0..c)
                .map(|_| {
                    let mut acc = Polynomial::zero(&ring);
                    for g in &gens {
                        let w = crate::polycore::rat_int(rng.gen_range(-9i64..=9));
                        acc = acc.add(&g.scale(&w));
                    }
                    acc
                })
                .collect()
        };
        if recombined.iter().any(|h| h.is_zero()) {
            continue;
        }

        // Generic nonsingularity probes: the recombined constraints must
        // have full rank, and the assembled square system must have a
        // nonsingular Jacobian at a random point.
        if c > 0 && !recombination_ok(&recombined, c, &mut rng) {
            continue;
        }

        if n == c + 1 {
            // Curve case: the stacked Jacobian [Jac h; df_t] is square, so a
            // single determinant replaces the multiplier block. This stays
            // far better conditioned near the singular locus, where the
            // multiplier formulation degenerates quadratically.
            let det_ring = ring.extend(&[&t_name]);
            let det_map: Vec<usize> = (0..n).collect();
            let t = Polynomial::var(&det_ring, n);
            let f_t = f
                .embed(&det_ring, &det_map)
                .sub(&t.mul(&l_poly.embed(&det_ring, &det_map)));
            let h_ext: Vec<Polynomial> = recombined
                .iter()
                .map(|h| h.embed(&det_ring, &det_map))
                .collect();
            let mut rows: Vec<Vec<Polynomial>> = Vec::with_capacity(n);
            for h in &h_ext {
                rows.push((0..n).map(|i| h.derivative(i)).collect::<Result<_, _>>()?);
            }
            rows.push(
                (0..n)
                    .map(|i| f_t.derivative(i))
                    .collect::<Result<_, _>>()?,
            );
            let det = poly_det(&rows, &det_ring);
            let mut equations = h_ext;
            equations.push(det);
            if !family_jacobian_ok(&equations, n, &mut rng) {
                continue;
            }
            return Ok(CriticalFamily {
                ring: det_ring,
                equations,
                ambient_vars: n,
                multipliers: 0,
                codim: c,
                originals: gens.clone(),
                provenance: format!(
                    "determinantal critical system on a curve: {} generators recombined to {} constraints",
                    gens.len(),
                    c
                ),
            });
        }

        let t = Polynomial::var(&ext, n + c);
        let f_t = f
            .embed(&ext, &id_map)
            .sub(&t.mul(&l_poly.embed(&ext, &id_map)));
        let h_ext: Vec<Polynomial> = recombined.iter().map(|h| h.embed(&ext, &id_map)).collect();

        let mut equations: Vec<Polynomial> = h_ext.clone();
        for i in 0..n {
            let mut eq = f_t.derivative(i)?;
            for (j, h) in h_ext.iter().enumerate() {
                let lam = Polynomial::var(&ext, n + j);
                eq = eq.sub(&lam.mul(&h.derivative(i)?));
            }
            equations.push(eq);
        }

        if !family_jacobian_ok(&equations, n + c, &mut rng) {
            continue;
        }

        return Ok(CriticalFamily {
            ring: ext,
            equations,
            ambient_vars: n,
            multipliers: c,
            codim: c,
            originals: gens.clone(),
            provenance: format!(
                "lagrange critical system: {} generators recombined to {} constraints, {} unknowns",
                gens.len(),
                c,
                n + c
            ),
        });
    }
    Err(TrackError::DegenerateRecombination)
}

fn poly_det(rows: &[Vec<Polynomial>], ring: &Ring) -> Polynomial {
    let n = rows.len();
    if n == 1 {
        return rows[0][0].clone();
    }
    let mut acc = Polynomial::zero(ring);
    for k in 0..n {
        let sub: Vec<Vec<Polynomial>> = rows[1..]
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != k)
                    .map(|(_, p)| p.clone())
                    .collect()
            })
            .collect();
        let term = rows[0][k].mul(&poly_det(&sub, ring));
        if k % 2 == 0 {
            acc = acc.add(&term);
        } else {
            acc = acc.sub(&term);
        }
    }
    acc
}

/// The family's Jacobian in the unknowns, at a random point and parameter,
/// must be clearly nonsingular.
fn family_jacobian_ok(equations: &[Polynomial], unknowns: usize, rng: &mut ChaCha8Rng) -> bool {
    let Ok(param) = ParamSystem::new(equations) else {
        return false;
    };
    let t = Complex64::new(rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2));
    let x: Vec<Complex64> = (0..unknowns)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let fixed = param.at_param(t);
    numeric::jacobian_clearly_nonsingular(&fixed, &x)
}

fn recombination_ok(h: &[Polynomial], c: usize, rng: &mut ChaCha8Rng) -> bool {
    let n = h[0].ring().num_vars();
    let pt: Vec<Complex64> = (0..n)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut jac = Vec::with_capacity(h.len());
    for hi in h {
        let row: Vec<Complex64> = (0..n)
            .map(|i| {
                hi.derivative(i)
                    .and_then(|d| d.eval_complex(&pt))
                    .unwrap_or(Complex64::new(0.0, 0.0))
            })
            .collect();
        jac.push(row);
    }
    numeric_rank(jac, 1e-10) == c
}

/// Fixed-parameter convenience over [`build_critical_family`].
pub fn build_critical_system(
    x: &VarietySpec,
    f: &Polynomial,
    l: &LinearForm,
    t: Complex64,
    seed: u64,
) -> Result<SquareSystem, TrackError> {
    Ok(build_critical_family(x, f, l, seed)?.at(t))
}

#[derive(Clone, Debug)]
pub struct SolveOutcome {
    pub solutions: Vec<SolvedPoint>,
    pub paths_started: usize,
    pub paths_diverged: usize,
    pub paths_failed: usize,
}

/// All isolated finite solutions of the system at its fixed parameter value,
/// found by a total-degree homotopy. Duplicates are merged; diverging paths
/// are dropped but counted.
pub fn solve_total_degree(system: &SquareSystem, seed: u64) -> Result<SolveOutcome, TrackError> {
    let param = system.param_system()?;
    let fixed = param.at_param(system.t_value);
    let (solutions, stats) = solve_square(&fixed, seed, &TrackOptions::default())?;
    Ok(SolveOutcome {
        solutions,
        paths_started: stats.paths_started,
        paths_diverged: stats.paths_diverged,
        paths_failed: stats.paths_failed,
    })
}

/// Keep only solutions whose ambient part lies on the variety (membership
/// residuals against every original generator, and numeric Jacobian rank
/// equal to the codimension).
pub fn filter_on_variety(system: &SquareSystem, sols: &[SolvedPoint]) -> Vec<SolvedPoint> {
    let n = system.ambient_vars;
    let c = system.codim;
    let orig_num: Vec<NumPoly> = system
        .originals
        .iter()
        .map(|p| NumPoly::from_polynomial(p).normalized())
        .collect();
    let jac_rows: Vec<Vec<NumPoly>> = system
        .originals
        .iter()
        .map(|g| {
            (0..n)
                .map(|i| NumPoly::from_polynomial(&g.derivative(i).expect("ambient index")))
                .collect::<Vec<_>>()
        })
        .map(|row| {
            // Normalize the whole row by its largest coefficient so the rank
            // threshold is meaningful.
            let m = row
                .iter()
                .flat_map(|p| p.coeff_norms())
                .fold(0.0f64, f64::max)
                .max(1e-300);
            row.into_iter()
                .map(|mut p| {
                    p.scale(Complex64::new(1.0 / m, 0.0));
                    p
                })
                .collect()
        })
        .collect();
    sols.iter()
        .filter(|s| {
            let xpart = &s.x[..n];
            let member = orig_num
                .iter()
                .all(|p| p.eval(xpart).norm() < ON_VARIETY_TOL);
            if !member {
                return false;
            }
            if c == 0 {
                return true;
            }
            let mut jac: Vec<Vec<Complex64>> = jac_rows
                .iter()
                .map(|row| row.iter().map(|p| p.eval(xpart)).collect())
                .collect();
            // Rows are normalized polynomials, so entries of a full-rank row
            // are order one; pad with a unit row to pin the scale and compare
            // against an absolute threshold.
            jac.push(vec![Complex64::new(1.0, 0.0); n]);
            numeric_rank(jac, 1e-6) == c + 1
        })
        .cloned()
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathStatus {
    Tracking,
    Converged,
    Escaped,
    Failed,
}

#[derive(Clone, Debug)]
pub struct TrackedPath {
    /// Ambient-space positions at each schedule checkpoint.
    pub states: Vec<ComplexPoint>,
    pub residuals: Vec<f64>,
    pub status: PathStatus,
    /// Extrapolated limit for converged paths.
    pub limit: Option<ComplexPoint>,
    full_state: Vec<Complex64>,
}

/// A family of critical trajectories over a decreasing parameter schedule.
#[derive(Clone, Debug)]
pub struct TrajectoryBundle {
    pub t_schedule: Vec<Complex64>,
    pub paths: Vec<TrackedPath>,
    pub seed: u64,
}

impl TrajectoryBundle {
    pub fn total_morse(&self) -> usize {
        self.paths.len()
    }
}

/// Geometric schedule `t_k = t0 * ratio^k` with a random complex phase.
pub fn default_schedule(seed: u64) -> Vec<Complex64> {
    schedule_with(seed, 0.1, 0.5, 40)
}

pub fn schedule_with(seed: u64, t0_mag: f64, ratio: f64, steps: usize) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7363686564756c65);
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    let t0 = Complex64::from_polar(t0_mag, phase);
    (0..=steps)
        .map(|k| t0 * Complex64::new(ratio.powi(k as i32), 0.0))
        .collect()
}

/// Track the critical points of `f - t l` on the regular part from the head
/// of the schedule toward zero. The start points are the total-degree
/// solutions at `t_0`, restricted to on-variety Morse points; a detected
/// degeneracy (non-simple start point, mid-run path collision, or corrector
/// death) re-phases the schedule and restarts, up to three times.
pub fn track_family(
    x: &VarietySpec,
    f: &Polynomial,
    l: &LinearForm,
    schedule: &[Complex64],
    seed: u64,
) -> Result<TrajectoryBundle, TrackError> {
    track_family_with(x, f, l, schedule, seed, numeric::DEFAULT_ESCAPE_RADIUS)
}

/// [`track_family`] with an explicit escape radius.
pub fn track_family_with(
    x: &VarietySpec,
    f: &Polynomial,
    l: &LinearForm,
    schedule: &[Complex64],
    seed: u64,
    escape_radius: f64,
) -> Result<TrajectoryBundle, TrackError> {
    assert!(schedule.len() >= 2, "schedule needs at least two values");
    let family = build_critical_family(x, f, l, seed)?;
    let param = ParamSystem::new(&family.equations)?;
    let mut reason = String::new();
    for restart in 0..=MAX_RESTARTS {
        let schedule_now: Vec<Complex64> = if restart == 0 {
            schedule.to_vec()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0xabcd << restart));
            let rot = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            schedule.iter().map(|t| t * rot).collect()
        };
        match try_track(
            &family,
            &param,
            &schedule_now,
            seed.wrapping_add(restart as u64),
            escape_radius,
        ) {
            Ok(bundle) => return Ok(bundle),
            Err(TrackRetry::Fatal(e)) => return Err(e),
            Err(TrackRetry::Retry(r)) => reason = r,
        }
    }
    Err(TrackError::FamilyFailed {
        restarts: MAX_RESTARTS,
        reason,
    })
}

enum TrackRetry {
    Retry(String),
    Fatal(TrackError),
}

fn try_track(
    family: &CriticalFamily,
    param: &ParamSystem,
    schedule: &[Complex64],
    seed: u64,
    escape_radius: f64,
) -> Result<TrajectoryBundle, TrackRetry> {
    let n = family.ambient_vars;
    let t0 = schedule[0];
    let sys0 = family.at(t0);
    let fixed0 = param.at_param(t0);
    let (sols, _stats) = solve_square(&fixed0, seed, &TrackOptions::default())
        .map_err(|e| TrackRetry::Fatal(e.into()))?;
    let starts = filter_on_variety(&sys0, &sols);
    if starts.iter().any(|s| !s.simple) {
        return Err(TrackRetry::Retry(
            "degenerate (non-Morse) start point at t0".to_string(),
        ));
    }

    let opts = TrackOptions {
        escape_radius,
        ..TrackOptions::default()
    };
    let mut paths: Vec<TrackedPath> = starts
        .iter()
        .map(|s| TrackedPath {
            states: vec![ComplexPoint(s.x[..n].to_vec())],
            residuals: vec![param.residual(&s.x, t0)],
            status: PathStatus::Tracking,
            limit: None,
            full_state: s.x.clone(),
        })
        .collect();

    for k in 1..schedule.len() {
        let (t_prev, t_next) = (schedule[k - 1], schedule[k]);
        let snapshot: Vec<Option<Vec<Complex64>>> = paths
            .iter()
            .map(|p| (p.status == PathStatus::Tracking).then(|| p.full_state.clone()))
            .collect();
        for (pi, path) in paths.iter_mut().enumerate() {
            if path.status != PathStatus::Tracking {
                continue;
            }
            // Safety margin for the endpoint polish: nearby live paths set
            // how far a correction may move without risking a basin hop.
            let nearest_other = snapshot
                .iter()
                .enumerate()
                .filter(|(qi, q)| *qi != pi && q.is_some())
                .map(|(_, q)| vec_dist(q.as_ref().unwrap(), &path.full_state))
                .fold(f64::INFINITY, f64::min);
            let h = SegmentHomotopy {
                sys: param,
                t0: t_prev,
                t1: t_next,
            };
            match track_path(&h, &path.full_state, &opts) {
                PathOutcome::Converged(xs) => {
                    let fixed = param.at_param(t_next);
                    let out = newton_polish(&fixed, &xs, 6);
                    let moved = vec_dist(&out.x, &xs);
                    let xr = if out.residual <= param.residual(&xs, t_next)
                        && moved < 0.25 * nearest_other
                    {
                        out.x
                    } else {
                        xs
                    };
                    path.residuals.push(param.residual(&xr, t_next));
                    path.states.push(ComplexPoint(xr[..n].to_vec()));
                    path.full_state = xr;
                    // Settle escapes as soon as the growth signature is
                    // unambiguous; the far tail only gets slower.
                    if escape_confirmed(&path.states, escape_radius) {
                        path.status = PathStatus::Escaped;
                    }
                }
                PathOutcome::Diverged { x, .. } | PathOutcome::Failed { x, .. } => {
                    // Conditioning inevitably degrades both for escapes and
                    // for trajectories collapsing into a singular limit. The
                    // norm signature separates the two; a collapsing path is
                    // finished from the checkpoints it already has.
                    let mut states = path.states.clone();
                    states.push(ComplexPoint(x[..n].to_vec()));
                    if escape_confirmed(&states, escape_radius) {
                        path.status = PathStatus::Escaped;
                    } else if let Some(limit) = extrapolated_limit(&path.states) {
                        path.status = PathStatus::Converged;
                        path.limit = Some(limit);
                    } else {
                        path.status = PathStatus::Failed;
                    }
                }
            }
        }
        // Collision check: two live trajectories occupying the same point
        // while t is still well away from zero means the corrector jumped
        // basins or t0 was non-generic.
        if t_next.norm() > 1e-6 {
            let live: Vec<(usize, &TrackedPath)> = paths
                .iter()
                .enumerate()
                .filter(|(_, p)| p.status == PathStatus::Tracking)
                .collect();
            for a in 0..live.len() {
                for b in (a + 1)..live.len() {
                    let pa = live[a].1.states.last().unwrap();
                    let pb = live[b].1.states.last().unwrap();
                    // Distinct trajectories can legitimately pass close by;
                    // only an exact numerical collapse flags a jump.
                    if pa.dist(pb) < 1e-12 * (1.0 + pa.norm()) {
                        return Err(TrackRetry::Retry(format!(
                            "paths {} and {} merged before the schedule end",
                            live[a].0, live[b].0
                        )));
                    }
                }
            }
        }
    }

    for path in paths.iter_mut() {
        if path.status != PathStatus::Tracking {
            continue;
        }
        if escape_confirmed(&path.states, escape_radius) {
            path.status = PathStatus::Escaped;
            continue;
        }
        match extrapolated_limit(&path.states) {
            Some(limit) => {
                path.status = PathStatus::Converged;
                path.limit = Some(limit);
            }
            None => path.status = PathStatus::Failed,
        }
    }

    if paths.iter().any(|p| p.status == PathStatus::Failed) {
        return Err(TrackRetry::Retry("a path failed to finish".to_string()));
    }

    Ok(TrajectoryBundle {
        t_schedule: schedule.to_vec(),
        paths,
        seed,
    })
}

/// Power-law growth toward infinity: either the norm exceeds the escape
/// radius over three increasing checkpoints, or the tail norms grow
/// monotonically by a clear factor. The second clause catches escapes whose
/// norms grow like a root of 1/|t| and therefore stay below any fixed radius
/// over a finite schedule.
fn escape_confirmed(states: &[ComplexPoint], escape_radius: f64) -> bool {
    let norms: Vec<f64> = states.iter().map(ComplexPoint::norm).collect();
    let k = norms.len();
    if k >= 3 {
        let tail = &norms[k - 3..];
        if tail.windows(2).all(|w| w[1] > w[0]) && tail[2] > escape_radius {
            return true;
        }
    }
    if k >= 5 {
        let tail = &norms[k - 5..];
        let increasing = tail.windows(2).all(|w| w[1] > w[0]);
        if increasing && tail[4] / tail[0] > 2.0 && tail[4] > 1e3 {
            return true;
        }
    }
    false
}

/// Componentwise Aitken extrapolation over the last checkpoints, accepted
/// when two successive extrapolations agree.
fn extrapolated_limit(states: &[ComplexPoint]) -> Option<ComplexPoint> {
    let k = states.len();
    if k < 2 {
        return None;
    }
    let raw_diff = states[k - 1].dist(&states[k - 2]);
    if raw_diff < 1e-9 {
        return Some(states[k - 1].clone());
    }
    if k < 4 {
        return None;
    }
    let a1 = aitken(&states[k - 4..k - 1])?;
    let a2 = aitken(&states[k - 3..])?;
    if vec_dist(&a1, &a2) < LIMIT_STABLE_TOL {
        return Some(ComplexPoint(a2));
    }
    // Raw convergence fallback for cleanly finished paths.
    if raw_diff < LIMIT_STABLE_TOL {
        return Some(states[k - 1].clone());
    }
    None
}

fn aitken(w: &[ComplexPoint]) -> Option<Vec<Complex64>> {
    let (x0, x1, x2) = (&w[0].0, &w[1].0, &w[2].0);
    let mut out = Vec::with_capacity(x0.len());
    for i in 0..x0.len() {
        let d1 = x2[i] - x1[i];
        let d0 = x1[i] - x0[i];
        let denom = d1 - d0;
        if denom.norm() < 1e-14 * (1.0 + x2[i].norm()) {
            out.push(x2[i]);
        } else {
            out.push(x2[i] - d1 * d1 / denom);
        }
    }
    Some(out)
}

/// One limit point with the number of Morse trajectories collapsing into it.
#[derive(Clone, Debug)]
pub struct LimitPoint {
    pub location: ComplexPoint,
    pub rational: Option<Vec<Rat>>,
    pub multiplicity: usize,
}

/// The limit of the critical-point family: locations with multiplicities,
/// plus the count of trajectories that went to infinity.
#[derive(Clone, Debug)]
pub struct LimitReport {
    pub limit_points: Vec<LimitPoint>,
    pub m_infinity: usize,
    pub total_morse: usize,
    pub seed: u64,
    pub t_zero: Complex64,
}

/// Cluster converged trajectory limits, snap each cluster to the nearest
/// candidate point, and count escapes. The clustering radius adapts to the
/// candidate geometry: half the minimum pairwise candidate distance, floored
/// at 1e-6.
pub fn classify_limits(
    bundle: &TrajectoryBundle,
    candidates: &CandidatePointSet,
) -> Result<LimitReport, TrackError> {
    if bundle
        .paths
        .iter()
        .any(|p| matches!(p.status, PathStatus::Tracking | PathStatus::Failed))
    {
        return Err(TrackError::PathsNotFinal);
    }
    let m_infinity = bundle
        .paths
        .iter()
        .filter(|p| p.status == PathStatus::Escaped)
        .count();
    let converged: Vec<&TrackedPath> = bundle
        .paths
        .iter()
        .filter(|p| p.status == PathStatus::Converged)
        .collect();

    let radius = snap_radius(candidates);
    let limits: Vec<Vec<Complex64>> = converged
        .iter()
        .map(|p| p.limit.as_ref().unwrap().0.clone())
        .collect();
    let clusters = numeric::cluster_points(limits.clone(), radius);

    let mut limit_points = Vec::new();
    for members in clusters {
        let mut centroid = vec![Complex64::new(0.0, 0.0); limits[members[0]].len()];
        for &i in &members {
            for (c, v) in centroid.iter_mut().zip(&limits[i]) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= members.len() as f64;
        }
        // Snap to the nearest candidate.
        let mut best: Option<(f64, usize)> = None;
        for (ci, cand) in candidates.points.iter().enumerate() {
            let d = vec_dist(&centroid, &cand.point.0);
            if best.map(|(bd, _)| d < bd).unwrap_or(true) {
                best = Some((d, ci));
            }
        }
        match best {
            Some((d, ci)) if d <= radius => {
                let cand = &candidates.points[ci];
                limit_points.push(LimitPoint {
                    location: cand.point.clone(),
                    rational: cand.rational.clone(),
                    multiplicity: members.len(),
                });
            }
            _ => {
                return Err(TrackError::UnanchoredLimit {
                    point: centroid.iter().flat_map(|z| [z.re, z.im]).collect(),
                    dist: best.map(|(d, _)| d).unwrap_or(f64::INFINITY),
                    radius,
                });
            }
        }
    }
    // Deterministic output order.
    limit_points.sort_by(|a, b| {
        for (za, zb) in a.location.0.iter().zip(&b.location.0) {
            match za.re.total_cmp(&zb.re).then(za.im.total_cmp(&zb.im)) {
                std::cmp::Ordering::Equal => {}
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    });

    let total = bundle.total_morse();
    let summed: usize = limit_points.iter().map(|p| p.multiplicity).sum();
    if summed + m_infinity != total {
        return Err(TrackError::ConservationMismatch {
            converged: summed,
            escaped: m_infinity,
            total,
        });
    }
    Ok(LimitReport {
        limit_points,
        m_infinity,
        total_morse: total,
        seed: bundle.seed,
        t_zero: bundle.t_schedule[0],
    })
}

fn snap_radius(candidates: &CandidatePointSet) -> f64 {
    let pts = &candidates.points;
    if pts.len() < 2 {
        return 0.5;
    }
    let mut min_pair = f64::INFINITY;
    for i in 0..pts.len() {
        for j in (i + 1)..pts.len() {
            min_pair = min_pair.min(pts[i].point.dist(&pts[j].point));
        }
    }
    (0.5 * min_pair).max(1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{candidate_limit_points, polar_curve_ideal};
    use crate::ideals::std_ideal;
    use crate::polycore::{parse_polynomial, sample_generic_linear};

    fn plane() -> (Ring, VarietySpec) {
        let r = Ring::new(vec!["x", "y"]);
        let x = VarietySpec::ambient(&r);
        (r, x)
    }

    #[test]
    fn quadratic_single_trajectory() {
        let (r, x) = plane();
        let f = parse_polynomial("x^2 + y^2", &r).unwrap();
        let l = sample_generic_linear(2, 5);
        let schedule = default_schedule(5);
        let bundle = track_family(&x, &f, &l, &schedule, 5).unwrap();
        assert_eq!(bundle.total_morse(), 1);
        assert_eq!(bundle.paths[0].status, PathStatus::Converged);
        let lim = bundle.paths[0].limit.as_ref().unwrap();
        assert!(lim.norm() < 1e-7);
    }

    #[test]
    fn escape_instance_two_paths_diverge() {
        let (r, x) = plane();
        let f = parse_polynomial("x + x^2*y", &r).unwrap();
        let l = sample_generic_linear(2, 11);
        let schedule = default_schedule(11);
        let bundle = track_family(&x, &f, &l, &schedule, 11).unwrap();
        assert_eq!(bundle.total_morse(), 2);
        assert!(bundle.paths.iter().all(|p| p.status == PathStatus::Escaped));
    }

    #[test]
    fn escape_matches_closed_form_at_t0() {
        // Critical equations of x + x^2 y - t(ax+by): x^2 = tb and
        // y = (ta - 1)/(2x), so two solutions with x = +-sqrt(tb).
        let (r, x) = plane();
        let f = parse_polynomial("x + x^2*y", &r).unwrap();
        let l = sample_generic_linear(2, 11);
        let schedule = default_schedule(11);
        let family = build_critical_family(&x, &f, &l, 11).unwrap();
        let sys = family.at(schedule[0]);
        let out = solve_total_degree(&sys, 11).unwrap();
        let kept = filter_on_variety(&sys, &out.solutions);
        assert_eq!(kept.len(), 2);
        let t0 = schedule[0];
        // The family scales the form to unit sup-norm.
        let m = l
            .coefficients
            .iter()
            .map(|c| crate::polycore::rat_to_f64(c).abs())
            .fold(0.0f64, f64::max);
        let a = crate::polycore::rat_to_f64(&l.coefficients[0]) / m;
        let b = crate::polycore::rat_to_f64(&l.coefficients[1]) / m;
        let sq = (t0 * b).sqrt();
        for s in &kept {
            let xv = s.x[0];
            let yv = s.x[1];
            let matches_root =
                (xv - sq).norm() < 1e-6 * sq.norm() || (xv + sq).norm() < 1e-6 * sq.norm();
            assert!(matches_root, "x value off the closed form");
            let want_y = (t0 * a - 1.0) / (2.0 * xv);
            assert!((yv - want_y).norm() < 1e-6 * want_y.norm());
        }
    }

    #[test]
    fn cardioid_three_morse_points_all_converge() {
        let r = Ring::new(vec!["x", "y"]);
        let x = VarietySpec::new(
            std_ideal(
                &r,
                vec![parse_polynomial("(x^2+y^2+x)^2 - (x^2+y^2)", &r).unwrap()],
            )
            .unwrap(),
        )
        .unwrap();
        let f = parse_polynomial("x^2 + y^2", &r).unwrap();
        let l = sample_generic_linear(2, 23);
        let schedule = default_schedule(23);
        let bundle = track_family(&x, &f, &l, &schedule, 23).unwrap();
        assert_eq!(bundle.total_morse(), 3);
        assert!(bundle
            .paths
            .iter()
            .all(|p| p.status == PathStatus::Converged));

        let polar = polar_curve_ideal(&x, &f, &l).unwrap();
        let cand = candidate_limit_points(&polar, &x, &f, 23).unwrap();
        let report = classify_limits(&bundle, &cand).unwrap();
        assert_eq!(report.m_infinity, 0);
        assert_eq!(report.total_morse, 3);
        let mut mults: Vec<(f64, usize)> = report
            .limit_points
            .iter()
            .map(|p| (p.location.0[0].re, p.multiplicity))
            .collect();
        mults.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(mults.len(), 2);
        assert!((mults[0].0 + 2.0).abs() < 1e-6);
        assert_eq!(mults[0].1, 1);
        assert!(mults[1].0.abs() < 1e-6);
        assert_eq!(mults[1].1, 2);
    }

    #[test]
    fn conservation_across_draws() {
        let r = Ring::new(vec!["x", "y"]);
        let x = VarietySpec::ambient(&r);
        let f = parse_polynomial("x^3 + y^3", &r).unwrap();
        for seed in [1u64, 2, 3] {
            let l = sample_generic_linear(2, seed * 97);
            let schedule = default_schedule(seed);
            let bundle = track_family(&x, &f, &l, &schedule, seed).unwrap();
            let polar = polar_curve_ideal(&x, &f, &l).unwrap();
            let cand = candidate_limit_points(&polar, &x, &f, seed).unwrap();
            let report = classify_limits(&bundle, &cand).unwrap();
            let sum: usize = report.limit_points.iter().map(|p| p.multiplicity).sum();
            assert_eq!(sum + report.m_infinity, report.total_morse);
            assert_eq!(report.total_morse, 4);
            assert_eq!(report.m_infinity, 0);
        }
    }
}

#[cfg(test)]
mod shape_tests {
    use super::*;
    use crate::ideals::std_ideal;
    use crate::polycore::{parse_polynomial, sample_generic_linear};

    // Shapes of the assembled square systems: gradient-only on affine
    // space, determinantal on curves, Lagrange multipliers in between.
    #[test]
    fn system_shapes() {
        let r2 = Ring::new(vec!["x", "y"]);
        let plane = VarietySpec::ambient(&r2);
        let f2 = parse_polynomial("x^2 + y^2", &r2).unwrap();
        let fam = build_critical_family(&plane, &f2, &sample_generic_linear(2, 1), 1).unwrap();
        assert_eq!(fam.equations.len(), 2);
        assert_eq!(fam.multipliers, 0);

        let cardioid = VarietySpec::new(
            std_ideal(
                &r2,
                vec![parse_polynomial("(x^2+y^2+x)^2 - (x^2+y^2)", &r2).unwrap()],
            )
            .unwrap(),
        )
        .unwrap();
        let fam = build_critical_family(&cardioid, &f2, &sample_generic_linear(2, 1), 1).unwrap();
        assert_eq!(fam.equations.len(), 2, "curve case is determinantal");
        assert_eq!(fam.multipliers, 0);
        assert_eq!(fam.codim, 1);

        let r3 = Ring::new(vec!["x", "y", "z"]);
        let planes = VarietySpec::new(
            std_ideal(&r3, vec![parse_polynomial("x^2 - y^2", &r3).unwrap()]).unwrap(),
        )
        .unwrap();
        let f3 = parse_polynomial("x + 2*y + z^2", &r3).unwrap();
        let fam = build_critical_family(&planes, &f3, &sample_generic_linear(3, 1), 1).unwrap();
        assert_eq!(
            fam.equations.len(),
            4,
            "one constraint plus three gradient rows"
        );
        assert_eq!(fam.multipliers, 1);
        assert_eq!(
            fam.ring.num_vars(),
            5,
            "x, y, z, one multiplier, the parameter"
        );
    }

    #[test]
    fn path_accounting_respects_total_degree() {
        // Paths started equal the product of equation degrees, and every
        // path is accounted for as a solution, a divergence, or a failure.
        let r = Ring::new(vec!["x", "y"]);
        let cardioid = VarietySpec::new(
            std_ideal(
                &r,
                vec![parse_polynomial("(x^2+y^2+x)^2 - (x^2+y^2)", &r).unwrap()],
            )
            .unwrap(),
        )
        .unwrap();
        let f = parse_polynomial("x^2 + y^2", &r).unwrap();
        let l = sample_generic_linear(2, 23);
        let schedule = default_schedule(23);
        let sys = build_critical_system(&cardioid, &f, &l, schedule[0], 23).unwrap();
        let bezout: usize = sys
            .equations
            .iter()
            .map(|e| {
                // Degree in the unknowns after fixing the parameter.
                e.terms()
                    .map(|(m, _)| m.0[..sys.unknowns()].iter().sum::<u32>() as usize)
                    .max()
                    .unwrap_or(0)
            })
            .product();
        let out = solve_total_degree(&sys, 23).unwrap();
        assert_eq!(out.paths_started, bezout);
        let landed: usize = out.solutions.iter().map(|s| s.path_count).sum();
        assert_eq!(
            landed + out.paths_diverged + out.paths_failed,
            out.paths_started
        );
        // Accepted simple solutions contract quadratically under Newton.
        for s in out.solutions.iter().filter(|s| s.simple) {
            assert!(s.residual < 1e-10);
            assert!(
                s.newton_contraction < 0.5,
                "contraction {}",
                s.newton_contraction
            );
        }
    }
}
