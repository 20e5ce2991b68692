//! Numeric kernel: complex evaluation of polynomial systems, dense linear
//! algebra on small matrices, predictor-corrector path tracking, and the
//! total-degree start-system solver.
//!
//! Every equation is scaled to unit sup-norm of its coefficients when it
//! enters this layer, so the residual thresholds below are meaningful
//! absolute quantities.

use crate::polycore::{rat_to_f64, Polynomial, Ring};
use num::complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Residual below which a point counts as a solution.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Merge radius for duplicate solutions.
pub const CLUSTER_RADIUS: f64 = 1e-8;
/// Norm beyond which a path is considered gone to infinity.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e8;
/// Smallest predictor step before a path is declared failed.
pub const MIN_STEP: f64 = 1e-14;
/// Newton iterations per corrector call.
pub const MAX_NEWTON: usize = 5;

#[derive(Debug, Error)]
pub enum NumericError {
    #[error("ill-conditioned system: {failed} of {started} paths failed (over 20%)")]
    IllConditioned { failed: usize, started: usize },
    #[error("system is not square ({eqs} equations, {vars} unknowns)")]
    NotSquare { eqs: usize, vars: usize },
    #[error("equation {index} is constant; the system has no isolated solutions")]
    ConstantEquation { index: usize },
    #[error("start-path budget exceeded: total degree product {product} too large")]
    TooManyPaths { product: usize },
    #[error("square-up recombination degenerate after {attempts} attempts")]
    DegenerateRecombination { attempts: usize },
}

/// A polynomial with complex floating coefficients, flattened for fast
/// evaluation.
#[derive(Clone, Debug)]
pub struct NumPoly {
    nvars: usize,
    terms: Vec<(Complex64, Vec<u32>)>,
}

impl NumPoly {
    pub fn from_terms(nvars: usize, terms: Vec<(Complex64, Vec<u32>)>) -> NumPoly {
        let mut p = NumPoly { nvars, terms };
        p.combine_terms();
        p
    }

    /// Subtract a constant.
    pub fn minus_const(&self, c: Complex64) -> NumPoly {
        let mut out = self.clone();
        out.terms.push((-c, vec![0; self.nvars]));
        out.combine_terms();
        out
    }

    pub fn from_polynomial(p: &Polynomial) -> NumPoly {
        NumPoly {
            nvars: p.ring().num_vars(),
            terms: p
                .terms()
                .map(|(m, c)| (Complex64::new(rat_to_f64(c), 0.0), m.0.clone()))
                .collect(),
        }
    }

    /// Scale so the largest coefficient magnitude is one.
    pub fn normalized(mut self) -> NumPoly {
        let max = self
            .terms
            .iter()
            .map(|(c, _)| c.norm())
            .fold(0.0f64, f64::max);
        if max > 0.0 {
            for (c, _) in self.terms.iter_mut() {
                *c /= max;
            }
        }
        self
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn coeff_norms(&self) -> impl Iterator<Item = f64> + '_ {
        self.terms.iter().map(|(c, _)| c.norm())
    }

    pub fn total_degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(_, e)| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&mut self, by: Complex64) {
        for (c, _) in self.terms.iter_mut() {
            *c *= by;
        }
    }

    pub fn eval(&self, x: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, e) in &self.terms {
            let mut t = *c;
            for (i, &ei) in e.iter().enumerate() {
                for _ in 0..ei {
                    t *= x[i];
                }
            }
            acc += t;
        }
        acc
    }

    /// Partial derivative, still in floating form.
    pub fn derivative(&self, var: usize) -> NumPoly {
        let mut terms = Vec::new();
        for (c, e) in &self.terms {
            if e[var] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[var] -= 1;
            terms.push((c * e[var] as f64, e2));
        }
        NumPoly {
            nvars: self.nvars,
            terms,
        }
    }

    /// Fix one variable to a constant, producing a polynomial in the rest.
    pub fn substitute_var(&self, var: usize, value: Complex64) -> NumPoly {
        let mut terms = Vec::new();
        for (c, e) in &self.terms {
            let mut c2 = *c;
            for _ in 0..e[var] {
                c2 *= value;
            }
            let mut e2 = Vec::with_capacity(e.len() - 1);
            for (i, &ei) in e.iter().enumerate() {
                if i != var {
                    e2.push(ei);
                }
            }
            terms.push((c2, e2));
        }
        let mut out = NumPoly {
            nvars: self.nvars - 1,
            terms,
        };
        out.combine_terms();
        out
    }

    fn combine_terms(&mut self) {
        self.terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut merged: Vec<(Complex64, Vec<u32>)> = Vec::with_capacity(self.terms.len());
        for (c, e) in self.terms.drain(..) {
            if let Some(last) = merged.last_mut() {
                if last.1 == e {
                    last.0 += c;
                    continue;
                }
            }
            merged.push((c, e));
        }
        merged.retain(|(c, _)| c.norm() > 0.0);
        self.terms = merged;
    }
}

/// Square numeric system with precomputed Jacobian.
#[derive(Clone, Debug)]
pub struct NumSystem {
    pub n: usize,
    pub eqs: Vec<NumPoly>,
    pub jac: Vec<Vec<NumPoly>>,
}

impl NumSystem {
    pub fn new(eqs: Vec<NumPoly>) -> Result<NumSystem, NumericError> {
        let n = eqs.first().map(NumPoly::nvars).unwrap_or(0);
        if eqs.len() != n {
            return Err(NumericError::NotSquare {
                eqs: eqs.len(),
                vars: n,
            });
        }
        let jac = eqs
            .iter()
            .map(|e| (0..n).map(|i| e.derivative(i)).collect())
            .collect();
        Ok(NumSystem { n, eqs, jac })
    }

    pub fn eval(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.eqs.iter().map(|e| e.eval(x)).collect()
    }

    pub fn jacobian(&self, x: &[Complex64]) -> Vec<Vec<Complex64>> {
        self.jac
            .iter()
            .map(|row| row.iter().map(|p| p.eval(x)).collect())
            .collect()
    }

    pub fn residual(&self, x: &[Complex64]) -> f64 {
        self.eqs
            .iter()
            .map(|e| e.eval(x).norm())
            .fold(0.0, f64::max)
    }
}

pub fn vec_norm(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn vec_dist(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Solve a dense complex linear system by LU with partial pivoting.
/// Returns `None` when a pivot collapses below the working threshold.
pub fn lu_solve(mut a: Vec<Vec<Complex64>>, mut b: Vec<Complex64>) -> Option<Vec<Complex64>> {
    let n = a.len();
    let scale: f64 = a
        .iter()
        .flat_map(|row| row.iter().map(|z| z.norm()))
        .fold(0.0, f64::max)
        .max(1e-300);
    for col in 0..n {
        let (piv, pnorm) = (col..n)
            .map(|r| (r, a[r][col].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pnorm < 1e-14 * scale {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let acc = a[col][c];
                a[r][c] -= f * acc;
            }
            let bc = b[col];
            b[r] -= f * bc;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in (r + 1)..n {
            acc -= a[r][c] * x[c];
        }
        x[r] = acc / a[r][r];
    }
    Some(x)
}

/// Ridge-damped solve for nearly singular systems: `(A + mu I) x = b`.
/// Components along healthy directions are solved faithfully; the collapsed
/// direction is frozen instead of amplifying noise.
pub fn lu_solve_damped(
    a: &[Vec<Complex64>],
    b: &[Complex64],
    rel_mu: f64,
) -> Option<Vec<Complex64>> {
    let scale: f64 = a
        .iter()
        .flat_map(|row| row.iter().map(|z| z.norm()))
        .fold(0.0, f64::max)
        .max(1e-300);
    let mu = Complex64::new(rel_mu * scale, 0.0);
    let mut aa: Vec<Vec<Complex64>> = a.to_vec();
    for (i, row) in aa.iter_mut().enumerate() {
        row[i] += mu;
    }
    lu_solve(aa, b.to_vec())
}

/// Numeric rank via row-echelon with a relative pivot threshold.
pub fn numeric_rank(mut a: Vec<Vec<Complex64>>, rel_tol: f64) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let scale: f64 = a
        .iter()
        .flat_map(|row| row.iter().map(|z| z.norm()))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let tol = rel_tol * scale;
    let mut rank = 0usize;
    let mut row = 0usize;
    for col in 0..cols {
        let (piv, pnorm) = (row..rows)
            .map(|r| (r, a[r][col].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap_or((row, 0.0));
        if pnorm <= tol {
            continue;
        }
        a.swap(row, piv);
        for r in (row + 1)..rows {
            let f = a[r][col] / a[row][col];
            for c in col..cols {
                let acc = a[row][c];
                a[r][c] -= f * acc;
            }
        }
        rank += 1;
        row += 1;
        if row == rows {
            break;
        }
    }
    rank
}

/// Nonsingularity probe with an absolute floor: equations enter normalized,
/// so a regular unit-scale root has a determinant well above the floor while
/// a collapsed multiple root does not.
pub fn jacobian_clearly_nonsingular(sys: &NumSystem, x: &[Complex64]) -> bool {
    let j = sys.jacobian(x);
    let scale = j
        .iter()
        .flat_map(|row| row.iter().map(|z| z.norm()))
        .fold(0.0f64, f64::max);
    match lu_det(j) {
        Some(d) => d.norm() > 1e-10 * scale.max(1.0),
        None => false,
    }
}

fn lu_det(mut a: Vec<Vec<Complex64>>) -> Option<Complex64> {
    let n = a.len();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let (piv, pnorm) = (col..n)
            .map(|r| (r, a[r][col].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if pnorm == 0.0 {
            return Some(Complex64::new(0.0, 0.0));
        }
        if piv != col {
            a.swap(col, piv);
            det = -det;
        }
        det *= a[col][col];
        for r in (col + 1)..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let acc = a[col][c];
                a[r][c] -= f * acc;
            }
        }
    }
    Some(det)
}

pub struct NewtonOutcome {
    pub x: Vec<Complex64>,
    pub converged: bool,
    pub residual: f64,
    /// Ratio of the last two correction norms (small for simple roots).
    pub contraction: f64,
}

/// Plain Newton iteration on a square system.
pub fn newton_polish(sys: &NumSystem, x0: &[Complex64], max_iter: usize) -> NewtonOutcome {
    let mut x = x0.to_vec();
    let mut prev_step = f64::INFINITY;
    let mut contraction = 1.0;
    let mut converged = false;
    let mut iters = 0usize;
    for _ in 0..max_iter {
        let f = sys.eval(&x);
        let j = sys.jacobian(&x);
        let Some(dx) = lu_solve(j, f.iter().map(|z| -z).collect()) else {
            break;
        };
        iters += 1;
        let step = vec_norm(&dx);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        if prev_step.is_finite() && prev_step > 0.0 {
            contraction = step / prev_step;
        }
        prev_step = step;
        if step < 1e-12 * (1.0 + vec_norm(&x)) {
            converged = true;
            break;
        }
    }
    if converged && iters <= 1 {
        contraction = 0.0;
    }
    let residual = sys.residual(&x);
    NewtonOutcome {
        x,
        converged,
        residual,
        contraction,
    }
}

/// A one-parameter family of square systems, tracked from s = 0 to s = 1.
pub trait Homotopy {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[Complex64], s: f64) -> Vec<Complex64>;
    fn jac_x(&self, x: &[Complex64], s: f64) -> Vec<Vec<Complex64>>;
    fn d_ds(&self, x: &[Complex64], s: f64) -> Vec<Complex64>;
}

/// The gamma-trick convex combination between a start and a target system.
pub struct GammaHomotopy<'a> {
    pub start: &'a NumSystem,
    pub target: &'a NumSystem,
    pub gamma: Complex64,
}

impl Homotopy for GammaHomotopy<'_> {
    fn dim(&self) -> usize {
        self.target.n
    }
    fn eval(&self, x: &[Complex64], s: f64) -> Vec<Complex64> {
        let g = self.start.eval(x);
        let f = self.target.eval(x);
        g.iter()
            .zip(&f)
            .map(|(gi, fi)| self.gamma * (1.0 - s) * gi + s * fi)
            .collect()
    }
    fn jac_x(&self, x: &[Complex64], s: f64) -> Vec<Vec<Complex64>> {
        let jg = self.start.jacobian(x);
        let jf = self.target.jacobian(x);
        jg.iter()
            .zip(&jf)
            .map(|(rg, rf)| {
                rg.iter()
                    .zip(rf)
                    .map(|(g, f)| self.gamma * (1.0 - s) * g + s * f)
                    .collect()
            })
            .collect()
    }
    fn d_ds(&self, x: &[Complex64], _s: f64) -> Vec<Complex64> {
        let g = self.start.eval(x);
        let f = self.target.eval(x);
        g.iter()
            .zip(&f)
            .map(|(gi, fi)| fi - self.gamma * gi)
            .collect()
    }
}

/// A square system depending polynomially on one complex parameter, stored
/// with the parameter as the last variable.
#[derive(Clone, Debug)]
pub struct ParamSystem {
    pub n: usize,
    eqs: Vec<NumPoly>,
    jac_x: Vec<Vec<NumPoly>>,
    d_param: Vec<NumPoly>,
}

impl ParamSystem {
    /// `polys` live in a ring whose final variable is the parameter; there
    /// must be exactly one more variable than equations.
    pub fn new(polys: &[Polynomial]) -> Result<ParamSystem, NumericError> {
        let nv = polys.first().map(|p| p.ring().num_vars()).unwrap_or(0);
        let n = polys.len();
        if nv != n + 1 {
            return Err(NumericError::NotSquare { eqs: n, vars: nv });
        }
        let eqs: Vec<NumPoly> = polys
            .iter()
            .map(|p| NumPoly::from_polynomial(p).normalized())
            .collect();
        let jac_x = eqs
            .iter()
            .map(|e| (0..n).map(|i| e.derivative(i)).collect())
            .collect();
        let d_param = eqs.iter().map(|e| e.derivative(n)).collect();
        Ok(ParamSystem {
            n,
            eqs,
            jac_x,
            d_param,
        })
    }

    fn with_param(x: &[Complex64], t: Complex64) -> Vec<Complex64> {
        let mut xt = x.to_vec();
        xt.push(t);
        xt
    }

    pub fn eval(&self, x: &[Complex64], t: Complex64) -> Vec<Complex64> {
        let xt = Self::with_param(x, t);
        self.eqs.iter().map(|e| e.eval(&xt)).collect()
    }

    pub fn residual(&self, x: &[Complex64], t: Complex64) -> f64 {
        let xt = Self::with_param(x, t);
        self.eqs
            .iter()
            .map(|e| e.eval(&xt).norm())
            .fold(0.0, f64::max)
    }

    pub fn jacobian_x(&self, x: &[Complex64], t: Complex64) -> Vec<Vec<Complex64>> {
        let xt = Self::with_param(x, t);
        self.jac_x
            .iter()
            .map(|row| row.iter().map(|p| p.eval(&xt)).collect())
            .collect()
    }

    /// The square system at a fixed parameter value.
    pub fn at_param(&self, t: Complex64) -> NumSystem {
        let eqs: Vec<NumPoly> = self
            .eqs
            .iter()
            .map(|e| e.substitute_var(self.n, t))
            .collect();
        NumSystem::new(eqs).expect("substitution preserves squareness")
    }
}

/// Straight-segment continuation of a parametric system from `t0` to `t1`.
pub struct SegmentHomotopy<'a> {
    pub sys: &'a ParamSystem,
    pub t0: Complex64,
    pub t1: Complex64,
}

impl SegmentHomotopy<'_> {
    fn t_at(&self, s: f64) -> Complex64 {
        self.t0 + (self.t1 - self.t0) * s
    }
}

impl Homotopy for SegmentHomotopy<'_> {
    fn dim(&self) -> usize {
        self.sys.n
    }
    fn eval(&self, x: &[Complex64], s: f64) -> Vec<Complex64> {
        self.sys.eval(x, self.t_at(s))
    }
    fn jac_x(&self, x: &[Complex64], s: f64) -> Vec<Vec<Complex64>> {
        self.sys.jacobian_x(x, self.t_at(s))
    }
    fn d_ds(&self, x: &[Complex64], s: f64) -> Vec<Complex64> {
        let xt = ParamSystem::with_param(x, self.t_at(s));
        let dt = self.t1 - self.t0;
        self.sys.d_param.iter().map(|p| p.eval(&xt) * dt).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathOutcome {
    Converged(Vec<Complex64>),
    /// Norm exceeded the escape radius at the given progress.
    Diverged {
        s: f64,
        x: Vec<Complex64>,
    },
    /// Stalled: the step size collapsed at the given progress.
    Failed {
        s: f64,
        x: Vec<Complex64>,
    },
}

#[derive(Clone, Debug)]
pub struct TrackOptions {
    pub escape_radius: f64,
    pub min_step: f64,
    pub initial_step: f64,
    pub max_step: f64,
    /// Stop the corrector loop this close to s = 1; endpoints are finished by
    /// a Newton polish on the target, which also copes with multiple roots.
    pub endgame_cut: f64,
}

impl Default for TrackOptions {
    fn default() -> Self {
        TrackOptions {
            escape_radius: DEFAULT_ESCAPE_RADIUS,
            min_step: MIN_STEP,
            initial_step: 0.05,
            max_step: 0.25,
            endgame_cut: 1e-10,
        }
    }
}

/// Explicit-Euler predictor on the Davidenko equation, Newton corrector,
/// halving on corrector failure and doubling after four successes.
pub fn track_path<H: Homotopy>(h: &H, x0: &[Complex64], opts: &TrackOptions) -> PathOutcome {
    let mut x = x0.to_vec();
    let mut s = 0.0f64;
    let mut ds = opts.initial_step;
    let mut successes = 0usize;
    // Hard bound on predictor-corrector rounds; grinding past it means the
    // path is numerically hopeless.
    let mut rounds = 2000usize;
    let s_end = 1.0 - opts.endgame_cut;
    while s < s_end {
        rounds -= 1;
        if rounds == 0 {
            return PathOutcome::Failed { s, x };
        }
        // Steps shrink toward the end of the run, where solution clusters
        // tighten and a bold predictor would hop between nearby paths.
        let ds_eff = ds.min(1.0 - s).min((0.25 * (1.0 - s)).max(2e-3));
        let j = h.jac_x(&x, s);
        let rhs: Vec<Complex64> = h.d_ds(&x, s).iter().map(|z| -z).collect();
        // Euler predictor; when the Jacobian is too degenerate to orient,
        // a ridge-damped solve freezes the collapsed direction and the
        // corrector walks the rest of the way.
        let dx = lu_solve(j.clone(), rhs.clone())
            .or_else(|| lu_solve_damped(&j, &rhs, 1e-12))
            .unwrap_or_else(|| vec![Complex64::new(0.0, 0.0); x.len()]);
        let sane = dx.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        let mut accepted = false;
        let s_new = s + ds_eff;
        if sane {
            let xp: Vec<Complex64> = x.iter().zip(&dx).map(|(xi, di)| xi + di * ds_eff).collect();
            if let Some(xc) = correct(h, &xp, s_new) {
                x = xc;
                s = s_new;
                accepted = true;
            }
        }
        if !accepted {
            // The Euler direction can be garbage near a degenerating
            // Jacobian; a pure corrector step from the previous point is a
            // robust fallback.
            if let Some(xc) = correct(h, &x, s_new) {
                x = xc;
                s = s_new;
                accepted = true;
            }
        }
        if accepted {
            if vec_norm(&x) > opts.escape_radius {
                return PathOutcome::Diverged { s, x };
            }
            successes += 1;
            if successes >= 4 {
                ds = (ds * 2.0).min(opts.max_step);
                successes = 0;
            }
        } else {
            ds *= 0.5;
            successes = 0;
            if ds < opts.min_step {
                return PathOutcome::Failed { s, x };
            }
        }
    }
    PathOutcome::Converged(x)
}

fn correct<H: Homotopy>(h: &H, x0: &[Complex64], s: f64) -> Option<Vec<Complex64>> {
    let mut x = x0.to_vec();
    let mut prev_step = f64::INFINITY;
    let mut prev_res = f64::INFINITY;
    for _ in 0..MAX_NEWTON {
        let f = h.eval(&x, s);
        let res = f.iter().map(|z| z.norm()).fold(0.0, f64::max);
        // Residual at noise level: accept without stepping. Near a
        // degenerating Jacobian the Newton correction is pure noise and must
        // not be allowed to reject a fully resolved point.
        if res < 1e-12 {
            return Some(x);
        }
        // Conditioning-limited plateau: the residual is small and no longer
        // improving, so this is as close to the path as f64 can represent.
        if res < 1e-10 && res > 0.5 * prev_res {
            return Some(x);
        }
        prev_res = res;
        let j = h.jac_x(&x, s);
        let rhs: Vec<Complex64> = f.iter().map(|z| -z).collect();
        let dx = match lu_solve(j.clone(), rhs.clone()).or_else(|| lu_solve_damped(&j, &rhs, 1e-12))
        {
            Some(dx) => dx,
            // Solver floor reached; a small residual means the point is as
            // resolved as the local conditioning allows.
            None if res < 1e-10 => return Some(x),
            None => return None,
        };
        let step = vec_norm(&dx);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return None;
        }
        if step < 1e-9 * (1.0 + vec_norm(&x)) {
            return Some(x);
        }
        // A clearly growing, macroscopic correction means the predictor left
        // the basin; give the step-size control a chance instead of jumping
        // onto a foreign path. Noise-level fluctuations are exempt.
        if step > 1.5 * prev_step && step > 1e-6 * (1.0 + vec_norm(&x)) {
            return None;
        }
        prev_step = step;
    }
    None
}

/// A solution reported by the solver, possibly a merged cluster of paths.
#[derive(Clone, Debug)]
pub struct SolvedPoint {
    pub x: Vec<Complex64>,
    pub residual: f64,
    /// Number of homotopy paths merged into this point.
    pub path_count: usize,
    /// Whether the Jacobian is nonsingular here (a simple, Morse-like root).
    pub simple: bool,
    pub newton_contraction: f64,
}

#[derive(Clone, Debug)]
pub struct SolveStats {
    pub paths_started: usize,
    pub paths_diverged: usize,
    pub paths_failed: usize,
}

fn homogenize(p: &NumPoly, deg: u32) -> NumPoly {
    // Extra variable (appended last) absorbs the degree deficit of each term.
    let terms = p
        .terms
        .iter()
        .map(|(c, e)| {
            let d: u32 = e.iter().sum();
            let mut e2 = e.clone();
            e2.push(deg - d);
            (*c, e2)
        })
        .collect();
    NumPoly {
        nvars: p.nvars + 1,
        terms,
    }
}

/// All isolated finite solutions of a square system by a total-degree
/// homotopy with the gamma trick. Tracking happens in a random affine patch
/// of projective space, so paths heading to infinity end quietly at a small
/// homogenizing coordinate instead of blowing up.
pub fn solve_square(
    sys: &NumSystem,
    seed: u64,
    opts: &TrackOptions,
) -> Result<(Vec<SolvedPoint>, SolveStats), NumericError> {
    let n = sys.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x746f74616c646567);
    let mut degrees = Vec::with_capacity(n);
    for (i, e) in sys.eqs.iter().enumerate() {
        let d = e.total_degree();
        if d == 0 {
            return Err(NumericError::ConstantEquation { index: i });
        }
        degrees.push(d as usize);
    }
    let product: usize = degrees.iter().product();
    if product > 200_000 {
        return Err(NumericError::TooManyPaths { product });
    }

    // Shared random patch row: c . (x, z0) = 1.
    let patch: Vec<Complex64> = (0..=n)
        .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    let patch_eq = NumPoly {
        nvars: n + 1,
        terms: (0..=n)
            .map(|i| {
                let mut e = vec![0u32; n + 1];
                e[i] = 1;
                (patch[i], e)
            })
            .chain([(Complex64::new(-1.0, 0.0), vec![0u32; n + 1])])
            .collect(),
    };

    let mut target_eqs: Vec<NumPoly> = sys
        .eqs
        .iter()
        .zip(&degrees)
        .map(|(e, &d)| homogenize(e, d as u32))
        .collect();
    target_eqs.push(patch_eq.clone());
    let target_proj = NumSystem::new(target_eqs)?;

    // Start system x_i^{d_i} - r_i z0^{d_i} with random unit-modulus r_i,
    // under the same patch.
    let r: Vec<Complex64> = (0..n)
        .map(|_| Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    let mut start_eqs: Vec<NumPoly> = (0..n)
        .map(|i| {
            let mut e_hi = vec![0u32; n + 1];
            e_hi[i] = degrees[i] as u32;
            let mut e_z = vec![0u32; n + 1];
            e_z[n] = degrees[i] as u32;
            NumPoly {
                nvars: n + 1,
                terms: vec![(Complex64::new(1.0, 0.0), e_hi), (-r[i], e_z)],
            }
        })
        .collect();
    start_eqs.push(patch_eq);
    let start = NumSystem::new(start_eqs)?;
    let gamma = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
    let h = GammaHomotopy {
        start: &start,
        target: &target_proj,
        gamma,
    };

    // Roots of the start system: ratio combinations of d_i-th roots of r_i,
    // rescaled onto the patch.
    let mut roots_per_var: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    for i in 0..n {
        let d = degrees[i] as f64;
        let base_arg = r[i].arg() / d;
        let roots = (0..degrees[i])
            .map(|k| Complex64::from_polar(1.0, base_arg + std::f64::consts::TAU * k as f64 / d))
            .collect();
        roots_per_var.push(roots);
    }

    let mut raw: Vec<Vec<Complex64>> = Vec::new();
    let mut stats = SolveStats {
        paths_started: 0,
        paths_diverged: 0,
        paths_failed: 0,
    };
    // Patched coordinates stay bounded; no escape check while tracking.
    let proj_opts = TrackOptions {
        escape_radius: f64::INFINITY,
        ..opts.clone()
    };
    let mut index = vec![0usize; n];
    'paths: loop {
        let u: Vec<Complex64> = (0..n).map(|i| roots_per_var[i][index[i]]).collect();
        let denom: Complex64 = patch[n] + (0..n).map(|i| patch[i] * u[i]).sum::<Complex64>();
        stats.paths_started += 1;
        if denom.norm() > 1e-8 {
            let z0 = Complex64::new(1.0, 0.0) / denom;
            let mut x0: Vec<Complex64> = u.iter().map(|ui| ui * z0).collect();
            x0.push(z0);
            match track_path(&h, &x0, &proj_opts) {
                PathOutcome::Converged(x) => raw.push(x),
                PathOutcome::Diverged { .. } => stats.paths_diverged += 1,
                // A corrector stall late in the run is almost always a
                // singular endpoint (typically on the hyperplane at
                // infinity); a long linear-rate polish settles it.
                PathOutcome::Failed { s, x } if s > 0.5 => raw.push(x),
                PathOutcome::Failed { .. } => stats.paths_failed += 1,
            }
        } else {
            stats.paths_failed += 1;
        }
        for i in 0..n {
            index[i] += 1;
            if index[i] < degrees[i] {
                continue 'paths;
            }
            index[i] = 0;
        }
        break;
    }

    if stats.paths_failed * 5 > stats.paths_started {
        return Err(NumericError::IllConditioned {
            failed: stats.paths_failed,
            started: stats.paths_started,
        });
    }

    // Dehomogenize, polish on the affine target, then merge duplicates.
    let mut polished: Vec<(Vec<Complex64>, f64, bool, f64)> = Vec::new();
    for xp in raw {
        let polished_proj = newton_polish(&target_proj, &xp, 60);
        let xp = if polished_proj.residual <= target_proj.residual(&xp) {
            polished_proj.x
        } else {
            xp
        };
        let z0 = xp[n];
        let affine_scale = xp[..n].iter().map(|z| z.norm()).fold(1.0, f64::max);
        if z0.norm() < 1e-9 * affine_scale || z0.norm() == 0.0 {
            stats.paths_diverged += 1;
            continue;
        }
        let x: Vec<Complex64> = xp[..n].iter().map(|xi| xi / z0).collect();
        if vec_norm(&x) > opts.escape_radius {
            stats.paths_diverged += 1;
            continue;
        }
        let out = newton_polish(sys, &x, 50);
        let xfin = if out.residual <= sys.residual(&x) {
            out.x
        } else {
            x
        };
        let res = sys.residual(&xfin);
        let simple = jacobian_clearly_nonsingular(sys, &xfin);
        polished.push((xfin, res, simple, out.contraction));
    }
    let endpoint_list: Vec<Vec<Complex64>> =
        polished.iter().map(|(x, _, _, _)| x.clone()).collect();
    let clusters = cluster_points_rel(&endpoint_list, CLUSTER_RADIUS);
    let mut solutions = Vec::new();
    for members in clusters {
        let count = members.len();
        let centroid = centroid_of(&members, &polished);
        let res = sys.residual(&centroid);
        // Simplicity is a property of the point, not of how many homotopy
        // paths happened to land on it.
        let simple = members.iter().all(|&i| polished[i].2);
        let contraction = members
            .iter()
            .map(|&i| polished[i].3)
            .fold(f64::INFINITY, f64::min);
        if res < RESIDUAL_TOL {
            solutions.push(SolvedPoint {
                x: centroid,
                residual: res,
                path_count: count,
                simple,
                newton_contraction: contraction,
            });
        } else {
            // Junk endpoints are rescued paths that had stalled against the
            // hyperplane at infinity; they carry no finite solution.
            stats.paths_diverged += count;
        }
    }
    sort_points(&mut solutions);
    Ok((solutions, stats))
}

fn centroid_of(members: &[usize], pts: &[(Vec<Complex64>, f64, bool, f64)]) -> Vec<Complex64> {
    let n = pts[members[0]].0.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    for &i in members {
        for (cj, xj) in c.iter_mut().zip(&pts[i].0) {
            *cj += xj;
        }
    }
    for cj in c.iter_mut() {
        *cj /= members.len() as f64;
    }
    c
}

/// Greedy union of points within a radius that scales with the point norms.
pub fn cluster_points_rel(pts: &[Vec<Complex64>], rel_radius: f64) -> Vec<Vec<usize>> {
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let scale = 1.0 + vec_norm(&pts[i]).min(vec_norm(&pts[j]));
            if vec_dist(&pts[i], &pts[j]) <= rel_radius * scale {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Greedy union of points within `radius`. Returns index groups.
pub fn cluster_points(pts: Vec<Vec<Complex64>>, radius: f64) -> Vec<Vec<usize>> {
    let n = pts.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let r = find(parent, parent[i]);
            parent[i] = r;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if vec_dist(&pts[i], &pts[j]) <= radius {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

/// Deterministic ordering of solution lists.
pub fn sort_points(pts: &mut [SolvedPoint]) {
    pts.sort_by(|a, b| {
        for (za, zb) in a.x.iter().zip(&b.x) {
            match za.re.total_cmp(&zb.re).then(za.im.total_cmp(&zb.im)) {
                std::cmp::Ordering::Equal => {}
                o => return o,
            }
        }
        std::cmp::Ordering::Equal
    });
}

/// Solve a possibly overdetermined polynomial system: random rational
/// square-up, total-degree solve, then a residual filter against every
/// original equation.
pub fn solve_affine_system(
    polys: &[Polynomial],
    ring: &Ring,
    seed: u64,
    opts: &TrackOptions,
) -> Result<(Vec<SolvedPoint>, SolveStats), NumericError> {
    let originals: Vec<NumPoly> = polys
        .iter()
        .map(|p| NumPoly::from_polynomial(p).normalized())
        .collect();
    solve_numeric_system(&originals, ring.num_vars(), seed, opts)
}

/// Same as [`solve_affine_system`] but over already-numeric equations, which
/// may carry genuinely complex coefficients.
pub fn solve_numeric_system(
    originals: &[NumPoly],
    n: usize,
    seed: u64,
    opts: &TrackOptions,
) -> Result<(Vec<SolvedPoint>, SolveStats), NumericError> {
    let m = originals.len();
    assert!(m >= n, "system with fewer equations than unknowns");

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x73717561726575);
    for attempt in 0..4 {
        let square: Vec<NumPoly> = if m == n {
            originals.to_vec()
        } else {
            // Random small-integer recombination rows.
            (0..n)
                .map(|_| {
                    let mut acc: Option<NumPoly> = None;
                    for p in originals.iter() {
                        let mut scaled = p.clone();
                        scaled.scale(Complex64::new(
                            rng.gen_range(-9i32..=9) as f64,
                            rng.gen_range(-9i32..=9) as f64,
                        ));
                        acc = Some(match acc {
                            None => scaled,
                            Some(mut a) => {
                                a.terms.extend(scaled.terms);
                                a.combine_terms();
                                a
                            }
                        });
                    }
                    acc.unwrap().normalized()
                })
                .collect()
        };
        if square.iter().any(|p| p.total_degree() == 0) {
            continue;
        }
        let sys = match NumSystem::new(square) {
            Ok(s) => s,
            Err(_) => continue,
        };
        let (sols, stats) = solve_square(&sys, seed.wrapping_add(attempt), opts)?;
        // Keep only solutions of the original system.
        let mut kept: Vec<SolvedPoint> = sols
            .into_iter()
            .filter(|s| {
                originals
                    .iter()
                    .map(|p| p.eval(&s.x).norm())
                    .fold(0.0, f64::max)
                    < RESIDUAL_TOL
            })
            .collect();
        sort_points(&mut kept);
        return Ok((kept, stats));
    }
    Err(NumericError::DegenerateRecombination { attempts: 4 })
}

/// Union of [`solve_affine_system`] runs over derived seeds, deduplicated.
/// Individual runs can drop a solution when a corrector hops between nearby
/// homotopy paths; the union is robust against such misses.
pub fn solve_affine_system_union(
    polys: &[Polynomial],
    ring: &Ring,
    seed: u64,
    rounds: usize,
    opts: &TrackOptions,
) -> Result<(Vec<SolvedPoint>, SolveStats), NumericError> {
    let mut all: Vec<SolvedPoint> = Vec::new();
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
        match solve_affine_system(polys, ring, sub, opts) {
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
                            if s.residual < all[i].residual {
                                all[i] = s;
                            }
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
