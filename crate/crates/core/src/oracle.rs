//! Reference computations used to certify solver runs: regularized solutions
//! p_μ, resolvents, Yosida approximations, the resolvent path λ ↦ J_λ0, and a
//! grid search for minimum-norm zeros.
//!
//! Nothing here is called from the solver loop. Closed-form operator metadata
//! is used when present; otherwise the resolvent equation x + λA x = w is
//! solved by a damped fixed-point iteration whose step is set from the strong
//! monotonicity modulus (1) and an on-the-fly Lipschitz estimate.

use crate::error::{Error, Result};
use crate::operators::{MonotoneMap, ZeroSet};
use crate::schedule::Schedule;
use crate::vector::{ensure_dim, Vector};

/// Operator evaluations allowed in one generic resolvent solve.
pub const ORACLE_BUDGET: u64 = 1_000_000;

/// θp + Ap ∋ 0 for one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedSolution {
    pub mu: u64,
    pub theta: f64,
    pub p: Vector,
    /// dist(−θp, Ap).
    pub residual: f64,
}

fn residual_tol(x: &Vector) -> f64 {
    1e-9 * (1.0 + x.norm())
}

/// p = J_{1/θ}(0).
pub fn regularized_solution(op: &dyn MonotoneMap, theta: f64) -> Result<RegularizedSolution> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("theta = {theta}")));
    }
    let p = resolvent(op, 1.0 / theta, &Vector::zeros(op.dim()))?;
    let residual = op.inclusion_gap(&p, &(-&p * theta));
    if !(residual <= residual_tol(&p)) {
        return Err(Error::Oracle(format!(
            "regularized solution residual {residual:e} at theta={theta} for {}",
            op.describe()
        )));
    }
    Ok(RegularizedSolution {
        mu: 0,
        theta,
        p,
        residual,
    })
}

pub fn p_mu(op: &dyn MonotoneMap, schedule: &Schedule, mu: u64) -> Result<RegularizedSolution> {
    let mut sol = regularized_solution(op, schedule.theta(mu))?;
    sol.mu = mu;
    Ok(sol)
}

/// J_λ(w) = (I + λA)⁻¹ w, verified: dist((w − x)/λ, Ax)·λ ≤ 1e−9(1+|x|).
pub fn resolvent(op: &dyn MonotoneMap, lambda: f64, w: &Vector) -> Result<Vector> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("lambda = {lambda}")));
    }
    ensure_dim(w, op.dim())?;
    let x = match op.resolvent(lambda, w) {
        Some(x) => x,
        None => generic_resolvent(op, lambda, w)?,
    };
    let gap = lambda * op.inclusion_gap(&x, &((w - &x) / lambda));
    if !(gap <= residual_tol(&x)) {
        return Err(Error::Oracle(format!(
            "resolvent residual {gap:e} (lambda={lambda}) for {}",
            op.describe()
        )));
    }
    Ok(x)
}

/// Damped fixed-point iteration x ← x − τ(x + λAx − w), τ = 1/(1+λL)².
/// F = I + λA is 1-strongly monotone and (1+λL)-Lipschitz, so the map is a
/// contraction with factor sqrt(1 − τ) whenever L bounds the Lipschitz constant.
pub fn generic_resolvent(op: &dyn MonotoneMap, lambda: f64, w: &Vector) -> Result<Vector> {
    let d = op.dim();
    let mut x = w.clone();
    let mut ax = op.eval(&x);
    let mut evals = 1u64;
    let mut lip = 1e-3_f64;
    let mut ax_new = Vector::zeros(d);
    let tol = |x: &Vector| 1e-13 * (1.0 + x.norm() + w.norm());
    loop {
        let f = &x + &ax * lambda - w;
        let f_norm = f.norm();
        if f_norm <= tol(&x) {
            return Ok(x);
        }
        if evals >= ORACLE_BUDGET {
            return Err(Error::Oracle(format!(
                "generic resolvent did not converge in {ORACLE_BUDGET} evaluations (|F| = {f_norm:e}) for {}",
                op.describe()
            )));
        }
        let tau = 1.0 / (1.0 + lambda * lip).powi(2);
        let x_new = &x - &f * tau;
        op.eval_into(&x_new, &mut ax_new);
        evals += 1;
        if !ax_new.iter().all(|v| v.is_finite()) {
            return Err(Error::operator_at(&x_new));
        }
        let step = (&x_new - &x).norm();
        if step > 0.0 {
            let local = (&ax_new - &ax).norm() / step;
            if local > lip {
                // underestimated: retry from x with the larger constant
                lip = 2.0 * local;
                continue;
            }
        }
        x = x_new;
        std::mem::swap(&mut ax, &mut ax_new);
    }
}

/// A_λ x = (x − J_λ x)/λ.
pub fn yosida(op: &dyn MonotoneMap, lambda: f64, x: &Vector) -> Result<Vector> {
    let j = resolvent(op, lambda, x)?;
    Ok((x - j) / lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub lambda: f64,
    /// J_λ0
    pub point: Vector,
    /// (1/λ)·J_λ0
    pub scaled: Vector,
}

/// `per_decade` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64).round().max(1.0) as usize;
    (0..=steps)
        .map(|k| lo * 10f64.powf(decades * k as f64 / steps as f64))
        .collect()
}

/// Samples λ ↦ J_λ0 on a strictly increasing grid spanning at least four decades.
pub fn resolvent_path(op: &dyn MonotoneMap, grid: &[f64]) -> Result<Vec<PathSample>> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) || !(grid[0] > 0.0) {
        return Err(Error::Domain("lambda grid must be positive and strictly increasing".into()));
    }
    if grid[grid.len() - 1] / grid[0] < 1e4 * (1.0 - 1e-12) {
        return Err(Error::Domain("lambda grid must span at least four decades".into()));
    }
    let origin = Vector::zeros(op.dim());
    grid.iter()
        .map(|&lambda| {
            let point = resolvent(op, lambda, &origin)?;
            let scaled = &point / lambda;
            Ok(PathSample {
                lambda,
                point,
                scaled,
            })
        })
        .collect()
}

/// Tail comparison of the resolvent path against the operator's metadata.
#[derive(Debug, Clone)]
pub struct PathLimits {
    pub tail_point: Vector,
    pub tail_scaled: Vector,
    pub zero_error: Option<f64>,
    pub range_error: Option<f64>,
    pub violations: Vec<String>,
}

/// |a − b| ≤ tol·|b|, or ≤ tol when b = 0.
pub fn rel_close(a: &Vector, b: &Vector, tol: f64) -> bool {
    let scale = if b.norm() > 0.0 { b.norm() } else { 1.0 };
    (a - b).norm() <= tol * scale
}

fn rel_err(a: &Vector, b: &Vector) -> f64 {
    let scale = if b.norm() > 0.0 { b.norm() } else { 1.0 };
    (a - b).norm() / scale
}

/// Checks the last `tail` samples: J_λ0 against the minimum-norm zero (when
/// known), (1/λ)J_λ0 against −a⁰ (when known), and, when A⁻¹0 is empty, that
/// |J_λ0| increases over the top decade.
pub fn check_path_limits(op: &dyn MonotoneMap, path: &[PathSample], tail: usize, tol: f64) -> PathLimits {
    let mut violations = Vec::new();
    let last = path.last().expect("non-empty path");
    let tail = &path[path.len().saturating_sub(tail)..];
    let mut zero_error = None;
    let mut range_error = None;

    match op.zero_set() {
        ZeroSet::Unique(p) | ZeroSet::MinNorm(p) => {
            let worst = tail.iter().map(|s| rel_err(&s.point, &p)).fold(0.0, f64::max);
            zero_error = Some(worst);
            if !tail.iter().all(|s| rel_close(&s.point, &p, tol)) {
                violations.push(format!("J_lambda 0 tail misses the minimum-norm zero (rel err {worst:e})"));
            }
            let top = top_decade(path);
            let dists: Vec<f64> = top.iter().map(|s| (&s.point - &p).norm()).collect();
            if dists.windows(2).any(|w| w[1] > w[0] + 1e-12 * (1.0 + p.norm())) {
                violations.push("distance to the minimum-norm zero is not decreasing".into());
            }
        }
        ZeroSet::Empty => {
            let norms: Vec<f64> = top_decade(path).iter().map(|s| s.point.norm()).collect();
            if norms.windows(2).any(|w| !(w[1] > w[0])) {
                violations.push("|J_lambda 0| is not increasing across the top decade".into());
            }
        }
        ZeroSet::Unknown => {}
    }
    if let Some(a0) = op.range_min_norm() {
        let target = -a0;
        let worst = tail.iter().map(|s| rel_err(&s.scaled, &target)).fold(0.0, f64::max);
        range_error = Some(worst);
        if !tail.iter().all(|s| rel_close(&s.scaled, &target, tol)) {
            violations.push(format!("(1/lambda) J_lambda 0 tail misses -a0 (rel err {worst:e})"));
        }
    }
    PathLimits {
        tail_point: last.point.clone(),
        tail_scaled: last.scaled.clone(),
        zero_error,
        range_error,
        violations,
    }
}

fn top_decade(path: &[PathSample]) -> &[PathSample] {
    let top = path.last().map_or(0.0, |s| s.lambda) / 10.0 * (1.0 - 1e-12);
    let start = path.iter().position(|s| s.lambda >= top).unwrap_or(0);
    &path[start..]
}

/// Axis-aligned search box.
#[derive(Debug, Clone)]
pub struct Bounds {
    pub lo: Vector,
    pub hi: Vector,
}

impl Bounds {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Bounds {
            lo: Vector::from_element(dim, -half_width),
            hi: Vector::from_element(dim, half_width),
        }
    }
}

const REFINEMENTS: usize = 6;

/// Grid search for the minimum-norm zero (dim ≤ 3).
///
/// Scans dist(0, Ax) on a centred grid with `resolution` points per axis
/// (rounded up to odd), keeps points whose gap is within the grid's own
/// Lipschitz-scaled resolution, takes the one of least norm, and refines
/// around it. Returns `None` when no grid point qualifies.
pub fn min_norm_zero_bruteforce(op: &dyn MonotoneMap, bounds: &Bounds, resolution: usize) -> Option<Vector> {
    let d = op.dim();
    if d > 3 || d == 0 || bounds.lo.len() != d || bounds.hi.len() != d {
        return None;
    }
    let half = (resolution.max(3) / 2).max(1);
    let origin = Vector::zeros(d);
    let mut center = (&bounds.lo + &bounds.hi) / 2.0;
    let mut step: Vec<f64> = (0..d).map(|i| (bounds.hi[i] - bounds.lo[i]) / (2 * half) as f64).collect();
    let mut slope = None;
    let mut best: Option<Vector> = None;

    for _ in 0..=REFINEMENTS {
        let n = 2 * half + 1;
        let total = n.pow(d as u32);
        let mut points = Vec::with_capacity(total);
        let mut gaps = Vec::with_capacity(total);
        for idx in 0..total {
            let mut k = idx;
            let x = Vector::from_iterator(
                d,
                (0..d).map(|i| {
                    let j = k % n;
                    k /= n;
                    center[i] + (j as f64 - half as f64) * step[i]
                }),
            );
            gaps.push(op.inclusion_gap(&x, &origin));
            points.push(x);
        }
        // mean neighbour difference quotient, fixed at the coarsest level
        let lip = *slope.get_or_insert_with(|| {
            let mut sum = 0.0;
            let mut count = 0usize;
            for idx in 0..total {
                let mut stride = 1;
                for h in &step {
                    let j = (idx / stride) % n;
                    if j + 1 < n {
                        sum += (gaps[idx + stride] - gaps[idx]).abs() / h;
                        count += 1;
                    }
                    stride *= n;
                }
            }
            sum / count.max(1) as f64
        });
        let h = step.iter().copied().fold(0.0, f64::max);
        let tol = 2.0 * lip * h * (d as f64).sqrt() + 1e-12;
        let pick = points
            .iter()
            .zip(&gaps)
            .filter(|(_, &g)| g <= tol)
            .min_by(|a, b| {
                a.0.norm()
                    .partial_cmp(&b.0.norm())
                    .unwrap()
                    .then(a.1.partial_cmp(b.1).unwrap())
            })
            .map(|(x, _)| x.clone());
        match pick {
            Some(x) => {
                center = x.clone();
                best = Some(x);
            }
            None if best.is_none() => return None,
            None => break,
        }
        for s in step.iter_mut() {
            *s *= 3.0 / half as f64;
        }
    }
    best
}
