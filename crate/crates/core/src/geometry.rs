//! Local boundedness and the angle bound for monotone maps.
//!
//! If |η| ≤ c0 for every η ∈ Aξ with ξ in the ball B(x0, r0), then any
//! y ∈ Ax with c = |y| > c0 and r = |x − x0| satisfies
//! (y, x − x0) ≥ σ·c·r with
//! σ = (r0/r)·sqrt(1 − (c0/c)²) − (c0/c)·sqrt(1 − (r0/r)²).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::operators::MonotoneMap;
use crate::vector::{ensure_dim, Vector};

pub fn angle_bound(r0: f64, c0: f64, r: f64, c: f64) -> Result<f64> {
    if !(r0 > 0.0 && r >= r0 && c0 >= 0.0 && c > c0) || !(r.is_finite() && c.is_finite()) {
        return Err(Error::Domain(format!(
            "angle bound needs 0 < r0 <= r and 0 <= c0 < c (r0={r0}, r={r}, c0={c0}, c={c})"
        )));
    }
    let rr = r0 / r;
    let cc = c0 / c;
    Ok(rr * (1.0 - cc * cc).sqrt() - cc * (1.0 - rr * rr).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSource {
    Sampled,
    Analytic,
}

#[derive(Debug, Clone)]
pub struct LocalBound {
    pub x0: Vector,
    pub r0: f64,
    /// Bound on sup |η| over the ball.
    pub c0: f64,
    pub source: BoundSource,
}

pub const SAMPLE_INFLATION: f64 = 1.05;

/// Quasi-uniform points of B(center, radius): the centre, the 2d axis poles,
/// then random points with radius·u^(1/d) radial law.
pub fn ball_samples(center: &Vector, radius: f64, count: usize, seed: u64) -> Vec<Vector> {
    let d = center.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count + 2 * d + 1);
    out.push(center.clone());
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut p = center.clone();
            p[i] += sign * radius;
            out.push(p);
        }
    }
    while out.len() < count.max(out.len()) {
        let dir = Vector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let n = dir.norm();
        if n == 0.0 {
            continue;
        }
        // half the draws sit on the sphere, where sup |A| usually lives
        let u: f64 = if out.len() % 2 == 0 { 1.0 } else { rng.random::<f64>().powf(1.0 / d as f64) };
        out.push(center + dir * (radius * u / n));
    }
    out
}

/// c0 = 1.05 · max |eval| over sampled points of the ball; deterministic given `seed`.
pub fn local_bound(op: &dyn MonotoneMap, x0: &Vector, r0: f64, samples: usize, seed: u64) -> Result<LocalBound> {
    ensure_dim(x0, op.dim())?;
    if !(r0 > 0.0) {
        return Err(Error::Domain(format!("r0 = {r0}")));
    }
    let mut y = Vector::zeros(op.dim());
    let mut sup: f64 = 0.0;
    for p in ball_samples(x0, r0, samples, seed) {
        op.eval_into(&p, &mut y);
        sup = sup.max(y.norm());
    }
    Ok(LocalBound {
        x0: x0.clone(),
        r0,
        c0: SAMPLE_INFLATION * sup,
        source: BoundSource::Sampled,
    })
}

/// The operator's analytic sup-norm bound when it has one, else [`local_bound`].
pub fn certified_local_bound(op: &dyn MonotoneMap, x0: &Vector, r0: f64, samples: usize, seed: u64) -> Result<LocalBound> {
    ensure_dim(x0, op.dim())?;
    if !(r0 > 0.0) {
        return Err(Error::Domain(format!("r0 = {r0}")));
    }
    match op.sup_norm_bound(x0, r0) {
        Some(c0) => Ok(LocalBound {
            x0: x0.clone(),
            r0,
            c0,
            source: BoundSource::Analytic,
        }),
        None => local_bound(op, x0, r0, samples, seed),
    }
}

#[derive(Debug, Clone)]
pub struct AngleViolation {
    pub x: Vector,
    /// (y, x − x0)
    pub inner: f64,
    /// σ·c·r
    pub bound: f64,
}

#[derive(Debug, Clone, Default)]
pub struct AngleCheck {
    pub tested: usize,
    /// Probes inside the ball or with |y| ≤ c0.
    pub skipped: usize,
    pub violations: Vec<AngleViolation>,
}

pub fn check_angle_bound(op: &dyn MonotoneMap, bound: &LocalBound, probes: &[Vector]) -> AngleCheck {
    let mut out = AngleCheck::default();
    let mut y = Vector::zeros(op.dim());
    for x in probes {
        let offset = x - &bound.x0;
        let r = offset.norm();
        op.eval_into(x, &mut y);
        let c = y.norm();
        if r < bound.r0 || c <= bound.c0 {
            out.skipped += 1;
            continue;
        }
        out.tested += 1;
        let sigma = angle_bound(bound.r0, bound.c0, r, c).expect("gated");
        let inner = y.dot(&offset);
        let rhs = sigma * c * r;
        if inner < rhs - 1e-9 * (1.0 + c * r) {
            out.violations.push(AngleViolation {
                x: x.clone(),
                inner,
                bound: rhs,
            });
        }
    }
    out
}

/// `count` points with |x − x0| spread over [1.1·r0, 20·r0].
pub fn shell_probes(x0: &Vector, r0: f64, count: usize, seed: u64) -> Vec<Vector> {
    let d = x0.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| loop {
            let dir = Vector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let n = dir.norm();
            if n > 0.0 {
                let radius = r0 * (1.1 + 18.9 * rng.random::<f64>());
                break x0 + dir * (radius / n);
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{constant_map, identity_map, zero_map};
    use crate::vector::vector;

    #[test]
    fn sigma_examples() {
        assert_eq!(angle_bound(1.0, 0.0, 2.0, 5.0).unwrap(), 0.5);
        for t in [0.1, 0.5, 0.9] {
            assert!(angle_bound(t, t * 4.0, 1.0, 4.0).unwrap().abs() < 1e-15);
        }
        assert!((angle_bound(2.0, 3.0, 2.0, 5.0).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn sigma_domain() {
        assert!(angle_bound(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(angle_bound(2.0, 0.0, 1.0, 1.0).is_err());
        assert!(angle_bound(1.0, 1.0, 2.0, 1.0).is_err());
        assert!(angle_bound(1.0, -0.1, 2.0, 1.0).is_err());
    }

    #[test]
    fn local_bound_examples() {
        let b = local_bound(identity_map(2).as_ref(), &Vector::zeros(2), 1.0, 200, 0).unwrap();
        assert!((b.c0 - 1.05).abs() < 1e-12);
        let c = vector(&[3.0, 4.0]);
        let b = local_bound(constant_map(c).unwrap().as_ref(), &vector(&[9.0, 9.0]), 0.3, 50, 1).unwrap();
        assert!((b.c0 - 5.25).abs() < 1e-12);
        let b = local_bound(zero_map(3).as_ref(), &Vector::zeros(3), 2.0, 50, 2).unwrap();
        assert_eq!(b.c0, 0.0);
    }

    #[test]
    fn identity_probe_passes() {
        let id = identity_map(2);
        let bound = local_bound(id.as_ref(), &Vector::zeros(2), 1.0, 100, 0).unwrap();
        let check = check_angle_bound(id.as_ref(), &bound, &[vector(&[3.0, 0.0]), vector(&[0.5, 0.0])]);
        assert_eq!(check.tested, 1);
        assert_eq!(check.skipped, 1);
        assert!(check.violations.is_empty());
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = ball_samples(&Vector::zeros(3), 1.0, 40, 9);
        let b = ball_samples(&Vector::zeros(3), 1.0, 40, 9);
        assert_eq!(a, b);
        assert!(a.iter().all(|p| p.norm() <= 1.0 + 1e-12));
    }
}
