//! Shift, positive scaling and sums of monotone operators. Closed-form
//! metadata is propagated where it stays closed-form.

use std::sync::Arc;

use super::{isotropic, MonotoneMap, Op, ZeroSet};
use crate::error::{Error, Result};
use crate::vector::{ensure_dim, Vector};

/// x ↦ A(x − s). Zeros move by s.
pub struct ShiftedMap {
    inner: Op,
    shift: Vector,
}

pub fn shift_map(op: Op, s: Vector) -> Result<Op> {
    ensure_dim(&s, op.dim())?;
    Ok(Arc::new(ShiftedMap { inner: op, shift: s }))
}

impl MonotoneMap for ShiftedMap {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval_into(&self, x: &Vector, out: &mut Vector) {
        self.inner.eval_into(&(x - &self.shift), out);
    }

    fn describe(&self) -> String {
        format!("shift({})", self.inner.describe())
    }

    fn inclusion_gap(&self, x: &Vector, target: &Vector) -> f64 {
        self.inner.inclusion_gap(&(x - &self.shift), target)
    }

    fn resolvent(&self, lambda: f64, w: &Vector) -> Option<Vector> {
        self.inner
            .resolvent(lambda, &(w - &self.shift))
            .map(|x| x + &self.shift)
    }

    fn zero_set(&self) -> ZeroSet {
        match self.inner.zero_set() {
            ZeroSet::Unique(p) => ZeroSet::Unique(p + &self.shift),
            ZeroSet::Empty => ZeroSet::Empty,
            // the minimum-norm point of a translated set is not a translate
            _ => ZeroSet::Unknown,
        }
    }

    fn range_min_norm(&self) -> Option<Vector> {
        self.inner.range_min_norm()
    }

    fn sup_norm_bound(&self, center: &Vector, radius: f64) -> Option<f64> {
        self.inner.sup_norm_bound(&(center - &self.shift), radius)
    }

    fn isotropic_affine(&self) -> Option<(f64, Vector)> {
        self.inner
            .isotropic_affine()
            .map(|(m, b)| (m, b - &self.shift * m))
    }
}

/// x ↦ α·A(x), α > 0.
pub struct ScaledMap {
    inner: Op,
    alpha: f64,
}

pub fn scale_map(op: Op, alpha: f64) -> Result<Op> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {alpha}")));
    }
    Ok(Arc::new(ScaledMap { inner: op, alpha }))
}

impl MonotoneMap for ScaledMap {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval_into(&self, x: &Vector, out: &mut Vector) {
        self.inner.eval_into(x, out);
        *out *= self.alpha;
    }

    fn describe(&self) -> String {
        format!("{}*{}", self.alpha, self.inner.describe())
    }

    fn inclusion_gap(&self, x: &Vector, target: &Vector) -> f64 {
        self.alpha * self.inner.inclusion_gap(x, &(target / self.alpha))
    }

    fn resolvent(&self, lambda: f64, w: &Vector) -> Option<Vector> {
        self.inner.resolvent(lambda * self.alpha, w)
    }

    fn zero_set(&self) -> ZeroSet {
        self.inner.zero_set()
    }

    fn range_min_norm(&self) -> Option<Vector> {
        self.inner.range_min_norm().map(|a| a * self.alpha)
    }

    fn sup_norm_bound(&self, center: &Vector, radius: f64) -> Option<f64> {
        self.inner
            .sup_norm_bound(center, radius)
            .map(|c| c * self.alpha)
    }

    fn isotropic_affine(&self) -> Option<(f64, Vector)> {
        self.inner
            .isotropic_affine()
            .map(|(m, b)| (m * self.alpha, b * self.alpha))
    }
}

/// x ↦ A₁x + A₂x.
pub struct SumMap {
    first: Op,
    second: Op,
    // (other summand, m, b) when one summand is m·x + b
    split: Option<(Op, f64, Vector)>,
}

pub fn sum_map(first: Op, second: Op) -> Result<Op> {
    if first.dim() != second.dim() {
        return Err(Error::Dimension {
            expected: first.dim(),
            got: second.dim(),
        });
    }
    let split = if let Some((m, b)) = second.isotropic_affine() {
        Some((first.clone(), m, b))
    } else {
        first
            .isotropic_affine()
            .map(|(m, b)| (second.clone(), m, b))
    };
    Ok(Arc::new(SumMap {
        first,
        second,
        split,
    }))
}

impl MonotoneMap for SumMap {
    fn dim(&self) -> usize {
        self.first.dim()
    }

    fn eval_into(&self, x: &Vector, out: &mut Vector) {
        let mut tmp = Vector::zeros(self.dim());
        self.first.eval_into(x, out);
        self.second.eval_into(x, &mut tmp);
        *out += tmp;
    }

    fn describe(&self) -> String {
        format!("({} + {})", self.first.describe(), self.second.describe())
    }

    fn inclusion_gap(&self, x: &Vector, target: &Vector) -> f64 {
        match &self.split {
            Some((other, m, b)) => other.inclusion_gap(x, &(target - x * *m - b)),
            None => (self.eval(x) - target).norm(),
        }
    }

    fn resolvent(&self, lambda: f64, w: &Vector) -> Option<Vector> {
        // x + λ(Bx + m x + b) = w  ⇔  x = J^B_{λ/(1+λm)}((w − λb)/(1+λm))
        let (other, m, b) = self.split.as_ref()?;
        let scale = 1.0 + lambda * m;
        other.resolvent(lambda / scale, &((w - b * lambda) / scale))
    }

    fn zero_set(&self) -> ZeroSet {
        if let Some((m, b)) = self.isotropic_affine() {
            return isotropic::zero_set(m, &b);
        }
        match &self.split {
            // strongly monotone: Bx + m x + b = 0  ⇔  x = J^B_{1/m}(−b/m)
            Some((other, m, b)) if *m > 0.0 => other
                .resolvent(1.0 / m, &(-b / *m))
                .map_or(ZeroSet::Unknown, ZeroSet::Unique),
            _ => ZeroSet::Unknown,
        }
    }

    fn range_min_norm(&self) -> Option<Vector> {
        if let Some((m, b)) = self.isotropic_affine() {
            return Some(isotropic::range_min_norm(m, &b));
        }
        match self.zero_set() {
            ZeroSet::Unique(_) | ZeroSet::MinNorm(_) => Some(Vector::zeros(self.dim())),
            _ => None,
        }
    }

    fn sup_norm_bound(&self, center: &Vector, radius: f64) -> Option<f64> {
        Some(self.first.sup_norm_bound(center, radius)? + self.second.sup_norm_bound(center, radius)?)
    }

    fn isotropic_affine(&self) -> Option<(f64, Vector)> {
        let (m1, b1) = self.first.isotropic_affine()?;
        let (m2, b2) = self.second.isotropic_affine()?;
        Some((m1 + m2, b1 + b2))
    }
}

/// A closure-backed operator with no metadata. Monotonicity is the caller's
/// responsibility; see [`check_monotone`](super::check_monotone).
pub struct FnMap<F> {
    dim: usize,
    f: F,
    name: String,
}

impl<F> FnMap<F>
where
    F: Fn(&Vector) -> Vector + Send + Sync,
{
    pub fn new(dim: usize, name: impl Into<String>, f: F) -> Self {
        FnMap {
            dim,
            f,
            name: name.into(),
        }
    }
}

impl<F> MonotoneMap for FnMap<F>
where
    F: Fn(&Vector) -> Vector + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, x: &Vector, out: &mut Vector) {
        out.copy_from(&(self.f)(x));
    }

    fn describe(&self) -> String {
        self.name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{constant_map, identity_map};
    use crate::vector::vector;

    #[test]
    fn shifted_identity_vanishes_at_shift() {
        let s = vector(&[1.0, -2.0]);
        let a = shift_map(identity_map(2), s.clone()).unwrap();
        assert_eq!(a.eval(&s), Vector::zeros(2));
        assert_eq!(a.zero_set(), ZeroSet::Unique(s.clone()));
        let w = vector(&[3.0, 3.0]);
        let x = a.resolvent(2.0, &w).unwrap();
        assert!((&x + a.eval(&x) * 2.0 - w).norm() < 1e-14);
    }

    #[test]
    fn scaled_constant_range() {
        let a = scale_map(constant_map(vector(&[1.0, 2.0])).unwrap(), 3.0).unwrap();
        assert_eq!(a.range_min_norm().unwrap(), vector(&[3.0, 6.0]));
        assert!(a.zero_set().is_empty_set());
        assert!(scale_map(identity_map(1), 0.0).is_err());
    }

    #[test]
    fn identity_plus_constant() {
        let a = sum_map(identity_map(1), constant_map(vector(&[1.0])).unwrap()).unwrap();
        assert_eq!(a.zero_set(), ZeroSet::Unique(vector(&[-1.0])));
        assert_eq!(a.eval(&vector(&[-1.0]))[0], 0.0);
        let x = a.resolvent(0.5, &vector(&[2.0])).unwrap();
        assert!((x[0] + 0.5 * (x[0] + 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sum_dimension_mismatch() {
        assert!(sum_map(identity_map(1), identity_map(2)).is_err());
        assert!(shift_map(identity_map(2), vector(&[1.0])).is_err());
    }
}
