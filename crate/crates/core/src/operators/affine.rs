use nalgebra::{DMatrix, SymmetricEigen, SVD};

use super::{isotropic, MonotoneMap, Op, ZeroSet};
use crate::error::{Error, Result};
use crate::vector::{ensure_dim, ensure_finite, Vector};

use std::sync::Arc;

/// A x = M x + b with M + Mᵀ positive semidefinite.
#[derive(Debug, Clone)]
pub struct AffineMap {
    m: DMatrix<f64>,
    b: Vector,
    zeros: ZeroSet,
    a0: Vector,
    m_norm: f64,
    isotropic: Option<f64>,
}

pub fn affine_map(m: DMatrix<f64>, b: Vector) -> Result<Op> {
    Ok(Arc::new(AffineMap::new(m, b)?))
}

pub fn identity_map(dim: usize) -> Op {
    Arc::new(AffineMap::new(DMatrix::identity(dim, dim), Vector::zeros(dim)).expect("identity"))
}

pub fn zero_map(dim: usize) -> Op {
    constant_map(Vector::zeros(dim)).expect("zero")
}

/// A x ≡ c. Has no zero unless c = 0; a⁰ = c.
pub fn constant_map(c: Vector) -> Result<Op> {
    let d = c.len();
    Ok(Arc::new(AffineMap::new(DMatrix::zeros(d, d), c)?))
}

impl AffineMap {
    pub fn new(m: DMatrix<f64>, b: Vector) -> Result<Self> {
        let d = b.len();
        if d == 0 {
            return Err(Error::Config("affine map needs dimension >= 1".into()));
        }
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                got: if m.nrows() != d { m.nrows() } else { m.ncols() },
            });
        }
        if !m.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        ensure_finite(&b, "offset")?;

        let m_norm = m.norm();
        let sym = &m + m.transpose();
        let min_eig = SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 * (1.0 + m_norm) {
            return Err(Error::NotMonotone(format!(
                "(y1-y2, x1-x2) >= 0 fails: M + M^T has eigenvalue {min_eig:.3e} < 0"
            )));
        }

        let isotropic = isotropic_scalar(&m);
        let (zeros, a0) = match isotropic {
            Some(s) => (isotropic::zero_set(s, &b), isotropic::range_min_norm(s, &b)),
            None => affine_zero_metadata(&m, &b),
        };
        let spectral = SVD::new(m.clone(), false, false)
            .singular_values
            .iter()
            .copied()
            .fold(0.0, f64::max);

        Ok(AffineMap {
            m,
            b,
            zeros,
            a0,
            m_norm: spectral,
            isotropic,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn offset(&self) -> &Vector {
        &self.b
    }
}

fn isotropic_scalar(m: &DMatrix<f64>) -> Option<f64> {
    let s = m[(0, 0)];
    let d = m.nrows();
    for i in 0..d {
        for j in 0..d {
            let want = if i == j { s } else { 0.0 };
            if m[(i, j)] != want {
                return None;
            }
        }
    }
    Some(s)
}

/// Minimum-norm solution of M x = −b (when consistent) and the minimum-norm
/// element of b + R(M), both from one SVD.
fn affine_zero_metadata(m: &DMatrix<f64>, b: &Vector) -> (ZeroSet, Vector) {
    let d = b.len();
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.as_ref().expect("u");
    let v_t = svd.v_t.as_ref().expect("v_t");
    let sv = &svd.singular_values;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let tol = (d as f64) * f64::EPSILON * smax.max(1e-300) * 16.0;
    let rank = sv.iter().filter(|&&s| s > tol).count();

    // projection of b onto R(M) = span of leading left singular vectors
    let mut proj = Vector::zeros(d);
    let mut x = Vector::zeros(d);
    for k in 0..d {
        if sv[k] <= tol {
            continue;
        }
        let uk = u.column(k);
        let coef = uk.dot(b);
        proj += uk * coef;
        x -= v_t.row(k).transpose() * (coef / sv[k]);
    }
    let a0 = b - &proj;
    let consistent = a0.norm() <= 1e-10 * (1.0 + b.norm());
    let zeros = if !consistent {
        ZeroSet::Empty
    } else if rank == d {
        ZeroSet::Unique(x)
    } else {
        ZeroSet::MinNorm(x)
    };
    let a0 = if consistent { Vector::zeros(d) } else { a0 };
    (zeros, a0)
}

impl MonotoneMap for AffineMap {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn eval_into(&self, x: &Vector, out: &mut Vector) {
        out.copy_from(&self.b);
        out.gemv(1.0, &self.m, x, 1.0);
    }

    fn describe(&self) -> String {
        match self.isotropic {
            Some(0.0) => format!("constant(dim={})", self.dim()),
            Some(s) => format!("affine({s}*I + b, dim={})", self.dim()),
            None => format!("affine(dim={})", self.dim()),
        }
    }

    fn resolvent(&self, lambda: f64, w: &Vector) -> Option<Vector> {
        if ensure_dim(w, self.dim()).is_err() || !(lambda > 0.0) {
            return None;
        }
        if let Some(s) = self.isotropic {
            return Some(isotropic::resolvent(s, &self.b, lambda, w));
        }
        let d = self.dim();
        let lhs = DMatrix::identity(d, d) + &self.m * lambda;
        lhs.lu().solve(&(w - &self.b * lambda))
    }

    fn zero_set(&self) -> ZeroSet {
        self.zeros.clone()
    }

    fn range_min_norm(&self) -> Option<Vector> {
        Some(self.a0.clone())
    }

    fn sup_norm_bound(&self, center: &Vector, radius: f64) -> Option<f64> {
        Some((&self.m * center + &self.b).norm() + self.m_norm * radius)
    }

    fn isotropic_affine(&self) -> Option<(f64, Vector)> {
        self.isotropic.map(|s| (s, self.b.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::vector;

    fn skew() -> AffineMap {
        AffineMap::new(
            DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]),
            vector(&[1.0, 0.0]),
        )
        .unwrap()
    }

    #[test]
    fn identity_has_zero_at_origin() {
        let id = identity_map(3);
        assert_eq!(id.zero_set(), ZeroSet::Unique(Vector::zeros(3)));
        let x = vector(&[1.0, -2.0, 3.0]);
        assert_eq!(id.eval(&x), x);
    }

    #[test]
    fn skew_rotation_zero() {
        let a = skew();
        // M x* = -b by direct substitution
        let p = a.zero_set().point().unwrap().clone();
        assert!((p - vector(&[0.0, 1.0])).norm() < 1e-14);
        assert!(a.eval(&vector(&[0.0, 1.0])).norm() < 1e-15);
        assert_eq!(a.range_min_norm().unwrap(), Vector::zeros(2));
    }

    #[test]
    fn singular_affine_min_norm_zero() {
        let a = AffineMap::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            vector(&[-1.0, 0.0]),
        )
        .unwrap();
        match a.zero_set() {
            ZeroSet::MinNorm(p) => assert!((p - vector(&[1.0, 0.0])).norm() < 1e-14),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn inconsistent_affine_has_a0_in_kernel() {
        let a = AffineMap::new(
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            vector(&[-1.0, 2.0]),
        )
        .unwrap();
        assert!(a.zero_set().is_empty_set());
        assert!((a.range_min_norm().unwrap() - vector(&[0.0, 2.0])).norm() < 1e-14);
    }

    #[test]
    fn constant_metadata() {
        let c = constant_map(vector(&[3.0, 4.0])).unwrap();
        assert!(c.zero_set().is_empty_set());
        assert_eq!(c.range_min_norm().unwrap(), vector(&[3.0, 4.0]));
        let w = vector(&[1.0, 1.0]);
        assert_eq!(c.resolvent(0.5, &w).unwrap(), vector(&[-0.5, -1.0]));
        assert_eq!(zero_map(2).zero_set().point().unwrap(), &Vector::zeros(2));
    }

    #[test]
    fn rejects_non_monotone() {
        let err = AffineMap::new(-DMatrix::<f64>::identity(2, 2), Vector::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::NotMonotone(_)));
    }

    #[test]
    fn resolvent_solves_definition() {
        let a = skew();
        let w = vector(&[0.3, -2.0]);
        let x = a.resolvent(2.5, &w).unwrap();
        assert!((&x + a.eval(&x) * 2.5 - w).norm() < 1e-13);
    }
}
