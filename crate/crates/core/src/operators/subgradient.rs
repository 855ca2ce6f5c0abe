//! Subdifferentials of convex functionals from a small catalog:
//!
//! ```text
//! f(x) = ½ xᵀQx + bᵀx + β|x| + Σ_k w_k·huber_{δ_k}(|x|) + α·max_i x_i
//! ```
//!
//! The selection returned by `eval` is the minimum-norm element of ∂f(x).
//! Norm and max terms cannot be combined in one functional.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use super::{MonotoneMap, Op, ZeroSet};
use crate::error::{Error, Result};
use crate::vector::{ensure_dim, Vector};

#[derive(Debug, Clone)]
pub enum ConvexTerm {
    /// ½ xᵀQx + bᵀx with Q positive semidefinite.
    Quadratic { matrix: DMatrix<f64>, linear: Vector },
    /// weight·|x|.
    Norm { weight: f64 },
    /// weight·h(|x|), h(s) = s²/(2δ) for s ≤ δ, s − δ/2 beyond.
    Huber { weight: f64, delta: f64 },
    /// weight·max_i x_i.
    MaxCoord { weight: f64 },
}

#[derive(Debug, Clone)]
pub struct ConvexFn {
    pub dim: usize,
    pub terms: Vec<ConvexTerm>,
}

impl ConvexFn {
    pub fn new(dim: usize, terms: Vec<ConvexTerm>) -> Self {
        ConvexFn { dim, terms }
    }

    /// f(x), up to additive constants.
    pub fn value(&self, x: &Vector) -> f64 {
        let t = x.norm();
        self.terms
            .iter()
            .map(|term| match term {
                ConvexTerm::Quadratic { matrix, linear } => {
                    0.5 * x.dot(&(matrix * x)) + linear.dot(x)
                }
                ConvexTerm::Norm { weight } => weight * t,
                ConvexTerm::Huber { weight, delta } => weight * huber(t, *delta),
                ConvexTerm::MaxCoord { weight } => weight * x.max(),
            })
            .sum()
    }
}

fn huber(t: f64, delta: f64) -> f64 {
    if t <= delta {
        t * t / (2.0 * delta)
    } else {
        t - delta / 2.0
    }
}

pub fn subgradient_map(f: &ConvexFn) -> Result<Op> {
    Ok(Arc::new(SubgradientMap::new(f)?))
}

#[derive(Debug, Clone)]
pub struct SubgradientMap {
    dim: usize,
    q: DMatrix<f64>,
    b: Vector,
    // eigendecomposition of Q: Q = V diag(eig) Vᵀ
    eig: Vector,
    basis: DMatrix<f64>,
    q_norm: f64,
    q_iso: Option<f64>,
    norm_weight: f64,
    hubers: Vec<(f64, f64)>,
    max_weight: f64,
    zeros: ZeroSet,
    a0: Option<Vector>,
    label: String,
}

impl SubgradientMap {
    pub fn new(f: &ConvexFn) -> Result<Self> {
        let d = f.dim;
        if d == 0 {
            return Err(Error::OutsideCatalog("dimension must be >= 1".into()));
        }
        let mut q = DMatrix::zeros(d, d);
        let mut b = Vector::zeros(d);
        let mut norm_weight = 0.0;
        let mut hubers = Vec::new();
        let mut max_weight = 0.0;
        let mut names = Vec::new();
        let weight_ok = |w: f64| w.is_finite() && w >= 0.0;

        for term in &f.terms {
            match term {
                ConvexTerm::Quadratic { matrix, linear } => {
                    if matrix.nrows() != d || matrix.ncols() != d || linear.len() != d {
                        return Err(Error::Dimension {
                            expected: d,
                            got: if linear.len() != d { linear.len() } else { matrix.nrows() },
                        });
                    }
                    if !matrix.iter().chain(linear.iter()).all(|v| v.is_finite()) {
                        return Err(Error::NonFinite("quadratic term"));
                    }
                    q += (matrix + matrix.transpose()) * 0.5;
                    b += linear;
                    names.push("quadratic");
                }
                ConvexTerm::Norm { weight } => {
                    if !weight_ok(*weight) {
                        return Err(Error::OutsideCatalog(format!("norm weight {weight}")));
                    }
                    norm_weight += weight;
                    names.push("norm");
                }
                ConvexTerm::Huber { weight, delta } => {
                    if !weight_ok(*weight) || !(delta.is_finite() && *delta > 0.0) {
                        return Err(Error::OutsideCatalog(format!(
                            "huber weight {weight}, delta {delta}"
                        )));
                    }
                    if *weight > 0.0 {
                        hubers.push((*weight, *delta));
                    }
                    names.push("huber");
                }
                ConvexTerm::MaxCoord { weight } => {
                    if !weight_ok(*weight) {
                        return Err(Error::OutsideCatalog(format!("max weight {weight}")));
                    }
                    max_weight += weight;
                    names.push("max");
                }
            }
        }
        if max_weight > 0.0 && (norm_weight > 0.0 || !hubers.is_empty()) {
            return Err(Error::OutsideCatalog(
                "max-of-coordinates cannot be combined with norm or huber terms".into(),
            ));
        }

        let q_norm = q.norm();
        let se = SymmetricEigen::new(q.clone());
        let min_eig = se.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 * (1.0 + q_norm) {
            return Err(Error::NotMonotone(format!(
                "quadratic term is not convex: eigenvalue {min_eig:.3e} < 0"
            )));
        }
        let eig = se.eigenvalues.map(|e| e.max(0.0));
        let q_iso = isotropic_scalar(&q);

        let mut map = SubgradientMap {
            dim: d,
            q,
            b,
            eig,
            basis: se.eigenvectors,
            q_norm: 0.0,
            q_iso,
            norm_weight,
            hubers,
            max_weight,
            zeros: ZeroSet::Unknown,
            a0: None,
            label: if names.is_empty() {
                "zero".into()
            } else {
                names.join("+")
            },
        };
        map.q_norm = map.eig.iter().copied().fold(0.0, f64::max);
        let (zeros, a0) = map.zero_metadata();
        map.zeros = zeros;
        map.a0 = a0;
        Ok(map)
    }

    fn has_radial(&self) -> bool {
        self.norm_weight > 0.0 || !self.hubers.is_empty()
    }

    /// φ'(t) for φ(t) = β t + Σ w_k h_{δ_k}(t), t ≥ 0 (right derivative at 0).
    fn radial_slope(&self, t: f64) -> f64 {
        self.norm_weight
            + self
                .hubers
                .iter()
                .map(|&(w, delta)| w * (t / delta).min(1.0))
                .sum::<f64>()
    }

    /// Smooth part of the gradient plus the radial term away from the origin.
    fn smooth_gradient(&self, x: &Vector, out: &mut Vector) {
        out.copy_from(&self.b);
        out.gemv(1.0, &self.q, x, 1.0);
        let t = x.norm();
        if t > 0.0 && self.has_radial() {
            out.axpy(self.radial_slope(t) / t, x, 1.0);
        }
    }

    /// Minimum-norm element of g + K where K is the set-valued part of ∂f(x).
    fn min_norm_shift(&self, x: &Vector, g: &mut Vector) {
        if self.norm_weight > 0.0 && x.iter().all(|&c| c == 0.0) {
            let n = g.norm();
            let keep = if n > self.norm_weight {
                1.0 - self.norm_weight / n
            } else {
                0.0
            };
            *g *= keep;
        } else if self.max_weight > 0.0 {
            let top = x.max();
            let tol = 1e-12 * (1.0 + x.amax());
            let active: Vec<usize> = (0..self.dim).filter(|&i| x[i] >= top - tol).collect();
            let neg: Vec<f64> = active.iter().map(|&i| -g[i]).collect();
            let (s, _) = project_simplex(&neg, self.max_weight);
            for (k, &i) in active.iter().enumerate() {
                g[i] += s[k];
            }
        }
    }

    /// (I + λQ + s·I)⁻¹ c in the eigenbasis; `c_hat` = Vᵀc.
    fn shifted_solve(&self, lambda: f64, shift: f64, c_hat: &Vector) -> Vector {
        let scaled = Vector::from_iterator(
            self.dim,
            (0..self.dim).map(|i| c_hat[i] / (1.0 + lambda * self.eig[i] + shift)),
        );
        &self.basis * scaled
    }

    /// Solves (A + sI)x = c with s·|x| = κ·φ'(|x|), where A = diag(a) in the
    /// eigenbasis and `c_hat` = Vᵀc. Returns 0 when |c| ≤ κβ.
    fn radial_root(&self, a: &Vector, c_hat: &Vector, kappa: f64) -> Option<Vector> {
        let c_norm = c_hat.norm();
        if c_norm <= kappa * self.norm_weight {
            return Some(Vector::zeros(self.dim));
        }
        let t_of = |s: f64| -> f64 {
            (0..self.dim)
                .map(|i| {
                    let v = c_hat[i] / (a[i] + s);
                    v * v
                })
                .sum::<f64>()
                .sqrt()
        };
        let h = |s: f64| -> f64 {
            let t = t_of(s);
            s * t - kappa * self.radial_slope(t)
        };
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut guard = 0;
        while !(h(hi) > 0.0) {
            lo = hi;
            hi *= 2.0;
            guard += 1;
            if guard > 2000 || !hi.is_finite() {
                return None;
            }
        }
        if a.iter().any(|&ai| ai <= 0.0) && lo == 0.0 {
            lo = f64::MIN_POSITIVE;
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let s = 0.5 * (lo + hi);
        let x_hat = Vector::from_iterator(self.dim, (0..self.dim).map(|i| c_hat[i] / (a[i] + s)));
        Some(&self.basis * x_hat)
    }

    fn zero_metadata(&self) -> (ZeroSet, Option<Vector>) {
        let d = self.dim;
        let origin = Vector::zeros(d);
        let b_norm = self.b.norm();
        let pd = self.eig.iter().copied().fold(f64::INFINITY, f64::min) > 1e-12 * (1.0 + self.q_norm);
        let q_zero = self.q_norm == 0.0;
        let found = |z: ZeroSet| (z, Some(Vector::zeros(d)));

        if self.max_weight > 0.0 {
            return match self.q_iso {
                Some(q) if q > 0.0 => {
                    found(ZeroSet::Unique(prox_max(&(-&self.b / q), self.max_weight / q)))
                }
                Some(_) => {
                    // ∂f ranges over b + α·Δ; zeros exist iff −b ∈ αΔ, and then
                    // every t·1 is a zero
                    let alpha = self.max_weight;
                    let tol = 1e-12 * (1.0 + alpha);
                    let in_simplex = self.b.iter().all(|&bi| -bi >= -tol)
                        && (-self.b.sum() - alpha).abs() <= tol;
                    if in_simplex {
                        found(ZeroSet::MinNorm(origin))
                    } else {
                        let neg: Vec<f64> = self.b.iter().map(|v| -v).collect();
                        let (s, _) = project_simplex(&neg, alpha);
                        (ZeroSet::Empty, Some(&self.b + Vector::from_vec(s)))
                    }
                }
                None => (ZeroSet::Unknown, None),
            };
        }

        if self.has_radial() {
            if b_norm < self.norm_weight || (b_norm == 0.0 && !self.hubers.is_empty()) {
                return found(ZeroSet::Unique(origin));
            }
            if b_norm <= self.norm_weight {
                return found(if pd {
                    ZeroSet::Unique(origin)
                } else {
                    ZeroSet::MinNorm(origin)
                });
            }
            if pd {
                let c_hat = self.basis.transpose() * (-&self.b);
                return match self.radial_root(&self.eig, &c_hat, 1.0) {
                    Some(p) => found(ZeroSet::Unique(p)),
                    None => (ZeroSet::Unknown, None),
                };
            }
            if q_zero {
                // b + φ'(t)·x/t = 0 with x = −t·b/|b|; φ' rises from β to R
                let reach = self.norm_weight + self.hubers.iter().map(|h| h.0).sum::<f64>();
                if b_norm > reach {
                    return (ZeroSet::Empty, Some(&self.b * (1.0 - reach / b_norm)));
                }
                let mut lo = 0.0;
                let mut hi = self.hubers.iter().map(|h| h.1).fold(0.0, f64::max);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.radial_slope(mid) >= b_norm {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let p = &self.b * (-hi / b_norm);
                // a flat stretch of φ' at level |b| means a segment of minimisers
                let z = if self.radial_slope(hi * (1.0 + 1e-9) + 1e-300) > b_norm {
                    ZeroSet::Unique(p)
                } else {
                    ZeroSet::MinNorm(p)
                };
                return found(z);
            }
            return (ZeroSet::Unknown, None);
        }

        // pure quadratic: Qx = −b in the eigenbasis
        let tol = (d as f64) * f64::EPSILON * 16.0 * self.q_norm.max(1e-300);
        let b_hat = self.basis.transpose() * &self.b;
        let mut x_hat = Vector::zeros(d);
        let mut resid_hat = Vector::zeros(d);
        let mut rank = 0;
        for i in 0..d {
            if self.eig[i] > tol {
                x_hat[i] = -b_hat[i] / self.eig[i];
                rank += 1;
            } else {
                resid_hat[i] = b_hat[i];
            }
        }
        let resid = &self.basis * resid_hat;
        if resid.norm() > 1e-10 * (1.0 + b_norm) {
            return (ZeroSet::Empty, Some(resid));
        }
        let p = &self.basis * x_hat;
        found(if rank == d {
            ZeroSet::Unique(p)
        } else {
            ZeroSet::MinNorm(p)
        })
    }
}

fn isotropic_scalar(m: &DMatrix<f64>) -> Option<f64> {
    let s = m[(0, 0)];
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let want = if i == j { s } else { 0.0 };
            if m[(i, j)] != want {
                return None;
            }
        }
    }
    Some(s)
}

/// Euclidean projection of `v` onto {s ≥ 0, Σ s = radius}. Also returns the
/// threshold τ with s_i = max(v_i − τ, 0).
pub(crate) fn project_simplex(v: &[f64], radius: f64) -> (Vec<f64>, f64) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let cand = (cum - radius) / (j + 1) as f64;
        if uj - cand > 0.0 {
            tau = cand;
        }
    }
    (v.iter().map(|&vi| (vi - tau).max(0.0)).collect(), tau)
}

/// prox of κ·max: coordinates above the threshold are clipped to it exactly.
fn prox_max(v: &Vector, kappa: f64) -> Vector {
    let (_, tau) = project_simplex(v.as_slice(), kappa);
    v.map(|vi| vi.min(tau))
}

impl MonotoneMap for SubgradientMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval_into(&self, x: &Vector, out: &mut Vector) {
        self.smooth_gradient(x, out);
        self.min_norm_shift(x, out);
    }

    fn describe(&self) -> String {
        format!("subgradient({}, dim={})", self.label, self.dim)
    }

    fn inclusion_gap(&self, x: &Vector, target: &Vector) -> f64 {
        let mut g = Vector::zeros(self.dim);
        self.smooth_gradient(x, &mut g);
        g -= target;
        self.min_norm_shift(x, &mut g);
        g.norm()
    }

    fn resolvent(&self, lambda: f64, w: &Vector) -> Option<Vector> {
        if ensure_dim(w, self.dim).is_err() || !(lambda > 0.0) {
            return None;
        }
        let c = w - &self.b * lambda;
        if self.max_weight > 0.0 {
            let q = self.q_iso?;
            let scale = 1.0 + lambda * q;
            return Some(prox_max(&(c / scale), lambda * self.max_weight / scale));
        }
        let c_hat = self.basis.transpose() * &c;
        if self.has_radial() {
            let a = self.eig.map(|e| 1.0 + lambda * e);
            self.radial_root(&a, &c_hat, lambda)
        } else {
            Some(self.shifted_solve(lambda, 0.0, &c_hat))
        }
    }

    fn zero_set(&self) -> ZeroSet {
        self.zeros.clone()
    }

    fn range_min_norm(&self) -> Option<Vector> {
        self.a0.clone()
    }

    fn sup_norm_bound(&self, center: &Vector, radius: f64) -> Option<f64> {
        let linear = (&self.q * center + &self.b).norm() + self.q_norm * radius;
        let radial = self.norm_weight + self.hubers.iter().map(|h| h.0).sum::<f64>();
        Some(linear + radial + self.max_weight)
    }

    fn isotropic_affine(&self) -> Option<(f64, Vector)> {
        if self.has_radial() || self.max_weight > 0.0 {
            return None;
        }
        self.q_iso.map(|q| (q, self.b.clone()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vector::vector;

    fn quad(q: &[f64], b: &[f64]) -> ConvexTerm {
        let d = b.len();
        ConvexTerm::Quadratic {
            matrix: DMatrix::from_row_slice(d, d, q),
            linear: vector(b),
        }
    }

    #[test]
    fn half_norm_squared_is_identity() {
        let f = ConvexFn::new(2, vec![quad(&[1.0, 0.0, 0.0, 1.0], &[0.0, 0.0])]);
        let a = SubgradientMap::new(&f).unwrap();
        let x = vector(&[0.3, -7.0]);
        assert_eq!(a.eval(&x), x);
        assert_eq!(a.zero_set(), ZeroSet::Unique(Vector::zeros(2)));
        assert!(a.isotropic_affine().is_some());
    }

    #[test]
    fn absolute_value_selection() {
        let f = ConvexFn::new(1, vec![ConvexTerm::Norm { weight: 1.0 }]);
        let a = SubgradientMap::new(&f).unwrap();
        assert_eq!(a.eval(&vector(&[2.5]))[0], 1.0);
        assert_eq!(a.eval(&vector(&[-0.1]))[0], -1.0);
        assert_eq!(a.eval(&vector(&[0.0]))[0], 0.0);
        assert_eq!(a.zero_set().point().unwrap()[0], 0.0);
        // the whole of [-1, 1] is reachable at 0
        assert_eq!(a.inclusion_gap(&vector(&[0.0]), &vector(&[0.7])), 0.0);
        assert!((a.inclusion_gap(&vector(&[0.0]), &vector(&[1.5])) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn shifted_absolute_value_minimiser_matches_grid() {
        // ½(x−1)² + |x| = ½x² − x + |x| + const
        let f = ConvexFn::new(1, vec![quad(&[1.0], &[-1.0]), ConvexTerm::Norm { weight: 1.0 }]);
        let a = SubgradientMap::new(&f).unwrap();
        let best = (-20_000..=20_000)
            .map(|k| k as f64 * 1e-4)
            .min_by(|u, v| {
                f.value(&vector(&[*u]))
                    .partial_cmp(&f.value(&vector(&[*v])))
                    .unwrap()
            })
            .unwrap();
        assert!(best.abs() <= 1e-4);
        let p = a.zero_set().point().unwrap().clone();
        assert!((p[0] - best).abs() <= 1e-4);
        assert_eq!(a.eval(&p)[0], 0.0);
    }

    #[test]
    fn norm_and_max_together_are_rejected() {
        let f = ConvexFn::new(
            2,
            vec![ConvexTerm::Norm { weight: 1.0 }, ConvexTerm::MaxCoord { weight: 1.0 }],
        );
        assert!(matches!(SubgradientMap::new(&f), Err(Error::OutsideCatalog(_))));
    }

    #[test]
    fn nonconvex_quadratic_rejected() {
        let f = ConvexFn::new(1, vec![quad(&[-1.0], &[0.0])]);
        assert!(matches!(SubgradientMap::new(&f), Err(Error::NotMonotone(_))));
    }

    #[test]
    fn max_coordinates_metadata() {
        let f = ConvexFn::new(3, vec![ConvexTerm::MaxCoord { weight: 1.5 }]);
        let a = SubgradientMap::new(&f).unwrap();
        assert!(a.zero_set().is_empty_set());
        let a0 = a.range_min_norm().unwrap();
        assert!((a0 - Vector::from_element(3, 0.5)).norm() < 1e-15);
        // at the origin all coordinates tie; min-norm element is the barycentre
        assert_eq!(a.eval(&Vector::zeros(3)), Vector::from_element(3, 0.5));
        assert_eq!(a.eval(&vector(&[0.0, 2.0, 1.0])), vector(&[0.0, 1.5, 0.0]));
    }

    #[test]
    fn simplex_projection() {
        let (s, _) = project_simplex(&[0.2, 0.2, 0.2], 1.0);
        for v in s {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let (s, _) = project_simplex(&[5.0, 0.0], 1.0);
        assert_eq!(s, vec![1.0, 0.0]);
    }

    #[test]
    fn structured_resolvents_satisfy_inclusion() {
        let cases = vec![
            ConvexFn::new(
                3,
                vec![
                    quad(&[2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0], &[1.0, -1.0, 0.5]),
                    ConvexTerm::Norm { weight: 0.3 },
                ],
            ),
            ConvexFn::new(
                2,
                vec![
                    ConvexTerm::Huber { weight: 1.0, delta: 0.5 },
                    ConvexTerm::Huber { weight: 0.5, delta: 2.0 },
                    quad(&[0.0, 0.0, 0.0, 0.0], &[0.2, 0.1]),
                ],
            ),
            ConvexFn::new(
                4,
                vec![
                    quad(&[0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.5], &[1.0, 0.0, -2.0, 0.3]),
                    ConvexTerm::MaxCoord { weight: 2.0 },
                ],
            ),
        ];
        for f in &cases {
            let a = SubgradientMap::new(f).unwrap();
            for (lambda, w) in [
                (0.1, vec![1.0; f.dim]),
                (3.0, vec![-0.5; f.dim]),
                (1e4, vec![0.0; f.dim]),
            ] {
                let w = Vector::from_vec(w);
                let x = a.resolvent(lambda, &w).unwrap();
                // w − x ∈ λ A x
                let gap = a.inclusion_gap(&x, &((&w - &x) / lambda));
                assert!(gap * lambda <= 1e-9 * (1.0 + x.norm()), "{} gap {gap}", a.describe());
            }
        }
    }

    #[test]
    fn quadratic_plus_norm_zero_is_stationary() {
        let f = ConvexFn::new(
            2,
            vec![quad(&[2.0, 0.0, 0.0, 1.0], &[-3.0, 1.0]), ConvexTerm::Norm { weight: 0.5 }],
        );
        let a = SubgradientMap::new(&f).unwrap();
        let p = a.zero_set().point().unwrap().clone();
        assert!(a.inclusion_gap(&p, &Vector::zeros(2)) < 1e-12);
    }

    #[test]
    fn radial_only_with_large_offset_has_no_zero() {
        let f = ConvexFn::new(
            2,
            vec![
                ConvexTerm::Huber { weight: 1.0, delta: 1.0 },
                quad(&[0.0, 0.0, 0.0, 0.0], &[3.0, 4.0]),
            ],
        );
        let a = SubgradientMap::new(&f).unwrap();
        assert!(a.zero_set().is_empty_set());
        assert!((a.range_min_norm().unwrap() - vector(&[2.4, 3.2])).norm() < 1e-14);
    }
}
