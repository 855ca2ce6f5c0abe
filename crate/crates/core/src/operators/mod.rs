//! Full-domain monotone operators with a deterministic single-valued selection,
//! plus the analytic metadata (resolvents, zero sets, minimum-norm range
//! elements) that reference computations rely on.

mod affine;
mod combinators;
mod monotone_check;
mod subgradient;

use std::fmt;
use std::sync::Arc;

pub use affine::{affine_map, constant_map, identity_map, zero_map, AffineMap};
pub use combinators::{scale_map, shift_map, sum_map, FnMap, ScaledMap, ShiftedMap, SumMap};
pub use monotone_check::{check_monotone, MonotoneViolation, SampleRegion};
pub use subgradient::{subgradient_map, ConvexFn, ConvexTerm, SubgradientMap};

use crate::vector::Vector;

/// Shared handle to an operator.
pub type Op = Arc<dyn MonotoneMap>;

/// What is known about A⁻¹0.
#[derive(Debug, Clone, PartialEq)]
pub enum ZeroSet {
    /// No closed-form information.
    Unknown,
    /// A⁻¹0 is empty.
    Empty,
    /// A⁻¹0 = {p}.
    Unique(Vector),
    /// A⁻¹0 has more than one point (or uniqueness is not known); this is its
    /// element of minimum norm.
    MinNorm(Vector),
}

impl ZeroSet {
    pub fn point(&self) -> Option<&Vector> {
        match self {
            ZeroSet::Unique(p) | ZeroSet::MinNorm(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_empty_set(&self) -> bool {
        matches!(self, ZeroSet::Empty)
    }
}

/// A maximal monotone operator defined on all of R^dim, seen through one
/// deterministic selection `x ↦ y ∈ Ax`.
///
/// Only [`dim`](MonotoneMap::dim), [`eval_into`](MonotoneMap::eval_into) and
/// [`describe`](MonotoneMap::describe) are required. The remaining methods
/// expose closed-form structure; `None`/`Unknown` means "not available", never
/// "does not exist".
pub trait MonotoneMap: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes the selection at `x` into `out`. Both have length `dim()`.
    fn eval_into(&self, x: &Vector, out: &mut Vector);

    fn describe(&self) -> String;

    fn eval(&self, x: &Vector) -> Vector {
        let mut out = Vector::zeros(self.dim());
        self.eval_into(x, &mut out);
        out
    }

    /// dist(target, Ax) over the full (possibly set-valued) image.
    fn inclusion_gap(&self, x: &Vector, target: &Vector) -> f64 {
        (self.eval(x) - target).norm()
    }

    /// J_λ(w) = (I + λA)⁻¹ w when a closed form (or exact structured solve) exists.
    fn resolvent(&self, _lambda: f64, _w: &Vector) -> Option<Vector> {
        None
    }

    fn zero_set(&self) -> ZeroSet {
        ZeroSet::Unknown
    }

    /// a⁰: the minimum-norm element of the closure of R(A).
    fn range_min_norm(&self) -> Option<Vector> {
        None
    }

    /// An upper bound on sup{|η| : η ∈ Aξ, |ξ − center| ≤ radius}.
    fn sup_norm_bound(&self, _center: &Vector, _radius: f64) -> Option<f64> {
        None
    }

    /// `Some((m, b))` when A x = m·x + b.
    fn isotropic_affine(&self) -> Option<(f64, Vector)> {
        None
    }
}

impl fmt::Debug for dyn MonotoneMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MonotoneMap({})", self.describe())
    }
}

/// Closed forms for A x = m·x + b with m ≥ 0.
pub(crate) mod isotropic {
    use super::ZeroSet;
    use crate::vector::Vector;

    pub fn resolvent(m: f64, b: &Vector, lambda: f64, w: &Vector) -> Vector {
        (w - b * lambda) / (1.0 + lambda * m)
    }

    pub fn zero_set(m: f64, b: &Vector) -> ZeroSet {
        if m > 0.0 {
            ZeroSet::Unique(-b / m)
        } else if b.iter().all(|&c| c == 0.0) {
            ZeroSet::MinNorm(Vector::zeros(b.len()))
        } else {
            ZeroSet::Empty
        }
    }

    pub fn range_min_norm(m: f64, b: &Vector) -> Vector {
        if m > 0.0 {
            Vector::zeros(b.len())
        } else {
            b.clone()
        }
    }
}
