//! Coordinate vectors and the few helpers the rest of the crate shares.

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Point of R^d.
pub type Vector = DVector<f64>;

pub fn vector(coords: &[f64]) -> Vector {
    DVector::from_column_slice(coords)
}

pub fn zeros(dim: usize) -> Vector {
    DVector::zeros(dim)
}

pub fn is_finite(v: &Vector) -> bool {
    v.iter().all(|c| c.is_finite())
}

pub fn ensure_finite(v: &Vector, what: &'static str) -> Result<()> {
    if is_finite(v) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

pub fn ensure_dim(v: &Vector, expected: usize) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected,
            got: v.len(),
        })
    }
}

pub fn dist(a: &Vector, b: &Vector) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}
