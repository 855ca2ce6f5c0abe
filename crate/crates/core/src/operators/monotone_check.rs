use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MonotoneMap;
use crate::vector::Vector;

/// Axis-aligned box `center ± half_width` from which sample pairs are drawn.
#[derive(Debug, Clone)]
pub struct SampleRegion {
    pub center: Vector,
    pub half_width: f64,
    pub count: usize,
}

impl SampleRegion {
    pub fn around_origin(dim: usize, half_width: f64, count: usize) -> Self {
        SampleRegion {
            center: Vector::zeros(dim),
            half_width,
            count,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MonotoneViolation {
    pub x1: Vector,
    pub x2: Vector,
    /// (y1 − y2, x1 − x2)
    pub inner: f64,
}

/// Samples `region.count` pairs and returns those with
/// (y1 − y2, x1 − x2) < −1e−9·(1 + |y1 − y2||x1 − x2|).
pub fn check_monotone(op: &dyn MonotoneMap, region: &SampleRegion, seed: u64) -> Vec<MonotoneViolation> {
    let d = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| {
        Vector::from_iterator(
            d,
            (0..d).map(|i| region.center[i] + region.half_width * rng.random_range(-1.0..=1.0)),
        )
    };
    let mut y1 = Vector::zeros(d);
    let mut y2 = Vector::zeros(d);
    let mut out = Vec::new();
    for k in 0..region.count {
        let x1 = draw(&mut rng);
        // every fourth pair also probes exact kinks (origin, coordinate ties)
        let x2 = match k % 4 {
            0 => Vector::zeros(d),
            1 => Vector::from_element(d, x1.max()),
            _ => draw(&mut rng),
        };
        op.eval_into(&x1, &mut y1);
        op.eval_into(&x2, &mut y2);
        let dy = &y1 - &y2;
        let dx = &x1 - &x2;
        let inner = dy.dot(&dx);
        if inner < -1e-9 * (1.0 + dy.norm() * dx.norm()) {
            out.push(MonotoneViolation { x1, x2, inner });
        }
    }
    out
}
