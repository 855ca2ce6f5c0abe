//! Shipped fixtures: operators with known analytic structure, each with a
//! starting point. Used by the acceptance suite and by `regpath check all`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::operators::{
    affine_map, constant_map, identity_map, scale_map, shift_map, subgradient_map, sum_map, ConvexFn, ConvexTerm, Op,
};
use crate::vector::{vector, Vector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Affine,
    Quadratic,
    Subgradient,
    Constant,
    Composite,
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: &'static str,
    pub family: Family,
    pub op: Op,
    pub x0: Vector,
}

/// M = [[0, −1], [1, 0]], b = (1, 0). Zero at (0, 1); (Mx, x) ≡ 0.
pub fn skew_rotation() -> Op {
    affine_map(DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]), vector(&[1.0, 0.0])).expect("skew")
}

/// M = diag(1, 0), b = (−1, 0). Zero set {(1, t)}, minimum-norm zero (1, 0).
pub fn singular_affine() -> Op {
    affine_map(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), vector(&[-1.0, 0.0])).expect("singular")
}

/// Seeded monotone affine map in R^dim: M = SSᵀ/dim + K − Kᵀ.
pub fn random_affine(dim: usize, seed: u64) -> Op {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |n| DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let s = draw(dim);
    let k = draw(dim);
    let m = &s * s.transpose() / dim as f64 + &k - k.transpose();
    let b = Vector::from_iterator(dim, (0..dim).map(|i| ((i as f64) * 0.7).sin()));
    affine_map(m, b).expect("random affine")
}

fn tridiagonal(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| {
        if i == j {
            2.0 + i as f64 * 0.5
        } else if i.abs_diff(j) == 1 {
            -0.5
        } else {
            0.0
        }
    })
}

fn quadratic(matrix: DMatrix<f64>, linear: Vector) -> ConvexTerm {
    ConvexTerm::Quadratic { matrix, linear }
}

pub fn fixtures() -> Vec<Fixture> {
    let sub = |f: ConvexFn| subgradient_map(&f).expect("catalog functional");
    vec![
        Fixture {
            name: "identity-2d",
            family: Family::Affine,
            op: identity_map(2),
            x0: vector(&[3.0, 4.0]),
        },
        Fixture {
            name: "identity-offset-2d",
            family: Family::Affine,
            op: affine_map(DMatrix::identity(2, 2), vector(&[1.0, 0.0])).unwrap(),
            x0: vector(&[2.0, -1.0]),
        },
        Fixture {
            name: "skew-rotation-2d",
            family: Family::Affine,
            op: skew_rotation(),
            x0: vector(&[0.0, 0.0]),
        },
        Fixture {
            name: "singular-affine-2d",
            family: Family::Affine,
            op: singular_affine(),
            x0: vector(&[5.0, 5.0]),
        },
        Fixture {
            name: "affine-10d",
            family: Family::Affine,
            op: random_affine(10, 11),
            x0: Vector::from_element(10, 1.0),
        },
        Fixture {
            name: "half-norm-squared-3d",
            family: Family::Quadratic,
            op: sub(ConvexFn::new(3, vec![quadratic(DMatrix::identity(3, 3), Vector::zeros(3))])),
            x0: vector(&[1.0, 2.0, 3.0]),
        },
        Fixture {
            name: "quadratic-5d",
            family: Family::Quadratic,
            op: sub(ConvexFn::new(5, vec![quadratic(tridiagonal(5), vector(&[1.0, -2.0, 0.5, 0.0, 1.5]))])),
            x0: Vector::zeros(5),
        },
        Fixture {
            name: "abs-shifted-1d",
            family: Family::Subgradient,
            op: sub(ConvexFn::new(
                1,
                vec![quadratic(DMatrix::identity(1, 1), vector(&[-1.0])), ConvexTerm::Norm { weight: 1.0 }],
            )),
            x0: vector(&[3.0]),
        },
        Fixture {
            name: "norm-3d",
            family: Family::Subgradient,
            op: sub(ConvexFn::new(3, vec![ConvexTerm::Norm { weight: 1.0 }])),
            x0: vector(&[1.0, 1.0, 1.0]),
        },
        Fixture {
            name: "quadratic-norm-4d",
            family: Family::Subgradient,
            op: sub(ConvexFn::new(
                4,
                vec![
                    quadratic(tridiagonal(4), vector(&[2.0, -1.0, 0.0, 1.0])),
                    ConvexTerm::Norm { weight: 0.5 },
                ],
            )),
            x0: vector(&[1.0, -1.0, 1.0, -1.0]),
        },
        Fixture {
            name: "huber-10d",
            family: Family::Subgradient,
            op: sub(ConvexFn::new(
                10,
                vec![
                    ConvexTerm::Huber { weight: 1.0, delta: 0.5 },
                    quadratic(
                        DMatrix::zeros(10, 10),
                        Vector::from_iterator(10, (0..10).map(|i| if i % 2 == 0 { 0.2 } else { -0.1 })),
                    ),
                ],
            )),
            x0: Vector::from_element(10, 2.0),
        },
        Fixture {
            name: "max-coords-3d",
            family: Family::Subgradient,
            op: sub(ConvexFn::new(3, vec![ConvexTerm::MaxCoord { weight: 1.5 }])),
            x0: vector(&[1.0, 0.0, -1.0]),
        },
        Fixture {
            name: "quadratic-max-4d",
            family: Family::Subgradient,
            op: sub(ConvexFn::new(
                4,
                vec![
                    quadratic(DMatrix::identity(4, 4) * 0.5, vector(&[1.0, 0.0, -2.0, 0.3])),
                    ConvexTerm::MaxCoord { weight: 2.0 },
                ],
            )),
            x0: vector(&[0.5, 0.5, 0.5, 0.5]),
        },
        Fixture {
            name: "constant-1d",
            family: Family::Constant,
            op: constant_map(vector(&[1.0])).unwrap(),
            x0: vector(&[0.0]),
        },
        Fixture {
            name: "constant-2d",
            family: Family::Constant,
            op: constant_map(vector(&[3.0, 4.0])).unwrap(),
            x0: vector(&[1.0, 1.0]),
        },
        Fixture {
            name: "identity-plus-constant-1d",
            family: Family::Composite,
            op: sum_map(identity_map(1), constant_map(vector(&[1.0])).unwrap()).unwrap(),
            x0: vector(&[4.0]),
        },
        Fixture {
            name: "scaled-constant-2d",
            family: Family::Composite,
            op: scale_map(constant_map(vector(&[1.0, -1.0])).unwrap(), 2.0).unwrap(),
            x0: vector(&[0.0, 0.0]),
        },
        Fixture {
            name: "shifted-skew-2d",
            family: Family::Composite,
            op: shift_map(skew_rotation(), vector(&[1.0, 1.0])).unwrap(),
            x0: vector(&[-1.0, 2.0]),
        },
    ]
}

pub fn fixture(name: &str) -> Option<Fixture> {
    fixtures().into_iter().find(|f| f.name == name)
}
