use regpath::catalog::{fixture, fixtures, Family};
use regpath::operators::{check_monotone, SampleRegion};
use regpath::oracle::{self, Bounds};
use regpath::{solve_observed, Event, Schedule, SolveConfig, Vector, ZeroSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn catalog_covers_families_and_dimensions() {
    let all = fixtures();
    assert!(all.len() >= 8);
    for fam in [Family::Affine, Family::Quadratic, Family::Subgradient, Family::Constant, Family::Composite] {
        assert!(all.iter().any(|f| f.family == fam), "{fam:?} missing");
    }
    let dims: Vec<usize> = all.iter().map(|f| f.op.dim()).collect();
    assert!(dims.contains(&1) && dims.contains(&10));
    assert!(dims.iter().all(|&d| (1..=10).contains(&d)));
    for f in &all {
        assert_eq!(f.x0.len(), f.op.dim(), "{}", f.name);
    }
    let mut names: Vec<_> = all.iter().map(|f| f.name).collect();
    names.sort();
    names.dedup();
    assert_eq!(names.len(), all.len());
    assert!(fixture("skew-rotation-2d").is_some());
    assert!(fixture("nope").is_none());
}

#[test]
fn every_fixture_is_monotone_on_ten_thousand_pairs() {
    for f in fixtures() {
        let d = f.op.dim();
        let region = SampleRegion::around_origin(d, 10.0, 10_000);
        let bad = check_monotone(f.op.as_ref(), &region, 7);
        assert!(bad.is_empty(), "{}: {:?}", f.name, bad.first());
    }
}

#[test]
fn resolvent_identity_holds_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for f in fixtures() {
        let d = f.op.dim();
        for _ in 0..1_000 {
            let lambda = 10f64.powf(rng.random_range(-3.0..3.0));
            let w = Vector::from_fn(d, |_, _| rng.random_range(-10.0..10.0));
            let x = oracle::resolvent(f.op.as_ref(), lambda, &w).unwrap();
            let y = (&w - &x) / lambda;
            let gap = f.op.inclusion_gap(&x, &y);
            assert!(lambda * gap <= 1e-8 * (1.0 + x.norm() + w.norm()), "{} lambda={lambda} gap={gap}", f.name);
        }
    }
}

#[test]
fn bruteforce_agrees_with_zero_metadata_in_low_dimension() {
    let mut checked = 0;
    for f in fixtures() {
        if f.op.dim() > 3 {
            continue;
        }
        match f.op.zero_set() {
            ZeroSet::Unique(p) | ZeroSet::MinNorm(p) => {
                let half = 2.0 * (p.norm() + 1.0);
                let got = oracle::min_norm_zero_bruteforce(f.op.as_ref(), &Bounds::cube(f.op.dim(), half), 41)
                    .unwrap_or_else(|| panic!("{}: no zero found", f.name));
                assert!((&got - &p).norm() < 1e-3, "{}: {got} vs {p}", f.name);
                checked += 1;
            }
            ZeroSet::Empty => {
                let got = oracle::min_norm_zero_bruteforce(f.op.as_ref(), &Bounds::cube(f.op.dim(), 5.0), 21);
                assert!(got.is_none(), "{}: spurious zero {got:?}", f.name);
            }
            ZeroSet::Unknown => {}
        }
    }
    assert!(checked >= 5);
}

#[test]
fn certificate_holds_along_every_fixture_run() {
    let schedule = Schedule::sqrt();
    let cfg = SolveConfig { max_evals: 3_000, ..Default::default() };
    for f in fixtures() {
        let mut cache: Option<(u64, Vector)> = None;
        let mut worst = f64::NEG_INFINITY;
        let mut rows = 0;
        solve_observed(f.op.as_ref(), &f.x0, &schedule, &cfg, |ev| {
            if let Event::Step(s) = ev {
                if cache.as_ref().map(|c| c.0) != Some(s.mu) {
                    let p = oracle::p_mu(f.op.as_ref(), &schedule, s.mu).unwrap().p;
                    cache = Some((s.mu, p));
                }
                let p = &cache.as_ref().unwrap().1;
                let excess = (s.x - p).norm() - s.r;
                worst = worst.max(excess / (1.0 + s.r));
                rows += 1;
            }
        })
        .unwrap();
        assert!(rows > 0, "{}", f.name);
        assert!(worst <= 1e-9, "{}: certificate exceeded by {worst:e}", f.name);
    }
}
