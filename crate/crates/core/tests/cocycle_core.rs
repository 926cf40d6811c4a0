use std::sync::Arc;

use livsic_core::base::*;
use livsic_core::cocycle::*;
use livsic_core::fiber::*;
use livsic_core::linalg::Mat;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bases() -> Vec<Arc<BaseSystem>> {
    vec![Arc::new(BaseSystem::cat_map()), Arc::new(BaseSystem::full_shift(2, 64).unwrap())]
}

fn random_family(rng: &mut ChaCha8Rng) -> CocycleFamily<f64> {
    let h = [rng.gen_range(-2..=2), rng.gen_range(0..=2)];
    match rng.gen_range(0..7) {
        0 => CocycleFamily::Rotation { offset: rng.gen(), amplitude: rng.gen_range(-0.2..0.2), harmonic: h },
        1 => CocycleFamily::Shear { a0: rng.gen_range(-0.5..0.5), amplitude: rng.gen_range(-0.3..0.3), harmonic: h },
        2 => CocycleFamily::Linear { matrix: [[2, 1], [1, 1]], amplitude: rng.gen_range(-0.2..0.2), harmonic: h },
        3 => CocycleFamily::Coboundary(TransferFamily::Shear { amplitude: rng.gen_range(-0.6..0.6), harmonic: h }),
        4 => CocycleFamily::Coboundary(TransferFamily::TorusShear { amplitude: rng.gen_range(-0.4..0.4), harmonic: h, k: [1, 1], j: 0 }),
        5 => CocycleFamily::Coboundary(TransferFamily::ShearRotation { amplitude: 0.4, rotation: 0.2, harmonic: h }),
        _ => CocycleFamily::Perturbed {
            inner: Box::new(CocycleFamily::Shear { a0: 0.3, amplitude: 0.0, harmonic: h }),
            epsilon: 0.05,
            harmonic: [1, 1],
        },
    }
}

fn random_cocycle(rng: &mut ChaCha8Rng) -> Cocycle<f64> {
    let b = bases()[rng.gen_range(0..2)].clone();
    Cocycle::new(b, random_family(rng)).unwrap()
}

fn random_skew(c: &Cocycle<f64>, rng: &mut ChaCha8Rng) -> SkewPoint<f64> {
    SkewPoint { base: c.base().random_point(rng), fiber: FiberPoint::new(c.dim(), [rng.gen(), rng.gen()]) }
}

fn hyperbolic(c: &Cocycle<f64>) -> bool {
    matches!(c.family(), CocycleFamily::Linear { .. })
}

fn grid(q: usize) -> usize {
    if q == 1 {
        32
    } else {
        16
    }
}

#[test]
fn cocycle_and_inverse_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..1000 {
        let c = random_cocycle(&mut rng);
        let x = c.base().random_point(&mut rng);
        // hyperbolic fibers leave the exact lift range near n + m = 38
        let top = if hyperbolic(&c) { 15 } else { 20 };
        let (n, m) = (rng.gen_range(0..=top), rng.gen_range(0..=top));
        let lhs = c.iterate(&x, n + m).unwrap();
        let rhs = c.iterate(&c.base().iterate(&x, m), n).unwrap().compose(&c.iterate(&x, m).unwrap());
        assert!(distance_c0(&lhs, &rhs, grid(c.dim())).unwrap() <= 1e-9);
        let fwd = c.iterate(&x, n).unwrap();
        let back = c.iterate(&c.base().iterate(&x, n), -n).unwrap();
        assert!(distance_c0(&back, &fwd.invert(), grid(c.dim())).unwrap() <= 1e-9);
        if !hyperbolic(&c) {
            // back∘fwd has condition number λ^2n for hyperbolic fibers
            assert!(distance_c0(&back.compose(&fwd), &FiberDiffeo::identity(c.dim()), grid(c.dim())).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn iterate_zero_and_cap() {
    let c = Cocycle::new(bases()[0].clone(), CocycleFamily::<f64>::Rotation { offset: 0.1, amplitude: 0.0, harmonic: [1, 0] }).unwrap().with_cap(10);
    let x = BasePoint::Torus(TorusPoint::from_f64([0.3, 0.4]));
    assert_eq!(c.iterate(&x, 0).unwrap().size(), 1);
    assert!(matches!(c.iterate(&x, 11), Err(CocycleError::CapExceeded { .. })));
}

#[test]
fn skew_step_matches_iterate() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..100 {
        let c = random_cocycle(&mut rng);
        let z = random_skew(&c, &mut rng);
        let w = c.skew_step(&z, 50).unwrap();
        assert_eq!(w.base, c.base().iterate(&z.base, 50));
        match c.iterate(&z.base, 50) {
            Ok(g) => assert!(w.fiber.dist(&g.eval(&z.fiber).unwrap()) <= 1e-9),
            Err(e) => assert!(hyperbolic(&c) && matches!(e, CocycleError::Numeric(_))),
        }
        let back = c.skew_step(&w, -50).unwrap();
        assert_eq!(back.base, z.base);
    }
}

#[test]
fn identity_cocycle_keeps_fiber() {
    let c = Cocycle::new(bases()[1].clone(), CocycleFamily::<f64>::Constant(FiberDiffeo::identity(1))).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let z = random_skew(&c, &mut rng);
    let t = c.derivative_cocycle(&z, 100, 10).unwrap();
    assert!(t.log_svals.iter().all(|l| l[0] == 0.0));
    assert_eq!(c.skew_step(&z, 100).unwrap().fiber, z.fiber);
}

#[test]
fn chain_rule_trace_vs_tree_derivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..200 {
        let c = random_cocycle(&mut rng);
        let z = random_skew(&c, &mut rng);
        let n = rng.gen_range(1..=30);
        let t = c.derivative_cocycle(&z, n, 10).unwrap();
        let tree = c.iterate(&z.base, n as i64).unwrap().deriv(&z.fiber).unwrap();
        let p = t.product();
        assert!((&p - &tree).max_abs() <= 1e-6 * tree.max_abs(), "{p:?} vs {tree:?}");
    }
}

#[test]
fn matrix_cocycle_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for _ in 0..1000 {
        let c = random_cocycle(&mut rng);
        let z = random_skew(&c, &mut rng);
        let (n, m) = (rng.gen_range(1..=15), rng.gen_range(1..=15));
        let whole = c.derivative_cocycle(&z, n + m, 10).unwrap().product();
        let first = c.derivative_cocycle(&z, m, 10).unwrap();
        let second = c.derivative_cocycle(&first.end, n, 10).unwrap().product();
        let composed = &second * &first.product();
        assert!((&whole - &composed).max_abs() <= 1e-8 * whole.max_abs());
    }
}

#[test]
fn refactor_interval_does_not_change_svals() {
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    for _ in 0..20 {
        let c = random_cocycle(&mut rng);
        let z = random_skew(&c, &mut rng);
        let a = c.derivative_cocycle(&z, 2000, 10).unwrap();
        let b = c.derivative_cocycle(&z, 2000, 1).unwrap();
        for (la, lb) in a.log_svals.iter().zip(&b.log_svals) {
            for (x, y) in la.iter().zip(lb) {
                // relative 1e-8 in σ is 1e-8 in log σ
                assert!((x - y).abs() <= 1e-8, "{x} vs {y}");
            }
        }
    }
}

#[test]
fn linear_cocycle_exponent_oracle() {
    // constant A = [[2,1],[1,1]]: eigenvalues (μ, 1/μ), μ = (3 + √5)/2
    let mu = (3.0 + 5f64.sqrt()) / 2.0;
    let c = Cocycle::new(bases()[0].clone(), CocycleFamily::<f64>::Linear { matrix: [[2, 1], [1, 1]], amplitude: 0.0, harmonic: [1, 0] }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    let z = random_skew(&c, &mut rng);
    let n = 100_000;
    let t = c.derivative_cocycle(&z, n, 10).unwrap();
    let l = &t.log_svals[n - 1];
    assert!((l[0] / n as f64 - mu.ln()).abs() < 1e-4);
    assert!((l[1] / n as f64 + mu.ln()).abs() < 1e-4);
    let sv = t.product_svals(5);
    let direct = {
        let m: Mat<f64> = Mat::from_f64_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let mut p = Mat::identity(2);
        for _ in 0..5 {
            p = &m * &p;
        }
        p.singular_values()
    };
    assert!((sv[0] - direct[0]).abs() < 1e-9 * direct[0]);
}

#[test]
fn poc_examples() {
    let b = bases()[0].clone();
    let id = Cocycle::new(b.clone(), CocycleFamily::<f64>::Constant(FiberDiffeo::identity(1))).unwrap();
    let p = &b.periodic_points(1, 10).unwrap()[0];
    let r = id.poc_residual(p).unwrap();
    assert_eq!((r.c0, r.c1), (0.0, 0.0));
    let shear = Cocycle::new(b.clone(), CocycleFamily::<f64>::Shear { a0: 0.5, amplitude: 0.0, harmonic: [1, 0] }).unwrap();
    let r = shear.poc_residual(p).unwrap();
    assert!((r.c0 - 0.5 / std::f64::consts::TAU).abs() < 1e-12);
}

#[test]
fn coboundaries_satisfy_poc() {
    let mut rng = ChaCha8Rng::seed_from_u64(38);
    let transfers: Vec<TransferFamily<f64>> = vec![
        TransferFamily::Constant(FiberDiffeo::circle_shear(0.4).unwrap()),
        TransferFamily::Rotation { amplitude: 0.3, harmonic: [1, 2] },
        TransferFamily::Shear { amplitude: 0.3, harmonic: [1, 0] },
        TransferFamily::ShearRotation { amplitude: 0.5, rotation: 0.25, harmonic: [2, 1] },
        TransferFamily::Translation2 { amplitude: [0.2, 0.1], harmonic: [1, 1] },
        TransferFamily::TorusShear { amplitude: 0.3, harmonic: [1, 0], k: [1, 1], j: 1 },
    ];
    for b in bases() {
        for u in &transfers {
            let c = make_coboundary(b.clone(), u.clone(), &mut rng).unwrap();
            let pmax = if matches!(*b, BaseSystem::Torus(_)) { 6 } else { 8 };
            for n in 1..=pmax {
                // n·period ≤ 200 compositions
                for orb in b.periodic_points(n, 1 << 12).unwrap() {
                    let r = c.poc_residual(&orb).unwrap();
                    assert!(r.c0 <= 1e-8 && r.c1 <= 1e-8, "{u:?} n = {n}: {r:?}");
                }
            }
        }
    }
}

#[test]
fn constant_transfer_gives_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(39);
    let c = make_coboundary(bases()[0].clone(), TransferFamily::Constant(FiberDiffeo::<f64>::circle_shear(0.7).unwrap()), &mut rng).unwrap();
    for _ in 0..20 {
        let x = c.base().random_point(&mut rng);
        assert!(distance_c0(&c.at(&x), &FiberDiffeo::identity(1), 64).unwrap() < 1e-12);
    }
    assert_eq!(c.holder().unwrap().k, 0.0);
}

#[test]
fn holder_fits() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let b = bases()[0].clone();
    let constant = Cocycle::new(b.clone(), CocycleFamily::<f64>::Constant(FiberDiffeo::rotation(0.2))).unwrap();
    let h = constant.estimate_holder(100, &mut rng).unwrap();
    assert!(h.degenerate && h.k == 0.0 && h.beta_fit.is_none());

    let rot = Cocycle::new(b.clone(), CocycleFamily::<f64>::Rotation { offset: 0.0, amplitude: 0.1, harmonic: [1, 0] }).unwrap();
    let h = rot.estimate_holder(400, &mut rng).unwrap();
    assert!((h.beta_fit.unwrap() - 1.0).abs() <= 0.1, "{h:?}");

    let cob = make_coboundary(b, TransferFamily::Shear { amplitude: 0.3, harmonic: [1, 1] }, &mut rng).unwrap();
    let hd = cob.holder().unwrap();
    assert!(hd.k.is_finite() && hd.beta >= 0.9, "{hd:?}");
    // the stored constant bounds fresh samples
    for _ in 0..200 {
        let x = cob.base().random_point(&mut rng);
        let x2 = cob.base().random_nearby(&x, 1e-3, &mut rng);
        let d = cob.base().dist(&x, &x2);
        let dd = distance(&cob.at(&x), &cob.at(&x2), 1.0, 64).unwrap().d_c1beta;
        assert!(dd <= 2.0 * hd.k * d.powf(hd.beta));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn skew_roundtrip(seed in any::<u64>(), n in 1i64..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_cocycle(&mut rng);
        prop_assume!(!hyperbolic(&c));
        let z = random_skew(&c, &mut rng);
        let w = c.skew_step(&c.skew_step(&z, n).unwrap(), -n).unwrap();
        prop_assert_eq!(&w.base, &z.base);
        prop_assert!(w.fiber.dist(&z.fiber) <= 1e-9);
    }
}
