use std::sync::Arc;

use livsic_core::base::{BasePoint, BaseSystem, TorusPoint};
use livsic_core::cocycle::{Cocycle, CocycleFamily, TransferFamily};
use livsic_core::fiber::{grid_points, FiberDiffeo, FiberPoint};
use livsic_core::livsic::{
    classify, periodic_exponents, solve, verify_at, verify_coboundary, LivsicError, SampledMap, SolveOptions, Tolerances,
    TransferFunction, Verdict,
};
use livsic_core::rng::stream;

fn cat() -> Arc<BaseSystem> {
    Arc::new(BaseSystem::cat_map())
}

fn coboundary(u: TransferFamily<f64>) -> Cocycle<f64> {
    Cocycle::new(cat(), CocycleFamily::Coboundary(u)).unwrap()
}

fn opts(density: f64) -> SolveOptions {
    SolveOptions { density, ..Default::default() }
}

fn fast_tolerances() -> Tolerances {
    Tolerances { p_max: Some(5), exponent_starts: 3, test_points: 30, repetitions: 200, ..Default::default() }
}

/// `sup d(u(x)y, u*(x)∘u*(x₀)⁻¹ y)` over random base points and an
/// off-node fiber grid.
fn round_trip(u: &TransferFunction<f64>, truth: &TransferFamily<f64>, points: usize, seed: u64) -> f64 {
    let base = u.cocycle().base();
    let q = u.cocycle().dim();
    let g0 = truth.at(base.features(u.anchor())).invert();
    let mut rng = stream(seed, 0);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x = base.random_point(&mut rng);
        let t = truth.at(base.features(&x)).compose(&g0);
        let ux = u.at(&x);
        for p in grid_points::<f64>(q, if q == 1 { 61 } else { 13 }) {
            let a = FiberPoint::new(q, t.eval_lift(p.c).unwrap());
            worst = worst.max(a.dist(&ux.eval(&p).unwrap()));
            let b = FiberPoint::new(q, t.invert().eval_lift(p.c).unwrap());
            worst = worst.max(b.dist(&ux.preimage(&p).unwrap()));
        }
    }
    worst
}

#[test]
fn identity_cocycle_has_identity_transfer() {
    let c = Cocycle::new(cat(), CocycleFamily::Constant(FiberDiffeo::<f64>::identity(1))).unwrap();
    let u = TransferFunction::build(&c, &opts(0.1)).unwrap();
    for i in [0, 1, 100, u.table_len() - 1] {
        let e = u.entry(i);
        for p in grid_points::<f64>(1, 37) {
            assert_eq!(e.eval(&p).unwrap(), p);
        }
    }
    let r = verify_coboundary(&u, &c, 20, &mut stream(1, 0)).unwrap();
    assert_eq!((r.c0, r.c1), (0.0, 0.0));
}

#[test]
fn table_entries_follow_the_cocycle() {
    let c = coboundary(TransferFamily::Shear { amplitude: 0.3, harmonic: [1, 1] });
    let u = TransferFunction::build(&c, &opts(0.1)).unwrap();
    let stride = u.options().stride;
    let nodes = SampledMap::<f64>::nodes(1, u.options().grid_for(1));
    for i in [0, 5, stride - 1, stride, 3 * stride - 1, u.table_len() - 2] {
        let a = c.at_with_next(&u.table()[i], &u.table()[i + 1]);
        let (ei, ej) = (u.entry(i), u.entry(i + 1));
        for y in &nodes {
            let lhs = FiberPoint::new(1, ej.eval_lift(*y).unwrap());
            let rhs = FiberPoint::new(1, a.eval_lift(ei.eval_lift(*y).unwrap()).unwrap());
            assert!(lhs.dist(&rhs) < 1e-9, "entry {i}");
        }
    }
    assert_eq!(u.anchor(), &u.table()[0]);
}

#[test]
fn rotation_transfer_matches_closed_form() {
    let truth = TransferFamily::Rotation { amplitude: 0.2, harmonic: [1, 0] };
    let c = coboundary(truth.clone());
    let u = TransferFunction::build(&c, &opts(0.02)).unwrap();
    let err = round_trip(&u, &truth, 100, 3);
    assert!(err <= 1e-4, "{err:e}");
    assert!(u.holder_estimate.beta > 0.9 && !u.holder_estimate.degenerate);
}

#[test]
fn round_trip_for_every_transfer_family() {
    let families = [
        TransferFamily::Constant(FiberDiffeo::circle_shear(0.4).unwrap()),
        TransferFamily::Rotation { amplitude: 0.3, harmonic: [0, 1] },
        TransferFamily::Shear { amplitude: 0.3, harmonic: [1, 0] },
        TransferFamily::ShearRotation { amplitude: 0.3, rotation: 0.2, harmonic: [1, 1] },
        TransferFamily::Translation2 { amplitude: [0.2, 0.1], harmonic: [1, 0] },
        TransferFamily::TorusShear { amplitude: 0.3, harmonic: [1, 0], k: [1, 1], j: 0 },
    ];
    for (i, truth) in families.into_iter().enumerate() {
        let c = coboundary(truth.clone());
        let u = TransferFunction::build(&c, &opts(0.02)).unwrap();
        let v = verify_coboundary(&u, &c, 100, &mut stream(11, i as u64)).unwrap();
        assert!(v.c0 <= 1e-4, "family {i}: verify {v:?}");
        if matches!(truth, TransferFamily::Shear { .. }) {
            assert!(v.c0 <= 1e-6, "shear verify {:e}", v.c0);
        }
        let err = round_trip(&u, &truth, 30, i as u64);
        assert!(err <= 1e-3, "family {i}: round trip {err:e}");
    }
}

#[test]
fn pure_nearest_neighbour_error_follows_the_gap() {
    let truth = TransferFamily::Shear { amplitude: 0.3, harmonic: [1, 0] };
    let c = coboundary(truth.clone());
    let mut r = Vec::new();
    for density in [0.2, 0.05] {
        let u = TransferFunction::build(&c, &SolveOptions { density, holonomy_depth: 0, ..Default::default() }).unwrap();
        let v = verify_coboundary(&u, &c, 200, &mut stream(5, 0)).unwrap();
        assert!(v.c0 <= u.holder_estimate.k * (2.0 * density).powf(u.holder_estimate.beta) * 4.0, "{v:?}");
        r.push(v.c0);
    }
    assert!(r[1] < r[0] / 2.0, "{r:?}");
}

#[test]
fn corrupted_entry_is_detected() {
    let c = coboundary(TransferFamily::Shear { amplitude: 0.3, harmonic: [1, 0] });
    let mut u = TransferFunction::build(&c, &opts(0.05)).unwrap();
    let clean = verify_at(&u, &c, &u.table()[190..200].to_vec()).unwrap();
    assert!(clean.c0 < 1e-8);
    let first = u.perturb_samples(3, &FiberDiffeo::rotation(0.1)).unwrap();
    let last = first + u.options().stride - 1;
    let near = verify_at(&u, &c, &[u.table()[last].clone()]).unwrap();
    assert!(near.c0 >= 0.05, "{near:?}");
    let before = verify_at(&u, &c, &[u.table()[first - 1].clone()]).unwrap();
    assert!(before.c0 >= 0.05);
    let far = verify_at(&u, &c, &u.table()[1000..1010].to_vec()).unwrap();
    assert!(far.c0 < 1e-8);
}

#[test]
fn gauge_covariance() {
    for truth in [
        TransferFamily::ShearRotation { amplitude: 0.3, rotation: 0.2, harmonic: [1, 1] },
        TransferFamily::TorusShear { amplitude: 0.2, harmonic: [0, 1], k: [1, 0], j: 1 },
    ] {
        let c = coboundary(truth);
        let q = c.dim();
        let u = TransferFunction::build(&c, &opts(0.1)).unwrap();
        let mut rng = stream(9, 0);
        let pts: Vec<BasePoint> = (0..20).map(|_| c.base().random_point(&mut rng)).collect();
        let g = if q == 1 { FiberDiffeo::circle_shear(0.5).unwrap() } else { FiberDiffeo::shear(2, 0.4, [1, 1], 0).unwrap() };
        let a = verify_at(&u, &c, &pts).unwrap();
        let b = verify_at(&u.clone().with_gauge(g), &c, &pts).unwrap();
        assert!((a.c0 - b.c0).abs() <= 1e-10, "{a:?} {b:?}");
        assert!((a.c1 - b.c1).abs() <= 1e-10 * (1.0 + a.c1), "{a:?} {b:?}");
    }
}

#[test]
fn periodic_exponent_examples() {
    let base = cat();
    let fixed = base.periodic_points(1, 10).unwrap().remove(0);
    assert_eq!(fixed.point, BasePoint::Torus(TorusPoint::from_f64([0.0, 0.0])));

    let id = Cocycle::new(base.clone(), CocycleFamily::Constant(FiberDiffeo::<f64>::identity(2))).unwrap();
    for e in periodic_exponents(&id, &fixed, 3, 100).unwrap() {
        assert!(e.exponents.iter().all(|v| *v == 0.0));
    }

    let shear = Cocycle::new(base.clone(), CocycleFamily::Constant(FiberDiffeo::circle_shear(0.5).unwrap())).unwrap();
    let ex = periodic_exponents(&shear, &fixed, 4, 1000).unwrap();
    let half = ex.iter().find(|e| e.fixed && (e.fiber_point[0] - 0.5).abs() < 1e-12).expect("fixed point at 1/2");
    assert!((half.exponents[0] - 0.5f64.ln()).abs() < 1e-3);
    let zero = ex.iter().find(|e| e.fixed && e.fiber_point[0].abs() < 1e-12).expect("fixed point at 0");
    assert!((zero.exponents[0] - 1.5f64.ln()).abs() < 1e-12);
    for e in ex.iter().filter(|e| !e.fixed) {
        assert!((e.exponents[0] - 0.5f64.ln()).abs() < 1e-2, "{e:?}");
    }

    let cob = coboundary(TransferFamily::ShearRotation { amplitude: 0.4, rotation: 0.3, harmonic: [1, 1] });
    for n in 1..=6 {
        for p in base.primitive_orbits(n, 10_000).unwrap() {
            for e in periodic_exponents(&cob, &p, 2, 50).unwrap() {
                assert!(e.exponents.iter().all(|v| v.abs() <= 1e-8), "period {n}: {e:?}");
            }
        }
    }
}

#[test]
fn classify_examples() {
    let base = cat();
    let tol = fast_tolerances();
    let mut rng = stream(2, 0);

    let id = Cocycle::new(base.clone(), CocycleFamily::Constant(FiberDiffeo::<f64>::identity(1))).unwrap();
    let r = classify(&id, &tol, &opts(0.1), &mut rng).unwrap();
    assert!(r.is_coboundary() && !r.report.marginal);
    assert_eq!(r.report.residuals.verification.as_ref().unwrap().c0, 0.0);

    let shear = Cocycle::new(base.clone(), CocycleFamily::Constant(FiberDiffeo::circle_shear(0.5).unwrap())).unwrap();
    let r = classify(&shear, &tol, &opts(0.1), &mut rng).unwrap();
    let Verdict::Obstruction(w) = &r.verdict else { panic!("constant shear is not a coboundary") };
    assert!(!r.report.marginal);
    let at_origin = r.report.witnesses.iter().find(|w| w.period == 1).expect("fixed point witness");
    assert_eq!(at_origin.point, [0.0, 0.0]);
    assert!((at_origin.poc_c0 - 0.5 / std::f64::consts::TAU).abs() < 1e-6);
    let e = at_origin.periodic_exponents.iter().find(|e| e.fixed && (e.fiber_point[0] - 0.5).abs() < 1e-9).unwrap();
    assert!((e.exponents[0] + 0.6931).abs() < 1e-3);
    assert!(w.score > tol.margin);

    let rot = Cocycle::new(base.clone(), CocycleFamily::Constant(FiberDiffeo::rotation(0.1))).unwrap();
    let r = classify(&rot, &tol, &opts(0.1), &mut rng).unwrap();
    let Verdict::Obstruction(w) = &r.verdict else { panic!("constant rotation is not a coboundary") };
    assert!(w.poc_c1 > tol.poc && w.max_exponent <= 1e-12);
    assert!(r.report.residuals.max_fibered_exponent <= 1e-12 && r.report.residuals.max_periodic_exponent <= 1e-12);

    let json = serde_json::to_value(&r.report).unwrap();
    for key in ["verdict", "witnesses", "tolerances", "residuals", "table_length", "density"] {
        assert!(json.get(key).is_some(), "{key}");
    }
    assert_eq!(json["verdict"], "obstruction");
}

#[test]
fn verdicts_are_stable_across_seeds() {
    let base = cat();
    let fam = |f: CocycleFamily<f64>| Cocycle::new(base.clone(), f).unwrap();
    let cases = [
        (fam(CocycleFamily::Constant(FiberDiffeo::<f64>::identity(2))), true),
        (fam(CocycleFamily::Coboundary(TransferFamily::Rotation { amplitude: 0.2, harmonic: [1, 0] })), true),
        (fam(CocycleFamily::Coboundary(TransferFamily::Shear { amplitude: 0.3, harmonic: [1, 1] })), true),
        (fam(CocycleFamily::Coboundary(TransferFamily::Translation2 { amplitude: [0.2, 0.1], harmonic: [1, 0] })), true),
        (fam(CocycleFamily::Coboundary(TransferFamily::TorusShear { amplitude: 0.2, harmonic: [1, 0], k: [1, 1], j: 0 })), true),
        (fam(CocycleFamily::Constant(FiberDiffeo::circle_shear(0.5).unwrap())), false),
        (fam(CocycleFamily::Rotation { offset: 0.1, amplitude: 0.0, harmonic: [1, 0] }), false),
        (fam(CocycleFamily::Shear { a0: 0.2, amplitude: 0.1, harmonic: [1, 0] }), false),
        (fam(CocycleFamily::Linear { matrix: [[2, 1], [1, 1]], amplitude: 0.1, harmonic: [1, 0] }), false),
        (
            fam(CocycleFamily::Perturbed {
                inner: Box::new(CocycleFamily::Coboundary(TransferFamily::Shear { amplitude: 0.3, harmonic: [1, 0] })),
                epsilon: 0.05,
                harmonic: [0, 1],
            }),
            false,
        ),
    ];
    let tol = Tolerances { p_max: Some(4), exponent_starts: 2, test_points: 10, repetitions: 100, ..Default::default() };
    for (k, (c, expect)) in cases.iter().enumerate() {
        for seed in 0..10 {
            let r = classify(c, &tol, &opts(0.1), &mut stream(seed, k as u64)).unwrap();
            assert_eq!(r.is_coboundary(), *expect, "case {k}, seed {seed}: {:?}", r.report);
        }
    }
}

#[test]
fn witnesses_replay_exactly() {
    let base = cat();
    let tol = fast_tolerances();
    for f in [
        CocycleFamily::Shear { a0: 0.3, amplitude: 0.2, harmonic: [1, 1] },
        CocycleFamily::Rotation { offset: 0.05, amplitude: 0.1, harmonic: [1, 0] },
    ] {
        let c = Cocycle::new(base.clone(), f).unwrap();
        let r = classify(&c, &tol, &opts(0.1), &mut stream(4, 0)).unwrap();
        assert!(!r.report.witnesses.is_empty());
        for w in &r.report.witnesses {
            let again = w.replay(&c, &tol).unwrap();
            assert!((again.poc_c1 - w.poc_c1).abs() <= 1e-10 && (again.poc_c0 - w.poc_c0).abs() <= 1e-10);
            assert!((again.max_exponent - w.max_exponent).abs() <= 1e-10);
            assert!(w.poc_c1 > tol.poc || w.max_exponent > tol.exponent);
        }
    }
}

#[test]
fn solve_checks_its_preconditions() {
    let base = cat();
    let tol = fast_tolerances();
    let shear = Cocycle::new(base.clone(), CocycleFamily::Constant(FiberDiffeo::circle_shear(0.5).unwrap())).unwrap();
    match solve(&shear, &tol, &opts(0.1), &mut stream(1, 0)) {
        Err(LivsicError::PocViolated(w)) => assert!(w.poc_c1 > tol.poc),
        other => panic!("expected a POC violation, got {:?}", other.map(|u| u.table_len())),
    }
    let cob = coboundary(TransferFamily::Shear { amplitude: 0.3, harmonic: [1, 0] });
    let u = solve(&cob, &tol, &opts(0.1), &mut stream(1, 0)).unwrap();
    assert!(verify_coboundary(&u, &cob, 20, &mut stream(1, 1)).unwrap().c0 < 1e-6);
    let sparse = SolveOptions { density: 1e-3, max_table: 1000, ..Default::default() };
    assert!(matches!(TransferFunction::build(&cob, &sparse), Err(LivsicError::Base(_))));
}

#[test]
fn transfer_over_the_full_shift() {
    let base = Arc::new(BaseSystem::full_shift(2, 64).unwrap());
    let truth = TransferFamily::Shear { amplitude: 0.3, harmonic: [1, 1] };
    let c = Cocycle::new(base, CocycleFamily::Coboundary(truth.clone())).unwrap();
    let u = TransferFunction::build(&c, &opts(0.05)).unwrap();
    let v = verify_coboundary(&u, &c, 50, &mut stream(8, 0)).unwrap();
    assert!(v.c0 <= 1e-4, "{v:?}");
    assert!(round_trip(&u, &truth, 20, 1) <= 1e-3);
}
