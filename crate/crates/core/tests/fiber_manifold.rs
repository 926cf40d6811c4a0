use livsic_core::fiber::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_generator(q: usize, rng: &mut ChaCha8Rng) -> FiberDiffeo<f64> {
    let pick = rng.gen_range(0..if q == 1 { 2 } else { 3 });
    match (q, pick) {
        (1, 0) => FiberDiffeo::rotation(rng.gen_range(-0.5..0.5)),
        (1, _) => FiberDiffeo::circle_shear(rng.gen_range(-0.8..0.8)).unwrap(),
        (_, 0) => FiberDiffeo::translation([rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)]),
        (_, 1) => {
            let j = rng.gen_range(0..2);
            let mut k: [i64; 2] = [rng.gen_range(-2..=2), rng.gen_range(-2..=2)];
            if k == [0, 0] {
                k = [1, 1];
            }
            let bound = 0.9 / (k[j].abs().max(1) as f64);
            FiberDiffeo::shear(2, rng.gen_range(-bound..bound), k, j).unwrap()
        }
        _ => {
            let ms = [[[2, 1], [1, 1]], [[1, 1], [0, 1]], [[1, 0], [-1, 1]], [[0, -1], [1, 0]]];
            FiberDiffeo::linear(ms[rng.gen_range(0..ms.len())]).unwrap()
        }
    }
}

fn random_diffeo(q: usize, rng: &mut ChaCha8Rng) -> FiberDiffeo<f64> {
    let mut g = FiberDiffeo::identity(q);
    for _ in 0..rng.gen_range(1..=3) {
        let h = random_generator(q, rng);
        g = if rng.gen_bool(0.2) { g.compose(&h.invert()) } else { g.compose(&h) };
    }
    g
}

fn random_point(q: usize, rng: &mut ChaCha8Rng) -> FiberPoint<f64> {
    FiberPoint::new(q, [rng.gen(), rng.gen()])
}

#[test]
fn rotations_compose_on_grid() {
    let (a, b) = (0.37, 0.81);
    let g = FiberDiffeo::rotation(a).compose(&FiberDiffeo::rotation(b));
    let r = FiberDiffeo::rotation((a + b) % 1.0);
    for i in 0..100 {
        let y = FiberPoint::circle(i as f64 / 100.0);
        assert!(g.eval(&y).unwrap().dist(&r.eval(&y).unwrap()) < 1e-15);
    }
}

#[test]
fn compose_with_inverse_is_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for q in [1, 2] {
        for _ in 0..50 {
            let g = random_diffeo(q, &mut rng);
            let id = FiberDiffeo::identity(q);
            assert!(distance_c0(&g.compose(&g.invert()), &id, 64).unwrap() <= 1e-10);
            assert!(distance_c0(&g.invert().compose(&g), &id, 64).unwrap() <= 1e-10);
            assert!(distance_c0(&g.compose(&g.formal_inverse()), &id, 32).unwrap() <= 1e-10);
        }
    }
}

#[test]
fn chain_rule_against_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let h_step = 1e-6;
    for q in [1, 2] {
        for _ in 0..200 {
            let g = random_diffeo(q, &mut rng);
            let h = random_diffeo(q, &mut rng);
            let gh = g.compose(&h);
            let y = random_point(q, &mut rng);
            let jac = gh.deriv(&y).unwrap();
            let hy = h.eval(&y).unwrap();
            let prod = &g.deriv(&hy).unwrap() * &h.deriv(&y).unwrap();
            for c in 0..q {
                let mut yp = y.c;
                let mut ym = y.c;
                yp[c] += h_step;
                ym[c] -= h_step;
                let fp = gh.eval_lift(yp).unwrap();
                let fm = gh.eval_lift(ym).unwrap();
                for r in 0..q {
                    let fd = (fp[r] - fm[r]) / (2.0 * h_step);
                    let scale = jac.max_abs().max(1.0);
                    assert!((fd - jac[(r, c)]).abs() / scale <= 1e-5, "fd {fd} vs {}", jac[(r, c)]);
                    assert!((prod[(r, c)] - jac[(r, c)]).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}

#[test]
fn shear_distance_matches_dense_grid() {
    let g = FiberDiffeo::circle_shear(0.2).unwrap();
    let id = FiberDiffeo::identity(1);
    for beta in [0.5, 1.0] {
        let coarse = distance(&g, &id, beta, 256).unwrap();
        let dense = distance(&g, &id, beta, 4096).unwrap();
        assert!((coarse.d_c1beta - dense.d_c1beta).abs() <= 0.02 * dense.d_c1beta);
        // closed forms for the C¹ part
        let c1 = 0.2 / std::f64::consts::TAU + 0.2 + 0.2 / 0.8;
        assert!((dense.d_c1 - c1).abs() < 1e-6);
        assert!(coarse.d_c0 <= coarse.d_c1 && coarse.d_c1 <= coarse.d_c1beta);
    }
}

#[test]
fn jacobian_positive_on_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for q in [1, 2] {
        for _ in 0..100 {
            let g = random_diffeo(q, &mut rng);
            assert!(g.min_jacobian_det(if q == 1 { 512 } else { 48 }).unwrap() > 0.0);
        }
    }
}

#[test]
fn circle_lift_monotone_and_degree_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for _ in 0..100 {
        let g = random_diffeo(1, &mut rng);
        let mut prev = g.eval_lift([-0.5, 0.0]).unwrap()[0];
        for i in 1..=400 {
            let x = -0.5 + i as f64 / 400.0;
            let v = g.eval_lift([x, 0.0]).unwrap()[0];
            assert!(v > prev);
            prev = v;
            let shifted = g.eval_lift([x + 1.0, 0.0]).unwrap()[0];
            assert!((shifted - v - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn f32_tree_matches_f64() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    for q in [1, 2] {
        let g = random_diffeo(q, &mut rng);
        let g32: FiberDiffeo<f32> = g.cast();
        for _ in 0..100 {
            let y = random_point(q, &mut rng);
            let a = g.eval(&y).unwrap();
            let b = g32.eval(&FiberPoint::new(q, [y.c[0] as f32, y.c[1] as f32])).unwrap();
            let d = FiberPoint::new(q, [b.c[0] as f64, b.c[1] as f64]).dist(&a);
            assert!(d < 1e-4, "{d}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn group_laws(seed in any::<u64>(), q in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f, g, h) = (random_diffeo(q, &mut rng), random_diffeo(q, &mut rng), random_diffeo(q, &mut rng));
        let id = FiberDiffeo::identity(q);
        let left = f.compose(&g).compose(&h);
        let right = f.compose(&g.compose(&h));
        prop_assert!(distance_c0(&left, &right, 32).unwrap() <= 1e-10);
        prop_assert!(distance_c0(&f.compose(&id), &f, 32).unwrap() <= 1e-10);
        prop_assert!(distance_c0(&id.compose(&f), &f, 32).unwrap() <= 1e-10);
        // compose is extensional: bit-exact on lifts
        let y = random_point(q, &mut rng);
        let a = f.compose(&g).eval_lift(y.c).unwrap();
        let b = f.eval_lift(g.eval_lift(y.c).unwrap()).unwrap();
        prop_assert_eq!(a, b);
        let a = f.compose(&g).eval(&y).unwrap();
        let b = f.eval(&g.eval(&y).unwrap()).unwrap();
        prop_assert!(a.dist(&b) <= 1e-13);
    }

    #[test]
    fn distance_symmetry_and_triangle(seed in any::<u64>(), q in 1usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base = random_diffeo(q, &mut rng);
        let near = |rng: &mut ChaCha8Rng| {
            let t = if q == 1 {
                FiberDiffeo::rotation(rng.gen_range(-0.05..0.05))
            } else {
                FiberDiffeo::translation([rng.gen_range(-0.05..0.05), rng.gen_range(-0.05..0.05)])
            };
            let s = if q == 1 {
                FiberDiffeo::circle_shear(rng.gen_range(-0.1..0.1)).unwrap()
            } else {
                FiberDiffeo::shear(2, rng.gen_range(-0.1..0.1), [1, 1], 0).unwrap()
            };
            base.compose(&s).compose(&t)
        };
        let (f, g, h) = (near(&mut rng), near(&mut rng), near(&mut rng));
        let grid = if q == 1 { 64 } else { 24 };
        let fg = distance(&f, &g, 0.5, grid).unwrap();
        let gf = distance(&g, &f, 0.5, grid).unwrap();
        prop_assert_eq!(fg.d_c0, gf.d_c0);
        prop_assert_eq!(fg.d_c1, gf.d_c1);
        prop_assert_eq!(fg.d_c1beta, gf.d_c1beta);
        let fh = distance(&f, &h, 0.5, grid).unwrap();
        let hg = distance(&h, &g, 0.5, grid).unwrap();
        prop_assert!(fg.d_c0 <= fh.d_c0 + hg.d_c0 + 1e-9);
        if !(fg.near && fh.near && hg.near) {
            return Ok(());
        }
        // derivative terms obey ‖AB − I‖ ≤ ‖A − I‖(1 + ‖B − I‖) + ‖B − I‖
        let (a, b) = (fh.d_c1 - fh.d_c0, hg.d_c1 - hg.d_c0);
        prop_assert!(fg.d_c1 - fg.d_c0 <= a + b + a * b + 1e-9);
    }
}
