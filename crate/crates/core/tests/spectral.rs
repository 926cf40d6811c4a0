use std::sync::Arc;

use livsic_core::base::*;
use livsic_core::cocycle::*;
use livsic_core::fiber::*;
use livsic_core::linalg::{line_angle, norm, normalize, Mat};
use livsic_core::spectral::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn golden() -> f64 {
    (3.0 + 5f64.sqrt()) / 2.0
}

fn random_invertible(q: usize, rng: &mut ChaCha8Rng) -> Mat<f64> {
    loop {
        let m: Mat<f64> = Mat::random_gaussian(q, q, rng);
        if m.det().abs() > 1e-3 {
            return m;
        }
    }
}

#[test]
fn svals_match_gram_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for q in 2..=4 {
        for _ in 0..200 {
            let m = random_invertible(q, &mut rng);
            let s = singular_values(&m, 1).unwrap().svals;
            // σ_i² are the eigenvalues of m mᵀ
            let (ev, _) = (&m * &m.transpose()).sym_eigen();
            for (a, b) in s.iter().zip(&ev) {
                assert!((a * a - b).abs() <= 1e-10 * ev[0]);
            }
            let prod: f64 = s.iter().product();
            assert!((prod - m.det().abs()).abs() <= 1e-10 * prod);
            let si = singular_values(&m.inverse().unwrap(), 1).unwrap().svals;
            for i in 0..q {
                assert!((s[i] * si[q - 1 - i] - 1.0).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn top_sval_matches_sphere_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for _ in 0..20 {
        let m = random_invertible(2, &mut rng);
        let s = singular_values(&m, 1).unwrap().svals;
        let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
        for k in 0..10_000 {
            let t = std::f64::consts::TAU * k as f64 / 10_000.0;
            let n = norm(&m.mul_vec(&[t.cos(), t.sin()]));
            hi = hi.max(n);
            lo = lo.min(n);
        }
        assert!((hi - s[0]).abs() <= 1e-3 * s[0]);
        assert!((lo - s[1]).abs() <= 1e-3 * s[0]);
    }
}

#[test]
fn ellipsoid_ordering_on_random_contained_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    for q in [2, 3] {
        for _ in 0..1000 {
            let radii: Vec<f64> = (0..q).map(|_| rng.gen_range(0.1..5.0)).collect();
            let f = Ellipsoid { axes: Mat::random_orthogonal(q, &mut rng), radii };
            // shrink by a contraction, then rotate
            let shrink: Vec<f64> = (0..q).map(|_| rng.gen_range(0.05..0.99)).collect();
            let k = &(&Mat::random_orthogonal(q, &mut rng) * &Mat::diag(&shrink)) * &Mat::random_orthogonal(q, &mut rng);
            let svd = (&f.matrix() * &k).svd();
            let e = Ellipsoid { axes: svd.u, radii: svd.sigma };
            let r = ellipsoid_ordering_check(&e, &f, 50, &mut rng).unwrap();
            assert!(r.holds && r.containment < 1.0, "{r:?}");
        }
    }
}

fn cocycle(family: CocycleFamily<f64>) -> Cocycle<f64> {
    Cocycle::new(Arc::new(BaseSystem::cat_map()), family).unwrap()
}

fn start(c: &Cocycle<f64>, y: [f64; 2]) -> SkewPoint<f64> {
    SkewPoint { base: BasePoint::Torus(TorusPoint::from_f64([0.2, 0.7])), fiber: FiberPoint::new(c.dim(), y) }
}

#[test]
fn exponent_examples() {
    let id = cocycle(CocycleFamily::Constant(FiberDiffeo::identity(2)));
    let s = exponent_estimate(&id, &start(&id, [0.3, 0.4]), 1000, 1e-2).unwrap();
    assert_eq!(s.raw, vec![0.0, 0.0]);
    assert_eq!(s.multiplicities, vec![2]);

    let lin = cocycle(CocycleFamily::Linear { matrix: [[2, 1], [1, 1]], amplitude: 0.0, harmonic: [1, 0] });
    let s = exponent_estimate(&lin, &start(&lin, [0.3, 0.4]), 10_000, 1e-2).unwrap();
    assert!((s.exponents[0] - golden().ln()).abs() < 1e-3 && (s.exponents[1] + golden().ln()).abs() < 1e-3);
    assert!((golden().ln() - 0.9624).abs() < 1e-4);
    assert!((s.sum_with_multiplicity() - s.log_det_rate).abs() < 1e-2);

    let shear = cocycle(CocycleFamily::Constant(FiberDiffeo::circle_shear(0.5).unwrap()));
    let s = exponent_estimate(&shear, &start(&shear, [0.5, 0.0]), 10_000, 1e-2).unwrap();
    assert!((s.exponents[0] - 0.5f64.ln()).abs() < 1e-3, "{s:?}");

    assert!(matches!(exponent_estimate(&lin, &start(&lin, [0.3, 0.4]), 999, 1e-2), Err(SpectralError::PreconditionViolated { .. })));
}

#[test]
fn coboundary_exponents_vanish() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let base = Arc::new(BaseSystem::cat_map());
    for u in [
        TransferFamily::Shear { amplitude: 0.3, harmonic: [1, 0] },
        TransferFamily::TorusShear { amplitude: 0.3, harmonic: [1, 1], k: [1, 1], j: 0 },
    ] {
        let c = make_coboundary(base.clone(), u, &mut rng).unwrap();
        let z = SkewPoint { base: base.random_point(&mut rng), fiber: FiberPoint::new(c.dim(), [rng.gen(), rng.gen()]) };
        let s = exponent_estimate(&c, &z, 10_000, 1e-2).unwrap();
        assert!(s.raw.iter().all(|l| l.abs() < 1e-2), "{s:?}");
        assert!((s.sum_with_multiplicity() - s.log_det_rate).abs() < 1e-2);
    }
}

/// `A_n = U diag(e^{nλ_i + w_i(n)}) V` with `|w_i(n)| ≤ n·window`.
fn lemma_trace(lambdas: &[f64], window: f64, len: usize, rng: &mut ChaCha8Rng) -> Vec<Mat<f64>> {
    let u = Mat::random_orthogonal(2, rng);
    let v = Mat::random_orthogonal(2, rng);
    (1..=len)
        .map(|n| {
            let d: Vec<f64> = lambdas.iter().map(|l| (n as f64 * (l + rng.gen_range(-window..window))).exp()).collect();
            &(&u * &Mat::diag(&d)) * &v
        })
        .collect()
}

#[test]
fn bounded_conjugacy_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    let lambdas = [0.3, -0.3];
    let a = lemma_trace(&lambdas, 0.05, 40, &mut rng);
    let orth = bounded_conjugacy_stability(&a, &lambdas, 1.0, 0.1, 0.05, 200, &mut rng).unwrap();
    assert!(orth.holds && orth.threshold == 1);
    let r = bounded_conjugacy_stability(&a, &lambdas, 2.0, 0.1, 0.05, 1000, &mut rng).unwrap();
    assert_eq!(r.threshold, 28);
    assert!(r.holds, "{r:?}");
    assert!(r.sandwich_margin >= 0.0);

    // hypothesis window violated
    let bad = lemma_trace(&lambdas, 0.2, 10, &mut rng);
    assert!(bounded_conjugacy_stability(&bad, &lambdas, 2.0, 0.1, 0.05, 10, &mut rng).is_err());
}

#[test]
fn adversarial_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let ell = 2.0;
    for a in lemma_trace(&[0.3, -0.3], 0.05, 30, &mut rng) {
        let svd = a.svd();
        let c = &(&svd.u * &Mat::diag(&[2.0, 0.5])) * &svd.u.transpose();
        let d = &(&svd.v * &Mat::diag(&[2.0, 0.5])) * &svd.v.transpose();
        let s = (&(&c * &a) * &d).singular_values();
        for i in 0..2 {
            // rounding allowance of σ_i for a formed product
            let tol = 1e-12 + 64.0 * f64::EPSILON * svd.sigma[0] / svd.sigma[i];
            assert!(s[i] <= ell * ell * svd.sigma[i] * (1.0 + tol));
            assert!(s[i] >= svd.sigma[i] / (ell * ell) * (1.0 - tol));
        }
        // aligned conjugators stretch σ_1 by exactly ℓ²
        assert!((s[0] / svd.sigma[0] - 4.0).abs() < 1e-9);
    }
}

fn cat_cones() -> ConeSystem {
    let l = golden().ln();
    ConeSystem::new(vec![1, 1], vec![l, -l], 0.1).unwrap()
}

#[test]
fn cones_zero_and_calibrated_perturbations() {
    let mut rng = ChaCha8Rng::seed_from_u64(56);
    let mut cones = cat_cones();
    let a: Vec<Mat<f64>> = (0..20).map(|_| cones.diagonal(&[rng.gen_range(-0.02..0.02), rng.gen_range(-0.02..0.02)])).collect();
    let g = calibrate_gamma(&mut cones, &a, 64, &mut rng).unwrap();
    assert!(g > 0.0 && g <= 0.1);
    let rep = cone_invariance_check(&cones, &a, None, 256, &mut rng).unwrap();
    assert!(rep.max_inclusion <= 1.0 && rep.max_iterated <= 1.0);
    let alpha = calibrate_alpha1(&mut cones, &a, 200, 8, &mut rng).unwrap();
    assert!(alpha > 0.0);
    let q = cones.dim();
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let p: Vec<Mat<f64>> = (0..a.len())
            .map(|_| {
                let m = Mat::random_gaussian(q, q, &mut rng);
                let n = m.norm2();
                m.scale(alpha * rng.gen::<f64>().sqrt() / n)
            })
            .collect();
        let r = cone_invariance_check(&cones, &a, Some(&p), 8, &mut rng).unwrap();
        worst = worst.max(r.max_iterated);
    }
    assert!(worst <= 1.0);
}

#[test]
fn non_adapted_matrices_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(57);
    let cones = cat_cones();
    let cat = Mat::from_f64_rows(&[&[2.0, 1.0], &[1.0, 1.0]]);
    assert!(matches!(cone_invariance_check(&cones, &[cat], None, 8, &mut rng), Err(SpectralError::PreconditionViolated { .. })));
}

#[test]
fn flag_of_perturbed_cat_derivative() {
    let cones = cat_cones();
    let mut c = cones.diagonal(&[0.0, 0.0]);
    c[(0, 1)] += 1e-3;
    c[(1, 0)] -= 0.6e-3;
    let cs = vec![c.clone(); 200];
    let flag = flag_construction(&cs, &cones, 200).unwrap();
    // slow eigenvector of the constant matrix
    let (tr, det) = (c.trace(), c.det());
    let slow = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
    let v = normalize(&[c[(0, 1)], slow - c[(0, 0)]]);
    let h2 = flag.subspaces[1].column(0);
    assert!(line_angle(&h2, &v) < 1e-2);
    assert!(flag.sandwich_ok, "{:?}", flag.rates);
    for (j, r) in flag.rates.iter().enumerate() {
        for x in r {
            assert!((x - cones.lambdas[j]).abs() <= cones.delta / 2.0);
        }
    }
    // direct iteration over a horizon short enough to stay stable
    let short = flag_construction(&cs[..15], &cones, 15).unwrap();
    for j in 0..2 {
        let v = short.subspaces[j].column(short.subspaces[j].cols() - 1);
        let direct = growth_rate(&cs[..15], &v);
        assert!((direct - short.rates[j][0]).abs() < 1e-6, "{direct} vs {:?}", short.rates[j]);
    }
}

#[test]
fn frame_of_conjugated_diagonal() {
    let p = Mat::from_f64_rows(&[&[1.0, 0.4], &[-0.3, 1.2]]);
    let b = &(&p * &Mat::diag(&[2.0, 0.4])) * &p.inverse().unwrap();
    let bs = vec![b; 100];
    let (exponents, multiplicities) = cluster_exponents(&[2f64.ln(), 0.4f64.ln()], 1e-2);
    let spec = LyapunovSpectrum { exponents, multiplicities, tol: 1e-2, raw: vec![], slopes: vec![], n: 100, log_det_rate: 0.8f64.ln() };
    let fr = lyapunov_coordinates_from(&bs, &spec, 0.05).unwrap();
    assert!(fr.off_block_max <= 1e-8, "{}", fr.off_block_max);
    assert_eq!(fr.in_interval_fraction, 1.0);
    for (i, be) in fr.b_eta.iter().enumerate() {
        let direct = &(&fr.c[i + 1] * &bs[i]) * &fr.c[i].inverse().unwrap();
        assert!((be - &direct).max_abs() <= 1e-12 * direct.max_abs());
    }
    assert!(fr.ell.is_finite());
}

#[test]
fn frame_along_coboundary_orbit() {
    let mut rng = ChaCha8Rng::seed_from_u64(58);
    let base = Arc::new(BaseSystem::cat_map());
    let c = make_coboundary(base.clone(), TransferFamily::TorusShear { amplitude: 0.3, harmonic: [1, 0], k: [1, 1], j: 0 }, &mut rng).unwrap();
    let z = SkewPoint { base: base.random_point(&mut rng), fiber: FiberPoint::new(2, [0.1, 0.6]) };
    let trace = c.derivative_cocycle(&z, 500, 10).unwrap();
    let mut spec = spectrum_from_trace(&trace, 500, 1e-2).unwrap();
    assert_eq!(spec.multiplicities, vec![2]);
    assert!(spec.exponents[0].abs() < 1e-2);
    // coboundaries have exponent exactly 0
    spec.exponents = vec![0.0];
    let fr = lyapunov_coordinates(&trace, &spec, 0.05).unwrap();
    let inside = fr
        .block_norms
        .iter()
        .filter(|b| b.iter().all(|&(n, co)| n <= 0.05f64.exp() * (1.0 + 1e-9) && co >= (-0.05f64).exp() * (1.0 - 1e-9)))
        .count();
    assert!(inside as f64 >= 0.95 * fr.block_norms.len() as f64);
    assert!(fr.uniformity_block(fr.ell).len() == fr.frame_bounds.len());
    assert!(fr.ell < 1e3, "{}", fr.ell);
}

#[test]
fn frame_of_hyperbolic_fiber_cocycle() {
    let c = cocycle(CocycleFamily::Linear { matrix: [[2, 1], [1, 1]], amplitude: 0.1, harmonic: [1, 0] });
    let z = start(&c, [0.3, 0.4]);
    let trace = c.derivative_cocycle(&z, 2000, 10).unwrap();
    let spec = spectrum_from_trace(&trace, 2000, 5e-2).unwrap();
    assert_eq!(spec.multiplicities, vec![1, 1]);
    let fr = lyapunov_coordinates(&trace, &spec, 0.05).unwrap();
    assert!(fr.off_block_max <= 1e-8, "{}", fr.off_block_max);
    assert!(fr.in_interval_fraction == 1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sval_products_and_sandwich(seed in any::<u64>(), q in 2usize..5, ell in 1.0f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_invertible(q, &mut rng);
        let s = singular_values(&a, 1).unwrap().svals;
        let prod: f64 = s.iter().product();
        prop_assert!((prod - a.det().abs()).abs() <= 1e-10 * prod);
        let c = random_bounded(q, ell, &mut rng);
        let d = random_bounded(q, ell, &mut rng);
        let t = (&(&c * &a) * &d).singular_values();
        for i in 0..q {
            prop_assert!(t[i] <= ell * ell * s[i] * (1.0 + 1e-12));
            prop_assert!(t[i] >= s[i] / (ell * ell) * (1.0 - 1e-12));
        }
    }
}
