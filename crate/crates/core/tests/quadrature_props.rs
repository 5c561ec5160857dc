//! Variance quadrature, oracles and norm functionals.

use std::f64::consts::PI;

use dpp_linstat::integrate::gauss;
use dpp_linstat::kernels::{induced_mollifier, EnsembleKernel, MollifierFamily};
use dpp_linstat::norm_limits::{
    constant_k_d, davila_upper_bound, limit_table, mollifier_check_sphere, nonlocal_with, q_rho,
    spherical_mollifier_norms, Model, TestFn,
};
use dpp_linstat::quadrature::{
    cue_toeplitz_variance, gagliardo_euclid, gagliardo_seminorm, ginibre_disk_variance_exact, h1_seminorm,
    nystrom_variance, triple_norm_half, variance_rough, variance_rough_projection, variance_smooth,
    zonal_double_integral, EuclidProfile, EuclidSet, QuadratureSpec, RoughSet, SmoothFn,
};
use dpp_linstat::sphere_geom::{geodesic_distance, uniform_point, Cap, SpherePoint, ZonalFn};
use dpp_linstat::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rough(k: &EnsembleKernel, cap: &Cap) -> f64 {
    variance_rough(k, &RoughSet::Cap(cap.clone()), &QuadratureSpec::default()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn kernel_strategy() -> impl Strategy<Value = EnsembleKernel> {
    prop_oneof![
        (1usize..40).prop_map(|l| EnsembleKernel::harmonic(1, l).unwrap()),
        (1usize..16).prop_map(|l| EnsembleKernel::harmonic(2, l).unwrap()),
        (1usize..6).prop_map(|l| EnsembleKernel::harmonic(3, l).unwrap()),
        (2usize..120).prop_map(|n| EnsembleKernel::spherical(n).unwrap()),
    ]
}

fn sphere_dim(k: &EnsembleKernel) -> usize {
    match *k {
        EnsembleKernel::Harmonic { d, .. } => d,
        _ => 2,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rough_variance_is_complement_symmetric(k in kernel_strategy(), r in 0.05f64..3.09) {
        let cap = Cap::polar(sphere_dim(&k), r).unwrap();
        let a = rough(&k, &cap);
        let b = rough(&k, &cap.complement());
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn two_rough_routes_agree(k in kernel_strategy(), r in 0.05f64..3.09) {
        let cap = Cap::polar(sphere_dim(&k), r).unwrap();
        let a = rough(&k, &cap);
        let b = variance_rough_projection(&k, &cap, &QuadratureSpec::default()).unwrap();
        prop_assert!((a - b).abs() <= 1e-8 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn gagliardo_is_homogeneous(c in 0.1f64..5.0) {
        let spec = QuadratureSpec::default();
        let f = ZonalFn::cos_theta();
        let base2 = gagliardo_seminorm(2, &f, 0.5, 2.0, &spec).unwrap();
        let base1 = gagliardo_seminorm(2, &f, 0.5, 1.0, &spec).unwrap();
        prop_assert!(rel(gagliardo_seminorm(2, &f.scaled(c), 0.5, 2.0, &spec).unwrap(), c * c * base2) < 1e-10);
        // p = 1 only to the adaptive tolerance: |·| rounding can flip a bisection decision
        prop_assert!(rel(gagliardo_seminorm(2, &f.scaled(c), 0.5, 1.0, &spec).unwrap(), c * base1) < 1e-7);
        let b = EuclidProfile::bump(0.0, 1.0);
        let e2 = gagliardo_euclid(&b, 0.5, 2.0, &spec).unwrap();
        prop_assert!(rel(gagliardo_euclid(&b.scaled(c), 0.5, 2.0, &spec).unwrap(), c * c * e2) < 1e-10);
    }
}

#[test]
fn zonal_examples() {
    let spec = QuadratureSpec::default();
    for d in 1..=4 {
        assert!((zonal_double_integral(d, |_| 1.0, &spec).unwrap() - 1.0).abs() < 1e-13);
    }
    assert!((zonal_double_integral(1, |t| t, &spec).unwrap() - PI / 2.0).abs() < 1e-13);
    let k = EnsembleKernel::spherical(100).unwrap();
    let trace = zonal_double_integral(2, |t| k.second_intensity(t), &spec).unwrap();
    assert!(rel(trace, 100.0) < 1e-10, "{trace}");
}

#[test]
fn covariogram_against_stratified_sampling() {
    // one uniform point per cell of a grid over the bounding box
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let disk = EuclidSet::ball(vec![0.0, 0.0], 1.0).unwrap();
    for h in [0.25, 1.0, 1.7, 2.5] {
        let (x0, x1, y0, y1) = (-1.0, 1.0 + h, -1.0, 1.0);
        let m = 1500;
        let (dx, dy) = ((x1 - x0) / m as f64, (y1 - y0) / m as f64);
        let mut hits = 0usize;
        for i in 0..m {
            for j in 0..m {
                let x = x0 + (i as f64 + rng.gen::<f64>()) * dx;
                let y = y0 + (j as f64 + rng.gen::<f64>()) * dy;
                let a = disk.contains(&[x, y]);
                let b = disk.contains(&[x - h, y]);
                hits += (a != b) as usize;
            }
        }
        let mc = hits as f64 * dx * dy;
        let exact = disk.covariogram(h);
        assert!((mc - exact).abs() < 1e-3, "h={h}: {mc} vs {exact}");
    }
    let iv = EuclidSet::interval(0.0, 0.7).unwrap();
    for h in [0.1, 0.7, 2.0] {
        assert_eq!(iv.covariogram(h), 2.0 * h.min(0.7));
    }
}

/// ½ E|f(x) - f(y)|²|K(x,y)|² over independent uniform pairs, with its
/// standard error.
fn monte_carlo_variance<F>(k: &EnsembleKernel, f: F, pairs: usize, seed: u64) -> (f64, f64)
where
    F: Fn(&SpherePoint) -> f64,
{
    let d = sphere_dim(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..pairs {
        let x = uniform_point(d, &mut rng);
        let y = uniform_point(d, &mut rng);
        let t = geodesic_distance(&x, &y).unwrap();
        let v = 0.5 * (f(&x) - f(&y)).powi(2) * k.second_intensity(t);
        s += v;
        s2 += v * v;
    }
    let n = pairs as f64;
    let mean = s / n;
    (mean, ((s2 / n - mean * mean) / n).sqrt())
}

#[test]
fn reductions_match_brute_force_double_integrals() {
    let spec = QuadratureSpec::default();
    let cases = [
        EnsembleKernel::harmonic(1, 4).unwrap(),
        EnsembleKernel::harmonic(2, 3).unwrap(),
        EnsembleKernel::harmonic(3, 2).unwrap(),
        EnsembleKernel::spherical(6).unwrap(),
    ];
    for (i, k) in cases.iter().enumerate() {
        let d = sphere_dim(k);
        let cos = ZonalFn::cos_theta();
        let q = variance_smooth(k, &SmoothFn::Zonal(cos.clone()), &spec).unwrap();
        let (mc, se) = monte_carlo_variance(k, |x| cos.eval(x), 1_000_000, 100 + i as u64);
        assert!(rel(mc, q) < 1e-2 && (mc - q).abs() < 5.0 * se, "{k} smooth: {mc} ± {se} vs {q}");

        let cap = Cap::polar(d, 1.1).unwrap();
        let q = rough(k, &cap);
        let (mc, se) = monte_carlo_variance(k, |x| cap.contains(x) as u8 as f64, 4_000_000, 200 + i as u64);
        assert!(rel(mc, q) < 1e-2 && (mc - q).abs() < 5.0 * se, "{k} rough: {mc} ± {se} vs {q}");
    }
}

#[test]
fn constant_function_has_zero_variance() {
    let spec = QuadratureSpec::default();
    for k in [EnsembleKernel::harmonic(2, 7).unwrap(), EnsembleKernel::spherical(30).unwrap()] {
        let v = variance_smooth(&k, &SmoothFn::Zonal(ZonalFn::constant(2.5)), &spec).unwrap();
        assert!(v.abs() < 1e-12, "{k}: {v}");
    }
}

#[test]
fn cue_oracle_matches_quadrature() {
    for l in [1usize, 8, 64] {
        let k = EnsembleKernel::harmonic(1, l).unwrap();
        for r in [PI / 2.0, 1.0, 2.6] {
            let arc = Cap::polar(1, r).unwrap();
            let a = cue_toeplitz_variance(l, &arc).unwrap();
            let b = rough(&k, &arc);
            assert!((a - b).abs() < 1e-8, "L={l} r={r}: {a} vs {b}");
        }
    }
    let half = cue_toeplitz_variance(1, &Cap::polar(1, PI / 2.0).unwrap()).unwrap();
    assert!((half - (0.75 - 4.0 / (PI * PI))).abs() < 1e-12);
}

#[test]
fn ginibre_oracle() {
    for (l, r) in [(1.0, 0.5), (4.0, 1.0), (30.0, 2.0), (256.0, 1.0)] {
        let o = ginibre_disk_variance_exact(l, r).unwrap();
        assert!(rel(o.mean, l * r * r) < 1e-10);
        assert!(o.variance > 0.0 && o.tail_bound < 1e-12);
    }
    assert!(ginibre_disk_variance_exact(4.0, 1e-6).unwrap().variance < 1e-10);
    assert!(ginibre_disk_variance_exact(0.0, 1.0).is_err());
    let k = EnsembleKernel::ginibre(4.0).unwrap();
    let disk = RoughSet::Euclid(EuclidSet::ball(vec![0.0, 0.0], 1.0).unwrap());
    let q = variance_rough(&k, &disk, &QuadratureSpec::default()).unwrap();
    let o = ginibre_disk_variance_exact(4.0, 1.0).unwrap().variance;
    assert!((q - o).abs() < 1e-6, "{q} vs {o}");
}

#[test]
fn nystrom_oracle() {
    let k = EnsembleKernel::bessel(1, 32.0).unwrap();
    let rep = nystrom_variance(&k, 0.0, 1.0, 512).unwrap();
    assert!(rep.min_eigenvalue >= -1e-8 && rep.max_eigenvalue <= 1.0 + 1e-8, "{rep:?}");
    assert!((rep.trace - 32.0).abs() < 1e-6, "{}", rep.trace);
    let iv = RoughSet::Euclid(EuclidSet::interval(0.0, 1.0).unwrap());
    let q = variance_rough(&k, &iv, &QuadratureSpec::default()).unwrap();
    assert!(rel(rep.variance, q) < 1e-2, "{} vs {q}", rep.variance);
    assert!(matches!(nystrom_variance(&k, 0.0, 1.0, 100), Err(Error::Resolution(_))));
    assert!(nystrom_variance(&EnsembleKernel::ginibre(1.0).unwrap(), 0.0, 1.0, 64).is_err());
}

#[test]
fn gagliardo_and_triple_norm_are_refinement_stable() {
    let coarse = QuadratureSpec::default();
    let fine = QuadratureSpec {
        order: 20,
        max_width: PI / 64.0,
        inner_order: 48,
        ..QuadratureSpec::default()
    };
    let f = ZonalFn::cos_theta();
    let g = [gagliardo_seminorm(2, &f, 0.5, 2.0, &coarse).unwrap(), gagliardo_seminorm(2, &f, 0.5, 2.0, &fine).unwrap()];
    assert!(rel(g[0], g[1]) < 1e-4, "{g:?}");
    let t = [triple_norm_half(2, &f, &coarse).unwrap(), triple_norm_half(2, &f, &fine).unwrap()];
    assert!(rel(t[0], t[1]) < 1e-4, "{t:?}");
    assert!(gagliardo_seminorm(2, &ZonalFn::constant(1.0), 0.5, 2.0, &coarse).unwrap().abs() < 1e-14);
    assert!(triple_norm_half(2, &ZonalFn::constant(1.0), &coarse).unwrap().abs() < 1e-14);
}

#[test]
fn triple_norm_is_equivalent_to_gagliardo() {
    let spec = QuadratureSpec::default();
    let fns = [
        ZonalFn::cos_theta(),
        ZonalFn::new("cos2", |t| t * t, |t| 2.0 * t),
        ZonalFn::new("exp", f64::exp, f64::exp),
    ];
    let mut ratios = Vec::new();
    for d in [1usize, 2, 3] {
        for f in &fns {
            let g = gagliardo_seminorm(d, f, 0.5, 2.0, &spec).unwrap();
            let t = triple_norm_half(d, f, &spec).unwrap();
            assert!(g <= 2.0 * t * (1.0 + 1e-10), "d={d} {}: {g} vs 2·{t}", f.label);
            ratios.push(t / g);
        }
    }
    let c = ratios.iter().copied().fold(0.0, f64::max);
    println!("triple_norm / gagliardo ≤ {c}");
    assert!(c.is_finite() && c < 10.0);
}

#[test]
fn h1_examples() {
    let cos = ZonalFn::cos_theta();
    assert!((h1_seminorm(2, &cos, 1.0).unwrap() - PI / 4.0).abs() < 1e-12);
    assert_eq!(h1_seminorm(2, &ZonalFn::constant(3.0), 2.0).unwrap(), 0.0);
}

/// ∫ρ(d(x,y)) dσ(x) with a tensor rule in (θ, φ) around the pole,
/// distances taken from the embedded points.
fn q_by_tensor_rule(rho: &dpp_linstat::kernels::Mollifier, support: f64) -> f64 {
    let y = SpherePoint::north(2);
    let m = 8;
    let panels = 64;
    let mut total = 0.0;
    for p in 0..panels {
        let a = support * p as f64 / panels as f64;
        let b = support * (p + 1) as f64 / panels as f64;
        total += gauss(
            |th| {
                let mut acc = 0.0;
                for j in 0..m {
                    let phi = 2.0 * PI * j as f64 / m as f64;
                    let x = SpherePoint::new(vec![th.sin() * phi.cos(), th.sin() * phi.sin(), th.cos()]).unwrap();
                    acc += rho.density(geodesic_distance(&x, &y).unwrap());
                }
                acc / m as f64 * th.sin()
            },
            a,
            b,
            20,
        );
    }
    0.5 * total
}

#[test]
fn q_rho_identity() {
    let fams: Vec<(MollifierFamily, f64)> = vec![
        (MollifierFamily::bump_sphere(2), 10.0),
        (induced_mollifier(&EnsembleKernel::spherical(2).unwrap(), 1).unwrap(), 50.0),
        (induced_mollifier(&EnsembleKernel::spherical(2).unwrap(), 2).unwrap(), 50.0),
        (induced_mollifier(&EnsembleKernel::harmonic(2, 1).unwrap(), 1).unwrap(), 12.0),
        (induced_mollifier(&EnsembleKernel::harmonic(2, 1).unwrap(), 2).unwrap(), 12.0),
    ];
    for (fam, scale) in fams {
        let rho = fam.at(scale).unwrap();
        let q = q_rho(&rho).unwrap();
        let t = q_by_tensor_rule(&rho, rho.support.unwrap_or(PI).min(PI));
        assert!((q - t).abs() < 1e-10, "{}: {q} vs {t}", fam.label);
        assert!((q - 1.0).abs() < 1e-8, "{}: mass {q}", fam.label);
    }
}

#[test]
fn davila_upper_bound_holds() {
    let spec = QuadratureSpec::default();
    let hemi = TestFn::Cap(Cap::polar(2, PI / 2.0).unwrap());
    let third = TestFn::Cap(Cap::polar(2, PI / 3.0).unwrap());
    let cos = TestFn::Zonal(ZonalFn::cos_theta());
    let pairs = [
        (MollifierFamily::bump_sphere(2), 10.0, &hemi),
        (MollifierFamily::bump_sphere(2), 20.0, &cos),
        (induced_mollifier(&EnsembleKernel::spherical(2).unwrap(), 1).unwrap(), 200.0, &third),
        (induced_mollifier(&EnsembleKernel::spherical(2).unwrap(), 1).unwrap(), 100.0, &cos),
        (induced_mollifier(&EnsembleKernel::harmonic(2, 1).unwrap(), 1).unwrap(), 24.0, &hemi),
        (induced_mollifier(&EnsembleKernel::harmonic(2, 1).unwrap(), 1).unwrap(), 16.0, &cos),
    ];
    for (fam, scale, f) in pairs {
        let rho = fam.at(scale).unwrap();
        let lhs = nonlocal_with(&rho, f, 1, &spec).unwrap();
        let rhs = davila_upper_bound(&rho, f).unwrap();
        assert!(lhs <= rhs + 1e-8, "{} at {scale}: {lhs} > {rhs}", fam.label);
    }
    // hemisphere value under a fine bump approaches K_2 · 1/2 = 1/π
    let rho = MollifierFamily::bump_sphere(2).at(80.0).unwrap();
    let v = nonlocal_with(&rho, &hemi, 1, &spec).unwrap();
    assert!(rel(v, constant_k_d(2) * 0.5) < 2e-2, "{v}");
    assert!(nonlocal_with(&rho, &TestFn::Zonal(ZonalFn::constant(1.0)), 1, &spec).unwrap().abs() < 1e-14);
}

#[test]
fn spherical_constant_converges() {
    let t = limit_table(
        |n| Ok(spherical_mollifier_norms(n as usize, 1)? / n.sqrt()),
        &[100.0, 1000.0, 3000.0, 10_000.0],
        Model::Constant,
    )
    .unwrap();
    let lim = t.limit.unwrap();
    assert!(rel(lim, PI.sqrt()) < 5e-3, "{lim}");
}

#[test]
fn mollifier_conditions_by_family() {
    let scales = [100.0, 400.0, 1600.0, 6400.0];
    for a in [1, 2] {
        let fam = induced_mollifier(&EnsembleKernel::spherical(2).unwrap(), a).unwrap();
        let r = mollifier_check_sphere(&fam, &scales, 0.5).unwrap();
        assert!(r.pass, "spherical α={a}: {r:?}");
    }
    let bump = mollifier_check_sphere(&MollifierFamily::bump_sphere(2), &[5.0, 10.0, 20.0, 40.0], 0.5).unwrap();
    assert!(bump.pass && bump.rows.last().unwrap().tail == 0.0);
    // the α = 2 harmonic family keeps a fixed share of its mass away from the diagonal
    let fam = induced_mollifier(&EnsembleKernel::harmonic(2, 1).unwrap(), 2).unwrap();
    let r = mollifier_check_sphere(&fam, &[16.0, 32.0, 64.0, 128.0], 0.5).unwrap();
    assert!(r.unit_mass && !r.pass, "{r:?}");
    let tails: Vec<f64> = r.rows.iter().map(|x| x.tail).collect();
    assert!(tails.iter().all(|&t| t > 0.1), "{tails:?}");
}
