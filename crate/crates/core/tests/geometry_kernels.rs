//! Geometry of caps and the kernels themselves.

use std::f64::consts::PI;

use dpp_linstat::integrate::gauss;
use dpp_linstat::kernels::{EnsembleKernel, EuclidPoint};
use dpp_linstat::quadrature::{h1_seminorm, mollified_variation, zonal_double_integral, QuadratureSpec};
use dpp_linstat::sphere_geom::{
    cap_bv_variation, cap_measure, cap_measure_dim, stereographic, stereographic_inverse, uniform_sample, Cap,
    SpherePoint, ZonalFn,
};
use proptest::prelude::*;

fn random_cap(d: usize, seed: u64, r: f64) -> Cap {
    let c = uniform_sample(d, 1, seed).pop().unwrap();
    Cap::new(c, r).unwrap()
}

proptest! {
    #[test]
    fn complement_partitions_the_sphere(d in 1usize..5, r in 0.01f64..3.13, seed in 0u64..1000) {
        let cap = random_cap(d, seed, r);
        let comp = cap.complement();
        prop_assert!((cap_measure(&cap) + cap_measure(&comp) - 1.0).abs() < 1e-12);
        for x in uniform_sample(d, 200, seed + 1) {
            prop_assert!(cap.contains(&x) != comp.contains(&x));
        }
        // a point exactly on the boundary lands on one side only
        let edge = SpherePoint::from_colatitude(d, r);
        let polar = Cap::polar(d, r).unwrap();
        prop_assert!(polar.contains(&edge));
        prop_assert!(!polar.complement().contains(&edge));
    }

    #[test]
    fn uniform_points_have_unit_norm(d in 1usize..6, seed in 0u64..1000) {
        for x in uniform_sample(d, 50, seed) {
            let n: f64 = x.coords().iter().map(|c| c * c).sum();
            prop_assert!((n - 1.0).abs() < 1e-14);
        }
    }
}

#[test]
fn levy_cap_form_matches_sine_of_radius() {
    // √(σ(1-σ)) for a cap of radius r on S^2 equals sin(r)/2
    for i in 1..100 {
        let r = PI * i as f64 / 100.0;
        let s = cap_measure_dim(2, r);
        assert!(((s * (1.0 - s)).sqrt() - 0.5 * r.sin()).abs() < 1e-14);
    }
}

#[test]
fn cap_measure_matches_uniform_frequencies() {
    let n = 200_000;
    for d in 1..=4 {
        let pts = uniform_sample(d, n, 40 + d as u64);
        for r in [0.4, PI / 2.0, 2.5] {
            let cap = Cap::polar(d, r).unwrap();
            let hits = pts.iter().filter(|x| cap.contains(x)).count() as f64 / n as f64;
            let s = cap_measure(&cap);
            let sd = (s * (1.0 - s) / n as f64).sqrt();
            assert!((hits - s).abs() < 5.0 * sd, "d={d} r={r}: {hits} vs {s}");
        }
    }
}

#[test]
fn stereographic_round_trip() {
    for x in uniform_sample(2, 10_000, 3) {
        let y = stereographic_inverse(stereographic(&x).unwrap());
        let err = x.coords().iter().zip(y.coords()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{x:?} -> {y:?}");
    }
    let n = SpherePoint::north(2);
    assert_eq!(stereographic_inverse(stereographic(&n).unwrap()), n);
}

#[test]
fn dirichlet_energy_of_cos() {
    let v = h1_seminorm(2, &ZonalFn::cos_theta(), 2.0).unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-10, "{v}");
}

#[test]
fn diagonal_is_the_intensity() {
    let kernels = [
        EnsembleKernel::harmonic(1, 12).unwrap(),
        EnsembleKernel::harmonic(2, 9).unwrap(),
        EnsembleKernel::harmonic(3, 5).unwrap(),
        EnsembleKernel::spherical(40).unwrap(),
    ];
    for k in kernels {
        let d = match k {
            EnsembleKernel::Spherical { .. } => 2,
            EnsembleKernel::Harmonic { d, .. } => d,
            _ => unreachable!(),
        };
        assert!((k.profile(0.0) - k.diagonal()).abs() < 1e-9 * k.diagonal(), "{k}");
        if let Some(r) = k.rank() {
            assert_eq!(r as f64, k.diagonal());
        }
        for x in uniform_sample(d, 1000, 11) {
            // a neighbour at distance 1e-9 sees the diagonal up to O(t²)
            let mut c = x.coords().to_vec();
            c[0] += 1e-9;
            let y = SpherePoint::new(c).unwrap();
            let v = k.eval_sphere(&x, &y).unwrap();
            assert!((v - k.diagonal()).abs() < 1e-6 * k.diagonal(), "{k}: {v}");
        }
    }
    let b = EnsembleKernel::bessel(2, 3.0).unwrap();
    let p = EuclidPoint::new(vec![0.3, -1.2]);
    assert!((b.eval_euclid(&p, &p).unwrap() - 9.0).abs() < 1e-12);
    let g = EnsembleKernel::ginibre(5.0).unwrap();
    assert!((g.eval_euclid(&p, &p).unwrap() - 5.0 / PI).abs() < 1e-15);
}

#[test]
fn second_intensity_peaks_on_the_diagonal() {
    let kernels = [
        EnsembleKernel::harmonic(1, 30).unwrap(),
        EnsembleKernel::harmonic(2, 17).unwrap(),
        EnsembleKernel::harmonic(4, 6).unwrap(),
        EnsembleKernel::spherical(77).unwrap(),
        EnsembleKernel::bessel(1, 4.0).unwrap(),
        EnsembleKernel::bessel(2, 4.0).unwrap(),
        EnsembleKernel::bessel(3, 2.0).unwrap(),
        EnsembleKernel::ginibre(9.0).unwrap(),
    ];
    for k in kernels {
        let top = k.second_intensity(0.0);
        assert!((top - k.diagonal().powi(2)).abs() < 1e-9 * top, "{k}");
        for i in 1..4000 {
            let t = PI * i as f64 / 4000.0;
            assert!(k.second_intensity(t) <= top * (1.0 + 1e-12), "{k} at t={t}");
        }
    }
}

#[test]
fn total_mass_of_second_intensity_is_the_rank() {
    // ∫|K(x,z)|² dσ(z) = K(x,x) for projection kernels
    let spec = QuadratureSpec::default();
    for k in [
        EnsembleKernel::harmonic(1, 20).unwrap(),
        EnsembleKernel::harmonic(2, 12).unwrap(),
        EnsembleKernel::harmonic(3, 6).unwrap(),
        EnsembleKernel::spherical(50).unwrap(),
    ] {
        let d = match k {
            EnsembleKernel::Harmonic { d, .. } => d,
            _ => 2,
        };
        let m = zonal_double_integral(d, |t| k.second_intensity(t), &spec).unwrap();
        assert!((m - k.diagonal()).abs() < 1e-8 * k.diagonal(), "{k}: {m}");
    }
}

#[test]
fn harmonic_kernel_reproduces_itself() {
    // ∫ K(x,z) K(z,y) dσ(z) = K(x,y) on S^2, by Gauss in cos θ and the
    // trapezoid rule in the azimuth (exact for these polynomial integrands)
    let k = EnsembleKernel::harmonic(2, 5).unwrap();
    let x = SpherePoint::north(2);
    for gamma in [0.3, 1.1, 2.0, 3.0] {
        let y = SpherePoint::from_colatitude(2, gamma);
        let m = 24;
        let inner = |u: f64| {
            let s = (1.0 - u * u).max(0.0).sqrt();
            let mut acc = 0.0;
            for j in 0..m {
                let phi = 2.0 * PI * j as f64 / m as f64;
                let z = SpherePoint::new(vec![s * phi.cos(), s * phi.sin(), u]).unwrap();
                acc += k.eval_sphere(&x, &z).unwrap() * k.eval_sphere(&z, &y).unwrap();
            }
            acc / m as f64
        };
        let v = 0.5 * gauss(inner, -1.0, 1.0, 16);
        let direct = k.eval_sphere(&x, &y).unwrap();
        assert!((v - direct).abs() < 1e-10 * k.diagonal(), "γ={gamma}: {v} vs {direct}");
    }
}

#[test]
fn cap_perimeter_matches_mollified_variation() {
    let eps = [0.08, 0.04, 0.02, 0.01];
    for (d, r) in [(1, 1.0), (2, PI / 3.0), (2, PI / 2.0), (3, 1.2)] {
        let cap = Cap::polar(d, r).unwrap();
        let tv = mollified_variation(d, &cap, &eps).unwrap();
        let exact = cap_bv_variation(&cap);
        assert!((tv / exact - 1.0).abs() < 1e-2, "d={d} r={r}: {tv} vs {exact}");
    }
}
