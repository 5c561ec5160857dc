//! Exact sampler and the statistics computed on its output.

use std::f64::consts::PI;

use dpp_linstat::dpp_sampler::{
    conditional_intensity, empirical_moments, replicate, sample, sample_replica, Moments, PointConfiguration,
    RejectionStats, SamplerConfig,
};
use dpp_linstat::kernels::EnsembleKernel;
use dpp_linstat::sphere_geom::{cap_net, geodesic_distance, uniform_sample, Cap, ZonalFn};
use dpp_linstat::statistics::{cap_discrepancy, count_in, linear_statistic};
use dpp_linstat::Error;
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn kernel_strategy() -> impl Strategy<Value = EnsembleKernel> {
    prop_oneof![
        (0usize..12).prop_map(|l| EnsembleKernel::harmonic(1, l).unwrap()),
        (0usize..5).prop_map(|l| EnsembleKernel::harmonic(2, l).unwrap()),
        (0usize..3).prop_map(|l| EnsembleKernel::harmonic(3, l).unwrap()),
        (1usize..24).prop_map(|n| EnsembleKernel::spherical(n).unwrap()),
    ]
}

fn wrap(ensemble: EnsembleKernel, points: Vec<dpp_linstat::sphere_geom::SpherePoint>) -> PointConfiguration {
    PointConfiguration {
        points,
        ensemble,
        seed: 0,
        replica: 0,
        stats: RejectionStats::default(),
    }
}

/// Pearson statistic of `heights` in `bins` equal slices of [-1, 1] and its
/// upper-tail probability.
fn height_chi_square(heights: &[f64], bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    for &h in heights {
        let b = (((h + 1.0) / 2.0) * bins as f64).floor() as usize;
        counts[b.min(bins - 1)] += 1;
    }
    let e = heights.len() as f64 / bins as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(stat)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cardinality_and_determinism(k in kernel_strategy(), seed in any::<u64>()) {
        let a = sample(&k, seed).unwrap();
        prop_assert_eq!(a.len() as u64, k.rank().unwrap());
        prop_assert_eq!(a.stats.accepted, a.len());
        prop_assert_eq!(&a, &sample(&k, seed).unwrap());
        for i in 0..a.len() {
            for j in 0..i {
                prop_assert!(geodesic_distance(&a.points[i], &a.points[j]).unwrap() > 0.0);
            }
        }
        if a.len() > 0 {
            let b = sample_replica(&k, seed, 1, &SamplerConfig::default()).unwrap();
            prop_assert_ne!(a.points, b.points);
        }
    }

    #[test]
    fn counts_split_over_complements(r in 0.01f64..3.13, seed in 0u64..500, which in 0usize..3) {
        let k = [
            EnsembleKernel::harmonic(1, 9).unwrap(),
            EnsembleKernel::harmonic(2, 4).unwrap(),
            EnsembleKernel::spherical(15).unwrap(),
        ][which];
        let cfg = sample(&k, seed).unwrap();
        let d = cfg.dim();
        let center = uniform_sample(d, 1, seed ^ 0xabc).pop().unwrap();
        let cap = Cap::new(center, r).unwrap();
        prop_assert_eq!(count_in(&cfg, &cap) + count_in(&cfg, &cap.complement()), cfg.len());
        // a cap through a sampled point still splits exactly
        let through = Cap::new(cfg.points[0].clone(), r).unwrap();
        let moved = Cap::new(cfg.points[1].clone(), geodesic_distance(&cfg.points[0], &cfg.points[1]).unwrap().max(1e-6)).unwrap();
        prop_assert_eq!(count_in(&cfg, &through) + count_in(&cfg, &through.complement()), cfg.len());
        prop_assert_eq!(count_in(&cfg, &moved) + count_in(&cfg, &moved.complement()), cfg.len());
    }

    #[test]
    fn linear_statistic_is_additive(seed in 0u64..500, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let cfg = sample(&EnsembleKernel::harmonic(2, 5).unwrap(), seed).unwrap();
        let f = ZonalFn::cos_theta().scaled(a);
        let g = ZonalFn::new("exp", f64::exp, f64::exp).scaled(b);
        let lhs = linear_statistic(&cfg, &f.sum(&g));
        let rhs = linear_statistic(&cfg, &f) + linear_statistic(&cfg, &g);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn discrepancy_grows_with_the_net(seed in 0u64..500, keep in 1usize..200, stride in 1usize..7) {
        let cfg = sample(&EnsembleKernel::harmonic(2, 4).unwrap(), seed).unwrap();
        let net = cap_net(2, 10).unwrap();
        let sub: Vec<Cap> = net.iter().step_by(stride).take(keep).cloned().collect();
        let full = cap_discrepancy(&cfg, &net).unwrap();
        let part = cap_discrepancy(&cfg, &sub).unwrap();
        prop_assert!(part.sup_discrepancy <= full.sup_discrepancy);
    }
}

#[test]
fn rank_zero_sample_is_a_uniform_point() {
    let k = EnsembleKernel::harmonic(2, 0).unwrap();
    let h = replicate(&k, |c| c.points[0].height(), 4000, 3).unwrap();
    // Archimedes: the height of a uniform point on S^2 is uniform on [-1, 1]
    let p = height_chi_square(&h, 20);
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn first_intensity_is_flat() {
    let k = EnsembleKernel::harmonic(2, 4).unwrap();
    let mut heights = Vec::new();
    for r in 0..120 {
        let c = sample_replica(&k, 21, r, &SamplerConfig::default()).unwrap();
        heights.extend(c.points.iter().map(|x| x.height()));
    }
    let p = height_chi_square(&heights, 15);
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn hemisphere_count_has_half_the_points() {
    let hemi = Cap::polar(2, PI / 2.0).unwrap();
    let k = EnsembleKernel::harmonic(2, 8).unwrap();
    let m = empirical_moments(&k, |c| count_in(c, &hemi) as f64, 200, 5).unwrap();
    assert!((m.mean - 40.5).abs() < 3.0 * m.mean_standard_error, "{m:?}");
    let arc = Cap::polar(1, PI / 2.0).unwrap();
    let k = EnsembleKernel::harmonic(1, 16).unwrap();
    let m = empirical_moments(&k, |c| count_in(c, &arc) as f64, 400, 6).unwrap();
    assert!((m.mean - 16.5).abs() < 3.0 * m.mean_standard_error, "{m:?}");
    let k = EnsembleKernel::spherical(20).unwrap();
    let m = empirical_moments(&k, |c| count_in(c, &hemi) as f64, 200, 8).unwrap();
    assert!((m.mean - 10.0).abs() < 3.0 * m.mean_standard_error, "{m:?}");
}

#[test]
fn linear_statistic_mean_is_rank_times_average() {
    // ∫cos²θ dσ = 1/3 on S^2
    let k = EnsembleKernel::harmonic(2, 6).unwrap();
    let f = ZonalFn::new("cos2", |t| t * t, |t| 2.0 * t);
    let m = empirical_moments(&k, |c| linear_statistic(c, &f), 150, 9).unwrap();
    assert!((m.mean - 49.0 / 3.0).abs() < 3.5 * m.mean_standard_error, "{m:?}");
}

#[test]
fn samples_repel() {
    let k = EnsembleKernel::harmonic(2, 8).unwrap();
    let n = k.rank().unwrap() as usize;
    let nearest = |pts: &[dpp_linstat::sphere_geom::SpherePoint]| -> Vec<f64> {
        (0..pts.len())
            .map(|i| {
                (0..pts.len())
                    .filter(|&j| j != i)
                    .map(|j| geodesic_distance(&pts[i], &pts[j]).unwrap())
                    .fold(f64::INFINITY, f64::min)
            })
            .collect()
    };
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let mut dpp = Vec::new();
    let mut iid = Vec::new();
    for r in 0..20u64 {
        dpp.extend(nearest(&sample_replica(&k, 4, r, &SamplerConfig::default()).unwrap().points));
        iid.extend(nearest(&uniform_sample(2, n, 1000 + r)));
    }
    let (a, b) = (median(dpp), median(iid));
    assert!(a > 1.3 * b, "dpp {a} vs iid {b}");
}

#[test]
fn iid_discrepancy_baseline() {
    let cfg = wrap(EnsembleKernel::harmonic(2, 0).unwrap(), uniform_sample(2, 4096, 12));
    let rep = cap_discrepancy(&cfg, &cap_net(2, 16).unwrap()).unwrap();
    assert!(rep.sup_discrepancy < 0.05, "{rep:?}");
    assert!(cap_discrepancy(&cfg, &[]).is_err());
    let wrong = cap_net(1, 4).unwrap();
    assert!(matches!(cap_discrepancy(&cfg, &wrong), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn conditional_intensity_examples() {
    let k = EnsembleKernel::harmonic(2, 3).unwrap();
    let pts = uniform_sample(2, 5, 2);
    assert!((conditional_intensity(&k, &[], &pts[0]).unwrap() - 16.0).abs() < 1e-12);
    assert!(conditional_intensity(&k, &pts[..3], &pts[1]).unwrap() < 1e-8);
    let c = conditional_intensity(&k, &pts[..3], &pts[4]).unwrap();
    assert!(c > 0.0 && c < 16.0);
    assert!(sample(&EnsembleKernel::ginibre(2.0).unwrap(), 1).is_err());
}

#[test]
fn moments_of_fixed_data() {
    let m = Moments::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(m.mean, 2.5);
    assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
    assert!(Moments::from_samples(&[1.0]).is_err());
    let k = EnsembleKernel::harmonic(1, 3).unwrap();
    let c = empirical_moments(&k, |c| c.len() as f64, 10, 1).unwrap();
    assert_eq!((c.mean, c.variance), (7.0, 0.0));
    assert!(empirical_moments(&k, |c| c.len() as f64, 1, 1).is_err());
}

#[test]
fn budget_exhaustion_is_reported() {
    let k = EnsembleKernel::harmonic(2, 6).unwrap();
    let cfg = SamplerConfig {
        budget: 10,
        ..SamplerConfig::default()
    };
    assert!(matches!(sample_replica(&k, 1, 0, &cfg), Err(Error::RejectionBudget { .. })));
}
