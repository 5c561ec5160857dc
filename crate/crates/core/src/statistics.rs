//! Linear statistics, counts and discrepancy of sampled configurations, and
//! a Kolmogorov–Smirnov normality test.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dpp_sampler::PointConfiguration;
use crate::error::{Error, Result};
use crate::par;
use crate::sphere_geom::{cap_measure, Cap, ZonalFn};

/// Σ f(x_i) over the configuration.
pub fn linear_statistic(cfg: &PointConfiguration, f: &ZonalFn) -> f64 {
    let vals: Vec<f64> = cfg.points.iter().map(|x| f.eval(x)).collect();
    par::pairwise_sum(&vals)
}

/// Number of points in the cap; points on the boundary count as inside.
pub fn count_in(cfg: &PointConfiguration, cap: &Cap) -> usize {
    cfg.points.iter().filter(|x| cap.contains(x)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub n: usize,
    pub sup_discrepancy: f64,
    pub net_size: usize,
    /// sup · √(N / log N)
    pub scaled: f64,
}

/// sup over the net of |n_D / N − σ(D)|.
pub fn cap_discrepancy(cfg: &PointConfiguration, net: &[Cap]) -> Result<DiscrepancyReport> {
    if net.is_empty() {
        return Err(Error::Domain("cap net is empty".into()));
    }
    let n = cfg.len();
    if n == 0 {
        return Err(Error::Domain("configuration is empty".into()));
    }
    if let Some(c) = net.iter().find(|c| c.dim() != cfg.dim()) {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            got: c.dim(),
        });
    }
    let nf = n as f64;
    let gaps = par::map_slice(net, |c| (count_in(cfg, c) as f64 / nf - cap_measure(c)).abs());
    let sup = gaps.into_iter().fold(0.0, f64::max).min(1.0);
    let scaled = if n > 1 { sup * (nf / nf.ln()).sqrt() } else { f64::NAN };
    Ok(DiscrepancyReport {
        n,
        sup_discrepancy: sup,
        net_size: net.len(),
        scaled,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// One-sample KS test against the normal law with the sample's own mean and
/// variance; asymptotic p-value with the Stephens small-sample correction.
pub fn ks_normality(samples: &[f64]) -> Result<KsResult> {
    let n = samples.len();
    if n < 100 {
        return Err(Error::Domain(format!("KS test needs at least 100 samples, got {n}")));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("non-finite sample".into()));
    }
    let nf = n as f64;
    let mean = par::pairwise_sum(samples) / nf;
    let c2: Vec<f64> = samples.iter().map(|x| (x - mean).powi(2)).collect();
    let var = par::pairwise_sum(&c2) / (nf - 1.0);
    if !(var > 0.0) {
        return Err(Error::Degenerate("samples have zero variance".into()));
    }
    let normal = Normal::new(mean, var.sqrt()).map_err(|e| Error::Degenerate(e.to_string()))?;
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / nf).max((i + 1) as f64 / nf - f)
        })
        .fold(0.0, f64::max);
    let sn = nf.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_q(lambda),
    })
}

/// Q(λ) = 2 Σ_{k≥1} (−1)^{k−1} e^{−2k²λ²}, the Kolmogorov tail.
pub fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k * k) as f64 * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 * sum.abs() {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}
