//! Exact sampling of finite-rank projection DPPs on spheres by sequential
//! conditioning: point i+1 has density proportional to the Schur
//! complement K(x,x) - k_xᵀ G⁻¹ k_x, drawn by rejection from the uniform
//! law with envelope K(x,x) = rank.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{Domain, EnsembleKernel};
use crate::par;
use crate::specfun::jacobi_unchecked;
use crate::sphere_geom::{uniform_point, SpherePoint};

/// Default proposal budget per sample.
pub const DEFAULT_BUDGET: u64 = 10_000_000;
/// Diagonal jitter tolerated when factorizing a Gram matrix.
pub const JITTER: f64 = 1e-10;
/// Proposals closer than this (geodesic) to a chosen point are rejected.
pub const MIN_SEPARATION: f64 = 1e-9;

/// Counters of one sampling run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RejectionStats {
    pub proposals: u64,
    pub accepted: usize,
    /// Proposals rejected by the separation guard.
    pub too_close: u64,
}

/// One exact sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointConfiguration {
    pub points: Vec<SpherePoint>,
    pub ensemble: EnsembleKernel,
    pub seed: u64,
    pub replica: u64,
    pub stats: RejectionStats,
}

impl PointConfiguration {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.ensemble.domain().dim()
    }
}

/// Minimal field interface for the Cholesky recursion.
trait Field: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Send + Sync {
    fn conj(self) -> Self;
    fn norm_sqr(self) -> f64;
    fn from_f64(x: f64) -> Self;
    fn scale(self, s: f64) -> Self;
}

impl Field for f64 {
    fn conj(self) -> Self {
        self
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

impl Field for Complex64 {
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
    fn from_f64(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Kernel evaluation in the form the sampler needs.
trait SamplerKernel: Sync {
    type F: Field;
    type Feature: Clone + Send + Sync;
    fn feature(&self, x: &SpherePoint) -> Self::Feature;
    fn eval(&self, x: &Self::Feature, y: &Self::Feature) -> Self::F;
    fn diag(&self) -> f64;
}

struct HarmonicSampler {
    a: f64,
    l: usize,
    scale: f64,
    diag: f64,
}

impl SamplerKernel for HarmonicSampler {
    type F = f64;
    type Feature = Vec<f64>;
    fn feature(&self, x: &SpherePoint) -> Vec<f64> {
        x.coords().to_vec()
    }
    fn eval(&self, x: &Vec<f64>, y: &Vec<f64>) -> f64 {
        if x.len() == 2 {
            // circle: Dirichlet kernel in closed form, O(1) instead of O(L)
            let t = (x[0] * y[1] - x[1] * y[0]).atan2(x[0] * y[0] + x[1] * y[1]);
            let h = (0.5 * t).sin();
            let m = 2 * self.l + 1;
            return if h.abs() < 1e-8 {
                self.diag
            } else {
                (0.5 * m as f64 * t).sin() / h
            };
        }
        let c: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        self.scale * jacobi_unchecked(self.a, self.a - 1.0, self.l, c.clamp(-1.0, 1.0))
    }
    fn diag(&self) -> f64 {
        self.diag
    }
}

/// Spherical ensemble kernel N (u_x · ū_y)^{N-1} with a spinor u(x) whose
/// ratio u₁/u₂ is the stereographic coordinate of x.
struct SphericalSampler {
    n: usize,
}

/// Unit spinor of x ∈ S²; the gauge switches hemispheres to stay away from
/// the singular pole of each formula.
pub fn spinor(x: &SpherePoint) -> [Complex64; 2] {
    let c = x.coords();
    let (x1, x2, x3) = (c[0], c[1], c[2]);
    if x3 <= 0.0 {
        let s = (2.0 * (1.0 - x3)).sqrt();
        [Complex64::new(x1 / s, x2 / s), Complex64::new((1.0 - x3) / s, 0.0)]
    } else {
        let s = (2.0 * (1.0 + x3)).sqrt();
        [Complex64::new((1.0 + x3) / s, 0.0), Complex64::new(x1 / s, -x2 / s)]
    }
}

impl SamplerKernel for SphericalSampler {
    type F = Complex64;
    type Feature = [Complex64; 2];
    fn feature(&self, x: &SpherePoint) -> [Complex64; 2] {
        spinor(x)
    }
    fn eval(&self, x: &[Complex64; 2], y: &[Complex64; 2]) -> Complex64 {
        let z = x[0] * y[0].conj() + x[1] * y[1].conj();
        z.powu(self.n as u32 - 1) * self.n as f64
    }
    fn diag(&self) -> f64 {
        self.n as f64
    }
}

/// Complex kernel value used by the sampler (gauge-dependent phase,
/// |value| equals the distance profile).
pub fn spherical_kernel_complex(n: usize, x: &SpherePoint, y: &SpherePoint) -> Complex64 {
    let s = SphericalSampler { n };
    s.eval(&spinor(x), &spinor(y))
}

/// Packed lower-triangular Cholesky factor grown one row at a time.
struct Chol<F: Field> {
    rows: Vec<F>,
    n: usize,
}

impl<F: Field> Chol<F> {
    fn new() -> Self {
        Chol { rows: Vec::new(), n: 0 }
    }

    fn row(&self, i: usize) -> &[F] {
        let s = i * (i + 1) / 2;
        &self.rows[s..s + i + 1]
    }

    /// Forward solve L v = k for v (k given lazily), stopping once
    /// diag - |v|² drops to `floor`. Returns the Schur complement and v,
    /// or None on early stop.
    fn schur<G: Fn(usize) -> F>(&self, kx: G, diag: f64, floor: f64, v: &mut Vec<F>) -> Option<f64> {
        v.clear();
        let mut acc = 0.0;
        for i in 0..self.n {
            let r = self.row(i);
            let mut s = kx(i);
            for j in 0..i {
                s = s - r[j] * v[j];
            }
            let vi = s.scale(1.0 / r[i].norm_sqr().sqrt());
            acc += vi.norm_sqr();
            v.push(vi);
            if diag - acc <= floor {
                return None;
            }
        }
        Some(diag - acc)
    }

    fn push(&mut self, v: &[F], pivot: f64) {
        // L_{n,j} = conj(v_j) so that L Lᴴ reproduces G
        self.rows.extend(v.iter().map(|x| x.conj()));
        self.rows.push(F::from_f64(pivot.sqrt()));
        self.n += 1;
    }
}

fn check_sphere_kernel(k: &EnsembleKernel) -> Result<usize> {
    match (k.domain(), k.rank()) {
        (Domain::Sphere(d), Some(_)) => Ok(d),
        _ => Err(Error::Domain(format!("{k} is not a finite-rank sphere kernel"))),
    }
}

fn conditional_generic<S: SamplerKernel>(s: &S, chosen: &[SpherePoint], x: &SpherePoint) -> Result<f64> {
    let feats: Vec<S::Feature> = chosen.iter().map(|p| s.feature(p)).collect();
    let mut ch: Chol<S::F> = Chol::new();
    let mut v = Vec::new();
    for fi in &feats {
        // Gram row against the earlier points: k_j = K(x_j, x_i)
        let piv = ch
            .schur(|j| s.eval(&feats[j], fi), s.diag(), f64::NEG_INFINITY, &mut v)
            .unwrap_or(0.0);
        if piv <= 0.0 {
            return Err(Error::SingularGram { pivot: piv });
        }
        ch.push(&v, piv);
    }
    let fx = s.feature(x);
    let c = ch
        .schur(|j| s.eval(&feats[j], &fx), s.diag(), f64::NEG_INFINITY, &mut v)
        .unwrap_or(0.0);
    if c < -1e-8 {
        return Err(Error::Inconsistency {
            a: c,
            b: 0.0,
            gap: -c,
        });
    }
    Ok(c.max(0.0))
}

/// K(x,x) - k_xᵀ G⁻¹ k_x for the chosen points.
pub fn conditional_intensity(k: &EnsembleKernel, chosen: &[SpherePoint], x: &SpherePoint) -> Result<f64> {
    let d = check_sphere_kernel(k)?;
    for p in chosen.iter().chain(std::iter::once(x)) {
        if p.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
        }
    }
    match *k {
        EnsembleKernel::Harmonic { d, l, scale, rank } => conditional_generic(
            &HarmonicSampler {
                a: 0.5 * d as f64,
                l,
                scale,
                diag: rank as f64,
            },
            chosen,
            x,
        ),
        EnsembleKernel::Spherical { n } => conditional_generic(&SphericalSampler { n }, chosen, x),
        _ => unreachable!("checked above"),
    }
}

/// Sampler knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplerConfig {
    pub budget: u64,
    pub min_separation: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            budget: DEFAULT_BUDGET,
            min_separation: MIN_SEPARATION,
        }
    }
}

fn sample_generic<S: SamplerKernel, R: Rng + ?Sized>(
    s: &S,
    d: usize,
    rank: usize,
    rng: &mut R,
    cfg: &SamplerConfig,
) -> Result<(Vec<SpherePoint>, RejectionStats)> {
    let mut stats = RejectionStats::default();
    let mut pts: Vec<SpherePoint> = Vec::with_capacity(rank);
    let mut feats: Vec<S::Feature> = Vec::with_capacity(rank);
    let mut ch: Chol<S::F> = Chol::new();
    let mut v = Vec::with_capacity(rank);
    let cos_sep = cfg.min_separation.cos();
    let diag = s.diag();
    while pts.len() < rank {
        if stats.proposals >= cfg.budget {
            return Err(Error::RejectionBudget {
                proposals: stats.proposals,
                accepted: pts.len(),
            });
        }
        stats.proposals += 1;
        let x = uniform_point(d, rng);
        let u: f64 = rng.gen();
        if pts.iter().any(|p| p.dot(&x) >= cos_sep) {
            stats.too_close += 1;
            continue;
        }
        let fx = s.feature(&x);
        // accept iff Schur complement > u·rank; stop the solve once that fails
        let floor = u * diag;
        if let Some(c) = ch.schur(|j| s.eval(&feats[j], &fx), diag, floor, &mut v) {
            if c <= JITTER {
                continue;
            }
            ch.push(&v, c);
            pts.push(x);
            feats.push(fx);
            stats.accepted += 1;
        }
    }
    Ok((pts, stats))
}

/// Draw one configuration with a caller-supplied generator.
pub fn sample_with_rng<R: Rng + ?Sized>(
    k: &EnsembleKernel,
    rng: &mut R,
    cfg: &SamplerConfig,
) -> Result<(Vec<SpherePoint>, RejectionStats)> {
    let d = check_sphere_kernel(k)?;
    let rank = k.rank().unwrap() as usize;
    match *k {
        EnsembleKernel::Harmonic { d, l, scale, rank } => sample_generic(
            &HarmonicSampler {
                a: 0.5 * d as f64,
                l,
                scale,
                diag: rank as f64,
            },
            d,
            rank as usize,
            rng,
            cfg,
        ),
        EnsembleKernel::Spherical { n } => sample_generic(&SphericalSampler { n }, d, rank, rng, cfg),
        _ => unreachable!("checked above"),
    }
}

/// Generator of replica `replica` under `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Exact sample, deterministic in `seed` (replica 0).
pub fn sample(k: &EnsembleKernel, seed: u64) -> Result<PointConfiguration> {
    sample_replica(k, seed, 0, &SamplerConfig::default())
}

/// Exact sample for replica `replica` of `seed`.
pub fn sample_replica(k: &EnsembleKernel, seed: u64, replica: u64, cfg: &SamplerConfig) -> Result<PointConfiguration> {
    let mut rng = replica_rng(seed, replica);
    let (points, stats) = sample_with_rng(k, &mut rng, cfg)?;
    Ok(PointConfiguration {
        points,
        ensemble: *k,
        seed,
        replica,
        stats,
    })
}

/// Monte Carlo mean and variance of a statistic.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Moments {
    pub replicas: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
    /// Standard error of `variance` from the fourth central moment.
    pub standard_error: f64,
    /// Standard error of `mean`.
    pub mean_standard_error: f64,
}

impl Moments {
    pub fn from_samples(xs: &[f64]) -> Result<Moments> {
        let n = xs.len();
        if n < 2 {
            return Err(Error::Domain("need at least two replicas".into()));
        }
        let nf = n as f64;
        let mean = par::pairwise_sum(xs) / nf;
        let c2: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
        let c4: Vec<f64> = c2.iter().map(|x| x * x).collect();
        let m2 = par::pairwise_sum(&c2) / nf;
        let m4 = par::pairwise_sum(&c4) / nf;
        let variance = m2 * nf / (nf - 1.0);
        let se2 = (m4 - (nf - 3.0) / (nf - 1.0) * variance * variance) / nf;
        Ok(Moments {
            replicas: n,
            mean,
            variance,
            standard_error: se2.max(0.0).sqrt(),
            mean_standard_error: (variance / nf).sqrt(),
        })
    }
}

/// Run `replicas` independent samples (streams 0..replicas of `seed`) and
/// return the statistic values in replica order.
pub fn replicate<F>(k: &EnsembleKernel, statistic: F, replicas: usize, seed: u64) -> Result<Vec<f64>>
where
    F: Fn(&PointConfiguration) -> f64 + Sync + Send,
{
    let cfg = SamplerConfig::default();
    par::try_map_range(replicas, |i| {
        let c = sample_replica(k, seed, i as u64, &cfg)?;
        Ok(statistic(&c))
    })
}

/// Mean, variance and standard errors of a statistic over replicas.
pub fn empirical_moments<F>(k: &EnsembleKernel, statistic: F, replicas: usize, seed: u64) -> Result<Moments>
where
    F: Fn(&PointConfiguration) -> f64 + Sync + Send,
{
    if replicas < 2 {
        return Err(Error::Domain("need at least two replicas".into()));
    }
    Moments::from_samples(&replicate(k, statistic, replicas, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn conditional_examples() {
        let k = EnsembleKernel::harmonic(1, 1).unwrap();
        let x0 = SpherePoint::on_circle(0.0);
        let xpi = SpherePoint::on_circle(PI);
        assert!((conditional_intensity(&k, &[], &xpi).unwrap() - 3.0).abs() < 1e-12);
        let c = conditional_intensity(&k, &[x0.clone()], &xpi).unwrap();
        assert!((c - 8.0 / 3.0).abs() < 1e-12);
        assert!(conditional_intensity(&k, &[x0.clone()], &x0).unwrap() < 1e-8);
    }

    #[test]
    fn spinor_kernel_modulus() {
        let x = SpherePoint::new(vec![0.3, -0.4, 0.866]).unwrap();
        let y = SpherePoint::new(vec![-0.5, 0.1, -0.7]).unwrap();
        let k = EnsembleKernel::spherical(5).unwrap();
        let t = x.dot(&y).acos();
        assert!((spherical_kernel_complex(5, &x, &y).norm() - k.profile(t)).abs() < 1e-12);
    }

    #[test]
    fn circle_closed_form_matches_profile() {
        let k = EnsembleKernel::harmonic(1, 7).unwrap();
        let EnsembleKernel::Harmonic { l, scale, rank, .. } = k else { unreachable!() };
        let s = HarmonicSampler { a: 0.5, l, scale, diag: rank as f64 };
        let x = SpherePoint::on_circle(0.3);
        for t in [0.0, 1e-9, 0.4, 2.0, PI, 5.5] {
            let y = SpherePoint::on_circle(0.3 + t);
            let a = s.eval(&s.feature(&x), &s.feature(&y));
            assert!((a - k.profile(t)).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn cardinality_and_determinism() {
        let k = EnsembleKernel::harmonic(2, 3).unwrap();
        let a = sample(&k, 11).unwrap();
        let b = sample(&k, 11).unwrap();
        assert_eq!(a.len(), 16);
        assert_eq!(a, b);
    }
}
