//! The harmonic, spherical, Bessel and Ginibre kernels.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrate::{self, Panels};
use crate::quadrature::{self, QuadratureSpec};
use crate::specfun::{bessel_unchecked, binom_real, jacobi_unchecked, ln_gamma_pos, DEFAULT_MAX_DEGREE};
use crate::sphere_geom::{omega, SpherePoint};

/// Below this value of Lπt the Bessel kernel uses its Taylor expansion.
const BESSEL_SERIES_SWITCH: f64 = 1e-4;

/// A point in R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct EuclidPoint {
    pub coords: Vec<f64>,
}

impl EuclidPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        EuclidPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn distance(&self, other: &EuclidPoint) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

/// Where a kernel lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Domain {
    Sphere(usize),
    Euclid(usize),
}

impl Domain {
    pub fn dim(self) -> usize {
        match self {
            Domain::Sphere(d) | Domain::Euclid(d) => d,
        }
    }
}

/// One of the four kernels, with normalization constants cached at
/// construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EnsembleKernel {
    /// Projection onto polynomials of degree ≤ L on S^d.
    Harmonic { d: usize, l: usize, rank: u64, scale: f64 },
    /// Spherical ensemble with N points on S^2 (modulus only).
    Spherical { n: usize },
    /// Paley–Wiener kernel on R^d with intensity L^d.
    Bessel { d: usize, l: f64, scale: f64 },
    /// Infinite Ginibre process with intensity L/π (modulus only).
    Ginibre { l: f64 },
}

impl EnsembleKernel {
    pub fn harmonic(d: usize, l: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Domain("harmonic kernel needs d >= 1".into()));
        }
        if l > DEFAULT_MAX_DEGREE {
            return Err(Error::Overflow(format!("degree {l} exceeds maximum {DEFAULT_MAX_DEGREE}")));
        }
        let rank = pi_l(d, l)?;
        let scale = rank as f64 / binom_real(0.5 * d as f64, l);
        Ok(EnsembleKernel::Harmonic { d, l, rank, scale })
    }

    pub fn spherical(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("spherical ensemble needs N >= 1".into()));
        }
        Ok(EnsembleKernel::Spherical { n })
    }

    pub fn bessel(d: usize, l: f64) -> Result<Self> {
        if d == 0 || !(l > 0.0) || !l.is_finite() {
            return Err(Error::Domain(format!("Bessel kernel needs d >= 1 and L > 0, got ({d}, {l})")));
        }
        let h = 0.5 * d as f64;
        let scale = (h * 2f64.ln() + ln_gamma_pos(h + 1.0) + h * l.ln()).exp();
        Ok(EnsembleKernel::Bessel { d, l, scale })
    }

    pub fn ginibre(l: f64) -> Result<Self> {
        if !(l > 0.0) || !l.is_finite() {
            return Err(Error::Domain(format!("Ginibre kernel needs L > 0, got {l}")));
        }
        Ok(EnsembleKernel::Ginibre { l })
    }

    pub fn domain(&self) -> Domain {
        match *self {
            EnsembleKernel::Harmonic { d, .. } => Domain::Sphere(d),
            EnsembleKernel::Spherical { .. } => Domain::Sphere(2),
            EnsembleKernel::Bessel { d, .. } => Domain::Euclid(d),
            EnsembleKernel::Ginibre { .. } => Domain::Euclid(2),
        }
    }

    /// Number of points for the finite (projection) ensembles.
    pub fn rank(&self) -> Option<u64> {
        match *self {
            EnsembleKernel::Harmonic { rank, .. } => Some(rank),
            EnsembleKernel::Spherical { n } => Some(n as u64),
            _ => None,
        }
    }

    /// The scale parameter (L or N) as a real number.
    pub fn scale_param(&self) -> f64 {
        match *self {
            EnsembleKernel::Harmonic { l, .. } => l as f64,
            EnsembleKernel::Spherical { n } => n as f64,
            EnsembleKernel::Bessel { l, .. } => l,
            EnsembleKernel::Ginibre { l } => l,
        }
    }

    /// K(x, x).
    pub fn diagonal(&self) -> f64 {
        match *self {
            EnsembleKernel::Harmonic { rank, .. } => rank as f64,
            EnsembleKernel::Spherical { n } => n as f64,
            EnsembleKernel::Bessel { d, l, .. } => l.powi(d as i32),
            EnsembleKernel::Ginibre { l } => l / PI,
        }
    }

    /// Kernel as a function of the distance t (geodesic on S^d, Euclidean
    /// on R^d). Harmonic and Bessel are real and signed; spherical and
    /// Ginibre return the modulus.
    pub fn profile(&self, t: f64) -> f64 {
        match *self {
            EnsembleKernel::Harmonic { d, l, scale, .. } => {
                let a = 0.5 * d as f64;
                scale * jacobi_unchecked(a, a - 1.0, l, t.cos().clamp(-1.0, 1.0))
            }
            EnsembleKernel::Spherical { n } => n as f64 * (0.5 * t).cos().abs().powi(n as i32 - 1),
            EnsembleKernel::Bessel { d, l, scale } => {
                let z = l * PI * t.abs();
                let h = 0.5 * d as f64;
                if z < BESSEL_SERIES_SWITCH {
                    l.powi(d as i32) * (1.0 - 0.25 * z * z / (h + 1.0))
                } else {
                    scale * bessel_unchecked(h, z) / (PI * t.abs()).powf(h)
                }
            }
            EnsembleKernel::Ginibre { l } => l / PI * (-0.5 * l * t * t).exp(),
        }
    }

    /// |K|² as a function of the distance.
    pub fn second_intensity(&self, t: f64) -> f64 {
        match *self {
            EnsembleKernel::Spherical { n } => {
                // N² (1 - |x-y|²/4)^{N-1} with |x-y| = 2 sin(t/2)
                let c2 = (0.5 * t).cos().powi(2);
                let nf = n as f64;
                if n == 1 {
                    1.0
                } else if c2 <= 0.0 {
                    0.0
                } else {
                    nf * nf * ((nf - 1.0) * c2.ln()).exp()
                }
            }
            EnsembleKernel::Ginibre { l } => (l / PI).powi(2) * (-l * t * t).exp(),
            _ => {
                let k = self.profile(t);
                k * k
            }
        }
    }

    /// A length below which |K|² changes appreciably: a quarter oscillation
    /// period for the oscillating kernels, a quarter of the Gaussian width
    /// otherwise.
    pub fn panel_width(&self) -> f64 {
        match *self {
            EnsembleKernel::Harmonic { d, l, .. } => {
                (0.5 * PI / (2.0 * l as f64 + d as f64)).min(PI / 16.0)
            }
            EnsembleKernel::Spherical { n } => (0.25 / (n as f64).sqrt()).min(PI / 16.0),
            EnsembleKernel::Bessel { l, .. } => 0.25 / l,
            EnsembleKernel::Ginibre { l } => 0.25 / l.sqrt(),
        }
    }

    /// K(x, y) for sphere kernels (modulus for the spherical ensemble).
    pub fn eval_sphere(&self, x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
        let Domain::Sphere(d) = self.domain() else {
            return Err(Error::Domain("kernel lives on R^d, got sphere points".into()));
        };
        for p in [x, y] {
            if p.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
            }
        }
        if x == y {
            return Ok(self.diagonal());
        }
        let c = x.dot(y).clamp(-1.0, 1.0);
        Ok(match *self {
            EnsembleKernel::Harmonic { d, l, scale, .. } => {
                let a = 0.5 * d as f64;
                scale * jacobi_unchecked(a, a - 1.0, l, c)
            }
            _ => self.profile(c.acos()),
        })
    }

    /// K(x, y) for Euclidean kernels (modulus for Ginibre).
    pub fn eval_euclid(&self, x: &EuclidPoint, y: &EuclidPoint) -> Result<f64> {
        let Domain::Euclid(d) = self.domain() else {
            return Err(Error::Domain("kernel lives on S^d, got Euclidean points".into()));
        };
        for p in [x, y] {
            if p.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: p.dim() });
            }
        }
        Ok(self.profile(x.distance(y)))
    }

    /// ∫_{|x|>T} |K|²(|x|) dx for the Euclidean kernels.
    pub(crate) fn radial_tail(&self, t0: f64) -> f64 {
        match *self {
            EnsembleKernel::Ginibre { l } => l / PI * (-l * t0 * t0).exp(),
            EnsembleKernel::Bessel { d: 1, l, .. } => {
                // 2 ∫_T^∞ sin²(πLt)/(π²t²) dt
                let w = 2.0 * PI * l;
                let s = crate::specfun::si_tail(w * t0);
                let cos_part = (w * t0).cos() / t0 - w * s;
                2.0 / (PI * PI) * (0.5 / t0 - 0.5 * cos_part)
            }
            EnsembleKernel::Bessel { d, l, scale } => {
                // Hankel envelope with cos² replaced by its mean 1/2
                omega(d - 1) * scale * scale / (PI.powi(d as i32 + 2) * l * t0)
            }
            _ => 0.0,
        }
    }

    /// Largest t at which the numeric part of a radial integral must stop
    /// for [`Self::radial_tail`] to be accurate.
    pub(crate) fn tail_start(&self) -> f64 {
        match *self {
            EnsembleKernel::Bessel { d: 1, l, .. } => 32.0 / l,
            EnsembleKernel::Bessel { l, .. } => 4096.0 / l,
            EnsembleKernel::Ginibre { l } => 10.0 / l.sqrt(),
            _ => 0.0,
        }
    }
}

impl fmt::Display for EnsembleKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            EnsembleKernel::Harmonic { d, l, .. } => write!(f, "harmonic(d={d},L={l})"),
            EnsembleKernel::Spherical { n } => write!(f, "spherical(N={n})"),
            EnsembleKernel::Bessel { d, l, .. } => write!(f, "bessel(d={d},L={l})"),
            EnsembleKernel::Ginibre { l } => write!(f, "ginibre(L={l})"),
        }
    }
}

/// A point of either domain, for [`eval_kernel`].
#[derive(Debug, Clone, Copy)]
pub enum Point<'a> {
    Sphere(&'a SpherePoint),
    Euclid(&'a EuclidPoint),
}

/// K(x, y); modulus for the spherical and Ginibre kernels.
pub fn eval_kernel(k: &EnsembleKernel, x: Point<'_>, y: Point<'_>) -> Result<f64> {
    match (x, y) {
        (Point::Sphere(x), Point::Sphere(y)) => k.eval_sphere(x, y),
        (Point::Euclid(x), Point::Euclid(y)) => k.eval_euclid(x, y),
        _ => Err(Error::Domain("points from different domains".into())),
    }
}

/// |K|² as a function of the distance t.
pub fn second_intensity(k: &EnsembleKernel, t: f64) -> f64 {
    k.second_intensity(t)
}

/// Dimension of the space of polynomials of degree ≤ L on S^d:
/// (2L+d)/d · C(d+L-1, L), in exact integer arithmetic.
pub fn pi_l(d: usize, l: usize) -> Result<u64> {
    if d == 0 {
        return Err(Error::Domain("pi_L needs d >= 1".into()));
    }
    if l > DEFAULT_MAX_DEGREE {
        return Err(Error::Overflow(format!("degree {l} exceeds maximum {DEFAULT_MAX_DEGREE}")));
    }
    let overflow = || Error::Overflow(format!("pi_L(d={d}, L={l}) does not fit in 64 bits"));
    // C(d+L-1, L) = Π_{i=1}^{L} (d-1+i)/i, exact at every step
    let mut b: u128 = 1;
    for i in 1..=l as u128 {
        b = b.checked_mul(d as u128 - 1 + i).ok_or_else(overflow)? / i;
    }
    let num = b.checked_mul(2 * l as u128 + d as u128).ok_or_else(overflow)?;
    u64::try_from(num / d as u128).map_err(|_| overflow())
}

type RadialFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type ProfileFn = Arc<dyn Fn(f64) -> RadialFn + Send + Sync>;
type ScaleFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type KernelFn = Arc<dyn Fn(f64) -> EnsembleKernel + Send + Sync>;

#[derive(Clone)]
enum Normalization {
    /// Computed so that ∫_{S^d} ρ dσ = 1.
    SphereMass,
    /// ∫_{R^d} of the raw profile.
    EuclidMass,
    /// c · L^{d-1} log L with c from the logarithmic growth of the local mass.
    LogGrowth(f64),
}

/// A one-parameter family of radial profiles ρ_L.
#[derive(Clone)]
pub struct MollifierFamily {
    pub domain: Domain,
    pub label: String,
    profile: ProfileFn,
    width: ScaleFn,
    normalization: Normalization,
    closed_form_normalizer: Option<ScaleFn>,
    support: Option<ScaleFn>,
    /// Kernel behind an induced Euclidean family, for analytic tails.
    kernel_at: Option<KernelFn>,
}

impl fmt::Debug for MollifierFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MollifierFamily")
            .field("domain", &self.domain)
            .field("label", &self.label)
            .finish()
    }
}

/// A member ρ_L of a [`MollifierFamily`].
#[derive(Clone)]
pub struct Mollifier {
    pub domain: Domain,
    pub scale: f64,
    pub normalizer: f64,
    /// Normalizer implied by the closed-form constant, when one exists.
    pub closed_form_normalizer: Option<f64>,
    pub width: f64,
    pub support: Option<f64>,
    /// Kernel with ρ = |K|²·t / normalizer, when the family is induced.
    pub kernel: Option<EnsembleKernel>,
    profile: RadialFn,
}

impl fmt::Debug for Mollifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mollifier")
            .field("domain", &self.domain)
            .field("scale", &self.scale)
            .field("normalizer", &self.normalizer)
            .finish()
    }
}

impl Mollifier {
    pub fn density(&self, t: f64) -> f64 {
        (self.profile)(t) / self.normalizer
    }

    /// ∫_{|x|>T} ρ(|x|)/|x| dx, analytic beyond [`Self::tail_start`].
    pub(crate) fn tail_over_t(&self, t0: f64) -> f64 {
        if self.support.is_some_and(|s| s <= t0) {
            return 0.0;
        }
        match &self.kernel {
            Some(k) => k.radial_tail(t0) / self.normalizer,
            None => 0.0,
        }
    }

    /// Where numeric radial integration may hand over to [`Self::tail_over_t`].
    pub(crate) fn tail_start(&self) -> f64 {
        match (&self.kernel, self.support) {
            (_, Some(s)) => s,
            (Some(k), None) => k.tail_start(),
            (None, None) => 40.0 * self.width,
        }
    }

    /// Same profile with a different normalizer (e.g. a closed-form one).
    pub fn renormalized(&self, normalizer: f64) -> Mollifier {
        Mollifier {
            normalizer,
            ..self.clone()
        }
    }
}

impl MollifierFamily {
    /// Family member at scale L (or N, or 1/ε for the bump).
    pub fn at(&self, scale: f64) -> Result<Mollifier> {
        let width = (self.width)(scale);
        let support = self.support.as_ref().map(|s| s(scale));
        let radial = (self.profile)(scale);
        let raw = |t: f64| radial(t);
        let normalizer = match &self.normalization {
            Normalization::SphereMass => {
                let d = self.domain.dim();
                let upper = support.unwrap_or(PI).min(PI);
                quadrature::zonal_integral_on(d, &raw, 0.0, upper, width, &QuadratureSpec::default())?
            }
            Normalization::EuclidMass => {
                let d = self.domain.dim();
                let f = |t: f64| raw(t) * omega(d - 1) * t.powi(d as i32 - 1);
                let upper = support.unwrap_or(40.0 * width);
                let p = Panels::new(&[0.0, upper], width, &[], 1e-7);
                integrate::adaptive(&f, &p, 12, 1e-12, 1e-300, 8)?.value
            }
            Normalization::LogGrowth(c) => {
                let d = self.domain.dim();
                c * scale.powi(d as i32 - 1) * scale.ln()
            }
        };
        if !(normalizer > 0.0) || !normalizer.is_finite() {
            return Err(Error::Degenerate(format!("mollifier normalizer {normalizer} at scale {scale}")));
        }
        Ok(Mollifier {
            domain: self.domain,
            scale,
            normalizer,
            closed_form_normalizer: self.closed_form_normalizer.as_ref().map(|f| f(scale)),
            width,
            support,
            kernel: self.kernel_at.as_ref().map(|k| k(scale)),
            profile: radial,
        })
    }

    /// Compact bump ρ_ε(t) ∝ (1 - t/ε)_+ on S^d; the scale is 1/ε.
    pub fn bump_sphere(d: usize) -> MollifierFamily {
        MollifierFamily {
            domain: Domain::Sphere(d),
            label: "bump".into(),
            profile: Arc::new(|s| Arc::new(move |t| (1.0 - t * s).max(0.0))),
            width: Arc::new(|s| 0.125 / s),
            normalization: Normalization::SphereMass,
            closed_form_normalizer: None,
            support: Some(Arc::new(|s| 1.0 / s)),
            kernel_at: None,
        }
    }

    /// Compact bump ρ_ε(t) ∝ (1 - t/ε)_+ on R^d; the scale is 1/ε.
    pub fn bump_euclid(d: usize) -> MollifierFamily {
        MollifierFamily {
            domain: Domain::Euclid(d),
            label: "bump".into(),
            profile: Arc::new(|s| Arc::new(move |t| (1.0 - t * s).max(0.0))),
            width: Arc::new(|s| 0.125 / s),
            normalization: Normalization::EuclidMass,
            closed_form_normalizer: None,
            support: Some(Arc::new(|s| 1.0 / s)),
            kernel_at: None,
        }
    }
}

/// The family ρ_L(t) = |K_L|²(t) t^α / normalizer induced by the kernel
/// type of `k` (its own scale is ignored; pick members with
/// [`MollifierFamily::at`]).
pub fn induced_mollifier(k: &EnsembleKernel, alpha: u32) -> Result<MollifierFamily> {
    if !(alpha == 1 || alpha == 2) {
        return Err(Error::Domain(format!("alpha must be 1 or 2, got {alpha}")));
    }
    let a = alpha as i32;
    match *k {
        EnsembleKernel::Harmonic { d, .. } => Ok(MollifierFamily {
            domain: Domain::Sphere(d),
            label: format!("harmonic-alpha{alpha}"),
            profile: Arc::new(move |s| {
                let k = EnsembleKernel::harmonic(d, s as usize).expect("valid degree");
                Arc::new(move |t| k.second_intensity(t) * t.powi(a))
            }),
            width: Arc::new(move |s| {
                EnsembleKernel::harmonic(d, s as usize).map(|k| k.panel_width()).unwrap_or(1e-3)
            }),
            normalization: Normalization::SphereMass,
            closed_form_normalizer: if alpha == 1 {
                Some(Arc::new(move |s| {
                    harmonic_b_closed_form(d) * s.powi(d as i32 - 1) * s.ln()
                }))
            } else {
                None
            },
            support: None,
            kernel_at: None,
        }),
        EnsembleKernel::Spherical { .. } => Ok(MollifierFamily {
            domain: Domain::Sphere(2),
            label: format!("spherical-alpha{alpha}"),
            profile: Arc::new(move |s| {
                let k = EnsembleKernel::Spherical { n: s as usize };
                Arc::new(move |t| k.second_intensity(t) * t.powi(a))
            }),
            width: Arc::new(|s| (0.25 / s.sqrt()).min(PI / 16.0)),
            normalization: Normalization::SphereMass,
            closed_form_normalizer: None,
            support: None,
            kernel_at: None,
        }),
        EnsembleKernel::Bessel { d, .. } => {
            if alpha != 1 {
                return Err(Error::Domain("the Bessel family is defined for alpha = 1".into()));
            }
            let c = bessel_log_coefficient(d)?;
            let b = bessel_b_closed_form(d);
            Ok(MollifierFamily {
                domain: Domain::Euclid(d),
                label: "bessel".into(),
                profile: Arc::new(move |s| {
                    let k = EnsembleKernel::bessel(d, s).expect("valid scale");
                    Arc::new(move |t| k.second_intensity(t) * t)
                }),
                width: Arc::new(|s| 0.25 / s),
                normalization: Normalization::LogGrowth(c),
                closed_form_normalizer: Some(Arc::new(move |s| s.powi(d as i32 - 1) * s.ln() / b)),
                support: None,
                kernel_at: Some(Arc::new(move |s| EnsembleKernel::bessel(d, s).expect("valid scale"))),
            })
        }
        EnsembleKernel::Ginibre { .. } => {
            if alpha != 1 {
                return Err(Error::Domain("the Ginibre family is defined for alpha = 1".into()));
            }
            Ok(MollifierFamily {
                domain: Domain::Euclid(2),
                label: "ginibre".into(),
                profile: Arc::new(|s| Arc::new(move |t| (s / PI).powi(2) * (-s * t * t).exp() * t)),
                width: Arc::new(|s| 0.25 / s.sqrt()),
                normalization: Normalization::EuclidMass,
                closed_form_normalizer: Some(Arc::new(|s| s.sqrt() / GINIBRE_C)),
                support: None,
                kernel_at: Some(Arc::new(|s| EnsembleKernel::Ginibre { l: s })),
            })
        }
    }
}

/// The constant C = π/Γ(3/2) = 2√π of the Ginibre family.
pub const GINIBRE_C: f64 = 3.544_907_701_811_032;

/// Closed form 2ω_{d-1}Γ(d/2+1)² / (π ω_d Γ(d+1)²) for the growth of
/// C_L = ∫ K_L² d dσ over L^{d-1} log L.
pub fn harmonic_b_closed_form(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    2.0 * omega(d - 1) * (2.0 * ln_gamma_pos(h + 1.0)).exp()
        / (PI * omega(d) * (2.0 * ln_gamma_pos(d as f64 + 1.0)).exp())
}

/// Closed form π^{d/2} / (2^{d-1} d² Γ(d/2)) of the Bessel family.
pub fn bessel_b_closed_form(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    (h * PI.ln() - ln_gamma_pos(h)).exp() / (2f64.powi(d as i32 - 1) * (d * d) as f64)
}

/// Growth rate c of ∫_{|x|<R} Ψ_L² |x| dx ≈ c L^{d-1} log L, measured as
/// ω_{d-1} ∫_U^{2U} Ψ_1(u)² u^d du / log 2 at U = 2^10.
pub fn bessel_log_coefficient(d: usize) -> Result<f64> {
    let k = EnsembleKernel::bessel(d, 1.0)?;
    let u0 = 1024.0;
    let f = |u: f64| k.second_intensity(u) * u.powi(d as i32);
    let p = Panels::new(&[u0, 2.0 * u0], 0.25, &[], 1e-7);
    Ok(omega(d - 1) * p.integrate(&f, 10) / 2f64.ln())
}

/// Szegő residual and Hörmander ratio of the harmonic kernel.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub d: usize,
    pub l: usize,
    /// max |P_L(cos θ) - L^{-1/2} k_d(θ) cos((L+d/2)θ - π(d+1)/4)| · L^{3/2} sin θ / k_d(θ),
    /// i.e. the O(1) factor of the error term of h_{d,L}
    pub szego_scaled_residual: f64,
    /// max |K_L(cos θ)| (1 + Lθ) / L^d
    pub hormander_ratio: f64,
    /// grid point where the scaled residual peaks
    pub worst_theta: f64,
}

/// k_d(θ) = (π^{-1} (sin θ/2)^{-(d+1)} (cos θ/2)^{-(d-1)})^{1/2}.
pub fn k_d(d: usize, theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    let c = (0.5 * theta).cos();
    (s.powi(-(d as i32 + 1)) * c.powi(-(d as i32 - 1)) / PI).sqrt()
}

/// Unscaled Szegő residual at a single angle.
pub fn szego_residual(d: usize, l: usize, theta: f64) -> f64 {
    let a = 0.5 * d as f64;
    let lf = l as f64;
    let p = jacobi_unchecked(a, a - 1.0, l, theta.cos());
    let approx = k_d(d, theta) * ((lf + a) * theta - 0.25 * PI * (d as f64 + 1.0)).cos() / lf.sqrt();
    (p - approx).abs()
}

/// Diagnostics over a θ grid inside (0, π).
pub fn kernel_asymptotic_diagnostics(d: usize, l: usize, grid: &[f64]) -> Result<AsymptoticReport> {
    if l == 0 {
        return Err(Error::Domain("diagnostics need L >= 1".into()));
    }
    let k = EnsembleKernel::harmonic(d, l)?;
    let lf = l as f64;
    let mut worst = 0.0;
    let mut worst_theta = f64::NAN;
    let mut horm: f64 = 0.0;
    for &th in grid {
        if !(th > 0.0 && th < PI) {
            return Err(Error::Domain(format!("grid point {th} outside (0, π)")));
        }
        let r = szego_residual(d, l, th) * lf.powf(1.5) * th.sin() / k_d(d, th);
        if r > worst {
            worst = r;
            worst_theta = th;
        }
        horm = horm.max(k.profile(th).abs() * (1.0 + lf * th) / lf.powi(d as i32));
    }
    Ok(AsymptoticReport {
        d,
        l,
        szego_scaled_residual: worst,
        hormander_ratio: horm,
        worst_theta,
    })
}

/// Uniform grid on [ε/L, π - ε/L].
pub fn diagnostic_grid(l: usize, eps: f64, n: usize) -> Vec<f64> {
    let a = eps / l as f64;
    let b = PI - a;
    (0..n).map(|i| a + (b - a) * i as f64 / (n as f64 - 1.0)).collect()
}
