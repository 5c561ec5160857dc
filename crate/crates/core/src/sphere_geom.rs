//! Points, caps and zonal functions on S^d.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::integrate;
use crate::specfun::ln_gamma_pos;

/// Tolerance used by [`Cap::contains`] for points on the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// A unit vector in R^{d+1}.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Normalizes `coords`; fails on the zero vector.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::Domain("a sphere point needs at least 2 coordinates".into()));
        }
        let n = norm(&coords);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero vector".into()));
        }
        Ok(SpherePoint {
            coords: coords.into_iter().map(|c| c / n).collect(),
        })
    }

    /// The pole e_{d+1} of S^d.
    pub fn north(d: usize) -> Self {
        let mut c = vec![0.0; d + 1];
        c[d] = 1.0;
        SpherePoint { coords: c }
    }

    /// Point at colatitude `theta` from the north pole, in the (e_1, e_{d+1}) plane.
    pub fn from_colatitude(d: usize, theta: f64) -> Self {
        let mut c = vec![0.0; d + 1];
        c[0] = theta.sin();
        c[d] = theta.cos();
        SpherePoint { coords: c }
    }

    /// Point (cos φ, sin φ) on S^1.
    pub fn on_circle(phi: f64) -> Self {
        SpherePoint {
            coords: vec![phi.cos(), phi.sin()],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Inner product with the north pole, i.e. the cosine of the colatitude.
    pub fn height(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        dot(&self.coords, &other.coords)
    }

    pub fn antipode(&self) -> SpherePoint {
        SpherePoint {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Geodesic distance arccos⟨x, y⟩ with the inner product clamped to [-1, 1].
pub fn geodesic_distance(x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(x.dot(y).clamp(-1.0, 1.0).acos())
}

/// Surface measure ω_d = 2π^{(d+1)/2} / Γ((d+1)/2) of S^d.
pub fn omega(d: usize) -> f64 {
    let h = 0.5 * (d as f64 + 1.0);
    2.0 * (h * PI.ln() - ln_gamma_pos(h)).exp()
}

/// ω_{d-1}/ω_d, the density constant of the colatitude on S^d.
pub fn colatitude_density(d: usize) -> f64 {
    omega(d - 1) / omega(d)
}

/// Normalized measure of a cap of geodesic radius `r` in S^d.
pub fn cap_measure_dim(d: usize, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r >= PI {
        return 1.0;
    }
    match d {
        0 => 0.5,
        1 => r / PI,
        2 => 0.5 * (1.0 - r.cos()),
        3 => (r - r.sin() * r.cos()) / PI,
        _ => {
            let c = colatitude_density(d);
            // integrate the smaller side to keep the complement identity tight
            let (a, flip) = if r <= 0.5 * PI { (r, false) } else { (PI - r, true) };
            let p = integrate::Panels::new(&[0.0, a], 0.25, &[], 1e-7);
            let v = c * p.integrate_seq(&|t: f64| t.sin().powi(d as i32 - 1), 20);
            if flip {
                1.0 - v
            } else {
                v
            }
        }
    }
}

/// Whether a cap includes its boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Boundary {
    Closed,
    Open,
}

/// Geodesic ball {x : d(x, center) ≤ radius}.
#[derive(Debug, Clone, PartialEq)]
pub struct Cap {
    center: SpherePoint,
    radius: f64,
    boundary: Boundary,
}

impl Cap {
    pub fn new(center: SpherePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < PI) {
            return Err(Error::Domain(format!("cap radius must lie in (0, π), got {radius}")));
        }
        Ok(Cap {
            center,
            radius,
            boundary: Boundary::Closed,
        })
    }

    /// Cap centred at the north pole.
    pub fn polar(d: usize, radius: f64) -> Result<Self> {
        Cap::new(SpherePoint::north(d), radius)
    }

    pub fn center(&self) -> &SpherePoint {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// The closure of the complement, as a cap around the antipode. Points on
    /// the shared boundary belong to exactly one of `self` and the complement.
    pub fn complement(&self) -> Cap {
        Cap {
            center: self.center.antipode(),
            radius: PI - self.radius,
            boundary: match self.boundary {
                Boundary::Closed => Boundary::Open,
                Boundary::Open => Boundary::Closed,
            },
        }
    }

    /// Membership with boundary ties (within 1e-12) resolved as inside for
    /// caps and outside for complements.
    pub fn contains(&self, x: &SpherePoint) -> bool {
        match self.boundary {
            Boundary::Closed => self.center.dot(x).clamp(-1.0, 1.0).acos() <= self.radius + BOUNDARY_TOL,
            Boundary::Open => {
                // complement of the closed cap around the antipode
                let s = -self.center.dot(x);
                !(s.clamp(-1.0, 1.0).acos() <= (PI - self.radius) + BOUNDARY_TOL)
            }
        }
    }

    pub fn is_polar(&self) -> bool {
        let d = self.dim();
        (self.center.coords[d] - 1.0).abs() < 1e-15
    }
}

/// σ(cap) in the normalized surface measure.
pub fn cap_measure(cap: &Cap) -> f64 {
    cap_measure_dim(cap.dim(), cap.radius)
}

/// H^{d-1} of the cap boundary; 2 for d = 1.
pub fn cap_perimeter_hausdorff(cap: &Cap) -> f64 {
    let d = cap.dim();
    if d == 1 {
        2.0
    } else {
        omega(d - 1) * cap.radius.sin().powi(d as i32 - 1)
    }
}

/// [χ_cap]_BV with respect to the normalized measure: perimeter / ω_d.
pub fn cap_bv_variation(cap: &Cap) -> f64 {
    cap_perimeter_hausdorff(cap) / omega(cap.dim())
}

/// Image of a point of S^2 under stereographic projection from the north pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stereo {
    Finite(Complex64),
    Infinity,
}

/// Stereographic projection S^2 → C ∪ {∞} from the north pole.
pub fn stereographic(x: &SpherePoint) -> Result<Stereo> {
    if x.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: x.dim() });
    }
    let (a, b, c) = (x.coords[0], x.coords[1], x.coords[2]);
    let rho2 = a * a + b * b;
    if rho2 == 0.0 && c > 0.0 {
        return Ok(Stereo::Infinity);
    }
    // 1 - c, written without cancellation near the north pole
    let one_minus = if c > 0.0 { rho2 / (1.0 + c) } else { 1.0 - c };
    Ok(Stereo::Finite(Complex64::new(a / one_minus, b / one_minus)))
}

/// Inverse of [`stereographic`].
pub fn stereographic_inverse(z: Stereo) -> SpherePoint {
    match z {
        Stereo::Infinity => SpherePoint::north(2),
        Stereo::Finite(z) => {
            let r2 = z.norm_sqr();
            let den = r2 + 1.0;
            SpherePoint {
                coords: vec![2.0 * z.re / den, 2.0 * z.im / den, (r2 - 1.0) / den],
            }
        }
    }
}

/// `n` independent uniform points on S^d (normalized Gaussian vectors).
pub fn uniform_sample(d: usize, n: usize, seed: u64) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| uniform_point(d, &mut rng)).collect()
}

/// One uniform point drawn from `rng`.
pub fn uniform_point<R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> SpherePoint {
    loop {
        let v: Vec<f64> = (0..=d).map(|_| StandardNormal.sample(rng)).collect();
        let n = norm(&v);
        if n > 1e-300 {
            return SpherePoint {
                coords: v.into_iter().map(|c| c / n).collect(),
            };
        }
    }
}

/// Deterministic net of caps: centers on a spiral layout (uniform grid for
/// d = 1, Fibonacci spiral for d = 2, fixed-seed quasi-uniform points for
/// d ≥ 3) and radii on a uniform grid in (0, π).
pub fn cap_net(d: usize, resolution: usize) -> Result<Vec<Cap>> {
    if resolution == 0 {
        return Err(Error::Domain("cap_net needs resolution >= 1".into()));
    }
    let centers = net_centers(d, resolution);
    let radii: Vec<f64> = (1..=resolution)
        .map(|k| PI * k as f64 / (resolution as f64 + 1.0))
        .collect();
    let mut caps = Vec::with_capacity(centers.len() * radii.len());
    for c in &centers {
        for &r in &radii {
            caps.push(Cap::new(c.clone(), r)?);
        }
    }
    Ok(caps)
}

fn net_centers(d: usize, resolution: usize) -> Vec<SpherePoint> {
    match d {
        1 => {
            let m = 4 * resolution;
            (0..m)
                .map(|j| SpherePoint::on_circle(2.0 * PI * (j as f64 + 0.5) / m as f64))
                .collect()
        }
        2 => {
            let m = 2 * resolution * resolution;
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..m)
                .map(|j| {
                    let z = 1.0 - (2.0 * j as f64 + 1.0) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let phi = golden * j as f64;
                    SpherePoint {
                        coords: vec![r * phi.cos(), r * phi.sin(), z],
                    }
                })
                .collect()
        }
        _ => uniform_sample(d, 2 * resolution.pow(d as u32), 0x5eed_0f_ca95),
    }
}

/// Profile function t ↦ g(t) used by [`ZonalFn`].
pub type Profile = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Zonal function f(x) = g(⟨x, north⟩) together with g'.
#[derive(Clone)]
pub struct ZonalFn {
    pub profile: Profile,
    pub profile_deriv: Profile,
    pub label: String,
}

impl fmt::Debug for ZonalFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZonalFn").field("label", &self.label).finish()
    }
}

impl ZonalFn {
    pub fn new<G, H>(label: &str, g: G, dg: H) -> Self
    where
        G: Fn(f64) -> f64 + Send + Sync + 'static,
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ZonalFn {
            profile: Arc::new(g),
            profile_deriv: Arc::new(dg),
            label: label.to_string(),
        }
    }

    /// f = cos θ.
    pub fn cos_theta() -> Self {
        ZonalFn::new("cos", |t| t, |_| 1.0)
    }

    /// Constant function.
    pub fn constant(c: f64) -> Self {
        ZonalFn::new("const", move |_| c, |_| 0.0)
    }

    /// c·f.
    pub fn scaled(&self, c: f64) -> Self {
        let g = self.profile.clone();
        let dg = self.profile_deriv.clone();
        ZonalFn {
            profile: Arc::new(move |t| c * g(t)),
            profile_deriv: Arc::new(move |t| c * dg(t)),
            label: format!("{}*{}", c, self.label),
        }
    }

    /// f + h.
    pub fn sum(&self, other: &ZonalFn) -> Self {
        let (g1, g2) = (self.profile.clone(), other.profile.clone());
        let (d1, d2) = (self.profile_deriv.clone(), other.profile_deriv.clone());
        ZonalFn {
            profile: Arc::new(move |t| g1(t) + g2(t)),
            profile_deriv: Arc::new(move |t| d1(t) + d2(t)),
            label: format!("{}+{}", self.label, other.label),
        }
    }

    pub fn eval(&self, x: &SpherePoint) -> f64 {
        (self.profile)(x.height())
    }

    /// Value at colatitude θ.
    pub fn at_colatitude(&self, theta: f64) -> f64 {
        (self.profile)(theta.cos())
    }

    /// |∇f| at x: |g'(cos θ)| sin θ.
    pub fn grad_norm(&self, x: &SpherePoint) -> f64 {
        let t = x.height().clamp(-1.0, 1.0);
        (self.profile_deriv)(t).abs() * (1.0 - t * t).sqrt()
    }
}
