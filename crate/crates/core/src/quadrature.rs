//! Deterministic evaluation of the variance double integral and of the
//! related seminorms, plus exact oracles (Toeplitz, incomplete gamma,
//! Nyström).
//!
//! Sphere integrals of zonal data are reduced to the pair distance γ:
//! for a pole-centred cap A,
//!
//! ∫_A ∫_{A^c} F(d(x,y)) dσ dσ = (ω_{d-1}/ω_d) ∫_0^π F(γ) h_A(γ) sin^{d-1}γ dγ,
//!
//! where h_A(γ) integrates over x ∈ A the fraction of the geodesic sphere
//! of radius γ around x that leaves A. The fraction is the normalized
//! measure of a cap in S^{d-1}, so the azimuthal integral is exact.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrate::{gauss_rule, tanh_sinh, Panels};
use crate::kernels::{Domain, EnsembleKernel};
use crate::par;
use crate::specfun::ln_gamma_pos;
use crate::sphere_geom::{cap_measure, cap_measure_dim, colatitude_density, omega, Cap, ZonalFn};

/// Accuracy knobs for the quadrature routines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes per outer panel.
    pub order: usize,
    /// Relative tolerance between successive panel bisections.
    pub rel_tol: f64,
    /// Absolute tolerance floor.
    pub abs_tol: f64,
    /// Maximum number of bisections.
    pub max_refine: usize,
    /// Smallest panel produced by geometric grading.
    pub min_width: f64,
    /// Largest outer panel width for non-oscillatory integrands.
    pub max_width: f64,
    /// Gauss–Legendre nodes per inner panel (colatitude and azimuth).
    pub inner_order: usize,
    /// Inner panels on [0, π].
    pub inner_panels: usize,
    /// Absolute tolerance of the tanh-sinh inner integrals.
    pub inner_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            order: 10,
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_refine: 5,
            min_width: 1e-7,
            max_width: PI / 32.0,
            inner_order: 32,
            inner_panels: 2,
            inner_tol: 1e-15,
        }
    }
}

impl QuadratureSpec {
    fn validate(&self) -> Result<()> {
        if self.order == 0 || self.inner_order == 0 || self.inner_panels == 0 {
            return Err(Error::Config("quadrature orders must be positive".into()));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.min_width > 0.0 && self.max_width > 0.0) {
            return Err(Error::Config("quadrature tolerances must be positive".into()));
        }
        Ok(())
    }
}

fn panel_nodes(p: &Panels, order: usize) -> Vec<(f64, f64)> {
    let rule = gauss_rule(order);
    let mut out = Vec::with_capacity(p.len() * order);
    for w in p.edges.windows(2) {
        let h = 0.5 * (w[1] - w[0]);
        let c = 0.5 * (w[1] + w[0]);
        for (x, wt) in rule.nodes.iter().zip(&rule.weights) {
            out.push((c + h * x, wt * h));
        }
    }
    out
}

fn sum_nodes<const N: usize, F>(nodes: &[(f64, f64)], f: &F) -> [f64; N]
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    let vals = par::map_slice(nodes, |&(x, w)| {
        let v = f(x);
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = v[i] * w;
        }
        out
    });
    let mut res = [0.0; N];
    for (i, r) in res.iter_mut().enumerate() {
        let col: Vec<f64> = vals.iter().map(|v| v[i]).collect();
        *r = par::pairwise_sum(&col);
    }
    res
}

/// Integrate a vector-valued function, bisecting all panels until the
/// component `primary` settles.
fn adaptive_vec<const N: usize, F>(f: &F, panels: &Panels, spec: &QuadratureSpec, primary: usize) -> Result<[f64; N]>
where
    F: Fn(f64) -> [f64; N] + Sync,
{
    let mut p = panels.clone();
    let mut prev = sum_nodes(&panel_nodes(&p, spec.order), f);
    let mut last_err = f64::INFINITY;
    for _ in 0..=spec.max_refine {
        p = p.bisect();
        let cur = sum_nodes(&panel_nodes(&p, spec.order), f);
        let err = (cur[primary] - prev[primary]).abs();
        if err <= spec.rel_tol * cur[primary].abs() || err <= spec.abs_tol {
            return Ok(cur);
        }
        last_err = err;
        prev = cur;
    }
    Err(Error::Tolerance {
        estimate: prev[primary],
        error: last_err,
        requested: spec.rel_tol,
    })
}

fn zonal_weight(d: usize, theta: f64) -> f64 {
    colatitude_density(d) * theta.sin().powi(d as i32 - 1)
}

/// (ω_{d-1}/ω_d) ∫_0^π F(θ) sin^{d-1}θ dθ, i.e. ∫_{S^d} F(d(x,y)) dσ(x)
/// for fixed y.
pub fn zonal_double_integral<F>(d: usize, f: F, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    zonal_with(d, &f, &[0.0, PI], spec.max_width, &[], spec)
}

/// [`zonal_double_integral`] with explicit breakpoints, panel width and
/// grading points.
pub fn zonal_with<F>(d: usize, f: &F, breaks: &[f64], width: f64, graded: &[f64], spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    if d == 0 {
        return Err(Error::Domain("zonal integrals need d >= 1".into()));
    }
    spec.validate()?;
    let c = colatitude_density(d);
    let g = |t: f64| [f(t) * c * t.sin().powi(d as i32 - 1)];
    let p = Panels::new(breaks, width.min(spec.max_width), graded, spec.min_width);
    Ok(adaptive_vec(&g, &p, spec, 0)?[0])
}

pub(crate) fn zonal_integral_on<F>(d: usize, f: &F, a: f64, b: f64, width: f64, spec: &QuadratureSpec) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    zonal_with(d, f, &[a, b], width, &[], spec)
}

// ---------------------------------------------------------------------------
// Rough sets

/// Rough test sets in R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EuclidSet {
    Interval { a: f64, b: f64 },
    Ball { center: Vec<f64>, radius: f64 },
}

impl EuclidSet {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::Domain(format!("empty interval [{a}, {b}]")));
        }
        Ok(EuclidSet::Interval { a, b })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() || !(radius > 0.0) {
            return Err(Error::Domain("ball needs d >= 1 and a positive radius".into()));
        }
        Ok(EuclidSet::Ball { center, radius })
    }

    pub fn dim(&self) -> usize {
        match self {
            EuclidSet::Interval { .. } => 1,
            EuclidSet::Ball { center, .. } => center.len(),
        }
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        match self {
            EuclidSet::Interval { a, b } => b - a,
            EuclidSet::Ball { center, radius } => {
                let d = center.len();
                omega(d - 1) / d as f64 * radius.powi(d as i32)
            }
        }
    }

    /// H^{d-1} of the boundary.
    pub fn perimeter(&self) -> f64 {
        match self {
            EuclidSet::Interval { .. } => 2.0,
            EuclidSet::Ball { center, radius } => {
                let d = center.len();
                if d == 1 {
                    2.0
                } else {
                    omega(d - 1) * radius.powi(d as i32 - 1)
                }
            }
        }
    }

    /// Diameter: the covariogram equals 2·measure beyond it.
    pub fn saturation(&self) -> f64 {
        match self {
            EuclidSet::Interval { a, b } => b - a,
            EuclidSet::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// |A Δ (A + h)| for |h| = t.
    pub fn covariogram(&self, t: f64) -> f64 {
        let t = t.abs();
        match self {
            EuclidSet::Interval { a, b } => 2.0 * t.min(b - a),
            EuclidSet::Ball { center, radius } => {
                let d = center.len();
                let r = *radius;
                if t >= 2.0 * r {
                    return 2.0 * self.measure();
                }
                let overlap = match d {
                    1 => 2.0 * r - t,
                    2 => {
                        let u = t / (2.0 * r);
                        2.0 * r * r * (u.acos() - u * (1.0 - u * u).sqrt())
                    }
                    _ => {
                        // two caps of height r - t/2: 2 ∫_{t/2}^{r} V_{d-1}(√(r²-x²)) dx
                        let vol = |rho: f64| omega(d - 2) / (d - 1) as f64 * rho.powi(d as i32 - 1);
                        let f = |x: f64| vol((r * r - x * x).max(0.0).sqrt());
                        2.0 * tanh_sinh(f, 0.5 * t, r, 1e-15)
                    }
                };
                2.0 * (self.measure() - overlap)
            }
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            EuclidSet::Interval { a, b } => x.len() == 1 && x[0] >= *a && x[0] <= *b,
            EuclidSet::Ball { center, radius } => {
                x.len() == center.len()
                    && x.iter().zip(center).map(|(p, c)| (p - c) * (p - c)).sum::<f64>() <= radius * radius
            }
        }
    }
}

/// A rough set on either domain.
#[derive(Debug, Clone, PartialEq)]
pub enum RoughSet {
    Cap(Cap),
    Euclid(EuclidSet),
}

impl From<Cap> for RoughSet {
    fn from(c: Cap) -> Self {
        RoughSet::Cap(c)
    }
}

impl From<EuclidSet> for RoughSet {
    fn from(e: EuclidSet) -> Self {
        RoughSet::Euclid(e)
    }
}

/// Fraction of the geodesic sphere of radius γ around a point at
/// colatitude θ that lies in the polar cap of radius r (d ≥ 2).
pub fn arc_fraction_inside(d: usize, r: f64, theta: f64, gamma: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let (sg, cg) = gamma.sin_cos();
    let den = st * sg;
    let num = r.cos() - ct * cg;
    if den <= 1e-300 {
        return if num <= 0.0 { 1.0 } else { 0.0 };
    }
    let u = num / den;
    if u >= 1.0 {
        0.0
    } else if u <= -1.0 {
        1.0
    } else {
        cap_measure_dim(d - 1, u.acos())
    }
}

/// h_A(γ) = ∫_A P(y ∉ A | d(x,y) = γ) dσ(x) for the polar cap of radius r.
pub fn cap_cross_measure(d: usize, r: f64, gamma: f64, tol: f64) -> f64 {
    if d == 1 {
        let a = 2.0 * r;
        return gamma.min(a).min(2.0 * PI - a) / (2.0 * PI);
    }
    let mut cuts = vec![0.0, r];
    for b in [gamma + r, gamma - r, r - gamma, 2.0 * PI - r - gamma] {
        if b > 0.0 && b < r {
            cuts.push(b);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let f = |th: f64| th.sin().powi(d as i32 - 1) * (1.0 - arc_fraction_inside(d, r, th, gamma));
    let mut s = 0.0;
    for w in cuts.windows(2) {
        s += tanh_sinh(f, w[0], w[1], tol);
    }
    colatitude_density(d) * s
}

fn cap_breaks(r: f64) -> Vec<f64> {
    [r, 2.0 * r, 2.0 * PI - 2.0 * r, PI - r]
        .into_iter()
        .filter(|&b| b > 0.0 && b < PI)
        .collect()
}

/// Var n_A = ½ ∬ |χ_A(x) - χ_A(y)|² |K(x,y)|² for a cap or Euclidean set.
pub fn variance_rough(k: &EnsembleKernel, a: &RoughSet, spec: &QuadratureSpec) -> Result<f64> {
    match a {
        RoughSet::Cap(c) => variance_rough_cap(k, c, spec),
        RoughSet::Euclid(e) => variance_rough_euclid(k, e, spec),
    }
}

fn sphere_dim(k: &EnsembleKernel, dim: usize) -> Result<usize> {
    match k.domain() {
        Domain::Sphere(d) if d == dim => Ok(d),
        Domain::Sphere(d) => Err(Error::DimensionMismatch { expected: d, got: dim }),
        Domain::Euclid(_) => Err(Error::Domain("Euclidean kernel paired with a spherical set".into())),
    }
}

/// Rough variance for a cap (only its radius matters by rotation invariance).
pub fn variance_rough_cap(k: &EnsembleKernel, cap: &Cap, spec: &QuadratureSpec) -> Result<f64> {
    let d = sphere_dim(k, cap.dim())?;
    spec.validate()?;
    let r = cap.radius();
    let upper = effective_support(k);
    let mut breaks = vec![0.0, upper];
    let graded: Vec<f64> = cap_breaks(r).into_iter().filter(|&b| b < upper).collect();
    breaks.extend(&graded);
    let tol = spec.inner_tol;
    let f = |g: f64| k.second_intensity(g) * cap_cross_measure(d, r, g, tol);
    zonal_with(d, &f, &breaks, k.panel_width(), &graded, spec)
}

/// Distance beyond which |K|² is below 1e-35 of its diagonal value.
fn effective_support(k: &EnsembleKernel) -> f64 {
    match *k {
        EnsembleKernel::Spherical { n } if n > 1 => {
            // (N-1) ln cos²(t/2) = -80
            let c2 = (-80.0 / (n as f64 - 1.0)).exp();
            (2.0 * c2.sqrt().acos()).min(PI)
        }
        _ => PI,
    }
}

/// |K|² as a function of cos γ (sphere kernels).
fn second_intensity_cos(k: &EnsembleKernel, c: f64) -> f64 {
    let c = c.clamp(-1.0, 1.0);
    match *k {
        EnsembleKernel::Harmonic { d, l, scale, .. } => {
            let a = 0.5 * d as f64;
            let v = scale * crate::specfun::jacobi_unchecked(a, a - 1.0, l, c);
            v * v
        }
        EnsembleKernel::Spherical { n } => {
            let nf = n as f64;
            nf * nf * (0.5 * (1.0 + c)).powi(n as i32 - 1)
        }
        _ => k.second_intensity(c.acos()),
    }
}

/// Second route for projection kernels: rank·σ(A) - ∬_{A×A} |K|², with the
/// A×A integral done by tensor quadrature over (θ_x, θ_y, azimuth gap).
pub fn variance_rough_projection(k: &EnsembleKernel, cap: &Cap, spec: &QuadratureSpec) -> Result<f64> {
    let d = sphere_dim(k, cap.dim())?;
    let rank = k
        .rank()
        .ok_or_else(|| Error::Domain("projection identity needs a finite-rank kernel".into()))? as f64;
    let r = cap.radius();
    let width = (4.0 * k.panel_width()).min(0.25);
    let p = Panels::new(&[0.0, r], width, &[], spec.min_width);
    let order = 16;
    let inner = if d == 1 {
        let nodes = panel_nodes(&Panels::new(&[-r, r], width, &[], spec.min_width), order);
        let rows = par::map_slice(&nodes, |&(x, wx)| {
            let row: Vec<f64> = nodes
                .iter()
                .map(|&(y, wy)| wy * second_intensity_cos(k, (x - y).cos()))
                .collect();
            wx * par::pairwise_sum(&row)
        });
        par::pairwise_sum(&rows) / (4.0 * PI * PI)
    } else {
        let nodes = panel_nodes(&p, order);
        let c = colatitude_density(d);
        let m = match *k {
            EnsembleKernel::Harmonic { l, .. } => 2 * l + d + 8,
            EnsembleKernel::Spherical { n } => 2 * n + 8,
            _ => 64,
        };
        // even d: sin^{d-2}φ times a trig polynomial, exact under the midpoint
        // rule; odd d: a polynomial in u = cos φ, exact under Gauss–Legendre
        let cd = colatitude_density(d - 1);
        let cphi_w: Vec<(f64, f64)> = if d % 2 == 0 {
            (0..m)
                .map(|j| {
                    let phi = PI * (j as f64 + 0.5) / m as f64;
                    (phi.cos(), cd * PI / m as f64 * phi.sin().powi(d as i32 - 2))
                })
                .collect()
        } else {
            let rule = gauss_rule(m.min(128));
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&u, &w)| (u, cd * w * (1.0 - u * u).powi((d as i32 - 3) / 2)))
                .collect()
        };
        let rows = par::map_slice(&nodes, |&(t1, w1)| {
            let (s1, c1) = t1.sin_cos();
            let row: Vec<f64> = nodes
                .iter()
                .map(|&(t2, w2)| {
                    let (s2, c2) = t2.sin_cos();
                    let mut acc = 0.0;
                    for &(cp, wp) in &cphi_w {
                        acc += wp * second_intensity_cos(k, c1 * c2 + s1 * s2 * cp);
                    }
                    w2 * s2.powi(d as i32 - 1) * acc
                })
                .collect();
            w1 * s1.powi(d as i32 - 1) * par::pairwise_sum(&row)
        });
        c * c * par::pairwise_sum(&rows)
    };
    Ok(rank * cap_measure(cap) - inner)
}

/// Rough variance for an interval or ball through the covariogram:
/// ½ ∫ |K|²(|h|) |A Δ (A+h)| dh.
pub fn variance_rough_euclid(k: &EnsembleKernel, set: &EuclidSet, spec: &QuadratureSpec) -> Result<f64> {
    let d = set.dim();
    match k.domain() {
        Domain::Euclid(kd) if kd == d => {}
        Domain::Euclid(kd) => return Err(Error::DimensionMismatch { expected: kd, got: d }),
        Domain::Sphere(_) => return Err(Error::Domain("sphere kernel paired with a Euclidean set".into())),
    }
    spec.validate()?;
    let t_sat = set.saturation();
    let big = t_sat.max(k.tail_start());
    let wd = omega(d - 1);
    let f = |t: f64| 0.5 * k.second_intensity(t) * set.covariogram(t) * wd * t.powi(d as i32 - 1);
    let p = Panels::new(&[0.0, t_sat, big], k.panel_width(), &[t_sat], spec.min_width);
    let num = adaptive_vec(&|t| [f(t)], &p, spec, 0)?[0];
    Ok(num + set.measure() * k.radial_tail(big))
}

/// Area of the unit-disk symmetric difference, exposed for tests.
pub fn disk_covariogram(r: f64, h: f64) -> f64 {
    EuclidSet::Ball {
        center: vec![0.0, 0.0],
        radius: r,
    }
    .covariogram(h)
}

// ---------------------------------------------------------------------------
// Smooth functions

/// Compactly supported profile on R (d = 1).
#[derive(Clone)]
pub struct EuclidProfile {
    pub profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub support: (f64, f64),
    pub label: String,
}

impl std::fmt::Debug for EuclidProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EuclidProfile")
            .field("label", &self.label)
            .field("support", &self.support)
            .finish()
    }
}

impl EuclidProfile {
    /// exp(-1/(1-u²)) with u = (x - center)/half_width.
    pub fn bump(center: f64, half_width: f64) -> Self {
        EuclidProfile {
            profile: Arc::new(move |x| {
                let u = (x - center) / half_width;
                if u.abs() >= 1.0 {
                    0.0
                } else {
                    (-1.0 / (1.0 - u * u)).exp()
                }
            }),
            support: (center - half_width, center + half_width),
            label: "bump".into(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let g = self.profile.clone();
        EuclidProfile {
            profile: Arc::new(move |x| c * g(x)),
            support: self.support,
            label: format!("{}*{}", c, self.label),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < self.support.0 || x > self.support.1 {
            0.0
        } else {
            (self.profile)(x)
        }
    }

    fn width(&self) -> f64 {
        self.support.1 - self.support.0
    }

    fn inner(&self, a: f64, b: f64, cuts: &[f64], f: &dyn Fn(f64) -> f64, order: usize) -> f64 {
        let mut pts = vec![a, b];
        pts.extend(cuts.iter().copied().filter(|&c| c > a && c < b));
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let mut s = 0.0;
        for w in pts.windows(2) {
            let p = Panels::new(&[w[0], w[1]], 0.25, &[], 1e-7);
            s += p.integrate_seq(&f, order);
        }
        s
    }

    /// ∫ |f|^p dx.
    pub fn lp_norm_p(&self, p: f64) -> f64 {
        let (a, b) = self.support;
        self.inner(a, b, &[], &|x| self.eval(x).abs().powf(p), 32)
    }

    /// D_p(t) = ∫ |f(x+t) - f(x)|^p dx.
    pub fn difference_moment(&self, t: f64, p: f64) -> f64 {
        let (a, b) = self.support;
        let t = t.abs();
        let g = |x: f64| (self.eval(x + t) - self.eval(x)).abs().powf(p);
        self.inner(a - t, b, &[a, b - t], &g, 32)
    }
}

/// A smooth test function on either domain.
#[derive(Debug, Clone)]
pub enum SmoothFn {
    Zonal(ZonalFn),
    Euclid(EuclidProfile),
}

impl From<ZonalFn> for SmoothFn {
    fn from(f: ZonalFn) -> Self {
        SmoothFn::Zonal(f)
    }
}

impl From<EuclidProfile> for SmoothFn {
    fn from(f: EuclidProfile) -> Self {
        SmoothFn::Euclid(f)
    }
}

/// Tensor grid over (θ_x, azimuth) for pair averages of a zonal function.
pub(crate) struct PairGrid {
    c1: Vec<f64>,
    s1: Vec<f64>,
    w1: Vec<f64>,
    f1: Vec<f64>,
    cphi: Vec<f64>,
    wphi: Vec<f64>,
}

impl PairGrid {
    pub(crate) fn new(d: usize, f: &ZonalFn, spec: &QuadratureSpec) -> PairGrid {
        let p = Panels::new(&[0.0, PI], PI / spec.inner_panels as f64, &[], 1e-7);
        let nodes = panel_nodes(&p, spec.inner_order);
        let mut c1 = Vec::new();
        let mut s1 = Vec::new();
        let mut w1 = Vec::new();
        let mut f1 = Vec::new();
        for &(t, w) in &nodes {
            let (s, c) = t.sin_cos();
            c1.push(c);
            s1.push(s);
            w1.push(w * zonal_weight(d, t));
            f1.push((f.profile)(c));
        }
        let (cphi, wphi) = if d == 1 {
            (vec![1.0, -1.0], vec![0.5, 0.5])
        } else {
            let cd = colatitude_density(d - 1);
            nodes
                .iter()
                .map(|&(phi, w)| (phi.cos(), w * cd * phi.sin().powi(d as i32 - 2)))
                .unzip()
        };
        PairGrid {
            c1,
            s1,
            w1,
            f1,
            cphi,
            wphi,
        }
    }

    /// (½∫E(f(x)-f(y))², ∫E f(x)f(y)) over pairs at distance γ.
    pub(crate) fn moments(&self, f: &ZonalFn, gamma: f64) -> [f64; 2] {
        let (sg, cg) = gamma.sin_cos();
        let mut outer_s = Vec::with_capacity(self.c1.len());
        let mut outer_p = Vec::with_capacity(self.c1.len());
        for i in 0..self.c1.len() {
            let a = self.c1[i] * cg;
            let b = self.s1[i] * sg;
            let fx = self.f1[i];
            let mut acc_s = 0.0;
            let mut acc_p = 0.0;
            for j in 0..self.cphi.len() {
                let fy = (f.profile)((a + b * self.cphi[j]).clamp(-1.0, 1.0));
                let diff = fx - fy;
                acc_s += self.wphi[j] * diff * diff;
                acc_p += self.wphi[j] * fx * fy;
            }
            outer_s.push(self.w1[i] * acc_s);
            outer_p.push(self.w1[i] * acc_p);
        }
        [0.5 * par::pairwise_sum(&outer_s), par::pairwise_sum(&outer_p)]
    }

    /// ∫E |f(x) - f(y)|^p over pairs at distance γ.
    pub(crate) fn abs_moment(&self, f: &ZonalFn, gamma: f64, p: f64) -> f64 {
        let (sg, cg) = gamma.sin_cos();
        let mut outer = Vec::with_capacity(self.c1.len());
        for i in 0..self.c1.len() {
            let a = self.c1[i] * cg;
            let b = self.s1[i] * sg;
            let fx = self.f1[i];
            let mut acc = 0.0;
            for j in 0..self.cphi.len() {
                let fy = (f.profile)((a + b * self.cphi[j]).clamp(-1.0, 1.0));
                acc += self.wphi[j] * (fx - fy).abs().powf(p);
            }
            outer.push(self.w1[i] * acc);
        }
        par::pairwise_sum(&outer)
    }

    /// ∫ f² dσ.
    pub(crate) fn mean_square(&self) -> f64 {
        let v: Vec<f64> = self.w1.iter().zip(&self.f1).map(|(w, f)| w * f * f).collect();
        par::pairwise_sum(&v)
    }
}

/// Smooth variance together with the projection-identity value.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SmoothVariance {
    pub variance: f64,
    /// rank·∫f² - ∬ f(x)f(y)|K|², when the kernel has finite rank.
    pub identity: Option<f64>,
    pub relative_gap: Option<f64>,
}

/// Var Σ f(x_i) = ½ ∬ |f(x) - f(y)|² |K(x,y)|².
pub fn variance_smooth(k: &EnsembleKernel, f: &SmoothFn, spec: &QuadratureSpec) -> Result<f64> {
    Ok(variance_smooth_report(k, f, spec)?.variance)
}

/// [`variance_smooth`] with the cross-check against the projection
/// identity; a relative mismatch above 1e-6 is an error.
pub fn variance_smooth_report(k: &EnsembleKernel, f: &SmoothFn, spec: &QuadratureSpec) -> Result<SmoothVariance> {
    spec.validate()?;
    match f {
        SmoothFn::Zonal(z) => {
            let Domain::Sphere(d) = k.domain() else {
                return Err(Error::Domain("zonal function paired with a Euclidean kernel".into()));
            };
            let grid = PairGrid::new(d, z, spec);
            let upper = effective_support(k);
            let c = colatitude_density(d);
            let g = |t: f64| {
                let m = grid.moments(z, t);
                let w = c * t.sin().powi(d as i32 - 1) * k.second_intensity(t);
                [w * m[0], w * m[1], w]
            };
            let p = Panels::new(&[0.0, upper], k.panel_width().min(spec.max_width), &[], spec.min_width);
            let [var, cross, mass] = adaptive_vec(&g, &p, spec, 0)?;
            let (identity, gap) = match k.rank() {
                Some(rank) => {
                    let _ = mass;
                    let id = rank as f64 * grid.mean_square() - cross;
                    let scale = var.abs().max(1e-300);
                    let gap = (id - var).abs() / scale;
                    if gap > 1e-6 && var.abs() > 1e-12 {
                        return Err(Error::Inconsistency { a: var, b: id, gap });
                    }
                    (Some(id), Some(gap))
                }
                None => (None, None),
            };
            Ok(SmoothVariance {
                variance: var,
                identity,
                relative_gap: gap,
            })
        }
        SmoothFn::Euclid(e) => {
            match k.domain() {
                Domain::Euclid(1) => {}
                _ => return Err(Error::Domain("Euclidean profiles are supported on R only".into())),
            }
            let w = e.width();
            let big = w.max(k.tail_start());
            let g = |t: f64| [k.second_intensity(t) * e.difference_moment(t, 2.0)];
            let p = Panels::new(&[0.0, w, big], k.panel_width(), &[w], spec.min_width);
            let num = adaptive_vec(&g, &p, spec, 0)?[0];
            Ok(SmoothVariance {
                variance: num + e.lp_norm_p(2.0) * k.radial_tail(big),
                identity: None,
                relative_gap: None,
            })
        }
    }
}

/// Gagliardo seminorm ∬ |f(x)-f(y)|^p / d(x,y)^{d+sp} dσ dσ on S^d.
pub fn gagliardo_seminorm(d: usize, f: &ZonalFn, s: f64, p: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) || !(p == 1.0 || p == 2.0) {
        return Err(Error::Domain(format!("need s in (0,1) and p in {{1,2}}, got ({s}, {p})")));
    }
    let grid = PairGrid::new(d, f, spec);
    let e = d as f64 + s * p;
    // t = u² absorbs the t^{(1-s)p-1} behaviour at the diagonal (t^{-1/2} for p = 1)
    let c = colatitude_density(d);
    let g = |u: f64| {
        let t = u * u;
        if t == 0.0 {
            return [0.0];
        }
        [2.0 * u * c * t.sin().powi(d as i32 - 1) * grid.abs_moment(f, t, p) * t.powf(-e)]
    };
    let top = PI.sqrt();
    let pan = Panels::new(&[0.0, top], spec.max_width.min(top / 8.0), &[0.0], spec.min_width);
    Ok(adaptive_vec(&g, &pan, spec, 0)?[0])
}

/// Gagliardo seminorm of a compactly supported profile on R.
pub fn gagliardo_euclid(f: &EuclidProfile, s: f64, p: f64, spec: &QuadratureSpec) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) || !(p == 1.0 || p == 2.0) {
        return Err(Error::Domain(format!("need s in (0,1) and p in {{1,2}}, got ({s}, {p})")));
    }
    let w = f.width();
    let e = 1.0 + s * p;
    let g = |t: f64| [2.0 * f.difference_moment(t, p) * t.powf(-e)];
    let pan = Panels::new(&[0.0, w], spec.max_width, &[0.0], spec.min_width);
    let num = adaptive_vec(&g, &pan, spec, 0)?[0];
    // beyond the support width D_p(t) = 2∫|f|^p
    let tail = 4.0 * f.lp_norm_p(p) * w.powf(-s * p) / (s * p);
    Ok(num + tail)
}

/// ½ ∬ |f(x)-f(y)|² k_d(d(x,y))² dσ dσ.
pub fn triple_norm_half(d: usize, f: &ZonalFn, spec: &QuadratureSpec) -> Result<f64> {
    let grid = PairGrid::new(d, f, spec);
    let g = |t: f64| {
        let k2 = crate::kernels::k_d(d, t).powi(2);
        grid.moments(f, t)[0] * k2
    };
    zonal_with(d, &g, &[0.0, PI], spec.max_width, &[0.0, PI], spec)
}

/// [f]_{1,p}^p = ∫ |∇f|^p dσ for p ∈ {1, 2}.
pub fn h1_seminorm(d: usize, f: &ZonalFn, p: f64) -> Result<f64> {
    if !(p == 1.0 || p == 2.0) {
        return Err(Error::Domain(format!("p must be 1 or 2, got {p}")));
    }
    let g = |t: f64| ((f.profile_deriv)(t.cos()) * t.sin()).abs().powf(p);
    let spec = QuadratureSpec::default();
    zonal_with(d, &g, &[0.0, PI], spec.max_width, &[], &spec)
}

/// Total variation of cap-bump mollifications of χ_A, extrapolated ε → 0
/// (Richardson on the last three values).
pub fn mollified_variation(d: usize, cap: &Cap, eps: &[f64]) -> Result<f64> {
    if eps.len() < 3 || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Domain("need at least three decreasing ε values".into()));
    }
    if cap.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: cap.dim() });
    }
    let r = cap.radius();
    let vals = par::try_map_range(eps.len(), |i| mollified_tv(d, r, eps[i]))?;
    let scales: Vec<f64> = eps.iter().map(|e| 1.0 / e).collect();
    let t = crate::norm_limits::ConvergenceTable::from_values(&scales, &vals, crate::norm_limits::Model::Constant)?;
    Ok(t.limit.unwrap_or(*vals.last().unwrap()))
}

/// ∫|∇f_ε| dσ for f_ε = χ_A * η_ε with η_ε ∝ (1 - t/ε)_+ (normalized).
pub fn mollified_tv(d: usize, r: f64, eps: f64) -> Result<f64> {
    let spec = QuadratureSpec::default();
    let eta_raw = |t: f64| (1.0 - t / eps).max(0.0);
    let mass = zonal_with(d, &eta_raw, &[0.0, eps], eps / 8.0, &[], &spec)?;
    let c = colatitude_density(d);
    // f_ε(θ) = ∫ η(γ) · P(y ∈ A | d(x,y) = γ) over the γ-sphere
    let f_eps = |theta: f64| -> f64 {
        let inside = |g: f64| -> f64 {
            if d == 1 {
                let circ = |a: f64| {
                    let a = a.rem_euclid(2.0 * PI);
                    a.min(2.0 * PI - a)
                };
                0.5 * ((circ(theta + g) <= r) as u8 as f64 + (circ(theta - g) <= r) as u8 as f64)
            } else {
                arc_fraction_inside(d, r, theta, g)
            }
        };
        let integrand = |g: f64| eta_raw(g) * g.sin().powi(d as i32 - 1) * inside(g);
        let mut cuts = vec![0.0, eps];
        for b in [(theta - r).abs(), theta + r, 2.0 * PI - theta - r, r - theta] {
            if b > 0.0 && b < eps {
                cuts.push(b);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut s = 0.0;
        for w in cuts.windows(2) {
            s += tanh_sinh(integrand, w[0], w[1], 1e-16);
        }
        c * s / mass
    };
    let h = 1e-4 * eps;
    let deriv = |t: f64| {
        (-f_eps(t + 2.0 * h) + 8.0 * f_eps(t + h) - 8.0 * f_eps(t - h) + f_eps(t - 2.0 * h)) / (12.0 * h)
    };
    let lo = (r - eps).max(0.0);
    let hi = (r + eps).min(PI);
    let g = |t: f64| deriv(t).abs() * zonal_weight(d, t);
    let p = Panels::new(&[lo, r, hi], eps / 8.0, &[], 1e-7);
    Ok(p.integrate(&g, 16))
}

// ---------------------------------------------------------------------------
// Exact oracles

/// Var n_arc for CUE with N = 2L+1 points: tr T - tr T² for the Toeplitz
/// matrix of Fourier coefficients of the arc indicator.
pub fn cue_toeplitz_variance(l: usize, arc: &Cap) -> Result<f64> {
    if arc.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: arc.dim() });
    }
    Ok(cue_toeplitz_variance_arc(l, 2.0 * arc.radius()))
}

/// [`cue_toeplitz_variance`] for an arc of length `a` ∈ [0, 2π].
pub fn cue_toeplitz_variance_arc(l: usize, a: f64) -> f64 {
    let n = 2 * l + 1;
    let t0 = a / (2.0 * PI);
    let mut terms = Vec::with_capacity(2 * n);
    terms.push(n as f64 * t0 * (1.0 - t0));
    for m in 1..n {
        let tm = (0.5 * m as f64 * a).sin() / (m as f64 * PI);
        terms.push(-2.0 * (n - m) as f64 * tm * tm);
    }
    par::pairwise_sum(&terms)
}

/// Ginibre disk oracle: λ_k = P(k+1, LR²) and Var = Σ λ_k (1 - λ_k).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GinibreOracle {
    pub variance: f64,
    pub mean: f64,
    /// Σ_k λ_k(1-λ_k) over the discarded indices is below this.
    pub tail_bound: f64,
}

pub fn ginibre_disk_variance_exact(l: f64, r: f64) -> Result<GinibreOracle> {
    if !(l > 0.0 && r > 0.0) {
        return Err(Error::Domain(format!("need L, R > 0, got ({l}, {r})")));
    }
    let x = l * r * r;
    let jmax = (x + 40.0 * x.sqrt() + 60.0).ceil() as usize;
    // Poisson(x) pmf; λ_k = P(N > k), 1 - λ_k = P(N ≤ k)
    let pmf: Vec<f64> = (0..=jmax)
        .map(|j| (j as f64 * x.ln() - x - ln_gamma_pos(j as f64 + 1.0)).exp())
        .collect();
    let mut upper = vec![0.0; jmax + 2];
    for j in (0..=jmax).rev() {
        upper[j] = upper[j + 1] + pmf[j];
    }
    let mut lower = 0.0;
    let mut var_terms = Vec::with_capacity(jmax);
    let mut mean_terms = Vec::with_capacity(jmax);
    let mut tail_bound = 0.0;
    for k in 0..jmax {
        lower += pmf[k];
        let lam = upper[k + 1];
        let v = lam * lower;
        var_terms.push(v);
        mean_terms.push(lam);
        if k as f64 > x && v < 1e-16 {
            tail_bound = lam * (1.0 + x / (k as f64 + 2.0 - x).max(1.0));
            break;
        }
    }
    let mean = par::pairwise_sum(&mean_terms);
    if ((mean - x) / x.max(1e-300)).abs() > 1e-10 && x > 1e-8 {
        return Err(Error::Inconsistency { a: mean, b: x, gap: (mean - x).abs() / x });
    }
    Ok(GinibreOracle {
        variance: par::pairwise_sum(&var_terms),
        mean,
        tail_bound,
    })
}

/// Nyström discretization of the sine kernel restricted to an interval.
#[derive(Debug, Clone, Serialize)]
pub struct NystromReport {
    pub variance: f64,
    pub trace: f64,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
    /// Largest distance of an eigenvalue outside [0, 1] before clipping.
    pub clip: f64,
    pub nodes: usize,
}

pub fn nystrom_variance(k: &EnsembleKernel, a: f64, b: f64, nodes: usize) -> Result<NystromReport> {
    let EnsembleKernel::Bessel { d: 1, l, .. } = *k else {
        return Err(Error::Domain("Nyström oracle supports the d = 1 Bessel kernel".into()));
    };
    if !(b > a) {
        return Err(Error::Domain("empty interval".into()));
    }
    let need = (8.0 * l * (b - a)).ceil() as usize;
    if nodes < need {
        return Err(Error::Resolution(format!("{nodes} nodes < 8·L·|I| = {need}")));
    }
    let order = 16;
    let panels = nodes.div_ceil(order);
    let p = Panels::new(&[a, b], (b - a) / panels as f64 * (1.0 + 1e-12), &[], 1e-7);
    let pts = panel_nodes(&p, order);
    let n = pts.len();
    let sw: Vec<f64> = pts.iter().map(|&(_, w)| w.sqrt()).collect();
    let m = DMatrix::from_fn(n, n, |i, j| sw[i] * sw[j] * k.profile(pts[i].0 - pts[j].0));
    let eig = SymmetricEigen::new(m);
    let ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let min = ev.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let clip = (-min).max(max - 1.0).max(0.0);
    if clip > 1e-6 {
        return Err(Error::Resolution(format!("eigenvalues leave [0,1] by {clip:e}")));
    }
    let terms: Vec<f64> = ev
        .iter()
        .map(|&x| {
            let x = x.clamp(0.0, 1.0);
            x * (1.0 - x)
        })
        .collect();
    Ok(NystromReport {
        variance: par::pairwise_sum(&terms),
        trace: par::pairwise_sum(&ev),
        min_eigenvalue: min,
        max_eigenvalue: max,
        clip,
        nodes: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zonal_examples() {
        let s = QuadratureSpec::default();
        assert!((zonal_double_integral(2, |_| 1.0, &s).unwrap() - 1.0).abs() < 1e-13);
        assert!((zonal_double_integral(1, |t| t, &s).unwrap() - PI / 2.0).abs() < 1e-13);
        let k = EnsembleKernel::spherical(12).unwrap();
        let v = zonal_double_integral(2, |t| k.second_intensity(t), &s).unwrap();
        assert!((v - 12.0).abs() < 1e-10);
    }

    #[test]
    fn toeplitz_hand_value() {
        let arc = Cap::polar(1, PI / 2.0).unwrap();
        let v = cue_toeplitz_variance(1, &arc).unwrap();
        assert!((v - (0.75 - 4.0 / (PI * PI))).abs() < 1e-14);
        assert!(cue_toeplitz_variance_arc(7, 2.0 * PI).abs() < 1e-13);
    }

    #[test]
    fn covariogram_interval() {
        let i = EuclidSet::interval(0.0, 2.0).unwrap();
        assert_eq!(i.covariogram(0.5), 1.0);
        assert_eq!(i.covariogram(3.0), 4.0);
        assert_eq!(i.covariogram(0.0), 0.0);
    }

    #[test]
    fn h1_examples() {
        let f = ZonalFn::cos_theta();
        assert!((h1_seminorm(2, &f, 2.0).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((h1_seminorm(2, &f, 1.0).unwrap() - PI / 4.0).abs() < 1e-12);
        assert_eq!(h1_seminorm(2, &ZonalFn::constant(3.0), 2.0).unwrap(), 0.0);
    }
}
