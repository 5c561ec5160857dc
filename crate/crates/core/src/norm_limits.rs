//! Mollifier conditions, nonlocal functionals I_{d,p}(ρ, f), named
//! constants and the extrapolation engine used for every limit table.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrate::{self, Panels};
use crate::kernels::{Domain, EnsembleKernel, Mollifier, MollifierFamily};
use crate::par;
use crate::quadrature::{
    cap_cross_measure, h1_seminorm, zonal_with, EuclidProfile, EuclidSet, PairGrid, QuadratureSpec,
};
use crate::specfun::ln_gamma_pos;
use crate::sphere_geom::{cap_bv_variation, colatitude_density, omega, Cap, ZonalFn};

/// Closed form against quadrature for one named constant.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantReport {
    pub name: String,
    pub closed_form_value: f64,
    pub quadrature_value: f64,
    pub relative_gap: f64,
}

impl ConstantReport {
    pub fn new(name: impl Into<String>, closed: f64, quad: f64) -> Self {
        ConstantReport {
            name: name.into(),
            closed_form_value: closed,
            quadrature_value: quad,
            relative_gap: (closed - quad).abs() / closed.abs().max(1e-300),
        }
    }
}

/// K_{d,p} = ∫_{S^{d-1}} |⟨e, ξ⟩|^p dσ(ξ) (normalized measure).
pub fn constant_k_dp(d: usize, p: u32) -> Result<ConstantReport> {
    if d == 0 || !(p == 1 || p == 2) {
        return Err(Error::Domain(format!("need d >= 1 and p in {{1,2}}, got ({d}, {p})")));
    }
    let closed = if p == 1 {
        let h = 0.5 * d as f64;
        (ln_gamma_pos(h) - ln_gamma_pos(h + 0.5)).exp() / PI.sqrt()
    } else {
        1.0 / d as f64
    };
    let quad = if d == 1 {
        // S^0 = {±1}
        1.0
    } else {
        let c = colatitude_density(d - 1);
        let f = |phi: f64| phi.cos().abs().powi(p as i32) * phi.sin().powi(d as i32 - 2);
        let pan = Panels::new(&[0.0, 0.5 * PI, PI], PI / 8.0, &[], 1e-7);
        c * integrate::adaptive(&f, &pan, 16, 1e-14, 1e-300, 6)?.value
    };
    Ok(ConstantReport::new(format!("K_{{{d},{p}}}"), closed, quad))
}

/// K_d = K_{d,1}.
pub fn constant_k_d(d: usize) -> f64 {
    let h = 0.5 * d as f64;
    (ln_gamma_pos(h) - ln_gamma_pos(h + 0.5)).exp() / PI.sqrt()
}

/// C_N^α = 2N² ∫_0^∞ r (2 arctan r)^α (1+r²)^{-(N+1)} dr, evaluated after
/// r = tan(θ/2) as N² ∫_0^π θ^α sin(θ/2) cos^{2N-1}(θ/2) dθ.
pub fn spherical_mollifier_norms(n: usize, alpha: u32) -> Result<f64> {
    if n == 0 || !(alpha == 1 || alpha == 2) {
        return Err(Error::Domain(format!("need N >= 1 and alpha in {{1,2}}, got ({n}, {alpha})")));
    }
    let nf = n as f64;
    let e = 2.0 * nf - 1.0;
    // beyond this the integrand is below e^-750
    let upper = if n == 1 {
        PI
    } else {
        (2.0 * (-750.0 / e).exp().acos()).min(PI)
    };
    let f = |t: f64| {
        let c = (0.5 * t).cos();
        if c <= 0.0 {
            return 0.0;
        }
        t.powi(alpha as i32) * (0.5 * t).sin() * (e * c.ln()).exp()
    };
    let width = (0.25 / nf.sqrt()).min(PI / 8.0);
    let pan = Panels::new(&[0.0, upper], width, &[], 1e-7);
    Ok(nf * nf * integrate::adaptive(&f, &pan, 16, 1e-13, 1e-300, 6)?.value)
}

/// Closed form √π N Γ(N+1/2)/Γ(N+1) of C_N^1.
pub fn spherical_mollifier_closed_form(n: usize) -> f64 {
    let nf = n as f64;
    PI.sqrt() * nf * (ln_gamma_pos(nf + 0.5) - ln_gamma_pos(nf + 1.0)).exp()
}

/// C_L = ∫ K_L(d(x,y))² d(x,y) dσ(x) for the harmonic kernel.
pub fn harmonic_c_l(d: usize, l: usize) -> Result<f64> {
    let k = EnsembleKernel::harmonic(d, l)?;
    let spec = QuadratureSpec::default();
    let f = |t: f64| k.second_intensity(t) * t;
    zonal_with(d, &f, &[0.0, PI], k.panel_width(), &[], &spec)
}

// ---------------------------------------------------------------------------
// Extrapolation

/// Asymptotic model used by [`limit_table`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Model {
    /// v(s) → V; Richardson with the order fitted from the last three points.
    Constant,
    /// v(s) ≈ c·log s + b by least squares.
    LogSlope,
    /// v(s) ≈ V + c/log s by least squares (logarithmic approach).
    InverseLog,
}

/// A table of values over scales with the fitted asymptotics.
#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceTable {
    pub model: Model,
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    /// Extrapolated limit (constant and inverse-log models).
    pub limit: Option<f64>,
    /// Fitted order p of v = V + c s^{-p}.
    pub order: Option<f64>,
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Largest relative deviation of the least-squares fit.
    pub residual: Option<f64>,
    /// Largest relative gap between successive values.
    pub cauchy: f64,
    /// False when the tail is not monotone or the fit is degenerate.
    pub converged: bool,
}

fn cauchy_gap(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs() / w[1].abs().max(1e-300))
        .fold(0.0, f64::max)
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let resid = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - (icpt + slope * a)).abs() / b.abs().max(1e-300))
        .fold(0.0, f64::max);
    (slope, icpt, resid)
}

/// Richardson step on three points: (limit, order) or None when the
/// differences do not shrink monotonically.
fn richardson3(s: [f64; 3], v: [f64; 3]) -> Option<(f64, f64)> {
    let d1 = v[1] - v[0];
    let d2 = v[2] - v[1];
    if d2 == 0.0 {
        return Some((v[2], f64::INFINITY));
    }
    let q = d1 / d2;
    if !(q > 1.0) {
        return None;
    }
    let ratio = |p: f64| (s[0].powf(-p) - s[1].powf(-p)) / (s[1].powf(-p) - s[2].powf(-p));
    let (mut lo, mut hi) = (1e-3, 12.0);
    if (ratio(lo) - q) * (ratio(hi) - q) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (ratio(lo) - q) * (ratio(mid) - q) <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    let c = d2 / (s[2].powf(-p) - s[1].powf(-p));
    Some((v[2] - c * s[2].powf(-p), p))
}

impl ConvergenceTable {
    /// Fit a model to precomputed values (at least three scales).
    pub fn from_values(scales: &[f64], values: &[f64], model: Model) -> Result<Self> {
        if scales.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: scales.len(),
                got: values.len(),
            });
        }
        if scales.len() < 3 || scales.windows(2).any(|w| w[1] <= w[0]) || scales[0] <= 0.0 {
            return Err(Error::Domain("need at least three positive increasing scales".into()));
        }
        let mut t = ConvergenceTable {
            model,
            scales: scales.to_vec(),
            values: values.to_vec(),
            limit: None,
            order: None,
            slope: None,
            intercept: None,
            residual: None,
            cauchy: cauchy_gap(values),
            converged: false,
        };
        let n = scales.len();
        match model {
            Model::Constant => {
                let s = [scales[n - 3], scales[n - 2], scales[n - 1]];
                let v = [values[n - 3], values[n - 2], values[n - 1]];
                match richardson3(s, v) {
                    Some((lim, p)) => {
                        t.limit = Some(lim);
                        t.order = Some(p);
                        t.converged = true;
                    }
                    None => t.limit = Some(v[2]),
                }
            }
            Model::LogSlope => {
                let x: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
                let (a, b, r) = least_squares(&x, values);
                t.slope = Some(a);
                t.intercept = Some(b);
                t.residual = Some(r);
                t.converged = a.is_finite();
            }
            Model::InverseLog => {
                if scales[0] <= 1.0 {
                    return Err(Error::Domain("inverse-log model needs scales > 1".into()));
                }
                let x: Vec<f64> = scales.iter().map(|s| 1.0 / s.ln()).collect();
                let (a, b, r) = least_squares(&x, values);
                t.slope = Some(a);
                t.intercept = Some(b);
                t.limit = Some(b);
                t.residual = Some(r);
                t.converged = b.is_finite();
            }
        }
        Ok(t)
    }
}

/// Evaluate `generator` at each scale (concurrently) and fit `model`.
pub fn limit_table<F>(generator: F, scales: &[f64], model: Model) -> Result<ConvergenceTable>
where
    F: Fn(f64) -> Result<f64> + Sync + Send,
{
    if scales.len() < 4 {
        return Err(Error::Domain("limit tables need at least four scales".into()));
    }
    let values = par::try_map_range(scales.len(), |i| generator(scales[i]))?;
    ConvergenceTable::from_values(scales, &values, model)
}

// ---------------------------------------------------------------------------
// Mollifier conditions

/// One scale of a sphere mollifier check.
#[derive(Debug, Clone, Serialize)]
pub struct MollifierRow {
    pub scale: f64,
    /// ∫ρ_L dσ.
    pub mass: f64,
    /// ∫_{B(y,δ)^c} ρ_L dσ.
    pub tail: f64,
    /// Mass under the closed-form normalizer, if the family has one.
    pub closed_form_mass: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MollifierReport {
    pub family: String,
    pub delta: f64,
    pub rows: Vec<MollifierRow>,
    pub unit_mass: bool,
    pub tail_decreasing: bool,
    pub pass: bool,
}

/// Q(ρ) = (ω_{d-1}/ω_d) ∫_0^π ρ(r) sin^{d-1} r dr.
pub fn q_rho(rho: &Mollifier) -> Result<f64> {
    let Domain::Sphere(d) = rho.domain else {
        return Err(Error::Domain("Q(ρ) is defined for sphere families".into()));
    };
    let upper = rho.support.unwrap_or(PI).min(PI);
    let f = |t: f64| rho.density(t);
    zonal_with(d, &f, &[0.0, upper], rho.width, &[], &QuadratureSpec::default())
}

/// Conditions (i) unit mass and (ii) vanishing mass outside B(y, δ).
pub fn mollifier_check_sphere(fam: &MollifierFamily, scales: &[f64], delta: f64) -> Result<MollifierReport> {
    let Domain::Sphere(d) = fam.domain else {
        return Err(Error::Domain("expected a sphere family".into()));
    };
    if !(delta > 0.0 && delta < PI) {
        return Err(Error::Domain(format!("δ must lie in (0, π), got {delta}")));
    }
    let spec = QuadratureSpec::default();
    let rows = par::try_map_range(scales.len(), |i| -> Result<MollifierRow> {
        let m = fam.at(scales[i])?;
        let upper = m.support.unwrap_or(PI).min(PI);
        let f = |t: f64| m.density(t);
        let mass = zonal_with(d, &f, &[0.0, upper], m.width, &[], &spec)?;
        let tail = if delta >= upper {
            0.0
        } else {
            zonal_with(d, &f, &[delta, upper], m.width, &[], &spec)?
        };
        let closed_form_mass = m.closed_form_normalizer.map(|p| mass * m.normalizer / p);
        Ok(MollifierRow {
            scale: scales[i],
            mass,
            tail,
            closed_form_mass,
        })
    })?;
    let unit_mass = rows.iter().all(|r| (r.mass - 1.0).abs() <= 1e-8);
    let tail_decreasing = rows.windows(2).all(|w| w[1].tail <= w[0].tail);
    let last = rows.last().map(|r| r.tail).unwrap_or(f64::INFINITY);
    Ok(MollifierReport {
        family: fam.label.clone(),
        delta,
        pass: unit_mass && tail_decreasing && last < 1e-2,
        rows,
        unit_mass,
        tail_decreasing,
    })
}

/// One scale of a Euclidean quasi-mollifier check.
#[derive(Debug, Clone, Serialize)]
pub struct QuasiRow {
    pub scale: f64,
    /// (a) ∫_{|x|>R} ρ(|x|)/|x| dx.
    pub outer_over_t: f64,
    /// (b) ∫_{|x|<R} ρ(|x|) dx.
    pub inner_mass: f64,
    /// (c) sup_{t>R} ρ(t) t^d on a sampling grid.
    pub sup_tail: f64,
    /// (b) under the closed-form normalizer.
    pub closed_form_inner_mass: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct QuasiReport {
    pub family: String,
    pub radius: f64,
    pub rows: Vec<QuasiRow>,
    /// Fit of (a) against 1/log L; the intercept is the extrapolated limit.
    pub outer_fit: ConvergenceTable,
    /// Fit of (b) against 1/log L.
    pub inner_fit: ConvergenceTable,
    /// Fit of (b) under the closed-form normalizer, when available.
    pub closed_form_inner_fit: Option<ConvergenceTable>,
    pub pass_a: bool,
    pub pass_b: bool,
    pub pass_c: bool,
    /// (a) and (b) already within tolerance at the largest scale.
    pub reached: bool,
    /// max over scales of the (c) values.
    pub c_r: f64,
}

/// Tolerance on the extrapolated limits of (a) and (b).
pub const QUASI_LIMIT_TOL: f64 = 2e-2;

/// Conditions (a), (b), (c) over a sequence of scales.
///
/// Both (a) and (b) may approach their limits only like 1/log L, so each
/// passes when its values move monotonically toward the target and either
/// the largest scale or the least-squares fit in 1/log L lands within
/// [`QUASI_LIMIT_TOL`] of it. (c) passes when the sampled suprema do not
/// grow with L.
pub fn quasimollifier_check_euclid(fam: &MollifierFamily, scales: &[f64], radius: f64) -> Result<QuasiReport> {
    let Domain::Euclid(d) = fam.domain else {
        return Err(Error::Domain("expected a Euclidean family".into()));
    };
    if !(radius > 0.0) {
        return Err(Error::Domain("R must be positive".into()));
    }
    let wd = omega(d - 1);
    let rows = par::try_map_range(scales.len(), |i| -> Result<QuasiRow> {
        let m = fam.at(scales[i])?;
        let spec = QuadratureSpec::default();
        let radial = |t: f64| m.density(t) * wd * t.powi(d as i32 - 1);
        let reach = m.support.map(|s| s.min(radius)).unwrap_or(radius);
        let pin = Panels::new(&[0.0, reach], m.width, &[], spec.min_width);
        let inner_mass = integrate::adaptive(&radial, &pin, spec.order, 1e-10, 1e-300, spec.max_refine)?.value;
        let big = m.tail_start().max(radius);
        let outer_num = if m.support.is_some_and(|s| s <= radius) {
            0.0
        } else {
            let top = m.support.map(|s| s.min(big)).unwrap_or(big);
            let g = |t: f64| radial(t) / t;
            let pout = Panels::new(&[radius, top], m.width, &[], spec.min_width);
            integrate::adaptive(&g, &pout, spec.order, 1e-10, 1e-300, spec.max_refine)?.value
        };
        let outer_over_t = outer_num + m.tail_over_t(big);
        // (c) on a grid fine enough to see the oscillation peaks
        let mut top = big.max(4.0 * radius).max(radius + 256.0 * m.width);
        if let Some(s) = m.support {
            top = top.min(s.max(radius));
        }
        let nsamp = (((top - radius) / m.width).ceil() as usize * 8).clamp(64, 4_000_000);
        let sup_tail = (0..=nsamp)
            .map(|j| {
                let t = radius + (top - radius) * j as f64 / nsamp as f64;
                m.density(t) * t.powi(d as i32)
            })
            .fold(0.0, f64::max);
        Ok(QuasiRow {
            scale: scales[i],
            outer_over_t,
            inner_mass,
            sup_tail,
            closed_form_inner_mass: m.closed_form_normalizer.map(|p| inner_mass * m.normalizer / p),
        })
    })?;
    let col = |f: &dyn Fn(&QuasiRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    let a = col(&|r| r.outer_over_t);
    let b = col(&|r| r.inner_mass);
    let c = col(&|r| r.sup_tail);
    let outer_fit = ConvergenceTable::from_values(scales, &a, Model::InverseLog)?;
    let inner_fit = ConvergenceTable::from_values(scales, &b, Model::InverseLog)?;
    let closed_form_inner_fit = if rows.iter().all(|r| r.closed_form_inner_mass.is_some()) {
        let pb = col(&|r| r.closed_form_inner_mass.unwrap());
        Some(ConvergenceTable::from_values(scales, &pb, Model::InverseLog)?)
    } else {
        None
    };
    let toward = |v: &[f64], target: f64| {
        v.windows(2)
            .all(|w| (w[1] - target).abs() <= (w[0] - target).abs() + 1e-12)
    };
    let near = |x: f64, target: f64| (x - target).abs() < QUASI_LIMIT_TOL;
    let reached_a = near(a[a.len() - 1], 0.0);
    let reached_b = near(b[b.len() - 1], 1.0);
    let pass_a = toward(&a, 0.0) && (reached_a || outer_fit.limit.is_some_and(|l| near(l, 0.0)));
    let pass_b = toward(&b, 1.0) && (reached_b || inner_fit.limit.is_some_and(|l| near(l, 1.0)));
    let pass_c = c.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    Ok(QuasiReport {
        family: fam.label.clone(),
        radius,
        c_r: c.iter().copied().fold(0.0, f64::max),
        rows,
        outer_fit,
        inner_fit,
        closed_form_inner_fit,
        pass_a,
        pass_b,
        pass_c,
        reached: reached_a && reached_b,
    })
}

// ---------------------------------------------------------------------------
// Nonlocal functionals

/// Test functions for I_{d,p}.
#[derive(Debug, Clone)]
pub enum TestFn {
    Zonal(ZonalFn),
    Cap(Cap),
    Set(EuclidSet),
    Profile(EuclidProfile),
}

impl TestFn {
    /// [f]_BV: ∫|∇f| dσ for smooth zonal f, perimeter for sets.
    pub fn bv_seminorm(&self) -> Result<f64> {
        match self {
            TestFn::Zonal(f) => {
                // dimension is irrelevant to the identification; callers use d of the family
                Err(Error::Domain(format!("use h1_seminorm(d, {}, 1) for zonal functions", f.label)))
            }
            TestFn::Cap(c) => Ok(cap_bv_variation(c)),
            TestFn::Set(s) => Ok(s.perimeter()),
            TestFn::Profile(_) => Err(Error::Domain("BV seminorm of profiles is not implemented".into())),
        }
    }
}

/// I_{d,p}(ρ_L, f) = ∬ |f(x)-f(y)|^p / d(x,y)^p ρ_L(d(x,y)) for the family
/// member at `scale`.
pub fn nonlocal_functional(
    d: usize,
    fam: &MollifierFamily,
    f: &TestFn,
    p: u32,
    scale: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if fam.domain.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: fam.domain.dim(),
            got: d,
        });
    }
    let m = fam.at(scale)?;
    nonlocal_with(&m, f, p, spec)
}

/// [`nonlocal_functional`] for an explicit family member.
pub fn nonlocal_with(rho: &Mollifier, f: &TestFn, p: u32, spec: &QuadratureSpec) -> Result<f64> {
    if !(p == 1 || p == 2) {
        return Err(Error::Domain(format!("p must be 1 or 2, got {p}")));
    }
    let pf = p as f64;
    match (rho.domain, f) {
        (Domain::Sphere(d), TestFn::Zonal(z)) => {
            let grid = PairGrid::new(d, z, spec);
            let upper = rho.support.unwrap_or(PI).min(PI);
            let g = |t: f64| grid.abs_moment(z, t, pf) * t.powf(-pf) * rho.density(t);
            zonal_with(d, &g, &[0.0, upper], rho.width, &[0.0], spec)
        }
        (Domain::Sphere(d), TestFn::Cap(c)) => {
            if c.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: c.dim() });
            }
            let r = c.radius();
            let upper = rho.support.unwrap_or(PI).min(PI);
            let mut breaks = vec![0.0, upper];
            let graded: Vec<f64> = [r, 2.0 * r, 2.0 * PI - 2.0 * r, PI - r]
                .into_iter()
                .filter(|&b| b > 0.0 && b < upper)
                .collect();
            breaks.extend(&graded);
            let tol = spec.inner_tol;
            // |χ(x)-χ(y)|^p is the crossing indicator; both orders count
            let g = |t: f64| 2.0 * cap_cross_measure(d, r, t, tol) * t.powf(-pf) * rho.density(t);
            zonal_with(d, &g, &breaks, rho.width, &graded, spec)
        }
        (Domain::Euclid(d), TestFn::Set(s)) => {
            if s.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.dim() });
            }
            let wd = omega(d - 1);
            let t_sat = s.saturation();
            let big = rho.tail_start().max(t_sat);
            let top = rho.support.map(|x| x.min(big)).unwrap_or(big);
            let g = |t: f64| s.covariogram(t) * t.powf(-pf) * rho.density(t) * wd * t.powi(d as i32 - 1);
            let mut brk = vec![0.0, top];
            if t_sat < top {
                brk.push(t_sat);
            }
            let pan = Panels::new(&brk, rho.width, &[t_sat], spec.min_width);
            let num = integrate::adaptive(&g, &pan, spec.order, spec.rel_tol, 1e-300, spec.max_refine)?.value;
            let tail = if p == 1 {
                2.0 * s.measure() * rho.tail_over_t(big)
            } else if rho.support.is_some_and(|x| x <= big) {
                0.0
            } else {
                return Err(Error::Domain("p = 2 tails are only available for compact families".into()));
            };
            Ok(num + tail)
        }
        (Domain::Euclid(1), TestFn::Profile(e)) => {
            let w = e.support.1 - e.support.0;
            let big = rho.tail_start().max(w);
            let top = rho.support.map(|x| x.min(big)).unwrap_or(big);
            let g = |t: f64| 2.0 * e.difference_moment(t, pf) * t.powf(-pf) * rho.density(t);
            let pan = Panels::new(&[0.0, top.min(w), top], rho.width, &[], spec.min_width);
            let num = integrate::adaptive(&g, &pan, spec.order, spec.rel_tol, 1e-300, spec.max_refine)?.value;
            let tail = if p == 1 {
                2.0 * e.lp_norm_p(1.0) * rho.tail_over_t(big)
            } else if rho.support.is_some_and(|x| x <= big) {
                0.0
            } else {
                return Err(Error::Domain("p = 2 tails are only available for compact families".into()));
            };
            Ok(num + tail)
        }
        _ => Err(Error::Domain("test function and family live on different domains".into())),
    }
}

/// Right-hand side K_d·Q(ρ)·[f]_BV of the upper bound for I_{d,1}.
pub fn davila_upper_bound(rho: &Mollifier, f: &TestFn) -> Result<f64> {
    let Domain::Sphere(d) = rho.domain else {
        return Err(Error::Domain("upper bound is stated for sphere families".into()));
    };
    let bv = match f {
        TestFn::Zonal(z) => h1_seminorm(d, z, 1.0)?,
        other => other.bv_seminorm()?,
    };
    Ok(constant_k_d(d) * q_rho(rho)? * bv)
}

/// C_N^α rows for the constants table: C_1^1 exactly, and the two limits.
pub fn spherical_constant_reports(n: usize) -> Result<Vec<ConstantReport>> {
    Ok(vec![
        ConstantReport::new("C_1^1", PI / 2.0, spherical_mollifier_norms(1, 1)?),
        ConstantReport::new(
            format!("C_{n}^1 closed form"),
            spherical_mollifier_closed_form(n),
            spherical_mollifier_norms(n, 1)?,
        ),
        ConstantReport::new(
            format!("C_{n}^1/sqrt(N) vs sqrt(pi)"),
            PI.sqrt(),
            spherical_mollifier_norms(n, 1)? / (n as f64).sqrt(),
        ),
        ConstantReport::new(format!("C_{n}^2 vs 4"), 4.0, spherical_mollifier_norms(n, 2)?),
    ])
}
