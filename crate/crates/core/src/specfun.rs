//! Log-gamma, Jacobi polynomials and Bessel functions of the first kind.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Largest polynomial degree accepted by [`jacobi_p`] by default.
pub const DEFAULT_MAX_DEGREE: usize = 4096;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// `zeta(k) - 1` for k = 0..=ZETA_TERMS (entries 0 and 1 unused).
const ZETA_TERMS: usize = 60;

fn zeta_minus_one() -> &'static [f64; ZETA_TERMS + 1] {
    static Z: OnceLock<[f64; ZETA_TERMS + 1]> = OnceLock::new();
    Z.get_or_init(|| {
        // Euler–Maclaurin with cut-off M: sum_{n=2}^{M-1} n^-k + tail.
        const M: f64 = 16.0;
        // B_2j / (2j)!
        const B: [f64; 6] = [
            1.0 / 12.0,
            -1.0 / 720.0,
            1.0 / 30240.0,
            -1.0 / 1209600.0,
            1.0 / 47900160.0,
            -691.0 / 1307674368000.0,
        ];
        let mut z = [0.0; ZETA_TERMS + 1];
        for (k, slot) in z.iter_mut().enumerate().skip(2) {
            let s = k as f64;
            let mut head = 0.0;
            for n in (2..16).rev() {
                head += (n as f64).powf(-s);
            }
            let mut tail = M.powf(1.0 - s) / (s - 1.0) + 0.5 * M.powf(-s);
            // rising factorial s(s+1)...(s+2j-2) times M^{-s-2j+1}
            let mut rising = s;
            let mut mpow = M.powf(-s - 1.0);
            for (j, b) in B.iter().enumerate() {
                tail += b * rising * mpow;
                let a = s + 2.0 * j as f64 + 1.0;
                rising *= a * (a + 1.0);
                mpow /= M * M;
            }
            *slot = head + tail;
        }
        z
    })
}

/// ln Γ(1+z) for |z| ≤ 1/2 by the series
/// -ln(1+z) + z(1-γ) + Σ_{k≥2} (-1)^k (ζ(k)-1) z^k / k.
fn ln_gamma_1p(z: f64) -> f64 {
    let zm1 = zeta_minus_one();
    let mut sum = 0.0;
    let mut zk = -z;
    for (k, c) in zm1.iter().enumerate().skip(2) {
        zk *= -z;
        let term = c * zk / k as f64;
        sum += term;
        if term.abs() < 1e-19 * sum.abs().max(1e-300) {
            break;
        }
    }
    -z.ln_1p() + z * (1.0 - EULER_GAMMA) + sum
}

fn stirling(x: f64) -> f64 {
    // B_2k / (2k(2k-1))
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360360.0,
        1.0 / 156.0,
        -3617.0 / 122400.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut p = inv;
    for c in C {
        series += c * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + series
}

/// Natural logarithm of the gamma function for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma needs x > 0, got {x}")));
    }
    Ok(ln_gamma_pos(x))
}

/// Unchecked [`log_gamma`] used internally (x must be positive).
pub(crate) fn ln_gamma_pos(x: f64) -> f64 {
    if x >= 12.0 {
        return stirling(x);
    }
    if x < 0.5 {
        // Γ(x) = Γ(x+1)/x
        return ln_gamma_pos(x + 1.0) - x.ln();
    }
    if x <= 1.5 {
        return ln_gamma_1p(x - 1.0);
    }
    if x <= 2.5 {
        // Γ(x) = (x-1)Γ(x-1), x-1 in (0.5, 1.5]
        let z = x - 2.0;
        return z.ln_1p() + ln_gamma_1p(z);
    }
    // shift down into (1.5, 2.5]
    let mut y = x;
    let mut acc = 0.0;
    while y > 2.5 {
        y -= 1.0;
        acc += y.ln();
    }
    acc + ln_gamma_pos(y)
}

/// Γ(x) for moderate positive x.
pub fn gamma(x: f64) -> Result<f64> {
    log_gamma(x).map(f64::exp)
}

/// Parameters of a Jacobi polynomial P_n^{(α,β)}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiParams {
    pub alpha: f64,
    pub beta: f64,
    pub degree: usize,
}

impl JacobiParams {
    pub fn new(alpha: f64, beta: f64, degree: usize) -> Result<Self> {
        Self::with_max_degree(alpha, beta, degree, DEFAULT_MAX_DEGREE)
    }

    pub fn with_max_degree(alpha: f64, beta: f64, degree: usize, max_degree: usize) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::Domain(format!("jacobi parameters must exceed -1: ({alpha}, {beta})")));
        }
        if degree > max_degree {
            return Err(Error::Domain(format!("jacobi degree {degree} exceeds maximum {max_degree}")));
        }
        Ok(JacobiParams { alpha, beta, degree })
    }
}

/// P_n^{(α,β)}(t) by the three-term recurrence in the degree.
pub fn jacobi_p(params: JacobiParams, t: f64) -> Result<f64> {
    if !(t.abs() <= 1.0) {
        return Err(Error::Domain(format!("jacobi_p needs |t| <= 1, got {t}")));
    }
    Ok(jacobi_unchecked(params.alpha, params.beta, params.degree, t))
}

pub(crate) fn jacobi_unchecked(a: f64, b: f64, n: usize, t: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut p0 = 1.0;
    let mut p1 = (a + 1.0) + 0.5 * (a + b + 2.0) * (t - 1.0);
    let ab = a + b;
    let a2b2 = a * a - b * b;
    for k in 2..=n {
        let k = k as f64;
        let c = 2.0 * k + ab;
        let d1 = 2.0 * k * (k + ab) * (c - 2.0);
        let a1 = (c - 1.0) * (c * (c - 2.0) * t + a2b2);
        let a2 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c;
        let p2 = (a1 * p1 - a2 * p0) / d1;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// Bessel function J_ν(z) for ν a non-negative multiple of 1/2 and z ≥ 0.
pub fn bessel_j(nu: f64, z: f64) -> Result<f64> {
    if !(z >= 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("bessel_j needs z >= 0, got {z}")));
    }
    let twice = 2.0 * nu;
    if !(nu >= 0.0) || (twice - twice.round()).abs() > 1e-12 {
        return Err(Error::Domain(format!("bessel_j supports orders k/2 only, got {nu}")));
    }
    Ok(bessel_unchecked(nu, z))
}

pub(crate) fn bessel_unchecked(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if z < 12.0_f64.max(2.0 * nu) {
        bessel_series(nu, z)
    } else {
        bessel_asymptotic(nu, z)
    }
}

fn bessel_series(nu: f64, z: f64) -> f64 {
    let h = 0.5 * z;
    let q = -h * h;
    // first term (z/2)^ν / Γ(ν+1)
    let mut term = (nu * h.ln() - ln_gamma_pos(nu + 1.0)).exp();
    let mut sum = term;
    for k in 1..400 {
        let k = k as f64;
        term *= q / (k * (k + nu));
        sum += term;
        if term.abs() < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

/// Hankel expansion. For half-integer ν ≤ 5/2 the first two corrections
/// already make it exact; otherwise terms are added while they decrease.
fn bessel_asymptotic(nu: f64, z: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let w = z - 0.5 * nu * PI - 0.25 * PI;
    let x8 = 8.0 * z;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * x8);
        if term == 0.0 {
            break;
        }
        let mag = term.abs();
        if mag > last {
            break;
        }
        last = mag;
        // k odd feeds Q with sign (-1)^((k-1)/2); k even feeds P with sign (-1)^(k/2)
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if mag < 1e-17 {
            break;
        }
    }
    (2.0 / (PI * z)).sqrt() * (p * w.cos() - q * w.sin())
}

/// Binomial coefficient C(x + n, n) for real x, via log-gamma.
pub fn binom_real(x: f64, n: usize) -> f64 {
    (ln_gamma_pos(x + n as f64 + 1.0) - ln_gamma_pos(n as f64 + 1.0) - ln_gamma_pos(x + 1.0)).exp()
}

/// Sine integral tail ∫_x^∞ sin(t)/t dt for x ≥ 64 (asymptotic auxiliary functions).
pub(crate) fn si_tail(x: f64) -> f64 {
    debug_assert!(x >= 64.0);
    let inv2 = 1.0 / (x * x);
    // f(x) ~ 1/x Σ (-1)^k (2k)!/x^{2k}, g(x) ~ 1/x² Σ (-1)^k (2k+1)!/x^{2k}
    let mut f = 0.0;
    let mut g = 0.0;
    let mut tf = 1.0;
    let mut tg = 1.0;
    for k in 0..30 {
        f += tf;
        g += tg;
        let kk = k as f64;
        let nf = -tf * (2.0 * kk + 1.0) * (2.0 * kk + 2.0) * inv2;
        let ng = -tg * (2.0 * kk + 2.0) * (2.0 * kk + 3.0) * inv2;
        if nf.abs() > tf.abs() || nf.abs() < 1e-18 {
            break;
        }
        tf = nf;
        tg = ng;
    }
    let f = f / x;
    let g = g * inv2;
    f * x.cos() + g * x.sin()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_gamma_examples() {
        assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14 * 24f64.ln());
        let half = PI.sqrt().ln();
        assert!((log_gamma(0.5).unwrap() - half).abs() < 1e-14 * half);
        let v = (15.0 * PI.sqrt() / 8.0).ln();
        assert!((log_gamma(3.5).unwrap() - v).abs() < 1e-13 * v);
        assert!(log_gamma(0.0).is_err());
        assert!(log_gamma(-1.5).is_err());
    }

    #[test]
    fn jacobi_examples() {
        let p = JacobiParams::new(1.0, 0.0, 1).unwrap();
        assert!((jacobi_p(p, 1.0).unwrap() - 2.0).abs() < 1e-15);
        assert!((jacobi_p(p, 0.0).unwrap() - 0.5).abs() < 1e-15);
        let p0 = JacobiParams::new(0.3, -0.7, 0).unwrap();
        assert_eq!(jacobi_p(p0, 0.1).unwrap(), 1.0);
        assert!(JacobiParams::new(0.0, 0.0, 5000).is_err());
        assert!(jacobi_p(p, 1.5).is_err());
    }

    #[test]
    fn bessel_examples() {
        assert!((bessel_j(0.5, PI / 2.0).unwrap() - 2.0 / PI).abs() < 1e-14);
        assert_eq!(bessel_j(1.0, 0.0).unwrap(), 0.0);
        assert!((bessel_j(1.0, 1.0).unwrap() - 0.4400505857449335).abs() < 1e-12);
        assert!(bessel_j(0.7, 1.0).is_err());
        assert!(bessel_j(1.0, -1.0).is_err());
    }
}
