//! One-dimensional integration building blocks: Gauss–Legendre rules,
//! composite panels with geometric grading, and tanh-sinh for endpoint
//! singularities.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::par;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const MAX_ORDER: usize = 128;

fn build_rule(n: usize) -> GaussRule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = (n + 1) / 2;
    for i in 0..m {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = ((i as f64 + 0.75) / (n as f64 + 0.5) * PI).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_and_derivative(n, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    GaussRule { nodes, weights }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Cached Gauss–Legendre rule with `n` nodes (1 ≤ n ≤ 128).
pub fn gauss_rule(n: usize) -> &'static GaussRule {
    static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=MAX_ORDER).map(|k| build_rule(k.max(1))).collect());
    &rules[n.clamp(1, MAX_ORDER)]
}

/// Gauss–Legendre on a single interval.
pub fn gauss<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, order: usize) -> f64 {
    let rule = gauss_rule(order);
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    let mut s = 0.0;
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        s += w * f(c + h * x);
    }
    s * h
}

/// Panel layout on an interval: sorted breakpoints.
#[derive(Debug, Clone)]
pub struct Panels {
    pub edges: Vec<f64>,
}

impl Panels {
    /// Uniform panels of width at most `max_width` between consecutive
    /// `breaks`, refined geometrically (ratio 2, down to `min_width`)
    /// towards every point in `graded`.
    pub fn new(breaks: &[f64], max_width: f64, graded: &[f64], min_width: f64) -> Panels {
        let mut pts: Vec<f64> = breaks.to_vec();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let mut edges = Vec::new();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mut seg = vec![a];
            let n = ((b - a) / max_width).ceil().max(1.0) as usize;
            for k in 1..n {
                seg.push(a + (b - a) * k as f64 / n as f64);
            }
            seg.push(b);
            for &g in graded {
                if g < a - 1e-15 || g > b + 1e-15 {
                    continue;
                }
                grade_towards(&mut seg, g, min_width);
            }
            if edges.last().map_or(false, |&e: &f64| (e - seg[0]).abs() < 1e-300) {
                edges.pop();
            }
            edges.extend(seg);
        }
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-300);
        Panels { edges }
    }

    /// Halve every panel.
    pub fn bisect(&self) -> Panels {
        let mut edges = Vec::with_capacity(2 * self.edges.len());
        for w in self.edges.windows(2) {
            edges.push(w[0]);
            edges.push(0.5 * (w[0] + w[1]));
        }
        if let Some(&l) = self.edges.last() {
            edges.push(l);
        }
        Panels { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Composite Gauss–Legendre sum; panels are evaluated through
    /// [`par::map_range`] and reduced pairwise.
    pub fn integrate<F>(&self, f: &F, order: usize) -> f64
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let parts = par::map_range(self.len(), |i| gauss(f, self.edges[i], self.edges[i + 1], order));
        par::pairwise_sum(&parts)
    }

    /// Sequential composite sum (for use inside already-parallel loops).
    pub fn integrate_seq<F: Fn(f64) -> f64>(&self, f: &F, order: usize) -> f64 {
        let parts: Vec<f64> = (0..self.len())
            .map(|i| gauss(f, self.edges[i], self.edges[i + 1], order))
            .collect();
        par::pairwise_sum(&parts)
    }
}

fn grade_towards(seg: &mut Vec<f64>, g: f64, min_width: f64) {
    // Insert g, then points g ± min_width·2^k inside the panel adjacent to g.
    let mut extra = vec![g];
    // with g at a segment end there is nothing to grade on that side
    let left = seg.iter().copied().filter(|&x| x < g).reduce(f64::max).unwrap_or(g);
    let right = seg.iter().copied().filter(|&x| x > g).reduce(f64::min).unwrap_or(g);
    let mut w = min_width;
    while g - w > left {
        extra.push(g - w);
        w *= 2.0;
    }
    let mut w = min_width;
    while g + w < right {
        extra.push(g + w);
        w *= 2.0;
    }
    seg.extend(extra);
    seg.sort_by(|a, b| a.partial_cmp(b).unwrap());
    seg.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

/// Integrate on `panels`, bisecting until two successive estimates agree
/// to `rel_tol` (relative) or `abs_tol` (absolute).
pub fn adaptive<F>(
    f: &F,
    panels: &Panels,
    order: usize,
    rel_tol: f64,
    abs_tol: f64,
    max_refine: usize,
) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    let mut p = panels.clone();
    let mut prev = p.integrate(f, order);
    for _ in 0..max_refine {
        p = p.bisect();
        let cur = p.integrate(f, order);
        let err = (cur - prev).abs();
        if err <= rel_tol * cur.abs() || err <= abs_tol {
            return Ok(Estimate { value: cur, error: err });
        }
        prev = cur;
    }
    let cur = p.bisect().integrate(f, order);
    let err = (cur - prev).abs();
    if err <= rel_tol * cur.abs() || err <= abs_tol {
        Ok(Estimate { value: cur, error: err })
    } else {
        Err(Error::Tolerance {
            estimate: cur,
            error: err,
            requested: rel_tol,
        })
    }
}

struct TanhSinh {
    // (abscissa offset from the nearer endpoint as 1 - |x|, x sign, weight) per level
    levels: Vec<Vec<(f64, f64, f64)>>,
}

fn tanh_sinh_table() -> &'static TanhSinh {
    static T: OnceLock<TanhSinh> = OnceLock::new();
    T.get_or_init(|| {
        let tmax = 3.5_f64;
        let mut levels = Vec::new();
        for lev in 0..7 {
            let h = 0.5_f64.powi(lev);
            let mut nodes = Vec::new();
            let n = (tmax / h).ceil() as i64;
            for k in -n..=n {
                // Level >0 only adds the odd multiples of h.
                if lev > 0 && k % 2 == 0 {
                    continue;
                }
                let t = k as f64 * h;
                let u = 0.5 * PI * t.sinh();
                let ch = u.cosh();
                let x = u.tanh();
                // 1 - |x| computed without cancellation
                let om = 1.0 / (u.abs().exp() * ch);
                let w = 0.5 * PI * t.cosh() / (ch * ch);
                nodes.push((om, x.signum(), w));
            }
            levels.push(nodes);
        }
        TanhSinh { levels }
    })
}

/// Tanh-sinh quadrature on [a, b]; tolerates integrable endpoint
/// singularities. Returns the estimate at the first level where successive
/// estimates agree to `tol` (absolute), or the finest level otherwise.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let table = tanh_sinh_table();
    let c = 0.5 * (a + b);
    let hw = 0.5 * (b - a);
    let eval = |om: f64, sign: f64| -> f64 {
        // x = sign·(1 - om); map to the interval measuring from the nearer end
        let x = if sign > 0.0 {
            b - hw * om
        } else if sign < 0.0 {
            a + hw * om
        } else {
            c
        };
        if x <= a || x >= b {
            0.0
        } else {
            f(x)
        }
    };
    let mut sum = 0.0;
    let mut h = 1.0;
    let mut prev = f64::NAN;
    for (lev, nodes) in table.levels.iter().enumerate() {
        if lev > 0 {
            h *= 0.5;
        }
        for &(om, sign, w) in nodes {
            sum += w * eval(om, sign);
        }
        let est = sum * h * hw;
        if lev >= 2 && (est - prev).abs() <= tol {
            return est;
        }
        prev = est;
    }
    prev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rule_integrates_polynomials() {
        for n in [1usize, 2, 5, 10, 16, 64] {
            let deg = 2 * n - 1;
            let v = gauss(|x| x.powi(deg as i32 - 1) , -1.0, 1.0, n);
            let exact = if (deg - 1) % 2 == 0 { 2.0 / deg as f64 } else { 0.0 };
            assert!((v - exact).abs() < 1e-13, "n={n}");
        }
        let r = gauss_rule(20);
        let s: f64 = r.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn tanh_sinh_handles_sqrt_endpoints() {
        let v = tanh_sinh(|x| (1.0 - x * x).sqrt(), -1.0, 1.0, 1e-14);
        assert!((v - PI / 2.0).abs() < 1e-13);
        let v = tanh_sinh(|x| 1.0 / x.sqrt(), 0.0, 1.0, 1e-14);
        assert!((v - 2.0).abs() < 1e-10);
        let v = tanh_sinh(|x| x.ln(), 0.0, 1.0, 1e-14);
        assert!((v + 1.0).abs() < 1e-12);
    }

    #[test]
    fn graded_panels_resolve_a_kink() {
        let p = Panels::new(&[0.0, 1.0], 0.25, &[0.3], 1e-7);
        let v = p.integrate(&|x: f64| (x - 0.3).abs().sqrt(), 16);
        let exact = (2.0 / 3.0) * (0.3_f64.powf(1.5) + 0.7_f64.powf(1.5));
        assert!((v - exact).abs() < 1e-9, "{v} {exact}");
    }

    #[test]
    fn adaptive_reports_convergence() {
        let p = Panels::new(&[0.0, PI], 0.5, &[], 1e-7);
        let e = adaptive(&|x: f64| (40.0 * x).sin().powi(2), &p, 10, 1e-12, 1e-15, 6).unwrap();
        assert!((e.value - PI / 2.0).abs() < 1e-11);
    }
}
