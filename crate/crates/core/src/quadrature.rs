//! Gauss-Legendre rules and a few composite/adaptive drivers built on them.

use std::collections::HashMap;
use std::sync::Mutex;

use once_cell::sync::Lazy;

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on P_n from the Chebyshev initial guess.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Integrate `f` over [a, b].
    #[inline]
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + r * x);
        }
        s * r
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (c + r * x, w * r))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

static RULES: Lazy<Mutex<HashMap<usize, &'static GaussLegendre>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Shared rule of order `n`, built once per process.
pub fn gauss_legendre(n: usize) -> &'static GaussLegendre {
    let mut map = RULES.lock().expect("quadrature cache poisoned");
    map.entry(n)
        .or_insert_with(|| Box::leak(Box::new(GaussLegendre::new(n))))
}

/// Composite rule with `panels` equal panels.
pub fn composite<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    panels: usize,
    mut f: F,
) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let lo = a + p as f64 * h;
            rule.integrate(lo, lo + h, &mut f)
        })
        .sum()
}

/// Composite Gauss-Legendre with panel doubling until two successive estimates
/// differ by less than `tol`. Returns `(estimate, error estimate, converged)`.
pub fn doubling<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    tol: f64,
    max_panels: usize,
    mut f: F,
) -> (f64, f64, bool) {
    let mut panels = 1;
    let mut prev = composite(rule, a, b, panels, &mut f);
    loop {
        panels *= 2;
        let cur = composite(rule, a, b, panels, &mut f);
        let err = (cur - prev).abs();
        if err < tol {
            return (cur, err, true);
        }
        if panels >= max_panels {
            return (cur, err, false);
        }
        prev = cur;
    }
}

/// Globally adaptive Gauss-Kronrod-free bisection: each interval is compared
/// against the sum over its halves with the same rule.
/// Returns `(estimate, error estimate)`.
pub fn adaptive<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
    f: &mut F,
) -> (f64, f64) {
    let whole = rule.integrate(a, b, &mut *f);
    adaptive_rec(rule, a, b, whole, tol, max_depth, f)
}

fn adaptive_rec<F: FnMut(f64) -> f64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    f: &mut F,
) -> (f64, f64) {
    let m = 0.5 * (a + b);
    let left = rule.integrate(a, m, &mut *f);
    let right = rule.integrate(m, b, &mut *f);
    let err = (left + right - whole).abs();
    if err <= tol || depth == 0 {
        return (left + right, err);
    }
    let (l, el) = adaptive_rec(rule, a, m, left, 0.5 * tol, depth - 1, f);
    let (r, er) = adaptive_rec(rule, m, b, right, 0.5 * tol, depth - 1, f);
    (l + r, el + er)
}
