//! Fundamental solution `K0` of the integro-differential operator and its
//! exponentially convolved relatives `K1`, `K2`.
//!
//! All three kernels are superpositions of heat kernels in time `y`:
//!
//! ```text
//! K_i(x, t) = atom_i * Phi(eps t, x) + int_0^t rho_i(y, t) Phi(eps y, x) dy
//! Phi(D, x) = exp(-x^2 / 4D) / sqrt(4 pi D)
//! ```
//!
//! with `atom_0 = e^{-at}`, `atom_1 = atom_2 = 0` and, writing
//! `E(y) = e^{-a y - beta (t - y)}` and `z = 2 sqrt(b y (t - y))`,
//!
//! ```text
//! rho_0 = -2 b y E(y) J1(z)/z
//! rho_1 =        E(y) J0(z)
//! rho_2 = 2 (t-y) E(y) J1(z)/z
//! ```
//!
//! The `y` integral is taken in `y = t sin^2(theta)`, which absorbs the
//! `1/sqrt(y)` of `Phi` at the origin; panels in `theta` are graded
//! geometrically towards zero so the boundary layer of `exp(-x^2 / 4 eps y)`
//! is resolved for small `|x|`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::certificate::{BoundCertificate, BoundId};
use crate::error::{FhnError, Result};
use crate::params::FhnParams;
use crate::quadrature::{composite, gauss_legendre};
use crate::special::j0_j1_over_z;

const PANEL_ORDER: usize = 12;
const MAX_REFINE: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    K0,
    K1,
    K2,
}

impl KernelKind {
    pub fn index(self) -> usize {
        match self {
            KernelKind::K0 => 0,
            KernelKind::K1 => 1,
            KernelKind::K2 => 2,
        }
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            0 => Ok(KernelKind::K0),
            1 => Ok(KernelKind::K1),
            2 => Ok(KernelKind::K2),
            _ => Err(FhnError::domain("kernel index", format!("expected 0, 1 or 2, got {i}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelWhich {
    K0,
    #[serde(rename = "K0_x")]
    K0X,
    K1,
    K2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelEval {
    pub x: f64,
    pub t: f64,
    pub which: KernelWhich,
    pub value: f64,
    pub quad_abs_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuxQuantities {
    pub e_t: f64,
    pub omega: f64,
    pub beta0: f64,
    pub beta1: f64,
}

/// Heat kernel `exp(-x^2/4D)/sqrt(4 pi D)`.
#[inline]
pub(crate) fn heat(d: f64, x: f64) -> f64 {
    (-x * x / (4.0 * d)).exp() / (4.0 * PI * d).sqrt()
}

/// Gaussians with `x^2 / 4D` above this are dropped (`e^{-60}` is below 1e-26).
const NEGLIGIBLE_EXPONENT: f64 = 60.0;

/// The three mixtures at a fixed time, sharing one set of `y` nodes.
#[derive(Debug, Clone)]
pub(crate) struct KernelMixture {
    /// Diffusivity `eps * t` of the atom.
    pub atom_d: f64,
    /// Atom weight of `K0`.
    pub atom: f64,
    /// Component diffusivities `eps * y_q`.
    pub d: Vec<f64>,
    /// Quadrature weight times `rho_i(y_q)`, per kernel.
    pub w: [Vec<f64>; 3],
}

impl KernelMixture {
    /// `resolution` is the smallest spatial offset that must be resolved
    /// (grid spacing, or `|x|` for a single evaluation); `refine` splits every
    /// graded panel into that many equal pieces.
    pub fn new(p: &FhnParams, t: f64, resolution: f64, refine: usize) -> Self {
        let rule = gauss_legendre(PANEL_ORDER);
        let half_pi = 0.5 * PI;
        let scale = 2.0 * (p.eps * t).sqrt();
        let theta_min = if resolution > 0.0 {
            (0.25 * resolution / scale).clamp(1e-7, half_pi)
        } else {
            half_pi
        };
        let mut edges = vec![0.0];
        let mut e = theta_min;
        while e < half_pi {
            edges.push(e);
            e *= 2.0;
        }
        edges.push(half_pi);

        let n = (edges.len() - 1) * refine * PANEL_ORDER;
        let mut d = Vec::with_capacity(n);
        let mut w: [Vec<f64>; 3] = [
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        ];
        for win in edges.windows(2) {
            let step = (win[1] - win[0]) / refine as f64;
            for r in 0..refine {
                let lo = win[0] + r as f64 * step;
                for (theta, wq) in rule.mapped(lo, lo + step) {
                    let s = theta.sin();
                    let y = t * s * s;
                    let jac = t * (2.0 * theta).sin() * wq;
                    let decay = (-p.a * y - p.beta * (t - y)).exp();
                    let zb = 2.0 * (p.b.max(0.0) * y * (t - y)).sqrt();
                    let (j0, j1c) = j0_j1_over_z(zb);
                    d.push(p.eps * y);
                    w[0].push(jac * (-2.0 * p.b * y * decay * j1c));
                    w[1].push(jac * decay * j0);
                    w[2].push(jac * 2.0 * (t - y) * decay * j1c);
                }
            }
        }
        KernelMixture {
            atom_d: p.eps * t,
            atom: (-p.a * t).exp(),
            d,
            w,
        }
    }

    /// Index of the first component not negligible at `x`; `d` is nondecreasing.
    #[inline]
    fn first_visible(&self, x: f64) -> usize {
        let dmin = x * x / (4.0 * NEGLIGIBLE_EXPONENT);
        self.d.partition_point(|&d| d <= dmin)
    }

    #[inline]
    pub fn value(&self, kind: KernelKind, x: f64) -> f64 {
        let k = kind.index();
        let from = self.first_visible(x);
        let mut s = 0.0;
        for (d, w) in self.d[from..].iter().zip(&self.w[k][from..]) {
            s += w * heat(*d, x);
        }
        if k == 0 && x * x < 4.0 * NEGLIGIBLE_EXPONENT * self.atom_d {
            s += self.atom * heat(self.atom_d, x);
        }
        s
    }

    /// `[K0, K1, K2]` at `x` from one pass over the components.
    #[inline]
    pub fn values(&self, x: f64) -> [f64; 3] {
        let from = self.first_visible(x);
        let mut s = [0.0; 3];
        for (q, d) in self.d.iter().enumerate().skip(from) {
            let g = heat(*d, x);
            s[0] += self.w[0][q] * g;
            s[1] += self.w[1][q] * g;
            s[2] += self.w[2][q] * g;
        }
        if x * x < 4.0 * NEGLIGIBLE_EXPONENT * self.atom_d {
            s[0] += self.atom * heat(self.atom_d, x);
        }
        s
    }

    /// `d/dx K_i(x, t)`.
    #[inline]
    pub fn derivative(&self, kind: KernelKind, x: f64) -> f64 {
        let k = kind.index();
        let from = self.first_visible(x);
        let mut s = 0.0;
        for (d, w) in self.d[from..].iter().zip(&self.w[k][from..]) {
            s -= w * x / (2.0 * d) * heat(*d, x);
        }
        if k == 0 {
            s -= self.atom * x / (2.0 * self.atom_d) * heat(self.atom_d, x);
        }
        s
    }
}

/// Sum of `K_i` (or its derivative) over `points`, refined until two successive
/// mixtures agree within `tol`. Returns `(value, error estimate)`.
pub(crate) fn mixture_sum(
    p: &FhnParams,
    kind: KernelKind,
    t: f64,
    points: &[f64],
    derivative: bool,
    tol: f64,
    op: &'static str,
) -> Result<(f64, f64)> {
    let resolution = points
        .iter()
        .map(|x| x.abs())
        .fold(f64::INFINITY, f64::min);
    let eval = |refine: usize| {
        let m = KernelMixture::new(p, t, resolution, refine);
        points
            .iter()
            .map(|&x| {
                if derivative {
                    m.derivative(kind, x)
                } else {
                    m.value(kind, x)
                }
            })
            .sum::<f64>()
    };
    let mut refine = 1;
    let mut prev = eval(refine);
    loop {
        refine *= 2;
        let cur = eval(refine);
        let err = (cur - prev).abs();
        if err <= tol {
            return Ok((cur, err));
        }
        if refine >= MAX_REFINE {
            return Err(FhnError::ToleranceNotMet {
                op,
                best: cur,
                est_error: err,
                tol,
            });
        }
        prev = cur;
    }
}

fn check_time_tol(op: &'static str, t: f64, tol: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(FhnError::domain(op, format!("t must be positive, got {t}")));
    }
    if !(tol >= 1e-12) {
        return Err(FhnError::domain(op, format!("tol must be >= 1e-12, got {tol}")));
    }
    Ok(())
}

pub fn k0(p: &FhnParams, x: f64, t: f64, tol: f64) -> Result<KernelEval> {
    check_time_tol("k0", t, tol)?;
    p.require_kernel_regime("k0")?;
    let (value, err) = mixture_sum(p, KernelKind::K0, t, &[x], false, tol, "k0")?;
    Ok(KernelEval {
        x,
        t,
        which: KernelWhich::K0,
        value,
        quad_abs_error: err,
    })
}

pub fn k0_x(p: &FhnParams, x: f64, t: f64, tol: f64) -> Result<KernelEval> {
    check_time_tol("k0_x", t, tol)?;
    p.require_kernel_regime("k0_x")?;
    if x == 0.0 {
        return Err(FhnError::domain(
            "k0_x",
            "x = 0: one-sided derivatives of K0 differ",
        ));
    }
    let (value, err) = mixture_sum(p, KernelKind::K0, t, &[x], true, tol, "k0_x")?;
    Ok(KernelEval {
        x,
        t,
        which: KernelWhich::K0X,
        value,
        quad_abs_error: err,
    })
}

pub fn k_i(p: &FhnParams, i: usize, x: f64, t: f64, tol: f64) -> Result<KernelEval> {
    check_time_tol("k_i", t, tol)?;
    p.require_kernel_regime("k_i")?;
    let (kind, which) = match i {
        1 => (KernelKind::K1, KernelWhich::K1),
        2 => (KernelKind::K2, KernelWhich::K2),
        _ => return Err(FhnError::domain("k_i", format!("i must be 1 or 2, got {i}"))),
    };
    if i == 2 && p.b <= 0.0 {
        return Err(FhnError::domain("k_i", format!("K2 needs b > 0, got {}", p.b)));
    }
    let (value, err) = mixture_sum(p, kind, t, &[x], false, tol, "k_i")?;
    Ok(KernelEval {
        x,
        t,
        which,
        value,
        quad_abs_error: err,
    })
}

/// `E(t) = (e^{-beta t} - e^{-a t}) / (a - beta)`, with the limit `t e^{-a t}` at `a = beta`.
pub fn e_of_t(a: f64, beta: f64, t: f64) -> f64 {
    if (a - beta).abs() < 1e-10 {
        t * (-0.5 * (a + beta) * t).exp()
    } else {
        ((-beta * t).exp() - (-a * t).exp()) / (a - beta)
    }
}

pub fn aux_quantities(p: &FhnParams, t: f64) -> Result<AuxQuantities> {
    p.require_estimates("aux_quantities")?;
    let (a, b, beta) = (p.a, p.b, p.beta);
    Ok(AuxQuantities {
        e_t: e_of_t(a, beta, t),
        omega: a.min(beta),
        beta0: 1.0 / a + PI * b.sqrt() * (a + beta) / (2.0 * (a * beta).powf(1.5)),
        beta1: 1.0 / (a * beta),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceCheck {
    pub numeric: f64,
    pub closed_form: f64,
    pub discrepancy: f64,
    pub tail_bound: f64,
}

/// Compares the numerical Laplace transform of `K0(r sqrt(eps), .)` with
/// `exp(-r sigma) / (2 sqrt(eps) sigma)`, `sigma^2 = s + a + b/(s + beta)`.
pub fn laplace_check_k0(p: &FhnParams, r: f64, s: f64, tol: f64) -> Result<LaplaceCheck> {
    p.require_kernel_regime("laplace_check_k0")?;
    let kappa = s + p.a.min(p.beta);
    if !(s > -p.a && s > -p.beta) {
        return Err(FhnError::domain(
            "laplace_check_k0",
            format!("s = {s} outside Re s > max(-a, -beta)"),
        ));
    }
    if !(r >= 0.0) {
        return Err(FhnError::domain("laplace_check_k0", format!("r must be >= 0, got {r}")));
    }
    let sigma = (s + p.a + p.b / (s + p.beta)).sqrt();
    let closed_form = (-r * sigma).exp() / (2.0 * p.eps.sqrt() * sigma);

    let x = r * p.eps.sqrt();
    let cutoff = 80f64.max(45.0 / kappa);
    let tail_bound = {
        let t = cutoff;
        let ex = (-kappa * t).exp();
        (ex / kappa + (2.0 / 3.0) * p.b * ex * (t * t / kappa + 2.0 * t / kappa.powi(2) + 2.0 / kappa.powi(3)))
            / (4.0 * PI * p.eps * t).sqrt()
    };

    // t = u^2 removes the 1/sqrt(t) of the heat kernel at r = 0; panels are graded
    // so the turn-on of exp(-x^2/4 eps t) near u = x / (2 sqrt(eps)) is resolved.
    let umax = cutoff.sqrt();
    let mut edges = vec![0.0];
    let mut e = (0.05 * x / p.eps.sqrt()).max(1e-3).min(umax);
    while e < umax {
        edges.push(e);
        e *= 2.0;
    }
    edges.push(umax);
    let rule = gauss_legendre(16);
    let integrate = |sub: usize| -> Result<f64> {
        let mut acc = 0.0;
        for win in edges.windows(2) {
            let mut err = None;
            acc += composite(rule, win[0], win[1], sub, |u| {
                let t = u * u;
                if t == 0.0 {
                    return 0.0;
                }
                match mixture_sum(p, KernelKind::K0, t, &[x], false, 1e-13, "laplace_check_k0") {
                    Ok((k, _)) => 2.0 * u * (-s * t).exp() * k,
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            });
            if let Some(e) = err {
                return Err(e);
            }
        }
        Ok(acc)
    };
    let mut sub = 2;
    let mut prev = integrate(sub)?;
    let numeric = loop {
        sub *= 2;
        let cur = integrate(sub)?;
        if (cur - prev).abs() <= 0.1 * tol || sub >= 64 {
            break cur;
        }
        prev = cur;
    };
    let discrepancy = (numeric - closed_form).abs();
    if discrepancy > tol + tail_bound {
        return Err(FhnError::ToleranceNotMet {
            op: "laplace_check_k0",
            best: numeric,
            est_error: discrepancy,
            tol,
        });
    }
    Ok(LaplaceCheck {
        numeric,
        closed_form,
        discrepancy,
        tail_bound,
    })
}

/// `int_R |K_i(x, t)| dx` by symmetric composite Gauss-Legendre on `[0, X]`
/// with `X` past the Gaussian envelope. Returns `(value, error bound)`.
pub(crate) fn l1_norm_in_x(p: &FhnParams, kind: KernelKind, t: f64) -> (f64, f64) {
    let width = 2.0 * (p.eps * t).sqrt();
    let xmax = 6.5 * width;
    let rule = gauss_legendre(8);
    let integrate = |panels: usize, refine: usize| {
        let m = KernelMixture::new(p, t, xmax / panels as f64, refine);
        2.0 * composite(rule, 0.0, xmax, panels, |x| m.value(kind, x).abs())
    };
    let coarse = integrate(96, 1);
    let fine = integrate(192, 2);
    // envelope: |K_i| <= A_i * heat(eps t, x) for |x| >= sqrt(6 eps t)
    let tail = envelope_constant(p, kind, t) * libm::erfc(xmax / width);
    (fine, (fine - coarse).abs() + tail)
}

/// `A_i` with `|K_i(x,t)| <= A_i heat(eps t, x)` once `x^2 >= 6 eps t`.
pub(crate) fn envelope_constant(p: &FhnParams, kind: KernelKind, t: f64) -> f64 {
    let m = (-p.a * t).exp().max((-p.beta * t).exp());
    let b = p.b.max(0.0);
    match kind {
        KernelKind::K0 => (-p.a * t).exp() + 0.5 * b * m * t * t,
        KernelKind::K1 => m * t,
        KernelKind::K2 => 0.5 * m * t * t,
    }
}

fn time_integrated_l1(p: &FhnParams, kind: KernelKind, t: f64) -> (f64, f64) {
    let rule = gauss_legendre(8);
    let mut err_acc = 0.0;
    let run = |panels: usize| {
        let mut e = 0.0;
        let v = composite(rule, 0.0, t, panels, |tau| {
            let (v, err) = l1_norm_in_x(p, kind, tau);
            e += err;
            v
        });
        (v, e)
    };
    let (coarse, _) = run(2);
    let (fine, e) = run(4);
    err_acc += e * t / 32.0 + (fine - coarse).abs();
    (fine, err_acc)
}

/// Numerically certifies the kernel bounds at each time in `times`.
pub fn certify_kernel_bounds(p: &FhnParams, times: &[f64]) -> Result<Vec<BoundCertificate>> {
    p.require_estimates("certify_kernel_bounds")?;
    let digest = format!(
        "kernel eps={} a={} b={} beta={} times={:?}",
        p.eps, p.a, p.b, p.beta, times
    );
    let mut pointwise = BoundCertificate::builder(BoundId::K0Pointwise, digest.clone());
    let mut k0_l1x = BoundCertificate::builder(BoundId::K0L1x, digest.clone());
    let mut k0_l1xt = BoundCertificate::builder(BoundId::K0L1xt, digest.clone());
    let mut k1_l1x = BoundCertificate::builder(BoundId::K1L1x, digest.clone());
    let mut k1_l1xt = BoundCertificate::builder(BoundId::K1L1xt, digest.clone());
    let mut k2_l1x = BoundCertificate::builder(BoundId::K2L1x, digest.clone());

    for &t in times {
        if !(t > 0.0) {
            return Err(FhnError::domain("certify_kernel_bounds", format!("t must be positive, got {t}")));
        }
        let aux = aux_quantities(p, t)?;
        let sb = p.b.sqrt();

        // pointwise bound on a grid reaching past the envelope
        let width = 2.0 * (p.eps * t).sqrt();
        let npts = 200;
        let dx = 7.0 * width / npts as f64;
        let m1 = KernelMixture::new(p, t, dx, 2);
        let m2 = KernelMixture::new(p, t, dx, 4);
        let amp = ((-p.a * t).exp() + p.b * t * aux.e_t) / (4.0 * PI * p.eps * t).sqrt();
        for j in 0..=npts {
            let x = j as f64 * dx;
            let v1 = m1.value(KernelKind::K0, x);
            let v2 = m2.value(KernelKind::K0, x);
            let rhs = amp * (-x * x / (4.0 * p.eps * t)).exp();
            pointwise.check(v2.abs(), rhs);
            pointwise.slack_at_least((v2 - v1).abs() + 1e-14 * rhs);
        }

        let (l0, e0) = l1_norm_in_x(p, KernelKind::K0, t);
        k0_l1x.check(l0, (-p.a * t).exp() + sb * PI * t * (-aux.omega * t).exp());
        k0_l1x.slack_at_least(e0 + 1e-13);

        let (l0t, e0t) = time_integrated_l1(p, KernelKind::K0, t);
        k0_l1xt.check(l0t, aux.beta0);
        k0_l1xt.slack_at_least(e0t + 1e-13);

        let (l1, e1) = l1_norm_in_x(p, KernelKind::K1, t);
        k1_l1x.check(l1, aux.e_t);
        k1_l1x.slack_at_least(e1 + 1e-13);

        let (l1t, e1t) = time_integrated_l1(p, KernelKind::K1, t);
        k1_l1xt.check(l1t, aux.beta1);
        k1_l1xt.slack_at_least(e1t + 1e-13);

        if p.b > 0.0 {
            let (l2, e2) = l1_norm_in_x(p, KernelKind::K2, t);
            k2_l1x.check(l2, t * aux.e_t);
            k2_l1x.slack_at_least(e2 + 1e-13);
        }
    }
    let mut out = vec![
        pointwise.finish(),
        k0_l1x.finish(),
        k0_l1xt.finish(),
        k1_l1x.finish(),
        k1_l1xt.finish(),
    ];
    if p.b > 0.0 {
        out.push(k2_l1x.finish());
    }
    Ok(out)
}

/// `int_0^h heat(D, c - u) (u/h)^p du` for `p = 0..3`.
///
/// Wide Gaussians (relative to the cell) use 8-point Gauss-Legendre; narrow ones
/// use erf/exp closed forms of the raw moments.
pub(crate) fn gauss_cell_moments(d: f64, c: f64, h: f64) -> [f64; 4] {
    let width = (4.0 * d).sqrt();
    let near = if c > h {
        c - h
    } else if c < 0.0 {
        -c
    } else {
        0.0
    };
    if near > 6.4 * width {
        return [0.0; 4];
    }
    if d.sqrt() >= 0.5 * h {
        let rule = gauss_legendre(8);
        let mut m = [0.0; 4];
        for (u, w) in rule.mapped(0.0, h) {
            let g = w * heat(d, c - u);
            let s = u / h;
            m[0] += g;
            m[1] += g * s;
            m[2] += g * s * s;
            m[3] += g * s * s * s;
        }
        return m;
    }
    // w = c - u runs over [c - h, c]; (u/h) = (c - w)/h.
    let (lo, hi) = (c - h, c);
    let phi_lo = heat(d, lo);
    let phi_hi = heat(d, hi);
    let mass = if lo > 0.0 {
        0.5 * (libm::erfc(lo / width) - libm::erfc(hi / width))
    } else if hi < 0.0 {
        0.5 * (libm::erfc(-hi / width) - libm::erfc(-lo / width))
    } else {
        0.5 * (libm::erf(hi / width) - libm::erf(lo / width))
    };
    // raw moments mu_q = int w^q heat dw over [lo, hi]
    let mut mu = [0.0; 4];
    mu[0] = mass;
    mu[1] = 2.0 * d * (phi_lo - phi_hi);
    mu[2] = -2.0 * d * (hi * phi_hi - lo * phi_lo) + 2.0 * d * mu[0];
    mu[3] = -2.0 * d * (hi * hi * phi_hi - lo * lo * phi_lo) + 4.0 * d * mu[1];
    let a = c / h;
    let ih = 1.0 / h;
    // (a - w/h)^p expanded
    [
        mu[0],
        a * mu[0] - ih * mu[1],
        a * a * mu[0] - 2.0 * a * ih * mu[1] + ih * ih * mu[2],
        a * a * a * mu[0] - 3.0 * a * a * ih * mu[1] + 3.0 * a * ih * ih * mu[2]
            - ih * ih * ih * mu[3],
    ]
}
