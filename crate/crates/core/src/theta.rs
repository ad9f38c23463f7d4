//! Periodized kernels `theta_i(x, t) = sum_n K_i(x + 2nL, t)` and the Green
//! kernels built from them on `[0, L]`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FhnError, Result};
use crate::kernel::{envelope_constant, mixture_sum, KernelKind, KernelMixture};
use crate::params::FhnParams;

const MAX_IMAGES: usize = 10_000;
const MIN_TIME: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEval {
    pub x: f64,
    pub t: f64,
    pub i: usize,
    pub derivative: bool,
    pub value: f64,
    pub terms_used: usize,
    pub tail_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GreenKind {
    /// `theta(|x - xi|) + theta(x + xi)`
    NeumannSum,
    /// `theta(x + xi) - theta(|x - xi|)`
    DirichletDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenEval {
    pub x: f64,
    pub xi: f64,
    pub t: f64,
    pub i: usize,
    pub kind: GreenKind,
    pub value: f64,
}

/// Maps `x` into `[-L, L]` modulo `2L`.
#[inline]
pub(crate) fn reduce(x: f64, l: f64) -> f64 {
    let period = 2.0 * l;
    let r = x - period * (x / period).round();
    r.clamp(-l, l)
}

/// Smallest `N` such that the images with `|n| > N` contribute at most `tol`,
/// together with the bound actually achieved.
pub(crate) fn image_count(
    p: &FhnParams,
    kind: KernelKind,
    t: f64,
    derivative: bool,
    tol: f64,
    op: &'static str,
) -> Result<(usize, f64)> {
    let l = p.length;
    let dt = p.eps * t;
    let amp = envelope_constant(p, kind, t);
    for n in 0..=MAX_IMAGES {
        // nearest omitted image sits at least (2n+1)L from the origin
        let z = (2 * n + 1) as f64 * l;
        if z * z < 6.0 * dt {
            continue;
        }
        let g = (-z * z / (4.0 * dt)).exp() / (4.0 * PI * dt).sqrt();
        let g = if derivative { g * z / (2.0 * dt) } else { g };
        let mut q = (-8.0 * (n + 1) as f64 * l * l / (4.0 * dt)).exp();
        if derivative {
            q *= (2 * n + 3) as f64 / (2 * n + 1) as f64;
        }
        if q >= 1.0 {
            continue;
        }
        let bound = 2.0 * amp * g / (1.0 - q);
        if bound <= tol {
            return Ok((n, bound));
        }
    }
    Err(FhnError::Truncation {
        op,
        max_terms: 2 * MAX_IMAGES + 1,
        tol,
    })
}

fn kind_for(i: usize, p: &FhnParams, derivative: bool, op: &'static str) -> Result<KernelKind> {
    let kind = KernelKind::from_index(i)?;
    if kind == KernelKind::K2 && p.b <= 0.0 {
        return Err(FhnError::domain(op, format!("theta_2 needs b > 0, got {}", p.b)));
    }
    if derivative && kind == KernelKind::K2 {
        return Err(FhnError::domain(op, "x-derivative is available for i = 0 and i = 1 only"));
    }
    Ok(kind)
}

pub fn theta(
    p: &FhnParams,
    i: usize,
    x: f64,
    t: f64,
    derivative: bool,
    tol: f64,
) -> Result<ThetaEval> {
    const OP: &str = "theta";
    if !(t > 0.0) || !t.is_finite() {
        return Err(FhnError::domain(OP, format!("t must be positive, got {t}")));
    }
    if t < MIN_TIME {
        return Err(FhnError::domain(OP, format!("t = {t:e} below the supported minimum {MIN_TIME:e}")));
    }
    if !x.is_finite() {
        return Err(FhnError::domain(OP, format!("non-finite x {x}")));
    }
    if !(tol > 0.0) {
        return Err(FhnError::domain(OP, format!("tol must be positive, got {tol}")));
    }
    p.require_kernel_regime(OP)?;
    let kind = kind_for(i, p, derivative, OP)?;
    let l = p.length;
    let xr = reduce(x, l);
    if derivative && xr == 0.0 {
        return Err(FhnError::domain(OP, "derivative requested on the image lattice x = 2nL"));
    }
    let (n, tail) = image_count(p, kind, t, derivative, 0.5 * tol, OP)?;
    let points: Vec<f64> = (-(n as i64)..=n as i64)
        .map(|k| xr + 2.0 * k as f64 * l)
        .collect();
    let (value, _) = mixture_sum(p, kind, t, &points, derivative, (0.5 * tol).max(1e-15), OP)?;
    Ok(ThetaEval {
        x,
        t,
        i,
        derivative,
        value,
        terms_used: 2 * n + 1,
        tail_bound: tail,
    })
}

pub fn green(
    p: &FhnParams,
    i: usize,
    kind: GreenKind,
    x: f64,
    xi: f64,
    t: f64,
    tol: f64,
) -> Result<GreenEval> {
    const OP: &str = "green";
    let l = p.length;
    for (name, v) in [("x", x), ("xi", xi)] {
        if !(0.0..=l).contains(&v) {
            return Err(FhnError::domain(OP, format!("{name} = {v} outside [0, {l}]")));
        }
    }
    let near = theta(p, i, (x - xi).abs(), t, false, 0.5 * tol)?.value;
    let far = theta(p, i, x + xi, t, false, 0.5 * tol)?.value;
    let value = match kind {
        GreenKind::NeumannSum => near + far,
        GreenKind::DirichletDifference => far - near,
    };
    Ok(GreenEval {
        x,
        xi,
        t,
        i,
        kind,
        value,
    })
}

/// All three theta functions at one time, evaluated from a shared mixture.
/// Used by the grid and pointwise solvers, which need many `x` per time.
#[derive(Debug, Clone)]
pub(crate) struct ThetaProfile {
    pub mix: KernelMixture,
    length: f64,
    images: usize,
}

impl ThetaProfile {
    /// `tail_tol` bounds the truncation error of every kernel and derivative.
    pub fn new(p: &FhnParams, t: f64, resolution: f64, refine: usize, tail_tol: f64) -> Result<Self> {
        let mut images = 0;
        for kind in [KernelKind::K0, KernelKind::K1, KernelKind::K2] {
            for derivative in [false, true] {
                let (n, _) = image_count(p, kind, t, derivative, tail_tol, "theta profile")?;
                images = images.max(n);
            }
        }
        Ok(ThetaProfile {
            mix: KernelMixture::new(p, t, resolution, refine),
            length: p.length,
            images,
        })
    }

    pub fn value(&self, kind: KernelKind, x: f64) -> f64 {
        let xr = reduce(x, self.length);
        let n = self.images as i64;
        (-n..=n)
            .map(|k| self.mix.value(kind, xr + 2.0 * k as f64 * self.length))
            .sum()
    }

    pub fn values(&self, x: f64) -> [f64; 3] {
        let xr = reduce(x, self.length);
        let n = self.images as i64;
        let mut s = [0.0; 3];
        for k in -n..=n {
            let v = self.mix.values(xr + 2.0 * k as f64 * self.length);
            for i in 0..3 {
                s[i] += v[i];
            }
        }
        s
    }

    pub fn derivative(&self, kind: KernelKind, x: f64) -> f64 {
        let xr = reduce(x, self.length);
        let n = self.images as i64;
        (-n..=n)
            .map(|k| self.mix.derivative(kind, xr + 2.0 * k as f64 * self.length))
            .sum()
    }
}
