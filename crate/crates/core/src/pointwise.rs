//! Direct quadrature of the integral representation at arbitrary `(x, t)`.
//!
//! Much slower than the grid solver, but independent of its cell moments and
//! lag tables. Used for off-grid checks and to cross-validate the grid.

use crate::error::{FhnError, Result};
use crate::field::{cubic_lagrange, BoundaryData, BoundaryKind, InitialData, Profile, SpaceTimeSource};
use crate::kernel::KernelKind;
use crate::nonlinear::{FhnSolution, Kinetics};
use crate::params::FhnParams;
use crate::quadrature::gauss_legendre;
use crate::theta::ThetaProfile;

const REFINE: usize = 1;
const TAIL_TOL: f64 = 1e-12;
/// Finest panel near the singular point, in units of the local width.
const FINEST: i32 = 8;

struct Terms<'a> {
    initial: Vec<(KernelKind, f64, &'a Profile)>,
    boundary: Option<(KernelKind, f64, &'a BoundaryData)>,
    source: Option<(KernelKind, f64, &'a dyn Fn(f64, f64) -> f64)>,
}

fn xi_nodes(x: f64, sigma: f64, length: f64) -> Vec<(f64, f64)> {
    let mut edges = vec![0.0, length, x];
    let mut r = 2f64.powi(-FINEST);
    while r <= 16.0 {
        edges.push(x - sigma * r);
        edges.push(x + sigma * r);
        r *= 2.0;
    }
    edges.retain(|e| (0.0..=length).contains(e));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-15 * length);
    let rule = gauss_legendre(8);
    edges
        .windows(2)
        .flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>())
        .collect()
}

/// Nodes in `w` on `[0, 1]` graded geometrically from `w_min`.
fn w_nodes(w_min: f64) -> Vec<(f64, f64)> {
    let mut edges = vec![0.0];
    let mut w = w_min.clamp(1e-6, 0.25);
    while w < 1.0 {
        edges.push(w);
        w *= 2.0;
    }
    edges.push(1.0);
    let rule = gauss_legendre(8);
    edges
        .windows(2)
        .flat_map(|w| rule.mapped(w[0], w[1]).collect::<Vec<_>>())
        .collect()
}

/// Nodes in `s = t - tau` on `(0, t)`. The first panel up to the nearest
/// kink is graded in `w = sqrt(s)`; later panels sit between kinks.
fn source_nodes(t: f64, kinks: &[f64]) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = kinks.iter().map(|k| t - k).filter(|&s| s > 1e-12 * t && s < t).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.push(t);
    let first = cuts[0];
    let mut out: Vec<(f64, f64)> = w_nodes(0.25)
        .into_iter()
        .map(|(w, ww)| (first * w * w, 2.0 * first * w * ww))
        .collect();
    let rule = gauss_legendre(3);
    for c in cuts.windows(2) {
        out.extend(rule.mapped(c[0], c[1]));
    }
    out
}

fn profile(p: &FhnParams, s: f64) -> Result<ThetaProfile> {
    let sigma = (p.eps * s).sqrt();
    ThetaProfile::new(p, s, sigma * 2f64.powi(-FINEST), REFINE, TAIL_TOL)
}

/// `[G0, G1, G2](x, xi)`.
fn green(prof: &ThetaProfile, bc: BoundaryKind, x: f64, xi: f64) -> [f64; 3] {
    let sign = match bc {
        BoundaryKind::Neumann => 1.0,
        BoundaryKind::Dirichlet => -1.0,
    };
    let (a, b) = (prof.values(x - xi), prof.values(x + xi));
    [a[0] + sign * b[0], a[1] + sign * b[1], a[2] + sign * b[2]]
}

/// Evaluates several term sets at one point, sharing the theta profiles.
/// `kinks` are the times where the source is not smooth.
fn evaluate(p: &FhnParams, bc: BoundaryKind, x: f64, t: f64, kinks: &[f64], sets: &[Terms]) -> Result<Vec<f64>> {
    let l = p.length;
    let mut totals = vec![0.0; sets.len()];

    if sets.iter().any(|s| !s.initial.is_empty()) {
        let prof = profile(p, t)?;
        let nodes = xi_nodes(x, (p.eps * t).sqrt(), l);
        for &(xi, w) in &nodes {
            let g = green(&prof, bc, x, xi);
            for (total, terms) in totals.iter_mut().zip(sets) {
                for &(kind, coef, f) in &terms.initial {
                    *total += coef * w * g[kind.index()] * f.eval(xi);
                }
            }
        }
    }

    let has_boundary = sets.iter().any(|s| s.boundary.is_some());
    let has_source = sets.iter().any(|s| s.source.is_some());
    if has_boundary {
        let w_min = 0.25 * x.min(l - x) / (p.eps * t).sqrt();
        for (w, ww) in w_nodes(w_min) {
            let s = t * w * w;
            if s <= 0.0 {
                continue;
            }
            let prof = profile(p, s)?;
            for (total, terms) in totals.iter_mut().zip(sets) {
                if let Some((kind, coef, b)) = terms.boundary {
                    let (g1, g2) = (b.left.eval(t - s), b.right.eval(t - s));
                    let val = match b.kind {
                        BoundaryKind::Neumann => {
                            -2.0 * p.eps * (prof.value(kind, x) * g1 - prof.value(kind, l - x) * g2)
                        }
                        BoundaryKind::Dirichlet => {
                            -2.0 * p.eps * (prof.derivative(kind, x) * g1 + prof.derivative(kind, l - x) * g2)
                        }
                    };
                    *total += coef * 2.0 * t * w * ww * val;
                }
            }
        }
    }
    if has_source {
        for (s, ds) in source_nodes(t, kinks) {
            let prof = profile(p, s)?;
            let nodes = xi_nodes(x, (p.eps * s).sqrt(), l);
            let tau = t - s;
            for &(xi, wx) in &nodes {
                let g = green(&prof, bc, x, xi);
                for (total, terms) in totals.iter_mut().zip(sets) {
                    if let Some((kind, coef, f)) = terms.source {
                        *total += coef * ds * wx * g[kind.index()] * f(xi, tau);
                    }
                }
            }
        }
    }
    Ok(totals)
}

/// `None` when both boundary signals vanish on a dense sample of `[0, t]`.
fn active_boundary(bdry: &BoundaryData, t: f64) -> Option<&BoundaryData> {
    let ts: Vec<f64> = (0..=256).map(|k| t * k as f64 / 256.0).collect();
    if bdry.left.is_zero_on(&ts) && bdry.right.is_zero_on(&ts) {
        None
    } else {
        Some(bdry)
    }
}

fn check_point(p: &FhnParams, x: f64, t: f64) -> Result<()> {
    if !(0.0..=p.length).contains(&x) || !(t > 0.0 && t <= p.horizon * (1.0 + 1e-12)) {
        return Err(FhnError::domain(
            "pointwise",
            format!("point ({x}, {t}) outside [0, {}] x (0, {}]", p.length, p.horizon),
        ));
    }
    Ok(())
}

/// `v` on a Dirichlet boundary where `u = g`: `v0 e^{-beta t} + b int e^{-beta(t - tau)} g`.
fn dirichlet_edge_v(p: &FhnParams, v0: f64, g: &Profile, t: f64) -> f64 {
    let rule = gauss_legendre(16);
    let mem: f64 = (0..8)
        .map(|k| {
            let (a, b) = (t * k as f64 / 8.0, t * (k + 1) as f64 / 8.0);
            rule.integrate(a, b, |tau| (-p.beta * (t - tau)).exp() * g.eval(tau))
        })
        .sum();
    v0 * (-p.beta * t).exp() + p.b * mem
}

/// Solution of the linear problem at one point.
pub fn linear_u_at(
    p: &FhnParams,
    init: &InitialData,
    bdry: &BoundaryData,
    f: &SpaceTimeSource,
    x: f64,
    t: f64,
) -> Result<f64> {
    p.validate()?;
    p.require_kernel_regime("linear_u_at")?;
    check_point(p, x, t)?;
    if bdry.kind == BoundaryKind::Dirichlet && (x == 0.0 || x == p.length) {
        return Ok(if x == 0.0 { bdry.left.eval(t) } else { bdry.right.eval(t) });
    }
    let source = |xi: f64, tau: f64| f.eval(xi, tau);
    let terms = Terms {
        initial: vec![(KernelKind::K0, 1.0, &init.u0), (KernelKind::K1, -1.0, &init.v0)],
        boundary: active_boundary(bdry, t).map(|b| (KernelKind::K0, 1.0, b)),
        source: match f {
            SpaceTimeSource::Zero => None,
            _ => Some((KernelKind::K0, 1.0, &source)),
        },
    };
    Ok(evaluate(p, bdry.kind, x, t, &[], &[terms])?[0])
}

/// `(u, v)` at one point from the integral representation, with the nonlinear
/// source `phi(u)` taken from the grid solution (cubic in `x`, linear in `t`).
pub fn fhn_at(
    p: &FhnParams,
    init: &InitialData,
    bdry: &BoundaryData,
    kin: &Kinetics,
    sol: &FhnSolution,
    x: f64,
    t: f64,
) -> Result<(f64, f64)> {
    p.validate()?;
    p.require_kernel_regime("fhn_at")?;
    check_point(p, x, t)?;
    let xs = &sol.u.grid_x;
    let mut taus = vec![0.0];
    taus.extend(&sol.u.grid_t);
    let mut rows: Vec<Vec<f64>> = vec![xs.iter().map(|&xi| kin.phi(init.u0.eval(xi))).collect()];
    rows.extend(sol.u.values.iter().map(|r| r.iter().map(|&u| kin.phi(u)).collect()));
    if *taus.last().unwrap() < t * (1.0 - 1e-12) {
        return Err(FhnError::domain("fhn_at", format!("solution ends before t = {t}")));
    }
    let source = |xi: f64, tau: f64| {
        let n = taus.partition_point(|&s| s < tau).clamp(1, taus.len() - 1);
        let s = (tau - taus[n - 1]) / (taus[n] - taus[n - 1]);
        (1.0 - s) * cubic_lagrange(xs, &rows[n - 1], xi) + s * cubic_lagrange(xs, &rows[n], xi)
    };

    let v0 = init.v0.eval(x);
    let decay = v0 * (-p.beta * t).exp();
    if bdry.kind == BoundaryKind::Dirichlet && (x == 0.0 || x == p.length) {
        let g = if x == 0.0 { &bdry.left } else { &bdry.right };
        let v = if p.b == 0.0 { decay } else { dirichlet_edge_v(p, v0, g, t) };
        return Ok((g.eval(t), v));
    }
    let active = active_boundary(bdry, t);
    let mut sets = vec![Terms {
        initial: vec![(KernelKind::K0, 1.0, &init.u0), (KernelKind::K1, -1.0, &init.v0)],
        boundary: active.map(|b| (KernelKind::K0, 1.0, b)),
        source: Some((KernelKind::K0, 1.0, &source)),
    }];
    if p.b > 0.0 {
        sets.push(Terms {
            initial: vec![(KernelKind::K1, 1.0, &init.u0), (KernelKind::K2, -1.0, &init.v0)],
            boundary: active.map(|b| (KernelKind::K1, 1.0, b)),
            source: Some((KernelKind::K1, 1.0, &source)),
        });
    }
    let vals = evaluate(p, bdry.kind, x, t, &taus, &sets)?;
    let v = if p.b > 0.0 { decay + p.b * vals[1] } else { decay };
    Ok((vals[0], v))
}
