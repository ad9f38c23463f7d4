//! Explicit solution formulas for the linear problem
//! `u_t - eps u_xx + a u + b int_0^t e^{-beta(t-s)} u ds = f` on `[0, L]`.

use crate::error::{FhnError, Result};
use crate::field::{
    BoundaryData, BoundaryKind, Field, FieldMeta, GridSpec, InitialData, SpaceTimeSource,
};
use crate::kernel::KernelKind;
use crate::params::FhnParams;
use crate::propagator::{Propagator, SolverOptions};

/// Samples of the data on the grid nodes and times `tau_k`, `k = 0..=nt`.
pub(crate) struct Sampled {
    pub xs: Vec<f64>,
    pub taus: Vec<f64>,
    pub u0: Vec<f64>,
    pub v0: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl Sampled {
    pub fn new(p: &FhnParams, grid: &GridSpec, init: &InitialData, bdry: &BoundaryData) -> Result<Self> {
        let xs = grid.xs(p);
        let mut taus = vec![0.0];
        taus.extend(grid.ts(p));
        let u0: Vec<f64> = xs.iter().map(|&x| init.u0.eval(x)).collect();
        let v0: Vec<f64> = xs.iter().map(|&x| init.v0.eval(x)).collect();
        let left: Vec<f64> = taus.iter().map(|&t| bdry.left.eval(t)).collect();
        let right: Vec<f64> = taus.iter().map(|&t| bdry.right.eval(t)).collect();
        for (name, v) in [("u0", &u0), ("v0", &v0), ("left boundary", &left), ("right boundary", &right)] {
            if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(FhnError::domain("data sampling", format!("{name} has non-finite value {bad}")));
            }
        }
        Ok(Sampled {
            xs,
            taus,
            u0,
            v0,
            left,
            right,
        })
    }

    pub fn v0_is_zero(&self) -> bool {
        self.v0.iter().all(|&v| v == 0.0)
    }

    pub fn boundary_is_zero(&self) -> bool {
        self.left.iter().chain(&self.right).all(|&v| v == 0.0)
    }
}

/// Linear part of the integral equation for `u` and its `v` counterpart.
pub(crate) struct LinearParts {
    /// Data terms `S0 u0 - S1 v0` (and boundary terms), rows `n = 1..=nt`.
    pub u: Vec<Vec<f64>>,
    /// `S0 u0 - S1 v0` alone.
    pub data_only: Vec<Vec<f64>>,
}

pub(crate) fn add_rows(acc: &mut [Vec<f64>], other: &[Vec<f64>], scale: f64) {
    for (a, b) in acc.iter_mut().zip(other) {
        for (x, y) in a.iter_mut().zip(b) {
            *x += scale * y;
        }
    }
}

pub(crate) fn linear_parts(prop: &Propagator, data: &Sampled) -> LinearParts {
    let mut data_only = prop.initial(KernelKind::K0, &data.u0);
    if !data.v0_is_zero() {
        add_rows(&mut data_only, &prop.initial(KernelKind::K1, &data.v0), -1.0);
    }
    let mut u = data_only.clone();
    if !data.boundary_is_zero() {
        add_rows(&mut u, &prop.boundary(KernelKind::K0, &data.left, &data.right), 1.0);
    }
    LinearParts { u, data_only }
}

/// Pins Dirichlet boundary nodes to the prescribed values.
pub(crate) fn pin_dirichlet(rows: &mut [Vec<f64>], data: &Sampled) {
    for (n, row) in rows.iter_mut().enumerate() {
        let last = row.len() - 1;
        row[0] = data.left[n + 1];
        row[last] = data.right[n + 1];
    }
}

pub(crate) fn kernels_for(data: &Sampled, extra: &[KernelKind]) -> Vec<KernelKind> {
    let mut k = vec![KernelKind::K0];
    if !data.v0_is_zero() {
        k.push(KernelKind::K1);
    }
    for e in extra {
        if !k.contains(e) {
            k.push(*e);
        }
    }
    k
}

fn sample_source(f: &SpaceTimeSource, xs: &[f64], taus: &[f64]) -> Result<Option<Vec<Vec<f64>>>> {
    if matches!(f, SpaceTimeSource::Zero) {
        return Ok(None);
    }
    let rows: Vec<Vec<f64>> = taus
        .iter()
        .map(|&t| xs.iter().map(|&x| f.eval(x, t)).collect())
        .collect();
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(FhnError::domain("source sampling", "non-finite source value"));
    }
    Ok(Some(rows))
}

/// Shared driver. A nonzero `v0` contributes `-int G1 v0`, i.e. the source
/// `f - v0 e^{-beta t}`; with `v0 = 0` this is the plain linear problem.
pub fn solve_linear_with(
    p: &FhnParams,
    init: &InitialData,
    bdry: &BoundaryData,
    f: &SpaceTimeSource,
    grid: &GridSpec,
    opts: &SolverOptions,
) -> Result<Field> {
    p.validate()?;
    grid.validate()?;
    let data = Sampled::new(p, grid, init, bdry)?;
    let prop = Propagator::new(p, grid.nx, grid.nt, bdry.kind, &kernels_for(&data, &[]), opts)?;
    let mut rows = linear_parts(&prop, &data).u;
    if let Some(src) = sample_source(f, &data.xs, &data.taus)? {
        add_rows(&mut rows, &prop.source(KernelKind::K0, &src), 1.0);
    }
    if bdry.kind == BoundaryKind::Dirichlet {
        pin_dirichlet(&mut rows, &data);
    }
    Field::new(
        data.xs,
        data.taus[1..].to_vec(),
        rows,
        FieldMeta {
            params: *p,
            description: format!("linear {:?} solution", bdry.kind),
        },
    )
}

pub fn solve_linear_neumann(
    p: &FhnParams,
    init: &InitialData,
    bdry: &BoundaryData,
    f: &SpaceTimeSource,
    grid: &GridSpec,
) -> Result<Field> {
    bdry.require(BoundaryKind::Neumann, "solve_linear_neumann")?;
    solve_linear_with(p, init, bdry, f, grid, &SolverOptions::default())
}

pub fn solve_linear_dirichlet(
    p: &FhnParams,
    init: &InitialData,
    bdry: &BoundaryData,
    f: &SpaceTimeSource,
    grid: &GridSpec,
) -> Result<Field> {
    bdry.require(BoundaryKind::Dirichlet, "solve_linear_dirichlet")?;
    solve_linear_with(p, init, bdry, f, grid, &SolverOptions::default())
}

/// Piecewise-linear kinetics `f(u) = H(u - a) - u` with the step frozen at
/// `eta_bar`: the `-u` joins the operator, so the solve uses rate `1` in place
/// of `a`, and `eta_bar` is a constant source. `params.a` is the threshold.
pub fn mckean_params(p: &FhnParams) -> FhnParams {
    FhnParams { a: 1.0, ..*p }
}

pub fn mckean_linear_scenario(
    p: &FhnParams,
    init: &InitialData,
    bdry: &BoundaryData,
    eta_bar: u8,
    grid: &GridSpec,
) -> Result<Field> {
    p.require_estimates("mckean_linear_scenario")?;
    if eta_bar > 1 {
        return Err(FhnError::domain("mckean_linear_scenario", format!("eta_bar must be 0 or 1, got {eta_bar}")));
    }
    let shifted = mckean_params(p);
    let f = SpaceTimeSource::constant(eta_bar as f64);
    let mut field = solve_linear_with(&shifted, init, bdry, &f, grid, &SolverOptions::default())?;
    field.meta.params = *p;
    field.meta.description = format!("McKean frozen-step scenario, eta_bar = {eta_bar}");
    Ok(field)
}

/// Uniform linear ODE system `u' = -a u - v + c`, `v' = b u - beta v` solved by
/// the matrix exponential. Used as an oracle for spatially uniform data.
pub fn uniform_linear_ode(a: f64, b: f64, beta: f64, c: f64, u0: f64, v0: f64, t: f64) -> (f64, f64) {
    // steady state
    let det = a * beta + b;
    let (us, vs) = if det != 0.0 {
        (beta * c / det, b * c / det)
    } else {
        (0.0, 0.0)
    };
    let (x0, y0) = (u0 - us, v0 - vs);
    // exp(tA) for A = [[-a, -1], [b, -beta]] via Cayley-Hamilton
    let tr = -a - beta;
    let m = 0.5 * tr;
    let disc = m * m - det;
    let (c0, c1) = if disc.abs() < 1e-14 {
        // repeated eigenvalue m
        let e = (m * t).exp();
        (e * (1.0 - m * t), e * t)
    } else if disc > 0.0 {
        let r = disc.sqrt();
        let (l1, l2) = (m + r, m - r);
        let (e1, e2) = ((l1 * t).exp(), (l2 * t).exp());
        ((l1 * e2 - l2 * e1) / (l1 - l2), (e1 - e2) / (l1 - l2))
    } else {
        let w = (-disc).sqrt();
        let e = (m * t).exp();
        let (s, co) = ((w * t).sin(), (w * t).cos());
        (e * (co - m * s / w), e * s / w)
    };
    // exp(tA) = c0 I + c1 A
    let x = c0 * x0 + c1 * (-a * x0 - y0);
    let y = c0 * y0 + c1 * (b * x0 - beta * y0);
    (x + us, y + vs)
}
