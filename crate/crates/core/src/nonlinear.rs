//! Picard iteration on the coupled integral equations for `(u, v)`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use crate::estimates::certify_nonlinear_bounds;
use crate::error::{FhnError, Result};
use crate::field::{BoundaryData, BoundaryKind, Field, FieldMeta, GridSpec, InitialData, Profile};
use crate::kernel::KernelKind;
use crate::linear::{add_rows, kernels_for, linear_parts, pin_dirichlet, Sampled};
use crate::params::FhnParams;
use crate::propagator::{Propagator, SolverOptions};
use crate::quadrature::gauss_legendre;

/// Reaction term `phi` in `f(u) = -a u + phi(u)`.
#[derive(Clone)]
pub struct Kinetics {
    phi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub phi_lipschitz_bound: f64,
    pub working_interval: (f64, f64),
    pub description: String,
}

impl fmt::Debug for Kinetics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kinetics")
            .field("description", &self.description)
            .field("phi_lipschitz_bound", &self.phi_lipschitz_bound)
            .field("working_interval", &self.working_interval)
            .finish()
    }
}

pub fn phi_cubic(a: f64, u: f64) -> f64 {
    u * u * (a + 1.0 - u)
}

impl Kinetics {
    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(
        phi: F,
        phi_lipschitz_bound: f64,
        working_interval: (f64, f64),
        description: impl Into<String>,
    ) -> Self {
        Kinetics {
            phi: Arc::new(phi),
            phi_lipschitz_bound,
            working_interval,
            description: description.into(),
        }
    }

    /// `phi(u) = u^2 (a + 1 - u)` on `[-2(a+1), 2(a+1)]`.
    pub fn cubic(a: f64) -> Self {
        let r = 2.0 * (a + 1.0).abs();
        // |phi'| = |2(a+1)u - 3u^2| peaks at the left end of the interval
        let lip = 2.0 * (a + 1.0).abs() * r + 3.0 * r * r;
        Kinetics::new(move |u| phi_cubic(a, u), lip, (-r, r), format!("cubic, a = {a}"))
    }

    pub fn zero() -> Self {
        Kinetics::new(|_| 0.0, 0.0, (f64::NEG_INFINITY, f64::INFINITY), "zero")
    }

    #[inline]
    pub fn phi(&self, u: f64) -> f64 {
        (self.phi)(u)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
    pub final_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FhnSolution {
    pub u: Field,
    pub v: Field,
    pub report: PicardReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardOptions {
    pub picard_tol: f64,
    pub max_iter: usize,
    pub solver: SolverOptions,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions {
            picard_tol: 1e-8,
            max_iter: 50,
            solver: SolverOptions::default(),
        }
    }
}

/// Prepared operators for one nonlinear problem.
pub struct FhnSolver {
    params: FhnParams,
    kin: Kinetics,
    bc: BoundaryKind,
    prop: Propagator,
    data: Sampled,
    /// `S0 u0 - S1 v0 + boundary`, rows `n = 1..=nt`.
    lin: Vec<Vec<f64>>,
    data_only: Vec<Vec<f64>>,
    opts: PicardOptions,
}

impl FhnSolver {
    pub fn new(
        p: &FhnParams,
        init: &InitialData,
        bdry: &BoundaryData,
        kin: &Kinetics,
        grid: &GridSpec,
        opts: &PicardOptions,
    ) -> Result<Self> {
        p.validate()?;
        grid.validate()?;
        if !(opts.picard_tol > 0.0) || opts.max_iter == 0 {
            return Err(FhnError::Config("picard_tol must be positive and max_iter >= 1".into()));
        }
        let data = Sampled::new(p, grid, init, bdry)?;
        let mut extra = Vec::new();
        if p.b > 0.0 {
            extra.push(KernelKind::K1);
            if !data.v0_is_zero() {
                extra.push(KernelKind::K2);
            }
        }
        let prop = Propagator::new(p, grid.nx, grid.nt, bdry.kind, &kernels_for(&data, &extra), &opts.solver)?;
        let parts = linear_parts(&prop, &data);
        let mut lin = parts.u;
        if bdry.kind == BoundaryKind::Dirichlet {
            pin_dirichlet(&mut lin, &data);
        }
        Ok(FhnSolver {
            params: *p,
            kin: kin.clone(),
            bc: bdry.kind,
            prop,
            data,
            lin,
            data_only: parts.data_only,
            opts: *opts,
        })
    }

    fn field(&self, rows: Vec<Vec<f64>>, what: &str) -> Result<Field> {
        Field::new(
            self.data.xs.clone(),
            self.data.taus[1..].to_vec(),
            rows,
            FieldMeta {
                params: self.params,
                description: format!("{what} ({:?}, {})", self.bc, self.kin.description),
            },
        )
    }

    /// `phi(u)` at `tau_k`, `k = 0..=nt`, with `u(., 0) = u0`.
    pub fn source_rows(&self, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
        std::iter::once(&self.data.u0)
            .chain(u.iter())
            .map(|row| row.iter().map(|&x| self.kin.phi(x)).collect())
            .collect()
    }

    fn apply(&self, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let mut next = self.lin.clone();
        add_rows(&mut next, &self.prop.source(KernelKind::K0, &self.source_rows(u)), 1.0);
        if self.bc == BoundaryKind::Dirichlet {
            pin_dirichlet(&mut next, &self.data);
        }
        next
    }

    /// One application of the fixed-point map to `u`.
    pub fn picard_map(&self, u: &Field) -> Result<Field> {
        if u.values.len() != self.lin.len() || u.grid_x.len() != self.data.xs.len() {
            return Err(FhnError::Shape("field does not match the solver grid".into()));
        }
        self.field(self.apply(&u.values), "u after one Picard step")
    }

    /// Data terms `int G0 u0 - int G1 v0` without boundary or source.
    pub fn data_terms(&self) -> Result<Field> {
        self.field(self.data_only.clone(), "initial-data terms")
    }

    pub fn linear_part(&self) -> Result<Field> {
        self.field(self.lin.clone(), "linear part")
    }

    pub fn solve(&self) -> Result<FhnSolution> {
        let (lo, hi) = self.kin.working_interval;
        let mut u = self.lin.clone();
        let mut history = Vec::new();
        let mut converged = false;
        for _ in 0..self.opts.max_iter {
            let next = self.apply(&u);
            let mut res: f64 = 0.0;
            for (a, b) in next.iter().flatten().zip(u.iter().flatten()) {
                if !b.is_finite() || !a.is_finite() {
                    return Err(FhnError::Divergence {
                        stage: "picard",
                        detail: "non-finite iterate".into(),
                    });
                }
                res = res.max((a - b).abs());
            }
            if let Some(bad) = next.iter().flatten().find(|&&v| v < lo || v > hi) {
                return Err(FhnError::Divergence {
                    stage: "picard",
                    detail: format!(
                        "iterate {} left the working interval [{lo}, {hi}] with value {bad}",
                        history.len() + 1
                    ),
                });
            }
            history.push(res);
            u = next;
            if res <= self.opts.picard_tol {
                converged = true;
                break;
            }
        }
        let report = PicardReport {
            iterations: history.len(),
            final_residual: *history.last().unwrap_or(&0.0),
            residual_history: history,
            converged,
        };
        if !converged {
            return Err(FhnError::NotConverged { report });
        }
        let v = self.v_from(&u)?;
        Ok(FhnSolution {
            u: self.field(u, "u")?,
            v,
            report,
        })
    }

    /// `v = v0 e^{-beta t} + b [int G1 u0 - int G2 v0 + boundary_1 + int int G1 phi(u)]`.
    fn v_from(&self, u: &[Vec<f64>]) -> Result<Field> {
        let p = &self.params;
        let nx = self.prop.nx;
        let mut rows: Vec<Vec<f64>> = self.data.taus[1..]
            .iter()
            .map(|&t| self.data.v0.iter().map(|v| v * (-p.beta * t).exp()).collect())
            .collect();
        if p.b > 0.0 {
            let mut mem = self.prop.initial(KernelKind::K1, &self.data.u0);
            if !self.data.v0_is_zero() {
                add_rows(&mut mem, &self.prop.initial(KernelKind::K2, &self.data.v0), -1.0);
            }
            if !self.data.boundary_is_zero() {
                add_rows(&mut mem, &self.prop.boundary(KernelKind::K1, &self.data.left, &self.data.right), 1.0);
            }
            add_rows(&mut mem, &self.prop.source(KernelKind::K1, &self.source_rows(u)), 1.0);
            add_rows(&mut rows, &mem, p.b);
            if self.bc == BoundaryKind::Dirichlet {
                // u is prescribed on the boundary, so v there solves its ODE exactly
                for (col, signal) in [(0, &self.data.left), (nx, &self.data.right)] {
                    let series: Vec<f64> = signal.clone();
                    let mem = exp_weighted_history(p.beta, &self.data.taus, &series);
                    for (n, row) in rows.iter_mut().enumerate() {
                        let t = self.data.taus[n + 1];
                        row[col] = self.data.v0[col] * (-p.beta * t).exp() + p.b * mem[n + 1];
                    }
                }
            }
        }
        self.field(rows, "v")
    }
}

/// `int_0^{t_n} e^{-beta (t_n - tau)} y(tau) dtau` for piecewise-linear `y`
/// through `(times[k], values[k])`, `times[0] = 0`; exact for such `y`.
pub(crate) fn exp_weighted_history(beta: f64, times: &[f64], values: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; times.len()];
    for n in 1..times.len() {
        let d = times[n] - times[n - 1];
        let (w_old, w_new) = hat_exp_weights(beta, d);
        out[n] = (-beta * d).exp() * out[n - 1] + w_old * values[n - 1] + w_new * values[n];
    }
    out
}

/// Same integral with `y` locally quadratic through three consecutive samples.
pub(crate) fn exp_weighted_history_quadratic(beta: f64, times: &[f64], values: &[f64]) -> Vec<f64> {
    if times.len() < 3 {
        return exp_weighted_history(beta, times, values);
    }
    let gl = gauss_legendre(8);
    let mut out = vec![0.0; times.len()];
    for n in 1..times.len() {
        let (t0, t1) = (times[n - 1], times[n]);
        let base = if n >= 2 { n - 2 } else { 0 };
        let st = [times[base], times[base + 1], times[base + 2]];
        let sv = [values[base], values[base + 1], values[base + 2]];
        let local = gl.integrate(t0, t1, |tau| {
            let mut y = 0.0;
            for i in 0..3 {
                let mut l = 1.0;
                for k in 0..3 {
                    if k != i {
                        l *= (tau - st[k]) / (st[i] - st[k]);
                    }
                }
                y += l * sv[i];
            }
            (-beta * (t1 - tau)).exp() * y
        });
        out[n] = (-beta * (t1 - t0)).exp() * out[n - 1] + local;
    }
    out
}

/// Weights of the left and right hat functions in `int_0^d e^{-beta s} (.) ds`,
/// `s` measured back from the right end.
fn hat_exp_weights(beta: f64, d: f64) -> (f64, f64) {
    let x = beta * d;
    if x.abs() < 0.5 {
        // closed forms cancel like 1/x here; sum (-x)^k (k+1)/(k+2)! and (-x)^k/(k+2)!
        let (mut left, mut right) = (0.0, 0.0);
        let mut term = 0.5;
        for k in 0..24 {
            left += term * (k as f64 + 1.0);
            right += term;
            term *= -x / (k as f64 + 3.0);
        }
        (d * left, d * right)
    } else {
        let e = (-x).exp();
        let left = (1.0 - e * (1.0 + x)) / (beta * x);
        let right = (x - 1.0 + e) / (beta * x);
        (left, right)
    }
}

fn solve_kind(
    kind: BoundaryKind,
    op: &'static str,
    p: &FhnParams,
    init: &InitialData,
    bdry: &BoundaryData,
    kin: &Kinetics,
    grid: &GridSpec,
    picard_tol: f64,
    max_iter: usize,
) -> Result<FhnSolution> {
    bdry.require(kind, op)?;
    let opts = PicardOptions {
        picard_tol,
        max_iter,
        ..Default::default()
    };
    FhnSolver::new(p, init, bdry, kin, grid, &opts)?.solve()
}

pub fn solve_fhn_neumann(
    p: &FhnParams,
    init: &InitialData,
    bdry: &BoundaryData,
    kin: &Kinetics,
    grid: &GridSpec,
    picard_tol: f64,
    max_iter: usize,
) -> Result<FhnSolution> {
    solve_kind(BoundaryKind::Neumann, "solve_fhn_neumann", p, init, bdry, kin, grid, picard_tol, max_iter)
}

pub fn solve_fhn_dirichlet(
    p: &FhnParams,
    init: &InitialData,
    bdry: &BoundaryData,
    kin: &Kinetics,
    grid: &GridSpec,
    picard_tol: f64,
    max_iter: usize,
) -> Result<FhnSolution> {
    solve_kind(BoundaryKind::Dirichlet, "solve_fhn_dirichlet", p, init, bdry, kin, grid, picard_tol, max_iter)
}

/// `F = phi(u) - v0(x) e^{-beta t}`.
pub fn source_f(kin: &Kinetics, v0: &Profile, beta: f64, x: f64, t: f64, u: f64) -> f64 {
    kin.phi(u) - v0.eval(x) * (-beta * t).exp()
}

/// `v = v0 e^{-beta t} + b int_0^t e^{-beta(t-tau)} u dtau` with `u` piecewise
/// linear in time through `u0` at `t = 0` and the samples of `u`.
pub fn recover_v(p: &FhnParams, u: &Field, init: &InitialData) -> Result<Field> {
    u.validate()?;
    let mut times = vec![0.0];
    times.extend(&u.grid_t);
    let mut rows = vec![vec![0.0; u.grid_x.len()]; u.grid_t.len()];
    for (j, &x) in u.grid_x.iter().enumerate() {
        let mut series = vec![init.u0.eval(x)];
        series.extend(u.values.iter().map(|row| row[j]));
        let mem = exp_weighted_history_quadratic(p.beta, &times, &series);
        let v0 = init.v0.eval(x);
        for (n, row) in rows.iter_mut().enumerate() {
            row[j] = v0 * (-p.beta * times[n + 1]).exp() + p.b * mem[n + 1];
        }
    }
    Field::new(
        u.grid_x.clone(),
        u.grid_t.clone(),
        rows,
        FieldMeta {
            params: *p,
            description: "v recovered from u".into(),
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JosephsonParams {
    pub a: f64,
    pub b: f64,
    pub beta: f64,
    pub estimates_valid: bool,
}

/// `a = alpha - 1/eps`, `b = -a/eps`, `beta = 1/eps`.
pub fn josephson_params(alpha: f64, eps: f64) -> Result<JosephsonParams> {
    if !(eps > 0.0) || !eps.is_finite() || !alpha.is_finite() {
        return Err(FhnError::domain("josephson_params", format!("need eps > 0 and finite alpha (eps = {eps}, alpha = {alpha})")));
    }
    let a = alpha - 1.0 / eps;
    let b = -a / eps;
    let beta = 1.0 / eps;
    Ok(JosephsonParams {
        a,
        b,
        beta,
        estimates_valid: a > 0.0 && b >= 0.0 && beta > 0.0,
    })
}

impl JosephsonParams {
    pub fn into_params(self, eps: f64, length: f64, horizon: f64) -> Result<FhnParams> {
        FhnParams::new(eps, self.a, self.b, self.beta, length, horizon)
    }
}

/// `F = -int_0^t e^{-(t - tau)/eps} [gamma + sin u(tau)] dtau` from samples
/// `(tau_k, u_k)` starting at `tau = 0`, by the exponentially weighted trapezoid rule.
pub fn josephson_source(gamma: f64, eps: f64, history: &[(f64, f64)], t: f64) -> Result<f64> {
    const OP: &str = "josephson_source";
    if !(eps > 0.0) {
        return Err(FhnError::domain(OP, format!("eps must be positive, got {eps}")));
    }
    if history.is_empty() || history[0].0 != 0.0 {
        return Err(FhnError::domain(OP, "history must start at tau = 0"));
    }
    if history.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(FhnError::domain(OP, "history times must be strictly increasing"));
    }
    let last = history[history.len() - 1].0;
    if t > last * (1.0 + 1e-12) || t < 0.0 {
        return Err(FhnError::domain(OP, format!("history covers [0, {last}] but t = {t}")));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for w in history.windows(2) {
        times.push(w[0].0);
        values.push(gamma + w[0].1.sin());
        if w[1].0 >= t {
            let s = (t - w[0].0) / (w[1].0 - w[0].0);
            let u = w[0].1 * (1.0 - s) + w[1].1 * s;
            if t > w[0].0 {
                times.push(t);
                values.push(gamma + u.sin());
            }
            break;
        }
    }
    if times.is_empty() || *times.last().unwrap() < t {
        times.push(t);
        values.push(gamma + history[0].1.sin());
    }
    let mem = exp_weighted_history(1.0 / eps, &times, &values);
    Ok(-mem[mem.len() - 1])
}
