//! Method-of-lines finite differences for
//! `u_t = eps u_xx - a u - v + S`, `v_t = b u - beta v`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FhnError, Result};
use crate::field::{BoundaryData, BoundaryKind, Field, FieldMeta, InitialData, SpaceTimeSource};
use crate::nonlinear::{FhnSolution, Kinetics, PicardReport};
use crate::params::FhnParams;

const BLOW_UP: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdScheme {
    ExplicitRk4,
    /// Backward Euler diffusion, forward Euler reaction.
    Imex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdConfig {
    pub nx: usize,
    pub dt: f64,
    pub scheme: FdScheme,
    pub bc: BoundaryKind,
}

impl FdConfig {
    /// RK4 at 90% of the diffusive limit `0.4 h^2 / eps`.
    pub fn explicit(p: &FhnParams, nx: usize, bc: BoundaryKind) -> Self {
        let h = p.length / nx as f64;
        FdConfig {
            nx,
            dt: 0.36 * h * h / p.eps,
            scheme: FdScheme::ExplicitRk4,
            bc,
        }
    }

    pub fn validate(&self, p: &FhnParams) -> Result<()> {
        if self.nx < 16 {
            return Err(FhnError::Config(format!("fd nx must be >= 16, got {}", self.nx)));
        }
        if !(self.dt > 0.0) {
            return Err(FhnError::Config(format!("fd dt must be positive, got {}", self.dt)));
        }
        let h = p.length / self.nx as f64;
        let limit = 0.4 * h * h / p.eps;
        if self.scheme == FdScheme::ExplicitRk4 && self.dt > limit {
            return Err(FhnError::Config(format!(
                "fd dt = {:e} exceeds the explicit stability limit {:e}",
                self.dt, limit
            )));
        }
        Ok(())
    }
}

/// Right-hand side `S` of the `u` equation.
#[derive(Debug, Clone)]
pub enum OracleSource {
    /// `S = phi(u)`.
    Kinetics(Kinetics),
    /// `S = f(x, t)`.
    Linear(SpaceTimeSource),
    /// `S = -w`, `w_t = gamma + sin u - w / eps`, `w(0) = 0`.
    Josephson { gamma: f64 },
}

struct State {
    u: Vec<f64>,
    v: Vec<f64>,
    w: Vec<f64>,
}

struct Rhs<'a> {
    p: &'a FhnParams,
    bdry: &'a BoundaryData,
    source: &'a OracleSource,
    xs: &'a [f64],
    h: f64,
}

impl Rhs<'_> {
    fn source_at(&self, j: usize, t: f64, u: f64, w: f64) -> f64 {
        match self.source {
            OracleSource::Kinetics(k) => k.phi(u),
            OracleSource::Linear(f) => f.eval(self.xs[j], t),
            OracleSource::Josephson { .. } => -w,
        }
    }

    fn memory_rate(&self, u: f64, w: f64) -> f64 {
        match self.source {
            OracleSource::Josephson { gamma } => gamma + u.sin() - w / self.p.eps,
            _ => 0.0,
        }
    }

    /// Reaction part plus, when `with_diffusion`, the discrete Laplacian.
    fn eval(&self, t: f64, s: &State, with_diffusion: bool) -> State {
        let n = s.u.len();
        let nx = n - 1;
        let p = self.p;
        let h2 = self.h * self.h;
        let mut du = vec![0.0; n];
        let mut dv = vec![0.0; n];
        let mut dw = vec![0.0; n];
        for j in 0..n {
            let u = s.u[j];
            let lap = if !with_diffusion {
                0.0
            } else if j == 0 {
                match self.bdry.kind {
                    BoundaryKind::Neumann => (2.0 * s.u[1] - 2.0 * u - 2.0 * self.h * self.bdry.left.eval(t)) / h2,
                    BoundaryKind::Dirichlet => 0.0,
                }
            } else if j == nx {
                match self.bdry.kind {
                    BoundaryKind::Neumann => {
                        (2.0 * s.u[nx - 1] - 2.0 * u + 2.0 * self.h * self.bdry.right.eval(t)) / h2
                    }
                    BoundaryKind::Dirichlet => 0.0,
                }
            } else {
                (s.u[j - 1] - 2.0 * u + s.u[j + 1]) / h2
            };
            du[j] = p.eps * lap - p.a * u - s.v[j] + self.source_at(j, t, u, s.w[j]);
            dv[j] = p.b * u - p.beta * s.v[j];
            dw[j] = self.memory_rate(u, s.w[j]);
        }
        if self.bdry.kind == BoundaryKind::Dirichlet {
            du[0] = 0.0;
            du[nx] = 0.0;
        }
        State { u: du, v: dv, w: dw }
    }

    fn pin(&self, t: f64, s: &mut State) {
        if self.bdry.kind == BoundaryKind::Dirichlet {
            let nx = s.u.len() - 1;
            s.u[0] = self.bdry.left.eval(t);
            s.u[nx] = self.bdry.right.eval(t);
        }
    }
}

fn combine(base: &State, k: &State, c: f64) -> State {
    let f = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + c * y).collect();
    State {
        u: f(&base.u, &k.u),
        v: f(&base.v, &k.v),
        w: f(&base.w, &k.w),
    }
}

fn rk4_step(rhs: &Rhs, t: f64, dt: f64, s: &State) -> State {
    let k1 = rhs.eval(t, s, true);
    let mut s2 = combine(s, &k1, 0.5 * dt);
    rhs.pin(t + 0.5 * dt, &mut s2);
    let k2 = rhs.eval(t + 0.5 * dt, &s2, true);
    let mut s3 = combine(s, &k2, 0.5 * dt);
    rhs.pin(t + 0.5 * dt, &mut s3);
    let k3 = rhs.eval(t + 0.5 * dt, &s3, true);
    let mut s4 = combine(s, &k3, dt);
    rhs.pin(t + dt, &mut s4);
    let k4 = rhs.eval(t + dt, &s4, true);
    let mut out = State {
        u: s.u.clone(),
        v: s.v.clone(),
        w: s.w.clone(),
    };
    for j in 0..s.u.len() {
        out.u[j] += dt / 6.0 * (k1.u[j] + 2.0 * k2.u[j] + 2.0 * k3.u[j] + k4.u[j]);
        out.v[j] += dt / 6.0 * (k1.v[j] + 2.0 * k2.v[j] + 2.0 * k3.v[j] + k4.v[j]);
        out.w[j] += dt / 6.0 * (k1.w[j] + 2.0 * k2.w[j] + 2.0 * k3.w[j] + k4.w[j]);
    }
    rhs.pin(t + dt, &mut out);
    out
}

/// Thomas algorithm for a tridiagonal system; `lower[0]` and `upper[n-1]` unused.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &mut [f64]) {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
}

fn imex_step(rhs: &Rhs, t: f64, dt: f64, s: &State) -> State {
    let n = s.u.len();
    let nx = n - 1;
    let k = rhs.eval(t, s, false);
    let mut next = combine(s, &k, dt);
    let r = rhs.p.eps * dt / (rhs.h * rhs.h);
    let mut lower = vec![-r; n];
    let mut diag = vec![1.0 + 2.0 * r; n];
    let mut upper = vec![-r; n];
    let t1 = t + dt;
    match rhs.bdry.kind {
        BoundaryKind::Neumann => {
            upper[0] = -2.0 * r;
            lower[nx] = -2.0 * r;
            next.u[0] -= 2.0 * r * rhs.h * rhs.bdry.left.eval(t1);
            next.u[nx] += 2.0 * r * rhs.h * rhs.bdry.right.eval(t1);
        }
        BoundaryKind::Dirichlet => {
            diag[0] = 1.0;
            upper[0] = 0.0;
            diag[nx] = 1.0;
            lower[nx] = 0.0;
            next.u[0] = rhs.bdry.left.eval(t1);
            next.u[nx] = rhs.bdry.right.eval(t1);
        }
    }
    thomas(&lower, &diag, &upper, &mut next.u);
    next
}

/// Solves on `x_j = jL/nx` and reports at `t_n = nT/nt_out`, `n = 1..=nt_out`.
pub fn fd_solve(
    p: &FhnParams,
    init: &InitialData,
    bdry: &BoundaryData,
    source: &OracleSource,
    cfg: &FdConfig,
    nt_out: usize,
) -> Result<FhnSolution> {
    p.validate()?;
    cfg.validate(p)?;
    if bdry.kind != cfg.bc {
        return Err(FhnError::Config(format!(
            "fd config boundary {:?} does not match data {:?}",
            cfg.bc, bdry.kind
        )));
    }
    if nt_out == 0 {
        return Err(FhnError::Config("fd output needs at least one time".into()));
    }
    let nx = cfg.nx;
    let h = p.length / nx as f64;
    let xs: Vec<f64> = (0..=nx).map(|j| if j == nx { p.length } else { j as f64 * h }).collect();
    let rhs = Rhs {
        p,
        bdry,
        source,
        xs: &xs,
        h,
    };
    let mut state = State {
        u: xs.iter().map(|&x| init.u0.eval(x)).collect(),
        v: xs.iter().map(|&x| init.v0.eval(x)).collect(),
        w: vec![0.0; nx + 1],
    };
    let out_dt = p.horizon / nt_out as f64;
    let steps = (out_dt / cfg.dt).ceil().max(1.0) as usize;
    let dt = out_dt / steps as f64;
    let mut us = Vec::with_capacity(nt_out);
    let mut vs = Vec::with_capacity(nt_out);
    let mut ts = Vec::with_capacity(nt_out);
    let mut t = 0.0;
    for n in 1..=nt_out {
        for _ in 0..steps {
            state = match cfg.scheme {
                FdScheme::ExplicitRk4 => rk4_step(&rhs, t, dt, &state),
                FdScheme::Imex => imex_step(&rhs, t, dt, &state),
            };
            t += dt;
            if let Some(bad) = state.u.iter().find(|v| !(v.abs() <= BLOW_UP)) {
                return Err(FhnError::Divergence {
                    stage: "fd_solve",
                    detail: format!("|u| = {bad:e} exceeds {BLOW_UP:e} at t = {t:.6}"),
                });
            }
        }
        t = n as f64 * out_dt;
        ts.push(if n == nt_out { p.horizon } else { t });
        us.push(state.u.clone());
        vs.push(state.v.clone());
    }
    let meta = |what: &str| FieldMeta {
        params: *p,
        description: format!("finite-difference {what}, nx = {nx}, {:?}", cfg.scheme),
    };
    Ok(FhnSolution {
        u: Field::new(xs.clone(), ts.clone(), us, meta("u"))?,
        v: Field::new(xs, ts, vs, meta("v"))?,
        report: PicardReport {
            iterations: 0,
            residual_history: Vec::new(),
            converged: true,
            final_residual: 0.0,
        },
    })
}

/// Scenario for a convergence study; `exact` compares against a closed form,
/// otherwise the finest grid is the reference.
#[derive(Clone)]
pub struct FdScenario {
    pub params: FhnParams,
    pub init: InitialData,
    pub bdry: BoundaryData,
    pub source: OracleSource,
    pub exact: Option<Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub nx: usize,
    pub error: f64,
    /// Order estimated from this row and the previous one.
    pub observed_order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
    /// Last available order estimate; `None` when undefined.
    pub order: Option<f64>,
    /// All errors vanished.
    pub exact: bool,
}

/// Max-norm errors at `t = T` on the coarse nodes shared by all grids.
pub fn fd_convergence_study(sc: &FdScenario, nx_list: &[usize]) -> Result<ConvergenceTable> {
    if nx_list.len() < 3 || nx_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FhnError::Config("nx_list must be strictly increasing with >= 3 entries".into()));
    }
    let coarse = nx_list[0];
    if nx_list.iter().any(|n| n % coarse != 0) {
        return Err(FhnError::Config("every nx must be a multiple of the first".into()));
    }
    let p = &sc.params;
    // a fixed step for all grids, so time error is common and tiny
    let finest = *nx_list.last().unwrap();
    let dt = FdConfig::explicit(p, finest, sc.bdry.kind).dt;
    let mut finals = Vec::new();
    for &nx in nx_list {
        let cfg = FdConfig {
            nx,
            dt,
            scheme: FdScheme::ExplicitRk4,
            bc: sc.bdry.kind,
        };
        let sol = fd_solve(p, &sc.init, &sc.bdry, &sc.source, &cfg, 1)?;
        let stride = nx / coarse;
        let last = sol.u.values.last().unwrap();
        finals.push((0..=coarse).map(|j| last[j * stride]).collect::<Vec<f64>>());
    }
    let xs: Vec<f64> = (0..=coarse).map(|j| j as f64 * p.length / coarse as f64).collect();
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let (errors, levels): (Vec<f64>, Vec<usize>) = match &sc.exact {
        Some(f) => {
            let exact: Vec<f64> = xs.iter().map(|&x| f(x, p.horizon)).collect();
            (finals.iter().map(|u| diff(u, &exact)).collect(), nx_list.to_vec())
        }
        None => {
            // successive differences e_k = |u_k - u_{k+1}|
            let e = finals.windows(2).map(|w| diff(&w[0], &w[1])).collect();
            (e, nx_list[..nx_list.len() - 1].to_vec())
        }
    };
    let mut rows = Vec::new();
    for (k, (&nx, &e)) in levels.iter().zip(&errors).enumerate() {
        let observed_order = if k == 0 || e == 0.0 || errors[k - 1] == 0.0 {
            None
        } else {
            let ratio = nx as f64 / levels[k - 1] as f64;
            Some((errors[k - 1] / e).ln() / ratio.ln())
        };
        rows.push(ConvergenceRow {
            nx,
            error: e,
            observed_order,
        });
    }
    let exact = errors.iter().all(|&e| e == 0.0);
    let order = rows.iter().rev().find_map(|r| r.observed_order);
    Ok(ConvergenceTable { rows, order, exact })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Profile;
    use std::f64::consts::PI;

    #[test]
    fn zero_data_stays_zero() {
        let p = FhnParams::unit();
        let cfg = FdConfig::explicit(&p, 16, BoundaryKind::Neumann);
        let sol = fd_solve(
            &p,
            &InitialData::zero(),
            &BoundaryData::homogeneous(BoundaryKind::Neumann),
            &OracleSource::Kinetics(Kinetics::cubic(0.25)),
            &cfg,
            4,
        )
        .unwrap();
        assert_eq!(sol.u.max_abs(), 0.0);
        assert_eq!(sol.v.max_abs(), 0.0);
    }

    #[test]
    fn stability_limit_enforced() {
        let p = FhnParams::unit();
        let cfg = FdConfig {
            nx: 32,
            dt: 1e-2,
            scheme: FdScheme::ExplicitRk4,
            bc: BoundaryKind::Neumann,
        };
        assert!(matches!(cfg.validate(&p), Err(FhnError::Config(_))));
        let imex = FdConfig { scheme: FdScheme::Imex, ..cfg };
        assert!(imex.validate(&p).is_ok());
    }

    #[test]
    fn cosine_mode_second_order() {
        let p = FhnParams::new(0.2, 0.5, 0.0, 1.0, 1.0, 0.5).unwrap();
        let rate = p.eps * PI * PI + p.a;
        let sc = FdScenario {
            params: p,
            init: InitialData::new(Profile::from_fn(|x| (PI * x).cos()), Profile::zero()),
            bdry: BoundaryData::homogeneous(BoundaryKind::Neumann),
            source: OracleSource::Linear(SpaceTimeSource::Zero),
            exact: Some(Arc::new(move |x, t| (PI * x).cos() * (-rate * t).exp())),
        };
        let table = fd_convergence_study(&sc, &[16, 32, 64]).unwrap();
        let order = table.order.unwrap();
        assert!((1.7..=2.3).contains(&order), "{table:?}");
    }

    #[test]
    fn zero_scenario_reports_exact() {
        let sc = FdScenario {
            params: FhnParams::unit(),
            init: InitialData::zero(),
            bdry: BoundaryData::homogeneous(BoundaryKind::Dirichlet),
            source: OracleSource::Linear(SpaceTimeSource::Zero),
            exact: None,
        };
        let t = fd_convergence_study(&sc, &[16, 32, 64]).unwrap();
        assert!(t.exact);
        assert!(t.order.is_none());
    }

    #[test]
    fn uniform_kinetics_matches_ode() {
        let p = FhnParams::new(1.0, 0.25, 1.0, 1.0, 1.0, 1.0).unwrap();
        let kin = Kinetics::cubic(0.25);
        let cfg = FdConfig::explicit(&p, 16, BoundaryKind::Neumann);
        let sol = fd_solve(
            &p,
            &InitialData::new(Profile::constant(0.1), Profile::zero()),
            &BoundaryData::homogeneous(BoundaryKind::Neumann),
            &OracleSource::Kinetics(kin.clone()),
            &cfg,
            1,
        )
        .unwrap();
        let (mut u, mut v) = (0.1f64, 0.0f64);
        let dt = 1e-4;
        let f = |u: f64, v: f64| (-p.a * u - v + kin.phi(u), p.b * u - p.beta * v);
        for _ in 0..10_000 {
            let k1 = f(u, v);
            let k2 = f(u + 0.5 * dt * k1.0, v + 0.5 * dt * k1.1);
            let k3 = f(u + 0.5 * dt * k2.0, v + 0.5 * dt * k2.1);
            let k4 = f(u + dt * k3.0, v + dt * k3.1);
            u += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            v += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        for x in &sol.u.values[0] {
            assert!((x - u).abs() < 1e-6);
        }
        for x in &sol.v.values[0] {
            assert!((x - v).abs() < 1e-6);
        }
    }

    #[test]
    fn imex_tracks_explicit() {
        let p = FhnParams::new(0.5, 0.5, 0.5, 1.0, 1.0, 0.5).unwrap();
        let init = InitialData::new(Profile::from_fn(|x| (PI * x).sin()), Profile::zero());
        let bd = BoundaryData::homogeneous(BoundaryKind::Dirichlet);
        let src = OracleSource::Kinetics(Kinetics::cubic(0.5));
        let ex = fd_solve(&p, &init, &bd, &src, &FdConfig::explicit(&p, 32, BoundaryKind::Dirichlet), 2).unwrap();
        let im = fd_solve(
            &p,
            &init,
            &bd,
            &src,
            &FdConfig {
                nx: 32,
                dt: 1e-4,
                scheme: FdScheme::Imex,
                bc: BoundaryKind::Dirichlet,
            },
            2,
        )
        .unwrap();
        assert!(ex.u.max_diff(&im.u).unwrap() < 1e-3);
    }

    #[test]
    fn blow_up_is_divergence() {
        let p = FhnParams::new(1.0, -5.0, 0.0, 1.0, 1.0, 10.0).unwrap();
        let init = InitialData::new(Profile::constant(1.0), Profile::zero());
        let err = fd_solve(
            &p,
            &init,
            &BoundaryData::homogeneous(BoundaryKind::Neumann),
            &OracleSource::Linear(SpaceTimeSource::Zero),
            &FdConfig::explicit(&p, 16, BoundaryKind::Neumann),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, FhnError::Divergence { .. }));
    }
}
