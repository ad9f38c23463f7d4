//! Numerical certification of the a priori bounds over parameter and scenario sweeps.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certificate::{BoundCertificate, BoundId};
use crate::error::{FhnError, Result};
use crate::field::{cubic_lagrange, BoundaryData, BoundaryKind, Field, GridSpec, InitialData, SpaceTimeSource};
use crate::kernel::{aux_quantities, certify_kernel_bounds, e_of_t};
use crate::linear::solve_linear_with;
use crate::nonlinear::{FhnSolution, FhnSolver, Kinetics, PicardOptions};
use crate::params::FhnParams;
use crate::pointwise::{fhn_at, linear_u_at};
use crate::SolverOptions;

/// Sup norms entering the right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupNorms {
    pub u0: f64,
    pub v0: f64,
    /// `||f||` for linear problems, `||phi(u)||` for nonlinear ones.
    pub source: f64,
}

/// A value of the solution to be checked against the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckPoint {
    pub x: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    /// Estimated error of `u` and `v`; added to the certificate slack.
    pub error: f64,
}

fn check_set(u: &Field, v: Option<&Field>, error: f64) -> Vec<CheckPoint> {
    let mut out = Vec::new();
    for (n, &t) in u.grid_t.iter().enumerate() {
        for (j, &x) in u.grid_x.iter().enumerate() {
            out.push(CheckPoint {
                x,
                t,
                u: u.values[n][j],
                v: v.map_or(0.0, |v| v.values[n][j]),
                error,
            });
        }
    }
    out
}

/// `2 [||f|| beta0 + ||u0|| (1 + pi sqrt(b) t) e^{-omega t} + ||v0|| E(t)]`.
///
/// The `v0` term vanishes for the zero-`v0` problems the estimate is stated for.
pub fn linear_u_rhs(p: &FhnParams, n: &SupNorms, t: f64) -> Result<f64> {
    let aux = aux_quantities(p, t)?;
    Ok(2.0
        * (n.source * aux.beta0
            + n.u0 * (1.0 + std::f64::consts::PI * p.b.sqrt() * t) * (-aux.omega * t).exp()
            + n.v0 * aux.e_t))
}

/// `2 [||u0|| (1 + pi sqrt(b) t) e^{-omega t} + ||v0|| E(t) + beta0 ||phi||]`.
pub fn nonlinear_u_rhs(p: &FhnParams, n: &SupNorms, t: f64) -> Result<f64> {
    linear_u_rhs(p, n, t)
}

/// `||v0|| e^{-beta t} + 2 b [(||u0|| + t ||v0||) E(t) + beta1 ||phi||]`.
pub fn nonlinear_v_rhs(p: &FhnParams, n: &SupNorms, t: f64) -> Result<f64> {
    let aux = aux_quantities(p, t)?;
    Ok(n.v0 * (-p.beta * t).exp() + 2.0 * p.b * ((n.u0 + t * n.v0) * e_of_t(p.a, p.beta, t) + aux.beta1 * n.source))
}

pub fn certify_linear_bound(
    p: &FhnParams,
    norms: &SupNorms,
    points: &[CheckPoint],
    digest: &str,
) -> Result<BoundCertificate> {
    p.require_estimates("certify_linear_bound")?;
    let mut b = BoundCertificate::builder(BoundId::LinearU, digest);
    for c in points {
        b.check(c.u.abs(), linear_u_rhs(p, norms, c.t)?);
        b.slack_at_least(c.error);
    }
    Ok(b.finish())
}

/// Checks `|u|` and `|v|` at every point of `sol` and at `extra`.
///
/// Requires zero boundary data; `norms.source` should be the realized sup of `phi(u)`.
pub fn certify_nonlinear_bounds(
    p: &FhnParams,
    sol: &FhnSolution,
    bdry: &BoundaryData,
    norms: &SupNorms,
    extra: &[CheckPoint],
    digest: &str,
) -> Result<[BoundCertificate; 2]> {
    p.require_estimates("certify_nonlinear_bounds")?;
    let mut ts = vec![0.0];
    ts.extend(&sol.u.grid_t);
    if !bdry.left.is_zero_on(&ts) || !bdry.right.is_zero_on(&ts) {
        return Err(FhnError::Regime(
            "certify_nonlinear_bounds: the estimates hold for zero boundary data only".into(),
        ));
    }
    let grid_error = SolverOptions::default().quad_tol;
    let mut bu = BoundCertificate::builder(BoundId::NonlinearU, digest);
    let mut bv = BoundCertificate::builder(BoundId::NonlinearV, digest);
    for c in check_set(&sol.u, Some(&sol.v), grid_error).iter().chain(extra) {
        bu.check(c.u.abs(), nonlinear_u_rhs(p, norms, c.t)?);
        bv.check(c.v.abs(), nonlinear_v_rhs(p, norms, c.t)?);
        bu.slack_at_least(c.error);
        bv.slack_at_least(c.error);
    }
    Ok([bu.finish(), bv.finish()])
}

#[derive(Clone)]
pub enum Forcing {
    Linear(SpaceTimeSource),
    /// The cubic FitzHugh-Nagumo reaction for each parameter set's `a`.
    Cubic,
    Custom(Kinetics),
}

/// Initial data and forcing; boundary data are homogeneous.
#[derive(Clone)]
pub struct CertScenario {
    pub name: String,
    pub init: InitialData,
    pub bc: BoundaryKind,
    pub forcing: Forcing,
    pub grid: GridSpec,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteOptions {
    pub offgrid_points: usize,
    pub kernel_times: usize,
    pub seed: u64,
    pub threads: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            offgrid_points: 100,
            kernel_times: 8,
            seed: 0,
            threads: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

/// Largest `|g|` over the grid nodes and eight points per cell.
fn dense_sup(xs: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    let mut m: f64 = 0.0;
    for w in xs.windows(2) {
        for k in 0..8 {
            m = m.max(g(w[0] + (w[1] - w[0]) * k as f64 / 8.0).abs());
        }
    }
    m.max(g(*xs.last().unwrap()).abs())
}

fn digest_of(p: &FhnParams, sc: &CertScenario, seed: u64) -> String {
    format!(
        "{} bc={:?} nx={} nt={} eps={} a={} b={} beta={} L={} T={} seed={}",
        sc.name, sc.bc, sc.grid.nx, sc.grid.nt, p.eps, p.a, p.b, p.beta, p.length, p.horizon, seed
    )
}

fn parallel_map<T: Sync, R: Send>(items: &[T], threads: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let chunk = items.len().div_ceil(threads.max(1)).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}

fn random_points(p: &FhnParams, n: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (rng.gen_range(0.0..p.length), p.horizon * rng.gen_range(0.02..1.0)))
        .collect()
}

/// Error budget of one pointwise evaluation.
const POINTWISE_ERROR: f64 = 1e-6;

fn certify_scenario(
    p: &FhnParams,
    sc: &CertScenario,
    digest: &str,
    opts: &SuiteOptions,
    seed: u64,
) -> Result<Vec<BoundCertificate>> {
    let bdry = BoundaryData::homogeneous(sc.bc);
    let xs = sc.grid.xs(p);
    let mut norms = SupNorms {
        u0: dense_sup(&xs, |x| sc.init.u0.eval(x)),
        v0: dense_sup(&xs, |x| sc.init.v0.eval(x)),
        source: 0.0,
    };
    let pts = random_points(p, opts.offgrid_points, seed);
    let solver_opts = SolverOptions::default();
    match &sc.forcing {
        Forcing::Linear(f) => {
            let u = solve_linear_with(p, &sc.init, &bdry, f, &sc.grid, &solver_opts)?;
            for &t in &u.grid_t {
                norms.source = norms.source.max(dense_sup(&xs, |x| f.eval(x, t)));
            }
            let extra: Vec<CheckPoint> = parallel_map(&pts, opts.threads, |&(x, t)| {
                linear_u_at(p, &sc.init, &bdry, f, x, t).map(|u| CheckPoint {
                    x,
                    t,
                    u,
                    v: 0.0,
                    error: POINTWISE_ERROR,
                })
            })
            .into_iter()
            .collect::<Result<_>>()?;
            let mut all = check_set(&u, None, solver_opts.quad_tol);
            all.extend(extra);
            Ok(vec![certify_linear_bound(p, &norms, &all, digest)?])
        }
        Forcing::Cubic | Forcing::Custom(_) => {
            let kin = match &sc.forcing {
                Forcing::Custom(k) => k.clone(),
                _ => Kinetics::cubic(p.a),
            };
            let solver = FhnSolver::new(p, &sc.init, &bdry, &kin, &sc.grid, &PicardOptions::default())?;
            let sol = solver.solve()?;
            let rows = solver.source_rows(&sol.u.values);
            norms.source = rows
                .iter()
                .map(|r| dense_sup(&xs, |x| cubic_lagrange(&xs, r, x)))
                .fold(0.0, f64::max);
            let extra: Vec<CheckPoint> = parallel_map(&pts, opts.threads, |&(x, t)| {
                fhn_at(p, &sc.init, &bdry, &kin, &sol, x, t).map(|(u, v)| CheckPoint {
                    x,
                    t,
                    u,
                    v,
                    error: POINTWISE_ERROR,
                })
            })
            .into_iter()
            .collect::<Result<_>>()?;
            Ok(certify_nonlinear_bounds(p, &sol, &bdry, &norms, &extra, digest)?.to_vec())
        }
    }
}

/// Runs every bound on every parameter set and scenario.
///
/// Kernel bounds depend only on the parameters and are certified once per set.
/// When `report_path` is given the certificates are written there as JSON.
pub fn run_certification_suite(
    param_sets: &[FhnParams],
    scenarios: &[CertScenario],
    report_path: Option<&Path>,
    opts: &SuiteOptions,
) -> Result<Vec<BoundCertificate>> {
    for (i, p) in param_sets.iter().enumerate() {
        p.validate()?;
        if !p.estimates_valid() {
            return Err(FhnError::Regime(format!(
                "param_set {i} (eps={}, a={}, b={}, beta={}) is outside the regime a > 0, b >= 0, beta > 0",
                p.eps, p.a, p.b, p.beta
            )));
        }
    }
    let mut certs = Vec::new();
    for (i, p) in param_sets.iter().enumerate() {
        let times: Vec<f64> = (1..=opts.kernel_times)
            .map(|k| p.horizon * k as f64 / opts.kernel_times as f64)
            .collect();
        certs.extend(certify_kernel_bounds(p, &times)?);
        for (k, sc) in scenarios.iter().enumerate() {
            let seed = opts.seed ^ ((i as u64) << 32 | k as u64);
            let digest = digest_of(p, sc, seed);
            certs.extend(certify_scenario(p, sc, &digest, opts, seed)?);
        }
    }
    if let Some(path) = report_path {
        write_report(path, &certs)?;
    }
    Ok(certs)
}

pub fn write_report(path: &Path, certs: &[BoundCertificate]) -> Result<()> {
    let json = serde_json::to_string_pretty(certs).map_err(|e| FhnError::Config(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| FhnError::Config(format!("cannot write {}: {e}", path.display())))
}
