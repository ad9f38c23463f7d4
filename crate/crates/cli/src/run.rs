//! Dispatch of a validated configuration to the solvers.

use std::fs;
use std::path::{Path, PathBuf};

use fhn_core::estimates::{self, run_certification_suite, CertScenario, SuiteOptions};
use fhn_core::field::{BoundaryData, Field, GridSpec, InitialData, Profile, SpaceTimeSource};
use fhn_core::kernel::{k0, k0_x, k_i};
use fhn_core::linear::{mckean_linear_scenario, mckean_params, solve_linear_with};
use fhn_core::nonlinear::{recover_v, FhnSolution, FhnSolver, Kinetics, PicardOptions, PicardReport};
use fhn_core::oracle::{fd_solve, FdConfig, OracleSource};
use fhn_core::scenarios::{preset, Forcing, Scenario};
use fhn_core::theta::theta;
use fhn_core::{FhnError, FhnParams, SolverOptions};

use crate::config::{build_profile, InlineForcing, KernelQuantity, Mode, RunConfig};
use crate::csv::{fmt_f64, write_field_csv};
use crate::error::CliError;

/// Settings that come from the environment rather than the config file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunEnv {
    pub threads: usize,
}

impl RunEnv {
    /// Reads `FHN_THREADS`; unset means all available cores.
    pub fn from_env() -> Result<Self, CliError> {
        let threads = match std::env::var("FHN_THREADS") {
            Ok(s) => match s.trim().parse::<usize>() {
                Ok(n) if n > 0 => n,
                _ => return Err(CliError::config(format!("FHN_THREADS must be a positive integer, got '{s}'"))),
            },
            Err(_) => std::thread::available_parallelism().map_or(1, |n| n.get()),
        };
        Ok(RunEnv { threads })
    }
}

impl Default for RunEnv {
    fn default() -> Self {
        RunEnv { threads: 1 }
    }
}

/// What a successful run produced.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Lines for standard output.
    pub stdout: Vec<String>,
    pub files: Vec<PathBuf>,
}

pub fn resolve_scenario(cfg: &RunConfig) -> Result<Scenario, CliError> {
    let mut sc = match (&cfg.scenario, &cfg.inline) {
        (Some(name), _) => preset(name).map_err(|e| CliError::from_core("scenario", e))?,
        (None, Some(inl)) => {
            let forcing = match inl.forcing {
                InlineForcing::Cubic => Forcing::Cubic,
                InlineForcing::Zero => Forcing::Linear(SpaceTimeSource::Zero),
                InlineForcing::Linear => Forcing::Linear(SpaceTimeSource::constant(inl.source)),
                InlineForcing::Mckean => Forcing::McKean { eta_bar: inl.eta_bar },
            };
            Scenario {
                name: "inline".into(),
                params: FhnParams::unit(),
                init: InitialData::new(build_profile(&inl.u0, "inline.u0")?, build_profile(&inl.v0, "inline.v0")?),
                bdry: BoundaryData::new(inl.boundary, Profile::constant(inl.left), Profile::constant(inl.right)),
                forcing,
                grid: GridSpec::new(32, 40).expect("default grid is valid"),
                exact: None,
            }
        }
        (None, None) => {
            return Err(CliError::config(format!(
                "mode {} needs `scenario` or an [inline] table",
                cfg.mode
            )))
        }
    };
    if let Some(p) = cfg.params {
        sc.params = p;
    }
    if let Some(g) = cfg.grid {
        sc.grid = GridSpec::new(g.nx, g.nt).map_err(|e| CliError::config(format!("grid: {e}")))?;
    }
    Ok(sc)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::MissingFile(format!("cannot create output directory {}: {e}", dir.display())))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("report types serialize");
    fs::write(path, text).map_err(|e| CliError::MissingFile(format!("cannot write {}: {e}", path.display())))
}

fn exact_error(sc: &Scenario, u: &Field) -> Option<f64> {
    let exact = sc.exact.as_ref()?;
    let mut err: f64 = 0.0;
    for (row, &t) in u.values.iter().zip(&u.grid_t) {
        for (&v, &x) in row.iter().zip(&u.grid_x) {
            err = err.max((v - exact(x, t)).abs());
        }
    }
    Some(err)
}

pub fn run(cfg: &RunConfig, env: &RunEnv) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match cfg.mode {
        Mode::Kernel => run_kernel(cfg),
        Mode::SolveLinear => run_solve_linear(cfg),
        Mode::SolveFhn => run_solve_fhn(cfg),
        Mode::Oracle => run_oracle(cfg),
        Mode::Certify => run_certify(cfg, env),
    }
}

fn run_kernel(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = match (&cfg.params, &cfg.scenario) {
        (Some(p), _) => *p,
        (None, Some(_)) => resolve_scenario(cfg)?.params,
        (None, None) => FhnParams::unit(),
    };
    let q = cfg.kernel;
    let tol = cfg.tolerances.kernel_tol;
    let (name, value) = match q.kind {
        KernelQuantity::K0 => ("k0", k0(&p, q.x, q.t, tol).map(|e| e.value)),
        KernelQuantity::K0X => ("k0_x", k0_x(&p, q.x, q.t, tol).map(|e| e.value)),
        KernelQuantity::K1 => ("k1", k_i(&p, 1, q.x, q.t, tol).map(|e| e.value)),
        KernelQuantity::K2 => ("k2", k_i(&p, 2, q.x, q.t, tol).map(|e| e.value)),
        KernelQuantity::Theta0 => ("theta0", theta(&p, 0, q.x, q.t, false, tol).map(|e| e.value)),
        KernelQuantity::Theta1 => ("theta1", theta(&p, 1, q.x, q.t, false, tol).map(|e| e.value)),
        KernelQuantity::Theta2 => ("theta2", theta(&p, 2, q.x, q.t, false, tol).map(|e| e.value)),
    };
    let value = value.map_err(|e| CliError::from_core("kernel", e))?;
    Ok(Outcome {
        stdout: vec![format!("{name},{},{},{}", fmt_f64(q.x), fmt_f64(q.t), fmt_f64(value))],
        files: Vec::new(),
    })
}

fn solver_options(cfg: &RunConfig) -> SolverOptions {
    SolverOptions {
        quad_tol: cfg.tolerances.quad_tol,
        ..SolverOptions::default()
    }
}

/// `u` of a scenario whose forcing does not depend on `u`.
fn linear_u(cfg: &RunConfig, sc: &Scenario, stage: &str) -> Result<Option<Field>, CliError> {
    let core = |e: FhnError| CliError::from_core(stage, e);
    match &sc.forcing {
        Forcing::Linear(f) => solve_linear_with(&sc.params, &sc.init, &sc.bdry, f, &sc.grid, &solver_options(cfg))
            .map(Some)
            .map_err(core),
        Forcing::McKean { eta_bar } => mckean_linear_scenario(&sc.params, &sc.init, &sc.bdry, *eta_bar, &sc.grid)
            .map(Some)
            .map_err(core),
        _ => Ok(None),
    }
}

fn emit_field(out: &mut Outcome, field: &Field, path: PathBuf) -> Result<(), CliError> {
    write_field_csv(field, &path)?;
    out.files.push(path);
    Ok(())
}

fn run_solve_linear(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sc = resolve_scenario(cfg)?;
    let Some(u) = linear_u(cfg, &sc, "solve-linear")? else {
        return Err(CliError::config(format!(
            "solve-linear: scenario '{}' has {} forcing; use solve-fhn",
            sc.name,
            sc.forcing.name()
        )));
    };
    prepare_out(&cfg.out)?;
    let mut out = Outcome::default();
    emit_field(&mut out, &u, cfg.out.join("u.csv"))?;
    if let Some(err) = exact_error(&sc, &u) {
        out.stdout.push(format!("max_error_vs_exact,{}", fmt_f64(err)));
    }
    Ok(out)
}

fn emit_solution(out: &mut Outcome, cfg: &RunConfig, sol: &FhnSolution) -> Result<(), CliError> {
    emit_field(out, &sol.u, cfg.out.join("u.csv"))?;
    emit_field(out, &sol.v, cfg.out.join("v.csv"))?;
    let path = cfg.out.join("picard.json");
    write_json(&sol.report, &path)?;
    out.files.push(path);
    Ok(())
}

fn run_solve_fhn(cfg: &RunConfig) -> Result<Outcome, CliError> {
    const STAGE: &str = "solve-fhn";
    let sc = resolve_scenario(cfg)?;
    let p = &sc.params;
    let core = |e: FhnError| CliError::from_core(STAGE, e);
    prepare_out(&cfg.out)?;
    let mut out = Outcome::default();
    let sol = match &sc.forcing {
        Forcing::Cubic => {
            let opts = PicardOptions {
                picard_tol: cfg.tolerances.picard_tol,
                max_iter: cfg.tolerances.max_iter,
                solver: solver_options(cfg),
            };
            let solver = FhnSolver::new(p, &sc.init, &sc.bdry, &Kinetics::cubic(p.a), &sc.grid, &opts).map_err(core)?;
            match solver.solve() {
                Ok(sol) => sol,
                Err(FhnError::NotConverged { report }) => {
                    let path = cfg.out.join("picard.json");
                    write_json(&report, &path)?;
                    return Err(CliError::Numerical {
                        stage: STAGE.into(),
                        detail: format!(
                            "Picard iteration stopped after {} iterations with residual {:e} > picard_tol {:e}; report in {}",
                            report.iterations,
                            report.final_residual,
                            cfg.tolerances.picard_tol,
                            path.display()
                        ),
                    });
                }
                Err(e) => return Err(core(e)),
            }
        }
        Forcing::Josephson { gamma, .. } => {
            let fd = FdConfig::explicit(p, sc.grid.nx, sc.bdry.kind);
            fd_solve(p, &sc.init, &sc.bdry, &OracleSource::Josephson { gamma: *gamma }, &fd, sc.grid.nt).map_err(core)?
        }
        _ => {
            let u = linear_u(cfg, &sc, STAGE)?.expect("linear forcing");
            let v = recover_v(p, &u, &sc.init).map_err(core)?;
            FhnSolution {
                u,
                v,
                report: PicardReport {
                    iterations: 0,
                    residual_history: Vec::new(),
                    converged: true,
                    final_residual: 0.0,
                },
            }
        }
    };
    emit_solution(&mut out, cfg, &sol)?;
    out.stdout.push(format!(
        "iterations,{},final_residual,{}",
        sol.report.iterations,
        fmt_f64(sol.report.final_residual)
    ));
    Ok(out)
}

fn run_oracle(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sc = resolve_scenario(cfg)?;
    let (p, source) = match &sc.forcing {
        Forcing::Cubic => (sc.params, OracleSource::Kinetics(Kinetics::cubic(sc.params.a))),
        Forcing::Linear(f) => (sc.params, OracleSource::Linear(f.clone())),
        Forcing::McKean { eta_bar } => (
            mckean_params(&sc.params),
            OracleSource::Linear(SpaceTimeSource::constant(*eta_bar as f64)),
        ),
        Forcing::Josephson { gamma, .. } => (sc.params, OracleSource::Josephson { gamma: *gamma }),
    };
    let fd = FdConfig::explicit(&p, sc.grid.nx, sc.bdry.kind);
    let sol = fd_solve(&p, &sc.init, &sc.bdry, &source, &fd, sc.grid.nt).map_err(|e| CliError::from_core("oracle", e))?;
    prepare_out(&cfg.out)?;
    let mut out = Outcome::default();
    emit_field(&mut out, &sol.u, cfg.out.join("u.csv"))?;
    emit_field(&mut out, &sol.v, cfg.out.join("v.csv"))?;
    if let Some(err) = exact_error(&sc, &sol.u) {
        out.stdout.push(format!("max_error_vs_exact,{}", fmt_f64(err)));
    }
    Ok(out)
}

fn run_certify(cfg: &RunConfig, env: &RunEnv) -> Result<Outcome, CliError> {
    const STAGE: &str = "certify";
    let sc = resolve_scenario(cfg)?;
    let mut times: Vec<f64> = vec![0.0];
    times.extend(sc.grid.ts(&sc.params));
    if !sc.bdry.left.is_zero_on(&times) || !sc.bdry.right.is_zero_on(&times) {
        return Err(CliError::config(format!(
            "{STAGE}: scenario '{}' has nonzero boundary data; the bounds cover homogeneous boundaries only",
            sc.name
        )));
    }
    let forcing = match &sc.forcing {
        Forcing::Cubic => estimates::Forcing::Cubic,
        Forcing::Linear(f) => estimates::Forcing::Linear(f.clone()),
        other => {
            return Err(CliError::config(format!(
                "{STAGE}: {} forcing is not covered by the certified bounds",
                other.name()
            )))
        }
    };
    let scenario = CertScenario {
        name: sc.name.clone(),
        init: sc.init.clone(),
        bc: sc.bdry.kind,
        forcing,
        grid: sc.grid,
    };
    let param_sets = if cfg.certify.param_sets.is_empty() {
        vec![sc.params]
    } else {
        cfg.certify.param_sets.clone()
    };
    let opts = SuiteOptions {
        offgrid_points: cfg.certify.offgrid_points,
        kernel_times: cfg.certify.kernel_times,
        seed: cfg.seed,
        threads: env.threads,
    };
    prepare_out(&cfg.out)?;
    let path = cfg.out.join("certificates.json");
    let certs = run_certification_suite(&param_sets, &[scenario], Some(&path), &opts)
        .map_err(|e| CliError::from_core(STAGE, e))?;
    let failed: Vec<String> = certs
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{:?} (margin {:e}, slack {:e})", c.bound_id, c.margin, c.slack))
        .collect();
    let min_margin = certs.iter().map(|c| c.margin).fold(f64::INFINITY, f64::min);
    if !failed.is_empty() {
        return Err(CliError::Certification(format!(
            "{} of {} certificates failed: {}; report in {}",
            failed.len(),
            certs.len(),
            failed.join(", "),
            path.display()
        )));
    }
    Ok(Outcome {
        stdout: vec![format!("certificates,{},passed,{},min_margin,{}", certs.len(), certs.len(), fmt_f64(min_margin))],
        files: vec![path],
    })
}
