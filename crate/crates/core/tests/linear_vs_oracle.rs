use fhn_core::field::{BoundaryData, BoundaryKind, GridSpec, InitialData, Profile, SpaceTimeSource};
use fhn_core::linear::{solve_linear_dirichlet, solve_linear_neumann};
use fhn_core::oracle::{fd_solve, FdConfig, OracleSource};
use fhn_core::FhnParams;

fn compare(p: &FhnParams, init: &InitialData, bd: &BoundaryData, f: SpaceTimeSource, nx: usize, nt: usize) -> f64 {
    let grid = GridSpec::new(nx, nt).unwrap();
    let u = match bd.kind {
        BoundaryKind::Neumann => solve_linear_neumann(p, init, bd, &f, &grid).unwrap(),
        BoundaryKind::Dirichlet => solve_linear_dirichlet(p, init, bd, &f, &grid).unwrap(),
    };
    let cfg = FdConfig::explicit(p, 4 * nx, bd.kind);
    let fd = fd_solve(p, init, bd, &OracleSource::Linear(f), &cfg, nt).unwrap();
    let mut err: f64 = 0.0;
    for (n, row) in u.values.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            err = err.max((v - fd.u.values[n][4 * j]).abs());
        }
    }
    err
}

#[test]
fn dirichlet_parabola_with_unit_source() {
    let p = FhnParams::unit();
    let init = InitialData::new(Profile::from_fn(|x| x * (1.0 - x)), Profile::zero());
    let bd = BoundaryData::homogeneous(BoundaryKind::Dirichlet);
    let err = compare(&p, &init, &bd, SpaceTimeSource::constant(1.0), 32, 20);
    assert!(err < 5e-4, "{err}");
}

#[test]
fn dirichlet_inhomogeneous_boundary() {
    let p = FhnParams::new(0.5, 0.8, 0.6, 1.2, 1.0, 1.0).unwrap();
    let init = InitialData::new(Profile::from_fn(|x| 0.2 + 0.3 * x), Profile::zero());
    let bd = BoundaryData::new(
        BoundaryKind::Dirichlet,
        Profile::from_fn(|t| 0.2 + 0.5 * t),
        Profile::from_fn(|t| 0.5 - 0.2 * t * t),
    );
    let err = compare(&p, &init, &bd, SpaceTimeSource::Zero, 32, 40);
    assert!(err < 5e-4, "{err}");
}

#[test]
fn neumann_inhomogeneous_flux() {
    let p = FhnParams::new(0.5, 0.8, 0.6, 1.2, 1.0, 1.0).unwrap();
    let init = InitialData::new(Profile::from_fn(|x| 0.1 * x * x), Profile::zero());
    let bd = BoundaryData::new(
        BoundaryKind::Neumann,
        Profile::from_fn(|t| 0.3 * t),
        Profile::from_fn(|t| 0.2 + 0.1 * t),
    );
    let err = compare(&p, &init, &bd, SpaceTimeSource::from_fn(|x, t| x * t), 32, 40);
    assert!(err < 5e-4, "{err}");
}

#[test]
fn dirichlet_constant_state_is_preserved() {
    // a = b = 0: u = c with g1 = g2 = c is an exact solution
    let p = FhnParams::new(0.7, 0.0, 0.0, 1.0, 1.0, 1.0).unwrap();
    let c = 0.4;
    let init = InitialData::new(Profile::constant(c), Profile::zero());
    let bd = BoundaryData::new(BoundaryKind::Dirichlet, Profile::constant(c), Profile::constant(c));
    let u = solve_linear_dirichlet(&p, &init, &bd, &SpaceTimeSource::Zero, &GridSpec::new(16, 10).unwrap()).unwrap();
    let err = u.values.iter().flatten().fold(0.0f64, |m, v| m.max((v - c).abs()));
    assert!(err < 1e-6, "{err}");
    assert!(compare(&p, &init, &bd, SpaceTimeSource::Zero, 16, 10) < 1e-6);
}
