//! Named scenarios shipped with the crate.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{FhnError, Result};
use crate::field::{BoundaryData, BoundaryKind, GridSpec, InitialData, Profile, SpaceTimeSource};
use crate::nonlinear::{josephson_params, Kinetics};
use crate::params::FhnParams;

pub const PRESETS: [&str; 5] = [
    "cubic-bump-neumann",
    "cubic-bump-dirichlet",
    "mckean-step",
    "josephson-line",
    "heat-sanity",
];

#[derive(Clone)]
pub enum Forcing {
    Linear(SpaceTimeSource),
    Cubic,
    /// Step kinetics `eta_bar H(u - a)` with the linear part `-u` folded into `a`.
    McKean { eta_bar: u8 },
    /// Memory source of the sine-Gordon junction model, solved by finite differences.
    Josephson { alpha: f64, gamma: f64 },
}

impl Forcing {
    pub fn name(&self) -> &'static str {
        match self {
            Forcing::Linear(_) => "linear",
            Forcing::Cubic => "cubic",
            Forcing::McKean { .. } => "mckean",
            Forcing::Josephson { .. } => "josephson",
        }
    }

    pub fn kinetics(&self, p: &FhnParams) -> Option<Kinetics> {
        match self {
            Forcing::Cubic => Some(Kinetics::cubic(p.a)),
            _ => None,
        }
    }
}

pub type ExactSolution = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct Scenario {
    pub name: String,
    pub params: FhnParams,
    pub init: InitialData,
    pub bdry: BoundaryData,
    pub forcing: Forcing,
    pub grid: GridSpec,
    /// Closed-form `u`, when known.
    pub exact: Option<ExactSolution>,
}

pub fn preset(name: &str) -> Result<Scenario> {
    let grid = GridSpec::new(32, 40)?;
    let sc = match name {
        "cubic-bump-neumann" => Scenario {
            name: name.into(),
            params: FhnParams::new(0.5, 0.5, 0.8, 1.0, 1.0, 1.0)?,
            init: InitialData::new(
                Profile::from_fn(|x| 0.3 * (-40.0 * (x - 0.4) * (x - 0.4)).exp()),
                Profile::constant(0.05),
            ),
            bdry: BoundaryData::homogeneous(BoundaryKind::Neumann),
            forcing: Forcing::Cubic,
            grid,
            exact: None,
        },
        "cubic-bump-dirichlet" => Scenario {
            name: name.into(),
            params: FhnParams::new(0.5, 0.5, 0.8, 1.0, 1.0, 1.0)?,
            init: InitialData::new(Profile::from_fn(|x| 0.3 * (PI * x).sin()), Profile::zero()),
            bdry: BoundaryData::homogeneous(BoundaryKind::Dirichlet),
            forcing: Forcing::Cubic,
            grid,
            exact: None,
        },
        "mckean-step" => Scenario {
            name: name.into(),
            params: FhnParams::new(0.5, 0.25, 0.5, 1.0, 1.0, 1.0)?,
            init: InitialData::new(Profile::from_fn(|x| 0.1 + 0.3 * (PI * x).cos()), Profile::zero()),
            bdry: BoundaryData::homogeneous(BoundaryKind::Neumann),
            forcing: Forcing::McKean { eta_bar: 1 },
            grid,
            exact: None,
        },
        "josephson-line" => {
            let (alpha, eps) = (0.5, 1.0);
            let jp = josephson_params(alpha, eps)?;
            Scenario {
                name: name.into(),
                params: jp.into_params(eps, 4.0, 2.0)?,
                init: InitialData::new(Profile::from_fn(|x| 4.0 * (x - 2.0).exp().atan()), Profile::zero()),
                bdry: BoundaryData::homogeneous(BoundaryKind::Neumann),
                forcing: Forcing::Josephson { alpha, gamma: 0.1 },
                grid: GridSpec::new(64, 40)?,
                exact: None,
            }
        }
        "heat-sanity" => {
            let p = FhnParams::new(1.0, 0.0, 0.0, 1.0, 1.0, 0.2)?;
            Scenario {
                name: name.into(),
                params: p,
                init: InitialData::new(Profile::from_fn(|x| (PI * x).cos()), Profile::zero()),
                bdry: BoundaryData::homogeneous(BoundaryKind::Neumann),
                forcing: Forcing::Linear(SpaceTimeSource::Zero),
                grid: GridSpec::new(32, 20)?,
                exact: Some(Arc::new(move |x, t| (-PI * PI * p.eps * t).exp() * (PI * x).cos())),
            }
        }
        _ => {
            return Err(FhnError::Config(format!(
                "unknown preset '{name}', expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(sc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds() {
        for name in PRESETS {
            let sc = preset(name).unwrap();
            assert_eq!(sc.name, name);
            sc.params.validate().unwrap();
            sc.grid.validate().unwrap();
        }
    }

    #[test]
    fn unknown_preset_lists_choices() {
        let err = preset("nope").err().unwrap().to_string();
        assert!(err.contains("heat-sanity"), "{err}");
    }

    #[test]
    fn josephson_preset_is_outside_the_estimate_regime() {
        assert!(!preset("josephson-line").unwrap().params.estimates_valid());
    }
}
