//! TOML run configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fhn_core::field::{BoundaryKind, GridSpec, Profile};
use fhn_core::FhnParams;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Kernel,
    SolveLinear,
    SolveFhn,
    Oracle,
    Certify,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Kernel, Mode::SolveLinear, Mode::SolveFhn, Mode::Oracle, Mode::Certify];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Kernel => "kernel",
            Mode::SolveLinear => "solve-linear",
            Mode::SolveFhn => "solve-fhn",
            Mode::Oracle => "oracle",
            Mode::Certify => "certify",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL.into_iter().find(|m| m.as_str() == s).ok_or_else(|| {
            let names: Vec<_> = Mode::ALL.iter().map(|m| m.as_str()).collect();
            format!("unknown mode '{s}', expected one of {}", names.join(", "))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nx: usize,
    pub nt: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Kernel and theta evaluation.
    pub kernel_tol: f64,
    pub picard_tol: f64,
    pub max_iter: usize,
    /// Time-quadrature tolerance of the grid propagator.
    pub quad_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            kernel_tol: 1e-10,
            picard_tol: 1e-8,
            max_iter: 50,
            quad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelQuantity {
    K0,
    K0X,
    K1,
    K2,
    Theta0,
    Theta1,
    Theta2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelQuery {
    pub kind: KernelQuantity,
    pub x: f64,
    pub t: f64,
}

impl Default for KernelQuery {
    fn default() -> Self {
        KernelQuery {
            kind: KernelQuantity::K0,
            x: 0.5,
            t: 0.5,
        }
    }
}

/// A number, an inline table of samples, or a two-column CSV file `x,value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Constant(f64),
    Table { nodes: Vec<f64>, values: Vec<f64> },
    File { file: PathBuf },
}

impl Default for ProfileSpec {
    fn default() -> Self {
        ProfileSpec::Constant(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InlineForcing {
    #[default]
    Cubic,
    Zero,
    /// Constant source `source`.
    Linear,
    Mckean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InlineScenario {
    pub boundary: BoundaryKind,
    pub forcing: InlineForcing,
    pub source: f64,
    pub eta_bar: u8,
    pub u0: ProfileSpec,
    pub v0: ProfileSpec,
    /// Boundary values (Dirichlet) or fluxes (Neumann), constant in time.
    pub left: f64,
    pub right: f64,
}

impl Default for InlineScenario {
    fn default() -> Self {
        InlineScenario {
            boundary: BoundaryKind::Neumann,
            forcing: InlineForcing::Cubic,
            source: 0.0,
            eta_bar: 1,
            u0: ProfileSpec::default(),
            v0: ProfileSpec::default(),
            left: 0.0,
            right: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifyConfig {
    /// Empty means the run's own parameters.
    pub param_sets: Vec<FhnParams>,
    pub offgrid_points: usize,
    pub kernel_times: usize,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            param_sets: Vec::new(),
            offgrid_points: 100,
            kernel_times: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    /// Name of a shipped preset; mutually exclusive with `[inline]`.
    pub scenario: Option<String>,
    pub out: PathBuf,
    pub seed: u64,
    /// Overrides the preset parameters when given.
    pub params: Option<FhnParams>,
    pub grid: Option<GridConfig>,
    pub tolerances: Tolerances,
    pub kernel: KernelQuery,
    pub inline: Option<InlineScenario>,
    pub certify: CertifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Kernel,
            scenario: None,
            out: PathBuf::from("out"),
            seed: 0,
            params: None,
            grid: None,
            tolerances: Tolerances::default(),
            kernel: KernelQuery::default(),
            inline: None,
            certify: CertifyConfig::default(),
        }
    }
}

impl RunConfig {
    /// Constraint checks that do not need the preset tables.
    pub fn validate(&self) -> Result<(), CliError> {
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.kernel_tol", t.kernel_tol),
            ("tolerances.picard_tol", t.picard_tol),
            ("tolerances.quad_tol", t.quad_tol),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config(format!("{name} must be positive, got {v}")));
            }
        }
        if t.max_iter == 0 {
            return Err(CliError::config("tolerances.max_iter must be at least 1"));
        }
        if let Some(p) = &self.params {
            p.validate().map_err(|e| CliError::config(format!("params: {e}")))?;
        }
        for (i, p) in self.certify.param_sets.iter().enumerate() {
            p.validate().map_err(|e| CliError::config(format!("certify.param_sets[{i}]: {e}")))?;
        }
        if let Some(g) = self.grid {
            GridSpec::new(g.nx, g.nt).map_err(|e| CliError::config(format!("grid: {e}")))?;
        }
        if self.scenario.is_some() && self.inline.is_some() {
            return Err(CliError::config("give either `scenario` or an [inline] table, not both"));
        }
        if let Some(name) = &self.scenario {
            fhn_core::scenarios::preset(name).map_err(|e| CliError::config(format!("scenario: {e}")))?;
        }
        if let Some(inl) = &self.inline {
            if inl.eta_bar > 1 {
                return Err(CliError::config(format!("inline.eta_bar must be 0 or 1, got {}", inl.eta_bar)));
            }
            for (name, v) in [("inline.source", inl.source), ("inline.left", inl.left), ("inline.right", inl.right)] {
                if !v.is_finite() {
                    return Err(CliError::config(format!("{name} must be finite, got {v}")));
                }
            }
            for (name, spec) in [("inline.u0", &inl.u0), ("inline.v0", &inl.v0)] {
                match spec {
                    ProfileSpec::File { file } if !file.exists() => {
                        return Err(CliError::MissingFile(format!("{name}: {} does not exist", file.display())))
                    }
                    ProfileSpec::Table { .. } => {
                        build_profile(spec, name)?;
                    }
                    _ => {}
                }
            }
        }
        let k = &self.kernel;
        if !(k.t > 0.0 && k.t.is_finite()) || !k.x.is_finite() {
            return Err(CliError::config(format!("kernel.t must be positive and kernel.x finite, got x={}, t={}", k.x, k.t)));
        }
        if self.certify.offgrid_points == 0 && self.certify.kernel_times == 0 {
            return Err(CliError::config("certify needs offgrid_points or kernel_times"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("RunConfig always serializes")
    }
}

/// Parses and validates config text. Relative `file` paths are resolved against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<RunConfig, CliError> {
    // a document that is not TOML at all gets the syntax exit code; schema
    // problems (unknown keys, wrong types) are configuration errors
    if let Err(e) = text.parse::<toml::Table>() {
        return Err(CliError::Syntax(e.to_string().trim_end().to_string()));
    }
    let mut cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string().trim_end().to_string()))?;
    if let Some(inl) = cfg.inline.as_mut() {
        for spec in [&mut inl.u0, &mut inl.v0] {
            if let ProfileSpec::File { file } = spec {
                if file.is_relative() {
                    *file = base.join(&*file);
                }
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::MissingFile(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new("."))).map_err(|e| e.context(&path.display().to_string()))
}

pub fn build_profile(spec: &ProfileSpec, name: &str) -> Result<Profile, CliError> {
    match spec {
        ProfileSpec::Constant(c) => {
            if !c.is_finite() {
                return Err(CliError::config(format!("{name} must be finite, got {c}")));
            }
            Ok(Profile::constant(*c))
        }
        ProfileSpec::Table { nodes, values } => Profile::sampled(nodes.clone(), values.clone())
            .map_err(|e| CliError::config(format!("{name}: {e}"))),
        ProfileSpec::File { file } => {
            let (nodes, values) = crate::csv::read_profile_csv(file)?;
            Profile::sampled(nodes, values).map_err(|e| CliError::config(format!("{name} ({}): {e}", file.display())))
        }
    }
}
