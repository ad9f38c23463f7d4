//! Data carried into and out of the solvers.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{FhnError, Result};
use crate::params::FhnParams;

/// A real function of one variable, given as a closure or as samples.
///
/// Sampled profiles are interpolated with piecewise-cubic Lagrange polynomials
/// on the four nearest nodes.
#[derive(Clone)]
pub enum Profile {
    Callable(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Sampled { nodes: Vec<f64>, values: Vec<f64> },
}

/// Boundary data are profiles in time.
pub type TimeSignal = Profile;

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Callable(_) => f.write_str("Profile::Callable"),
            Profile::Sampled { nodes, .. } => write!(f, "Profile::Sampled({} nodes)", nodes.len()),
        }
    }
}

impl Profile {
    pub fn zero() -> Self {
        Profile::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Profile::Callable(Arc::new(move |_| c))
    }

    pub fn from_fn<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        Profile::Callable(Arc::new(f))
    }

    pub fn sampled(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(FhnError::Shape(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        if nodes.len() < 2 {
            return Err(FhnError::Shape("a sampled profile needs at least 2 nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(FhnError::Shape("profile nodes must be strictly increasing".into()));
        }
        if let Some(v) = values.iter().chain(&nodes).find(|v| !v.is_finite()) {
            return Err(FhnError::Shape(format!("non-finite profile entry {v}")));
        }
        Ok(Profile::Sampled { nodes, values })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Profile::Callable(f) => f(x),
            Profile::Sampled { nodes, values } => cubic_lagrange(nodes, values, x),
        }
    }

    pub fn is_zero_on(&self, points: &[f64]) -> bool {
        points.iter().all(|&x| self.eval(x) == 0.0)
    }
}

/// Cubic Lagrange interpolation on the four nodes around `x` (clamped at the ends).
pub(crate) fn cubic_lagrange(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    if n < 4 {
        // linear fallback for tiny sample sets
        let j = match nodes.partition_point(|&v| v <= x) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let s = (x - nodes[j]) / (nodes[j + 1] - nodes[j]);
        return values[j] * (1.0 - s) + values[j + 1] * s;
    }
    let cell = nodes.partition_point(|&v| v <= x).clamp(1, n - 1) - 1;
    let start = cell.saturating_sub(1).min(n - 4);
    let xs = &nodes[start..start + 4];
    let ys = &values[start..start + 4];
    let mut acc = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if i != j {
                w *= (x - xs[j]) / (xs[i] - xs[j]);
            }
        }
        acc += w * ys[i];
    }
    acc
}

/// A real function of `(x, t)`.
#[derive(Clone)]
pub enum SpaceTimeSource {
    Zero,
    Callable(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for SpaceTimeSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceTimeSource::Zero => f.write_str("SpaceTimeSource::Zero"),
            SpaceTimeSource::Callable(_) => f.write_str("SpaceTimeSource::Callable"),
        }
    }
}

impl SpaceTimeSource {
    pub fn from_fn<F: Fn(f64, f64) -> f64 + Send + Sync + 'static>(f: F) -> Self {
        SpaceTimeSource::Callable(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        if c == 0.0 {
            SpaceTimeSource::Zero
        } else {
            SpaceTimeSource::from_fn(move |_, _| c)
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            SpaceTimeSource::Zero => 0.0,
            SpaceTimeSource::Callable(f) => f(x, t),
        }
    }
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub u0: Profile,
    pub v0: Profile,
}

impl InitialData {
    pub fn new(u0: Profile, v0: Profile) -> Self {
        InitialData { u0, v0 }
    }

    pub fn zero() -> Self {
        InitialData::new(Profile::zero(), Profile::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    Neumann,
    Dirichlet,
}

/// `u_x = left/right` at `x = 0/L` (Neumann) or `u = left/right` (Dirichlet).
#[derive(Debug, Clone)]
pub struct BoundaryData {
    pub kind: BoundaryKind,
    pub left: TimeSignal,
    pub right: TimeSignal,
}

impl BoundaryData {
    pub fn new(kind: BoundaryKind, left: TimeSignal, right: TimeSignal) -> Self {
        BoundaryData { kind, left, right }
    }

    pub fn homogeneous(kind: BoundaryKind) -> Self {
        BoundaryData::new(kind, Profile::zero(), Profile::zero())
    }

    pub(crate) fn require(&self, kind: BoundaryKind, op: &'static str) -> Result<()> {
        if self.kind != kind {
            return Err(FhnError::domain(
                op,
                format!("expected {kind:?} boundary data, got {:?}", self.kind),
            ));
        }
        Ok(())
    }
}

/// Uniform space-time grid `x_j = jL/nx` (`j = 0..=nx`), `t_n = nT/nt` (`n = 1..=nt`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub nx: usize,
    pub nt: usize,
}

impl GridSpec {
    pub fn new(nx: usize, nt: usize) -> Result<Self> {
        let g = GridSpec { nx, nt };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 4 {
            return Err(FhnError::Config(format!("grid nx must be >= 4, got {}", self.nx)));
        }
        if self.nt < 1 {
            return Err(FhnError::Config("grid nt must be >= 1".into()));
        }
        Ok(())
    }

    pub fn xs(&self, p: &FhnParams) -> Vec<f64> {
        let h = p.length / self.nx as f64;
        (0..=self.nx)
            .map(|j| if j == self.nx { p.length } else { j as f64 * h })
            .collect()
    }

    pub fn ts(&self, p: &FhnParams) -> Vec<f64> {
        let dt = p.horizon / self.nt as f64;
        (1..=self.nt)
            .map(|n| if n == self.nt { p.horizon } else { n as f64 * dt })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldMeta {
    pub params: FhnParams,
    pub description: String,
}

/// Samples of a scalar field; `values[n][j]` is the value at `(grid_x[j], grid_t[n])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    pub grid_x: Vec<f64>,
    pub grid_t: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub meta: FieldMeta,
}

impl Field {
    pub fn new(
        grid_x: Vec<f64>,
        grid_t: Vec<f64>,
        values: Vec<Vec<f64>>,
        meta: FieldMeta,
    ) -> Result<Self> {
        let f = Field {
            grid_x,
            grid_t,
            values,
            meta,
        };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        let increasing = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if self.grid_x.is_empty() || self.grid_t.is_empty() {
            return Err(FhnError::Shape("empty grid".into()));
        }
        if !increasing(&self.grid_x) || !increasing(&self.grid_t) {
            return Err(FhnError::Shape("grids must be strictly increasing".into()));
        }
        if self.values.len() != self.grid_t.len()
            || self.values.iter().any(|row| row.len() != self.grid_x.len())
        {
            return Err(FhnError::Shape(format!(
                "values do not match a {} x {} grid",
                self.grid_t.len(),
                self.grid_x.len()
            )));
        }
        for (n, row) in self.values.iter().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(FhnError::Shape(format!(
                    "non-finite value {} at x={}, t={}",
                    row[j], self.grid_x[j], self.grid_t[n]
                )));
            }
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .fold(0.0, |m: f64, v| m.max(v.abs()))
    }

    /// Max-norm distance; grids must coincide.
    pub fn max_diff(&self, other: &Field) -> Result<f64> {
        if self.grid_x.len() != other.grid_x.len() || self.grid_t.len() != other.grid_t.len() {
            return Err(FhnError::Shape("fields live on different grids".into()));
        }
        Ok(self
            .values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .fold(0.0, |m: f64, (a, b)| m.max((a - b).abs())))
    }

    /// Row index of the time closest to `t`.
    pub fn time_index(&self, t: f64) -> usize {
        let mut best = 0;
        for (n, &tn) in self.grid_t.iter().enumerate() {
            if (tn - t).abs() < (self.grid_t[best] - t).abs() {
                best = n;
            }
        }
        best
    }
}
