//! Discrete solution operators on a uniform grid.
//!
//! Spatial data are interpolated piecewise-cubically in `xi`, space-time data
//! piecewise-linearly in `tau`. Every kernel integral then reduces to cell
//! moments `int_0^h theta(kh - u) (u/h)^p du`, assembled from the Gaussian
//! mixture of the kernel with periodic folding of the image sum. Time
//! integrals use the lag structure `t_n - tau in [m dt, (m+1) dt]`, so one
//! operator per lag serves every output time.

use crate::error::Result;
use crate::field::BoundaryKind;
use crate::kernel::{gauss_cell_moments, KernelKind, KernelMixture};
use crate::params::FhnParams;
use crate::quadrature::gauss_legendre;

const CUTOFF_WIDTHS: f64 = 6.4;
const TIME_ORDER: usize = 8;

/// Dense square matrix, row-major.
#[derive(Debug, Clone)]
pub(crate) struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    fn zeros(n: usize) -> Self {
        Mat {
            n,
            data: vec![0.0; n * n],
        }
    }

    fn axpy(&mut self, alpha: f64, other: &Mat) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
    }

    fn mul_add(&self, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    #[cfg(test)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Subdivision of the graded panels of the kernel mixtures.
    pub refine: usize,
    /// Gauss-Legendre order per lag interval in time.
    pub time_order: usize,
    /// Nominal accuracy of the discrete operators. It is not enforced
    /// adaptively: the grid must be fine enough for the data at hand.
    pub quad_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            refine: 1,
            time_order: TIME_ORDER,
            quad_tol: 1e-6,
        }
    }
}

/// Per-kernel tables at one time `s`, indexed by residues modulo `2 nx`.
struct Tables {
    /// Cell moments `T_p(r)`.
    moments: [Vec<[f64; 4]>; 3],
    /// `theta(r h)` and `theta'(r h)`.
    points: [Vec<f64>; 3],
    slopes: [Vec<f64>; 3],
}

/// Cubic Lagrange coefficients of each cell in powers of `(xi - x_c)/h`.
#[derive(Debug, Clone)]
struct CellInterp {
    start: usize,
    coef: [[f64; 4]; 4],
}

fn cell_interpolants(nx: usize) -> Vec<CellInterp> {
    (0..nx)
        .map(|c| {
            let start = c.saturating_sub(1).min(nx - 3);
            // node offsets relative to x_c, in cells
            let offs: [f64; 4] = std::array::from_fn(|k| (start + k) as f64 - c as f64);
            let mut coef = [[0.0; 4]; 4];
            for k in 0..4 {
                // basis l_k(s) = prod_{j != k} (s - o_j)/(o_k - o_j), expanded in s
                let mut poly = [1.0, 0.0, 0.0, 0.0];
                let mut denom = 1.0;
                for j in 0..4 {
                    if j == k {
                        continue;
                    }
                    let mut next = [0.0; 4];
                    for d in 0..3 {
                        next[d + 1] += poly[d];
                        next[d] -= offs[j] * poly[d];
                    }
                    poly = next;
                    denom *= offs[k] - offs[j];
                }
                for p in 0..4 {
                    coef[p][k] = poly[p] / denom;
                }
            }
            CellInterp { start, coef }
        })
        .collect()
}

/// Calls `f(j, heat(d, j h - offset))` for `|j h - offset| <= cutoff`, using a
/// multiplicative recurrence outward from the peak.
fn lattice_heat<F: FnMut(i64, f64)>(d: f64, offset: f64, h: f64, cutoff: f64, mut f: F) {
    let norm = 1.0 / (4.0 * std::f64::consts::PI * d).sqrt();
    let c = (-h * h / (2.0 * d)).exp();
    let j0 = (offset / h).round() as i64;
    let jlo = ((offset - cutoff) / h).floor() as i64;
    let jhi = ((offset + cutoff) / h).ceil() as i64;
    let z0 = j0 as f64 * h - offset;
    let g0 = norm * (-z0 * z0 / (4.0 * d)).exp();
    f(j0, g0);
    let mut g = g0;
    let mut r = (-(2.0 * z0 * h + h * h) / (4.0 * d)).exp();
    for j in j0 + 1..=jhi {
        g *= r;
        r *= c;
        f(j, g);
    }
    let mut g = g0;
    let mut r = ((2.0 * z0 * h - h * h) / (4.0 * d)).exp();
    let mut j = j0 - 1;
    while j >= jlo {
        g *= r;
        r *= c;
        f(j, g);
        j -= 1;
    }
}

/// Discrete operators for one problem: grid, boundary type and kernels.
#[derive(Debug, Clone)]
pub(crate) struct Propagator {
    pub params: FhnParams,
    pub nx: usize,
    pub nt: usize,
    pub h: f64,
    pub dt: f64,
    pub bc: BoundaryKind,
    kinds: [bool; 3],
    interp: Vec<CellInterp>,
    /// `lag[k][j]`: weight of `phi_{n-j}` in the source at `t_n`, `j = 0..nt`;
    /// `tail[k][m]` is the extra weight of `phi_0` at `n = m + 1`.
    lag: [Vec<Mat>; 3],
    tail: [Vec<Mat>; 3],
    /// `S_k(t_n)` for `n = 1..=nt`.
    init: [Vec<Mat>; 3],
    /// Boundary weights per lag on the grid nodes: value or slope of theta.
    bw_p: [Vec<Vec<f64>>; 3],
    bw_q: [Vec<Vec<f64>>; 3],
}

impl Propagator {
    pub fn new(
        p: &FhnParams,
        nx: usize,
        nt: usize,
        bc: BoundaryKind,
        kinds: &[KernelKind],
        opts: &SolverOptions,
    ) -> Result<Self> {
        p.validate()?;
        p.require_kernel_regime("propagator")?;
        let h = p.length / nx as f64;
        let dt = p.horizon / nt as f64;
        let mut flags = [false; 3];
        for k in kinds {
            flags[k.index()] = true;
        }
        let mut prop = Propagator {
            params: *p,
            nx,
            nt,
            h,
            dt,
            bc,
            kinds: flags,
            interp: cell_interpolants(nx),
            lag: Default::default(),
            tail: Default::default(),
            init: Default::default(),
            bw_p: Default::default(),
            bw_q: Default::default(),
        };
        prop.build(opts);
        Ok(prop)
    }

    fn size(&self) -> usize {
        self.nx + 1
    }

    fn tables_at(&self, s: f64, refine: usize) -> Tables {
        let nx = self.nx;
        let period = 2 * nx;
        let h = self.h;
        let mix = KernelMixture::new(&self.params, s, h, refine);
        let mut t = Tables {
            moments: std::array::from_fn(|_| vec![[0.0; 4]; period]),
            points: std::array::from_fn(|_| vec![0.0; period]),
            slopes: std::array::from_fn(|_| vec![0.0; period]),
        };
        let fold = |j: i64| j.rem_euclid(period as i64) as usize;
        let rule = gauss_legendre(8);
        let nodes: Vec<(f64, f64)> = rule.mapped(0.0, h).collect();

        let mut visit = |d: f64, w: [f64; 3]| {
            let active: Vec<usize> = (0..3).filter(|&k| self.kinds[k] && w[k] != 0.0).collect();
            if active.is_empty() {
                return;
            }
            let cutoff = CUTOFF_WIDTHS * (4.0 * d).sqrt() + h;
            if d.sqrt() >= 0.5 * h {
                for &(u, wq) in &nodes {
                    let s1 = u / h;
                    let pw = [wq, wq * s1, wq * s1 * s1, wq * s1 * s1 * s1];
                    lattice_heat(d, u, h, cutoff, |j, g| {
                        let r = fold(j);
                        for &k in &active {
                            let m = &mut t.moments[k][r];
                            let gw = g * w[k];
                            for p in 0..4 {
                                m[p] += gw * pw[p];
                            }
                        }
                    });
                }
            } else {
                let jr = (cutoff / h).ceil() as i64 + 1;
                for j in -jr..=jr {
                    let m = gauss_cell_moments(d, j as f64 * h, h);
                    if m[0] == 0.0 && m[3] == 0.0 {
                        continue;
                    }
                    let r = fold(j);
                    for &k in &active {
                        let acc = &mut t.moments[k][r];
                        for p in 0..4 {
                            acc[p] += w[k] * m[p];
                        }
                    }
                }
            }
            lattice_heat(d, 0.0, h, cutoff, |j, g| {
                let r = fold(j);
                let z = j as f64 * h;
                for &k in &active {
                    t.points[k][r] += w[k] * g;
                    t.slopes[k][r] -= w[k] * g * z / (2.0 * d);
                }
            });
        };
        for q in 0..mix.d.len() {
            if mix.d[q] > 0.0 {
                visit(mix.d[q], [mix.w[0][q], mix.w[1][q], mix.w[2][q]]);
            }
        }
        visit(mix.atom_d, [mix.atom, 0.0, 0.0]);
        t
    }

    /// Spatial operator `f -> int_0^L G(x_i, xi) f(xi) dxi` from cell moments.
    fn operator(&self, moments: &[[f64; 4]]) -> Mat {
        let nx = self.nx;
        let period = 2 * nx as i64;
        let n = self.size();
        let sign = match self.bc {
            BoundaryKind::Neumann => 1.0,
            BoundaryKind::Dirichlet => -1.0,
        };
        let mut m = Mat::zeros(n);
        for i in 0..n {
            let row = &mut m.data[i * n..(i + 1) * n];
            for (c, cell) in self.interp.iter().enumerate() {
                let near = &moments[(i as i64 - c as i64).rem_euclid(period) as usize];
                let far = &moments[(-(i as i64 + c as i64)).rem_euclid(period) as usize];
                for p in 0..4 {
                    let tp = near[p] + sign * far[p];
                    for k in 0..4 {
                        row[cell.start + k] += cell.coef[p][k] * tp;
                    }
                }
            }
        }
        m
    }

    fn build(&mut self, opts: &SolverOptions) {
        let n = self.size();
        let nt = self.nt;
        let dt = self.dt;
        let boundary_slopes = self.bc == BoundaryKind::Dirichlet;
        let mut p_lag: [Vec<Mat>; 3] = Default::default();
        let mut q_lag: [Vec<Mat>; 3] = Default::default();
        for k in 0..3 {
            if self.kinds[k] {
                p_lag[k] = (0..nt).map(|_| Mat::zeros(n)).collect();
                q_lag[k] = (0..nt).map(|_| Mat::zeros(n)).collect();
                self.bw_p[k] = vec![vec![0.0; n]; nt];
                self.bw_q[k] = vec![vec![0.0; n]; nt];
            }
        }

        // (lag, s, weight, hat weight of the earlier sample)
        let mut nodes: Vec<(usize, f64, f64, f64)> = Vec::new();
        let w_min = {
            let scale = 0.2 * self.h / (self.params.eps * dt).sqrt();
            scale.clamp(1e-4, 1.0 / 32.0)
        };
        let mut edges = vec![0.0];
        let mut e = w_min;
        while e < 0.5 {
            edges.push(e);
            e *= 2.0;
        }
        edges.push(0.5);
        edges.push(1.0);
        let rule = gauss_legendre(8);
        for win in edges.windows(2) {
            for (w, ww) in rule.mapped(win[0], win[1]) {
                // s = dt w^2
                nodes.push((0, dt * w * w, 2.0 * dt * w * ww, w * w));
            }
        }
        let trule = gauss_legendre(opts.time_order);
        for m in 1..nt {
            let lo = m as f64 * dt;
            for (s, ws) in trule.mapped(lo, lo + dt) {
                nodes.push((m, s, ws, (s - lo) / dt));
            }
        }

        for &(m, s, weight, hat) in &nodes {
            let tables = self.tables_at(s, opts.refine);
            for k in 0..3 {
                if !self.kinds[k] {
                    continue;
                }
                let op = self.operator(&tables.moments[k]);
                p_lag[k][m].axpy(weight * hat, &op);
                q_lag[k][m].axpy(weight * (1.0 - hat), &op);
                let src = if boundary_slopes {
                    &tables.slopes[k]
                } else {
                    &tables.points[k]
                };
                for i in 0..n {
                    self.bw_p[k][m][i] += weight * hat * src[i];
                    self.bw_q[k][m][i] += weight * (1.0 - hat) * src[i];
                }
            }
        }

        for k in 0..3 {
            if !self.kinds[k] {
                continue;
            }
            // W_0 = Q_0, W_j = P_{j-1} + Q_j; P_{n-1} multiplies phi_0 separately
            let mut lag = Vec::with_capacity(nt);
            for j in 0..nt {
                let mut w = q_lag[k][j].clone();
                if j > 0 {
                    w.axpy(1.0, &p_lag[k][j - 1]);
                }
                lag.push(w);
            }
            self.lag[k] = lag;
            self.tail[k] = std::mem::take(&mut p_lag[k]);
        }

        let times: Vec<f64> = (1..=nt).map(|n| n as f64 * dt).collect();
        for &t in &times {
            let tables = self.tables_at(t, opts.refine);
            for k in 0..3 {
                if self.kinds[k] {
                    self.init[k].push(self.operator(&tables.moments[k]));
                }
            }
        }
    }

    /// `int_0^L G_k(x_i, xi, t_n) f(xi) dxi` for `n = 1..=nt`.
    pub fn initial(&self, kind: KernelKind, f: &[f64]) -> Vec<Vec<f64>> {
        let k = kind.index();
        assert!(self.kinds[k], "kernel not prepared");
        self.init[k]
            .iter()
            .map(|m| {
                let mut out = vec![0.0; self.size()];
                m.mul_add(f, &mut out);
                out
            })
            .collect()
    }

    /// `int_0^{t_n} int_0^L G_k(x_i, xi, t_n - tau) phi(xi, tau)` with `phi[k]`
    /// the samples at `tau_k`, `k = 0..=nt`.
    pub fn source(&self, kind: KernelKind, phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let k = kind.index();
        assert!(self.kinds[k], "kernel not prepared");
        assert_eq!(phi.len(), self.nt + 1);
        (1..=self.nt)
            .map(|n| {
                let mut out = vec![0.0; self.size()];
                for j in 0..n {
                    self.lag[k][j].mul_add(&phi[n - j], &mut out);
                }
                self.tail[k][n - 1].mul_add(&phi[0], &mut out);
                out
            })
            .collect()
    }

    /// Boundary convolutions; `left`/`right` are the signals at `tau_k`, `k = 0..=nt`.
    ///
    /// Neumann: `-2 eps int theta(x, t-tau) psi1 + 2 eps int theta(L-x, t-tau) psi2`.
    /// Dirichlet: `-2 eps int theta'(x, t-tau) g1 - 2 eps int theta'(L-x, t-tau) g2`.
    pub fn boundary(&self, kind: KernelKind, left: &[f64], right: &[f64]) -> Vec<Vec<f64>> {
        let k = kind.index();
        assert!(self.kinds[k], "kernel not prepared");
        let nx = self.nx;
        let eps2 = 2.0 * self.params.eps;
        let right_sign = match self.bc {
            BoundaryKind::Neumann => 1.0,
            BoundaryKind::Dirichlet => -1.0,
        };
        (1..=self.nt)
            .map(|n| {
                (0..=nx)
                    .map(|i| {
                        let mut acc = 0.0;
                        for m in 0..n {
                            let (pl, ql) = (self.bw_p[k][m][i], self.bw_q[k][m][i]);
                            let (pr, qr) = (self.bw_p[k][m][nx - i], self.bw_q[k][m][nx - i]);
                            acc -= eps2 * (pl * left[n - m - 1] + ql * left[n - m]);
                            acc += right_sign * eps2 * (pr * right[n - m - 1] + qr * right[n - m]);
                        }
                        acc
                    })
                    .collect()
            })
            .collect()
    }

    #[cfg(test)]
    pub fn init_matrix(&self, kind: KernelKind, n: usize) -> &Mat {
        &self.init[kind.index()][n]
    }
}
