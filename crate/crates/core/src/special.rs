//! Bessel functions of the first kind, orders 0 and 1, for real arguments.
//!
//! Three branches cover the real line:
//! * `|z| <= 8`: power series (cancellation stays below ~1e-13 there),
//! * `8 < |z| <= 25`: trapezoid rule on Bessel's integral
//!   `J_n(z) = (1/2pi) * int_0^{2pi} cos(n t - z sin t) dt`, which converges
//!   geometrically for periodic integrands,
//! * `|z| > 25`: Hankel's large-argument expansion, truncated at its smallest term.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{FhnError, Result};

const SERIES_MAX: f64 = 8.0;
const ASYMPTOTIC_MIN: f64 = 25.0;
const TRAPEZOID_POINTS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BesselResult {
    pub value: f64,
    pub est_abs_error: f64,
}

pub fn bessel_j0(z: f64) -> Result<BesselResult> {
    if !z.is_finite() {
        return Err(FhnError::domain("bessel_j0", format!("non-finite argument {z}")));
    }
    let (j0, _, err) = j01_with_error(z.abs());
    Ok(BesselResult {
        value: j0,
        est_abs_error: err,
    })
}

pub fn bessel_j1(z: f64) -> Result<BesselResult> {
    if !z.is_finite() {
        return Err(FhnError::domain("bessel_j1", format!("non-finite argument {z}")));
    }
    let (_, j1, err) = j01_with_error(z.abs());
    Ok(BesselResult {
        value: if z < 0.0 { -j1 } else { j1 },
        est_abs_error: err,
    })
}

/// `(J0(z), J1(z))` for `z >= 0` without error bookkeeping. Hot path for kernel integrands.
#[inline]
pub(crate) fn j0_j1(z: f64) -> (f64, f64) {
    let (a, b, _) = j01_with_error(z);
    (a, b)
}

/// `(J0(z), J1(z)/z)` for `z >= 0`; the second entry tends to 1/2 at the origin.
#[inline]
pub(crate) fn j0_j1_over_z(z: f64) -> (f64, f64) {
    if z <= SERIES_MAX {
        let (j0, j1c, _) = series(z);
        (j0, j1c)
    } else {
        let (j0, j1) = j0_j1(z);
        (j0, j1 / z)
    }
}

fn j01_with_error(z: f64) -> (f64, f64, f64) {
    debug_assert!(z >= 0.0);
    if z <= SERIES_MAX {
        let (j0, j1c, err) = series(z);
        (j0, j1c * z, err)
    } else if z <= ASYMPTOTIC_MIN {
        trapezoid(z)
    } else {
        hankel(z)
    }
}

/// Returns `(J0, J1/z, error estimate)`.
fn series(z: f64) -> (f64, f64, f64) {
    let q = 0.25 * z * z;
    // J0 terms: (-q)^k / (k!)^2 ; J1/z terms: 0.5 (-q)^k / (k! (k+1)!)
    let mut t0 = 1.0;
    let mut t1 = 0.5;
    let mut s0 = 1.0;
    let mut s1 = 0.5;
    let mut abs0 = 1.0;
    let mut abs1 = 0.5;
    let mut k = 0.0;
    loop {
        k += 1.0;
        t0 *= -q / (k * k);
        t1 *= -q / (k * (k + 1.0));
        s0 += t0;
        s1 += t1;
        abs0 += t0.abs();
        abs1 += t1.abs();
        if t0.abs() < 1e-18 * abs0.max(1.0) && t1.abs() < 1e-18 * abs1.max(1.0) {
            break;
        }
    }
    let err = 4.0 * f64::EPSILON * abs0.max(abs1 * z.max(1.0));
    (s0, s1, err)
}

fn trapezoid(z: f64) -> (f64, f64, f64) {
    let m = TRAPEZOID_POINTS;
    let dt = 2.0 * PI / m as f64;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    for j in 0..m {
        let t = j as f64 * dt;
        let zs = z * t.sin();
        s0 += zs.cos();
        s1 += (t - zs).cos();
    }
    let n = m as f64;
    (s0 / n, s1 / n, 2.0 * n * f64::EPSILON)
}

fn hankel(z: f64) -> (f64, f64, f64) {
    let (p0, q0, e0) = hankel_pq(0.0, z);
    let (p1, q1, e1) = hankel_pq(1.0, z);
    let amp = (2.0 / (PI * z)).sqrt();
    let chi0 = z - 0.25 * PI;
    let chi1 = z - 0.75 * PI;
    let j0 = amp * (p0 * chi0.cos() - q0 * chi0.sin());
    let j1 = amp * (p1 * chi1.cos() - q1 * chi1.sin());
    (j0, j1, amp * (e0.max(e1)) + 4.0 * f64::EPSILON)
}

/// Hankel's P and Q series for order `nu`, with the magnitude of the first omitted term.
fn hankel_pq(nu: f64, z: f64) -> (f64, f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        term *= (mu - odd * odd) / (kf * 8.0 * z);
        let mag = term.abs();
        if mag > last || mag < 1e-18 {
            return (p, q, mag.min(last));
        }
        last = mag;
        // even k enters P with sign (-1)^(k/2); odd k enters Q with sign (-1)^((k-1)/2)
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
    }
    (p, q, last)
}
