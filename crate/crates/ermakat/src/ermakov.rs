//! Solutions of the Ermakov equation `rho'' + Omega^2(t) rho = rho^-3`.
//!
//! Two routes are provided: a closed-form evaluation for the tanh step
//! profile (exact in the ideal-step limit) and an adaptive Runge-Kutta
//! integration valid for any profile. Both produce a dense mesh of
//! `(rho, rho', theta)` with `theta(t) = int_0^t dt' / rho^2`, the phase that
//! rotates the coherent amplitude, plus the refined local minima of `rho`.

use crate::format::write_e12;
use crate::frequency::{adaptive_gauss_kronrod, FrequencyError, FrequencyProfile};
use crate::ode::{self, OdeError};
use serde::Serialize;
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum ErmakovError {
    #[error(transparent)]
    Frequency(#[from] FrequencyError),
    #[error(transparent)]
    Integration(#[from] OdeError),
    #[error("initial rho must be positive, got {0}")]
    NonPositiveRho(f64),
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
    #[error("mesh step must be positive, got {0}")]
    NonPositiveMeshStep(f64),
    #[error("t_end = {t_end} must exceed the switch time t_s = {t_s}")]
    EndsBeforeSwitch { t_end: f64, t_s: f64 },
    #[error("t_end must be positive, got {0}")]
    NonPositiveEnd(f64),
    #[error("time {t} is outside the solved range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}

/// A refined local minimum of `rho(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Minimum {
    pub t: f64,
    pub rho: f64,
}

/// How a solution was obtained. The analytic variant keeps its generating
/// parameters so off-mesh evaluation stays exact.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Analytic {
        omega_i: f64,
        omega_f: f64,
        t_s: f64,
        epsilon: f64,
    },
    Numeric,
}

#[derive(Debug, Clone)]
pub struct ErmakovSolution {
    pub times: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_dot: Vec<f64>,
    /// Second derivative at the nodes; used for dense interpolation.
    pub rho_ddot: Vec<f64>,
    /// Accumulated phase `theta(t) = int_0^t dt'/rho^2`.
    pub theta: Vec<f64>,
    /// Local minima after the frequency switch (or after t = 0 when the
    /// profile has no switch), refined to `|rho'| <= 1e-10`.
    pub minima: Vec<Minimum>,
    pub provenance: Provenance,
}

/// Point sample of a solution.
#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub rho: f64,
    pub rho_dot: f64,
    pub theta: f64,
}

const ROOT_TOL: f64 = 1e-10;
/// Relative dip below which a mesh minimum is considered floating-point
/// noise rather than a feature.
const MIN_DEPTH: f64 = 1e-12;

/// Stable `ln cosh` for arguments of any size.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Closed-form ingredients of the step-profile solution.
struct AnalyticStep {
    omega_i: f64,
    omega_f: f64,
    t_s: f64,
    epsilon: f64,
}

impl AnalyticStep {
    fn omega(&self, t: f64) -> f64 {
        let delta = self.omega_f - self.omega_i;
        self.omega_i + 0.5 * delta * (1.0 + (self.epsilon * (t - self.t_s)).tanh())
    }

    fn omega_dot(&self, t: f64) -> f64 {
        let delta = self.omega_f - self.omega_i;
        let c = (self.epsilon * (t - self.t_s)).cosh();
        if c.is_infinite() {
            return 0.0;
        }
        0.5 * delta * self.epsilon / (c * c)
    }

    /// `int_{t_s}^{t} Omega dt'`, in closed form.
    fn phase_from_switch(&self, t: f64) -> f64 {
        let delta = self.omega_f - self.omega_i;
        let dt = t - self.t_s;
        (self.omega_i + 0.5 * delta) * dt + 0.5 * delta / self.epsilon * ln_cosh(self.epsilon * dt)
    }

    /// `(rho, rho_dot)` of the closed form.
    fn rho_pair(&self, t: f64) -> (f64, f64) {
        let om = self.omega(t);
        let om_dot = self.omega_dot(t);
        let ratio = (self.omega_i * self.omega_i) / (om * om);
        let phi2 = 2.0 * self.phase_from_switch(t);
        let (sin, cos) = phi2.sin_cos();
        let rho_sq = 0.5 * (1.0 + ratio + (1.0 - ratio) * cos);
        let rho = rho_sq.sqrt();
        // d(rho^2)/dt = -R (Omega'/Omega)(1 - cos) - Omega (1 - R) sin,  R = w_i^2/Omega^2
        let d_rho_sq = -ratio * om_dot / om * (1.0 - cos) - om * (1.0 - ratio) * sin;
        (rho, 0.5 * d_rho_sq / rho)
    }
}

/// Equilibrium initial conditions `rho(0) = Omega(0)^(-1/2)`, `rho'(0) = 0`,
/// the stationary point of the Ermakov equation at the initial frequency.
pub fn equilibrium_start(profile: &FrequencyProfile) -> Result<(f64, f64), ErmakovError> {
    let t0 = profile.domain().map(|(lo, _)| lo).unwrap_or(0.0);
    let om = profile.omega_at(t0)?;
    Ok((om.powf(-0.5), 0.0))
}

/// Evaluate the closed-form step solution
/// `rho^2 = (1/2) [1 + w_i^2/Omega^2 + (1 - w_i^2/Omega^2) cos(2 int_{t_s}^t Omega)]`
/// on a uniform mesh over `[0, t_end]`.
///
/// The formula solves the Ermakov equation exactly wherever the frequency is
/// constant, so it is exact up to terms that vanish in the ideal-step limit;
/// for moderate steepness it carries an O(1/epsilon) switching error relative
/// to the integrated dynamics (see `solve_numeric`).
pub fn solve_analytic_step(
    omega_i: f64,
    omega_f: f64,
    t_s: f64,
    epsilon: f64,
    t_end: f64,
    mesh_step: f64,
) -> Result<ErmakovSolution, ErmakovError> {
    // Parameter validation shared with the profile type.
    let _ = FrequencyProfile::tanh_step(omega_i, omega_f, t_s, epsilon)?;
    if t_end <= t_s {
        return Err(ErmakovError::EndsBeforeSwitch { t_end, t_s });
    }
    if !(mesh_step > 0.0) {
        return Err(ErmakovError::NonPositiveMeshStep(mesh_step));
    }
    let step = AnalyticStep {
        omega_i,
        omega_f,
        t_s,
        epsilon,
    };

    let n = (t_end / mesh_step).ceil() as usize;
    let n = n.max(2);
    let mut times = Vec::with_capacity(n + 1);
    let mut rho = Vec::with_capacity(n + 1);
    let mut rho_dot = Vec::with_capacity(n + 1);
    let mut theta = Vec::with_capacity(n + 1);

    for k in 0..=n {
        let t = t_end * k as f64 / n as f64;
        let (r, rd) = step.rho_pair(t);
        times.push(t);
        rho.push(r);
        rho_dot.push(rd);
    }

    // theta by interval-wise adaptive quadrature of 1/rho^2 on the closed form.
    theta.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        let inc = adaptive_gauss_kronrod(
            &|t| {
                let (r, _) = step.rho_pair(t);
                Ok(r.powi(-2))
            },
            times[k - 1],
            times[k],
            1e-13,
        )?;
        acc += inc;
        theta.push(acc);
    }

    // Finite differences of the stored derivative are accurate enough for
    // interpolating between analytic nodes.
    let rho_ddot = second_derivative_by_differences(&times, &rho_dot);

    let mut sol = ErmakovSolution {
        times,
        rho,
        rho_dot,
        rho_ddot,
        theta,
        minima: Vec::new(),
        provenance: Provenance::Analytic {
            omega_i,
            omega_f,
            t_s,
            epsilon,
        },
    };
    sol.minima = sol.find_minima(t_s)?;
    Ok(sol)
}

/// Integrate the Ermakov equation as the first-order system
/// `(rho, v, theta)' = (v, rho^-3 - Omega^2 rho, rho^-2)` with adaptive step
/// control (local error below `tol`). The accepted steps are resampled onto
/// a uniform mesh of spacing `2e-3 * max(1, t_end/10)` through quintic
/// Hermite dense output, so downstream finite differencing sees evenly
/// spaced data while interpolation error stays far below the solver
/// tolerance.
pub fn solve_numeric(
    profile: &FrequencyProfile,
    rho0: f64,
    rho_dot0: f64,
    t_end: f64,
    tol: f64,
) -> Result<ErmakovSolution, ErmakovError> {
    if !(rho0 > 0.0) {
        return Err(ErmakovError::NonPositiveRho(rho0));
    }
    if !(tol > 0.0) {
        return Err(ErmakovError::NonPositiveTolerance(tol));
    }
    if !(t_end > 0.0) {
        return Err(ErmakovError::NonPositiveEnd(t_end));
    }
    let h_mesh = 2e-3 * (t_end / 10.0).max(1.0);
    let nodes = ode::integrate(
        |t, y: &[f64; 3]| {
            let om = profile.omega_at(t).map_err(|e| e.to_string())?;
            let r = y[0];
            if r <= 0.0 {
                return Err(format!("rho became non-positive at t = {t}"));
            }
            let r2 = r * r;
            Ok([y[1], 1.0 / (r2 * r) - om * om * r, 1.0 / r2])
        },
        0.0,
        [rho0, rho_dot0, 0.0],
        t_end,
        tol,
        h_mesh,
    )?;

    let n_mesh = (t_end / h_mesh).ceil() as usize;
    let mut times = Vec::with_capacity(n_mesh + 1);
    let mut rho = Vec::with_capacity(n_mesh + 1);
    let mut rho_dot = Vec::with_capacity(n_mesh + 1);
    let mut rho_ddot = Vec::with_capacity(n_mesh + 1);
    let mut theta = Vec::with_capacity(n_mesh + 1);

    let mut seg = 0usize;
    for k in 0..=n_mesh {
        let t = t_end * k as f64 / n_mesh as f64;
        while seg + 2 < nodes.len() && nodes[seg + 1].t <= t {
            seg += 1;
        }
        let (n0, n1) = (&nodes[seg], &nodes[seg + 1]);
        let h = n1.t - n0.t;
        let s = ((t - n0.t) / h).clamp(0.0, 1.0);
        let r = quintic_hermite(s, h, n0.y[0], n0.y[1], n0.dy[1], n1.y[0], n1.y[1], n1.dy[1]);
        let v = quintic_hermite(
            s,
            h,
            n0.y[1],
            n0.dy[1],
            rho_dddot(profile, n0.t, n0.y[0], n0.y[1])?,
            n1.y[1],
            n1.dy[1],
            rho_dddot(profile, n1.t, n1.y[0], n1.y[1])?,
        );
        let th = cubic_hermite(s, h, n0.y[2], n0.dy[2], n1.y[2], n1.dy[2]);
        let om = profile.omega_at(t)?;
        times.push(t);
        rho_ddot.push(r.powi(-3) - om * om * r);
        rho.push(r);
        rho_dot.push(v);
        theta.push(th);
    }

    let t_after = match profile {
        FrequencyProfile::TanhStep { t_s, .. } => *t_s,
        _ => 0.0,
    };
    let mut sol = ErmakovSolution {
        times,
        rho,
        rho_dot,
        rho_ddot,
        theta,
        minima: Vec::new(),
        provenance: Provenance::Numeric,
    };
    sol.minima = sol.find_minima(t_after.max(0.0))?;
    Ok(sol)
}

/// Third time derivative of rho along a trajectory point:
/// `d/dt (rho^-3 - Omega^2 rho)`.
fn rho_dddot(
    profile: &FrequencyProfile,
    t: f64,
    rho: f64,
    rho_dot: f64,
) -> Result<f64, ErmakovError> {
    let om = profile.omega_at(t)?;
    let om_dot = profile.omega_dot_at(t)?;
    Ok(-3.0 * rho.powi(-4) * rho_dot - 2.0 * om * om_dot * rho - om * om * rho_dot)
}

fn second_derivative_by_differences(times: &[f64], first_derivative: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut out = vec![0.0; n];
    if n < 3 {
        return out;
    }
    for k in 0..n {
        let (i0, i1, i2) = if k == 0 {
            (0, 1, 2)
        } else if k == n - 1 {
            (n - 3, n - 2, n - 1)
        } else {
            (k - 1, k, k + 1)
        };
        // Three-point derivative on a possibly non-uniform mesh.
        let (t0, t1, t2) = (times[i0], times[i1], times[i2]);
        let (f0, f1, f2) = (
            first_derivative[i0],
            first_derivative[i1],
            first_derivative[i2],
        );
        let t = times[k];
        let d0 = f0 * (2.0 * t - t1 - t2) / ((t0 - t1) * (t0 - t2));
        let d1 = f1 * (2.0 * t - t0 - t2) / ((t1 - t0) * (t1 - t2));
        let d2 = f2 * (2.0 * t - t0 - t1) / ((t2 - t0) * (t2 - t1));
        out[k] = d0 + d1 + d2;
    }
    out
}

impl ErmakovSolution {
    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn segment(&self, t: f64) -> Result<usize, ErmakovError> {
        let (lo, hi) = (self.t_start(), self.t_end());
        if t < lo || t > hi {
            return Err(ErmakovError::OutOfRange { t, lo, hi });
        }
        let idx = self.times.partition_point(|&x| x <= t);
        Ok(idx.clamp(1, self.times.len() - 1) - 1)
    }

    /// `(rho, rho', theta)` at an arbitrary time inside the solved range.
    ///
    /// Analytic solutions evaluate their closed form exactly; numeric
    /// solutions use quintic Hermite interpolation for `rho` (value, first
    /// and second derivative at both nodes) and cubic Hermite for `rho'` and
    /// `theta`, whose derivatives are known at the nodes.
    pub fn sample(&self, t: f64) -> Result<Sample, ErmakovError> {
        if let Provenance::Analytic {
            omega_i,
            omega_f,
            t_s,
            epsilon,
        } = self.provenance
        {
            let step = AnalyticStep {
                omega_i,
                omega_f,
                t_s,
                epsilon,
            };
            let (rho, rho_dot) = step.rho_pair(t);
            let k = self.segment(t)?;
            let theta = self.theta[k]
                + adaptive_gauss_kronrod(
                    &|u| {
                        let (r, _) = step.rho_pair(u);
                        Ok(r.powi(-2))
                    },
                    self.times[k],
                    t,
                    1e-13,
                )?;
            return Ok(Sample {
                rho,
                rho_dot,
                theta,
            });
        }

        let k = self.segment(t)?;
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let rho = quintic_hermite(
            s,
            h,
            self.rho[k],
            self.rho_dot[k],
            self.rho_ddot[k],
            self.rho[k + 1],
            self.rho_dot[k + 1],
            self.rho_ddot[k + 1],
        );
        let rho_dot = cubic_hermite(
            s,
            h,
            self.rho_dot[k],
            self.rho_ddot[k],
            self.rho_dot[k + 1],
            self.rho_ddot[k + 1],
        );
        let theta = cubic_hermite(
            s,
            h,
            self.theta[k],
            self.rho[k].powi(-2),
            self.theta[k + 1],
            self.rho[k + 1].powi(-2),
        );
        Ok(Sample {
            rho,
            rho_dot,
            theta,
        })
    }

    fn rho_dot_at(&self, t: f64) -> Result<f64, ErmakovError> {
        if let Provenance::Analytic {
            omega_i,
            omega_f,
            t_s,
            epsilon,
        } = self.provenance
        {
            let step = AnalyticStep {
                omega_i,
                omega_f,
                t_s,
                epsilon,
            };
            return Ok(step.rho_pair(t).1);
        }
        Ok(self.sample(t)?.rho_dot)
    }

    /// All strict local minima of `rho` at times `>= t_after`, ordered by
    /// time, each refined until `|rho'| <= 1e-10`. Dips smaller than a
    /// relative depth of 1e-12 are treated as round-off and skipped.
    pub fn find_minima(&self, t_after: f64) -> Result<Vec<Minimum>, ErmakovError> {
        let mut out = Vec::new();
        let n = self.times.len();
        for k in 0..n - 1 {
            if self.times[k + 1] <= t_after {
                continue;
            }
            let a = self.times[k].max(t_after);
            let b = self.times[k + 1];
            let (da, db) = (self.rho_dot_at(a)?, self.rho_dot_at(b)?);
            if !(da < 0.0 && db >= 0.0) {
                continue;
            }
            let t_min = self.refine_minimum(a, b)?;
            let rho_min = self.sample(t_min)?.rho;
            // Depth guard against floating-point wiggles.
            let nb_lo = self.sample((t_min - 0.5).max(self.t_start()))?.rho;
            let nb_hi = self.sample((t_min + 0.5).min(self.t_end()))?.rho;
            let depth = nb_lo.max(nb_hi) - rho_min;
            if depth < MIN_DEPTH * rho_min.max(1.0) {
                continue;
            }
            if out
                .last()
                .map(|m: &Minimum| (m.t - t_min).abs() < 1e-9)
                .unwrap_or(false)
            {
                continue;
            }
            out.push(Minimum {
                t: t_min,
                rho: rho_min,
            });
        }
        Ok(out)
    }

    /// Bisection-secant hybrid for the root of `rho'` inside `[a, b]`.
    /// Zero values count as non-negative so a flat run resolves to its
    /// leftmost point.
    fn refine_minimum(&self, mut a: f64, mut b: f64) -> Result<f64, ErmakovError> {
        let mut fa = self.rho_dot_at(a)?;
        let mut fb = self.rho_dot_at(b)?;
        let mut prev_width = b - a;
        for iter in 0..200 {
            if b - a < 1e-15 * b.abs().max(1.0) {
                break;
            }
            // Alternate secant candidates with plain bisection so the bracket
            // keeps shrinking geometrically even for flat derivatives.
            let mut m = if iter % 2 == 0 && fb != fa {
                a - fa * (b - a) / (fb - fa)
            } else {
                0.5 * (a + b)
            };
            if !(m > a && m < b) {
                m = 0.5 * (a + b);
            }
            let fm = self.rho_dot_at(m)?;
            if fm.abs() <= ROOT_TOL && b - a < 1e-6 {
                return Ok(m);
            }
            // Zero counts as non-negative so a flat run resolves leftmost.
            if fm < 0.0 {
                a = m;
                fa = fm;
            } else {
                b = m;
                fb = fm;
            }
            if b - a > 0.75 * prev_width {
                let mid = 0.5 * (a + b);
                let fmid = self.rho_dot_at(mid)?;
                if fmid < 0.0 {
                    a = mid;
                    fa = fmid;
                } else {
                    b = mid;
                    fb = fmid;
                }
            }
            prev_width = b - a;
        }
        let _ = (fa, fb);
        Ok(b)
    }

    /// Max-norm of `rho'' + Omega^2 rho - rho^-3` over interior mesh points
    /// in `[t_lo, t_hi]`, with `rho''` estimated from the stored `rho` values
    /// by the fourth-order five-point stencil. An independent consistency
    /// check of the integration output; the mesh is uniform by construction.
    pub fn residual_max(
        &self,
        profile: &FrequencyProfile,
        t_lo: f64,
        t_hi: f64,
    ) -> Result<f64, ErmakovError> {
        let n = self.times.len();
        if n < 5 {
            return Ok(0.0);
        }
        let h = self.times[1] - self.times[0];
        let mut worst: f64 = 0.0;
        for k in 2..n - 2 {
            let t = self.times[k];
            if t < t_lo || t > t_hi {
                continue;
            }
            let dd = (-self.rho[k - 2] + 16.0 * self.rho[k - 1] - 30.0 * self.rho[k]
                + 16.0 * self.rho[k + 1]
                - self.rho[k + 2])
                / (12.0 * h * h);
            let om = profile.omega_at(t)?;
            let res = dd + om * om * self.rho[k] - self.rho[k].powi(-3);
            worst = worst.max(res.abs());
        }
        Ok(worst)
    }

    /// CSV export with columns `t, rho, rho_dot, theta`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), ErmakovError> {
        let mut line = String::with_capacity(96);
        line.push_str("t,rho,rho_dot,theta\n");
        w.write_all(line.as_bytes())?;
        for k in 0..self.times.len() {
            line.clear();
            write_e12(&mut line, self.times[k]);
            line.push(',');
            write_e12(&mut line, self.rho[k]);
            line.push(',');
            write_e12(&mut line, self.rho_dot[k]);
            line.push(',');
            write_e12(&mut line, self.theta[k]);
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    /// Minima list as a JSON array of `{t, rho}` objects.
    pub fn minima_json(&self) -> serde_json::Value {
        serde_json::json!(self.minima)
    }
}

fn cubic_hermite(s: f64, h: f64, y0: f64, d0: f64, y1: f64, d1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}

#[allow(clippy::too_many_arguments)]
fn quintic_hermite(s: f64, h: f64, y0: f64, d0: f64, dd0: f64, y1: f64, d1: f64, dd1: f64) -> f64 {
    // Basis for value/first/second derivative data at s = 0 and s = 1.
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h21 = 0.5 * (s3 - 2.0 * s4 + s5);
    h00 * y0 + h10 * h * d0 + h20 * h * h * dd0 + h01 * y1 + h11 * h * d1 + h21 * h * h * dd1
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tanh_profile(omega_f: f64, epsilon: f64) -> FrequencyProfile {
        FrequencyProfile::tanh_step(1.0, omega_f, 2.0, epsilon).unwrap()
    }

    #[test]
    fn constant_profile_stays_at_equilibrium() {
        let p = FrequencyProfile::constant(1.0).unwrap();
        let sol = solve_numeric(&p, 1.0, 0.0, 10.0, 1e-10).unwrap();
        let dev = sol.rho.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-9, "max deviation {dev}");
        assert!(sol.minima.is_empty());
    }

    #[test]
    fn constant_profile_equilibrium_at_other_frequency() {
        let p = FrequencyProfile::constant(4.0).unwrap();
        let (r0, v0) = equilibrium_start(&p).unwrap();
        assert!((r0 - 0.5).abs() < 1e-15);
        let sol = solve_numeric(&p, r0, v0, 5.0, 1e-10).unwrap();
        let dev = sol.rho.iter().map(|r| (r - 0.5).abs()).fold(0.0, f64::max);
        assert!(dev <= 1e-9, "max deviation {dev}");
    }

    #[test]
    fn theta_matches_constant_rho() {
        // rho = 1 gives theta(t) = t.
        let p = FrequencyProfile::constant(1.0).unwrap();
        let sol = solve_numeric(&p, 1.0, 0.0, 5.0, 1e-11).unwrap();
        let s = sol.sample(4.2).unwrap();
        assert!((s.theta - 4.2).abs() < 1e-9);
    }

    #[test]
    fn analytic_flat_before_step() {
        let sol = solve_analytic_step(1.0, 2.0, 2.0, 10.0, 10.0, 2e-3).unwrap();
        for (t, r) in sol.times.iter().zip(&sol.rho) {
            if *t <= 1.0 {
                assert!((r - 1.0).abs() < 1e-6, "rho({t}) = {r}");
            }
        }
    }

    #[test]
    fn analytic_sharp_step_minimum_value() {
        let sol = solve_analytic_step(1.0, 2.0, 2.0, 1.0e4, 6.0, 1e-3).unwrap();
        let m = sol.minima.first().expect("a minimum after the switch");
        assert!((m.rho - 0.5).abs() < 1e-6, "rho_min = {}", m.rho);
        let expect_t = 2.0 + std::f64::consts::PI / 4.0;
        assert!((m.t - expect_t).abs() < 1e-4, "t_min = {}", m.t);
    }

    #[test]
    fn analytic_sharp_step_omega4() {
        let sol = solve_analytic_step(1.0, 4.0, 2.0, 1.0e4, 6.0, 1e-3).unwrap();
        let m = sol.minima.first().unwrap();
        assert!((m.rho - 0.25).abs() < 1e-6, "rho_min = {}", m.rho);
        let expect_t = 2.0 + std::f64::consts::PI / 8.0;
        assert!((m.t - expect_t).abs() < 1e-4, "t_min = {}", m.t);
    }

    #[test]
    fn analytic_oscillation_range_for_omega4() {
        // After the step the solution swings between about 1 and 1/4.
        let sol = solve_analytic_step(1.0, 4.0, 2.0, 10.0, 10.0, 2e-3).unwrap();
        let post: Vec<f64> = sol
            .times
            .iter()
            .zip(&sol.rho)
            .filter(|(t, _)| **t > 3.0)
            .map(|(_, r)| *r)
            .collect();
        let lo = post.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = post.iter().copied().fold(0.0f64, f64::max);
        assert!((lo - 0.25).abs() < 0.05, "min {lo}");
        assert!((hi - 1.0).abs() < 0.05, "max {hi}");
    }

    #[test]
    fn minima_rho_dot_vanishes_at_reported_times() {
        let sol = solve_analytic_step(1.0, 3.0, 2.0, 10.0, 10.0, 2e-3).unwrap();
        assert!(!sol.minima.is_empty());
        for m in &sol.minima {
            let rd = sol.sample(m.t).unwrap().rho_dot;
            assert!(rd.abs() <= 1e-10, "rho_dot({}) = {rd}", m.t);
        }
        // Ordered by time and positive curvature (second difference check).
        for w in sol.minima.windows(2) {
            assert!(w[0].t < w[1].t);
        }
        for m in &sol.minima {
            let d = 1e-4;
            let left = sol.sample(m.t - d).unwrap().rho;
            let right = sol.sample(m.t + d).unwrap().rho;
            assert!(
                left > m.rho && right > m.rho,
                "not a strict minimum at {}",
                m.t
            );
        }
    }

    #[test]
    fn numeric_agrees_with_independent_rk4() {
        // Cross-check the adaptive integrator against a plain fixed-step RK4
        // written inline, sharing nothing with the ode module.
        let p = tanh_profile(2.0, 10.0);
        let sol = solve_numeric(&p, 1.0, 0.0, 6.0, 1e-11).unwrap();

        let f = |t: f64, y: [f64; 2]| -> [f64; 2] {
            let om = p.omega_at(t).unwrap();
            [y[1], y[0].powi(-3) - om * om * y[0]]
        };
        let mut y = [1.0, 0.0];
        let h = 1e-5;
        let n = (6.0 / h) as usize;
        for k in 0..n {
            let t = k as f64 * h;
            let k1 = f(t, y);
            let k2 = f(
                t + 0.5 * h,
                [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]],
            );
            let k3 = f(
                t + 0.5 * h,
                [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]],
            );
            let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
            y[0] += h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]);
            y[1] += h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]);
        }
        let s = sol.sample(6.0).unwrap();
        assert!((s.rho - y[0]).abs() < 1e-8, "rho: {} vs {}", s.rho, y[0]);
        assert!(
            (s.rho_dot - y[1]).abs() < 1e-8,
            "rho_dot: {} vs {}",
            s.rho_dot,
            y[1]
        );
    }

    #[test]
    fn numeric_residual_small_on_smooth_profile() {
        let p = tanh_profile(2.0, 10.0);
        let sol = solve_numeric(&p, 1.0, 0.0, 10.0, 1e-10).unwrap();
        let res = sol.residual_max(&p, 0.0, 10.0).unwrap();
        assert!(res <= 1e-4, "residual {res}");
    }

    #[test]
    fn numeric_residual_small_away_from_sharp_switch() {
        // With epsilon = 1e4 the switch is narrower than any practical mesh,
        // so the finite-difference residual is only meaningful outside it.
        let p = tanh_profile(2.0, 1e4);
        let sol = solve_numeric(&p, 1.0, 0.0, 6.0, 1e-10).unwrap();
        let before = sol.residual_max(&p, 0.0, 2.0 - 1e-2).unwrap();
        let after = sol.residual_max(&p, 2.0 + 1e-2, 6.0).unwrap();
        assert!(before <= 1e-4, "pre-switch residual {before}");
        assert!(after <= 1e-4, "post-switch residual {after}");
    }

    #[test]
    fn theta_is_strictly_increasing() {
        let sol = solve_analytic_step(1.0, 4.0, 2.0, 10.0, 10.0, 2e-3).unwrap();
        for w in sol.theta.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn squeezing_parameter_nonnegative_for_upward_step() {
        for omega_f in [2.0, 3.0, 4.0] {
            let sol = solve_analytic_step(1.0, omega_f, 2.0, 10.0, 10.0, 2e-3).unwrap();
            for m in &sol.minima {
                assert!(-m.rho.ln() >= 0.0, "r_min negative at omega_f {omega_f}");
            }
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(16))]

        #[test]
        fn solution_positivity_and_phase_monotonicity(
            omega_f in 1.2..4.0f64,
            eps in 5.0..100.0f64,
        ) {
            let p = FrequencyProfile::tanh_step(1.0, omega_f, 2.0, eps).unwrap();
            let sol = solve_numeric(&p, 1.0, 0.0, 6.0, 1e-8).unwrap();
            proptest::prop_assert!(sol.rho.iter().all(|r| *r > 0.0));
            proptest::prop_assert!(sol.theta.windows(2).all(|w| w[1] > w[0]));
            for m in &sol.minima {
                proptest::prop_assert!(-m.rho.ln() >= -1e-12);
            }
        }
    }

    #[test]
    fn csv_export_shape() {
        let p = FrequencyProfile::constant(1.0).unwrap();
        let sol = solve_numeric(&p, 1.0, 0.0, 0.1, 1e-9).unwrap();
        let mut buf = Vec::new();
        sol.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,rho,rho_dot,theta");
        let first = lines.next().unwrap();
        assert_eq!(first.split(',').count(), 4);
        assert!(first.starts_with("0.000000000000e+00,1.000000000000e+00"));
        assert!(!text.contains('\r'));
    }
}
