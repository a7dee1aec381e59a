//! Wigner phase-space distributions, by two independent routes.
//!
//! The series route displaces the state and sums photon-number parity,
//! `W(Q,P) = (1/pi) sum_k (-1)^k |<k| D^dag(g) |psi>|^2` with
//! `g = (Q + iP)/sqrt(2)`, and works for any Fock-basis state. The closed
//! form evaluates the squeezed-cat Wigner function as four Gaussian terms
//! and costs O(1) per grid point. Cross-validating the two is the point of
//! keeping both.

use crate::evolution::{CatSpec, EvolutionError};
use crate::fock::FockState;
use crate::format::write_e12;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WignerError {
    #[error(transparent)]
    Evolution(#[from] EvolutionError),
    #[error("grid axes must have at least 2 points, got {0}")]
    DegenerateAxis(usize),
    #[error("grid bounds must be increasing, got [{lo}, {hi}]")]
    BadBounds { lo: f64, hi: f64 },
    #[error("imaginary residue {0} of the assembled closed form exceeds 1e-9")]
    ImaginaryResidue(f64),
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridAxis {
    pub min: f64,
    pub step: f64,
    pub len: usize,
}

impl GridAxis {
    pub fn at(&self, i: usize) -> f64 {
        self.min + self.step * i as f64
    }

    pub fn max(&self) -> f64 {
        self.at(self.len - 1)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|i| self.at(i)).collect()
    }
}

/// Requested evaluation window and resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_points: usize,
    pub p_points: usize,
}

pub const DEFAULT_GRID_POINTS: usize = 161;

impl GridSpec {
    pub fn symmetric(half_width: f64, points: usize) -> Self {
        Self {
            q_min: -half_width,
            q_max: half_width,
            p_min: -half_width,
            p_max: half_width,
            q_points: points,
            p_points: points,
        }
    }

    /// Cover the state's mean +/- 6 sigma in both quadratures at the default
    /// resolution.
    pub fn auto_for_state(state: &FockState) -> Self {
        let a = state.expect_a();
        let mean_q = std::f64::consts::SQRT_2 * a.re;
        let mean_p = std::f64::consts::SQRT_2 * a.im;
        let sq = state.var_q().max(0.0).sqrt();
        let sp = state.var_p().max(0.0).sqrt();
        Self {
            q_min: mean_q - 6.0 * sq - 0.5,
            q_max: mean_q + 6.0 * sq + 0.5,
            p_min: mean_p - 6.0 * sp - 0.5,
            p_max: mean_p + 6.0 * sp + 0.5,
            q_points: DEFAULT_GRID_POINTS,
            p_points: DEFAULT_GRID_POINTS,
        }
    }

    /// Like [`GridSpec::auto_for_state`] but with the point count raised
    /// until the finest interference fringe, wavelength
    /// `pi / (2 sqrt(2<n> + 1))`, is sampled at least four times. Quadrature
    /// over fringes needs this; plotting usually does not.
    pub fn auto_resolved_for_state(state: &FockState) -> Self {
        let mut g = Self::auto_for_state(state);
        let fringe = std::f64::consts::PI / (2.0 * (2.0 * state.mean_photon() + 1.0).sqrt());
        let step_cap = fringe / 4.0;
        let resolve = |lo: f64, hi: f64| -> usize {
            let needed = ((hi - lo) / step_cap).ceil() as usize + 1;
            needed.max(DEFAULT_GRID_POINTS) | 1
        };
        g.q_points = resolve(g.q_min, g.q_max);
        g.p_points = resolve(g.p_min, g.p_max);
        g
    }

    fn axes(&self) -> Result<(GridAxis, GridAxis), WignerError> {
        if self.q_points < 2 {
            return Err(WignerError::DegenerateAxis(self.q_points));
        }
        if self.p_points < 2 {
            return Err(WignerError::DegenerateAxis(self.p_points));
        }
        if !(self.q_max > self.q_min) {
            return Err(WignerError::BadBounds {
                lo: self.q_min,
                hi: self.q_max,
            });
        }
        if !(self.p_max > self.p_min) {
            return Err(WignerError::BadBounds {
                lo: self.p_min,
                hi: self.p_max,
            });
        }
        Ok((
            GridAxis {
                min: self.q_min,
                step: (self.q_max - self.q_min) / (self.q_points - 1) as f64,
                len: self.q_points,
            },
            GridAxis {
                min: self.p_min,
                step: (self.p_max - self.p_min) / (self.p_points - 1) as f64,
                len: self.p_points,
            },
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum WignerMethod {
    Series,
    ClosedForm,
}

/// Real Wigner values on a rectangular lattice, row-major over Q
/// (`values[iq * p_len + ip]`).
#[derive(Debug, Clone)]
pub struct WignerGrid {
    pub q_axis: GridAxis,
    pub p_axis: GridAxis,
    pub values: Vec<f64>,
    pub method: WignerMethod,
    /// Series route: worst displaced-state tail mass over the grid.
    pub max_displaced_tail: f64,
    /// Closed-form route: worst |Im| of the assembled sum before discarding.
    pub max_imag_residue: f64,
    pub truncation_warning: bool,
}

impl WignerGrid {
    pub fn value(&self, iq: usize, ip: usize) -> f64 {
        self.values[iq * self.p_axis.len + ip]
    }

    pub fn cell_area(&self) -> f64 {
        self.q_axis.step * self.p_axis.step
    }

    /// Riemann quadrature of W over the grid (should be 1 on a grid that
    /// covers and resolves the state).
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// Integral of the negative part: `sum max(0, -W) dQ dP`.
    pub fn negativity_volume(&self) -> f64 {
        self.values.iter().map(|w| (-w).max(0.0)).sum::<f64>() * self.cell_area()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest pointwise difference against another grid of identical shape.
    pub fn max_abs_difference(&self, other: &WignerGrid) -> Option<f64> {
        if self.q_axis != other.q_axis || self.p_axis != other.p_axis {
            return None;
        }
        Some(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Marginal distributions `int W dP` (over Q) and `int W dQ` (over P).
    pub fn marginals(&self) -> (Marginal, Marginal) {
        let nq = self.q_axis.len;
        let np = self.p_axis.len;
        let mut over_q = vec![0.0; nq];
        let mut over_p = vec![0.0; np];
        for (iq, oq) in over_q.iter_mut().enumerate() {
            for (ip, op) in over_p.iter_mut().enumerate() {
                let w = self.values[iq * np + ip];
                *oq += w;
                *op += w;
            }
        }
        for v in &mut over_q {
            *v *= self.p_axis.step;
        }
        for v in &mut over_p {
            *v *= self.q_axis.step;
        }
        (
            Marginal {
                axis: self.q_axis,
                density: over_q,
            },
            Marginal {
                axis: self.p_axis,
                density: over_p,
            },
        )
    }

    /// CSV export: two axis header rows, then the value matrix, one row per
    /// Q point with one column per P point. All numbers `%.12e`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), WignerError> {
        let mut line = String::with_capacity(self.p_axis.len * 20 + 16);
        line.push('q');
        for v in self.q_axis.values() {
            line.push(',');
            write_e12(&mut line, v);
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
        line.clear();
        line.push('p');
        for v in self.p_axis.values() {
            line.push(',');
            write_e12(&mut line, v);
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
        for iq in 0..self.q_axis.len {
            line.clear();
            for ip in 0..self.p_axis.len {
                if ip > 0 {
                    line.push(',');
                }
                write_e12(&mut line, self.value(iq, ip));
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "q_axis": self.q_axis,
            "p_axis": self.p_axis,
            "method": self.method,
            "max_displaced_tail": self.max_displaced_tail,
            "max_imag_residue": self.max_imag_residue,
            "truncation_warning": self.truncation_warning,
            "values_row_major_q": self.values,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Marginal {
    pub axis: GridAxis,
    pub density: Vec<f64>,
}

impl Marginal {
    pub fn total(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.axis.step
    }
}

/// Wigner function of an arbitrary state by the displaced-parity series.
///
/// Per grid point the displaced amplitudes `phi = D(-g) psi` are generated
/// by streaming the displacement-matrix column recurrence against the
/// state's (trimmed) support, keeping rows up to a support bound; the
/// alternating sum is accumulated in even/odd pairs. `k_max` optionally
/// caps the parity sum.
pub fn wigner_series(
    state: &FockState,
    spec: &GridSpec,
    k_max: Option<usize>,
) -> Result<WignerGrid, WignerError> {
    let (q_axis, p_axis) = spec.axes()?;
    let amps = state.amplitudes();
    // Drop the sub-1e-26 cumulative tail: it moves no output by more than
    // ~1e-13 and the displaced-support row bound shrinks with it.
    let mut n_cols = amps.len();
    let mut dropped = 0.0;
    while n_cols > 1 {
        let add = amps[n_cols - 1].norm_sqr();
        if dropped + add > 1e-26 {
            break;
        }
        dropped += add;
        n_cols -= 1;
    }
    let norm_sq = state.norm_sq();

    // Row bound: displaced support plus a wide safety margin.
    let rows_for = |g_abs: f64| -> usize {
        let m = ((n_cols as f64).sqrt() + g_abs).powi(2);
        (m + 12.0 * (m + 1.0).sqrt() + 40.0).ceil() as usize
    };

    let np = p_axis.len;
    let rows: Vec<(Vec<f64>, f64)> = (0..q_axis.len)
        .into_par_iter()
        .map(|iq| {
            let q = q_axis.at(iq);
            let mut row = vec![0.0; np];
            let mut worst_tail: f64 = 0.0;
            for (ip, slot) in row.iter_mut().enumerate() {
                let p = p_axis.at(ip);
                let gamma = C64::new(q, p) / std::f64::consts::SQRT_2;
                let r_rows = rows_for(gamma.norm());
                let k_cap = k_max.unwrap_or(r_rows).min(r_rows);

                // phi = D^dag(gamma) psi = D(-gamma) psi.
                let phi = crate::fock::displaced_apply(-gamma, &amps[..n_cols], r_rows);

                // Alternating parity sum, accumulated in even/odd pairs.
                let mut acc = 0.0;
                let mut captured = 0.0;
                let mut k = 0;
                while k < k_cap {
                    let even = phi[k].norm_sqr();
                    let odd = if k + 1 < k_cap {
                        phi[k + 1].norm_sqr()
                    } else {
                        0.0
                    };
                    acc += even - odd;
                    captured += even + odd;
                    k += 2;
                }
                let tail = (norm_sq - captured).abs();
                worst_tail = worst_tail.max(tail);
                *slot = acc / std::f64::consts::PI;
            }
            (row, worst_tail)
        })
        .collect();

    let mut values = Vec::with_capacity(q_axis.len * np);
    let mut max_tail: f64 = 0.0;
    for (row, tail) in rows {
        values.extend_from_slice(&row);
        max_tail = max_tail.max(tail);
    }
    Ok(WignerGrid {
        q_axis,
        p_axis,
        values,
        method: WignerMethod::Series,
        max_displaced_tail: max_tail,
        max_imag_residue: 0.0,
        truncation_warning: max_tail > 1e-8,
    })
}

/// The Gaussian kernel of the closed form, evaluated literally as displayed
/// (keeping `mu / sqrt(mu^2 - nu^2)` even though it is identically `mu` for
/// real squeezing): returns `(ln prefactor, exponent)`.
fn kernel_log(x: C64, y: C64, mu: f64, nu: f64) -> (f64, C64) {
    let det = mu * mu - nu * nu;
    let ln_pref = (mu / det.sqrt()).ln();
    let yc = y.conj();
    let e1 = -(x / (mu * mu)) * (yc + x * (nu / (2.0 * mu)));
    let inner = yc + x * (nu / mu);
    let e2 = -(nu / (2.0 * mu * det)) * inner * inner;
    (ln_pref, e1 + e2)
}

/// Wigner function of the squeezed-cat state by the closed four-term
/// Gaussian form. Exponents are combined per term and exponentiated once,
/// so lobe centers far from the grid origin cannot overflow intermediate
/// factors; the imaginary residue of the assembled sum is checked against
/// 1e-9 and discarded.
pub fn wigner_closed_form(spec: &CatSpec, grid: &GridSpec) -> Result<WignerGrid, WignerError> {
    let (q_axis, p_axis) = grid.axes()?;
    let r = spec.r_min;
    let mu = r.cosh();
    let nu = r.sinh();
    let alpha = spec.alpha_tilde;
    let c_plus = C64::new(1.0, -1.0);
    let c_minus = C64::new(1.0, 1.0);

    let np = p_axis.len;
    let rows: Vec<(Vec<f64>, f64)> = (0..q_axis.len)
        .into_par_iter()
        .map(|iq| {
            let q = q_axis.at(iq);
            let mut row = vec![0.0; np];
            let mut worst_imag: f64 = 0.0;
            for (ip, slot) in row.iter_mut().enumerate() {
                let p = p_axis.at(ip);
                let gamma = C64::new(q, p) / std::f64::consts::SQRT_2;
                let xi = -(gamma * mu) - gamma.conj() * nu;
                let z_plus = alpha + xi;
                let z_minus = -alpha + xi;

                // Branch exponents of f and g; the relative phase
                // exp(xi* a - xi a*) rides on the minus branch.
                let e_plus =
                    C64::new(-0.5 * z_plus.norm_sqr(), 0.0) + z_plus * z_plus * (nu / (2.0 * mu));
                let phase = xi.conj() * alpha - xi * alpha.conj();
                let e_minus = phase
                    + C64::new(-0.5 * z_minus.norm_sqr(), 0.0)
                    + z_minus * z_minus * (nu / (2.0 * mu));

                // N = (1/4pi) |exp((xi a* - xi* a)/2)|^2, literally (the
                // argument is purely imaginary, so this is 1/4pi).
                let n_arg = (xi * alpha.conj() - xi.conj() * alpha) * 0.5;
                let n_coef = n_arg.exp().norm_sqr() / (4.0 * std::f64::consts::PI);

                let mut acc = C64::ZERO;
                for (ca, ea, za) in [(c_plus, e_plus, z_plus), (c_minus, e_minus, z_minus)] {
                    for (cb, eb, zb) in [(c_plus, e_plus, z_plus), (c_minus, e_minus, z_minus)] {
                        let (ln_pref, h_exp) = kernel_log(za, zb, mu, nu);
                        let total = ea + eb.conj() + h_exp + ln_pref;
                        // One exponentiation per term; deep negatives
                        // underflow to zero harmlessly.
                        if total.re > -700.0 {
                            acc += ca * cb.conj() * total.exp();
                        }
                    }
                }
                let w = acc * (n_coef / mu);
                worst_imag = worst_imag.max(w.im.abs());
                *slot = w.re;
            }
            (row, worst_imag)
        })
        .collect();

    let mut values = Vec::with_capacity(q_axis.len * np);
    let mut max_imag: f64 = 0.0;
    for (row, imag) in rows {
        values.extend_from_slice(&row);
        max_imag = max_imag.max(imag);
    }
    if max_imag > 1e-9 {
        return Err(WignerError::ImaginaryResidue(max_imag));
    }
    Ok(WignerGrid {
        q_axis,
        p_axis,
        values,
        method: WignerMethod::ClosedForm,
        max_displaced_tail: 0.0,
        max_imag_residue: max_imag,
        truncation_warning: false,
    })
}

/// Position-space probability density `|<q|psi>|^2` synthesized from the
/// Fock amplitudes with scaled harmonic-oscillator eigenfunctions. The
/// scaling keeps the recurrence alive where `phi_0(q)` underflows but
/// high-order functions still reach.
pub fn position_density(state: &FockState, q_values: &[f64]) -> Vec<f64> {
    let amps = state.amplitudes();
    let norm_sq = state.norm_sq();
    q_values
        .iter()
        .map(|&q| {
            // phi_0 = pi^{-1/4} exp(-q^2/2), tracked as mantissa * 2^e2.
            let ln2 = std::f64::consts::LN_2;
            let log2_phi0 = (-0.5 * q * q - 0.25 * std::f64::consts::PI.ln()) / ln2;
            let e0 = log2_phi0.floor();
            let mut e2 = e0 as i32;
            let mut prev = 2.0f64.powf(log2_phi0 - e0);
            let mut cur = std::f64::consts::SQRT_2 * q * prev;
            let mut acc = C64::ZERO;
            let to_f64 = |m: f64, e: i32| -> f64 {
                if e < -1060 {
                    0.0
                } else {
                    m * 2.0f64.powi(e)
                }
            };
            acc += amps[0] * to_f64(prev, e2);
            if amps.len() > 1 {
                acc += amps[1] * to_f64(cur, e2);
            }
            for n in 1..amps.len().saturating_sub(1) {
                let nf = n as f64;
                let next = (2.0 / (nf + 1.0)).sqrt() * q * cur - (nf / (nf + 1.0)).sqrt() * prev;
                prev = cur;
                cur = next;
                let m = cur.abs().max(prev.abs());
                if m > 1e200 {
                    cur /= 1e200;
                    prev /= 1e200;
                    e2 += 664;
                    let corr = 1e200 / 2.0f64.powi(664);
                    cur *= corr;
                    prev *= corr;
                } else if m < 1e-200 && m > 0.0 {
                    cur *= 1e200;
                    prev *= 1e200;
                    e2 -= 664;
                    let corr = 2.0f64.powi(664) / 1e200;
                    cur *= corr;
                    prev *= corr;
                }
                acc += amps[n + 1] * to_f64(cur, e2);
            }
            acc.norm_sqr() / norm_sq
        })
        .collect()
}
