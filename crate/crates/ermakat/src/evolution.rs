//! Exact time evolution of the Kerr cavity and the squeezed-cat construction.
//!
//! For a coherent input the state at time `t` factorizes as
//!
//! ```text
//! psi(t) = exp(i rho'/(2 rho^3) q^2) S(-ln rho)
//!          sum_n e^{-|a|^2/2} [a e^{-i theta(t)}]^n e^{-i chi n^2 t} / sqrt(n!) |n>
//! ```
//!
//! with `(rho, rho', theta)` from the Ermakov solution. At a minimum of
//! `rho` the quadratic phase drops out, and when `chi t_min = pi/2` the Kerr
//! phases split into the two-branch superposition
//! `(1-i)/2 |a~; r> + (1+i)/2 |-a~; r>` of squeezed coherent states.

use crate::ermakov::{ErmakovError, ErmakovSolution};
use crate::fock::{self, coherent, squeezed_coherent, FockError, FockState, DEFAULT_PAD};
use num_complex::Complex64 as C64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error(transparent)]
    Ermakov(#[from] ErmakovError),
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("minimum index {requested} out of range: only {available} minima found")]
    MinimumIndexOutOfRange { requested: usize, available: usize },
    #[error("rho must be positive at the evaluation time, got {0}")]
    NonPositiveRho(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EvolutionProvenance {
    GeneralTime,
    AtMinimum,
    AnalyticCat,
}

/// Evolved state plus the dynamical snapshot it was built from.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub state: FockState,
    pub t: f64,
    pub rho: f64,
    pub rho_dot: f64,
    pub theta: f64,
    pub chi: f64,
    pub provenance: EvolutionProvenance,
}

impl EvolutionResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "t": self.t,
            "rho": self.rho,
            "rho_dot": self.rho_dot,
            "theta": self.theta,
            "chi": self.chi,
            "provenance": self.provenance,
            "state": self.state.to_json(),
        })
    }
}

/// Everything that determines a squeezed-cat construction: the step-profile
/// parameters, the chosen minimum, and the derived quantities.
#[derive(Debug, Clone)]
pub struct CatSpec {
    pub alpha: C64,
    pub omega_i: f64,
    pub omega_f: f64,
    pub t_s: f64,
    pub epsilon: f64,
    /// 0-based index among the minima after `t_s`.
    pub minimum_index: usize,
    pub t_min: f64,
    pub rho_min: f64,
    /// Squeezing parameter `r = -ln rho(t_min)`.
    pub r_min: f64,
    /// Kerr coefficient fixed by `chi t_min = pi/2`.
    pub chi: f64,
    /// Accumulated phase `theta(t_min)`.
    pub theta_min: f64,
    /// Rotated coherent amplitude `alpha e^{-i theta(t_min)}`.
    pub alpha_tilde: C64,
    /// True when `alpha = 0`: both branches coincide (squeezed vacuum).
    pub degenerate: bool,
}

impl CatSpec {
    /// Derive the cat parameters from a solved Ermakov problem.
    ///
    /// `chi` comes out of the minimum time, not the other way around: the
    /// construction needs `chi t_min = pi/2`, which an experiment reaches by
    /// tuning the nonlinearity.
    pub fn from_solution(
        alpha: C64,
        omega_i: f64,
        omega_f: f64,
        t_s: f64,
        epsilon: f64,
        minimum_index: usize,
        sol: &ErmakovSolution,
    ) -> Result<Self, EvolutionError> {
        let minima = sol.find_minima(t_s)?;
        let m = minima
            .get(minimum_index)
            .ok_or(EvolutionError::MinimumIndexOutOfRange {
                requested: minimum_index,
                available: minima.len(),
            })?;
        let sample = sol.sample(m.t)?;
        let chi = std::f64::consts::FRAC_PI_2 / m.t;
        let alpha_tilde = alpha * C64::from_polar(1.0, -sample.theta);
        Ok(Self {
            alpha,
            omega_i,
            omega_f,
            t_s,
            epsilon,
            minimum_index,
            t_min: m.t,
            rho_min: m.rho,
            r_min: -m.rho.ln(),
            chi,
            theta_min: sample.theta,
            alpha_tilde,
            degenerate: alpha == C64::ZERO,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "alpha_re": self.alpha.re,
            "alpha_im": self.alpha.im,
            "omega_i": self.omega_i,
            "omega_f": self.omega_f,
            "t_s": self.t_s,
            "epsilon": self.epsilon,
            "minimum_index": self.minimum_index,
            "t_min": self.t_min,
            "rho_min": self.rho_min,
            "r_min": self.r_min,
            "chi": self.chi,
            "theta_min": self.theta_min,
            "alpha_tilde_re": self.alpha_tilde.re,
            "alpha_tilde_im": self.alpha_tilde.im,
            "degenerate": self.degenerate,
        })
    }
}

/// Evolve a coherent input of amplitude `alpha` to time `t` under Kerr
/// coefficient `chi`, using the dynamical data in `sol`. The result is
/// truncated to `dim` after applying the squeeze and quadratic-phase
/// operators in a working space padded by [`DEFAULT_PAD`] levels.
pub fn evolve(
    alpha: C64,
    sol: &ErmakovSolution,
    chi: f64,
    t: f64,
    dim: usize,
) -> Result<EvolutionResult, EvolutionError> {
    let s = sol.sample(t)?;
    if !(s.rho > 0.0) {
        return Err(EvolutionError::NonPositiveRho(s.rho));
    }
    let n_work = dim + DEFAULT_PAD;

    // Kerr-phased, frame-rotated coherent amplitudes.
    let rotated = alpha * C64::from_polar(1.0, -s.theta);
    let base = coherent(rotated, n_work)?;
    let chi_t = chi * t;
    let mut amps: Vec<C64> = base
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let n2 = (n * n) as f64;
            c * C64::from_polar(1.0, -chi_t * n2)
        })
        .collect();

    // Squeeze by r = -ln rho, then the quadratic phase lambda q^2 with
    // lambda = rho'/(2 rho): the coefficient that makes the factorization
    // the adjoint of T(t) = exp[i (ln rho / 2)(qp + pq)] exp[-i (rho'/2rho) q^2],
    // conserves the dynamical invariant, and agrees with direct integration
    // of the Schroedinger equation (see tests).
    let r = -s.rho.ln();
    if r != 0.0 {
        fock::apply_squeeze(&mut amps, r);
    }
    let lambda = s.rho_dot / (2.0 * s.rho);
    fock::apply_quadratic_phase(&mut amps, lambda);

    let state = fock::FockState::from_truncating(amps, dim);
    let provenance = if s.rho_dot.abs() <= 1e-10 {
        EvolutionProvenance::AtMinimum
    } else {
        EvolutionProvenance::GeneralTime
    };
    Ok(EvolutionResult {
        state,
        t,
        rho: s.rho,
        rho_dot: s.rho_dot,
        theta: s.theta,
        chi,
        provenance,
    })
}

/// Build the squeezed-cat state
/// `(1-i)/2 |a~; r_min> + (1+i)/2 |-a~; r_min>` directly from `spec`.
/// The coefficients make the norm exactly one in exact arithmetic (the
/// cross terms are (-/+)i/2 times the same real branch overlap), so no
/// renormalization is applied.
pub fn make_cat(spec: &CatSpec, dim: usize) -> Result<EvolutionResult, EvolutionError> {
    let plus = squeezed_coherent(spec.alpha_tilde, spec.r_min, dim)?;
    let minus = squeezed_coherent(-spec.alpha_tilde, spec.r_min, dim)?;
    let c_plus = C64::new(0.5, -0.5);
    let c_minus = C64::new(0.5, 0.5);
    let amps: Vec<C64> = plus
        .amplitudes()
        .iter()
        .zip(minus.amplitudes())
        .map(|(a, b)| c_plus * a + c_minus * b)
        .collect();
    Ok(EvolutionResult {
        state: FockState::from_amplitudes(amps),
        t: spec.t_min,
        rho: spec.rho_min,
        rho_dot: 0.0,
        theta: spec.theta_min,
        chi: spec.chi,
        provenance: EvolutionProvenance::AnalyticCat,
    })
}

/// The even/odd Kerr phase pattern `e^{-i chi t n^2}`.
#[derive(Debug, Clone, Copy)]
pub struct KerrParityPhases {
    /// Phase shared by every even `n` (exactly 1 when `chi t` is a multiple
    /// of `pi/2`).
    pub even: C64,
    /// Phase shared by every odd `n` (`-i` at `chi t = pi/2`).
    pub odd: C64,
    /// Largest deviation of any `n <= 16` from its parity-class phase;
    /// nonzero spread means `chi t` does not split by parity.
    pub max_class_spread: f64,
}

/// Evaluate the parity split of the Kerr phases at a given `chi t`. At
/// `chi t = pi/2` this is the identity behind the two-branch cat: even
/// levels keep phase 1, odd levels pick up `-i`.
pub fn kerr_phase_parity_check(chi_t: f64) -> KerrParityPhases {
    let phase = |n: usize| C64::from_polar(1.0, -chi_t * (n * n) as f64);
    let even = phase(0);
    let odd = phase(1);
    let mut spread: f64 = 0.0;
    for n in 0..=16 {
        let reference = if n % 2 == 0 { even } else { odd };
        spread = spread.max((phase(n) - reference).norm());
    }
    KerrParityPhases {
        even,
        odd,
        max_class_spread: spread,
    }
}

/// Expectation of the dynamical invariant
/// `I = (1/2) [(q/rho)^2 + (rho p - rho' q)^2]` in the evolved state, using
/// the snapshot `(rho, rho')` carried by the result. Constant along
/// trajectories of the exact evolution, independent of the Kerr term.
pub fn lewis_invariant_expectation(result: &EvolutionResult) -> f64 {
    let st = &result.state;
    let a2 = st.expect_a_sq();
    let n = st.mean_photon();
    let q2 = a2.re + n + 0.5;
    let p2 = -a2.re + n + 0.5;
    let qp_sym = 2.0 * a2.im;
    let rho = result.rho;
    let rho_dot = result.rho_dot;
    0.5 * ((rho.powi(-2) + rho_dot * rho_dot) * q2 + rho * rho * p2 - rho * rho_dot * qp_sym)
}
