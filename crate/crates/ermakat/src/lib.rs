//! Simulation of a single cavity mode in a frequency-tunable Kerr cavity.
//!
//! The dynamics of the mode are solved exactly through the Ermakov equation
//! `rho'' + Omega^2(t) rho = rho^-3`: the evolved state factorizes into a
//! quadratic phase, a squeeze by `r = -ln rho`, and Kerr-phased coherent
//! amplitudes. At the minima of `rho`, with the Kerr coefficient tuned to
//! `chi t_min = pi/2`, the cavity holds a superposition of two squeezed
//! coherent states whose squeezing degree follows the frequency step.
//!
//! Module map:
//!
//! * [`frequency`] — time-dependent frequency profiles and their integrals
//! * [`ermakov`] — closed-form and adaptive-RK solutions of the Ermakov
//!   equation, with refined minima
//! * [`fock`] — truncated number-basis states, operators, and the stable
//!   recurrences behind them
//! * [`evolution`] — the factorized exact evolution, the cat construction,
//!   and the dynamical-invariant check
//! * [`wigner`] — phase-space distributions by a displaced-parity series and
//!   by a closed four-Gaussian form, cross-validated against each other
//! * [`cli`] — scenario files, figure presets, and the `ermakat` subcommands
//!
//! Everything is dimensionless (`hbar = 1`); states and solutions are
//! immutable after construction and all operations are pure, so parameter
//! sweeps and grid evaluations parallelize freely.

// Guards written as `!(x > 0.0)` intentionally treat NaN as invalid input,
// which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod ermakov;
pub mod evolution;
pub mod fock;
pub mod format;
pub mod frequency;
pub(crate) mod ode;
pub mod wigner;
