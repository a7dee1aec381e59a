//! Cross-parameter battery: the two Wigner routes must agree pointwise for
//! every (final frequency, amplitude) combination, and squeezing must grow
//! with the final frequency.

use ermakat::ermakov::{equilibrium_start, solve_numeric};
use ermakat::evolution::{make_cat, CatSpec};
use ermakat::fock::{auto_dim, squeezed_coherent};
use ermakat::frequency::FrequencyProfile;
use ermakat::wigner::{wigner_closed_form, wigner_series, GridSpec};
use num_complex::Complex64 as C64;

fn cat_spec(alpha: f64, omega_f: f64, epsilon: f64) -> CatSpec {
    let profile = FrequencyProfile::tanh_step(1.0, omega_f, 2.0, epsilon).unwrap();
    let (r0, v0) = equilibrium_start(&profile).unwrap();
    let sol = solve_numeric(&profile, r0, v0, 6.0, 1e-10).unwrap();
    CatSpec::from_solution(C64::new(alpha, 0.0), 1.0, omega_f, 2.0, epsilon, 0, &sol).unwrap()
}

#[test]
fn wigner_methods_agree_across_battery() {
    // The two headline cases run at the full 161x161 resolution in the
    // acceptance suite; pointwise agreement is resolution-independent, so
    // the rest of the battery runs on a coarser lattice of the same span.
    let grid = GridSpec::symmetric(8.0, 81);
    let mut worst: f64 = 0.0;
    for omega_f in [2.0, 3.0, 4.0] {
        for alpha in [1.0, 2.0, 3.0] {
            if alpha == 3.0 && omega_f != 3.0 {
                continue; // covered by the acceptance suite at 161x161
            }
            let spec = cat_spec(alpha, omega_f, 10.0);
            let cat = make_cat(&spec, auto_dim(alpha, spec.r_min)).unwrap();
            let series = wigner_series(&cat.state, &grid, None).unwrap();
            let closed = wigner_closed_form(&spec, &grid).unwrap();
            let diff = series.max_abs_difference(&closed).unwrap();
            assert!(
                diff <= 1e-6,
                "methods disagree at omega_f {omega_f}, alpha {alpha}: {diff:.2e}"
            );
            worst = worst.max(diff);
        }
    }
    println!("battery max pointwise |dW| = {worst:.2e}");
}

#[test]
fn higher_final_frequency_squeezes_harder() {
    // Branch states of the two reference panels at step steepness 10:
    // the minor quadrature variance shrinks as omega_f grows, consistent
    // with e^{-2 r_min}.
    let a = cat_spec(3.0, 2.0, 10.0);
    let b = cat_spec(3.0, 4.0, 10.0);
    assert!(b.r_min > a.r_min);
    let branch_a = squeezed_coherent(a.alpha_tilde, a.r_min, auto_dim(3.0, a.r_min)).unwrap();
    let branch_b = squeezed_coherent(b.alpha_tilde, b.r_min, auto_dim(3.0, b.r_min)).unwrap();
    let minor_a = branch_a.var_q().min(branch_a.var_p());
    let minor_b = branch_b.var_q().min(branch_b.var_p());
    assert!(minor_b < minor_a, "minor variances {minor_b} !< {minor_a}");
    assert!(((-2.0 * a.r_min).exp() / 2.0 - minor_a).abs() < 1e-6);
    assert!(((-2.0 * b.r_min).exp() / 2.0 - minor_b).abs() < 1e-6);
}

#[test]
fn parity_identity_across_battery() {
    // pi W(0,0) equals the photon-number parity for each battery state.
    let origin = GridSpec {
        q_min: 0.0,
        q_max: 1.0,
        p_min: 0.0,
        p_max: 1.0,
        q_points: 2,
        p_points: 2,
    };
    for omega_f in [2.0, 3.0, 4.0] {
        for alpha in [1.0, 3.0] {
            let spec = cat_spec(alpha, omega_f, 10.0);
            let cat = make_cat(&spec, auto_dim(alpha, spec.r_min)).unwrap();
            let w00 = wigner_series(&cat.state, &origin, None)
                .unwrap()
                .value(0, 0);
            let gap = (std::f64::consts::PI * w00 - cat.state.parity()).abs();
            assert!(
                gap <= 1e-8,
                "parity gap {gap:.2e} at omega_f {omega_f}, alpha {alpha}"
            );
        }
    }
}
