//! Acceptance suite: every criterion below runs at its stated tolerance and
//! prints one pass/fail line; the test fails at the end if any criterion
//! failed, after all lines have printed.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the report.

use ermakat::ermakov::{equilibrium_start, solve_analytic_step, solve_numeric};
use ermakat::evolution::{evolve, lewis_invariant_expectation, make_cat, CatSpec};
use ermakat::fock::{auto_dim, squeezed_coherent, FockState};
use ermakat::frequency::FrequencyProfile;
use ermakat::wigner::{position_density, wigner_closed_form, wigner_series, GridSpec};
use num_complex::Complex64 as C64;
use std::f64::consts::{FRAC_PI_2, PI};
use std::time::Instant;

struct Report {
    lines: Vec<(bool, String)>,
}

impl Report {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn record(&mut self, id: &str, passed: bool, detail: String) {
        let line = format!(
            "criterion {id}: {} — {detail}",
            if passed { "PASS" } else { "FAIL" }
        );
        println!("{line}");
        self.lines.push((passed, line));
    }

    fn finish(self) {
        let failures: Vec<&String> = self
            .lines
            .iter()
            .filter(|(ok, _)| !ok)
            .map(|(_, l)| l)
            .collect();
        assert!(
            failures.is_empty(),
            "{} acceptance criterion(s) failed:\n{}",
            failures.len(),
            failures
                .iter()
                .map(|s| s.as_str())
                .collect::<Vec<_>>()
                .join("\n")
        );
    }
}

fn tanh_profile(omega_f: f64, epsilon: f64) -> FrequencyProfile {
    FrequencyProfile::tanh_step(1.0, omega_f, 2.0, epsilon).unwrap()
}

fn cat_spec_for(alpha: C64, omega_f: f64, epsilon: f64) -> CatSpec {
    let profile = tanh_profile(omega_f, epsilon);
    let (r0, v0) = equilibrium_start(&profile).unwrap();
    let sol = solve_numeric(&profile, r0, v0, 6.0, 1e-10).unwrap();
    CatSpec::from_solution(alpha, 1.0, omega_f, 2.0, epsilon, 0, &sol).unwrap()
}

/// Effective parallelism scale factor: stated runtime budgets assume 4-way
/// parallelism, so a narrower machine gets proportionally more time.
fn parallel_budget(seconds_at_4way: f64) -> f64 {
    let threads = rayon::current_num_threads().max(1) as f64;
    seconds_at_4way * (4.0 / threads).max(1.0)
}

/// 1. Numeric integration vs the closed-form step solution at epsilon = 10,
///    max |d rho| <= 1e-6 over [0, 10], under 1 s per case.
fn criterion_1(report: &mut Report) {
    let mut worst_overall: f64 = 0.0;
    let mut worst_time = 0.0f64;
    for omega_f in [2.0, 3.0, 4.0] {
        let start = Instant::now();
        let profile = tanh_profile(omega_f, 10.0);
        let num = solve_numeric(&profile, 1.0, 0.0, 10.0, 1e-10).unwrap();
        let ana = solve_analytic_step(1.0, omega_f, 2.0, 10.0, 10.0, 2e-3).unwrap();
        let mut worst: f64 = 0.0;
        for (k, t) in num.times.iter().enumerate() {
            worst = worst.max((num.rho[k] - ana.sample(*t).unwrap().rho).abs());
        }
        worst_overall = worst_overall.max(worst);
        worst_time = worst_time.max(start.elapsed().as_secs_f64());
    }
    let passed = worst_overall <= 1e-6 && worst_time < 1.0;
    report.record(
        "1 (Ermakov oracle equivalence, eps = 10)",
        passed,
        format!(
            "max |drho| = {worst_overall:.3e} (tolerance 1e-6), slowest case {worst_time:.2} s"
        ),
    );
}

/// 2. Ideal-step squeezing law at epsilon = 1e4: rho_min = 1/omega_f within
///    1e-4 and t_min = t_s + pi/(2 omega_f) within 1e-3.
fn criterion_2(report: &mut Report) {
    let mut passed = true;
    let mut details = Vec::new();
    for omega_f in [2.0, 3.0, 4.0] {
        let profile = tanh_profile(omega_f, 1.0e4);
        let num = solve_numeric(&profile, 1.0, 0.0, 4.0, 1e-10).unwrap();
        let m = num.minima.first().expect("a post-switch minimum");
        let rho_err = (m.rho - 1.0 / omega_f).abs();
        let t_err = (m.t - (2.0 + FRAC_PI_2 / omega_f)).abs();
        passed &= rho_err <= 1e-4 && t_err <= 1e-3;
        details.push(format!(
            "wf{omega_f:.0}: |drho_min| = {rho_err:.1e}, |dt_min| = {t_err:.1e}"
        ));
    }
    report.record("2 (ideal-step squeezing law)", passed, details.join("; "));
}

/// 3. The factorized evolution at the minimum with chi t_min = pi/2 equals
///    the direct two-branch construction at fidelity >= 1 - 1e-8, N auto,
///    under 30 s per case.
fn criterion_3(report: &mut Report) {
    let alpha = C64::new(3.0, 0.0);
    let mut passed = true;
    let mut details = Vec::new();
    for omega_f in [2.0, 4.0] {
        let start = Instant::now();
        let profile = tanh_profile(omega_f, 10.0);
        let (r0, v0) = equilibrium_start(&profile).unwrap();
        let sol = solve_numeric(&profile, r0, v0, 6.0, 1e-10).unwrap();
        let spec = CatSpec::from_solution(alpha, 1.0, omega_f, 2.0, 10.0, 0, &sol).unwrap();
        let dim = auto_dim(alpha.norm(), spec.r_min);
        let cat = make_cat(&spec, dim).unwrap();
        let evolved = evolve(alpha, &sol, spec.chi, spec.t_min, dim).unwrap();
        let fid = cat.state.fidelity(&evolved.state);
        let secs = start.elapsed().as_secs_f64();
        passed &= fid >= 1.0 - 1e-8 && secs < 30.0;
        details.push(format!(
            "wf{omega_f:.0}: 1 - fidelity = {:.2e}, N = {dim}, {secs:.1} s",
            1.0 - fid
        ));
    }
    report.record("3 (cat construction identity)", passed, details.join("; "));
}

/// 4. The (1 -/+ i)/2 coefficients give unit norm without renormalization:
///    ||cat|| = 1 +/- 1e-12 across the battery.
fn criterion_4(report: &mut Report) {
    let mut worst: f64 = 0.0;
    for omega_f in [2.0, 3.0, 4.0] {
        for alpha in [1.0, 2.0, 3.0] {
            let spec = cat_spec_for(C64::new(alpha, 0.0), omega_f, 10.0);
            let dim = auto_dim(alpha, spec.r_min);
            let cat = make_cat(&spec, dim).unwrap();
            worst = worst.max((cat.state.norm() - 1.0).abs());
        }
    }
    report.record(
        "4 (cat norm exactness)",
        worst <= 1e-12,
        format!("max | ||cat|| - 1 | = {worst:.2e} over omega_f in {{2,3,4}}, alpha in {{1,2,3}}"),
    );
}

/// 5. Series vs closed form max-pointwise <= 1e-6 on 161x161 grids spanning
///    +/- 8, for the two reference parameter sets; under 3 min per grid at
///    4-way parallelism (scaled to this machine's thread count).
fn criterion_5(report: &mut Report) {
    let grid = GridSpec::symmetric(8.0, 161);
    let budget = parallel_budget(180.0);
    let mut passed = true;
    let mut details = Vec::new();
    for omega_f in [2.0, 4.0] {
        let spec = cat_spec_for(C64::new(3.0, 0.0), omega_f, 10.0);
        let dim = auto_dim(3.0, spec.r_min);
        let cat = make_cat(&spec, dim).unwrap();
        let start = Instant::now();
        let series = wigner_series(&cat.state, &grid, None).unwrap();
        let secs = start.elapsed().as_secs_f64();
        let closed = wigner_closed_form(&spec, &grid).unwrap();
        let diff = series.max_abs_difference(&closed).unwrap();
        passed &= diff <= 1e-6 && secs < budget;
        details.push(format!(
            "wf{omega_f:.0}: max |dW| = {diff:.2e}, series grid {secs:.0} s (budget {budget:.0} s)"
        ));
    }
    report.record(
        "5 (Wigner dual-method equivalence)",
        passed,
        details.join("; "),
    );
}

/// 6. Wigner sanity: unit quadrature on adequate grids, the 1/pi bound, the
///    parity identity at the origin, and the Q-marginal against the
///    wavefunction synthesis.
fn criterion_6(report: &mut Report) {
    let mut passed = true;
    let mut details = Vec::new();

    // Normalization, closed form on coverage- and fringe-adequate grids.
    for omega_f in [2.0, 4.0] {
        let spec = cat_spec_for(C64::new(3.0, 0.0), omega_f, 10.0);
        let dim = auto_dim(3.0, spec.r_min);
        let cat = make_cat(&spec, dim).unwrap();
        let grid =
            wigner_closed_form(&spec, &GridSpec::auto_resolved_for_state(&cat.state)).unwrap();
        let mass = grid.total_mass();
        passed &= (mass - 1.0).abs() <= 2e-3;
        details.push(format!("mass(wf{omega_f:.0}) = {mass:.6}"));
    }
    // Normalization of the series route on a simple state.
    let vac_grid =
        wigner_series(&FockState::vacuum(16), &GridSpec::symmetric(6.0, 161), None).unwrap();
    let vac_mass = vac_grid.total_mass();
    passed &= (vac_mass - 1.0).abs() <= 2e-3;
    details.push(format!("mass(vacuum, series) = {vac_mass:.6}"));

    // Bound and parity identity for the reference cat.
    let spec = cat_spec_for(C64::new(3.0, 0.0), 2.0, 10.0);
    let dim = auto_dim(3.0, spec.r_min);
    let cat = make_cat(&spec, dim).unwrap();
    let series = wigner_series(&cat.state, &GridSpec::symmetric(8.0, 161), None).unwrap();
    let bound = series.max_value().max(-series.min_value());
    passed &= bound <= 1.0 / PI + 1e-9;
    details.push(format!("max |W| = {bound:.6} (bound {:.6})", 1.0 / PI));

    let origin = GridSpec {
        q_min: 0.0,
        q_max: 1.0,
        p_min: 0.0,
        p_max: 1.0,
        q_points: 2,
        p_points: 2,
    };
    let w00 = wigner_series(&cat.state, &origin, None)
        .unwrap()
        .value(0, 0);
    let parity_gap = (PI * w00 - cat.state.parity()).abs();
    passed &= parity_gap <= 1e-8;
    details.push(format!("|pi W(0,0) - parity| = {parity_gap:.2e}"));

    // Q-marginal vs the position-density synthesis.
    let fine = wigner_closed_form(&spec, &GridSpec::auto_resolved_for_state(&cat.state)).unwrap();
    let (mq, _) = fine.marginals();
    let oracle = position_density(&cat.state, &mq.axis.values());
    let marg_err = mq
        .density
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    passed &= marg_err <= 1e-4;
    details.push(format!(
        "marginal vs wavefunction max diff = {marg_err:.2e}"
    ));

    report.record("6 (Wigner sanity suite)", passed, details.join("; "));
}

/// 7. Larger final frequency squeezes harder: branch minor variance at
///    omega_f = 4 below omega_f = 2, and the variance ratio matches
///    e^{-2 r_min} to 1e-3 in r, in the ideal-step runs.
fn criterion_7(report: &mut Report) {
    let mut passed = true;
    let mut details = Vec::new();
    let mut minors = Vec::new();
    for omega_f in [2.0, 4.0] {
        let spec = cat_spec_for(C64::new(3.0, 0.0), omega_f, 1.0e4);
        let dim = auto_dim(3.0, spec.r_min);
        let branch = squeezed_coherent(spec.alpha_tilde, spec.r_min, dim).unwrap();
        let minor = branch.var_q().min(branch.var_p());
        // Var_min / Var_vacuum = e^{-2r}; recover r and compare.
        let r_measured = -0.5 * (2.0 * minor).ln();
        let r_err = (r_measured - spec.r_min).abs();
        passed &= r_err <= 1e-3;
        minors.push(minor);
        details.push(format!(
            "wf{omega_f:.0}: minor var = {minor:.6}, r_min = {:.6}, |dr| = {r_err:.1e}",
            spec.r_min
        ));
    }
    passed &= minors[1] < minors[0];
    report.record(
        "7 (squeezing grows with final frequency)",
        passed,
        details.join("; "),
    );
}

/// 8. The dynamical-invariant expectation is conserved along the evolution:
///    relative drift <= 1e-5 over 20 sample times for the reference scenario.
fn criterion_8(report: &mut Report) {
    let alpha = C64::new(3.0, 0.0);
    let profile = tanh_profile(2.0, 10.0);
    let (r0, v0) = equilibrium_start(&profile).unwrap();
    let sol = solve_numeric(&profile, r0, v0, 6.0, 1e-10).unwrap();
    let spec = CatSpec::from_solution(alpha, 1.0, 2.0, 2.0, 10.0, 0, &sol).unwrap();
    let dim = auto_dim(alpha.norm(), 0.75);
    let expect = alpha.norm_sqr() + 0.5;
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let t = 6.0 * (k as f64 + 0.5) / 20.0;
        let out = evolve(alpha, &sol, spec.chi, t, dim).unwrap();
        let inv = lewis_invariant_expectation(&out);
        worst = worst.max((inv - expect).abs());
    }
    let rel = worst / expect;
    report.record(
        "8 (invariant conservation)",
        rel <= 1e-5,
        format!("max relative drift of <I> = {rel:.2e} over 20 times in [0, 6]"),
    );
}

/// 9. The exported curves show the reference features: a monotone step
///    frequency between the right plateaus, and a flat-then-oscillating rho
///    with the right number and spacing of dips.
fn criterion_9(report: &mut Report) {
    let mut passed = true;
    let mut details = Vec::new();
    for omega_f in [2.0, 3.0, 4.0] {
        let profile = tanh_profile(omega_f, 10.0);
        // Frequency curve: monotone, plateau to plateau.
        let mut mono = true;
        let mut prev = 0.0;
        for k in 0..=600 {
            let t = 6.0 * k as f64 / 600.0;
            let w = profile.omega_at(t).unwrap();
            if w + 1e-12 < prev {
                mono = false;
            }
            prev = w;
        }
        let starts = (profile.omega_at(0.0).unwrap() - 1.0).abs() < 1e-6;
        let ends = (profile.omega_at(6.0).unwrap() - omega_f).abs() < 1e-6;
        passed &= mono && starts && ends;

        // rho: flat before the switch, oscillating with period pi/omega_f after.
        let sol = solve_analytic_step(1.0, omega_f, 2.0, 10.0, 10.0, 2e-3).unwrap();
        let flat = sol
            .times
            .iter()
            .zip(&sol.rho)
            .filter(|(t, _)| **t <= 1.0)
            .map(|(_, r)| (r - 1.0).abs())
            .fold(0.0f64, f64::max);
        passed &= flat <= 1e-3;
        let minima = &sol.minima;
        let expected_count =
            ((10.0 - 2.0 - FRAC_PI_2 / omega_f) / (PI / omega_f)).floor() as i64 + 1;
        let count_ok = (minima.len() as i64 - expected_count).abs() <= 1;
        passed &= count_ok;
        if minima.len() >= 2 {
            let mut spacing = 0.0;
            for w in minima.windows(2) {
                spacing += w[1].t - w[0].t;
            }
            spacing /= (minima.len() - 1) as f64;
            let spacing_err = (spacing - PI / omega_f).abs() / (PI / omega_f);
            passed &= spacing_err <= 0.05;
            details.push(format!(
                "wf{omega_f:.0}: flat dev {flat:.1e}, {} dips (expect ~{expected_count}), spacing off by {:.1}%",
                minima.len(),
                100.0 * spacing_err
            ));
        } else {
            passed = false;
            details.push(format!("wf{omega_f:.0}: too few minima"));
        }
    }
    report.record("9 (figure-data reproduction)", passed, details.join("; "));
}

#[test]
fn acceptance_criteria() {
    let mut report = Report::new();
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    criterion_5(&mut report);
    criterion_6(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report);
    criterion_9(&mut report);
    report.finish();
}
