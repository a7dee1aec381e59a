//! Time-dependent cavity frequency profiles and their time integrals.
//!
//! The cavity frequency enters the dynamics squared, so every profile must be
//! strictly positive wherever it is evaluated. Profiles are immutable after
//! construction and all evaluation is pure.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrequencyError {
    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("steepness must be positive, got {0}")]
    NonPositiveSteepness(f64),
    #[error("tabulated profile needs at least 4 samples, got {0}")]
    TooFewSamples(usize),
    #[error("tabulated times must be strictly increasing (violation at index {0})")]
    NonIncreasingTimes(usize),
    #[error("time {t} outside tabulated range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },
    #[error("interpolated frequency is not positive at t = {t} (value {value})")]
    NonPositiveInterpolant { t: f64, value: f64 },
    #[error("integral bounds must satisfy t0 <= t1, got t0 = {t0}, t1 = {t1}")]
    ReversedBounds { t0: f64, t1: f64 },
    #[error("value is not finite")]
    NotFinite,
}

/// Cubic-Hermite tabulated frequency data.
///
/// Node slopes come from three-point finite differences, with one-sided
/// differences clamping the end intervals, so the interpolant is C^1.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedProfile {
    times: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl TabulatedProfile {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self, FrequencyError> {
        if times.len() < 4 || values.len() < 4 {
            return Err(FrequencyError::TooFewSamples(times.len().min(values.len())));
        }
        if times.len() != values.len() {
            return Err(FrequencyError::TooFewSamples(times.len().min(values.len())));
        }
        for (i, w) in times.windows(2).enumerate() {
            if !(w[1] > w[0]) {
                return Err(FrequencyError::NonIncreasingTimes(i + 1));
            }
        }
        if times.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(FrequencyError::NotFinite);
        }
        for &v in &values {
            if v <= 0.0 {
                return Err(FrequencyError::NonPositiveFrequency(v));
            }
        }
        let n = times.len();
        let mut slopes = vec![0.0; n];
        slopes[0] = (values[1] - values[0]) / (times[1] - times[0]);
        slopes[n - 1] = (values[n - 1] - values[n - 2]) / (times[n - 1] - times[n - 2]);
        for k in 1..n - 1 {
            slopes[k] = (values[k + 1] - values[k - 1]) / (times[k + 1] - times[k - 1]);
        }
        Ok(Self {
            times,
            values,
            slopes,
        })
    }

    pub fn t_min(&self) -> f64 {
        self.times[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn segment(&self, t: f64) -> Result<usize, FrequencyError> {
        let (lo, hi) = (self.t_min(), self.t_max());
        if t < lo || t > hi {
            return Err(FrequencyError::OutOfRange { t, lo, hi });
        }
        // partition_point returns the first index with time > t.
        let idx = self.times.partition_point(|&x| x <= t);
        Ok(idx.clamp(1, self.times.len() - 1) - 1)
    }

    fn eval(&self, t: f64) -> Result<f64, FrequencyError> {
        let k = self.segment(t)?;
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * m0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * m1;
        if value <= 0.0 {
            return Err(FrequencyError::NonPositiveInterpolant { t, value });
        }
        Ok(value)
    }

    fn eval_derivative(&self, t: f64) -> Result<f64, FrequencyError> {
        let k = self.segment(t)?;
        let h = self.times[k + 1] - self.times[k];
        let s = (t - self.times[k]) / h;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * h, self.slopes[k + 1] * h);
        let s2 = s * s;
        let d = (6.0 * s2 - 6.0 * s) * y0
            + (3.0 * s2 - 4.0 * s + 1.0) * m0
            + (-6.0 * s2 + 6.0 * s) * y1
            + (3.0 * s2 - 2.0 * s) * m1;
        Ok(d / h)
    }
}

/// The cavity frequency as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyProfile {
    /// Fixed frequency at all times.
    Constant { omega: f64 },
    /// Smooth step from `omega_i` to `omega_f` centered at `t_s`:
    /// `omega_i (1 + (delta / 2 omega_i)(1 + tanh(epsilon (t - t_s))))`.
    TanhStep {
        omega_i: f64,
        omega_f: f64,
        t_s: f64,
        epsilon: f64,
    },
    /// Sampled frequency data, interpolated by a C^1 piecewise cubic.
    Tabulated(TabulatedProfile),
}

impl FrequencyProfile {
    pub fn constant(omega: f64) -> Result<Self, FrequencyError> {
        if !omega.is_finite() {
            return Err(FrequencyError::NotFinite);
        }
        if omega <= 0.0 {
            return Err(FrequencyError::NonPositiveFrequency(omega));
        }
        Ok(Self::Constant { omega })
    }

    pub fn tanh_step(
        omega_i: f64,
        omega_f: f64,
        t_s: f64,
        epsilon: f64,
    ) -> Result<Self, FrequencyError> {
        if [omega_i, omega_f, t_s, epsilon]
            .iter()
            .any(|v| !v.is_finite())
        {
            return Err(FrequencyError::NotFinite);
        }
        if omega_i <= 0.0 {
            return Err(FrequencyError::NonPositiveFrequency(omega_i));
        }
        if omega_f <= 0.0 {
            return Err(FrequencyError::NonPositiveFrequency(omega_f));
        }
        if epsilon <= 0.0 {
            return Err(FrequencyError::NonPositiveSteepness(epsilon));
        }
        Ok(Self::TanhStep {
            omega_i,
            omega_f,
            t_s,
            epsilon,
        })
    }

    pub fn tabulated(times: Vec<f64>, values: Vec<f64>) -> Result<Self, FrequencyError> {
        Ok(Self::Tabulated(TabulatedProfile::new(times, values)?))
    }

    /// Frequency at time `t`.
    pub fn omega_at(&self, t: f64) -> Result<f64, FrequencyError> {
        match self {
            Self::Constant { omega } => Ok(*omega),
            Self::TanhStep {
                omega_i,
                omega_f,
                t_s,
                epsilon,
            } => {
                let delta = omega_f - omega_i;
                Ok(omega_i + 0.5 * delta * (1.0 + (epsilon * (t - t_s)).tanh()))
            }
            Self::Tabulated(tab) => tab.eval(t),
        }
    }

    /// Time derivative of the frequency at `t`.
    pub fn omega_dot_at(&self, t: f64) -> Result<f64, FrequencyError> {
        match self {
            Self::Constant { .. } => Ok(0.0),
            Self::TanhStep {
                omega_i,
                omega_f,
                t_s,
                epsilon,
            } => {
                let delta = omega_f - omega_i;
                let c = (epsilon * (t - t_s)).cosh();
                // sech^2 underflows to zero far from the step, which is exact enough.
                if c.is_infinite() {
                    return Ok(0.0);
                }
                Ok(0.5 * delta * epsilon / (c * c))
            }
            Self::Tabulated(tab) => tab.eval_derivative(t),
        }
    }

    /// Integral of the frequency over `[t0, t1]` by adaptive Gauss-Kronrod
    /// quadrature, absolute error at most 1e-10.
    ///
    /// The interval is pre-split at the profile's own feature points (the
    /// switch region for a tanh step, node times for tabulated data), since a
    /// feature much narrower than a panel is invisible to the error estimate.
    pub fn omega_integral(&self, t0: f64, t1: f64) -> Result<f64, FrequencyError> {
        if !(t0 <= t1) {
            return Err(FrequencyError::ReversedBounds { t0, t1 });
        }
        if t0 == t1 {
            return Ok(0.0);
        }
        if let Self::Constant { omega } = self {
            return Ok(omega * (t1 - t0));
        }
        let mut cuts = vec![t0];
        match self {
            Self::TanhStep { t_s, epsilon, .. } => {
                for k in [-64.0, -8.0, -1.0, 0.0, 1.0, 8.0, 64.0] {
                    let c = t_s + k / epsilon;
                    if c > t0 && c < t1 {
                        cuts.push(c);
                    }
                }
            }
            Self::Tabulated(tab) => {
                for &c in &tab.times {
                    if c > t0 && c < t1 {
                        cuts.push(c);
                    }
                }
            }
            Self::Constant { .. } => {}
        }
        cuts.push(t1);
        cuts.sort_by(f64::total_cmp);
        let piece_tol = 1.0e-10 / (cuts.len() - 1) as f64;
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            acc += adaptive_gauss_kronrod(&|t| self.omega_at(t), w[0], w[1], piece_tol)?;
        }
        Ok(acc)
    }

    /// Domain over which the profile may be evaluated, if bounded.
    pub fn domain(&self) -> Option<(f64, f64)> {
        match self {
            Self::Tabulated(tab) => Some((tab.t_min(), tab.t_max())),
            _ => None,
        }
    }
}

// 7-point Gauss / 15-point Kronrod pair on [-1, 1].
const KRONROD_NODES: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// One Gauss-Kronrod panel; returns (kronrod, |kronrod - gauss|).
fn gk15_panel<F>(f: &F, a: f64, b: f64) -> Result<(f64, f64), FrequencyError>
where
    F: Fn(f64) -> Result<f64, FrequencyError>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for (i, (&x, &wk)) in KRONROD_NODES.iter().zip(&KRONROD_WEIGHTS).enumerate() {
        if x == 0.0 {
            let fc = f(c)?;
            kronrod += wk * fc;
            gauss += GAUSS_WEIGHTS[3] * fc;
        } else {
            let fp = f(c + h * x)?;
            let fm = f(c - h * x)?;
            kronrod += wk * (fp + fm);
            // Odd Kronrod indices coincide with the embedded Gauss nodes.
            if i % 2 == 1 {
                gauss += GAUSS_WEIGHTS[i / 2] * (fp + fm);
            }
        }
    }
    Ok((kronrod * h, (kronrod - gauss).abs() * h))
}

/// Globally adaptive bisection quadrature on top of the GK15 panel.
pub(crate) fn adaptive_gauss_kronrod<F>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<f64, FrequencyError>
where
    F: Fn(f64) -> Result<f64, FrequencyError>,
{
    struct Seg {
        a: f64,
        b: f64,
        value: f64,
        err: f64,
    }
    let (value, err) = gk15_panel(f, a, b)?;
    let mut segs = vec![Seg { a, b, value, err }];
    let mut total_err: f64 = err;
    let mut rounds = 0usize;
    while total_err > abs_tol && rounds < 10_000 {
        let worst = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.err.total_cmp(&y.1.err))
            .map(|(i, _)| i)
            .unwrap();
        let Seg { a, b, err, .. } = segs.swap_remove(worst);
        total_err -= err;
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            // Interval is at floating-point resolution; keep its estimate.
            let (value, _) = gk15_panel(f, a, b)?;
            segs.push(Seg {
                a,
                b,
                value,
                err: 0.0,
            });
            continue;
        }
        for (lo, hi) in [(a, m), (m, b)] {
            let (value, err) = gk15_panel(f, lo, hi)?;
            total_err += err;
            segs.push(Seg {
                a: lo,
                b: hi,
                value,
                err,
            });
        }
        rounds += 1;
    }
    // Sum smallest-first for a deterministic, well-conditioned reduction.
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    Ok(segs.iter().map(|s| s.value).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_kronrod_constants_are_consistent() {
        let sum_k: f64 =
            KRONROD_WEIGHTS[..7].iter().map(|w| 2.0 * w).sum::<f64>() + KRONROD_WEIGHTS[7];
        let sum_g: f64 = GAUSS_WEIGHTS[..3].iter().map(|w| 2.0 * w).sum::<f64>() + GAUSS_WEIGHTS[3];
        assert!((sum_k - 2.0).abs() < 1e-13, "kronrod weights sum {sum_k}");
        assert!((sum_g - 2.0).abs() < 1e-13, "gauss weights sum {sum_g}");
        // GK15 integrates polynomials up to degree 22 exactly; check x^10 on [0,1].
        let exact = 1.0 / 11.0;
        let (v, _) = gk15_panel(&|x| Ok(x.powi(10)), 0.0, 1.0).unwrap();
        assert!((v - exact).abs() < 1e-15);
    }

    #[test]
    fn tanh_step_midpoint_is_mean_frequency() {
        let p = FrequencyProfile::tanh_step(1.0, 2.0, 2.0, 10.0).unwrap();
        assert_eq!(p.omega_at(2.0).unwrap(), 1.5);
    }

    #[test]
    fn tanh_step_limits() {
        let p = FrequencyProfile::tanh_step(1.0, 2.0, 2.0, 10.0).unwrap();
        assert!((p.omega_at(-1.0e6).unwrap() - 1.0).abs() < 1e-15);
        assert!((p.omega_at(1.0e6).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn constant_profile_is_identity() {
        let p = FrequencyProfile::constant(3.0).unwrap();
        for t in [-10.0, 0.0, 2.5, 1e8] {
            assert_eq!(p.omega_at(t).unwrap(), 3.0);
        }
    }

    #[test]
    fn tanh_step_matches_reported_curve_value() {
        // The omega_f = 4 curve sits within 1e-7 of its plateau one unit after the step.
        let p = FrequencyProfile::tanh_step(1.0, 4.0, 2.0, 10.0).unwrap();
        let w = p.omega_at(3.0).unwrap();
        assert!((w - 4.0).abs() < 1e-7, "omega(3) = {w}");
    }

    #[test]
    fn tanh_step_monotone_when_rising() {
        let p = FrequencyProfile::tanh_step(1.0, 3.0, 2.0, 10.0).unwrap();
        let mut prev = p.omega_at(-5.0).unwrap();
        for k in 1..=2000 {
            let t = -5.0 + 10.0 * k as f64 / 2000.0;
            let w = p.omega_at(t).unwrap();
            assert!(w >= prev, "not monotone at t = {t}");
            prev = w;
        }
    }

    #[test]
    fn integral_of_constant() {
        let p = FrequencyProfile::constant(2.0).unwrap();
        assert_eq!(p.omega_integral(0.0, 3.0).unwrap(), 6.0);
    }

    #[test]
    fn integral_of_sharp_step_approaches_ideal() {
        // With epsilon = 1e4 the post-step integral is omega_f (t1 - t_s)
        // minus an O(ln 2 / epsilon) switching correction.
        let p = FrequencyProfile::tanh_step(1.0, 2.0, 2.0, 1.0e4).unwrap();
        let val = p.omega_integral(2.0, 4.0).unwrap();
        assert!((val - 4.0).abs() < 1e-4, "integral {val}");
        // Closed form: (omega_i + delta/2)(t1 - t_s) + (delta / 2 eps) ln cosh(eps (t1 - t_s)).
        let eps = 1.0e4;
        let ln_cosh = 2.0 * eps - std::f64::consts::LN_2; // ln cosh x -> x - ln 2 for large x
        let exact = 1.5 * 2.0 + 0.5 / eps * ln_cosh;
        assert!(
            (val - exact).abs() < 1e-9,
            "vs closed form: {val} vs {exact}"
        );
    }

    #[test]
    fn integral_matches_brute_force_riemann_sum() {
        let p = FrequencyProfile::tanh_step(1.0, 2.0, 2.0, 10.0).unwrap();
        let val = p.omega_integral(0.0, 2.0).unwrap();
        // Midpoint Riemann sum with 1e7 panels, independent of the GK path.
        let n = 10_000_000usize;
        let h = 2.0 / n as f64;
        let mut acc = 0.0;
        for k in 0..n {
            let t = (k as f64 + 0.5) * h;
            acc += p.omega_at(t).unwrap();
        }
        acc *= h;
        assert!((val - acc).abs() < 1e-8, "gk {val} vs riemann {acc}");
    }

    #[test]
    fn integral_additivity() {
        let p = FrequencyProfile::tanh_step(1.0, 4.0, 2.0, 10.0).unwrap();
        let a = p.omega_integral(0.0, 1.7).unwrap();
        let b = p.omega_integral(1.7, 5.3).unwrap();
        let c = p.omega_integral(0.0, 5.3).unwrap();
        assert!((a + b - c).abs() < 1e-9);
    }

    #[test]
    fn integral_empty_interval_is_exactly_zero() {
        let p = FrequencyProfile::tanh_step(1.0, 4.0, 2.0, 10.0).unwrap();
        assert_eq!(p.omega_integral(2.3, 2.3).unwrap(), 0.0);
    }

    #[test]
    fn reversed_bounds_rejected() {
        let p = FrequencyProfile::constant(1.0).unwrap();
        assert!(matches!(
            p.omega_integral(1.0, 0.0),
            Err(FrequencyError::ReversedBounds { .. })
        ));
    }

    #[test]
    fn tabulated_requires_enough_increasing_positive_samples() {
        assert!(matches!(
            FrequencyProfile::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]),
            Err(FrequencyError::TooFewSamples(3))
        ));
        assert!(matches!(
            FrequencyProfile::tabulated(vec![0.0, 1.0, 1.0, 2.0], vec![1.0; 4]),
            Err(FrequencyError::NonIncreasingTimes(2))
        ));
        assert!(matches!(
            FrequencyProfile::tabulated(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 1.0, -0.5, 1.0]),
            Err(FrequencyError::NonPositiveFrequency(_))
        ));
    }

    #[test]
    fn tabulated_interpolates_nodes_and_stays_continuous() {
        let times = vec![0.0, 1.0, 2.0, 3.0, 4.0];
        let values = vec![1.0, 1.2, 1.8, 2.0, 2.0];
        let p = FrequencyProfile::tabulated(times.clone(), values.clone()).unwrap();
        for (t, v) in times.iter().zip(&values) {
            assert!((p.omega_at(*t).unwrap() - v).abs() < 1e-14);
        }
        let left = p.omega_at(2.0 - 1e-9).unwrap();
        let right = p.omega_at(2.0 + 1e-9).unwrap();
        assert!((left - right).abs() < 1e-7);
        assert!(matches!(
            p.omega_at(4.5),
            Err(FrequencyError::OutOfRange { .. })
        ));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]

        #[test]
        fn integral_additivity_property(
            a in 0.0..5.0f64,
            b in 0.0..5.0f64,
            c in 0.0..5.0f64,
            omega_f in 1.2..4.0f64,
        ) {
            let mut ts = [a, b, c];
            ts.sort_by(f64::total_cmp);
            let p = FrequencyProfile::tanh_step(1.0, omega_f, 2.0, 10.0).unwrap();
            let i1 = p.omega_integral(ts[0], ts[1]).unwrap();
            let i2 = p.omega_integral(ts[1], ts[2]).unwrap();
            let i3 = p.omega_integral(ts[0], ts[2]).unwrap();
            proptest::prop_assert!((i1 + i2 - i3).abs() < 1e-9);
        }

        #[test]
        fn integral_bounded_by_plateau_frequencies(
            t0 in 0.0..4.0f64,
            span in 0.01..4.0f64,
            omega_f in 1.2..4.0f64,
        ) {
            let p = FrequencyProfile::tanh_step(1.0, omega_f, 2.0, 10.0).unwrap();
            let val = p.omega_integral(t0, t0 + span).unwrap();
            proptest::prop_assert!(val >= span * 1.0 - 1e-9);
            proptest::prop_assert!(val <= span * omega_f + 1e-9);
        }
    }

    #[test]
    fn tabulated_interpolant_dipping_nonpositive_is_reported() {
        // A steep descent into a tiny value makes the cubic undershoot zero.
        let p = FrequencyProfile::tabulated(vec![0.0, 1.0, 2.0, 3.0], vec![1.0, 0.5, 0.01, 0.01])
            .unwrap();
        let mut saw_error = false;
        for k in 0..200 {
            let t = 2.0 + k as f64 / 200.0;
            if matches!(
                p.omega_at(t),
                Err(FrequencyError::NonPositiveInterpolant { .. })
            ) {
                saw_error = true;
                break;
            }
        }
        assert!(saw_error, "expected the undershoot to be caught");
    }
}
