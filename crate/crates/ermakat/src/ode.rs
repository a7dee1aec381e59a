//! Embedded Runge-Kutta 5(4) integrator (Dormand-Prince pair) with
//! proportional-integral step control, used by the Ermakov solver.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t_last} (h = {h})")]
    StepSizeUnderflow { t_last: f64, h: f64 },
    #[error("right-hand side evaluation failed at t = {t}: {message}")]
    RhsFailure { t: f64, message: String },
}

/// One accepted node: time, state, and the state derivative there.
#[derive(Debug, Clone, Copy)]
pub struct Node<const D: usize> {
    pub t: f64,
    pub y: [f64; D],
    pub dy: [f64; D],
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate `y' = f(t, y)` from `t0` to `t_end`, returning every accepted
/// node. The local error per step is kept below roughly
/// `tol * (1 + |y|)` componentwise; `h_max` caps the step so the output mesh
/// stays dense enough for interpolation.
pub fn integrate<const D: usize, F>(
    mut rhs: F,
    t0: f64,
    y0: [f64; D],
    t_end: f64,
    tol: f64,
    h_max: f64,
) -> Result<Vec<Node<D>>, OdeError>
where
    F: FnMut(f64, &[f64; D]) -> Result<[f64; D], String>,
{
    let eval = |rhs: &mut F, t: f64, y: &[f64; D]| -> Result<[f64; D], OdeError> {
        rhs(t, y).map_err(|message| OdeError::RhsFailure { t, message })
    };

    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0;
    let mut dy = eval(&mut rhs, t, &y)?;
    let mut nodes = Vec::with_capacity((span / h_max).ceil() as usize + 8);
    nodes.push(Node { t, y, dy });

    let mut h = (span / 100.0).min(h_max).max(1e-8);
    let mut err_prev: f64 = 1.0;
    let mut k = [[0.0; D]; 7];

    while t < t_end {
        if t + h > t_end {
            h = t_end - t;
        }
        if h < 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepSizeUnderflow { t_last: t, h });
        }

        k[0] = dy; // FSAL: reuse the derivative at the step start
        for s in 1..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for d in 0..D {
                        ys[d] += h * a * kj[d];
                    }
                }
            }
            k[s] = eval(&mut rhs, t + C[s] * h, &ys)?;
        }

        let mut y5 = y;
        let mut err_vec = [0.0; D];
        for (s, ks) in k.iter().enumerate() {
            let db = B5[s] - B4[s];
            for d in 0..D {
                y5[d] += h * B5[s] * ks[d];
                err_vec[d] += h * db * ks[d];
            }
        }
        let mut err: f64 = 0.0;
        for d in 0..D {
            let scale = tol * (1.0 + y[d].abs().max(y5[d].abs()));
            err += (err_vec[d] / scale).powi(2);
        }
        err = (err / D as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y = y5;
            dy = k[6]; // the last stage is f(t + h, y5)
            nodes.push(Node { t, y, dy });
            // PI controller exponents for a 5th-order pair.
            let fac = 0.9 * err.max(1e-10).powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0);
            err_prev = err.max(1e-10);
            h = (h * fac.clamp(0.2, 5.0)).min(h_max);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
        }
    }

    Ok(nodes)
}
