//! Dormand–Prince 5(4) pair with its fourth-order continuous extension.

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Result of one trial step.
pub(crate) struct Trial {
    pub y_new: Vec<f64>,
    pub k7: Vec<f64>,
    pub err: Vec<f64>,
    /// Continuous-extension coefficients, `5 · len` entries.
    pub dense: Vec<f64>,
}

fn combo(y: &[f64], h: f64, terms: &[(f64, &[f64])], out: &mut [f64]) {
    for i in 0..y.len() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] = y[i] + h * acc;
    }
}

/// One step from `(t, y)` with first stage `k1 = f(t, y)`.
pub(crate) fn step<F>(f: &mut F, t: f64, y: &[f64], k1: &[f64], h: f64) -> Trial
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y.len();
    let mut tmp = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut k5 = vec![0.0; n];
    let mut k6 = vec![0.0; n];
    let mut k7 = vec![0.0; n];

    combo(y, h, &[(A21, k1)], &mut tmp);
    f(t + C2 * h, &tmp, &mut k2);
    combo(y, h, &[(A31, k1), (A32, &k2)], &mut tmp);
    f(t + C3 * h, &tmp, &mut k3);
    combo(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)], &mut tmp);
    f(t + C4 * h, &tmp, &mut k4);
    combo(
        y,
        h,
        &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)],
        &mut tmp,
    );
    f(t + C5 * h, &tmp, &mut k5);
    combo(
        y,
        h,
        &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
        &mut tmp,
    );
    f(t + h, &tmp, &mut k6);
    let mut y_new = vec![0.0; n];
    combo(
        y,
        h,
        &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
        &mut y_new,
    );
    f(t + h, &y_new, &mut k7);

    let mut err = vec![0.0; n];
    let mut dense = vec![0.0; 5 * n];
    for i in 0..n {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let ydiff = y_new[i] - y[i];
        let bspl = h * k1[i] - ydiff;
        dense[i] = y[i];
        dense[n + i] = ydiff;
        dense[2 * n + i] = bspl;
        dense[3 * n + i] = ydiff - h * k7[i] - bspl;
        dense[4 * n + i] =
            h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Trial {
        y_new,
        k7,
        err,
        dense,
    }
}

/// Evaluates the continuous extension at `θ ∈ [0, 1]`.
pub(crate) fn dense_eval(coeffs: &[f64], n: usize, theta: f64, out: &mut [f64]) {
    let t1 = 1.0 - theta;
    for i in 0..n {
        let r = |j: usize| coeffs[j * n + i];
        out[i] = r(0) + theta * (r(1) + t1 * (r(2) + theta * (r(3) + t1 * r(4))));
    }
}

/// Time derivative of the continuous extension at `θ`, for a step of length `h`.
pub(crate) fn dense_derivative(coeffs: &[f64], n: usize, h: f64, theta: f64, out: &mut [f64]) {
    let th2 = theta * theta;
    for i in 0..n {
        let r = |j: usize| coeffs[j * n + i];
        let d = r(1)
            + (1.0 - 2.0 * theta) * r(2)
            + (2.0 * theta - 3.0 * th2) * r(3)
            + (2.0 * theta - 6.0 * th2 + 4.0 * th2 * theta) * r(4);
        out[i] = d / h;
    }
}

/// Weighted RMS norm of the error estimate.
pub(crate) fn error_norm(err: &[f64], y: &[f64], y_new: &[f64], tol: f64) -> f64 {
    let n = err.len() as f64;
    let s: f64 = err
        .iter()
        .zip(y.iter().zip(y_new))
        .map(|(e, (a, b))| {
            let sc = tol + tol * a.abs().max(b.abs());
            (e / sc) * (e / sc)
        })
        .sum();
    (s / n).sqrt()
}
