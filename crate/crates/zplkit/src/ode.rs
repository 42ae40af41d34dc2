//! Explicit Dormand-Prince 5(4) integrator with dense output.
//!
//! Small fixed-dimension systems only; the state is `[f64; N]`. Dense output
//! uses the standard order-4 interpolant so sampled trajectories do not
//! depend on where the adaptive steps happen to land.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the step size; None leaves it to the controller.
    pub max_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: None,
            max_steps: 100_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// Row 7 doubles as the 5th-order weights (first-same-as-last).
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights for the order-4 interpolant.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn all_finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

fn axpy_stage<const N: usize>(y: &[f64; N], h: f64, coeffs: &[f64], k: &[[f64; N]]) -> [f64; N] {
    let mut out = *y;
    for (c, ki) in coeffs.iter().zip(k) {
        if *c == 0.0 {
            continue;
        }
        for i in 0..N {
            out[i] += h * c * ki[i];
        }
    }
    out
}

struct DenseStep<const N: usize> {
    t: f64,
    h: f64,
    rcont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let theta = (t - self.t) / self.h;
        let th1 = 1.0 - theta;
        let mut out = [0.0; N];
        for i in 0..N {
            let [r1, r2, r3, r4, r5] = [
                self.rcont[0][i],
                self.rcont[1][i],
                self.rcont[2][i],
                self.rcont[3][i],
                self.rcont[4][i],
            ];
            out[i] = r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
        }
        out
    }
}

/// Integrates y' = rhs(t, y) from `t0` and returns the state at each of the
/// requested `t_eval` times (which must be finite, non-decreasing, >= t0).
///
/// Fails with [`Error::Integration`] when the right-hand side goes non-finite,
/// the step size underflows, or the step budget runs out; with
/// [`Error::InvalidInput`] on a malformed evaluation grid or options.
pub fn integrate_dopri5<const N: usize, F>(
    rhs: F,
    t0: f64,
    y0: [f64; N],
    t_eval: &[f64],
    opts: &OdeOptions,
) -> Result<Vec<[f64; N]>>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !(opts.rtol.is_finite() && opts.rtol > 0.0 && opts.atol.is_finite() && opts.atol > 0.0) {
        return Err(Error::invalid("tolerances must be positive"));
    }
    if let Some(hm) = opts.max_step {
        if !hm.is_finite() || hm <= 0.0 {
            return Err(Error::invalid("max_step must be positive"));
        }
    }
    if !t0.is_finite() || !all_finite(&y0) {
        return Err(Error::invalid("initial state must be finite"));
    }
    let mut prev = t0;
    for &t in t_eval {
        if !t.is_finite() || t < prev {
            return Err(Error::invalid(
                "evaluation times must be finite, non-decreasing, and >= t0",
            ));
        }
        prev = t;
    }
    if t_eval.is_empty() {
        return Ok(Vec::new());
    }
    let t_end = *t_eval.last().unwrap();

    let mut out = Vec::with_capacity(t_eval.len());
    let mut eval_idx = 0;
    while eval_idx < t_eval.len() && t_eval[eval_idx] <= t0 {
        out.push(y0);
        eval_idx += 1;
    }
    if eval_idx == t_eval.len() {
        return Ok(out);
    }

    let scale = |y: &[f64; N], y2: &[f64; N], i: usize| {
        opts.atol + opts.rtol * y[i].abs().max(y2[i].abs())
    };

    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y);
    if !all_finite(&k1) {
        return Err(Error::Integration(
            "right-hand side is non-finite at the initial state".into(),
        ));
    }

    // Initial step: compare the state scale against the derivative scale,
    // then refine with one Euler probe.
    let mut h = {
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..N {
            let sc = opts.atol + opts.rtol * y[i].abs();
            d0 += (y[i] / sc).powi(2);
            d1 += (k1[i] / sc).powi(2);
        }
        d0 = (d0 / N as f64).sqrt();
        d1 = (d1 / N as f64).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        let y1 = axpy_stage(&y, h0, &[1.0], &[k1]);
        let f1 = rhs(t + h0, &y1);
        let mut d2: f64 = 0.0;
        if all_finite(&f1) {
            for i in 0..N {
                let sc = opts.atol + opts.rtol * y[i].abs();
                d2 += ((f1[i] - k1[i]) / sc).powi(2);
            }
            d2 = (d2 / N as f64).sqrt() / h0;
        }
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1)
    };
    h = h.min(t_end - t).max(f64::MIN_POSITIVE);
    if let Some(hm) = opts.max_step {
        h = h.min(hm);
    }

    let mut n_steps = 0;
    while t < t_end {
        if n_steps >= opts.max_steps {
            return Err(Error::Integration(format!(
                "step budget of {} exhausted at t = {t}",
                opts.max_steps
            )));
        }
        n_steps += 1;
        if h < 4.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Integration(format!("step size underflow at t = {t}")));
        }
        let h_try = h.min(t_end - t);

        let k2 = rhs(t + C[1] * h_try, &axpy_stage(&y, h_try, &A2, &[k1]));
        let k3 = rhs(t + C[2] * h_try, &axpy_stage(&y, h_try, &A3, &[k1, k2]));
        let k4 = rhs(t + C[3] * h_try, &axpy_stage(&y, h_try, &A4, &[k1, k2, k3]));
        let k5 = rhs(
            t + C[4] * h_try,
            &axpy_stage(&y, h_try, &A5, &[k1, k2, k3, k4]),
        );
        let k6 = rhs(
            t + C[5] * h_try,
            &axpy_stage(&y, h_try, &A6, &[k1, k2, k3, k4, k5]),
        );
        let y_new = axpy_stage(&y, h_try, &A7, &[k1, k2, k3, k4, k5, k6]);
        let k7 = rhs(t + h_try, &y_new);

        let ks = [k1, k2, k3, k4, k5, k6, k7];
        let finite = all_finite(&y_new) && ks.iter().all(all_finite);

        let err = if finite {
            let mut acc = 0.0;
            for i in 0..N {
                let mut e = 0.0;
                for (j, kj) in ks.iter().enumerate() {
                    e += E[j] * kj[i];
                }
                e *= h_try;
                let sc = scale(&y, &y_new, i);
                acc += (e / sc).powi(2);
            }
            (acc / N as f64).sqrt()
        } else {
            f64::INFINITY
        };

        if err <= 1.0 {
            // Accepted: build the interpolant before advancing.
            let mut rcont = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = y_new[i] - y[i];
                let bspl = h_try * k1[i] - ydiff;
                rcont[0][i] = y[i];
                rcont[1][i] = ydiff;
                rcont[2][i] = bspl;
                rcont[3][i] = ydiff - h_try * k7[i] - bspl;
                let mut d = 0.0;
                for (j, kj) in ks.iter().enumerate() {
                    d += D[j] * kj[i];
                }
                rcont[4][i] = h_try * d;
            }
            let dense = DenseStep {
                t,
                h: h_try,
                rcont,
            };
            let t_next = t + h_try;
            while eval_idx < t_eval.len() && t_eval[eval_idx] <= t_next {
                out.push(dense.eval(t_eval[eval_idx]));
                eval_idx += 1;
            }
            t = t_next;
            y = y_new;
            k1 = k7;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h = h_try * factor;
            if let Some(hm) = opts.max_step {
                h = h.min(hm);
            }
        } else if finite {
            h = h_try * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0).min(0.9);
        } else {
            h = h_try * 0.2;
        }
    }
    // Trailing evals exactly at t_end that the loop condition skipped.
    while eval_idx < t_eval.len() {
        out.push(y);
        eval_idx += 1;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_matches_closed_form() {
        let ts: Vec<f64> = (0..=40).map(|i| i as f64 * 0.25).collect();
        let ys =
            integrate_dopri5(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], &ts, &OdeOptions::default())
                .unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!(
                (y[0] - (-t).exp()).abs() < 1e-9,
                "t = {t}: {} vs {}",
                y[0],
                (-t).exp()
            );
        }
    }

    #[test]
    fn harmonic_oscillator_phase_and_energy() {
        let ts = [std::f64::consts::PI, 10.0];
        let ys = integrate_dopri5(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            &ts,
            &OdeOptions::default(),
        )
        .unwrap();
        assert!((ys[0][0] + 1.0).abs() < 1e-8, "cos(pi) = -1");
        assert!((ys[1][0] - (10.0_f64).cos()).abs() < 1e-8);
        assert!((ys[1][1] + (10.0_f64).sin()).abs() < 1e-8);
        let energy = ys[1][0].powi(2) + ys[1][1].powi(2);
        assert!((energy - 1.0).abs() < 1e-8);
    }

    #[test]
    fn dense_output_is_smooth_between_steps() {
        // Logistic growth has a closed form; sample far more finely than the
        // solver steps so most values come from the interpolant.
        let r = 2.0;
        let cap = 10.0;
        let y0 = 0.5;
        let ts: Vec<f64> = (0..=500).map(|i| i as f64 * 0.01).collect();
        let ys = integrate_dopri5(
            |_, y: &[f64; 1]| [r * y[0] * (1.0 - y[0] / cap)],
            0.0,
            [y0],
            &ts,
            &OdeOptions::default(),
        )
        .unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            let exact = cap / (1.0 + (cap / y0 - 1.0) * (-r * t).exp());
            assert!((y[0] - exact).abs() < 1e-7, "t = {t}");
        }
    }

    #[test]
    fn max_step_cap_is_respected_and_harmless() {
        let ts: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let free =
            integrate_dopri5(|_, y: &[f64; 1]| [-0.3 * y[0]], 0.0, [2.0], &ts, &OdeOptions::default())
                .unwrap();
        let capped = integrate_dopri5(
            |_, y: &[f64; 1]| [-0.3 * y[0]],
            0.0,
            [2.0],
            &ts,
            &OdeOptions {
                max_step: Some(0.05),
                ..OdeOptions::default()
            },
        )
        .unwrap();
        for (a, b) in free.iter().zip(&capped) {
            assert!((a[0] - b[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn eval_at_t0_returns_initial_state() {
        let ys = integrate_dopri5(
            |_, y: &[f64; 1]| [-y[0]],
            1.0,
            [3.0],
            &[1.0, 2.0],
            &OdeOptions::default(),
        )
        .unwrap();
        assert_eq!(ys[0], [3.0]);
        assert!((ys[1][0] - 3.0 * (-1.0_f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn non_finite_rhs_is_an_integration_error() {
        let res = integrate_dopri5(
            |t: f64, _: &[f64; 1]| [if t > 0.5 { f64::NAN } else { 1.0 }],
            0.0,
            [0.0],
            &[1.0],
            &OdeOptions::default(),
        );
        assert!(matches!(res, Err(Error::Integration(_))));
    }

    #[test]
    fn step_budget_is_enforced() {
        let res = integrate_dopri5(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            &[1000.0],
            &OdeOptions {
                max_steps: 3,
                ..OdeOptions::default()
            },
        );
        assert!(matches!(res, Err(Error::Integration(_))));
    }

    #[test]
    fn rejects_bad_eval_grid() {
        let opts = OdeOptions::default();
        let dec = integrate_dopri5(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], &[2.0, 1.0], &opts);
        assert!(matches!(dec, Err(Error::InvalidInput(_))));
        let before = integrate_dopri5(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], &[-1.0], &opts);
        assert!(matches!(before, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn empty_grid_is_empty_output() {
        let ys = integrate_dopri5(
            |_, y: &[f64; 1]| [-y[0]],
            0.0,
            [1.0],
            &[],
            &OdeOptions::default(),
        )
        .unwrap();
        assert!(ys.is_empty());
    }
}
