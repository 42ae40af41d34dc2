//! Damped least-squares engine with box bounds.
//!
//! The solver is a Levenberg-Marquardt iteration on the weighted cost
//! sum w_i r_i(p)^2. The damping factor starts at 1e-3, is divided by 10 on
//! every accepted step and multiplied by 10 on every rejected one, and scales
//! the diagonal of the normal matrix. Box bounds are enforced by projecting
//! each trial point onto the feasible box, so a clamped optimum converges
//! through the step-size criterion. Derivatives are numeric (central
//! differences; one-sided next to an active bound).
//!
//! Non-convergence is not an error: the returned report carries a status and
//! the best parameters seen. Callers decide what a non-converged fit means.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Convergence thresholds. A fit stops as soon as one criterion is met.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Largest relative parameter step considered stationary.
    pub step: f64,
    /// Largest cost-gradient component considered stationary.
    pub gradient: f64,
    /// Smallest relative cost decrease worth iterating on.
    pub cost: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            step: 1e-10,
            gradient: 1e-10,
            cost: 1e-12,
        }
    }
}

pub const DEFAULT_MAX_ITERS: usize = 500;

const LAMBDA_INIT: f64 = 1e-3;
const LAMBDA_MIN: f64 = 1e-15;
const LAMBDA_MAX: f64 = 1e12;

/// Outcome classification of a least-squares solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitStatus {
    /// A convergence criterion was met.
    Converged,
    /// The iteration budget ran out first.
    MaxIters,
    /// The Jacobian was rank-deficient at the solution; the covariance is a
    /// pseudo-inverse.
    Singular,
    /// The residual was non-finite at the start, or every damped trial step
    /// produced non-finite residuals.
    Invalid,
}

impl FitStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitStatus::Converged => "converged",
            FitStatus::MaxIters => "max_iters",
            FitStatus::Singular => "singular",
            FitStatus::Invalid => "invalid",
        }
    }
}

/// Result of a least-squares solve.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub params: Vec<f64>,
    /// Parameter covariance sigma^2 (J^T W J)^-1 with
    /// sigma^2 = weighted SSE / (m - n).
    pub covariance: DMatrix<f64>,
    /// sqrt of the weighted residual sum of squares at the solution.
    pub residual_norm: f64,
    pub iterations: usize,
    pub status: FitStatus,
}

impl FitReport {
    /// 1-sigma uncertainty of parameter `i`.
    pub fn sigma(&self, i: usize) -> f64 {
        self.covariance[(i, i)].max(0.0).sqrt()
    }
}

/// A weighted, optionally bounded least-squares problem over a residual
/// closure r(p).
pub struct FitProblem<'a> {
    residual: Box<dyn Fn(&[f64]) -> Vec<f64> + 'a>,
    initial: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    weights: Option<Vec<f64>>,
    max_iters: usize,
    tol: Tolerances,
}

impl<'a> FitProblem<'a> {
    pub fn new(initial: Vec<f64>, residual: impl Fn(&[f64]) -> Vec<f64> + 'a) -> Self {
        let n = initial.len();
        FitProblem {
            residual: Box::new(residual),
            initial,
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
            weights: None,
            max_iters: DEFAULT_MAX_ITERS,
            tol: Tolerances::default(),
        }
    }

    /// Box bounds, one pair per parameter. Infinities mean unbounded.
    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), self.initial.len(), "lower bound length");
        assert_eq!(upper.len(), self.initial.len(), "upper bound length");
        self.lower = lower;
        self.upper = upper;
        self
    }

    /// Per-residual weights multiplying the squared residuals.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Self {
        self.weights = Some(weights);
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters.max(1);
        self
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].max(lower[i]).min(upper[i]);
    }
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

fn weighted_sse(r: &[f64], w: Option<&[f64]>) -> f64 {
    match w {
        Some(w) => r.iter().zip(w).map(|(r, w)| w * r * r).sum(),
        None => r.iter().map(|r| r * r).sum(),
    }
}

/// Derivative step per parameter: max(1e-6 |p|, 1e-9).
fn fd_step(p: f64) -> f64 {
    (1e-6 * p.abs()).max(1e-9)
}

/// Numeric Jacobian of `residual` at `x` (m x n). Central differences where
/// both probes stay inside the box, one-sided next to an active bound.
/// Returns None if any probe produces a non-finite residual.
pub fn numeric_jacobian(
    residual: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    r0: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Option<DMatrix<f64>> {
    let n = x.len();
    let m = r0.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut probe = x.to_vec();
    for j in 0..n {
        let h = fd_step(x[j]);
        let up_ok = x[j] + h <= upper[j];
        let dn_ok = x[j] - h >= lower[j];
        let col: Vec<f64> = if up_ok && dn_ok {
            probe[j] = x[j] + h;
            let rp = residual(&probe);
            probe[j] = x[j] - h;
            let rm = residual(&probe);
            probe[j] = x[j];
            if !all_finite(&rp) || !all_finite(&rm) || rp.len() != m || rm.len() != m {
                return None;
            }
            rp.iter().zip(&rm).map(|(p, m)| (p - m) / (2.0 * h)).collect()
        } else {
            let (x1, sign) = if up_ok { (x[j] + h, 1.0) } else { (x[j] - h, -1.0) };
            probe[j] = x1;
            let r1 = residual(&probe);
            probe[j] = x[j];
            if !all_finite(&r1) || r1.len() != m {
                return None;
            }
            r1.iter().zip(r0).map(|(a, b)| sign * (a - b) / h).collect()
        };
        for i in 0..m {
            jac[(i, j)] = col[i];
        }
    }
    Some(jac)
}

/// Convenience wrapper for an unbounded Jacobian.
pub fn numeric_jacobian_unbounded(
    residual: &dyn Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
) -> Option<DMatrix<f64>> {
    let r0 = residual(x);
    let n = x.len();
    numeric_jacobian(
        residual,
        x,
        &r0,
        &vec![f64::NEG_INFINITY; n],
        &vec![f64::INFINITY; n],
    )
}

fn invalid_report(params: Vec<f64>, iterations: usize) -> FitReport {
    let n = params.len();
    FitReport {
        params,
        covariance: DMatrix::zeros(n, n),
        residual_norm: f64::NAN,
        iterations,
        status: FitStatus::Invalid,
    }
}

/// Solves the problem. See the module docs for the algorithm contract.
pub fn solve_lsq(problem: &FitProblem) -> FitReport {
    let n = problem.initial.len();
    let tol = problem.tol;
    let mut x = problem.initial.clone();
    clamp(&mut x, &problem.lower, &problem.upper);

    if n == 0 || !all_finite(&x) {
        return invalid_report(x, 0);
    }
    for i in 0..n {
        if problem.lower[i] > problem.upper[i] {
            return invalid_report(x, 0);
        }
    }

    let res = |p: &[f64]| (problem.residual)(p);
    let mut r = res(&x);
    let m = r.len();
    if m == 0 || !all_finite(&r) {
        return invalid_report(x, 0);
    }
    if let Some(w) = &problem.weights {
        if w.len() != m || w.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return invalid_report(x, 0);
        }
    }
    let weights = problem.weights.as_deref();
    let mut cost = weighted_sse(&r, weights);
    let mut lambda = LAMBDA_INIT;
    let mut status = FitStatus::MaxIters;
    let mut iterations = 0;

    'outer: for iter in 1..=problem.max_iters {
        iterations = iter;
        let jac = match numeric_jacobian(&res, &x, &r, &problem.lower, &problem.upper) {
            Some(j) => j,
            None => {
                status = FitStatus::Invalid;
                break;
            }
        };

        // Weighted normal equations: H delta = -g.
        let rv = DVector::from_column_slice(&r);
        let (h, g) = match weights {
            Some(w) => {
                let mut jw = jac.clone();
                for i in 0..m {
                    for j in 0..n {
                        jw[(i, j)] *= w[i];
                    }
                }
                (jac.transpose() * &jw, jac.transpose() * jw_apply(w, &rv))
            }
            None => (jac.transpose() * &jac, jac.transpose() * &rv),
        };

        if g.amax() < tol.gradient {
            status = FitStatus::Converged;
            break;
        }

        let max_diag = (0..n).map(|i| h[(i, i)]).fold(0.0_f64, f64::max);
        let damp_floor = (1e-12 * max_diag).max(1e-300);
        let diag: Vec<f64> = (0..n).map(|i| h[(i, i)].max(damp_floor)).collect();

        loop {
            let mut a = h.clone();
            for i in 0..n {
                a[(i, i)] += lambda * diag[i];
            }
            let trial = a.cholesky().map(|ch| ch.solve(&(-&g)));
            let mut accepted = false;
            if let Some(delta) = trial {
                let mut x_new: Vec<f64> = (0..n).map(|i| x[i] + delta[i]).collect();
                clamp(&mut x_new, &problem.lower, &problem.upper);
                let step: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                let r_new = res(&x_new);
                if r_new.len() == m && all_finite(&r_new) {
                    let cost_new = weighted_sse(&r_new, weights);
                    if cost_new <= cost {
                        let drop = cost - cost_new;
                        x = x_new;
                        r = r_new;
                        cost = cost_new;
                        lambda = (lambda / 10.0).max(LAMBDA_MIN);
                        accepted = true;
                        let rel_step = step
                            .iter()
                            .zip(&x)
                            .map(|(s, x)| s.abs() / x.abs().max(1.0))
                            .fold(0.0_f64, f64::max);
                        if rel_step < tol.step || drop <= tol.cost * cost.max(1.0) {
                            status = FitStatus::Converged;
                            break 'outer;
                        }
                    }
                }
            }
            if accepted {
                break;
            }
            lambda *= 10.0;
            if lambda > LAMBDA_MAX {
                // Fully damped steps no longer move the point: stationary.
                status = FitStatus::Converged;
                break 'outer;
            }
        }
    }

    // Covariance at the final point.
    let jac = numeric_jacobian(&res, &x, &r, &problem.lower, &problem.upper);
    let covariance = match jac {
        Some(jac) => {
            let h = match weights {
                Some(w) => {
                    let mut jw = jac.clone();
                    for i in 0..m {
                        for j in 0..n {
                            jw[(i, j)] *= w[i];
                        }
                    }
                    jac.transpose() * jw
                }
                None => jac.transpose() * &jac,
            };
            let sigma2 = cost / (m.saturating_sub(n)).max(1) as f64;
            let chol_inv = h.clone().cholesky().map(|c| c.inverse());
            let (inv, deficient) = match chol_inv {
                Some(inv) => (inv, false),
                None => {
                    let svd = h.svd(true, true);
                    let inv = svd
                        .pseudo_inverse(f64::EPSILON * m as f64)
                        .unwrap_or_else(|_| DMatrix::zeros(n, n));
                    (inv, true)
                }
            };
            if deficient && status == FitStatus::Converged {
                status = FitStatus::Singular;
            }
            let mut cov = inv * sigma2;
            // Symmetrize the floating-point remainder.
            for i in 0..n {
                for j in (i + 1)..n {
                    let s = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                    cov[(i, j)] = s;
                    cov[(j, i)] = s;
                }
            }
            cov
        }
        None => DMatrix::zeros(n, n),
    };

    FitReport {
        params: x,
        covariance,
        residual_norm: cost.sqrt(),
        iterations,
        status,
    }
}

fn jw_apply(w: &[f64], r: &DVector<f64>) -> DVector<f64> {
    DVector::from_iterator(r.len(), r.iter().zip(w).map(|(r, w)| r * w))
}

/// Closed-form weighted straight-line fit y = intercept + slope * x.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    /// Covariance of (intercept, slope), scaled by SSE/(n-2) when n > 2.
    pub covariance: [[f64; 2]; 2],
    /// Weighted residual sum of squares.
    pub wsse: f64,
}

/// Weighted linear regression. Weights multiply squared residuals; pass 1.0
/// for an ordinary fit. Errors when fewer than 2 points or when all x
/// coincide.
pub fn linear_fit_weighted(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() != ws.len() {
        return Err(Error::invalid("mismatched regression input lengths"));
    }
    if xs.len() < 2 {
        return Err(Error::insufficient(format!(
            "linear fit needs at least 2 points, got {}",
            xs.len()
        )));
    }
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for ((&x, &y), &w) in xs.iter().zip(ys).zip(ws) {
        if !x.is_finite() || !y.is_finite() || !w.is_finite() || w <= 0.0 {
            return Err(Error::domain("regression inputs must be finite, weights positive"));
        }
        s += w;
        sx += w * x;
        sy += w * y;
        sxx += w * x * x;
        sxy += w * x * y;
    }
    let det = s * sxx - sx * sx;
    if det.abs() <= f64::EPSILON * s * sxx {
        return Err(Error::domain("regression abscissae are degenerate"));
    }
    let slope = (s * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    let wsse: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((&x, &y), &w)| {
            let d = y - intercept - slope * x;
            w * d * d
        })
        .sum();
    let dof = xs.len().saturating_sub(2).max(1) as f64;
    let sigma2 = if xs.len() > 2 { wsse / dof } else { 0.0 };
    let covariance = [
        [sigma2 * sxx / det, -sigma2 * sx / det],
        [-sigma2 * sx / det, sigma2 * s / det],
    ];
    Ok(LinearFit {
        intercept,
        slope,
        covariance,
        wsse,
    })
}
