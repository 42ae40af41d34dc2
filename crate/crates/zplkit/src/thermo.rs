//! Temperature and pump-power dependence of emission lines.
//!
//! Covers the power-law lattice shift of the zero-phonon energy, two-channel
//! thermal quenching of the integrated intensity, Arrhenius behavior of
//! intensity ratios, and pump saturation.

use crate::fit::{linear_fit_weighted, solve_lsq, FitProblem, FitReport, FitStatus};
use crate::units::CODATA_2018;
use crate::{Error, Result};
use nalgebra::DMatrix;

/// Parameters of the thermal line-shift model
/// E(T) = E0 - (alpha theta / 2p) (2T / theta)^p.
///
/// `alpha` is the magnitude of the high-temperature slope dE/dT in eV/K,
/// `theta` an effective phonon temperature in K, and `p` the shape exponent
/// (p >= 1; p near 2 corresponds to a quadratic low-temperature onset).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PasslerParams {
    pub e0_ev: f64,
    pub alpha_ev_per_k: f64,
    pub theta_k: f64,
    pub p: f64,
}

impl PasslerParams {
    pub fn validate(&self) -> Result<()> {
        if !self.e0_ev.is_finite() {
            return Err(Error::invalid("E0 must be finite"));
        }
        if !self.alpha_ev_per_k.is_finite() || self.alpha_ev_per_k <= 0.0 {
            return Err(Error::invalid("alpha must be positive"));
        }
        if !self.theta_k.is_finite() || self.theta_k <= 0.0 {
            return Err(Error::invalid("theta must be positive"));
        }
        if !self.p.is_finite() || self.p < 1.0 {
            return Err(Error::invalid("exponent p must be >= 1"));
        }
        Ok(())
    }
}

/// Redshift coefficient A of the equivalent form E(T) = E0 - A T^p, i.e.
/// A = (alpha theta / 2p) (2 / theta)^p.
pub fn passler_coefficient(params: &PasslerParams) -> Result<f64> {
    params.validate()?;
    let PasslerParams {
        alpha_ev_per_k: alpha,
        theta_k: theta,
        p,
        ..
    } = *params;
    Ok(alpha * theta / (2.0 * p) * (2.0 / theta).powf(p))
}

/// E0 - A T^p, the coefficient form of the shift model. Kept as a separate
/// code path so the algebraic equivalence with [`passler_energy`] can be
/// checked rather than assumed.
pub fn passler_energy_from_coefficient(e0_ev: f64, a: f64, p: f64, t_k: f64) -> f64 {
    e0_ev - a * t_k.powf(p)
}

/// Zero-phonon energy at temperature `t_k` under the power-law shift model.
pub fn passler_energy(params: &PasslerParams, t_k: f64) -> Result<f64> {
    params.validate()?;
    if !t_k.is_finite() || t_k < 0.0 {
        return Err(Error::domain(format!("temperature must be >= 0, got {t_k}")));
    }
    let PasslerParams {
        e0_ev,
        alpha_ev_per_k: alpha,
        theta_k: theta,
        p,
    } = *params;
    Ok(e0_ev - alpha * theta / (2.0 * p) * (2.0 * t_k / theta).powf(p))
}

/// The saturating variant E(T) = E0 - (alpha theta / 2) [ (1 + (2T/theta)^p)^(1/p) - 1 ],
/// which reduces to the power law for 2T << theta and approaches the linear
/// asymptote E0 + alpha theta / 2 - alpha T at high temperature.
pub fn passler_energy_full(params: &PasslerParams, t_k: f64) -> Result<f64> {
    params.validate()?;
    if !t_k.is_finite() || t_k < 0.0 {
        return Err(Error::domain(format!("temperature must be >= 0, got {t_k}")));
    }
    let PasslerParams {
        e0_ev,
        alpha_ev_per_k: alpha,
        theta_k: theta,
        p,
    } = *params;
    let x = (2.0 * t_k / theta).powf(p);
    Ok(e0_ev - alpha * theta / 2.0 * ((1.0 + x).powf(1.0 / p) - 1.0))
}

#[derive(Debug, Clone, Copy)]
pub struct PasslerFit {
    pub params: PasslerParams,
    pub e0_sigma: f64,
    pub alpha_sigma: f64,
    pub p_sigma: f64,
    pub report_status: FitStatus,
}

/// Fits (E0, alpha, p) to (T, E) points with `theta_k` held fixed.
///
/// Needs at least 4 points spanning at least 20 K. Returns the full solver
/// report alongside the named parameters.
pub fn fit_passler(points: &[(f64, f64)], theta_k: f64) -> Result<(PasslerFit, FitReport)> {
    if points.len() < 4 {
        return Err(Error::insufficient(format!(
            "shift fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    if !theta_k.is_finite() || theta_k <= 0.0 {
        return Err(Error::domain("theta must be positive"));
    }
    let mut t_min = f64::INFINITY;
    let mut t_max = f64::NEG_INFINITY;
    for &(t, e) in points {
        if !t.is_finite() || t < 0.0 || !e.is_finite() {
            return Err(Error::domain(format!("invalid point ({t} K, {e} eV)")));
        }
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    }
    if t_max - t_min < 20.0 {
        return Err(Error::insufficient(format!(
            "temperature span {:.3} K is too small to constrain the exponent; need 20 K",
            t_max - t_min
        )));
    }

    let e_at_tmin = points
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|&(_, e)| e)
        .unwrap();
    let e_at_tmax = points
        .iter()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|&(_, e)| e)
        .unwrap();
    let p_init = 2.0;
    let drop = (e_at_tmin - e_at_tmax).max(1e-9);
    // Invert the model at t_max for the initial slope magnitude.
    let alpha_init =
        (drop * 2.0 * p_init / theta_k / (2.0 * t_max / theta_k).powf(p_init)).max(1e-9);
    let init = vec![e_at_tmin, alpha_init, p_init];

    let problem = FitProblem::new(init, |q: &[f64]| {
        let (e0, alpha, p) = (q[0], q[1], q[2]);
        points
            .iter()
            .map(|&(t, e)| {
                e0 - alpha * theta_k / (2.0 * p) * (2.0 * t / theta_k).powf(p) - e
            })
            .collect()
    })
    .with_bounds(
        vec![f64::NEG_INFINITY, 1e-12, 1.0],
        vec![f64::INFINITY, 1.0, 6.0],
    );
    let report = solve_lsq(&problem);
    let fit = PasslerFit {
        params: PasslerParams {
            e0_ev: report.params[0],
            alpha_ev_per_k: report.params[1],
            theta_k,
            p: report.params[2],
        },
        e0_sigma: report.sigma(0),
        alpha_sigma: report.sigma(1),
        p_sigma: report.sigma(2),
        report_status: report.status,
    };
    Ok((fit, report))
}

/// Two-channel thermal quenching:
/// I(T) = I0 / (1 + A exp(-E1 / kT) + B T^(3/2) exp(-E2 / kT)).
///
/// `a` is dimensionless, `b` carries K^(-3/2). E1 is the shallow activation
/// energy, E2 the deep one; both in eV with 0 < E1 < E2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchParams {
    pub i0: f64,
    pub a: f64,
    pub b: f64,
    pub e1_ev: f64,
    pub e2_ev: f64,
}

impl QuenchParams {
    pub fn validate(&self) -> Result<()> {
        if !self.i0.is_finite() || self.i0 <= 0.0 {
            return Err(Error::invalid("I0 must be positive"));
        }
        if !self.a.is_finite() || self.a < 0.0 || !self.b.is_finite() || self.b < 0.0 {
            return Err(Error::invalid("quench prefactors must be >= 0"));
        }
        if !self.e1_ev.is_finite()
            || !self.e2_ev.is_finite()
            || self.e1_ev <= 0.0
            || self.e2_ev <= self.e1_ev
        {
            return Err(Error::invalid("activation energies must satisfy 0 < E1 < E2"));
        }
        Ok(())
    }
}

/// Quenched intensity at `t_k` (strictly positive temperature). Monotone
/// decreasing in T whenever a + b > 0, and bounded above by I0.
pub fn quench_intensity(params: &QuenchParams, t_k: f64) -> Result<f64> {
    params.validate()?;
    if !t_k.is_finite() || t_k <= 0.0 {
        return Err(Error::domain(format!("temperature must be > 0, got {t_k}")));
    }
    let kt = CODATA_2018.k_b * t_k;
    let denom = 1.0
        + params.a * (-params.e1_ev / kt).exp()
        + params.b * t_k.powf(1.5) * (-params.e2_ev / kt).exp();
    Ok(params.i0 / denom)
}

/// Whether the deep activation energy E2 is fitted or held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum E2Mode {
    Fixed(f64),
    Free,
}

#[derive(Debug, Clone, Copy)]
pub struct QuenchFit {
    pub params: QuenchParams,
    pub i0_sigma: f64,
    pub a_sigma: f64,
    pub b_sigma: f64,
    /// Zero when E2 was held fixed.
    pub e2_sigma: f64,
}

fn quench_residuals(
    points: &[(f64, f64)],
    e1: f64,
    q: &[f64],
    e2_fixed: Option<f64>,
) -> Vec<f64> {
    let (i0, a, b) = (q[0], q[1], q[2]);
    let e2 = e2_fixed.unwrap_or_else(|| q[3]);
    points
        .iter()
        .map(|&(t, y)| {
            let kt = CODATA_2018.k_b * t;
            let denom = 1.0 + a * (-e1 / kt).exp() + b * t.powf(1.5) * (-e2 / kt).exp();
            i0 / denom - y
        })
        .collect()
}

/// Fits (I0, A, B) and optionally E2 to (T, I) points with E1 held fixed.
///
/// Needs at least 5 points with positive temperatures and intensities. In
/// `E2Mode::Free` the solver is started from a coarse grid of E2 guesses and
/// the lowest-cost solution wins, which keeps the result deterministic.
pub fn fit_quench(
    points: &[(f64, f64)],
    e1_ev: f64,
    e2_mode: E2Mode,
) -> Result<(QuenchFit, FitReport)> {
    if points.len() < 5 {
        return Err(Error::insufficient(format!(
            "quench fit needs at least 5 points, got {}",
            points.len()
        )));
    }
    if !e1_ev.is_finite() || e1_ev <= 0.0 {
        return Err(Error::domain("E1 must be positive"));
    }
    for &(t, y) in points {
        if !t.is_finite() || t <= 0.0 || !y.is_finite() || y <= 0.0 {
            return Err(Error::domain(format!("invalid point ({t} K, {y})")));
        }
    }
    if let E2Mode::Fixed(e2) = e2_mode {
        if !e2.is_finite() || e2 <= e1_ev {
            return Err(Error::domain("fixed E2 must exceed E1"));
        }
    }

    let y_max = points.iter().map(|&(_, y)| y).fold(0.0_f64, f64::max);
    let (t_lo, y_lo) = points
        .iter()
        .copied()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    let (t_hi, y_hi) = points
        .iter()
        .copied()
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();

    let seed = |e2: f64| -> Vec<f64> {
        let i0 = 1.02 * y_max;
        let kt_lo = CODATA_2018.k_b * t_lo;
        let a = ((i0 / y_lo - 1.0) / (-e1_ev / kt_lo).exp()).clamp(0.0, 1e6);
        let kt_hi = CODATA_2018.k_b * t_hi;
        let rest = (i0 / y_hi - 1.0 - a * (-e1_ev / kt_hi).exp()).max(1e-6);
        let b = (rest / (t_hi.powf(1.5) * (-e2 / kt_hi).exp())).clamp(0.0, 1e9);
        vec![i0, a, b]
    };

    let solve_at = |e2_fixed: Option<f64>, e2_init: f64| -> FitReport {
        let mut init = seed(e2_init);
        let mut lo = vec![1e-12 * y_max, 0.0, 0.0];
        let mut hi = vec![1e6 * y_max, 1e12, 1e12];
        if e2_fixed.is_none() {
            init.push(e2_init);
            lo.push(e1_ev * (1.0 + 1e-6));
            hi.push(1.0);
        }
        let problem = FitProblem::new(init, |q: &[f64]| {
            quench_residuals(points, e1_ev, q, e2_fixed)
        })
        .with_bounds(lo, hi);
        solve_lsq(&problem)
    };

    let report = match e2_mode {
        E2Mode::Fixed(e2) => solve_at(Some(e2), e2),
        E2Mode::Free => {
            // Deterministic multistart over physically plausible E2 decades.
            let mut best: Option<FitReport> = None;
            for e2_init in [1e-3, 3e-3, 1e-2, 3e-2] {
                if e2_init <= e1_ev {
                    continue;
                }
                let r = solve_at(None, e2_init);
                let better = match &best {
                    None => true,
                    Some(b) => {
                        r.status == FitStatus::Converged && r.residual_norm < b.residual_norm
                            || b.status != FitStatus::Converged
                    }
                };
                if better {
                    best = Some(r);
                }
            }
            best.ok_or_else(|| Error::domain("no valid E2 start exceeds E1"))?
        }
    };

    let e2_fitted = match e2_mode {
        E2Mode::Fixed(e2) => e2,
        E2Mode::Free => report.params[3],
    };
    let fit = QuenchFit {
        params: QuenchParams {
            i0: report.params[0],
            a: report.params[1],
            b: report.params[2],
            e1_ev,
            e2_ev: e2_fitted,
        },
        i0_sigma: report.sigma(0),
        a_sigma: report.sigma(1),
        b_sigma: report.sigma(2),
        e2_sigma: match e2_mode {
            E2Mode::Fixed(_) => 0.0,
            E2Mode::Free => report.sigma(3),
        },
    };
    Ok((fit, report))
}

#[derive(Debug, Clone, Copy)]
pub struct ActivationFit {
    /// Ratio prefactor, the T -> infinity asymptote.
    pub r0: f64,
    /// Activation energy in eV.
    pub ea_ev: f64,
    pub r0_sigma: f64,
    pub ea_sigma: f64,
}

/// Fits r(T) = r0 exp(-Ea / kT) by linear regression of ln r against 1/T.
///
/// Needs at least 2 points with distinct positive temperatures and positive
/// ratios; two points recover the closed form exactly. The returned report
/// expresses the covariance in (r0, Ea) units.
pub fn fit_ratio_activation(points: &[(f64, f64)]) -> Result<(ActivationFit, FitReport)> {
    if points.len() < 2 {
        return Err(Error::insufficient(format!(
            "activation fit needs at least 2 points, got {}",
            points.len()
        )));
    }
    for &(t, r) in points {
        if !t.is_finite() || t <= 0.0 {
            return Err(Error::domain(format!("temperature must be > 0, got {t}")));
        }
        if !r.is_finite() || r <= 0.0 {
            return Err(Error::domain(format!("ratio must be > 0, got {r}")));
        }
    }
    let xs: Vec<f64> = points.iter().map(|&(t, _)| 1.0 / t).collect();
    let ys: Vec<f64> = points.iter().map(|&(_, r)| r.ln()).collect();
    let ws = vec![1.0; xs.len()];
    let lin = linear_fit_weighted(&xs, &ys, &ws)?;

    let k_b = CODATA_2018.k_b;
    let r0 = lin.intercept.exp();
    let ea = -lin.slope * k_b;
    // Delta method: (r0, Ea) = (exp(c), -kB m).
    let c = lin.covariance;
    let cov = DMatrix::from_row_slice(
        2,
        2,
        &[
            r0 * r0 * c[0][0],
            -r0 * k_b * c[0][1],
            -r0 * k_b * c[1][0],
            k_b * k_b * c[1][1],
        ],
    );
    let report = FitReport {
        params: vec![r0, ea],
        covariance: cov,
        residual_norm: lin.wsse.sqrt(),
        iterations: 1,
        status: FitStatus::Converged,
    };
    let fit = ActivationFit {
        r0,
        ea_ev: ea,
        r0_sigma: report.sigma(0),
        ea_sigma: report.sigma(1),
    };
    Ok((fit, report))
}

/// Pump saturation parameters for I(P) = I_inf P / (P + P_sat).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationParams {
    pub i_inf: f64,
    pub p_sat_w_cm2: f64,
}

impl SaturationParams {
    pub fn validate(&self) -> Result<()> {
        if !self.i_inf.is_finite() || self.i_inf <= 0.0 {
            return Err(Error::invalid("I_inf must be positive"));
        }
        if !self.p_sat_w_cm2.is_finite() || self.p_sat_w_cm2 <= 0.0 {
            return Err(Error::invalid("P_sat must be positive"));
        }
        Ok(())
    }
}

/// Saturation curve value at pump intensity `p_w_cm2` >= 0. At P = P_sat the
/// emission reaches half of I_inf.
pub fn saturation_intensity(params: &SaturationParams, p_w_cm2: f64) -> Result<f64> {
    params.validate()?;
    if !p_w_cm2.is_finite() || p_w_cm2 < 0.0 {
        return Err(Error::domain(format!(
            "pump intensity must be >= 0, got {p_w_cm2}"
        )));
    }
    Ok(params.i_inf * p_w_cm2 / (p_w_cm2 + params.p_sat_w_cm2))
}

#[derive(Debug, Clone, Copy)]
pub struct SaturationFit {
    pub params: SaturationParams,
    pub i_inf_sigma: f64,
    pub p_sat_sigma: f64,
}

/// Fits (I_inf, P_sat) to (P, I) points. Needs at least 3 points with
/// positive pump intensities.
pub fn fit_saturation(points: &[(f64, f64)]) -> Result<(SaturationFit, FitReport)> {
    if points.len() < 3 {
        return Err(Error::insufficient(format!(
            "saturation fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    for &(p, y) in points {
        if !p.is_finite() || p <= 0.0 || !y.is_finite() || y < 0.0 {
            return Err(Error::domain(format!("invalid point ({p} W/cm^2, {y})")));
        }
    }
    let y_max = points.iter().map(|&(_, y)| y).fold(0.0_f64, f64::max);
    if y_max <= 0.0 {
        return Err(Error::domain("all intensities are zero"));
    }
    let i_inf_init = 1.2 * y_max;
    let mut sorted: Vec<(f64, f64)> = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5 * i_inf_init;
    let p_sat_init = sorted
        .iter()
        .find(|&&(_, y)| y >= half)
        .map(|&(p, _)| p)
        .unwrap_or(sorted[sorted.len() / 2].0);

    let problem = FitProblem::new(vec![i_inf_init, p_sat_init], |q: &[f64]| {
        points
            .iter()
            .map(|&(p, y)| q[0] * p / (p + q[1]) - y)
            .collect()
    })
    .with_bounds(vec![1e-12 * y_max, 1e-12], vec![1e6 * y_max, 1e12]);
    let report = solve_lsq(&problem);
    let fit = SaturationFit {
        params: SaturationParams {
            i_inf: report.params[0],
            p_sat_w_cm2: report.params[1],
        },
        i_inf_sigma: report.sigma(0),
        p_sat_sigma: report.sigma(1),
    };
    Ok((fit, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    const KB: f64 = CODATA_2018.k_b;

    #[test]
    fn shift_model_fixed_points() {
        // At T = 0 the energy is exactly E0, for both forms.
        let p = PasslerParams {
            e0_ev: 0.9357,
            alpha_ev_per_k: 295e-6,
            theta_k: 406.0,
            p: 2.36,
        };
        assert_eq!(passler_energy(&p, 0.0).unwrap(), 0.9357);
        assert_eq!(passler_energy_full(&p, 0.0).unwrap(), 0.9357);
    }

    #[test]
    fn silicon_band_edge_redshift_at_40k() {
        // alpha = 318 ueV/K, theta = 406 K, p = 2.33 gives a 0.63 meV
        // redshift at 40 K (frozen from a high-precision evaluation).
        let p = PasslerParams {
            e0_ev: 1.17,
            alpha_ev_per_k: 318e-6,
            theta_k: 406.0,
            p: 2.33,
        };
        let shift = 1.17 - passler_energy(&p, 40.0).unwrap();
        assert!((shift - 0.629_363_059_415e-3).abs() < 1e-12);
    }

    #[test]
    fn shallow_exponent_redshift_at_30k() {
        // alpha = 16.8 ueV/K, p = 1.23: 0.264 meV at 30 K.
        let p = PasslerParams {
            e0_ev: 0.944296,
            alpha_ev_per_k: 16.8e-6,
            theta_k: 406.0,
            p: 1.23,
        };
        let shift = 0.944296 - passler_energy(&p, 30.0).unwrap();
        assert!((shift - 0.263_960_671_72e-3).abs() < 1e-12);
    }

    #[test]
    fn power_law_and_coefficient_forms_agree() {
        let p = PasslerParams {
            e0_ev: 0.93566,
            alpha_ev_per_k: 295e-6,
            theta_k: 406.0,
            p: 2.36,
        };
        let a = passler_coefficient(&p).unwrap();
        let mut t = 1.0;
        while t <= 50.0 {
            let e1 = passler_energy(&p, t).unwrap();
            let e2 = passler_energy_from_coefficient(p.e0_ev, a, p.p, t);
            assert!((e1 - e2).abs() < 1e-12 * p.e0_ev.abs());
            t += 0.5;
        }
    }

    #[test]
    fn full_form_reduces_to_power_law_at_low_t() {
        let p = PasslerParams {
            e0_ev: 0.9357,
            alpha_ev_per_k: 295e-6,
            theta_k: 406.0,
            p: 2.36,
        };
        // At 2T/theta = 0.025 the correction term is (x^p)/p-th order small.
        let e_pow = passler_energy(&p, 5.0).unwrap();
        let e_full = passler_energy_full(&p, 5.0).unwrap();
        assert!((e_pow - e_full).abs() < 1e-9);
        // At high T the full form bends toward the linear asymptote and must
        // sit above the unbounded power law.
        assert!(
            passler_energy_full(&p, 300.0).unwrap() > passler_energy(&p, 300.0).unwrap()
        );
    }

    #[test]
    fn shift_fit_round_trip_noiseless() {
        let truth = PasslerParams {
            e0_ev: 0.93566,
            alpha_ev_per_k: 295e-6,
            theta_k: 406.0,
            p: 2.36,
        };
        let points: Vec<(f64, f64)> = [4.5, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0]
            .iter()
            .map(|&t| (t, passler_energy(&truth, t).unwrap()))
            .collect();
        let (fit, report) = fit_passler(&points, 406.0).unwrap();
        assert_eq!(report.status, FitStatus::Converged);
        assert!((fit.params.e0_ev - truth.e0_ev).abs() < 1e-9);
        assert!((fit.params.alpha_ev_per_k - truth.alpha_ev_per_k).abs() / truth.alpha_ev_per_k < 1e-4);
        assert!((fit.params.p - truth.p).abs() < 1e-3);
    }

    #[test]
    fn shift_fit_preconditions() {
        let two = [(4.0, 0.9), (30.0, 0.89)];
        assert!(matches!(
            fit_passler(&two, 406.0),
            Err(Error::InsufficientData(_))
        ));
        let narrow: Vec<(f64, f64)> = (0..6).map(|i| (4.0 + i as f64, 0.9)).collect();
        assert!(matches!(
            fit_passler(&narrow, 406.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn quench_matches_high_precision_value() {
        // Frozen from a 50-digit evaluation of the closed form.
        let q = QuenchParams {
            i0: 1.0,
            a: 10.0,
            b: 5.0,
            e1_ev: 1.75e-3,
            e2_ev: 22.5e-3,
        };
        let v = quench_intensity(&q, 20.0).unwrap();
        assert!(((v - 0.216_284_091_972_865_67) / v).abs() < 1e-14);
    }

    #[test]
    fn quench_trivial_and_monotone() {
        let flat = QuenchParams {
            i0: 2.5,
            a: 0.0,
            b: 0.0,
            e1_ev: 1e-3,
            e2_ev: 2e-3,
        };
        for t in [1.0, 10.0, 100.0] {
            assert_eq!(quench_intensity(&flat, t).unwrap(), 2.5);
        }
        let q = QuenchParams {
            i0: 1.0,
            a: 2.0,
            b: 0.5,
            e1_ev: 0.56e-3,
            e2_ev: 3.35e-3,
        };
        let mut prev = quench_intensity(&q, 0.5).unwrap();
        assert!(prev <= q.i0);
        for i in 1..200 {
            let v = quench_intensity(&q, 0.5 + i as f64 * 0.25).unwrap();
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn quench_fit_recovers_fixed_e2_truth() {
        let truth = QuenchParams {
            i0: 1.0,
            a: 15.0,
            b: 40.0,
            e1_ev: 1.75e-3,
            e2_ev: 22.5e-3,
        };
        let temps: Vec<f64> = (0..12).map(|i| 4.5 + i as f64 * 3.0).collect();
        let points: Vec<(f64, f64)> = temps
            .iter()
            .map(|&t| (t, quench_intensity(&truth, t).unwrap()))
            .collect();
        let (fit, report) = fit_quench(&points, truth.e1_ev, E2Mode::Fixed(truth.e2_ev)).unwrap();
        assert_eq!(report.status, FitStatus::Converged);
        assert!((fit.params.i0 - 1.0).abs() < 1e-6);
        assert!((fit.params.a - 15.0).abs() / 15.0 < 1e-4);
        assert!((fit.params.b - 40.0).abs() / 40.0 < 1e-3);
    }

    #[test]
    fn quench_fit_free_e2() {
        let truth = QuenchParams {
            i0: 1.0,
            a: 2.0,
            b: 0.5,
            e1_ev: 0.56e-3,
            e2_ev: 3.35e-3,
        };
        let temps: Vec<f64> = (0..14).map(|i| 4.5 + i as f64 * 2.0).collect();
        let points: Vec<(f64, f64)> = temps
            .iter()
            .map(|&t| (t, quench_intensity(&truth, t).unwrap()))
            .collect();
        let (fit, report) = fit_quench(&points, truth.e1_ev, E2Mode::Free).unwrap();
        assert_eq!(report.status, FitStatus::Converged);
        assert!(
            (fit.params.e2_ev - truth.e2_ev).abs() / truth.e2_ev < 1e-3,
            "E2 = {}",
            fit.params.e2_ev
        );
    }

    #[test]
    fn activation_two_point_closed_form() {
        let ea = 0.44e-3;
        let r0 = 3.0;
        let points: Vec<(f64, f64)> = [5.0, 25.0]
            .iter()
            .map(|&t| (t, r0 * (-ea / (KB * t)).exp()))
            .collect();
        let (fit, _) = fit_ratio_activation(&points).unwrap();
        assert!((fit.ea_ev - ea).abs() < 1e-12);
        assert!((fit.r0 - r0).abs() < 1e-10);
    }

    #[test]
    fn activation_constant_ratio_gives_zero_energy() {
        let points: Vec<(f64, f64)> = (1..8).map(|i| (3.0 * i as f64, 1.7)).collect();
        let (fit, _) = fit_ratio_activation(&points).unwrap();
        assert!(fit.ea_ev.abs() < 1e-12);
        assert!((fit.r0 - 1.7).abs() < 1e-10);
    }

    #[test]
    fn activation_rejects_bad_ratio() {
        assert!(matches!(
            fit_ratio_activation(&[(5.0, 1.0), (10.0, 0.0)]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            fit_ratio_activation(&[(5.0, 1.0), (10.0, -2.0)]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn activation_matches_boltzmann_population_ratio() {
        // Data generated from a two-level Boltzmann occupation with the
        // doublet splitting; the fitted activation energy must agree with
        // that splitting well inside its own uncertainty.
        let split = 0.56e-3;
        let points: Vec<(f64, f64)> = [4.5, 6.0, 8.0, 10.0, 14.0, 18.0, 24.0, 30.0]
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let jitter = 1.0 + 2e-3 * (((i * 2654435761) % 7) as f64 - 3.0);
                (t, 2.0 * (-split / (KB * t)).exp() * jitter)
            })
            .collect();
        let (fit, _) = fit_ratio_activation(&points).unwrap();
        assert!(
            (fit.ea_ev - split).abs() < 3.0 * fit.ea_sigma + 1e-9,
            "Ea {} vs split {split} (sigma {})",
            fit.ea_ev,
            fit.ea_sigma
        );
    }

    #[test]
    fn saturation_fit_and_eval() {
        let truth = SaturationParams {
            i_inf: 100.0,
            p_sat_w_cm2: 7.8,
        };
        assert_eq!(
            saturation_intensity(&truth, 7.8).unwrap(),
            50.0,
            "half intensity at P_sat"
        );
        let points: Vec<(f64, f64)> = [0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&p| (p, saturation_intensity(&truth, p).unwrap()))
            .collect();
        let (fit, report) = fit_saturation(&points).unwrap();
        assert_eq!(report.status, FitStatus::Converged);
        assert!((fit.params.i_inf - 100.0).abs() < 1e-6);
        assert!((fit.params.p_sat_w_cm2 - 7.8).abs() < 1e-6);
    }

    #[test]
    fn saturation_preconditions() {
        assert!(matches!(
            fit_saturation(&[(1.0, 1.0), (2.0, 2.0)]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            fit_saturation(&[(0.0, 1.0), (2.0, 2.0), (3.0, 3.0)]),
            Err(Error::Domain(_))
        ));
    }
}
