//! Magnetic-field response: Zeeman splittings, unresolved-splitting
//! broadening of a zero-phonon line, and derivative-mode spin-resonance
//! spectra.

use crate::fit::{solve_lsq, FitProblem, FitReport};
use crate::special::{voigt_norm, FWHM_TO_SIGMA};
use crate::units::CODATA_2018;
use crate::{Error, Result};

/// Splitting g mu_B B between the two members of a spin-1/2 doublet, in eV.
pub fn zeeman_splitting(g: f64, b_t: f64) -> Result<f64> {
    if !g.is_finite() || g <= 0.0 {
        return Err(Error::domain("g-factor must be positive"));
    }
    if !b_t.is_finite() {
        return Err(Error::domain("field must be finite"));
    }
    Ok(g * CODATA_2018.mu_b * b_t.abs())
}

/// Electron and hole g-factors of a bound-exciton transition. A vanishing
/// hole term models centers where only one carrier responds to the field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeemanTerms {
    pub g_e: f64,
    pub g_h: f64,
}

impl ZeemanTerms {
    pub fn validate(&self) -> Result<()> {
        if !self.g_e.is_finite() || self.g_e <= 0.0 {
            return Err(Error::invalid("electron g-factor must be positive"));
        }
        if !self.g_h.is_finite() || self.g_h < 0.0 {
            return Err(Error::invalid("hole g-factor must be >= 0"));
        }
        Ok(())
    }

    /// The four transition shifts (+-g_e +-g_h) mu_B B / 2 in ascending
    /// order. With g_h = 0 they collapse pairwise to a doublet split by
    /// exactly [`zeeman_splitting`] of g_e.
    pub fn transition_shifts(&self, b_t: f64) -> Result<[f64; 4]> {
        self.validate()?;
        if !b_t.is_finite() {
            return Err(Error::domain("field must be finite"));
        }
        let u = CODATA_2018.mu_b * b_t.abs() / 2.0;
        let mut s = [
            (-self.g_e - self.g_h) * u,
            (-self.g_e + self.g_h) * u,
            (self.g_e - self.g_h) * u,
            (self.g_e + self.g_h) * u,
        ];
        s.sort_by(f64::total_cmp);
        Ok(s)
    }
}

/// Effective linewidth of a line whose Zeeman splitting stays unresolved:
/// the zero-field width and the field-linear splitting add in quadrature,
/// fwhm(B) = sqrt(gamma0^2 + (eps B)^2).
pub fn broadened_linewidth(gamma0_ev: f64, eps_ev_per_t: f64, b_t: f64) -> Result<f64> {
    if !gamma0_ev.is_finite() || gamma0_ev <= 0.0 {
        return Err(Error::domain("zero-field width must be positive"));
    }
    if !eps_ev_per_t.is_finite() || eps_ev_per_t < 0.0 {
        return Err(Error::domain("broadening slope must be >= 0"));
    }
    if !b_t.is_finite() {
        return Err(Error::domain("field must be finite"));
    }
    Ok(gamma0_ev.hypot(eps_ev_per_t * b_t.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn factor(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// A zero-phonon line whose two unresolved Zeeman branches shift linearly
/// with field. `sigma_g_ev` is the Gaussian sigma and `fwhm_l_ev` the
/// Lorentzian FWHM of each branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnetoProfile {
    pub center_ev: f64,
    pub eps_ev_per_t: f64,
    pub sigma_g_ev: f64,
    pub fwhm_l_ev: f64,
}

impl MagnetoProfile {
    pub fn validate(&self) -> Result<()> {
        if !self.center_ev.is_finite() {
            return Err(Error::invalid("center must be finite"));
        }
        if !self.eps_ev_per_t.is_finite() || self.eps_ev_per_t < 0.0 {
            return Err(Error::invalid("branch shift slope must be >= 0"));
        }
        if !self.sigma_g_ev.is_finite()
            || self.sigma_g_ev < 0.0
            || !self.fwhm_l_ev.is_finite()
            || self.fwhm_l_ev < 0.0
            || (self.sigma_g_ev == 0.0 && self.fwhm_l_ev == 0.0)
        {
            return Err(Error::invalid("branch widths must be >= 0 and not both zero"));
        }
        Ok(())
    }
}

/// One Zeeman branch, a unit-area Voigt displaced by sign * eps * |B|.
pub fn eval_magneto_branch(
    p: &MagnetoProfile,
    sign: Sign,
    b_t: f64,
    energy_ev: f64,
) -> Result<f64> {
    p.validate()?;
    if !b_t.is_finite() || !energy_ev.is_finite() {
        return Err(Error::domain("field and energy must be finite"));
    }
    let x = energy_ev - p.center_ev - sign.factor() * p.eps_ev_per_t * b_t.abs();
    Ok(voigt_norm(x, p.sigma_g_ev, p.fwhm_l_ev / 2.0))
}

/// Equal-weight sum of the two branches, normalized to unit area.
pub fn eval_magneto_profile(p: &MagnetoProfile, b_t: f64, energy_ev: f64) -> Result<f64> {
    let plus = eval_magneto_branch(p, Sign::Plus, b_t, energy_ev)?;
    let minus = eval_magneto_branch(p, Sign::Minus, b_t, energy_ev)?;
    Ok(0.5 * (plus + minus))
}

#[derive(Debug, Clone, Copy)]
pub struct ZeemanBroadeningFit {
    pub gamma0_ev: f64,
    pub eps_ev_per_t: f64,
    pub gamma0_sigma: f64,
    pub eps_sigma: f64,
}

/// Fits the quadrature broadening law to (B, fwhm) points. Needs at least 3
/// fields including a zero-field anchor (|B| < 1 mT).
pub fn fit_zeeman_broadening(
    points: &[(f64, f64)],
) -> Result<(ZeemanBroadeningFit, FitReport)> {
    if points.len() < 3 {
        return Err(Error::insufficient(format!(
            "broadening fit needs at least 3 fields, got {}",
            points.len()
        )));
    }
    for &(b, w) in points {
        if !b.is_finite() || !w.is_finite() || w <= 0.0 {
            return Err(Error::domain(format!("invalid point ({b} T, {w} eV)")));
        }
    }
    let anchor = points
        .iter()
        .copied()
        .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .unwrap();
    if anchor.0.abs() > 1e-3 {
        return Err(Error::insufficient(
            "broadening fit needs a zero-field anchor point",
        ));
    }
    let (b_max, w_max) = points
        .iter()
        .copied()
        .max_by(|a, b| a.0.abs().total_cmp(&b.0.abs()))
        .unwrap();
    if b_max.abs() <= 1e-3 {
        return Err(Error::insufficient("broadening fit needs a nonzero field"));
    }
    let gamma0_init = anchor.1;
    let eps_init = ((w_max * w_max - gamma0_init * gamma0_init).max(0.0)).sqrt() / b_max.abs();

    let problem = FitProblem::new(vec![gamma0_init, eps_init.max(1e-9)], |q: &[f64]| {
        points
            .iter()
            .map(|&(b, w)| q[0].hypot(q[1] * b.abs()) - w)
            .collect()
    })
    .with_bounds(vec![1e-12, 0.0], vec![f64::INFINITY, f64::INFINITY]);
    let report = solve_lsq(&problem);
    let fit = ZeemanBroadeningFit {
        gamma0_ev: report.params[0],
        eps_ev_per_t: report.params[1],
        gamma0_sigma: report.sigma(0),
        eps_sigma: report.sigma(1),
    };
    Ok((fit, report))
}

/// g-factor implied by a microwave resonance: g = h nu / (mu_B B).
pub fn esr_g_factor(freq_hz: f64, b_res_t: f64) -> Result<f64> {
    if !freq_hz.is_finite() || freq_hz <= 0.0 {
        return Err(Error::domain("frequency must be positive"));
    }
    if !b_res_t.is_finite() || b_res_t <= 0.0 {
        return Err(Error::domain("resonance field must be positive"));
    }
    Ok(CODATA_2018.h * freq_hz / (CODATA_2018.mu_b * b_res_t))
}

/// A field-swept, derivative-mode resonance trace.
#[derive(Debug, Clone)]
pub struct EsrSpectrum {
    fields_t: Vec<f64>,
    signal: Vec<f64>,
}

impl EsrSpectrum {
    /// Fields must be finite, strictly increasing, with at least 11 samples.
    pub fn new(fields_t: Vec<f64>, signal: Vec<f64>) -> Result<Self> {
        if fields_t.len() != signal.len() {
            return Err(Error::invalid("field and signal lengths differ"));
        }
        if fields_t.len() < 11 {
            return Err(Error::insufficient(format!(
                "resonance trace needs at least 11 samples, got {}",
                fields_t.len()
            )));
        }
        for w in fields_t.windows(2) {
            if !w[0].is_finite() || !w[1].is_finite() || w[1] <= w[0] {
                return Err(Error::invalid("fields must be strictly increasing"));
            }
        }
        if signal.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("signal must be finite"));
        }
        Ok(EsrSpectrum { fields_t, signal })
    }

    pub fn fields_t(&self) -> &[f64] {
        &self.fields_t
    }

    pub fn signal(&self) -> &[f64] {
        &self.signal
    }
}

// Thompson-Cox-Hastings combined width and mixing for a pseudo-Voigt.
fn tch_fwhm(wg: f64, wl: f64) -> f64 {
    let g = wg.max(0.0);
    let l = wl.max(0.0);
    (g.powi(5)
        + 2.69269 * g.powi(4) * l
        + 2.42843 * g.powi(3) * l.powi(2)
        + 4.47163 * g.powi(2) * l.powi(3)
        + 0.07842 * g * l.powi(4)
        + l.powi(5))
    .powf(0.2)
}

fn tch_eta(r: f64) -> f64 {
    1.36603 * r - 0.47719 * r * r + 0.11116 * r * r * r
}

// d/dx of the unit-area pseudo-Voigt with Gaussian/Lorentzian FWHM inputs.
fn pseudo_voigt_deriv(x: f64, wg: f64, wl: f64) -> f64 {
    let f = tch_fwhm(wg, wl);
    if !(f > 0.0) {
        return f64::NAN;
    }
    let eta = tch_eta(wl / f);
    let gamma = f / 2.0;
    let u = x / gamma;
    let dl = -(2.0 * x / (gamma * gamma))
        / (std::f64::consts::PI * gamma * (1.0 + u * u).powi(2));
    let sigma = f * FWHM_TO_SIGMA;
    let dg = -x / (sigma * sigma) * (-0.5 * (x / sigma).powi(2)).exp()
        / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    eta * dl + (1.0 - eta) * dg
}

/// Derivative-mode resonance line value at field `b_t`: the pseudo-Voigt
/// derivative scaled and offset. Returns NaN when both widths are zero.
pub fn eval_esr_line(
    amplitude: f64,
    b_res_t: f64,
    fwhm_g_t: f64,
    fwhm_l_t: f64,
    offset: f64,
    b_t: f64,
) -> f64 {
    amplitude * pseudo_voigt_deriv(b_t - b_res_t, fwhm_g_t, fwhm_l_t) + offset
}

#[derive(Debug, Clone, Copy)]
pub struct EsrFit {
    pub g: f64,
    pub b_res_t: f64,
    pub fwhm_g_t: f64,
    pub fwhm_l_t: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub g_sigma: f64,
    pub b_res_sigma: f64,
    pub fwhm_g_sigma: f64,
    pub fwhm_l_sigma: f64,
}

/// Fits a derivative pseudo-Voigt line to a resonance trace and converts the
/// resonance field to a g-factor at the given microwave frequency.
///
/// The lobe pair (maximum and minimum) must stand at least 5 robust noise
/// levels apart, otherwise the trace is rejected as featureless.
pub fn fit_esr_line(spec: &EsrSpectrum, freq_hz: f64) -> Result<(EsrFit, FitReport)> {
    if !freq_hz.is_finite() || freq_hz <= 0.0 {
        return Err(Error::domain("frequency must be positive"));
    }
    let b = spec.fields_t();
    let s = spec.signal();
    let n = s.len();

    // Robust noise from successive differences.
    let mut diffs: Vec<f64> = s.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    diffs.sort_by(f64::total_cmp);
    let noise = 1.4826 * diffs[diffs.len() / 2] / std::f64::consts::SQRT_2;

    let (imax, _) = s
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let (imin, _) = s
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let span = s[imax] - s[imin];
    if span <= 0.0 || span < 5.0 * noise {
        return Err(Error::insufficient(
            "no resonance lobes stand out of the noise",
        ));
    }

    let b_res0 = 0.5 * (b[imax] + b[imin]);
    let bpp = (b[imax] - b[imin]).abs().max(b[1] - b[0]);
    let w0 = 0.86 * bpp;
    // Lobe order fixes the sign: maximum below the crossing means a regular
    // absorption derivative.
    let sign = if b[imax] < b[imin] { 1.0 } else { -1.0 };
    let mut shape_pp: f64 = 0.0;
    for &bi in b {
        let v = pseudo_voigt_deriv(bi - b_res0, w0, w0);
        shape_pp = shape_pp.max(v.abs());
    }
    let amp0 = if shape_pp > 0.0 {
        sign * 0.5 * span / shape_pp
    } else {
        sign * span
    };
    let mut sorted = s.to_vec();
    sorted.sort_by(f64::total_cmp);
    let offset0 = sorted[n / 2];

    let field_span = b[n - 1] - b[0];
    let problem = FitProblem::new(
        vec![amp0, b_res0, w0, w0, offset0],
        move |q: &[f64]| {
            let (amp, b_res, wg, wl, off) = (q[0], q[1], q[2], q[3], q[4]);
            b.iter()
                .zip(s)
                .map(|(&bi, &si)| amp * pseudo_voigt_deriv(bi - b_res, wg, wl) + off - si)
                .collect()
        },
    )
    .with_bounds(
        vec![f64::NEG_INFINITY, b[0], 0.0, 0.0, f64::NEG_INFINITY],
        vec![
            f64::INFINITY,
            b[n - 1],
            10.0 * field_span,
            10.0 * field_span,
            f64::INFINITY,
        ],
    );
    let report = solve_lsq(&problem);

    let b_res = report.params[1];
    let g = esr_g_factor(freq_hz, b_res)?;
    // Linear propagation: g scales as 1/B at fixed frequency.
    let g_sigma = g / b_res * report.sigma(1);
    let fit = EsrFit {
        g,
        b_res_t: b_res,
        fwhm_g_t: report.params[2],
        fwhm_l_t: report.params[3],
        amplitude: report.params[0],
        offset: report.params[4],
        g_sigma,
        b_res_sigma: report.sigma(1),
        fwhm_g_sigma: report.sigma(2),
        fwhm_l_sigma: report.sigma(3),
    };
    Ok((fit, report))
}
