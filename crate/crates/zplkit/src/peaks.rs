//! Line shapes and spectral peak fitting.
//!
//! Peaks are parametrized by center (eV), Gaussian and Lorentzian FWHM (eV),
//! and integrated area, so a fitted area is meaningful independent of shape.
//! The Voigt FWHM accessor uses the Olivero-Longbothum combination formula,
//! accurate to 0.02% of the true convolved width.

use crate::fit::{solve_lsq, FitProblem, FitReport, FitStatus};
use crate::special::{self, FWHM_TO_SIGMA};
use crate::units::Spectrum;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineShape {
    Gaussian,
    Lorentzian,
    Voigt,
}

impl LineShape {
    pub fn as_str(&self) -> &'static str {
        match self {
            LineShape::Gaussian => "gaussian",
            LineShape::Lorentzian => "lorentzian",
            LineShape::Voigt => "voigt",
        }
    }
}

/// A single emission line. Width semantics depend on the shape: a Gaussian
/// carries only `fwhm_g_ev`, a Lorentzian only `fwhm_l_ev`, a Voigt both
/// (at least one nonzero).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakModel {
    shape: LineShape,
    center_ev: f64,
    fwhm_g_ev: f64,
    fwhm_l_ev: f64,
    area: f64,
}

impl PeakModel {
    pub fn new(
        shape: LineShape,
        center_ev: f64,
        fwhm_g_ev: f64,
        fwhm_l_ev: f64,
        area: f64,
    ) -> Result<Self> {
        if !center_ev.is_finite() || !fwhm_g_ev.is_finite() || !fwhm_l_ev.is_finite() {
            return Err(Error::invalid("peak parameters must be finite"));
        }
        if !area.is_finite() {
            return Err(Error::invalid("peak area must be finite"));
        }
        if fwhm_g_ev < 0.0 || fwhm_l_ev < 0.0 {
            return Err(Error::invalid("peak widths must be non-negative"));
        }
        match shape {
            LineShape::Gaussian if fwhm_l_ev != 0.0 => {
                return Err(Error::invalid("a Gaussian peak must have fwhm_l = 0"));
            }
            LineShape::Lorentzian if fwhm_g_ev != 0.0 => {
                return Err(Error::invalid("a Lorentzian peak must have fwhm_g = 0"));
            }
            LineShape::Voigt if fwhm_g_ev == 0.0 && fwhm_l_ev == 0.0 => {
                return Err(Error::invalid("a Voigt peak needs a nonzero width"));
            }
            _ => {}
        }
        Ok(PeakModel {
            shape,
            center_ev,
            fwhm_g_ev,
            fwhm_l_ev,
            area,
        })
    }

    pub fn gaussian(center_ev: f64, fwhm_ev: f64, area: f64) -> Result<Self> {
        Self::new(LineShape::Gaussian, center_ev, fwhm_ev, 0.0, area)
    }

    pub fn lorentzian(center_ev: f64, fwhm_ev: f64, area: f64) -> Result<Self> {
        Self::new(LineShape::Lorentzian, center_ev, 0.0, fwhm_ev, area)
    }

    pub fn voigt(center_ev: f64, fwhm_g_ev: f64, fwhm_l_ev: f64, area: f64) -> Result<Self> {
        Self::new(LineShape::Voigt, center_ev, fwhm_g_ev, fwhm_l_ev, area)
    }

    pub fn shape(&self) -> LineShape {
        self.shape
    }

    pub fn center_ev(&self) -> f64 {
        self.center_ev
    }

    pub fn fwhm_g_ev(&self) -> f64 {
        self.fwhm_g_ev
    }

    pub fn fwhm_l_ev(&self) -> f64 {
        self.fwhm_l_ev
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Total FWHM of the profile: the native width for pure shapes, the
    /// Olivero-Longbothum approximation for a Voigt.
    pub fn fwhm_ev(&self) -> f64 {
        match self.shape {
            LineShape::Gaussian => self.fwhm_g_ev,
            LineShape::Lorentzian => self.fwhm_l_ev,
            LineShape::Voigt => voigt_fwhm(self.fwhm_g_ev, self.fwhm_l_ev)
                .expect("widths validated at construction"),
        }
    }
}

/// Profile value at `energy_ev`. The profile integrates to `area` over the
/// real line; a zero-width pure shape evaluates non-finite at its center,
/// which the fit engine reports as a solver failure rather than a panic.
pub fn eval_profile(p: &PeakModel, energy_ev: f64) -> f64 {
    let x = energy_ev - p.center_ev;
    match p.shape {
        LineShape::Gaussian => p.area * special::gaussian_norm(x, p.fwhm_g_ev * FWHM_TO_SIGMA),
        LineShape::Lorentzian => p.area * special::lorentzian_norm(x, 0.5 * p.fwhm_l_ev),
        LineShape::Voigt => {
            p.area * special::voigt_norm(x, p.fwhm_g_ev * FWHM_TO_SIGMA, 0.5 * p.fwhm_l_ev)
        }
    }
}

/// Combined FWHM of a Voigt profile from its Gaussian and Lorentzian widths
/// (Olivero-Longbothum): 0.5346 G_L + sqrt(0.2166 G_L^2 + G_G^2).
pub fn voigt_fwhm(fwhm_g_ev: f64, fwhm_l_ev: f64) -> Result<f64> {
    if !fwhm_g_ev.is_finite() || !fwhm_l_ev.is_finite() || fwhm_g_ev < 0.0 || fwhm_l_ev < 0.0 {
        return Err(Error::domain("widths must be finite and non-negative"));
    }
    if fwhm_g_ev == 0.0 && fwhm_l_ev == 0.0 {
        return Err(Error::domain("at least one width must be nonzero"));
    }
    Ok(0.5346 * fwhm_l_ev + (0.2166 * fwhm_l_ev * fwhm_l_ev + fwhm_g_ev * fwhm_g_ev).sqrt())
}

/// Debye-Waller ratio: the zero-phonon fraction of the total emission.
/// Requires 0 < zpl_area <= total_area.
pub fn debye_waller(zpl_area: f64, total_area: f64) -> Result<f64> {
    if !zpl_area.is_finite() || !total_area.is_finite() || zpl_area <= 0.0 {
        return Err(Error::domain("areas must be finite and the ZPL area positive"));
    }
    if zpl_area > total_area {
        return Err(Error::domain(format!(
            "ZPL area {zpl_area} exceeds total area {total_area}"
        )));
    }
    Ok(zpl_area / total_area)
}

/// Affine baseline of a peak fit, with 1-sigma uncertainties.
#[derive(Debug, Clone, Copy)]
pub struct Baseline {
    pub c0: f64,
    pub c1: f64,
    pub c0_sigma: f64,
    pub c1_sigma: f64,
}

/// One fitted peak with per-parameter 1-sigma uncertainties.
#[derive(Debug, Clone, Copy)]
pub struct FittedPeak {
    pub model: PeakModel,
    pub center_sigma: f64,
    pub fwhm_g_sigma: f64,
    pub fwhm_l_sigma: f64,
    pub area_sigma: f64,
}

#[derive(Debug, Clone)]
pub struct PeakFitResult {
    /// Fitted peaks, sorted ascending by center energy.
    pub peaks: Vec<FittedPeak>,
    /// Present when the fit included the affine baseline c0 + c1 E.
    pub baseline: Option<Baseline>,
    pub report: FitReport,
}

// Per-shape parameter count in the packed fit vector.
fn n_params(shape: LineShape) -> usize {
    match shape {
        LineShape::Gaussian | LineShape::Lorentzian => 3,
        LineShape::Voigt => 4,
    }
}

fn pack(init: &[PeakModel], baseline: bool, spectrum: &Spectrum) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut p = Vec::new();
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let e = spectrum.energies_ev();
    let (e_lo, e_hi) = (e[0], e[e.len() - 1]);
    let span = e_hi - e_lo;
    for peak in init {
        p.push(peak.center_ev);
        lo.push(e_lo);
        hi.push(e_hi);
        match peak.shape {
            LineShape::Gaussian => {
                p.push(peak.fwhm_g_ev);
            }
            LineShape::Lorentzian => {
                p.push(peak.fwhm_l_ev);
            }
            LineShape::Voigt => {
                p.push(peak.fwhm_g_ev);
                p.push(peak.fwhm_l_ev);
                lo.push(0.0);
                hi.push(10.0 * span);
            }
        }
        // Widths may touch zero; the profile then evaluates non-finite and
        // the engine rejects the trial, so the floor stays honest.
        lo.push(0.0);
        hi.push(10.0 * span);
        p.push(peak.area);
        lo.push(0.0);
        hi.push(f64::INFINITY);
    }
    if baseline {
        p.push(0.0);
        lo.push(f64::NEG_INFINITY);
        hi.push(f64::INFINITY);
        p.push(0.0);
        lo.push(f64::NEG_INFINITY);
        hi.push(f64::INFINITY);
    }
    (p, lo, hi)
}

fn unpack(shapes: &[LineShape], params: &[f64]) -> Vec<PeakModel> {
    let mut peaks = Vec::with_capacity(shapes.len());
    let mut k = 0;
    for &shape in shapes {
        let center = params[k];
        let (fg, fl) = match shape {
            LineShape::Gaussian => (params[k + 1], 0.0),
            LineShape::Lorentzian => (0.0, params[k + 1]),
            LineShape::Voigt => (params[k + 1], params[k + 2]),
        };
        let area = params[k + n_params(shape) - 1];
        k += n_params(shape);
        // Bounds keep these valid during the fit; fall back to a degenerate
        // but constructible peak if the solver left a width at its floor.
        peaks.push(
            PeakModel::new(shape, center, fg.max(0.0), fl.max(0.0), area)
                .expect("packed parameters respect the model invariants"),
        );
    }
    peaks
}

fn model_sum(shapes: &[LineShape], params: &[f64], baseline: bool, e: &[f64]) -> Vec<f64> {
    let peaks = unpack(shapes, params);
    let np: usize = shapes.iter().map(|&s| n_params(s)).sum();
    let (c0, c1) = if baseline {
        (params[np], params[np + 1])
    } else {
        (0.0, 0.0)
    };
    e.iter()
        .map(|&x| {
            let mut y = c0 + c1 * x;
            for p in &peaks {
                y += eval_profile(p, x);
            }
            y
        })
        .collect()
}

/// Fits a sum of peaks, optionally over an affine baseline, to a spectrum.
///
/// Initial guesses are caller-supplied (see [`seed_peaks`] for a starting
/// point). Every initial center must lie inside the spectrum's energy range,
/// and the spectrum must provide at least 5 points per free parameter.
/// Returned peaks are sorted ascending by center, and the report's parameter
/// vector and covariance are permuted to match that order.
pub fn fit_peaks(
    spectrum: &Spectrum,
    init: &[PeakModel],
    baseline: bool,
) -> Result<PeakFitResult> {
    if init.is_empty() {
        return Err(Error::invalid("at least one initial peak is required"));
    }
    let e = spectrum.energies_ev();
    let y = spectrum.intensities();
    for p in init {
        if p.center_ev < e[0] || p.center_ev > e[e.len() - 1] {
            return Err(Error::domain(format!(
                "initial center {} eV outside the spectrum range [{}, {}] eV",
                p.center_ev,
                e[0],
                e[e.len() - 1]
            )));
        }
    }
    let shapes: Vec<LineShape> = init.iter().map(|p| p.shape()).collect();
    let free: usize =
        shapes.iter().map(|&s| n_params(s)).sum::<usize>() + if baseline { 2 } else { 0 };
    if spectrum.len() < 5 * free {
        return Err(Error::insufficient(format!(
            "{} points for {} free parameters; need at least {}",
            spectrum.len(),
            free,
            5 * free
        )));
    }

    let (mut p0, lo, hi) = pack(init, baseline, spectrum);
    if baseline {
        // Seed the offset at the spectrum floor; slope at zero.
        let floor = y.iter().cloned().fold(f64::INFINITY, f64::min);
        let np = p0.len();
        p0[np - 2] = floor;
    }

    let problem = FitProblem::new(p0, |p: &[f64]| {
        model_sum(&shapes, p, baseline, e)
            .iter()
            .zip(y)
            .map(|(m, d)| m - d)
            .collect()
    })
    .with_bounds(lo, hi);
    let mut report = solve_lsq(&problem);

    // Sort peaks by center and permute the report to match.
    let models = unpack(&shapes, &report.params);
    let mut order: Vec<usize> = (0..models.len()).collect();
    order.sort_by(|&a, &b| models[a].center_ev.total_cmp(&models[b].center_ev));

    let offsets: Vec<usize> = shapes
        .iter()
        .scan(0, |acc, &s| {
            let start = *acc;
            *acc += n_params(s);
            Some(start)
        })
        .collect();
    let np_total: usize = shapes.iter().map(|&s| n_params(s)).sum();
    let mut perm: Vec<usize> = Vec::with_capacity(report.params.len());
    for &i in &order {
        perm.extend(offsets[i]..offsets[i] + n_params(shapes[i]));
    }
    perm.extend(np_total..report.params.len());

    let params: Vec<f64> = perm.iter().map(|&i| report.params[i]).collect();
    let mut cov = report.covariance.clone();
    for (r, &pr) in perm.iter().enumerate() {
        for (c, &pc) in perm.iter().enumerate() {
            cov[(r, c)] = report.covariance[(pr, pc)];
        }
    }
    report.params = params;
    report.covariance = cov;

    let sorted_shapes: Vec<LineShape> = order.iter().map(|&i| shapes[i]).collect();
    let sorted_models = unpack(&sorted_shapes, &report.params);
    let mut peaks = Vec::with_capacity(sorted_models.len());
    let mut k = 0;
    for model in sorted_models {
        let (cs, gs, ls, ars) = match model.shape() {
            LineShape::Gaussian => (report.sigma(k), report.sigma(k + 1), 0.0, report.sigma(k + 2)),
            LineShape::Lorentzian => {
                (report.sigma(k), 0.0, report.sigma(k + 1), report.sigma(k + 2))
            }
            LineShape::Voigt => (
                report.sigma(k),
                report.sigma(k + 1),
                report.sigma(k + 2),
                report.sigma(k + 3),
            ),
        };
        k += n_params(model.shape());
        peaks.push(FittedPeak {
            model,
            center_sigma: cs,
            fwhm_g_sigma: gs,
            fwhm_l_sigma: ls,
            area_sigma: ars,
        });
    }
    let baseline_out = if baseline {
        Some(Baseline {
            c0: report.params[k],
            c1: report.params[k + 1],
            c0_sigma: report.sigma(k),
            c1_sigma: report.sigma(k + 1),
        })
    } else {
        None
    };
    Ok(PeakFitResult {
        peaks,
        baseline: baseline_out,
        report,
    })
}

/// Suggests initial peaks from local maxima whose prominence exceeds 3x the
/// robust noise level (median absolute successive difference, scaled to an
/// equivalent Gaussian sigma). Seeds are sorted by descending prominence.
pub fn seed_peaks(spectrum: &Spectrum, shape: LineShape, max_peaks: usize) -> Vec<PeakModel> {
    let e = spectrum.energies_ev();
    let y = spectrum.intensities();
    let n = y.len();
    if n < 3 || max_peaks == 0 {
        return Vec::new();
    }
    let mut diffs: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    diffs.sort_by(f64::total_cmp);
    let mad = diffs[diffs.len() / 2];
    // 1.4826 maps MAD to sigma; successive differences carry sqrt(2) sigma.
    let noise = (1.4826 * mad / std::f64::consts::SQRT_2).max(f64::MIN_POSITIVE);

    let mut candidates: Vec<(f64, usize)> = Vec::new();
    for i in 1..n - 1 {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] {
            // Prominence: drop to the higher of the two bounding valleys,
            // walking out to the nearest strictly higher sample.
            let mut left_min = y[i];
            let mut j = i;
            while j > 0 && y[j - 1] <= y[i] {
                j -= 1;
                left_min = left_min.min(y[j]);
            }
            if j == 0 {
                left_min = left_min.min(y[0]);
            }
            let mut right_min = y[i];
            let mut j = i;
            while j + 1 < n && y[j + 1] <= y[i] {
                j += 1;
                right_min = right_min.min(y[j]);
            }
            if j + 1 == n {
                right_min = right_min.min(y[n - 1]);
            }
            let prominence = y[i] - left_min.max(right_min);
            if prominence >= 3.0 * noise {
                candidates.push((prominence, i));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0));
    candidates.truncate(max_peaks);

    let span = e[n - 1] - e[0];
    let mut seeds = Vec::new();
    for &(prominence, i) in &candidates {
        let half = y[i] - 0.5 * prominence;
        let mut l = i;
        while l > 0 && y[l] > half {
            l -= 1;
        }
        let mut r = i;
        while r + 1 < n && y[r] > half {
            r += 1;
        }
        let fwhm = (e[r] - e[l]).max(span / n as f64);
        let (fg, fl, area_factor) = match shape {
            LineShape::Gaussian => (fwhm, 0.0, 1.0645),
            LineShape::Lorentzian => (0.0, fwhm, std::f64::consts::FRAC_PI_2),
            // Even Gaussian/Lorentzian split: widths that combine to roughly
            // the observed FWHM.
            LineShape::Voigt => (fwhm / 1.6376, fwhm / 1.6376, 1.3),
        };
        if let Ok(model) = PeakModel::new(shape, e[i], fg, fl, prominence * fwhm * area_factor) {
            seeds.push(model);
        }
    }
    seeds
}

/// Returns `FitStatus::Invalid` outcomes as-is; helper for callers that only
/// care whether a fit is usable.
pub fn fit_converged(status: FitStatus) -> bool {
    matches!(status, FitStatus::Converged)
}
