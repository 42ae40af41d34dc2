//! Time-resolved decay: a two-level capture/emission rate model, histogram
//! fitting, tail fits, and decay-rate bookkeeping.
//!
//! Populations: `n0` is the emitting ground-configuration occupation, `nex`
//! an exciton reservoir feeding it. The reservoir drains into the center at
//! rate `nex / tau_f` scaled by the remaining capacity `(N - n0) / N`, and
//! decays on its own with `tau_ex`; the center emits with `tau0`. Times are
//! nanoseconds throughout.

use crate::fit::{solve_lsq, FitProblem, FitReport};
use crate::ode::{integrate_dopri5, OdeOptions};
use crate::special::FWHM_TO_SIGMA;
use crate::units::{DecayHistogram, CODATA_2018};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub tau0_ns: f64,
    pub tau_f_ns: f64,
    pub tau_ex_ns: f64,
    /// Number of available centers N in the capacity factor (N - n0) / N.
    pub capacity: f64,
    pub n0_init: f64,
    pub nex_init: f64,
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        for (name, tau) in [
            ("tau0", self.tau0_ns),
            ("tau_f", self.tau_f_ns),
            ("tau_ex", self.tau_ex_ns),
        ] {
            if !tau.is_finite() || tau <= 0.0 {
                return Err(Error::invalid(format!("{name} must be positive, got {tau}")));
            }
        }
        if !self.capacity.is_finite() || self.capacity <= 0.0 {
            return Err(Error::invalid("capacity must be positive"));
        }
        if !self.n0_init.is_finite()
            || self.n0_init < 0.0
            || !self.nex_init.is_finite()
            || self.nex_init < 0.0
        {
            return Err(Error::invalid("initial populations must be >= 0"));
        }
        Ok(())
    }

    fn rhs(&self, y: &[f64; 2]) -> [f64; 2] {
        let [n0, nex] = *y;
        let transfer = nex / self.tau_f_ns * (self.capacity - n0) / self.capacity;
        [-n0 / self.tau0_ns + transfer, -nex / self.tau_ex_ns - transfer]
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times_ns: Vec<f64>,
    pub n0: Vec<f64>,
    pub nex: Vec<f64>,
}

/// Integrates the rate model from t = 0 and samples it at `times_ns`
/// (finite, non-decreasing, >= 0).
pub fn simulate_rate_eqs(params: &RateParams, times_ns: &[f64]) -> Result<Trajectory> {
    simulate_rate_eqs_opts(params, times_ns, &OdeOptions::default())
}

pub fn simulate_rate_eqs_opts(
    params: &RateParams,
    times_ns: &[f64],
    opts: &OdeOptions,
) -> Result<Trajectory> {
    params.validate()?;
    let states = integrate_dopri5(
        |_, y| params.rhs(y),
        0.0,
        [params.n0_init, params.nex_init],
        times_ns,
        opts,
    )?;
    Ok(Trajectory {
        times_ns: times_ns.to_vec(),
        n0: states.iter().map(|s| s[0]).collect(),
        nex: states.iter().map(|s| s[1]).collect(),
    })
}

/// Smears a uniformly sampled signal with a Gaussian instrument response of
/// the given FWHM. The kernel is truncated at 5 sigma and renormalized per
/// sample, so a constant signal stays constant at the edges. `fwhm_ns = 0`
/// returns the input unchanged.
pub fn convolve_irf(values: &[f64], bin_ns: f64, fwhm_ns: f64) -> Result<Vec<f64>> {
    if !bin_ns.is_finite() || bin_ns <= 0.0 {
        return Err(Error::invalid("bin width must be positive"));
    }
    if !fwhm_ns.is_finite() || fwhm_ns < 0.0 {
        return Err(Error::invalid("IRF width must be >= 0"));
    }
    if fwhm_ns == 0.0 {
        return Ok(values.to_vec());
    }
    let sigma = fwhm_ns * FWHM_TO_SIGMA;
    let half = ((5.0 * sigma / bin_ns).ceil() as usize).max(1);
    let kernel: Vec<f64> = (0..=half)
        .map(|j| {
            let x = j as f64 * bin_ns;
            (-0.5 * (x / sigma).powi(2)).exp()
        })
        .collect();
    let n = values.len() as isize;
    let mut out = Vec::with_capacity(values.len());
    for i in 0..n {
        let mut acc = 0.0;
        let mut wsum = 0.0;
        for j in -(half as isize)..=(half as isize) {
            let idx = i + j;
            if idx < 0 || idx >= n {
                continue;
            }
            let w = kernel[j.unsigned_abs()];
            acc += w * values[idx as usize];
            wsum += w;
        }
        out.push(acc / wsum);
    }
    Ok(out)
}

/// Which rate-model parameter to hold fixed during a histogram fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateParam {
    Tau0,
    TauF,
    TauEx,
    Capacity,
    N0Init,
    NexInit,
}

const RATE_PARAM_ORDER: [RateParam; 6] = [
    RateParam::Tau0,
    RateParam::TauF,
    RateParam::TauEx,
    RateParam::Capacity,
    RateParam::N0Init,
    RateParam::NexInit,
];

#[derive(Debug, Clone, Copy, Default)]
pub struct TrplSigmas {
    pub tau0: f64,
    pub tau_f: f64,
    pub tau_ex: f64,
    pub capacity: f64,
    pub n0_init: f64,
    pub nex_init: f64,
    pub scale: f64,
    pub background: f64,
}

#[derive(Debug, Clone)]
pub struct TrplFit {
    pub params: RateParams,
    /// Counts per unit emission rate; absorbs bin width and collection
    /// efficiency.
    pub scale: f64,
    pub background: f64,
    /// Zero for parameters that were held fixed.
    pub sigmas: TrplSigmas,
}

fn rate_values(p: &RateParams, centers: &[f64]) -> Option<Vec<f64>> {
    let traj = simulate_rate_eqs_opts(p, centers, &OdeOptions::default()).ok()?;
    Some(traj.n0.iter().map(|&n| n / p.tau0_ns).collect())
}

fn background_guess(counts: &[f64]) -> f64 {
    let tail = (counts.len() / 20).max(3).min(counts.len());
    let s: f64 = counts[counts.len() - tail..].iter().sum();
    s / tail as f64
}

/// Fits the rate model to a decay histogram with Poisson-motivated weights
/// (1 / max(counts, 1)). Parameters listed in `fix` are pinned at their
/// `init` values; the counts scale and a flat background are always free.
///
/// The model is `scale * (n0(t) / tau0)` smeared by a Gaussian IRF of
/// `irf_fwhm_ns`, plus the background, evaluated at bin centers. Needs a peak
/// of at least 25 counts to anchor the weights.
pub fn fit_trpl_rate(
    h: &DecayHistogram,
    init: &RateParams,
    fix: &[RateParam],
    irf_fwhm_ns: f64,
) -> Result<(TrplFit, FitReport)> {
    init.validate()?;
    if !irf_fwhm_ns.is_finite() || irf_fwhm_ns < 0.0 {
        return Err(Error::invalid("IRF width must be >= 0"));
    }
    let counts = h.counts();
    let peak = counts.iter().copied().fold(0.0_f64, f64::max);
    if peak < 25.0 {
        return Err(Error::insufficient(format!(
            "peak of {peak} counts is too weak for a weighted fit; need 25"
        )));
    }
    let bin = h.bin_ns();
    let centers: Vec<f64> = (0..counts.len())
        .map(|i| h.time_ns(i) + 0.5 * bin)
        .collect();

    let bkg0 = background_guess(counts);
    let rate0 = rate_values(init, &centers)
        .ok_or_else(|| Error::Integration("rate model failed at the initial guess".into()))?;
    let rate_peak = rate0.iter().copied().fold(0.0_f64, f64::max);
    if rate_peak <= 0.0 {
        return Err(Error::invalid("initial guess produces no emission"));
    }
    let scale0 = ((peak - bkg0).max(1.0)) / rate_peak;

    let full_init = [
        init.tau0_ns,
        init.tau_f_ns,
        init.tau_ex_ns,
        init.capacity,
        init.n0_init,
        init.nex_init,
        scale0,
        bkg0,
    ];
    let full_lo = [1e-3, 1e-3, 1e-3, 1e-12, 0.0, 0.0, 0.0, 0.0];
    let full_hi = [1e9, 1e9, 1e9, 1e30, 1e30, 1e30, f64::INFINITY, f64::INFINITY];

    let free: Vec<usize> = (0..8)
        .filter(|&i| i >= 6 || !fix.contains(&RATE_PARAM_ORDER[i]))
        .collect();
    let expand = {
        let free = free.clone();
        move |q: &[f64]| -> [f64; 8] {
            let mut full = full_init;
            for (slot, &i) in free.iter().enumerate() {
                full[i] = q[slot];
            }
            full
        }
    };

    let init_vec: Vec<f64> = free.iter().map(|&i| full_init[i]).collect();
    let lo: Vec<f64> = free.iter().map(|&i| full_lo[i]).collect();
    let hi: Vec<f64> = free.iter().map(|&i| full_hi[i]).collect();
    let weights: Vec<f64> = counts.iter().map(|&c| 1.0 / c.max(1.0)).collect();

    let m = counts.len();
    let expand_res = expand.clone();
    let problem = FitProblem::new(init_vec, move |q: &[f64]| {
        let full = expand_res(q);
        let p = RateParams {
            tau0_ns: full[0],
            tau_f_ns: full[1],
            tau_ex_ns: full[2],
            capacity: full[3],
            n0_init: full[4],
            nex_init: full[5],
        };
        let (scale, bkg) = (full[6], full[7]);
        let Some(rate) = rate_values(&p, &centers) else {
            return vec![f64::NAN; m];
        };
        let Ok(smeared) = convolve_irf(&rate, bin, irf_fwhm_ns) else {
            return vec![f64::NAN; m];
        };
        smeared
            .iter()
            .zip(counts)
            .map(|(&r, &c)| scale * r + bkg - c)
            .collect()
    })
    .with_bounds(lo, hi)
    .with_weights(weights);

    let report = solve_lsq(&problem);
    let full = expand(&report.params);
    let mut sig = [0.0; 8];
    for (slot, &i) in free.iter().enumerate() {
        sig[i] = report.sigma(slot);
    }
    let fit = TrplFit {
        params: RateParams {
            tau0_ns: full[0],
            tau_f_ns: full[1],
            tau_ex_ns: full[2],
            capacity: full[3],
            n0_init: full[4],
            nex_init: full[5],
        },
        scale: full[6],
        background: full[7],
        sigmas: TrplSigmas {
            tau0: sig[0],
            tau_f: sig[1],
            tau_ex: sig[2],
            capacity: sig[3],
            n0_init: sig[4],
            nex_init: sig[5],
            scale: sig[6],
            background: sig[7],
        },
    };
    Ok((fit, report))
}

#[derive(Debug, Clone, Copy)]
pub struct SingleExpFit {
    /// Counts at the tail start (not extrapolated back to t = 0).
    pub amplitude: f64,
    pub tau_ns: f64,
    pub background: f64,
    pub amplitude_sigma: f64,
    pub tau_sigma: f64,
    pub background_sigma: f64,
}

/// Fits `A exp(-(t - t_start) / tau) + bkg` to the bins at or after
/// `tail_start_ns`. Needs at least 10 such bins.
pub fn fit_single_exp(
    h: &DecayHistogram,
    tail_start_ns: f64,
) -> Result<(SingleExpFit, FitReport)> {
    if !tail_start_ns.is_finite() {
        return Err(Error::invalid("tail start must be finite"));
    }
    let bin = h.bin_ns();
    let counts = h.counts();
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .enumerate()
        .map(|(i, &c)| (h.time_ns(i) + 0.5 * bin, c))
        .filter(|&(t, _)| t >= tail_start_ns)
        .collect();
    if pts.len() < 10 {
        return Err(Error::insufficient(format!(
            "tail fit needs at least 10 bins past {tail_start_ns} ns, got {}",
            pts.len()
        )));
    }
    let bkg0 = background_guess(counts);
    let t_first = pts[0].0;
    let a0 = (pts[0].1 - bkg0).max(1.0);
    let (t_last, c_last) = *pts.last().unwrap();
    let drop = a0 / (c_last - bkg0).max(a0 * 1e-6);
    let tau0 = if drop > 1.0 {
        ((t_last - t_first) / drop.ln()).clamp(bin, 1e9)
    } else {
        (t_last - t_first) / 3.0
    };

    let weights: Vec<f64> = pts.iter().map(|&(_, c)| 1.0 / c.max(1.0)).collect();
    let pts_model = pts.clone();
    let problem = FitProblem::new(vec![a0, tau0, bkg0], move |q: &[f64]| {
        let (a, tau, bkg) = (q[0], q[1], q[2]);
        pts_model
            .iter()
            .map(|&(t, c)| a * (-(t - t_first) / tau).exp() + bkg - c)
            .collect()
    })
    .with_bounds(vec![0.0, 1e-3, 0.0], vec![f64::INFINITY, 1e12, f64::INFINITY])
    .with_weights(weights);
    let report = solve_lsq(&problem);
    let fit = SingleExpFit {
        amplitude: report.params[0],
        tau_ns: report.params[1],
        background: report.params[2],
        amplitude_sigma: report.sigma(0),
        tau_sigma: report.sigma(1),
        background_sigma: report.sigma(2),
    };
    Ok((fit, report))
}

/// Linewidth convention for converting a decay rate to a Fourier-limited
/// width: `hbar * Gamma` (the default used throughout) or `hbar * Gamma / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FourierConvention {
    #[default]
    HbarGamma,
    HalfHbarGamma,
}

#[derive(Debug, Clone, Copy)]
pub struct RateDecomposition {
    pub gamma_r_per_us: f64,
    pub gamma_nr_per_us: f64,
    /// Fourier-limited linewidth implied by the total rate, in eV.
    pub linewidth_ev: f64,
}

/// Splits a total decay rate into radiative and non-radiative parts given the
/// quantum efficiency eta in (0, 1]: Gamma_r = eta Gamma_tot, and
/// Gamma_nr = Gamma_tot - Gamma_r so the identity holds exactly.
pub fn decompose_rates(gamma_total_per_us: f64, eta: f64) -> Result<RateDecomposition> {
    decompose_rates_with(gamma_total_per_us, eta, FourierConvention::default())
}

pub fn decompose_rates_with(
    gamma_total_per_us: f64,
    eta: f64,
    convention: FourierConvention,
) -> Result<RateDecomposition> {
    if !gamma_total_per_us.is_finite() || gamma_total_per_us <= 0.0 {
        return Err(Error::domain("total rate must be positive"));
    }
    if !eta.is_finite() || eta <= 0.0 || eta > 1.0 {
        return Err(Error::domain("quantum efficiency must be in (0, 1]"));
    }
    let gamma_r = eta * gamma_total_per_us;
    let gamma_per_s = gamma_total_per_us * 1e6;
    let lw = match convention {
        FourierConvention::HbarGamma => CODATA_2018.hbar * gamma_per_s,
        FourierConvention::HalfHbarGamma => CODATA_2018.hbar * gamma_per_s / 2.0,
    };
    Ok(RateDecomposition {
        gamma_r_per_us: gamma_r,
        gamma_nr_per_us: gamma_total_per_us - gamma_r,
        linewidth_ev: lw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::Metadata;

    fn meta() -> Metadata {
        Metadata {
            temperature_k: Some(4.5),
            ..Metadata::default()
        }
    }

    // Closed form of the model when n0 << capacity, kept independent of the
    // integrator so it can serve as an oracle.
    fn linear_limit(p: &RateParams, t: f64) -> f64 {
        let tau_c = 1.0 / (1.0 / p.tau_ex_ns + 1.0 / p.tau_f_ns);
        let g = p.nex_init / p.tau_f_ns;
        if (tau_c - p.tau0_ns).abs() < 1e-12 * p.tau0_ns {
            (p.n0_init + g * t) * (-t / p.tau0_ns).exp()
        } else {
            let k = 1.0 / p.tau0_ns - 1.0 / tau_c;
            p.n0_init * (-t / p.tau0_ns).exp()
                + g * ((-t / tau_c).exp() - (-t / p.tau0_ns).exp()) / k
        }
    }

    #[test]
    fn validate_rejects_bad_params() {
        let ok = RateParams {
            tau0_ns: 1560.0,
            tau_f_ns: 11.0,
            tau_ex_ns: 200.0,
            capacity: 2.0,
            n0_init: 0.2,
            nex_init: 1.0,
        };
        assert!(ok.validate().is_ok());
        assert!(RateParams { tau0_ns: 0.0, ..ok }.validate().is_err());
        assert!(RateParams { tau_f_ns: -1.0, ..ok }.validate().is_err());
        assert!(RateParams { capacity: 0.0, ..ok }.validate().is_err());
        assert!(RateParams { n0_init: -0.1, ..ok }.validate().is_err());
    }

    #[test]
    fn huge_capacity_matches_linear_closed_form() {
        let p = RateParams {
            tau0_ns: 1560.0,
            tau_f_ns: 11.0,
            tau_ex_ns: 200.0,
            capacity: 1e15,
            n0_init: 0.3,
            nex_init: 1.0,
        };
        let times: Vec<f64> = (0..=80).map(|i| i as f64 * 25.0).collect();
        let traj = simulate_rate_eqs(&p, &times).unwrap();
        for (t, n0) in times.iter().zip(&traj.n0) {
            let exact = linear_limit(&p, *t);
            assert!(
                (n0 - exact).abs() <= 1e-6 * exact.abs() + 1e-12,
                "t = {t}: {n0} vs {exact}"
            );
        }
    }

    #[test]
    fn degenerate_time_constants_closed_form() {
        // 1/tau_ex + 1/tau_f = 1/tau0 makes the feed and emission time
        // constants coincide; the closed form picks up a t exp(-t/tau) term.
        let p = RateParams {
            tau0_ns: 10.0,
            tau_f_ns: 20.0,
            tau_ex_ns: 20.0,
            capacity: 1e15,
            n0_init: 0.1,
            nex_init: 0.8,
        };
        let times: Vec<f64> = (0..=60).map(|i| i as f64).collect();
        let traj = simulate_rate_eqs(&p, &times).unwrap();
        for (t, n0) in times.iter().zip(&traj.n0) {
            let exact = linear_limit(&p, *t);
            assert!((n0 - exact).abs() <= 1e-8 * exact.abs() + 1e-12, "t = {t}");
        }
    }

    #[test]
    fn population_bookkeeping_is_conserved() {
        // Track emitted and reservoir-lost populations alongside the two
        // states; the four must sum to the initial total at all times.
        let p = RateParams {
            tau0_ns: 1560.0,
            tau_f_ns: 11.0,
            tau_ex_ns: 200.0,
            capacity: 2.0,
            n0_init: 0.2,
            nex_init: 1.0,
        };
        let total0 = p.n0_init + p.nex_init;
        let times: Vec<f64> = (0..=30).map(|i| i as f64 * 100.0).collect();
        let states = integrate_dopri5(
            |_, y: &[f64; 4]| {
                let core = p.rhs(&[y[0], y[1]]);
                [core[0], core[1], y[0] / p.tau0_ns, y[1] / p.tau_ex_ns]
            },
            0.0,
            [p.n0_init, p.nex_init, 0.0, 0.0],
            &times,
            &OdeOptions::default(),
        )
        .unwrap();
        for s in &states {
            let total: f64 = s.iter().sum();
            assert!((total - total0).abs() < 1e-9, "leak: {total} vs {total0}");
        }
    }

    #[test]
    fn finite_capacity_suppresses_the_peak() {
        let lin = RateParams {
            tau0_ns: 1560.0,
            tau_f_ns: 11.0,
            tau_ex_ns: 200.0,
            capacity: 1e15,
            n0_init: 0.2,
            nex_init: 1.0,
        };
        let sat = RateParams { capacity: 0.6, ..lin };
        let times: Vec<f64> = (0..=400).map(|i| i as f64 * 5.0).collect();
        let a = simulate_rate_eqs(&lin, &times).unwrap();
        let b = simulate_rate_eqs(&sat, &times).unwrap();
        let peak = |v: &[f64]| v.iter().copied().fold(0.0_f64, f64::max);
        assert!(peak(&b.n0) < peak(&a.n0));
        // The saturated run must still respect its capacity.
        assert!(peak(&b.n0) <= 0.6 + 1e-9);
    }

    #[test]
    fn delayed_rise_peaks_after_t0() {
        let p = RateParams {
            tau0_ns: 1560.0,
            tau_f_ns: 11.0,
            tau_ex_ns: 200.0,
            capacity: 2.0,
            n0_init: 0.2,
            nex_init: 1.0,
        };
        let times: Vec<f64> = (0..=3000).map(|i| i as f64 * 2.0).collect();
        let traj = simulate_rate_eqs(&p, &times).unwrap();
        let (imax, _) = traj
            .n0
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!(traj.times_ns[imax] > 5.0, "peak at {}", traj.times_ns[imax]);
    }

    #[test]
    fn irf_identity_and_spread() {
        let mut delta = vec![0.0; 201];
        delta[100] = 1.0;
        assert_eq!(convolve_irf(&delta, 1.0, 0.0).unwrap(), delta);

        let smeared = convolve_irf(&delta, 1.0, 10.0).unwrap();
        let total: f64 = smeared.iter().sum();
        assert!((total - 1.0).abs() < 1e-9, "mass preserved: {total}");
        let mean: f64 = smeared.iter().enumerate().map(|(i, v)| i as f64 * v).sum();
        let var: f64 = smeared
            .iter()
            .enumerate()
            .map(|(i, v)| (i as f64 - mean).powi(2) * v)
            .sum();
        let sigma = 10.0 * FWHM_TO_SIGMA;
        assert!((var - sigma * sigma).abs() < 0.05 * sigma * sigma);

        let flat = vec![3.0; 50];
        let out = convolve_irf(&flat, 1.0, 8.0).unwrap();
        for v in out {
            assert!((v - 3.0).abs() < 1e-12, "edges renormalized");
        }
    }

    #[test]
    fn histogram_fit_recovers_rates() {
        let truth = RateParams {
            tau0_ns: 1560.0,
            tau_f_ns: 11.0,
            tau_ex_ns: 200.0,
            capacity: 2.0,
            n0_init: 0.2,
            nex_init: 1.0,
        };
        let n_bins = 600;
        let bin = 6.0;
        let centers: Vec<f64> = (0..n_bins).map(|i| (i as f64 + 0.5) * bin).collect();
        let traj = simulate_rate_eqs(&truth, &centers).unwrap();
        let scale = 2.0e7;
        let bkg = 20.0;
        let counts: Vec<f64> = traj
            .n0
            .iter()
            .map(|&n| (scale * n / truth.tau0_ns + bkg).round())
            .collect();
        let h = DecayHistogram::new(0.0, bin, counts, meta()).unwrap();

        let init = RateParams {
            tau0_ns: 1800.0,
            tau_f_ns: 9.0,
            capacity: 2.6,
            n0_init: 0.15,
            ..truth
        };
        let (fit, report) = fit_trpl_rate(
            &h,
            &init,
            &[RateParam::TauEx, RateParam::NexInit],
            0.0,
        )
        .unwrap();
        assert!(
            report.status == crate::fit::FitStatus::Converged,
            "status {:?}",
            report.status
        );
        assert!(
            (fit.params.tau0_ns - 1560.0).abs() / 1560.0 < 0.01,
            "tau0 = {}",
            fit.params.tau0_ns
        );
        assert!(
            (fit.params.tau_f_ns - 11.0).abs() / 11.0 < 0.02,
            "tau_f = {}",
            fit.params.tau_f_ns
        );
        assert_eq!(fit.params.tau_ex_ns, 200.0, "fixed parameter untouched");
        assert_eq!(fit.sigmas.tau_ex, 0.0);
        assert!(fit.sigmas.tau0 > 0.0);
    }

    #[test]
    fn weak_peak_is_rejected() {
        let counts = vec![5.0; 64];
        let h = DecayHistogram::new(0.0, 2.0, counts, meta()).unwrap();
        let p = RateParams {
            tau0_ns: 100.0,
            tau_f_ns: 10.0,
            tau_ex_ns: 50.0,
            capacity: 1.0,
            n0_init: 0.5,
            nex_init: 0.5,
        };
        assert!(matches!(
            fit_trpl_rate(&h, &p, &[], 0.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn tail_fit_recovers_lifetime() {
        let tau = 100.0;
        let bin = 2.0;
        let counts: Vec<f64> = (0..600)
            .map(|i| {
                let t = (i as f64 + 0.5) * bin;
                (5000.0 * (-t / tau).exp() + 3.0).round()
            })
            .collect();
        let h = DecayHistogram::new(0.0, bin, counts, meta()).unwrap();
        let (fit, _) = fit_single_exp(&h, 10.0).unwrap();
        assert!((fit.tau_ns - tau).abs() / tau < 2e-3, "tau = {}", fit.tau_ns);
        assert!((fit.background - 3.0).abs() < 0.5);

        assert!(matches!(
            fit_single_exp(&h, 1195.0),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn rate_split_identity_and_linewidth() {
        let d = decompose_rates(19.23, 0.9756).unwrap();
        assert!((d.gamma_r_per_us - 18.760788).abs() < 1e-12);
        assert_eq!(
            d.gamma_r_per_us + d.gamma_nr_per_us,
            19.23,
            "split is exact by construction"
        );

        let one_five = decompose_rates(1.5, 1.0).unwrap();
        assert!(
            ((one_five.linewidth_ev - 9.873179354263599e-10) / 9.873179354263599e-10).abs()
                < 1e-12
        );
        let half = decompose_rates_with(1.5, 1.0, FourierConvention::HalfHbarGamma).unwrap();
        assert_eq!(half.linewidth_ev, one_five.linewidth_ev / 2.0);

        assert!(decompose_rates(0.0, 0.5).is_err());
        assert!(decompose_rates(1.0, 1.5).is_err());
    }
}
