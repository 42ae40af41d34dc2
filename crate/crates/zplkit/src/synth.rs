//! Seeded synthetic datasets for every model in the crate, plus the analytic
//! linear-limit solution of the rate equations used as an integrator oracle.
//!
//! Reproducibility contract: all randomness flows through [`NoiseRng`], which
//! is specified tightly enough to reimplement in another language:
//!
//! * stream: ChaCha with 8 rounds, keyed by the 64-bit seed via the standard
//!   `seed_from_u64` expansion (SplitMix64 over the key words);
//! * `uniform`: take one 64-bit word, `(w >> 11) * 2^-53`, giving [0, 1);
//! * `normal`: Box-Muller, cosine branch only:
//!   `sqrt(-2 ln(1 - u1)) * cos(2 pi u2)` with u1 drawn before u2;
//! * `poisson`: inverse-transform search for mean < 30, otherwise Hormann's
//!   PTRS transformed rejection, with `ln k!` from a cumulative table up to
//!   k = 20 and a three-term Stirling series beyond.
//!
//! Fixed seed, fixed draw order, no platform-dependent paths.

use crate::magneto::eval_esr_line;
use crate::peaks::{eval_profile, PeakModel};
use crate::thermo::{
    passler_energy, quench_intensity, saturation_intensity, PasslerParams, QuenchParams,
    SaturationParams,
};
use crate::trpl::{convolve_irf, simulate_rate_eqs, RateParams};
use crate::units::{DecayHistogram, Metadata, Spectrum, CODATA_2018};
use crate::{magneto, Error, Result};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct NoiseRng {
    rng: ChaCha8Rng,
}

impl NoiseRng {
    pub fn new(seed: u64) -> NoiseRng {
        NoiseRng {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box-Muller, cosine branch only).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Poisson draw with the given mean (>= 0; non-finite or negative means
    /// clamp to zero).
    pub fn poisson(&mut self, mean: f64) -> u64 {
        if !(mean > 0.0) {
            return 0;
        }
        if mean < 30.0 {
            self.poisson_inverse(mean)
        } else {
            self.poisson_ptrs(mean)
        }
    }

    fn poisson_inverse(&mut self, mean: f64) -> u64 {
        let u = self.uniform();
        let mut p = (-mean).exp();
        let mut cum = p;
        let mut k = 0u64;
        while u > cum && k < 1_000 {
            k += 1;
            p *= mean / k as f64;
            cum += p;
        }
        k
    }

    fn poisson_ptrs(&mut self, mean: f64) -> u64 {
        let b = 0.931 + 2.53 * mean.sqrt();
        let a = -0.059 + 0.02483 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        let ln_mean = mean.ln();
        loop {
            let u = self.uniform() - 0.5;
            let v = self.uniform();
            let us = 0.5 - u.abs();
            let kf = ((2.0 * a / us + b) * u + mean + 0.43).floor();
            if us >= 0.07 && v <= v_r {
                return kf as u64;
            }
            if kf < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            let k = kf as u64;
            let rhs = kf * ln_mean - mean - ln_factorial(k);
            if (v * inv_alpha / (a / (us * us) + b)).ln() <= rhs {
                return k;
            }
        }
    }
}

fn ln_factorial(k: u64) -> f64 {
    if k <= 20 {
        let mut acc = 0.0;
        for i in 2..=k {
            acc += (i as f64).ln();
        }
        return acc;
    }
    let x = k as f64;
    let x2 = x * x;
    (x + 0.5) * x.ln() - x
        + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x2 * x)
        + 1.0 / (1260.0 * x2 * x2 * x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    None,
    Gaussian { sigma: f64 },
    Poisson,
}

/// Model to synthesize. The grid interpretation depends on the variant:
/// energies in eV for spectra, bin centers in ns for decay histograms,
/// temperatures / pump intensities / fields for the point series.
#[derive(Debug, Clone)]
pub enum SynthModel {
    /// Peaks on an affine baseline, sampled on an energy grid.
    Spectrum {
        peaks: Vec<PeakModel>,
        baseline_c0: f64,
        baseline_c1: f64,
    },
    /// (T in K, line energy in eV) points.
    LineShift(PasslerParams),
    /// (T in K, intensity) points.
    Quench(QuenchParams),
    /// (T in K, ratio) points following r0 exp(-Ea / kT).
    Ratio { r0: f64, ea_ev: f64 },
    /// (pump W/cm^2, intensity) points.
    Saturation(SaturationParams),
    /// Decay histogram: scale * emission rate (IRF-smeared) + background.
    Trpl {
        rate: RateParams,
        scale: f64,
        background: f64,
        irf_fwhm_ns: f64,
    },
    /// (B in T, FWHM in eV) points along the quadrature broadening law.
    MagnetoFwhm { gamma0_ev: f64, eps_ev_per_t: f64 },
    /// (B in T, signal) derivative-mode resonance trace.
    Esr {
        amplitude: f64,
        b_res_t: f64,
        fwhm_g_t: f64,
        fwhm_l_t: f64,
        offset: f64,
    },
}

#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub model: SynthModel,
    pub grid: Vec<f64>,
    pub noise: NoiseModel,
    pub seed: u64,
    pub meta: Metadata,
}

#[derive(Debug, Clone)]
pub enum SynthData {
    Spectrum(Spectrum),
    Histogram(DecayHistogram),
    /// (x, y) pairs in the grid's units.
    Points(Vec<(f64, f64)>),
}

fn apply_noise(rng: &mut NoiseRng, noise: NoiseModel, value: f64) -> f64 {
    match noise {
        NoiseModel::None => value,
        NoiseModel::Gaussian { sigma } => value + sigma * rng.normal(),
        NoiseModel::Poisson => rng.poisson(value) as f64,
    }
}

/// Evaluates the model over the grid and applies the noise model, one draw
/// per grid point in grid order. Deterministic for a fixed seed; with
/// `NoiseModel::None` the output equals the model evaluation exactly.
pub fn generate(spec: &GeneratorSpec) -> Result<SynthData> {
    if spec.grid.is_empty() {
        return Err(Error::insufficient("generator grid is empty"));
    }
    if spec.grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("generator grid must be finite"));
    }
    if let NoiseModel::Gaussian { sigma } = spec.noise {
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::invalid("noise sigma must be >= 0"));
        }
    }
    let mut rng = NoiseRng::new(spec.seed);
    let noisy = |rng: &mut NoiseRng, v: f64| apply_noise(rng, spec.noise, v);

    match &spec.model {
        SynthModel::Spectrum {
            peaks,
            baseline_c0,
            baseline_c1,
        } => {
            if peaks.is_empty() {
                return Err(Error::invalid("spectrum model needs at least one peak"));
            }
            let values: Vec<f64> = spec
                .grid
                .iter()
                .map(|&e| {
                    let model: f64 =
                        peaks.iter().map(|p| eval_profile(p, e)).sum::<f64>()
                            + baseline_c0
                            + baseline_c1 * e;
                    noisy(&mut rng, model)
                })
                .collect();
            Ok(SynthData::Spectrum(Spectrum::from_energies(
                spec.grid.clone(),
                values,
                spec.meta.clone(),
            )?))
        }
        SynthModel::LineShift(p) => {
            let pts = spec
                .grid
                .iter()
                .map(|&t| Ok((t, noisy(&mut rng, passler_energy(p, t)?))))
                .collect::<Result<Vec<_>>>()?;
            Ok(SynthData::Points(pts))
        }
        SynthModel::Quench(q) => {
            let pts = spec
                .grid
                .iter()
                .map(|&t| Ok((t, noisy(&mut rng, quench_intensity(q, t)?))))
                .collect::<Result<Vec<_>>>()?;
            Ok(SynthData::Points(pts))
        }
        SynthModel::Ratio { r0, ea_ev } => {
            if !(*r0 > 0.0) || !ea_ev.is_finite() || *ea_ev < 0.0 {
                return Err(Error::invalid("ratio model needs r0 > 0 and Ea >= 0"));
            }
            let pts = spec
                .grid
                .iter()
                .map(|&t| {
                    if t <= 0.0 {
                        return Err(Error::domain("temperatures must be positive"));
                    }
                    let r = r0 * (-ea_ev / (CODATA_2018.k_b * t)).exp();
                    Ok((t, noisy(&mut rng, r)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SynthData::Points(pts))
        }
        SynthModel::Saturation(s) => {
            let pts = spec
                .grid
                .iter()
                .map(|&p| Ok((p, noisy(&mut rng, saturation_intensity(s, p)?))))
                .collect::<Result<Vec<_>>>()?;
            Ok(SynthData::Points(pts))
        }
        SynthModel::Trpl {
            rate,
            scale,
            background,
            irf_fwhm_ns,
        } => {
            if !(*scale > 0.0) || !(*background >= 0.0) {
                return Err(Error::invalid(
                    "decay model needs scale > 0 and background >= 0",
                ));
            }
            if spec.grid.len() < 10 {
                return Err(Error::insufficient("decay grid needs at least 10 bins"));
            }
            let bin = spec.grid[1] - spec.grid[0];
            if !(bin > 0.0) {
                return Err(Error::invalid("decay grid must be increasing"));
            }
            for w in spec.grid.windows(2) {
                if ((w[1] - w[0]) - bin).abs() > 1e-6 * bin {
                    return Err(Error::invalid("decay grid must be uniform"));
                }
            }
            let traj = simulate_rate_eqs(rate, &spec.grid)?;
            let emission: Vec<f64> = traj.n0.iter().map(|&n| n / rate.tau0_ns).collect();
            let smeared = convolve_irf(&emission, bin, *irf_fwhm_ns)?;
            let counts: Vec<f64> = smeared
                .iter()
                .map(|&r| noisy(&mut rng, scale * r + background).max(0.0))
                .collect();
            let start = spec.grid[0] - 0.5 * bin;
            Ok(SynthData::Histogram(DecayHistogram::new(
                start,
                bin,
                counts,
                spec.meta.clone(),
            )?))
        }
        SynthModel::MagnetoFwhm {
            gamma0_ev,
            eps_ev_per_t,
        } => {
            let pts = spec
                .grid
                .iter()
                .map(|&b| {
                    Ok((
                        b,
                        noisy(
                            &mut rng,
                            magneto::broadened_linewidth(*gamma0_ev, *eps_ev_per_t, b)?,
                        ),
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SynthData::Points(pts))
        }
        SynthModel::Esr {
            amplitude,
            b_res_t,
            fwhm_g_t,
            fwhm_l_t,
            offset,
        } => {
            if !(*fwhm_g_t >= 0.0) || !(*fwhm_l_t >= 0.0) || fwhm_g_t + fwhm_l_t <= 0.0 {
                return Err(Error::invalid("resonance widths must be >= 0, not both zero"));
            }
            let pts = spec
                .grid
                .iter()
                .map(|&b| {
                    let v = eval_esr_line(*amplitude, *b_res_t, *fwhm_g_t, *fwhm_l_t, *offset, b);
                    Ok((b, noisy(&mut rng, v)))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SynthData::Points(pts))
        }
    }
}

/// Analytic solution of the rate equations in the unlimited-capacity linear
/// regime; the `capacity` field is ignored. Returns (n0, nex) at `t_ns`.
///
/// The reservoir drains with the combined constant tau_c, where
/// 1/tau_c = 1/tau_ex + 1/tau_f. When tau_c approaches tau0 the generic
/// expression degenerates and the t exp(-t/tau0) limit form takes over.
pub fn linear_limit_oracle(p: &RateParams, t_ns: f64) -> Result<(f64, f64)> {
    p.validate()?;
    if !t_ns.is_finite() || t_ns < 0.0 {
        return Err(Error::domain(format!("time must be >= 0, got {t_ns}")));
    }
    let tau_c = 1.0 / (1.0 / p.tau_ex_ns + 1.0 / p.tau_f_ns);
    let nex = p.nex_init * (-t_ns / tau_c).exp();
    let g = p.nex_init / p.tau_f_ns;
    let n0 = if (tau_c - p.tau0_ns).abs() <= 1e-10 * p.tau0_ns {
        (p.n0_init + g * t_ns) * (-t_ns / p.tau0_ns).exp()
    } else {
        let k = 1.0 / p.tau0_ns - 1.0 / tau_c;
        p.n0_init * (-t_ns / p.tau0_ns).exp()
            + g * ((-t_ns / tau_c).exp() - (-t_ns / p.tau0_ns).exp()) / k
    };
    Ok((n0, nex))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::FitStatus;
    use crate::peaks::{fit_peaks, LineShape};
    use crate::units::nm_to_ev;

    #[test]
    fn rng_is_deterministic_per_seed() {
        let mut a = NoiseRng::new(42);
        let mut b = NoiseRng::new(42);
        for _ in 0..5 {
            assert_eq!(a.uniform(), b.uniform());
        }
        for _ in 0..5 {
            assert_eq!(a.normal(), b.normal());
            assert_eq!(a.poisson(7.5), b.poisson(7.5));
            assert_eq!(a.poisson(250.0), b.poisson(250.0));
        }
        let mut c = NoiseRng::new(43);
        let mut d = NoiseRng::new(42);
        let differs = (0..4).any(|_| c.uniform() != d.uniform());
        assert!(differs, "different seeds give different streams");
    }

    #[test]
    fn uniform_and_normal_moments() {
        let mut rng = NoiseRng::new(7);
        let n = 20_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = rng.uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.01);

        let mut m = 0.0;
        let mut m2 = 0.0;
        for _ in 0..n {
            let z = rng.normal();
            m += z;
            m2 += z * z;
        }
        m /= n as f64;
        m2 /= n as f64;
        assert!(m.abs() < 0.02, "mean {m}");
        assert!((m2 - 1.0).abs() < 0.04, "second moment {m2}");
    }

    #[test]
    fn poisson_moments_both_regimes() {
        for &mean in &[5.0, 100.0] {
            let mut rng = NoiseRng::new(11);
            let n = 20_000;
            let mut s = 0.0;
            let mut s2 = 0.0;
            for _ in 0..n {
                let k = rng.poisson(mean) as f64;
                s += k;
                s2 += k * k;
            }
            let m = s / n as f64;
            let var = s2 / n as f64 - m * m;
            assert!((m - mean).abs() < 0.03 * mean, "mean {m} for {mean}");
            assert!((var - mean).abs() < 0.06 * mean, "var {var} for {mean}");
        }
        assert_eq!(NoiseRng::new(1).poisson(0.0), 0);
        assert_eq!(NoiseRng::new(1).poisson(-3.0), 0);
    }

    #[test]
    fn ln_factorial_table_and_series_agree() {
        // Stirling branch against the exact cumulative sum at the crossover
        // and beyond.
        for k in [21u64, 40, 100] {
            let exact: f64 = (2..=k).map(|i| (i as f64).ln()).sum();
            assert!(
                (ln_factorial(k) - exact).abs() < 1e-10 * exact,
                "k = {k}"
            );
        }
        assert_eq!(ln_factorial(0), 0.0);
        assert_eq!(ln_factorial(1), 0.0);
    }

    #[test]
    fn noiseless_series_equals_model() {
        let p = PasslerParams {
            e0_ev: 0.93566,
            alpha_ev_per_k: 295e-6,
            theta_k: 406.0,
            p: 2.36,
        };
        let grid: Vec<f64> = (1..=8).map(|i| 4.5 * i as f64).collect();
        let out = generate(&GeneratorSpec {
            model: SynthModel::LineShift(p),
            grid: grid.clone(),
            noise: NoiseModel::None,
            seed: 0,
            meta: Metadata::default(),
        })
        .unwrap();
        let SynthData::Points(pts) = out else {
            panic!("expected points")
        };
        for (t, e) in pts {
            assert_eq!(e, passler_energy(&p, t).unwrap());
        }
    }

    #[test]
    fn poisson_histograms_differ_by_seed_with_equal_expectation() {
        let rate = RateParams {
            tau0_ns: 1560.0,
            tau_f_ns: 11.0,
            tau_ex_ns: 200.0,
            capacity: 2.0,
            n0_init: 0.2,
            nex_init: 1.0,
        };
        let grid: Vec<f64> = (0..400).map(|i| 2.0 + i as f64 * 4.0).collect();
        let spec = |seed: u64, noise: NoiseModel| GeneratorSpec {
            model: SynthModel::Trpl {
                rate,
                scale: 3.0e6,
                background: 10.0,
                irf_fwhm_ns: 0.0,
            },
            grid: grid.clone(),
            noise,
            seed,
            meta: Metadata::default(),
        };
        let SynthData::Histogram(clean) = generate(&spec(0, NoiseModel::None)).unwrap() else {
            panic!()
        };
        let SynthData::Histogram(h1) = generate(&spec(1, NoiseModel::Poisson)).unwrap() else {
            panic!()
        };
        let SynthData::Histogram(h1b) = generate(&spec(1, NoiseModel::Poisson)).unwrap() else {
            panic!()
        };
        let SynthData::Histogram(h2) = generate(&spec(2, NoiseModel::Poisson)).unwrap() else {
            panic!()
        };
        assert_eq!(h1.counts(), h1b.counts(), "same seed, same data");
        assert_ne!(h1.counts(), h2.counts(), "different seed, different data");

        // Expectation check at the brightest bin over many seeds.
        let (ipk, mu) = clean
            .counts()
            .iter()
            .copied()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let n_seeds = 300;
        let mut acc = 0.0;
        for seed in 0..n_seeds {
            let SynthData::Histogram(h) = generate(&spec(seed, NoiseModel::Poisson)).unwrap()
            else {
                panic!()
            };
            acc += h.counts()[ipk];
        }
        let mean = acc / n_seeds as f64;
        // 5 sigma of the seed-averaged Poisson mean.
        let tol = 5.0 * (mu / n_seeds as f64).sqrt();
        assert!((mean - mu).abs() < tol, "mean {mean} vs mu {mu}");
    }

    #[test]
    fn poisson_mean_matches_expectation_to_one_percent() {
        let mu = 37.4;
        let mut rng = NoiseRng::new(3);
        let n = 10_000;
        let mut acc = 0.0;
        for _ in 0..n {
            acc += rng.poisson(mu) as f64;
        }
        assert!((acc / n as f64 - mu).abs() < 0.01 * mu);
    }

    #[test]
    fn doublet_geometry_round_trip() {
        // Two Gaussian lines 0.56 meV apart with a 2:1 area ratio, noiseless;
        // a peak fit must hand the geometry back.
        let lower = nm_to_ev(1312.98).unwrap();
        let upper = lower + 0.56e-3;
        let truth = vec![
            PeakModel::gaussian(lower, 0.38e-3, 2.0).unwrap(),
            PeakModel::gaussian(upper, 0.45e-3, 1.0).unwrap(),
        ];
        let grid: Vec<f64> = (0..600)
            .map(|i| lower - 2.5e-3 + i as f64 * 1e-5)
            .collect();
        let out = generate(&GeneratorSpec {
            model: SynthModel::Spectrum {
                peaks: truth.clone(),
                baseline_c0: 0.05,
                baseline_c1: 0.0,
            },
            grid,
            noise: NoiseModel::None,
            seed: 0,
            meta: Metadata::default(),
        })
        .unwrap();
        let SynthData::Spectrum(s) = out else { panic!() };
        let init = vec![
            PeakModel::gaussian(lower - 1e-4, 0.5e-3, 1.5).unwrap(),
            PeakModel::gaussian(upper + 1e-4, 0.5e-3, 1.5).unwrap(),
        ];
        let res = fit_peaks(&s, &init, true).unwrap();
        assert_eq!(res.report.status, FitStatus::Converged);
        let split = res.peaks[1].model.center_ev() - res.peaks[0].model.center_ev();
        assert!((split - 0.56e-3).abs() < 1e-6, "split {split}");
        let ratio = res.peaks[0].model.area() / res.peaks[1].model.area();
        assert!((ratio - 2.0).abs() < 1e-3, "ratio {ratio}");
        assert_eq!(res.peaks[0].model.shape(), LineShape::Gaussian);
    }

    #[test]
    fn oracle_initial_conditions_and_decoupling() {
        let p = RateParams {
            tau0_ns: 1560.0,
            tau_f_ns: 11.0,
            tau_ex_ns: 200.0,
            capacity: 1.0,
            n0_init: 0.37,
            nex_init: 0.91,
        };
        let (n0, nex) = linear_limit_oracle(&p, 0.0).unwrap();
        assert_eq!(n0, 0.37);
        assert_eq!(nex, 0.91);

        // A practically infinite feed time decouples the two populations.
        let slow = RateParams {
            tau_f_ns: 1e15,
            ..p
        };
        for t in [5.0, 50.0, 500.0] {
            let (n0, nex) = linear_limit_oracle(&slow, t).unwrap();
            assert!((n0 - 0.37 * (-t / 1560.0f64).exp()).abs() < 1e-12);
            assert!((nex - 0.91 * (-t / 200.0f64).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_matches_integrator_at_30ns() {
        let p = RateParams {
            tau0_ns: 1560.0,
            tau_f_ns: 11.0,
            tau_ex_ns: 200.0,
            capacity: 1e15,
            n0_init: 0.2,
            nex_init: 1.0,
        };
        let traj = simulate_rate_eqs(&p, &[30.0]).unwrap();
        let (n0, nex) = linear_limit_oracle(&p, 30.0).unwrap();
        assert!(((traj.n0[0] - n0) / n0).abs() < 1e-6);
        assert!(((traj.nex[0] - nex) / nex).abs() < 1e-6);
    }

    #[test]
    fn oracle_degenerate_branch_is_continuous() {
        // tau_c exactly equal to tau0 versus a hair away: the two formulas
        // must agree where they hand over.
        let exact = RateParams {
            tau0_ns: 10.0,
            tau_f_ns: 20.0,
            tau_ex_ns: 20.0,
            capacity: 1.0,
            n0_init: 0.1,
            nex_init: 0.8,
        };
        // Perturb tau_ex so tau_c = tau0 (1 + ~1e-9): generic branch, but
        // close enough that the model change itself stays below 1e-8.
        let near = RateParams {
            tau_ex_ns: 20.0 * (1.0 + 4e-9),
            ..exact
        };
        for t in [1.0, 7.0, 25.0] {
            let (a, _) = linear_limit_oracle(&exact, t).unwrap();
            let (b, _) = linear_limit_oracle(&near, t).unwrap();
            assert!((a - b).abs() < 5e-8, "t = {t}: {a} vs {b}");
        }
    }

    #[test]
    fn generator_input_validation() {
        let spec = GeneratorSpec {
            model: SynthModel::Ratio { r0: 3.0, ea_ev: 0.44e-3 },
            grid: vec![],
            noise: NoiseModel::None,
            seed: 0,
            meta: Metadata::default(),
        };
        assert!(matches!(generate(&spec), Err(Error::InsufficientData(_))));

        let bad_noise = GeneratorSpec {
            model: SynthModel::Ratio { r0: 3.0, ea_ev: 0.44e-3 },
            grid: vec![5.0, 10.0],
            noise: NoiseModel::Gaussian { sigma: -1.0 },
            seed: 0,
            meta: Metadata::default(),
        };
        assert!(matches!(generate(&bad_noise), Err(Error::InvalidInput(_))));
    }
}
