//! One function per subcommand.
//!
//! Each fit command builds a [`Report`], runs the library fit, and maps the
//! outcome to an exit code: 0 when the fit converged, 2 when it did not (the
//! report is still written, with the failure in `status`). Errors returned as
//! `CliError` bypass the report entirely (exit 1 or 64).

use std::path::{Path, PathBuf};

use zplkit::catalog::Catalog;
use zplkit::fit::FitStatus;
use zplkit::magneto::{
    broadened_linewidth, eval_esr_line, fit_esr_line, fit_zeeman_broadening, zeeman_splitting,
    EsrSpectrum, ZeemanTerms,
};
use zplkit::peaks::{eval_profile, fit_peaks, seed_peaks, LineShape, PeakModel};
use zplkit::synth::{generate, GeneratorSpec, NoiseModel, SynthData, SynthModel};
use zplkit::thermo::{
    fit_passler, fit_quench, fit_ratio_activation, fit_saturation, passler_energy,
    quench_intensity, saturation_intensity, E2Mode, PasslerParams, QuenchParams, SaturationParams,
};
use zplkit::trpl::{
    convolve_irf, decompose_rates_with, fit_trpl_rate, simulate_rate_eqs, FourierConvention,
    RateParam, RateParams,
};
use zplkit::units::{ev_to_nm, resample_window, DecayHistogram, Metadata, CODATA_2018};

use crate::config::{resolve_f64, FileConfig};
use crate::io::{self, SpectrumAxis};
use crate::report::{read_report_params, Report, Val};
use crate::{
    Cli, CliError, Cmd, ConventionArg, DataArgs, DecomposeRatesArgs, EvalZeemanArgs, FitEsrArgs,
    FitPasslerArgs, FitPeaksArgs, FitQuenchArgs, FitTrplArgs, IdentifyArgs, NoiseArg, ShapeArg,
    SimulateTrplArgs, SynthArgs,
};

struct Plot {
    columns: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

struct Outcome {
    report: Report,
    exit: i32,
    plot: Option<Plot>,
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    let cfg = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    if let Cmd::Synth(args) = &cli.cmd {
        return synth_cmd(args, &cfg, cli.out.as_deref());
    }
    if cli.emit_plot_data && cli.out.is_none() {
        return Err(CliError::Usage(
            "--emit-plot-data needs --out; the TSV is written next to the report".into(),
        ));
    }
    let plot_wanted = cli.emit_plot_data;
    let mut outcome = match &cli.cmd {
        Cmd::FitPeaks(a) => fit_peaks_cmd(a, &cfg, plot_wanted)?,
        Cmd::FitPassler(a) => fit_passler_cmd(a, &cfg, plot_wanted)?,
        Cmd::FitQuench(a) => fit_quench_cmd(a, &cfg, plot_wanted)?,
        Cmd::FitRatio(a) => fit_ratio_cmd(a, plot_wanted)?,
        Cmd::FitSaturation(a) => fit_saturation_cmd(a, plot_wanted)?,
        Cmd::SimulateTrpl(a) => simulate_trpl_cmd(a, &cfg, plot_wanted)?,
        Cmd::FitTrpl(a) => fit_trpl_cmd(a, &cfg, plot_wanted)?,
        Cmd::DecomposeRates(a) => decompose_rates_cmd(a, &cfg)?,
        Cmd::FitMagneto(a) => fit_magneto_cmd(a, plot_wanted)?,
        Cmd::EvalZeeman(a) => eval_zeeman_cmd(a, &cfg)?,
        Cmd::FitEsr(a) => fit_esr_cmd(a, &cfg, plot_wanted)?,
        Cmd::Identify(a) => identify_cmd(a, &cfg)?,
        Cmd::Synth(_) => unreachable!("handled above"),
    };
    if let Some(p) = &cli.config {
        outcome.report.input("config", path_str(p));
    }
    let text = outcome.report.render(!cli.no_timestamp);
    match &cli.out {
        Some(path) => std::fs::write(path, &text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    if let (Some(plot), Some(out)) = (&outcome.plot, &cli.out) {
        io::write_tsv(&out.with_extension("tsv"), &plot.columns, &plot.rows)?;
    }
    Ok(outcome.exit)
}

fn path_str(p: &Path) -> Val {
    Val::Str(p.display().to_string())
}

/// Acquisition metadata from `# key: value` comments, echoed into the report
/// so downstream tooling sees the conditions a fit belongs to.
fn echo_meta(report: &mut Report, meta: &Metadata) {
    if let Some(t) = meta.temperature_k {
        report.input("temperature_k", Val::Num(t));
    }
    if let Some(p) = meta.pump_w_cm2 {
        report.input("pump_w_cm2", Val::Num(p));
    }
    if let Some(b) = meta.b_field_t {
        report.input("b_field_t", Val::Num(b));
    }
    if let Some(s) = &meta.process_step {
        report.input("process_step", Val::Str(s.clone()));
    }
}

fn require(v: Option<f64>, what: &str) -> Result<f64, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing {what}")))
}

fn finish(report: &mut Report, status: FitStatus, residual_norm: f64) -> i32 {
    report.status = status.as_str().to_owned();
    report.residual_norm = residual_norm;
    if status == FitStatus::Converged {
        0
    } else {
        2
    }
}

fn fit_failed(report: &mut Report, e: zplkit::Error) -> i32 {
    report.status = e.to_string();
    report.residual_norm = f64::NAN;
    2
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 || !(hi > lo) {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn parse_shape(s: &str) -> Option<LineShape> {
    match s.trim().to_ascii_lowercase().as_str() {
        "gaussian" => Some(LineShape::Gaussian),
        "lorentzian" => Some(LineShape::Lorentzian),
        "voigt" => Some(LineShape::Voigt),
        _ => None,
    }
}

fn shape_of(flag: Option<ShapeArg>, cfg: &FileConfig) -> Result<LineShape, CliError> {
    if let Some(s) = flag {
        return Ok(match s {
            ShapeArg::Gaussian => LineShape::Gaussian,
            ShapeArg::Lorentzian => LineShape::Lorentzian,
            ShapeArg::Voigt => LineShape::Voigt,
        });
    }
    match cfg.get("shape") {
        None => Ok(LineShape::Voigt),
        Some(v) => parse_shape(v)
            .ok_or_else(|| CliError::Usage(format!("config key 'shape': unknown shape '{v}'"))),
    }
}

fn cfg_bool(cfg: &FileConfig, key: &str) -> Result<bool, CliError> {
    match cfg.get(key) {
        None => Ok(false),
        Some(v) => match v.to_ascii_lowercase().as_str() {
            "true" | "1" | "yes" => Ok(true),
            "false" | "0" | "no" => Ok(false),
            _ => Err(CliError::Usage(format!(
                "config key '{key}': expected true/false, got '{v}'"
            ))),
        },
    }
}

fn lookup(params: &[(String, f64)], key: &str) -> Option<f64> {
    params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
}

/// Initial peaks from a previous report. All peaks reuse the shape the
/// current invocation selects, which matches how the report was produced as
/// long as the flags match.
fn peaks_from_report(path: &Path, shape: LineShape) -> Result<Vec<PeakModel>, CliError> {
    let params = read_report_params(path)?;
    let mut peaks = Vec::new();
    for i in 1.. {
        let Some(center) = lookup(&params, &format!("peak{i}_center_ev")) else {
            break;
        };
        let g = lookup(&params, &format!("peak{i}_fwhm_g_ev")).unwrap_or(0.0);
        let l = lookup(&params, &format!("peak{i}_fwhm_l_ev")).unwrap_or(0.0);
        let area = lookup(&params, &format!("peak{i}_area")).unwrap_or(1.0);
        let p = PeakModel::new(shape, center, g, l, area)
            .map_err(|e| CliError::Usage(format!("{}: peak {i}: {e}", path.display())))?;
        peaks.push(p);
    }
    if peaks.is_empty() {
        return Err(CliError::Usage(format!(
            "{}: no peak parameters found in report",
            path.display()
        )));
    }
    Ok(peaks)
}

fn fit_peaks_cmd(
    args: &FitPeaksArgs,
    cfg: &FileConfig,
    plot_wanted: bool,
) -> Result<Outcome, CliError> {
    let mut report = Report::new("fit-peaks");
    report.input("data", path_str(&args.data));
    let shape = shape_of(args.shape, cfg)?;
    report.input("shape", Val::Str(shape.as_str().to_owned()));
    let max_peaks = match args.max_peaks {
        Some(n) => n,
        None => cfg.get_u64("max_peaks")?.map(|v| v as usize).unwrap_or(6),
    };
    let baseline = args.baseline || cfg_bool(cfg, "baseline")?;
    report.input("baseline", Val::Bool(baseline));

    let mut spectrum = io::parse_spectrum_csv(&args.data)?;
    echo_meta(&mut report, spectrum.meta());
    let lo = resolve_f64(args.window_lo_ev, cfg, "window_lo_ev", None)?;
    let hi = resolve_f64(args.window_hi_ev, cfg, "window_hi_ev", None)?;
    if lo.is_some() || hi.is_some() {
        let lo_v = lo.unwrap_or(spectrum.energies_ev()[0]);
        let hi_v = hi.unwrap_or(*spectrum.energies_ev().last().expect("non-empty"));
        report.input("window_lo_ev", Val::Num(lo_v));
        report.input("window_hi_ev", Val::Num(hi_v));
        spectrum =
            resample_window(&spectrum, lo_v, hi_v).map_err(|e| CliError::Usage(e.to_string()))?;
    }

    let init = match &args.init_from {
        Some(p) => {
            report.input("init_from", path_str(p));
            peaks_from_report(p, shape)?
        }
        None => {
            report.input("max_peaks", Val::Int(max_peaks as i64));
            seed_peaks(&spectrum, shape, max_peaks)
        }
    };

    match fit_peaks(&spectrum, &init, baseline) {
        Ok(res) => {
            for (i, fp) in res.peaks.iter().enumerate() {
                let n = i + 1;
                report.param(&format!("peak{n}_center_ev"), fp.model.center_ev());
                report.param(&format!("peak{n}_fwhm_g_ev"), fp.model.fwhm_g_ev());
                report.param(&format!("peak{n}_fwhm_l_ev"), fp.model.fwhm_l_ev());
                report.param(&format!("peak{n}_area"), fp.model.area());
                report.sigma(&format!("peak{n}_center_ev"), fp.center_sigma);
                report.sigma(&format!("peak{n}_fwhm_g_ev"), fp.fwhm_g_sigma);
                report.sigma(&format!("peak{n}_fwhm_l_ev"), fp.fwhm_l_sigma);
                report.sigma(&format!("peak{n}_area"), fp.area_sigma);
            }
            if let Some(b) = &res.baseline {
                report.param("baseline_c0", b.c0);
                report.param("baseline_c1", b.c1);
                report.sigma("baseline_c0", b.c0_sigma);
                report.sigma("baseline_c1", b.c1_sigma);
            }
            for (i, fp) in res.peaks.iter().enumerate() {
                if let Ok(nm) = ev_to_nm(fp.model.center_ev()) {
                    report.extra(&format!("peak{}_center_nm", i + 1), Val::Num(nm));
                }
            }
            let exit = finish(&mut report, res.report.status, res.report.residual_norm);
            let plot = plot_wanted.then(|| {
                let (c0, c1) = res
                    .baseline
                    .as_ref()
                    .map(|b| (b.c0, b.c1))
                    .unwrap_or((0.0, 0.0));
                let rows = spectrum
                    .energies_ev()
                    .iter()
                    .zip(spectrum.intensities())
                    .map(|(&e, &y)| {
                        let model: f64 =
                            res.peaks.iter().map(|fp| eval_profile(&fp.model, e)).sum::<f64>()
                                + c0
                                + c1 * e;
                        vec![e, y, model]
                    })
                    .collect();
                Plot {
                    columns: vec!["energy_ev", "intensity_data", "intensity_model"],
                    rows,
                }
            });
            Ok(Outcome { report, exit, plot })
        }
        Err(e) => {
            let exit = fit_failed(&mut report, e);
            Ok(Outcome {
                report,
                exit,
                plot: None,
            })
        }
    }
}

fn fit_passler_cmd(
    args: &FitPasslerArgs,
    cfg: &FileConfig,
    plot_wanted: bool,
) -> Result<Outcome, CliError> {
    let mut report = Report::new("fit-passler");
    report.input("data", path_str(&args.data));
    let theta = require(
        resolve_f64(args.theta, cfg, "theta_k", None)?,
        "--theta (or config theta_k)",
    )?;
    report.input("theta_k", Val::Num(theta));
    let (pts, meta) = io::parse_xy_csv(&args.data, "temperature_k", "energy_ev")?;
    echo_meta(&mut report, &meta);
    match fit_passler(&pts, theta) {
        Ok((f, rep)) => {
            report.param("e0_ev", f.params.e0_ev);
            report.param("alpha_ev_per_k", f.params.alpha_ev_per_k);
            report.param("p", f.params.p);
            report.sigma("e0_ev", f.e0_sigma);
            report.sigma("alpha_ev_per_k", f.alpha_sigma);
            report.sigma("p", f.p_sigma);
            let exit = finish(&mut report, rep.status, rep.residual_norm);
            let plot = plot_wanted.then(|| {
                let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                let rows = linspace(lo, hi, 200)
                    .into_iter()
                    .map(|t| vec![t, passler_energy(&f.params, t).unwrap_or(f64::NAN)])
                    .collect();
                Plot {
                    columns: vec!["temperature_k", "energy_ev"],
                    rows,
                }
            });
            Ok(Outcome { report, exit, plot })
        }
        Err(e) => {
            let exit = fit_failed(&mut report, e);
            Ok(Outcome {
                report,
                exit,
                plot: None,
            })
        }
    }
}

fn fit_quench_cmd(
    args: &FitQuenchArgs,
    cfg: &FileConfig,
    plot_wanted: bool,
) -> Result<Outcome, CliError> {
    let mut report = Report::new("fit-quench");
    report.input("data", path_str(&args.data));
    let e1 = require(
        resolve_f64(args.e1_ev, cfg, "e1_ev", None)?,
        "--e1-ev (or config e1_ev)",
    )?;
    report.input("e1_ev", Val::Num(e1));
    let e2_fixed = resolve_f64(args.e2_ev, cfg, "e2_ev", None)?;
    let mode = match e2_fixed {
        Some(e2) => {
            report.input("e2_mode", Val::Str("fixed".into()));
            E2Mode::Fixed(e2)
        }
        None => {
            report.input("e2_mode", Val::Str("free".into()));
            E2Mode::Free
        }
    };
    let (pts, meta) = io::parse_xy_csv(&args.data, "temperature_k", "intensity")?;
    echo_meta(&mut report, &meta);
    match fit_quench(&pts, e1, mode) {
        Ok((f, rep)) => {
            report.param("i0", f.params.i0);
            report.param("a", f.params.a);
            report.param("b", f.params.b);
            report.param("e2_ev", f.params.e2_ev);
            report.sigma("i0", f.i0_sigma);
            report.sigma("a", f.a_sigma);
            report.sigma("b", f.b_sigma);
            report.sigma("e2_ev", f.e2_sigma);
            let exit = finish(&mut report, rep.status, rep.residual_norm);
            let plot = plot_wanted.then(|| {
                let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                let rows = linspace(lo, hi, 200)
                    .into_iter()
                    .map(|t| vec![t, quench_intensity(&f.params, t).unwrap_or(f64::NAN)])
                    .collect();
                Plot {
                    columns: vec!["temperature_k", "intensity"],
                    rows,
                }
            });
            Ok(Outcome { report, exit, plot })
        }
        Err(e) => {
            let exit = fit_failed(&mut report, e);
            Ok(Outcome {
                report,
                exit,
                plot: None,
            })
        }
    }
}

fn fit_ratio_cmd(args: &DataArgs, plot_wanted: bool) -> Result<Outcome, CliError> {
    let mut report = Report::new("fit-ratio");
    report.input("data", path_str(&args.data));
    let (pts, meta) = io::parse_xy_csv(&args.data, "temperature_k", "ratio")?;
    echo_meta(&mut report, &meta);
    match fit_ratio_activation(&pts) {
        Ok((f, rep)) => {
            report.param("r0", f.r0);
            report.param("ea_ev", f.ea_ev);
            report.sigma("r0", f.r0_sigma);
            report.sigma("ea_ev", f.ea_sigma);
            let exit = finish(&mut report, rep.status, rep.residual_norm);
            let plot = plot_wanted.then(|| {
                let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                let rows = linspace(lo, hi, 200)
                    .into_iter()
                    .map(|t| vec![t, f.r0 * (-f.ea_ev / (CODATA_2018.k_b * t)).exp()])
                    .collect();
                Plot {
                    columns: vec!["temperature_k", "ratio"],
                    rows,
                }
            });
            Ok(Outcome { report, exit, plot })
        }
        Err(e) => {
            let exit = fit_failed(&mut report, e);
            Ok(Outcome {
                report,
                exit,
                plot: None,
            })
        }
    }
}

fn fit_saturation_cmd(args: &DataArgs, plot_wanted: bool) -> Result<Outcome, CliError> {
    let mut report = Report::new("fit-saturation");
    report.input("data", path_str(&args.data));
    let (pts, meta) = io::parse_xy_csv(&args.data, "pump_w_cm2", "intensity")?;
    echo_meta(&mut report, &meta);
    match fit_saturation(&pts) {
        Ok((f, rep)) => {
            report.param("i_inf", f.params.i_inf);
            report.param("p_sat_w_cm2", f.params.p_sat_w_cm2);
            report.sigma("i_inf", f.i_inf_sigma);
            report.sigma("p_sat_w_cm2", f.p_sat_sigma);
            let exit = finish(&mut report, rep.status, rep.residual_norm);
            let plot = plot_wanted.then(|| {
                let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
                let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                let rows = linspace(lo, hi, 200)
                    .into_iter()
                    .map(|p| vec![p, saturation_intensity(&f.params, p).unwrap_or(f64::NAN)])
                    .collect();
                Plot {
                    columns: vec!["pump_w_cm2", "intensity"],
                    rows,
                }
            });
            Ok(Outcome { report, exit, plot })
        }
        Err(e) => {
            let exit = fit_failed(&mut report, e);
            Ok(Outcome {
                report,
                exit,
                plot: None,
            })
        }
    }
}

fn simulate_trpl_cmd(
    args: &SimulateTrplArgs,
    cfg: &FileConfig,
    plot_wanted: bool,
) -> Result<Outcome, CliError> {
    let mut report = Report::new("simulate-trpl");
    let tau0 = require(resolve_f64(args.tau0_ns, cfg, "tau0_ns", None)?, "--tau0-ns")?;
    let tau_f = require(
        resolve_f64(args.tau_f_ns, cfg, "tau_f_ns", None)?,
        "--tau-f-ns",
    )?;
    let tau_ex = resolve_f64(args.tau_ex_ns, cfg, "tau_ex_ns", Some(200.0))?.expect("default");
    let capacity = resolve_f64(args.capacity, cfg, "capacity", Some(1e12))?.expect("default");
    let n0 = resolve_f64(args.n0, cfg, "n0_init", Some(0.0))?.expect("default");
    let nex = resolve_f64(args.nex, cfg, "nex_init", Some(1.0))?.expect("default");
    let start = resolve_f64(args.start_ns, cfg, "start_ns", Some(0.0))?.expect("default");
    // 0.4 ns default matches the timing resolution of a typical
    // single-photon counting chain.
    let bin = resolve_f64(args.bin_ns, cfg, "bin_ns", Some(0.4))?.expect("default");
    let bins = args.bins.or(cfg.get_u64("bins")?).unwrap_or(1000);
    let scale = resolve_f64(args.scale, cfg, "scale", Some(1.0))?.expect("default");
    let background = resolve_f64(args.background, cfg, "background", Some(0.0))?.expect("default");
    let irf = resolve_f64(args.irf_fwhm_ns, cfg, "irf_fwhm_ns", Some(0.0))?.expect("default");
    let seed = args.seed.or(cfg.get_u64("seed")?).unwrap_or(0);
    let noise = noise_model(args.noise, args.sigma, cfg)?;

    if !(bin > 0.0) || bins == 0 {
        return Err(CliError::Usage("need --bin-ns > 0 and --bins > 0".into()));
    }
    let rate = RateParams {
        tau0_ns: tau0,
        tau_f_ns: tau_f,
        tau_ex_ns: tau_ex,
        capacity,
        n0_init: n0,
        nex_init: nex,
    };
    let centers: Vec<f64> = (0..bins)
        .map(|i| start + (i as f64 + 0.5) * bin)
        .collect();
    let spec = GeneratorSpec {
        model: SynthModel::Trpl {
            rate,
            scale,
            background,
            irf_fwhm_ns: irf,
        },
        grid: centers.clone(),
        noise,
        seed,
        meta: Metadata::default(),
    };
    let data = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let SynthData::Histogram(h) = data else {
        unreachable!("decay model generates a histogram");
    };
    io::write_histogram_csv(&args.data_out, &h)?;

    report.input("data_out", path_str(&args.data_out));
    report.input("noise", Val::Str(noise_name(noise).to_owned()));
    report.input("seed", Val::Int(seed as i64));
    report.input("start_ns", Val::Num(start));
    report.input("bin_ns", Val::Num(bin));
    report.input("bins", Val::Int(bins as i64));
    report.input("irf_fwhm_ns", Val::Num(irf));
    report.param("tau0_ns", tau0);
    report.param("tau_f_ns", tau_f);
    report.param("tau_ex_ns", tau_ex);
    report.param("capacity", capacity);
    report.param("n0_init", n0);
    report.param("nex_init", nex);
    report.param("scale", scale);
    report.param("background", background);
    report.status = "simulated".into();
    let plot = if plot_wanted {
        let traj =
            simulate_rate_eqs(&rate, &centers).map_err(|e| CliError::Usage(e.to_string()))?;
        let emission: Vec<f64> = traj.n0.iter().map(|&n| n / tau0).collect();
        let smeared =
            convolve_irf(&emission, bin, irf).map_err(|e| CliError::Usage(e.to_string()))?;
        let rows = centers
            .iter()
            .enumerate()
            .map(|(i, &t)| vec![t, traj.n0[i], traj.nex[i], scale * smeared[i] + background])
            .collect();
        Some(Plot {
            columns: vec!["time_ns", "n0", "nex", "signal"],
            rows,
        })
    } else {
        None
    };
    Ok(Outcome {
        report,
        exit: 0,
        plot,
    })
}

fn noise_model(
    flag: NoiseArg,
    sigma: Option<f64>,
    cfg: &FileConfig,
) -> Result<NoiseModel, CliError> {
    match flag {
        NoiseArg::None => Ok(NoiseModel::None),
        NoiseArg::Poisson => Ok(NoiseModel::Poisson),
        NoiseArg::Gaussian => {
            let sigma = require(
                resolve_f64(sigma, cfg, "sigma", None)?,
                "--sigma (gaussian noise)",
            )?;
            Ok(NoiseModel::Gaussian { sigma })
        }
    }
}

fn noise_name(noise: NoiseModel) -> &'static str {
    match noise {
        NoiseModel::None => "none",
        NoiseModel::Gaussian { .. } => "gaussian",
        NoiseModel::Poisson => "poisson",
    }
}

fn fix_names(fix: &[RateParam]) -> String {
    if fix.is_empty() {
        return "none".into();
    }
    let names: Vec<&str> = fix
        .iter()
        .map(|p| match p {
            RateParam::Tau0 => "tau0",
            RateParam::TauF => "tau-f",
            RateParam::TauEx => "tau-ex",
            RateParam::Capacity => "capacity",
            RateParam::N0Init => "n0",
            RateParam::NexInit => "nex",
        })
        .collect();
    names.join(",")
}

fn parse_fix_list(s: &str) -> Result<Vec<RateParam>, CliError> {
    if s.trim().eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    let mut fix = Vec::new();
    for tok in s.split(',') {
        let p = match tok.trim().to_ascii_lowercase().replace('_', "-").as_str() {
            "tau0" => RateParam::Tau0,
            "tau-f" => RateParam::TauF,
            "tau-ex" => RateParam::TauEx,
            "capacity" => RateParam::Capacity,
            "n0" => RateParam::N0Init,
            "nex" => RateParam::NexInit,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown parameter '{other}' in --fix"
                )))
            }
        };
        if !fix.contains(&p) {
            fix.push(p);
        }
    }
    Ok(fix)
}

fn default_fix(h: &DecayHistogram) -> Vec<RateParam> {
    let counts = h.counts();
    let argmax = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut fix = vec![RateParam::Capacity, RateParam::N0Init, RateParam::NexInit];
    // A rise shorter than 20 bins cannot constrain the reservoir lifetime.
    if argmax < 20 {
        fix.push(RateParam::TauEx);
    }
    fix
}

fn fit_trpl_cmd(
    args: &FitTrplArgs,
    cfg: &FileConfig,
    plot_wanted: bool,
) -> Result<Outcome, CliError> {
    let mut report = Report::new("fit-trpl");
    report.input("data", path_str(&args.data));
    let h = io::parse_histogram_csv(&args.data)?;
    echo_meta(&mut report, h.meta());

    let seed_params = match &args.init_from {
        Some(p) => {
            report.input("init_from", path_str(p));
            Some(read_report_params(p)?)
        }
        None => None,
    };
    let pick = |flag: Option<f64>, key: &str, dflt: Option<f64>| -> Result<Option<f64>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        if let Some(v) = seed_params.as_ref().and_then(|m| lookup(m, key)) {
            return Ok(Some(v));
        }
        Ok(cfg.get_f64(key)?.or(dflt))
    };
    let tau0 = require(
        pick(args.tau0_ns, "tau0_ns", None)?,
        "--tau0-ns (or --init-from)",
    )?;
    let tau_f = require(
        pick(args.tau_f_ns, "tau_f_ns", None)?,
        "--tau-f-ns (or --init-from)",
    )?;
    let tau_ex = pick(args.tau_ex_ns, "tau_ex_ns", Some(200.0))?.expect("default");
    let capacity = pick(args.capacity, "capacity", Some(1e12))?.expect("default");
    let n0 = pick(args.n0, "n0_init", Some(0.0))?.expect("default");
    let nex = pick(args.nex, "nex_init", Some(1.0))?.expect("default");
    let irf = resolve_f64(args.irf_fwhm_ns, cfg, "irf_fwhm_ns", Some(0.0))?.expect("default");

    let fix = match args.fix.as_deref().or(cfg.get("fix")) {
        Some(s) => parse_fix_list(s)?,
        None => default_fix(&h),
    };
    report.input("fix", Val::Str(fix_names(&fix)));
    report.input("irf_fwhm_ns", Val::Num(irf));

    let init = RateParams {
        tau0_ns: tau0,
        tau_f_ns: tau_f,
        tau_ex_ns: tau_ex,
        capacity,
        n0_init: n0,
        nex_init: nex,
    };
    match fit_trpl_rate(&h, &init, &fix, irf) {
        Ok((f, rep)) => {
            report.param("tau0_ns", f.params.tau0_ns);
            report.param("tau_f_ns", f.params.tau_f_ns);
            report.param("tau_ex_ns", f.params.tau_ex_ns);
            report.param("capacity", f.params.capacity);
            report.param("n0_init", f.params.n0_init);
            report.param("nex_init", f.params.nex_init);
            report.param("scale", f.scale);
            report.param("background", f.background);
            report.sigma("tau0_ns", f.sigmas.tau0);
            report.sigma("tau_f_ns", f.sigmas.tau_f);
            report.sigma("tau_ex_ns", f.sigmas.tau_ex);
            report.sigma("capacity", f.sigmas.capacity);
            report.sigma("n0_init", f.sigmas.n0_init);
            report.sigma("nex_init", f.sigmas.nex_init);
            report.sigma("scale", f.sigmas.scale);
            report.sigma("background", f.sigmas.background);
            let exit = finish(&mut report, rep.status, rep.residual_norm);
            let plot = if plot_wanted {
                let centers: Vec<f64> = (0..h.len())
                    .map(|i| h.time_ns(i) + 0.5 * h.bin_ns())
                    .collect();
                let traj = simulate_rate_eqs(&f.params, &centers)
                    .map_err(|e| CliError::Io(e.to_string()))?;
                let emission: Vec<f64> =
                    traj.n0.iter().map(|&n| n / f.params.tau0_ns).collect();
                let smeared = convolve_irf(&emission, h.bin_ns(), irf)
                    .map_err(|e| CliError::Io(e.to_string()))?;
                let rows = centers
                    .iter()
                    .enumerate()
                    .map(|(i, &t)| {
                        vec![t, h.counts()[i], f.scale * smeared[i] + f.background]
                    })
                    .collect();
                Some(Plot {
                    columns: vec!["time_ns", "counts_data", "counts_model"],
                    rows,
                })
            } else {
                None
            };
            Ok(Outcome { report, exit, plot })
        }
        Err(e) => {
            let exit = fit_failed(&mut report, e);
            Ok(Outcome {
                report,
                exit,
                plot: None,
            })
        }
    }
}

fn decompose_rates_cmd(args: &DecomposeRatesArgs, cfg: &FileConfig) -> Result<Outcome, CliError> {
    let mut report = Report::new("decompose-rates");
    let gamma = require(
        resolve_f64(args.gamma_total_per_us, cfg, "gamma_total_per_us", None)?,
        "--gamma-total-per-us",
    )?;
    let eta = require(resolve_f64(args.eta, cfg, "eta", None)?, "--eta")?;
    let convention = match args.convention {
        Some(ConventionArg::HbarGamma) => FourierConvention::HbarGamma,
        Some(ConventionArg::HalfHbarGamma) => FourierConvention::HalfHbarGamma,
        None => match cfg.get("convention") {
            None | Some("hbar-gamma") => FourierConvention::HbarGamma,
            Some("half-hbar-gamma") => FourierConvention::HalfHbarGamma,
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "config key 'convention': unknown value '{other}'"
                )))
            }
        },
    };
    report.input("gamma_total_per_us", Val::Num(gamma));
    report.input("eta", Val::Num(eta));
    report.input(
        "convention",
        Val::Str(
            match convention {
                FourierConvention::HbarGamma => "hbar-gamma",
                FourierConvention::HalfHbarGamma => "half-hbar-gamma",
            }
            .to_owned(),
        ),
    );
    let d = decompose_rates_with(gamma, eta, convention)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    report.param("gamma_r_per_us", d.gamma_r_per_us);
    report.param("gamma_nr_per_us", d.gamma_nr_per_us);
    report.param("linewidth_ev", d.linewidth_ev);
    report.status = "evaluated".into();
    Ok(Outcome {
        report,
        exit: 0,
        plot: None,
    })
}

fn fit_magneto_cmd(args: &DataArgs, plot_wanted: bool) -> Result<Outcome, CliError> {
    let mut report = Report::new("fit-magneto");
    report.input("data", path_str(&args.data));
    let (pts, meta) = io::parse_xy_csv(&args.data, "field_t", "fwhm_ev")?;
    echo_meta(&mut report, &meta);
    match fit_zeeman_broadening(&pts) {
        Ok((f, rep)) => {
            report.param("gamma0_ev", f.gamma0_ev);
            report.param("eps_ev_per_t", f.eps_ev_per_t);
            report.sigma("gamma0_ev", f.gamma0_sigma);
            report.sigma("eps_ev_per_t", f.eps_sigma);
            let exit = finish(&mut report, rep.status, rep.residual_norm);
            let plot = plot_wanted.then(|| {
                let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
                let rows = linspace(0.0, hi, 200)
                    .into_iter()
                    .map(|b| {
                        vec![
                            b,
                            broadened_linewidth(f.gamma0_ev, f.eps_ev_per_t, b)
                                .unwrap_or(f64::NAN),
                        ]
                    })
                    .collect();
                Plot {
                    columns: vec!["field_t", "fwhm_ev"],
                    rows,
                }
            });
            Ok(Outcome { report, exit, plot })
        }
        Err(e) => {
            let exit = fit_failed(&mut report, e);
            Ok(Outcome {
                report,
                exit,
                plot: None,
            })
        }
    }
}

fn eval_zeeman_cmd(args: &EvalZeemanArgs, cfg: &FileConfig) -> Result<Outcome, CliError> {
    let mut report = Report::new("eval-zeeman");
    let b = require(resolve_f64(args.b, cfg, "b_t", None)?, "--b")?;
    let g = resolve_f64(args.g, cfg, "g", None)?;
    let ge = resolve_f64(args.ge, cfg, "ge", None)?;
    let gh = resolve_f64(args.gh, cfg, "gh", None)?;
    report.input("b_t", Val::Num(b));
    match (g, ge, gh) {
        (Some(g), None, None) => {
            report.input("g", Val::Num(g));
            let split = zeeman_splitting(g, b).map_err(|e| CliError::Usage(e.to_string()))?;
            report.param("splitting_ev", split);
        }
        (None, Some(ge), Some(gh)) => {
            report.input("ge", Val::Num(ge));
            report.input("gh", Val::Num(gh));
            let terms = ZeemanTerms { g_e: ge, g_h: gh };
            let shifts = terms
                .transition_shifts(b)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            for (i, s) in shifts.iter().enumerate() {
                report.param(&format!("shift_{}_ev", i + 1), *s);
            }
        }
        _ => {
            return Err(CliError::Usage(
                "pass either --g alone, or --ge together with --gh".into(),
            ))
        }
    }
    report.status = "evaluated".into();
    Ok(Outcome {
        report,
        exit: 0,
        plot: None,
    })
}

fn fit_esr_cmd(
    args: &FitEsrArgs,
    cfg: &FileConfig,
    plot_wanted: bool,
) -> Result<Outcome, CliError> {
    let mut report = Report::new("fit-esr");
    report.input("data", path_str(&args.data));
    let freq = require(
        resolve_f64(args.freq_hz, cfg, "freq_hz", None)?,
        "--freq-hz (or config freq_hz)",
    )?;
    report.input("freq_hz", Val::Num(freq));
    let (pts, meta) = io::parse_xy_csv(&args.data, "field_t", "signal")?;
    echo_meta(&mut report, &meta);
    let fields: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let signal: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let spec = match EsrSpectrum::new(fields, signal) {
        Ok(s) => s,
        Err(e) => {
            let exit = fit_failed(&mut report, e);
            return Ok(Outcome {
                report,
                exit,
                plot: None,
            });
        }
    };
    match fit_esr_line(&spec, freq) {
        Ok((f, rep)) => {
            report.param("g", f.g);
            report.param("b_res_t", f.b_res_t);
            report.param("fwhm_g_t", f.fwhm_g_t);
            report.param("fwhm_l_t", f.fwhm_l_t);
            report.param("amplitude", f.amplitude);
            report.param("offset", f.offset);
            report.sigma("g", f.g_sigma);
            report.sigma("b_res_t", f.b_res_sigma);
            report.sigma("fwhm_g_t", f.fwhm_g_sigma);
            report.sigma("fwhm_l_t", f.fwhm_l_sigma);
            let exit = finish(&mut report, rep.status, rep.residual_norm);
            let plot = plot_wanted.then(|| {
                let lo = spec.fields_t().first().copied().unwrap_or(0.0);
                let hi = spec.fields_t().last().copied().unwrap_or(1.0);
                let rows = linspace(lo, hi, 400)
                    .into_iter()
                    .map(|b| {
                        vec![
                            b,
                            eval_esr_line(f.amplitude, f.b_res_t, f.fwhm_g_t, f.fwhm_l_t, f.offset, b),
                        ]
                    })
                    .collect();
                Plot {
                    columns: vec!["field_t", "signal"],
                    rows,
                }
            });
            Ok(Outcome { report, exit, plot })
        }
        Err(e) => {
            let exit = fit_failed(&mut report, e);
            Ok(Outcome {
                report,
                exit,
                plot: None,
            })
        }
    }
}

fn identify_cmd(args: &IdentifyArgs, cfg: &FileConfig) -> Result<Outcome, CliError> {
    let mut report = Report::new("identify");
    let center = require(
        resolve_f64(args.center, cfg, "center_nm", None)?,
        "--center",
    )?;
    let tol = resolve_f64(args.tol, cfg, "tol_nm", Some(0.5))?.expect("default");
    report.input("center_nm", Val::Num(center));
    report.input("tol_nm", Val::Num(tol));
    let user_path: Option<PathBuf> = args
        .catalog
        .clone()
        .or_else(|| cfg.get("catalog").map(PathBuf::from))
        .or_else(|| std::env::var_os("ZPLKIT_CATALOG").map(PathBuf::from));
    let mut catalog = Catalog::builtin();
    if let Some(p) = &user_path {
        report.input("catalog", path_str(p));
        let user = io::parse_catalog_csv(p)?;
        catalog = catalog
            .merge(&user, args.allow_override)
            .map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
    }
    let matches = catalog
        .identify(center, tol)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let list: Vec<Val> = matches
        .iter()
        .map(|m| {
            Val::Map(vec![
                ("label".into(), Val::Str(m.line.label.clone())),
                ("center_nm".into(), Val::Num(m.line.center_nm)),
                ("distance_nm".into(), Val::Num(m.distance_nm)),
                ("kind".into(), Val::Str(m.line.kind.as_str().to_owned())),
            ])
        })
        .collect();
    report.extra("matches", Val::List(list));
    report.status = "ok".into();
    Ok(Outcome {
        report,
        exit: 0,
        plot: None,
    })
}

fn synth_grid(cfg: &FileConfig, model_id: &str) -> Result<Vec<f64>, CliError> {
    if let Some(list) = cfg.get("grid") {
        let vals: Result<Vec<f64>, _> = list.split(',').map(|t| t.trim().parse()).collect();
        return vals.map_err(|_| CliError::Usage("config key 'grid': non-numeric entry".into()));
    }
    let count = cfg
        .get_u64("grid_count")?
        .ok_or_else(|| CliError::Usage("generator config needs 'grid' or 'grid_count'".into()))?
        as usize;
    let start = cfg.get_f64("grid_start")?.unwrap_or(0.0);
    if model_id == "trpl" {
        // The decay grid is given as left edge + bin width; the generator
        // wants bin centers.
        let bin = cfg
            .get_f64("grid_bin")?
            .ok_or_else(|| CliError::Usage("trpl generator needs 'grid_bin'".into()))?;
        return Ok((0..count)
            .map(|i| start + (i as f64 + 0.5) * bin)
            .collect());
    }
    let stop = cfg
        .get_f64("grid_stop")?
        .ok_or_else(|| CliError::Usage("generator config needs 'grid_stop'".into()))?;
    if count < 2 {
        return Err(CliError::Usage("grid_count must be >= 2".into()));
    }
    Ok(linspace(start, stop, count))
}

fn synth_columns(model_id: &str) -> (&'static str, &'static str) {
    match model_id {
        "passler" => ("temperature_k", "energy_ev"),
        "quench" => ("temperature_k", "intensity"),
        "ratio" => ("temperature_k", "ratio"),
        "saturation" => ("pump_w_cm2", "intensity"),
        "magneto-fwhm" => ("field_t", "fwhm_ev"),
        _ => ("field_t", "signal"),
    }
}

fn synth_cmd(args: &SynthArgs, flags: &FileConfig, out_flag: Option<&Path>) -> Result<i32, CliError> {
    // --config is accepted but ignored here: the generator reads its own
    // config file, whose values always describe the dataset.
    let _ = flags;
    let cfg = FileConfig::load(&args.spec)?;
    let model_id = cfg
        .get("model")
        .ok_or_else(|| CliError::Usage("generator config needs 'model'".into()))?
        .to_ascii_lowercase();
    let seed = args.seed.or(cfg.get_u64("seed")?).unwrap_or(0);
    let noise = match cfg.get("noise").map(str::to_ascii_lowercase).as_deref() {
        None | Some("none") => NoiseModel::None,
        Some("poisson") => NoiseModel::Poisson,
        Some("gaussian") => NoiseModel::Gaussian {
            sigma: cfg
                .get_f64("sigma")?
                .ok_or_else(|| CliError::Usage("gaussian noise needs 'sigma'".into()))?,
        },
        Some(other) => {
            return Err(CliError::Usage(format!("unknown noise model '{other}'")))
        }
    };
    let meta = Metadata {
        temperature_k: cfg.get_f64("temperature_k")?,
        pump_w_cm2: cfg.get_f64("pump_w_cm2")?,
        b_field_t: cfg.get_f64("b_field_t")?,
        process_step: cfg.get("process_step").map(str::to_owned),
    };
    let out_path: PathBuf = match out_flag {
        Some(p) => p.to_owned(),
        None => {
            let rel = PathBuf::from(cfg.get("out").ok_or_else(|| {
                CliError::Usage("generator config needs 'out' (or pass --out)".into())
            })?);
            if rel.is_absolute() {
                rel
            } else {
                match args.spec.parent() {
                    Some(dir) => dir.join(&rel),
                    None => rel,
                }
            }
        }
    };
    let req = |key: &str| -> Result<f64, CliError> {
        cfg.get_f64(key)?
            .ok_or_else(|| CliError::Usage(format!("{}: missing '{key}'", args.spec.display())))
    };
    let opt = |key: &str, dflt: f64| -> Result<f64, CliError> {
        Ok(cfg.get_f64(key)?.unwrap_or(dflt))
    };
    let grid = synth_grid(&cfg, &model_id)?;
    let model = match model_id.as_str() {
        "spectrum" => {
            let mut peaks = Vec::new();
            for (idx, line) in cfg.get_all("peak").iter().enumerate() {
                let parts: Vec<&str> = line.split(',').map(str::trim).collect();
                if parts.len() != 5 {
                    return Err(CliError::Usage(format!(
                        "peak {}: expected 'shape,center_ev,fwhm_g_ev,fwhm_l_ev,area'",
                        idx + 1
                    )));
                }
                let shape = parse_shape(parts[0]).ok_or_else(|| {
                    CliError::Usage(format!("peak {}: unknown shape '{}'", idx + 1, parts[0]))
                })?;
                let nums: Result<Vec<f64>, _> = parts[1..].iter().map(|t| t.parse()).collect();
                let nums = nums.map_err(|_| {
                    CliError::Usage(format!("peak {}: non-numeric parameter", idx + 1))
                })?;
                let p = PeakModel::new(shape, nums[0], nums[1], nums[2], nums[3])
                    .map_err(|e| CliError::Usage(format!("peak {}: {e}", idx + 1)))?;
                peaks.push(p);
            }
            SynthModel::Spectrum {
                peaks,
                baseline_c0: opt("baseline_c0", 0.0)?,
                baseline_c1: opt("baseline_c1", 0.0)?,
            }
        }
        "passler" => SynthModel::LineShift(PasslerParams {
            e0_ev: req("e0_ev")?,
            alpha_ev_per_k: req("alpha_ev_per_k")?,
            theta_k: req("theta_k")?,
            p: req("p")?,
        }),
        "quench" => SynthModel::Quench(QuenchParams {
            i0: req("i0")?,
            a: req("a")?,
            b: req("b")?,
            e1_ev: req("e1_ev")?,
            e2_ev: req("e2_ev")?,
        }),
        "ratio" => SynthModel::Ratio {
            r0: req("r0")?,
            ea_ev: req("ea_ev")?,
        },
        "saturation" => SynthModel::Saturation(SaturationParams {
            i_inf: req("i_inf")?,
            p_sat_w_cm2: req("p_sat_w_cm2")?,
        }),
        "trpl" => SynthModel::Trpl {
            rate: RateParams {
                tau0_ns: req("tau0_ns")?,
                tau_f_ns: req("tau_f_ns")?,
                tau_ex_ns: opt("tau_ex_ns", 200.0)?,
                capacity: opt("capacity", 1e12)?,
                n0_init: opt("n0_init", 0.0)?,
                nex_init: opt("nex_init", 1.0)?,
            },
            scale: opt("scale", 1.0)?,
            background: opt("background", 0.0)?,
            irf_fwhm_ns: opt("irf_fwhm_ns", 0.0)?,
        },
        "magneto-fwhm" => SynthModel::MagnetoFwhm {
            gamma0_ev: req("gamma0_ev")?,
            eps_ev_per_t: req("eps_ev_per_t")?,
        },
        "esr" => SynthModel::Esr {
            amplitude: opt("amplitude", 1.0)?,
            b_res_t: req("b_res_t")?,
            fwhm_g_t: req("fwhm_g_t")?,
            fwhm_l_t: req("fwhm_l_t")?,
            offset: opt("offset", 0.0)?,
        },
        other => return Err(CliError::Usage(format!("unknown model '{other}'"))),
    };
    let data = generate(&GeneratorSpec {
        model,
        grid,
        noise,
        seed,
        meta: meta.clone(),
    })
    .map_err(|e| CliError::Usage(format!("{}: {e}", args.spec.display())))?;
    match data {
        SynthData::Spectrum(s) => {
            let axis = match cfg.get("axis").map(str::to_ascii_lowercase).as_deref() {
                None | Some("energy_ev") => SpectrumAxis::EnergyEv,
                Some("wavelength_nm") => SpectrumAxis::WavelengthNm,
                Some(other) => {
                    return Err(CliError::Usage(format!("unknown axis '{other}'")))
                }
            };
            io::write_spectrum_csv(&out_path, &s, axis)?;
        }
        SynthData::Histogram(h) => io::write_histogram_csv(&out_path, &h)?,
        SynthData::Points(pts) => {
            let (x, y) = synth_columns(&model_id);
            io::write_xy_csv(&out_path, x, y, &pts, &meta)?;
        }
    }
    Ok(0)
}
