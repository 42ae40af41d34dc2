//! Command-line front end for the zplkit library.
//!
//! One command per process. Every command writes a JSON report (stdout by
//! default, `--out FILE` to write a file); `--emit-plot-data` adds a TSV
//! model-curve file next to the report. Exit codes: 0 converged or evaluated,
//! 1 I/O or parse error, 2 fit failure (a report is still written), 64 usage
//! error.

mod commands;
mod config;
mod io;
mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

/// Failures outside the fit itself. Fit failures are not errors at this
/// level: they produce a report with a non-converged status and exit 2.
#[derive(Debug)]
pub enum CliError {
    /// File system or parse problem; exit 1.
    Io(String),
    /// Bad invocation (missing or invalid flag values); exit 64.
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Usage(m) => write!(f, "{m}"),
        }
    }
}

impl std::error::Error for CliError {}

#[derive(Parser, Debug)]
#[command(
    name = "zplkit",
    version,
    about = "Fit and simulate photoluminescence spectra, thermal trends, decay histograms, and magnetic-resonance traces"
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,

    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,

    /// Key-value config file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Omit the timestamp so repeated runs yield byte-identical reports.
    #[arg(long, global = true)]
    pub no_timestamp: bool,

    /// Write tab-separated model-curve data next to --out.
    #[arg(long, global = true)]
    pub emit_plot_data: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeArg {
    Gaussian,
    Lorentzian,
    Voigt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    None,
    Gaussian,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    /// Linewidth = hbar * Gamma.
    HbarGamma,
    /// Linewidth = hbar * Gamma / 2.
    HalfHbarGamma,
}

#[derive(Subcommand, Debug)]
pub enum Cmd {
    /// Fit emission lines (plus optional affine baseline) to a spectrum.
    FitPeaks(FitPeaksArgs),
    /// Fit the low-temperature line-shift law to (T, energy) points.
    FitPassler(FitPasslerArgs),
    /// Fit the two-channel thermal quenching law to (T, intensity) points.
    FitQuench(FitQuenchArgs),
    /// Fit an activated ratio r0 exp(-Ea/kT) to (T, ratio) points.
    FitRatio(DataArgs),
    /// Fit the pump saturation law to (pump, intensity) points.
    FitSaturation(DataArgs),
    /// Integrate the two-level rate equations and write a synthetic decay histogram.
    SimulateTrpl(SimulateTrplArgs),
    /// Fit the rate-equation decay model to a measured histogram.
    FitTrpl(FitTrplArgs),
    /// Split a total decay rate into radiative and non-radiative parts.
    DecomposeRates(DecomposeRatesArgs),
    /// Fit the quadrature field-broadening law to (B, FWHM) points.
    FitMagneto(DataArgs),
    /// Evaluate Zeeman splittings or four-transition shift patterns.
    EvalZeeman(EvalZeemanArgs),
    /// Fit a derivative-mode resonance line and report the g-factor.
    FitEsr(FitEsrArgs),
    /// Look up emission lines near a wavelength in the line catalog.
    Identify(IdentifyArgs),
    /// Generate a synthetic dataset from a generator config file.
    ///
    /// Writes the CSV named by the config's `out` key (relative paths resolve
    /// against the config file's directory); `--out` overrides that path.
    Synth(SynthArgs),
}

#[derive(clap::Args, Debug)]
pub struct DataArgs {
    /// Input CSV file.
    pub data: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct FitPeaksArgs {
    /// Spectrum CSV (`wavelength_nm,intensity` or `energy_ev,intensity`).
    pub data: PathBuf,
    /// Line shape for seeded peaks.
    #[arg(long, value_enum)]
    pub shape: Option<ShapeArg>,
    /// Maximum number of peaks to seed automatically.
    #[arg(long)]
    pub max_peaks: Option<usize>,
    /// Fit an affine baseline c0 + c1 E alongside the peaks.
    #[arg(long)]
    pub baseline: bool,
    /// Restrict the fit to energies in [lo, hi] eV.
    #[arg(long, value_name = "EV")]
    pub window_lo_ev: Option<f64>,
    #[arg(long, value_name = "EV")]
    pub window_hi_ev: Option<f64>,
    /// Seed initial peaks from an earlier report's parameters.
    #[arg(long, value_name = "REPORT")]
    pub init_from: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct FitPasslerArgs {
    /// CSV with columns `temperature_k,energy_ev`.
    pub data: PathBuf,
    /// Effective phonon temperature in K, held fixed.
    #[arg(long, value_name = "K")]
    pub theta: Option<f64>,
}

#[derive(clap::Args, Debug)]
pub struct FitQuenchArgs {
    /// CSV with columns `temperature_k,intensity`.
    pub data: PathBuf,
    /// Shallow activation energy in eV, held fixed.
    #[arg(long, value_name = "EV")]
    pub e1_ev: Option<f64>,
    /// Deep activation energy in eV; fitted freely when absent.
    #[arg(long, value_name = "EV")]
    pub e2_ev: Option<f64>,
}

#[derive(clap::Args, Debug)]
pub struct SimulateTrplArgs {
    /// Radiative lifetime in ns.
    #[arg(long, value_name = "NS")]
    pub tau0_ns: Option<f64>,
    /// Feeding (transfer) time constant in ns.
    #[arg(long, value_name = "NS")]
    pub tau_f_ns: Option<f64>,
    /// Reservoir lifetime in ns.
    #[arg(long, value_name = "NS")]
    pub tau_ex_ns: Option<f64>,
    /// Number of available centers in the saturation factor.
    #[arg(long)]
    pub capacity: Option<f64>,
    /// Initial excited-center population.
    #[arg(long)]
    pub n0: Option<f64>,
    /// Initial reservoir population.
    #[arg(long)]
    pub nex: Option<f64>,
    /// First bin left edge in ns.
    #[arg(long, value_name = "NS")]
    pub start_ns: Option<f64>,
    /// Bin width in ns.
    #[arg(long, value_name = "NS")]
    pub bin_ns: Option<f64>,
    /// Number of bins.
    #[arg(long)]
    pub bins: Option<u64>,
    /// Counts per unit emission rate.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Constant background counts per bin.
    #[arg(long)]
    pub background: Option<f64>,
    /// Instrument response FWHM in ns (0 disables smearing).
    #[arg(long, value_name = "NS")]
    pub irf_fwhm_ns: Option<f64>,
    /// Noise model applied to the counts.
    #[arg(long, value_enum, default_value = "none")]
    pub noise: NoiseArg,
    /// Gaussian noise sigma (with --noise gaussian).
    #[arg(long)]
    pub sigma: Option<f64>,
    /// RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Histogram CSV output path.
    #[arg(long, value_name = "FILE")]
    pub data_out: PathBuf,
}

#[derive(clap::Args, Debug)]
pub struct FitTrplArgs {
    /// Histogram CSV with columns `time_ns,counts`.
    pub data: PathBuf,
    /// Initial radiative lifetime guess in ns.
    #[arg(long, value_name = "NS")]
    pub tau0_ns: Option<f64>,
    /// Initial feeding time guess in ns.
    #[arg(long, value_name = "NS")]
    pub tau_f_ns: Option<f64>,
    /// Initial reservoir lifetime guess in ns.
    #[arg(long, value_name = "NS")]
    pub tau_ex_ns: Option<f64>,
    /// Center capacity in the saturation factor.
    #[arg(long)]
    pub capacity: Option<f64>,
    /// Initial excited-center population.
    #[arg(long)]
    pub n0: Option<f64>,
    /// Initial reservoir population.
    #[arg(long)]
    pub nex: Option<f64>,
    /// Instrument response FWHM in ns.
    #[arg(long, value_name = "NS")]
    pub irf_fwhm_ns: Option<f64>,
    /// Comma-separated parameters to hold fixed
    /// (tau0,tau-f,tau-ex,capacity,n0,nex; "none" frees everything).
    /// Default: capacity,n0,nex, plus tau-ex when the rise has < 20 bins.
    #[arg(long, value_name = "LIST")]
    pub fix: Option<String>,
    /// Seed initial parameters from an earlier report.
    #[arg(long, value_name = "REPORT")]
    pub init_from: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
pub struct DecomposeRatesArgs {
    /// Total decay rate in 1/us.
    #[arg(long, value_name = "PER_US")]
    pub gamma_total_per_us: Option<f64>,
    /// Radiative quantum efficiency in (0, 1].
    #[arg(long)]
    pub eta: Option<f64>,
    /// Fourier-limit convention for the implied linewidth
    /// (default hbar-gamma).
    #[arg(long, value_enum)]
    pub convention: Option<ConventionArg>,
}

#[derive(clap::Args, Debug)]
pub struct EvalZeemanArgs {
    /// Single effective g-factor; reports the splitting g muB B.
    #[arg(long)]
    pub g: Option<f64>,
    /// Electron g-factor for the four-transition pattern.
    #[arg(long)]
    pub ge: Option<f64>,
    /// Hole g-factor for the four-transition pattern.
    #[arg(long)]
    pub gh: Option<f64>,
    /// Magnetic field in T.
    #[arg(long, value_name = "T")]
    pub b: Option<f64>,
}

#[derive(clap::Args, Debug)]
pub struct FitEsrArgs {
    /// CSV with columns `field_t,signal`.
    pub data: PathBuf,
    /// Microwave frequency in Hz.
    #[arg(long, value_name = "HZ")]
    pub freq_hz: Option<f64>,
}

#[derive(clap::Args, Debug)]
pub struct IdentifyArgs {
    /// Center wavelength to look up, in nm.
    #[arg(long, value_name = "NM")]
    pub center: Option<f64>,
    /// Match tolerance in nm.
    #[arg(long, value_name = "NM")]
    pub tol: Option<f64>,
    /// Extra catalog CSV merged over the built-in one
    /// (also via ZPLKIT_CATALOG).
    #[arg(long, value_name = "FILE")]
    pub catalog: Option<PathBuf>,
    /// Let user catalog entries replace built-in lines with the same label.
    #[arg(long)]
    pub allow_override: bool,
}

#[derive(clap::Args, Debug)]
pub struct SynthArgs {
    /// Generator config file.
    #[arg(long, value_name = "FILE")]
    pub spec: PathBuf,
    /// Override the config's RNG seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match commands::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(CliError::Io(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(1);
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            std::process::exit(64);
        }
    }
}
