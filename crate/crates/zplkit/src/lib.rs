//! Analysis toolkit for near-infrared photoluminescence of color centers in
//! silicon.
//!
//! The crate is organized around the measurement workflow:
//!
//! * [`units`]: physical constants, energy/wavelength conversion, and the two
//!   core containers ([`units::Spectrum`], [`units::DecayHistogram`]).
//! * [`fit`]: a damped least-squares engine with box bounds, shared by every
//!   model fit in the crate.
//! * [`peaks`]: Gaussian / Lorentzian / Voigt line shapes, multi-peak fitting
//!   with an optional affine baseline, and Debye-Waller ratios.
//! * [`thermo`]: temperature-dependent line shift (power-law lattice model),
//!   two-channel thermal quenching, Arrhenius intensity ratios, and pump
//!   saturation.
//! * [`trpl`]: two-level rate-equation dynamics for time-resolved decay
//!   histograms, IRF convolution, tail fits, and radiative/non-radiative rate
//!   decomposition.
//! * [`magneto`]: Zeeman shifts, field-dependent line broadening, ensemble
//!   magneto-optical profiles, and derivative ESR line fits.
//! * [`catalog`]: the built-in table of known emission lines and lookup
//!   helpers.
//! * [`synth`]: deterministic synthetic data generation and closed-form
//!   oracles used to validate the numerical code paths.
//!
//! All spectra live on energy axes in eV (ascending); decay data is in ns.

pub mod catalog;
pub mod error;
pub mod fit;
pub mod magneto;
pub mod ode;
pub mod peaks;
pub mod special;
pub mod synth;
pub mod thermo;
pub mod trpl;
pub mod units;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
