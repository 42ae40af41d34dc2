//! Physical constants and core data containers.
//!
//! Everything downstream works on energy axes in eV. Wavelength input is
//! converted exactly once, at construction; the stored axis is strictly
//! ascending in energy. Containers are immutable after construction, so a
//! validated `Spectrum` or `DecayHistogram` can be passed around without
//! re-checking its invariants.

use crate::{Error, Result};

/// CODATA 2018 constants in spectroscopist units (eV, nm, K, T, s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysConstants {
    /// hc, in eV nm.
    pub hc: f64,
    /// Boltzmann constant, in eV/K.
    pub k_b: f64,
    /// Bohr magneton, in eV/T.
    pub mu_b: f64,
    /// Planck constant, in eV s.
    pub h: f64,
    /// Reduced Planck constant, in eV s.
    pub hbar: f64,
}

/// The constant set used throughout the crate.
pub const CODATA_2018: PhysConstants = PhysConstants {
    hc: 1239.841_984_332_002_6,
    k_b: 8.617_333_262_145_177_4e-5,
    mu_b: 5.788_381_806_035_001_8e-5,
    h: 4.135_667_696_923_858_6e-15,
    hbar: 6.582_119_569_509_065_7e-16,
};

/// Converts a vacuum wavelength in nm to photon energy in eV.
///
/// Errors on non-positive or non-finite input.
pub fn nm_to_ev(wavelength_nm: f64) -> Result<f64> {
    if !wavelength_nm.is_finite() || wavelength_nm <= 0.0 {
        return Err(Error::domain(format!(
            "wavelength must be positive and finite, got {wavelength_nm}"
        )));
    }
    Ok(CODATA_2018.hc / wavelength_nm)
}

/// Converts a photon energy in eV to vacuum wavelength in nm.
///
/// Errors on non-positive or non-finite input. `ev_to_nm(nm_to_ev(x)) == x`
/// to within a relative 1e-12.
pub fn ev_to_nm(energy_ev: f64) -> Result<f64> {
    if !energy_ev.is_finite() || energy_ev <= 0.0 {
        return Err(Error::domain(format!(
            "energy must be positive and finite, got {energy_ev}"
        )));
    }
    Ok(CODATA_2018.hc / energy_ev)
}

/// Acquisition conditions attached to a dataset. Every field is optional;
/// absent means "not recorded", never "zero".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metadata {
    /// Sample temperature in K.
    pub temperature_k: Option<f64>,
    /// Pump intensity in W/cm^2.
    pub pump_w_cm2: Option<f64>,
    /// Applied magnetic field in T.
    pub b_field_t: Option<f64>,
    /// Free-form label for the processing step the sample had received.
    pub process_step: Option<String>,
}

/// A photoluminescence spectrum on a strictly ascending energy axis (eV).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    energies_ev: Vec<f64>,
    intensities: Vec<f64>,
    meta: Metadata,
}

impl Spectrum {
    /// Builds a spectrum from an energy axis in eV.
    ///
    /// Points are sorted ascending by energy. After sorting the axis must be
    /// strictly increasing (duplicate energies are rejected), all values must
    /// be finite, and at least 3 points are required.
    pub fn from_energies(
        energies_ev: Vec<f64>,
        intensities: Vec<f64>,
        meta: Metadata,
    ) -> Result<Self> {
        if energies_ev.len() != intensities.len() {
            return Err(Error::invalid(format!(
                "axis has {} points but intensity has {}",
                energies_ev.len(),
                intensities.len()
            )));
        }
        if energies_ev.len() < 3 {
            return Err(Error::invalid(format!(
                "spectrum needs at least 3 points, got {}",
                energies_ev.len()
            )));
        }
        for (&e, &i) in energies_ev.iter().zip(&intensities) {
            if !e.is_finite() || !i.is_finite() {
                return Err(Error::invalid(format!(
                    "non-finite sample (energy {e}, intensity {i})"
                )));
            }
        }
        let mut pairs: Vec<(f64, f64)> = energies_ev.into_iter().zip(intensities).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        for w in pairs.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::invalid(format!(
                    "duplicate energy sample at {} eV",
                    w[0].0
                )));
            }
        }
        let (energies_ev, intensities) = pairs.into_iter().unzip();
        Ok(Spectrum {
            energies_ev,
            intensities,
            meta,
        })
    }

    /// Builds a spectrum from a wavelength axis in nm. Wavelengths are
    /// converted to eV up front; the stored axis is ascending in energy, so
    /// the point order is reversed relative to an ascending-wavelength file.
    pub fn from_wavelengths_nm(
        wavelengths_nm: Vec<f64>,
        intensities: Vec<f64>,
        meta: Metadata,
    ) -> Result<Self> {
        let energies = wavelengths_nm
            .into_iter()
            .map(nm_to_ev)
            .collect::<Result<Vec<f64>>>()?;
        Self::from_energies(energies, intensities, meta)
    }

    /// Energy axis in eV, strictly ascending.
    pub fn energies_ev(&self) -> &[f64] {
        &self.energies_ev
    }

    /// Intensities, ordered to match the energy axis.
    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn meta(&self) -> &Metadata {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.energies_ev.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies_ev.is_empty()
    }
}

/// Restricts a spectrum to the closed energy window `[lo_ev, hi_ev]`.
///
/// Errors if `lo_ev >= hi_ev`, if the window overlaps no points, or if fewer
/// than the 3 points required for a valid spectrum survive.
pub fn resample_window(s: &Spectrum, lo_ev: f64, hi_ev: f64) -> Result<Spectrum> {
    if !lo_ev.is_finite() || !hi_ev.is_finite() || lo_ev >= hi_ev {
        return Err(Error::domain(format!(
            "window bounds must satisfy lo < hi, got [{lo_ev}, {hi_ev}]"
        )));
    }
    let mut energies = Vec::new();
    let mut intensities = Vec::new();
    for (&e, &i) in s.energies_ev.iter().zip(&s.intensities) {
        if e >= lo_ev && e <= hi_ev {
            energies.push(e);
            intensities.push(i);
        }
    }
    if energies.is_empty() {
        return Err(Error::insufficient(format!(
            "window [{lo_ev}, {hi_ev}] eV contains no points"
        )));
    }
    if energies.len() < 3 {
        return Err(Error::insufficient(format!(
            "window [{lo_ev}, {hi_ev}] eV contains only {} points, need at least 3",
            energies.len()
        )));
    }
    Spectrum::from_energies(energies, intensities, s.meta.clone())
}

/// A time-correlated decay histogram on a uniform time grid.
///
/// `time(i) = start_ns + i * bin_ns` is the timestamp of bin `i`. Counts are
/// stored as doubles so that models and noiseless synthetic traces can share
/// the container, but they must be non-negative and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayHistogram {
    start_ns: f64,
    bin_ns: f64,
    counts: Vec<f64>,
    meta: Metadata,
}

impl DecayHistogram {
    /// Validates bin width > 0, at least 10 bins, and non-negative counts.
    pub fn new(start_ns: f64, bin_ns: f64, counts: Vec<f64>, meta: Metadata) -> Result<Self> {
        if !bin_ns.is_finite() || bin_ns <= 0.0 {
            return Err(Error::invalid(format!(
                "bin width must be positive, got {bin_ns} ns"
            )));
        }
        if !start_ns.is_finite() {
            return Err(Error::invalid("histogram start time must be finite"));
        }
        if counts.len() < 10 {
            return Err(Error::invalid(format!(
                "histogram needs at least 10 bins, got {}",
                counts.len()
            )));
        }
        for (i, &c) in counts.iter().enumerate() {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::invalid(format!("bin {i} has invalid count {c}")));
            }
        }
        Ok(DecayHistogram {
            start_ns,
            bin_ns,
            counts,
            meta,
        })
    }

    pub fn start_ns(&self) -> f64 {
        self.start_ns
    }

    pub fn bin_ns(&self) -> f64 {
        self.bin_ns
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn meta(&self) -> &Metadata {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Timestamp of bin `i` in ns.
    pub fn time_ns(&self, i: usize) -> f64 {
        self.start_ns + i as f64 * self.bin_ns
    }

    /// All bin timestamps in ns.
    pub fn times_ns(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|i| self.time_ns(i)).collect()
    }
}
