//! Curated emission-line catalog for silicon color centers in the
//! 1100-1400 nm window, with identification of measured peaks against it.

use crate::units::nm_to_ev;
use crate::{Error, Result};

/// Fabrication stage in the five-step carbon/hydrogen implantation and
/// annealing sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ProcessStep {
    I,
    II,
    III,
    IV,
    V,
}

impl ProcessStep {
    pub fn as_str(self) -> &'static str {
        match self {
            ProcessStep::I => "i",
            ProcessStep::II => "ii",
            ProcessStep::III => "iii",
            ProcessStep::IV => "iv",
            ProcessStep::V => "v",
        }
    }

    pub fn parse(s: &str) -> Option<ProcessStep> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" => Some(ProcessStep::I),
            "ii" => Some(ProcessStep::II),
            "iii" => Some(ProcessStep::III),
            "iv" => Some(ProcessStep::IV),
            "v" => Some(ProcessStep::V),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineKind {
    Zpl,
    PhononReplica,
    BandEdge,
    LocalVibrational,
}

impl LineKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LineKind::Zpl => "zpl",
            LineKind::PhononReplica => "phonon-replica",
            LineKind::BandEdge => "band-edge",
            LineKind::LocalVibrational => "local-vibrational",
        }
    }

    pub fn parse(s: &str) -> Option<LineKind> {
        match s.trim().to_ascii_lowercase().as_str() {
            "zpl" => Some(LineKind::Zpl),
            "phonon-replica" => Some(LineKind::PhononReplica),
            "band-edge" => Some(LineKind::BandEdge),
            "local-vibrational" => Some(LineKind::LocalVibrational),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogLine {
    pub label: String,
    pub center_nm: f64,
    pub fwhm_hint_nm: Option<f64>,
    pub kind: LineKind,
    pub notes: String,
    /// Steps of the fabrication sequence in which the line is visible;
    /// empty when not recorded.
    pub steps: Vec<ProcessStep>,
}

impl CatalogLine {
    pub fn center_ev(&self) -> f64 {
        // Centers are validated positive on catalog construction.
        nm_to_ev(self.center_nm).expect("validated center")
    }
}

/// Immutable, center-sorted set of catalog lines.
#[derive(Debug, Clone)]
pub struct Catalog {
    lines: Vec<CatalogLine>,
}

#[derive(Debug, Clone)]
pub struct Match<'a> {
    pub line: &'a CatalogLine,
    pub distance_nm: f64,
}

impl Catalog {
    /// Validates labels (non-empty, unique), centers (within 1100-1400 nm),
    /// and width hints (positive), then stores the lines sorted by center.
    pub fn new(mut lines: Vec<CatalogLine>) -> Result<Catalog> {
        for l in &lines {
            if l.label.trim().is_empty() {
                return Err(Error::invalid("catalog label must be non-empty"));
            }
            if !l.center_nm.is_finite() || !(1100.0..=1400.0).contains(&l.center_nm) {
                return Err(Error::invalid(format!(
                    "center of '{}' must lie within 1100-1400 nm, got {}",
                    l.label, l.center_nm
                )));
            }
            if let Some(w) = l.fwhm_hint_nm {
                if !w.is_finite() || w <= 0.0 {
                    return Err(Error::invalid(format!(
                        "width hint of '{}' must be positive",
                        l.label
                    )));
                }
            }
        }
        let mut labels: Vec<&str> = lines.iter().map(|l| l.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("catalog labels must be unique"));
        }
        lines.sort_by(|a, b| a.center_nm.total_cmp(&b.center_nm));
        Ok(Catalog { lines })
    }

    /// The compiled-in line list. Checked on every load: the stored centers
    /// must reproduce the doublet and thermal splittings they were measured
    /// with, so a corrupted edit cannot ship silently.
    pub fn builtin() -> Catalog {
        use LineKind::*;
        use ProcessStep::*;
        let e = |label: &str,
                 center: f64,
                 fwhm: Option<f64>,
                 kind: LineKind,
                 steps: &[ProcessStep],
                 notes: &str| CatalogLine {
            label: label.into(),
            center_nm: center,
            fwhm_hint_nm: fwhm,
            kind,
            notes: notes.into(),
            steps: steps.to_vec(),
        };
        let cat = Catalog::new(vec![
            e("Si-TO", 1130.0, None, BandEdge, &[II, III, IV, V],
              "intrinsic TO-assisted band-edge emission; destroyed by implantation, restored by annealing"),
            e("X", 1191.7, None, Zpl, &[V], "weak line superimposed on the band-edge replica"),
            e("Si-PR", 1195.0, None, PhononReplica, &[II, III, IV, V],
              "phonon replica of the band-edge emission"),
            e("W", 1217.48, Some(0.65), Zpl, &[I],
              "interstitial-cluster line; sideband up to 1250 nm"),
            e("Cu-PR1", 1221.45, Some(0.58), PhononReplica, &[II, III, IV],
              "first replica of the four-Cu-atom complex line"),
            e("Cu-PR2", 1230.07, Some(1.2), PhononReplica, &[II, III, IV],
              "second replica of the four-Cu-atom complex line"),
            e("Cu-PR3", 1238.64, Some(1.65), PhononReplica, &[II, III, IV],
              "third replica of the four-Cu-atom complex line"),
            e("G", 1278.5, Some(0.8), Zpl, &[I, III, IV, V],
              "carbon-pair line; lifetime 6.67 ns at 7.5 K; sideband extends to 1400 nm"),
            e("I", 1285.0, None, Zpl, &[V], "oxygen-perturbed variant of the T center"),
            e("*Cu1^0", 1312.20, Some(0.66), Zpl, &[II, III],
              "upper member of the 0.56 meV copper-silver doublet"),
            e("*Cu0^0", 1312.98, Some(0.523), Zpl, &[II, III],
              "lower member of the 0.56 meV copper-silver doublet"),
            e("*Cu0^1", 1321.64, None, PhononReplica, &[II, III],
              "first 6.2 meV local-phonon replica of *Cu0^0"),
            e("TX1", 1322.65, Some(0.79), Zpl, &[V],
              "upper T-center doublet line; 1323.4 nm in earlier reports"),
            e("TX0", 1325.1, Some(0.63), Zpl, &[V],
              "T-center zero-phonon line; 1325.9 nm in earlier reports"),
            e("*Cu0^2", 1331.06, None, PhononReplica, &[II, III],
              "second local-phonon replica of *Cu0^0"),
            e("E", 1381.0, None, LocalVibrational, &[I, III, IV],
              "local vibrational mode riding on the G-line sideband"),
        ])
        .expect("builtin catalog is well-formed");

        let split = |a: &str, b: &str| -> f64 {
            cat.find(a).unwrap().center_ev() - cat.find(b).unwrap().center_ev()
        };
        let tx = split("TX1", "TX0");
        assert!((tx - 1.75e-3).abs() <= 0.05e-3, "TX splitting drifted: {tx}");
        let cu = split("*Cu1^0", "*Cu0^0");
        assert!((cu - 0.56e-3).abs() <= 0.02e-3, "doublet splitting drifted: {cu}");
        cat
    }

    pub fn lines(&self) -> &[CatalogLine] {
        &self.lines
    }

    pub fn find(&self, label: &str) -> Option<&CatalogLine> {
        self.lines.iter().find(|l| l.label == label)
    }

    /// All lines within `tol_nm` of `center_nm`, nearest first. An infinite
    /// tolerance ranks the whole catalog; tolerance must be positive.
    pub fn identify(&self, center_nm: f64, tol_nm: f64) -> Result<Vec<Match<'_>>> {
        if !center_nm.is_finite() || center_nm <= 0.0 {
            return Err(Error::domain("query center must be positive"));
        }
        if tol_nm.is_nan() || tol_nm <= 0.0 {
            return Err(Error::domain("tolerance must be positive"));
        }
        let mut hits: Vec<Match<'_>> = self
            .lines
            .iter()
            .map(|l| Match {
                line: l,
                distance_nm: (l.center_nm - center_nm).abs(),
            })
            .filter(|m| m.distance_nm <= tol_nm)
            .collect();
        hits.sort_by(|a, b| a.distance_nm.total_cmp(&b.distance_nm));
        Ok(hits)
    }

    /// Extends this catalog with `extra`. A label collision is an error
    /// unless `allow_override` is set, in which case the extra line wins.
    pub fn merge(&self, extra: &Catalog, allow_override: bool) -> Result<Catalog> {
        let mut lines = self.lines.clone();
        for l in &extra.lines {
            match lines.iter().position(|have| have.label == l.label) {
                Some(i) if allow_override => lines[i] = l.clone(),
                Some(_) => {
                    return Err(Error::invalid(format!(
                        "line '{}' would override an existing entry; overriding requires an explicit flag",
                        l.label
                    )));
                }
                None => lines.push(l.clone()),
            }
        }
        Catalog::new(lines)
    }
}

/// Consecutive energy spacings of the given lines after sorting by energy,
/// in eV. Needs at least 2 lines.
pub fn replica_spacing(lines: &[CatalogLine]) -> Result<Vec<f64>> {
    if lines.len() < 2 {
        return Err(Error::insufficient(format!(
            "spacing needs at least 2 lines, got {}",
            lines.len()
        )));
    }
    let mut energies: Vec<f64> = lines.iter().map(|l| l.center_ev()).collect();
    energies.sort_by(f64::total_cmp);
    Ok(energies.windows(2).map(|w| w[1] - w[0]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_contents() {
        let cat = Catalog::builtin();
        assert_eq!(cat.lines().len(), 16);
        assert_eq!(cat.find("W").unwrap().center_nm, 1217.48);
        let tx0 = cat.find("TX0").unwrap();
        assert_eq!(tx0.center_nm, 1325.1);
        assert_eq!(tx0.fwhm_hint_nm, Some(0.63));
        assert_eq!(tx0.kind, LineKind::Zpl);
        assert!(cat
            .lines()
            .windows(2)
            .all(|w| w[0].center_nm <= w[1].center_nm));
    }

    #[test]
    fn frozen_splittings() {
        let cat = Catalog::builtin();
        let ev = |l: &str| cat.find(l).unwrap().center_ev();
        // All four spacings frozen from high-precision wavelength-to-energy
        // conversion of the stored centers.
        assert!((ev("TX1") - ev("TX0") - 1.7331607e-3).abs() < 1e-10);
        assert!((ev("*Cu1^0") - ev("*Cu0^0") - 0.56131002e-3).abs() < 1e-11);
        assert!((ev("*Cu0^0") - ev("*Cu0^1") - 6.18747e-3).abs() < 1e-8);
    }

    #[test]
    fn copper_replica_spacings() {
        let cat = Catalog::builtin();
        let replicas: Vec<CatalogLine> = ["Cu-PR1", "Cu-PR2", "Cu-PR3"]
            .iter()
            .map(|l| cat.find(l).unwrap().clone())
            .collect();
        let s = replica_spacing(&replicas).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s[0] - 6.97384e-3).abs() < 1e-8, "s0 = {}", s[0]);
        assert!((s[1] - 7.11325e-3).abs() < 1e-8, "s1 = {}", s[1]);
        for v in &s {
            assert!((v - 7.0e-3).abs() <= 0.3e-3, "roughly 7 meV: {v}");
        }

        let one = vec![replicas[0].clone()];
        assert!(matches!(replica_spacing(&one), Err(Error::InsufficientData(_))));
        let pair = vec![replicas[0].clone(), replicas[0].clone()];
        assert_eq!(replica_spacing(&pair).unwrap(), vec![0.0]);
    }

    #[test]
    fn identify_ranked_matches() {
        let cat = Catalog::builtin();
        let hits = cat.identify(1217.5, 0.5).unwrap();
        assert_eq!(hits.len(), 1);
        assert_eq!(hits[0].line.label, "W");

        assert!(cat.identify(1500.0, 5.0).unwrap().is_empty());

        let doublet = cat.identify(1312.5, 0.6).unwrap();
        assert_eq!(doublet.len(), 2);
        assert_eq!(doublet[0].line.label, "*Cu1^0");
        assert_eq!(doublet[1].line.label, "*Cu0^0");
        assert!((doublet[0].distance_nm - 0.30).abs() < 1e-9);
        assert!((doublet[1].distance_nm - 0.48).abs() < 1e-9);

        let all = cat.identify(1300.0, f64::INFINITY).unwrap();
        assert_eq!(all.len(), 16);
        assert!(all.windows(2).all(|w| w[0].distance_nm <= w[1].distance_nm));

        assert!(matches!(cat.identify(1300.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn merge_respects_override_flag() {
        let cat = Catalog::builtin();
        let user = Catalog::new(vec![CatalogLine {
            label: "TX0".into(),
            center_nm: 1325.9,
            fwhm_hint_nm: None,
            kind: LineKind::Zpl,
            notes: "literature value".into(),
            steps: vec![],
        }])
        .unwrap();
        assert!(matches!(cat.merge(&user, false), Err(Error::InvalidInput(_))));
        let merged = cat.merge(&user, true).unwrap();
        assert_eq!(merged.lines().len(), 16);
        assert_eq!(merged.find("TX0").unwrap().center_nm, 1325.9);

        let extra = Catalog::new(vec![CatalogLine {
            label: "lab-1".into(),
            center_nm: 1350.0,
            fwhm_hint_nm: Some(0.4),
            kind: LineKind::Zpl,
            notes: String::new(),
            steps: vec![],
        }])
        .unwrap();
        assert_eq!(cat.merge(&extra, false).unwrap().lines().len(), 17);
    }

    #[test]
    fn construction_rejects_bad_lines() {
        let line = |label: &str, center: f64| CatalogLine {
            label: label.into(),
            center_nm: center,
            fwhm_hint_nm: None,
            kind: LineKind::Zpl,
            notes: String::new(),
            steps: vec![],
        };
        assert!(Catalog::new(vec![line("ok", 1050.0)]).is_err());
        assert!(Catalog::new(vec![line("", 1200.0)]).is_err());
        assert!(Catalog::new(vec![line("a", 1200.0), line("a", 1210.0)]).is_err());
        let mut bad_width = line("a", 1200.0);
        bad_width.fwhm_hint_nm = Some(0.0);
        assert!(Catalog::new(vec![bad_width]).is_err());
    }

    #[test]
    fn kind_and_step_round_trip() {
        for k in [
            LineKind::Zpl,
            LineKind::PhononReplica,
            LineKind::BandEdge,
            LineKind::LocalVibrational,
        ] {
            assert_eq!(LineKind::parse(k.as_str()), Some(k));
        }
        assert_eq!(LineKind::parse("gaussian"), None);
        for s in [
            ProcessStep::I,
            ProcessStep::II,
            ProcessStep::III,
            ProcessStep::IV,
            ProcessStep::V,
        ] {
            assert_eq!(ProcessStep::parse(s.as_str()), Some(s));
        }
        assert_eq!(ProcessStep::parse("vi"), None);
    }
}
