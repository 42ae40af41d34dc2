//! CSV ingestion and emission.
//!
//! One dialect everywhere: a header row naming the columns, `#` lines as
//! comments, and metadata carried in comments of the form `# key: value`.
//! All numeric output is printed with 9 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use zplkit::catalog::{Catalog, CatalogLine, LineKind};
use zplkit::units::{ev_to_nm, DecayHistogram, Metadata, Spectrum};

use crate::CliError;

/// 9 significant digits, the repository-wide numeric output format.
pub fn num9(x: f64) -> String {
    format!("{x:.8e}")
}

fn io_err(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {msg}", path.display()))
}

/// A comment-stripped CSV: header cells, data rows with their 1-based line
/// numbers, metadata from `# key: value` comments, and the last line number
/// of the file (for error messages about missing rows).
struct CsvDoc {
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
    meta: Metadata,
    last_line: usize,
}

/// `split_limit` bounds the number of cells per row so the final column may
/// contain literal commas (the catalog notes column).
fn parse_csv(path: &Path, split_limit: usize) -> Result<CsvDoc, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut header: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut meta = Metadata::default();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last_line = lineno;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            apply_meta_comment(path, lineno, comment, &mut meta)?;
            continue;
        }
        let cells: Vec<String> = line
            .splitn(split_limit, ',')
            .map(|c| c.trim().to_owned())
            .collect();
        match header {
            None => header = Some(cells),
            Some(_) => rows.push((lineno, cells)),
        }
    }
    let header = header.ok_or_else(|| io_err(path, "missing header row"))?;
    Ok(CsvDoc {
        header,
        rows,
        meta,
        last_line,
    })
}

/// Recognizes the documented metadata keys case-insensitively; anything else
/// stays an ordinary comment.
fn apply_meta_comment(
    path: &Path,
    lineno: usize,
    comment: &str,
    meta: &mut Metadata,
) -> Result<(), CliError> {
    let Some((key, value)) = comment.split_once(':') else {
        return Ok(());
    };
    let key = key.trim().to_ascii_lowercase();
    let value = value.trim();
    let num = |field: &mut Option<f64>| -> Result<(), CliError> {
        let v: f64 = value
            .parse()
            .map_err(|_| io_err(path, format!("line {lineno}: non-numeric value '{value}'")))?;
        *field = Some(v);
        Ok(())
    };
    match key.as_str() {
        "temperature_k" => num(&mut meta.temperature_k)?,
        "pump_w_cm2" => num(&mut meta.pump_w_cm2)?,
        "b_field_t" => num(&mut meta.b_field_t)?,
        "process_step" => meta.process_step = Some(value.to_owned()),
        _ => {}
    }
    Ok(())
}

fn expect_header(path: &Path, doc: &CsvDoc, allowed: &[&[&str]]) -> Result<usize, CliError> {
    let got: Vec<String> = doc.header.iter().map(|c| c.to_ascii_lowercase()).collect();
    for (i, want) in allowed.iter().enumerate() {
        if got.len() == want.len() && got.iter().zip(*want).all(|(g, w)| g == w) {
            return Ok(i);
        }
    }
    let options: Vec<String> = allowed.iter().map(|w| w.join(",")).collect();
    Err(io_err(
        path,
        format!(
            "line 1: header '{}' does not match {}",
            doc.header.join(","),
            options.join(" or ")
        ),
    ))
}

fn numeric_cell(path: &Path, lineno: usize, cell: &str) -> Result<f64, CliError> {
    cell.parse()
        .map_err(|_| io_err(path, format!("line {lineno}: non-numeric cell '{cell}'")))
}

fn two_numbers(path: &Path, doc: &CsvDoc) -> Result<Vec<(usize, f64, f64)>, CliError> {
    let mut out = Vec::with_capacity(doc.rows.len());
    for (lineno, cells) in &doc.rows {
        if cells.len() != 2 {
            return Err(io_err(
                path,
                format!("line {lineno}: expected 2 columns, got {}", cells.len()),
            ));
        }
        out.push((
            *lineno,
            numeric_cell(path, *lineno, &cells[0])?,
            numeric_cell(path, *lineno, &cells[1])?,
        ));
    }
    Ok(out)
}

/// Spectrum file: `wavelength_nm,intensity` or `energy_ev,intensity`. The
/// axis is re-sorted ascending in energy on ingestion.
pub fn parse_spectrum_csv(path: &Path) -> Result<Spectrum, CliError> {
    let doc = parse_csv(path, usize::MAX)?;
    let axis = expect_header(
        path,
        &doc,
        &[&["wavelength_nm", "intensity"], &["energy_ev", "intensity"]],
    )?;
    let rows = two_numbers(path, &doc)?;
    if rows.len() < 3 {
        return Err(io_err(
            path,
            format!(
                "line {}: expected at least 3 data rows, found {}",
                doc.last_line,
                rows.len()
            ),
        ));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let spec = if axis == 0 {
        Spectrum::from_wavelengths_nm(xs, ys, doc.meta)
    } else {
        Spectrum::from_energies(xs, ys, doc.meta)
    };
    spec.map_err(|e| io_err(path, e))
}

/// Decay histogram file: `time_ns,counts` with `time_ns` the left bin edges.
/// The bin width is inferred from the first two rows and every later row must
/// agree to 1e-6 relative.
pub fn parse_histogram_csv(path: &Path) -> Result<DecayHistogram, CliError> {
    let doc = parse_csv(path, usize::MAX)?;
    expect_header(path, &doc, &[&["time_ns", "counts"]])?;
    let rows = two_numbers(path, &doc)?;
    if rows.len() < 2 {
        return Err(io_err(
            path,
            format!(
                "line {}: need at least 2 rows to infer the bin width, found {}",
                doc.last_line,
                rows.len()
            ),
        ));
    }
    for &(lineno, _, c) in &rows {
        if c < 0.0 {
            return Err(io_err(path, format!("line {lineno}: negative counts {c}")));
        }
    }
    let bin = rows[1].1 - rows[0].1;
    if !(bin.is_finite() && bin > 0.0) {
        return Err(io_err(
            path,
            format!("line {}: non-increasing time axis", rows[1].0),
        ));
    }
    for w in rows.windows(2) {
        let dt = w[1].1 - w[0].1;
        if (dt - bin).abs() > 1e-6 * bin {
            return Err(io_err(
                path,
                format!(
                    "line {}: non-uniform bin width ({} ns here, {} ns inferred)",
                    w[1].0,
                    num9(dt),
                    num9(bin)
                ),
            ));
        }
    }
    let counts: Vec<f64> = rows.iter().map(|r| r.2).collect();
    DecayHistogram::new(rows[0].1, bin, counts, doc.meta).map_err(|e| io_err(path, e))
}

/// Generic two-column point series. Minimum row requirements are left to the
/// model fits so that an undersized file fails in the fit, not the parser.
pub fn parse_xy_csv(
    path: &Path,
    x_name: &str,
    y_name: &str,
) -> Result<(Vec<(f64, f64)>, Metadata), CliError> {
    let doc = parse_csv(path, usize::MAX)?;
    expect_header(path, &doc, &[&[x_name, y_name]])?;
    let rows = two_numbers(path, &doc)?;
    if rows.is_empty() {
        return Err(io_err(
            path,
            format!("line {}: no data rows", doc.last_line),
        ));
    }
    Ok((rows.iter().map(|r| (r.1, r.2)).collect(), doc.meta))
}

/// Catalog file: `label,center_nm,fwhm_hint_nm,kind,notes`. The notes column
/// is last so it may contain commas; there is no quoting.
pub fn parse_catalog_csv(path: &Path) -> Result<Catalog, CliError> {
    let doc = parse_csv(path, 5)?;
    expect_header(
        path,
        &doc,
        &[&["label", "center_nm", "fwhm_hint_nm", "kind", "notes"]],
    )?;
    let mut lines = Vec::with_capacity(doc.rows.len());
    for (lineno, cells) in &doc.rows {
        if cells.len() < 4 {
            return Err(io_err(
                path,
                format!("line {lineno}: expected 5 columns, got {}", cells.len()),
            ));
        }
        let label = cells[0].clone();
        if label.is_empty() {
            return Err(io_err(path, format!("line {lineno}: empty label")));
        }
        let center_nm = numeric_cell(path, *lineno, &cells[1])?;
        let fwhm_hint_nm = if cells[2].is_empty() {
            None
        } else {
            Some(numeric_cell(path, *lineno, &cells[2])?)
        };
        let kind = LineKind::parse(&cells[3]).ok_or_else(|| {
            io_err(path, format!("line {lineno}: unknown line kind '{}'", cells[3]))
        })?;
        let notes = cells.get(4).cloned().unwrap_or_default();
        lines.push(CatalogLine {
            label,
            center_nm,
            fwhm_hint_nm,
            kind,
            notes,
            steps: Vec::new(),
        });
    }
    Catalog::new(lines).map_err(|e| io_err(path, e))
}

fn write_meta(buf: &mut String, meta: &Metadata) {
    if let Some(t) = meta.temperature_k {
        let _ = writeln!(buf, "# temperature_K: {}", num9(t));
    }
    if let Some(p) = meta.pump_w_cm2 {
        let _ = writeln!(buf, "# pump_W_cm2: {}", num9(p));
    }
    if let Some(b) = meta.b_field_t {
        let _ = writeln!(buf, "# B_field_T: {}", num9(b));
    }
    if let Some(s) = &meta.process_step {
        let _ = writeln!(buf, "# process_step: {s}");
    }
}

fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content).map_err(|e| io_err(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumAxis {
    EnergyEv,
    WavelengthNm,
}

/// Writes a spectrum. The wavelength variant emits rows ascending in nm, the
/// order an instrument sweep produces; ingestion re-sorts by energy.
pub fn write_spectrum_csv(
    path: &Path,
    spectrum: &Spectrum,
    axis: SpectrumAxis,
) -> Result<(), CliError> {
    let mut buf = String::new();
    write_meta(&mut buf, spectrum.meta());
    match axis {
        SpectrumAxis::EnergyEv => {
            buf.push_str("energy_ev,intensity\n");
            for (e, y) in spectrum.energies_ev().iter().zip(spectrum.intensities()) {
                let _ = writeln!(buf, "{},{}", num9(*e), num9(*y));
            }
        }
        SpectrumAxis::WavelengthNm => {
            buf.push_str("wavelength_nm,intensity\n");
            for (e, y) in spectrum
                .energies_ev()
                .iter()
                .zip(spectrum.intensities())
                .rev()
            {
                let nm = ev_to_nm(*e).map_err(|e| io_err(path, e))?;
                let _ = writeln!(buf, "{},{}", num9(nm), num9(*y));
            }
        }
    }
    write_file(path, &buf)
}

pub fn write_histogram_csv(path: &Path, h: &DecayHistogram) -> Result<(), CliError> {
    let mut buf = String::new();
    write_meta(&mut buf, h.meta());
    buf.push_str("time_ns,counts\n");
    for (i, c) in h.counts().iter().enumerate() {
        let _ = writeln!(buf, "{},{}", num9(h.time_ns(i)), num9(*c));
    }
    write_file(path, &buf)
}

pub fn write_xy_csv(
    path: &Path,
    x_name: &str,
    y_name: &str,
    points: &[(f64, f64)],
    meta: &Metadata,
) -> Result<(), CliError> {
    let mut buf = String::new();
    write_meta(&mut buf, meta);
    let _ = writeln!(buf, "{x_name},{y_name}");
    for (x, y) in points {
        let _ = writeln!(buf, "{},{}", num9(*x), num9(*y));
    }
    write_file(path, &buf)
}

/// Tab-separated plot data: one header row, then numeric rows.
pub fn write_tsv(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut buf = String::new();
    let _ = writeln!(buf, "{}", columns.join("\t"));
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| num9(*v)).collect();
        let _ = writeln!(buf, "{}", cells.join("\t"));
    }
    write_file(path, &buf)
}
