//! CSV interchange formats.
//!
//! All tabular files share one shape: a `wavelength_nm` column followed by
//! one named value column per channel/spectrum, one row per grid point,
//! ascending wavelengths with uniform spacing. Values are written with
//! Rust's shortest round-trip float formatting, so save → load is bit-exact.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::WavelengthGrid;
use crate::measurement::Measurement;
use crate::sensitivity::SensitivityMatrix;
use crate::spectrum::{Spectrum, SpectrumKind};

/// Relative tolerance for the uniform-spacing check on loaded wavelength axes.
const SPACING_TOL: f64 = 1e-9;

/// A named collection of spectra sharing one grid (column-major).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraTable {
    grid: WavelengthGrid,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl SpectraTable {
    pub fn new(grid: WavelengthGrid, names: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::Dimension {
                context: "spectra table names",
                expected: columns.len(),
                actual: names.len(),
            });
        }
        for col in &columns {
            if col.len() != grid.count() {
                return Err(Error::Dimension {
                    context: "spectra table column",
                    expected: grid.count(),
                    actual: col.len(),
                });
            }
        }
        Ok(Self {
            grid,
            names,
            columns,
        })
    }

    pub fn from_spectra<S: AsRef<str>>(names: &[S], spectra: &[Spectrum]) -> Result<Self> {
        if spectra.is_empty() {
            return Err(Error::Usage("spectra table needs at least one spectrum".into()));
        }
        let grid = spectra[0].grid();
        for s in spectra {
            s.same_grid(&grid, "spectra table")?;
        }
        Self::new(
            grid,
            names.iter().map(|n| n.as_ref().to_string()).collect(),
            spectra.iter().map(|s| s.values().to_vec()).collect(),
        )
    }

    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn to_spectra(&self, kind: SpectrumKind) -> Result<Vec<Spectrum>> {
        self.columns
            .iter()
            .map(|col| Spectrum::new(self.grid, col.clone(), kind))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// generic wavelength-table parsing
// ---------------------------------------------------------------------------

struct RawTable {
    grid: WavelengthGrid,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

fn infer_grid(wavelengths: &[f64], origin: &str) -> Result<WavelengthGrid> {
    if wavelengths.len() < 2 {
        return Err(Error::format(origin, "need at least 2 grid rows"));
    }
    let start = wavelengths[0];
    let count = wavelengths.len();
    let step = (wavelengths[count - 1] - start) / (count - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::format(origin, "wavelengths must be strictly ascending"));
    }
    for (k, &w) in wavelengths.iter().enumerate() {
        let expected = start + k as f64 * step;
        let tol = SPACING_TOL * expected.abs().max(1.0);
        if (w - expected).abs() > tol {
            return Err(Error::format(
                origin,
                format!("non-uniform wavelength spacing at row {} ({} vs expected {})", k + 1, w, expected),
            ));
        }
    }
    WavelengthGrid::new(start, step, count)
}

fn parse_table<R: Read>(reader: R, origin: &str) -> Result<RawTable> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = csv
        .headers()
        .map_err(|e| Error::format(origin, e.to_string()))?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("wavelength_nm") {
        return Err(Error::format(
            origin,
            "first header column must be 'wavelength_nm'",
        ));
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    if names.is_empty() {
        return Err(Error::format(origin, "no value columns"));
    }

    let mut wavelengths = Vec::new();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (row_idx, record) in csv.records().enumerate() {
        let record = record.map_err(|e| Error::format(origin, e.to_string()))?;
        if record.len() != names.len() + 1 {
            return Err(Error::format(
                origin,
                format!("row {}: expected {} fields, got {}", row_idx + 2, names.len() + 1, record.len()),
            ));
        }
        let parse = |field: &str, col: &str| -> Result<f64> {
            field.parse::<f64>().map_err(|_| {
                Error::format(
                    origin,
                    format!("row {}: '{}' is not a number (column {})", row_idx + 2, field, col),
                )
            })
        };
        wavelengths.push(parse(&record[0], "wavelength_nm")?);
        for (i, name) in names.iter().enumerate() {
            columns[i].push(parse(&record[i + 1], name)?);
        }
    }

    let grid = infer_grid(&wavelengths, origin)?;
    Ok(RawTable {
        grid,
        names,
        columns,
    })
}

fn write_table<W: Write>(
    mut out: W,
    grid: WavelengthGrid,
    names: &[String],
    columns: &[&[f64]],
    origin: &str,
) -> Result<()> {
    let io_err = |e| Error::io(origin, e);
    write!(out, "wavelength_nm").map_err(io_err)?;
    for name in names {
        write!(out, ",{name}").map_err(io_err)?;
    }
    writeln!(out).map_err(io_err)?;
    for k in 0..grid.count() {
        write!(out, "{}", grid.wavelength(k)).map_err(io_err)?;
        for col in columns {
            write!(out, ",{}", col[k]).map_err(io_err)?;
        }
        writeln!(out).map_err(io_err)?;
    }
    Ok(())
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::io(path.display().to_string(), e))
}

// ---------------------------------------------------------------------------
// public format entry points
// ---------------------------------------------------------------------------

pub fn parse_sensitivity_csv<R: Read>(reader: R, origin: &str) -> Result<SensitivityMatrix> {
    let raw = parse_table(reader, origin)?;
    SensitivityMatrix::new(raw.grid, raw.names, raw.columns)
}

pub fn load_sensitivity_csv(path: impl AsRef<Path>) -> Result<SensitivityMatrix> {
    let path = path.as_ref();
    parse_sensitivity_csv(open(path)?, &path.display().to_string())
}

pub fn save_sensitivity_csv(sens: &SensitivityMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let columns: Vec<&[f64]> = sens.rows().iter().map(|r| r.as_slice()).collect();
    write_table(
        create(path)?,
        sens.grid(),
        sens.channel_names(),
        &columns,
        &path.display().to_string(),
    )
}

pub fn parse_spectra_table_csv<R: Read>(reader: R, origin: &str) -> Result<SpectraTable> {
    let raw = parse_table(reader, origin)?;
    SpectraTable::new(raw.grid, raw.names, raw.columns)
}

pub fn load_spectra_table_csv(path: impl AsRef<Path>) -> Result<SpectraTable> {
    let path = path.as_ref();
    parse_spectra_table_csv(open(path)?, &path.display().to_string())
}

pub fn save_spectra_table_csv(table: &SpectraTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let columns: Vec<&[f64]> = (0..table.len()).map(|i| table.column(i)).collect();
    write_table(
        create(path)?,
        table.grid(),
        table.names(),
        &columns,
        &path.display().to_string(),
    )
}

/// Loads a single `wavelength_nm,value` spectrum.
pub fn load_spectrum_csv(path: impl AsRef<Path>, kind: SpectrumKind) -> Result<Spectrum> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let raw = parse_table(open(path)?, &origin)?;
    if raw.columns.len() != 1 {
        return Err(Error::format(
            origin,
            format!("expected a single value column, found {}", raw.columns.len()),
        ));
    }
    Spectrum::new(raw.grid, raw.columns.into_iter().next().unwrap(), kind)
}

pub fn save_spectrum_csv(spectrum: &Spectrum, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_table(
        create(path)?,
        spectrum.grid(),
        &["value".to_string()],
        &[spectrum.values()],
        &path.display().to_string(),
    )
}

/// Measurement batches: header row of channel names, one measurement per row.
pub fn load_measurement_batch_csv(path: impl AsRef<Path>) -> Result<Vec<Measurement>> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(open(path)?);
    let names: Arc<Vec<String>> = Arc::new(
        csv.headers()
            .map_err(|e| Error::format(&origin, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect(),
    );
    if names.is_empty() {
        return Err(Error::format(origin, "no channel columns"));
    }
    let mut out = Vec::new();
    for (row_idx, record) in csv.records().enumerate() {
        let record = record.map_err(|e| Error::format(&origin, e.to_string()))?;
        let mut values = Vec::with_capacity(names.len());
        for field in record.iter() {
            values.push(field.parse::<f64>().map_err(|_| {
                Error::format(&origin, format!("row {}: '{}' is not a number", row_idx + 2, field))
            })?);
        }
        out.push(Measurement::new(values, Arc::clone(&names))?);
    }
    if out.is_empty() {
        return Err(Error::format(origin, "no measurement rows"));
    }
    Ok(out)
}

pub fn save_measurement_batch_csv(
    measurements: &[Measurement],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    if measurements.is_empty() {
        return Err(Error::Usage("no measurements to save".into()));
    }
    let mut out = create(path)?;
    let io_err = |e| Error::io(&origin, e);
    writeln!(out, "{}", measurements[0].channel_names().join(",")).map_err(io_err)?;
    for m in measurements {
        let row: Vec<String> = m.values().iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}
