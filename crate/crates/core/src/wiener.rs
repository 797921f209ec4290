//! Linear minimum-MSE demultiplexing (Wiener estimation).
//!
//! One estimator serves both the classic patch-trained baseline (WEM) and
//! the forward-model-trained variant (DEMUX-WEM); they differ only in the
//! dataset handed to [`wiener_train`].
//!
//! Training forms the raw (non-centered) sample second moments
//!
//! ```text
//! A_ΛC = mean(Λ·Cᵀ)   (n×p cross-correlation)
//! A_CC = mean(C·Cᵀ)   (p×p autocorrelation)
//! ```
//!
//! and solves `W·(A_CC + ε·tr(A_CC)/p·I) = A_ΛC` through a Cholesky
//! factorization of the regularized autocorrelation; the inverse is never
//! formed explicitly.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::{Cholesky, DMatrix};

use crate::dataset::TrainingDataset;
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::grid::WavelengthGrid;
use crate::measurement::Measurement;
use crate::spectrum::Spectrum;

const WIENER_MAGIC: &[u8; 8] = b"SDXWIEN\0";

/// Default trace-scaled ridge; p = 3 systems from overlapping filters can be
/// near-singular.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// A trained linear demultiplexer: `Λ̂ = W·C`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerModel {
    grid: WavelengthGrid,
    channel_names: Arc<Vec<String>>,
    /// Row-major n×p matrix.
    matrix: Vec<f64>,
    ridge_epsilon: f64,
    training_fingerprint: Fingerprint,
}

impl WienerModel {
    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn ridge_epsilon(&self) -> f64 {
        self.ridge_epsilon
    }

    pub fn training_fingerprint(&self) -> Fingerprint {
        self.training_fingerprint
    }

    pub fn weight(&self, wavelength_idx: usize, channel_idx: usize) -> f64 {
        self.matrix[wavelength_idx * self.channels() + channel_idx]
    }

    /// Row-major n×p weights.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    // -- model file: magic, u32 version, grid, u32 p, channel names,
    //    f64 ridge, 32-byte fingerprint, n*p f64 weights (row-major) --

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let origin = path.display().to_string();
        let io_err = |e| Error::io(&origin, e);
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(&origin, e))?);
        w.write_all(WIENER_MAGIC).map_err(io_err)?;
        w.write_u32::<LittleEndian>(crate::FORMAT_VERSION).map_err(io_err)?;
        w.write_f64::<LittleEndian>(self.grid.start_nm()).map_err(io_err)?;
        w.write_f64::<LittleEndian>(self.grid.step_nm()).map_err(io_err)?;
        w.write_u64::<LittleEndian>(self.grid.count() as u64).map_err(io_err)?;
        w.write_u32::<LittleEndian>(self.channels() as u32).map_err(io_err)?;
        for name in self.channel_names.iter() {
            w.write_u32::<LittleEndian>(name.len() as u32).map_err(io_err)?;
            w.write_all(name.as_bytes()).map_err(io_err)?;
        }
        w.write_f64::<LittleEndian>(self.ridge_epsilon).map_err(io_err)?;
        w.write_all(self.training_fingerprint.as_bytes()).map_err(io_err)?;
        for &v in &self.matrix {
            w.write_u64::<LittleEndian>(v.to_bits()).map_err(io_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let origin = path.display().to_string();
        let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(&origin, e))?);
        Self::read(&mut r, &origin)
    }

    pub(crate) fn read<R: Read>(r: &mut R, origin: &str) -> Result<Self> {
        let io_err = |e| Error::io(origin, e);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io_err)?;
        if &magic != WIENER_MAGIC {
            return Err(Error::format(origin, "not a wiener model file (bad magic)"));
        }
        let version = r.read_u32::<LittleEndian>().map_err(io_err)?;
        if version != crate::FORMAT_VERSION {
            return Err(Error::format(
                origin,
                format!("unsupported model format version {version}"),
            ));
        }
        let start = r.read_f64::<LittleEndian>().map_err(io_err)?;
        let step = r.read_f64::<LittleEndian>().map_err(io_err)?;
        let count = r.read_u64::<LittleEndian>().map_err(io_err)? as usize;
        let grid = WavelengthGrid::new(start, step, count)?;
        let p = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
        let mut names = Vec::with_capacity(p);
        for _ in 0..p {
            let len = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(io_err)?;
            names.push(
                String::from_utf8(buf)
                    .map_err(|_| Error::format(origin, "channel name is not valid utf-8"))?,
            );
        }
        let ridge = r.read_f64::<LittleEndian>().map_err(io_err)?;
        let mut fp = [0u8; 32];
        r.read_exact(&mut fp).map_err(io_err)?;
        let mut matrix = Vec::with_capacity(count * p);
        for _ in 0..count * p {
            matrix.push(f64::from_bits(
                r.read_u64::<LittleEndian>().map_err(io_err)?,
            ));
        }
        Ok(Self {
            grid,
            channel_names: Arc::new(names),
            matrix,
            ridge_epsilon: ridge,
            training_fingerprint: Fingerprint::from_bytes(fp),
        })
    }
}

/// Trains the Wiener demultiplexer on a dataset.
///
/// `ridge_epsilon` scales the regularization relative to `tr(A_CC)/p`; zero
/// requests the plain sample estimator and fails with a conditioning error
/// if the autocorrelation is numerically singular.
pub fn wiener_train(data: &TrainingDataset, ridge_epsilon: f64) -> Result<WienerModel> {
    if data.is_empty() {
        return Err(Error::Usage("wiener training needs a non-empty dataset".into()));
    }
    if !(ridge_epsilon >= 0.0) || !ridge_epsilon.is_finite() {
        return Err(Error::Usage(format!(
            "ridge epsilon must be finite and >= 0, got {ridge_epsilon}"
        )));
    }
    let n = data.grid().count();
    let p = data.channels();
    let m = data.len() as f64;

    // raw second moments, accumulated in pair order
    let mut a_lc = DMatrix::<f64>::zeros(n, p);
    let mut a_cc = DMatrix::<f64>::zeros(p, p);
    for (lam, c) in data.pairs() {
        let lv = lam.values();
        let cv = c.values();
        for j in 0..p {
            let cj = cv[j];
            for i in 0..n {
                a_lc[(i, j)] += lv[i] * cj;
            }
            for i in 0..p {
                a_cc[(i, j)] += cv[i] * cj;
            }
        }
    }
    a_lc /= m;
    a_cc /= m;

    let trace = a_cc.trace();
    let mut regularized = a_cc.clone();
    let shift = ridge_epsilon * trace / p as f64;
    for i in 0..p {
        regularized[(i, i)] += shift;
    }

    let chol = Cholesky::new(regularized.clone()).ok_or_else(|| Error::Conditioning {
        context: "wiener autocorrelation",
        condition: condition_estimate(&regularized),
    })?;
    // W·A = A_ΛC with A symmetric  =>  Wᵀ = A⁻¹·A_ΛCᵀ
    let wt = chol.solve(&a_lc.transpose());

    let mut matrix = Vec::with_capacity(n * p);
    for i in 0..n {
        for j in 0..p {
            matrix.push(wt[(j, i)]);
        }
    }
    Ok(WienerModel {
        grid: data.grid(),
        channel_names: Arc::new(data.channel_names().to_vec()),
        matrix,
        ridge_epsilon,
        training_fingerprint: data.fingerprint(),
    })
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let eigen = m.clone().symmetric_eigen();
    let max = eigen.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min = eigen
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Applies the trained model: `Λ̂ = W·c`.
///
/// `clamp` restricts the output to [0, 1] and flags it as reflectance;
/// otherwise the raw linear estimate is returned as radiance.
pub fn wiener_predict(model: &WienerModel, c: &Measurement, clamp: bool) -> Result<Spectrum> {
    if c.channels() != model.channels() {
        return Err(Error::Dimension {
            context: "wiener_predict measurement",
            expected: model.channels(),
            actual: c.channels(),
        });
    }
    let p = model.channels();
    let cv = c.values();
    let mut values: Vec<f64> = model
        .matrix
        .chunks_exact(p)
        .map(|row| row.iter().zip(cv).map(|(&w, &x)| w * x).sum())
        .collect();
    if clamp {
        for v in &mut values {
            *v = v.clamp(0.0, 1.0);
        }
        Spectrum::reflectance(model.grid, values)
    } else {
        Spectrum::radiance(model.grid, values)
    }
}
