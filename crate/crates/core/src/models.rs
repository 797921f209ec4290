//! Loading trained demultiplexer models of either kind from disk.

use std::fs::File;
use std::io::{BufReader, Read, Seek, SeekFrom};
use std::path::Path;

use crate::error::{Error, Result};
use crate::forest::ForestModel;
use crate::measurement::Measurement;
use crate::spectrum::Spectrum;
use crate::wiener::{wiener_predict, WienerModel};
use crate::{forest::forest_predict, grid::WavelengthGrid};

/// Either demultiplexer kind, dispatched on the file magic.
pub enum AnyModel {
    Wiener(WienerModel),
    Forest(ForestModel),
}

impl AnyModel {
    pub fn kind(&self) -> &'static str {
        match self {
            AnyModel::Wiener(_) => "wiener",
            AnyModel::Forest(_) => "forest",
        }
    }

    pub fn grid(&self) -> WavelengthGrid {
        match self {
            AnyModel::Wiener(m) => m.grid(),
            AnyModel::Forest(m) => m.grid(),
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            AnyModel::Wiener(m) => m.channels(),
            AnyModel::Forest(m) => m.channels(),
        }
    }

    /// Demultiplexes one measurement. `clamp` applies only to the linear
    /// model; forest predictions are hull-bounded already.
    pub fn predict(&self, c: &Measurement, clamp: bool) -> Result<Spectrum> {
        match self {
            AnyModel::Wiener(m) => wiener_predict(m, c, clamp),
            AnyModel::Forest(m) => forest_predict(m, c),
        }
    }
}

/// Loads a model file, telling wiener from forest by its magic bytes.
pub fn load_any_model(path: impl AsRef<Path>) -> Result<AnyModel> {
    let path = path.as_ref();
    let origin = path.display().to_string();
    let mut reader =
        BufReader::new(File::open(path).map_err(|e| Error::io(origin.clone(), e))?);
    let mut magic = [0u8; 8];
    reader
        .read_exact(&mut magic)
        .map_err(|e| Error::io(origin.clone(), e))?;
    reader
        .seek(SeekFrom::Start(0))
        .map_err(|e| Error::io(origin.clone(), e))?;
    match &magic {
        b"SDXWIEN\0" => Ok(AnyModel::Wiener(WienerModel::read(&mut reader, &origin)?)),
        b"SDXFRST\0" => Ok(AnyModel::Forest(ForestModel::read(&mut reader, &origin)?)),
        _ => Err(Error::format(
            origin,
            "not a specdemux model file (unrecognized magic)",
        )),
    }
}
