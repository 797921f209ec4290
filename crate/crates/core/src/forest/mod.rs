//! Random-forest demultiplexer (DEMUX-RFM): one bootstrap-trained CART
//! ensemble per output wavelength.
//!
//! The configured tree total is spread over the n grid points as evenly as
//! possible: the first `total_trees mod n` wavelengths get `⌈total/n⌉`
//! trees, the rest `⌊total/n⌋`. Every tree draws its bootstrap resample from
//! its own RNG substream keyed by the global tree index, so training can run
//! in parallel and still produce bit-identical models.

pub mod tree;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::TrainingDataset;
use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::grid::WavelengthGrid;
use crate::measurement::Measurement;
use crate::spectrum::Spectrum;

pub use tree::{tree_fit, Node, RegressionTree};

use tree::{fit_on_samples, FeatureMatrix};

const FOREST_MAGIC: &[u8; 8] = b"SDXFRST\0";

/// Forest hyperparameters. The defaults (depth 14, min leaf 2, bootstrap on)
/// suit 3-channel inputs; `total_trees` is chosen by the caller and must be
/// at least the number of output wavelengths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub total_trees: usize,
    pub max_depth: u32,
    pub min_leaf_samples: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

pub const DEFAULT_MAX_DEPTH: u32 = 14;
pub const DEFAULT_MIN_LEAF: usize = 2;

impl ForestConfig {
    pub fn new(total_trees: usize, seed: u64) -> Self {
        Self {
            total_trees,
            max_depth: DEFAULT_MAX_DEPTH,
            min_leaf_samples: DEFAULT_MIN_LEAF,
            bootstrap: true,
            seed,
        }
    }

    /// The forest scale reported for the full experiment: 8000 trees total.
    pub fn paper_scale(seed: u64) -> Self {
        Self::new(8000, seed)
    }

    /// Memorization settings: one tree per wavelength grown to purity on the
    /// full dataset. Useful for exact-recovery checks.
    pub fn memorization(outputs: usize, seed: u64) -> Self {
        Self {
            total_trees: outputs,
            max_depth: u32::MAX,
            min_leaf_samples: 1,
            bootstrap: false,
            seed,
        }
    }

    pub fn validate(&self, outputs: usize) -> Result<()> {
        if self.total_trees < outputs {
            return Err(Error::Usage(format!(
                "total_trees ({}) must be at least the number of output wavelengths ({outputs})",
                self.total_trees
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::Usage("max_depth must be at least 1".into()));
        }
        if self.min_leaf_samples == 0 {
            return Err(Error::Usage("min_leaf_samples must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of trees assigned to output `k` of `outputs`.
    pub fn trees_for(&self, k: usize, outputs: usize) -> usize {
        let base = self.total_trees / outputs;
        let extra = self.total_trees % outputs;
        base + usize::from(k < extra)
    }

    /// Global index of the first tree belonging to output `k`.
    fn tree_offset(&self, k: usize, outputs: usize) -> u64 {
        let base = self.total_trees / outputs;
        let extra = self.total_trees % outputs;
        (k * base + k.min(extra)) as u64
    }
}

/// Per-wavelength tree ensembles trained on a fingerprinted dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    grid: WavelengthGrid,
    channel_names: Arc<Vec<String>>,
    ensembles: Vec<Vec<RegressionTree>>,
    config: ForestConfig,
    training_fingerprint: Fingerprint,
}

/// Trains the forest demultiplexer. Deterministic given (dataset, config).
pub fn forest_train(data: &TrainingDataset, config: &ForestConfig) -> Result<ForestModel> {
    if data.is_empty() {
        return Err(Error::Usage("forest training needs a non-empty dataset".into()));
    }
    let grid = data.grid();
    let n = grid.count();
    config.validate(n)?;

    let inputs: Vec<Measurement> = data.pairs().iter().map(|(_, c)| c.clone()).collect();
    let features = FeatureMatrix::from_measurements(&inputs)?;
    let m = features.len();

    // targets[k][i] = spectrum i at wavelength k
    let targets: Vec<Vec<f64>> = (0..n)
        .map(|k| data.pairs().iter().map(|(lam, _)| lam.value(k)).collect())
        .collect();

    let ensembles: Vec<Vec<RegressionTree>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let offset = config.tree_offset(k, n);
            (0..config.trees_for(k, n))
                .map(|j| {
                    let samples = if config.bootstrap {
                        let mut rng =
                            crate::rng::stream_rng(config.seed, "bootstrap", offset + j as u64);
                        (0..m).map(|_| rng.gen_range(0..m)).collect()
                    } else {
                        (0..m).collect()
                    };
                    fit_on_samples(
                        &features,
                        &targets[k],
                        samples,
                        config.max_depth,
                        config.min_leaf_samples,
                    )
                })
                .collect()
        })
        .collect();

    Ok(ForestModel {
        grid,
        channel_names: Arc::new(data.channel_names().to_vec()),
        ensembles,
        config: config.clone(),
        training_fingerprint: data.fingerprint(),
    })
}

/// Predicts a spectrum: per wavelength, the mean of that ensemble's tree
/// outputs (exact when all trees agree, clamped into the tree-output hull).
pub fn forest_predict(model: &ForestModel, c: &Measurement) -> Result<Spectrum> {
    if c.channels() != model.channels() {
        return Err(Error::Dimension {
            context: "forest_predict measurement",
            expected: model.channels(),
            actual: c.channels(),
        });
    }
    let values = model
        .ensembles
        .iter()
        .map(|ensemble| ensemble_mean(ensemble, c.values()))
        .collect();
    Spectrum::radiance(model.grid, values)
}

fn ensemble_mean(trees: &[RegressionTree], values: &[f64]) -> f64 {
    let first = trees[0].predict_values(values);
    let (mut lo, mut hi) = (first, first);
    let mut centered_sum = 0.0;
    for t in &trees[1..] {
        let v = t.predict_values(values);
        lo = lo.min(v);
        hi = hi.max(v);
        centered_sum += v - first;
    }
    if lo == hi {
        return first;
    }
    (first + centered_sum / trees.len() as f64).clamp(lo, hi)
}

/// Size and shape statistics for reporting.
#[derive(Debug, Clone, Serialize)]
pub struct ForestStats {
    pub total_trees: usize,
    pub trees_per_ensemble_min: usize,
    pub trees_per_ensemble_max: usize,
    pub node_count: usize,
    /// depth -> number of trees with that depth
    pub depth_histogram: std::collections::BTreeMap<usize, usize>,
}

impl std::fmt::Display for ForestStats {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "{} trees ({}-{} per wavelength), {} nodes",
            self.total_trees, self.trees_per_ensemble_min, self.trees_per_ensemble_max, self.node_count
        )?;
        writeln!(f, "depth histogram:")?;
        for (depth, count) in &self.depth_histogram {
            writeln!(f, "  depth {depth:>3}: {count} trees")?;
        }
        Ok(())
    }
}

impl ForestModel {
    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    pub fn channels(&self) -> usize {
        self.channel_names.len()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn training_fingerprint(&self) -> Fingerprint {
        self.training_fingerprint
    }

    pub fn ensembles(&self) -> &[Vec<RegressionTree>] {
        &self.ensembles
    }

    pub fn total_trees(&self) -> usize {
        self.ensembles.iter().map(Vec::len).sum()
    }

    pub fn stats(&self) -> ForestStats {
        let mut histogram = std::collections::BTreeMap::new();
        let mut node_count = 0;
        let mut min_trees = usize::MAX;
        let mut max_trees = 0;
        for ensemble in &self.ensembles {
            min_trees = min_trees.min(ensemble.len());
            max_trees = max_trees.max(ensemble.len());
            for tree in ensemble {
                node_count += tree.node_count();
                *histogram.entry(tree.depth()).or_insert(0) += 1;
            }
        }
        ForestStats {
            total_trees: self.total_trees(),
            trees_per_ensemble_min: min_trees,
            trees_per_ensemble_max: max_trees,
            node_count,
            depth_histogram: histogram,
        }
    }

    // -- model file: magic, u32 version, grid, u32 p, channel names, config
    //    (u64 trees, u32 depth, u64 min leaf, u8 bootstrap, u64 seed),
    //    32-byte fingerprint, u32 ensemble count, then per ensemble a u32
    //    tree count and per tree a u32 node count followed by tagged nodes
    //    (0 = leaf + f64 value; 1 = split + u16 channel, f64 threshold,
    //    u32 left, u32 right). Little-endian, floats as raw bits. --

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let origin = path.display().to_string();
        let io_err = |e| Error::io(&origin, e);
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(&origin, e))?);
        w.write_all(FOREST_MAGIC).map_err(io_err)?;
        w.write_u32::<LittleEndian>(crate::FORMAT_VERSION).map_err(io_err)?;
        w.write_f64::<LittleEndian>(self.grid.start_nm()).map_err(io_err)?;
        w.write_f64::<LittleEndian>(self.grid.step_nm()).map_err(io_err)?;
        w.write_u64::<LittleEndian>(self.grid.count() as u64).map_err(io_err)?;
        w.write_u32::<LittleEndian>(self.channels() as u32).map_err(io_err)?;
        for name in self.channel_names.iter() {
            w.write_u32::<LittleEndian>(name.len() as u32).map_err(io_err)?;
            w.write_all(name.as_bytes()).map_err(io_err)?;
        }
        w.write_u64::<LittleEndian>(self.config.total_trees as u64).map_err(io_err)?;
        w.write_u32::<LittleEndian>(self.config.max_depth).map_err(io_err)?;
        w.write_u64::<LittleEndian>(self.config.min_leaf_samples as u64).map_err(io_err)?;
        w.write_u8(u8::from(self.config.bootstrap)).map_err(io_err)?;
        w.write_u64::<LittleEndian>(self.config.seed).map_err(io_err)?;
        w.write_all(self.training_fingerprint.as_bytes()).map_err(io_err)?;
        w.write_u32::<LittleEndian>(self.ensembles.len() as u32).map_err(io_err)?;
        for ensemble in &self.ensembles {
            w.write_u32::<LittleEndian>(ensemble.len() as u32).map_err(io_err)?;
            for tree in ensemble {
                w.write_u32::<LittleEndian>(tree.node_count() as u32).map_err(io_err)?;
                for node in tree.nodes() {
                    match node {
                        Node::Leaf { value } => {
                            w.write_u8(0).map_err(io_err)?;
                            w.write_u64::<LittleEndian>(value.to_bits()).map_err(io_err)?;
                        }
                        Node::Split {
                            channel,
                            threshold,
                            left,
                            right,
                        } => {
                            w.write_u8(1).map_err(io_err)?;
                            w.write_u16::<LittleEndian>(*channel).map_err(io_err)?;
                            w.write_u64::<LittleEndian>(threshold.to_bits()).map_err(io_err)?;
                            w.write_u32::<LittleEndian>(*left).map_err(io_err)?;
                            w.write_u32::<LittleEndian>(*right).map_err(io_err)?;
                        }
                    }
                }
            }
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
        if &magic != FOREST_MAGIC {
            return Err(Error::format(origin, "not a forest model file (bad magic)"));
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
        let config = ForestConfig {
            total_trees: r.read_u64::<LittleEndian>().map_err(io_err)? as usize,
            max_depth: r.read_u32::<LittleEndian>().map_err(io_err)?,
            min_leaf_samples: r.read_u64::<LittleEndian>().map_err(io_err)? as usize,
            bootstrap: r.read_u8().map_err(io_err)? != 0,
            seed: r.read_u64::<LittleEndian>().map_err(io_err)?,
        };
        let mut fp = [0u8; 32];
        r.read_exact(&mut fp).map_err(io_err)?;
        let ensemble_count = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
        if ensemble_count != count {
            return Err(Error::format(
                origin,
                format!("ensemble count {ensemble_count} does not match grid ({count} points)"),
            ));
        }
        let mut ensembles = Vec::with_capacity(ensemble_count);
        for _ in 0..ensemble_count {
            let tree_count = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
            let mut trees = Vec::with_capacity(tree_count);
            for _ in 0..tree_count {
                let node_count = r.read_u32::<LittleEndian>().map_err(io_err)? as usize;
                let mut nodes = Vec::with_capacity(node_count);
                for _ in 0..node_count {
                    let node = match r.read_u8().map_err(io_err)? {
                        0 => Node::Leaf {
                            value: f64::from_bits(r.read_u64::<LittleEndian>().map_err(io_err)?),
                        },
                        1 => Node::Split {
                            channel: r.read_u16::<LittleEndian>().map_err(io_err)?,
                            threshold: f64::from_bits(
                                r.read_u64::<LittleEndian>().map_err(io_err)?,
                            ),
                            left: r.read_u32::<LittleEndian>().map_err(io_err)?,
                            right: r.read_u32::<LittleEndian>().map_err(io_err)?,
                        },
                        other => {
                            return Err(Error::format(
                                origin,
                                format!("unknown node tag {other}"),
                            ))
                        }
                    };
                    nodes.push(node);
                }
                trees.push(RegressionTree::from_nodes(nodes, p)?);
            }
            ensembles.push(trees);
        }
        Ok(Self {
            grid,
            channel_names: Arc::new(names),
            ensembles,
            config,
            training_fingerprint: Fingerprint::from_bytes(fp),
        })
    }
}
