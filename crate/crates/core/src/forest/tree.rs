//! CART regression trees over measurement channels.
//!
//! Split search follows the classic variance-reduction rule: at every node,
//! try all channels and all candidate thresholds (midpoints between
//! consecutive distinct sorted channel values) and keep the split whose
//! children have the smallest total sum of squared deviations. Ties are
//! broken toward the lowest channel index, then the lowest threshold, so
//! fitting is fully deterministic. Growth stops at `max_depth`,
//! `min_leaf_samples`, or a constant-target node. A sample is routed left
//! when `value <= threshold`.

use crate::error::{Error, Result};
use crate::measurement::Measurement;

/// One node of a fitted tree; children are indices into the node array.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Leaf { value: f64 },
    Split {
        channel: u16,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

/// A fitted CART regression tree. The root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

/// Training inputs in channel-major layout: `columns[channel][sample]`.
pub(crate) struct FeatureMatrix {
    columns: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub(crate) fn from_measurements(inputs: &[Measurement]) -> Result<Self> {
        let p = inputs[0].channels();
        let mut columns = vec![Vec::with_capacity(inputs.len()); p];
        for m in inputs {
            if m.channels() != p {
                return Err(Error::Dimension {
                    context: "tree_fit inputs",
                    expected: p,
                    actual: m.channels(),
                });
            }
            for (ch, &v) in m.values().iter().enumerate() {
                columns[ch].push(v);
            }
        }
        Ok(Self { columns })
    }

    pub(crate) fn channels(&self) -> usize {
        self.columns.len()
    }

    pub(crate) fn len(&self) -> usize {
        self.columns[0].len()
    }

    fn value(&self, channel: usize, sample: usize) -> f64 {
        self.columns[channel][sample]
    }
}

/// Mean that is exact for constant inputs (clamped into the sample hull so
/// rounding can never push a prediction outside the observed target range).
fn hull_mean(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let mut iter = values.clone();
    let first = iter.next().expect("non-empty");
    let (mut lo, mut hi, mut count) = (first, first, 1u64);
    let mut centered_sum = 0.0;
    for v in iter {
        lo = lo.min(v);
        hi = hi.max(v);
        centered_sum += v - first;
        count += 1;
    }
    if lo == hi {
        return first;
    }
    (first + centered_sum / count as f64).clamp(lo, hi)
}

struct WorkItem {
    /// Index of the placeholder node to fill in.
    slot: usize,
    samples: Vec<usize>,
    depth: u32,
}

struct BestSplit {
    channel: usize,
    threshold: f64,
    impurity: f64,
}

/// Fits a tree to `(inputs[i], targets[i])` pairs.
///
/// Degenerate input (constant targets, or no admissible split) yields a
/// single leaf; the leaf prediction for a constant-target node is that exact
/// target value.
pub fn tree_fit(
    inputs: &[Measurement],
    targets: &[f64],
    max_depth: u32,
    min_leaf_samples: usize,
) -> Result<RegressionTree> {
    if inputs.is_empty() {
        return Err(Error::Usage("tree_fit needs at least one sample".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::Dimension {
            context: "tree_fit targets",
            expected: inputs.len(),
            actual: targets.len(),
        });
    }
    if max_depth == 0 || min_leaf_samples == 0 {
        return Err(Error::Usage(
            "max_depth and min_leaf_samples must be at least 1".into(),
        ));
    }
    let features = FeatureMatrix::from_measurements(inputs)?;
    let samples: Vec<usize> = (0..inputs.len()).collect();
    Ok(fit_on_samples(
        &features,
        targets,
        samples,
        max_depth,
        min_leaf_samples,
    ))
}

/// Core fit over pre-selected sample indices (may contain duplicates when
/// the caller bootstraps).
pub(crate) fn fit_on_samples(
    features: &FeatureMatrix,
    targets: &[f64],
    samples: Vec<usize>,
    max_depth: u32,
    min_leaf_samples: usize,
) -> RegressionTree {
    let mut nodes = Vec::new();
    nodes.push(Node::Leaf { value: 0.0 }); // root placeholder
    let mut stack = vec![WorkItem {
        slot: 0,
        samples,
        depth: 0,
    }];

    while let Some(item) = stack.pop() {
        let WorkItem {
            slot,
            mut samples,
            depth,
        } = item;

        let constant = {
            let first = targets[samples[0]];
            samples.iter().all(|&i| targets[i] == first)
        };
        if constant || depth >= max_depth || samples.len() < 2 * min_leaf_samples {
            nodes[slot] = Node::Leaf {
                value: hull_mean(samples.iter().map(|&i| targets[i])),
            };
            continue;
        }

        let Some(best) = best_split(features, targets, &mut samples, min_leaf_samples) else {
            nodes[slot] = Node::Leaf {
                value: hull_mean(samples.iter().map(|&i| targets[i])),
            };
            continue;
        };

        let (left_samples, right_samples): (Vec<usize>, Vec<usize>) = samples
            .iter()
            .partition(|&&i| features.value(best.channel, i) <= best.threshold);
        debug_assert!(!left_samples.is_empty() && !right_samples.is_empty());

        let left = nodes.len() as u32;
        nodes.push(Node::Leaf { value: 0.0 });
        let right = nodes.len() as u32;
        nodes.push(Node::Leaf { value: 0.0 });
        nodes[slot] = Node::Split {
            channel: best.channel as u16,
            threshold: best.threshold,
            left,
            right,
        };
        stack.push(WorkItem {
            slot: left as usize,
            samples: left_samples,
            depth: depth + 1,
        });
        stack.push(WorkItem {
            slot: right as usize,
            samples: right_samples,
            depth: depth + 1,
        });
    }
    RegressionTree { nodes }
}

/// Scans every channel and admissible threshold; impurity of a split is the
/// total child SSE `Σ(y−ȳ_L)² + Σ(y−ȳ_R)²` (same argmin as weighted child
/// variance).
fn best_split(
    features: &FeatureMatrix,
    targets: &[f64],
    samples: &mut [usize],
    min_leaf_samples: usize,
) -> Option<BestSplit> {
    let m = samples.len();
    let mut total_sum = 0.0;
    let mut total_sumsq = 0.0;
    for &i in samples.iter() {
        total_sum += targets[i];
        total_sumsq += targets[i] * targets[i];
    }

    let mut best: Option<BestSplit> = None;
    for channel in 0..features.channels() {
        samples.sort_unstable_by(|&a, &b| {
            features.value(channel, a).total_cmp(&features.value(channel, b))
        });
        let mut left_sum = 0.0;
        let mut left_sumsq = 0.0;
        for pos in 1..m {
            let t = targets[samples[pos - 1]];
            left_sum += t;
            left_sumsq += t * t;
            let prev = features.value(channel, samples[pos - 1]);
            let here = features.value(channel, samples[pos]);
            if here == prev {
                continue;
            }
            if pos < min_leaf_samples || m - pos < min_leaf_samples {
                continue;
            }
            let m_left = pos as f64;
            let m_right = (m - pos) as f64;
            let sse_left = left_sumsq - left_sum * left_sum / m_left;
            let right_sum = total_sum - left_sum;
            let sse_right = (total_sumsq - left_sumsq) - right_sum * right_sum / m_right;
            let impurity = sse_left + sse_right;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                // midpoint can round up onto `here`; fall back so routing
                // keeps both children non-empty
                let mut threshold = 0.5 * (prev + here);
                if threshold >= here {
                    threshold = prev;
                }
                best = Some(BestSplit {
                    channel,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

impl RegressionTree {
    pub fn predict(&self, c: &Measurement) -> f64 {
        self.predict_values(c.values())
    }

    pub(crate) fn predict_values(&self, values: &[f64]) -> f64 {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    channel,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if values[*channel as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
            }
        }
    }

    /// The root's (channel, threshold), or None when the tree is one leaf.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            Node::Leaf { .. } => None,
            Node::Split {
                channel, threshold, ..
            } => Some((channel.into(), threshold)),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    /// Number of split levels on the deepest path (a lone leaf has depth 0).
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], idx: usize) -> usize {
            match &nodes[idx] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }

    pub(crate) fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub(crate) fn from_nodes(nodes: Vec<Node>, channels: usize) -> Result<Self> {
        // structural check so corrupt files cannot cause panics at predict time
        let len = nodes.len() as u32;
        if nodes.is_empty() {
            return Err(Error::Invalid {
                what: "regression tree",
                reason: "empty node array".into(),
            });
        }
        for node in &nodes {
            if let Node::Split {
                channel,
                threshold,
                left,
                right,
            } = node
            {
                if *left >= len || *right >= len {
                    return Err(Error::Invalid {
                        what: "regression tree",
                        reason: format!("child index out of range ({left}, {right})"),
                    });
                }
                if usize::from(*channel) >= channels {
                    return Err(Error::Invalid {
                        what: "regression tree",
                        reason: format!("split channel {channel} out of range"),
                    });
                }
                if !threshold.is_finite() {
                    return Err(Error::Invalid {
                        what: "regression tree",
                        reason: "non-finite split threshold".into(),
                    });
                }
            } else if let Node::Leaf { value } = node {
                if !value.is_finite() {
                    return Err(Error::Invalid {
                        what: "regression tree",
                        reason: "non-finite leaf value".into(),
                    });
                }
            }
        }
        Ok(Self { nodes })
    }
}
