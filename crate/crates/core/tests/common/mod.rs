//! Independent oracles shared by the integration suites.
//!
//! Everything here is deliberately written from scratch along a different
//! route than the library (scalar loops, explicit Gauss-Jordan inversion,
//! quadratic split scans) so it can stand as evidence against the
//! implementation rather than echoing it.

#![allow(dead_code)] // each integration test binary uses its own subset

use std::sync::Arc;

use specdemux::dataset::TrainingDataset;
use specdemux::fixtures::fixture_sensor;
use specdemux::specgen::{generate_spectra, SpectraGenConfig};
use specdemux::{Measurement, SensitivityMatrix, Spectrum, WavelengthGrid};

/// Scalar-loop dot product, indexed rather than iterator-fused.
pub fn dot_oracle(row: &[f64], values: &[f64]) -> f64 {
    assert_eq!(row.len(), values.len());
    let mut acc = 0.0;
    for k in 0..row.len() {
        acc += row[k] * values[k];
    }
    acc
}

/// Two-pass pooled MSE: materialize every residual first, then square-sum.
pub fn mse_oracle(truth: &[Spectrum], pred: &[Spectrum]) -> f64 {
    let mut residuals = Vec::new();
    for (t, p) in truth.iter().zip(pred) {
        for (a, b) in t.values().iter().zip(p.values()) {
            residuals.push(a - b);
        }
    }
    let mut sum = 0.0;
    for r in &residuals {
        sum += r * r;
    }
    sum / residuals.len() as f64
}

/// Gauss-Jordan inversion with partial pivoting. Returns None on a
/// vanishing pivot.
pub fn gauss_jordan_inverse(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&r1, &r2| a[r1][col].abs().total_cmp(&a[r2][col].abs()))
            .unwrap();
        if a[pivot_row][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot_row);
        inv.swap(col, pivot_row);
        let pivot = a[col][col];
        for j in 0..n {
            a[col][j] /= pivot;
            inv[col][j] /= pivot;
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col];
            if factor == 0.0 {
                continue;
            }
            for j in 0..n {
                a[row][j] -= factor * a[col][j];
                inv[row][j] -= factor * inv[col][j];
            }
        }
    }
    Some(inv)
}

/// Normal-equations Wiener oracle: assembles the sample second moments with
/// transposed loop nesting and solves through an explicit inverse.
/// Returns the n×p weight matrix as nested Vecs.
pub fn wiener_normal_equations_oracle(
    pairs: &[(Spectrum, Measurement)],
    ridge_epsilon: f64,
) -> Vec<Vec<f64>> {
    let n = pairs[0].0.values().len();
    let p = pairs[0].1.values().len();
    let m = pairs.len() as f64;

    let mut a_cc = vec![vec![0.0f64; p]; p];
    let mut a_lc = vec![vec![0.0f64; p]; n];
    for i in 0..p {
        for j in 0..p {
            for (_, c) in pairs {
                a_cc[i][j] += c.values()[i] * c.values()[j];
            }
            a_cc[i][j] /= m;
        }
    }
    for i in 0..n {
        for j in 0..p {
            for (lam, c) in pairs {
                a_lc[i][j] += lam.values()[i] * c.values()[j];
            }
            a_lc[i][j] /= m;
        }
    }

    let trace: f64 = (0..p).map(|i| a_cc[i][i]).sum();
    let shift = ridge_epsilon * trace / p as f64;
    for (i, row) in a_cc.iter_mut().enumerate() {
        row[i] += shift;
    }

    let inv = gauss_jordan_inverse(a_cc).expect("oracle system is invertible");
    let mut w = vec![vec![0.0f64; p]; n];
    for i in 0..n {
        for j in 0..p {
            for k in 0..p {
                w[i][j] += a_lc[i][k] * inv[k][j];
            }
        }
    }
    w
}

/// Exhaustive O(p·m²) split search: every channel, every midpoint between
/// consecutive distinct sorted values, child SSEs computed two-pass from
/// scratch. Ties break to the lowest channel, then lowest threshold.
/// Returns (channel, threshold, total child SSE).
pub fn exhaustive_best_split(
    inputs: &[Measurement],
    targets: &[f64],
    min_leaf: usize,
) -> Option<(usize, f64, f64)> {
    let m = inputs.len();
    let p = inputs[0].channels();
    let mut best: Option<(usize, f64, f64)> = None;
    for channel in 0..p {
        let mut values: Vec<f64> = inputs.iter().map(|c| c.values()[channel]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let mut threshold = 0.5 * (a + b);
            if threshold >= b {
                threshold = a;
            }
            let left: Vec<f64> = (0..m)
                .filter(|&i| inputs[i].values()[channel] <= threshold)
                .map(|i| targets[i])
                .collect();
            let right: Vec<f64> = (0..m)
                .filter(|&i| inputs[i].values()[channel] > threshold)
                .map(|i| targets[i])
                .collect();
            if left.len() < min_leaf || right.len() < min_leaf {
                continue;
            }
            let sse = |side: &[f64]| {
                let mean = side.iter().sum::<f64>() / side.len() as f64;
                side.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>()
            };
            let impurity = sse(&left) + sse(&right);
            if best.is_none_or(|(_, _, b_imp)| impurity < b_imp) {
                best = Some((channel, threshold, impurity));
            }
        }
    }
    best
}

/// Deterministic bimodal test spectrum: two Gaussian reflectance bumps.
pub fn bimodal_fixture(grid: WavelengthGrid) -> Spectrum {
    let values = grid
        .wavelengths()
        .map(|wl| {
            let b1 = 0.8 * (-(wl - 480.0) * (wl - 480.0) / (2.0 * 25.0 * 25.0)).exp();
            let b2 = 0.6 * (-(wl - 620.0) * (wl - 620.0) / (2.0 * 30.0 * 30.0)).exp();
            (b1 + b2).clamp(0.0, 1.0)
        })
        .collect();
    Spectrum::reflectance(grid, values).unwrap()
}

pub fn fixture_dataset(count: usize, seed: u64) -> (SensitivityMatrix, TrainingDataset) {
    let sens = fixture_sensor();
    let spectra = generate_spectra(&SpectraGenConfig::new(seed, count), sens.grid()).unwrap();
    let ds = TrainingDataset::build(spectra, &sens).unwrap();
    (sens, ds)
}

pub fn measurement(values: Vec<f64>) -> Measurement {
    let names = Arc::new((0..values.len()).map(|i| format!("ch{i}")).collect::<Vec<_>>());
    Measurement::new(values, names).unwrap()
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(got.abs()).max(f64::MIN_POSITIVE)
}

/// Relative Frobenius distance between two matrices in nested-Vec form.
pub fn frobenius_rel_err(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let mut diff = 0.0;
    let mut norm = 0.0;
    for (ra, rb) in a.iter().zip(b) {
        for (&x, &y) in ra.iter().zip(rb) {
            diff += (x - y) * (x - y);
            norm += y * y;
        }
    }
    (diff / norm).sqrt()
}
