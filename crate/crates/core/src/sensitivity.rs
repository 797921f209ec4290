//! Per-channel spectral sensitivity of a CFA sensor: the p×n forward matrix.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fingerprint::{Fingerprint, FingerprintBuilder};
use crate::grid::WavelengthGrid;

/// Spectral sensitivity `S` of a p-channel sensor on an n-point grid.
///
/// Row `i` holds channel `i`'s quantum-response weight at each wavelength.
/// Entries are non-negative and finite, and every channel responds somewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityMatrix {
    grid: WavelengthGrid,
    channel_names: Arc<Vec<String>>,
    rows: Vec<Vec<f64>>,
}

impl SensitivityMatrix {
    pub fn new(
        grid: WavelengthGrid,
        channel_names: Vec<String>,
        rows: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Usage("sensitivity matrix needs at least one channel".into()));
        }
        if channel_names.len() != rows.len() {
            return Err(Error::Dimension {
                context: "sensitivity channel names",
                expected: rows.len(),
                actual: channel_names.len(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != grid.count() {
                return Err(Error::Dimension {
                    context: "sensitivity row",
                    expected: grid.count(),
                    actual: row.len(),
                });
            }
            for (k, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::Invalid {
                        what: "sensitivity matrix",
                        reason: format!(
                            "channel '{}' has value {v} at {} nm (must be finite, >= 0)",
                            channel_names[i],
                            grid.wavelength(k)
                        ),
                    });
                }
            }
            if !row.iter().any(|&v| v > 0.0) {
                return Err(Error::Invalid {
                    what: "sensitivity matrix",
                    reason: format!("channel '{}' never responds", channel_names[i]),
                });
            }
        }
        Ok(Self {
            grid,
            channel_names: Arc::new(channel_names),
            rows,
        })
    }

    /// Square identity sensitivity (p = n); one delta channel per wavelength.
    pub fn identity(grid: WavelengthGrid) -> Self {
        let n = grid.count();
        let names = (0..n).map(|k| format!("w{:04}", grid.wavelength(k) as i64)).collect();
        let rows = (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[i] = 1.0;
                row
            })
            .collect();
        Self::new(grid, names, rows).expect("identity sensitivity is always valid")
    }

    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    pub fn channels(&self) -> usize {
        self.rows.len()
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn shared_names(&self) -> Arc<Vec<String>> {
        Arc::clone(&self.channel_names)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Content hash over grid, channel names and all entries.
    pub fn fingerprint(&self) -> Fingerprint {
        let mut b = FingerprintBuilder::new("sensitivity-v1");
        b.add_f64(self.grid.start_nm())
            .add_f64(self.grid.step_nm())
            .add_u64(self.grid.count() as u64)
            .add_u64(self.channels() as u64);
        for name in self.channel_names.iter() {
            b.add_str(name);
        }
        for row in &self.rows {
            b.add_f64s(row);
        }
        b.finish()
    }
}

/// Per-channel diagnostics from [`validate_sensitivity`].
#[derive(Debug, Clone)]
pub struct ChannelDiagnostics {
    pub name: String,
    /// Wavelength of the channel's maximum response.
    pub peak_nm: f64,
    pub peak_value: f64,
    /// Wavelength range where response exceeds 1e-6 of the channel peak.
    pub support_nm: (f64, f64),
}

/// Conditioning diagnostics for the inverse problem.
#[derive(Debug, Clone)]
pub struct SensitivityReport {
    pub channels: Vec<ChannelDiagnostics>,
    /// Numerical rank of S (from the eigenvalues of S·Sᵀ).
    pub rank: usize,
    /// True when rank < p, i.e. some channel is a linear combination of others.
    pub rank_deficient: bool,
}

impl std::fmt::Display for SensitivityReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for ch in &self.channels {
            writeln!(
                f,
                "channel {:<12} peak {:>6.1} nm (response {:.4})  support {:.0}-{:.0} nm",
                ch.name, ch.peak_nm, ch.peak_value, ch.support_nm.0, ch.support_nm.1
            )?;
        }
        write!(f, "rank {} of {} channels", self.rank, self.channels.len())?;
        if self.rank_deficient {
            write!(f, "  (rank deficient: inverse problem is degenerate)")?;
        }
        Ok(())
    }
}

/// Reports per-channel peaks, support ranges and the numerical rank of S.
///
/// Degenerate channels are reported, never rejected.
pub fn validate_sensitivity(sens: &SensitivityMatrix) -> SensitivityReport {
    let grid = sens.grid();
    let channels = sens
        .rows()
        .iter()
        .zip(sens.channel_names())
        .map(|(row, name)| {
            let (peak_k, &peak_value) = row
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .expect("rows are non-empty");
            let floor = peak_value * 1e-6;
            let first = row.iter().position(|&v| v > floor).unwrap_or(0);
            let last = row.iter().rposition(|&v| v > floor).unwrap_or(0);
            ChannelDiagnostics {
                name: name.clone(),
                peak_nm: grid.wavelength(peak_k),
                peak_value,
                support_nm: (grid.wavelength(first), grid.wavelength(last)),
            }
        })
        .collect();

    // Rank of S via the spectrum of the p×p Gram matrix S·Sᵀ.
    let p = sens.channels();
    let n = grid.count();
    let s = DMatrix::from_fn(p, n, |i, k| sens.row(i)[k]);
    let gram = &s * s.transpose();
    let eigen = gram.symmetric_eigen();
    let max_eig = eigen.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b));
    let tol = max_eig * (n.max(p) as f64) * f64::EPSILON;
    let rank = eigen.eigenvalues.iter().filter(|&&l| l > tol).count();

    SensitivityReport {
        channels,
        rank,
        rank_deficient: rank < p,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> WavelengthGrid {
        WavelengthGrid::new(400.0, 100.0, 3).unwrap()
    }

    #[test]
    fn rejects_negative_entries_and_dead_channels() {
        let g = grid();
        assert!(SensitivityMatrix::new(g, vec!["a".into()], vec![vec![0.0, -1.0, 0.0]]).is_err());
        assert!(SensitivityMatrix::new(g, vec!["a".into()], vec![vec![0.0, 0.0, 0.0]]).is_err());
        assert!(SensitivityMatrix::new(g, vec!["a".into()], vec![vec![0.0, 1.0, 0.0]]).is_ok());
    }

    #[test]
    fn identity_has_full_rank_and_unit_peaks() {
        let s = SensitivityMatrix::identity(grid());
        let report = validate_sensitivity(&s);
        assert_eq!(report.rank, 3);
        assert!(!report.rank_deficient);
        assert_eq!(report.channels[1].peak_nm, 500.0);
        assert_eq!(report.channels[1].peak_value, 1.0);
    }

    #[test]
    fn duplicate_rows_reported_rank_deficient_not_rejected() {
        let g = grid();
        let row = vec![0.2, 1.0, 0.1];
        let s = SensitivityMatrix::new(
            g,
            vec!["a".into(), "b".into()],
            vec![row.clone(), row],
        )
        .unwrap();
        let report = validate_sensitivity(&s);
        assert_eq!(report.rank, 1);
        assert!(report.rank_deficient);
        assert!(report.to_string().contains("rank deficient"));
    }

    #[test]
    fn fingerprint_changes_with_content() {
        let g = grid();
        let a = SensitivityMatrix::new(g, vec!["a".into()], vec![vec![0.0, 1.0, 0.0]]).unwrap();
        let b = SensitivityMatrix::new(g, vec!["a".into()], vec![vec![0.0, 1.0, 0.5]]).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
    }

    #[test]
    fn support_range_covers_responsive_region() {
        let g = WavelengthGrid::new(400.0, 10.0, 5).unwrap();
        let s = SensitivityMatrix::new(
            g,
            vec!["mid".into()],
            vec![vec![0.0, 0.4, 1.0, 0.4, 0.0]],
        )
        .unwrap();
        let report = validate_sensitivity(&s);
        assert_eq!(report.channels[0].support_nm, (410.0, 430.0));
        assert_eq!(report.channels[0].peak_nm, 420.0);
    }
}
