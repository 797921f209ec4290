//! Experiment reports: machine-readable JSON plus a plain-text summary.
//!
//! The JSON payload is fully deterministic for a given config and seed;
//! wall-clock timings are kept out of it (they go to `timings.txt`) and the
//! payload carries a self-describing `determinism_hash` over every other
//! field.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fingerprint::Fingerprint;
use crate::metrics::psnr_from_sse;

use super::config::ExperimentConfig;

/// A PSNR in dB that can be the `+∞` sentinel (exact reconstruction).
/// Serializes as a JSON number, or the string `"+inf"` when infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsnrDb(pub f64);

impl Serialize for PsnrDb {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            serializer.serialize_str("+inf")
        } else {
            serializer.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for PsnrDb {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as DeError;
        let value = serde_json::Value::deserialize(deserializer)?;
        match value {
            serde_json::Value::Number(n) => n
                .as_f64()
                .map(PsnrDb)
                .ok_or_else(|| DeError::custom("psnr is not representable as f64")),
            serde_json::Value::String(s) if s == "+inf" => Ok(PsnrDb(f64::INFINITY)),
            other => Err(DeError::custom(format!("unexpected psnr value {other}"))),
        }
    }
}

impl std::fmt::Display for PsnrDb {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.0.is_infinite() {
            f.write_str("+inf")
        } else {
            write!(f, "{:.2}", self.0)
        }
    }
}

/// Pooled result for one demultiplexing method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: String,
    pub psnr_db: PsnrDb,
    pub total_sse: f64,
    pub value_count: usize,
}

/// Squared-error row for one test spectrum (summed over wavelengths).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumErrors {
    pub id: String,
    pub wem: f64,
    pub demux_wem: f64,
    pub demux_rfm: f64,
}

impl SpectrumErrors {
    pub fn by_method(&self, method: &str) -> Option<f64> {
        match method {
            "wem" => Some(self.wem),
            "demux-wem" => Some(self.demux_wem),
            "demux-rfm" => Some(self.demux_rfm),
            _ => None,
        }
    }
}

/// Per-section PSNR for the fixture icon experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionPsnr {
    pub section: String,
    pub wem: PsnrDb,
    pub demux_wem: PsnrDb,
    pub demux_rfm: PsnrDb,
}

/// Wall-clock stage timings; never part of the deterministic payload.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timings {
    pub stages: Vec<(String, f64)>,
}

impl Timings {
    pub fn push(&mut self, stage: &str, seconds: f64) {
        self.stages.push((stage.to_string(), seconds));
    }

    pub fn total_seconds(&self) -> f64 {
        self.stages.iter().map(|(_, s)| s).sum()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (stage, seconds) in &self.stages {
            out.push_str(&format!("{stage:<18} {seconds:9.3} s\n"));
        }
        out.push_str(&format!("{:<18} {:9.3} s\n", "total", self.total_seconds()));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    /// "simulation" or "fixture-icon".
    pub kind: String,
    /// Human-readable note; the icon run is explicitly labeled a fixture
    /// stand-in for the physical capture.
    pub label: String,
    pub library_version: String,
    pub format_version: u32,
    pub config: ExperimentConfig,
    pub psnr_peak: f64,
    pub sensitivity_fingerprint: Fingerprint,
    pub train_dataset_fingerprint: Fingerprint,
    pub wem_dataset_fingerprint: Fingerprint,
    pub methods: Vec<MethodResult>,
    pub per_spectrum_sse: Vec<SpectrumErrors>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sections: Option<Vec<SectionPsnr>>,
    /// SHA-256 over the canonical JSON of this report with the hash field
    /// emptied; timings never enter the payload at all.
    pub determinism_hash: String,
    #[serde(skip)]
    pub timings: Timings,
}

impl ExperimentReport {
    pub fn compute_determinism_hash(&self) -> String {
        let mut clone = self.clone();
        clone.determinism_hash = String::new();
        let canonical = serde_json::to_string(&clone).expect("report serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        hex::encode(hasher.finalize())
    }

    pub fn seal(&mut self) {
        self.determinism_hash = self.compute_determinism_hash();
    }

    /// Recomputes every pooled PSNR from the stored error table and compares
    /// against the reported values at 1e-10.
    pub fn verify_integrity(&self) -> Result<()> {
        if self.determinism_hash != self.compute_determinism_hash() {
            return Err(Error::Invalid {
                what: "experiment report",
                reason: "determinism hash does not match payload".into(),
            });
        }
        for method in &self.methods {
            let total: f64 = self
                .per_spectrum_sse
                .iter()
                .map(|row| {
                    row.by_method(&method.method)
                        .expect("method names are fixed")
                })
                .sum();
            let recomputed = psnr_from_sse(total, method.value_count, self.psnr_peak);
            let matches = if recomputed.is_infinite() || method.psnr_db.0.is_infinite() {
                recomputed == method.psnr_db.0
            } else {
                (recomputed - method.psnr_db.0).abs() <= 1e-10
            };
            if !matches {
                return Err(Error::Invalid {
                    what: "experiment report",
                    reason: format!(
                        "{}: stored PSNR {} but error table gives {recomputed}",
                        method.method, method.psnr_db.0
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn method(&self, name: &str) -> Option<&MethodResult> {
        self.methods.iter().find(|m| m.method == name)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let report: ExperimentReport =
            serde_json::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
        Ok(report)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("specdemux {} experiment\n", self.kind));
        out.push_str(&format!("{}\n", self.label));
        out.push_str(&format!("grid: {}\n", self.config.grid));
        out.push_str(&format!(
            "train {}  test {}  seed {}\n",
            self.config.spectra.train_count, self.config.spectra.test_count, self.config.seed
        ));
        out.push_str(&format!(
            "sensitivity fingerprint: {}\n\n",
            self.sensitivity_fingerprint
        ));
        out.push_str(&format!("{:<12} {:>10}\n", "method", "PSNR (dB)"));
        for m in &self.methods {
            out.push_str(&format!("{:<12} {:>10}\n", m.method, m.psnr_db.to_string()));
        }
        if let Some(sections) = &self.sections {
            out.push_str("\nper-section PSNR (dB):\n");
            out.push_str(&format!(
                "{:<12} {:>10} {:>10} {:>10}\n",
                "section", "wem", "demux-wem", "demux-rfm"
            ));
            for s in sections {
                out.push_str(&format!(
                    "{:<12} {:>10} {:>10} {:>10}\n",
                    s.section,
                    s.wem.to_string(),
                    s.demux_wem.to_string(),
                    s.demux_rfm.to_string()
                ));
            }
        }
        out
    }
}
