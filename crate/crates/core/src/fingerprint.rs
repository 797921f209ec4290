//! Content fingerprints tying models and datasets to the sensor they came from.
//!
//! Fingerprints are SHA-256 over a canonical little-endian byte encoding, so
//! they are stable across platforms and runs.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A 256-bit content hash, displayed as lowercase hex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Fingerprint([u8; 32]);

impl Fingerprint {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl std::fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Fingerprint {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Fingerprint {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        let bytes = hex::decode(&s).map_err(serde::de::Error::custom)?;
        let arr: [u8; 32] = bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("fingerprint must be 32 bytes"))?;
        Ok(Self(arr))
    }
}

/// Incremental fingerprint builder with typed, canonical encodings.
pub struct FingerprintBuilder {
    hasher: Sha256,
}

impl FingerprintBuilder {
    pub fn new(domain: &str) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(domain.as_bytes());
        hasher.update([0u8]);
        Self { hasher }
    }

    pub fn add_f64(&mut self, v: f64) -> &mut Self {
        self.hasher.update(v.to_bits().to_le_bytes());
        self
    }

    pub fn add_f64s(&mut self, vs: &[f64]) -> &mut Self {
        for &v in vs {
            self.add_f64(v);
        }
        self
    }

    pub fn add_u64(&mut self, v: u64) -> &mut Self {
        self.hasher.update(v.to_le_bytes());
        self
    }

    pub fn add_str(&mut self, s: &str) -> &mut Self {
        self.add_u64(s.len() as u64);
        self.hasher.update(s.as_bytes());
        self
    }

    pub fn add_bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.hasher.update(bytes);
        self
    }

    pub fn finish(self) -> Fingerprint {
        Fingerprint(self.hasher.finalize().into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_domain_separated() {
        let fp = |domain: &str, v: f64| {
            let mut b = FingerprintBuilder::new(domain);
            b.add_f64(v);
            b.finish()
        };
        assert_eq!(fp("a", 1.0), fp("a", 1.0));
        assert_ne!(fp("a", 1.0), fp("b", 1.0));
        assert_ne!(fp("a", 1.0), fp("a", 2.0));
    }

    #[test]
    fn hex_round_trip() {
        let mut b = FingerprintBuilder::new("t");
        b.add_str("hello").add_u64(7);
        let fp = b.finish();
        let json = serde_json::to_string(&fp).unwrap();
        let back: Fingerprint = serde_json::from_str(&json).unwrap();
        assert_eq!(fp, back);
        assert_eq!(fp.to_hex().len(), 64);
    }
}
