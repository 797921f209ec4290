//! Sensor channel readings.

use std::sync::Arc;

use crate::error::{Error, Result};

/// One p-channel sensor reading, in relative digital counts.
///
/// Channel names are shared (`Arc`) with the sensitivity matrix that produced
/// the measurement, so datasets of many measurements stay cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    values: Vec<f64>,
    channel_names: Arc<Vec<String>>,
}

impl Measurement {
    pub fn new(values: Vec<f64>, channel_names: Arc<Vec<String>>) -> Result<Self> {
        if values.len() != channel_names.len() {
            return Err(Error::Dimension {
                context: "measurement values",
                expected: channel_names.len(),
                actual: values.len(),
            });
        }
        if let Some(&v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid {
                what: "measurement",
                reason: format!("non-finite channel value {v}"),
            });
        }
        Ok(Self {
            values,
            channel_names,
        })
    }

    pub fn channels(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn shared_names(&self) -> Arc<Vec<String>> {
        Arc::clone(&self.channel_names)
    }
}
