//! Received-power records and their unit-mean normalization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Raw photodetector record: non-negative samples proportional to received
/// optical power, taken at a fixed rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleTrace {
    samples: Vec<f64>,
    sample_rate: f64,
}

impl SampleTrace {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidTrace("no samples".into()));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidTrace(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some((i, v)) = samples
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0)
        {
            return Err(Error::InvalidTrace(format!(
                "sample {i} is {v}; samples must be finite and non-negative"
            )));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Record length in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    pub fn mean(&self) -> f64 {
        mean(&self.samples)
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// Fading realization h̃ with unit arithmetic mean.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedTrace {
    values: Vec<f64>,
    sample_rate: f64,
}

impl NormalizedTrace {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.values.len() as f64 / self.sample_rate
    }

    /// Re-enter the raw representation, e.g. to normalize again.
    pub fn to_sample_trace(&self) -> SampleTrace {
        SampleTrace {
            samples: self.values.clone(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Divide every sample by the trace mean.
pub fn normalize_trace(trace: &SampleTrace) -> Result<NormalizedTrace> {
    let m = trace.mean();
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::ZeroMeanTrace(m));
    }
    // A constant trace must map to exactly 1 everywhere.
    let first = trace.samples[0];
    let values = if trace.samples.iter().all(|&v| v == first) {
        vec![1.0; trace.samples.len()]
    } else {
        trace.samples.iter().map(|&v| v / m).collect()
    };
    Ok(NormalizedTrace {
        values,
        sample_rate: trace.sample_rate,
    })
}

/// Sample raw moment (1/N)·Σ hᵢⁿ.
pub fn trace_moment(trace: &NormalizedTrace, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("moment order must be >= 1".into()));
    }
    let sum: f64 = trace.values.iter().map(|&v| v.powi(n as i32)).sum();
    Ok(sum / trace.values.len() as f64)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    // Kahan summation.
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &x in xs {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum / xs.len() as f64
}
