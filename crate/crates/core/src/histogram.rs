//! Density-normalized histograms of normalized intensity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::NormalizedTrace;

/// How bins are chosen for [`build_histogram`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinSpec {
    /// Explicit, strictly increasing edges.
    Edges(Vec<f64>),
    /// Equal-width bins spanning the data range.
    Count(usize),
    /// Rice rule ⌈2·N^(1/3)⌉ clamped to [10, 200], equal width over the data range.
    #[default]
    Auto,
}

pub const AUTO_MIN_BINS: usize = 10;
pub const AUTO_MAX_BINS: usize = 200;

/// Bin count chosen by [`BinSpec::Auto`] for `n` samples.
pub fn auto_bin_count(n: usize) -> usize {
    let rice = (2.0 * (n as f64).cbrt()).ceil() as usize;
    rice.clamp(AUTO_MIN_BINS, AUTO_MAX_BINS)
}

/// Binned empirical PDF f_{m,i}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalPdf {
    bin_edges: Vec<f64>,
    densities: Vec<f64>,
    counts: Vec<u64>,
    n_total: u64,
    /// Scintillation index of the samples the histogram was built from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_scint_index: Option<f64>,
}

impl EmpiricalPdf {
    /// Build from edges and per-bin counts; densities are counts/(n·width).
    pub fn from_counts(bin_edges: Vec<f64>, counts: Vec<u64>) -> Result<Self> {
        validate_edges(&bin_edges)?;
        if counts.len() + 1 != bin_edges.len() {
            return Err(Error::InvalidBins(format!(
                "{} edges need {} counts, got {}",
                bin_edges.len(),
                bin_edges.len() - 1,
                counts.len()
            )));
        }
        let n_total: u64 = counts.iter().sum();
        if n_total == 0 {
            return Err(Error::InvalidBins("no samples fall inside the bins".into()));
        }
        let densities = counts
            .iter()
            .zip(bin_edges.windows(2))
            .map(|(&c, w)| c as f64 / (n_total as f64 * (w[1] - w[0])))
            .collect();
        Ok(Self {
            bin_edges,
            densities,
            counts,
            n_total,
            source_scint_index: None,
        })
    }

    pub fn bin_edges(&self) -> &[f64] {
        &self.bin_edges
    }

    pub fn densities(&self) -> &[f64] {
        &self.densities
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n_total(&self) -> u64 {
        self.n_total
    }

    pub fn bin_count(&self) -> usize {
        self.densities.len()
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.bin_edges.windows(2).map(|w| w[1] - w[0])
    }

    /// ∫ density = Σ densityᵢ·widthᵢ.
    pub fn integral(&self) -> f64 {
        self.densities
            .iter()
            .zip(self.widths())
            .map(|(d, w)| d * w)
            .sum()
    }

    /// Scintillation index of the underlying data: taken from the source trace
    /// when known, otherwise from the bin-center moments.
    pub fn scint_index(&self) -> f64 {
        if let Some(s) = self.source_scint_index {
            return s;
        }
        let n = self.n_total as f64;
        let (m1, m2) =
            self.counts
                .iter()
                .zip(self.centers())
                .fold((0.0, 0.0), |(m1, m2), (&c, x)| {
                    let p = c as f64 / n;
                    (m1 + p * x, m2 + p * x * x)
                });
        (m2 - m1 * m1) / (m1 * m1)
    }

    pub fn source_scint_index(&self) -> Option<f64> {
        self.source_scint_index
    }
}

fn validate_edges(edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::InvalidBins("need at least two edges".into()));
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::InvalidBins("edges must be finite".into()));
    }
    if edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidBins(
            "edges must be strictly increasing".into(),
        ));
    }
    Ok(())
}

fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    let width = (hi - lo) / bins as f64;
    let mut edges: Vec<f64> = (0..=bins).map(|i| lo + width * i as f64).collect();
    edges[bins] = hi;
    edges
}

/// Tally normalized intensities into half-open bins `[eᵢ, eᵢ₊₁)`, the last
/// bin closed. With explicit edges, values outside `[e₀, e_M]` are dropped
/// and `n_total` counts only the binned samples.
pub fn build_histogram(trace: &NormalizedTrace, bins: &BinSpec) -> Result<EmpiricalPdf> {
    let values = trace.values();
    if values.is_empty() {
        return Err(Error::InvalidTrace("empty trace".into()));
    }
    let edges = match bins {
        BinSpec::Edges(e) => {
            validate_edges(e)?;
            e.clone()
        }
        BinSpec::Count(_) | BinSpec::Auto => {
            let (lo, hi) = values
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            if hi <= lo {
                return Err(Error::DegenerateRange);
            }
            let count = match bins {
                BinSpec::Count(0) => {
                    return Err(Error::InvalidBins("bin count must be positive".into()))
                }
                BinSpec::Count(c) => *c,
                _ => auto_bin_count(values.len()),
            };
            uniform_edges(lo, hi, count)
        }
    };

    let m = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[m]);
    let mut counts = vec![0u64; m];
    for &v in values {
        if v < lo || v > hi {
            continue;
        }
        let idx = if v == hi {
            m - 1
        } else {
            // First edge strictly greater than v, minus one.
            edges.partition_point(|&e| e <= v) - 1
        };
        counts[idx] += 1;
    }
    let mut pdf = EmpiricalPdf::from_counts(edges, counts)?;
    pdf.source_scint_index = Some(crate::estimation::scintillation_index_unchecked(values));
    Ok(pdf)
}
