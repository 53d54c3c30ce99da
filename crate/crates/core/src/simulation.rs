//! Synthetic fading time series and deterministic path loss.
//!
//! The generator is a stationary Gaussian copula: a latent AR(1) series
//! zᵢ = ρ·zᵢ₋₁ + √(1−ρ²)·εᵢ with ρ = exp(−Δt/τ₀) is pushed through
//! h = F⁻¹(Φ(z)), so every sample has exactly the requested marginal and the
//! latent autocorrelation is exp(−τ/τ₀).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{ln_pdf_at_log, quantile, quantile_sf, FadingParams};
use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_sf};
use crate::trace::SampleTrace;

/// What to generate: marginal law, latent decorrelation time τ₀ (seconds),
/// sampling rate (Sa/s) and length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FadingProcessSpec {
    pub marginal: FadingParams,
    pub coherence_time: f64,
    pub sample_rate: f64,
    pub n_samples: usize,
}

impl FadingProcessSpec {
    pub fn validate(&self) -> Result<()> {
        self.marginal.validate()?;
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {}",
                self.sample_rate
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("sample count must be >= 1".into()));
        }
        // The relative slack lets τ·rate = 1 pass despite decimal round-off.
        let steps = self.coherence_time * self.sample_rate;
        if !(steps >= 1.0 - 1e-12) || self.coherence_time.is_nan() {
            return Err(Error::UnresolvableCoherence {
                coherence_time: self.coherence_time,
                sample_rate: self.sample_rate,
            });
        }
        Ok(())
    }

    /// Lag-one latent correlation exp(−Δt/τ₀).
    pub fn rho(&self) -> f64 {
        (-1.0 / (self.coherence_time * self.sample_rate)).exp()
    }
}

/// Latent range covered by the interpolation table.
const Z_MAX: f64 = 8.0;
const INITIAL_NODES: usize = 4096;
const MAX_NODES: usize = 1 << 17;
/// Target interpolation error, relative to max(1, h).
pub const QUANTILE_TABLE_TOLERANCE: f64 = 1e-6;

/// h = F⁻¹(Φ(z)), with the tail chosen so tiny probabilities keep their
/// precision.
pub fn latent_quantile(params: &FadingParams, z: f64) -> Result<f64> {
    if z <= 0.0 {
        quantile(params, norm_cdf(z))
    } else {
        quantile_sf(params, norm_sf(z))
    }
}

/// d(ln h)/dz = φ(z)/(h·f(h)), evaluated in logs.
fn log_slope(params: &FadingParams, z: f64, ln_h: f64) -> f64 {
    let ln_phi = -0.5 * z * z - 0.5 * (2.0 * std::f64::consts::PI).ln();
    (ln_phi - ln_h - ln_pdf_at_log(params, ln_h)).exp()
}

/// Cached monotone interpolant of z ↦ F⁻¹(Φ(z)) on a uniform grid over
/// [−8, 8]. It works in ln h with cubic Hermite segments whose node slopes
/// are the exact derivatives. The grid is doubled until every midpoint
/// matches the exact map within the tolerance. Outside the grid the exact
/// map is used.
#[derive(Debug, Clone)]
pub struct QuantileTable {
    params: FadingParams,
    step: f64,
    ln_h: Vec<f64>,
    slope: Vec<f64>,
    max_error: f64,
}

impl QuantileTable {
    pub fn new(params: &FadingParams) -> Result<Self> {
        params.validate()?;
        let node = |z: f64| -> Result<(f64, f64)> {
            let ln_h = latent_quantile(params, z)?.ln();
            Ok((ln_h, log_slope(params, z, ln_h)))
        };
        let mut n = INITIAL_NODES;
        let mut nodes: Vec<(f64, f64)> = (0..=n)
            .into_par_iter()
            .map(|i| node(-Z_MAX + 2.0 * Z_MAX * i as f64 / n as f64))
            .collect::<Result<_>>()?;
        loop {
            let step = 2.0 * Z_MAX / n as f64;
            let mut table = Self {
                params: *params,
                step,
                ln_h: nodes.iter().map(|p| p.0).collect(),
                slope: nodes.iter().map(|p| p.1).collect(),
                max_error: 0.0,
            };
            table.limit_slopes();
            // Exact values at the midpoints double as the next level's new nodes.
            let mids: Vec<(f64, f64)> = (0..n)
                .into_par_iter()
                .map(|i| node(-Z_MAX + (i as f64 + 0.5) * step))
                .collect::<Result<_>>()?;
            table.max_error = mids
                .iter()
                .enumerate()
                .map(|(i, &(ln_h, _))| {
                    let exact = ln_h.exp();
                    let approx = table.interpolate(i, 0.5).exp();
                    (approx - exact).abs() / exact.max(1.0)
                })
                .fold(0.0, f64::max);
            if table.max_error <= QUANTILE_TABLE_TOLERANCE || 2 * n > MAX_NODES {
                return Ok(table);
            }
            nodes = nodes
                .iter()
                .zip(&mids)
                .flat_map(|(a, b)| [*a, *b])
                .chain(std::iter::once(nodes[n]))
                .collect();
            n *= 2;
        }
    }

    /// Fritsch–Carlson limiter: keeps every segment monotone.
    fn limit_slopes(&mut self) {
        for i in 0..self.ln_h.len() - 1 {
            let delta = (self.ln_h[i + 1] - self.ln_h[i]) / self.step;
            if delta <= 0.0 {
                self.slope[i] = 0.0;
                self.slope[i + 1] = 0.0;
                continue;
            }
            let a = self.slope[i] / delta;
            let b = self.slope[i + 1] / delta;
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                self.slope[i] = t * a * delta;
                self.slope[i + 1] = t * b * delta;
            }
        }
    }

    fn interpolate(&self, i: usize, t: f64) -> f64 {
        let (y0, y1) = (self.ln_h[i], self.ln_h[i + 1]);
        let (m0, m1) = (self.slope[i] * self.step, self.slope[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// F⁻¹(Φ(z)).
    pub fn eval(&self, z: f64) -> Result<f64> {
        if !(-Z_MAX..Z_MAX).contains(&z) {
            return latent_quantile(&self.params, z);
        }
        let x = (z + Z_MAX) / self.step;
        let i = (x.floor() as usize).min(self.ln_h.len() - 2);
        Ok(self.interpolate(i, x - i as f64).exp())
    }

    /// Largest midpoint error relative to max(1, h) found during construction.
    pub fn max_error(&self) -> f64 {
        self.max_error
    }

    pub fn node_count(&self) -> usize {
        self.ln_h.len()
    }
}

/// The latent AR(1) series, started from its stationary law.
pub fn latent_series(spec: &FadingProcessSpec, seed: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let rho = spec.rho();
    let innovation = (1.0 - rho * rho).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z: f64 = StandardNormal.sample(&mut rng);
    let mut out = Vec::with_capacity(spec.n_samples);
    out.push(z);
    for _ in 1..spec.n_samples {
        let e: f64 = StandardNormal.sample(&mut rng);
        z = rho * z + innovation * e;
        out.push(z);
    }
    Ok(out)
}

/// Generate a fading trace. The output is not rescaled, so its sample mean
/// fluctuates around E[h̃] = 1 like a measured record would.
pub fn generate_fading(spec: &FadingProcessSpec, seed: u64) -> Result<SampleTrace> {
    spec.validate()?;
    let table = QuantileTable::new(&spec.marginal)?;
    generate_fading_with(spec, &table, seed)
}

/// [`generate_fading`] with a prebuilt table for `spec.marginal`.
pub fn generate_fading_with(
    spec: &FadingProcessSpec,
    table: &QuantileTable,
    seed: u64,
) -> Result<SampleTrace> {
    if table.params != spec.marginal {
        return Err(Error::InvalidArgument(
            "quantile table was built for a different marginal".into(),
        ));
    }
    let values = latent_series(spec, seed)?
        .into_iter()
        .map(|z| table.eval(z))
        .collect::<Result<Vec<_>>>()?;
    SampleTrace::new(values, spec.sample_rate)
}

/// Absorption a(λ) and scattering b(λ) per metre over a link of d₀ metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossSpec {
    pub absorption: f64,
    pub scattering: f64,
    pub distance: f64,
}

impl PathLossSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("absorption", self.absorption),
            ("scattering", self.scattering),
            ("distance", self.distance),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Extinction coefficient c = a + b.
    pub fn extinction(&self) -> f64 {
        self.absorption + self.scattering
    }
}

/// Attenuation of the non-scattered light, exp(−(a+b)·d₀).
pub fn path_loss(spec: &PathLossSpec) -> Result<f64> {
    spec.validate()?;
    Ok((-spec.extinction() * spec.distance).exp())
}

/// Element-wise transmit · fading · loss.
pub fn received_signal(transmit: &[f64], fading: &[f64], loss: f64) -> Result<Vec<f64>> {
    if transmit.len() != fading.len() {
        return Err(Error::LengthMismatch(transmit.len(), fading.len()));
    }
    if !(loss > 0.0 && loss <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "loss factor must lie in (0, 1], got {loss}"
        )));
    }
    if transmit.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidArgument(
            "transmit samples must be finite and non-negative".into(),
        ));
    }
    Ok(transmit
        .iter()
        .zip(fading)
        .map(|(t, h)| t * h * loss)
        .collect())
}
