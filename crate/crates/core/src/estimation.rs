//! Estimators applied to normalized traces: scintillation index, temporal
//! covariance coefficient and the coherence-time readout derived from it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{self, NormalizedTrace, SampleTrace};

/// Minimum trace length accepted by [`temporal_covariance`].
pub const MIN_COVARIANCE_SAMPLES: usize = 16;

/// Conventional decorrelation level, 1/e.
pub const DEFAULT_COHERENCE_THRESHOLD: f64 = 0.367_879_441_171_442_33;

/// Normalized lagged covariance b(τ) on a uniform lag grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovarianceCurve {
    lags: Vec<f64>,
    coefficients: Vec<f64>,
}

impl CovarianceCurve {
    /// Build a curve from explicit values. `coefficients[0]` must be 1 and
    /// lags must start at 0 and increase strictly.
    pub fn new(lags: Vec<f64>, coefficients: Vec<f64>) -> Result<Self> {
        if lags.is_empty() || lags.len() != coefficients.len() {
            return Err(Error::LengthMismatch(lags.len(), coefficients.len()));
        }
        if lags[0] != 0.0 || lags.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "lags must start at 0 and increase strictly".into(),
            ));
        }
        if coefficients[0] != 1.0 {
            return Err(Error::InvalidArgument(
                "coefficient at lag 0 must be 1".into(),
            ));
        }
        if coefficients
            .iter()
            .any(|c| !c.is_finite() || c.abs() > 1.0 + 1e-9)
        {
            return Err(Error::InvalidArgument(
                "coefficients must lie in [-1, 1]".into(),
            ));
        }
        Ok(Self { lags, coefficients })
    }

    pub fn lags(&self) -> &[f64] {
        &self.lags
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.lags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags.is_empty()
    }

    pub fn max_lag(&self) -> f64 {
        self.lags[self.lags.len() - 1]
    }
}

/// Threshold crossing of a covariance curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceTime {
    /// Crossing time in seconds, or the largest available lag when saturated.
    pub seconds: f64,
    pub threshold: f64,
    /// True when the curve never fell below the threshold.
    pub saturated: bool,
}

/// Summary statistics of one channel record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub scint_index: f64,
    /// Mean of the raw samples before normalization, in trace units.
    pub mean_intensity: f64,
    pub n_samples: usize,
    pub sample_rate: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence_threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherence_saturated: Option<bool>,
}

impl ChannelStats {
    pub fn new(
        raw: &SampleTrace,
        normalized: &NormalizedTrace,
        coherence: Option<CoherenceTime>,
    ) -> Result<Self> {
        Ok(Self {
            scint_index: scintillation_index(normalized)?,
            mean_intensity: raw.mean(),
            n_samples: raw.len(),
            sample_rate: raw.sample_rate(),
            coherence_time: coherence.map(|c| c.seconds),
            coherence_threshold: coherence.map(|c| c.threshold),
            coherence_saturated: coherence.map(|c| c.saturated),
        })
    }
}

/// Scintillation index σ²_I = (⟨I²⟩ − ⟨I⟩²)/⟨I⟩².
pub fn scintillation_index(trace: &NormalizedTrace) -> Result<f64> {
    if trace.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: trace.len(),
        });
    }
    Ok(scintillation_index_unchecked(trace.values()))
}

pub(crate) fn scintillation_index_unchecked(values: &[f64]) -> f64 {
    let m1 = trace::mean(values);
    let m2 = values.iter().map(|&v| v * v).sum::<f64>() / values.len() as f64;
    ((m2 - m1 * m1) / (m1 * m1)).max(0.0)
}

/// Number of whole sample steps that fit in `max_lag` seconds.
fn lag_steps(max_lag: f64, sample_rate: f64) -> usize {
    // Tolerate round-off so that e.g. 0.02 s at 25 kSa/s gives 500 steps.
    (max_lag * sample_rate * (1.0 + 1e-12)).floor() as usize
}

/// Temporal covariance coefficient b(j·Δt) = Ĉ(j)/Ĉ(0) for lags up to
/// `max_lag` seconds, with Ĉ(j) = (1/(N−j))·Σᵢ (Iᵢ − Ī)(I_{i+j} − Ī).
///
/// Lags are evaluated in parallel but each sum runs sequentially in index
/// order, so the output does not depend on the thread count. The ratio is
/// clamped to [−1, 1]; the 1/(N−j) divisor can otherwise push long lags
/// marginally past the Cauchy–Schwarz bound.
pub fn temporal_covariance(trace: &NormalizedTrace, max_lag: f64) -> Result<CovarianceCurve> {
    let n = trace.len();
    if n < MIN_COVARIANCE_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_COVARIANCE_SAMPLES,
            got: n,
        });
    }
    if !(max_lag.is_finite() && max_lag >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "max lag must be a non-negative number of seconds, got {max_lag}"
        )));
    }
    if max_lag >= trace.duration() {
        return Err(Error::InvalidArgument(format!(
            "max lag {max_lag} s must be shorter than the trace duration {} s",
            trace.duration()
        )));
    }
    let rate = trace.sample_rate();
    let steps = lag_steps(max_lag, rate).min(n - 1);

    let values = trace.values();
    let centre = trace::mean(values);
    let dev: Vec<f64> = values.iter().map(|&v| v - centre).collect();
    let lagged = |j: usize| -> f64 {
        let s: f64 = dev[..n - j].iter().zip(&dev[j..]).map(|(a, b)| a * b).sum();
        s / (n - j) as f64
    };

    let c0 = lagged(0);
    if c0 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    let mut coefficients: Vec<f64> = (0..=steps)
        .into_par_iter()
        .map(|j| (lagged(j) / c0).clamp(-1.0, 1.0))
        .collect();
    coefficients[0] = 1.0;
    let lags = (0..=steps).map(|j| j as f64 / rate).collect();
    Ok(CovarianceCurve { lags, coefficients })
}

/// First lag where the curve drops below `threshold`, linearly interpolated
/// between the bracketing grid points. When the curve never drops below the
/// threshold, the largest lag is returned and `saturated` is set.
pub fn coherence_time(curve: &CovarianceCurve, threshold: f64) -> Result<CoherenceTime> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "coherence threshold must lie in (0, 1), got {threshold}"
        )));
    }
    let c = &curve.coefficients;
    let t = &curve.lags;
    match c.iter().position(|&b| b < threshold) {
        Some(i) => {
            // c[0] = 1 > threshold, so i ≥ 1.
            let frac = (c[i - 1] - threshold) / (c[i - 1] - c[i]);
            Ok(CoherenceTime {
                seconds: t[i - 1] + frac * (t[i] - t[i - 1]),
                threshold,
                saturated: false,
            })
        }
        None => Ok(CoherenceTime {
            seconds: curve.max_lag(),
            threshold,
            saturated: true,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{normalize_trace, trace_moment};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn norm(xs: Vec<f64>, rate: f64) -> NormalizedTrace {
        normalize_trace(&SampleTrace::new(xs, rate).unwrap()).unwrap()
    }

    fn ar1(n: usize, rho: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let innov = (1.0 - rho * rho).sqrt();
        let mut z: f64 = StandardNormal.sample(&mut rng);
        (0..n)
            .map(|_| {
                let out = z;
                let e: f64 = StandardNormal.sample(&mut rng);
                z = rho * z + innov * e;
                // Shift to keep the trace positive without touching correlation.
                out + 10.0
            })
            .collect()
    }

    #[test]
    fn scint_examples() {
        assert_eq!(scintillation_index(&norm(vec![4.0; 10], 1.0)).unwrap(), 0.0);
        assert!((scintillation_index(&norm(vec![0.0, 2.0], 1.0)).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            scintillation_index(&norm(vec![1.0], 1.0)),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn scint_of_gamma_gamma_draws() {
        let p = crate::FadingParams::GammaGamma {
            alpha: 2.0,
            beta: 2.0,
        };
        let xs = crate::distributions::sample(&p, 1_000_000, 5).unwrap();
        let s = scintillation_index(&norm(xs, 1.0)).unwrap();
        assert!((s - 1.25).abs() < 0.03, "{s}");
    }

    #[test]
    fn alternating_trace_anticorrelates() {
        let xs: Vec<f64> = (0..64)
            .map(|i| if i % 2 == 0 { 1.0 } else { 3.0 })
            .collect();
        let c = temporal_covariance(&norm(xs, 1.0), 4.0).unwrap();
        assert_eq!(c.coefficients()[0], 1.0);
        assert!((c.coefficients()[1] + 1.0).abs() < 1e-12);
        assert!((c.coefficients()[2] - 1.0).abs() < 1e-12);
        assert_eq!(c.len(), 5);
    }

    #[test]
    fn ar1_covariance_decays_geometrically() {
        let t = norm(ar1(1_000_000, 0.9, 3), 1.0);
        let c = temporal_covariance(&t, 20.0).unwrap();
        for j in 0..=20 {
            let b = c.coefficients()[j];
            assert!((b - 0.9f64.powi(j as i32)).abs() < 0.02, "lag {j}: {b}");
        }
    }

    #[test]
    fn covariance_preconditions() {
        let t = norm((0..100).map(|i| i as f64).collect(), 100.0);
        assert!(temporal_covariance(&t, 1.0).is_err());
        assert!(temporal_covariance(&t, 0.5).is_ok());
        let short = norm((0..10).map(|i| i as f64).collect(), 1.0);
        assert!(matches!(
            temporal_covariance(&short, 2.0),
            Err(Error::TooFewSamples { .. })
        ));
        let flat = norm(vec![2.0; 32], 1.0);
        assert_eq!(temporal_covariance(&flat, 3.0), Err(Error::ZeroVariance));
    }

    #[test]
    fn lag_grid_matches_sample_rate() {
        let t = norm(ar1(2000, 0.5, 1), 25_000.0);
        let c = temporal_covariance(&t, 0.02).unwrap();
        assert_eq!(c.len(), 501);
        assert!((c.lags()[1] - 4e-5).abs() < 1e-18);
    }

    #[test]
    fn shuffling_changes_the_curve() {
        let xs = ar1(10_000, 0.95, 9);
        let mut shuffled = xs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(2));
        let a = temporal_covariance(&norm(xs, 1.0), 5.0).unwrap();
        let b = temporal_covariance(&norm(shuffled, 1.0), 5.0).unwrap();
        assert!(a.coefficients()[1] > 0.9);
        assert!(b.coefficients()[1].abs() < 0.1);
    }

    #[test]
    fn iid_coefficients_stay_within_noise_band() {
        let n = 4096;
        let bound = 4.0 / (n as f64).sqrt();
        let mut pass = 0;
        let seeds = 100;
        for seed in 0..seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..n)
                .map(|_| {
                    5.0 + {
                        let e: f64 = StandardNormal.sample(&mut rng);
                        e
                    }
                })
                .collect();
            let c = temporal_covariance(&norm(xs, 1.0), 10.0).unwrap();
            if c.coefficients()[1..].iter().all(|b| b.abs() <= bound) {
                pass += 1;
            }
        }
        assert!(pass >= 99, "{pass}/{seeds}");
    }

    #[test]
    fn coherence_interpolates() {
        let c = CovarianceCurve::new(vec![0.0, 1e-3, 2e-3], vec![1.0, 0.5, 0.1]).unwrap();
        let tc = coherence_time(&c, DEFAULT_COHERENCE_THRESHOLD).unwrap();
        let expected = 1e-3 + (0.5 - (-1.0f64).exp()) / 0.4 * 1e-3;
        assert!((tc.seconds - expected).abs() < 1e-15);
        assert!((tc.seconds - 1.330e-3).abs() < 1e-6);
        assert!(!tc.saturated);
    }

    #[test]
    fn coherence_saturates() {
        let c = CovarianceCurve::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.95, 0.9]).unwrap();
        let tc = coherence_time(&c, 0.5).unwrap();
        assert_eq!(tc.seconds, 2.0);
        assert!(tc.saturated);
        assert!(coherence_time(&c, 1.0).is_err());
        assert!(coherence_time(&c, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn scint_matches_second_moment(xs in prop::collection::vec(0.0f64..100.0, 2..500)) {
            prop_assume!(xs.iter().sum::<f64>() > 0.0);
            let t = norm(xs, 1.0);
            let s = scintillation_index(&t).unwrap();
            let m2 = trace_moment(&t, 2).unwrap();
            prop_assert!((s - (m2 - 1.0)).abs() < 1e-12);
        }

        #[test]
        fn scint_is_permutation_and_scale_invariant(
            xs in prop::collection::vec(0.0f64..100.0, 2..200),
            c in 0.01f64..100.0,
        ) {
            prop_assume!(xs.iter().sum::<f64>() > 0.0);
            let s = scintillation_index(&norm(xs.clone(), 1.0)).unwrap();
            let mut rev: Vec<f64> = xs.iter().rev().map(|v| v * c).collect();
            rev.rotate_left(1);
            let s2 = scintillation_index(&norm(rev, 1.0)).unwrap();
            prop_assert!((s - s2).abs() <= 1e-10 * (1.0 + s));
        }

        #[test]
        fn coherence_is_monotone_in_threshold(
            tail in prop::collection::vec(-1.0f64..1.0, 1..40),
            t1 in 0.01f64..0.99,
            t2 in 0.01f64..0.99,
        ) {
            let mut coef = vec![1.0];
            coef.extend(tail);
            let lags = (0..coef.len()).map(|i| i as f64 * 0.5).collect();
            let c = CovarianceCurve::new(lags, coef).unwrap();
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let a = coherence_time(&c, lo).unwrap().seconds;
            let b = coherence_time(&c, hi).unwrap().seconds;
            prop_assert!(b <= a + 1e-12);
        }
    }
}
