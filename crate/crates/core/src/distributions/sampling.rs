use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};

use super::FadingParams;
use crate::error::{Error, Result};

/// `n` i.i.d. draws, reproducible from `seed`.
///
/// Each family is drawn from its generative representation:
/// log-normal as exp(2X); K as an exponential whose mean is a unit-mean
/// Gamma(α) variate; Gamma-Gamma as a product of unit-mean Gamma(α) and
/// Gamma(β) variates; the mixture by a Bernoulli(k) lobe choice.
pub fn sample(params: &FadingParams, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_with(params, n, &mut rng)
}

/// [`sample`] driven by a caller-supplied generator.
pub fn sample_with<R: Rng + ?Sized>(
    params: &FadingParams,
    n: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    params.validate()?;
    let unit_gamma = |shape: f64| {
        Gamma::new(shape, 1.0 / shape).map_err(|e| Error::InvalidParams {
            family: params.family(),
            reason: e.to_string(),
        })
    };
    let out = match *params {
        FadingParams::LogNormal { sigma2_x } => {
            let sd = sigma2_x.sqrt();
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    (2.0 * (-sigma2_x + sd * z)).exp()
                })
                .collect()
        }
        FadingParams::KDist { alpha } => {
            let g = unit_gamma(alpha)?;
            (0..n)
                .map(|_| {
                    let e: f64 = Exp1.sample(rng);
                    e * g.sample(rng)
                })
                .collect()
        }
        FadingParams::GammaGamma { alpha, beta } => {
            let ga = unit_gamma(alpha)?;
            let gb = unit_gamma(beta)?;
            (0..n).map(|_| ga.sample(rng) * gb.sample(rng)).collect()
        }
        FadingParams::ExpLogNormal {
            k,
            gamma,
            mu,
            sigma2,
        } => {
            let sd = sigma2.sqrt();
            (0..n)
                .map(|_| {
                    if rng.random::<f64>() < k {
                        let e: f64 = Exp1.sample(rng);
                        gamma * e
                    } else {
                        let z: f64 = StandardNormal.sample(rng);
                        (mu + sd * z).exp()
                    }
                })
                .collect()
        }
    };
    Ok(out)
}
