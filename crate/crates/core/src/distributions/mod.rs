//! The four fading laws for the unit-mean coefficient h̃:
//!
//! | family          | parameters        | E[h̃]         |
//! |-----------------|-------------------|---------------|
//! | `lognormal`     | σ²_X              | 1 (μ_X = −σ²_X) |
//! | `k`             | α                 | 1             |
//! | `gamma_gamma`   | α, β              | 1             |
//! | `exp_lognormal` | k, γ, μ, σ²       | kγ + (1−k)e^{μ+σ²/2} |
//!
//! K and Gamma-Gamma are written with unit-mean Gamma factors, so all four
//! families are directly comparable on normalized data. The two-lobe
//! exponential + log-normal mixture is unit-mean only when its parameters
//! satisfy the normalization constraint; see [`enforce_normalization`].

mod density;
mod sampling;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use density::ln_pdf_at_log;
pub use density::{cdf, ln_pdf, pdf, quantile, quantile_sf, sf, support_knots};
pub use sampling::{sample, sample_with};

/// Distribution family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "lognormal")]
    LogNormal,
    #[serde(rename = "k")]
    KDist,
    #[serde(rename = "gamma_gamma")]
    GammaGamma,
    #[serde(rename = "exp_lognormal")]
    ExpLogNormal,
}

impl Family {
    pub const ALL: [Family; 4] = [
        Family::LogNormal,
        Family::KDist,
        Family::GammaGamma,
        Family::ExpLogNormal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::LogNormal => "lognormal",
            Family::KDist => "k",
            Family::GammaGamma => "gamma_gamma",
            Family::ExpLogNormal => "exp_lognormal",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lognormal" | "log_normal" | "log-normal" => Ok(Family::LogNormal),
            "k" | "kdist" | "k_dist" => Ok(Family::KDist),
            "gamma_gamma" | "gammagamma" | "gamma-gamma" => Ok(Family::GammaGamma),
            "exp_lognormal" | "exp-lognormal" | "explognormal" => Ok(Family::ExpLogNormal),
            other => Err(Error::InvalidArgument(format!("unknown family '{other}'"))),
        }
    }
}

/// Parameters of one fading law.
///
/// Serialized as `{"family": <tag>, "params": {<named fields>}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamsRepr", into = "ParamsRepr")]
pub enum FadingParams {
    /// h̃ = exp(2X), X ~ N(−σ²_X, σ²_X).
    LogNormal { sigma2_x: f64 },
    /// Exponential with a Gamma(α)-distributed unit-mean conditional mean.
    KDist { alpha: f64 },
    /// Product of unit-mean Gamma(α) and Gamma(β) variates.
    GammaGamma { alpha: f64, beta: f64 },
    /// k·Exp(mean γ) + (1−k)·LogNormal(μ, σ²).
    ExpLogNormal {
        k: f64,
        gamma: f64,
        mu: f64,
        sigma2: f64,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", content = "params", deny_unknown_fields)]
enum ParamsRepr {
    #[serde(rename = "lognormal")]
    LogNormal {
        #[serde(rename = "sigma2_X")]
        sigma2_x: f64,
    },
    #[serde(rename = "k")]
    KDist { alpha: f64 },
    #[serde(rename = "gamma_gamma")]
    GammaGamma { alpha: f64, beta: f64 },
    #[serde(rename = "exp_lognormal")]
    ExpLogNormal {
        k: f64,
        gamma: f64,
        mu: f64,
        sigma2: f64,
    },
}

impl TryFrom<ParamsRepr> for FadingParams {
    type Error = Error;

    fn try_from(r: ParamsRepr) -> Result<Self> {
        let p = match r {
            ParamsRepr::LogNormal { sigma2_x } => FadingParams::LogNormal { sigma2_x },
            ParamsRepr::KDist { alpha } => FadingParams::KDist { alpha },
            ParamsRepr::GammaGamma { alpha, beta } => FadingParams::GammaGamma { alpha, beta },
            ParamsRepr::ExpLogNormal {
                k,
                gamma,
                mu,
                sigma2,
            } => FadingParams::ExpLogNormal {
                k,
                gamma,
                mu,
                sigma2,
            },
        };
        p.validate()?;
        Ok(p)
    }
}

impl From<FadingParams> for ParamsRepr {
    fn from(p: FadingParams) -> Self {
        match p {
            FadingParams::LogNormal { sigma2_x } => ParamsRepr::LogNormal { sigma2_x },
            FadingParams::KDist { alpha } => ParamsRepr::KDist { alpha },
            FadingParams::GammaGamma { alpha, beta } => ParamsRepr::GammaGamma { alpha, beta },
            FadingParams::ExpLogNormal {
                k,
                gamma,
                mu,
                sigma2,
            } => ParamsRepr::ExpLogNormal {
                k,
                gamma,
                mu,
                sigma2,
            },
        }
    }
}

fn positive(family: Family, name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams {
            family,
            reason: format!("{name} must be positive and finite, got {v}"),
        })
    }
}

impl FadingParams {
    pub fn family(&self) -> Family {
        match self {
            FadingParams::LogNormal { .. } => Family::LogNormal,
            FadingParams::KDist { .. } => Family::KDist,
            FadingParams::GammaGamma { .. } => Family::GammaGamma,
            FadingParams::ExpLogNormal { .. } => Family::ExpLogNormal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fam = self.family();
        match *self {
            FadingParams::LogNormal { sigma2_x } => positive(fam, "sigma2_X", sigma2_x),
            FadingParams::KDist { alpha } => positive(fam, "alpha", alpha),
            FadingParams::GammaGamma { alpha, beta } => {
                positive(fam, "alpha", alpha)?;
                positive(fam, "beta", beta)
            }
            FadingParams::ExpLogNormal {
                k,
                gamma,
                mu,
                sigma2,
            } => {
                if !(0.0..=1.0).contains(&k) {
                    return Err(Error::InvalidParams {
                        family: fam,
                        reason: format!("k must lie in [0, 1], got {k}"),
                    });
                }
                positive(fam, "gamma", gamma)?;
                positive(fam, "sigma2", sigma2)?;
                if !mu.is_finite() {
                    return Err(Error::InvalidParams {
                        family: fam,
                        reason: format!("mu must be finite, got {mu}"),
                    });
                }
                Ok(())
            }
        }
    }

    /// Parameter values in declaration order.
    pub fn values(&self) -> Vec<f64> {
        match *self {
            FadingParams::LogNormal { sigma2_x } => vec![sigma2_x],
            FadingParams::KDist { alpha } => vec![alpha],
            FadingParams::GammaGamma { alpha, beta } => vec![alpha, beta],
            FadingParams::ExpLogNormal {
                k,
                gamma,
                mu,
                sigma2,
            } => vec![k, gamma, mu, sigma2],
        }
    }
}

/// Closed-form scintillation index σ²_I = E[h̃²]/E[h̃]² − 1.
///
/// For the mixture this is computed from raw moments, so it coincides with
/// 2kγ² + (1−k)e^{2μ+2σ²} − 1 exactly when the mean is 1 and stays
/// meaningful when it is not.
pub fn scintillation_from_params(params: &FadingParams) -> Result<f64> {
    params.validate()?;
    Ok(match *params {
        FadingParams::LogNormal { sigma2_x } => (4.0 * sigma2_x).exp_m1(),
        FadingParams::KDist { alpha } => 1.0 + 2.0 / alpha,
        FadingParams::GammaGamma { alpha, beta } => 1.0 / alpha + 1.0 / beta + 1.0 / (alpha * beta),
        FadingParams::ExpLogNormal {
            k,
            gamma,
            mu,
            sigma2,
        } => {
            // Law of total variance, free of the E[h²] − E[h]² cancellation.
            let ln_mean = (mu + 0.5 * sigma2).exp();
            let ln_var = (2.0 * mu + sigma2).exp() * sigma2.exp_m1();
            let var =
                k * gamma * gamma + (1.0 - k) * ln_var + k * (1.0 - k) * (gamma - ln_mean).powi(2);
            let mean = k * gamma + (1.0 - k) * ln_mean;
            var / (mean * mean)
        }
    })
}

/// Scintillation index from the mixture's closed-form expression
/// 2kγ² + (1−k)e^{2μ+2σ²} − 1, which assumes E[h̃] = 1.
pub fn mixture_constrained_scint(k: f64, gamma: f64, mu: f64, sigma2: f64) -> f64 {
    2.0 * k * gamma * gamma + (1.0 - k) * (2.0 * mu + 2.0 * sigma2).exp() - 1.0
}

/// Invert σ²_I for the single-parameter families.
pub fn params_from_scint(family: Family, scint: f64) -> Result<FadingParams> {
    if !(scint.is_finite() && scint > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "scintillation index must be positive, got {scint}"
        )));
    }
    match family {
        Family::LogNormal => Ok(FadingParams::LogNormal {
            sigma2_x: 0.25 * scint.ln_1p(),
        }),
        Family::KDist if scint > 1.0 => Ok(FadingParams::KDist {
            alpha: 2.0 / (scint - 1.0),
        }),
        Family::KDist => Err(Error::OutOfSupport { family, scint }),
        Family::GammaGamma | Family::ExpLogNormal => Err(Error::UnderdeterminedFamily(family)),
    }
}

/// E[h̃ⁿ].
pub fn moment(params: &FadingParams, n: u32) -> Result<f64> {
    params.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("moment order must be >= 1".into()));
    }
    let nf = n as f64;
    // E[Gⁿ] for a unit-mean Gamma(a) variate: Π_{j<n} (a + j)/a.
    let gamma_moment = |a: f64| (0..n).map(|j| (a + j as f64) / a).product::<f64>();
    let value = match *params {
        FadingParams::LogNormal { sigma2_x } => (2.0 * nf * (nf - 1.0) * sigma2_x).exp(),
        FadingParams::KDist { alpha } => factorial(n) * gamma_moment(alpha),
        FadingParams::GammaGamma { alpha, beta } => gamma_moment(alpha) * gamma_moment(beta),
        FadingParams::ExpLogNormal {
            k,
            gamma,
            mu,
            sigma2,
        } => {
            k * gamma.powi(n as i32) * factorial(n)
                + (1.0 - k) * (nf * mu + 0.5 * nf * nf * sigma2).exp()
        }
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericOverflow(format!(
            "moment {n} of {} is not representable",
            params.family()
        )))
    }
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Adjust parameters so that E[h̃] = 1.
///
/// The mixture solves for μ with (k, γ, σ²) held fixed; a pure exponential
/// (k = 1) rescales γ to 1. The other families are unit-mean by
/// construction and are returned unchanged.
pub fn enforce_normalization(params: &FadingParams) -> Result<FadingParams> {
    params.validate()?;
    match *params {
        FadingParams::ExpLogNormal {
            k,
            gamma,
            mu,
            sigma2,
        } => {
            if k == 1.0 {
                return Ok(FadingParams::ExpLogNormal {
                    k,
                    gamma: 1.0,
                    mu,
                    sigma2,
                });
            }
            let rest = 1.0 - k * gamma;
            if rest <= 0.0 {
                return Err(Error::Infeasible(format!(
                    "k·γ = {} >= 1 leaves no mass for the log-normal lobe",
                    k * gamma
                )));
            }
            let mu = (rest / (1.0 - k)).ln() - 0.5 * sigma2;
            Ok(FadingParams::ExpLogNormal {
                k,
                gamma,
                mu,
                sigma2,
            })
        }
        other => Ok(other),
    }
}

#[cfg(test)]
mod tests;
