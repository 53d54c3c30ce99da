use std::f64::consts::{LN_2, PI};

use super::FadingParams;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_pieces, Tolerance};
use crate::special::{
    digamma, ln_bessel_k_ln_arg, log_gamma, norm_cdf, norm_quantile, norm_quantile_sf, norm_sf,
    trigamma,
};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// ln f(h) evaluated at h = e^u, so arbitrarily small h stay representable.
pub(crate) fn ln_pdf_at_log(params: &FadingParams, u: f64) -> f64 {
    match *params {
        FadingParams::LogNormal { sigma2_x } => {
            let d = u + 2.0 * sigma2_x;
            -LN_2 - u - 0.5 * (2.0 * PI * sigma2_x).ln() - d * d / (8.0 * sigma2_x)
        }
        FadingParams::KDist { alpha } => {
            let ln_ah = alpha.ln() + u;
            let ln_x = LN_2 + 0.5 * ln_ah;
            LN_2 + alpha.ln() - log_gamma(alpha)
                + 0.5 * (alpha - 1.0) * ln_ah
                + ln_bessel_k_ln_arg(alpha - 1.0, ln_x)
        }
        FadingParams::GammaGamma { alpha, beta } => {
            let ln_ab = alpha.ln() + beta.ln();
            let ln_x = LN_2 + 0.5 * (ln_ab + u);
            LN_2 + 0.5 * (alpha + beta) * ln_ab - log_gamma(alpha) - log_gamma(beta)
                + (0.5 * (alpha + beta) - 1.0) * u
                + ln_bessel_k_ln_arg(alpha - beta, ln_x)
        }
        FadingParams::ExpLogNormal {
            k,
            gamma,
            mu,
            sigma2,
        } => {
            let exp_lobe = if k > 0.0 {
                k.ln() - gamma.ln() - u.exp() / gamma
            } else {
                f64::NEG_INFINITY
            };
            let ln_lobe = if k < 1.0 {
                let d = u - mu;
                (1.0 - k).ln() - u - 0.5 * (2.0 * PI * sigma2).ln() - d * d / (2.0 * sigma2)
            } else {
                f64::NEG_INFINITY
            };
            log_add_exp(exp_lobe, ln_lobe)
        }
    }
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let hi = a.max(b);
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + ((a - hi).exp() + (b - hi).exp()).ln()
}

fn check_h(h: f64) -> Result<()> {
    if h.is_nan() || h < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "h must be non-negative, got {h}"
        )));
    }
    Ok(())
}

/// ln f(h); −∞ where the density vanishes.
pub fn ln_pdf(params: &FadingParams, h: f64) -> Result<f64> {
    params.validate()?;
    check_h(h)?;
    if h == 0.0 {
        return Ok(match *params {
            FadingParams::ExpLogNormal { k, gamma, .. } if k > 0.0 => (k / gamma).ln(),
            _ => f64::NEG_INFINITY,
        });
    }
    if h.is_infinite() {
        return Ok(f64::NEG_INFINITY);
    }
    let v = ln_pdf_at_log(params, h.ln());
    if v.is_nan() {
        return Err(Error::NumericOverflow(format!(
            "{} density is not evaluable at h = {h}",
            params.family()
        )));
    }
    Ok(v)
}

/// Probability density f(h) of the fading coefficient.
///
/// At h = 0 the right limit of the exponential lobe (k/γ) is returned for the
/// mixture and 0 for the other families.
pub fn pdf(params: &FadingParams, h: f64) -> Result<f64> {
    let v = ln_pdf(params, h)?.exp();
    if v.is_infinite() {
        return Err(Error::NumericOverflow(format!(
            "{} density overflows at h = {h}",
            params.family()
        )));
    }
    Ok(v)
}

/// Knots in u = ln h covering the bulk of the distribution, used to split
/// quadrature ranges so narrow lobes are never stepped over.
pub fn support_knots(params: &FadingParams) -> Vec<f64> {
    let mut lobes: Vec<(f64, f64)> = Vec::with_capacity(2);
    match *params {
        FadingParams::LogNormal { sigma2_x } => {
            lobes.push((-2.0 * sigma2_x, 2.0 * sigma2_x.sqrt()))
        }
        FadingParams::KDist { alpha } => {
            // ln h = ln E + ln G with E ~ Exp(1), G ~ Gamma(α, 1/α).
            let center = -EULER_GAMMA + digamma(alpha) - alpha.ln();
            let sd = (PI * PI / 6.0 + trigamma(alpha)).sqrt();
            lobes.push((center, sd));
        }
        FadingParams::GammaGamma { alpha, beta } => {
            let center = digamma(alpha) - alpha.ln() + digamma(beta) - beta.ln();
            let sd = (trigamma(alpha) + trigamma(beta)).sqrt();
            lobes.push((center, sd));
        }
        FadingParams::ExpLogNormal {
            k,
            gamma,
            mu,
            sigma2,
        } => {
            if k > 0.0 {
                lobes.push((gamma.ln() - EULER_GAMMA, PI / 6f64.sqrt()));
            }
            if k < 1.0 {
                lobes.push((mu, sigma2.sqrt()));
            }
        }
    }
    let mut knots: Vec<f64> = lobes
        .iter()
        .flat_map(|&(c, s)| (-12..=12).map(move |j| c + 0.75 * j as f64 * s))
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    knots
}

const CDF_TOL: Tolerance = Tolerance {
    abs: 1e-30,
    rel: 1e-12,
    max_intervals: 4000,
};

/// ∫ f over (−∞, ln h] (lower = true) or [ln h, ∞) in the log domain.
fn log_domain_mass(params: &FadingParams, h: f64, lower: bool) -> Result<f64> {
    let u0 = h.ln();
    let knots = support_knots(params);
    let integrand = |u: f64| (u + ln_pdf_at_log(params, u)).exp();
    let r = if lower {
        let mut ks: Vec<f64> = knots.into_iter().filter(|&k| k < u0).collect();
        ks.push(u0);
        integrate_pieces(integrand, &ks, true, false, CDF_TOL)
    } else {
        let mut ks = vec![u0];
        ks.extend(knots.into_iter().filter(|&k| k > u0));
        integrate_pieces(integrand, &ks, false, true, CDF_TOL)
    };
    match r {
        Ok(i) if i.abs_error <= 1e-10 => Ok(i.value.clamp(0.0, 1.0)),
        Ok(i) => Err(Error::QuadratureFailure {
            estimate: i.value,
            error: i.abs_error,
        }),
        Err(Error::QuadratureFailure { estimate, error }) if error <= 1e-10 => {
            Ok(estimate.clamp(0.0, 1.0))
        }
        Err(e) => Err(e),
    }
}

/// Survival of the K law in closed form:
/// P(h̃ > h) = 2(αh)^{α/2} K_α(2√(αh)) / Γ(α).
fn k_survival(alpha: f64, h: f64) -> f64 {
    let ln_ah = alpha.ln() + h.ln();
    let ln_x = LN_2 + 0.5 * ln_ah;
    (LN_2 + 0.5 * alpha * ln_ah + ln_bessel_k_ln_arg(alpha, ln_x) - log_gamma(alpha))
        .exp()
        .min(1.0)
}

/// P(h̃ ≤ h).
pub fn cdf(params: &FadingParams, h: f64) -> Result<f64> {
    params.validate()?;
    check_h(h)?;
    if h == 0.0 {
        return Ok(0.0);
    }
    if h.is_infinite() {
        return Ok(1.0);
    }
    match *params {
        FadingParams::LogNormal { sigma2_x } => Ok(norm_cdf(
            (h.ln() + 2.0 * sigma2_x) / (2.0 * sigma2_x.sqrt()),
        )),
        FadingParams::ExpLogNormal {
            k,
            gamma,
            mu,
            sigma2,
        } => Ok(k * (-(-h / gamma).exp_m1()) + (1.0 - k) * norm_cdf((h.ln() - mu) / sigma2.sqrt())),
        FadingParams::KDist { alpha } => {
            let s = k_survival(alpha, h);
            if s < 0.5 {
                Ok(1.0 - s)
            } else {
                log_domain_mass(params, h, true)
            }
        }
        FadingParams::GammaGamma { .. } => log_domain_mass(params, h, true),
    }
}

/// P(h̃ > h), accurate in the upper tail.
pub fn sf(params: &FadingParams, h: f64) -> Result<f64> {
    params.validate()?;
    check_h(h)?;
    if h == 0.0 {
        return Ok(1.0);
    }
    if h.is_infinite() {
        return Ok(0.0);
    }
    match *params {
        FadingParams::LogNormal { sigma2_x } => {
            Ok(norm_sf((h.ln() + 2.0 * sigma2_x) / (2.0 * sigma2_x.sqrt())))
        }
        FadingParams::ExpLogNormal {
            k,
            gamma,
            mu,
            sigma2,
        } => Ok(k * (-h / gamma).exp() + (1.0 - k) * norm_sf((h.ln() - mu) / sigma2.sqrt())),
        FadingParams::KDist { alpha } => Ok(k_survival(alpha, h)),
        FadingParams::GammaGamma { .. } => log_domain_mass(params, h, false),
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "probability must lie in (0, 1), got {p}"
        )))
    }
}

/// Smallest h with cdf(h) = p.
pub fn quantile(params: &FadingParams, p: f64) -> Result<f64> {
    params.validate()?;
    check_p(p)?;
    if let Some(h) = closed_form_quantile(params, p, false) {
        return Ok(h);
    }
    if p > 0.5 {
        solve_tail(params, 1.0 - p, true)
    } else {
        solve_tail(params, p, false)
    }
}

/// h with sf(h) = q; the upper-tail counterpart of [`quantile`].
pub fn quantile_sf(params: &FadingParams, q: f64) -> Result<f64> {
    params.validate()?;
    check_p(q)?;
    if let Some(h) = closed_form_quantile(params, q, true) {
        return Ok(h);
    }
    if q > 0.5 {
        solve_tail(params, 1.0 - q, false)
    } else {
        solve_tail(params, q, true)
    }
}

fn closed_form_quantile(params: &FadingParams, prob: f64, upper: bool) -> Option<f64> {
    let z = if upper {
        norm_quantile_sf(prob)
    } else {
        norm_quantile(prob)
    };
    match *params {
        FadingParams::LogNormal { sigma2_x } => {
            Some((-2.0 * sigma2_x + 2.0 * sigma2_x.sqrt() * z).exp())
        }
        FadingParams::ExpLogNormal { k: 1.0, gamma, .. } => Some(if upper {
            -gamma * prob.ln()
        } else {
            -gamma * (-prob).ln_1p()
        }),
        FadingParams::ExpLogNormal {
            k: 0.0, mu, sigma2, ..
        } => Some((mu + sigma2.sqrt() * z).exp()),
        _ => None,
    }
}

/// Solve cdf(h) = target (upper = false) or sf(h) = target (upper = true)
/// by safeguarded Newton iteration in u = ln h.
fn solve_tail(params: &FadingParams, target: f64, upper: bool) -> Result<f64> {
    // g(u) is increasing in u in both cases.
    let g = |u: f64| -> Result<f64> {
        let h = u.exp();
        Ok(if upper {
            target - sf(params, h)?
        } else {
            cdf(params, h)? - target
        })
    };
    let slope = |u: f64| (u + ln_pdf_at_log(params, u)).exp();

    let knots = support_knots(params);
    let mut u = knots[knots.len() / 2];
    let mut gu = g(u)?;
    let (mut lo, mut hi);
    let mut step = 1.0;
    if gu < 0.0 {
        lo = u;
        loop {
            let cand = lo + step;
            if cand > 709.0 {
                return Err(Error::BracketFailure(target));
            }
            let gc = g(cand)?;
            if gc >= 0.0 {
                hi = cand;
                break;
            }
            lo = cand;
            step *= 2.0;
        }
    } else {
        hi = u;
        loop {
            let cand = hi - step;
            if cand < -745.0 {
                return Err(Error::BracketFailure(target));
            }
            let gc = g(cand)?;
            if gc <= 0.0 {
                lo = cand;
                break;
            }
            hi = cand;
            step *= 2.0;
        }
    }

    u = 0.5 * (lo + hi);
    gu = g(u)?;
    for _ in 0..200 {
        if gu == 0.0 {
            break;
        }
        if gu < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let d = slope(u);
        let newton = if d > 0.0 { u - gu / d } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let converged =
            (next - u).abs() <= 1e-14 * (1.0 + u.abs()) || hi - lo <= 1e-15 * (1.0 + u.abs());
        u = next;
        gu = g(u)?;
        if converged || gu.abs() <= 1e-15 * target {
            break;
        }
    }
    Ok(u.exp())
}
