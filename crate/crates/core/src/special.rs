//! Special functions: ln Γ, the modified Bessel function of the second kind
//! K_ν, and the standard normal CDF family.
//!
//! K_ν is evaluated in log space so that the K-distribution and Gamma-Gamma
//! densities stay finite for large shape parameters. The kernel is Temme's
//! series for x ≤ 2 and Steed's continued fraction for x > 2, both at a
//! reduced order |μ| ≤ 1/2, followed by upward recurrence to ν (stable for
//! K). The recurrence carries a separate exponent so nothing overflows.

use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Outcome of a special-function evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecialFnResult {
    pub value: f64,
    pub converged: bool,
    pub terms_or_iterations: u32,
}

/// ln Γ(x) for x > 0.
///
/// Stirling series for x ≥ 10, upward shift below. Returns NaN for x ≤ 0.
pub fn log_gamma(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x.is_infinite() {
        return f64::INFINITY;
    }
    if x >= 10.0 {
        return stirling(x);
    }
    let mut prod = 1.0;
    let mut y = x;
    while y < 10.0 {
        prod *= y;
        y += 1.0;
    }
    stirling(y) - prod.ln()
}

fn stirling(x: f64) -> f64 {
    // Bernoulli terms B_{2k}/(2k(2k-1) x^{2k-1}), k = 1..8.
    const C: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 360.0,
        1.0 / 1260.0,
        -1.0 / 1680.0,
        1.0 / 1188.0,
        -691.0 / 360_360.0,
        1.0 / 156.0,
        -3617.0 / 122_400.0,
    ];
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    for c in C.iter().rev() {
        series = series * inv2 + c;
    }
    (x - 0.5) * x.ln() - x + LN_SQRT_2PI + series * inv
}

/// Γ(x) for x > 0; overflows to +∞ past x ≈ 171.6.
pub fn gamma(x: f64) -> f64 {
    log_gamma(x).exp()
}

/// Taylor coefficients of 1/Γ(z) = Σ c_k z^k, k = 1..26.
const RGAMMA: [f64; 26] = [
    1.0,
    0.577_215_664_901_532_9,
    -0.655_878_071_520_253_8,
    -0.042_002_635_034_095_2,
    0.166_538_611_382_291_5,
    -0.042_197_734_555_544_3,
    -0.009_621_971_527_877_0,
    0.007_218_943_246_663_0,
    -0.001_165_167_591_859_1,
    -0.000_215_241_674_114_9,
    0.000_128_050_282_388_2,
    -0.000_020_134_854_780_7,
    -0.000_001_250_493_482_1,
    0.000_001_133_027_232_0,
    -0.000_000_205_633_841_7,
    0.000_000_006_116_095_0,
    0.000_000_005_002_007_5,
    -0.000_000_001_181_274_6,
    0.000_000_000_104_342_7,
    0.000_000_000_007_782_3,
    -0.000_000_000_003_696_8,
    0.000_000_000_000_510_0,
    -0.000_000_000_000_020_6,
    -0.000_000_000_000_005_4,
    0.000_000_000_000_001_4,
    0.000_000_000_000_000_1,
];

/// Temme's auxiliary gammas for |μ| ≤ 1/2:
/// (γ₁, γ₂, 1/Γ(1+μ), 1/Γ(1−μ)) with
/// γ₁ = (1/Γ(1−μ) − 1/Γ(1+μ))/(2μ), γ₂ = (1/Γ(1−μ) + 1/Γ(1+μ))/2.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let mu2 = mu * mu;
    // 1/Γ(1+μ) = Σ c_k μ^{k-1}: odd k carry even powers, even k odd powers.
    let mut gam2 = 0.0;
    let mut gam1 = 0.0;
    for k in (0..RGAMMA.len()).rev() {
        // k is the zero-based index, so the power of μ is k.
        if k % 2 == 0 {
            gam2 = gam2 * mu2 + RGAMMA[k];
        } else {
            gam1 = gam1 * mu2 + RGAMMA[k];
        }
    }
    let gam1 = -gam1;
    (gam1, gam2, gam2 - mu * gam1, gam2 + mu * gam1)
}

const EPS: f64 = 1e-16;
const MAX_ITER: u32 = 100_000;

/// K_μ(x), K_{μ+1}(x) as mantissas times e^{scale}, |μ| ≤ 1/2.
struct ReducedPair {
    k_mu: f64,
    k_mu1: f64,
    ln_scale: f64,
    iterations: u32,
    converged: bool,
}

fn temme_series(mu: f64, x: f64) -> ReducedPair {
    let x2 = 0.5 * x;
    let pimu = PI * mu;
    let fact = if pimu.abs() < EPS {
        1.0
    } else {
        pimu / pimu.sin()
    };
    let d = -x2.ln();
    let e = mu * d;
    let fact2 = if e.abs() < EPS { 1.0 } else { e.sinh() / e };
    let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
    let mut ff = fact * (gam1 * e.cosh() + gam2 * fact2 * d);
    let mut sum = ff;
    let e = e.exp();
    let mut p = 0.5 * e / gampl;
    let mut q = 0.5 / (e * gammi);
    let mut c = 1.0;
    let d = x2 * x2;
    let mut sum1 = p;
    let mu2 = mu * mu;
    let mut converged = false;
    let mut i = 1u32;
    while i < MAX_ITER {
        let fi = i as f64;
        ff = (fi * ff + p + q) / (fi * fi - mu2);
        c *= d / fi;
        p /= fi - mu;
        q /= fi + mu;
        let del = c * ff;
        sum += del;
        let del1 = c * p - fi * del;
        sum1 += del1;
        if del.abs() < sum.abs() * EPS {
            converged = true;
            break;
        }
        i += 1;
    }
    ReducedPair {
        k_mu: sum,
        k_mu1: sum1 * 2.0 / x,
        ln_scale: 0.0,
        iterations: i,
        converged,
    }
}

fn steed_fraction(mu: f64, x: f64) -> ReducedPair {
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut h = d;
    let mut delh = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let a1 = 0.25 - mu * mu;
    let mut q = a1;
    let mut c = a1;
    let mut a = -a1;
    let mut s = 1.0 + q * delh;
    let mut converged = false;
    let mut i = 2u32;
    while i < MAX_ITER {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < EPS {
            converged = true;
            break;
        }
        i += 1;
    }
    let h = a1 * h;
    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
    ReducedPair {
        k_mu,
        k_mu1,
        ln_scale: -x,
        iterations: i,
        converged,
    }
}

/// ln K_ν(x) for x > 0 together with iteration count and convergence flag.
fn ln_bessel_k_detail(nu: f64, x: f64) -> (f64, u32, bool) {
    let nu = nu.abs();
    if !(x > 0.0) || !nu.is_finite() || x.is_nan() {
        return (f64::NAN, 0, false);
    }
    if x.is_infinite() {
        return (f64::NEG_INFINITY, 0, true);
    }
    if x < TINY_ARG {
        return (ln_bessel_k_tiny(nu, (0.5 * x).ln()), 0, true);
    }
    let nl = (nu + 0.5).floor();
    let mu = nu - nl;
    let pair = if x <= 2.0 {
        temme_series(mu, x)
    } else {
        steed_fraction(mu, x)
    };
    // Recur on the ratio r = K_{i+1}/K_i and accumulate ln K_i.
    let xi2 = 2.0 / x;
    let mut ln_k = pair.k_mu.ln() + pair.ln_scale;
    let mut ratio = pair.k_mu1 / pair.k_mu;
    let steps = nl as u32;
    for i in 1..=steps {
        ln_k += ratio.ln();
        ratio = (mu + i as f64) * xi2 + 1.0 / ratio;
    }
    (ln_k, pair.iterations + steps, pair.converged)
}

/// Below this argument the reduced-order pair overflows; the small-argument
/// asymptote is exact to double precision there.
const TINY_ARG: f64 = 1e-150;

/// Leading small-argument behaviour, used only where x is too small for the
/// series to be evaluated in double precision.
fn ln_bessel_k_tiny(nu: f64, ln_half_x: f64) -> f64 {
    if nu < 1e-12 {
        return (-ln_half_x - EULER_GAMMA).ln();
    }
    let lead = log_gamma(nu) - LN_2 - nu * ln_half_x;
    if nu >= 1.0 {
        return lead;
    }
    // K_ν ≈ ½Γ(ν)(x/2)^{-ν} + ½Γ(-ν)(x/2)^{ν}, Γ(-ν) < 0 on (0, 1).
    let ratio_ln = log_gamma(1.0 - nu) - nu.ln() - log_gamma(nu) + 2.0 * nu * ln_half_x;
    lead + (-ratio_ln.exp()).ln_1p()
}

/// ln K_ν(x). Total for x > 0; +∞/−∞ never occur for finite, positive x
/// within double range.
pub fn ln_bessel_k(nu: f64, x: f64) -> f64 {
    ln_bessel_k_detail(nu, x).0
}

/// ln K_ν(e^{ln_x}), usable when the argument itself underflows.
pub fn ln_bessel_k_ln_arg(nu: f64, ln_x: f64) -> f64 {
    if ln_x < TINY_ARG.ln() {
        ln_bessel_k_tiny(nu.abs(), ln_x - LN_2)
    } else {
        ln_bessel_k(nu, ln_x.exp())
    }
}

/// Digamma ψ(x) for x > 0.
pub fn digamma(x: f64) -> f64 {
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc -= 1.0 / y;
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    let tail = 1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0);
    acc + y.ln()
        - 0.5 / y
        - inv2
            * (1.0 / 12.0
                - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 * tail))))
}

/// Trigamma ψ'(x) for x > 0.
pub fn trigamma(x: f64) -> f64 {
    let mut acc = 0.0;
    let mut y = x;
    while y < 10.0 {
        acc += 1.0 / (y * y);
        y += 1.0;
    }
    let inv = 1.0 / y;
    let inv2 = inv * inv;
    let tail = 5.0 / 66.0 - inv2 * (691.0 / 2730.0 - inv2 * 7.0 / 6.0);
    acc + inv
        + 0.5 * inv2
        + inv
            * inv2
            * (1.0 / 6.0
                - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 * (1.0 / 30.0 - inv2 * tail))))
}

/// Exponentially scaled e^x·K_ν(x).
pub fn bessel_k_scaled(nu: f64, x: f64) -> f64 {
    (ln_bessel_k(nu, x) + x).exp()
}

/// Largest |ν| for which accuracy is guaranteed.
pub const BESSEL_K_MAX_ORDER: f64 = 100.0;
/// Argument envelope (exclusive) for which accuracy is guaranteed.
pub const BESSEL_K_MIN_ARG: f64 = 1e-6;
pub const BESSEL_K_MAX_ARG: f64 = 700.0;

/// K_ν(x), the modified Bessel function of the second kind.
///
/// `converged` is false outside ν ∈ [−100, 100], x ∈ (10⁻⁶, 700), when an
/// inner iteration fails, or when the value is not representable.
pub fn bessel_k(nu: f64, x: f64) -> SpecialFnResult {
    let (ln_v, iters, ok) = ln_bessel_k_detail(nu, x);
    let value = ln_v.exp();
    let in_envelope =
        nu.abs() <= BESSEL_K_MAX_ORDER && x > BESSEL_K_MIN_ARG && x < BESSEL_K_MAX_ARG;
    SpecialFnResult {
        value,
        converged: ok && in_envelope && value.is_finite() && ln_v.is_finite(),
        terms_or_iterations: iters,
    }
}

/// Standard normal CDF Φ(z).
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / std::f64::consts::SQRT_2)
}

/// Standard normal survival 1 − Φ(z), accurate in the upper tail.
pub fn norm_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Standard normal density φ(z).
pub fn norm_pdf(z: f64) -> f64 {
    (-0.5 * z * z - LN_SQRT_2PI).exp()
}

/// Φ⁻¹(p) for p ∈ (0, 1).
pub fn norm_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * p)
}

/// z with 1 − Φ(z) = q, accurate for small q.
pub fn norm_quantile_sf(q: f64) -> f64 {
    std::f64::consts::SQRT_2 * statrs::function::erf::erfc_inv(2.0 * q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_gamma_known_values() {
        assert!(log_gamma(1.0).abs() < 1e-14);
        assert!(log_gamma(2.0).abs() < 1e-14);
        assert!((log_gamma(0.5) - 0.5 * PI.ln()).abs() < 1e-14);
        assert!(((log_gamma(7.3) - log_gamma(6.3)) - 6.3f64.ln()).abs() < 1e-12);
        // 10! = 3628800
        assert!((log_gamma(11.0) - 3_628_800f64.ln()).abs() < 1e-13);
        assert!(log_gamma(0.0).is_nan());
        assert!(log_gamma(-1.0).is_nan());
        // Γ(x) ~ 1/x near zero.
        assert!((log_gamma(1e-10) - (1e10f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn temme_gammas_match_reciprocal_gamma() {
        for i in 0..=40 {
            let mu = -0.5 + i as f64 / 40.0;
            let (_, _, gampl, gammi) = temme_gammas(mu);
            assert!(
                (gampl - (-log_gamma(1.0 + mu)).exp()).abs() < 1e-14,
                "mu={mu}"
            );
            assert!(
                (gammi - (-log_gamma(1.0 - mu)).exp()).abs() < 1e-14,
                "mu={mu}"
            );
        }
        let (g1, g2, _, _) = temme_gammas(0.0);
        assert!((g1 + EULER_GAMMA).abs() < 1e-15);
        assert_eq!(g2, 1.0);
    }

    #[test]
    fn half_order_closed_form() {
        for &x in &[1e-5, 0.01, 0.5, 1.0, 1.999, 2.0, 2.001, 5.0, 30.0, 400.0] {
            let exact = (PI / (2.0 * x)).sqrt() * (-x).exp();
            let got = bessel_k(0.5, x).value;
            assert!(
                ((got - exact) / exact).abs() < 1e-13,
                "x={x}: {got} vs {exact}"
            );
        }
        assert!((bessel_k(0.5, 1.0).value - 0.461_068_504_447_894).abs() < 1e-14);
    }

    #[test]
    fn symmetric_in_order() {
        assert_eq!(bessel_k(3.7, 5.0), bessel_k(-3.7, 5.0));
    }

    #[test]
    fn envelope_flags() {
        assert!(bessel_k(1.0, 1.0).converged);
        assert!(!bessel_k(1.0, 1e-7).converged);
        assert!(!bessel_k(101.0, 1.0).converged);
        assert!(!bessel_k(1.0, 750.0).converged);
        // Inside the envelope but not representable.
        assert!(!bessel_k(100.0, 2e-6).converged);
        assert!(ln_bessel_k(100.0, 2e-6).is_finite());
    }

    #[test]
    fn tiny_argument_branch_is_continuous() {
        for &nu in &[0.0, 0.3, 1.0, 2.5, 40.0] {
            let a = ln_bessel_k(nu, TINY_ARG * (1.0 + 1e-9));
            let b = ln_bessel_k(nu, TINY_ARG * (1.0 - 1e-9));
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "nu={nu}: {a} {b}");
        }
    }

    #[test]
    fn polygamma_values() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-14);
        assert!((digamma(0.5) + EULER_GAMMA + 2.0 * LN_2).abs() < 1e-14);
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-13);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn ln_arg_form_matches_direct() {
        for &(nu, x) in &[(0.0, 1e-3), (2.5, 3.0), (78.0, 25.0)] {
            assert!((ln_bessel_k_ln_arg(nu, f64::ln(x)) - ln_bessel_k(nu, x)).abs() < 1e-12);
        }
        assert!(ln_bessel_k_ln_arg(1.5, -2000.0).is_finite());
    }

    #[test]
    fn normal_helpers() {
        assert!((norm_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-14);
        assert!((norm_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-13);
        assert!((norm_quantile_sf(1e-12) - 7.034_483_825_301_132).abs() < 1e-9);
        assert!((norm_sf(8.0) - 6.220_960_574_271_785e-16).abs() < 1e-28);
    }
}
